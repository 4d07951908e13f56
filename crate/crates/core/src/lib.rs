//! Discrete and continuum marginals of the α-stable graph.
//!
//! The crate enumerates the finite marginal laws of the stable graph exactly,
//! grows them with Marchal's algorithm, cross-checks them against the
//! configuration model and the depth-first bijection, and samples finite
//! metric approximations of the continuum object.

pub mod config_model;
pub mod continuum;
pub mod depth_first;
pub mod distributions;
pub mod error;
pub mod marchal;
pub mod multigraph;
pub mod number;
pub mod rng;
pub mod stats;
pub mod urns;
pub mod verify;
pub mod weights_enum;

pub use error::{Error, Result};
pub use multigraph::{CanonicalCode, Multigraph, Vertex};
pub use number::{Alpha, Number};
pub use rng::RandomStream;
pub use weights_enum::{ExactDistribution, WeightSeq};
