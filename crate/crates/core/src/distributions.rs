//! Beta, Dirichlet, Poisson-Dirichlet and generalized Mittag-Leffler laws:
//! samplers, closed-form moments, and the joint marginal laws of the stable tree.

use std::f64::consts::PI;

use rand_distr::{Distribution, Gamma};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::urns::crp_table_count;

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {x} must be positive")))
    }
}

/// ln of a Gamma(shape, 1) variate; stays finite for very small shapes.
pub fn sample_ln_gamma(shape: f64, rng: &mut RandomStream) -> Result<f64> {
    check_positive("gamma shape", shape)?;
    if shape >= 1.0 {
        let g = Gamma::new(shape, 1.0).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Ok(g.sample(rng).ln())
    } else {
        let g = Gamma::new(shape + 1.0, 1.0).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Ok(g.sample(rng).ln() + rng.open_uniform().ln() / shape)
    }
}

pub fn sample_gamma(shape: f64, rng: &mut RandomStream) -> Result<f64> {
    sample_ln_gamma(shape, rng).map(f64::exp)
}

/// Beta(a, b).
pub fn sample_beta(a: f64, b: f64, rng: &mut RandomStream) -> Result<f64> {
    let x = sample_ln_gamma(a, rng)?;
    let y = sample_ln_gamma(b, rng)?;
    Ok(1.0 / (1.0 + (y - x).exp()))
}

/// Dir(a_1, …, a_n) via normalized Gamma variates computed in log space.
pub fn sample_dirichlet(params: &[f64], rng: &mut RandomStream) -> Result<Vec<f64>> {
    if params.is_empty() {
        return Err(Error::InvalidParameter("empty Dirichlet parameter".into()));
    }
    let logs = params.iter().map(|&a| sample_ln_gamma(a, rng)).collect::<Result<Vec<f64>>>()?;
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / z).collect())
}

/// E[∏ X_i^{k_i}] for X ~ Dir(a).
pub fn dirichlet_moment(params: &[f64], powers: &[f64]) -> Result<f64> {
    if params.len() != powers.len() {
        return Err(Error::InvalidParameter("parameter and power lengths differ".into()));
    }
    for &a in params {
        check_positive("Dirichlet parameter", a)?;
    }
    if powers.iter().any(|&k| k < 0.0) {
        return Err(Error::InvalidParameter("negative power".into()));
    }
    let sa: f64 = params.iter().sum();
    let sk: f64 = powers.iter().sum();
    let mut l = ln_gamma(sa) - ln_gamma(sa + sk);
    for (&a, &k) in params.iter().zip(powers) {
        l += ln_gamma(a + k) - ln_gamma(a);
    }
    Ok(l.exp())
}

/// E[B^p (1 − B)^q] for B ~ Beta(a, b).
pub fn beta_moment(a: f64, b: f64, p: f64, q: f64) -> Result<f64> {
    dirichlet_moment(&[a, b], &[p, q])
}

/// Draws X ~ Dir(a), then an index I with P(I = i | X) = X_i.
/// Marginally P(I = i) = a_i / Σa and X | I = i ~ Dir(a + e_i).
pub fn size_biased_split(params: &[f64], rng: &mut RandomStream) -> Result<(usize, Vec<f64>)> {
    let x = sample_dirichlet(params, rng)?;
    let mut u = rng.uniform();
    for (i, &xi) in x.iter().enumerate() {
        if u < xi {
            return Ok((i, x));
        }
        u -= xi;
    }
    Ok((x.len() - 1, x))
}

/// Parameters of the generalized Mittag-Leffler law ML(β, θ).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MLParams {
    pub beta: f64,
    pub theta: f64,
}

impl MLParams {
    pub fn new(beta: f64, theta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) || !(theta > -beta) || !theta.is_finite() {
            return Err(Error::InvalidParameter(format!("ML({beta}, {theta}) outside beta in (0,1), theta > -beta")));
        }
        Ok(Self { beta, theta })
    }
}

/// Available samplers for ML(β, θ).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum MlMethod {
    /// K(n)/n^β from a Chinese restaurant process run for `steps` customers.
    Crp { steps: u64 },
    /// σ_β^{−β} from a positive stable variate; θ = 0 only.
    StableExact,
    /// Exact draw via the polynomially tilted stable representation.
    Tilted,
}

impl Default for MlMethod {
    fn default() -> Self {
        MlMethod::Tilted
    }
}

/// ln A(u) where σ_β = (A(U)/E)^{(1−β)/β} is positive β-stable with
/// Laplace transform exp(−λ^β).
fn ln_kanter(beta: f64, u: f64) -> f64 {
    let s1 = (beta * PI * u).sin().ln();
    let s2 = ((1.0 - beta) * PI * u).sin().ln();
    let s3 = (PI * u).sin().ln();
    (beta * s1 + (1.0 - beta) * s2 - s3) / (1.0 - beta)
}

fn ln_kanter_at_zero(beta: f64) -> f64 {
    (beta * beta.ln() + (1.0 - beta) * (1.0 - beta).ln()) / (1.0 - beta)
}

/// Positive β-stable variate with E[exp(−λσ)] = exp(−λ^β).
pub fn sample_positive_stable(beta: f64, rng: &mut RandomStream) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter(format!("stable index {beta} not in (0,1)")));
    }
    let u = rng.open_uniform();
    let e = rng.exponential();
    Ok(((ln_kanter(beta, u) - e.ln()) * (1.0 - beta) / beta).exp())
}

/// ML(β, θ) for θ ≥ 0 by tilting the stable representation with M^{θ/β}:
/// M = (G / A(U'))^{1−β}, G ~ Gamma(1 + c), U' ∝ A(u)^{−c}, c = θ(1−β)/β.
fn sample_ml_tilted_nonneg(beta: f64, theta: f64, rng: &mut RandomStream) -> Result<f64> {
    let c = theta * (1.0 - beta) / beta;
    let la0 = ln_kanter_at_zero(beta);
    let u = loop {
        let u = rng.open_uniform();
        if c == 0.0 {
            break u;
        }
        let log_acc = c * (la0 - ln_kanter(beta, u));
        if rng.open_uniform().ln() < log_acc {
            break u;
        }
    };
    let lg = sample_ln_gamma(1.0 + c, rng)?;
    Ok(((lg - ln_kanter(beta, u)) * (1.0 - beta)).exp())
}

/// Draws ML(β, θ) with the requested method.
pub fn sample_ml(p: MLParams, rng: &mut RandomStream, method: MlMethod) -> Result<f64> {
    let MLParams { beta, theta } = p;
    match method {
        MlMethod::StableExact => {
            if theta != 0.0 {
                return Err(Error::Unsupported(format!("stable-exact sampling needs theta = 0, got {theta}")));
            }
            Ok(sample_positive_stable(beta, rng)?.powf(-beta))
        }
        MlMethod::Crp { steps } => {
            if steps == 0 {
                return Err(Error::InvalidParameter("CRP needs at least one customer".into()));
            }
            let k = crp_table_count(beta, theta, steps, rng)?;
            Ok(k as f64 / (steps as f64).powf(beta))
        }
        MlMethod::Tilted => {
            if theta >= 0.0 {
                sample_ml_tilted_nonneg(beta, theta, rng)
            } else {
                // M_{β,θ} = M_{β,θ+1} · Beta(θ/β + 1, (1 − β)/β)
                let m = sample_ml_tilted_nonneg(beta, theta + 1.0, rng)?;
                Ok(m * sample_beta(theta / beta + 1.0, (1.0 - beta) / beta, rng)?)
            }
        }
    }
}

/// E[M^p] = Γ(θ+1)Γ(θ/β+p+1) / (Γ(θ/β+1)Γ(θ+pβ+1)), valid for θ > −β.
pub fn ml_moment(p: MLParams, power: f64) -> Result<f64> {
    let MLParams { beta, theta } = p;
    let args = [theta + 1.0, theta / beta + power + 1.0, theta / beta + 1.0, theta + power * beta + 1.0];
    if args.iter().any(|&x| x <= 0.0) {
        return Err(Error::InvalidParameter(format!("Gamma pole in ML moment of order {power}")));
    }
    Ok((ln_gamma(args[0]) + ln_gamma(args[1]) - ln_gamma(args[2]) - ln_gamma(args[3])).exp())
}

/// E[M^p] = Γ(θ)Γ(θ/β+p) / (Γ(θ/β)Γ(θ+pβ)), valid for θ > 0.
pub fn ml_moment_unshifted(p: MLParams, power: f64) -> Result<f64> {
    let MLParams { beta, theta } = p;
    let args = [theta, theta / beta + power, theta / beta, theta + power * beta];
    if args.iter().any(|&x| x <= 0.0) {
        return Err(Error::InvalidParameter(format!("Gamma pole in ML moment of order {power}")));
    }
    Ok((ln_gamma(args[0]) + ln_gamma(args[1]) - ln_gamma(args[2]) - ln_gamma(args[3])).exp())
}

/// E[K(n)]/n^β for the Chinese restaurant process, the mean of the CRP
/// sampler at finite n.
pub fn crp_finite_mean(p: MLParams, n: u64) -> f64 {
    let MLParams { beta, theta } = p;
    let nf = n as f64;
    let lead = (ln_gamma(theta + 1.0) + ln_gamma(theta + beta + nf)
        - ln_gamma(theta + beta)
        - ln_gamma(theta + nf))
        .exp()
        / beta;
    (lead - theta / beta) / nf.powf(beta)
}

/// E[Σ_{i_1,…,i_n distinct} ∏ P_{i_j}^{k_j}] for (P_i) ~ PD(β, θ):
/// ∏ βΓ(k_j−β)/Γ(1−β) · Γ(θ+1)Γ(θ/β+n) / (β Γ(θ/β+1) Γ(θ+Σk)).
pub fn pd_mixed_moment(beta: f64, theta: f64, powers: &[u32]) -> Result<f64> {
    MLParams::new(beta, theta)?;
    if powers.is_empty() || powers.iter().any(|&k| k < 1) {
        return Err(Error::InvalidParameter("PD moment powers must be >= 1".into()));
    }
    let n = powers.len() as f64;
    let sk: f64 = powers.iter().map(|&k| k as f64).sum();
    let mut l = 0.0;
    for &k in powers {
        l += beta.ln() + ln_gamma(k as f64 - beta) - ln_gamma(1.0 - beta);
    }
    l += ln_gamma(theta + 1.0) + ln_gamma(theta / beta + n) - beta.ln() - ln_gamma(theta / beta + 1.0) - ln_gamma(theta + sk);
    Ok(l.exp())
}

/// Lazily generated GEM(β, θ) sticks P_i = B_i ∏_{j<i} (1 − B_j) with
/// B_i ~ Beta(1 − β, θ + iβ), i ≥ 1.
#[derive(Clone, Debug)]
pub struct GemSticks {
    beta: f64,
    theta: f64,
    index: u64,
    remaining: f64,
}

impl GemSticks {
    pub fn new(beta: f64, theta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&beta) || !(theta > -beta) {
            return Err(Error::InvalidParameter(format!("PD({beta}, {theta}) out of domain")));
        }
        Ok(Self { beta, theta, index: 0, remaining: 1.0 })
    }

    pub fn next_stick(&mut self, rng: &mut RandomStream) -> Result<f64> {
        self.index += 1;
        let b = sample_beta(1.0 - self.beta, self.theta + self.index as f64 * self.beta, rng)?;
        let p = self.remaining * b;
        self.remaining -= p;
        Ok(p)
    }

    /// Mass not yet assigned to a stick.
    pub fn remaining(&self) -> f64 {
        self.remaining
    }
}

/// First J Poisson-Dirichlet weights (sorted decreasingly) and the unassigned mass.
#[derive(Clone, Debug, Serialize)]
pub struct PdSample {
    pub weights: Vec<f64>,
    pub remainder: f64,
}

/// PD(β, θ) by stick-breaking, truncated after `truncation` sticks.
pub fn sample_pd(beta: f64, theta: f64, truncation: usize, rng: &mut RandomStream) -> Result<PdSample> {
    if truncation == 0 {
        return Err(Error::InvalidParameter("truncation must be >= 1".into()));
    }
    let mut gem = GemSticks::new(beta, theta)?;
    let mut weights = (0..truncation).map(|_| gem.next_stick(rng)).collect::<Result<Vec<f64>>>()?;
    weights.sort_by(|a, b| b.total_cmp(a));
    Ok(PdSample { weights, remainder: gem.remaining() })
}

/// Shape data of an ordered tree needed by the joint marginal laws.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StableMarginalLaw {
    pub alpha: f64,
    pub edge_count: usize,
    pub vertex_degrees: Vec<usize>,
}

impl StableMarginalLaw {
    pub fn new(alpha: f64, edge_count: usize, vertex_degrees: Vec<usize>) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(Error::InvalidParameter(format!("alpha {alpha} not in (1,2)")));
        }
        if edge_count == 0 || vertex_degrees.iter().any(|&d| d < 3) {
            return Err(Error::InvalidParameter("shape needs edges and internal degrees >= 3".into()));
        }
        if edge_count != vertex_degrees.len() * 2 + 1 + vertex_degrees.iter().map(|d| d - 3).sum::<usize>() {
            return Err(Error::InvalidParameter("edge count inconsistent with a planted tree".into()));
        }
        Ok(Self { alpha, edge_count, vertex_degrees })
    }

    /// From a planted tree (surplus 0) in 𝕄_{0,k}.
    pub fn from_tree(alpha: f64, g: &crate::multigraph::Multigraph) -> Result<Self> {
        if g.surplus() != 0 {
            return Err(Error::InvalidParameter("shape must be a tree".into()));
        }
        Self::new(alpha, g.edge_count(), g.internal_degrees())
    }

    /// Number of leaves k, so that the weights total αk − 1.
    pub fn leaves(&self) -> usize {
        self.edge_count - self.vertex_degrees.len()
    }

    /// Dirichlet parameters (1 − 1/α, …, (d_j − 1 − α)/α, …).
    pub fn dirichlet_params(&self) -> Vec<f64> {
        let a = self.alpha;
        std::iter::repeat(1.0 - 1.0 / a)
            .take(self.edge_count)
            .chain(self.vertex_degrees.iter().map(|&d| (d as f64 - 1.0 - a) / a))
            .collect()
    }
}

/// One joint realization of masses, local times, lengths and branchpoint splits.
#[derive(Clone, Debug, Serialize)]
pub struct StableMarginal {
    pub edge_mass: Vec<f64>,
    pub vertex_mass: Vec<f64>,
    pub edge_local_time: Vec<f64>,
    pub vertex_local_time: Vec<f64>,
    pub edge_length: Vec<f64>,
    /// Per edge: truncated PD(α−1, α−1) split of its local time among branchpoints.
    pub edge_local_time_splits: Vec<PdSample>,
    /// Per edge and branchpoint: fraction of local time on the right side.
    pub edge_right_fractions: Vec<Vec<f64>>,
    /// Per edge and branchpoint: relative position along the edge.
    pub edge_positions: Vec<Vec<f64>>,
    /// Per vertex: Dir(1, …, 1) split of its local time among corners.
    pub vertex_corner_splits: Vec<Vec<f64>>,
}

impl StableMarginal {
    pub fn total_local_time(&self) -> f64 {
        self.edge_local_time.iter().sum::<f64>() + self.vertex_local_time.iter().sum::<f64>()
    }
}

/// Samples the joint marginal laws of the stable tree for a fixed ordered shape,
/// with `truncation` branchpoints resolved per edge.
pub fn sample_stable_marginal(law: &StableMarginalLaw, truncation: usize, rng: &mut RandomStream) -> Result<StableMarginal> {
    let a = law.alpha;
    let m = law.edge_count;
    let d = sample_dirichlet(&law.dirichlet_params(), rng)?;
    let mut r = Vec::with_capacity(d.len());
    for i in 0..d.len() {
        let theta = if i < m { 1.0 - 1.0 / a } else { (law.vertex_degrees[i - m] as f64 - 1.0 - a) / a };
        r.push(sample_ml(MLParams::new(1.0 / a, theta)?, rng, MlMethod::Tilted)?);
    }
    let mut edge_length = Vec::with_capacity(m);
    for i in 0..m {
        let rbar = sample_ml(MLParams::new(a - 1.0, a - 1.0)?, rng, MlMethod::Tilted)?;
        edge_length.push(d[i].powf(1.0 - 1.0 / a) * r[i].powf(a - 1.0) * rbar);
    }
    let local: Vec<f64> = d.iter().zip(&r).map(|(di, ri)| di.powf(1.0 / a) * ri).collect();
    let mut splits = Vec::with_capacity(m);
    let mut right = Vec::with_capacity(m);
    let mut positions = Vec::with_capacity(m);
    for _ in 0..m {
        splits.push(sample_pd(a - 1.0, a - 1.0, truncation, rng)?);
        right.push((0..truncation).map(|_| rng.uniform()).collect());
        positions.push((0..truncation).map(|_| rng.uniform()).collect());
    }
    let corners = law
        .vertex_degrees
        .iter()
        .map(|&dj| sample_dirichlet(&vec![1.0; dj], rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(StableMarginal {
        edge_mass: d[..m].to_vec(),
        vertex_mass: d[m..].to_vec(),
        edge_local_time: local[..m].to_vec(),
        vertex_local_time: local[m..].to_vec(),
        edge_length,
        edge_local_time_splits: splits,
        edge_right_fractions: right,
        edge_positions: positions,
        vertex_corner_splits: corners,
    })
}
