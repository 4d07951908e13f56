//! Finite metric marginals of the stable graph: the (R_n) chain, the
//! line-breaking construction, the kernel-gluing construction and shortest
//! path queries on edge-lengthed multigraphs.

use std::collections::BTreeMap;

use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::distributions::{sample_beta, sample_dirichlet, sample_ml, GemSticks, MLParams, MlMethod};
use crate::error::{Error, Result};
use crate::multigraph::{Multigraph, Vertex};
use crate::number::Alpha;
use crate::rng::RandomStream;
use crate::weights_enum::{exact_distribution, ExactDistribution, WeightSeq};

/// One copy of an edge with its length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LengthedEdge {
    pub u: usize,
    pub v: usize,
    pub len: f64,
}

/// A finite multigraph with positive edge lengths, atom weights `eta` on
/// vertices and leaf labels on the marked points (label 0 is the root).
/// Unlabelled vertices of degree 1 are unmarked points of the space.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LengthedGraph {
    labels: Vec<Option<usize>>,
    eta: Vec<f64>,
    edges: Vec<LengthedEdge>,
}

/// Distances among marked points with simple global functionals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricSummary {
    /// Marked labels in increasing order; rows and columns of `distances`.
    pub labels: Vec<usize>,
    pub distances: Vec<Vec<f64>>,
    pub total_length: f64,
    /// Largest distance between marked points, a lower bound on the diameter.
    pub diameter_lower_bound: f64,
}

impl LengthedGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, label: Option<usize>, eta: f64) -> usize {
        self.labels.push(label);
        self.eta.push(eta);
        self.labels.len() - 1
    }

    pub fn add_edge(&mut self, u: usize, v: usize, len: f64) -> Result<usize> {
        if u >= self.labels.len() || v >= self.labels.len() {
            return Err(Error::UnknownVertex(format!("{u} or {v}")));
        }
        if !(len > 0.0 && len.is_finite()) {
            return Err(Error::InvalidParameter(format!("edge length {len} must be positive")));
        }
        self.edges.push(LengthedEdge { u, v, len });
        Ok(self.edges.len() - 1)
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edges(&self) -> &[LengthedEdge] {
        &self.edges
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.len).collect()
    }

    pub fn label(&self, v: usize) -> Option<usize> {
        self.labels[v]
    }

    pub fn eta(&self, v: usize) -> f64 {
        self.eta[v]
    }

    pub fn vertex_of_label(&self, label: usize) -> Option<usize> {
        self.labels.iter().position(|&l| l == Some(label))
    }

    /// Largest leaf label.
    pub fn n(&self) -> isize {
        self.labels.iter().flatten().max().map_or(-1, |&l| l as isize)
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.len).sum()
    }

    pub fn total_eta(&self) -> f64 {
        self.eta.iter().sum()
    }

    pub fn surplus(&self) -> i64 {
        self.edges.len() as i64 - self.labels.len() as i64 + 1
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.labels.len()];
        for e in &self.edges {
            d[e.u] += 1;
            d[e.v] += 1;
        }
        d
    }

    pub fn is_connected(&self) -> bool {
        if self.labels.is_empty() {
            return true;
        }
        self.distances_from(0).iter().all(|d| d.is_finite())
    }

    /// Shortest-path distances from `v` to every vertex (∞ if unreachable).
    pub fn distances_from(&self, v: usize) -> Vec<f64> {
        let mut g = UnGraph::<(), f64>::with_capacity(self.labels.len(), self.edges.len());
        let idx: Vec<NodeIndex> = (0..self.labels.len()).map(|_| g.add_node(())).collect();
        for e in &self.edges {
            g.add_edge(idx[e.u], idx[e.v], e.len);
        }
        let dist = dijkstra(&g, idx[v], None, |e| *e.weight());
        idx.iter().map(|i| dist.get(i).copied().unwrap_or(f64::INFINITY)).collect()
    }

    /// Distance between the points carrying labels `a` and `b`.
    pub fn label_distance(&self, a: usize, b: usize) -> Result<f64> {
        let va = self.vertex_of_label(a).ok_or_else(|| Error::UnknownVertex(format!("L{a}")))?;
        let vb = self.vertex_of_label(b).ok_or_else(|| Error::UnknownVertex(format!("L{b}")))?;
        Ok(self.distances_from(va)[vb])
    }

    pub fn metric(&self) -> MetricSummary {
        let mut marked: Vec<(usize, usize)> =
            self.labels.iter().enumerate().filter_map(|(v, l)| l.map(|l| (l, v))).collect();
        marked.sort();
        let distances: Vec<Vec<f64>> = marked
            .iter()
            .map(|&(_, v)| {
                let d = self.distances_from(v);
                marked.iter().map(|&(_, w)| d[w]).collect()
            })
            .collect();
        let diameter_lower_bound = distances.iter().flatten().copied().fold(0.0, f64::max);
        MetricSummary {
            labels: marked.iter().map(|x| x.0).collect(),
            distances,
            total_length: self.total_length(),
            diameter_lower_bound,
        }
    }

    /// Drops unmarked pendant parts and merges paths through unlabelled
    /// degree-2 vertices, adding their lengths and atoms.
    pub fn contract(&self) -> LengthedGraph {
        let nv = self.labels.len();
        let mut alive_e = vec![true; self.edges.len()];
        let mut alive_v = vec![true; nv];
        let mut edges = self.edges.clone();
        let mut eta = self.eta.clone();
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for (i, e) in edges.iter().enumerate() {
            incident[e.u].push(i);
            incident[e.v].push(i);
        }
        let live = |inc: &Vec<usize>, alive_e: &Vec<bool>| inc.iter().filter(|&&i| alive_e[i]).count();
        let mut changed = true;
        while changed {
            changed = false;
            for v in 0..nv {
                if !alive_v[v] || self.labels[v].is_some() {
                    continue;
                }
                let inc: Vec<usize> = incident[v].iter().copied().filter(|&i| alive_e[i]).collect();
                if inc.len() == 1 {
                    alive_e[inc[0]] = false;
                    alive_v[v] = false;
                    changed = true;
                } else if inc.len() == 2 && inc[0] != inc[1] {
                    let (a, b) = (edges[inc[0]], edges[inc[1]]);
                    let far_a = if a.u == v { a.v } else { a.u };
                    let far_b = if b.u == v { b.v } else { b.u };
                    if far_a == v || far_b == v {
                        continue;
                    }
                    edges[inc[0]] = LengthedEdge { u: far_a, v: far_b, len: a.len + b.len };
                    alive_e[inc[1]] = false;
                    incident[far_b].push(inc[0]);
                    eta[far_a] += eta[v] / 2.0;
                    eta[far_b] += eta[v] / 2.0;
                    alive_v[v] = false;
                    changed = true;
                }
            }
        }
        debug_assert!((0..nv).all(|v| !alive_v[v] || self.labels[v].is_some() || live(&incident[v], &alive_e) >= 3));
        let mut map = vec![usize::MAX; nv];
        let mut out = LengthedGraph::new();
        for v in 0..nv {
            if alive_v[v] {
                map[v] = out.add_vertex(self.labels[v], eta[v]);
            }
        }
        for (i, e) in edges.iter().enumerate() {
            if alive_e[i] {
                out.edges.push(LengthedEdge { u: map[e.u], v: map[e.v], len: e.len });
            }
        }
        out
    }

    /// Combinatorial shape after [`LengthedGraph::contract`]; marked points
    /// become leaves and the rest internal vertices.
    pub fn skeleton(&self) -> Result<Multigraph> {
        let c = self.contract();
        let mut internal = 0;
        let vert: Vec<Vertex> = c
            .labels
            .iter()
            .map(|l| match l {
                Some(i) => Vertex::Leaf(*i),
                None => {
                    internal += 1;
                    Vertex::Internal(internal - 1)
                }
            })
            .collect();
        Multigraph::new(c.n(), internal, c.edges.iter().map(|e| (vert[e.u], vert[e.v], 1)))
    }

    /// Removes the leaf with the given label and its edge, merging the
    /// attachment point if it becomes an unlabelled degree-2 vertex.
    pub fn remove_leaf(&self, label: usize) -> Result<LengthedGraph> {
        let v = self.vertex_of_label(label).ok_or_else(|| Error::UnknownVertex(format!("L{label}")))?;
        let mut g = self.clone();
        g.labels[v] = None;
        Ok(g.contract())
    }

    /// Forgets a label, turning the point into an unmarked one.
    pub fn unmark(&self, label: usize) -> LengthedGraph {
        let mut g = self.clone();
        for l in &mut g.labels {
            if *l == Some(label) {
                *l = None;
            }
        }
        g
    }

    fn vertex_names(&self) -> Vec<String> {
        let mut k = 0;
        self.labels
            .iter()
            .map(|l| match l {
                Some(i) => format!("L{i}"),
                None => {
                    k += 1;
                    format!("I{}", k - 1)
                }
            })
            .collect()
    }
}

impl Serialize for LengthedGraph {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct EdgeRow<'a> {
            u: &'a str,
            v: &'a str,
            mult: usize,
            len: f64,
        }
        let names = self.vertex_names();
        let edges: Vec<EdgeRow> =
            self.edges.iter().map(|e| EdgeRow { u: &names[e.u], v: &names[e.v], mult: 1, len: e.len }).collect();
        let eta: BTreeMap<&str, f64> = names.iter().map(String::as_str).zip(self.eta.iter().copied()).collect();
        let mut st = s.serialize_struct("LengthedGraph", 5)?;
        st.serialize_field("surplus", &self.surplus())?;
        st.serialize_field("leaves", &self.n())?;
        st.serialize_field("internal", &self.labels.iter().filter(|l| l.is_none()).count())?;
        st.serialize_field("edges", &edges)?;
        st.serialize_field("eta", &eta)?;
        st.end()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 1.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha = {alpha} outside (1, 2]")))
    }
}

/// Dirichlet draw in which zero parameters give zero components.
fn dirichlet_with_zeros(params: &[f64], rng: &mut RandomStream) -> Result<Vec<f64>> {
    let positive: Vec<f64> = params.iter().copied().filter(|&a| a > 0.0).collect();
    let mut draw = sample_dirichlet(&positive, rng)?.into_iter();
    Ok(params.iter().map(|&a| if a > 0.0 { draw.next().unwrap() } else { 0.0 }).collect())
}

/// Beta(a, b) with the degenerate value 1 when b = 0.
fn beta_or_one(a: f64, b: f64, rng: &mut RandomStream) -> Result<f64> {
    if b.abs() < 1e-12 {
        Ok(1.0)
    } else {
        sample_beta(a, b, rng)
    }
}

/// Values R_1 < R_2 < … < R_N of the increasing chain driving line-breaking.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RChain {
    pub alpha: f64,
    pub s: usize,
    values: Vec<f64>,
}

impl RChain {
    /// R_n for 1 ≤ n ≤ N.
    pub fn r(&self, n: usize) -> f64 {
        self.values[n - 1]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// ML(1 − 1/α, (nα + s − 1)/α), the law of R_n.
pub fn r_law(alpha: f64, s: usize, n: usize) -> Result<MLParams> {
    MLParams::new(1.0 - 1.0 / alpha, (n as f64 * alpha + s as f64 - 1.0) / alpha)
}

/// Samples R_N from its marginal law and fills in R_n = R_{n+1}·Beta(((n+1)α
/// + s − 2)/(α − 1), 1/(α − 1)) downwards.
pub fn sample_r_chain(alpha: f64, s: usize, n_max: usize, rng: &mut RandomStream) -> Result<RChain> {
    check_alpha(alpha)?;
    if n_max == 0 {
        return Err(Error::InvalidParameter("the chain needs n_max >= 1".into()));
    }
    let mut values = vec![0.0; n_max];
    values[n_max - 1] = sample_ml(r_law(alpha, s, n_max)?, rng, MlMethod::default())?;
    for n in (1..n_max).rev() {
        let a = ((n + 1) as f64 * alpha + s as f64 - 2.0) / (alpha - 1.0);
        values[n - 1] = values[n] * sample_beta(a, 1.0 / (alpha - 1.0), rng)?;
    }
    Ok(RChain { alpha, s, values })
}

fn sample_kernel<'a>(law: &'a ExactDistribution, rng: &mut RandomStream) -> &'a Multigraph {
    let u = rng.uniform();
    let mut acc = 0.0;
    for e in &law.entries {
        acc += e.prob.to_f64();
        if u < acc {
            return &e.graph;
        }
    }
    &law.entries.last().expect("non-empty law").graph
}

/// Copies a multigraph's vertices and edge copies into a lengthed graph,
/// returning the vertex map.
fn lay_out(g: &Multigraph, out: &mut LengthedGraph) -> Vec<usize> {
    (0..g.vertex_count())
        .map(|i| match g.vertex_at(i) {
            Vertex::Leaf(l) => out.add_vertex(Some(l), 0.0),
            Vertex::Internal(_) => out.add_vertex(None, 0.0),
        })
        .collect()
}

/// Line-breaking sampler for a fixed surplus and α, with the kernel law cached.
#[derive(Clone, Debug)]
pub struct LineBreaker {
    s: usize,
    alpha: f64,
    kernel_law: Option<ExactDistribution>,
}

impl LineBreaker {
    pub fn new(s: usize, alpha: Alpha) -> Result<Self> {
        check_alpha(alpha.value())?;
        let kernel_law = if s >= 1 { Some(exact_distribution(s, 0, &WeightSeq::new(alpha))?) } else { None };
        Ok(Self { s, alpha: alpha.value(), kernel_law })
    }

    fn start(&self, chain: &RChain, rng: &mut RandomStream) -> Result<LengthedGraph> {
        let mut out = LengthedGraph::new();
        let a = self.alpha;
        match &self.kernel_law {
            None => {
                let root = out.add_vertex(Some(0), 0.0);
                let leaf = out.add_vertex(Some(1), 0.0);
                out.add_edge(root, leaf, chain.r(1))?;
            }
            Some(law) => {
                let k = sample_kernel(law, rng);
                let map = lay_out(k, &mut out);
                let deg = k.degrees();
                let internal: Vec<usize> = (0..k.vertex_count()).filter(|&i| !k.vertex_at(i).is_leaf()).collect();
                let copies: Vec<(usize, usize)> =
                    k.edges().flat_map(|(u, v, m)| std::iter::repeat((k.index(u), k.index(v))).take(m)).collect();
                let mut params = vec![1.0; copies.len()];
                params.extend(internal.iter().map(|&i| (deg[i] as f64 - 1.0 - a) / (a - 1.0)));
                let theta = dirichlet_with_zeros(&params, rng)?;
                let rs = chain.r(self.s);
                for (j, &(u, v)) in copies.iter().enumerate() {
                    out.add_edge(map[u], map[v], rs * theta[j])?;
                }
                for (j, &i) in internal.iter().enumerate() {
                    out.eta[map[i]] = rs * theta[copies.len() + j];
                }
            }
        }
        Ok(out)
    }

    /// Attaches leaf `label` at a point drawn from η (atoms plus length).
    fn grow(&self, g: &mut LengthedGraph, label: usize, increment: f64, rng: &mut RandomStream) -> Result<()> {
        let a = self.alpha;
        let b = beta_or_one(1.0, (2.0 - a) / (a - 1.0), rng)?;
        let total = g.total_length() + g.total_eta();
        let mut u = rng.uniform() * total;
        let mut at = None;
        for v in 0..g.vertex_count() {
            if u < g.eta[v] {
                at = Some(v);
                break;
            }
            u -= g.eta[v];
        }
        let v = match at {
            Some(v) => v,
            None => {
                let mut picked = g.edges.len() - 1;
                for (i, e) in g.edges.iter().enumerate() {
                    if u < e.len {
                        picked = i;
                        break;
                    }
                    u -= e.len;
                }
                let e = g.edges[picked];
                let t = (u / e.len).clamp(f64::EPSILON, 1.0 - f64::EPSILON) * e.len;
                let w = g.add_vertex(None, 0.0);
                g.edges[picked] = LengthedEdge { u: e.u, v: w, len: t };
                g.edges.push(LengthedEdge { u: w, v: e.v, len: e.len - t });
                w
            }
        };
        let leaf = g.add_vertex(Some(label), 0.0);
        g.add_edge(v, leaf, increment * b)?;
        g.eta[v] += increment * (1.0 - b);
        Ok(())
    }

    /// ℋ^s_k for every k from the start (0, or 1 when s = 0) up to `n`,
    /// built on a single chain so consecutive snapshots are coupled.
    pub fn sample_path(&self, n: usize, rng: &mut RandomStream) -> Result<Vec<LengthedGraph>> {
        let s = self.s;
        let first = if s == 0 { 1 } else { 0 };
        if n < first {
            return Err(Error::InvalidParameter("with s = 0 the construction starts at n = 1".into()));
        }
        let chain = sample_r_chain(self.alpha, s, (n + s).max(1), rng)?;
        let mut g = self.start(&chain, rng)?;
        let mut out = vec![g.clone()];
        for k in first..n {
            let increment = chain.r(k + s + 1) - chain.r(k + s);
            self.grow(&mut g, k + 1, increment, rng)?;
            out.push(g.clone());
        }
        Ok(out)
    }

    /// ℋ^s_n.
    pub fn sample(&self, n: usize, rng: &mut RandomStream) -> Result<LengthedGraph> {
        let s = self.s;
        let first = if s == 0 { 1 } else { 0 };
        if n < first {
            return Err(Error::InvalidParameter("with s = 0 the construction starts at n = 1".into()));
        }
        let chain = sample_r_chain(self.alpha, s, (n + s).max(1), rng)?;
        let mut g = self.start(&chain, rng)?;
        for k in first..n {
            let increment = chain.r(k + s + 1) - chain.r(k + s);
            self.grow(&mut g, k + 1, increment, rng)?;
        }
        Ok(g)
    }
}

/// One draw of ℋ^s_n by line-breaking.
pub fn linebreak(s: usize, n: usize, alpha: Alpha, rng: &mut RandomStream) -> Result<LengthedGraph> {
    LineBreaker::new(s, alpha)?.sample(n, rng)
}

/// Parameters of the edge-length law of a marginal with `edges` edges:
/// α·L = Beta(|E|, c − |E|)·ML(1 − 1/α, ((n+s)α + s − 1)/α)·Dir(1, …, 1)
/// with c = ((n+s)α + s − 1)/(α − 1). Returns (Beta a, Beta b, ML params).
pub fn length_law(s: usize, n: usize, edges: usize, alpha: f64) -> Result<(f64, f64, MLParams)> {
    check_alpha(alpha)?;
    let c = ((n + s) as f64 * alpha + s as f64 - 1.0) / (alpha - 1.0);
    let b = c - edges as f64;
    if b < -1e-9 || edges == 0 {
        return Err(Error::InvalidParameter(format!("Beta({edges}, {b}) out of domain")));
    }
    Ok((edges as f64, b.max(0.0), r_law(alpha, s, n + s)?))
}

/// Edge lengths of 𝒢^s_n given its shape, in edge-copy order.
pub fn marginal_lengths(s: usize, n: usize, alpha: f64, shape: &Multigraph, rng: &mut RandomStream) -> Result<Vec<f64>> {
    if !shape.validate_membership(s as i64, n as isize) {
        return Err(Error::InvalidGraph(format!("shape is not in M_{{{s},{n}}}")));
    }
    let m = shape.edge_count();
    let (a, b, ml) = length_law(s, n, m, alpha)?;
    let scale = beta_or_one(a, b, rng)? * sample_ml(ml, rng, MlMethod::default())?;
    let dir = sample_dirichlet(&vec![1.0; m], rng)?;
    Ok(dir.into_iter().map(|x| scale * x / alpha).collect())
}

/// A draw of the kernel-gluing construction with its bookkeeping.
#[derive(Clone, Debug, Serialize)]
pub struct GluedSpace {
    pub kernel: Multigraph,
    /// The realized space; label 0 is the root and label 1 a point drawn from
    /// the mass measure.
    pub space: LengthedGraph,
    /// Masses of the trees replacing kernel edges, in edge-copy order.
    pub edge_masses: Vec<f64>,
    /// Total pendant mass at each internal kernel vertex.
    pub vertex_masses: Vec<f64>,
    /// Realized pendant tree masses per internal vertex.
    pub pendant_masses: Vec<Vec<f64>>,
    /// Pendant mass left unrealized by the truncation.
    pub remainder: f64,
}

impl GluedSpace {
    pub fn realized_mass(&self) -> f64 {
        self.edge_masses.iter().sum::<f64>() + self.pendant_masses.iter().flatten().sum::<f64>()
    }
}

/// Kernel-gluing sampler: stable trees (finite marginals with
/// `leaves_per_tree` leaves) along the kernel edges and Poisson-Dirichlet
/// families of pendant trees at its vertices.
#[derive(Clone, Debug)]
pub struct GlueBuilder {
    s: usize,
    alpha: f64,
    leaves_per_tree: usize,
    truncation: usize,
    kernel_law: ExactDistribution,
    trees: LineBreaker,
}

impl GlueBuilder {
    pub fn new(s: usize, alpha: Alpha, leaves_per_tree: usize, truncation: usize) -> Result<Self> {
        if s == 0 {
            return Err(Error::InvalidParameter("gluing needs a kernel, s >= 1".into()));
        }
        if leaves_per_tree < 2 || truncation == 0 {
            return Err(Error::InvalidParameter("need leaves_per_tree >= 2 and truncation >= 1".into()));
        }
        Ok(Self {
            s,
            alpha: alpha.value(),
            leaves_per_tree,
            truncation,
            kernel_law: exact_distribution(s, 0, &WeightSeq::new(alpha))?,
            trees: LineBreaker::new(0, alpha)?,
        })
    }

    pub fn surplus(&self) -> usize {
        self.s
    }

    /// A tree marginal of the given mass: lengths scaled by mass^{1 − 1/α}.
    fn tree(&self, mass: f64, rng: &mut RandomStream) -> Result<LengthedGraph> {
        let mut t = self.trees.sample(self.leaves_per_tree, rng)?;
        let scale = mass.powf(1.0 - 1.0 / self.alpha);
        for e in &mut t.edges {
            e.len = (e.len * scale).max(f64::MIN_POSITIVE);
        }
        Ok(t)
    }

    /// Copies `tree` into `out`, identifying tree label 0 with `root` and,
    /// when given, tree label 1 with `tip`. Returns the vertex map.
    fn graft(out: &mut LengthedGraph, tree: &LengthedGraph, root: usize, tip: Option<usize>) -> Result<Vec<usize>> {
        let map: Vec<usize> = (0..tree.vertex_count())
            .map(|v| match tree.labels[v] {
                Some(0) => root,
                Some(1) if tip.is_some() => tip.unwrap(),
                _ => out.add_vertex(None, 0.0),
            })
            .collect();
        for e in &tree.edges {
            out.add_edge(map[e.u], map[e.v], e.len)?;
        }
        Ok(map)
    }

    pub fn sample(&self, rng: &mut RandomStream) -> Result<GluedSpace> {
        let a = self.alpha;
        let kernel = sample_kernel(&self.kernel_law, rng).clone();
        let mut space = LengthedGraph::new();
        let map = lay_out(&kernel, &mut space);
        let deg = kernel.degrees();
        let internal: Vec<usize> = (0..kernel.vertex_count()).filter(|&i| !kernel.vertex_at(i).is_leaf()).collect();
        let copies: Vec<(usize, usize)> =
            kernel.edges().flat_map(|(u, v, m)| std::iter::repeat((kernel.index(u), kernel.index(v))).take(m)).collect();
        let mut params = vec![(a - 1.0) / a; copies.len()];
        params.extend(internal.iter().map(|&i| (deg[i] as f64 - 1.0 - a) / a));
        let masses = dirichlet_with_zeros(&params, rng)?;
        let edge_masses = masses[..copies.len()].to_vec();
        let vertex_masses = masses[copies.len()..].to_vec();

        // Where the marked point falls: an edge tree, or a pendant family.
        let u = rng.uniform();
        let mut acc = 0.0;
        let mut target = masses.len() - 1;
        for (i, &m) in masses.iter().enumerate() {
            acc += m;
            if u < acc {
                target = i;
                break;
            }
        }

        for (j, &(x, y)) in copies.iter().enumerate() {
            let tree = self.tree(edge_masses[j], rng)?;
            let tmap = Self::graft(&mut space, &tree, map[x], Some(map[y]))?;
            if target == j {
                space.labels[tmap[tree.vertex_of_label(2).expect("tree has two leaves")]] = Some(1);
            }
        }

        let mut pendant_masses = Vec::with_capacity(internal.len());
        let mut remainder = 0.0;
        for (i, &v) in internal.iter().enumerate() {
            let theta = (deg[v] as f64 - 1.0 - a) / a;
            let total = vertex_masses[i];
            let mut realized = Vec::new();
            if total > 0.0 {
                let mut gem = GemSticks::new(1.0 / a, theta)?;
                for _ in 0..self.truncation {
                    realized.push(gem.next_stick(rng)?);
                }
                // Sticks come in size-biased order, so a point drawn from the
                // family's mass lies in the first tree.
                let chosen = (target == copies.len() + i).then_some(0);
                remainder += total * gem.remaining();
                for (j, &p) in realized.iter().enumerate() {
                    let tree = self.tree(total * p, rng)?;
                    let tmap = Self::graft(&mut space, &tree, map[v], None)?;
                    if chosen == Some(j) {
                        space.labels[tmap[tree.vertex_of_label(1).expect("tree has a leaf")]] = Some(1);
                    }
                }
            }
            pendant_masses.push(realized.iter().map(|p| total * p).collect());
        }
        Ok(GluedSpace { kernel, space, edge_masses, vertex_masses, pendant_masses, remainder })
    }
}

/// One draw of the kernel-gluing construction.
pub fn glue_construction(
    s: usize,
    alpha: Alpha,
    leaves_per_tree: usize,
    truncation: usize,
    rng: &mut RandomStream,
) -> Result<GluedSpace> {
    GlueBuilder::new(s, alpha, leaves_per_tree, truncation)?.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{beta_moment, ml_moment};
    use crate::multigraph::build::{int, leaf};
    use crate::stats::{ks_one_sample, ks_two_sample, mean, tv_distance, FreqTable};
    use proptest::prelude::*;
    use statrs::distribution::{Beta as BetaDist, ContinuousCDF};

    fn a32() -> Alpha {
        Alpha::rational(3, 2).unwrap()
    }

    #[test]
    fn chain_is_increasing_with_ml_marginals() {
        let mut rng = RandomStream::new(1, 0);
        let reps = 40_000;
        let mut sums = vec![[0.0; 2]; 5];
        for _ in 0..reps {
            let c = sample_r_chain(1.5, 1, 5, &mut rng).unwrap();
            assert!(c.values().windows(2).all(|w| w[0] < w[1]));
            for n in 1..=5 {
                sums[n - 1][0] += c.r(n);
                sums[n - 1][1] += c.r(n).powi(2);
            }
        }
        for n in 1..=5 {
            let p = r_law(1.5, 1, n).unwrap();
            for k in 0..2 {
                let oracle = ml_moment(p, (k + 1) as f64).unwrap();
                let emp = sums[n - 1][k] / reps as f64;
                assert!((emp / oracle - 1.0).abs() < 0.02, "n={n} k={k}: {emp} vs {oracle}");
            }
        }
    }

    #[test]
    fn chain_ratios_are_beta() {
        let mut rng = RandomStream::new(2, 0);
        let (alpha, s, n) = (1.5, 2, 3);
        let ratios: Vec<f64> = (0..100_000)
            .map(|_| {
                let c = sample_r_chain(alpha, s, n + 1, &mut rng).unwrap();
                c.r(n) / c.r(n + 1)
            })
            .collect();
        let a = ((n + 1) as f64 * alpha + s as f64 - 2.0) / (alpha - 1.0);
        let d = BetaDist::new(a, 1.0 / (alpha - 1.0)).unwrap();
        let ks = ks_one_sample(&ratios, |x| d.cdf(x)).unwrap();
        assert!(ks.statistic < 0.01, "{}", ks.statistic);
    }

    #[test]
    fn single_segment_for_a_tree_with_one_leaf() {
        let mut rng = RandomStream::new(3, 0);
        let lb = LineBreaker::new(0, a32()).unwrap();
        let lens: Vec<f64> = (0..40_000)
            .map(|_| {
                let g = lb.sample(1, &mut rng).unwrap();
                assert_eq!(g.edges().len(), 1);
                g.label_distance(0, 1).unwrap()
            })
            .collect();
        let p = MLParams::new(1.0 / 3.0, 1.0 / 3.0).unwrap();
        assert!((mean(&lens) / ml_moment(p, 1.0).unwrap() - 1.0).abs() < 0.02);
        let m2 = lens.iter().map(|x| x * x).sum::<f64>() / lens.len() as f64;
        assert!((m2 / ml_moment(p, 2.0).unwrap() - 1.0).abs() < 0.03);
    }

    #[test]
    fn eta_total_tracks_the_chain() {
        let mut rng = RandomStream::new(4, 0);
        let lb = LineBreaker::new(2, Alpha::rational(5, 4).unwrap()).unwrap();
        for _ in 0..50 {
            let path = lb.sample_path(5, &mut rng).unwrap();
            for w in path.windows(2) {
                assert!(w[1].total_length() + w[1].total_eta() > w[0].total_length() + w[0].total_eta());
            }
            let last = path.last().unwrap();
            assert!(last.is_connected());
            assert_eq!(last.surplus(), 2);
        }
    }

    #[test]
    fn linebreak_shapes_follow_the_exact_law() {
        let alpha = Alpha::rational(5, 4).unwrap();
        let exact = exact_distribution(2, 1, &WeightSeq::new(alpha)).unwrap();
        let lb = LineBreaker::new(2, alpha).unwrap();
        let mut rng = RandomStream::new(5, 0);
        let mut table = FreqTable::new();
        for _ in 0..100_000 {
            let g = lb.sample(1, &mut rng).unwrap();
            table.add(g.skeleton().unwrap().canonical_code().unwrap());
        }
        let tv = tv_distance(&table, &exact);
        assert!(tv < 0.01, "tv = {tv}");
    }

    #[test]
    fn kernel_shapes_follow_the_exact_law() {
        let alpha = a32();
        let exact = exact_distribution(1, 2, &WeightSeq::new(alpha)).unwrap();
        let lb = LineBreaker::new(1, alpha).unwrap();
        let mut rng = RandomStream::new(6, 0);
        let mut table = FreqTable::new();
        for _ in 0..100_000 {
            table.add(lb.sample(2, &mut rng).unwrap().skeleton().unwrap().canonical_code().unwrap());
        }
        assert!(tv_distance(&table, &exact) < 0.01);
    }

    fn expected_edges(s: usize, n: usize, alpha: Alpha) -> f64 {
        let exact = exact_distribution(s, n as isize, &WeightSeq::new(alpha)).unwrap();
        exact.entries.iter().map(|e| e.prob.to_f64() * e.graph.edge_count() as f64).sum()
    }

    /// E[Beta(|E|, c − |E|)]·E[ML] averaged over the exact shape law.
    fn beta_ml_mean(s: usize, n: usize, alpha: Alpha) -> f64 {
        let a = alpha.value();
        let c = ((n + s) as f64 * a + s as f64 - 1.0) / (a - 1.0);
        let (_, _, ml) = length_law(s, n, 1, a).unwrap();
        expected_edges(s, n, alpha) / c * ml_moment(ml, 1.0).unwrap()
    }

    #[test]
    fn linebreak_total_length_is_beta_times_ml() {
        for (s, n, alpha) in [(1, 3, a32()), (2, 0, Alpha::rational(5, 4).unwrap())] {
            let lb = LineBreaker::new(s, alpha).unwrap();
            let mut rng = RandomStream::new(7, s as u64);
            let totals: Vec<f64> = (0..60_000).map(|_| lb.sample(n, &mut rng).unwrap().total_length()).collect();
            let oracle = beta_ml_mean(s, n, alpha);
            assert!((mean(&totals) / oracle - 1.0).abs() < 0.02, "{s},{n}: {} vs {oracle}", mean(&totals));
        }
    }

    #[test]
    fn marginal_lengths_match_beta_ml() {
        let g = Multigraph::planted(1, 1, [(leaf(0), int(0), 1), (leaf(1), int(0), 1), (int(0), int(0), 1)]).unwrap();
        let (a, b, ml) = length_law(1, 1, g.edge_count(), 1.5).unwrap();
        let oracle = beta_moment(a, b, 1.0, 0.0).unwrap() * ml_moment(ml, 1.0).unwrap();
        let mut rng = RandomStream::new(8, 0);
        let totals: Vec<f64> =
            (0..100_000).map(|_| 1.5 * marginal_lengths(1, 1, 1.5, &g, &mut rng).unwrap().iter().sum::<f64>()).collect();
        assert!((mean(&totals) / oracle - 1.0).abs() < 0.01);
    }

    #[test]
    fn marginal_lengths_are_exchangeable() {
        let g = Multigraph::planted(0, 2, [(leaf(0), int(0), 1), (int(0), int(1), 2), (int(1), int(1), 1)]).unwrap();
        let mut rng = RandomStream::new(9, 0);
        let mut first = Vec::new();
        let mut last = Vec::new();
        for _ in 0..20_000 {
            let l = marginal_lengths(2, 0, 1.5, &g, &mut rng).unwrap();
            first.push(l[0]);
            last.push(l[3]);
        }
        assert!(!ks_two_sample(&first, &last).unwrap().rejects(0.001));
    }

    #[test]
    fn marginal_lengths_reject_foreign_shapes() {
        let g = Multigraph::planted(0, 1, [(leaf(0), int(0), 1), (int(0), int(0), 1)]).unwrap();
        let mut rng = RandomStream::new(10, 0);
        assert!(marginal_lengths(2, 0, 1.5, &g, &mut rng).is_err());
    }

    #[test]
    fn removing_the_last_leaf_recovers_the_previous_marginal() {
        let lb = LineBreaker::new(1, a32()).unwrap();
        let mut rng = RandomStream::new(11, 0);
        for _ in 0..200 {
            let path = lb.sample_path(6, &mut rng).unwrap();
            for n in 0..6 {
                let back = path[n + 1].remove_leaf(n + 1).unwrap();
                let mut x = back.lengths();
                let mut y = path[n].lengths();
                x.sort_by(f64::total_cmp);
                y.sort_by(f64::total_cmp);
                assert_eq!(x.len(), y.len());
                assert!(x.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-9 * (1.0 + b)));
                assert_eq!(back.skeleton().unwrap().canonical_code(), path[n].skeleton().unwrap().canonical_code());
            }
        }
    }

    #[test]
    fn single_segment_distance() {
        let mut g = LengthedGraph::new();
        let a = g.add_vertex(Some(0), 0.0);
        let b = g.add_vertex(Some(1), 0.0);
        g.add_edge(a, b, 2.5).unwrap();
        assert_eq!(g.label_distance(0, 1).unwrap(), 2.5);
        assert_eq!(g.metric().diameter_lower_bound, 2.5);
    }

    #[test]
    fn theta_shape_distances() {
        let mut g = LengthedGraph::new();
        let r = g.add_vertex(Some(0), 0.0);
        let x = g.add_vertex(None, 0.0);
        let y = g.add_vertex(None, 0.0);
        let l = g.add_vertex(Some(1), 0.0);
        g.add_edge(r, x, 0.5).unwrap();
        for len in [1.0, 2.0, 3.0] {
            g.add_edge(x, y, len).unwrap();
        }
        g.add_edge(y, l, 0.25).unwrap();
        assert_eq!(g.label_distance(0, 1).unwrap(), 1.75);
        assert_eq!(g.total_length(), 6.75);
        let sk = g.skeleton().unwrap();
        assert_eq!(sk.surplus(), 2);
        assert_eq!(sk.multiplicity(int(0), int(1)), 3);
    }

    #[test]
    fn glued_skeleton_is_the_kernel() {
        let gb = GlueBuilder::new(2, Alpha::rational(5, 4).unwrap(), 3, 8).unwrap();
        let mut rng = RandomStream::new(12, 0);
        for _ in 0..200 {
            let out = gb.sample(&mut rng).unwrap();
            let sk = out.space.unmark(1).skeleton().unwrap();
            assert_eq!(sk.canonical_code().unwrap(), out.kernel.canonical_code().unwrap());
            assert!((out.realized_mass() + out.remainder - 1.0).abs() < 1e-9);
            assert!(out.space.vertex_of_label(1).is_some());
            assert!(out.space.is_connected());
        }
    }

    #[test]
    fn constructions_agree_on_root_to_leaf_distance() {
        let alpha = a32();
        let gb = GlueBuilder::new(1, alpha, 2, 16).unwrap();
        let lb = LineBreaker::new(1, alpha).unwrap();
        let mut rng = RandomStream::new(13, 0);
        let glued: Vec<f64> =
            (0..10_000).map(|_| gb.sample(&mut rng).unwrap().space.label_distance(0, 1).unwrap()).collect();
        let lined: Vec<f64> = (0..10_000).map(|_| lb.sample(1, &mut rng).unwrap().label_distance(0, 1).unwrap()).collect();
        let ks = ks_two_sample(&glued, &lined).unwrap();
        assert!(!ks.rejects(0.001), "KS {} (critical {})", ks.statistic, ks.critical(0.001));
    }

    #[test]
    fn lengthed_json_extends_graph_schema() {
        let mut rng = RandomStream::new(14, 0);
        let g = linebreak(1, 1, a32(), &mut rng).unwrap();
        let v = serde_json::to_value(&g).unwrap();
        assert_eq!(v["surplus"], 1);
        assert_eq!(v["leaves"], 1);
        assert!(v["edges"].as_array().unwrap().iter().all(|e| e["len"].as_f64().unwrap() > 0.0));
        assert!(v["eta"].as_object().unwrap().contains_key("L0"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn triangle_inequality_on_samples(seed in any::<u64>(), n in 1usize..6) {
            let mut rng = RandomStream::new(seed, 0);
            let g = linebreak(1, n, a32(), &mut rng).unwrap();
            let m = g.metric();
            let k = m.labels.len();
            for i in 0..k {
                prop_assert!(m.distances[i][i].abs() < 1e-12);
                for j in 0..k {
                    prop_assert!((m.distances[i][j] - m.distances[j][i]).abs() < 1e-9);
                    for l in 0..k {
                        prop_assert!(m.distances[i][l] <= m.distances[i][j] + m.distances[j][l] + 1e-9);
                    }
                }
            }
            prop_assert!(m.diameter_lower_bound <= g.total_length() + 1e-9);
        }

        #[test]
        fn marginal_lengths_are_positive(seed in any::<u64>()) {
            let g = Multigraph::planted(1, 1, [(leaf(0), int(0), 1), (leaf(1), int(0), 1), (int(0), int(0), 1)]).unwrap();
            let mut rng = RandomStream::new(seed, 1);
            let l = marginal_lengths(1, 1, 1.5, &g, &mut rng).unwrap();
            prop_assert_eq!(l.len(), 3);
            prop_assert!(l.iter().all(|&x| x > 0.0));
        }
    }
}
