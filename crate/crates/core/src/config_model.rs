//! Configuration model with i.i.d. D^(α) degrees and the conditioned sampler
//! whose law matches the discrete marginals.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::multigraph::{Multigraph, Vertex};
use crate::number::{Alpha, Number};
use crate::rng::RandomStream;
use crate::stats::FreqTable;
use crate::weights_enum::{marchal_weight, WeightSeq};

const TAIL_TARGET: f64 = 1e-12;
const MAX_TABLE: usize = 20_000_000;

/// The degree law P(D=1) = 2(1+α)/(α²+α+2), P(D=k) = A·w_{k−1}/k! for k ≥ 2
/// with A = 2(1+α)α/(α²+α+2).
#[derive(Clone, Debug)]
pub struct DegreeLaw {
    alpha: Alpha,
    /// cdf[k] = P(D ≤ k) for k ≤ cutoff.
    cdf: Vec<f64>,
    cutoff: usize,
    tail_mass: f64,
    envelope: f64,
}

impl DegreeLaw {
    pub fn new(alpha: Alpha) -> Result<Self> {
        let a = alpha.value();
        if a >= 2.0 {
            return Self::with_cutoff(alpha, 3);
        }
        let mut k = 4usize;
        while Self::tail_from(a, k + 1) >= TAIL_TARGET {
            k *= 2;
            if k > MAX_TABLE {
                return Err(Error::SizeLimit(format!("degree table for alpha {alpha} exceeds {MAX_TABLE}")));
            }
        }
        let (mut lo, mut hi) = (k / 2, k);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if Self::tail_from(a, mid + 1) < TAIL_TARGET {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Self::with_cutoff(alpha, hi.max(3))
    }

    /// Tabulates the cdf up to `cutoff`; larger degrees come from the tail sampler.
    pub fn with_cutoff(alpha: Alpha, cutoff: usize) -> Result<Self> {
        let a = alpha.value();
        if !(a > 1.0 && a <= 2.0) {
            return Err(Error::InvalidParameter(format!("alpha {a} not in (1,2]")));
        }
        if cutoff < 3 {
            return Err(Error::InvalidParameter("cutoff must be at least 3".into()));
        }
        let mut cdf = vec![0.0; cutoff + 1];
        let mut acc = Self::pmf_one(a);
        cdf[1] = acc;
        cdf[2] = acc;
        let mut p = Self::a_const(a) * (a - 1.0) / 6.0;
        for (k, slot) in cdf.iter_mut().enumerate().skip(3) {
            acc += p;
            *slot = acc;
            p *= (k as f64 - 1.0 - a) / (k as f64 + 1.0);
        }
        let tail_mass = if a >= 2.0 { 0.0 } else { Self::tail_from(a, cutoff + 1) };
        let envelope = if a >= 2.0 {
            0.0
        } else {
            let k = (cutoff + 1) as f64;
            1.01 * (ln_gamma(k - 1.0 - a) - ln_gamma(k + 1.0) + (2.0 + a) * k.ln()).exp()
        };
        Ok(Self { alpha, cdf, cutoff, tail_mass, envelope })
    }

    fn a_const(a: f64) -> f64 {
        2.0 * (1.0 + a) * a / (a * a + a + 2.0)
    }

    fn pmf_one(a: f64) -> f64 {
        2.0 * (1.0 + a) / (a * a + a + 2.0)
    }

    /// A·(α−1)/Γ(2−α), so that P(D=k) = C·Γ(k−1−α)/Γ(k+1) for k ≥ 3.
    fn c_const(a: f64) -> f64 {
        Self::a_const(a) * (a - 1.0) * (-ln_gamma(2.0 - a)).exp()
    }

    /// P(D ≥ k) for k ≥ 3 via Σ_{j≥k} Γ(j−1−α)/Γ(j+1) = Γ(k−1−α)/((1+α)Γ(k)).
    fn tail_from(a: f64, k: usize) -> f64 {
        let k = k as f64;
        Self::c_const(a) * (ln_gamma(k - 1.0 - a) - ln_gamma(k)).exp() / (1.0 + a)
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// P(D > cutoff).
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// P(D = k) in floating point.
    pub fn pmf(&self, k: usize) -> f64 {
        let a = self.alpha.value();
        match k {
            0 | 2 => 0.0,
            1 => Self::pmf_one(a),
            _ if k <= self.cutoff => self.cdf[k] - self.cdf[k - 1],
            _ if a >= 2.0 => 0.0,
            _ => Self::c_const(a) * (ln_gamma(k as f64 - 1.0 - a) - ln_gamma(k as f64 + 1.0)).exp(),
        }
    }

    /// Σ_{k ≥ 1} P(D = k): the table sum plus the closed-form tail.
    pub fn total_mass(&self) -> f64 {
        self.cdf[self.cutoff] + self.tail_mass
    }

    /// E[D] summed to a moderate index with the closed-form tail
    /// Σ_{k≥K} k·P(D=k) = C·Γ(K−1−α)/(αΓ(K−1)).
    pub fn mean(&self) -> f64 {
        let a = self.alpha.value();
        let head = (1..64).map(|k| k as f64 * self.pmf(k)).sum::<f64>();
        if a >= 2.0 {
            return head;
        }
        let k = 64.0;
        head + Self::c_const(a) * (ln_gamma(k - 1.0 - a) - ln_gamma(k - 1.0)).exp() / a
    }

    /// E[D²] with the closed-form tail
    /// Σ_{k≥K} k²·P(D=k) = C·Γ(K−1−α)·(1/((α−1)Γ(K−2)) + 1/(αΓ(K−1))).
    pub fn second_moment(&self) -> f64 {
        let a = self.alpha.value();
        let head = (1..64).map(|k| (k * k) as f64 * self.pmf(k)).sum::<f64>();
        if a >= 2.0 {
            return head;
        }
        let k: f64 = 64.0;
        let g = ln_gamma(k - 1.0 - a);
        head + Self::c_const(a) * ((g - ln_gamma(k - 2.0)).exp() / (a - 1.0) + (g - ln_gamma(k - 1.0)).exp() / a)
    }

    /// E[z^{D̂−1}] for the size-biased D̂, P(D̂=k) = k·P(D=k)/E[D].
    pub fn size_biased_pgf(&self, z: f64) -> f64 {
        let mean = self.mean();
        let mut s = 0.0;
        let mut k = 1usize;
        let mut zp = 1.0;
        loop {
            let term = k as f64 * self.pmf(k) * zp;
            s += term;
            if k > 3 && term < 1e-20 {
                break;
            }
            if k > 10_000_000 {
                break;
            }
            zp *= z;
            k += 1;
        }
        s / mean
    }

    /// Draws D by inverse cdf, falling back to the tail sampler beyond the cutoff.
    pub fn sample(&self, rng: &mut RandomStream) -> usize {
        let u = rng.uniform();
        if u < self.cdf[1] {
            return 1;
        }
        if u < self.cdf[self.cutoff] {
            return self.cdf.partition_point(|&c| c <= u);
        }
        if self.tail_mass == 0.0 {
            return self.cutoff;
        }
        self.sample_tail(rng)
    }

    /// D conditioned on D > cutoff, by rejection from a discretized Pareto
    /// envelope h(k) = ∫_{k−1}^{k} x^{−(2+α)} dx.
    pub fn sample_tail(&self, rng: &mut RandomStream) -> usize {
        let a = self.alpha.value();
        let kc = self.cutoff as f64;
        loop {
            let x = kc * rng.open_uniform().powf(-1.0 / (1.0 + a));
            let k = x.ceil().max(kc + 1.0);
            if k > 9e18 {
                continue;
            }
            let lt = ln_gamma(k - 1.0 - a) - ln_gamma(k + 1.0);
            // h(k) = ((k−1)^{−(1+α)} − k^{−(1+α)})/(1+α)
            let lk = -(1.0 + a) * k.ln();
            let lh = lk + ((1.0 + a) * (1.0 / (k - 1.0)).ln_1p()).exp_m1().ln() - (1.0 + a).ln();
            let ratio = (lt - lh).exp() / self.envelope;
            debug_assert!(ratio <= 1.0 + 1e-9, "envelope violated at {k}: {ratio}");
            if rng.uniform() < ratio {
                return k as usize;
            }
        }
    }
}

/// Exact P(D = k) (rational for rational α).
pub fn degree_pmf(alpha: Alpha, k: usize) -> Result<Number> {
    if k < 1 {
        return Err(Error::InvalidParameter("degree must be at least 1".into()));
    }
    let a = alpha.number();
    let one = Number::one();
    let denom = &(&(&a * &a) + &a) + &Number::int(2);
    let two_one_plus = &Number::int(2) * &(&one + &a);
    if k == 1 {
        return Ok(&two_one_plus / &denom);
    }
    let ws = WeightSeq::new(alpha);
    let fact: Number = (1..=k as i64).map(Number::int).product();
    Ok(&(&(&two_one_plus * &a) / &denom) * &(&marchal_weight(k - 1, &ws) / &fact))
}

/// A labelled multigraph on vertices 0..m−1, possibly disconnected.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConfigGraph {
    pub degrees: Vec<usize>,
    #[serde(serialize_with = "serialize_edges")]
    pub edges: BTreeMap<(usize, usize), usize>,
}

fn serialize_edges<S: serde::Serializer>(e: &BTreeMap<(usize, usize), usize>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(e.len()))?;
    for (&(u, v), &m) in e {
        seq.serialize_element(&serde_json::json!({"u": u, "v": v, "mult": m}))?;
    }
    seq.end()
}

/// A connected component: its vertices and surplus |E| − |V| + 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Component {
    pub vertices: Vec<usize>,
    pub edge_count: usize,
    pub surplus: i64,
}

impl ConfigGraph {
    pub fn vertex_count(&self) -> usize {
        self.degrees.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.values().sum()
    }

    pub fn self_loops(&self) -> usize {
        self.edges.iter().filter(|((u, v), _)| u == v).map(|(_, &m)| m).sum()
    }

    pub fn components(&self) -> Vec<Component> {
        let m = self.degrees.len();
        let mut parent: Vec<usize> = (0..m).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(u, v) in self.edges.keys() {
            let (a, b) = (find(&mut parent, u), find(&mut parent, v));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: BTreeMap<usize, Component> = BTreeMap::new();
        for v in 0..m {
            let r = find(&mut parent, v);
            groups.entry(r).or_insert_with(|| Component { vertices: Vec::new(), edge_count: 0, surplus: 0 }).vertices.push(v);
        }
        for (&(u, _), &k) in &self.edges {
            let r = find(&mut parent, u);
            groups.get_mut(&r).unwrap().edge_count += k;
        }
        groups
            .into_values()
            .map(|mut c| {
                c.surplus = c.edge_count as i64 - c.vertices.len() as i64 + 1;
                c
            })
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Reads vertices 0..=n as leaves L0..Ln and the rest as internal vertices.
    pub fn to_multigraph(&self, n: isize) -> Result<Multigraph> {
        let leaves = (n + 1) as usize;
        if leaves > self.degrees.len() {
            return Err(Error::InvalidParameter("more leaves than vertices".into()));
        }
        let vx = |i: usize| if i < leaves { Vertex::Leaf(i) } else { Vertex::Internal(i - leaves) };
        Multigraph::new(n, self.degrees.len() - leaves, self.edges.iter().map(|(&(u, v), &m)| (vx(u), vx(v), m)))
    }

    /// Labelled view of a multigraph in dense vertex order (leaves first).
    pub fn from_multigraph(g: &Multigraph) -> Self {
        let mut edges = BTreeMap::new();
        for (u, v, m) in g.edges() {
            let (a, b) = (g.index(u), g.index(v));
            edges.insert((a.min(b), a.max(b)), m);
        }
        Self { degrees: g.degrees(), edges }
    }
}

/// i.i.d. degrees D_0, …, D_{m−1}.
pub fn sample_degrees(law: &DegreeLaw, m: usize, rng: &mut RandomStream) -> Vec<usize> {
    (0..m).map(|_| law.sample(rng)).collect()
}

/// Uniform perfect matching of the labelled half-edges.
pub fn pair_half_edges(degrees: &[usize], rng: &mut RandomStream) -> Result<ConfigGraph> {
    let total: usize = degrees.iter().sum();
    if total % 2 == 1 {
        return Err(Error::OddHalfEdges(total));
    }
    let mut half: Vec<usize> = Vec::with_capacity(total);
    for (v, &d) in degrees.iter().enumerate() {
        half.extend(std::iter::repeat(v).take(d));
    }
    for i in (1..half.len()).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        half.swap(i, j);
    }
    let mut edges = BTreeMap::new();
    for p in half.chunks(2) {
        let (u, v) = (p[0].min(p[1]), p[0].max(p[1]));
        *edges.entry((u, v)).or_insert(0) += 1;
    }
    Ok(ConfigGraph { degrees: degrees.to_vec(), edges })
}

/// Unconditioned configuration graph on m vertices; an odd degree sum is
/// fixed by adding one to the last degree.
pub fn sample_config_graph(law: &DegreeLaw, m: usize, rng: &mut RandomStream) -> Result<ConfigGraph> {
    let mut d = sample_degrees(law, m, rng);
    if d.iter().sum::<usize>() % 2 == 1 {
        *d.last_mut().ok_or_else(|| Error::InvalidParameter("no vertices".into()))? += 1;
    }
    pair_half_edges(&d, rng)
}

fn double_factorial(k: i64) -> BigInt {
    let mut r = BigInt::one();
    let mut j = k;
    while j > 1 {
        r *= j;
        j -= 2;
    }
    r
}

fn factorial(k: usize) -> BigInt {
    (1..=k as i64).fold(BigInt::one(), |a, j| a * j)
}

/// ∏ d_i! / ((Σ d_i − 1)!! · 2^{sl} · ∏ mult!): the probability that a uniform
/// matching of the labelled half-edges produces `g`.
pub fn config_probability(g: &ConfigGraph, degrees: &[usize]) -> Result<Number> {
    let mut deg = vec![0usize; degrees.len()];
    for (&(u, v), &m) in &g.edges {
        if u >= deg.len() || v >= deg.len() {
            return Err(Error::DegreeMismatch(format!("edge {u}-{v} outside {} vertices", deg.len())));
        }
        deg[u] += m;
        deg[v] += m;
    }
    if deg != degrees {
        return Err(Error::DegreeMismatch(format!("graph degrees {deg:?} differ from {degrees:?}")));
    }
    let total: usize = degrees.iter().sum();
    if total % 2 == 1 {
        return Err(Error::OddHalfEdges(total));
    }
    let num = degrees.iter().fold(BigInt::one(), |a, &d| a * factorial(d));
    let mut den = double_factorial(total as i64 - 1) * (BigInt::one() << g.self_loops());
    for &m in g.edges.values() {
        den *= factorial(m);
    }
    Ok(Number::Exact(BigRational::new(num, den)))
}

/// Attempts spent and graphs accepted by the conditioned sampler.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionedRun {
    pub attempts: u64,
    pub accepted: u64,
    pub table: FreqTable,
}

/// One rejection attempt: None when rejected, otherwise the planted graph
/// with internal labels forgotten.
fn conditioned_attempt(s: usize, n: isize, m: usize, law: &DegreeLaw, rng: &mut RandomStream) -> Result<Option<Multigraph>> {
    let leaves = (n + 1) as usize;
    let target = 2 * (m + s - 1);
    let mut degrees = Vec::with_capacity(m);
    let mut sum = 0usize;
    for i in 0..m {
        let d = law.sample(rng);
        if i < leaves {
            if d != 1 {
                return Ok(None);
            }
        } else if d < 3 {
            return Ok(None);
        }
        sum += d;
        let remaining = m - i - 1;
        let min_rest = remaining.saturating_sub(leaves.saturating_sub(i + 1)) * 3 + leaves.saturating_sub(i + 1);
        if sum + min_rest > target {
            return Ok(None);
        }
        degrees.push(d);
    }
    if sum != target {
        return Ok(None);
    }
    let g = pair_half_edges(&degrees, rng)?;
    if !g.is_connected() {
        return Ok(None);
    }
    let mg = g.to_multigraph(n)?;
    debug_assert!(mg.validate_membership(s as i64, n));
    Ok(Some(mg.canonical_form()?))
}

fn check_conditioned(s: usize, n: isize, m: usize) -> Result<()> {
    if n < -1 || (n == -1 && s < 2) {
        return Err(Error::InvalidParameter(format!("unrooted graphs need surplus >= 2 (s={s}, n={n})")));
    }
    if (m as isize) < n + 1 || m == 0 {
        return Err(Error::InvalidParameter(format!("need m >= n + 1 vertices (m={m}, n={n})")));
    }
    Ok(())
}

/// Configuration graph with i.i.d. D^(α) degrees on m vertices conditioned to
/// be connected with surplus s, vertices 0..=n of degree 1 and all others of
/// degree ≥ 3; labels n+1..m−1 are forgotten. Fails after `budget` rejections.
pub fn sample_conditioned(s: usize, n: isize, m: usize, law: &DegreeLaw, budget: u64, rng: &mut RandomStream) -> Result<Multigraph> {
    check_conditioned(s, n, m)?;
    for _ in 0..budget {
        if let Some(g) = conditioned_attempt(s, n, m, law, rng)? {
            return Ok(g);
        }
    }
    Err(Error::BudgetExhausted { attempts: budget, accepted: 0 })
}

/// Runs a fixed number of attempts and tabulates every acceptance.
pub fn conditioned_frequencies(s: usize, n: isize, m: usize, law: &DegreeLaw, attempts: u64, rng: &mut RandomStream) -> Result<ConditionedRun> {
    check_conditioned(s, n, m)?;
    let mut table = FreqTable::new();
    for _ in 0..attempts {
        if let Some(g) = conditioned_attempt(s, n, m, law, rng)? {
            table.add(g.canonical_code()?);
        }
    }
    Ok(ConditionedRun { attempts, accepted: table.total, table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multigraph::build::{int, leaf};
    use crate::stats::tv_distance;
    use crate::weights_enum::exact_distribution;
    use proptest::prelude::*;

    fn a54() -> Alpha {
        Alpha::rational(5, 4).unwrap()
    }

    #[test]
    fn pmf_examples() {
        assert_eq!(degree_pmf(a54(), 2).unwrap(), Number::zero());
        assert_eq!(degree_pmf(a54(), 1).unwrap(), Number::ratio(72, 77));
        assert!(degree_pmf(a54(), 0).is_err());
        let law = DegreeLaw::new(a54()).unwrap();
        for k in 1..30 {
            assert!((law.pmf(k) - degree_pmf(a54(), k).unwrap().to_f64()).abs() < 1e-15);
        }
    }

    #[test]
    fn pmf_sums_to_one_and_moments() {
        for alpha in [a54(), Alpha::rational(3, 2).unwrap(), Alpha::rational(19, 10).unwrap()] {
            let law = DegreeLaw::new(alpha).unwrap();
            assert!(law.tail_mass() < 1e-12);
            assert!((law.total_mass() - 1.0).abs() < 1e-12);
            let a = alpha.value();
            let mean = 2.0 * a * (1.0 + a) / (a * a + a + 2.0);
            assert!((law.mean() - mean).abs() < 1e-9);
            assert!((law.second_moment() / law.mean() - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn brownian_degree_law() {
        let law = DegreeLaw::new(Alpha::rational(2, 1).unwrap()).unwrap();
        assert_eq!(law.pmf(1), 0.75);
        assert!((law.pmf(3) - 0.25).abs() < 1e-15);
        assert_eq!(law.pmf(4), 0.0);
        let mut r = RandomStream::new(1, 0);
        assert!((0..1000).all(|_| matches!(law.sample(&mut r), 1 | 3)));
    }

    #[test]
    fn size_biased_pgf_identity() {
        for alpha in [a54(), Alpha::rational(3, 2).unwrap()] {
            let law = DegreeLaw::new(alpha).unwrap();
            let a = alpha.value();
            for z in [0.3f64, 0.5, 0.8] {
                let expected = z + (1.0 - z).powf(a) / a;
                assert!((law.size_biased_pgf(z) - expected).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sampler_matches_pmf() {
        let law = DegreeLaw::new(a54()).unwrap();
        let mut r = RandomStream::new(2, 0);
        let n = 1_000_000;
        let mut counts = BTreeMap::new();
        for _ in 0..n {
            *counts.entry(law.sample(&mut r)).or_insert(0u64) += 1;
        }
        assert!(!counts.contains_key(&2));
        for k in [1usize, 3, 4, 5, 10] {
            let f = counts.get(&k).copied().unwrap_or(0) as f64 / n as f64;
            let p = law.pmf(k);
            assert!((f - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt() + 1e-6, "{k}: {f} vs {p}");
        }
    }

    #[test]
    fn tail_sampler_matches_conditional_pmf() {
        let law = DegreeLaw::with_cutoff(a54(), 10).unwrap();
        let tail: f64 = law.tail_mass();
        let mut r = RandomStream::new(3, 0);
        let n = 400_000;
        let mut counts = BTreeMap::new();
        for _ in 0..n {
            let k = law.sample_tail(&mut r);
            assert!(k > 10);
            *counts.entry(k).or_insert(0u64) += 1;
        }
        for k in 11..16 {
            let p = law.pmf(k) / tail;
            let f = counts.get(&k).copied().unwrap_or(0) as f64 / n as f64;
            assert!((f - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt(), "{k}: {f} vs {p}");
        }
    }

    #[test]
    fn matching_examples() {
        let mut r = RandomStream::new(4, 0);
        let g = pair_half_edges(&[1, 1], &mut r).unwrap();
        assert_eq!(g.edges, BTreeMap::from([((0, 1), 1)]));
        let g = pair_half_edges(&[4], &mut r).unwrap();
        assert_eq!(g.edges, BTreeMap::from([((0, 0), 2)]));
        assert_eq!(pair_half_edges(&[1, 2], &mut r), Err(Error::OddHalfEdges(3)));
        let n = 300_000;
        let loops = (0..n).filter(|_| pair_half_edges(&[2, 2], &mut r).unwrap().self_loops() == 2).count();
        assert!((loops as f64 / n as f64 - 1.0 / 3.0).abs() < 0.004);
    }

    #[test]
    fn config_probability_examples() {
        let single = ConfigGraph { degrees: vec![1, 1], edges: BTreeMap::from([((0, 1), 1)]) };
        assert_eq!(config_probability(&single, &[1, 1]).unwrap(), Number::one());
        let eight = ConfigGraph { degrees: vec![4], edges: BTreeMap::from([((0, 0), 2)]) };
        assert_eq!(config_probability(&eight, &[4]).unwrap(), Number::one());
        let double = ConfigGraph { degrees: vec![2, 2], edges: BTreeMap::from([((0, 1), 2)]) };
        assert_eq!(config_probability(&double, &[2, 2]).unwrap(), Number::ratio(2, 3));
        assert!(matches!(config_probability(&double, &[3, 1]), Err(Error::DegreeMismatch(_))));
    }

    /// All perfect matchings of the half-edges, as resulting graphs.
    fn all_matchings(degrees: &[usize]) -> Vec<ConfigGraph> {
        let mut half = Vec::new();
        for (v, &d) in degrees.iter().enumerate() {
            half.extend(std::iter::repeat(v).take(d));
        }
        let mut out = Vec::new();
        fn rec(rest: Vec<usize>, acc: &mut Vec<(usize, usize)>, degrees: &[usize], out: &mut Vec<ConfigGraph>) {
            if rest.is_empty() {
                let mut edges = BTreeMap::new();
                for &(u, v) in acc.iter() {
                    *edges.entry((u.min(v), u.max(v))).or_insert(0) += 1;
                }
                out.push(ConfigGraph { degrees: degrees.to_vec(), edges });
                return;
            }
            for j in 1..rest.len() {
                let mut r = rest.clone();
                let b = r.remove(j);
                r.remove(0);
                acc.push((rest[0], b));
                rec(r, acc, degrees, out);
                acc.pop();
            }
        }
        rec(half, &mut Vec::new(), degrees, &mut out);
        out
    }

    #[test]
    fn config_probability_matches_exhaustive_matchings() {
        let mut seqs: Vec<Vec<usize>> = Vec::new();
        fn gen(prefix: &mut Vec<usize>, left: usize, out: &mut Vec<Vec<usize>>) {
            if !prefix.is_empty() && prefix.iter().sum::<usize>() % 2 == 0 {
                out.push(prefix.clone());
            }
            if prefix.len() == 4 {
                return;
            }
            for d in 1..=left {
                prefix.push(d);
                gen(prefix, left - d, out);
                prefix.pop();
            }
        }
        gen(&mut Vec::new(), 8, &mut seqs);
        assert!(seqs.len() > 50);
        for d in seqs {
            let ms = all_matchings(&d);
            let total = ms.len() as i64;
            let mut freq: BTreeMap<Vec<((usize, usize), usize)>, (i64, ConfigGraph)> = BTreeMap::new();
            for g in ms {
                let key: Vec<_> = g.edges.iter().map(|(&k, &v)| (k, v)).collect();
                freq.entry(key).or_insert((0, g)).0 += 1;
            }
            let mut sum = Number::zero();
            for (_, (k, g)) in freq {
                let p = config_probability(&g, &d).unwrap();
                assert_eq!(p, Number::ratio(k, total), "{d:?}");
                sum = &sum + &p;
            }
            assert_eq!(sum, Number::one());
        }
    }

    #[test]
    fn components_and_surplus() {
        let g = ConfigGraph { degrees: vec![2, 2, 1, 1], edges: BTreeMap::from([((0, 1), 2), ((2, 3), 1)]) };
        let c = g.components();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].surplus, 1);
        assert_eq!(c[1].surplus, 0);
        assert!(!g.is_connected());
    }

    #[test]
    fn conditioned_star() {
        let law = DegreeLaw::new(a54()).unwrap();
        let mut r = RandomStream::new(5, 0);
        let star = Multigraph::planted(2, 1, [(leaf(0), int(0), 1), (leaf(1), int(0), 1), (leaf(2), int(0), 1)])
            .unwrap()
            .canonical_form()
            .unwrap();
        for _ in 0..20 {
            assert_eq!(sample_conditioned(0, 2, 4, &law, 10_000_000, &mut r).unwrap(), star);
        }
    }

    #[test]
    fn conditioned_budget_and_domain() {
        let law = DegreeLaw::new(a54()).unwrap();
        let mut r = RandomStream::new(6, 0);
        assert!(matches!(sample_conditioned(2, 0, 3, &law, 1, &mut r), Err(Error::BudgetExhausted { attempts: 1, .. }) | Ok(_)));
        assert!(sample_conditioned(1, -1, 3, &law, 10, &mut r).is_err());
        assert!(sample_conditioned(0, 3, 2, &law, 10, &mut r).is_err());
    }

    #[test]
    fn conditioned_matches_vertex_count_conditioned_law() {
        let alpha = a54();
        let law = DegreeLaw::new(alpha).unwrap();
        let exact = exact_distribution(1, 1, &WeightSeq::new(alpha)).unwrap();
        let cond = exact.condition(|e| e.graph.vertex_count() == 4).unwrap();
        assert!(cond.len() > 1);
        let mut r = RandomStream::new(7, 0);
        let run = conditioned_frequencies(1, 1, 4, &law, 5_000_000, &mut r).unwrap();
        assert!(run.accepted > 5_000, "{}", run.accepted);
        for c in run.table.counts.keys() {
            assert!(Multigraph::from_code(c).unwrap().validate_membership(1, 1));
        }
        assert!(tv_distance(&run.table, &cond) < 0.03, "{}", tv_distance(&run.table, &cond));
    }

    #[test]
    fn conditioned_single_internal_vertex() {
        let law = DegreeLaw::new(a54()).unwrap();
        let mut r = RandomStream::new(8, 0);
        let run = conditioned_frequencies(2, 0, 2, &law, 200_000, &mut r).unwrap();
        let exact = exact_distribution(2, 0, &WeightSeq::new(a54())).unwrap();
        let cond = exact.condition(|e| e.graph.internal_count() == 1).unwrap();
        assert_eq!(cond.len(), 1);
        assert!(run.accepted > 0);
        assert_eq!(tv_distance(&run.table, &cond), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]
        #[test]
        fn matching_preserves_degrees(ds in proptest::collection::vec(1usize..6, 1..8), seed in 0u64..10_000) {
            let mut d = ds.clone();
            if d.iter().sum::<usize>() % 2 == 1 {
                d[0] += 1;
            }
            let mut r = RandomStream::new(seed, 0);
            let g = pair_half_edges(&d, &mut r).unwrap();
            let p = config_probability(&g, &d).unwrap();
            prop_assert!(p.to_f64() > 0.0 && p.to_f64() <= 1.0);
            prop_assert_eq!(g.edge_count() * 2, d.iter().sum::<usize>());
            let comps = g.components();
            prop_assert_eq!(comps.iter().map(|c| c.vertices.len()).sum::<usize>(), d.len());
        }

        #[test]
        fn conditioned_output_is_member(seed in 0u64..200) {
            let law = DegreeLaw::new(Alpha::rational(3, 2).unwrap()).unwrap();
            let mut r = RandomStream::new(seed, 9);
            let g = sample_conditioned(1, 1, 4, &law, 10_000_000, &mut r).unwrap();
            prop_assert!(g.validate_membership(1, 1));
        }
    }
}
