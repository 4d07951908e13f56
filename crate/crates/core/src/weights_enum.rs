//! Marchal weights, exhaustive enumeration of 𝕄_{s,n}, and exact marginal laws.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::multigraph::{CanonicalCode, Multigraph, Vertex};
use crate::number::{Alpha, Number};

/// Upper limit on internal vertices explored by the enumerator.
pub const MAX_ENUM_INTERNAL: usize = 7;

/// The sequence w_0 = 1, w_1 = 0, w_2 = α − 1, w_{k+1} = (k − α)·w_k.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightSeq {
    pub alpha: Alpha,
}

impl WeightSeq {
    pub fn new(alpha: Alpha) -> Self {
        Self { alpha }
    }

    pub fn weight(&self, k: usize) -> Number {
        marchal_weight(k, self)
    }

    pub fn weight_f64(&self, k: usize) -> f64 {
        let a = self.alpha.value();
        match k {
            0 => 1.0,
            1 => 0.0,
            _ => (2..k).fold(a - 1.0, |w, j| w * (j as f64 - a)),
        }
    }
}

/// w_k for the given weight sequence; exact when α is rational.
pub fn marchal_weight(k: usize, ws: &WeightSeq) -> Number {
    let a = ws.alpha.number();
    match k {
        0 => Number::one(),
        1 => Number::zero(),
        _ => (2..k).fold(&a - &Number::one(), |w, j| w * (&Number::int(j as i64) - &a)),
    }
}

/// Largest |E| over 𝕄_{s,n}: with I internal vertices of degree ≥ 3 one has
/// 3I ≤ 2|E| − L and |E| = s + L + I − 1, so I ≤ 2s + L − 2.
pub fn max_edges(s: usize, n: isize) -> usize {
    let leaves = (n + 1) as usize;
    let max_internal = (2 * s + leaves).saturating_sub(2);
    (s + leaves + max_internal).saturating_sub(1)
}

fn max_internal(s: usize, n: isize) -> usize {
    (2 * s + (n + 1) as usize).saturating_sub(2)
}

/// Nonincreasing sequences of `parts` integers ≥ 3 summing to `total`.
fn degree_sequences(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, parts: usize, cap: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 0 {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        if left < 3 * parts {
            return;
        }
        let hi = cap.min(left - 3 * (parts - 1));
        for d in (3..=hi).rev() {
            cur.push(d);
            rec(left - d, parts - 1, d, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, parts, total, &mut Vec::new(), &mut out);
    out
}

/// Calls `emit` with every labelled loop/edge multiset on internal vertices
/// realizing the residual degrees `r`.
fn internal_multigraphs(r: &mut [usize], emit: &mut dyn FnMut(&[(usize, usize, usize)])) {
    fn vertex(i: usize, r: &mut [usize], edges: &mut Vec<(usize, usize, usize)>, emit: &mut dyn FnMut(&[(usize, usize, usize)])) {
        if i == r.len() {
            emit(edges);
            return;
        }
        let ri = r[i];
        for l in 0..=ri / 2 {
            r[i] -= 2 * l;
            if l > 0 {
                edges.push((i, i, l));
            }
            spread(i, i + 1, r, edges, emit);
            if l > 0 {
                edges.pop();
            }
            r[i] += 2 * l;
        }
    }
    fn spread(i: usize, j: usize, r: &mut [usize], edges: &mut Vec<(usize, usize, usize)>, emit: &mut dyn FnMut(&[(usize, usize, usize)])) {
        if r[i] == 0 {
            vertex(i + 1, r, edges, emit);
            return;
        }
        if j == r.len() {
            return;
        }
        for m in (0..=r[i].min(r[j])).rev() {
            r[i] -= m;
            r[j] -= m;
            if m > 0 {
                edges.push((i, j, m));
            }
            spread(i, j + 1, r, edges, emit);
            if m > 0 {
                edges.pop();
            }
            r[i] += m;
            r[j] += m;
        }
    }
    vertex(0, r, &mut Vec::new(), emit);
}

/// One representative per isomorphism class of 𝕄_{s,n} (`n = −1` for the
/// unrooted space), in canonical form and sorted by canonical code.
pub fn enumerate_space(s: usize, n: isize) -> Result<Vec<Multigraph>> {
    if n < -1 {
        return Err(Error::InvalidParameter(format!("n = {n} < -1")));
    }
    let leaves = (n + 1) as usize;
    let imax = max_internal(s, n);
    if imax > MAX_ENUM_INTERNAL {
        return Err(Error::SizeLimit(format!(
            "enumeration of M_{{{s},{n}}} needs up to {imax} internal vertices (limit {MAX_ENUM_INTERNAL})"
        )));
    }
    let bound = max_edges(s, n);
    let mut found: BTreeMap<CanonicalCode, Multigraph> = BTreeMap::new();
    if s == 0 && leaves == 2 {
        let g = Multigraph::new(1, 0, [(Vertex::Leaf(0), Vertex::Leaf(1), 1)])?;
        found.insert(g.canonical_code()?, g);
    }
    for internal in 1..=imax {
        let e = s + leaves + internal - 1;
        let total = 2 * e - leaves;
        for degs in degree_sequences(total, internal) {
            // Attach each leaf to an internal vertex, odometer style.
            let mut target = vec![0usize; leaves];
            loop {
                let mut r = degs.clone();
                let mut ok = true;
                for &t in &target {
                    if r[t] == 0 {
                        ok = false;
                        break;
                    }
                    r[t] -= 1;
                }
                if ok {
                    let mut emit = |inner: &[(usize, usize, usize)]| {
                        let edges = target
                            .iter()
                            .enumerate()
                            .map(|(l, &t)| (Vertex::Leaf(l), Vertex::Internal(t), 1))
                            .chain(inner.iter().map(|&(a, b, m)| (Vertex::Internal(a), Vertex::Internal(b), m)));
                        let g = match Multigraph::new(n, internal, edges) {
                            Ok(g) => g,
                            Err(_) => return,
                        };
                        if g.validate_membership(s as i64, n) {
                            if let (Ok(code), Ok(form)) = (g.canonical_code(), g.canonical_form()) {
                                found.entry(code).or_insert(form);
                            }
                        }
                    };
                    internal_multigraphs(&mut r, &mut emit);
                }
                let mut pos = 0;
                while pos < leaves {
                    target[pos] += 1;
                    if target[pos] < internal {
                        break;
                    }
                    target[pos] = 0;
                    pos += 1;
                }
                if pos == leaves {
                    break;
                }
            }
        }
    }
    let out: Vec<Multigraph> = found.into_values().collect();
    for g in &out {
        assert!(g.edge_count() <= bound, "edge bound violated for M_{{{s},{n}}}");
    }
    Ok(out)
}

/// One row of an exact marginal law.
#[derive(Clone, Debug, Serialize)]
pub struct DistEntry {
    pub graph: Multigraph,
    pub code: CanonicalCode,
    pub sym: u64,
    pub sl: usize,
    pub mult_product: u64,
    pub weight_product: Number,
    pub prob: Number,
}

/// A law on isomorphism classes of 𝕄_{s,n}.
#[derive(Clone, Debug, Serialize)]
pub struct ExactDistribution {
    pub s: usize,
    pub n: isize,
    pub alpha: Option<Alpha>,
    pub entries: Vec<DistEntry>,
}

impl ExactDistribution {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, code: &CanonicalCode) -> Option<&DistEntry> {
        self.entries.iter().find(|e| &e.code == code)
    }

    pub fn prob_f64(&self, code: &CanonicalCode) -> f64 {
        self.get(code).map(|e| e.prob.to_f64()).unwrap_or(0.0)
    }

    pub fn total(&self) -> Number {
        self.entries.iter().map(|e| e.prob.clone()).sum()
    }

    /// The law conditioned on a predicate, renormalized.
    pub fn condition(&self, keep: impl Fn(&DistEntry) -> bool) -> Result<Self> {
        let kept: Vec<DistEntry> = self.entries.iter().filter(|e| keep(e)).cloned().collect();
        let z: Number = kept.iter().map(|e| e.prob.clone()).sum();
        if z.is_zero() {
            return Err(Error::InvalidParameter("conditioning event has probability zero".into()));
        }
        let entries = kept.into_iter().map(|mut e| {
            e.prob = &e.prob / &z;
            e
        });
        Ok(Self { entries: entries.collect(), ..self.clone() })
    }

    /// Index of each entry keyed by canonical code.
    pub fn index(&self) -> BTreeMap<CanonicalCode, usize> {
        self.entries.iter().enumerate().map(|(i, e)| (e.code.clone(), i)).collect()
    }
}

fn compare_numbers(a: &Number, b: &Number) -> Ordering {
    match (a.exact(), b.exact()) {
        (Some(x), Some(y)) => x.cmp(y),
        _ => a.to_f64().partial_cmp(&b.to_f64()).unwrap_or(Ordering::Equal),
    }
}

fn build_distribution(
    s: usize,
    n: isize,
    alpha: Option<Alpha>,
    graphs: Vec<Multigraph>,
    weight: impl Fn(&Multigraph) -> Number,
) -> Result<ExactDistribution> {
    let mut entries = Vec::with_capacity(graphs.len());
    for g in graphs {
        let sym = g.symmetry_count()?;
        let sl = g.self_loops();
        let mult_product = g.mult_factorial_product();
        let weight_product = weight(&g);
        let denom = Number::int(sym as i64) * Number::int(1i64 << sl) * Number::int(mult_product as i64);
        let prob = &weight_product / &denom;
        entries.push(DistEntry { code: g.canonical_code()?, graph: g, sym, sl, mult_product, weight_product, prob });
    }
    let z: Number = entries.iter().map(|e| e.prob.clone()).sum();
    if z.is_zero() {
        return Err(Error::InvalidParameter(format!("M_{{{s},{n}}} carries no mass")));
    }
    for e in &mut entries {
        e.prob = &e.prob / &z;
    }
    entries.sort_by(|a, b| compare_numbers(&b.prob, &a.prob).then_with(|| a.code.cmp(&b.code)));
    Ok(ExactDistribution { s, n, alpha, entries })
}

/// P(G) ∝ ∏ w_{deg(v)−1} / (|Sym(G)|·2^{sl(G)}·∏ mult(e)!) over 𝕄_{s,n}.
pub fn exact_distribution(s: usize, n: isize, ws: &WeightSeq) -> Result<ExactDistribution> {
    let graphs = enumerate_space(s, n)?;
    build_distribution(s, n, Some(ws.alpha), graphs, |g| {
        g.internal_degrees().into_iter().map(|d| ws.weight(d - 1)).product()
    })
}

/// The 3-regular specialization: P(G) ∝ 1/(|Sym|·2^{sl}·∏ mult!) on graphs
/// whose internal vertices all have degree 3, zero elsewhere.
pub fn brownian_distribution(s: usize, n: isize) -> Result<ExactDistribution> {
    let graphs = enumerate_space(s, n)?;
    build_distribution(s, n, None, graphs, |g| {
        if g.internal_degrees().iter().all(|&d| d == 3) {
            Number::one()
        } else {
            Number::zero()
        }
    })
}

/// |ψ^{-1}(G)| = ∏ (deg(v) − 1)! / (|Sym|·2^{sl}·∏ mult!), for planted graphs.
pub fn ordering_count(g: &Multigraph) -> Result<u64> {
    if g.n() < 0 {
        return Err(Error::Unsupported("cyclic-ordering count is only valid for planted graphs".into()));
    }
    let num: u128 = g
        .internal_degrees()
        .iter()
        .map(|&d| (1..d as u128).product::<u128>())
        .product();
    let den = g.symmetry_count()? as u128 * (1u128 << g.self_loops()) * g.mult_factorial_product() as u128;
    if num % den != 0 {
        return Err(Error::InvalidGraph("ordering count is not an integer".into()));
    }
    Ok((num / den) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multigraph::build::{int, leaf};

    fn a54() -> WeightSeq {
        WeightSeq::new(Alpha::rational(5, 4).unwrap())
    }

    #[test]
    fn weight_examples() {
        let ws = a54();
        assert_eq!(ws.weight(0), Number::one());
        assert_eq!(ws.weight(1), Number::zero());
        assert_eq!(ws.weight(2), Number::ratio(1, 4));
        assert_eq!(ws.weight(3), Number::ratio(3, 16));
        assert_eq!(ws.weight(4), Number::ratio(21, 64));
        assert!((ws.weight_f64(4) - 21.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn weights_vanish_at_two() {
        let ws = WeightSeq::new(Alpha::rational(2, 1).unwrap());
        assert_eq!(ws.weight(2), Number::one());
        for k in 3..8 {
            assert!(ws.weight(k).is_zero());
        }
    }

    #[test]
    fn space_sizes() {
        assert_eq!(enumerate_space(2, 0).unwrap().len(), 7);
        assert_eq!(enumerate_space(0, 1).unwrap().len(), 1);
        assert_eq!(enumerate_space(2, -1).unwrap().len(), 3);
        assert_eq!(enumerate_space(1, 0).unwrap().len(), 1);
        assert_eq!(enumerate_space(0, 2).unwrap().len(), 1);
        assert!(enumerate_space(1, -1).unwrap().is_empty());
    }

    #[test]
    fn enumerated_graphs_are_distinct_members() {
        for (s, n) in [(0, 3), (1, 1), (1, 2), (2, 0), (2, 1), (3, -1)] {
            let space = enumerate_space(s, n).unwrap();
            let mut codes: Vec<_> = space.iter().map(|g| g.canonical_code().unwrap()).collect();
            for g in &space {
                assert!(g.validate_membership(s as i64, n));
                assert!(g.edge_count() <= max_edges(s, n));
            }
            codes.sort();
            codes.dedup();
            assert_eq!(codes.len(), space.len());
        }
    }

    #[test]
    fn edge_bound_is_attained() {
        for (s, n) in [(1, 0), (2, 0), (1, 2), (2, 1)] {
            let space = enumerate_space(s, n).unwrap();
            assert_eq!(space.iter().map(|g| g.edge_count()).max().unwrap(), max_edges(s, n));
        }
    }

    #[test]
    fn tree_star_has_probability_one() {
        let d = exact_distribution(0, 2, &a54()).unwrap();
        assert_eq!(d.len(), 1);
        assert!(d.entries[0].prob.is_one());
        let b = brownian_distribution(0, 2).unwrap();
        assert!(b.entries[0].prob.is_one());
    }

    #[test]
    fn distributions_sum_to_one_exactly() {
        for (s, n) in [(1, 2), (2, 1), (2, -1), (3, 0)] {
            let d = exact_distribution(s, n, &a54()).unwrap();
            assert!(d.total().is_one());
        }
    }

    #[test]
    fn unrooted_kernel_law_by_hand() {
        // figure-eight: w_3 / (1·4·2); theta: w_2² / (2·1·6); dumbbell: w_2² / (2·4·1)
        let d = exact_distribution(2, -1, &a54()).unwrap();
        let fig = Multigraph::new(-1, 1, [(int(0), int(0), 2)]).unwrap();
        let theta = Multigraph::new(-1, 2, [(int(0), int(1), 3)]).unwrap();
        let bell = Multigraph::new(-1, 2, [(int(0), int(0), 1), (int(0), int(1), 1), (int(1), int(1), 1)]).unwrap();
        let raw = [3.0 / 16.0 / 8.0, 1.0 / 16.0 / 12.0, 1.0 / 16.0 / 8.0];
        let z: f64 = raw.iter().sum();
        for (g, r) in [fig, theta, bell].iter().zip(raw) {
            let p = d.prob_f64(&g.canonical_code().unwrap());
            assert!((p - r / z).abs() < 1e-14);
        }
        assert_eq!(d.get(&Multigraph::new(-1, 1, [(int(0), int(0), 2)]).unwrap().canonical_code().unwrap()).unwrap().prob, Number::ratio(9, 14));
    }

    #[test]
    fn brownian_matches_alpha_two() {
        for (s, n) in [(2, 0), (1, 2), (2, 1)] {
            let b = brownian_distribution(s, n).unwrap();
            let e = exact_distribution(s, n, &WeightSeq::new(Alpha::rational(2, 1).unwrap())).unwrap();
            for row in &b.entries {
                assert_eq!(row.prob, e.get(&row.code).unwrap().prob);
            }
        }
    }

    #[test]
    fn ordering_count_examples() {
        let fig = Multigraph::planted(0, 1, [(leaf(0), int(0), 1), (int(0), int(0), 2)]).unwrap();
        assert_eq!(ordering_count(&fig).unwrap(), 3);
        let star = Multigraph::planted(2, 1, [(leaf(0), int(0), 1), (leaf(1), int(0), 1), (leaf(2), int(0), 1)]).unwrap();
        assert_eq!(ordering_count(&star).unwrap(), 2);
        let pair = Multigraph::planted(
            0,
            3,
            [(leaf(0), int(0), 1), (int(0), int(1), 1), (int(0), int(2), 1), (int(1), int(2), 2)],
        )
        .unwrap();
        assert_eq!(ordering_count(&pair).unwrap(), 2);
        let unrooted = Multigraph::new(-1, 1, [(int(0), int(0), 2)]).unwrap();
        assert!(ordering_count(&unrooted).is_err());
    }

    #[test]
    fn too_large_is_reported() {
        assert!(matches!(enumerate_space(6, 0), Err(Error::SizeLimit(_))));
    }
}
