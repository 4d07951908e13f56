//! Marchal's recursive leaf-attachment algorithm on multigraphs and ordered trees.

use std::collections::{BTreeMap, VecDeque};

use crate::error::{Error, Result};
use crate::multigraph::{Multigraph, Vertex};
use crate::number::{Alpha, Number};
use crate::rng::RandomStream;

/// Integer weights (edge, vertex base, per extra degree) scaled by the
/// denominator of α, or `None` when α is a float.
fn scaled_weights(alpha: Alpha) -> Option<(i64, i64, i64)> {
    alpha.ratio().map(|(p, q)| (p - q, 2 * q - p, q))
}

/// A multigraph together with the parameter driving its growth.
#[derive(Clone, Debug, PartialEq)]
pub struct MarchalState {
    pub graph: Multigraph,
    pub alpha: Alpha,
    pub steps: usize,
}

/// What a single Marchal step selects.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Choice {
    /// One copy of the edge `{u, v}`.
    Edge(Vertex, Vertex),
    /// An internal vertex.
    Vertex(Vertex),
}

impl MarchalState {
    pub fn new(graph: Multigraph, alpha: Alpha) -> Result<Self> {
        graph.validate()?;
        Ok(Self { graph, alpha, steps: 0 })
    }

    pub fn surplus(&self) -> i64 {
        self.graph.surplus()
    }

    pub fn n(&self) -> isize {
        self.graph.n()
    }

    /// Every selectable edge pair (weight α − 1 per copy) with its multiplicity.
    pub fn edge_weights(&self) -> Vec<((Vertex, Vertex), Number)> {
        let w = &self.alpha.number() - &Number::one();
        self.graph.edges().map(|(u, v, m)| ((u, v), &w * &Number::int(m as i64))).collect()
    }

    /// Internal vertices with weight deg(v) − 1 − α.
    pub fn vertex_weights(&self) -> Vec<(Vertex, Number)> {
        let a = self.alpha.number();
        let deg = self.graph.degrees();
        (0..self.graph.internal_count())
            .map(|i| {
                let v = Vertex::Internal(i);
                (v, &Number::int(deg[self.graph.index(v)] as i64 - 1) - &a)
            })
            .collect()
    }

    /// Σ over edges and internal vertices of their weights.
    pub fn total_weight(&self) -> Number {
        let e: Number = self.edge_weights().into_iter().map(|(_, w)| w).sum();
        let v: Number = self.vertex_weights().into_iter().map(|(_, w)| w).sum();
        e + v
    }

    /// α(s + n) + s − 1, the value the total weight must equal.
    pub fn expected_total_weight(&self) -> Number {
        let s = Number::int(self.surplus());
        let n = Number::int(self.n() as i64);
        &(&self.alpha.number() * &(&s + &n)) + &(&s - &Number::one())
    }

    /// Weighted list of choices: exact integer weights for rational α,
    /// floats otherwise.
    fn choices(&self) -> (Vec<Choice>, ChoiceWeights) {
        let deg = self.graph.degrees();
        let mut choices = Vec::new();
        match scaled_weights(self.alpha) {
            Some((we, _, q)) => {
                let p = self.alpha.ratio().map(|r| r.0).unwrap_or(0);
                let mut w = Vec::new();
                for (u, v, m) in self.graph.edges() {
                    choices.push(Choice::Edge(u, v));
                    w.push(we * m as i64);
                }
                for i in 0..self.graph.internal_count() {
                    let v = Vertex::Internal(i);
                    choices.push(Choice::Vertex(v));
                    w.push((deg[self.graph.index(v)] as i64 - 1) * q - p);
                }
                (choices, ChoiceWeights::Exact(w))
            }
            None => {
                let a = self.alpha.value();
                let mut w = Vec::new();
                for (u, v, m) in self.graph.edges() {
                    choices.push(Choice::Edge(u, v));
                    w.push((a - 1.0) * m as f64);
                }
                for i in 0..self.graph.internal_count() {
                    let v = Vertex::Internal(i);
                    choices.push(Choice::Vertex(v));
                    w.push(deg[self.graph.index(v)] as f64 - 1.0 - a);
                }
                (choices, ChoiceWeights::Float(w))
            }
        }
    }

    /// Applies a choice, attaching leaf n + 1.
    pub fn apply(&self, choice: Choice) -> Result<Self> {
        let mut g = self.graph.clone();
        match choice {
            Choice::Vertex(v) => {
                if !matches!(v, Vertex::Internal(i) if i < g.internal_count()) {
                    return Err(Error::UnknownVertex(v.to_string()));
                }
                let leaf = g.add_leaf();
                g.add_edge_copies(v, leaf, 1);
            }
            Choice::Edge(u, v) => {
                g.remove_edge_copy(u, v)?;
                let w = g.add_internal();
                let leaf = g.add_leaf();
                g.add_edge_copies(u, w, 1);
                g.add_edge_copies(w, v, 1);
                g.add_edge_copies(w, leaf, 1);
            }
        }
        Ok(Self { graph: g, alpha: self.alpha, steps: self.steps + 1 })
    }

    /// Exact one-step transition law over choices.
    pub fn choice_law(&self) -> Vec<(Choice, Number)> {
        let total = self.total_weight();
        let a = self.alpha.number();
        let deg = self.graph.degrees();
        let mut out: Vec<(Choice, Number)> = self
            .graph
            .edges()
            .map(|(u, v, m)| (Choice::Edge(u, v), &(&a - &Number::one()) * &Number::int(m as i64)))
            .collect();
        for i in 0..self.graph.internal_count() {
            let v = Vertex::Internal(i);
            out.push((Choice::Vertex(v), &Number::int(deg[self.graph.index(v)] as i64 - 1) - &a));
        }
        out.into_iter().map(|(c, w)| (c, &w / &total)).collect()
    }

    /// Draws a choice with probability proportional to its weight.
    pub fn sample_choice(&self, rng: &mut RandomStream) -> Result<Choice> {
        let (choices, weights) = self.choices();
        let idx = weights.sample(rng).ok_or_else(|| Error::InvalidGraph("no positive weight to choose".into()))?;
        Ok(choices[idx])
    }
}

enum ChoiceWeights {
    Exact(Vec<i64>),
    Float(Vec<f64>),
}

impl ChoiceWeights {
    fn sample(&self, rng: &mut RandomStream) -> Option<usize> {
        match self {
            ChoiceWeights::Exact(w) => {
                let total: i64 = w.iter().sum();
                if total <= 0 {
                    return None;
                }
                let mut r = rng.below(total as u64) as i64;
                for (i, &x) in w.iter().enumerate() {
                    if r < x {
                        return Some(i);
                    }
                    r -= x;
                }
                None
            }
            ChoiceWeights::Float(w) => {
                let total: f64 = w.iter().sum();
                if total <= 0.0 {
                    return None;
                }
                let mut r = rng.uniform() * total;
                let mut last = None;
                for (i, &x) in w.iter().enumerate() {
                    if x > 0.0 {
                        if r < x {
                            return Some(i);
                        }
                        r -= x;
                        last = Some(i);
                    }
                }
                last
            }
        }
    }
}

/// One Marchal step: pick an edge (weight α − 1) or an internal vertex
/// (weight deg − 1 − α) and attach a new edge-leaf labelled n + 1.
pub fn marchal_graph_step(st: &MarchalState, rng: &mut RandomStream) -> Result<MarchalState> {
    let choice = st.sample_choice(rng)?;
    st.apply(choice)
}

/// The trajectory `start, step(start), …` of length `steps + 1`.
pub fn grow(start: &MarchalState, steps: usize, rng: &mut RandomStream) -> Result<Vec<MarchalState>> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(start.clone());
    for _ in 0..steps {
        let next = marchal_graph_step(out.last().expect("nonempty"), rng)?;
        out.push(next);
    }
    Ok(out)
}

/// Removes the root leaf and its edge, contracting a resulting degree-2 vertex.
pub fn erase_root(g: &Multigraph) -> Result<Multigraph> {
    if g.surplus() < 2 || g.n() != 0 {
        return Err(Error::InvalidParameter("erase_root needs s >= 2 and n = 0".into()));
    }
    let mut h = g.clone();
    let x = h.pop_leaf()?;
    if let Vertex::Internal(i) = x {
        if h.degree(x)? == 2 {
            h.contract_degree_two(i)?;
        }
    }
    h.validate()?;
    Ok(h)
}

/// Pairwise leaf distances (in edges) divided by n^{1−1/α}.
pub fn rescaled_leaf_metric(g: &Multigraph, n: usize, alpha: f64) -> Vec<Vec<f64>> {
    let scale = (n as f64).powf(1.0 - 1.0 / alpha);
    (0..g.leaf_count())
        .map(|i| {
            let d = g.hop_distances(Vertex::Leaf(i));
            (0..g.leaf_count()).map(|j| d[j].map(|x| x as f64 / scale).unwrap_or(f64::INFINITY)).collect()
        })
        .collect()
}

/// Distances from the root leaf to every leaf, divided by n^{1−1/α}.
pub fn rescaled_root_distances(g: &Multigraph, n: usize, alpha: f64) -> Vec<f64> {
    let scale = (n as f64).powf(1.0 - 1.0 / alpha);
    let d = g.hop_distances(Vertex::Leaf(0));
    (0..g.leaf_count()).map(|j| d[j].map(|x| x as f64 / scale).unwrap_or(f64::INFINITY)).collect()
}

/// Array-backed Marchal growth with constant-time weighted selection, for
/// runs with thousands of leaves.
///
/// The weight deg − 1 − α of an internal vertex is split as (2 − α) plus one
/// unit per degree above 3, so a choice is a uniform pick inside one of three
/// pools: edge copies, internal vertices, degree excess tokens.
#[derive(Clone, Debug)]
pub struct MarchalGrower {
    alpha: Alpha,
    edges: Vec<(u32, u32)>,
    leaf_vertex: Vec<u32>,
    is_leaf: Vec<bool>,
    internal: Vec<u32>,
    excess: Vec<u32>,
}

impl MarchalGrower {
    pub fn new(g: &Multigraph, alpha: Alpha) -> Result<Self> {
        g.validate()?;
        let deg = g.degrees();
        let mut edges = Vec::new();
        for (u, v, m) in g.edges() {
            for _ in 0..m {
                edges.push((g.index(u) as u32, g.index(v) as u32));
            }
        }
        let mut excess = Vec::new();
        let mut internal = Vec::new();
        for i in 0..g.internal_count() {
            let idx = g.leaf_count() + i;
            internal.push(idx as u32);
            for _ in 3..deg[idx] {
                excess.push(idx as u32);
            }
        }
        Ok(Self {
            alpha,
            edges,
            leaf_vertex: (0..g.leaf_count() as u32).collect(),
            is_leaf: (0..g.vertex_count()).map(|i| i < g.leaf_count()).collect(),
            internal,
            excess,
        })
    }

    /// Largest leaf label.
    pub fn n(&self) -> isize {
        self.leaf_vertex.len() as isize - 1
    }

    pub fn step(&mut self, rng: &mut RandomStream) {
        let ne = self.edges.len() as u64;
        let ni = self.internal.len() as u64;
        let nx = self.excess.len() as u64;
        enum Pick {
            Edge(usize),
            Vertex(u32),
        }
        let pick = match scaled_weights(self.alpha) {
            Some((we, wv, wx)) => {
                let (we, wv, wx) = (we as u64, wv as u64, wx as u64);
                let mut r = rng.below(ne * we + ni * wv + nx * wx);
                if r < ne * we {
                    Pick::Edge((r / we) as usize)
                } else {
                    r -= ne * we;
                    if r < ni * wv {
                        Pick::Vertex(self.internal[(r / wv) as usize])
                    } else {
                        Pick::Vertex(self.excess[((r - ni * wv) / wx) as usize])
                    }
                }
            }
            None => {
                let a = self.alpha.value();
                let (we, wv) = (a - 1.0, 2.0 - a);
                let te = ne as f64 * we;
                let tv = ni as f64 * wv;
                let r = rng.uniform() * (te + tv + nx as f64);
                if r < te {
                    Pick::Edge(((r / we) as usize).min(ne as usize - 1))
                } else if r < te + tv {
                    Pick::Vertex(self.internal[(((r - te) / wv) as usize).min(ni as usize - 1)])
                } else {
                    Pick::Vertex(self.excess[((r - te - tv) as usize).min(nx as usize - 1)])
                }
            }
        };
        let leaf = self.is_leaf.len() as u32;
        self.is_leaf.push(true);
        self.leaf_vertex.push(leaf);
        match pick {
            Pick::Edge(i) => {
                let (u, v) = self.edges[i];
                let w = self.is_leaf.len() as u32;
                self.is_leaf.push(false);
                self.edges[i] = (u, w);
                self.edges.push((w, v));
                self.edges.push((w, leaf));
                self.internal.push(w);
            }
            Pick::Vertex(v) => {
                self.edges.push((v, leaf));
                self.excess.push(v);
            }
        }
    }

    /// Edge-count distances from the root leaf to leaves `0..=n`.
    pub fn root_hop_distances(&self) -> Vec<usize> {
        let nv = self.is_leaf.len();
        let mut adj = vec![Vec::new(); nv];
        for &(u, v) in &self.edges {
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        let mut dist = vec![usize::MAX; nv];
        let root = self.leaf_vertex[0] as usize;
        dist[root] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            for &y in &adj[x] {
                if dist[y as usize] == usize::MAX {
                    dist[y as usize] = dist[x] + 1;
                    queue.push_back(y as usize);
                }
            }
        }
        self.leaf_vertex.iter().map(|&l| dist[l as usize]).collect()
    }

    /// Converts back to a multigraph (internal vertices numbered by creation order).
    pub fn to_multigraph(&self) -> Result<Multigraph> {
        let mut internal_id = vec![usize::MAX; self.is_leaf.len()];
        let mut leaf_id = vec![usize::MAX; self.is_leaf.len()];
        for (label, &v) in self.leaf_vertex.iter().enumerate() {
            leaf_id[v as usize] = label;
        }
        let mut k = 0;
        for (v, &leaf) in self.is_leaf.iter().enumerate() {
            if !leaf {
                internal_id[v] = k;
                k += 1;
            }
        }
        let vert = |v: u32| {
            if self.is_leaf[v as usize] {
                Vertex::Leaf(leaf_id[v as usize])
            } else {
                Vertex::Internal(internal_id[v as usize])
            }
        };
        let mut counts: BTreeMap<(Vertex, Vertex), usize> = BTreeMap::new();
        for &(u, v) in &self.edges {
            let (a, b) = (vert(u), vert(v));
            *counts.entry(if a <= b { (a, b) } else { (b, a) }).or_insert(0) += 1;
        }
        Multigraph::new(self.n(), k, counts.into_iter().map(|((a, b), m)| (a, b, m)))
    }
}

/// Planted ordered tree with labelled leaves; node 0 is the root leaf.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderedTree {
    nodes: Vec<TreeNode>,
    alpha: Alpha,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct TreeNode {
    parent: Option<usize>,
    children: Vec<usize>,
    label: Option<usize>,
}

impl OrderedTree {
    /// The planted edge joining the root to leaf 1.
    pub fn planted_edge(alpha: Alpha) -> Self {
        Self {
            nodes: vec![
                TreeNode { parent: None, children: vec![1], label: Some(0) },
                TreeNode { parent: Some(0), children: vec![], label: Some(1) },
            ],
            alpha,
        }
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    /// Number of non-root leaves.
    pub fn n(&self) -> usize {
        self.nodes.iter().filter(|x| x.label.is_some()).count() - 1
    }

    fn is_internal(&self, i: usize) -> bool {
        self.nodes[i].label.is_none()
    }

    /// Σ edges (α − 1) + Σ internal (deg − 1 − α), which equals αn − 1.
    pub fn total_weight(&self) -> Number {
        let a = self.alpha.number();
        let edges = Number::int(self.nodes.len() as i64 - 1);
        let mut total = &edges * &(&a - &Number::one());
        for (i, node) in self.nodes.iter().enumerate() {
            if self.is_internal(i) {
                total = &total + &(&Number::int(node.children.len() as i64) - &a);
            }
        }
        total
    }

    /// Nested shape code: leaves by label, internal vertices as parenthesized
    /// child lists in clockwise order.
    pub fn shape_code(&self) -> String {
        fn rec(t: &OrderedTree, i: usize, out: &mut String) {
            match t.nodes[i].label {
                Some(l) => out.push_str(&l.to_string()),
                None => {
                    out.push('(');
                    for (k, &c) in t.nodes[i].children.iter().enumerate() {
                        if k > 0 {
                            out.push(' ');
                        }
                        rec(t, c, out);
                    }
                    out.push(')');
                }
            }
        }
        let mut s = String::new();
        rec(self, self.nodes[0].children[0], &mut s);
        s
    }

    /// Internal-vertex degrees (children + 1).
    pub fn internal_degrees(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.is_internal(i)).map(|i| self.nodes[i].children.len() + 1).collect()
    }

    /// Forgets the planar order.
    pub fn to_multigraph(&self) -> Result<Multigraph> {
        let mut internal_id = vec![0; self.nodes.len()];
        let mut k = 0;
        for i in 0..self.nodes.len() {
            if self.is_internal(i) {
                internal_id[i] = k;
                k += 1;
            }
        }
        let vert = |i: usize| match self.nodes[i].label {
            Some(l) => Vertex::Leaf(l),
            None => Vertex::Internal(internal_id[i]),
        };
        let edges = (1..self.nodes.len()).map(|i| (vert(self.nodes[i].parent.unwrap_or(0)), vert(i), 1));
        Multigraph::new(self.n() as isize, k, edges)
    }
}

/// One step of the ordered variant: a vertex receives the new leaf in a
/// uniform corner; a split edge points the new leaf left or right with
/// probability 1/2 each.
pub fn marchal_tree_step(t: &OrderedTree, rng: &mut RandomStream) -> OrderedTree {
    let mut ids = Vec::new();
    let weights = match scaled_weights(t.alpha) {
        Some((we, _, q)) => {
            let p = t.alpha.ratio().map(|r| r.0).unwrap_or(0);
            let mut w = Vec::new();
            for i in 1..t.nodes.len() {
                ids.push((i, false));
                w.push(we);
            }
            for i in 1..t.nodes.len() {
                if t.is_internal(i) {
                    ids.push((i, true));
                    w.push(t.nodes[i].children.len() as i64 * q - p);
                }
            }
            ChoiceWeights::Exact(w)
        }
        None => {
            let a = t.alpha.value();
            let mut w = Vec::new();
            for i in 1..t.nodes.len() {
                ids.push((i, false));
                w.push(a - 1.0);
            }
            for i in 1..t.nodes.len() {
                if t.is_internal(i) {
                    ids.push((i, true));
                    w.push(t.nodes[i].children.len() as f64 - a);
                }
            }
            ChoiceWeights::Float(w)
        }
    };
    let (target, is_vertex) = ids[weights.sample(rng).expect("an edge always has positive weight")];
    let mut out = t.clone();
    let label = t.n() + 1;
    let leaf = out.nodes.len();
    if is_vertex {
        let corners = out.nodes[target].children.len() + 1;
        let c = rng.below(corners as u64) as usize;
        out.nodes.push(TreeNode { parent: Some(target), children: vec![], label: Some(label) });
        out.nodes[target].children.insert(c, leaf);
    } else {
        let parent = out.nodes[target].parent.expect("non-root node has a parent");
        let u = leaf + 1;
        out.nodes.push(TreeNode { parent: Some(u), children: vec![], label: Some(label) });
        let children = if rng.coin() { vec![target, leaf] } else { vec![leaf, target] };
        out.nodes.push(TreeNode { parent: Some(parent), children, label: None });
        let slot = out.nodes[parent].children.iter().position(|&c| c == target).expect("child present");
        out.nodes[parent].children[slot] = u;
        out.nodes[target].parent = Some(u);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multigraph::build::{int, leaf};
    use crate::weights_enum::{enumerate_space, exact_distribution, WeightSeq};
    use std::collections::BTreeMap;

    fn a54() -> Alpha {
        Alpha::rational(5, 4).unwrap()
    }

    fn figure_eight() -> Multigraph {
        Multigraph::planted(0, 1, [(leaf(0), int(0), 1), (int(0), int(0), 2)]).unwrap()
    }

    #[test]
    fn single_edge_always_becomes_star() {
        let edge = Multigraph::planted(1, 0, [(leaf(0), leaf(1), 1)]).unwrap();
        let st = MarchalState::new(edge, a54()).unwrap();
        let mut rng = RandomStream::new(3, 0);
        let star = Multigraph::planted(2, 1, [(leaf(0), int(0), 1), (leaf(1), int(0), 1), (leaf(2), int(0), 1)]).unwrap();
        for _ in 0..20 {
            let next = marchal_graph_step(&st, &mut rng).unwrap();
            assert_eq!(next.graph.canonical_code().unwrap(), star.canonical_code().unwrap());
        }
    }

    #[test]
    fn figure_eight_choice_probabilities() {
        let st = MarchalState::new(figure_eight(), a54()).unwrap();
        assert_eq!(st.total_weight(), Number::ratio(7, 2));
        let law = st.choice_law();
        for (c, p) in law {
            match c {
                Choice::Vertex(_) => assert_eq!(p, Number::ratio(11, 14)),
                Choice::Edge(u, v) if u == v => assert_eq!(p, Number::ratio(2, 14)),
                Choice::Edge(..) => assert_eq!(p, Number::ratio(1, 14)),
            }
        }
    }

    #[test]
    fn figure_eight_vertex_frequency() {
        let st = MarchalState::new(figure_eight(), a54()).unwrap();
        let mut rng = RandomStream::new(11, 0);
        let trials = 200_000;
        let hits = (0..trials).filter(|_| matches!(st.sample_choice(&mut rng).unwrap(), Choice::Vertex(_))).count();
        let p = hits as f64 / trials as f64;
        assert!((p - 11.0 / 14.0).abs() < 0.004, "{p}");
    }

    /// Pushes an exact law one Marchal step forward.
    fn push_forward(start: &[(Multigraph, Number)], alpha: Alpha) -> BTreeMap<String, Number> {
        let mut out: BTreeMap<String, Number> = BTreeMap::new();
        for (g, p) in start {
            let st = MarchalState::new(g.clone(), alpha).unwrap();
            for (c, q) in st.choice_law() {
                let code = st.apply(c).unwrap().graph.canonical_code().unwrap().to_hex();
                let e = out.entry(code).or_insert_with(Number::zero);
                *e = &*e + &(p * &q);
            }
        }
        out
    }

    #[test]
    fn one_step_push_forward_matches_enumeration() {
        for (s, n) in [(1usize, 0isize), (2, 0), (0, 1), (1, 1)] {
            let ws = WeightSeq::new(a54());
            let d = exact_distribution(s, n, &ws).unwrap();
            let start: Vec<_> = d.entries.iter().map(|e| (e.graph.clone(), e.prob.clone())).collect();
            let pushed = push_forward(&start, a54());
            let target = exact_distribution(s, n + 1, &ws).unwrap();
            assert_eq!(pushed.len(), target.len());
            for e in &target.entries {
                assert_eq!(pushed[&e.code.to_hex()], e.prob, "s={s} n={n}");
            }
        }
    }

    #[test]
    fn regrowing_unrooted_kernel_gives_rooted_law() {
        for s in [2usize, 3] {
            let ws = WeightSeq::new(a54());
            let d = exact_distribution(s, -1, &ws).unwrap();
            let start: Vec<_> = d.entries.iter().map(|e| (e.graph.clone(), e.prob.clone())).collect();
            let pushed = push_forward(&start, a54());
            let target = exact_distribution(s, 0, &ws).unwrap();
            for e in &target.entries {
                assert_eq!(pushed[&e.code.to_hex()], e.prob);
            }
        }
    }

    #[test]
    fn erasing_root_gives_unrooted_law() {
        let ws = WeightSeq::new(a54());
        let rooted = exact_distribution(2, 0, &ws).unwrap();
        let mut pushed: BTreeMap<String, Number> = BTreeMap::new();
        for e in &rooted.entries {
            let h = erase_root(&e.graph).unwrap();
            let k = pushed.entry(h.canonical_code().unwrap().to_hex()).or_insert_with(Number::zero);
            *k = &*k + &e.prob;
        }
        let unrooted = exact_distribution(2, -1, &ws).unwrap();
        for e in &unrooted.entries {
            assert_eq!(pushed[&e.code.to_hex()], e.prob);
        }
    }

    #[test]
    fn erase_root_examples() {
        let fig = erase_root(&figure_eight()).unwrap();
        assert_eq!(fig, Multigraph::new(-1, 1, [(int(0), int(0), 2)]).unwrap());
        let theta = Multigraph::planted(0, 2, [(leaf(0), int(0), 1), (int(0), int(1), 3)]).unwrap();
        let t = erase_root(&theta).unwrap();
        assert_eq!(t.internal_degrees(), vec![3, 3]);
        assert_eq!(t.multiplicity(int(0), int(1)), 3);
        let pair = Multigraph::planted(
            0,
            3,
            [(leaf(0), int(0), 1), (int(0), int(1), 1), (int(0), int(2), 1), (int(1), int(2), 2)],
        )
        .unwrap();
        let p = erase_root(&pair).unwrap();
        assert_eq!(p.internal_count(), 2);
        assert_eq!(p.edge_count(), 3);
        assert!(erase_root(&Multigraph::planted(0, 1, [(leaf(0), int(0), 1), (int(0), int(0), 1)]).unwrap()).is_err());
    }

    #[test]
    fn weight_identity_along_trajectories() {
        for s in [0usize, 1, 2] {
            let start = enumerate_space(s, if s == 0 { 1 } else { 0 }).unwrap().remove(0);
            let st = MarchalState::new(start, a54()).unwrap();
            let mut rng = RandomStream::new(5, s as u64);
            for state in grow(&st, 30, &mut rng).unwrap() {
                assert_eq!(state.total_weight(), state.expected_total_weight());
                assert_eq!(state.surplus(), s as i64);
                state.graph.validate().unwrap();
            }
        }
    }

    #[test]
    fn grow_replays_and_handles_zero_steps() {
        let st = MarchalState::new(figure_eight(), a54()).unwrap();
        assert_eq!(grow(&st, 0, &mut RandomStream::new(1, 0)).unwrap().len(), 1);
        let a = grow(&st, 10, &mut RandomStream::new(9, 2)).unwrap();
        let b = grow(&st, 10, &mut RandomStream::new(9, 2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn float_alpha_grows_valid_graphs() {
        let st = MarchalState::new(figure_eight(), Alpha::float(1.37).unwrap()).unwrap();
        let traj = grow(&st, 15, &mut RandomStream::new(2, 0)).unwrap();
        for s in traj {
            assert!((s.total_weight().to_f64() - s.expected_total_weight().to_f64()).abs() < 1e-9);
        }
    }

    #[test]
    fn grower_matches_step_law() {
        // Both samplers from the same start; compare shape frequencies after 2 steps.
        let alpha = a54();
        let start = figure_eight();
        let ws = WeightSeq::new(alpha);
        let exact = exact_distribution(2, 2, &ws).unwrap();
        let trials = 60_000;
        let mut counts: BTreeMap<String, f64> = BTreeMap::new();
        let mut rng = RandomStream::new(77, 0);
        for _ in 0..trials {
            let mut g = MarchalGrower::new(&start, alpha).unwrap();
            g.step(&mut rng);
            g.step(&mut rng);
            let code = g.to_multigraph().unwrap().canonical_code().unwrap().to_hex();
            *counts.entry(code).or_insert(0.0) += 1.0 / trials as f64;
        }
        // Conditional law of 𝖦_2 given the kernel is the figure-eight.
        let mut cond: BTreeMap<String, Number> = BTreeMap::new();
        let st = MarchalState::new(start, alpha).unwrap();
        for (c1, p1) in st.choice_law() {
            let s1 = st.apply(c1).unwrap();
            for (c2, p2) in s1.choice_law() {
                let code = s1.apply(c2).unwrap().graph.canonical_code().unwrap().to_hex();
                let e = cond.entry(code).or_insert_with(Number::zero);
                *e = &*e + &(&p1 * &p2);
            }
        }
        let tv: f64 = cond.iter().map(|(k, p)| (p.to_f64() - counts.get(k).copied().unwrap_or(0.0)).abs()).sum::<f64>() / 2.0;
        assert!(tv < 0.015, "tv {tv}");
        assert!(cond.keys().all(|k| exact.entries.iter().any(|e| &e.code.to_hex() == k)));
    }

    #[test]
    fn grower_float_alpha_keeps_structure() {
        let start = Multigraph::planted(1, 0, [(leaf(0), leaf(1), 1)]).unwrap();
        let mut g = MarchalGrower::new(&start, Alpha::float(1.6).unwrap()).unwrap();
        let mut rng = RandomStream::new(4, 4);
        for _ in 0..200 {
            g.step(&mut rng);
        }
        let m = g.to_multigraph().unwrap();
        assert!(m.validate_membership(0, 201));
        assert!(g.root_hop_distances().iter().skip(1).all(|&d| d >= 1 && d < usize::MAX));
    }

    #[test]
    fn rescaled_metric_basics() {
        let edge = Multigraph::planted(1, 0, [(leaf(0), leaf(1), 1)]).unwrap();
        assert_eq!(rescaled_leaf_metric(&edge, 1, 1.5), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let st = MarchalState::new(figure_eight(), a54()).unwrap();
        let g = grow(&st, 6, &mut RandomStream::new(8, 8)).unwrap().pop().unwrap().graph;
        let m = rescaled_leaf_metric(&g, 6, 1.25);
        for i in 0..m.len() {
            assert_eq!(m[i][i], 0.0);
            for j in 0..m.len() {
                assert_eq!(m[i][j], m[j][i]);
            }
        }
        assert_eq!(rescaled_root_distances(&g, 6, 1.25), m[0]);
    }

    #[test]
    fn tree_step_from_planted_edge() {
        let t = OrderedTree::planted_edge(a54());
        let mut rng = RandomStream::new(1, 1);
        let mut left = 0;
        for _ in 0..2000 {
            let u = marchal_tree_step(&t, &mut rng);
            assert_eq!(u.n(), 2);
            if u.shape_code() == "(1 2)" {
                left += 1;
            } else {
                assert_eq!(u.shape_code(), "(2 1)");
            }
        }
        assert!((left as f64 / 2000.0 - 0.5).abs() < 0.05);
    }

    #[test]
    fn tree_total_weight_identity() {
        let mut t = OrderedTree::planted_edge(a54());
        let mut rng = RandomStream::new(3, 9);
        for n in 1..40 {
            assert_eq!(t.total_weight(), &(&a54().number() * &Number::int(n)) - &Number::one());
            t = marchal_tree_step(&t, &mut rng);
        }
        assert!(t.to_multigraph().unwrap().validate_membership(0, 40));
    }

    #[test]
    fn tree_at_alpha_two_picks_edges_only() {
        let mut t = OrderedTree::planted_edge(Alpha::rational(2, 1).unwrap());
        let mut rng = RandomStream::new(3, 3);
        for _ in 0..30 {
            t = marchal_tree_step(&t, &mut rng);
            assert!(t.internal_degrees().iter().all(|&d| d == 3));
        }
    }
}
