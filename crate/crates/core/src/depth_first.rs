//! Ordered multigraphs, the depth-first tree and gluing plans.
//!
//! Every object here is a half-edge structure rooted at the leaf labelled 0:
//! each vertex lists its half-edges in clockwise order and `mate` pairs
//! half-edges into edges. Canonical forms number vertices and half-edges in
//! breadth-first order from the root, starting each rotation at the half-edge
//! through which the vertex was first reached, so two structures are equal up
//! to relabelling exactly when their canonical forms are equal.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use itertools::Itertools;
use rand::seq::SliceRandom;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use serde_json::json;

use crate::error::{Error, Result};
use crate::multigraph::{Multigraph, Vertex};
use crate::rng::RandomStream;
use crate::weights_enum::{enumerate_space, ordering_count};

const NONE: usize = usize::MAX;

/// Kind of a vertex in a half-edge structure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Node {
    /// Leaf carrying label `i`; label 0 is the root.
    Labelled(usize),
    Internal,
    /// Red leaf of pair `i` in a paired tree.
    Red(usize),
    /// Blue leaf of pair `i` in a paired tree.
    Blue(usize),
    /// Unlabelled leaf of a base tree.
    Free,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        !matches!(self, Node::Internal)
    }
}

/// Vertices with cyclically ordered half-edges.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Rotation {
    nodes: Vec<Node>,
    around: Vec<Vec<usize>>,
    mate: Vec<usize>,
    #[serde(skip)]
    owner: Vec<usize>,
}

impl Rotation {
    fn empty() -> Self {
        Self { nodes: Vec::new(), around: Vec::new(), mate: Vec::new(), owner: Vec::new() }
    }

    /// Builds a structure from vertex kinds, clockwise half-edge lists and the
    /// pairing of half-edges.
    pub fn new(nodes: Vec<Node>, around: Vec<Vec<usize>>, mate: Vec<usize>) -> Result<Self> {
        if nodes.len() != around.len() {
            return Err(Error::InvalidGraph("one half-edge list per vertex is required".into()));
        }
        let mut owner = vec![NONE; mate.len()];
        for (v, hs) in around.iter().enumerate() {
            for &h in hs {
                if h >= mate.len() || owner[h] != NONE {
                    return Err(Error::InvalidGraph(format!("half-edge {h} is unknown or repeated")));
                }
                owner[h] = v;
            }
        }
        for (h, &m) in mate.iter().enumerate() {
            if owner[h] == NONE || m >= mate.len() || m == h || mate[m] != h {
                return Err(Error::InvalidGraph(format!("half-edge {h} is not properly paired")));
            }
        }
        Ok(Self { nodes, around, mate, owner })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn around(&self, v: usize) -> &[usize] {
        &self.around[v]
    }

    pub fn mate(&self, h: usize) -> usize {
        self.mate[h]
    }

    pub fn owner(&self, h: usize) -> usize {
        self.owner[h]
    }

    pub fn vertex_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.mate.len() / 2
    }

    pub fn degree(&self, v: usize) -> usize {
        self.around[v].len()
    }

    fn add_vertex(&mut self, node: Node) -> usize {
        self.nodes.push(node);
        self.around.push(Vec::new());
        self.nodes.len() - 1
    }

    /// A fresh half-edge owned by `v` but not yet placed in its rotation.
    fn new_half(&mut self, v: usize) -> usize {
        self.mate.push(NONE);
        self.owner.push(v);
        self.mate.len() - 1
    }

    fn add_half(&mut self, v: usize) -> usize {
        let h = self.new_half(v);
        self.around[v].push(h);
        h
    }

    fn link(&mut self, a: usize, b: usize) {
        self.mate[a] = b;
        self.mate[b] = a;
    }

    /// Adds a degree-one vertex and returns its half-edge.
    fn add_leaf(&mut self, node: Node) -> usize {
        let v = self.add_vertex(node);
        self.add_half(v)
    }

    fn root(&self) -> Result<usize> {
        let r = self
            .nodes
            .iter()
            .position(|&x| x == Node::Labelled(0))
            .ok_or_else(|| Error::InvalidGraph("no root leaf".into()))?;
        if self.around[r].len() != 1 {
            return Err(Error::InvalidGraph("the root leaf must have degree one".into()));
        }
        Ok(r)
    }

    /// The rotation at `v` read clockwise from the half-edge `start`.
    fn from_arrival(&self, v: usize, start: usize) -> Vec<usize> {
        let hs = &self.around[v];
        let i = hs.iter().position(|&h| h == start).expect("half-edge belongs to its owner");
        hs[i..].iter().chain(&hs[..i]).copied().collect()
    }

    /// Canonical relabelling of the part reachable from the root, with the
    /// map from old vertex ids to new ones.
    fn canonical_with_map(&self) -> Result<(Rotation, Vec<Option<usize>>)> {
        let root = self.root()?;
        let mut new_id = vec![NONE; self.nodes.len()];
        let mut arrival = vec![NONE; self.nodes.len()];
        let mut order = vec![root];
        new_id[root] = 0;
        arrival[root] = self.around[root][0];
        let mut i = 0;
        while i < order.len() {
            let v = order[i];
            i += 1;
            for h in self.from_arrival(v, arrival[v]) {
                let m = self.mate[h];
                let w = self.owner[m];
                if new_id[w] == NONE {
                    new_id[w] = order.len();
                    arrival[w] = m;
                    order.push(w);
                }
            }
        }
        let mut half_id = vec![NONE; self.mate.len()];
        let mut old_half = Vec::new();
        let mut around = Vec::with_capacity(order.len());
        for &v in &order {
            let mut hs = Vec::new();
            for h in self.from_arrival(v, arrival[v]) {
                half_id[h] = old_half.len();
                hs.push(old_half.len());
                old_half.push(h);
            }
            around.push(hs);
        }
        let mate = old_half.iter().map(|&h| half_id[self.mate[h]]).collect();
        let nodes = order.iter().map(|&v| self.nodes[v]).collect();
        let map = new_id.iter().map(|&x| (x != NONE).then_some(x)).collect();
        Ok((Rotation::new(nodes, around, mate)?, map))
    }

    /// Canonical relabelling of the part reachable from the root.
    pub fn canonical(&self) -> Result<Rotation> {
        self.canonical_with_map().map(|x| x.0)
    }

    fn is_connected(&self) -> Result<bool> {
        Ok(self.canonical_with_map()?.1.iter().all(Option::is_some))
    }

    fn check_degrees(&self) -> Result<()> {
        for (v, node) in self.nodes.iter().enumerate() {
            let d = self.degree(v);
            if node.is_leaf() && d != 1 {
                return Err(Error::InvalidGraph(format!("leaf {node:?} has degree {d}")));
            }
            if !node.is_leaf() && d < 3 {
                return Err(Error::InvalidGraph(format!("internal vertex {v} has degree {d}")));
            }
        }
        Ok(())
    }

    fn labels(&self, pick: impl Fn(Node) -> Option<usize>) -> Vec<usize> {
        self.nodes.iter().filter_map(|&x| pick(x)).sorted().collect()
    }

    fn labelled(&self) -> Vec<usize> {
        self.labels(|x| if let Node::Labelled(i) = x { Some(i) } else { None })
    }

    fn count(&self, keep: impl Fn(Node) -> bool) -> usize {
        self.nodes.iter().filter(|&&x| keep(x)).count()
    }

    fn internal_degrees(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&v| !self.nodes[v].is_leaf()).map(|v| self.degree(v)).sorted().collect()
    }
}

fn is_range(labels: &[usize], from: usize) -> bool {
    labels.iter().enumerate().all(|(i, &l)| l == i + from)
}

/// Parent pointers and clockwise positions of a planted ordered tree.
struct TreeInfo {
    /// Vertices in clockwise (depth-first) order from the root.
    order: Vec<usize>,
    parent: Vec<usize>,
    /// Half-edge at each vertex pointing to its parent.
    arrival: Vec<usize>,
    /// Index of the vertex in its parent's clockwise list (parent half-edge at 0).
    child_pos: Vec<usize>,
}

impl TreeInfo {
    fn new(r: &Rotation) -> Result<Self> {
        let root = r.root()?;
        let nv = r.vertex_count();
        if r.edge_count() + 1 != nv {
            return Err(Error::InvalidGraph("not a tree: wrong edge count".into()));
        }
        let mut info = Self { order: Vec::new(), parent: vec![NONE; nv], arrival: vec![NONE; nv], child_pos: vec![0; nv] };
        let mut seen = vec![false; nv];
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            if seen[v] {
                return Err(Error::InvalidGraph("not a tree: cycle found".into()));
            }
            seen[v] = true;
            info.order.push(v);
            let hs = info.clockwise(r, v);
            for (pos, &h) in hs.iter().enumerate().rev() {
                if v != root && pos == 0 {
                    continue;
                }
                let m = r.mate[h];
                let w = r.owner[m];
                info.parent[w] = v;
                info.arrival[w] = m;
                info.child_pos[w] = pos;
                stack.push(w);
            }
        }
        if info.order.len() != nv {
            return Err(Error::InvalidGraph("not a tree: disconnected".into()));
        }
        Ok(info)
    }

    /// Half-edges at `v` clockwise from its parent half-edge.
    fn clockwise(&self, r: &Rotation, v: usize) -> Vec<usize> {
        if self.arrival[v] == NONE {
            r.around[v].clone()
        } else {
            r.from_arrival(v, self.arrival[v])
        }
    }
}

/// A planted multigraph with a cyclic order of half-edges at every vertex.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct OrderedMultigraph(Rotation);

impl OrderedMultigraph {
    /// Validates and canonicalizes a structure with labelled leaves `0..=n`
    /// and internal vertices of degree at least 3.
    pub fn from_rotation(r: Rotation) -> Result<Self> {
        if r.nodes.iter().any(|x| !matches!(x, Node::Labelled(_) | Node::Internal)) {
            return Err(Error::InvalidGraph("coloured leaves in an ordered multigraph".into()));
        }
        if !is_range(&r.labelled(), 0) {
            return Err(Error::InvalidGraph("leaf labels must be 0..=n".into()));
        }
        r.check_degrees()?;
        if !r.is_connected()? {
            return Err(Error::InvalidGraph("disconnected".into()));
        }
        Ok(Self(r.canonical()?))
    }

    /// Orders the half-edges at each vertex in the order edges are listed.
    pub fn from_multigraph(g: &Multigraph) -> Result<Self> {
        if g.n() < 0 {
            return Err(Error::Unsupported("ordered multigraphs need a root leaf".into()));
        }
        let mut r = Rotation::empty();
        for i in 0..g.vertex_count() {
            r.add_vertex(match g.vertex_at(i) {
                Vertex::Leaf(l) => Node::Labelled(l),
                Vertex::Internal(_) => Node::Internal,
            });
        }
        for (u, v, m) in g.edges() {
            for _ in 0..m {
                let a = r.add_half(g.index(u));
                let b = r.add_half(g.index(v));
                r.link(a, b);
            }
        }
        Self::from_rotation(r)
    }

    /// The fiber of the forgetful map over `g`: every distinct choice of
    /// cyclic orders, deduplicated up to relabelling.
    pub fn all_orderings(g: &Multigraph) -> Result<Vec<Self>> {
        let base = Self::from_multigraph(g)?.0;
        let choices: Vec<Vec<Vec<usize>>> = base
            .around
            .iter()
            .map(|hs| {
                let rest = hs.len().saturating_sub(1);
                hs[1..]
                    .iter()
                    .copied()
                    .permutations(rest)
                    .map(|p| std::iter::once(hs[0]).chain(p).collect())
                    .collect()
            })
            .collect();
        let mut out = BTreeSet::new();
        for pick in choices.into_iter().multi_cartesian_product() {
            let mut r = base.clone();
            r.around = pick;
            out.insert(r.canonical()?);
        }
        Ok(out.into_iter().map(Self).collect())
    }

    pub fn rotation(&self) -> &Rotation {
        &self.0
    }

    pub fn n(&self) -> isize {
        self.0.count(|x| matches!(x, Node::Labelled(_))) as isize - 1
    }

    pub fn surplus(&self) -> i64 {
        self.0.edge_count() as i64 - self.0.vertex_count() as i64 + 1
    }

    pub fn internal_degrees(&self) -> Vec<usize> {
        self.0.internal_degrees()
    }
}

/// Forgets the cyclic orders.
pub fn forget_order(g: &OrderedMultigraph) -> Result<Multigraph> {
    let r = &g.0;
    let mut next = 0;
    let vert: Vec<Vertex> = r
        .nodes
        .iter()
        .map(|x| match x {
            Node::Labelled(l) => Vertex::Leaf(*l),
            _ => {
                next += 1;
                Vertex::Internal(next - 1)
            }
        })
        .collect();
    let edges = (0..r.mate.len()).filter(|&h| h < r.mate[h]).map(|h| (vert[r.owner[h]], vert[r.owner[r.mate[h]]], 1));
    Multigraph::new(g.n(), next, edges)
}

/// Every ordered multigraph over 𝕄_{s,n}, grouped by underlying multigraph.
pub fn ordered_space(s: usize, n: usize) -> Result<Vec<(Multigraph, Vec<OrderedMultigraph>)>> {
    enumerate_space(s, n as isize)?
        .into_iter()
        .map(|g| {
            let fiber = OrderedMultigraph::all_orderings(&g)?;
            Ok((g, fiber))
        })
        .collect()
}

/// Planted ordered tree with labelled leaves, red leaves labelled 1..s in
/// clockwise order and blue leaves paired with them.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PairedTree(Rotation);

impl PairedTree {
    pub fn from_rotation(r: Rotation) -> Result<Self> {
        let t = Self(r.canonical()?);
        t.validate()?;
        Ok(t)
    }

    pub fn rotation(&self) -> &Rotation {
        &self.0
    }

    pub fn surplus(&self) -> usize {
        self.0.count(|x| matches!(x, Node::Red(_)))
    }

    /// Checks labels, degrees, tree shape, the clockwise order of red labels
    /// and that each blue leaf sits to the right of its red leaf's ancestral line.
    pub fn validate(&self) -> Result<()> {
        let r = &self.0;
        let bad = |m: String| Err(Error::InvalidPairedTree(m));
        if r.nodes.iter().any(|x| *x == Node::Free) {
            return bad("unlabelled leaf".into());
        }
        if !is_range(&r.labelled(), 0) {
            return bad("leaf labels must be 0..=n".into());
        }
        let reds = r.labels(|x| if let Node::Red(i) = x { Some(i) } else { None });
        let blues = r.labels(|x| if let Node::Blue(i) = x { Some(i) } else { None });
        if !is_range(&reds, 1) || reds != blues {
            return bad("red and blue labels must both be 1..=s".into());
        }
        let wrap = |e: Error| Error::InvalidPairedTree(e.to_string());
        r.check_degrees().map_err(wrap)?;
        let info = TreeInfo::new(r).map_err(wrap)?;
        let red_order: Vec<usize> =
            info.order.iter().filter_map(|&v| if let Node::Red(i) = r.nodes[v] { Some(i) } else { None }).collect();
        if !is_range(&red_order, 1) {
            return bad("red labels are not in clockwise order".into());
        }
        let mut red_at = vec![NONE; reds.len() + 1];
        let mut blue_at = vec![NONE; reds.len() + 1];
        for (v, x) in r.nodes.iter().enumerate() {
            match x {
                Node::Red(i) => red_at[*i] = v,
                Node::Blue(i) => blue_at[*i] = v,
                _ => {}
            }
        }
        for k in 1..=reds.len() {
            let mut path = BTreeMap::new();
            let mut cur = red_at[k];
            while info.parent[cur] != NONE {
                path.insert(info.parent[cur], info.child_pos[cur]);
                cur = info.parent[cur];
            }
            let b = blue_at[k];
            match path.get(&info.parent[b]) {
                Some(&p) if info.child_pos[b] > p => {}
                _ => return bad(format!("blue leaf {k} is not to the right of the ancestral line of red leaf {k}")),
            }
        }
        Ok(())
    }
}

/// Planted ordered tree with labelled and unlabelled leaves and no vertex of
/// degree 2.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct BaseTree(Rotation);

/// Where a blue leaf can be attached in a base tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Slot {
    /// Corner `corner` (from 1, clockwise from the parent) of an internal vertex.
    Corner { vertex: usize, corner: usize },
    /// The edge joining `child` to its parent.
    Edge { child: usize },
}

impl BaseTree {
    pub fn from_rotation(r: Rotation) -> Result<Self> {
        if r.nodes.iter().any(|x| !matches!(x, Node::Labelled(_) | Node::Internal | Node::Free)) {
            return Err(Error::InvalidGraph("coloured leaves in a base tree".into()));
        }
        if !is_range(&r.labelled(), 0) {
            return Err(Error::InvalidGraph("leaf labels must be 0..=n".into()));
        }
        r.check_degrees()?;
        TreeInfo::new(&r)?;
        Ok(Self(r.canonical()?))
    }

    pub fn rotation(&self) -> &Rotation {
        &self.0
    }

    pub fn surplus(&self) -> usize {
        self.0.count(|x| x == Node::Free)
    }

    pub fn n(&self) -> isize {
        self.0.count(|x| matches!(x, Node::Labelled(_))) as isize - 1
    }

    /// Unlabelled leaves in clockwise order from the root.
    pub fn free_leaves(&self) -> Vec<usize> {
        let info = TreeInfo::new(&self.0).expect("validated tree");
        info.order.into_iter().filter(|&v| self.0.nodes[v] == Node::Free).collect()
    }

    /// Edges and corners immediately to the right of the ancestral path of
    /// the `k`-th unlabelled leaf (from 1).
    pub fn ancestral_set(&self, k: usize) -> Result<Vec<Slot>> {
        let info = TreeInfo::new(&self.0)?;
        let leaf = *self
            .free_leaves()
            .get(k.wrapping_sub(1))
            .ok_or_else(|| Error::InvalidParameter(format!("no unlabelled leaf {k}")))?;
        let mut out = Vec::new();
        let mut cur = leaf;
        while info.parent[cur] != NONE {
            out.push(Slot::Edge { child: cur });
            let u = info.parent[cur];
            if self.0.nodes[u] == Node::Internal {
                for corner in info.child_pos[cur] + 1..=self.0.degree(u) {
                    out.push(Slot::Corner { vertex: u, corner });
                }
            }
            cur = u;
        }
        out.sort();
        Ok(out)
    }
}

/// Blue-leaf placements relative to a base tree. Corner lists and edge groups
/// hold labels in clockwise order; edge groups are listed from the inserted
/// vertex farthest from the root.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GluingPlan {
    pub corners: BTreeMap<(usize, usize), Vec<usize>>,
    pub edges: BTreeMap<usize, Vec<Vec<usize>>>,
}

impl Serialize for GluingPlan {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let corners: Vec<_> = self
            .corners
            .iter()
            .map(|(&(vertex, corner), labels)| json!({"vertex": vertex, "corner": corner, "labels": labels}))
            .collect();
        let edges: Vec<_> =
            self.edges.iter().map(|(&child, groups)| json!({"child": child, "groups": groups})).collect();
        let mut st = s.serialize_struct("GluingPlan", 2)?;
        st.serialize_field("corners", &corners)?;
        st.serialize_field("edges", &edges)?;
        st.end()
    }
}

/// Counts of blue leaves per corner and per inserted vertex.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PlanType {
    /// `k_{v,ℓ}` for ℓ = 1..deg(v), keyed by internal vertex.
    pub corners: BTreeMap<usize, Vec<usize>>,
    /// `k_{e,i}` for i = 1..a_e, keyed by the edge's child vertex.
    pub edges: BTreeMap<usize, Vec<usize>>,
}

impl PlanType {
    pub fn k_vertex(&self, v: usize) -> usize {
        self.corners.get(&v).map_or(0, |x| x.iter().sum())
    }

    pub fn k_edge(&self, child: usize) -> usize {
        self.edges.get(&child).map_or(0, |x| x.iter().sum())
    }

    pub fn inserted(&self, child: usize) -> usize {
        self.edges.get(&child).map_or(0, Vec::len)
    }

    /// Sorted internal degrees of the glued graph: deg_T(v) + k_v for the
    /// vertices of the base tree and 2 + k_{e,i} for the inserted ones.
    pub fn glued_degrees(&self, base: &BaseTree) -> Vec<usize> {
        let r = &base.0;
        let mut out: Vec<usize> = (0..r.vertex_count())
            .filter(|&v| r.nodes[v] == Node::Internal)
            .map(|v| r.degree(v) + self.k_vertex(v))
            .collect();
        out.extend(self.edges.values().flatten().map(|k| 2 + k));
        out.sort();
        out
    }
}

impl GluingPlan {
    pub fn plan_type(&self, base: &BaseTree) -> PlanType {
        let r = &base.0;
        let mut ty = PlanType::default();
        for v in 0..r.vertex_count() {
            if r.nodes[v] == Node::Internal {
                let ks = (1..=r.degree(v)).map(|l| self.corners.get(&(v, l)).map_or(0, Vec::len)).collect();
                ty.corners.insert(v, ks);
            }
        }
        for (&e, groups) in &self.edges {
            if !groups.is_empty() {
                ty.edges.insert(e, groups.iter().map(Vec::len).collect());
            }
        }
        ty
    }
}

/// The requirement of a gluing plan that a candidate plan fails.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PlanViolation {
    /// A corner key is not a corner of the base tree, or its list is not a
    /// permutation of labels in 1..=s.
    Corner { vertex: usize, corner: usize, reason: String },
    /// An edge key is not an edge, or a group is empty or not a permutation
    /// of labels in 1..=s.
    EdgeGroup { child: usize, reason: String },
    /// The sets do not partition 1..=s.
    Partition { reason: String },
    /// A label is glued outside the ancestral set of its unlabelled leaf.
    Ancestry { label: usize, slot: Slot },
}

impl fmt::Display for PlanViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanViolation::Corner { vertex, corner, reason } => write!(f, "corner ({vertex}, {corner}): {reason}"),
            PlanViolation::EdgeGroup { child, reason } => write!(f, "edge above vertex {child}: {reason}"),
            PlanViolation::Partition { reason } => write!(f, "partition: {reason}"),
            PlanViolation::Ancestry { label, slot } => {
                write!(f, "ancestry: label {label} placed at {slot:?}, outside its ancestral set")
            }
        }
    }
}

fn distinct_in_range(xs: &[usize], s: usize) -> std::result::Result<(), String> {
    if xs.iter().any(|&x| x == 0 || x > s) {
        return Err(format!("labels {xs:?} not in 1..={s}"));
    }
    if xs.iter().collect::<BTreeSet<_>>().len() != xs.len() {
        return Err(format!("labels {xs:?} repeat"));
    }
    Ok(())
}

/// Checks the defining requirements of a gluing plan for `base`.
pub fn check_plan(base: &BaseTree, plan: &GluingPlan) -> std::result::Result<(), PlanViolation> {
    let r = &base.0;
    let s = base.surplus();
    let mut slot_of = BTreeMap::new();
    let mut seen = 0;
    for (&(vertex, corner), labels) in &plan.corners {
        let corner_err = |reason: String| PlanViolation::Corner { vertex, corner, reason };
        if vertex >= r.vertex_count() || r.nodes[vertex] != Node::Internal {
            return Err(corner_err("not an internal vertex".into()));
        }
        if corner == 0 || corner > r.degree(vertex) {
            return Err(corner_err(format!("vertex has degree {}", r.degree(vertex))));
        }
        distinct_in_range(labels, s).map_err(corner_err)?;
        for &k in labels {
            slot_of.insert(k, Slot::Corner { vertex, corner });
        }
        seen += labels.len();
    }
    for (&child, groups) in &plan.edges {
        let edge_err = |reason: String| PlanViolation::EdgeGroup { child, reason };
        if child == 0 || child >= r.vertex_count() {
            return Err(edge_err("not an edge".into()));
        }
        for g in groups {
            if g.is_empty() {
                return Err(edge_err("empty group on an inserted vertex".into()));
            }
            distinct_in_range(g, s).map_err(edge_err)?;
            for &k in g {
                slot_of.insert(k, Slot::Edge { child });
            }
            seen += g.len();
        }
    }
    if seen != s || slot_of.len() != s {
        return Err(PlanViolation::Partition { reason: format!("{seen} placements of {s} labels") });
    }
    for (&k, &slot) in &slot_of {
        let allowed = base.ancestral_set(k).expect("label in range");
        if !allowed.contains(&slot) {
            return Err(PlanViolation::Ancestry { label: k, slot });
        }
    }
    Ok(())
}

/// The depth-first tree: explores half-edges from the root with a stack and
/// cuts an edge into a red/blue pair whenever the half-edge on top is paired
/// with one still on the stack.
pub fn dep(g: &OrderedMultigraph) -> Result<PairedTree> {
    let mut r = g.0.clone();
    let root = r.root()?;
    let h0 = r.around[root][0];
    let mut stack = vec![h0];
    let mut in_stack = vec![false; r.mate.len()];
    in_stack[h0] = true;
    let mut cuts = 0;
    while let Some(&h) = stack.last() {
        let hh = r.mate[h];
        stack.pop();
        in_stack[h] = false;
        if !in_stack[hh] {
            let v = r.owner[hh];
            for &x in r.from_arrival(v, hh)[1..].iter().rev() {
                stack.push(x);
                in_stack[x] = true;
            }
        } else {
            cuts += 1;
            let pos = stack.iter().rposition(|&x| x == hh).expect("paired half-edge on the stack");
            stack.remove(pos);
            in_stack[hh] = false;
            let red = r.add_leaf(Node::Red(cuts));
            let blue = r.add_leaf(Node::Blue(cuts));
            r.link(h, red);
            r.link(hh, blue);
        }
    }
    debug_assert_eq!(cuts as i64, g.surplus());
    PairedTree::from_rotation(r)
}

/// Identifies each red leaf with its blue partner, joining the two
/// half-edges into a single edge.
pub fn glue(t: &PairedTree) -> Result<OrderedMultigraph> {
    let mut r = t.0.clone();
    let s = t.surplus();
    let mut red = vec![NONE; s + 1];
    let mut blue = vec![NONE; s + 1];
    for (v, x) in r.nodes.iter().enumerate() {
        match x {
            Node::Red(i) => red[*i] = r.around[v][0],
            Node::Blue(i) => blue[*i] = r.around[v][0],
            _ => {}
        }
    }
    for k in 1..=s {
        let (x, y) = (r.mate[red[k]], r.mate[blue[k]]);
        r.link(x, y);
    }
    OrderedMultigraph::from_rotation(r.canonical()?)
}

fn erase_with_map(t: &PairedTree) -> Result<(BaseTree, Vec<Option<usize>>)> {
    let mut r = t.0.clone();
    for v in 0..r.vertex_count() {
        if let Node::Blue(_) = r.nodes[v] {
            let y = r.mate[r.around[v][0]];
            let u = r.owner[y];
            r.around[u].retain(|&h| h != y);
        }
    }
    for v in 0..r.vertex_count() {
        match r.nodes[v] {
            Node::Red(_) => r.nodes[v] = Node::Free,
            Node::Internal if r.degree(v) == 2 => {
                let (a, c) = (r.around[v][0], r.around[v][1]);
                let (ma, mc) = (r.mate[a], r.mate[c]);
                r.link(ma, mc);
                r.around[v].clear();
            }
            Node::Internal if r.degree(v) < 2 => {
                return Err(Error::InvalidPairedTree(format!("vertex {v} keeps only blue leaves")));
            }
            _ => {}
        }
    }
    let (c, map) = r.canonical_with_map()?;
    Ok((BaseTree::from_rotation(c)?, map))
}

/// Removes blue leaves, contracts the resulting degree-2 vertices and turns
/// red leaves into unlabelled leaves.
pub fn erase(t: &PairedTree) -> Result<BaseTree> {
    erase_with_map(t).map(|x| x.0)
}

/// The base tree of `t` and the plan recording where its blue leaves sit.
pub fn plan_of(t: &PairedTree) -> Result<(BaseTree, GluingPlan)> {
    let (base, map) = erase_with_map(t)?;
    let r = &t.0;
    let info = TreeInfo::new(r)?;
    let mut plan = GluingPlan::default();
    let blue_label = |h: usize| if let Node::Blue(b) = r.nodes[r.owner[r.mate[h]]] { Some(b) } else { None };
    for &v in &info.order {
        if r.nodes[v] != Node::Internal {
            continue;
        }
        let hs = info.clockwise(r, v);
        if let Some(tv) = map[v] {
            let mut corner = 0;
            for &h in &hs {
                match blue_label(h) {
                    Some(b) => plan.corners.entry((tv, corner)).or_default().push(b),
                    None => corner += 1,
                }
            }
        } else {
            if blue_label(hs[1]).is_some() || hs[2..].iter().any(|&h| blue_label(h).is_none()) {
                return Err(Error::InvalidPairedTree(format!("blue leaf left of the path through vertex {v}")));
            }
            let mut w = r.owner[r.mate[hs[1]]];
            while map[w].is_none() {
                let down = info.clockwise(r, w).into_iter().skip(1).find(|&h| blue_label(h).is_none());
                w = r.owner[r.mate[down.expect("inserted vertex has a child")]];
            }
            let group = hs[2..].iter().map(|&h| blue_label(h).expect("checked above")).collect();
            plan.edges.entry(map[w].expect("surviving vertex")).or_default().push(group);
        }
    }
    for groups in plan.edges.values_mut() {
        groups.reverse();
    }
    Ok((base, plan))
}

/// Attaches blue leaves to `base` as described by `plan`, after checking it.
pub fn pair_of(base: &BaseTree, plan: &GluingPlan) -> Result<PairedTree> {
    check_plan(base, plan).map_err(|e| Error::InvalidPlan(e.to_string()))?;
    let mut r = base.0.clone();
    let info = TreeInfo::new(&r)?;
    let mut next_red = 0;
    for &v in &info.order {
        if r.nodes[v] == Node::Free {
            next_red += 1;
            r.nodes[v] = Node::Red(next_red);
        }
    }
    let nv = r.vertex_count();
    for v in 0..nv {
        if r.nodes[v] != Node::Internal {
            continue;
        }
        let mut hs = Vec::new();
        for (i, h) in info.clockwise(&r, v).into_iter().enumerate() {
            hs.push(h);
            for &b in plan.corners.get(&(v, i + 1)).into_iter().flatten() {
                let bh = r.add_leaf(Node::Blue(b));
                let x = r.new_half(v);
                r.link(x, bh);
                hs.push(x);
            }
        }
        r.around[v] = hs;
    }
    for (&child, groups) in &plan.edges {
        let hc = info.arrival[child];
        let mut up = r.mate[hc];
        for group in groups.iter().rev() {
            let x = r.add_vertex(Node::Internal);
            let xu = r.add_half(x);
            let xd = r.add_half(x);
            r.link(up, xu);
            for &b in group {
                let bh = r.add_leaf(Node::Blue(b));
                let xb = r.add_half(x);
                r.link(xb, bh);
            }
            up = xd;
        }
        r.link(up, hc);
    }
    PairedTree::from_rotation(r)
}

/// Glues the paired tree built from `plan`, checking that the degrees match
/// those predicted by the plan's type.
pub fn glue_plan(base: &BaseTree, plan: &GluingPlan) -> Result<OrderedMultigraph> {
    let g = glue(&pair_of(base, plan)?)?;
    assert_eq!(g.internal_degrees(), plan.plan_type(base).glued_degrees(base), "glued degrees follow the plan type");
    Ok(g)
}

#[derive(Clone, Debug)]
enum Shape {
    Leaf,
    Node(Vec<Shape>),
}

fn shapes(leaves: usize, memo: &mut BTreeMap<usize, Vec<Shape>>) -> Vec<Shape> {
    if let Some(x) = memo.get(&leaves) {
        return x.clone();
    }
    let mut out = Vec::new();
    if leaves == 1 {
        out.push(Shape::Leaf);
    }
    for parts in compositions(leaves).into_iter().filter(|p| p.len() >= 2) {
        let options: Vec<Vec<Shape>> = parts.iter().map(|&p| shapes(p, memo)).collect();
        for children in options.into_iter().multi_cartesian_product() {
            out.push(Shape::Node(children));
        }
    }
    memo.insert(leaves, out.clone());
    out
}

fn compositions(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    (1..=n)
        .flat_map(|first| {
            compositions(n - first).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

fn build_shape(r: &mut Rotation, shape: &Shape, up: usize, leaves: &mut std::slice::Iter<'_, Node>) {
    match shape {
        Shape::Leaf => {
            let h = r.add_leaf(*leaves.next().expect("one kind per leaf"));
            r.link(up, h);
        }
        Shape::Node(children) => {
            let v = r.add_vertex(Node::Internal);
            let p = r.add_half(v);
            r.link(up, p);
            for c in children {
                let h = r.add_half(v);
                build_shape(r, c, h, leaves);
            }
        }
    }
}

/// Every base tree in 𝕋_{s,n}: plane trees with all internal vertices of
/// degree at least 3, with `s` unlabelled and `n` labelled leaves.
pub fn base_trees(s: usize, n: usize) -> Result<Vec<BaseTree>> {
    let total = s + n;
    if total == 0 {
        return Ok(Vec::new());
    }
    let mut out = BTreeSet::new();
    for shape in shapes(total, &mut BTreeMap::new()) {
        for free in (0..total).combinations(s) {
            for labels in (1..=n).permutations(n) {
                let mut kinds = Vec::with_capacity(total);
                let mut next = labels.iter();
                for i in 0..total {
                    kinds.push(if free.contains(&i) { Node::Free } else { Node::Labelled(*next.next().unwrap()) });
                }
                let mut r = Rotation::empty();
                let root = r.add_leaf(Node::Labelled(0));
                build_shape(&mut r, &shape, root, &mut kinds.iter());
                out.insert(BaseTree::from_rotation(r)?);
            }
        }
    }
    Ok(out.into_iter().collect())
}

/// Sequences of non-empty ordered groups covering `labels`.
fn ordered_groupings(labels: &[usize]) -> Vec<Vec<Vec<usize>>> {
    let k = labels.len();
    let mut out = Vec::new();
    for perm in labels.iter().copied().permutations(k) {
        for cuts in 0..1u32 << k.saturating_sub(1) {
            let mut groups = vec![vec![perm[0]]];
            for i in 1..k {
                if cuts >> (i - 1) & 1 == 1 {
                    groups.push(Vec::new());
                }
                groups.last_mut().unwrap().push(perm[i]);
            }
            out.push(groups);
        }
    }
    out
}

/// Every gluing plan for `base`.
pub fn all_plans(base: &BaseTree) -> Result<Vec<GluingPlan>> {
    let s = base.surplus();
    let sets = (1..=s).map(|k| base.ancestral_set(k)).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for assignment in sets.into_iter().multi_cartesian_product() {
        let mut by_slot: BTreeMap<Slot, Vec<usize>> = BTreeMap::new();
        for (i, slot) in assignment.into_iter().enumerate() {
            by_slot.entry(slot).or_default().push(i + 1);
        }
        let options: Vec<Vec<(Slot, Vec<Vec<usize>>)>> = by_slot
            .into_iter()
            .map(|(slot, labels)| match slot {
                Slot::Corner { .. } => {
                    labels.iter().copied().permutations(labels.len()).map(|p| (slot, vec![p])).collect()
                }
                Slot::Edge { .. } => ordered_groupings(&labels).into_iter().map(|g| (slot, g)).collect(),
            })
            .collect();
        for pick in options.into_iter().multi_cartesian_product() {
            out.push(plan_from_slots(pick));
        }
    }
    Ok(out)
}

fn plan_from_slots(pick: Vec<(Slot, Vec<Vec<usize>>)>) -> GluingPlan {
    let mut plan = GluingPlan::default();
    for (slot, mut groups) in pick {
        match slot {
            Slot::Corner { vertex, corner } => {
                plan.corners.insert((vertex, corner), groups.remove(0));
            }
            Slot::Edge { child } => {
                plan.edges.insert(child, groups);
            }
        }
    }
    plan
}

/// A random valid plan: each label picks a uniform slot of its ancestral set,
/// corner lists are shuffled and edge labels are split into groups at
/// independent fair cut points.
pub fn random_plan(base: &BaseTree, rng: &mut RandomStream) -> Result<GluingPlan> {
    let mut by_slot: BTreeMap<Slot, Vec<usize>> = BTreeMap::new();
    for k in 1..=base.surplus() {
        let set = base.ancestral_set(k)?;
        let slot = set[rng.below(set.len() as u64) as usize];
        by_slot.entry(slot).or_default().push(k);
    }
    let pick = by_slot
        .into_iter()
        .map(|(slot, mut labels)| {
            labels.shuffle(rng);
            let groups = match slot {
                Slot::Corner { .. } => vec![labels],
                Slot::Edge { .. } => {
                    let mut groups = vec![vec![labels[0]]];
                    for &l in &labels[1..] {
                        if rng.coin() {
                            groups.push(Vec::new());
                        }
                        groups.last_mut().unwrap().push(l);
                    }
                    groups
                }
            };
            (slot, groups)
        })
        .collect();
    Ok(plan_from_slots(pick))
}

/// Result of an exhaustive bijection check.
#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub check: String,
    pub surplus: usize,
    pub leaves: usize,
    pub checked: usize,
    pub counterexample: Option<serde_json::Value>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }

    fn new(check: &str, s: usize, n: usize) -> Self {
        Self { check: check.into(), surplus: s, leaves: n, checked: 0, counterexample: None }
    }
}

/// `glue ∘ dep` is the identity on 𝕄^ord_{s,n}, dep cuts exactly `s` edges,
/// and `pair_of ∘ plan_of` recovers each depth-first tree.
pub fn check_roundtrip(s: usize, n: usize) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("roundtrip", s, n);
    for (g, fiber) in ordered_space(s, n)? {
        for og in fiber {
            out.checked += 1;
            let t = dep(&og)?;
            let back = glue(&t)?;
            let (base, plan) = plan_of(&t)?;
            let again = pair_of(&base, &plan)?;
            let same_image = forget_order(&back)?.canonical_code()? == g.canonical_code()?;
            if back != og || t.surplus() != s || again != t || !same_image {
                out.counterexample = Some(json!({"graph": og, "dep": t, "glued": back, "plan": plan}));
                return Ok(out);
            }
        }
    }
    Ok(out)
}

/// Fiber sizes of the forgetful map equal `ordering_count`, and every
/// ordered graph forgets to the multigraph it was built from.
pub fn check_fibers(s: usize, n: usize) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("fibers", s, n);
    for (g, fiber) in ordered_space(s, n)? {
        out.checked += 1;
        let expected = ordering_count(&g)?;
        let code = g.canonical_code()?;
        let images_ok = fiber.iter().all(|og| forget_order(og).and_then(|m| m.canonical_code()).ok() == Some(code.clone()));
        if fiber.len() as u64 != expected || !images_ok {
            out.counterexample = Some(json!({"graph": g, "fiber": fiber.len(), "ordering_count": expected}));
            return Ok(out);
        }
    }
    Ok(out)
}

/// For each base tree, the number of gluing plans equals the number of
/// depth-first trees erasing to it, and every plan round-trips.
pub fn check_plans(s: usize, n: usize) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("plans", s, n);
    let mut paired: BTreeMap<BaseTree, usize> = BTreeMap::new();
    for (_, fiber) in ordered_space(s, n)? {
        for og in fiber {
            *paired.entry(erase(&dep(&og)?)?).or_insert(0) += 1;
        }
    }
    let trees = base_trees(s, n)?;
    for base in &trees {
        let plans = all_plans(base)?;
        out.checked += plans.len();
        let found = paired.get(base).copied().unwrap_or(0);
        if plans.len() != found {
            out.counterexample = Some(json!({"base": base, "plans": plans.len(), "paired_trees": found}));
            return Ok(out);
        }
        for plan in plans {
            let t = pair_of(base, &plan)?;
            let (b2, p2) = plan_of(&t)?;
            if &b2 != base || p2 != plan {
                out.counterexample = Some(json!({"base": base, "plan": plan, "recovered": p2}));
                return Ok(out);
            }
        }
    }
    if paired.keys().any(|b| !trees.contains(b)) {
        out.counterexample = Some(json!({"reason": "a depth-first tree erases to an unlisted base tree"}));
    }
    Ok(out)
}
