//! Planted multigraphs with labelled leaves and unlabelled internal vertices.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest internal vertex count accepted by the permutation searches.
pub const MAX_PERMUTED_INTERNAL: usize = 9;

/// A vertex: either a labelled leaf or an internal vertex with a hidden index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Vertex {
    Leaf(usize),
    Internal(usize),
}

impl Vertex {
    pub fn is_leaf(&self) -> bool {
        matches!(self, Vertex::Leaf(_))
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Vertex::Leaf(i) => write!(f, "L{i}"),
            Vertex::Internal(i) => write!(f, "I{i}"),
        }
    }
}

impl FromStr for Vertex {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad vertex id {s:?}"));
        let (kind, idx) = s.split_at(1.min(s.len()));
        let idx: usize = idx.parse().map_err(|_| bad())?;
        match kind {
            "L" => Ok(Vertex::Leaf(idx)),
            "I" => Ok(Vertex::Internal(idx)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Vertex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

fn ordered(u: Vertex, v: Vertex) -> (Vertex, Vertex) {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Planted multigraph: leaves `L0..Ln` (none when unrooted), internal vertices
/// `I0..I(k-1)` and an edge multiset keyed by unordered pairs.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Multigraph {
    leaves: usize,
    internal: usize,
    edges: BTreeMap<(Vertex, Vertex), usize>,
}

/// Isomorphism-class identifier with leaves fixed and internal vertices permutable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalCode(pub Vec<u8>);

impl CanonicalCode {
    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        if s.len() % 2 != 0 {
            return Err(Error::Parse(format!("odd-length hex {s:?}")));
        }
        (0..s.len())
            .step_by(2)
            .map(|i| u8::from_str_radix(&s[i..i + 2], 16).map_err(|e| Error::Parse(e.to_string())))
            .collect::<Result<Vec<u8>>>()
            .map(CanonicalCode)
    }
}

impl fmt::Display for CanonicalCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for CanonicalCode {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl Multigraph {
    /// Builds a multigraph with leaves `0..=n` (`n = -1` for no leaves).
    ///
    /// Only structural sanity is checked here (vertex ranges, positive
    /// multiplicities); see [`Multigraph::validate`] for the model invariants.
    pub fn new<I>(n: isize, internal: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vertex, Vertex, usize)>,
    {
        if n < -1 {
            return Err(Error::InvalidParameter(format!("leaf index {n} < -1")));
        }
        let mut g = Self { leaves: (n + 1) as usize, internal, edges: BTreeMap::new() };
        for (u, v, m) in edges {
            g.check_vertex(u)?;
            g.check_vertex(v)?;
            if m == 0 {
                return Err(Error::InvalidGraph(format!("zero multiplicity on {u}-{v}")));
            }
            *g.edges.entry(ordered(u, v)).or_insert(0) += m;
        }
        Ok(g)
    }

    /// Like [`Multigraph::new`] but also enforces [`Multigraph::validate`].
    pub fn planted<I>(n: isize, internal: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vertex, Vertex, usize)>,
    {
        let g = Self::new(n, internal, edges)?;
        g.validate()?;
        Ok(g)
    }

    fn check_vertex(&self, v: Vertex) -> Result<()> {
        let ok = match v {
            Vertex::Leaf(i) => i < self.leaves,
            Vertex::Internal(i) => i < self.internal,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::UnknownVertex(v.to_string()))
        }
    }

    /// Largest leaf label `n`; `-1` for an unrooted graph.
    pub fn n(&self) -> isize {
        self.leaves as isize - 1
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves
    }

    pub fn internal_count(&self) -> usize {
        self.internal
    }

    pub fn vertex_count(&self) -> usize {
        self.leaves + self.internal
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.leaves).map(Vertex::Leaf).chain((0..self.internal).map(Vertex::Internal))
    }

    /// Distinct edge pairs with their multiplicities, in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex, usize)> + '_ {
        self.edges.iter().map(|(&(u, v), &m)| (u, v, m))
    }

    /// Number of distinct vertex pairs carrying an edge.
    pub fn support_size(&self) -> usize {
        self.edges.len()
    }

    pub fn multiplicity(&self, u: Vertex, v: Vertex) -> usize {
        self.edges.get(&ordered(u, v)).copied().unwrap_or(0)
    }

    /// |E| counted with multiplicity.
    pub fn edge_count(&self) -> usize {
        self.edges.values().sum()
    }

    /// s = |E| − |V| + 1.
    pub fn surplus(&self) -> i64 {
        self.edge_count() as i64 - self.vertex_count() as i64 + 1
    }

    pub fn degree(&self, v: Vertex) -> Result<usize> {
        self.check_vertex(v)?;
        Ok(self
            .edges
            .iter()
            .map(|(&(a, b), &m)| if a == v && b == v { 2 * m } else if a == v || b == v { m } else { 0 })
            .sum())
    }

    /// Degrees of leaves followed by internal vertices.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertex_count()];
        for (&(u, v), &m) in &self.edges {
            deg[self.index(u)] += m;
            deg[self.index(v)] += m;
        }
        deg
    }

    /// Degrees of internal vertices only.
    pub fn internal_degrees(&self) -> Vec<usize> {
        self.degrees()[self.leaves..].to_vec()
    }

    /// Dense index: leaves first, then internal vertices.
    pub fn index(&self, v: Vertex) -> usize {
        match v {
            Vertex::Leaf(i) => i,
            Vertex::Internal(i) => self.leaves + i,
        }
    }

    pub fn vertex_at(&self, idx: usize) -> Vertex {
        if idx < self.leaves {
            Vertex::Leaf(idx)
        } else {
            Vertex::Internal(idx - self.leaves)
        }
    }

    /// sl(G): total multiplicity of self-loops.
    pub fn self_loops(&self) -> usize {
        self.edges.iter().filter(|((u, v), _)| u == v).map(|(_, &m)| m).sum()
    }

    /// ∏ mult(e)! over the edge support.
    pub fn mult_factorial_product(&self) -> u64 {
        self.edges.values().map(|&m| (1..=m as u64).product::<u64>()).product()
    }

    /// Neighbour lists over dense indices, one entry per edge copy
    /// (self-loops listed twice).
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertex_count()];
        for (&(u, v), &m) in &self.edges {
            let (a, b) = (self.index(u), self.index(v));
            for _ in 0..m {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        let nv = self.vertex_count();
        if nv == 0 {
            return false;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; nv];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = queue.pop_front() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    queue.push_back(y);
                }
            }
        }
        count == nv
    }

    /// Edge-count distances from `v` to every vertex (dense indices).
    pub fn hop_distances(&self, v: Vertex) -> Vec<Option<usize>> {
        let adj = self.adjacency();
        let mut dist = vec![None; self.vertex_count()];
        let s = self.index(v);
        dist[s] = Some(0);
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            let d = dist[x].unwrap_or(0);
            for &y in &adj[x] {
                if dist[y].is_none() {
                    dist[y] = Some(d + 1);
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    /// Checks connectivity, leaf degree 1, internal degree ≥ 3 and s ≥ 0.
    pub fn validate(&self) -> Result<()> {
        if !self.is_connected() {
            return Err(Error::InvalidGraph("not connected".into()));
        }
        let deg = self.degrees();
        for (i, &d) in deg.iter().enumerate() {
            let v = self.vertex_at(i);
            match v {
                Vertex::Leaf(_) if d != 1 => {
                    return Err(Error::InvalidGraph(format!("leaf {v} has degree {d}")));
                }
                Vertex::Internal(_) if d < 3 => {
                    return Err(Error::InvalidGraph(format!("internal vertex {v} has degree {d}")));
                }
                _ => {}
            }
        }
        if self.surplus() < 0 {
            return Err(Error::InvalidGraph("negative surplus".into()));
        }
        Ok(())
    }

    /// True iff the graph lies in 𝕄_{s,n} (or 𝕄_{s,−1} when `n = −1`).
    pub fn validate_membership(&self, s: i64, n: isize) -> bool {
        if self.n() != n || self.surplus() != s {
            return false;
        }
        if n == -1 && self.internal == 0 {
            return false;
        }
        self.validate().is_ok()
    }

    /// Applies `perm` to internal indices: `Internal(i)` becomes `Internal(perm[i])`.
    pub fn relabel_internal(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.internal {
            return Err(Error::InvalidParameter("permutation length mismatch".into()));
        }
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            if p >= perm.len() || seen[p] {
                return Err(Error::InvalidParameter("not a permutation".into()));
            }
            seen[p] = true;
        }
        let map = |v: Vertex| match v {
            Vertex::Internal(i) => Vertex::Internal(perm[i]),
            leaf => leaf,
        };
        Self::new(self.n(), self.internal, self.edges().map(|(u, v, m)| (map(u), map(v), m)))
    }

    /// Per-internal-vertex isomorphism invariant used to prune permutation searches.
    fn vertex_invariants(&self) -> Vec<(usize, usize, Vec<(usize, usize)>)> {
        let deg = self.degrees();
        let mut inv: Vec<(usize, usize, Vec<(usize, usize)>)> =
            (0..self.internal).map(|i| (deg[self.leaves + i], 0, Vec::new())).collect();
        for (&(u, v), &m) in &self.edges {
            match (u, v) {
                (Vertex::Internal(a), Vertex::Internal(b)) if a == b => inv[a].1 += m,
                (Vertex::Leaf(l), Vertex::Internal(a)) => inv[a].2.push((l, m)),
                _ => {}
            }
        }
        inv
    }

    fn encode_with(&self, pos: &[usize], buf: &mut Vec<(u16, u16, u16)>) {
        buf.clear();
        let code = |v: Vertex| -> u16 {
            match v {
                Vertex::Leaf(i) => i as u16,
                Vertex::Internal(i) => (self.leaves + pos[i]) as u16,
            }
        };
        for (&(u, v), &m) in &self.edges {
            let (a, b) = (code(u), code(v));
            buf.push((a.min(b), a.max(b), m as u16));
        }
        buf.sort_unstable();
    }

    /// Minimal encoding over internal relabellings together with |Sym(G)|.
    fn canonical_search(&self) -> Result<(Vec<(u16, u16, u16)>, u64, Vec<usize>)> {
        if self.internal > MAX_PERMUTED_INTERNAL {
            return Err(Error::SizeLimit(format!(
                "{} internal vertices exceed the permutation limit {MAX_PERMUTED_INTERNAL}",
                self.internal
            )));
        }
        if self.vertex_count() > u16::MAX as usize || self.edges.values().any(|&m| m > u16::MAX as usize) {
            return Err(Error::SizeLimit("graph too large to encode".into()));
        }
        let inv = self.vertex_invariants();
        let mut order: Vec<usize> = (0..self.internal).collect();
        order.sort_by(|&a, &b| inv[a].cmp(&inv[b]));
        // slot_key[p] is the invariant that the vertex placed at position p must carry.
        let slot_key: Vec<_> = order.iter().map(|&i| inv[i].clone()).collect();

        struct Search<'a> {
            g: &'a Multigraph,
            inv: &'a [(usize, usize, Vec<(usize, usize)>)],
            slot_key: &'a [(usize, usize, Vec<(usize, usize)>)],
            pos: Vec<usize>,
            used: Vec<bool>,
            buf: Vec<(u16, u16, u16)>,
            best: Option<Vec<(u16, u16, u16)>>,
            best_pos: Vec<usize>,
            hits: u64,
        }
        impl Search<'_> {
            fn run(&mut self, slot: usize) {
                if slot == self.pos.len() {
                    let pos = std::mem::take(&mut self.pos);
                    let mut buf = std::mem::take(&mut self.buf);
                    self.g.encode_with(&pos, &mut buf);
                    match &self.best {
                        Some(b) if buf > *b => {}
                        Some(b) if buf == *b => self.hits += 1,
                        _ => {
                            self.best = Some(buf.clone());
                            self.best_pos = pos.clone();
                            self.hits = 1;
                        }
                    }
                    self.pos = pos;
                    self.buf = buf;
                    return;
                }
                for v in 0..self.pos.len() {
                    if !self.used[v] && self.inv[v] == self.slot_key[slot] {
                        self.used[v] = true;
                        self.pos[v] = slot;
                        self.run(slot + 1);
                        self.used[v] = false;
                    }
                }
            }
        }
        let mut search = Search {
            g: self,
            inv: &inv,
            slot_key: &slot_key,
            pos: vec![0; self.internal],
            used: vec![false; self.internal],
            buf: Vec::new(),
            best: None,
            best_pos: Vec::new(),
            hits: 0,
        };
        search.run(0);
        let best = search.best.unwrap_or_default();
        Ok((best, search.hits, search.best_pos))
    }

    /// |Sym(G)|: internal-vertex permutations preserving the edge multiset.
    pub fn symmetry_count(&self) -> Result<u64> {
        Ok(self.canonical_search()?.1)
    }

    /// Canonical code: leaf count, internal count and the lexicographically
    /// minimal sorted edge list over internal relabellings.
    pub fn canonical_code(&self) -> Result<CanonicalCode> {
        let (best, _, _) = self.canonical_search()?;
        let mut bytes = Vec::with_capacity(4 + 6 * best.len());
        bytes.extend_from_slice(&(self.leaves as u16).to_be_bytes());
        bytes.extend_from_slice(&(self.internal as u16).to_be_bytes());
        for (a, b, m) in best {
            bytes.extend_from_slice(&a.to_be_bytes());
            bytes.extend_from_slice(&b.to_be_bytes());
            bytes.extend_from_slice(&m.to_be_bytes());
        }
        Ok(CanonicalCode(bytes))
    }

    /// The representative whose internal labelling realizes the canonical code.
    pub fn canonical_form(&self) -> Result<Self> {
        let (_, _, pos) = self.canonical_search()?;
        self.relabel_internal(&pos)
    }

    /// Rebuilds a multigraph from its canonical code.
    pub fn from_code(code: &CanonicalCode) -> Result<Self> {
        let b = &code.0;
        if b.len() < 4 || (b.len() - 4) % 6 != 0 {
            return Err(Error::Parse("malformed canonical code".into()));
        }
        let rd = |i: usize| u16::from_be_bytes([b[i], b[i + 1]]) as usize;
        let leaves = rd(0);
        let internal = rd(2);
        let vert = |x: usize| if x < leaves { Vertex::Leaf(x) } else { Vertex::Internal(x - leaves) };
        let edges = (4..b.len()).step_by(6).map(|i| (vert(rd(i)), vert(rd(i + 2)), rd(i + 4)));
        Self::new(leaves as isize - 1, internal, edges)
    }

    /// Removes one copy of edge `{u, v}`.
    pub(crate) fn remove_edge_copy(&mut self, u: Vertex, v: Vertex) -> Result<()> {
        let key = ordered(u, v);
        match self.edges.get_mut(&key) {
            Some(m) if *m > 1 => {
                *m -= 1;
                Ok(())
            }
            Some(_) => {
                self.edges.remove(&key);
                Ok(())
            }
            None => Err(Error::InvalidGraph(format!("no edge {u}-{v}"))),
        }
    }

    pub(crate) fn add_edge_copies(&mut self, u: Vertex, v: Vertex, m: usize) {
        *self.edges.entry(ordered(u, v)).or_insert(0) += m;
    }

    pub(crate) fn add_internal(&mut self) -> Vertex {
        self.internal += 1;
        Vertex::Internal(self.internal - 1)
    }

    pub(crate) fn add_leaf(&mut self) -> Vertex {
        self.leaves += 1;
        Vertex::Leaf(self.leaves - 1)
    }

    /// Removes the highest-labelled leaf together with its edge.
    pub(crate) fn pop_leaf(&mut self) -> Result<Vertex> {
        if self.leaves == 0 {
            return Err(Error::InvalidGraph("no leaf to remove".into()));
        }
        let leaf = Vertex::Leaf(self.leaves - 1);
        let incident: Vec<_> = self.edges.keys().filter(|(a, b)| *a == leaf || *b == leaf).copied().collect();
        if incident.len() != 1 || self.edges[&incident[0]] != 1 {
            return Err(Error::InvalidGraph(format!("{leaf} is not a leaf")));
        }
        let (a, b) = incident[0];
        self.edges.remove(&incident[0]);
        self.leaves -= 1;
        Ok(if a == leaf { b } else { a })
    }

    /// Deletes internal vertex `w` and shifts higher internal indices down.
    pub(crate) fn delete_internal(&mut self, w: usize) {
        let shift = |v: Vertex| match v {
            Vertex::Internal(i) if i > w => Vertex::Internal(i - 1),
            other => other,
        };
        let old = std::mem::take(&mut self.edges);
        for ((u, v), m) in old {
            debug_assert!(u != Vertex::Internal(w) && v != Vertex::Internal(w));
            *self.edges.entry(ordered(shift(u), shift(v))).or_insert(0) += m;
        }
        self.internal -= 1;
    }

    /// Replaces a degree-2 internal vertex by a single edge between its neighbours.
    pub(crate) fn contract_degree_two(&mut self, w: usize) -> Result<()> {
        let wv = Vertex::Internal(w);
        let mut nbrs = Vec::new();
        for (&(u, v), &m) in &self.edges {
            if u == wv && v == wv {
                return Err(Error::InvalidGraph(format!("{wv} carries a loop")));
            }
            for _ in 0..m {
                if u == wv {
                    nbrs.push(v);
                } else if v == wv {
                    nbrs.push(u);
                }
            }
        }
        if nbrs.len() != 2 {
            return Err(Error::InvalidGraph(format!("{wv} has degree {}", nbrs.len())));
        }
        for &x in &nbrs {
            self.remove_edge_copy(wv, x)?;
        }
        self.add_edge_copies(nbrs[0], nbrs[1], 1);
        self.delete_internal(w);
        Ok(())
    }
}

impl Serialize for Multigraph {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct EdgeRow {
            u: Vertex,
            v: Vertex,
            mult: usize,
        }
        let edges: Vec<EdgeRow> = self.edges().map(|(u, v, mult)| EdgeRow { u, v, mult }).collect();
        let mut st = s.serialize_struct("Multigraph", 4)?;
        st.serialize_field("surplus", &self.surplus())?;
        st.serialize_field("leaves", &self.n())?;
        st.serialize_field("internal", &self.internal)?;
        st.serialize_field("edges", &edges)?;
        st.end()
    }
}

impl Multigraph {
    /// Parses the JSON graph schema produced by the serializer.
    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let bad = |m: &str| Error::Parse(m.to_string());
        let n = value["leaves"].as_i64().ok_or_else(|| bad("missing leaves"))? as isize;
        let internal = value["internal"].as_u64().ok_or_else(|| bad("missing internal"))? as usize;
        let mut edges = Vec::new();
        for e in value["edges"].as_array().ok_or_else(|| bad("missing edges"))? {
            let u: Vertex = e["u"].as_str().ok_or_else(|| bad("edge u"))?.parse()?;
            let v: Vertex = e["v"].as_str().ok_or_else(|| bad("edge v"))?.parse()?;
            let m = e["mult"].as_u64().ok_or_else(|| bad("edge mult"))? as usize;
            edges.push((u, v, m));
        }
        Self::new(n, internal, edges)
    }
}

/// Shorthand constructors used throughout the crate and its tests.
pub mod build {
    use super::Vertex;

    pub const fn leaf(i: usize) -> Vertex {
        Vertex::Leaf(i)
    }

    pub const fn int(i: usize) -> Vertex {
        Vertex::Internal(i)
    }
}

#[cfg(test)]
mod tests {
    use super::build::{int, leaf};
    use super::*;
    use proptest::prelude::*;

    fn figure_eight() -> Multigraph {
        Multigraph::planted(0, 1, [(leaf(0), int(0), 1), (int(0), int(0), 2)]).unwrap()
    }

    fn theta() -> Multigraph {
        Multigraph::planted(0, 2, [(leaf(0), int(0), 1), (int(0), int(1), 3)]).unwrap()
    }

    fn symmetric_pair() -> Multigraph {
        Multigraph::planted(
            0,
            3,
            [(leaf(0), int(0), 1), (int(0), int(1), 1), (int(0), int(2), 1), (int(1), int(2), 2)],
        )
        .unwrap()
    }

    #[test]
    fn surplus_examples() {
        let edge = Multigraph::planted(1, 0, [(leaf(0), leaf(1), 1)]).unwrap();
        assert_eq!(edge.surplus(), 0);
        assert_eq!(figure_eight().surplus(), 2);
        assert_eq!(theta().surplus(), 2);
    }

    #[test]
    fn degree_examples() {
        let g = figure_eight();
        assert_eq!(g.degree(leaf(0)).unwrap(), 1);
        assert_eq!(g.degree(int(0)).unwrap(), 5);
        assert_eq!(theta().degree(int(0)).unwrap(), 4);
        assert!(g.degree(int(3)).is_err());
    }

    #[test]
    fn symmetry_examples() {
        assert_eq!(figure_eight().symmetry_count().unwrap(), 1);
        assert_eq!(symmetric_pair().symmetry_count().unwrap(), 2);
        assert_eq!(theta().symmetry_count().unwrap(), 1);
    }

    #[test]
    fn codes_distinguish_and_identify() {
        let t = theta();
        let swapped = t.relabel_internal(&[1, 0]).unwrap();
        assert_ne!(t, swapped);
        assert_eq!(t.canonical_code().unwrap(), swapped.canonical_code().unwrap());
        assert_ne!(t.canonical_code().unwrap(), figure_eight().canonical_code().unwrap());
        let code = t.canonical_code().unwrap();
        let back = Multigraph::from_code(&code).unwrap();
        assert_eq!(back.canonical_code().unwrap(), code);
        assert_eq!(CanonicalCode::from_hex(&code.to_hex()).unwrap(), code);
    }

    #[test]
    fn membership_examples() {
        assert!(figure_eight().validate_membership(2, 0));
        let unrooted = Multigraph::new(-1, 1, [(int(0), int(0), 2)]).unwrap();
        assert!(unrooted.validate_membership(2, -1));
        let path = Multigraph::new(1, 1, [(leaf(0), int(0), 1), (int(0), leaf(1), 1)]).unwrap();
        assert!(!path.validate_membership(0, 1));
        assert!(!figure_eight().validate_membership(1, 0));
    }

    #[test]
    fn json_round_trip() {
        let g = symmetric_pair();
        let v = serde_json::to_value(&g).unwrap();
        assert_eq!(v["surplus"], 2);
        assert_eq!(v["edges"][0]["u"], "L0");
        assert_eq!(Multigraph::from_json(&v).unwrap(), g);
    }

    #[test]
    fn contraction_merges_edges() {
        let mut g = Multigraph::new(1, 1, [(leaf(0), int(0), 1), (int(0), leaf(1), 1)]).unwrap();
        g.contract_degree_two(0).unwrap();
        assert_eq!(g.multiplicity(leaf(0), leaf(1)), 1);
        assert_eq!(g.internal_count(), 0);
    }

    /// Random connected multigraph on a few internal vertices with leaves attached.
    fn arb_graph() -> impl Strategy<Value = Multigraph> {
        (1usize..6, 0usize..4, proptest::collection::vec((0usize..6, 0usize..6, 1usize..3), 0..8)).prop_map(
            |(k, n_leaves, extra)| {
                let mut edges = Vec::new();
                for i in 1..k {
                    edges.push((int(i - 1), int(i), 1));
                }
                for (a, b, m) in extra {
                    edges.push((int(a % k), int(b % k), m));
                }
                for l in 0..n_leaves {
                    edges.push((leaf(l), int(l % k), 1));
                }
                Multigraph::new(n_leaves as isize - 1, k, edges).unwrap()
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn code_invariant_under_relabelling(g in arb_graph(), seed in any::<u64>()) {
            let k = g.internal_count();
            let mut perm: Vec<usize> = (0..k).collect();
            let mut x = seed;
            for i in (1..k).rev() {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (x >> 33) as usize % (i + 1));
            }
            let h = g.relabel_internal(&perm).unwrap();
            prop_assert_eq!(g.canonical_code().unwrap(), h.canonical_code().unwrap());
            prop_assert_eq!(g.symmetry_count().unwrap(), h.symmetry_count().unwrap());
        }

        #[test]
        fn degree_sum_and_symmetry_divisibility(g in arb_graph()) {
            let total: usize = g.degrees().iter().sum();
            prop_assert_eq!(total, 2 * g.edge_count());
            let sym = g.symmetry_count().unwrap();
            let fact: u64 = (1..=g.internal_count() as u64).product();
            prop_assert!(sym >= 1);
            prop_assert_eq!(fact % sym, 0);
        }
    }
}
