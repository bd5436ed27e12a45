//! Signed directed graphs: validation, connectivity, structural balance and
//! the switching calculus `a'_ik = θ(i) a_ik θ(k)`.
//!
//! Vertices are 0-based inside the library. The JSON graph format and all
//! user-facing error messages use 1-based agent numbers.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("a graph needs at least one vertex")]
    Empty,
    #[error("self-loop at agent {}", .0 + 1)]
    SelfLoop(usize),
    #[error("duplicate edge {} -> {}", .0 + 1, .1 + 1)]
    DuplicateEdge(usize, usize),
    #[error("edge ({i}, {k}) refers to an agent outside 1..={n}")]
    IndexOutOfRange { i: i64, k: i64, n: usize },
    #[error("edge sign must be +1 or -1, got {0}")]
    InvalidSign(i64),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}

/// A directed signed edge `from -> to`. With the sensing convention, `to` is a
/// neighbor whose opinion `from` observes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub sign: i8,
}

/// Simple signed digraph. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedGraph {
    n: usize,
    /// Sorted by `(from, to)`.
    edges: Vec<Edge>,
    /// Row-major `n x n`, entries in {-1, 0, 1}.
    adjacency: Vec<i8>,
}

impl SignedGraph {
    /// Builds a graph from 0-based edges.
    pub fn new(n: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut adjacency = vec![0i8; n * n];
        let mut list = Vec::new();
        for e in edges {
            if e.from >= n || e.to >= n {
                return Err(GraphError::IndexOutOfRange {
                    i: e.from as i64 + 1,
                    k: e.to as i64 + 1,
                    n,
                });
            }
            if e.sign != 1 && e.sign != -1 {
                return Err(GraphError::InvalidSign(e.sign as i64));
            }
            if e.from == e.to {
                return Err(GraphError::SelfLoop(e.from));
            }
            let slot = &mut adjacency[e.from * n + e.to];
            if *slot != 0 {
                return Err(GraphError::DuplicateEdge(e.from, e.to));
            }
            *slot = e.sign;
            list.push(e);
        }
        list.sort_by_key(|e| (e.from, e.to));
        Ok(Self {
            n,
            edges: list,
            adjacency,
        })
    }

    /// Builds a graph from a dense sign matrix given row by row.
    pub fn from_signs(n: usize, signs: &[i8]) -> Result<Self, GraphError> {
        if signs.len() != n * n {
            return Err(GraphError::DimensionMismatch {
                expected: n * n,
                actual: signs.len(),
            });
        }
        let edges = (0..n * n).filter(|&idx| signs[idx] != 0).map(|idx| Edge {
            from: idx / n,
            to: idx % n,
            sign: signs[idx],
        });
        Self::new(n, edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// `a_ik`, 0-based.
    pub fn sign(&self, i: usize, k: usize) -> i8 {
        self.adjacency[i * self.n + k]
    }

    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, k| self.sign(i, k) as f64)
    }

    pub fn is_all_positive(&self) -> bool {
        self.edges.iter().all(|e| e.sign > 0)
    }

    /// Every ordered pair joined by a directed path; signs are ignored.
    pub fn is_strongly_connected(&self) -> bool {
        let mut out_adj = vec![Vec::new(); self.n];
        let mut in_adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            out_adj[e.from].push(e.to);
            in_adj[e.to].push(e.from);
        }
        reaches_all(&out_adj) && reaches_all(&in_adj)
    }

    /// Applies `a'_ik = θ(i) a_ik θ(k)`.
    pub fn switch(&self, w: &SwitchingAssignment) -> Result<Self, GraphError> {
        if w.len() != self.n {
            return Err(GraphError::DimensionMismatch {
                expected: self.n,
                actual: w.len(),
            });
        }
        let theta = w.theta();
        let edges: Vec<Edge> = self
            .edges
            .iter()
            .map(|e| Edge {
                sign: theta[e.from] * e.sign * theta[e.to],
                ..*e
            })
            .collect();
        let mut adjacency = vec![0i8; self.n * self.n];
        for e in &edges {
            adjacency[e.from * self.n + e.to] = e.sign;
        }
        Ok(Self {
            n: self.n,
            edges,
            adjacency,
        })
    }

    /// Decides structural balance.
    ///
    /// Vertices are linked in an undirected constraint graph whenever an edge
    /// joins them in either direction. Opposite-signed reciprocal edges are an
    /// immediate odd cycle. Otherwise each component is 2-colored by BFS and
    /// every non-tree link is checked; a violated link closes an odd cycle
    /// through the BFS tree.
    pub fn balance_certificate(&self) -> BalanceCertificate {
        let n = self.n;
        for e in &self.edges {
            let back = self.sign(e.to, e.from);
            if e.from < e.to && back != 0 && back != e.sign {
                return BalanceCertificate::Unbalanced(WitnessCycle {
                    vertices: vec![e.from, e.to],
                    signs: vec![e.sign, back],
                });
            }
        }

        let mut links: Vec<Vec<(usize, i8)>> = vec![Vec::new(); n];
        for e in &self.edges {
            // one undirected link per vertex pair
            if self.sign(e.to, e.from) == 0 || e.from < e.to {
                links[e.from].push((e.to, e.sign));
                links[e.to].push((e.from, e.sign));
            }
        }

        let mut theta = vec![0i8; n];
        let mut parent: Vec<Option<(usize, i8)>> = vec![None; n];
        let mut depth = vec![0usize; n];
        for root in 0..n {
            if theta[root] != 0 {
                continue;
            }
            theta[root] = 1;
            let mut queue = VecDeque::from([root]);
            while let Some(v) = queue.pop_front() {
                for &(k, s) in &links[v] {
                    if theta[k] == 0 {
                        theta[k] = theta[v] * s;
                        parent[k] = Some((v, s));
                        depth[k] = depth[v] + 1;
                        queue.push_back(k);
                    } else if theta[v] * s * theta[k] < 0 {
                        let witness = close_cycle(v, k, s, &parent, &depth);
                        return BalanceCertificate::Unbalanced(witness);
                    }
                }
            }
        }
        BalanceCertificate::Balanced(SwitchingAssignment { theta })
    }

    pub fn is_structurally_balanced(&self) -> bool {
        self.balance_certificate().is_balanced()
    }
}

fn reaches_all(adj: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; adj.len()];
    seen[0] = true;
    let mut stack = vec![0];
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &k in &adj[v] {
            if !seen[k] {
                seen[k] = true;
                count += 1;
                stack.push(k);
            }
        }
    }
    count == adj.len()
}

/// Cycle `v -> ... -> lca -> ... -> k -> v` closed by the link `(v, k, s)`.
fn close_cycle(
    v: usize,
    k: usize,
    s: i8,
    parent: &[Option<(usize, i8)>],
    depth: &[usize],
) -> WitnessCycle {
    // walk both endpoints up to their lowest common ancestor
    let (mut a, mut b) = (v, k);
    let mut up_a = Vec::new(); // (vertex, sign of link to its parent)
    let mut up_b = Vec::new();
    while depth[a] > depth[b] {
        let (p, sp) = parent[a].expect("non-root has parent");
        up_a.push((a, sp));
        a = p;
    }
    while depth[b] > depth[a] {
        let (p, sp) = parent[b].expect("non-root has parent");
        up_b.push((b, sp));
        b = p;
    }
    while a != b {
        let (pa, sa) = parent[a].expect("non-root has parent");
        let (pb, sb) = parent[b].expect("non-root has parent");
        up_a.push((a, sa));
        up_b.push((b, sb));
        a = pa;
        b = pb;
    }
    let lca = a;

    let mut vertices = Vec::new();
    let mut signs = Vec::new();
    for &(x, sx) in &up_a {
        vertices.push(x);
        signs.push(sx);
    }
    vertices.push(lca);
    for &(x, sx) in up_b.iter().rev() {
        signs.push(sx);
        vertices.push(x);
    }
    // from k back to v
    signs.push(s);
    WitnessCycle { vertices, signs }
}

/// Per-vertex switching bits `θ(i) ∈ {+1, -1}`; the switching set is
/// `W = { i : θ(i) = -1 }`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SwitchingAssignment {
    theta: Vec<i8>,
}

impl SwitchingAssignment {
    pub fn identity(n: usize) -> Self {
        Self { theta: vec![1; n] }
    }

    /// `θ ≡ -1`.
    pub fn all(n: usize) -> Self {
        Self { theta: vec![-1; n] }
    }

    /// From a 0-based switching set. Repeated vertices are ignored.
    pub fn from_set(n: usize, set: &[usize]) -> Result<Self, GraphError> {
        let mut theta = vec![1i8; n];
        for &i in set {
            if i >= n {
                return Err(GraphError::IndexOutOfRange {
                    i: i as i64 + 1,
                    k: i as i64 + 1,
                    n,
                });
            }
            theta[i] = -1;
        }
        Ok(Self { theta })
    }

    pub fn from_theta(theta: Vec<i8>) -> Result<Self, GraphError> {
        if let Some(&bad) = theta.iter().find(|&&t| t != 1 && t != -1) {
            return Err(GraphError::InvalidSign(bad as i64));
        }
        Ok(Self { theta })
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn theta(&self) -> &[i8] {
        &self.theta
    }

    /// 0-based members of `W`, ascending.
    pub fn switching_set(&self) -> Vec<usize> {
        (0..self.theta.len()).filter(|&i| self.theta[i] < 0).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.theta.iter().all(|&t| t > 0)
    }

    /// Entrywise product; switching by the result equals switching by `self`
    /// then `other`.
    pub fn compose(&self, other: &Self) -> Result<Self, GraphError> {
        if self.len() != other.len() {
            return Err(GraphError::DimensionMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(Self {
            theta: self.theta.iter().zip(&other.theta).map(|(a, b)| a * b).collect(),
        })
    }

    /// Assignment of `V \ W`.
    pub fn complement(&self) -> Self {
        Self {
            theta: self.theta.iter().map(|t| -t).collect(),
        }
    }

    /// Global sign flip chosen so that `θ(0) = +1`.
    pub fn normalized(&self) -> Self {
        match self.theta.first() {
            Some(&t) if t < 0 => self.complement(),
            _ => self.clone(),
        }
    }

    /// `Θ x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.theta)
            .map(|(&xi, &t)| if t < 0 { -xi } else { xi })
            .collect()
    }
}

/// A closed walk `vertices[0] -> vertices[1] -> ... -> vertices[0]` in the
/// undirected constraint graph; `signs[j]` is the sign of the link leaving
/// `vertices[j]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WitnessCycle {
    pub vertices: Vec<usize>,
    pub signs: Vec<i8>,
}

impl WitnessCycle {
    pub fn sign_product(&self) -> i8 {
        self.signs.iter().product()
    }

    pub fn negative_count(&self) -> usize {
        self.signs.iter().filter(|&&s| s < 0).count()
    }

    /// Checks that every consecutive pair is joined by an edge (in either
    /// direction) of the recorded sign.
    pub fn is_consistent_with(&self, g: &SignedGraph) -> bool {
        let len = self.vertices.len();
        len >= 2
            && self.signs.len() == len
            && (0..len).all(|j| {
                let (a, b) = (self.vertices[j], self.vertices[(j + 1) % len]);
                let s = self.signs[j];
                g.sign(a, b) == s || g.sign(b, a) == s
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BalanceCertificate {
    /// `θ` maps the graph onto its all-positive representative; `θ(0) = +1`.
    Balanced(SwitchingAssignment),
    Unbalanced(WitnessCycle),
}

impl BalanceCertificate {
    pub fn is_balanced(&self) -> bool {
        matches!(self, Self::Balanced(_))
    }

    pub fn theta(&self) -> Option<&SwitchingAssignment> {
        match self {
            Self::Balanced(t) => Some(t),
            Self::Unbalanced(_) => None,
        }
    }

    /// One-pass check against the graph it was issued for.
    pub fn verify(&self, g: &SignedGraph) -> bool {
        match self {
            Self::Balanced(w) => {
                let t = w.theta();
                w.len() == g.n() && g.edges().iter().all(|e| t[e.from] * e.sign * t[e.to] > 0)
            }
            Self::Unbalanced(c) => c.sign_product() < 0 && c.is_consistent_with(g),
        }
    }
}

/// On-disk graph: `{ "n": 3, "edges": [[1, 2, 1], [2, 3, -1]] }`, 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<[i64; 3]>,
}

impl GraphFile {
    pub fn to_graph(&self) -> Result<SignedGraph, GraphError> {
        validate_graph(self.n, &self.edges)
    }
}

impl From<&SignedGraph> for GraphFile {
    fn from(g: &SignedGraph) -> Self {
        Self {
            n: g.n(),
            edges: g
                .edges()
                .iter()
                .map(|e| [e.from as i64 + 1, e.to as i64 + 1, e.sign as i64])
                .collect(),
        }
    }
}

/// Validates a raw 1-based edge list.
pub fn validate_graph(n: usize, raw: &[[i64; 3]]) -> Result<SignedGraph, GraphError> {
    if n == 0 {
        return Err(GraphError::Empty);
    }
    let mut edges = Vec::with_capacity(raw.len());
    for &[i, k, s] in raw {
        if i < 1 || k < 1 || i as u64 > n as u64 || k as u64 > n as u64 {
            return Err(GraphError::IndexOutOfRange { i, k, n });
        }
        if s != 1 && s != -1 {
            return Err(GraphError::InvalidSign(s));
        }
        edges.push(Edge {
            from: (i - 1) as usize,
            to: (k - 1) as usize,
            sign: s as i8,
        });
    }
    SignedGraph::new(n, edges)
}

/// Fixed fixtures and one seeded random family.
pub mod generators {
    use rand::seq::SliceRandom;
    use rand::Rng;

    use super::{Edge, SignedGraph, SwitchingAssignment};

    /// All-positive complete digraph.
    pub fn complete(n: usize) -> SignedGraph {
        let edges = (0..n)
            .flat_map(|i| (0..n).filter(move |&k| k != i).map(move |k| Edge { from: i, to: k, sign: 1 }));
        SignedGraph::new(n, edges).expect("complete graph is simple")
    }

    /// All-positive directed ring `0 -> 1 -> ... -> n-1 -> 0`.
    pub fn directed_ring(n: usize) -> SignedGraph {
        let edges = (0..n).filter(|_| n > 1).map(|i| Edge {
            from: i,
            to: (i + 1) % n,
            sign: 1,
        });
        SignedGraph::new(n, edges).expect("ring is simple")
    }

    /// Ten agents: directed ring plus the symmetric chords
    /// {1,5} {2,7} {3,8} {4,9} {6,10} (1-based), all positive.
    pub fn fixture10() -> SignedGraph {
        let mut edges: Vec<Edge> = (0..10)
            .map(|i| Edge {
                from: i,
                to: (i + 1) % 10,
                sign: 1,
            })
            .collect();
        for (a, b) in [(1, 5), (2, 7), (3, 8), (4, 9), (6, 10)] {
            edges.push(Edge { from: a - 1, to: b - 1, sign: 1 });
            edges.push(Edge { from: b - 1, to: a - 1, sign: 1 });
        }
        SignedGraph::new(10, edges).expect("fixture is simple")
    }

    /// Strongly connected all-positive digraph: a ring over a random vertex
    /// order plus each remaining ordered pair with probability `p`.
    pub fn random_strongly_connected<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> SignedGraph {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut present = vec![false; n * n];
        if n > 1 {
            for j in 0..n {
                let (a, b) = (order[j], order[(j + 1) % n]);
                present[a * n + b] = true;
            }
        }
        for i in 0..n {
            for k in 0..n {
                if i != k && !present[i * n + k] && rng.random_bool(p) {
                    present[i * n + k] = true;
                }
            }
        }
        let edges = (0..n * n).filter(|&idx| present[idx]).map(|idx| Edge {
            from: idx / n,
            to: idx % n,
            sign: 1,
        });
        SignedGraph::new(n, edges).expect("generated graph is simple")
    }

    pub fn random_assignment<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SwitchingAssignment {
        SwitchingAssignment::from_theta((0..n).map(|_| if rng.random_bool(0.5) { -1 } else { 1 }).collect())
            .expect("signs are +-1")
    }

    /// Structurally balanced by construction.
    pub fn random_balanced<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> (SignedGraph, SwitchingAssignment) {
        let g = random_strongly_connected(n, p, rng);
        let w = random_assignment(n, rng);
        (g.switch(&w).expect("matching length"), w)
    }

    /// Random signature on a random strongly connected topology.
    pub fn random_signed<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> SignedGraph {
        let g = random_strongly_connected(n, p, rng);
        let edges: Vec<Edge> = g
            .edges()
            .iter()
            .map(|e| Edge {
                sign: if rng.random_bool(0.5) { -1 } else { 1 },
                ..*e
            })
            .collect();
        SignedGraph::new(n, edges).expect("same topology")
    }
}

#[cfg(test)]
mod tests {
    use super::generators::*;
    use super::*;

    fn raw(n: usize, edges: &[[i64; 3]]) -> Result<SignedGraph, GraphError> {
        validate_graph(n, edges)
    }

    #[test]
    fn directed_three_cycle_is_valid() {
        let g = raw(3, &[[1, 2, 1], [2, 3, 1], [3, 1, 1]]).unwrap();
        assert_eq!(g.edges().len(), 3);
        assert_eq!(g.sign(0, 1), 1);
        assert_eq!(g.sign(1, 0), 0);
        assert!(g.is_strongly_connected());
    }

    #[test]
    fn rejects_self_loop() {
        assert_eq!(raw(2, &[[1, 1, 1]]), Err(GraphError::SelfLoop(0)));
        assert_eq!(GraphError::SelfLoop(0).to_string(), "self-loop at agent 1");
    }

    #[test]
    fn rejects_duplicate_edge() {
        assert_eq!(raw(2, &[[1, 2, 1], [1, 2, -1]]), Err(GraphError::DuplicateEdge(0, 1)));
    }

    #[test]
    fn rejects_out_of_range_and_bad_sign() {
        assert!(matches!(raw(2, &[[1, 3, 1]]), Err(GraphError::IndexOutOfRange { .. })));
        assert!(matches!(raw(2, &[[0, 1, 1]]), Err(GraphError::IndexOutOfRange { .. })));
        assert_eq!(raw(2, &[[1, 2, 2]]), Err(GraphError::InvalidSign(2)));
        assert_eq!(raw(0, &[]), Err(GraphError::Empty));
    }

    #[test]
    fn connectivity() {
        let star = raw(3, &[[1, 2, 1], [1, 3, 1]]).unwrap();
        assert!(!star.is_strongly_connected());
        let w = SwitchingAssignment::from_set(10, &[0, 4, 7]).unwrap();
        let k10 = complete(10).switch(&w).unwrap();
        assert!(k10.is_strongly_connected());
        assert!(fixture10().is_strongly_connected());
        assert!(SignedGraph::new(1, []).unwrap().is_strongly_connected());
    }

    #[test]
    fn switch_single_vertex_of_k3() {
        let g = complete(3);
        let w = SwitchingAssignment::from_set(3, &[0]).unwrap();
        let s = g.switch(&w).unwrap();
        for (i, k, expect) in [(0, 1, -1), (1, 0, -1), (0, 2, -1), (2, 0, -1), (1, 2, 1), (2, 1, 1)] {
            assert_eq!(s.sign(i, k), expect, "edge {i}->{k}");
        }
    }

    #[test]
    fn switch_by_empty_and_full_set_is_identity() {
        let mut rng = rand::rng();
        let g = random_signed(7, 0.3, &mut rng);
        assert_eq!(g.switch(&SwitchingAssignment::identity(7)).unwrap(), g);
        assert_eq!(g.switch(&SwitchingAssignment::all(7)).unwrap(), g);
        assert!(matches!(
            g.switch(&SwitchingAssignment::identity(6)),
            Err(GraphError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn composition_examples() {
        let a = SwitchingAssignment::from_set(4, &[0]).unwrap();
        let b = SwitchingAssignment::from_set(4, &[1]).unwrap();
        assert!(a.compose(&a).unwrap().is_identity());
        assert_eq!(a.compose(&b).unwrap().switching_set(), vec![0, 1]);
        assert_eq!(a.compose(&a.complement()).unwrap(), SwitchingAssignment::all(4));
        assert!(a.compose(&SwitchingAssignment::identity(3)).is_err());
    }

    #[test]
    fn all_positive_is_balanced_with_identity() {
        let cert = complete(5).balance_certificate();
        assert_eq!(cert, BalanceCertificate::Balanced(SwitchingAssignment::identity(5)));
    }

    #[test]
    fn triangle_with_one_negative_pair_is_unbalanced() {
        let g = raw(3, &[[1, 2, 1], [2, 1, 1], [2, 3, 1], [3, 2, 1], [1, 3, -1], [3, 1, -1]]).unwrap();
        let cert = g.balance_certificate();
        match &cert {
            BalanceCertificate::Unbalanced(c) => {
                assert_eq!(c.vertices.len(), 3);
                assert_eq!(c.sign_product(), -1);
                assert_eq!(c.negative_count() % 2, 1);
            }
            other => panic!("expected unbalanced, got {other:?}"),
        }
        assert!(cert.verify(&g));
    }

    #[test]
    fn antisymmetric_pair_is_unbalanced() {
        let g = raw(2, &[[1, 2, 1], [2, 1, -1]]).unwrap();
        let cert = g.balance_certificate();
        assert!(!cert.is_balanced());
        assert!(cert.verify(&g));
    }

    #[test]
    fn recovers_switching_set_of_switched_k10() {
        let w = SwitchingAssignment::from_set(10, &[0, 1, 2]).unwrap();
        let g = complete(10).switch(&w).unwrap();
        let cert = g.balance_certificate();
        let theta = cert.theta().expect("balanced");
        assert!(cert.verify(&g));
        // θ(1) = +1 normalization picks the complement of {1,2,3}
        assert_eq!(theta, &w.normalized());
        assert_eq!(theta.theta()[0], 1);
    }

    #[test]
    fn graph_file_round_trip() {
        let g = fixture10();
        let file = GraphFile::from(&g);
        let text = serde_json::to_string(&file).unwrap();
        let back: GraphFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_graph().unwrap(), g);
    }
}
