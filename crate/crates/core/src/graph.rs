//! Candidate communication graph and the leader/follower topologies.
//!
//! A [`CandidateGraph`] is the fixed undirected graph whose edges are the
//! potential directed links. Each node `v` carries a listen probability
//! `p_v`: every incoming directed edge `u -> v` is active independently with
//! probability `p_v` in each time slot. Self-loops are never stored here; the
//! averaging rule adds them when forming weight matrices.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Which listen probabilities are admissible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProbabilityCheck {
    /// `0 < p < 1`.
    #[default]
    Strict,
    /// `0 < p <= 1`. Deterministic edges are only meant for oracle and test
    /// graphs.
    Relaxed,
}

impl ProbabilityCheck {
    fn range(self) -> &'static str {
        match self {
            ProbabilityCheck::Strict => "(0, 1)",
            ProbabilityCheck::Relaxed => "(0, 1]",
        }
    }

    fn admits<T: Scalar>(self, p: T) -> bool {
        let pos = p > T::zero();
        match self {
            ProbabilityCheck::Strict => pos && p < T::one(),
            ProbabilityCheck::Relaxed => pos && p <= T::one(),
        }
    }
}

/// Connected undirected graph with per-node listen probabilities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateGraph<T> {
    n: usize,
    /// Undirected edges as `(u, v)` with `u < v`, sorted.
    edges: Vec<(usize, usize)>,
    probs: Vec<T>,
    degrees: Vec<usize>,
    #[serde(skip)]
    adjacency: Vec<bool>,
    #[serde(skip)]
    neighbors: Vec<Vec<usize>>,
}

/// Validates and builds a candidate graph with strict probabilities. The node
/// count is `probs.len()`.
pub fn build_graph<T: Scalar>(edges: &[(usize, usize)], probs: &[T]) -> Result<CandidateGraph<T>> {
    CandidateGraph::new(edges, probs, ProbabilityCheck::Strict)
}

impl<T: Scalar> CandidateGraph<T> {
    pub fn new(edges: &[(usize, usize)], probs: &[T], check: ProbabilityCheck) -> Result<Self> {
        let n = probs.len();
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        if n == 1 {
            return Err(Error::DomainError(
                "a candidate graph needs at least two nodes".into(),
            ));
        }
        let mut set = BTreeSet::new();
        for &(u, v) in edges {
            for node in [u, v] {
                if node >= n {
                    return Err(Error::NodeOutOfRange { node, n });
                }
            }
            if u == v {
                return Err(Error::SelfLoop { node: u });
            }
            if !set.insert((u.min(v), u.max(v))) {
                return Err(Error::DuplicateEdge { u, v });
            }
        }
        for (node, &p) in probs.iter().enumerate() {
            if !check.admits(p) {
                return Err(Error::InvalidProbability {
                    node,
                    value: p.as_f64(),
                    range: check.range(),
                });
            }
        }

        let edges: Vec<_> = set.into_iter().collect();
        let mut adjacency = vec![false; n * n];
        let mut neighbors = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adjacency[u * n + v] = true;
            adjacency[v * n + u] = true;
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        // d_i is the column sum of A_c; the row sum must agree for a symmetric A_c.
        let degrees: Vec<usize> = (0..n)
            .map(|i| (0..n).filter(|&j| adjacency[j * n + i]).count())
            .collect();
        debug_assert!((0..n).all(|i| (0..n).filter(|&j| adjacency[i * n + j]).count() == degrees[i]));

        let graph = CandidateGraph {
            n,
            edges,
            probs: probs.to_vec(),
            degrees,
            adjacency,
            neighbors,
        };
        let components = graph.component_count();
        if components != 1 {
            return Err(Error::DisconnectedGraph { components });
        }
        Ok(graph)
    }

    /// Same topology, different probabilities.
    pub fn with_probs(&self, probs: &[T], check: ProbabilityCheck) -> Result<Self> {
        Self::new(&self.edges, probs, check)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn prob(&self, v: usize) -> T {
        self.probs[v]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn degree(&self, v: usize) -> usize {
        self.degrees[v]
    }

    /// `a_uv` of the candidate adjacency.
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u * self.n + v]
    }

    /// Sorted neighbor list of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn adjacency_matrix(&self) -> DMatrix<T> {
        DMatrix::from_fn(self.n, self.n, |u, v| {
            if self.has_edge(u, v) {
                T::one()
            } else {
                T::zero()
            }
        })
    }

    /// Directed candidate edges `(u, v)` in lexicographic order. This is the
    /// order in which samplers and the enumeration oracle consume them.
    pub fn directed_edges(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|u| self.neighbors[u].iter().map(move |&v| (u, v)))
            .collect()
    }

    fn component_count(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut components = self.n;
        for &(u, v) in &self.edges {
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru != rv {
                parent[ru] = rv;
                components -= 1;
            }
        }
        components
    }
}

/// Which degree a leader's listen probability is inversely proportional to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegreeBasis {
    /// Full degree in the candidate graph, leader links included.
    Full,
    /// Number of followers attached to the leader (degree within its star).
    Followers,
}

/// Leader listen probability `p_v = scale / degree_v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeaderProb<T> {
    pub scale: T,
    pub basis: DegreeBasis,
}

impl<T: Scalar> LeaderProb<T> {
    pub fn inverse_degree() -> Self {
        Self::scaled_inverse_degree(T::one())
    }

    pub fn scaled_inverse_degree(scale: T) -> Self {
        LeaderProb {
            scale,
            basis: DegreeBasis::Full,
        }
    }

    pub fn inverse_follower_count() -> Self {
        Self::scaled_inverse_follower_count(T::one())
    }

    pub fn scaled_inverse_follower_count(scale: T) -> Self {
        LeaderProb {
            scale,
            basis: DegreeBasis::Followers,
        }
    }
}

/// Node numbering of the leader/follower graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Layout {
    /// `[leader 1, leader 2, leader 3, followers of 1, followers of 2, followers of 3]`.
    #[default]
    LeadersFirst,
    /// `[leader 1, followers of 1, leader 2, followers of 2, leader 3, followers of 3]`.
    Interleaved,
}

/// Three stars whose centers (leaders) are linked in a chain or a ring.
/// Each follower listens only to its own leader.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderFollower<T> {
    pub follower_counts: [usize; 3],
    pub p_follower: T,
    pub leader_prob: LeaderProb<T>,
    pub layout: Layout,
}

impl<T: Scalar> LeaderFollower<T> {
    pub fn new(follower_counts: [usize; 3], p_follower: T, leader_prob: LeaderProb<T>) -> Self {
        LeaderFollower {
            follower_counts,
            p_follower,
            leader_prob,
            layout: Layout::LeadersFirst,
        }
    }

    pub fn layout(mut self, layout: Layout) -> Self {
        self.layout = layout;
        self
    }

    pub fn node_count(&self) -> usize {
        3 + self.follower_counts.iter().sum::<usize>()
    }

    /// Node indices of the three leaders.
    pub fn leaders(&self) -> [usize; 3] {
        let c = self.follower_counts;
        match self.layout {
            Layout::LeadersFirst => [0, 1, 2],
            Layout::Interleaved => [0, c[0] + 1, c[0] + c[1] + 2],
        }
    }

    /// Node indices of the followers of leader `l` (0-based).
    pub fn followers(&self, l: usize) -> std::ops::Range<usize> {
        let c = self.follower_counts;
        let start = match self.layout {
            Layout::LeadersFirst => 3 + c[..l].iter().sum::<usize>(),
            Layout::Interleaved => self.leaders()[l] + 1,
        };
        start..start + c[l]
    }

    pub fn chain(&self) -> Result<CandidateGraph<T>> {
        self.build(false)
    }

    pub fn ring(&self) -> Result<CandidateGraph<T>> {
        self.build(true)
    }

    fn build(&self, ring: bool) -> Result<CandidateGraph<T>> {
        if self.follower_counts.contains(&0) {
            return Err(Error::DomainError(
                "every leader needs at least one follower".into(),
            ));
        }
        let leaders = self.leaders();
        let mut edges = vec![(leaders[0], leaders[1]), (leaders[1], leaders[2])];
        if ring {
            edges.push((leaders[0], leaders[2]));
        }
        for (l, &leader) in leaders.iter().enumerate() {
            edges.extend(self.followers(l).map(|f| (leader, f)));
        }

        let n = self.node_count();
        let mut probs = vec![self.p_follower; n];
        for (l, &leader) in leaders.iter().enumerate() {
            let degree = match self.leader_prob.basis {
                DegreeBasis::Full => edges
                    .iter()
                    .filter(|&&(u, v)| u == leader || v == leader)
                    .count(),
                DegreeBasis::Followers => self.follower_counts[l],
            };
            probs[leader] = self.leader_prob.scale / T::lit(degree as f64);
        }
        CandidateGraph::new(&edges, &probs, ProbabilityCheck::Strict)
    }
}

/// Chain of three leader stars, leaders numbered first.
pub fn leader_follower_chain<T: Scalar>(
    follower_counts: [usize; 3],
    p_follower: T,
    leader_prob: LeaderProb<T>,
) -> Result<CandidateGraph<T>> {
    LeaderFollower::new(follower_counts, p_follower, leader_prob).chain()
}

/// Ring of three leader stars, leaders numbered first.
pub fn leader_follower_ring<T: Scalar>(
    follower_counts: [usize; 3],
    p_follower: T,
    leader_prob: LeaderProb<T>,
) -> Result<CandidateGraph<T>> {
    LeaderFollower::new(follower_counts, p_follower, leader_prob).ring()
}

pub fn complete_graph<T: Scalar>(n: usize, p: T, check: ProbabilityCheck) -> Result<CandidateGraph<T>> {
    let edges: Vec<_> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .collect();
    CandidateGraph::new(&edges, &vec![p; n], check)
}

pub fn path_graph<T: Scalar>(n: usize, p: T, check: ProbabilityCheck) -> Result<CandidateGraph<T>> {
    let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
    CandidateGraph::new(&edges, &vec![p; n], check)
}

/// Random connected graph: a random spanning tree plus each remaining pair
/// with probability `extra_edge_prob`; listen probabilities uniform in
/// `[prob_lo, prob_hi]`.
pub fn random_connected_graph<T: Scalar, R: Rng + ?Sized>(
    n: usize,
    extra_edge_prob: f64,
    prob_lo: f64,
    prob_hi: f64,
    rng: &mut R,
) -> Result<CandidateGraph<T>> {
    let mut edges = BTreeSet::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        edges.insert((u, v));
    }
    for u in 0..n {
        for v in u + 1..n {
            if !edges.contains(&(u, v)) && rng.random_bool(extra_edge_prob) {
                edges.insert((u, v));
            }
        }
    }
    let probs: Vec<T> = (0..n)
        .map(|_| T::lit(rng.random_range(prob_lo..=prob_hi)))
        .collect();
    let edges: Vec<_> = edges.into_iter().collect();
    CandidateGraph::new(&edges, &probs, ProbabilityCheck::Strict)
}
