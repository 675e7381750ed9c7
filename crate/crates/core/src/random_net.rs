//! Sampling directed realizations of the candidate graph and forming the
//! row-stochastic averaging matrices.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::CandidateGraph;
use crate::scalar::{from_usize, Scalar};

/// Random stream of one Monte Carlo trial.
///
/// Trial `k` of a run seeded with `master_seed` uses ChaCha8 keyed by
/// `master_seed` (via `seed_from_u64`) on stream number `k`. Distinct trials
/// therefore read disjoint keystreams, and the mapping does not depend on how
/// trials are scheduled across threads.
pub fn trial_stream(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

/// One sampled directed graph.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DirectedRealization {
    n: usize,
    /// Active directed edges `(u, v)` (meaning `u -> v`, `v` listens to `u`),
    /// lexicographic.
    edges: Vec<(usize, usize)>,
    in_degrees: Vec<usize>,
}

impl DirectedRealization {
    /// Realization with no active edges.
    pub fn empty(n: usize) -> Self {
        DirectedRealization {
            n,
            edges: Vec::new(),
            in_degrees: vec![0; n],
        }
    }

    /// Builds a realization from an explicit edge set. Edges are sorted; no
    /// validation against a candidate graph happens here.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut edges = edges.to_vec();
        edges.sort_unstable();
        edges.dedup();
        let mut in_degrees = vec![0; n];
        for &(_, v) in &edges {
            in_degrees[v] += 1;
        }
        DirectedRealization { n, edges, in_degrees }
    }

    /// Draws every directed candidate edge `u -> v` independently with
    /// probability `p_v`. One uniform draw per directed candidate edge, in
    /// lexicographic `(u, v)` order.
    pub fn sample<T: Scalar, R: Rng + ?Sized>(graph: &CandidateGraph<T>, rng: &mut R) -> Self {
        let mut r = Self::empty(graph.n());
        r.resample(graph, rng);
        r
    }

    /// [`Self::sample`] into an existing buffer.
    pub fn resample<T: Scalar, R: Rng + ?Sized>(&mut self, graph: &CandidateGraph<T>, rng: &mut R) {
        let n = graph.n();
        self.n = n;
        self.edges.clear();
        self.in_degrees.clear();
        self.in_degrees.resize(n, 0);
        for u in 0..n {
            for &v in graph.neighbors(u) {
                let draw: f64 = rng.random();
                if draw < graph.prob(v).as_f64() {
                    self.edges.push((u, v));
                    self.in_degrees[v] += 1;
                }
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn in_degrees(&self) -> &[usize] {
        &self.in_degrees
    }

    /// `ã_uv`.
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.binary_search(&(u, v)).is_ok()
    }

    pub fn adjacency_matrix<T: Scalar>(&self) -> DMatrix<T> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for &(u, v) in &self.edges {
            a[(u, v)] = T::one();
        }
        a
    }

    /// `W = (D̃ + I)^{-1} (Ã + I)^T`.
    pub fn weight_matrix<T: Scalar>(&self) -> WeightMatrix<T> {
        let mut w = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            w[(i, i)] = T::one();
        }
        for &(u, v) in &self.edges {
            w[(v, u)] = T::one();
        }
        for i in 0..self.n {
            let scale = T::one() / from_usize::<T>(self.in_degrees[i] + 1);
            w.row_mut(i).scale_mut(scale);
        }
        WeightMatrix { entries: w }
    }

    /// One consensus step `out = W x` without forming `W`.
    pub fn average_into<T: Scalar>(&self, x: &[T], out: &mut [T]) {
        out.copy_from_slice(x);
        for &(u, v) in &self.edges {
            out[v] += x[u];
        }
        for (o, &d) in out.iter_mut().zip(&self.in_degrees) {
            if d > 0 {
                *o /= from_usize::<T>(d + 1);
            }
        }
    }

    /// Writes one `u v` line per active edge, lexicographic.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        for &(u, v) in &self.edges {
            writeln!(out, "{u} {v}")?;
        }
        Ok(())
    }
}

pub fn sample_realization<T: Scalar, R: Rng + ?Sized>(
    graph: &CandidateGraph<T>,
    rng: &mut R,
) -> DirectedRealization {
    DirectedRealization::sample(graph, rng)
}

pub fn weight_matrix<T: Scalar>(realization: &DirectedRealization) -> WeightMatrix<T> {
    realization.weight_matrix()
}

/// Row-stochastic consensus matrix of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix<T: Scalar> {
    pub entries: DMatrix<T>,
}

impl<T: Scalar> WeightMatrix<T> {
    pub fn apply(&self, x: &DVector<T>) -> DVector<T> {
        &self.entries * x
    }

    /// Largest `|row sum - 1|`.
    pub fn stochasticity_defect(&self) -> T {
        self.entries
            .row_iter()
            .map(|r| (r.sum() - T::one()).abs())
            .fold(T::zero(), |a, b| a.max(b))
    }
}
