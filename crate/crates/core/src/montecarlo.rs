//! Monte Carlo simulation of consensus trajectories and ensemble statistics.

use std::io::{self, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::g17;
use crate::graph::CandidateGraph;
use crate::random_net::{trial_stream, DirectedRealization};
use crate::scalar::{from_usize, Scalar};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryResult<T> {
    /// Mean of the final state.
    pub consensus_value: T,
    pub steps: usize,
    pub converged: bool,
}

pub fn spread<T: Scalar>(x: &[T]) -> T {
    let (lo, hi) = x.iter().fold((x[0], x[0]), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi - lo
}

fn mean<T: Scalar>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |a, &b| a + b) / from_usize::<T>(x.len())
}

/// Iterates `x <- W_k x` with a fresh realization per step until
/// `max(x) - min(x) < tol` or `max_steps` steps have run.
pub fn run_trajectory<T: Scalar, R: Rng + ?Sized>(
    graph: &CandidateGraph<T>,
    x0: &[T],
    rng: &mut R,
    tol: T,
    max_steps: usize,
) -> TrajectoryResult<T> {
    run_trajectory_with(graph, x0, rng, tol, max_steps, |_, _| {})
}

/// [`run_trajectory`], calling `observe(k, x(k))` after every step.
pub fn run_trajectory_with<T, R, F>(
    graph: &CandidateGraph<T>,
    x0: &[T],
    rng: &mut R,
    tol: T,
    max_steps: usize,
    mut observe: F,
) -> TrajectoryResult<T>
where
    T: Scalar,
    R: Rng + ?Sized,
    F: FnMut(usize, &[T]),
{
    let mut x = x0.to_vec();
    let mut next = vec![T::zero(); x.len()];
    let mut realization = DirectedRealization::empty(graph.n());
    let mut steps = 0;
    let mut converged = spread(&x) < tol;
    while !converged && steps < max_steps {
        realization.resample(graph, rng);
        realization.average_into(&x, &mut next);
        std::mem::swap(&mut x, &mut next);
        steps += 1;
        observe(steps, &x);
        converged = spread(&x) < tol;
    }
    TrajectoryResult {
        consensus_value: mean(&x),
        steps,
        converged,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnsembleOptions {
    pub bins: usize,
    /// Thread count; `None` uses the global rayon pool. Results do not
    /// depend on it.
    pub workers: Option<usize>,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        EnsembleOptions { bins: 20, workers: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats<T> {
    pub trials: usize,
    /// Per-trial results in trial order, converged or not.
    pub results: Vec<TrajectoryResult<T>>,
    /// Consensus values of converged trials, in trial order.
    pub values: Vec<T>,
    pub mean: T,
    /// Unbiased sample standard deviation; 0 when fewer than two trials
    /// converged.
    pub std: T,
    pub std_defined: bool,
    pub histogram: Vec<HistogramBin>,
}

impl<T: Scalar> EnsembleStats<T> {
    pub fn converged(&self) -> usize {
        self.values.len()
    }

    pub fn diverged(&self) -> usize {
        self.trials - self.values.len()
    }

    pub fn variance(&self) -> T {
        self.std * self.std
    }

    /// `std / √N`.
    pub fn mean_standard_error(&self) -> T {
        self.std / from_usize::<T>(self.values.len()).sqrt()
    }

    /// Large-sample standard error of the sample variance,
    /// `√((m4 - s⁴) / N)` with `m4` the fourth central moment.
    pub fn variance_standard_error(&self) -> T {
        let n = from_usize::<T>(self.values.len());
        let m4 = self
            .values
            .iter()
            .fold(T::zero(), |acc, &v| acc + (v - self.mean).powi(4))
            / n;
        ((m4 - self.variance().powi(2)).max(T::zero()) / n).sqrt()
    }

    pub fn summary(&self) -> EnsembleSummary {
        EnsembleSummary {
            trials: self.trials,
            converged: self.converged(),
            mean: self.mean.as_f64(),
            std: self.std.as_f64(),
        }
    }

    /// `trial,consensus_value,steps,converged`
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "trial,consensus_value,steps,converged")?;
        for (k, r) in self.results.iter().enumerate() {
            writeln!(
                out,
                "{k},{},{},{}",
                g17(r.consensus_value.as_f64()),
                r.steps,
                r.converged
            )?;
        }
        Ok(())
    }

    /// `bin_lower,bin_upper,count`
    pub fn write_histogram_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "bin_lower,bin_upper,count")?;
        for b in &self.histogram {
            writeln!(out, "{},{},{}", g17(b.lower), g17(b.upper), b.count)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub trials: usize,
    pub converged: usize,
    pub mean: f64,
    pub std: f64,
}

/// Equal-width bins over `[min, max]` of the values; the top edge belongs to
/// the last bin.
pub fn histogram<T: Scalar>(values: &[T], bins: usize) -> Vec<HistogramBin> {
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = values.iter().fold(f64::INFINITY, |a, v| a.min(v.as_f64()));
    let hi = values.iter().fold(f64::NEG_INFINITY, |a, v| a.max(v.as_f64()));
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for v in values {
        let k = if width > 0.0 {
            (((v.as_f64() - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[k] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin {
            lower: lo + width * k as f64,
            upper: if k + 1 == bins { hi } else { lo + width * (k + 1) as f64 },
            count,
        })
        .collect()
}

/// Runs `scenario.trials` independent trajectories, trial `k` on
/// [`trial_stream`]`(seed, k)`.
pub fn run_ensemble<T: Scalar>(scenario: &Scenario<T>, opts: EnsembleOptions) -> Result<EnsembleStats<T>> {
    scenario.validate()?;
    let run = || -> Vec<TrajectoryResult<T>> {
        (0..scenario.trials)
            .into_par_iter()
            .map(|k| {
                let mut rng = trial_stream(scenario.seed, k as u64);
                run_trajectory(
                    &scenario.graph,
                    &scenario.initial,
                    &mut rng,
                    scenario.tol,
                    scenario.max_steps,
                )
            })
            .collect()
    };
    let results = match opts.workers {
        Some(workers) => rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| Error::InvalidScenario(format!("cannot start worker pool: {e}")))?
            .install(run),
        None => run(),
    };
    let values: Vec<T> = results
        .iter()
        .filter(|r| r.converged)
        .map(|r| r.consensus_value)
        .collect();
    if values.is_empty() {
        return Err(Error::AllTrialsDiverged {
            trials: scenario.trials,
        });
    }
    let m = mean(&values);
    let std_defined = values.len() > 1;
    let std = if std_defined {
        let ss = values.iter().fold(T::zero(), |acc, &v| acc + (v - m) * (v - m));
        (ss / from_usize::<T>(values.len() - 1)).sqrt()
    } else {
        T::zero()
    };
    Ok(EnsembleStats {
        trials: scenario.trials,
        histogram: histogram(&values, opts.bins),
        results,
        values,
        mean: m,
        std,
        std_defined,
    })
}
