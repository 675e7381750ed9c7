//! Scenario files: candidate graph, initial condition and simulation
//! settings as JSON.
//!
//! ```json
//! {
//!   "nodes": 3,
//!   "edges": [[0, 1], [1, 2]],
//!   "probs": [0.5, 0.5, 0.5],
//!   "initial": {"rule": "linear_i_over_n"},
//!   "trials": 100,
//!   "seed": 7,
//!   "tol": 1e-10,
//!   "max_steps": 100000
//! }
//! ```
//!
//! `probs` is either an explicit list or `{"rule": ..., "args": ...}` with
//! rules `uniform` (`args: {"p": p}`), `inverse_degree` and
//! `scaled_inverse_degree` (`args: {"c": c, "nodes": [...], "default": p}`;
//! `p_v = c / d_v` on `nodes`, or on every node if `nodes` is absent, and
//! `default` elsewhere). `initial` is a list, `{"rule": "linear_i_over_n"}`
//! (`x_i = (i + 1) / n` for 0-based `i`) or
//! `{"rule": "constant", "args": {"value": c}}`. Node indices are 0-based.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::error::{Error, Result};
use crate::format::to_json_string;
use crate::graph::{CandidateGraph, ProbabilityCheck};
use crate::scalar::Scalar;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_STEPS: usize = 100_000;

/// A validated simulation setup.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub graph: CandidateGraph<T>,
    pub initial: Vec<T>,
    pub trials: usize,
    pub seed: u64,
    pub tol: T,
    pub max_steps: usize,
}

impl<T: Scalar> Scenario<T> {
    pub fn validate(&self) -> Result<()> {
        if self.initial.len() != self.graph.n() {
            return Err(Error::DimensionMismatch {
                expected: self.graph.n(),
                found: self.initial.len(),
            });
        }
        if let Some(i) = self.initial.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidScenario(format!(
                "initial value of node {i} is not finite"
            )));
        }
        if self.trials == 0 {
            return Err(Error::InvalidScenario("trials must be positive".into()));
        }
        if !(self.tol > T::zero()) {
            return Err(Error::InvalidScenario("tol must be positive".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidScenario("max_steps must be positive".into()));
        }
        Ok(())
    }

    /// Scenario file with explicit probability and initial-value lists.
    pub fn to_json(&self) -> String {
        let file = ScenarioFile {
            nodes: self.graph.n(),
            edges: self.graph.edges().iter().map(|&(u, v)| [u, v]).collect(),
            probs: self.graph.probs().iter().map(|p| p.as_f64()).collect(),
            initial: self.initial.iter().map(|x| x.as_f64()).collect(),
            trials: self.trials,
            seed: self.seed,
            tol: self.tol.as_f64(),
            max_steps: self.max_steps,
        };
        to_json_string(&file).expect("scenario serializes")
    }
}

#[derive(Serialize)]
struct ScenarioFile {
    nodes: usize,
    edges: Vec<[usize; 2]>,
    probs: Vec<f64>,
    initial: Vec<f64>,
    trials: usize,
    seed: u64,
    tol: f64,
    max_steps: usize,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column} (field `{field}`): {message}")]
    Parse {
        line: usize,
        column: usize,
        field: String,
        message: String,
    },
    #[error("validation error: {0}")]
    Validation(#[from] Error),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    nodes: usize,
    edges: Vec<[usize; 2]>,
    probs: RawList,
    initial: RawList,
    trials: usize,
    seed: u64,
    #[serde(default)]
    tol: Option<f64>,
    #[serde(default)]
    max_steps: Option<usize>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawList {
    Values(Vec<f64>),
    Rule {
        rule: String,
        #[serde(default)]
        args: Value,
    },
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct DegreeArgs {
    c: Option<f64>,
    nodes: Option<Vec<usize>>,
    default: Option<f64>,
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation(Error::InvalidScenario(msg.into()))
}

fn args<'de, A: Deserialize<'de> + Default>(rule: &str, args: &'de Value) -> Result<A, ScenarioError> {
    if args.is_null() {
        return Ok(A::default());
    }
    A::deserialize(args).map_err(|e| invalid(format!("bad args for rule `{rule}`: {e}")))
}

fn resolve_probs(raw: &RawList, degrees: &[usize]) -> Result<Vec<f64>, ScenarioError> {
    let n = degrees.len();
    match raw {
        RawList::Values(v) => Ok(v.clone()),
        RawList::Rule { rule, args: a } => match rule.as_str() {
            "uniform" => {
                #[derive(Deserialize, Default)]
                #[serde(deny_unknown_fields)]
                struct Uniform {
                    p: Option<f64>,
                }
                let p = args::<Uniform>(rule, a)?
                    .p
                    .ok_or_else(|| invalid("rule `uniform` needs args.p"))?;
                Ok(vec![p; n])
            }
            "inverse_degree" | "scaled_inverse_degree" => {
                let a: DegreeArgs = args(rule, a)?;
                let c = match (rule.as_str(), a.c) {
                    ("inverse_degree", None) => 1.0,
                    ("inverse_degree", Some(_)) => {
                        return Err(invalid("rule `inverse_degree` takes no `c`; use scaled_inverse_degree"))
                    }
                    (_, Some(c)) => c,
                    (_, None) => return Err(invalid("rule `scaled_inverse_degree` needs args.c")),
                };
                let mut probs = match a.nodes {
                    Some(ref nodes) => {
                        let default = a
                            .default
                            .ok_or_else(|| invalid(format!("rule `{rule}` with `nodes` needs `default`")))?;
                        if let Some(&bad) = nodes.iter().find(|&&v| v >= n) {
                            return Err(ScenarioError::Validation(Error::NodeOutOfRange { node: bad, n }));
                        }
                        vec![default; n]
                    }
                    None => vec![0.0; n],
                };
                let targets: Vec<usize> = a.nodes.unwrap_or_else(|| (0..n).collect());
                for v in targets {
                    probs[v] = c / degrees[v] as f64;
                }
                Ok(probs)
            }
            other => Err(invalid(format!("unknown probability rule `{other}`"))),
        },
    }
}

fn resolve_initial(raw: &RawList, n: usize) -> Result<Vec<f64>, ScenarioError> {
    match raw {
        RawList::Values(v) => Ok(v.clone()),
        RawList::Rule { rule, args: a } => match rule.as_str() {
            "linear_i_over_n" => Ok((0..n).map(|i| (i + 1) as f64 / n as f64).collect()),
            "constant" => {
                #[derive(Deserialize, Default)]
                #[serde(deny_unknown_fields)]
                struct Constant {
                    value: Option<f64>,
                }
                let c = args::<Constant>(rule, a)?
                    .value
                    .ok_or_else(|| invalid("rule `constant` needs args.value"))?;
                Ok(vec![c; n])
            }
            other => Err(invalid(format!("unknown initial-condition rule `{other}`"))),
        },
    }
}

/// Parses and validates scenario JSON.
pub fn parse_scenario_str<T: Scalar>(text: &str, check: ProbabilityCheck) -> Result<Scenario<T>, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawScenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        ScenarioError::Parse {
            line: inner.line(),
            column: inner.column(),
            field,
            message: inner.to_string(),
        }
    })?;

    let n = raw.nodes;
    let edges: Vec<(usize, usize)> = raw.edges.iter().map(|e| (e[0], e[1])).collect();
    // Degrees for the probability rules; the graph builder validates the
    // edges themselves.
    let mut degrees = vec![0usize; n];
    for &(u, v) in &edges {
        if u >= n || v >= n {
            return Err(Error::NodeOutOfRange { node: u.max(v), n }.into());
        }
        degrees[u] += 1;
        degrees[v] += 1;
    }
    let probs = resolve_probs(&raw.probs, &degrees)?;
    if probs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: probs.len(),
        }
        .into());
    }
    let probs: Vec<T> = probs.into_iter().map(T::lit).collect();
    let graph = CandidateGraph::new(&edges, &probs, check)?;
    let initial = resolve_initial(&raw.initial, n)?
        .into_iter()
        .map(T::lit)
        .collect();
    let scenario = Scenario {
        graph,
        initial,
        trials: raw.trials,
        seed: raw.seed,
        tol: T::lit(raw.tol.unwrap_or(DEFAULT_TOL)),
        max_steps: raw.max_steps.unwrap_or(DEFAULT_MAX_STEPS),
    };
    scenario.validate()?;
    Ok(scenario)
}

pub fn parse_scenario<T: Scalar>(path: &Path, check: ProbabilityCheck) -> Result<Scenario<T>, ScenarioError> {
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario_str(&text, check)
}
