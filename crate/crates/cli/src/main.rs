use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use randcons::format::to_json_string;
use randcons::oracle::{oracle_corpus, verify_closed_forms, MAX_DIRECTED_EDGES};
use randcons::{
    analyze, expected_consensus_value, parse_scenario, run_ensemble, variance_upper_bound, AnalyzeOptions,
    EnsembleOptions, Error, KronBudget, OracleReport, ProbabilityCheck, Scenario,
};

/// Analyze and simulate consensus over random directed graphs.
#[derive(Parser)]
#[command(name = "randcons", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean, exact variance, bound terms and spectrum: writes report.json.
    Analyze(AnalyzeArgs),
    /// Monte Carlo ensemble: writes ensemble.csv, histogram.csv and summary.json.
    Simulate(SimulateArgs),
    /// Checks closed forms against exhaustive enumeration and prints the report.
    Verify(VerifyArgs),
    /// Variance bound factors against the exact variance: writes bound_terms.json.
    BoundStudy(AnalyzeArgs),
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Accept listen probabilities equal to 1.
    #[arg(long)]
    relaxed_probs: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: Common,
    /// Build the n² × n² operators for any n.
    #[arg(long)]
    allow_large: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Convergence threshold on max(x) - min(x).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long, default_value_t = 20)]
    bins: usize,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Also verify this scenario's graph if it is small enough.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Also write oracle.json here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    relaxed_probs: bool,
    /// Largest admissible closed-form error.
    #[arg(long, default_value_t = 1e-12, allow_negative_numbers = true)]
    oracle_tol: f64,
    /// Largest node count of the built-in corpus.
    #[arg(long, default_value_t = 4)]
    corpus_nodes: usize,
}

fn check(relaxed: bool) -> ProbabilityCheck {
    if relaxed {
        ProbabilityCheck::Relaxed
    } else {
        ProbabilityCheck::Strict
    }
}

fn budget(allow_large: bool) -> KronBudget {
    if allow_large {
        KronBudget::unlimited()
    } else {
        KronBudget::default()
    }
}

fn load(common: &Common) -> anyhow::Result<Scenario> {
    Ok(parse_scenario(&common.scenario, check(common.relaxed_probs))?)
}

fn out_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> anyhow::Result<()> {
    fs::write(path, to_json_string(value)?).with_context(|| format!("cannot write {}", path.display()))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn cmd_analyze(args: &AnalyzeArgs) -> anyhow::Result<()> {
    let s = load(&args.common)?;
    let report = analyze(
        &s.graph,
        &s.initial,
        AnalyzeOptions {
            budget: budget(args.allow_large),
            condition_number: true,
        },
    )?;
    out_dir(&args.common.out)?;
    write_json(&args.common.out.join("report.json"), &report)
}

#[derive(Serialize)]
struct SimulationSummary {
    trials: usize,
    converged: usize,
    seed: u64,
    mean: f64,
    std: f64,
    mean_standard_error: f64,
    variance: f64,
    expected_consensus_value: f64,
}

fn cmd_simulate(args: &SimulateArgs) -> anyhow::Result<()> {
    let mut s = load(&args.common)?;
    if let Some(t) = args.trials {
        s.trials = t;
    }
    if let Some(seed) = args.seed {
        s.seed = seed;
    }
    if let Some(tol) = args.tol {
        s.tol = tol;
    }
    if let Some(m) = args.max_steps {
        s.max_steps = m;
    }
    s.validate()?;
    if args.workers == Some(0) {
        bail!("--workers must be positive");
    }
    let stats = run_ensemble(
        &s,
        EnsembleOptions {
            bins: args.bins,
            workers: args.workers,
        },
    )?;
    let out = &args.common.out;
    out_dir(out)?;
    write_with(&out.join("ensemble.csv"), |w| stats.write_csv(w))?;
    write_with(&out.join("histogram.csv"), |w| stats.write_histogram_csv(w))?;
    let summary = stats.summary();
    write_json(
        &out.join("summary.json"),
        &SimulationSummary {
            trials: summary.trials,
            converged: summary.converged,
            seed: s.seed,
            mean: summary.mean,
            std: summary.std,
            mean_standard_error: stats.mean_standard_error(),
            variance: stats.variance(),
            expected_consensus_value: expected_consensus_value(&s.graph, &s.initial)?,
        },
    )
}

#[derive(Serialize)]
struct VerifySummary {
    passed: bool,
    instances: usize,
    max_err_ew: f64,
    max_err_r: f64,
    max_err_delta: f64,
    max_err_delta_norm: f64,
    max_err_mean: f64,
    max_err_variance: f64,
    cases_checked: u64,
    scenario: Option<OracleReport>,
    scenario_skipped: Option<String>,
}

fn cmd_verify(args: &VerifyArgs) -> anyhow::Result<()> {
    let mut reports = Vec::new();
    for g in oracle_corpus::<f64>(args.corpus_nodes) {
        reports.push(verify_closed_forms(&g, args.oracle_tol)?);
    }
    let (mut scenario, mut scenario_skipped) = (None, None);
    if let Some(path) = &args.scenario {
        let s: Scenario = parse_scenario(path, check(args.relaxed_probs))?;
        match verify_closed_forms(&s.graph, args.oracle_tol) {
            Ok(r) => scenario = Some(r),
            Err(Error::TooLarge { directed_edges, .. }) => {
                scenario_skipped = Some(format!(
                    "{directed_edges} directed edges exceed the enumeration limit of {MAX_DIRECTED_EDGES}"
                ))
            }
            Err(e) => return Err(e.into()),
        }
    }
    let max = |f: fn(&OracleReport) -> f64| {
        reports
            .iter()
            .chain(scenario.as_ref())
            .map(f)
            .fold(0.0, f64::max)
    };
    let summary = VerifySummary {
        passed: true,
        instances: reports.len() + scenario.is_some() as usize,
        max_err_ew: max(|r| r.max_err_ew),
        max_err_r: max(|r| r.max_err_r),
        max_err_delta: max(|r| r.max_err_delta),
        max_err_delta_norm: max(|r| r.max_err_delta_norm),
        max_err_mean: max(|r| r.max_err_mean),
        max_err_variance: max(|r| r.max_err_variance),
        cases_checked: reports.iter().chain(scenario.as_ref()).map(|r| r.cases_checked).sum(),
        scenario,
        scenario_skipped,
    };
    let text = to_json_string(&summary)?;
    print!("{text}");
    if let Some(dir) = &args.out {
        out_dir(dir)?;
        fs::write(dir.join("oracle.json"), &text)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct BoundStudy {
    nodes: usize,
    mean: f64,
    a: f64,
    b: f64,
    c: f64,
    bound_total: f64,
    c_log10: f64,
    bound_total_log10: f64,
    exact_variance: Option<f64>,
    kappa_exact: Option<f64>,
    /// `bound_total / exact_variance`.
    ratio: Option<f64>,
    ratio_log10: Option<f64>,
}

fn cmd_bound_study(args: &AnalyzeArgs) -> anyhow::Result<()> {
    let s = load(&args.common)?;
    let r = variance_upper_bound(&s.graph, &s.initial, budget(args.allow_large), true)?;
    let exact = r.exact.as_ref().map(|e| e.variance);
    let study = BoundStudy {
        nodes: s.graph.n(),
        mean: r.mean,
        a: r.bound.a,
        b: r.bound.b,
        c: r.bound.c,
        bound_total: r.bound.total,
        c_log10: r.bound.c_log10,
        bound_total_log10: r.bound.total_log10,
        exact_variance: exact,
        kappa_exact: r.kappa_exact,
        ratio: exact.filter(|&v| v > 0.0).map(|v| r.bound.total / v),
        ratio_log10: exact.filter(|&v| v > 0.0).map(|v| r.bound.total_log10 - v.log10()),
    };
    out_dir(&args.common.out)?;
    write_json(&args.common.out.join("bound_terms.json"), &study)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::BoundStudy(a) => cmd_bound_study(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(Error::VerificationFailure { .. }) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
