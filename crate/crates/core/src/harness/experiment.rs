use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::{generate_instance, GeneratorSpec, DEFAULT_LAMBDA, DEFAULT_NOISE_STD};
use super::metrics::sparsity_metrics;
use crate::error::{Error, Result};
use crate::regularizers::{Family, RegularizerSpec};
use crate::rng;
use crate::solvers::{write_trace_csv, SolveConfig, SolveReport, SolverKind, Termination};

pub const SUMMARY_SCHEMA: u32 = 1;

fn default_family() -> Family {
    Family::Lpn
}

fn default_p() -> f64 {
    0.5
}

fn default_lambda() -> f64 {
    DEFAULT_LAMBDA
}

fn default_noise() -> f64 {
    DEFAULT_NOISE_STD
}

/// A battery: every seed crossed with every solver on `(m, n, K)` instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub m: usize,
    pub n: usize,
    #[serde(rename = "K", alias = "k")]
    pub k: usize,
    pub seeds: Vec<u64>,
    pub solvers: Vec<SolverKind>,
    #[serde(default)]
    pub config: SolveConfig,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_family")]
    pub family: Family,
    #[serde(default = "default_noise")]
    pub noise_std: f64,
}

impl ExperimentSpec {
    /// `(100, 200, 20)`, seeds `0..20`, all solvers, default settings.
    pub fn desk() -> Self {
        Self {
            m: 100,
            n: 200,
            k: 20,
            seeds: (0..20).collect(),
            solvers: SolverKind::ALL.to_vec(),
            config: SolveConfig::default(),
            lambda: DEFAULT_LAMBDA,
            p: 0.5,
            family: Family::Lpn,
            noise_std: DEFAULT_NOISE_STD,
        }
    }

    pub fn generator(&self, seed: u64) -> Result<GeneratorSpec> {
        Ok(GeneratorSpec {
            m: self.m,
            n: self.n,
            k: self.k,
            seed,
            noise_std: self.noise_std,
            lambda: self.lambda,
            regularizer: RegularizerSpec::new(self.family, self.p)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.k > self.n {
            return Err(Error::invalid(format!("K = {} exceeds n = {}", self.k, self.n)));
        }
        if self.m > self.n {
            return Err(Error::invalid(format!("m = {} exceeds n = {}", self.m, self.n)));
        }
        if self.seeds.is_empty() || self.solvers.is_empty() {
            return Err(Error::invalid("experiment needs at least one seed and one solver"));
        }
        RegularizerSpec::new(self.family, self.p)?;
        self.config.validate()
    }
}

/// Outcome of one seed × solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema: u32,
    pub solver: SolverKind,
    pub seed: u64,
    pub m: usize,
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub cpu_seconds: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub nonzeros_exact: usize,
    pub nonzeros_thresholded: usize,
    pub support_precision: f64,
    pub support_recall: f64,
    pub support_f1: f64,
    pub final_objective: f64,
    pub final_relaxed_objective: f64,
    pub final_opttol: f64,
    pub accepted_aa: usize,
    pub rejected_aa: usize,
    /// Trailing iterations over which `sign(x)` was constant.
    pub stable_sign_tail: usize,
}

impl RunSummary {
    /// The summary with timing zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            cpu_seconds: 0.0,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub seed: u64,
    pub solver: SolverKind,
    pub result: std::result::Result<(RunSummary, SolveReport), String>,
}

impl RunOutcome {
    pub fn summary(&self) -> Option<&RunSummary> {
        self.result.as_ref().ok().map(|(s, _)| s)
    }

    pub fn report(&self) -> Option<&SolveReport> {
        self.result.as_ref().ok().map(|(_, r)| r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub median: f64,
    pub stddev: f64,
}

impl Stat {
    /// Mean, median and sample standard deviation. `values` must be in a
    /// canonical order (seed order) for the mean to be reproducible.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len() % 2 == 0 {
            0.5 * (sorted[mid - 1] + sorted[mid])
        } else {
            sorted[mid]
        };
        let stddev = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, median, stddev })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverAggregate {
    pub solver: SolverKind,
    pub runs: usize,
    pub failures: usize,
    pub iterations: Option<Stat>,
    pub cpu_seconds: Option<Stat>,
    pub nonzeros_exact: Option<Stat>,
    pub nonzeros_thresholded: Option<Stat>,
    pub support_f1: Option<Stat>,
}

#[derive(Debug, Clone)]
pub struct Battery {
    pub spec: ExperimentSpec,
    /// Ordered by solver (as listed in the spec), then seed.
    pub runs: Vec<RunOutcome>,
    pub aggregates: Vec<SolverAggregate>,
}

impl Battery {
    pub fn summaries(&self, solver: SolverKind) -> impl Iterator<Item = &RunSummary> {
        self.runs
            .iter()
            .filter(move |r| r.solver == solver)
            .filter_map(RunOutcome::summary)
    }

    pub fn aggregate(&self, solver: SolverKind) -> Option<&SolverAggregate> {
        self.aggregates.iter().find(|a| a.solver == solver)
    }

    pub fn failures(&self) -> impl Iterator<Item = &RunOutcome> {
        self.runs.iter().filter(|r| r.result.is_err())
    }
}

/// Runs one solver on one generated instance.
pub fn run_single(spec: &ExperimentSpec, seed: u64, solver: SolverKind) -> Result<(RunSummary, SolveReport)> {
    let generated = generate_instance(&spec.generator(seed)?)?;
    let config = spec.config.clone().with_seed(seed);
    let report = solver.run(&generated.instance, &config)?;
    let metrics = sparsity_metrics(&report.x_final, &generated.x_true)?;
    let last = report.final_record();
    let summary = RunSummary {
        schema: SUMMARY_SCHEMA,
        solver,
        seed,
        m: spec.m,
        n: spec.n,
        k: spec.k,
        cpu_seconds: report.elapsed_s,
        iterations: report.iterations,
        termination: report.termination,
        nonzeros_exact: metrics.nonzeros_exact,
        nonzeros_thresholded: metrics.nonzeros_thresholded,
        support_precision: metrics.support_precision,
        support_recall: metrics.support_recall,
        support_f1: metrics.support_f1,
        final_objective: last.map_or(f64::NAN, |r| r.objective),
        final_relaxed_objective: last.map_or(f64::NAN, |r| r.relaxed_objective),
        final_opttol: last.map_or(f64::NAN, |r| r.opttol),
        accepted_aa: report.accepted_aa_count,
        rejected_aa: report.rejected_aa_count,
        stable_sign_tail: report.stable_sign_tail(),
    };
    Ok((summary, report))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn run_stem(solver: SolverKind, seed: u64) -> String {
    format!("{solver}_seed{seed}")
}

fn write_run(dir: &Path, seed: u64, summary: &RunSummary, report: &SolveReport) -> Result<()> {
    let stem = run_stem(summary.solver, seed);
    let mut trace = format!("# {} solver={}\n", rng::describe(seed), summary.solver).into_bytes();
    write_trace_csv(&report.trace, &mut trace)?;
    write_atomic(&dir.join(format!("{stem}.csv")), &trace)?;
    write_atomic(&dir.join(format!("{stem}.json")), serde_json::to_string_pretty(summary)?.as_bytes())
}

/// Aggregates per solver over successful runs, visiting seeds in ascending
/// order so the result does not depend on how the seed list was ordered.
pub fn aggregate(solvers: &[SolverKind], runs: &[RunOutcome]) -> Vec<SolverAggregate> {
    solvers
        .iter()
        .map(|&solver| {
            let mut mine: Vec<&RunOutcome> = runs.iter().filter(|r| r.solver == solver).collect();
            mine.sort_by_key(|r| r.seed);
            let ok: Vec<&RunSummary> = mine.iter().filter_map(|r| r.summary()).collect();
            let stat = |f: &dyn Fn(&RunSummary) -> f64| Stat::of(&ok.iter().map(|s| f(s)).collect::<Vec<_>>());
            SolverAggregate {
                solver,
                runs: mine.len(),
                failures: mine.len() - ok.len(),
                iterations: stat(&|s| s.iterations as f64),
                cpu_seconds: stat(&|s| s.cpu_seconds),
                nonzeros_exact: stat(&|s| s.nonzeros_exact as f64),
                nonzeros_thresholded: stat(&|s| s.nonzeros_thresholded as f64),
                support_f1: stat(&|s| s.support_f1),
            }
        })
        .collect()
}

/// Runs every seed × solver pair on up to `jobs` threads. When `out_dir` is
/// given, each run writes `<solver>_seed<seed>.csv` (trace) and
/// `<solver>_seed<seed>.json` (summary), and the battery writes
/// `aggregate.json`. Failed runs are recorded and do not stop the battery.
pub fn run_experiment(spec: &ExperimentSpec, jobs: usize, out_dir: Option<&Path>) -> Result<Battery> {
    spec.validate()?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
    }
    let tasks: Vec<(SolverKind, u64)> = spec
        .solvers
        .iter()
        .flat_map(|&s| spec.seeds.iter().map(move |&seed| (s, seed)))
        .collect();

    let execute = |&(solver, seed): &(SolverKind, u64)| {
        let result = run_single(spec, seed, solver).and_then(|(summary, report)| {
            if let Some(dir) = out_dir {
                write_run(dir, seed, &summary, &report)?;
            }
            Ok((summary, report))
        });
        RunOutcome {
            seed,
            solver,
            result: result.map_err(|e| e.to_string()),
        }
    };

    let runs: Vec<RunOutcome> = if jobs <= 1 {
        tasks.iter().map(execute).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Io(e.to_string()))?;
        pool.install(|| tasks.par_iter().map(execute).collect())
    };

    let aggregates = aggregate(&spec.solvers, &runs);
    if let Some(dir) = out_dir {
        let failures: Vec<serde_json::Value> = runs
            .iter()
            .filter_map(|r| {
                r.result.as_ref().err().map(|e| {
                    serde_json::json!({ "solver": r.solver, "seed": r.seed, "error": e })
                })
            })
            .collect();
        let doc = serde_json::json!({
            "schema": SUMMARY_SCHEMA,
            "spec": spec,
            "aggregates": aggregates,
            "failures": failures,
        });
        write_atomic(&dir.join("aggregate.json"), serde_json::to_string_pretty(&doc)?.as_bytes())?;
    }
    Ok(Battery {
        spec: spec.clone(),
        runs,
        aggregates,
    })
}

/// Hyperparameters the sweep mode can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    /// Anderson depth `m`.
    M,
    Eta,
    Beta,
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "m" | "depth" => Ok(SweepParam::M),
            "eta" => Ok(SweepParam::Eta),
            "beta" => Ok(SweepParam::Beta),
            other => Err(Error::invalid(format!("unknown sweep parameter '{other}' (m|eta|beta)"))),
        }
    }
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::M => "m",
            SweepParam::Eta => "eta",
            SweepParam::Beta => "beta",
        }
    }

    /// Copy of `spec` with the parameter set to `value`.
    pub fn apply(self, spec: &ExperimentSpec, value: f64) -> Result<ExperimentSpec> {
        let mut out = spec.clone();
        match self {
            SweepParam::M => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::invalid(format!("depth must be a positive integer, got {value}")));
                }
                out.config.depth = value as usize;
            }
            SweepParam::Eta => out.config.eta = value,
            SweepParam::Beta => out.config.beta = value,
        }
        out.config.validate()?;
        Ok(out)
    }
}

/// One battery per value, written to `<out_dir>/<param>_<value>/`.
pub fn run_sweep(
    spec: &ExperimentSpec,
    param: SweepParam,
    values: &[f64],
    jobs: usize,
    out_dir: Option<&Path>,
) -> Result<Vec<(f64, Battery)>> {
    values
        .iter()
        .map(|&v| {
            let swept = param.apply(spec, v)?;
            let dir = out_dir.map(|d| d.join(format!("{}_{v}", param.name())));
            Ok((v, run_experiment(&swept, jobs, dir.as_deref())?))
        })
        .collect()
}
