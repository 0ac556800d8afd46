use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use aairl1::harness::{
    generate_instance, run_experiment, run_sweep, sparsity_metrics, Battery, ExperimentSpec, GeneratedInstance,
    GeneratorSpec, SweepParam, DEFAULT_LAMBDA, DEFAULT_NOISE_STD,
};
use aairl1::solvers::{SolveConfig, SolverKind};
use aairl1::{Error, Family, RegularizerSpec};
use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

const EXIT_CONTRACT: u8 = 2;
const EXIT_DIVERGENCE: u8 = 3;

#[derive(Parser)]
#[command(name = "aairl1", version, about = "Reweighted l1 solvers for nonconvex sparse regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print a JSON summary.
    Solve(SolveArgs),
    /// Run a seeds × solvers battery described by a JSON spec.
    Bench(BenchArgs),
    /// Generate a synthetic instance and write it to a directory.
    Gen(GenArgs),
}

#[derive(Args)]
struct InstanceArgs {
    #[arg(long, default_value_t = 100)]
    m: usize,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long = "K", default_value_t = 20)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_NOISE_STD)]
    noise_std: f64,
    /// Penalty family: exp, lpn, log, fra or tan.
    #[arg(long, default_value = "lpn")]
    reg: Family,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
}

impl InstanceArgs {
    fn generator(&self) -> aairl1::Result<GeneratorSpec> {
        Ok(GeneratorSpec {
            m: self.m,
            n: self.n,
            k: self.k,
            seed: self.seed,
            noise_std: self.noise_std,
            lambda: self.lambda,
            regularizer: RegularizerSpec::new(self.reg, self.p)?,
        })
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Read the instance from a directory written by `gen` instead of
    /// generating one.
    #[arg(long)]
    instance_dir: Option<PathBuf>,
    #[arg(long, default_value = "guard_aairl1")]
    solver: SolverKind,
    #[arg(long, default_value_t = 0.9)]
    mu: f64,
    /// Anderson depth.
    #[arg(long, default_value_t = 15)]
    depth: usize,
    #[arg(long, default_value_t = 0.85)]
    eta: f64,
    #[arg(long, default_value_t = 1e-11)]
    beta: f64,
    #[arg(long, default_value_t = 1e-14)]
    opttol: f64,
    #[arg(long, default_value_t = 50_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1.0)]
    eps0: f64,
    /// Verify the subproblem optimality system after every map evaluation.
    #[arg(long)]
    debug_checks: bool,
    /// Write the per-iteration trace as CSV.
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON experiment spec.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Repeat the battery over values of one guard parameter.
    #[arg(long, requires = "values")]
    sweep: Option<SweepParam>,
    /// Comma-separated sweep values.
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long)]
    out: PathBuf,
}

fn solve(args: &SolveArgs) -> anyhow::Result<()> {
    let generated = match &args.instance_dir {
        Some(dir) => GeneratedInstance::load(dir)?,
        None => generate_instance(&args.instance.generator()?)?,
    };
    let seed = generated.header.seed.unwrap_or(args.instance.seed);
    let config = SolveConfig {
        mu: args.mu,
        depth: args.depth,
        eta: args.eta,
        beta: args.beta,
        opttol_target: args.opttol,
        max_iters: args.max_iters,
        eps0: args.eps0,
        debug_checks: args.debug_checks,
        ..SolveConfig::default().with_seed(seed)
    };
    let report = args.solver.run(&generated.instance, &config)?;
    if let Some(path) = &args.trace_out {
        let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        report.write_trace_csv(std::io::BufWriter::new(file))?;
    }
    let metrics = sparsity_metrics(&report.x_final, &generated.x_true)?;
    let last = report.final_record();
    let summary = json!({
        "schema": 1,
        "solver": args.solver,
        "seed": seed,
        "m": generated.instance.rows(),
        "n": generated.instance.dim(),
        "iterations": report.iterations,
        "termination": report.termination,
        "cpu_seconds": report.elapsed_s,
        "final_objective": last.map(|r| r.objective),
        "final_opttol": last.map(|r| r.opttol),
        "accepted_aa": report.accepted_aa_count,
        "rejected_aa": report.rejected_aa_count,
        "nonzeros_exact": metrics.nonzeros_exact,
        "nonzeros_thresholded": metrics.nonzeros_thresholded,
        "support_f1": metrics.support_f1,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn print_battery(label: Option<String>, battery: &Battery) {
    if let Some(label) = label {
        println!("{label}");
    }
    println!("{:<14} {:>5} {:>6} {:>10} {:>10} {:>9} {:>9} {:>6}", "solver", "runs", "failed", "iter_med", "iter_mean", "nnz", "nnz>1e-6", "f1");
    for a in &battery.aggregates {
        let stat = |s: Option<aairl1::harness::Stat>, median: bool| {
            s.map_or("-".to_string(), |s| format!("{:.1}", if median { s.median } else { s.mean }))
        };
        println!(
            "{:<14} {:>5} {:>6} {:>10} {:>10} {:>9} {:>9} {:>6}",
            a.solver.name(),
            a.runs,
            a.failures,
            stat(a.iterations, true),
            stat(a.iterations, false),
            stat(a.nonzeros_exact, false),
            stat(a.nonzeros_thresholded, false),
            a.support_f1.map_or("-".to_string(), |s| format!("{:.3}", s.mean)),
        );
    }
    for f in battery.failures() {
        eprintln!("run failed: {} seed {}: {}", f.solver, f.seed, f.result.as_ref().err().unwrap());
    }
}

fn bench(args: &BenchArgs) -> anyhow::Result<()> {
    let text = fs::read_to_string(&args.spec).with_context(|| format!("reading {}", args.spec.display()))?;
    let spec: ExperimentSpec = serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", args.spec.display())))?;
    let jobs = args.jobs.max(1);
    match args.sweep {
        Some(param) => {
            for (value, battery) in run_sweep(&spec, param, &args.values, jobs, args.out.as_deref())? {
                print_battery(Some(format!("{} = {value}", param.name())), &battery);
            }
        }
        None => print_battery(None, &run_experiment(&spec, jobs, args.out.as_deref())?),
    }
    Ok(())
}

fn gen(args: &GenArgs) -> anyhow::Result<()> {
    let generated = generate_instance(&args.instance.generator()?)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    generated.save(&args.out)?;
    println!("{}", args.out.display());
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_divergence() => EXIT_DIVERGENCE,
        Some(Error::Io(_)) | None => 1,
        Some(_) => EXIT_CONTRACT,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(args) => solve(args),
        Command::Bench(args) => bench(args),
        Command::Gen(args) => gen(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
