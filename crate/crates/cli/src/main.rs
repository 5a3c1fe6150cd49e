//! `rodflux`: run the registered hard-rod fluctuation experiments and emit
//! their verdicts as CSV/JSON artifacts.
//!
//! Exit codes: 0 all statistics pass, 1 a statistical check failed or the
//! run could not produce a verdict, 2 usage or configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use rodflux_core::experiments::{
    find, registry, summary_csv, trials_csv, verdict_json, RunConfig, Verdict,
};
use rodflux_core::measure::{Atom, VelocityLengthMeasure};
use rodflux_core::sampler::{sample, GasParameters};

#[derive(Parser)]
#[command(name = "rodflux", version, about = "Hard-rod gas fluctuation experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample one initial configuration and dump the particles.
    Sample(CommonOpts),
    /// Tagged quasi-particle mean squared displacement experiment.
    TaggedMsd(CommonOpts),
    /// Pairwise displacement covariance experiments.
    PairCov(CommonOpts),
    /// Euler-scale field transport experiment.
    EulerField(CommonOpts),
    /// Diffusive-scale field stationarity experiment.
    DiffusiveField(CommonOpts),
    /// Static field covariance experiment.
    StaticCov(CommonOpts),
    /// Windowed Fourier mode experiment.
    Fourier(CommonOpts),
    /// List the registered experiments.
    ListExperiments,
    /// Emit gnuplot-ready .dat files from a finished run's output directory.
    Report(CommonOpts),
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// TOML config file; command-line flags override its [run] values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scale parameter in (0, 1].
    #[arg(long)]
    eps: Option<f64>,
    /// Number of Monte Carlo trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Base seed; every trial derives an independent stream from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: RODFLUX_THREADS, then all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory for summary.csv, trials.csv, verdict.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary format.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Experiment variant, either a full registry name or a suffix such
    /// as "setupA".
    #[arg(long)]
    experiment: Option<String>,
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    rho: Option<f64>,
    #[serde(default)]
    atoms: Vec<AtomConfig>,
    experiment: Option<ExperimentConfig>,
    run: Option<RunSection>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomConfig {
    v: f64,
    r: f64,
    w: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentConfig {
    name: String,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RunSection {
    eps: Option<f64>,
    trials: Option<usize>,
    seed: Option<u64>,
    threads: Option<usize>,
    out: Option<PathBuf>,
    format: Option<String>,
    /// Sampling window for `sample`: `[lo, hi]` or `"auto"`.
    window: Option<WindowConfig>,
}

#[derive(Deserialize, Clone, Copy)]
#[serde(untagged)]
enum WindowConfig {
    Auto(AutoTag),
    Bounds(f64, f64),
}

#[derive(Deserialize, Clone, Copy)]
enum AutoTag {
    #[serde(rename = "auto")]
    Auto,
}

/// Usage or configuration problem: exit 2.
struct UsageError(String);

/// Flags merged over the config file, with defaults filled in.
struct Resolved {
    eps: Option<f64>,
    trials: Option<usize>,
    seed: u64,
    threads: Option<usize>,
    out: PathBuf,
    format: Format,
    experiment: Option<String>,
    measure: Option<VelocityLengthMeasure>,
    window: Option<WindowConfig>,
}

fn load_config(path: &Path) -> Result<FileConfig, UsageError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))
}

fn resolve(opts: &CommonOpts) -> Result<Resolved, UsageError> {
    let file = match &opts.config {
        Some(p) => load_config(p)?,
        None => FileConfig::default(),
    };
    let run = file.run.unwrap_or_default();

    let measure = if file.atoms.is_empty() {
        if file.rho.is_some() {
            return Err(UsageError("rho given without any [[atoms]]".into()));
        }
        None
    } else {
        let rho = file.rho.ok_or_else(|| UsageError("[[atoms]] given without rho".into()))?;
        let atoms = file
            .atoms
            .iter()
            .map(|a| Atom { v: a.v, r: a.r, w: a.w })
            .collect();
        Some(
            VelocityLengthMeasure::new(atoms, rho)
                .map_err(|e| UsageError(format!("invalid measure: {e}")))?,
        )
    };

    let format = match opts.format {
        Some(f) => f,
        None => match run.format.as_deref() {
            Some("csv") | None => Format::Csv,
            Some("json") => Format::Json,
            Some(other) => {
                return Err(UsageError(format!("format must be csv or json, got {other}")))
            }
        },
    };

    let threads = opts
        .threads
        .or(run.threads)
        .or_else(|| std::env::var("RODFLUX_THREADS").ok()?.parse().ok());

    Ok(Resolved {
        eps: opts.eps.or(run.eps),
        trials: opts.trials.or(run.trials),
        seed: opts.seed.or(run.seed).unwrap_or(0),
        threads,
        out: opts.out.clone().or(run.out).unwrap_or_else(|| PathBuf::from(".")),
        format,
        experiment: opts
            .experiment
            .clone()
            .or(file.experiment.map(|e| e.name)),
        measure,
        window: run.window,
    })
}

fn init_threads(threads: Option<usize>) -> Result<(), UsageError> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(UsageError("threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| UsageError(format!("thread pool: {e}")))?;
    }
    Ok(())
}

/// Resolves an experiment name: exact registry name, or `base-<variant>`.
fn pick_experiment(base: &str, variant: Option<&str>) -> Result<String, UsageError> {
    let names: Vec<String> = registry().iter().map(|e| e.name.to_string()).collect();
    let candidates: Vec<String> = match variant {
        Some(v) if names.contains(&v.to_string()) => vec![v.to_string()],
        Some(v) => vec![format!("{base}-{v}")],
        None => names
            .iter()
            .filter(|n| n.starts_with(base))
            .cloned()
            .collect(),
    };
    match candidates.as_slice() {
        [one] if names.contains(one) => Ok(one.clone()),
        [] => Err(UsageError(format!(
            "no experiment for {base}; pick one of: {}",
            names.join(", ")
        ))),
        many if many.iter().all(|n| names.contains(n)) && many.len() == 1 => {
            Ok(many[0].clone())
        }
        many => Err(UsageError(format!(
            "ambiguous or unknown experiment {many:?}; registry: {}",
            names.join(", ")
        ))),
    }
}

fn write_artifacts(
    out: &Path,
    format: Format,
    verdict: &Verdict,
    samples: &[rodflux_core::FieldSample],
) -> Result<(), String> {
    std::fs::create_dir_all(out).map_err(|e| format!("create {}: {e}", out.display()))?;
    let write = |name: &str, body: &str| {
        std::fs::write(out.join(name), body).map_err(|e| format!("write {name}: {e}"))
    };
    match format {
        Format::Csv => write("summary.csv", &summary_csv(verdict))?,
        Format::Json => write(
            "summary.json",
            &serde_json::to_string_pretty(&verdict.statistics).expect("serializes"),
        )?,
    }
    write("trials.csv", &trials_csv(samples))?;
    write("verdict.json", &verdict_json(verdict))?;
    Ok(())
}

fn run_experiment(base: &str, opts: &CommonOpts) -> ExitCode {
    let resolved = match resolve(opts) {
        Ok(r) => r,
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    if let Err(UsageError(msg)) = init_threads(resolved.threads) {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let name = match pick_experiment(base, resolved.experiment.as_deref()) {
        Ok(n) => n,
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let spec = match find(&name) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cfg = RunConfig {
        eps: resolved.eps.unwrap_or(spec.default_eps),
        trials: resolved.trials.unwrap_or(spec.default_trials),
        seed: resolved.seed,
    };
    if cfg.eps <= 0.0 || cfg.eps > 1.0 {
        eprintln!("error: eps must be in (0, 1], got {}", cfg.eps);
        return ExitCode::from(2);
    }
    if cfg.trials < 2 {
        eprintln!("error: need at least 2 trials, got {}", cfg.trials);
        return ExitCode::from(2);
    }
    let (verdict, samples) = match spec.run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: experiment {name} failed: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(msg) = write_artifacts(&resolved.out, resolved.format, &verdict, &samples) {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    for s in &verdict.statistics {
        println!(
            "{name}: {} = {:.6} (target {:.6}, z {:+.2}) {}",
            s.statistic,
            s.mean,
            s.target,
            s.z,
            if s.pass { "pass" } else { "FAIL" }
        );
    }
    if verdict.pass {
        println!("{name}: PASS ({} trials, eps {})", cfg.trials, cfg.eps);
        ExitCode::SUCCESS
    } else {
        println!("{name}: FAIL ({} trials, eps {})", cfg.trials, cfg.eps);
        ExitCode::from(1)
    }
}

fn run_sample(opts: &CommonOpts) -> ExitCode {
    let resolved = match resolve(opts) {
        Ok(r) => r,
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let Some(mu) = resolved.measure else {
        eprintln!("error: sample needs a measure ([[atoms]] and rho) in --config");
        return ExitCode::from(2);
    };
    let eps = resolved.eps.unwrap_or(0.1);
    if eps <= 0.0 || eps > 1.0 {
        eprintln!("error: eps must be in (0, 1], got {eps}");
        return ExitCode::from(2);
    }
    let (window_lo, window_hi) = match resolved.window {
        Some(WindowConfig::Bounds(lo, hi)) => {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                eprintln!("error: window must be [lo, hi] with lo < hi, got [{lo}, {hi}]");
                return ExitCode::from(2);
            }
            (lo, hi)
        }
        Some(WindowConfig::Auto(_)) | None => (-10.0, 10.0),
    };
    let conf = match sample(
        &GasParameters {
            eps,
            window_lo,
            window_hi,
            seed: resolved.seed,
            trial_index: 0,
        },
        &mu,
    ) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: sampling failed: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = std::fs::create_dir_all(&resolved.out) {
        eprintln!("error: create {}: {e}", resolved.out.display());
        return ExitCode::from(2);
    }
    let mut body = String::from("id,x,v,r,atom\n");
    for p in conf.particles() {
        body.push_str(&format!("{},{},{},{},{}\n", p.id, p.x, p.v, p.r, p.atom));
    }
    let path = resolved.out.join("particles.csv");
    if let Err(e) = std::fs::write(&path, body) {
        eprintln!("error: write {}: {e}", path.display());
        return ExitCode::from(2);
    }
    println!("wrote {} particles to {}", conf.len(), path.display());
    ExitCode::SUCCESS
}

fn run_list() -> ExitCode {
    for e in registry() {
        println!(
            "{:32} eps={:<7} trials={:<6} {}",
            e.name, e.default_eps, e.default_trials, e.description
        );
        for f in e.target_formulas {
            println!("{:32} target: {f}", "");
        }
    }
    ExitCode::SUCCESS
}

/// Reshapes a finished run's trials.csv into per-statistic .dat files
/// (trial index vs value) that gnuplot can consume directly.
fn run_report(opts: &CommonOpts) -> ExitCode {
    let resolved = match resolve(opts) {
        Ok(r) => r,
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let trials_path = resolved.out.join("trials.csv");
    let text = match std::fs::read_to_string(&trials_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: read {}: {e}", trials_path.display());
            return ExitCode::from(2);
        }
    };
    let mut by_stat: Vec<(String, Vec<(u64, f64)>)> = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        let mut parts = line.splitn(3, ',');
        let parse = (|| {
            let trial: u64 = parts.next()?.parse().ok()?;
            let stat = parts.next()?.to_string();
            let value: f64 = parts.next()?.parse().ok()?;
            Some((trial, stat, value))
        })();
        let Some((trial, stat, value)) = parse else {
            eprintln!(
                "error: {}:{} is not trial,statistic_name,value",
                trials_path.display(),
                lineno + 1
            );
            return ExitCode::from(2);
        };
        match by_stat.iter_mut().find(|(n, _)| *n == stat) {
            Some((_, rows)) => rows.push((trial, value)),
            None => by_stat.push((stat, vec![(trial, value)])),
        }
    }
    for (stat, rows) in &by_stat {
        let mut body = format!("# trial {stat}\n");
        for (trial, value) in rows {
            body.push_str(&format!("{trial} {value}\n"));
        }
        let path = resolved.out.join(format!("report-{stat}.dat"));
        if let Err(e) = std::fs::write(&path, body) {
            eprintln!("error: write {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    println!(
        "wrote {} .dat series to {}",
        by_stat.len(),
        resolved.out.display()
    );
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.cmd {
        Cmd::Sample(o) => run_sample(o),
        Cmd::TaggedMsd(o) => run_experiment("tagged-msd", o),
        Cmd::PairCov(o) => run_experiment("pair", o),
        Cmd::EulerField(o) => run_experiment("euler-transport", o),
        Cmd::DiffusiveField(o) => run_experiment("diffusive-stationarity", o),
        Cmd::StaticCov(o) => run_experiment("static-cov", o),
        Cmd::Fourier(o) => run_experiment("fourier-modes", o),
        Cmd::ListExperiments => run_list(),
        Cmd::Report(o) => run_report(o),
    }
}
