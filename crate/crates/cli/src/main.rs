use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use spinbath::amplitudes::{two_level_rho11, AsymptoticParams};
use spinbath::bathfit::{sample_costs, CostHistogram};
use spinbath::observables::{write_temperature_csv, ObservableSeries};
use spinbath::qed_reference::compare_curves;
use spinbath::scenario::{
    build_rates, execute, fit_problem, run_scenario, steady_summary, Backend, RunReport, ScenarioConfig,
};
use spinbath::Spin;

#[derive(Parser)]
#[command(
    name = "spinbath",
    version,
    about = "Effective open-system dynamics of spin-network states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file; repeat for a batch.
    #[arg(long, required = true)]
    config: Vec<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the spin cutoff of the backend and the fit block.
    #[arg(long)]
    jmax: Option<Spin>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Single-threaded execution.
    #[arg(long)]
    deterministic: bool,
    /// Scenarios run concurrently in a batch.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: amplitudes, rates, evolution, observables.
    Evolve(Common),
    /// Steady states of the effective generator.
    SteadyState(Common),
    /// Closed-form two-level steady population, or a sweep over a grid.
    TwoLevel {
        #[arg(long)]
        lambda1: Option<f64>,
        #[arg(long)]
        lambda2: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.2375)]
        gamma_i: f64,
        #[arg(long, default_value_t = 1.0)]
        s_r: f64,
        #[arg(long, default_value_t = 1.0)]
        n_plus: f64,
        /// Grid points per axis on `(0, lambda-max]`.
        #[arg(long)]
        sweep: Option<usize>,
        #[arg(long, default_value_t = 10.0)]
        lambda_max: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bath fit suite.
    Fit(Common),
    /// Cost distribution of random model weights.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Chain length of the target foam.
        #[arg(long, default_value_t = 4)]
        vertices: usize,
    },
    /// Distance between two integral-normalized release curves.
    Compare { a: PathBuf, b: PathBuf },
    /// Spectral temperature along a scenario trajectory.
    SpectralTemperature(Common),
}

fn load(path: &Path, common: &Common) -> anyhow::Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::load(path).with_context(|| format!("reading {}", path.display()))?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(j) = common.jmax {
        if let Some(Backend::Pr3d { j_max, .. }) = &mut cfg.backend {
            *j_max = j;
        }
        if let Some(f) = &mut cfg.fit {
            f.j_max = j;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(path: &Path, common: &Common, cfg: &ScenarioConfig) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let base = common
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    if common.config.len() > 1 {
        base.join(stem)
    } else {
        base
    }
}

fn pool(common: &Common) -> anyhow::Result<rayon::ThreadPool> {
    let threads = if common.deterministic { 1 } else { common.jobs.max(1) };
    Ok(rayon::ThreadPoolBuilder::new().num_threads(threads).build()?)
}

fn evolve(common: &Common) -> anyhow::Result<bool> {
    let results: Vec<bool> = pool(common)?.install(|| {
        common
            .config
            .par_iter()
            .map(|path| {
                let cfg = match load(path, common) {
                    Ok(c) => c,
                    Err(e) => {
                        eprintln!("{}: {e:#}", path.display());
                        return false;
                    }
                };
                let dir = out_dir(path, common, &cfg);
                match run_scenario(&cfg, &dir) {
                    Ok(r) => {
                        println!("{}: ok in {:.3} s -> {}", path.display(), r.wall_time_s, dir.display());
                        true
                    }
                    Err(e) => {
                        eprintln!("{}: {e}", path.display());
                        let _ = fs::create_dir_all(&dir);
                        let _ = RunReport::failure(Some(&cfg), &e).write_json(&dir.join("report.json"));
                        false
                    }
                }
            })
            .collect()
    });
    Ok(results.into_iter().all(|ok| ok))
}

fn steady_state(common: &Common) -> anyhow::Result<bool> {
    for path in &common.config {
        let cfg = load(path, common)?;
        let Some(backend) = &cfg.backend else {
            bail!("{} has no backend", path.display());
        };
        let (_, kappa) = build_rates(backend, &cfg.labels()?)?;
        let s = steady_summary(&kappa)?;
        let text = serde_json::to_string_pretty(&s)?;
        match &common.out {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                fs::write(dir.join("steady_state.json"), text + "\n")?;
            }
            None => println!("{text}"),
        }
    }
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn two_level(
    lambda1: Option<f64>,
    lambda2: Option<f64>,
    alpha: f64,
    gamma_i: f64,
    s_r: f64,
    n_plus: f64,
    sweep: Option<usize>,
    lambda_max: f64,
    out: Option<PathBuf>,
) -> anyhow::Result<bool> {
    let p = AsymptoticParams::new(gamma_i, s_r, alpha, n_plus)?;
    match sweep {
        None => {
            let (Some(l1), Some(l2)) = (lambda1, lambda2) else {
                bail!("--lambda1 and --lambda2 are required without --sweep");
            };
            println!("{:.15e}", two_level_rho11(l1, l2, &p)?);
        }
        Some(n) => {
            let sink: Box<dyn Write> = match &out {
                Some(path) => Box::new(BufWriter::new(File::create(path)?)),
                None => Box::new(std::io::stdout().lock()),
            };
            let mut w = csv::Writer::from_writer(sink);
            w.write_record(["lambda1", "lambda2", "rho11"])?;
            let grid: Vec<f64> = (1..=n).map(|k| lambda_max * k as f64 / n as f64).collect();
            for &l1 in &grid {
                for &l2 in &grid {
                    let r = two_level_rho11(l1, l2, &p)?;
                    w.write_record([format!("{l1:.12e}"), format!("{l2:.12e}"), format!("{r:.15e}")])?;
                }
            }
            w.flush()?;
        }
    }
    Ok(true)
}

fn fit(common: &Common) -> anyhow::Result<bool> {
    let mut ok = true;
    for path in &common.config {
        let mut cfg = load(path, common)?;
        if cfg.fit.is_none() {
            bail!("{} has no fit block", path.display());
        }
        cfg.backend = None;
        cfg.evolution = None;
        let dir = out_dir(path, common, &cfg);
        match run_scenario(&cfg, &dir) {
            Ok(r) => {
                for e in r.fit.iter().flat_map(|f| &f.entries) {
                    println!(
                        "V = {}: C = {:.6e} ({} evaluations), random mean {:.4}",
                        e.vertices, e.fit.cost, e.fit.evals, e.sample_mean
                    );
                }
            }
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                ok = false;
            }
        }
    }
    Ok(ok)
}

fn sample(common: &Common, samples: usize, vertices: usize) -> anyhow::Result<bool> {
    for path in &common.config {
        let cfg = load(path, common)?;
        let Some(block) = &cfg.fit else {
            bail!("{} has no fit block", path.display());
        };
        let (_, p) = fit_problem(block, cfg.seed, vertices)?;
        let h = CostHistogram::from_values(&sample_costs(&p, samples)?)?;
        let dir = out_dir(path, common, &cfg);
        fs::create_dir_all(&dir)?;
        h.write_csv(BufWriter::new(File::create(dir.join("histogram.csv"))?))?;
        println!(
            "min {:.6} mean {:.6} max {:.6} over {} draws",
            h.min, h.mean, h.max, h.samples
        );
    }
    Ok(true)
}

fn compare(a: &Path, b: &Path) -> anyhow::Result<bool> {
    let read = |p: &Path| -> anyhow::Result<ObservableSeries> {
        Ok(ObservableSeries::read_csv(
            File::open(p).with_context(|| format!("opening {}", p.display()))?,
        )?)
    };
    println!("{:.15e}", compare_curves(&read(a)?, &read(b)?)?);
    Ok(true)
}

fn spectral_temperature(common: &Common) -> anyhow::Result<bool> {
    for path in &common.config {
        let cfg = load(path, common)?;
        let run = execute(&cfg)?;
        let Some(table) = run.observables else {
            bail!("{} produces no trajectory with an energy spectrum", path.display());
        };
        let dir = out_dir(path, common, &cfg);
        fs::create_dir_all(&dir)?;
        write_temperature_csv(
            &table.temperature,
            BufWriter::new(File::create(dir.join("temperature.csv"))?),
        )?;
        let s = table.temperature_summary();
        println!(
            "{} defined steps, first beta {:?}, last beta {:?}, negative to positive: {}",
            s.defined_steps, s.first_beta, s.last_beta, s.negative_to_positive
        );
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Evolve(c) => evolve(c),
        Command::SteadyState(c) => pool(c).and_then(|p| p.install(|| steady_state(c))),
        Command::TwoLevel {
            lambda1,
            lambda2,
            alpha,
            gamma_i,
            s_r,
            n_plus,
            sweep,
            lambda_max,
            out,
        } => two_level(
            *lambda1,
            *lambda2,
            *alpha,
            *gamma_i,
            *s_r,
            *n_plus,
            *sweep,
            *lambda_max,
            out.clone(),
        ),
        Command::Fit(c) => pool(c).and_then(|p| p.install(|| fit(c))),
        Command::Sample {
            common,
            samples,
            vertices,
        } => pool(common).and_then(|p| p.install(|| sample(common, *samples, *vertices))),
        Command::Compare { a, b } => compare(a, b),
        Command::SpectralTemperature(c) => pool(c).and_then(|p| p.install(|| spectral_temperature(c))),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
