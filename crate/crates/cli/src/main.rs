use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hypercover::conductance::{
    conductance_lower_estimate, exact_conductance, write_conductance_rows, ConductanceRow, MAX_CONDUCTANCE_DIM,
};
use hypercover::exact::{spectral_gap, tv_mixing_time, ExactChain, MixingTime};
use hypercover::experiment::{self, ExperimentConfig, ExperimentReport};
use hypercover::theory::{predicted_cover_time, predictions, Params};
use hypercover::walk::{run_cover_trials, trial_records, write_trial_log};
use hypercover::{HypercubeSubgraph, Probability, Start, WalkConfig};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "hypercover",
    version,
    about = "Random walks and cover times on random hypercube subgraphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample an instance and write it as JSON.
    Generate {
        #[arg(long)]
        dim: u32,
        #[arg(long)]
        p: Probability,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate cover times.
    Cover {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, default_value_t = 10)]
        trials: u64,
        #[arg(long, default_value_t = 0.0)]
        laziness: f64,
        #[arg(long, default_value_t = 0)]
        start: u32,
        #[arg(long, default_value_t = 1)]
        walk_seed: u64,
        #[arg(long)]
        max_steps: Option<u64>,
        /// Per-trial CSV log.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Exact mixing time and spectral gap (d ≤ 12).
    Mixing {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, default_value_t = 0.5)]
        laziness: f64,
        /// Threshold; defaults to n^-3.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        max_steps: u64,
    },
    /// Exact conductance (d ≤ 5) or a lower estimate, as a CSV row.
    Conductance {
        #[command(flatten)]
        instance: InstanceArgs,
    },
    /// Table of closed-form predictions over a (d, p) grid.
    Theory {
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<u32>,
        #[arg(long, value_delimiter = ',', required = true)]
        probabilities: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Config-driven experiments.
    Experiment {
        #[command(subcommand)]
        action: ExperimentAction,
    },
}

#[derive(Subcommand)]
enum ExperimentAction {
    /// Run a config; exits nonzero if any asserted row fails.
    Run {
        config: PathBuf,
        /// Overrides the config's CSV path.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Overrides the config's summary path.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Re-run the config stored in a report and compare rows.
    Verify { report: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct InstanceArgs {
    /// Instance file written by `generate`.
    #[arg(long, conflicts_with_all = ["dim", "p", "seed"])]
    instance: Option<PathBuf>,
    #[arg(long)]
    dim: Option<u32>,
    #[arg(long)]
    p: Option<Probability>,
    #[arg(long)]
    seed: Option<u64>,
}

impl InstanceArgs {
    fn load(&self) -> Result<HypercubeSubgraph> {
        if let Some(path) = &self.instance {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            return Ok(HypercubeSubgraph::from_json(&text)?);
        }
        let (Some(d), Some(p)) = (self.dim, self.p.clone()) else {
            bail!("give --instance or both --dim and --p");
        };
        Ok(HypercubeSubgraph::sample(d, p, self.seed.unwrap_or(0))?)
    }
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json value"));
}

fn generate(d: u32, p: Probability, seed: u64, out: Option<PathBuf>) -> Result<()> {
    let g = HypercubeSubgraph::sample(d, p, seed)?;
    match out {
        Some(path) => {
            fs::write(&path, g.to_json())?;
            eprintln!(
                "wrote {}: d={} m={} connected={}",
                path.display(),
                g.dim(),
                g.edge_count(),
                g.is_connected()
            );
        }
        None => println!("{}", g.to_json()),
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cover(
    g: &HypercubeSubgraph,
    trials: u64,
    laziness: f64,
    start: u32,
    walk_seed: u64,
    max_steps: Option<u64>,
    log: Option<PathBuf>,
) -> Result<()> {
    let mut cfg = WalkConfig::simple(walk_seed)
        .with_laziness(laziness)
        .with_start(Start::Vertex(start));
    cfg.max_steps = max_steps;
    let outcomes = run_cover_trials(g, &cfg, trials)?;
    if let Some(path) = log {
        write_trial_log(fs::File::create(&path)?, &trial_records(&cfg, &outcomes))?;
    }
    let times: Vec<f64> = outcomes
        .iter()
        .filter_map(|r| r.as_ref().ok().map(|c| c.cover_time as f64))
        .collect();
    let k = times.len() as f64;
    let mean = times.iter().sum::<f64>() / k;
    let std_err = if times.len() > 1 {
        (times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
    } else {
        f64::NAN
    };
    let params = Params::new(g.dim(), g.p().value())?;
    let predicted = predicted_cover_time(&params).ok();
    print_json(&json!({
        "d": g.dim(),
        "p": g.p().as_str(),
        "instance_seed": g.seed(),
        "walk_seed": walk_seed,
        "laziness": laziness,
        "trials": trials,
        "completed": times.len(),
        "mean_cover_time": mean,
        "std_err": std_err,
        "n_ln_n": params.n_ln_n(),
        "predicted": predicted,
        "ratio_to_predicted": predicted.map(|p| mean / p),
    }));
    Ok(())
}

fn mixing(g: &HypercubeSubgraph, laziness: f64, eps: Option<f64>, max_steps: u64) -> Result<()> {
    let chain = ExactChain::build(g, laziness)?;
    let eps = eps.unwrap_or((chain.n() as f64).powi(-3));
    let t = tv_mixing_time(&chain, eps, max_steps)?;
    let gap = spectral_gap(&chain, 1e-9)?;
    print_json(&json!({
        "d": g.dim(),
        "p": g.p().as_str(),
        "seed": g.seed(),
        "laziness": laziness,
        "eps": eps,
        "mixing_time": match t { MixingTime::Steps(s) => json!(s), MixingTime::Never => json!("never") },
        "spectral_gap": gap.gap,
        "lambda2": gap.lambda2,
        "ln7_n": chain.asymptotic_mixing_time(),
    }));
    Ok(())
}

fn conductance(g: &HypercubeSubgraph) -> Result<()> {
    let row = if g.dim() <= MAX_CONDUCTANCE_DIM {
        let (phi, cut) = exact_conductance(g)?;
        ConductanceRow {
            d: g.dim(),
            p: g.p().as_str().to_string(),
            seed: g.seed(),
            method: "exact".into(),
            value: phi,
            witness_size: Some(cut.size as u64),
            certified: true,
        }
    } else {
        let est = conductance_lower_estimate(g)?;
        ConductanceRow {
            d: g.dim(),
            p: g.p().as_str().to_string(),
            seed: g.seed(),
            method: est.method.as_str().into(),
            value: est.value,
            witness_size: est.witness_size,
            certified: est.certified,
        }
    };
    write_conductance_rows(std::io::stdout().lock(), &[row])?;
    Ok(())
}

fn theory(dims: &[u32], probabilities: &[f64], theta: f64, format: Format) -> Result<()> {
    let mut table = Vec::new();
    for &d in dims {
        for &p in probabilities {
            let params = Params::new(d, p)?;
            for pred in predictions(&params, theta) {
                table.push((d, p, pred));
            }
        }
    }
    match format {
        Format::Json => {
            let rows: Vec<_> = table
                .iter()
                .map(|(d, p, pr)| {
                    json!({"d": d, "p": p, "name": pr.name, "value": pr.value,
                           "formula": pr.formula, "validity": pr.validity})
                })
                .collect();
            print_json(&json!(rows));
        }
        Format::Csv => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "d,p,name,value,formula,validity")?;
            for (d, p, pr) in &table {
                writeln!(
                    out,
                    "{d},{p},{},{},\"{}\",\"{}\"",
                    pr.name, pr.value, pr.formula, pr.validity
                )?;
            }
        }
    }
    Ok(())
}

fn experiment_run(config: &Path, csv: Option<PathBuf>, summary: Option<PathBuf>) -> Result<bool> {
    let text = fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let cfg = ExperimentConfig::from_json(&text)?;
    let report = experiment::run(&cfg)?;
    let csv = csv.or_else(|| cfg.output.csv.as_ref().map(PathBuf::from));
    let summary = summary.or_else(|| cfg.output.summary.as_ref().map(PathBuf::from));
    match (&csv, &summary) {
        (Some(c), Some(s)) => report.write_files(c, s)?,
        (Some(c), None) => fs::write(c, report.rows_csv()?)?,
        (None, Some(s)) => fs::write(s, report.summary_json())?,
        (None, None) => print!("{}", report.rows_csv()?),
    }
    let failures = report.failures();
    eprintln!(
        "{}: {} rows, {} asserted failures, {:.1}s",
        cfg.kind.as_str(),
        report.rows.len(),
        failures.len(),
        report.environment.wall_time_secs
    );
    for f in &failures {
        eprintln!(
            "FAIL d={} p={} {} {}: measured {} ({})",
            f.d, f.p, f.statistic, f.subject, f.measured, f.note
        );
    }
    Ok(failures.is_empty())
}

fn experiment_verify(path: &Path) -> Result<bool> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let report = ExperimentReport::from_json(&text)?;
    let v = experiment::verify(&report)?;
    print_json(&serde_json::to_value(&v)?);
    Ok(v.ok())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate { dim, p, seed, out } => generate(dim, p, seed, out).map(|_| true),
        Command::Cover {
            instance,
            trials,
            laziness,
            start,
            walk_seed,
            max_steps,
            log,
        } => instance
            .load()
            .and_then(|g| cover(&g, trials, laziness, start, walk_seed, max_steps, log))
            .map(|_| true),
        Command::Mixing {
            instance,
            laziness,
            eps,
            max_steps,
        } => instance
            .load()
            .and_then(|g| mixing(&g, laziness, eps, max_steps))
            .map(|_| true),
        Command::Conductance { instance } => instance.load().and_then(|g| conductance(&g)).map(|_| true),
        Command::Theory {
            dims,
            probabilities,
            theta,
            format,
        } => theory(&dims, &probabilities, theta, format).map(|_| true),
        Command::Experiment { action } => match action {
            ExperimentAction::Run { config, csv, summary } => experiment_run(&config, csv, summary),
            ExperimentAction::Verify { report } => experiment_verify(&report),
        },
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
