//! Config-driven sweeps comparing simulation, exact computation and theory.
//!
//! A config names one experiment kind and a `(d, p)` grid. Each cell gets a
//! seed from `(master seed, d, p string, replicate index)`, so reordering the
//! grid does not change any cell. Cells whose instance must be connected
//! resample with derived seeds and record how many samples were rejected.
//! Rows are produced in grid order and every random draw is keyed by an
//! index, so the CSV output is the same for any thread count.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conductance::{
    chain_conductance, cheeger_sandwich, conductance_lower_estimate, exact_conductance, mixing_bound_from_conductance,
    MAX_CONDUCTANCE_DIM,
};
use crate::error::{param, Error, Result};
use crate::exact::{
    r_on_circle, return_series, spectral_gap, tv_mixing_time, unvisited_curve, ExactChain, MAX_EXACT_DIM,
};
use crate::graph::{bfs_distance, spacing_parameters, Distance, HypercubeSubgraph, Probability, Topology};
use crate::rng::{cell_seed, derive_seed, trial_seed, RNG_NAME};
use crate::theory::{
    expected_degree_count, lower_time_mark, predicted_cover_time, solve_alpha, survivor_prediction,
    variance_degree_count, variance_degree_count_exact, Params,
};
use crate::walk::{
    estimate_returns, joint_unvisited_estimate, last_visited_degree_distribution, mean_unvisited_trajectory,
    run_cover_trials, Start, VisitWindow, WalkConfig,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Cap on mixing-time iterations inside experiments.
const MIXING_STEP_CAP: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    CoverTrend,
    Survivor,
    #[serde(rename = "lemma1")]
    FirstVisit,
    Returns,
    Conductance,
    Degrees,
    LastDegree,
    JointUnvisited,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::CoverTrend => "cover_trend",
            ExperimentKind::Survivor => "survivor",
            ExperimentKind::FirstVisit => "lemma1",
            ExperimentKind::Returns => "returns",
            ExperimentKind::Conductance => "conductance",
            ExperimentKind::Degrees => "degrees",
            ExperimentKind::LastDegree => "last_degree",
            ExperimentKind::JointUnvisited => "joint_unvisited",
        }
    }
}

/// Acceptance bands. Unset fields take the defaults listed on each getter.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub ratio_low: Option<f64>,
    pub ratio_high: Option<f64>,
    pub trend_slack: Option<f64>,
    pub survivor_factor: Option<f64>,
    pub rate_rel: Option<f64>,
    pub circle_min: Option<f64>,
    pub condition_iii: Option<f64>,
    pub assert_condition_iii: Option<bool>,
    pub return_max: Option<f64>,
    pub sigmas: Option<f64>,
    pub bin_fraction: Option<f64>,
    pub variance_rel: Option<f64>,
    pub variance_min_mean: Option<f64>,
    pub mode_low_factor: Option<f64>,
    pub mode_high_factor: Option<f64>,
    pub joint_low: Option<f64>,
    pub joint_high: Option<f64>,
    pub min_distance: Option<u32>,
}

impl Tolerances {
    /// Cover-time ratio band at the largest `d`; default `[0.7, 1.4]`.
    pub fn ratio_band(&self) -> (f64, f64) {
        (self.ratio_low.unwrap_or(0.7), self.ratio_high.unwrap_or(1.4))
    }
    /// Allowed growth of `|ratio − 1|` from the smallest to the largest `d`; default 0.05.
    pub fn trend_slack(&self) -> f64 {
        self.trend_slack.unwrap_or(0.05)
    }
    /// Multiplicative survivor band; default 2.
    pub fn survivor_factor(&self) -> f64 {
        self.survivor_factor.unwrap_or(2.0)
    }
    /// Relative error of the decay rate; default 0.1.
    pub fn rate_rel(&self) -> f64 {
        self.rate_rel.unwrap_or(0.1)
    }
    /// Lower bound on `min |R(T, z)|`; default 1/4.
    pub fn circle_min(&self) -> f64 {
        self.circle_min.unwrap_or(0.25)
    }
    /// Upper bound on `T π_v`; default 0.01.
    pub fn condition_iii(&self) -> f64 {
        self.condition_iii.unwrap_or(0.01)
    }
    pub fn assert_condition_iii(&self) -> bool {
        self.assert_condition_iii.unwrap_or(false)
    }
    /// Upper band on the expected number of visits; default 1.5.
    pub fn return_max(&self) -> f64 {
        self.return_max.unwrap_or(1.5)
    }
    /// Width of Monte Carlo agreement bands in standard errors; default 4
    /// for degree bins and 3 elsewhere.
    pub fn sigmas(&self, default: f64) -> f64 {
        self.sigmas.unwrap_or(default)
    }
    /// Fraction of degree bins inside the band; default 0.99.
    pub fn bin_fraction(&self) -> f64 {
        self.bin_fraction.unwrap_or(0.99)
    }
    /// Relative error of the empirical variance; default 0.15.
    pub fn variance_rel(&self) -> f64 {
        self.variance_rel.unwrap_or(0.15)
    }
    /// Variance is checked on bins with at least this expected count; default 50.
    pub fn variance_min_mean(&self) -> f64 {
        self.variance_min_mean.unwrap_or(50.0)
    }
    /// Mode band `[low·dε, high·dε]`; default `[0.5, 2]`.
    pub fn mode_band(&self) -> (f64, f64) {
        (
            self.mode_low_factor.unwrap_or(0.5),
            self.mode_high_factor.unwrap_or(2.0),
        )
    }
    /// Joint ratio band; default `[0.8, 1.25]`.
    pub fn joint_band(&self) -> (f64, f64) {
        (self.joint_low.unwrap_or(0.8), self.joint_high.unwrap_or(1.25))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub csv: Option<String>,
    pub summary: Option<String>,
}

fn default_assert() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    pub dims: Vec<u32>,
    #[serde(default)]
    pub probabilities: Vec<Probability>,
    /// Added to the grid as `p = (1 + ε)/2`.
    #[serde(default)]
    pub epsilons: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    /// Holding probability; the default depends on the kind.
    #[serde(default)]
    pub laziness: Option<f64>,
    /// Instances per cell for `degrees` and `conductance`.
    #[serde(default)]
    pub instances: Option<u64>,
    /// Resampling attempts for a connected instance; default 1000.
    #[serde(default)]
    pub max_resamples: Option<u64>,
    /// Walk horizon for `returns`; default `d²`.
    #[serde(default)]
    pub horizon: Option<u64>,
    /// Vertices for `lemma1` (default 10) or pairs for `joint_unvisited` (default 5).
    #[serde(default)]
    pub vertices: Option<u64>,
    /// Sample times as fractions of `α n d p` (survivor, default `[0.5, 1]`)
    /// or of the lower time mark (joint, default `[0.5]`).
    #[serde(default)]
    pub time_fractions: Option<Vec<f64>>,
    /// Count only visits from this step on (joint estimates).
    #[serde(default)]
    pub burn_in: Option<u64>,
    #[serde(default)]
    pub output: OutputPaths,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_assert")]
    pub assert: bool,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, dims: Vec<u32>, probabilities: &[&str], trials: u64, seed: u64) -> Result<Self> {
        let cfg = Self {
            schema_version: SCHEMA_VERSION,
            kind,
            dims,
            probabilities: probabilities.iter().map(|p| p.parse()).collect::<Result<_>>()?,
            epsilons: Vec::new(),
            trials,
            seed,
            laziness: None,
            instances: None,
            max_resamples: None,
            horizon: None,
            vertices: None,
            time_fractions: None,
            burn_in: None,
            output: OutputPaths::default(),
            tolerances: Tolerances::default(),
            assert: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Format(format!(
                "config schema version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.dims.is_empty() || self.grid()?.is_empty() {
            return Err(param("parameter grid is empty"));
        }
        if self.trials == 0 {
            return Err(param("trials must be at least 1"));
        }
        if let Some(l) = self.laziness {
            if !(0.0..1.0).contains(&l) {
                return Err(param(format!("laziness {l} outside [0, 1)")));
            }
        }
        Ok(())
    }

    /// Retention probabilities: the explicit list, then those from `epsilons`.
    pub fn grid(&self) -> Result<Vec<Probability>> {
        let mut out = self.probabilities.clone();
        for &e in &self.epsilons {
            if !(-1.0..=1.0).contains(&e) {
                return Err(param(format!("ε = {e} outside [−1, 1]")));
            }
            out.push(Probability::new((1.0 + e) / 2.0)?);
        }
        Ok(out)
    }

    fn laziness_or(&self, default: f64) -> f64 {
        self.laziness.unwrap_or(default)
    }

    fn max_resamples(&self) -> u64 {
        self.max_resamples.unwrap_or(1000)
    }
}

/// One measured statistic with its reference value and verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub d: u32,
    pub p: String,
    pub cell_seed: u64,
    pub instance_seed: u64,
    pub statistic: String,
    pub subject: String,
    pub measured: f64,
    pub predicted: Option<f64>,
    pub ratio: Option<f64>,
    pub sigma: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub asserted: bool,
    pub pass: Option<bool>,
    pub note: String,
}

impl ReportRow {
    fn new(cell: &CellKey, statistic: &str, subject: impl Into<String>, measured: f64) -> Self {
        Self {
            d: cell.d,
            p: cell.p.as_str().to_string(),
            cell_seed: cell.seed,
            instance_seed: cell.instance_seed,
            statistic: statistic.to_string(),
            subject: subject.into(),
            measured,
            predicted: None,
            ratio: None,
            sigma: None,
            lower: None,
            upper: None,
            asserted: false,
            pass: None,
            note: String::new(),
        }
    }

    fn predicted(mut self, value: f64) -> Self {
        self.predicted = Some(value);
        self.ratio = Some(self.measured / value);
        self
    }

    fn sigma(mut self, s: f64) -> Self {
        self.sigma = Some(s);
        self
    }

    fn note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    /// Pass iff `lower ≤ value ≤ upper`, where `value` is the ratio when a
    /// prediction is present and the measurement otherwise.
    fn band(mut self, lower: Option<f64>, upper: Option<f64>, asserted: bool) -> Self {
        let v = self.ratio.unwrap_or(self.measured);
        let ok = !v.is_nan() && lower.is_none_or(|l| v >= l) && upper.is_none_or(|u| v <= u);
        self.lower = lower;
        self.upper = upper;
        self.pass = Some(ok);
        self.asserted = asserted;
        self
    }

    /// Pass iff `measured` is within `k` standard errors of `predicted`.
    fn within_sigmas(mut self, k: f64, asserted: bool) -> Self {
        let (pred, s) = (self.predicted.expect("prediction set"), self.sigma.expect("sigma set"));
        self.lower = Some(pred - k * s);
        self.upper = Some(pred + k * s);
        self.pass = Some((self.measured - pred).abs() <= k * s);
        self.asserted = asserted;
        self
    }

    pub fn failed(&self) -> bool {
        self.asserted && self.pass != Some(true)
    }
}

/// Sampling outcome for one `(d, p)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellAccounting {
    pub d: u32,
    pub p: String,
    pub accepted: u64,
    pub rejected: u64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub crate_version: String,
    pub rng: String,
    /// Excluded from report comparisons.
    pub wall_time_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub environment: Environment,
    pub cells: Vec<CellAccounting>,
    pub rows: Vec<ReportRow>,
    pub passed: bool,
}

impl ExperimentReport {
    pub fn failures(&self) -> Vec<&ReportRow> {
        self.rows.iter().filter(|r| r.failed()).collect()
    }

    pub fn rows_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Writes the rows as CSV and the whole report as JSON.
    pub fn write_files(&self, csv_path: &Path, summary_path: &Path) -> Result<()> {
        std::fs::write(csv_path, self.rows_csv()?)?;
        std::fs::write(summary_path, self.summary_json())?;
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct CellKey {
    d: u32,
    p: Probability,
    seed: u64,
    instance_seed: u64,
}

/// Samples until connected; the first attempt uses the cell seed itself.
fn connected_instance(d: u32, p: &Probability, seed: u64, max_resamples: u64) -> Result<(HypercubeSubgraph, u64)> {
    for attempt in 0..=max_resamples {
        let s = if attempt == 0 {
            seed
        } else {
            resample_seed(seed, attempt)
        };
        let g = HypercubeSubgraph::sample(d, p.clone(), s)?;
        if g.is_connected() {
            return Ok((g, attempt));
        }
    }
    Err(Error::Domain {
        formula: "connected_instance",
        reason: format!("no connected sample in {} attempts", max_resamples + 1),
    })
}

pub fn resample_seed(seed: u64, attempt: u64) -> u64 {
    derive_seed("resample", &[&seed.to_le_bytes(), &attempt.to_le_bytes()])
}

/// Seed of the walks run on a cell's instance.
pub fn walk_seed(cell_seed: u64) -> u64 {
    derive_seed("walk", &[&cell_seed.to_le_bytes()])
}

struct Collector {
    rows: Vec<ReportRow>,
    cells: Vec<CellAccounting>,
}

impl Collector {
    fn cell_error(&mut self, key: &CellKey, e: &Error) {
        self.rows.push(
            ReportRow::new(key, "cell_error", "", f64::NAN)
                .note(e.to_string())
                .band(None, None, true),
        );
        let acct = self.cells.last_mut().expect("cell registered");
        acct.error = Some(e.to_string());
    }
}

/// Runs the experiment named by `config.kind`.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let started = Instant::now();
    let mut out = Collector {
        rows: Vec::new(),
        cells: Vec::new(),
    };
    let grid = config.grid()?;
    for &d in &config.dims {
        for p in &grid {
            let seed = cell_seed(config.seed, d, p.as_str(), 0);
            let mut key = CellKey {
                d,
                p: p.clone(),
                seed,
                instance_seed: seed,
            };
            out.cells.push(CellAccounting {
                d,
                p: p.as_str().to_string(),
                accepted: 0,
                rejected: 0,
                error: None,
            });
            let result = match config.kind {
                ExperimentKind::Degrees => degrees_cell(config, &key, &mut out),
                ExperimentKind::Conductance => conductance_cell(config, &key, &mut out),
                _ => connected_instance(d, p, seed, config.max_resamples()).and_then(|(g, rejected)| {
                    key.instance_seed = g.seed();
                    let acct = out.cells.last_mut().expect("cell registered");
                    acct.accepted = 1;
                    acct.rejected = rejected;
                    match config.kind {
                        ExperimentKind::CoverTrend => cover_cell(config, &key, &g, &mut out),
                        ExperimentKind::Survivor => survivor_cell(config, &key, &g, &mut out),
                        ExperimentKind::FirstVisit => first_visit_cell(config, &key, &g, &mut out),
                        ExperimentKind::Returns => returns_cell(config, &key, &g, &mut out),
                        ExperimentKind::LastDegree => last_degree_cell(config, &key, &g, &mut out),
                        ExperimentKind::JointUnvisited => joint_cell(config, &key, &g, &mut out),
                        ExperimentKind::Degrees | ExperimentKind::Conductance => unreachable!(),
                    }
                }),
            };
            if let Err(e) = result {
                if let Error::Domain {
                    formula: "connected_instance",
                    ..
                } = e
                {
                    let acct = out.cells.last_mut().expect("cell registered");
                    acct.rejected = config.max_resamples() + 1;
                }
                out.cell_error(&key, &e);
            }
        }
    }
    if config.kind == ExperimentKind::CoverTrend {
        cover_trend_rows(config, &grid, &mut out);
    }
    let passed = !out.rows.iter().any(ReportRow::failed);
    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        environment: Environment {
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            rng: RNG_NAME.to_string(),
            wall_time_secs: started.elapsed().as_secs_f64(),
        },
        cells: out.cells,
        rows: out.rows,
        passed,
    })
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

fn cover_cell(config: &ExperimentConfig, key: &CellKey, g: &HypercubeSubgraph, out: &mut Collector) -> Result<()> {
    let cfg = WalkConfig::simple(walk_seed(key.seed)).with_laziness(config.laziness_or(0.0));
    let outcomes = run_cover_trials(g, &cfg, config.trials)?;
    let times: Vec<f64> = outcomes
        .iter()
        .filter_map(|r| r.as_ref().ok().map(|c| c.cover_time as f64))
        .collect();
    let exhausted = outcomes.len() - times.len();
    if times.is_empty() {
        return Err(Error::BudgetExhausted {
            budget: cfg.budget(g),
            unvisited: 0,
        });
    }
    let (mean, se) = mean_and_stderr(&times);
    let params = Params::new(key.d, key.p.value())?;
    let predicted = predicted_cover_time(&params)?;
    let lazy_factor = 1.0 / (1.0 - cfg.laziness);
    let row = ReportRow::new(key, "cover_time", "start=0", mean)
        .predicted(predicted * lazy_factor)
        .sigma(se / (predicted * lazy_factor))
        .note(format!(
            "trials={} exhausted={exhausted} n_ln_n={:.6}",
            config.trials,
            params.n_ln_n()
        ));
    // Single-cell grids carry the band on the ratio itself.
    let single_d = config.dims.len() == 1;
    let (lo, hi) = config.tolerances.ratio_band();
    let asserted = config.assert && config.trials >= 2 && single_d;
    out.rows.push(row.band(Some(lo), Some(hi), asserted));
    Ok(())
}

/// For each `p`, compares `|ratio − 1|` at the smallest and largest `d` and
/// checks the ratio at the largest `d`.
fn cover_trend_rows(config: &ExperimentConfig, grid: &[Probability], out: &mut Collector) {
    if config.dims.len() < 2 {
        return;
    }
    let d_min = *config.dims.iter().min().expect("non-empty");
    let d_max = *config.dims.iter().max().expect("non-empty");
    let asserted = config.assert && config.trials >= 2;
    for p in grid {
        let find = |d: u32| {
            out.rows
                .iter()
                .find(|r| r.statistic == "cover_time" && r.d == d && r.p == p.as_str())
                .cloned()
        };
        let (Some(small), Some(large)) = (find(d_min), find(d_max)) else {
            continue;
        };
        let dev_small = (small.ratio.unwrap_or(f64::NAN) - 1.0).abs();
        let dev_large = (large.ratio.unwrap_or(f64::NAN) - 1.0).abs();
        let key = CellKey {
            d: d_max,
            p: p.clone(),
            seed: large.cell_seed,
            instance_seed: large.instance_seed,
        };
        out.rows.push(
            ReportRow::new(
                &key,
                "cover_trend",
                format!("d={d_min}..{d_max}"),
                dev_large - dev_small,
            )
            .note(format!(
                "deviation d={d_min}: {dev_small:.6}; d={d_max}: {dev_large:.6}"
            ))
            .band(None, Some(config.tolerances.trend_slack()), asserted),
        );
        let (lo, hi) = config.tolerances.ratio_band();
        let mut final_row = ReportRow::new(&key, "cover_ratio_final", format!("d={d_max}"), large.measured);
        final_row.predicted = large.predicted;
        final_row.ratio = large.ratio;
        final_row.sigma = large.sigma;
        out.rows.push(final_row.band(Some(lo), Some(hi), asserted));
    }
}

fn survivor_cell(config: &ExperimentConfig, key: &CellKey, g: &HypercubeSubgraph, out: &mut Collector) -> Result<()> {
    let params = Params::new(key.d, key.p.value())?;
    let alpha = solve_alpha(params.p)?;
    let fractions = config.time_fractions.clone().unwrap_or_else(|| vec![0.5, 1.0]);
    let times: Vec<u64> = fractions
        .iter()
        .map(|f| (f * alpha * params.ndp()).round() as u64)
        .collect();
    let mut sorted = times.clone();
    sorted.sort_unstable();
    let cfg = WalkConfig::simple(walk_seed(key.seed)).with_laziness(config.laziness_or(0.0));
    let means = mean_unvisited_trajectory(g, &cfg, &sorted, VisitWindow::FromStart, config.trials)?;
    let factor = config.tolerances.survivor_factor();
    for (f, t) in fractions.iter().zip(&times) {
        let idx = sorted.iter().position(|s| s == t).expect("time present");
        let predicted = survivor_prediction(&params, *t as f64);
        out.rows.push(
            ReportRow::new(key, "survivors", format!("t={t}"), means[idx])
                .predicted(predicted)
                .note(format!("t = {f} α n d p, trials={}", config.trials))
                .band(Some(1.0 / factor), Some(factor), config.assert),
        );
    }
    Ok(())
}

/// Least-squares slope of `ln y` against `t`.
fn log_slope(ts: &[f64], ys: &[f64]) -> f64 {
    let k = ts.len() as f64;
    let lx: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mt = ts.iter().sum::<f64>() / k;
    let my = lx.iter().sum::<f64>() / k;
    let cov: f64 = ts.iter().zip(&lx).map(|(t, y)| (t - mt) * (y - my)).sum();
    let var: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
    cov / var
}

/// The `count` lowest-degree vertices, ties broken by label.
pub fn lowest_degree_vertices(g: &HypercubeSubgraph, count: usize) -> Vec<u32> {
    let mut vs: Vec<u32> = (0..g.n() as u32).collect();
    vs.sort_by_key(|&v| (g.degree_of(v), v));
    vs.truncate(count);
    vs
}

/// Exact first-visit decay on one vertex, measured against `π_v / R_v`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub vertex: u32,
    pub degree: u32,
    pub mixing_time: u64,
    pub r_value: f64,
    pub pi: f64,
    /// Fitted `−d ln Pr(v unvisited) / dt`.
    pub rate: f64,
    /// `ln(1 + π_v / R_v)`.
    pub predicted_rate: f64,
    pub circle_min: f64,
}

impl DecayFit {
    pub fn relative_error(&self) -> f64 {
        self.rate / self.predicted_rate - 1.0
    }

    /// `c` in `rate = predicted (1 + c T π_v)`.
    pub fn fitted_constant(&self) -> f64 {
        self.relative_error() / (self.mixing_time as f64 * self.pi)
    }
}

/// Fits the decay of `Pr(v not visited in [T, t])` for `t` in `[T, t_end]`
/// by least squares over 1000 evenly spaced points, with `T` the given
/// mixing time. The walk starts at the label complement of `v`. `R_v` sums
/// the return probabilities over `T` steps and the circle radius uses
/// `K = k_factor · R_v`.
pub fn decay_fit(chain: &ExactChain, v: u32, mixing_time: u64, t_end: u64, k_factor: f64) -> Result<DecayFit> {
    let n = chain.n() as u32;
    let series = return_series(chain, v, mixing_time.max(1) as usize)?;
    let r_value = series.r_value();
    let circle = r_on_circle(&series, k_factor * r_value)?;
    let start = v ^ (n - 1);
    let curve = unvisited_curve(chain, v, start, t_end, VisitWindow::Since(mixing_time))?;
    let span = t_end.saturating_sub(mixing_time).max(1);
    let points = 1000u64.min(span);
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for k in 0..=points {
        let t = mixing_time + span * k / points;
        let y = curve[t as usize];
        if y > 0.0 {
            ts.push(t as f64);
            ys.push(y);
        }
    }
    let pi = chain.stationary()[v as usize];
    Ok(DecayFit {
        vertex: v,
        degree: chain.degree(v),
        mixing_time,
        r_value,
        pi,
        rate: -log_slope(&ts, &ys),
        predicted_rate: (pi / r_value).ln_1p(),
        circle_min: circle.min_modulus,
    })
}

fn first_visit_cell(
    config: &ExperimentConfig,
    key: &CellKey,
    g: &HypercubeSubgraph,
    out: &mut Collector,
) -> Result<()> {
    if key.d > 10 {
        return Err(Error::Capacity {
            what: "first-visit check dimension",
            got: key.d as u64,
            limit: 10,
        });
    }
    let chain = ExactChain::build(g, config.laziness_or(0.5))?;
    let n = chain.n() as f64;
    let eps = n.powi(-3);
    let t_mix = tv_mixing_time(&chain, eps, MIXING_STEP_CAP)?
        .steps()
        .ok_or(Error::Domain {
            formula: "tv_mixing_time",
            reason: "chain never mixes".into(),
        })?;
    let t_end = 20 * g.n() as u64 * key.d as u64;
    let tol = &config.tolerances;
    let count = config.vertices.unwrap_or(10) as usize;
    let two_m = 2.0 * g.edge_count() as f64;
    let dnp = key.d as f64 * n * key.p.value();
    out.rows.push(
        ReportRow::new(key, "mixing_time", "eps=n^-3", t_mix as f64)
            .note(format!("ln^7 n = {:.1}", chain.asymptotic_mixing_time())),
    );
    for v in lowest_degree_vertices(g, count) {
        let fit = decay_fit(&chain, v, t_mix, t_end, 3.0)?;
        let subject = format!("v={v} deg={}", fit.degree);
        let rel = tol.rate_rel();
        out.rows.push(
            ReportRow::new(key, "decay_rate", subject.clone(), fit.rate)
                .predicted(fit.predicted_rate)
                .note(format!(
                    "R_v={:.6} T={t_mix} T*pi_v={:.4} fitted c={:.4}",
                    fit.r_value,
                    t_mix as f64 * fit.pi,
                    fit.fitted_constant()
                ))
                .band(Some(1.0 - rel), Some(1.0 + rel), config.assert),
        );
        out.rows.push(
            ReportRow::new(key, "circle_min", subject.clone(), fit.circle_min)
                .note(format!("K = 3 R_v, T={t_mix}"))
                .band(Some(tol.circle_min()), None, config.assert),
        );
        out.rows.push(
            ReportRow::new(key, "t_pi", subject.clone(), t_mix as f64 * fit.pi).band(
                None,
                Some(tol.condition_iii()),
                config.assert && tol.assert_condition_iii(),
            ),
        );
        let d_v = fit.degree as f64;
        let nu_fit = 1.0 - fit.rate * dnp / d_v;
        let nu_formula = 1.0 - dnp / (two_m * fit.r_value);
        out.rows.push(
            ReportRow::new(key, "nu", subject, nu_fit)
                .predicted(nu_formula)
                .note("ν from the fitted rate vs 1 − dnp/(2m R_v)"),
        );
    }
    Ok(())
}

fn returns_cell(config: &ExperimentConfig, key: &CellKey, g: &HypercubeSubgraph, out: &mut Collector) -> Result<()> {
    let d = key.d;
    let horizon = config.horizon.unwrap_or((d * d) as u64);
    let laziness = config.laziness_or(0.0);
    let v = lowest_degree_vertices(g, 1)[0];
    let est = estimate_returns(g, v, horizon, config.trials, laziness, walk_seed(key.seed))?;
    let subject = format!("v={v} deg={}", g.degree_of(v));
    let ln_d = (d as f64).ln();
    out.rows.push(
        ReportRow::new(key, "returns", subject.clone(), est.mean)
            .sigma(est.std_err)
            .note(format!(
                "T={horizon} laziness={laziness} fitted c=(R-1) ln d={:.4}",
                (est.mean - 1.0) * ln_d
            ))
            .band(
                None,
                Some(config.tolerances.return_max()),
                config.assert && laziness == 0.0,
            ),
    );
    if d <= MAX_EXACT_DIM.min(10) {
        let chain = ExactChain::build(g, laziness)?;
        let exact = return_series(&chain, v, horizon as usize + 1)?.r_value();
        out.rows.push(
            ReportRow::new(key, "returns_vs_exact", subject, est.mean)
                .predicted(exact)
                .sigma(est.std_err)
                .note(format!("exact fitted c={:.4}", (exact - 1.0) * ln_d))
                .within_sigmas(config.tolerances.sigmas(3.0), config.assert),
        );
    }
    Ok(())
}

fn degrees_cell(config: &ExperimentConfig, key: &CellKey, out: &mut Collector) -> Result<()> {
    let d = key.d;
    let reps = config.instances.unwrap_or(10_000);
    if reps < 2 {
        return Err(param("degree statistics need at least two instances"));
    }
    let hists: Vec<Vec<u64>> = (0..reps)
        .into_par_iter()
        .map(|i| {
            HypercubeSubgraph::sample(d, key.p.clone(), trial_seed(key.seed, i)).map(|g| g.degree_histogram().counts)
        })
        .collect::<Result<_>>()?;
    let acct = out.cells.last_mut().expect("cell registered");
    acct.accepted = reps;
    let params = Params::new(d, key.p.value())?;
    let tol = &config.tolerances;
    let k = tol.sigmas(4.0);
    let r = reps as f64;
    let mut inside = 0usize;
    let mut bins = 0usize;
    for i in 0..=d as usize {
        let sum: u64 = hists.iter().map(|h| h[i]).sum();
        let sum_sq: u128 = hists.iter().map(|h| (h[i] as u128).pow(2)).sum();
        let mean = sum as f64 / r;
        let var = (sum_sq as f64 - r * mean * mean) / (r - 1.0);
        let ex = expected_degree_count(&params, i as u32)?;
        let var_exact = variance_degree_count_exact(&params, i as u32)?;
        let var_approx = variance_degree_count(&params, i as u32)?;
        let row = ReportRow::new(key, "degree_mean", format!("i={i}"), mean)
            .predicted(ex)
            .sigma((var_exact / r).sqrt())
            .within_sigmas(k, false);
        bins += 1;
        if row.pass == Some(true) {
            inside += 1;
        }
        out.rows.push(row);
        if ex >= tol.variance_min_mean() {
            let rel = tol.variance_rel();
            out.rows.push(
                ReportRow::new(key, "degree_variance", format!("i={i}"), var)
                    .predicted(var_exact)
                    .note(format!(
                        "first-order form {var_approx:.4}, ratio {:.4}",
                        var / var_approx
                    ))
                    .band(Some(1.0 - rel), Some(1.0 + rel), config.assert),
            );
            out.rows.push(
                ReportRow::new(key, "degree_variance_first_order", format!("i={i}"), var)
                    .predicted(var_approx)
                    .band(Some(1.0 - rel), Some(1.0 + rel), false),
            );
        }
    }
    out.rows.push(
        ReportRow::new(
            key,
            "degree_bins_within",
            format!("{k} sigma"),
            inside as f64 / bins as f64,
        )
        .note(format!("{inside} of {bins} bins, instances={reps}"))
        .band(Some(tol.bin_fraction()), None, config.assert),
    );
    Ok(())
}

fn last_degree_cell(
    config: &ExperimentConfig,
    key: &CellKey,
    g: &HypercubeSubgraph,
    out: &mut Collector,
) -> Result<()> {
    let cfg = WalkConfig::simple(walk_seed(key.seed)).with_laziness(config.laziness_or(0.0));
    let hist = last_visited_degree_distribution(g, &cfg, config.trials)?;
    let p = key.p.value();
    let d = key.d as f64;
    let dp = d * p;
    let d_eps = d * (2.0 * p - 1.0);
    let counts = hist
        .counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, c)| format!("{i}:{c}"))
        .collect::<Vec<_>>()
        .join(" ");
    let note = format!("histogram {counts}; exhausted={}", hist.exhausted);
    let median = hist.median().map_or(f64::NAN, |m| m as f64);
    let mut row = ReportRow::new(key, "last_degree_median", "", median)
        .note(note.clone())
        .band(None, Some(dp), config.assert);
    // Strictly below dp.
    row.pass = Some(median < dp);
    out.rows.push(row);
    let mode = hist.mode().map_or(f64::NAN, |m| m as f64);
    let (lo, hi) = config.tolerances.mode_band();
    out.rows.push(
        ReportRow::new(key, "last_degree_mode", "", mode)
            .note(format!("dε = {d_eps:.4}"))
            .band(Some(lo * d_eps), Some(hi * d_eps), config.assert),
    );
    let overall = g.degree_histogram();
    let median_overall = {
        let half = (g.n() as u64).div_ceil(2);
        let mut acc = 0;
        overall
            .counts
            .iter()
            .position(|&c| {
                acc += c;
                acc >= half
            })
            .map_or(f64::NAN, |i| i as f64)
    };
    out.rows
        .push(ReportRow::new(key, "degree_median_overall", "", median_overall));
    Ok(())
}

/// Far-apart pairs among the vertices whose degree is closest to `target`,
/// also far from `start`; greedy in order of `(|deg − target|, label)`.
pub fn far_pairs(
    g: &HypercubeSubgraph,
    target: f64,
    min_distance: u32,
    start: u32,
    count: usize,
) -> Result<Vec<(u32, u32)>> {
    let far = |u: u32, v: u32| -> Result<bool> {
        Ok(match bfs_distance(Topology::Subgraph(g), u, v, min_distance)? {
            Distance::ExceedsCap => true,
            Distance::Finite(k) => k >= min_distance,
        })
    };
    let mut cands: Vec<u32> = (0..g.n() as u32)
        .filter(|&v| g.degree_of(v) > 0 && v != start)
        .collect();
    cands.sort_by(|&a, &b| {
        let key = |v: u32| (g.degree_of(v) as f64 - target).abs();
        key(a).total_cmp(&key(b)).then(a.cmp(&b))
    });
    let mut used = vec![false; g.n()];
    let mut pairs = Vec::new();
    for (i, &v) in cands.iter().enumerate() {
        if pairs.len() == count {
            break;
        }
        if used[v as usize] || !far(start, v)? {
            continue;
        }
        for &w in &cands[i + 1..] {
            if !used[w as usize] && far(start, w)? && far(v, w)? {
                used[v as usize] = true;
                used[w as usize] = true;
                pairs.push((v, w));
                break;
            }
        }
    }
    Ok(pairs)
}

fn joint_cell(config: &ExperimentConfig, key: &CellKey, g: &HypercubeSubgraph, out: &mut Collector) -> Result<()> {
    let params = Params::new(key.d, key.p.value())?;
    let t_l = lower_time_mark(&params)?;
    let (_, h) = spacing_parameters(key.d);
    let min_distance = config.tolerances.min_distance.unwrap_or(h.ceil() as u32);
    let count = config.vertices.unwrap_or(5) as usize;
    let d_eps = params.df() * params.eps;
    let pairs = far_pairs(g, d_eps, min_distance, 0, count)?;
    if pairs.len() < count {
        out.rows.push(
            ReportRow::new(key, "joint_pairs_found", "", pairs.len() as f64)
                .note(format!("distance ≥ {min_distance}"))
                .band(Some(count as f64), None, config.assert),
        );
    }
    let window = config.burn_in.map_or(VisitWindow::FromStart, VisitWindow::Since);
    let cfg = WalkConfig::simple(walk_seed(key.seed))
        .with_laziness(config.laziness_or(0.0))
        .with_start(Start::Vertex(0));
    let (lo, hi) = config.tolerances.joint_band();
    for f in config.time_fractions.clone().unwrap_or_else(|| vec![0.5]) {
        let t = (f * t_l.t).round() as u64;
        for (idx, &(v, w)) in pairs.iter().enumerate() {
            let pair_cfg = cfg.with_seed(trial_seed(cfg.seed, idx as u64));
            let est = joint_unvisited_estimate(g, &pair_cfg, v, w, t, config.trials, window)?;
            let ratio = est.ratio();
            let trials = config.trials as f64;
            let rel_var = (1.0 / est.p_vw - 1.0) / trials;
            out.rows.push(
                ReportRow::new(
                    key,
                    "joint_ratio",
                    format!("v={v} deg={} w={w} deg={} t={t}", g.degree_of(v), g.degree_of(w)),
                    ratio,
                )
                .sigma(ratio * rel_var.sqrt())
                .note(format!(
                    "P_v={:.5} P_w={:.5} P_vw={:.5} t={f} t_L, t_L={:.1}",
                    est.p_v, est.p_w, est.p_vw, t_l.t
                ))
                .band(Some(lo), Some(hi), config.assert),
            );
        }
    }
    Ok(())
}

fn conductance_cell(config: &ExperimentConfig, key: &CellKey, out: &mut Collector) -> Result<()> {
    let d = key.d;
    let reps = config.instances.unwrap_or(1);
    let laziness = config.laziness_or(0.5);
    for i in 0..reps {
        let seed = trial_seed(key.seed, i);
        let g = HypercubeSubgraph::sample(d, key.p.clone(), seed)?;
        let acct = out.cells.last_mut().expect("cell registered");
        if !g.is_connected() {
            acct.rejected += 1;
            continue;
        }
        acct.accepted += 1;
        let inst = CellKey {
            instance_seed: seed,
            ..key.clone()
        };
        let subject = format!("instance={i}");
        if d <= MAX_CONDUCTANCE_DIM {
            let (phi, cut) = exact_conductance(&g)?;
            let chain = ExactChain::build(&g, laziness)?;
            let gap = spectral_gap(&chain, 1e-9)?.gap;
            let (lo, hi) = cheeger_sandwich(gap)?;
            out.rows.push(
                ReportRow::new(&inst, "conductance_exact", subject.clone(), phi)
                    .note(format!("gap={gap:.9} witness size {}", cut.size))
                    .band(Some(lo), Some(hi), config.assert),
            );
            let n = chain.n() as f64;
            let eps = n.powi(-3);
            let t_mix = tv_mixing_time(&chain, eps, MIXING_STEP_CAP)?;
            let pi = chain.stationary();
            let pi_min = pi.iter().cloned().fold(f64::INFINITY, f64::min);
            let pi_max = pi.iter().cloned().fold(0.0, f64::max);
            let phi_chain = chain_conductance(phi, laziness);
            let bound = mixing_bound_from_conductance(phi_chain, pi_min, pi_max, eps)?;
            let measured = t_mix.steps().map_or(f64::INFINITY, |t| t as f64);
            let upper = bound.steps().map_or(f64::INFINITY, |t| t as f64);
            out.rows.push(
                ReportRow::new(&inst, "mixing_vs_conductance_bound", subject, measured)
                    .note(format!("bound from chain conductance {phi_chain:.6}"))
                    .band(None, Some(upper), config.assert),
            );
        } else {
            let est = conductance_lower_estimate(&g)?;
            let df = d as f64;
            let order = 1.0 / (df.powi(3) * df.ln());
            out.rows.push(
                ReportRow::new(&inst, "conductance_estimate", subject, est.value)
                    .predicted(order)
                    .note(format!("method={} certified={}", est.method.as_str(), est.certified)),
            );
        }
    }
    Ok(())
}

/// Outcome of re-running the config stored in a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub rows_match: bool,
    pub rows_compared: usize,
    pub mismatched_rows: Vec<usize>,
    pub failed_rows: usize,
}

impl Verification {
    pub fn ok(&self) -> bool {
        self.rows_match && self.failed_rows == 0
    }
}

/// Re-runs the report's config and compares the rows as CSV text.
pub fn verify(report: &ExperimentReport) -> Result<Verification> {
    let rerun = run(&report.config)?;
    let line = |r: &ReportRow| -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(r)?;
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    };
    let mut mismatched = Vec::new();
    let len = report.rows.len().max(rerun.rows.len());
    for i in 0..len {
        let same = match (report.rows.get(i), rerun.rows.get(i)) {
            (Some(a), Some(b)) => line(a)? == line(b)?,
            _ => false,
        };
        if !same {
            mismatched.push(i);
        }
    }
    Ok(Verification {
        rows_match: mismatched.is_empty(),
        rows_compared: len,
        mismatched_rows: mismatched,
        failed_rows: rerun.failures().len(),
    })
}
