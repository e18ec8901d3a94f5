//! Simple and lazy random walks on a [`HypercubeSubgraph`].
//!
//! Each trial owns a [`WalkRng`] seeded from `trial_seed(cfg.seed, index)`,
//! so parallel and serial runs see identical trajectories and results are
//! always collected in trial order.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::graph::HypercubeSubgraph;
use crate::rng::{rng_from_seed, trial_seed, WalkRng};

/// Where a walk begins.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    Vertex(u32),
    /// Drawn from `π_v = d_v / 2m`.
    Stationary,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    /// Probability of staying put at each step, in `[0, 1)`.
    pub laziness: f64,
    pub start: Start,
    /// Step budget; `None` uses [`default_budget`].
    pub max_steps: Option<u64>,
    pub seed: u64,
}

impl WalkConfig {
    pub fn simple(seed: u64) -> Self {
        Self {
            laziness: 0.0,
            start: Start::Vertex(0),
            max_steps: None,
            seed,
        }
    }

    pub fn lazy(seed: u64) -> Self {
        Self {
            laziness: 0.5,
            ..Self::simple(seed)
        }
    }

    pub fn with_start(mut self, start: Start) -> Self {
        self.start = start;
        self
    }

    pub fn with_laziness(mut self, laziness: f64) -> Self {
        self.laziness = laziness;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.laziness) {
            return Err(param(format!("laziness {} outside [0, 1)", self.laziness)));
        }
        if self.max_steps == Some(0) {
            return Err(param("max_steps must be at least 1"));
        }
        Ok(())
    }

    pub fn budget(&self, g: &HypercubeSubgraph) -> u64 {
        self.max_steps.unwrap_or_else(|| default_budget(g))
    }
}

/// `100 · n · d · max(1, ⌈ln(2p/(2p−1))⌉)`; for `p ≤ 1/2` the last factor is `d`.
pub fn default_budget(g: &HypercubeSubgraph) -> u64 {
    let p = g.p().value();
    let d = g.dim() as u64;
    let factor = if p > 0.5 {
        ((2.0 * p / (2.0 * p - 1.0)).ln().ceil() as u64).max(1)
    } else {
        d
    };
    100u64
        .saturating_mul(g.n() as u64)
        .saturating_mul(d)
        .saturating_mul(factor)
}

/// Which visits count towards "visited".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VisitWindow {
    /// Steps `0..=t`, including the start.
    FromStart,
    /// Steps `T..=t` only, ignoring the burn-in before `T`.
    Since(u64),
}

impl VisitWindow {
    #[inline]
    fn counts(self, step: u64) -> bool {
        match self {
            VisitWindow::FromStart => true,
            VisitWindow::Since(t0) => step >= t0,
        }
    }
}

/// Position of the `k`-th set bit of `mask` (`k < popcount`).
#[inline]
fn select_bit(mut mask: u32, k: u32) -> u32 {
    for _ in 0..k {
        mask &= mask - 1;
    }
    mask.trailing_zeros()
}

struct Walker<'g> {
    g: &'g HypercubeSubgraph,
    rng: WalkRng,
    laziness: f64,
    pos: u32,
    lazy_steps: u64,
}

impl<'g> Walker<'g> {
    fn new(g: &'g HypercubeSubgraph, cfg: &WalkConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = rng_from_seed(seed);
        let pos = match cfg.start {
            Start::Vertex(v) => {
                g.degree(v)?;
                v
            }
            Start::Stationary => stationary_vertex(g, &mut rng)?,
        };
        if g.degree_of(pos) == 0 {
            return Err(Error::ZeroDegree(pos));
        }
        Ok(Self {
            g,
            rng,
            laziness: cfg.laziness,
            pos,
            lazy_steps: 0,
        })
    }

    #[inline]
    fn step(&mut self) -> u32 {
        if self.laziness > 0.0 && self.rng.gen::<f64>() < self.laziness {
            self.lazy_steps += 1;
            return self.pos;
        }
        let mask = self.g.mask(self.pos);
        let k = self.rng.gen_range(0..mask.count_ones());
        self.pos ^= 1 << select_bit(mask, k);
        self.pos
    }
}

/// A vertex drawn with probability proportional to its degree.
fn stationary_vertex(g: &HypercubeSubgraph, rng: &mut WalkRng) -> Result<u32> {
    if g.edge_count() == 0 {
        return Err(Error::NoEdges);
    }
    let d = g.dim();
    loop {
        let v = rng.gen_range(0..g.n() as u32);
        if rng.gen_range(0..d) < g.degree_of(v) {
            return Ok(v);
        }
    }
}

/// One cover-time trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverResult {
    pub start: u32,
    pub cover_time: u64,
    /// Step of first visit per vertex; the start has 0.
    pub first_visit: Vec<u64>,
    pub last_vertex: u32,
    pub last_degree: u32,
    pub steps_wasted_lazy: u64,
}

/// Run the walk until every vertex has been visited.
///
/// Returns [`Error::BudgetExhausted`] if the budget runs out first, which is
/// how a disconnected instance shows up.
pub fn simulate_cover(g: &HypercubeSubgraph, cfg: &WalkConfig) -> Result<CoverResult> {
    cover_with_seed(g, cfg, cfg.seed)
}

fn cover_with_seed(g: &HypercubeSubgraph, cfg: &WalkConfig, seed: u64) -> Result<CoverResult> {
    let mut w = Walker::new(g, cfg, seed)?;
    let budget = cfg.budget(g);
    let n = g.n();
    let mut first_visit = vec![u64::MAX; n];
    let start = w.pos;
    first_visit[start as usize] = 0;
    let mut remaining = n as u64 - 1;
    let mut last_vertex = start;
    let mut t = 0u64;
    while remaining > 0 {
        if t >= budget {
            return Err(Error::BudgetExhausted {
                budget,
                unvisited: remaining,
            });
        }
        t += 1;
        let x = w.step();
        let slot = &mut first_visit[x as usize];
        if *slot == u64::MAX {
            *slot = t;
            remaining -= 1;
            last_vertex = x;
        }
    }
    Ok(CoverResult {
        start,
        cover_time: t,
        first_visit,
        last_vertex,
        last_degree: g.degree_of(last_vertex),
        steps_wasted_lazy: w.lazy_steps,
    })
}

/// Row of the optional per-trial CSV log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub seed: u64,
    /// Empty when the budget ran out.
    pub cover_time: Option<u64>,
    pub last_vertex: Option<u32>,
    pub last_degree: Option<u32>,
}

/// `trials` independent cover runs; trial `i` uses `trial_seed(cfg.seed, i)`.
pub fn run_cover_trials(g: &HypercubeSubgraph, cfg: &WalkConfig, trials: u64) -> Result<Vec<Result<CoverResult>>> {
    cfg.validate()?;
    Ok((0..trials)
        .into_par_iter()
        .map(|i| cover_with_seed(g, cfg, trial_seed(cfg.seed, i)))
        .collect())
}

pub fn trial_records(cfg: &WalkConfig, outcomes: &[Result<CoverResult>]) -> Vec<TrialRecord> {
    outcomes
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let ok = r.as_ref().ok();
            TrialRecord {
                trial_index: i as u64,
                seed: trial_seed(cfg.seed, i as u64),
                cover_time: ok.map(|c| c.cover_time),
                last_vertex: ok.map(|c| c.last_vertex),
                last_degree: ok.map(|c| c.last_degree),
            }
        })
        .collect()
}

pub fn write_trial_log<W: std::io::Write>(out: W, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Unvisited counts sampled along one trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivorTrajectory {
    pub times: Vec<u64>,
    pub counts: Vec<u64>,
    /// Unvisited vertices by degree at each sample time.
    pub by_degree: Vec<Vec<u64>>,
}

pub fn unvisited_trajectory(
    g: &HypercubeSubgraph,
    cfg: &WalkConfig,
    sample_times: &[u64],
    window: VisitWindow,
) -> Result<SurvivorTrajectory> {
    trajectory_with_seed(g, cfg, sample_times, window, cfg.seed)
}

struct Tally {
    visited: Vec<bool>,
    by_degree: Vec<u64>,
    remaining: u64,
}

impl Tally {
    fn mark(&mut self, g: &HypercubeSubgraph, x: u32) {
        if !self.visited[x as usize] {
            self.visited[x as usize] = true;
            self.by_degree[g.degree_of(x) as usize] -= 1;
            self.remaining -= 1;
        }
    }
}

fn trajectory_with_seed(
    g: &HypercubeSubgraph,
    cfg: &WalkConfig,
    sample_times: &[u64],
    window: VisitWindow,
    seed: u64,
) -> Result<SurvivorTrajectory> {
    if sample_times.windows(2).any(|w| w[0] > w[1]) {
        return Err(param("sample times must be sorted"));
    }
    let mut w = Walker::new(g, cfg, seed)?;
    let n = g.n();
    let mut tally = Tally {
        visited: vec![false; n],
        by_degree: g.degree_histogram().counts,
        remaining: n as u64,
    };
    if window.counts(0) {
        tally.mark(g, w.pos);
    }
    let mut out = SurvivorTrajectory {
        times: sample_times.to_vec(),
        counts: Vec::with_capacity(sample_times.len()),
        by_degree: Vec::with_capacity(sample_times.len()),
    };
    let mut t = 0u64;
    for &target in sample_times {
        while t < target {
            if tally.remaining == 0 {
                t = target;
                break;
            }
            t += 1;
            let x = w.step();
            if window.counts(t) {
                tally.mark(g, x);
            }
        }
        out.counts.push(tally.remaining);
        out.by_degree.push(tally.by_degree.clone());
    }
    Ok(out)
}

/// Trial-averaged unvisited counts at each sample time.
pub fn mean_unvisited_trajectory(
    g: &HypercubeSubgraph,
    cfg: &WalkConfig,
    sample_times: &[u64],
    window: VisitWindow,
    trials: u64,
) -> Result<Vec<f64>> {
    let runs: Vec<SurvivorTrajectory> = (0..trials)
        .into_par_iter()
        .map(|i| trajectory_with_seed(g, cfg, sample_times, window, trial_seed(cfg.seed, i)))
        .collect::<Result<_>>()?;
    let mut mean = vec![0.0; sample_times.len()];
    for run in &runs {
        for (m, &c) in mean.iter_mut().zip(&run.counts) {
            *m += c as f64;
        }
    }
    for m in &mut mean {
        *m /= trials.max(1) as f64;
    }
    Ok(mean)
}

/// Monte Carlo estimate of `R_v(T) = 1 + Σ_{t=1..T} Pr(X_t = v)` for the walk from `v`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnEstimate {
    pub mean: f64,
    pub std_err: f64,
    /// Empirical `Pr(X_t = v)` for `t = 0..=T`.
    pub per_step: Vec<f64>,
    pub trials: u64,
}

pub fn estimate_returns(
    g: &HypercubeSubgraph,
    v: u32,
    horizon: u64,
    trials: u64,
    laziness: f64,
    seed: u64,
) -> Result<ReturnEstimate> {
    if horizon == 0 {
        return Err(param("horizon must be at least 1"));
    }
    if trials == 0 {
        return Err(param("trials must be at least 1"));
    }
    let cfg = WalkConfig {
        laziness,
        start: Start::Vertex(v),
        max_steps: None,
        seed,
    };
    cfg.validate()?;
    if g.degree(v)? == 0 {
        return Err(Error::ZeroDegree(v));
    }
    let h = horizon as usize;
    let hits: Vec<Vec<u64>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut w = Walker::new(g, &cfg, trial_seed(seed, i))?;
            let mut at = Vec::new();
            for t in 1..=horizon {
                if w.step() == v {
                    at.push(t);
                }
            }
            Ok(at)
        })
        .collect::<Result<_>>()?;
    let mut per_step = vec![0.0; h + 1];
    per_step[0] = trials as f64;
    let (mut s1, mut s2) = (0.0, 0.0);
    for at in &hits {
        let visits = 1.0 + at.len() as f64;
        s1 += visits;
        s2 += visits * visits;
        for &t in at {
            per_step[t as usize] += 1.0;
        }
    }
    let k = trials as f64;
    for x in &mut per_step {
        *x /= k;
    }
    let mean = s1 / k;
    let var = if trials > 1 {
        (s2 - k * mean * mean).max(0.0) / (k - 1.0)
    } else {
        0.0
    };
    Ok(ReturnEstimate {
        mean,
        std_err: (var / k).sqrt(),
        per_step,
        trials,
    })
}

/// Empirical distribution of `X_t` over independent trials.
pub fn occupancy_at(g: &HypercubeSubgraph, cfg: &WalkConfig, t: u64, trials: u64) -> Result<Vec<f64>> {
    cfg.validate()?;
    let ends: Vec<u32> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut w = Walker::new(g, cfg, trial_seed(cfg.seed, i))?;
            for _ in 0..t {
                w.step();
            }
            Ok(w.pos)
        })
        .collect::<Result<_>>()?;
    let mut freq = vec![0.0; g.n()];
    for x in ends {
        freq[x as usize] += 1.0;
    }
    for f in &mut freq {
        *f /= trials.max(1) as f64;
    }
    Ok(freq)
}

/// Long-run fraction of time spent at each vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisitFrequencies {
    pub freq: Vec<f64>,
    /// Batch-means standard error per vertex.
    pub std_err: Vec<f64>,
    pub steps: u64,
}

/// Fractions over steps `1..=steps` of one trajectory; standard errors from
/// `batches` equal batches.
pub fn visit_frequencies(
    g: &HypercubeSubgraph,
    cfg: &WalkConfig,
    steps: u64,
    batches: u64,
) -> Result<VisitFrequencies> {
    if batches < 2 || steps < batches {
        return Err(param("need at least two batches and one step per batch"));
    }
    let mut w = Walker::new(g, cfg, cfg.seed)?;
    let n = g.n();
    let per = steps / batches;
    let mut batch_counts = vec![vec![0u32; n]; batches as usize];
    for counts in batch_counts.iter_mut() {
        for _ in 0..per {
            let x = w.step();
            counts[x as usize] += 1;
        }
    }
    let k = batches as f64;
    let mut freq = vec![0.0; n];
    let mut std_err = vec![0.0; n];
    for v in 0..n {
        let fr: Vec<f64> = batch_counts.iter().map(|c| c[v] as f64 / per as f64).collect();
        let mean = fr.iter().sum::<f64>() / k;
        let var = fr.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
        freq[v] = mean;
        std_err[v] = (var / k).sqrt();
    }
    Ok(VisitFrequencies {
        freq,
        std_err,
        steps: per * batches,
    })
}

/// Histogram of the degree of the last vertex covered.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LastDegreeHistogram {
    /// `counts[i]` trials ended on a vertex of degree `i`.
    pub counts: Vec<u64>,
    /// Trials that ran out of budget.
    pub exhausted: u64,
}

impl LastDegreeHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Lower median degree.
    pub fn median(&self) -> Option<u32> {
        let total = self.total();
        if total == 0 {
            return None;
        }
        let half = total.div_ceil(2);
        let mut acc = 0;
        for (i, &c) in self.counts.iter().enumerate() {
            acc += c;
            if acc >= half {
                return Some(i as u32);
            }
        }
        None
    }

    /// Most frequent degree; ties go to the smaller degree.
    pub fn mode(&self) -> Option<u32> {
        let best = *self.counts.iter().max()?;
        if best == 0 {
            return None;
        }
        self.counts.iter().position(|&c| c == best).map(|i| i as u32)
    }
}

pub fn last_visited_degree_distribution(
    g: &HypercubeSubgraph,
    cfg: &WalkConfig,
    trials: u64,
) -> Result<LastDegreeHistogram> {
    let mut hist = LastDegreeHistogram {
        counts: vec![0; g.dim() as usize + 1],
        exhausted: 0,
    };
    for r in run_cover_trials(g, cfg, trials)? {
        match r {
            Ok(c) => hist.counts[c.last_degree as usize] += 1,
            Err(Error::BudgetExhausted { .. }) => hist.exhausted += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(hist)
}

/// Monte Carlo estimates of `Pr(v unvisited)`, `Pr(w unvisited)` and the joint
/// probability at step `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointEstimate {
    pub p_v: f64,
    pub p_w: f64,
    pub p_vw: f64,
    pub trials: u64,
}

impl JointEstimate {
    /// `P_vw / (P_v P_w)`; NaN when either marginal is zero.
    pub fn ratio(&self) -> f64 {
        self.p_vw / (self.p_v * self.p_w)
    }
}

pub fn joint_unvisited_estimate(
    g: &HypercubeSubgraph,
    cfg: &WalkConfig,
    v: u32,
    w: u32,
    t: u64,
    trials: u64,
    window: VisitWindow,
) -> Result<JointEstimate> {
    if v == w {
        return Err(param("joint estimate needs two distinct vertices"));
    }
    g.degree(v)?;
    g.degree(w)?;
    if trials == 0 {
        return Err(param("trials must be at least 1"));
    }
    let outcomes: Vec<(bool, bool)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut walker = Walker::new(g, cfg, trial_seed(cfg.seed, i))?;
            let mut seen_v = window.counts(0) && walker.pos == v;
            let mut seen_w = window.counts(0) && walker.pos == w;
            for s in 1..=t {
                if seen_v && seen_w {
                    break;
                }
                let x = walker.step();
                if window.counts(s) {
                    seen_v |= x == v;
                    seen_w |= x == w;
                }
            }
            Ok((!seen_v, !seen_w))
        })
        .collect::<Result<_>>()?;
    let k = trials as f64;
    let count = |f: fn(&(bool, bool)) -> bool| outcomes.iter().filter(|o| f(o)).count() as f64 / k;
    Ok(JointEstimate {
        p_v: count(|o| o.0),
        p_w: count(|o| o.1),
        p_vw: count(|o| o.0 && o.1),
        trials,
    })
}

/// Monte Carlo `Pr(v not visited within the window through step t)`.
pub fn unvisited_estimate(
    g: &HypercubeSubgraph,
    cfg: &WalkConfig,
    v: u32,
    t: u64,
    trials: u64,
    window: VisitWindow,
) -> Result<f64> {
    g.degree(v)?;
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut walker = Walker::new(g, cfg, trial_seed(cfg.seed, i))?;
            if window.counts(0) && walker.pos == v {
                return Ok(0);
            }
            for s in 1..=t {
                if walker.step() == v && window.counts(s) {
                    return Ok(0);
                }
            }
            Ok(1)
        })
        .sum::<Result<u64>>()?;
    Ok(hits as f64 / trials.max(1) as f64)
}

/// Positions `X_0..=X_steps` of one walk, plus the number of lazy steps.
pub fn trace(g: &HypercubeSubgraph, cfg: &WalkConfig, steps: u64) -> Result<(Vec<u32>, u64)> {
    let mut w = Walker::new(g, cfg, cfg.seed)?;
    let mut path = Vec::with_capacity(steps as usize + 1);
    path.push(w.pos);
    for _ in 0..steps {
        path.push(w.step());
    }
    Ok((path, w.lazy_steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn full(d: u32) -> HypercubeSubgraph {
        HypercubeSubgraph::full(d).unwrap()
    }

    #[test]
    fn select_bit_picks_kth() {
        assert_eq!(select_bit(0b1011, 0), 0);
        assert_eq!(select_bit(0b1011, 1), 1);
        assert_eq!(select_bit(0b1011, 2), 3);
    }

    #[test]
    fn single_edge_covers_in_one_step() {
        let g = full(1);
        for seed in 0..20 {
            let r = simulate_cover(&g, &WalkConfig::simple(seed)).unwrap();
            assert_eq!(r.cover_time, 1);
            assert_eq!(r.last_vertex, 1);
            assert_eq!(r.first_visit, vec![0, 1]);
        }
    }

    #[test]
    fn cover_result_invariants() {
        let g = HypercubeSubgraph::sample_f64(8, 0.8, 4).unwrap();
        assert!(g.is_connected());
        let r = simulate_cover(&g, &WalkConfig::lazy(1).with_start(Start::Vertex(3))).unwrap();
        assert_eq!(r.first_visit[3], 0);
        assert_eq!(*r.first_visit.iter().max().unwrap(), r.cover_time);
        assert_eq!(r.first_visit[r.last_vertex as usize], r.cover_time);
        assert_eq!(r.last_degree, g.degree_of(r.last_vertex));
        assert!(r.steps_wasted_lazy > 0);
    }

    #[test]
    fn disconnected_graph_exhausts_budget() {
        let mut masks = full(2).masks().to_vec();
        // Cut vertex 3 off: drop edges {1,3} and {2,3}.
        masks[3] = 0;
        masks[1] &= !0b10;
        masks[2] &= !0b01;
        let g = HypercubeSubgraph::from_masks(2, "0.5".parse().unwrap(), 0, masks).unwrap();
        let cfg = WalkConfig {
            max_steps: Some(1000),
            ..WalkConfig::simple(0)
        };
        assert!(matches!(
            simulate_cover(&g, &cfg),
            Err(Error::BudgetExhausted {
                budget: 1000,
                unvisited: 1
            })
        ));
        let cfg = cfg.with_start(Start::Vertex(3));
        assert!(matches!(simulate_cover(&g, &cfg), Err(Error::ZeroDegree(3))));
    }

    #[test]
    fn config_validation() {
        let g = full(3);
        assert!(simulate_cover(&g, &WalkConfig::simple(0).with_laziness(1.0)).is_err());
        let cfg = WalkConfig {
            max_steps: Some(0),
            ..WalkConfig::simple(0)
        };
        assert!(simulate_cover(&g, &cfg).is_err());
    }

    #[test]
    fn trajectory_anchors() {
        let g = full(6);
        let cfg = WalkConfig::simple(9);
        let cover = simulate_cover(&g, &cfg).unwrap().cover_time;
        let times = [0, 10, 100, cover - 1, cover, cover + 50];
        let tr = unvisited_trajectory(&g, &cfg, &times, VisitWindow::FromStart).unwrap();
        assert_eq!(tr.counts[0], 63);
        assert!(tr.counts.windows(2).all(|w| w[0] >= w[1]));
        assert!(tr.counts[3] >= 1);
        assert_eq!(tr.counts[4], 0);
        assert_eq!(tr.counts[5], 0);
        assert_eq!(tr.by_degree[0][6], 63);
        assert!(unvisited_trajectory(&g, &cfg, &[5, 1], VisitWindow::FromStart).is_err());
    }

    #[test]
    fn burn_in_window_ignores_early_visits() {
        let g = full(4);
        let cfg = WalkConfig::simple(2);
        let tr = unvisited_trajectory(&g, &cfg, &[0, 5, 6], VisitWindow::Since(6)).unwrap();
        assert_eq!(tr.counts[0], 16);
        assert_eq!(tr.counts[1], 16);
        assert_eq!(tr.counts[2], 15);
    }

    #[test]
    fn returns_on_single_edge() {
        let g = full(1);
        let r = estimate_returns(&g, 0, 2, 200, 0.0, 3).unwrap();
        assert_eq!(r.mean, 2.0);
        assert_eq!(r.per_step, vec![1.0, 0.0, 1.0]);
        let r = estimate_returns(&g, 0, 1, 40_000, 0.5, 3).unwrap();
        assert!((r.mean - 1.5).abs() <= 3.0 * 0.5 / 200.0, "{}", r.mean);
        assert!(estimate_returns(&g, 0, 0, 10, 0.0, 3).is_err());
    }

    #[test]
    fn regular_graph_last_degree_is_d() {
        let g = full(5);
        let h = last_visited_degree_distribution(&g, &WalkConfig::simple(5), 40).unwrap();
        assert_eq!(h.counts[5], 40);
        assert_eq!(h.mode(), Some(5));
        assert_eq!(h.median(), Some(5));
    }

    #[test]
    fn histogram_statistics() {
        let h = LastDegreeHistogram {
            counts: vec![0, 3, 3, 1, 5],
            exhausted: 0,
        };
        assert_eq!(h.mode(), Some(4));
        assert_eq!(h.median(), Some(2));
    }

    #[test]
    fn joint_at_time_zero() {
        let g = full(4);
        let est = joint_unvisited_estimate(&g, &WalkConfig::simple(1), 5, 10, 0, 50, VisitWindow::FromStart).unwrap();
        assert_eq!((est.p_v, est.p_w, est.p_vw), (1.0, 1.0, 1.0));
        assert!(joint_unvisited_estimate(&g, &WalkConfig::simple(1), 5, 5, 0, 50, VisitWindow::FromStart).is_err());
    }

    #[test]
    fn trial_runs_are_deterministic() {
        let g = HypercubeSubgraph::sample_f64(7, 0.8, 2).unwrap();
        let cfg = WalkConfig::simple(77);
        let a = run_cover_trials(&g, &cfg, 16).unwrap();
        let b = run_cover_trials(&g, &cfg, 16).unwrap();
        assert_eq!(a, b);
        let serial: Vec<_> = (0..16).map(|i| cover_with_seed(&g, &cfg, trial_seed(77, i))).collect();
        assert_eq!(a, serial);
    }

    #[test]
    fn trial_log_csv() {
        let g = full(3);
        let cfg = WalkConfig::simple(1);
        let outcomes = run_cover_trials(&g, &cfg, 3).unwrap();
        let recs = trial_records(&cfg, &outcomes);
        let mut buf = Vec::new();
        write_trial_log(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("trial_index,seed,cover_time,last_vertex,last_degree\n"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn stationary_start_is_degree_weighted() {
        let g = HypercubeSubgraph::sample_f64(4, 0.6, 12).unwrap();
        let mut rng = rng_from_seed(0);
        let trials = 200_000;
        let mut counts = vec![0u32; g.n()];
        for _ in 0..trials {
            counts[stationary_vertex(&g, &mut rng).unwrap() as usize] += 1;
        }
        let two_m = 2.0 * g.edge_count() as f64;
        for v in 0..g.n() as u32 {
            let pi = g.degree_of(v) as f64 / two_m;
            let sd = (pi * (1.0 - pi) / trials as f64).sqrt();
            assert!((counts[v as usize] as f64 / trials as f64 - pi).abs() <= 5.0 * sd + 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn steps_follow_retained_edges(d in 2u32..8, pp in 0.55f64..1.0, seed in any::<u64>(), lazy in prop::bool::ANY) {
            let g = HypercubeSubgraph::sample_f64(d, pp, seed).unwrap();
            let start = (0..g.n() as u32).find(|&v| g.degree_of(v) > 0);
            prop_assume!(start.is_some());
            let cfg = WalkConfig::simple(seed ^ 1)
                .with_start(Start::Vertex(start.unwrap()))
                .with_laziness(if lazy { 0.5 } else { 0.0 });
            let (path, lazy_steps) = trace(&g, &cfg, 500).unwrap();
            let mut stays = 0;
            for w in path.windows(2) {
                if w[0] == w[1] {
                    stays += 1;
                } else {
                    let diff = w[0] ^ w[1];
                    prop_assert_eq!(diff.count_ones(), 1);
                    prop_assert!(g.mask(w[0]) & diff != 0);
                }
            }
            prop_assert_eq!(stays, lazy_steps);
            prop_assert_eq!(trace(&g, &cfg, 500).unwrap().0, path);
        }
    }
}
