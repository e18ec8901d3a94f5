//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use hypercover::conductance::{
    chain_conductance, cheeger_sandwich, exact_conductance, harper_check_exhaustive, harper_check_sampled,
    mixing_bound_from_conductance,
};
use hypercover::exact::{
    exact_cover_time, return_series, spectral_gap, tv_mixing_time, unvisited_probability_exact, ExactChain,
};
use hypercover::experiment::{self, decay_fit, lowest_degree_vertices, ExperimentConfig, ExperimentKind};
use hypercover::graph::spacing_parameters;
use hypercover::walk::{estimate_returns, run_cover_trials, unvisited_estimate, visit_frequencies};
use hypercover::{HypercubeSubgraph, VisitWindow, WalkConfig};

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn cover_times(g: &HypercubeSubgraph, cfg: &WalkConfig, trials: u64) -> Vec<f64> {
    run_cover_trials(g, cfg, trials)
        .unwrap()
        .into_iter()
        .map(|r| r.unwrap().cover_time as f64)
        .collect()
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / k;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1.0);
    (m, (v / k).sqrt())
}

fn full_cube_cover_anchor() -> Outcome {
    let g = HypercubeSubgraph::full(16).unwrap();
    let times = cover_times(&g, &WalkConfig::simple(16), 30);
    let (mean, se) = mean_se(&times);
    let n_ln_n = 65536.0 * 65536f64.ln();
    let ratio = mean / n_ln_n;
    outcome(
        (0.9..=1.2).contains(&ratio),
        format!("mean/(n ln n) = {ratio:.4} (se {:.4}, 30 trials)", se / n_ln_n),
    )
}

fn cover_trend() -> Outcome {
    let cfg = ExperimentConfig::new(
        ExperimentKind::CoverTrend,
        vec![12, 14, 16],
        &["0.6", "0.75", "0.9"],
        30,
        2,
    )
    .unwrap();
    let report = experiment::run(&cfg).unwrap();
    let mut parts = Vec::new();
    for r in report.rows.iter().filter(|r| r.statistic == "cover_time") {
        parts.push(format!("d={} p={} ratio={:.3}", r.d, r.p, r.ratio.unwrap()));
    }
    for r in report.rows.iter().filter(|r| r.statistic == "cover_trend") {
        parts.push(format!("p={} {}", r.p, r.note));
    }
    outcome(report.passed, parts.join("; "))
}

fn first_visit_decay() -> Outcome {
    let g = HypercubeSubgraph::sample_f64(8, 0.7, 11).unwrap();
    assert!(g.is_connected());
    let chain = ExactChain::build(&g, 0.5).unwrap();
    let t_mix = tv_mixing_time(&chain, 256f64.powi(-3), 100_000)
        .unwrap()
        .steps()
        .unwrap();
    let t_end = 20 * 256 * 8;
    let mut worst: f64 = 0.0;
    let mut circle: f64 = f64::INFINITY;
    let mut within = 0;
    let mut parts = Vec::new();
    let vertices = lowest_degree_vertices(&g, 10);
    for &v in &vertices {
        let fit = decay_fit(&chain, v, t_mix, t_end, 3.0).unwrap();
        let rel = fit.relative_error();
        worst = worst.max(rel.abs());
        circle = circle.min(fit.circle_min);
        if rel.abs() <= 0.1 {
            within += 1;
        }
        parts.push(format!("v{v}(deg {}) {:+.3}", fit.degree, rel));
    }
    outcome(
        worst <= 0.1 && circle >= 0.25,
        format!(
            "T = {t_mix}; rate error vs pi_v/R_v within 10% for {within}/{} vertices, worst {worst:.3}; \
             min |R(T,z)| = {circle:.3}; [{}]",
            vertices.len(),
            parts.join(", ")
        ),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut checked = 0usize;
    let mut agree = 0usize;
    let mut tally = |ok: bool| {
        checked += 1;
        if ok {
            agree += 1;
        }
    };
    let within = |mc: f64, exact: f64, sigma: f64| (mc - exact).abs() <= 3.0 * sigma.max(1e-12);
    for (d, p, seed) in [(6, 0.75, 3u64), (8, 0.7, 11)] {
        let g = HypercubeSubgraph::sample_f64(d, p, seed).unwrap();
        assert!(g.is_connected());
        let chain = ExactChain::build(&g, 0.5).unwrap();
        // Return probabilities r_t.
        let v = lowest_degree_vertices(&g, 1)[0];
        let trials = 20_000;
        let est = estimate_returns(&g, v, 64, trials, 0.5, 100 + seed).unwrap();
        let exact = return_series(&chain, v, 65).unwrap();
        for t in 1..=64 {
            let r = exact.values[t];
            tally(within(est.per_step[t], r, (r * (1.0 - r) / trials as f64).sqrt()));
        }
        // Long-run visit frequencies against π.
        let cfg = WalkConfig::lazy(200 + seed);
        let freq = visit_frequencies(&g, &cfg, 4_000_000, 40).unwrap();
        for (x, &pi) in chain.stationary().iter().enumerate() {
            tally(within(freq.freq[x], pi, freq.std_err[x]));
        }
        // Unvisited probabilities from vertex 0.
        let trials = 4_000;
        for &target in lowest_degree_vertices(&g, 4).iter().filter(|&&x| x != 0) {
            for t in [g.n() as u64, 3 * g.n() as u64, 6 * g.n() as u64] {
                let mc = unvisited_estimate(
                    &g,
                    &cfg.with_seed(300 + seed),
                    target,
                    t,
                    trials,
                    VisitWindow::FromStart,
                )
                .unwrap();
                let ex = unvisited_probability_exact(&chain, target, 0, t).unwrap();
                tally(within(mc, ex, (ex * (1.0 - ex) / trials as f64).sqrt()));
            }
        }
    }
    let frac = agree as f64 / checked as f64;
    outcome(
        frac >= 0.95,
        format!("{agree}/{checked} (vertex, t) checks within 3 sigma ({frac:.3})"),
    )
}

fn tiny_cover_time() -> Outcome {
    let g = HypercubeSubgraph::full(2).unwrap();
    let chain = ExactChain::build(&g, 0.0).unwrap();
    let exact = exact_cover_time(&chain, 0).unwrap();
    let oracle = common::rational_cover_time(&g, 0, 1, 0);
    let oracle_f =
        oracle.numer().to_string().parse::<f64>().unwrap() / oracle.denom().to_string().parse::<f64>().unwrap();
    let times = cover_times(&g, &WalkConfig::simple(5), 100_000);
    let (mean, se) = mean_se(&times);
    let ok = (exact - oracle_f).abs() <= 1e-12 && (mean - exact).abs() <= 3.0 * se;
    outcome(
        ok,
        format!("exact {exact}, rational oracle {oracle}, Monte Carlo {mean:.4} +/- {se:.4} (1e5 trials)"),
    )
}

fn laziness_doubling() -> Outcome {
    let g = HypercubeSubgraph::full(10).unwrap();
    let (simple, _) = mean_se(&cover_times(&g, &WalkConfig::simple(61), 200));
    let (lazy, _) = mean_se(&cover_times(&g, &WalkConfig::lazy(62), 200));
    let ratio = lazy / simple;
    outcome(
        (1.8..=2.2).contains(&ratio),
        format!("lazy/simple = {ratio:.4} ({lazy:.0} / {simple:.0}, 200 trials each)"),
    )
}

fn degree_statistics() -> Outcome {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Degrees, vec![12], &["0.6"], 1, 7).unwrap();
    cfg.instances = Some(10_000);
    let report = experiment::run(&cfg).unwrap();
    let bins = report
        .rows
        .iter()
        .find(|r| r.statistic == "degree_bins_within")
        .unwrap();
    let vars: Vec<String> = report
        .rows
        .iter()
        .filter(|r| r.statistic == "degree_variance")
        .map(|r| format!("{} {:.3} ({})", r.subject, r.ratio.unwrap(), r.note))
        .collect();
    outcome(
        report.passed,
        format!(
            "mean bins within 4 sigma: {}; variance ratios: {}",
            bins.note,
            vars.join(", ")
        ),
    )
}

fn harper() -> Outcome {
    let r3 = harper_check_exhaustive(3).unwrap();
    let r4 = harper_check_exhaustive(4).unwrap();
    let sampled = harper_check_sampled(10, 100_000, 12).unwrap();
    let ok = r3.holds
        && r4.holds
        && r3.equality_sizes == vec![1, 2, 4]
        && r4.equality_sizes == vec![1, 2, 4, 8]
        && sampled.holds
        && sampled.subsets_checked == 100_000;
    outcome(
        ok,
        format!(
            "Q_3: {} subsets, equality at sizes {:?}; Q_4: {} subsets, equality at {:?}; d=10: {} random subsets hold={}",
            r3.subsets_checked, r3.equality_sizes, r4.subsets_checked, r4.equality_sizes, sampled.subsets_checked, sampled.holds
        ),
    )
}

fn conductance_sandwich() -> Outcome {
    let mut cfg =
        ExperimentConfig::new(ExperimentKind::Conductance, vec![2, 3, 4], &["0.6", "0.8", "1"], 1, 9).unwrap();
    cfg.instances = Some(20);
    let report = experiment::run(&cfg).unwrap();
    let samples = report
        .rows
        .iter()
        .filter(|r| r.statistic == "conductance_exact")
        .count();
    // The stated fixture instance.
    let g = HypercubeSubgraph::sample_f64(4, 0.8, 9).unwrap();
    let (phi, _) = exact_conductance(&g).unwrap();
    let chain = ExactChain::build(&g, 0.5).unwrap();
    let gap = spectral_gap(&chain, 1e-9).unwrap().gap;
    let (lo, hi) = cheeger_sandwich(gap).unwrap();
    let pi = chain.stationary();
    let (pmin, pmax) = pi.iter().fold((1.0f64, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    let eps = 16f64.powi(-3);
    let t = tv_mixing_time(&chain, eps, 100_000).unwrap().steps().unwrap();
    let bound = mixing_bound_from_conductance(chain_conductance(phi, 0.5), pmin, pmax, eps)
        .unwrap()
        .steps()
        .unwrap();
    let ok = report.passed && (lo..=hi).contains(&phi) && t <= bound;
    outcome(
        ok,
        format!(
            "{samples} connected samples, {} failures; fixture d=4 p=0.8 seed=9: phi={phi:.4} in [{lo:.4}, {hi:.4}], t_mix={t} <= bound {bound}",
            report.failures().len()
        ),
    )
}

fn structural_samples() -> Vec<HypercubeSubgraph> {
    (0..50)
        .map(|s| HypercubeSubgraph::sample_f64(16, 0.65, 1000 + s).unwrap())
        .collect()
}

fn min_degree_property() -> Outcome {
    let samples = structural_samples();
    let connected: Vec<_> = samples.iter().filter(|g| g.is_connected()).collect();
    let ok_conn = connected.iter().filter(|g| g.min_degree() >= 1).count();
    let ok_all = samples.iter().filter(|g| g.min_degree() >= 1).count();
    let frac = ok_conn as f64 / connected.len() as f64;
    outcome(
        frac >= 0.95,
        format!(
            "min degree >= 1 in {ok_conn}/{} connected samples; {ok_all}/{} over all samples",
            connected.len(),
            samples.len()
        ),
    )
}

fn spacing_property() -> Outcome {
    let (l, h) = spacing_parameters(16);
    let cap = l.floor() as u32;
    let hops = h.floor() as u32;
    let samples = structural_samples();
    let mut ok = 0;
    let mut witness = None;
    for g in &samples {
        let check = g.low_degree_spacing_ok(cap, hops);
        if check.ok {
            ok += 1;
        } else if witness.is_none() {
            witness = check.witness.map(|w| (g.seed(), w, check.low_degree_count));
        }
    }
    let frac = ok as f64 / samples.len() as f64;
    outcome(
        frac >= 0.9,
        format!(
            "L = {l:.1} (cap {cap}), h = {h:.3} (hops {hops}); spacing holds in {ok}/{} samples; first failure (seed, (u, v, dist), low-degree count) = {witness:?}",
            samples.len()
        ),
    )
}

fn last_visited_degree() -> Outcome {
    let cfg = ExperimentConfig::new(ExperimentKind::LastDegree, vec![14], &["0.55"], 200, 14).unwrap();
    let report = experiment::run(&cfg).unwrap();
    let get = |s: &str| report.rows.iter().find(|r| r.statistic == s).unwrap();
    let median = get("last_degree_median");
    let mode = get("last_degree_mode");
    outcome(
        report.passed,
        format!(
            "median {} (< dp = 7.7), mode {} in [{:.2}, {:.2}]; {}; {} resampled instances",
            median.measured,
            mode.measured,
            mode.lower.unwrap(),
            mode.upper.unwrap(),
            median.note,
            report.cells[0].rejected
        ),
    )
}

fn joint_independence() -> Outcome {
    let cfg = ExperimentConfig::new(ExperimentKind::JointUnvisited, vec![12], &["0.55"], 10_000, 12).unwrap();
    let report = experiment::run(&cfg).unwrap();
    let ratios: Vec<String> = report
        .rows
        .iter()
        .filter(|r| r.statistic == "joint_ratio")
        .map(|r| format!("{} ratio {:.3}", r.subject, r.measured))
        .collect();
    outcome(
        report.passed && ratios.len() >= 5,
        format!("{} pairs: {}", ratios.len(), ratios.join("; ")),
    )
}

fn main() -> ExitCode {
    let criteria: Vec<(&str, &str, Check)> = vec![
        ("1", "full Q_16 cover time vs n ln n", full_cube_cover_anchor),
        ("2", "cover-time ratio trend over d = 12, 14, 16", cover_trend),
        (
            "3",
            "first-visit decay rate and circle bound at d = 8",
            first_visit_decay,
        ),
        ("4", "Monte Carlo vs exact probabilities", oracle_equivalence),
        ("5", "exact cover time of the 4-cycle", tiny_cover_time),
        ("6", "lazy walk doubles the cover time", laziness_doubling),
        ("7", "degree-count means and variances", degree_statistics),
        ("8", "edge isoperimetric inequality", harper),
        (
            "9",
            "conductance inside the Cheeger interval, mixing bound",
            conductance_sandwich,
        ),
        ("10a", "minimum degree at least one", min_degree_property),
        ("10b", "low-degree vertices far apart", spacing_property),
        ("11", "degree of the last vertex covered", last_visited_degree),
        ("12", "joint unvisited probabilities factorize", joint_independence),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == id) {
            continue;
        }
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check));
        let secs = started.elapsed().as_secs_f64();
        let (pass, detail) = match result {
            Ok(o) => (o.pass, o.detail),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {id:>3} {} {name} ({secs:.1}s): {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
