//! Conductance: exact minimum cuts on tiny instances, the hypercube edge
//! isoperimetric inequality, Cheeger intervals and the mixing bound they imply.
//!
//! `Φ = min e(S, S̄) / deg(S)` over nonempty `S` with `0 < deg(S) ≤ m`.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::exact::{spectral_gap, ExactChain, MixingTime, MAX_EXACT_DIM};
use crate::graph::HypercubeSubgraph;
use crate::rng::{rng_from_seed, trial_seed};

/// Largest dimension for [`exact_conductance`].
pub const MAX_CONDUCTANCE_DIM: u32 = 5;
/// Largest dimension for [`harper_check_exhaustive`].
pub const MAX_HARPER_EXHAUSTIVE_DIM: u32 = 4;

const GAP_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutReport {
    /// Bit `v` set iff vertex `v` is in `S`.
    pub subset: u64,
    pub size: u32,
    pub e_cross: u64,
    pub deg_s: u64,
    pub is_minimizer: bool,
}

impl CutReport {
    pub fn ratio(&self) -> f64 {
        self.e_cross as f64 / self.deg_s as f64
    }

    pub fn contains(&self, v: u32) -> bool {
        self.subset >> v & 1 == 1
    }
}

#[derive(Clone, Copy)]
struct Cut {
    cross: u64,
    deg: u64,
    subset: u64,
}

impl Cut {
    /// Smaller ratio first, then smaller subset label.
    fn better_than(&self, other: &Cut) -> bool {
        let lhs = self.cross as u128 * other.deg as u128;
        let rhs = other.cross as u128 * self.deg as u128;
        lhs < rhs || (lhs == rhs && self.subset < other.subset)
    }
}

fn neighbors_in(g: &HypercubeSubgraph, x: u32, set: u64) -> u64 {
    g.neighbors(x).filter(|&y| set >> y & 1 == 1).count() as u64
}

fn cut_of(g: &HypercubeSubgraph, set: u64) -> (u64, u64) {
    let mut deg = 0;
    let mut cross = 0;
    for v in 0..g.n() as u32 {
        if set >> v & 1 == 1 {
            let d = g.degree_of(v) as u64;
            deg += d;
            cross += d - neighbors_in(g, v, set);
        }
    }
    (cross, deg)
}

/// Exact conductance by Gray-code enumeration of the sets that contain
/// vertex 0; each set and its complement are both tested against
/// `deg ≤ m`, so every cut is seen once.
pub fn exact_conductance(g: &HypercubeSubgraph) -> Result<(f64, CutReport)> {
    if g.dim() > MAX_CONDUCTANCE_DIM {
        return Err(Error::Capacity {
            what: "exact conductance dimension",
            got: g.dim() as u64,
            limit: MAX_CONDUCTANCE_DIM as u64,
        });
    }
    let m = g.edge_count();
    if m == 0 {
        return Err(Error::NoEdges);
    }
    let n = g.n() as u32;
    let all: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let free = n - 1;
    let fixed = free.min(6);
    let low = free - fixed;
    let best = (0u64..1 << fixed)
        .into_par_iter()
        .map(|prefix| {
            let mut set = 1u64 | prefix << (1 + low);
            let (mut cross, mut deg) = cut_of(g, set);
            let mut best: Option<Cut> = None;
            let mut consider = |cross: u64, deg: u64, set: u64| {
                let mut offer = |c: Cut| {
                    if best.is_none_or(|b| c.better_than(&b)) {
                        best = Some(c);
                    }
                };
                if deg > 0 && deg <= m {
                    offer(Cut {
                        cross,
                        deg,
                        subset: set,
                    });
                }
                let rest = 2 * m - deg;
                if set != all && rest > 0 && rest <= m {
                    offer(Cut {
                        cross,
                        deg: rest,
                        subset: all & !set,
                    });
                }
            };
            consider(cross, deg, set);
            for i in 1u64..1 << low {
                let x = 1 + i.trailing_zeros();
                let dx = g.degree_of(x) as u64;
                if set >> x & 1 == 1 {
                    set &= !(1 << x);
                    let inside = neighbors_in(g, x, set);
                    cross = cross + 2 * inside - dx;
                    deg -= dx;
                } else {
                    let inside = neighbors_in(g, x, set);
                    cross = cross + dx - 2 * inside;
                    deg += dx;
                    set |= 1 << x;
                }
                consider(cross, deg, set);
            }
            best
        })
        .reduce(
            || None,
            |a, b| match (a, b) {
                (Some(a), Some(b)) => Some(if b.better_than(&a) { b } else { a }),
                (a, None) => a,
                (None, b) => b,
            },
        )
        .expect("a graph with an edge has a cut with 0 < deg(S) ≤ m");
    let report = CutReport {
        subset: best.subset,
        size: best.subset.count_ones(),
        e_cross: best.cross,
        deg_s: best.deg,
        is_minimizer: true,
    };
    Ok((report.ratio(), report))
}

/// `s (d − log₂ s)`, the least number of edges leaving an `s`-set of `Q_d`.
pub fn harper_bound(s: u64, d: u32) -> Result<f64> {
    if d == 0 || d > 63 || s == 0 || s > 1u64 << (d - 1) {
        return Err(param(format!("subset size {s} outside [1, 2^(d-1)] for d = {d}")));
    }
    let s = s as f64;
    Ok(s * (d as f64 - s.log2()))
}

fn full_cube_cross(d: u32, members: &[u32], inside: &[bool]) -> u64 {
    members
        .iter()
        .map(|&v| (0..d).filter(|k| !inside[(v ^ 1 << k) as usize]).count() as u64)
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarperSlack {
    pub subset: Vec<u32>,
    pub e_cross: u64,
    pub bound: f64,
}

impl HarperSlack {
    pub fn slack(&self) -> f64 {
        self.e_cross as f64 - self.bound
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarperReport {
    pub d: u32,
    pub subsets_checked: u64,
    pub holds: bool,
    /// Smallest slack seen, relative to the bound.
    pub tightest: HarperSlack,
    /// Sizes at which some checked subset meets the bound with equality.
    pub equality_sizes: Vec<u64>,
}

fn harper_accumulate(report: &mut HarperReport, subset: Vec<u32>, e_cross: u64, bound: f64) {
    report.subsets_checked += 1;
    let slack = e_cross as f64 - bound;
    if slack < -1e-9 {
        report.holds = false;
    }
    let s = subset.len() as u64;
    if slack.abs() <= 1e-9 && !report.equality_sizes.contains(&s) {
        report.equality_sizes.push(s);
    }
    if slack / bound < report.tightest.slack() / report.tightest.bound {
        report.tightest = HarperSlack { subset, e_cross, bound };
    }
}

fn empty_harper(d: u32) -> HarperReport {
    HarperReport {
        d,
        subsets_checked: 0,
        holds: true,
        tightest: HarperSlack {
            subset: Vec::new(),
            e_cross: u64::MAX,
            bound: 1.0,
        },
        equality_sizes: Vec::new(),
    }
}

/// Checks every subset of `Q_d` with at most `2^{d−1}` vertices.
pub fn harper_check_exhaustive(d: u32) -> Result<HarperReport> {
    if d == 0 || d > MAX_HARPER_EXHAUSTIVE_DIM {
        return Err(Error::Capacity {
            what: "exhaustive Harper dimension",
            got: d as u64,
            limit: MAX_HARPER_EXHAUSTIVE_DIM as u64,
        });
    }
    let n = 1u32 << d;
    let mut report = empty_harper(d);
    let mut inside = vec![false; n as usize];
    for set in 1u64..1 << n {
        if set.count_ones() > n / 2 {
            continue;
        }
        let members: Vec<u32> = (0..n).filter(|&v| set >> v & 1 == 1).collect();
        for &v in &members {
            inside[v as usize] = true;
        }
        let cross = full_cube_cross(d, &members, &inside);
        for &v in &members {
            inside[v as usize] = false;
        }
        let bound = harper_bound(members.len() as u64, d)?;
        harper_accumulate(&mut report, members, cross, bound);
    }
    report.equality_sizes.sort_unstable();
    Ok(report)
}

/// Checks `samples` random subsets of `Q_d`: the size is uniform on
/// `[1, 2^{d−1}]` and the members uniform given the size.
pub fn harper_check_sampled(d: u32, samples: u64, seed: u64) -> Result<HarperReport> {
    if d == 0 || d > 20 {
        return Err(Error::Capacity {
            what: "sampled Harper dimension",
            got: d as u64,
            limit: 20,
        });
    }
    let n = 1usize << d;
    let results: Vec<(Vec<u32>, u64, f64)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(trial_seed(seed, i));
            let s = rng.gen_range(1..=n / 2);
            let members: Vec<u32> = sample_indices(&mut rng, n, s).into_iter().map(|v| v as u32).collect();
            let mut inside = vec![false; n];
            for &v in &members {
                inside[v as usize] = true;
            }
            let cross = full_cube_cross(d, &members, &inside);
            let bound = harper_bound(s as u64, d).expect("size in range");
            (members, cross, bound)
        })
        .collect();
    let mut report = empty_harper(d);
    for (members, cross, bound) in results {
        harper_accumulate(&mut report, members, cross, bound);
    }
    report.equality_sizes.sort_unstable();
    Ok(report)
}

/// `(gap / 2, sqrt(2 gap))`.
pub fn cheeger_sandwich(gap: f64) -> Result<(f64, f64)> {
    if !(-GAP_TOLERANCE..=1.0 + GAP_TOLERANCE).contains(&gap) {
        return Err(param(format!("spectral gap {gap} outside [0, 1]")));
    }
    let gap = gap.clamp(0.0, 1.0);
    Ok((gap / 2.0, (2.0 * gap).sqrt()))
}

/// Smallest `t` with `sqrt(π_max/π_min) (1 − Φ²/2)^t ≤ eps`.
pub fn mixing_bound_from_conductance(phi: f64, pi_min: f64, pi_max: f64, eps: f64) -> Result<MixingTime> {
    if !(0.0..=1.0).contains(&phi) {
        return Err(param(format!("conductance {phi} outside [0, 1]")));
    }
    if !(pi_min > 0.0 && pi_max >= pi_min && eps > 0.0) {
        return Err(param("need 0 < π_min ≤ π_max and eps > 0"));
    }
    let lead = (pi_max / pi_min).sqrt();
    if lead <= eps {
        return Ok(MixingTime::Steps(0));
    }
    if phi == 0.0 {
        return Ok(MixingTime::Never);
    }
    let rate = 1.0 - phi * phi / 2.0;
    let holds = |t: u64| lead * rate.powf(t as f64) <= eps;
    let mut t = ((lead / eps).ln() / -rate.ln()).ceil().max(0.0) as u64;
    while t > 0 && holds(t - 1) {
        t -= 1;
    }
    while !holds(t) {
        t += 1;
    }
    Ok(MixingTime::Steps(t))
}

/// Conductance of the walk with holding probability `laziness`, given the
/// graph conductance: holding scales every ergodic flow by `1 − laziness`.
pub fn chain_conductance(graph_phi: f64, laziness: f64) -> f64 {
    (1.0 - laziness) * graph_phi
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Cheeger,
    Sweep,
    Trivial,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Cheeger => "cheeger",
            Method::Sweep => "sweep",
            Method::Trivial => "trivial",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConductanceEstimate {
    pub value: f64,
    pub method: Method,
    pub certified: bool,
    pub witness_size: Option<u64>,
}

const SWEEP_ITERATIONS: usize = 300;

/// A lower bound on `Φ`. With the exact lazy spectral gap available
/// (`d ≤ 12`) the bound is `gap/2` and certified. Beyond that, the best
/// sweep cut along an approximate second eigenvector is returned; it is an
/// upper bound on `Φ` and is flagged as not certified.
pub fn conductance_lower_estimate(g: &HypercubeSubgraph) -> Result<ConductanceEstimate> {
    if g.edge_count() == 0 || !g.is_connected() {
        return Ok(ConductanceEstimate {
            value: 0.0,
            method: Method::Trivial,
            certified: true,
            witness_size: None,
        });
    }
    if g.dim() <= MAX_EXACT_DIM {
        let chain = ExactChain::build(g, 0.5)?;
        let gap = spectral_gap(&chain, 1e-9)?.gap;
        return Ok(ConductanceEstimate {
            value: cheeger_sandwich(gap)?.0,
            method: Method::Cheeger,
            certified: true,
            witness_size: None,
        });
    }
    let (value, size) = sweep_cut(g, SWEEP_ITERATIONS);
    Ok(ConductanceEstimate {
        value,
        method: Method::Sweep,
        certified: false,
        witness_size: Some(size),
    })
}

/// Best prefix cut of the vertices ordered by an approximate second
/// eigenvector of the lazy walk. Returns the ratio and the witness size.
pub fn sweep_cut(g: &HypercubeSubgraph, iterations: usize) -> (f64, u64) {
    let n = g.n();
    let two_m = 2.0 * g.edge_count() as f64;
    let sqrt_pi: Vec<f64> = (0..n as u32).map(|v| (g.degree_of(v) as f64 / two_m).sqrt()).collect();
    let mut rng = rng_from_seed(0x5eed);
    let mut f: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    let mut next = vec![0.0; n];
    for _ in 0..iterations {
        let c: f64 = f.iter().zip(&sqrt_pi).map(|(a, b)| a * b).sum();
        for (x, s) in f.iter_mut().zip(&sqrt_pi) {
            *x -= c * s;
        }
        let norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in f.iter_mut() {
            *x /= norm;
        }
        // (I + S)/2 with S = Π^{1/2} P Π^{−1/2}, S f (u) = Σ_x f(x) / sqrt(d_u d_x).
        for (u, o) in next.iter_mut().enumerate() {
            let du = g.degree_of(u as u32) as f64;
            let s: f64 = g
                .neighbors(u as u32)
                .map(|x| f[x as usize] / (du * g.degree_of(x) as f64).sqrt())
                .sum();
            *o = 0.5 * (f[u] + s);
        }
        std::mem::swap(&mut f, &mut next);
    }
    let mut order: Vec<u32> = (0..n as u32).collect();
    let key = |v: u32| f[v as usize] / sqrt_pi[v as usize].max(f64::MIN_POSITIVE);
    order.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
    let m = g.edge_count();
    let mut inside = vec![false; n];
    let (mut cross, mut deg) = (0u64, 0u64);
    let mut best = (f64::INFINITY, 0u64);
    for (k, &v) in order.iter().enumerate().take(n - 1) {
        let dv = g.degree_of(v) as u64;
        let within = g.neighbors(v).filter(|&y| inside[y as usize]).count() as u64;
        inside[v as usize] = true;
        cross = cross + dv - 2 * within;
        deg += dv;
        let side = deg.min(2 * m - deg);
        if side > 0 {
            let ratio = cross as f64 / side as f64;
            if ratio < best.0 {
                let size = (k + 1) as u64;
                best = (ratio, if deg <= m { size } else { n as u64 - size });
            }
        }
    }
    best
}

/// One CSV row of a conductance report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConductanceRow {
    pub d: u32,
    pub p: String,
    pub seed: u64,
    pub method: String,
    pub value: f64,
    pub witness_size: Option<u64>,
    pub certified: bool,
}

pub fn write_conductance_rows<W: std::io::Write>(out: W, rows: &[ConductanceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
