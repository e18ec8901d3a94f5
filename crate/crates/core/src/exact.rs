//! Exact linear algebra for the walk on small instances.
//!
//! The transition matrix is never stored: `P[u][x] = λ·[x = u] + (1−λ)/d_u`
//! for each retained neighbour `x`, where `λ` is the laziness, is applied
//! directly from the direction masks. Products are `O(n d)`.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::graph::HypercubeSubgraph;
use crate::rng::rng_from_seed;
use crate::walk::VisitWindow;

/// Largest dimension accepted by [`ExactChain::build`].
pub const MAX_EXACT_DIM: u32 = 12;
/// Largest dimension for which [`ExactChain::to_dense`] materializes `P`.
pub const MAX_DENSE_DIM: u32 = 10;
/// Largest state count for [`exact_cover_time`].
pub const MAX_COVER_STATES: usize = 12;

/// Angles on the circle for [`r_on_circle`].
pub const CIRCLE_GRID: usize = 1 << 12;

#[derive(Clone, Debug)]
pub struct ExactChain {
    d: u32,
    laziness: f64,
    masks: Vec<u32>,
    inv_degree: Vec<f64>,
    pi: Vec<f64>,
    edges: u64,
}

/// Residuals of the chain invariants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainCheck {
    pub row_sum_error: f64,
    pub stationarity_residual: f64,
    pub reversibility_error: f64,
}

impl ExactChain {
    pub fn build(g: &HypercubeSubgraph, laziness: f64) -> Result<Self> {
        if g.dim() > MAX_EXACT_DIM {
            return Err(Error::Capacity {
                what: "exact chain dimension",
                got: g.dim() as u64,
                limit: MAX_EXACT_DIM as u64,
            });
        }
        if !(0.0..1.0).contains(&laziness) {
            return Err(param(format!("laziness {laziness} outside [0, 1)")));
        }
        if let Some(v) = (0..g.n() as u32).find(|&v| g.degree_of(v) == 0) {
            return Err(Error::ZeroDegree(v));
        }
        let edges = g.edge_count();
        let two_m = 2.0 * edges as f64;
        let masks = g.masks().to_vec();
        Ok(Self {
            d: g.dim(),
            laziness,
            inv_degree: masks.iter().map(|m| 1.0 / m.count_ones() as f64).collect(),
            pi: masks.iter().map(|m| m.count_ones() as f64 / two_m).collect(),
            masks,
            edges,
        })
    }

    pub fn n(&self) -> usize {
        self.masks.len()
    }

    pub fn dim(&self) -> u32 {
        self.d
    }

    pub fn laziness(&self) -> f64 {
        self.laziness
    }

    pub fn edge_count(&self) -> u64 {
        self.edges
    }

    /// `π_v = d_v / 2m`.
    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    pub fn degree(&self, v: u32) -> u32 {
        self.masks[v as usize].count_ones()
    }

    fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        let mut mask = self.masks[v];
        std::iter::from_fn(move || {
            if mask == 0 {
                return None;
            }
            let k = mask.trailing_zeros();
            mask &= mask - 1;
            Some(v ^ (1 << k))
        })
    }

    fn check_vertex(&self, v: u32) -> Result<()> {
        if (v as usize) < self.n() {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange { vertex: v, d: self.d })
        }
    }

    pub fn transition(&self, u: u32, x: u32) -> f64 {
        let mut p = 0.0;
        if u == x {
            p += self.laziness;
        }
        let diff = u ^ x;
        if diff.count_ones() == 1 && self.masks[u as usize] & diff != 0 {
            p += (1.0 - self.laziness) * self.inv_degree[u as usize];
        }
        p
    }

    /// `out = x P` for a row vector `x`.
    pub fn push_forward(&self, x: &[f64], out: &mut [f64]) {
        let move_prob = 1.0 - self.laziness;
        for (y, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for u in self.neighbors(y) {
                acc += x[u] * self.inv_degree[u];
            }
            *o = self.laziness * x[y] + move_prob * acc;
        }
    }

    /// `out = P f` for a column vector `f`.
    pub fn pull_back(&self, f: &[f64], out: &mut [f64]) {
        let move_prob = 1.0 - self.laziness;
        for (u, o) in out.iter_mut().enumerate() {
            let acc: f64 = self.neighbors(u).map(|y| f[y]).sum();
            *o = self.laziness * f[u] + move_prob * acc * self.inv_degree[u];
        }
    }

    /// Row-major `n × n` transition matrix; only for `d ≤ MAX_DENSE_DIM`.
    pub fn to_dense(&self) -> Result<Vec<f64>> {
        if self.d > MAX_DENSE_DIM {
            return Err(Error::Capacity {
                what: "dense transition matrix dimension",
                got: self.d as u64,
                limit: MAX_DENSE_DIM as u64,
            });
        }
        let n = self.n();
        let mut m = vec![0.0; n * n];
        for u in 0..n {
            m[u * n + u] += self.laziness;
            for x in self.neighbors(u) {
                m[u * n + x] += (1.0 - self.laziness) * self.inv_degree[u];
            }
        }
        Ok(m)
    }

    pub fn verify(&self) -> ChainCheck {
        let n = self.n();
        let mut row_sum_error: f64 = 0.0;
        let mut reversibility_error: f64 = 0.0;
        for u in 0..n {
            let mut s = self.laziness;
            for x in self.neighbors(u) {
                let pux = (1.0 - self.laziness) * self.inv_degree[u];
                let pxu = (1.0 - self.laziness) * self.inv_degree[x];
                s += pux;
                reversibility_error = reversibility_error.max((self.pi[u] * pux - self.pi[x] * pxu).abs());
            }
            row_sum_error = row_sum_error.max((s - 1.0).abs());
        }
        let mut next = vec![0.0; n];
        self.push_forward(&self.pi, &mut next);
        let stationarity_residual = next
            .iter()
            .zip(&self.pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        ChainCheck {
            row_sum_error,
            stationarity_residual,
            reversibility_error,
        }
    }

    /// `(ln n)^7`, the asymptotic choice of mixing time.
    pub fn asymptotic_mixing_time(&self) -> f64 {
        (self.n() as f64).ln().powi(7)
    }
}

/// `r_t = Pr(X_t = v | X_0 = v)` for `t = 0..T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    pub vertex: u32,
    pub values: Vec<f64>,
}

impl ReturnSeries {
    pub fn horizon(&self) -> usize {
        self.values.len()
    }

    /// `R_v = R(T, 1) = Σ_{t<T} r_t`.
    pub fn r_value(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `R(T, z) = Σ_{t<T} r_t z^t` by Horner's rule.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.values
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &r| acc * z + r)
    }
}

pub fn return_series(chain: &ExactChain, v: u32, horizon: usize) -> Result<ReturnSeries> {
    chain.check_vertex(v)?;
    if horizon == 0 {
        return Err(param("horizon must be at least 1"));
    }
    let mut x = vec![0.0; chain.n()];
    let mut next = vec![0.0; chain.n()];
    x[v as usize] = 1.0;
    let mut values = Vec::with_capacity(horizon);
    for t in 0..horizon {
        values.push(x[v as usize]);
        if t + 1 < horizon {
            chain.push_forward(&x, &mut next);
            std::mem::swap(&mut x, &mut next);
        }
    }
    Ok(ReturnSeries { vertex: v, values })
}

/// Minimum modulus of `R(T, z)` over the closed disk `|z| ≤ 1 + 1/(K T)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleMin {
    /// Minimum over the disk: the boundary minimum, or 0 if a zero lies inside.
    pub min_modulus: f64,
    pub boundary_min: f64,
    pub argmin_angle: f64,
    pub radius: f64,
    /// Winding number of `R` around the boundary circle.
    pub zeros_inside: i64,
}

/// Evaluates `|R(T, z)|` on [`CIRCLE_GRID`] equally spaced angles, refines
/// twice with 64 points around the best angle, and counts zeros inside by the
/// winding number of the sampled boundary curve. Without interior zeros,
/// `1/R` is analytic on the disk and the minimum of `|R|` lies on the circle.
pub fn r_on_circle(series: &ReturnSeries, k: f64) -> Result<CircleMin> {
    if k.is_nan() || k <= 0.0 {
        return Err(param(format!("K = {k} must be positive")));
    }
    let t = series.horizon() as f64;
    let radius = 1.0 + 1.0 / (k * t);
    let at = |theta: f64| series.eval(Complex64::from_polar(radius, theta));
    let step = std::f64::consts::TAU / CIRCLE_GRID as f64;
    let mut best = (f64::INFINITY, 0.0);
    let mut winding = 0.0;
    let first = at(0.0);
    let mut prev = first;
    for i in 0..CIRCLE_GRID {
        let theta = i as f64 * step;
        let z = if i == 0 { first } else { at(theta) };
        if z.norm() < best.0 {
            best = (z.norm(), theta);
        }
        if i > 0 {
            winding += (z / prev).arg();
        }
        prev = z;
    }
    winding += (first / prev).arg();
    let mut half_width = step;
    for _ in 0..2 {
        let centre = best.1;
        for j in 0..=64 {
            let theta = centre - half_width + 2.0 * half_width * j as f64 / 64.0;
            let m = at(theta).norm();
            if m < best.0 {
                best = (m, theta);
            }
        }
        half_width /= 32.0;
    }
    let zeros_inside = (winding / std::f64::consts::TAU).round() as i64;
    Ok(CircleMin {
        min_modulus: if zeros_inside == 0 { best.0 } else { 0.0 },
        boundary_min: best.0,
        argmin_angle: best.1.rem_euclid(std::f64::consts::TAU),
        radius,
        zeros_inside,
    })
}

/// A mixing time, or `Never` for periodic or disconnected chains.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingTime {
    Steps(u64),
    Never,
}

impl MixingTime {
    pub fn steps(self) -> Option<u64> {
        match self {
            MixingTime::Steps(t) => Some(t),
            MixingTime::Never => None,
        }
    }
}

fn max_deviation(rows: &[Vec<f64>], pi: &[f64]) -> f64 {
    rows.par_iter()
        .map(|row| row.iter().zip(pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max)
}

/// Smallest `t` with `max_{u,x} |P^t(u, x) − π_x| ≤ eps`, evolving every row
/// of `P^t` in lock step. Stops with [`Error::NotConverged`] after `max_t`.
pub fn tv_mixing_time(chain: &ExactChain, eps: f64, max_t: u64) -> Result<MixingTime> {
    let n = chain.n();
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|u| {
            let mut r = vec![0.0; n];
            r[u] = 1.0;
            r
        })
        .collect();
    let mut dev = max_deviation(&rows, &chain.pi);
    if dev <= eps {
        return Ok(MixingTime::Steps(0));
    }
    // Every hypercube subgraph is bipartite by label parity.
    if chain.laziness == 0.0 {
        return Ok(MixingTime::Never);
    }
    let g = HypercubeSubgraph::from_masks(chain.d, "1".parse()?, 0, chain.masks.clone())?;
    if !g.is_connected() {
        return Ok(MixingTime::Never);
    }
    let mut t = 0;
    while dev > eps {
        if t >= max_t {
            return Err(Error::NotConverged {
                iterations: t as usize,
                residual: dev,
            });
        }
        rows.par_iter_mut().for_each(|row| {
            let mut next = vec![0.0; n];
            chain.push_forward(row, &mut next);
            *row = next;
        });
        t += 1;
        dev = max_deviation(&rows, &chain.pi);
    }
    Ok(MixingTime::Steps(t))
}

/// `Pr(walk from start avoids v through step t)` for `t = 0..=t_max`, with
/// visits counted only inside `window`.
pub fn unvisited_curve(chain: &ExactChain, v: u32, start: u32, t_max: u64, window: VisitWindow) -> Result<Vec<f64>> {
    chain.check_vertex(v)?;
    chain.check_vertex(start)?;
    let counts = |s: u64| match window {
        VisitWindow::FromStart => true,
        VisitWindow::Since(t0) => s >= t0,
    };
    let mut x = vec![0.0; chain.n()];
    let mut next = vec![0.0; chain.n()];
    x[start as usize] = 1.0;
    if counts(0) {
        x[v as usize] = 0.0;
    }
    let mut out = Vec::with_capacity(t_max as usize + 1);
    out.push(x.iter().sum());
    for s in 1..=t_max {
        chain.push_forward(&x, &mut next);
        std::mem::swap(&mut x, &mut next);
        if counts(s) {
            x[v as usize] = 0.0;
        }
        out.push(x.iter().sum());
    }
    Ok(out)
}

/// `Pr(walk from start does not visit v at steps 0..=t)`; needs `v ≠ start`.
pub fn unvisited_probability_exact(chain: &ExactChain, v: u32, start: u32, t: u64) -> Result<f64> {
    if v == start {
        return Err(param("target vertex equals the start"));
    }
    Ok(*unvisited_curve(chain, v, start, t, VisitWindow::FromStart)?
        .last()
        .expect("curve is non-empty"))
}

/// Expected cover time from `start` by backward induction over visited sets:
/// for each set `S` (in decreasing label order, so supersets come first) a
/// `|S| × |S|` system gives the expected remaining time from each position.
pub fn exact_cover_time(chain: &ExactChain, start: u32) -> Result<f64> {
    let n = chain.n();
    if n > MAX_COVER_STATES {
        return Err(Error::Capacity {
            what: "exact cover time states",
            got: n as u64,
            limit: MAX_COVER_STATES as u64,
        });
    }
    chain.check_vertex(start)?;
    let g = HypercubeSubgraph::from_masks(chain.d, "1".parse()?, 0, chain.masks.clone())?;
    if !g.is_connected() {
        return Err(Error::Domain {
            formula: "exact_cover_time",
            reason: "graph is disconnected".into(),
        });
    }
    let full = (1usize << n) - 1;
    // remaining[S * n + x]
    let mut remaining = vec![0.0; (full + 1) * n];
    let stay = chain.laziness;
    let mv = 1.0 - stay;
    for set in (1..full).rev() {
        let members: Vec<usize> = (0..n).filter(|&x| set >> x & 1 == 1).collect();
        let k = members.len();
        let index = |x: usize| members.iter().position(|&m| m == x);
        let mut a = vec![0.0; k * k];
        let mut b = vec![1.0; k];
        for (i, &x) in members.iter().enumerate() {
            a[i * k + i] += 1.0 - stay;
            let w = mv * chain.inv_degree[x];
            for y in chain.neighbors(x) {
                match index(y) {
                    Some(j) => a[i * k + j] -= w,
                    None => b[i] += w * remaining[(set | 1 << y) * n + y],
                }
            }
        }
        let sol = solve_dense(&mut a, &mut b, k)?;
        for (i, &x) in members.iter().enumerate() {
            remaining[set * n + x] = sol[i];
        }
    }
    Ok(remaining[(1usize << start) * n + start as usize])
}

/// Gaussian elimination with partial pivoting on a row-major `k × k` system.
fn solve_dense(a: &mut [f64], b: &mut [f64], k: usize) -> Result<Vec<f64>> {
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&i, &j| a[i * k + col].abs().total_cmp(&a[j * k + col].abs()))
            .expect("non-empty range");
        if a[pivot * k + col].abs() < 1e-300 {
            return Err(Error::Domain {
                formula: "linear solve",
                reason: "singular system".into(),
            });
        }
        if pivot != col {
            for j in 0..k {
                a.swap(col * k + j, pivot * k + j);
            }
            b.swap(col, pivot);
        }
        for row in col + 1..k {
            let f = a[row * k + col] / a[col * k + col];
            if f != 0.0 {
                for j in col..k {
                    a[row * k + j] -= f * a[col * k + j];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let s: f64 = (row + 1..k).map(|j| a[row * k + j] * x[j]).sum();
        x[row] = (b[row] - s) / a[row * k + row];
    }
    Ok(x)
}

/// Second eigenvalue and gap of a reversible chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralGap {
    pub gap: f64,
    pub lambda2: f64,
    pub iterations: usize,
    pub residual: f64,
}

const GAP_MAX_ITER: usize = 500_000;

/// `1 − λ_2` by deflated power iteration on `(I + S)/2`, where
/// `S = Π^{1/2} P Π^{−1/2}` is symmetric for a reversible chain. The shift
/// maps the spectrum into `[0, 1]` so the dominant eigenvalue on the
/// complement of `sqrt(π)` is `(1 + λ_2)/2` whether or not the chain is lazy.
pub fn spectral_gap(chain: &ExactChain, tol: f64) -> Result<SpectralGap> {
    let n = chain.n();
    let sqrt_pi: Vec<f64> = chain.pi.iter().map(|p| p.sqrt()).collect();
    if n == 1 {
        return Ok(SpectralGap {
            gap: 1.0,
            lambda2: 0.0,
            iterations: 0,
            residual: 0.0,
        });
    }
    let deflate = |f: &mut [f64]| {
        let c: f64 = f.iter().zip(&sqrt_pi).map(|(a, b)| a * b).sum();
        for (x, s) in f.iter_mut().zip(&sqrt_pi) {
            *x -= c * s;
        }
    };
    let normalize = |f: &mut [f64]| {
        let norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in f.iter_mut() {
            *x /= norm;
        }
    };
    let mut scratch = vec![0.0; n];
    let mut pulled = vec![0.0; n];
    let mut apply = |f: &[f64], out: &mut [f64]| {
        for ((s, x), r) in scratch.iter_mut().zip(f).zip(&sqrt_pi) {
            *s = x / r;
        }
        chain.pull_back(&scratch, &mut pulled);
        for (((o, p), r), x) in out.iter_mut().zip(&pulled).zip(&sqrt_pi).zip(f) {
            *o = 0.5 * (x + r * p);
        }
    };
    let mut rng = rng_from_seed(0x5eed);
    let mut f: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    deflate(&mut f);
    normalize(&mut f);
    let mut af = vec![0.0; n];
    let mut mu = 0.0;
    let mut history = Vec::new();
    let mut residual = f64::INFINITY;
    for it in 1..=GAP_MAX_ITER {
        apply(&f, &mut af);
        deflate(&mut af);
        mu = f.iter().zip(&af).map(|(a, b)| a * b).sum::<f64>();
        residual = af.iter().zip(&f).map(|(a, x)| (a - mu * x).powi(2)).sum::<f64>().sqrt();
        history.push(mu);
        let stalled = it > 1000 && {
            let old = history[it - 101];
            (mu - old).abs() <= 1e-15 && residual <= tol.sqrt()
        };
        if residual <= tol || stalled {
            let lambda2 = 2.0 * mu - 1.0;
            return Ok(SpectralGap {
                gap: 1.0 - lambda2,
                lambda2,
                iterations: it,
                residual,
            });
        }
        std::mem::swap(&mut f, &mut af);
        normalize(&mut f);
    }
    let _ = mu;
    Err(Error::NotConverged {
        iterations: GAP_MAX_ITER,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(d: u32, laziness: f64) -> ExactChain {
        ExactChain::build(&HypercubeSubgraph::full(d).unwrap(), laziness).unwrap()
    }

    fn sample_chain(d: u32, p: f64, seed: u64, laziness: f64) -> (HypercubeSubgraph, ExactChain) {
        let g = HypercubeSubgraph::sample_f64(d, p, seed).unwrap();
        let c = ExactChain::build(&g, laziness).unwrap();
        (g, c)
    }

    #[test]
    fn four_cycle_chain() {
        let c = chain(2, 0.0);
        assert!(c.stationary().iter().all(|&p| p == 0.25));
        assert_eq!(c.transition(0, 1), 0.5);
        assert_eq!(c.transition(0, 3), 0.0);
        assert_eq!(c.transition(0, 0), 0.0);
        let lazy = chain(3, 0.5);
        for v in 0..8 {
            assert_eq!(lazy.transition(v, v), 0.5);
        }
    }

    #[test]
    fn invariants_hold_on_samples() {
        let (g, c) = sample_chain(8, 0.7, 11, 0.5);
        let check = c.verify();
        assert!(check.row_sum_error <= 1e-12);
        assert!(check.stationarity_residual <= 1e-12);
        assert!(check.reversibility_error <= 1e-12);
        let two_m = 2.0 * g.edge_count() as f64;
        for v in 0..g.n() as u32 {
            assert_eq!(c.stationary()[v as usize], g.degree(v).unwrap() as f64 / two_m);
        }
    }

    #[test]
    fn dense_matrix_rows_sum_to_one() {
        let (_, c) = sample_chain(5, 0.8, 3, 0.25);
        let m = c.to_dense().unwrap();
        let n = c.n();
        for u in 0..n {
            let s: f64 = m[u * n..(u + 1) * n].iter().sum();
            assert!((s - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn build_errors() {
        assert!(matches!(
            ExactChain::build(&HypercubeSubgraph::full(13).unwrap(), 0.5),
            Err(Error::Capacity { .. })
        ));
        assert!(matches!(
            ExactChain::build(&HypercubeSubgraph::empty(3).unwrap(), 0.5),
            Err(Error::ZeroDegree(0))
        ));
        assert!(ExactChain::build(&HypercubeSubgraph::full(3).unwrap(), 1.0).is_err());
    }

    #[test]
    fn two_state_return_series() {
        let s = return_series(&chain(1, 0.0), 0, 6).unwrap();
        assert_eq!(s.values, vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        let s4 = return_series(&chain(1, 0.0), 0, 4).unwrap();
        assert_eq!(s4.r_value(), 2.0);
        let lazy = return_series(&chain(1, 0.5), 0, 3).unwrap();
        assert_eq!(lazy.values[1], 0.5);
        assert!(return_series(&chain(1, 0.5), 0, 0).is_err());
    }

    #[test]
    fn return_series_properties() {
        let (_, c) = sample_chain(8, 0.7, 11, 0.5);
        let v = 0;
        let s = return_series(&c, v, 200).unwrap();
        assert_eq!(s.values[0], 1.0);
        assert!(s.r_value() >= 1.0);
        assert!(s.values.iter().all(|&r| (0.0..=1.0).contains(&r)));
        let pi_v = c.stationary()[v as usize];
        for t in (0..200).step_by(2) {
            assert!(s.values[t] >= pi_v - 1e-15);
        }
        let simple = ExactChain::build(&HypercubeSubgraph::sample_f64(8, 0.7, 11).unwrap(), 0.0).unwrap();
        let s = return_series(&simple, v, 50).unwrap();
        for t in (1..50).step_by(2) {
            assert_eq!(s.values[t], 0.0);
        }
    }

    #[test]
    fn circle_trivial_series() {
        let one = ReturnSeries {
            vertex: 0,
            values: vec![1.0],
        };
        assert_eq!(r_on_circle(&one, 3.0).unwrap().min_modulus, 1.0);
        let spike = ReturnSeries {
            vertex: 0,
            values: vec![1.0, 0.0, 0.0, 0.0],
        };
        assert_eq!(r_on_circle(&spike, 3.0).unwrap().min_modulus, 1.0);
    }

    #[test]
    fn circle_detects_interior_zero() {
        // 1 + 2z vanishes at z = −1/2, inside the unit disk.
        let s = ReturnSeries {
            vertex: 0,
            values: vec![1.0, 2.0],
        };
        let c = r_on_circle(&s, 10.0).unwrap();
        assert_eq!(c.zeros_inside, 1);
        assert_eq!(c.min_modulus, 0.0);
        assert!(c.boundary_min > 0.0);
    }

    #[test]
    fn circle_minimum_matches_brute_force() {
        // 1 + 0.9 z^3: minimum on |z| = ρ is 1 − 0.9 ρ^3.
        let s = ReturnSeries {
            vertex: 0,
            values: vec![1.0, 0.0, 0.0, 0.9],
        };
        let c = r_on_circle(&s, 2.0).unwrap();
        let rho = 1.0 + 1.0 / 8.0;
        let want = (1.0f64 - 0.9 * rho * rho * rho).abs();
        assert!((c.boundary_min - want).abs() <= 1e-9, "{} vs {want}", c.boundary_min);
    }

    #[test]
    fn return_sum_stays_away_from_zero_on_circle() {
        let (_, c) = sample_chain(8, 0.7, 11, 0.5);
        let s = return_series(&c, 0, 64).unwrap();
        let m = r_on_circle(&s, 6.0).unwrap();
        assert_eq!(m.zeros_inside, 0);
        assert!(m.min_modulus >= 0.25, "{m:?}");
    }

    #[test]
    fn two_state_lazy_mixing() {
        // |P^t(x) − 1/2| = 1/2 · 0^t for the lazy 2-state chain: mixes at t = 1.
        let c = chain(1, 0.5);
        assert_eq!(tv_mixing_time(&c, 1e-12, 100).unwrap(), MixingTime::Steps(1));
        // With laziness 3/4 the deviation is (1/2)^{t+1}.
        let c = chain(1, 0.75);
        for k in 1..20 {
            let eps = 0.5f64.powi(k);
            let want = (k - 1) as u64;
            assert_eq!(tv_mixing_time(&c, eps, 100).unwrap(), MixingTime::Steps(want));
        }
        assert_eq!(tv_mixing_time(&c, 1.0, 100).unwrap(), MixingTime::Steps(0));
        assert_eq!(tv_mixing_time(&chain(3, 0.0), 1e-3, 100).unwrap(), MixingTime::Never);
    }

    #[test]
    fn mixing_time_is_finite_on_sample() {
        let (_, c) = sample_chain(8, 0.7, 11, 0.5);
        let eps = (c.n() as f64).powi(-3);
        let t = tv_mixing_time(&c, eps, 100_000).unwrap().steps().unwrap();
        assert!(t > 10);
    }

    #[test]
    fn unvisited_basics() {
        let c = chain(1, 0.0);
        assert_eq!(unvisited_probability_exact(&c, 1, 0, 1).unwrap(), 0.0);
        assert_eq!(unvisited_probability_exact(&c, 1, 0, 0).unwrap(), 1.0);
        assert!(unvisited_probability_exact(&c, 0, 0, 3).is_err());
        let (_, c) = sample_chain(6, 0.8, 2, 0.5);
        let curve = unvisited_curve(&c, 9, 0, 2000, VisitWindow::FromStart).unwrap();
        assert!(curve.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn cover_time_small_cases() {
        assert!((exact_cover_time(&chain(1, 0.0), 0).unwrap() - 1.0).abs() <= 1e-12);
        assert!((exact_cover_time(&chain(1, 0.5), 0).unwrap() - 2.0).abs() <= 1e-12);
        // Cycle C_4: n(n−1)/2 = 6.
        assert!((exact_cover_time(&chain(2, 0.0), 0).unwrap() - 6.0).abs() <= 1e-12);
        assert!((exact_cover_time(&chain(2, 0.5), 3).unwrap() - 12.0).abs() <= 1e-12);
        assert!(matches!(
            exact_cover_time(&chain(4, 0.0), 0),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn spectral_gap_closed_forms() {
        let g = spectral_gap(&chain(1, 0.5), 1e-12).unwrap();
        assert!((g.gap - 1.0).abs() <= 1e-9);
        for d in [2, 3, 5] {
            let g = spectral_gap(&chain(d, 0.5), 1e-12).unwrap();
            assert!((g.gap - 1.0 / d as f64).abs() <= 1e-9, "d = {d}: {g:?}");
        }
        // Simple walk on the hypercube: λ_2 = 1 − 2/d.
        let g = spectral_gap(&chain(4, 0.0), 1e-12).unwrap();
        assert!((g.gap - 0.5).abs() <= 1e-9);
    }
}
