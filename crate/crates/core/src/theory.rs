//! Closed-form predictions for `Q_{n,p}` as pure functions of `(d, p)`.
//!
//! Logarithms are natural unless a name says otherwise; `n log n` is always
//! `n ln n`, and `d = log2 n`. Quantities that grow like `((1+ε)/ε)^{dε}` are
//! evaluated in log space so that `d` up to 64 does not overflow.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

/// `(d, p)` together with the derived `ε = 2p − 1`, `q = 1 − p` and `n = 2^d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub d: u32,
    pub p: f64,
    pub eps: f64,
    pub q: f64,
    pub n: f64,
}

impl Params {
    pub fn new(d: u32, p: f64) -> Result<Self> {
        if d == 0 || d > 64 {
            return Err(Error::Capacity {
                what: "theory dimension",
                got: d as u64,
                limit: 64,
            });
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(param(format!("p = {p} outside (0, 1]")));
        }
        Ok(Self {
            d,
            p,
            eps: 2.0 * p - 1.0,
            q: 1.0 - p,
            n: (d as f64).exp2(),
        })
    }

    /// Parameterize by `ε`, so that `p = (1 + ε)/2`.
    pub fn from_epsilon(d: u32, eps: f64) -> Result<Self> {
        if !(eps > -1.0 && eps <= 1.0) {
            return Err(param(format!("ε = {eps} outside (−1, 1]")));
        }
        let mut params = Self::new(d, 0.5 * (1.0 + eps))?;
        params.eps = eps;
        Ok(params)
    }

    pub fn df(&self) -> f64 {
        self.d as f64
    }

    /// Expected number of edges, `d n p / 2`.
    pub fn m_expected(&self) -> f64 {
        self.df() * self.n * self.p / 2.0
    }

    /// `n d p`, the expected total degree and the natural time unit.
    pub fn ndp(&self) -> f64 {
        self.n * self.df() * self.p
    }

    pub fn n_ln_n(&self) -> f64 {
        self.n * self.n.ln()
    }

    fn require_supercritical(&self, formula: &'static str) -> Result<()> {
        if self.p > 0.5 {
            Ok(())
        } else {
            Err(Error::Domain {
                formula,
                reason: format!("requires p > 1/2, got {}", self.p),
            })
        }
    }

    fn require_eps_open(&self, formula: &'static str) -> Result<()> {
        if self.eps > 0.0 && self.eps < 1.0 {
            Ok(())
        } else {
            Err(Error::Domain {
                formula,
                reason: format!("requires 0 < ε < 1, got {}", self.eps),
            })
        }
    }
}

/// `α = ln(2p/(2p−1))`, the root of `1 − p + p e^{−α} = 1/2`.
pub fn solve_alpha(p: f64) -> Result<f64> {
    if !(p > 0.5 && p <= 1.0) {
        return Err(Error::Domain {
            formula: "solve_alpha",
            reason: format!("requires 1/2 < p ≤ 1, got {p}"),
        });
    }
    Ok((2.0 * p / (2.0 * p - 1.0)).ln())
}

/// Cover time `(p / ln 2) · ln(2p/(2p−1)) · n ln n`.
pub fn predicted_cover_time(params: &Params) -> Result<f64> {
    params.require_supercritical("predicted_cover_time")?;
    Ok(params.p / LN_2 * solve_alpha(params.p)? * params.n_ln_n())
}

/// Small-ε form `(1/(2 ln 2)) · ln(1/ε) · n ln n`.
pub fn predicted_cover_time_small_eps(params: &Params) -> Result<f64> {
    params.require_eps_open("predicted_cover_time_small_eps")?;
    Ok((1.0 / params.eps).ln() / (2.0 * LN_2) * params.n_ln_n())
}

fn ln_binomial(d: u32, i: u32) -> f64 {
    let k = i.min(d - i);
    (1..=k).map(|j| ((d - k + j) as f64).ln() - (j as f64).ln()).sum()
}

fn check_degree(params: &Params, i: u32) -> Result<()> {
    if i > params.d {
        return Err(param(format!("degree {i} exceeds d = {}", params.d)));
    }
    Ok(())
}

/// Probability that a fixed vertex has degree `i`: `C(d,i) p^i q^{d−i}`.
pub fn degree_probability(params: &Params, i: u32) -> Result<f64> {
    check_degree(params, i)?;
    let (d, p, q) = (params.d, params.p, params.q);
    Ok(ln_binomial(d, i).exp() * p.powi(i as i32) * q.powi((d - i) as i32))
}

/// `E X(i) = n C(d,i) p^i q^{d−i}`.
pub fn expected_degree_count(params: &Params, i: u32) -> Result<f64> {
    Ok(params.n * degree_probability(params, i)?)
}

fn require_interior(params: &Params, formula: &'static str) -> Result<()> {
    if params.p > 0.0 && params.p < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            formula,
            reason: format!("requires 0 < p < 1, got {}", params.p),
        })
    }
}

/// The published closed form `E X · (1 + E X · (dp − i)² / (n d p q))`.
///
/// It drops an `−η·E X` term (`η = E X / n`); [`variance_degree_count_exact`]
/// keeps it. The two agree when `η` is small.
pub fn variance_degree_count(params: &Params, i: u32) -> Result<f64> {
    require_interior(params, "variance_degree_count")?;
    let ex = expected_degree_count(params, i)?;
    let shift = params.df() * params.p - i as f64;
    Ok(ex * (1.0 + ex * shift * shift / (params.n * params.df() * params.p * params.q)))
}

/// Exact `Var X(i) = E X · (1 − η + η (dp − i)² / (d p q))` with `η = C(d,i) p^i q^{d−i}`.
///
/// Pairs at Hamming distance at least two have independent degrees; the
/// `n d` ordered adjacent pairs share one edge.
pub fn variance_degree_count_exact(params: &Params, i: u32) -> Result<f64> {
    require_interior(params, "variance_degree_count_exact")?;
    let eta = degree_probability(params, i)?;
    let shift = params.df() * params.p - i as f64;
    let c = shift * shift / (params.df() * params.p * params.q);
    Ok(params.n * eta * (1.0 - eta + eta * c))
}

/// Asymptotic count of degree-`dε` vertices,
/// `((1+ε)/ε)^{dε} / sqrt(2π dε (1−ε))`.
pub fn expected_count_deps(params: &Params) -> Result<f64> {
    params.require_eps_open("expected_count_deps")?;
    let (d, e) = (params.df(), params.eps);
    let log = d * e * ((1.0 + e) / e).ln() - 0.5 * (2.0 * PI * d * e * (1.0 - e)).ln();
    Ok(log.exp())
}

/// Expected unvisited count `n (1 − p + p e^{−t/(ndp)})^d`.
pub fn survivor_prediction(params: &Params, t: f64) -> f64 {
    let base = 1.0 - params.p + params.p * (-t / params.ndp()).exp();
    (params.n.ln() + params.df() * base.ln()).exp()
}

/// `exp(−(1−ν) d_v t / (d n p))`.
pub fn unvisited_decay(params: &Params, d_v: u32, t: f64, nu: f64) -> f64 {
    (-(1.0 - nu) * d_v as f64 * t / params.ndp()).exp()
}

/// A time threshold together with the slack and exponent that produced it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeMark {
    pub t: f64,
    pub delta: f64,
    pub alpha: f64,
}

/// `α = ln(p / (p − 1 + 2^{−(1+δ)}))`; equals [`solve_alpha`] at `δ = 0`.
pub fn upper_alpha(p: f64, delta: f64) -> Result<f64> {
    let denom = p - 1.0 + (-(1.0 + delta) * LN_2).exp();
    if denom.is_nan() || denom <= 0.0 || delta < 0.0 {
        return Err(Error::Domain {
            formula: "upper_alpha",
            reason: format!("p = {p}, δ = {delta} leaves no positive root"),
        });
    }
    Ok((p / denom).ln())
}

/// Upper mark `t_U = α n d p / (1 − ν)` with `δ = ln(d b) / ln n`.
pub fn upper_time_mark(params: &Params, b: f64, nu: f64) -> Result<TimeMark> {
    params.require_supercritical("upper_time_mark")?;
    if b < 1.0 {
        return Err(param(format!("b = {b} must be at least 1")));
    }
    if !(0.0..1.0).contains(&nu) {
        return Err(param(format!("ν = {nu} outside [0, 1)")));
    }
    let delta = (params.df() * b).ln() / params.n.ln();
    upper_time_mark_with_delta(params, delta, nu)
}

/// Upper mark with `δ` supplied directly.
pub fn upper_time_mark_with_delta(params: &Params, delta: f64, nu: f64) -> Result<TimeMark> {
    let alpha = upper_alpha(params.p, delta)?;
    Ok(TimeMark {
        t: alpha * params.ndp() / (1.0 - nu),
        delta,
        alpha,
    })
}

/// Lower mark `t_L = (1 − δ) n d p ln(2p/(2p−1))` with
/// `δ = ln d / (dε ln(1/ε))`.
pub fn lower_time_mark(params: &Params) -> Result<TimeMark> {
    params.require_eps_open("lower_time_mark")?;
    let (d, e) = (params.df(), params.eps);
    let delta = d.ln() / (d * e * (1.0 / e).ln());
    let alpha = solve_alpha(params.p)?;
    Ok(TimeMark {
        t: (1.0 - delta) * params.ndp() * alpha,
        delta,
        alpha,
    })
}

fn xlnx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// `ln N(i)` for real `i ∈ [0, d]`, where
/// `N(i) = d^d / (i^i (d−i)^{d−i}) · (p/q)^i · q^d`.
pub fn log_degree_profile(params: &Params, i: f64) -> Result<f64> {
    let d = params.df();
    if !(0.0..=d).contains(&i) {
        return Err(param(format!("degree {i} outside [0, {d}]")));
    }
    require_interior(params, "log_degree_profile")?;
    Ok(xlnx(d) - xlnx(i) - xlnx(d - i) + i * (params.p / params.q).ln() + d * params.q.ln())
}

fn check_alpha_eps(alpha: f64, eps: f64) -> Result<()> {
    if !(alpha > -1.0 && alpha < 1.0) {
        return Err(Error::Domain {
            formula: "G_eps",
            reason: format!("α = {alpha} outside (−1, 1)"),
        });
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain {
            formula: "G_eps",
            reason: format!("ε = {eps} outside (0, 1)"),
        });
    }
    Ok(())
}

/// `F(α) = ln G_ε(α) = −ε(1−α) ln(1−α) + (1−ε+αε) ln((1−ε)/(1−ε+αε))`.
pub fn log_g(eps: f64, alpha: f64) -> Result<f64> {
    check_alpha_eps(alpha, eps)?;
    let s = 1.0 - eps + alpha * eps;
    Ok(-eps * (1.0 - alpha) * (1.0 - alpha).ln() + s * ((1.0 - eps) / s).ln())
}

/// `F'(α) = ε ln((1−ε)(1−α) / (1−ε+αε))`.
pub fn log_g_prime(eps: f64, alpha: f64) -> Result<f64> {
    check_alpha_eps(alpha, eps)?;
    Ok(eps * ((1.0 - eps) * (1.0 - alpha) / (1.0 - eps + alpha * eps)).ln())
}

/// `F''(α) = −ε / ((1−α)(1 − ε(1−α)))`.
pub fn log_g_second(eps: f64, alpha: f64) -> Result<f64> {
    check_alpha_eps(alpha, eps)?;
    Ok(-eps / ((1.0 - alpha) * (1.0 - eps * (1.0 - alpha))))
}

/// The two factors of `N(dε(1−α))^{1/d}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LastDegreeProfile {
    /// `N(dε(1−α))^{1/d} = (1/2) ((1+ε)/ε)^{ε(1−α)} G_ε(α)`.
    pub root: f64,
    /// `G_ε(α)`, maximal and equal to 1 at `α = 0`.
    pub g: f64,
}

pub fn last_degree_profile(params: &Params, alpha: f64) -> Result<LastDegreeProfile> {
    let e = params.eps;
    let lg = log_g(e, alpha)?;
    let root = 0.5 * (e * (1.0 - alpha) * ((1.0 + e) / e).ln() + lg).exp();
    Ok(LastDegreeProfile { root, g: lg.exp() })
}

/// `C_α = (2π dε (1−α)(1 − ε(1−α)))^{−1/2}`.
pub fn c_alpha(params: &Params, alpha: f64) -> Result<f64> {
    check_alpha_eps(alpha, params.eps)?;
    let e = params.eps;
    Ok((2.0 * PI * params.df() * e * (1.0 - alpha) * (1.0 - e * (1.0 - alpha))).powf(-0.5))
}

/// A named value with the formula it came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub name: String,
    pub value: f64,
    pub formula: String,
    pub validity: String,
}

/// Every prediction defined at `params`. `theta` is the constant in
/// `dε ≥ θ ln d`; the validity note flags parameters below it.
pub fn predictions(params: &Params, theta: f64) -> Vec<Prediction> {
    let mut out = Vec::new();
    let d = params.df();
    let below = params.eps <= 0.0 || d * params.eps < theta * d.ln();
    let note = |extra: &str| {
        let mut v = Vec::new();
        if below {
            v.push(format!("dε < θ ln d (θ = {theta}): outside the supercritical regime"));
        }
        if !extra.is_empty() {
            v.push(extra.to_string());
        }
        v.join("; ")
    };
    let mut push = |name: &str, value: Result<f64>, formula: &str, extra: &str| {
        if let Ok(value) = value {
            if value.is_finite() {
                out.push(Prediction {
                    name: name.to_string(),
                    value,
                    formula: formula.to_string(),
                    validity: note(extra),
                });
            }
        }
    };
    push(
        "cover_time",
        predicted_cover_time(params),
        "(p/ln 2) ln(2p/(2p-1)) n ln n",
        "",
    );
    push(
        "cover_time_small_eps",
        predicted_cover_time_small_eps(params),
        "(1/(2 ln 2)) ln(1/eps) n ln n",
        "asymptotic as eps -> 0",
    );
    push(
        "cover_ratio_to_n_ln_n",
        predicted_cover_time(params).map(|t| t / params.n_ln_n()),
        "(p/ln 2) ln(2p/(2p-1))",
        "",
    );
    push("alpha", solve_alpha(params.p), "ln(2p/(2p-1))", "");
    push(
        "t_lower",
        lower_time_mark(params).map(|m| m.t),
        "(1-delta) ndp ln(2p/(2p-1)), delta = ln d/(d eps ln(1/eps))",
        "",
    );
    push(
        "delta_lower",
        lower_time_mark(params).map(|m| m.delta),
        "ln d/(d eps ln(1/eps))",
        "",
    );
    push(
        "t_upper",
        upper_time_mark(params, d, 0.0).map(|m| m.t),
        "ln(p/(p-1+2^-(1+delta))) ndp, delta = ln(d b)/ln n, b = d",
        "leading term, nu = 0",
    );
    push(
        "expected_count_deps",
        expected_count_deps(params),
        "((1+eps)/eps)^(d eps) / sqrt(2 pi d eps (1-eps))",
        "Stirling asymptotic",
    );
    push(
        "survivors_at_cover_time",
        solve_alpha(params.p).map(|a| survivor_prediction(params, a * params.ndp())),
        "n (1-p+p e^(-t/ndp))^d at t = alpha ndp",
        "",
    );
    for i in 0..=params.d {
        push(
            &format!("expected_degree_count[{i}]"),
            expected_degree_count(params, i),
            "n C(d,i) p^i q^(d-i)",
            "",
        );
    }
    out
}
