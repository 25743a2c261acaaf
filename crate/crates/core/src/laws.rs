//! Closed-form scaling laws for fine-tuning loss versus data size.
//!
//! * Rectified law: `L(D) = B / (D_l + D^beta) + E`, where `D_l` is the
//!   pre-learned data size.
//! * Vanilla law: `L(D) = (B / D^beta + E)^alpha`.
//!
//! Both are also available in log-log form `f(x) = log L(exp(x))`, along
//! with finite-difference checks of their curvature properties: the
//! vanilla log-log slope is negative and non-decreasing everywhere, while
//! the rectified log-log curve is concave below
//! `x0 = log(D_l^2 + B D_l / E) / (2 beta)` and convex above it.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RectifiedParams {
    pub b: f64,
    pub d_l: f64,
    pub beta: f64,
    pub e: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VanillaParams {
    pub b: f64,
    pub beta: f64,
    pub e: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LawKind {
    Rectified,
    Vanilla,
}

impl LawKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LawKind::Rectified => "rectified",
            LawKind::Vanilla => "vanilla",
        }
    }
}

impl std::str::FromStr for LawKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rectified" => Ok(LawKind::Rectified),
            "vanilla" => Ok(LawKind::Vanilla),
            other => Err(Error::Domain(format!("unknown law `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum LawParams {
    Rectified(RectifiedParams),
    Vanilla(VanillaParams),
}

impl LawParams {
    pub fn kind(&self) -> LawKind {
        match self {
            LawParams::Rectified(_) => LawKind::Rectified,
            LawParams::Vanilla(_) => LawKind::Vanilla,
        }
    }

    pub fn eval(&self, d: f64) -> Result<f64> {
        match self {
            LawParams::Rectified(p) => p.eval(d),
            LawParams::Vanilla(p) => p.eval(d),
        }
    }

    /// `log L(exp(x))`.
    pub fn loglog(&self, x: f64) -> f64 {
        match self {
            LawParams::Rectified(p) => p.loglog(x),
            LawParams::Vanilla(p) => p.loglog(x),
        }
    }

    /// Predicted log loss at size `d > 0`.
    pub fn log_predict(&self, d: f64) -> f64 {
        self.loglog(d.ln())
    }
}

impl From<RectifiedParams> for LawParams {
    fn from(p: RectifiedParams) -> Self {
        LawParams::Rectified(p)
    }
}

impl From<VanillaParams> for LawParams {
    fn from(p: VanillaParams) -> Self {
        LawParams::Vanilla(p)
    }
}

/// `ln(exp(a) + exp(b))` without overflow.
pub fn lse(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    a.max(b) + (-(a - b).abs()).exp().ln_1p()
}

impl RectifiedParams {
    pub fn new(b: f64, d_l: f64, beta: f64, e: f64) -> Self {
        Self { b, d_l, beta, e }
    }

    pub fn eval(&self, d: f64) -> Result<f64> {
        if d < 0.0 || d.is_nan() {
            return Err(Error::Domain(format!(
                "data size must be non-negative, got {d}"
            )));
        }
        let denom = self.d_l + d.powf(self.beta);
        if denom <= 0.0 {
            return Err(Error::Domain(
                "singular at zero data size when the pre-learned size is zero".into(),
            ));
        }
        Ok(self.b / denom + self.e)
    }

    /// Log-log form, evaluated through log-sum-exp so large `x` stays finite.
    pub fn loglog(&self, x: f64) -> f64 {
        let log_denom = lse(self.d_l.ln(), self.beta * x);
        lse(self.b.ln() - log_denom, self.e.ln())
    }

    /// Analytic `f'(x)` of the log-log form.
    pub fn loglog_slope(&self, x: f64) -> f64 {
        let u = (self.beta * x).exp();
        let s = self.d_l + u;
        -self.beta * self.b * u / (s * (self.b + self.e * s))
    }

    /// Location of the log-log inflection point.
    pub fn inflection_x0(&self) -> Result<f64> {
        if !(self.d_l > 0.0 && self.e > 0.0) {
            return Err(Error::Domain(
                "inflection undefined unless pre-learned size and asymptote are positive".into(),
            ));
        }
        Ok((self.d_l * self.d_l + self.b * self.d_l / self.e).ln() / (2.0 * self.beta))
    }

    /// Data size at the inflection point, `exp(x0)`: where the curve moves
    /// from the pre-power phase into the power phase.
    pub fn phase_boundary_size(&self) -> Result<f64> {
        Ok(self.inflection_x0()?.exp())
    }
}

impl VanillaParams {
    pub fn new(b: f64, beta: f64, e: f64, alpha: f64) -> Self {
        Self { b, beta, e, alpha }
    }

    pub fn eval(&self, d: f64) -> Result<f64> {
        if !(d > 0.0) {
            return Err(Error::Domain(format!(
                "data size must be positive, got {d}"
            )));
        }
        Ok((self.b / d.powf(self.beta) + self.e).powf(self.alpha))
    }

    pub fn loglog(&self, x: f64) -> f64 {
        self.alpha * lse(self.b.ln() - self.beta * x, self.e.ln())
    }
}

/// Outcome of the vanilla slope audit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeReport {
    pub pass: bool,
    /// Grid indices whose slope estimate is non-negative or falls below its
    /// predecessor.
    pub violations: Vec<usize>,
}

/// Outcome of the rectified inflection audit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InflectionReport {
    pub pass: bool,
    pub x0_closed_form: f64,
    pub x0_estimate: f64,
    pub violations: Vec<usize>,
}

const MONOTONE_REL_TOL: f64 = 1e-6;

fn check_grid(x_grid: &[f64]) -> Result<()> {
    if x_grid.len() < 3 {
        return Err(Error::Domain(format!(
            "grid needs at least 3 points, got {}",
            x_grid.len()
        )));
    }
    if x_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("grid must be strictly ascending".into()));
    }
    Ok(())
}

/// Central first differences at interior grid points.
pub fn central_first_diff(f: &[f64], x: &[f64]) -> Vec<f64> {
    (1..x.len() - 1)
        .map(|i| (f[i + 1] - f[i - 1]) / (x[i + 1] - x[i - 1]))
        .collect()
}

/// Three-point second differences at interior grid points (non-uniform
/// spacing allowed).
pub fn central_second_diff(f: &[f64], x: &[f64]) -> Vec<f64> {
    (1..x.len() - 1)
        .map(|i| {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            2.0 * (h0 * f[i + 1] - (h0 + h1) * f[i] + h1 * f[i - 1]) / (h0 * h1 * (h0 + h1))
        })
        .collect()
}

/// Checks on `x_grid` that the vanilla log-log slope is negative and
/// non-decreasing, using central differences.
pub fn check_vanilla_slope(p: &VanillaParams, x_grid: &[f64]) -> Result<SlopeReport> {
    check_grid(x_grid)?;
    let f: Vec<f64> = x_grid.iter().map(|&x| p.loglog(x)).collect();
    let slope = central_first_diff(&f, x_grid);
    let scale = slope.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let tol = MONOTONE_REL_TOL * scale;
    let mut violations = Vec::new();
    for (j, &s) in slope.iter().enumerate() {
        let bad_sign = !(s < 0.0);
        let bad_order = j > 0 && s < slope[j - 1] - tol;
        if bad_sign || bad_order {
            violations.push(j + 1);
        }
    }
    Ok(SlopeReport {
        pass: violations.is_empty(),
        violations,
    })
}

/// Checks on `x_grid` that the rectified log-log curvature is negative below
/// the closed-form inflection point and positive above it. Points within one
/// local grid step of `x0` are excluded; the zero crossing of the
/// second-difference sequence must land within two grid steps of `x0`.
pub fn check_rectified_inflection(p: &RectifiedParams, x_grid: &[f64]) -> Result<InflectionReport> {
    check_grid(x_grid)?;
    if !(p.b > 0.0 && p.beta > 0.0) {
        return Err(Error::Domain(
            "inflection audit needs strictly positive parameters".into(),
        ));
    }
    let x0 = p.inflection_x0()?;
    let (first, last) = (x_grid[0], x_grid[x_grid.len() - 1]);
    if !(first < x0 && x0 < last) {
        return Err(Error::Domain(format!(
            "grid [{first}, {last}] does not bracket inflection point {x0}"
        )));
    }
    let f: Vec<f64> = x_grid.iter().map(|&x| p.loglog(x)).collect();
    let curv = central_second_diff(&f, x_grid);
    let interior = &x_grid[1..x_grid.len() - 1];

    let mut violations = Vec::new();
    for (j, (&x, &c)) in interior.iter().zip(&curv).enumerate() {
        let step = (x_grid[j + 2] - x_grid[j]) / 2.0;
        let concave_side = x < x0 - step && !(c < 0.0);
        let convex_side = x > x0 + step && !(c > 0.0);
        if concave_side || convex_side {
            violations.push(j + 1);
        }
    }

    let mut x0_estimate = f64::NAN;
    let mut crossing_step = f64::NAN;
    for j in 0..curv.len().saturating_sub(1) {
        let (c0, c1) = (curv[j], curv[j + 1]);
        if c0 < 0.0 && c1 >= 0.0 {
            let (xa, xb) = (interior[j], interior[j + 1]);
            x0_estimate = xa + (xb - xa) * (-c0) / (c1 - c0);
            crossing_step = xb - xa;
            break;
        }
    }
    let located = x0_estimate.is_finite() && (x0_estimate - x0).abs() <= 2.0 * crossing_step;
    Ok(InflectionReport {
        pass: violations.is_empty() && located,
        x0_closed_form: x0,
        x0_estimate,
        violations,
    })
}

/// `n` evenly spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let h = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + h * i as f64).collect()
}
