//! Randomized audits of the curvature properties of both laws.
//!
//! Each draw samples strictly positive parameters, builds a grid adapted to
//! the draw and runs the finite-difference check from [`crate::laws`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::laws::{
    check_rectified_inflection, check_vanilla_slope, linspace, LawKind, LawParams, RectifiedParams,
    VanillaParams,
};

/// Grid points used for the vanilla slope check.
pub const VANILLA_GRID_POINTS: usize = 100;
/// Grid points used for the rectified inflection check.
pub const RECTIFIED_GRID_POINTS: usize = 401;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditFailure {
    pub draw: usize,
    pub params: LawParams,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditSummary {
    pub law: LawKind,
    pub draws: usize,
    pub passed: usize,
    pub failures: Vec<AuditFailure>,
}

impl AuditSummary {
    pub fn all_pass(&self) -> bool {
        self.passed == self.draws
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}

pub fn draw_vanilla(rng: &mut ChaCha8Rng) -> VanillaParams {
    VanillaParams {
        b: log_uniform(rng, 0.1, 1e3),
        beta: rng.random_range(0.1..1.5),
        e: log_uniform(rng, 0.1, 10.0),
        alpha: rng.random_range(0.1..2.0),
    }
}

pub fn draw_rectified(rng: &mut ChaCha8Rng) -> RectifiedParams {
    RectifiedParams {
        b: log_uniform(rng, 0.1, 1e3),
        d_l: log_uniform(rng, 1.0, 1e5),
        beta: rng.random_range(0.2..1.5),
        e: log_uniform(rng, 0.1, 10.0),
    }
}

/// Covers the data sizes from 1 up to well past the knee where `B / D^beta`
/// drops below `E`.
pub fn vanilla_grid(p: &VanillaParams) -> Vec<f64> {
    let knee = ((p.b.ln() - p.e.ln()) / p.beta).max(0.0);
    linspace(0.0, knee + 10.0 / p.beta, VANILLA_GRID_POINTS)
}

/// Symmetric window of `4 / beta` around the inflection point.
pub fn rectified_grid(p: &RectifiedParams) -> Result<Vec<f64>> {
    let x0 = p.inflection_x0()?;
    let half = 4.0 / p.beta;
    Ok(linspace(x0 - half, x0 + half, RECTIFIED_GRID_POINTS))
}

pub fn audit(law: LawKind, draws: usize, seed: u64) -> Result<AuditSummary> {
    if draws == 0 {
        return Err(Error::Domain("audit needs at least one draw".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    for draw in 0..draws {
        let (params, outcome): (LawParams, Result<Option<String>>) = match law {
            LawKind::Vanilla => {
                let p = draw_vanilla(&mut rng);
                let r = check_vanilla_slope(&p, &vanilla_grid(&p)).map(|r| {
                    (!r.pass)
                        .then(|| format!("slope violations at grid indices {:?}", r.violations))
                });
                (p.into(), r)
            }
            LawKind::Rectified => {
                let p = draw_rectified(&mut rng);
                let r = rectified_grid(&p)
                    .and_then(|g| check_rectified_inflection(&p, &g))
                    .map(|r| {
                        (!r.pass).then(|| {
                            format!(
                                "x0 {} estimated {}; curvature violations at {:?}",
                                r.x0_closed_form, r.x0_estimate, r.violations
                            )
                        })
                    });
                (p.into(), r)
            }
        };
        let detail = match outcome {
            Ok(None) => continue,
            Ok(Some(d)) => d,
            Err(e) => e.to_string(),
        };
        failures.push(AuditFailure {
            draw,
            params,
            detail,
        });
    }
    Ok(AuditSummary {
        law,
        draws,
        passed: draws - failures.len(),
        failures,
    })
}
