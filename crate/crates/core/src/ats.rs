//! Accept-then-stop (AtS) extrapolation of full-data loss.
//!
//! Starting from the largest measured size inside the budget, the curve is
//! walked downward by successive halving. Pairs are accepted into a log-log
//! line until a candidate pair sits more than `delta` residual standard
//! deviations off the line fitted to the pairs accepted so far, which marks
//! the bend into the pre-power phase. The first `k` pairs are accepted
//! unconditionally. The final line over all accepted pairs is extrapolated
//! to the full data size; the score is the negated predicted log loss.

use serde::Serialize;

use crate::curves::LossCurve;
use crate::error::{Error, Result};
use crate::ratio::BudgetRatio;

/// Denominator used for the residual standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SigmaEstimator {
    /// `sqrt(SS / n)`.
    #[default]
    Population,
    /// `sqrt(SS / (n - 1))`, and 0 for two points.
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_std: f64,
}

impl LinFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Ordinary least squares with the sample residual deviation.
pub fn linfit(pairs: &[(f64, f64)]) -> Result<LinFit> {
    linfit_with(pairs, SigmaEstimator::Sample)
}

pub fn linfit_with(pairs: &[(f64, f64)], sigma: SigmaEstimator) -> Result<LinFit> {
    let n = pairs.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "line fit needs 2 points, got {n}"
        )));
    }
    let nf = n as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("all x values identical".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = pairs
        .iter()
        .map(|&(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let residual_std = match sigma {
        SigmaEstimator::Population => (ss / nf).sqrt(),
        SigmaEstimator::Sample if n >= 3 => (ss / (nf - 1.0)).sqrt(),
        SigmaEstimator::Sample => 0.0,
    };
    Ok(LinFit {
        slope,
        intercept,
        residual_std,
    })
}

const SIGMA_FLOOR: f64 = 1e-12;
const ON_LINE: f64 = 1e-6;

/// Residual of `pair` against `fit`, in units of the fit's residual
/// deviation. With a zero-deviation fit, an on-line pair scores 0 and any
/// other pair scores `+inf`.
pub fn stop_indicator(fit: &LinFit, pair: (f64, f64)) -> f64 {
    let r = (pair.1 - fit.predict(pair.0)).abs();
    if fit.residual_std < SIGMA_FLOOR {
        if r < ON_LINE {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        r / fit.residual_std
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AtsConfig {
    /// Pairs accepted before the stop test is allowed to fire.
    pub k: usize,
    /// Stop threshold on the indicator.
    pub delta: f64,
    /// Size of the complete training set; the budget is a fraction of it.
    pub full_size: u64,
    pub budget_ratio: BudgetRatio,
    pub sigma: SigmaEstimator,
    /// Extrapolation target when it differs from `full_size`.
    pub extrapolation_size: Option<u64>,
}

impl AtsConfig {
    pub fn new(full_size: u64, budget_ratio: BudgetRatio) -> Self {
        Self {
            k: 3,
            delta: 5.0,
            full_size,
            budget_ratio,
            sigma: SigmaEstimator::default(),
            extrapolation_size: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Domain(format!(
                "k must be at least 2, got {}",
                self.k
            )));
        }
        if !(self.delta > 0.0) {
            return Err(Error::Domain(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        if self.full_size == 0 || self.extrapolation_size == Some(0) {
            return Err(Error::Domain("full size must be positive".into()));
        }
        Ok(())
    }

    pub fn target_size(&self) -> u64 {
        self.extrapolation_size.unwrap_or(self.full_size)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtsResult {
    /// Accepted `(ln size, ln loss)` pairs, largest size first.
    pub accepted: Vec<(f64, f64)>,
    pub accepted_sizes: Vec<u64>,
    pub stopped_early: bool,
    pub line: LinFit,
    pub predicted_log_loss: f64,
    pub score: f64,
}

/// Measured sizes visited by the descent: the largest size within budget,
/// then repeatedly the largest size at most half of the previous one.
pub fn halving_sizes(curve: &LossCurve, max_size: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut cur = curve.largest_size_at_most(max_size);
    while let Some(s) = cur {
        out.push(s);
        cur = if s >= 2 {
            curve.largest_size_at_most(s / 2)
        } else {
            None
        };
    }
    out
}

pub fn run_ats(curve: &LossCurve, cfg: &AtsConfig) -> Result<AtsResult> {
    cfg.validate()?;
    let budget = cfg.budget_ratio.floor_of(cfg.full_size);
    let sizes = halving_sizes(curve, budget);
    if sizes.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} measured size(s) within budget {budget}, need 2",
            sizes.len()
        )));
    }

    let mut accepted: Vec<(f64, f64)> = Vec::with_capacity(sizes.len());
    let mut accepted_sizes = Vec::with_capacity(sizes.len());
    let mut stopped_early = false;
    for &s in &sizes {
        let loss = curve.loss_at(s).expect("size comes from the curve");
        let pair = ((s as f64).ln(), loss.ln());
        if accepted.len() >= cfg.k {
            let fit = linfit_with(&accepted, cfg.sigma)?;
            if stop_indicator(&fit, pair) > cfg.delta {
                stopped_early = true;
                break;
            }
        }
        accepted.push(pair);
        accepted_sizes.push(s);
    }

    let line = linfit_with(&accepted, cfg.sigma)?;
    let predicted_log_loss = line.predict((cfg.target_size() as f64).ln());
    Ok(AtsResult {
        accepted,
        accepted_sizes,
        stopped_early,
        line,
        predicted_log_loss,
        score: -predicted_log_loss,
    })
}

/// Flat record of one AtS run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtsRecord {
    pub model: String,
    pub dataset: String,
    pub gamma: BudgetRatio,
    pub n_accepted: usize,
    pub stopped_early: bool,
    pub slope: f64,
    pub intercept: f64,
    pub predicted_log_loss: f64,
    pub score: f64,
}

impl AtsRecord {
    pub fn new(curve: &LossCurve, cfg: &AtsConfig, r: &AtsResult) -> Self {
        Self {
            model: curve.model_id.clone(),
            dataset: curve.dataset_id.clone(),
            gamma: cfg.budget_ratio,
            n_accepted: r.accepted.len(),
            stopped_early: r.stopped_early,
            slope: r.line.slope,
            intercept: r.line.intercept,
            predicted_log_loss: r.predicted_log_loss,
            score: r.score,
        }
    }
}
