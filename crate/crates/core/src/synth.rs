//! Synthetic loss curves drawn from either law, with optional log-normal
//! noise. Used as ground truth when testing fitting and AtS.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::curves::{LossCurve, Point};
use crate::error::{Error, Result};
use crate::laws::{LawParams, RectifiedParams};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthSpec {
    pub law: LawParams,
    pub sizes: Vec<u64>,
    /// Standard deviation of Gaussian noise added to the log loss.
    pub noise_sigma: f64,
    pub seed: u64,
    pub model_id: String,
    pub dataset_id: String,
}

impl SynthSpec {
    pub fn new(law: impl Into<LawParams>, sizes: Vec<u64>) -> Self {
        Self {
            law: law.into(),
            sizes,
            noise_sigma: 0.0,
            seed: 0,
            model_id: "synthetic".into(),
            dataset_id: "synthetic".into(),
        }
    }

    pub fn with_noise(mut self, sigma: f64, seed: u64) -> Self {
        self.noise_sigma = sigma;
        self.seed = seed;
        self
    }
}

/// The measured grid of the fixture tables without the zero-shot column:
/// 200, 400, ..., 1638400.
pub fn fixture_grid() -> Vec<u64> {
    (0..14).map(|i| 200u64 << i).collect()
}

pub fn generate(spec: &SynthSpec) -> Result<LossCurve> {
    if spec.sizes.is_empty() || spec.sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(
            "synthetic sizes must be nonempty and ascending".into(),
        ));
    }
    if !(spec.noise_sigma >= 0.0 && spec.noise_sigma.is_finite()) {
        return Err(Error::Domain("noise sigma must be non-negative".into()));
    }
    let noise = Normal::new(0.0, spec.noise_sigma).expect("sigma validated above");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut points = Vec::with_capacity(spec.sizes.len());
    for &size in &spec.sizes {
        let clean = spec.law.eval(size as f64)?;
        let loss = if spec.noise_sigma > 0.0 {
            (clean.ln() + noise.sample(&mut rng)).exp()
        } else {
            clean
        };
        points.push(Point { size, loss });
    }
    LossCurve::new(spec.model_id.clone(), spec.dataset_id.clone(), points)
}

/// Data size where the rectified curve passes from the pre-power phase into
/// the power phase.
pub fn phase_boundary_size(p: &RectifiedParams) -> Result<f64> {
    p.phase_boundary_size()
}
