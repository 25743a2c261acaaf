//! Fine-tuning scaling laws and LLM selection.
//!
//! Fits the rectified law `B / (D_l + D^beta) + E` and the vanilla law
//! `(B / D^beta + E)^alpha` to loss-versus-data-size curves, and ranks
//! candidate models for fine-tuning from small-budget measurements with the
//! accept-then-stop extrapolation and a set of baseline scorers.

pub mod ats;
pub mod audit;
pub mod curves;
pub mod error;
pub mod fitting;
pub mod laws;
pub mod ratio;
pub mod selection;
pub mod synth;

pub use curves::{embedded_fixtures, CurveStore, LossCurve, ModelMeta, Point};
pub use error::{Error, Result};
pub use fitting::{fit_law, FitConfig, FitResult};
pub use laws::{LawKind, LawParams, RectifiedParams, VanillaParams};
pub use ratio::BudgetRatio;
