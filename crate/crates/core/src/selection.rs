//! Model selection: scorers, metrics and report assembly.
//!
//! Every scorer maps a model (and its curve on the target dataset) to a real
//! number where higher means "expected to fine-tune better". Reports compare
//! scores with the measured loss at the full data size via Pearson
//! correlation against negated loss and relative accuracy of the top pick.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::ats::{halving_sizes, run_ats, AtsConfig, SigmaEstimator};
use crate::curves::{CurveStore, LossCurve, ModelMeta, Point};
use crate::error::{Error, Result};
use crate::fitting::{fit_law, FitConfig};
use crate::laws::LawKind;
use crate::ratio::BudgetRatio;

/// Smallest subset size the fit-based scorers will fine-tune on.
pub const MIN_SUBSET_SIZE: u64 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ModelSize,
    ZeroShot,
    SubTuning,
    Ats,
    OurFit,
    VanillaFit,
    AtsFamily,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::ModelSize,
        Method::ZeroShot,
        Method::SubTuning,
        Method::Ats,
        Method::OurFit,
        Method::VanillaFit,
        Method::AtsFamily,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ModelSize => "model_size",
            Method::ZeroShot => "zero_shot",
            Method::SubTuning => "sub_tuning",
            Method::Ats => "ats",
            Method::OurFit => "our_fit",
            Method::VanillaFit => "vanilla_fit",
            Method::AtsFamily => "ats_family",
        }
    }

    /// Whether the method's scores depend on the budget ratio at all.
    pub fn uses_budget(&self) -> bool {
        !matches!(self, Method::ModelSize | Method::ZeroShot)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Domain(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionTask {
    pub dataset_id: String,
    pub model_ids: Vec<String>,
    pub budget_ratio: BudgetRatio,
    pub full_size: u64,
    pub method: Method,
}

impl SelectionTask {
    /// Task over every model with a curve on `dataset`.
    pub fn over_dataset(
        store: &CurveStore,
        dataset: &str,
        budget_ratio: BudgetRatio,
        full_size: u64,
        method: Method,
    ) -> Self {
        Self {
            dataset_id: dataset.to_string(),
            model_ids: store.models_on(dataset),
            budget_ratio,
            full_size,
            method,
        }
    }

    pub fn with_method(&self, method: Method) -> Self {
        Self {
            method,
            ..self.clone()
        }
    }

    pub fn with_budget(&self, budget_ratio: BudgetRatio) -> Self {
        Self {
            budget_ratio,
            ..self.clone()
        }
    }
}

/// Knobs for the budget-dependent scorers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoringConfig {
    pub k: usize,
    pub delta: f64,
    pub sigma: SigmaEstimator,
    pub extrapolation_size: Option<u64>,
    pub fit: FitConfig,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self {
            k: 3,
            delta: 5.0,
            sigma: SigmaEstimator::default(),
            extrapolation_size: None,
            fit: FitConfig::default(),
        }
    }
}

impl ScoringConfig {
    pub fn ats_config(&self, full_size: u64, budget_ratio: BudgetRatio) -> AtsConfig {
        AtsConfig {
            k: self.k,
            delta: self.delta,
            full_size,
            budget_ratio,
            sigma: self.sigma,
            extrapolation_size: self.extrapolation_size,
        }
    }
}

fn nonfinite_as_null<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

fn map_nonfinite_as_null<S: Serializer>(
    m: &BTreeMap<String, f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let m: BTreeMap<&str, Option<f64>> = m
        .iter()
        .map(|(k, v)| (k.as_str(), v.is_finite().then_some(*v)))
        .collect();
    m.serialize(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionReport {
    pub method: Method,
    pub dataset: String,
    pub gamma: BudgetRatio,
    /// Unscored models (AtS-Family non-representatives) hold `-inf`.
    #[serde(serialize_with = "map_nonfinite_as_null")]
    pub scores: BTreeMap<String, f64>,
    pub truth_loss: BTreeMap<String, f64>,
    /// Pearson correlation over the models with finite scores; NaN when
    /// fewer than two such models exist.
    #[serde(serialize_with = "nonfinite_as_null")]
    pub pearcorr: f64,
    pub relacc: f64,
    pub selected: String,
}

pub fn score_model_size(meta: &ModelMeta) -> f64 {
    (meta.n_params as f64).ln()
}

pub fn score_zero_shot(curve: &LossCurve) -> Result<f64> {
    curve
        .zero_shot_loss()
        .map(|l| -l)
        .ok_or_else(|| Error::InsufficientData("curve has no zero-shot (size 0) point".into()))
}

pub fn score_sub_tuning(curve: &LossCurve, gamma: BudgetRatio, full_size: u64) -> Result<f64> {
    let budget = gamma.floor_of(full_size);
    let size = curve
        .largest_size_at_most(budget)
        .ok_or(Error::EmptyBudget { max_size: budget })?;
    Ok(-curve.loss_at(size).expect("size comes from the curve"))
}

/// Points a fit-based scorer sees: the halving sequence from the largest
/// size within budget down to the subset-size floor.
pub fn law_fit_points(curve: &LossCurve, gamma: BudgetRatio, full_size: u64) -> Vec<Point> {
    let mut pts: Vec<Point> = halving_sizes(curve, gamma.floor_of(full_size))
        .into_iter()
        .filter(|&s| s >= MIN_SUBSET_SIZE)
        .map(|size| Point {
            size,
            loss: curve.loss_at(size).expect("size comes from the curve"),
        })
        .collect();
    pts.reverse();
    pts
}

pub fn score_law_fit(
    kind: LawKind,
    curve: &LossCurve,
    gamma: BudgetRatio,
    full_size: u64,
    fit_cfg: &FitConfig,
) -> Result<f64> {
    let pts = law_fit_points(curve, gamma, full_size);
    let fit = fit_law(kind, &pts, fit_cfg)?;
    Ok(-fit.params.log_predict(full_size as f64))
}

/// Pearson correlation coefficient.
pub fn pearcorr(scores: &[f64], perf: &[f64]) -> Result<f64> {
    if scores.len() != perf.len() || scores.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "correlation needs two equal-length samples of size >= 2, got {} and {}",
            scores.len(),
            perf.len()
        )));
    }
    let n = scores.len() as f64;
    let ms = scores.iter().sum::<f64>() / n;
    let mp = perf.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&s, &p) in scores.iter().zip(perf) {
        let (ds, dp) = (s - ms, p - mp);
        sxy += ds * dp;
        sxx += ds * ds;
        syy += dp * dp;
    }
    if !(sxx > 0.0 && syy > 0.0) {
        return Err(Error::Degenerate(
            "correlation undefined for zero variance".into(),
        ));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Highest-scoring model; ties go to the lexicographically smallest id.
pub fn select_top(scores: &BTreeMap<String, f64>) -> Option<&str> {
    // BTreeMap iterates in id order, so keeping the first maximum breaks ties.
    let mut best: Option<(&str, f64)> = None;
    for (id, &s) in scores {
        match best {
            Some((_, b)) if !(s > b) => {}
            _ if s.is_nan() => {}
            _ => best = Some((id, s)),
        }
    }
    best.map(|(id, _)| id)
}

/// `(max L - L(selected)) / (max L - min L)` over the models in `losses`.
pub fn relacc(scores: &BTreeMap<String, f64>, losses: &BTreeMap<String, f64>) -> Result<f64> {
    if losses.len() < 2 {
        return Err(Error::InsufficientData(
            "relative accuracy needs at least 2 models".into(),
        ));
    }
    let max = losses.values().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = losses.values().cloned().fold(f64::INFINITY, f64::min);
    if !(max > min) {
        return Err(Error::Degenerate("all truth losses are equal".into()));
    }
    let top =
        select_top(scores).ok_or_else(|| Error::InsufficientData("no scored model".into()))?;
    let l = losses
        .get(top)
        .ok_or_else(|| Error::UnknownModel(top.to_string()))?;
    Ok((max - l) / (max - min))
}

/// Models whose parameter count lies strictly below `max_params`.
pub fn stratify(models: &[ModelMeta], max_params: u64) -> Result<Vec<ModelMeta>> {
    if max_params == 0 {
        return Err(Error::Domain("parameter threshold must be positive".into()));
    }
    let kept: Vec<ModelMeta> = models
        .iter()
        .filter(|m| m.n_params < max_params)
        .cloned()
        .collect();
    if kept.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no model below {max_params} parameters"
        )));
    }
    Ok(kept)
}

/// Largest model of each family; ties go to the smallest id.
pub fn family_representatives(models: &[ModelMeta]) -> Vec<String> {
    let mut best: BTreeMap<&str, &ModelMeta> = BTreeMap::new();
    for m in models {
        best.entry(m.family.as_str())
            .and_modify(|cur| {
                if m.n_params > cur.n_params
                    || (m.n_params == cur.n_params && m.model_id < cur.model_id)
                {
                    *cur = m;
                }
            })
            .or_insert(m);
    }
    let reps: Vec<&str> = best.values().map(|m| m.model_id.as_str()).collect();
    models
        .iter()
        .filter(|m| reps.contains(&m.model_id.as_str()))
        .map(|m| m.model_id.clone())
        .collect()
}

fn truth_losses(store: &CurveStore, task: &SelectionTask) -> Result<BTreeMap<String, f64>> {
    task.model_ids
        .iter()
        .map(|m| {
            let c = store.curve(m, &task.dataset_id)?;
            let l = c.loss_at(task.full_size).ok_or_else(|| {
                Error::InsufficientData(format!("no measurement at full size {}", task.full_size))
                    .for_model(m)
            })?;
            Ok((m.clone(), l))
        })
        .collect()
}

fn assemble(
    task: &SelectionTask,
    scores: BTreeMap<String, f64>,
    truth_loss: BTreeMap<String, f64>,
) -> Result<SelectionReport> {
    let (s, p): (Vec<f64>, Vec<f64>) = scores
        .iter()
        .filter(|(_, v)| v.is_finite())
        .map(|(m, v)| (*v, -truth_loss[m]))
        .unzip();
    let pearcorr = if s.len() >= 2 {
        pearcorr(&s, &p)?
    } else {
        f64::NAN
    };
    let relacc = relacc(&scores, &truth_loss)?;
    let selected = select_top(&scores)
        .expect("relacc checked a model was scored")
        .to_string();
    Ok(SelectionReport {
        method: task.method,
        dataset: task.dataset_id.clone(),
        gamma: task.budget_ratio,
        scores,
        truth_loss,
        pearcorr,
        relacc,
        selected,
    })
}

fn score_one(
    store: &CurveStore,
    task: &SelectionTask,
    cfg: &ScoringConfig,
    model: &str,
) -> Result<f64> {
    let curve = || store.curve(model, &task.dataset_id);
    let (gamma, full) = (task.budget_ratio, task.full_size);
    match task.method {
        Method::ModelSize => Ok(score_model_size(store.meta(model)?)),
        Method::ZeroShot => score_zero_shot(curve()?),
        Method::SubTuning => score_sub_tuning(curve()?, gamma, full),
        Method::Ats | Method::AtsFamily => {
            Ok(run_ats(curve()?, &cfg.ats_config(full, gamma))?.score)
        }
        Method::OurFit => score_law_fit(LawKind::Rectified, curve()?, gamma, full, &cfg.fit),
        Method::VanillaFit => score_law_fit(LawKind::Vanilla, curve()?, gamma, full, &cfg.fit),
    }
}

fn score_models(
    store: &CurveStore,
    task: &SelectionTask,
    cfg: &ScoringConfig,
    models: &[String],
) -> Result<BTreeMap<String, f64>> {
    models
        .par_iter()
        .map(|m| {
            score_one(store, task, cfg, m)
                .map(|s| (m.clone(), s))
                .map_err(|e| e.for_model(m))
        })
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().collect())
}

/// Restricts the candidates to the largest model per family, scores those
/// with AtS and leaves every other model at `-inf`. Relative accuracy is
/// measured over the full task model set.
pub fn ats_family(
    store: &CurveStore,
    task: &SelectionTask,
    cfg: &ScoringConfig,
) -> Result<SelectionReport> {
    let metas: Vec<ModelMeta> = task
        .model_ids
        .iter()
        .map(|m| store.meta(m).cloned())
        .collect::<Result<_>>()?;
    let reps = family_representatives(&metas);
    let task = task.with_method(Method::AtsFamily);
    let mut scores = score_models(store, &task, cfg, &reps)?;
    for m in &task.model_ids {
        scores.entry(m.clone()).or_insert(f64::NEG_INFINITY);
    }
    assemble(&task, scores, truth_losses(store, &task)?)
}

pub fn run_selection(
    store: &CurveStore,
    task: &SelectionTask,
    cfg: &ScoringConfig,
) -> Result<SelectionReport> {
    if task.model_ids.is_empty() {
        return Err(Error::InsufficientData(
            "selection task has no models".into(),
        ));
    }
    if task.method == Method::AtsFamily {
        return ats_family(store, task, cfg);
    }
    let scores = score_models(store, task, cfg, &task.model_ids)?;
    assemble(task, scores, truth_losses(store, task)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlopsEstimate {
    /// Fine-tuning every model on the full set.
    pub c_full: f64,
    /// Fine-tuning every model on one subset of size `gamma * d`.
    pub c_sub: f64,
    /// Fine-tuning every model on the whole halving sequence down to the
    /// subset-size floor.
    pub c_ats: f64,
}

/// Training cost estimates with `C = 6 N D T H` per model (parameters,
/// samples, tokens per sample, epochs).
pub fn flops_estimates(
    models: &[ModelMeta],
    d: u64,
    t: u64,
    h: u64,
    gamma: BudgetRatio,
) -> FlopsEstimate {
    let per_sample: f64 = models
        .iter()
        .map(|m| 6.0 * m.n_params as f64 * t as f64 * h as f64)
        .sum();
    let c_full = per_sample * d as f64;
    let c_sub = c_full * gamma.as_f64();
    let mut samples = 0.0;
    let mut sub = gamma.as_f64() * d as f64;
    while sub >= MIN_SUBSET_SIZE as f64 {
        samples += sub;
        sub /= 2.0;
    }
    FlopsEstimate {
        c_full,
        c_sub,
        c_ats: per_sample * samples,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoRow {
    pub method: Method,
    pub gamma: BudgetRatio,
    pub pearcorr: f64,
    pub flops: f64,
}

/// Selection quality against compute for SubTuning and AtS over `gammas`,
/// followed by the full fine-tuning reference (SubTuning at ratio 1).
pub fn pareto_rows(
    store: &CurveStore,
    dataset: &str,
    full_size: u64,
    t: u64,
    h: u64,
    gammas: &[BudgetRatio],
    cfg: &ScoringConfig,
) -> Result<Vec<ParetoRow>> {
    let base = SelectionTask::over_dataset(
        store,
        dataset,
        BudgetRatio::ONE,
        full_size,
        Method::SubTuning,
    );
    let metas: Vec<ModelMeta> = base
        .model_ids
        .iter()
        .map(|m| store.meta(m).cloned())
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for method in [Method::SubTuning, Method::Ats] {
        for &g in gammas {
            let report = run_selection(store, &base.with_method(method).with_budget(g), cfg)?;
            let f = flops_estimates(&metas, full_size, t, h, g);
            rows.push(ParetoRow {
                method,
                gamma: g,
                pearcorr: report.pearcorr,
                flops: if method == Method::Ats {
                    f.c_ats
                } else {
                    f.c_sub
                },
            });
        }
    }
    let full = run_selection(store, &base, cfg)?;
    rows.push(ParetoRow {
        method: Method::SubTuning,
        gamma: BudgetRatio::ONE,
        pearcorr: full.pearcorr,
        flops: flops_estimates(&metas, full_size, t, h, BudgetRatio::ONE).c_full,
    });
    Ok(rows)
}

pub fn write_pareto_csv<W: Write>(rows: &[ParetoRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["method", "gamma", "pearcorr", "flops"])?;
    for r in rows {
        wtr.write_record([
            r.method.as_str(),
            &r.gamma.to_string(),
            &format!("{:.6}", r.pearcorr),
            &format!("{:e}", r.flops),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes reports as a method-by-ratio grid per dataset: one block of rows
/// per metric, one row per ratio plus an `avg` row, one column per method.
/// Values are percentages with one decimal.
pub fn write_table_csv<W: Write>(reports: &[SelectionReport], w: W) -> Result<()> {
    fn push_unique<T: PartialEq + Copy>(v: &mut Vec<T>, x: T) {
        if !v.contains(&x) {
            v.push(x);
        }
    }
    let mut datasets: Vec<&str> = Vec::new();
    let mut methods: Vec<Method> = Vec::new();
    let mut gammas: Vec<BudgetRatio> = Vec::new();
    let mut cell: HashMap<(&str, Method, BudgetRatio), &SelectionReport> = HashMap::new();
    for r in reports {
        push_unique(&mut datasets, r.dataset.as_str());
        push_unique(&mut methods, r.method);
        push_unique(&mut gammas, r.gamma);
        cell.insert((r.dataset.as_str(), r.method, r.gamma), r);
    }
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["dataset".to_string(), "metric".into(), "gamma".into()];
    header.extend(methods.iter().map(|m| m.to_string()));
    wtr.write_record(&header)?;
    let pct = |v: Option<f64>| match v {
        Some(x) if x.is_finite() => format!("{:.1}", 100.0 * x),
        _ => String::new(),
    };
    for ds in &datasets {
        for metric in ["pearcorr", "relacc"] {
            let value = |r: &SelectionReport| {
                if metric == "pearcorr" {
                    r.pearcorr
                } else {
                    r.relacc
                }
            };
            for g in &gammas {
                let mut row = vec![ds.to_string(), metric.to_string(), g.to_string()];
                for m in &methods {
                    row.push(pct(cell.get(&(*ds, *m, *g)).map(|r| value(r))));
                }
                wtr.write_record(&row)?;
            }
            let mut row = vec![ds.to_string(), metric.to_string(), "avg".to_string()];
            for m in &methods {
                let vals: Vec<f64> = gammas
                    .iter()
                    .filter_map(|g| cell.get(&(*ds, *m, *g)).map(|r| value(r)))
                    .collect();
                let avg = (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
                row.push(pct(avg));
            }
            wtr.write_record(&row)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{embedded_fixtures, Arch};
    use approx::assert_relative_eq;

    fn meta(id: &str, n: u64, family: &str) -> ModelMeta {
        ModelMeta {
            model_id: id.into(),
            n_params: n,
            family: family.into(),
            arch: Arch::DecoderOnly,
        }
    }

    fn map(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn model_size_examples() {
        assert_eq!(score_model_size(&meta("a", 1, "f")), 0.0);
        assert_relative_eq!(score_model_size(&meta("a", 20, "f")), 20f64.ln());
        assert!((score_model_size(&meta("a", 3f64.exp().round() as u64, "f")) - 3.0).abs() < 0.02);
    }

    #[test]
    fn zero_shot_and_sub_tuning_examples() {
        let s = embedded_fixtures();
        assert_eq!(
            score_zero_shot(s.curve("Cerebras-GPT-2.7B", "flan").unwrap()).unwrap(),
            -2.914
        );
        let gpt2 = s.curve("GPT-2", "flan").unwrap();
        assert_eq!(
            score_sub_tuning(gpt2, BudgetRatio::inverse_pow2(3), 1_638_400).unwrap(),
            -2.449
        );
        assert_eq!(
            score_sub_tuning(gpt2, BudgetRatio::ONE, 1_638_400).unwrap(),
            -1.791
        );
        let no_zero = LossCurve::new(
            "m",
            "d",
            [Point {
                size: 200,
                loss: 2.0,
            }],
        )
        .unwrap();
        assert!(score_zero_shot(&no_zero).is_err());
        assert!(score_sub_tuning(gpt2, BudgetRatio::inverse_pow2(9), 1000).is_err());
    }

    #[test]
    fn pearcorr_examples() {
        assert_relative_eq!(
            pearcorr(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(),
            1.0
        );
        assert_relative_eq!(
            pearcorr(&[1.0, 2.0, 3.0], &[30.0, 20.0, 10.0]).unwrap(),
            -1.0
        );
        // Means 2.5 / 2.5; deviations (-1.5,-0.5,0.5,1.5) and (-1.5,0.5,-0.5,1.5):
        // Sxy = 2.25 - 0.25 - 0.25 + 2.25 = 4, Sxx = Syy = 5 -> r = 0.8.
        assert_relative_eq!(
            pearcorr(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap(),
            0.8,
            max_relative = 1e-14
        );
        assert!(matches!(
            pearcorr(&[1.0, 1.0], &[1.0, 2.0]),
            Err(Error::Degenerate(_))
        ));
        assert!(pearcorr(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn relacc_examples() {
        let losses = map(&[("a", 1.0), ("b", 2.0), ("c", 3.0)]);
        assert_eq!(
            relacc(&map(&[("a", 9.0), ("b", 1.0), ("c", 0.0)]), &losses).unwrap(),
            1.0
        );
        assert_eq!(
            relacc(&map(&[("a", 0.0), ("b", 1.0), ("c", 9.0)]), &losses).unwrap(),
            0.0
        );
        assert_eq!(
            relacc(&map(&[("a", 0.0), ("b", 9.0), ("c", 0.0)]), &losses).unwrap(),
            0.5
        );
        let flat = map(&[("a", 1.0), ("b", 1.0)]);
        assert!(matches!(relacc(&flat, &flat), Err(Error::Degenerate(_))));
    }

    #[test]
    fn ties_go_to_smallest_id() {
        let s = map(&[("b", 1.0), ("a", 1.0), ("c", 0.5)]);
        assert_eq!(select_top(&s), Some("a"));
        let s = map(&[
            ("b", f64::NEG_INFINITY),
            ("a", f64::NEG_INFINITY),
            ("c", f64::NEG_INFINITY),
        ]);
        assert_eq!(select_top(&s), Some("a"));
    }

    #[test]
    fn stratify_examples() {
        let s = embedded_fixtures();
        let counts: Vec<usize> = [7_000_000_000u64, 2_000_000_000, 1_400_000_000, 700_000_000]
            .iter()
            .map(|&t| stratify(s.models(), t).unwrap().len())
            .collect();
        assert_eq!(counts, vec![30, 25, 21, 15]);
        assert_eq!(stratify(s.models(), u64::MAX).unwrap(), s.models());
        assert!(stratify(s.models(), 1).is_err());
    }

    #[test]
    fn family_representatives_pick_largest() {
        let ms = vec![
            meta("GPT-2", 124, "gpt2"),
            meta("GPT-2-medium", 354, "gpt2"),
            meta("GPT-2-large", 774, "gpt2"),
            meta("GPT-2-xl", 1500, "gpt2"),
        ];
        assert_eq!(family_representatives(&ms), vec!["GPT-2-xl"]);
        let ms = vec![meta("b", 5, "x"), meta("a", 5, "x"), meta("c", 1, "y")];
        assert_eq!(family_representatives(&ms), vec!["a", "c"]);
    }

    #[test]
    fn flops_examples() {
        let one = [meta("m", 100_000_000, "f")];
        let f = flops_estimates(&one, 1_000_000, 1, 1, BudgetRatio::ONE);
        assert_eq!(f.c_full, 6e14);
        assert_eq!(f.c_sub, f.c_full);
        for g in BudgetRatio::standard_sweep() {
            let f = flops_estimates(&one, 1_638_400, 30, 3, g);
            assert_eq!(f.c_sub, g.as_f64() * f.c_full);
            assert!(f.c_ats <= 2.0 * g.as_f64() * f.c_full);
            assert!(f.c_ats >= f.c_sub);
        }
    }

    #[test]
    fn law_fit_points_follow_halving_sequence() {
        let s = embedded_fixtures();
        let pts = law_fit_points(
            s.curve("GPT-2", "flan").unwrap(),
            BudgetRatio::inverse_pow2(9),
            1_638_400,
        );
        assert_eq!(
            pts.iter().map(|p| p.size).collect::<Vec<_>>(),
            vec![200, 400, 800, 1600, 3200]
        );
    }

    #[test]
    fn methods_round_trip_names() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("best".parse::<Method>().is_err());
    }
}
