//! Loss curves, model metadata and CSV ingestion.
//!
//! Curve files carry one measurement per row (`model,dataset,size,loss`);
//! metadata files carry one model per row (`model,n_params,family,arch`).
//! Size 0 holds the zero-shot loss. Repeated `(model, dataset, size)` rows
//! are averaged into a single point.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

pub const CURVE_HEADER: [&str; 4] = ["model", "dataset", "size", "loss"];
pub const META_HEADER: [&str; 4] = ["model", "n_params", "family", "arch"];

/// One `(size, loss)` measurement. `size` counts training samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub size: u64,
    pub loss: f64,
}

/// Measured test loss of one model on one dataset as a function of
/// fine-tuning set size. Points are strictly increasing in size.
#[derive(Debug, Clone, PartialEq)]
pub struct LossCurve {
    pub model_id: String,
    pub dataset_id: String,
    points: Vec<Point>,
}

impl LossCurve {
    /// Builds a curve from unordered points, averaging duplicate sizes.
    pub fn new(
        model_id: impl Into<String>,
        dataset_id: impl Into<String>,
        points: impl IntoIterator<Item = Point>,
    ) -> Result<Self> {
        let mut acc: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
        for p in points {
            if !(p.loss.is_finite() && p.loss > 0.0) {
                return Err(Error::Validation {
                    line: 0,
                    msg: format!("loss must be positive and finite, got {}", p.loss),
                });
            }
            let e = acc.entry(p.size).or_insert((0.0, 0));
            e.0 += p.loss;
            e.1 += 1;
        }
        let points = acc
            .into_iter()
            .map(|(size, (sum, n))| Point {
                size,
                loss: sum / n as f64,
            })
            .collect();
        Ok(Self {
            model_id: model_id.into(),
            dataset_id: dataset_id.into(),
            points,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Points with size > 0, i.e. everything except the zero-shot entry.
    pub fn nonzero_points(&self) -> &[Point] {
        match self.points.first() {
            Some(p) if p.size == 0 => &self.points[1..],
            _ => &self.points,
        }
    }

    pub fn sizes(&self) -> impl Iterator<Item = u64> + '_ {
        self.points.iter().map(|p| p.size)
    }

    pub fn loss_at(&self, size: u64) -> Option<f64> {
        self.points
            .binary_search_by_key(&size, |p| p.size)
            .ok()
            .map(|i| self.points[i].loss)
    }

    pub fn zero_shot_loss(&self) -> Option<f64> {
        self.loss_at(0)
    }

    /// Largest nonzero measured size that does not exceed `max_size`.
    pub fn largest_size_at_most(&self, max_size: u64) -> Option<u64> {
        self.nonzero_points()
            .iter()
            .rev()
            .map(|p| p.size)
            .find(|&s| s <= max_size)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Keeps the points with `0 < size <= max_size`, plus the zero-shot point
/// when `include_zero` is set.
pub fn restrict_sizes(curve: &LossCurve, max_size: u64, include_zero: bool) -> Result<LossCurve> {
    let kept: Vec<Point> = curve
        .points
        .iter()
        .filter(|p| (p.size > 0 && p.size <= max_size) || (include_zero && p.size == 0))
        .copied()
        .collect();
    if !kept.iter().any(|p| p.size > 0) {
        return Err(Error::EmptyBudget { max_size });
    }
    Ok(LossCurve {
        model_id: curve.model_id.clone(),
        dataset_id: curve.dataset_id.clone(),
        points: kept,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arch {
    DecoderOnly,
    EncoderDecoder,
    EncoderDecoderMoe,
}

impl Arch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Arch::DecoderOnly => "decoder-only",
            Arch::EncoderDecoder => "encoder-decoder",
            Arch::EncoderDecoderMoe => "encoder-decoder-moe",
        }
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Arch {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "decoder-only" => Ok(Arch::DecoderOnly),
            "encoder-decoder" => Ok(Arch::EncoderDecoder),
            "encoder-decoder-moe" => Ok(Arch::EncoderDecoderMoe),
            other => Err(format!("unknown architecture `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModelMeta {
    pub model_id: String,
    pub n_params: u64,
    pub family: String,
    pub arch: Arch,
}

/// Immutable collection of curves keyed by `(model, dataset)` plus optional
/// model metadata.
#[derive(Debug, Clone, Default)]
pub struct CurveStore {
    curves: BTreeMap<(String, String), LossCurve>,
    models: Vec<ModelMeta>,
    model_index: HashMap<String, usize>,
    /// Model ids in first-seen order across the curve input.
    model_order: Vec<String>,
}

impl CurveStore {
    pub fn from_curves(curves: impl IntoIterator<Item = LossCurve>) -> Self {
        let mut store = CurveStore::default();
        for c in curves {
            if !store.model_order.contains(&c.model_id) {
                store.model_order.push(c.model_id.clone());
            }
            store
                .curves
                .insert((c.model_id.clone(), c.dataset_id.clone()), c);
        }
        store
    }

    /// Attaches metadata; every curve's model must resolve.
    pub fn with_models(mut self, models: Vec<ModelMeta>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, m) in models.iter().enumerate() {
            if index.insert(m.model_id.clone(), i).is_some() {
                return Err(Error::Validation {
                    line: 0,
                    msg: format!("duplicate metadata for model `{}`", m.model_id),
                });
            }
        }
        for (model, _) in self.curves.keys() {
            if !index.contains_key(model) {
                return Err(Error::UnknownModel(model.clone()));
            }
        }
        // Metadata order wins: it is the canonical listing of the model set.
        let mut order: Vec<String> = models
            .iter()
            .map(|m| m.model_id.clone())
            .filter(|id| self.model_order.contains(id))
            .collect();
        for id in &self.model_order {
            if !order.contains(id) {
                order.push(id.clone());
            }
        }
        self.model_order = order;
        self.models = models;
        self.model_index = index;
        Ok(self)
    }

    pub fn parse_csv<R: Read>(curves: R) -> Result<Self> {
        Ok(Self::from_curves(parse_curves_csv(curves)?))
    }

    pub fn parse_csv_with_models<R: Read, M: Read>(curves: R, models: M) -> Result<Self> {
        Self::parse_csv(curves)?.with_models(parse_models_csv(models)?)
    }

    pub fn curve(&self, model: &str, dataset: &str) -> Result<&LossCurve> {
        self.curves
            .get(&(model.to_string(), dataset.to_string()))
            .ok_or_else(|| Error::MissingCurve {
                model: model.to_string(),
                dataset: dataset.to_string(),
            })
    }

    pub fn curves(&self) -> impl Iterator<Item = &LossCurve> {
        self.curves.values()
    }

    pub fn meta(&self, model: &str) -> Result<&ModelMeta> {
        self.model_index
            .get(model)
            .map(|&i| &self.models[i])
            .ok_or_else(|| Error::UnknownModel(model.to_string()))
    }

    pub fn has_metadata(&self) -> bool {
        !self.models.is_empty()
    }

    pub fn models(&self) -> &[ModelMeta] {
        &self.models
    }

    /// Model ids in canonical order (metadata order when available).
    pub fn model_ids(&self) -> &[String] {
        &self.model_order
    }

    pub fn datasets(&self) -> Vec<String> {
        let mut ds: Vec<String> = self.curves.keys().map(|(_, d)| d.clone()).collect();
        ds.sort();
        ds.dedup();
        ds
    }

    /// Models that have a curve on `dataset`, in canonical order.
    pub fn models_on(&self, dataset: &str) -> Vec<String> {
        self.model_order
            .iter()
            .filter(|m| {
                self.curves
                    .contains_key(&((*m).clone(), dataset.to_string()))
            })
            .cloned()
            .collect()
    }

    /// Datasets whose curves do not all share one size grid (or a prefix of
    /// the longest grid). Ragged grids are allowed; callers may warn.
    pub fn ragged_datasets(&self) -> Vec<String> {
        let mut out = Vec::new();
        for ds in self.datasets() {
            let grids: Vec<Vec<u64>> = self
                .curves
                .values()
                .filter(|c| c.dataset_id == ds)
                .map(|c| c.sizes().collect())
                .collect();
            let longest = grids
                .iter()
                .max_by_key(|g| g.len())
                .cloned()
                .unwrap_or_default();
            if grids.iter().any(|g| !longest.starts_with(g)) {
                out.push(ds);
            }
        }
        out
    }

    pub fn write_curves_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(CURVE_HEADER)?;
        for model in &self.model_order {
            for c in self.curves.values().filter(|c| &c.model_id == model) {
                for p in &c.points {
                    wtr.write_record([
                        c.model_id.as_str(),
                        c.dataset_id.as_str(),
                        &p.size.to_string(),
                        &p.loss.to_string(),
                    ])?;
                }
            }
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_models_csv<W: Write>(&self, w: W) -> Result<()> {
        write_models_csv(&self.models, w)
    }
}

pub fn write_curve_csv<W: Write>(curve: &LossCurve, w: W) -> Result<()> {
    CurveStore::from_curves([curve.clone()]).write_curves_csv(w)
}

pub fn write_models_csv<W: Write>(models: &[ModelMeta], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(META_HEADER)?;
    for m in models {
        wtr.write_record([
            m.model_id.as_str(),
            &m.n_params.to_string(),
            m.family.as_str(),
            m.arch.as_str(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

fn reader<R: Read>(r: R, expected: &[&str; 4]) -> Result<csv::Reader<R>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(r);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != expected.as_slice() {
        return Err(Error::Parse {
            line: 1,
            msg: format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    Ok(rdr)
}

fn row_fields(rec: &csv::StringRecord, line: u64) -> Result<[&str; 4]> {
    if rec.len() != 4 {
        return Err(Error::Parse {
            line,
            msg: format!("expected 4 fields, found {}", rec.len()),
        });
    }
    Ok([&rec[0], &rec[1], &rec[2], &rec[3]])
}

/// Parses a `model,dataset,size,loss` file into curves, averaging duplicate
/// rows and sorting each curve by size.
pub fn parse_curves_csv<R: Read>(r: R) -> Result<Vec<LossCurve>> {
    let mut rdr = reader(r, &CURVE_HEADER)?;
    let mut grouped: BTreeMap<(String, String), Vec<Point>> = BTreeMap::new();
    let mut order: Vec<(String, String)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let [model, dataset, size, loss] = row_fields(&rec, line)?;
        if model.is_empty() || dataset.is_empty() {
            return Err(Error::Parse {
                line,
                msg: "empty model or dataset field".into(),
            });
        }
        let size: u64 = size.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("size `{size}` is not a non-negative integer"),
        })?;
        let loss: f64 = loss.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("loss `{loss}` is not a decimal number"),
        })?;
        if !(loss.is_finite() && loss > 0.0) {
            return Err(Error::Validation {
                line,
                msg: format!("loss must be positive, got {loss}"),
            });
        }
        let key = (model.to_string(), dataset.to_string());
        if !grouped.contains_key(&key) {
            order.push(key.clone());
        }
        grouped.entry(key).or_default().push(Point { size, loss });
    }
    order
        .into_iter()
        .map(|key| {
            let pts = grouped.remove(&key).unwrap_or_default();
            LossCurve::new(key.0, key.1, pts)
        })
        .collect()
}

pub fn parse_models_csv<R: Read>(r: R) -> Result<Vec<ModelMeta>> {
    let mut rdr = reader(r, &META_HEADER)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let [model, n_params, family, arch] = row_fields(&rec, line)?;
        let n_params: u64 = n_params.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("n_params `{n_params}` is not a positive integer"),
        })?;
        if n_params == 0 {
            return Err(Error::Validation {
                line,
                msg: "n_params must be positive".into(),
            });
        }
        if model.is_empty() || family.is_empty() {
            return Err(Error::Validation {
                line,
                msg: "model and family must be non-empty".into(),
            });
        }
        let arch = arch.parse().map_err(|msg| Error::Parse { line, msg })?;
        out.push(ModelMeta {
            model_id: model.to_string(),
            n_params,
            family: family.to_string(),
            arch,
        });
    }
    Ok(out)
}

pub mod fixtures {
    //! The 30-model loss tables on FLAN, WMT19 and Gigaword, with model
    //! metadata. Sizes run over {0, 200, 400, ..., 1638400}.

    use super::*;

    pub const FLAN_CSV: &str = include_str!("../fixtures/flan.csv");
    pub const WMT19_CSV: &str = include_str!("../fixtures/wmt19.csv");
    pub const GIGAWORD_CSV: &str = include_str!("../fixtures/gigaword.csv");
    pub const MODELS_CSV: &str = include_str!("../fixtures/models.csv");

    pub const DATASETS: [&str; 3] = ["flan", "wmt19", "gigaword"];
    /// Largest measured size, used as the full-data reference point.
    pub const FULL_SIZE: u64 = 1_638_400;

    pub fn embedded_fixtures() -> CurveStore {
        let curves = [FLAN_CSV, WMT19_CSV, GIGAWORD_CSV]
            .into_iter()
            .flat_map(|text| {
                parse_curves_csv(text.as_bytes()).expect("embedded curve fixture parses")
            });
        CurveStore::from_curves(curves)
            .with_models(parse_models_csv(MODELS_CSV.as_bytes()).expect("embedded metadata parses"))
            .expect("embedded fixtures are consistent")
    }
}

pub use fixtures::embedded_fixtures;
