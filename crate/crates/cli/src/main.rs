use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rectlaw::ats::{run_ats, AtsRecord, SigmaEstimator};
use rectlaw::audit::audit;
use rectlaw::curves::fixtures::FULL_SIZE;
use rectlaw::curves::{parse_curves_csv, parse_models_csv};
use rectlaw::fitting::{rmsd_report, write_rmsd_csv};
use rectlaw::selection::{
    pareto_rows, run_selection, write_pareto_csv, write_table_csv, Method, ScoringConfig,
    SelectionTask,
};
use rectlaw::synth::{fixture_grid, generate, SynthSpec};
use rectlaw::{
    fit_law, BudgetRatio, CurveStore, FitConfig, LawKind, LawParams, RectifiedParams, VanillaParams,
};

/// Fit fine-tuning scaling laws to loss curves and rank models for selection.
#[derive(Parser, Debug)]
#[command(name = "rectlaw", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a law to one model's curve and print the result as JSON.
    Fit {
        /// Curves CSV (model,dataset,size,loss).
        curves: PathBuf,
        #[arg(long, value_enum, default_value_t = LawArg::Rectified)]
        law: LawArg,
        #[arg(long)]
        model: String,
        /// Required when the file holds more than one dataset.
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
        starts: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run accept-then-stop extrapolation on one model's curve.
    Ats {
        curves: PathBuf,
        #[arg(long)]
        model: String,
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long, value_parser = parse_ratio)]
        gamma: BudgetRatio,
        #[command(flatten)]
        ats: AtsArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score every model on a dataset and report selection quality.
    Select {
        curves: PathBuf,
        /// Model metadata CSV (model,n_params,family,arch).
        meta: PathBuf,
        #[arg(long)]
        dataset: Option<String>,
        /// One or more budget ratios, e.g. `1/512` or `0.125`.
        #[arg(long, value_parser = parse_ratio, value_delimiter = ',', required = true)]
        gamma: Vec<BudgetRatio>,
        #[arg(long, value_parser = parse_method, value_delimiter = ',', required = true)]
        method: Vec<Method>,
        #[command(flatten)]
        ats: AtsArgs,
        #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
        starts: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a method-by-ratio table CSV.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Fit both laws to every curve and write per-pair RMSD as CSV.
    RmsdReport {
        /// One or more curves CSVs.
        #[arg(required = true)]
        curves: Vec<PathBuf>,
        #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
        starts: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Audit the curvature properties of a law on random parameter draws.
    TheoremCheck {
        #[arg(long, value_enum)]
        law: SingleLaw,
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
        draws: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a synthetic curve drawn from a law as curves CSV.
    Synth {
        #[arg(long, value_enum, default_value_t = SingleLaw::Rectified)]
        law: SingleLaw,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        e: f64,
        /// Pre-learned data size (rectified law).
        #[arg(long, default_value_t = 1.0)]
        d_l: f64,
        /// Outer exponent (vanilla law).
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Data sizes; defaults to 200, 400, ..., 1638400.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<u64>,
        /// Standard deviation of Gaussian noise on the log loss.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "synthetic")]
        model: String,
        #[arg(long, default_value = "synthetic")]
        dataset: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Selection quality against fine-tuning FLOPs, as CSV.
    Pareto {
        curves: PathBuf,
        meta: PathBuf,
        #[arg(long)]
        dataset: Option<String>,
        /// Tokens per sample.
        #[arg(long, default_value_t = 1)]
        t: u64,
        /// Hyper-parameter search rounds.
        #[arg(long, default_value_t = 1)]
        h: u64,
        #[command(flatten)]
        ats: AtsArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args, Debug)]
struct AtsArgs {
    /// Pairs accepted before the stop test applies.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(2..))]
    k: u64,
    /// Stop threshold in residual standard deviations.
    #[arg(long, default_value_t = 5.0)]
    delta: f64,
    #[arg(long, value_enum, default_value_t = SigmaArg::Population)]
    sigma: SigmaArg,
    /// Size the final line is extrapolated to; defaults to the full size.
    #[arg(long)]
    extrapolation_size: Option<u64>,
    #[arg(long = "full-size", default_value_t = FULL_SIZE)]
    ats_full_size: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LawArg {
    Rectified,
    Vanilla,
    Both,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SingleLaw {
    Rectified,
    Vanilla,
}

impl From<SingleLaw> for LawKind {
    fn from(l: SingleLaw) -> Self {
        match l {
            SingleLaw::Rectified => LawKind::Rectified,
            SingleLaw::Vanilla => LawKind::Vanilla,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SigmaArg {
    Population,
    Sample,
}

impl AtsArgs {
    fn scoring(&self, fit: FitConfig) -> Result<ScoringConfig> {
        if !(self.delta > 0.0) {
            return Err(Usage("--delta must be positive".into()).into());
        }
        Ok(ScoringConfig {
            k: self.k as usize,
            delta: self.delta,
            sigma: match self.sigma {
                SigmaArg::Population => SigmaEstimator::Population,
                SigmaArg::Sample => SigmaEstimator::Sample,
            },
            extrapolation_size: self.extrapolation_size,
            fit,
        })
    }
}

/// Bad flag combinations detected after parsing; exits like a clap error.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn parse_ratio(s: &str) -> std::result::Result<BudgetRatio, String> {
    s.parse().map_err(|e: rectlaw::Error| e.to_string())
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: rectlaw::Error| e.to_string())
}

fn load_store(curves: &[PathBuf], meta: Option<&Path>) -> Result<CurveStore> {
    let mut all = Vec::new();
    for path in curves {
        let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        all.extend(parse_curves_csv(f).with_context(|| format!("reading {}", path.display()))?);
    }
    let mut store = CurveStore::from_curves(all);
    if let Some(path) = meta {
        let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let models = parse_models_csv(f).with_context(|| format!("reading {}", path.display()))?;
        store = store.with_models(models)?;
    }
    for d in store.ragged_datasets() {
        eprintln!("warning: models on dataset `{d}` were measured on different size grids");
    }
    Ok(store)
}

fn resolve_dataset(store: &CurveStore, dataset: Option<String>) -> Result<String> {
    let known = store.datasets();
    match dataset {
        Some(d) if known.contains(&d) => Ok(d),
        Some(d) => Err(Usage(format!(
            "dataset `{d}` not found; available: {}",
            known.join(", ")
        ))
        .into()),
        None if known.len() == 1 => Ok(known[0].clone()),
        None => Err(Usage(format!(
            "--dataset is required; available: {}",
            known.join(", ")
        ))
        .into()),
    }
}

fn output(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut w = output(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit {
            curves,
            law,
            model,
            dataset,
            starts,
            seed,
            out,
        } => {
            let store = load_store(&[curves], None)?;
            let dataset = resolve_dataset(&store, dataset)?;
            let curve = store.curve(&model, &dataset)?;
            let cfg = FitConfig {
                n_starts: starts as usize,
                seed,
                ..FitConfig::default()
            };
            let fit = |kind| {
                fit_law(kind, curve.nonzero_points(), &cfg)
                    .with_context(|| format!("fitting {model}"))
            };
            match law {
                LawArg::Rectified => write_json(out.as_deref(), &fit(LawKind::Rectified)?),
                LawArg::Vanilla => write_json(out.as_deref(), &fit(LawKind::Vanilla)?),
                LawArg::Both => write_json(
                    out.as_deref(),
                    &[fit(LawKind::Rectified)?, fit(LawKind::Vanilla)?],
                ),
            }
        }
        Command::Ats {
            curves,
            model,
            dataset,
            gamma,
            ats,
            out,
        } => {
            let store = load_store(&[curves], None)?;
            let dataset = resolve_dataset(&store, dataset)?;
            let curve = store.curve(&model, &dataset)?;
            let cfg = ats
                .scoring(FitConfig::default())?
                .ats_config(ats.ats_full_size, gamma);
            let result = run_ats(curve, &cfg)?;
            write_json(out.as_deref(), &AtsRecord::new(curve, &cfg, &result))
        }
        Command::Select {
            curves,
            meta,
            dataset,
            gamma,
            method,
            ats,
            starts,
            seed,
            out,
            table,
        } => {
            let store = load_store(&[curves], Some(&meta))?;
            let dataset = resolve_dataset(&store, dataset)?;
            let fit = FitConfig {
                n_starts: starts as usize,
                seed,
                ..FitConfig::default()
            };
            let cfg = ats.scoring(fit)?;
            let mut reports = Vec::new();
            for &m in &method {
                for &g in &gamma {
                    let task =
                        SelectionTask::over_dataset(&store, &dataset, g, ats.ats_full_size, m);
                    reports.push(
                        run_selection(&store, &task, &cfg)
                            .with_context(|| format!("{m} at gamma {g}"))?,
                    );
                }
            }
            if let Some(path) = table {
                let f =
                    File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                write_table_csv(&reports, BufWriter::new(f))?;
            }
            if reports.len() == 1 {
                write_json(out.as_deref(), &reports[0])
            } else {
                write_json(out.as_deref(), &reports)
            }
        }
        Command::RmsdReport {
            curves,
            starts,
            seed,
            out,
        } => {
            let store = load_store(&curves, None)?;
            let cfg = FitConfig {
                n_starts: starts as usize,
                seed,
                ..FitConfig::default()
            };
            let rows = rmsd_report(&store, &cfg);
            for r in rows.iter().filter(|r| !r.is_ok()) {
                eprintln!(
                    "warning: {}/{}: {}",
                    r.model,
                    r.dataset,
                    r.error.as_deref().unwrap_or("fit failed")
                );
            }
            write_rmsd_csv(&rows, output(out.as_deref())?)?;
            Ok(())
        }
        Command::TheoremCheck { law, draws, seed } => {
            let summary = audit(law.into(), draws as usize, seed)?;
            let mut w = io::stdout().lock();
            writeln!(w, "{}/{} pass", summary.passed, summary.draws)?;
            for f in &summary.failures {
                writeln!(
                    w,
                    "draw {}: {} ({})",
                    f.draw,
                    serde_json::to_string(&f.params)?,
                    f.detail
                )?;
            }
            if !summary.all_pass() {
                anyhow::bail!(
                    "{} of {} draws failed",
                    summary.failures.len(),
                    summary.draws
                );
            }
            Ok(())
        }
        Command::Synth {
            law,
            b,
            beta,
            e,
            d_l,
            alpha,
            sizes,
            noise,
            seed,
            model,
            dataset,
            out,
        } => {
            let params: LawParams = match law {
                SingleLaw::Rectified => RectifiedParams::new(b, d_l, beta, e).into(),
                SingleLaw::Vanilla => VanillaParams::new(b, beta, e, alpha).into(),
            };
            let sizes = if sizes.is_empty() {
                fixture_grid()
            } else {
                sizes
            };
            let mut spec = SynthSpec::new(params, sizes).with_noise(noise, seed);
            spec.model_id = model;
            spec.dataset_id = dataset;
            let curve = generate(&spec)?;
            CurveStore::from_curves([curve]).write_curves_csv(output(out.as_deref())?)?;
            Ok(())
        }
        Command::Pareto {
            curves,
            meta,
            dataset,
            t,
            h,
            ats,
            out,
        } => {
            let store = load_store(&[curves], Some(&meta))?;
            let dataset = resolve_dataset(&store, dataset)?;
            let cfg = ats.scoring(FitConfig::default())?;
            let rows = pareto_rows(
                &store,
                &dataset,
                ats.ats_full_size,
                t,
                h,
                &BudgetRatio::standard_sweep(),
                &cfg,
            )?;
            write_pareto_csv(&rows, output(out.as_deref())?)?;
            Ok(())
        }
    }
}

/// 2 for bad input (flags, files, contents), 1 for failures computing on
/// valid input.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() || cause.is::<io::Error>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<rectlaw::Error>() {
            return if e.is_input_error() { 2 } else { 1 };
        }
    }
    1
}

fn is_broken_pipe(err: &anyhow::Error) -> bool {
    err.chain().any(|c| {
        c.downcast_ref::<io::Error>()
            .is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        // Reader went away (e.g. `| head`); nothing left to report.
        Err(err) if is_broken_pipe(&err) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
