//! Library side of the `termfit` command line: configuration, the `fit`,
//! `price`, `curve` and `synth` commands and their artifacts.

mod artifacts;
mod config;
mod grid;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use termfit::ingest::{build_observations, dedupe_last, parse_closed_operations, parse_offers, IngestError};
use termfit::optim::OptimError;
use termfit::testkit::{generate_instance, reference_params};
use termfit::{build_schedule, constraint_system, multistart, price, BondSpec, CurveParams, DayCount, ModelKind};
use termfit::{MultistartReport, ObjectiveProblem, ObjectiveSpec};

pub use artifacts::{FailedOptimizer, FitArtifacts};
pub use config::{FitConfig, OptimizerKind};
pub use grid::TenorGrid;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("{path}: {message}")]
    Input { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid tenor grid `{0}`: {1}")]
    Grid(String, &'static str),
    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("all {0} optimizers failed")]
    AllFailed(usize),
}

impl CliError {
    /// 0 success, 1 every optimizer failed, 2 anything wrong with the inputs.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::AllFailed(_) => 1,
            _ => 2,
        }
    }

    fn input(path: &Path, message: impl ToString) -> Self {
        CliError::Input {
            path: path.display().to_string(),
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitRequest {
    pub model: ModelKind,
    pub optimizers: Vec<OptimizerKind>,
    pub n_starts: usize,
    pub master_seed: u64,
    pub valuation_date: NaiveDate,
    pub operations: PathBuf,
    pub offers: PathBuf,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    /// Overrides `data.weight_cap` from the config file.
    pub weight_cap: Option<f64>,
}

/// What `fit` produced, in request order.
#[derive(Debug)]
pub struct FitSummary {
    pub reports: Vec<MultistartReport>,
    pub failures: Vec<FailedOptimizer>,
    pub excluded: usize,
    pub artifacts: FitArtifacts,
}

/// Ingests the books, runs every requested optimizer from the same seeds and
/// writes the reports, comparison table, best parameters and curve samples.
pub fn cmd_fit(req: &FitRequest) -> Result<FitSummary, CliError> {
    if req.n_starts == 0 {
        return Err(CliError::Config("--starts must be at least 1".into()));
    }
    if req.optimizers.is_empty() {
        return Err(CliError::Config("no optimizer requested".into()));
    }
    let mut config = match &req.config {
        Some(path) => FitConfig::load(path)?,
        None => FitConfig::default(),
    };
    if req.weight_cap.is_some() {
        config.data.weight_cap = req.weight_cap;
    }
    config.validate()?;

    let (ops, mut exclusions) = parse_closed_operations(&req.operations, req.valuation_date)?;
    let offers = parse_offers(&req.offers)?;
    let outcome = build_observations(&dedupe_last(ops), &offers, req.valuation_date, &config.data);
    exclusions.extend(outcome.exclusions);
    for e in &exclusions {
        log::warn!("excluded {}: {}", e.instrument_id, e.reason);
    }

    let artifacts = FitArtifacts::new(&req.out, req.model);
    fs::create_dir_all(&req.out).map_err(|source| CliError::Output {
        path: req.out.display().to_string(),
        source,
    })?;
    artifacts.write_exclusions(&exclusions)?;

    let spec = ObjectiveSpec::new(req.model, outcome.observations).map_err(|e| {
        CliError::input(
            &req.operations,
            format!("{e} ({} instruments excluded)", exclusions.len()),
        )
    })?;
    let cs = constraint_system(req.model);
    let problem = ObjectiveProblem::new(&spec, &cs).map_err(|e| CliError::Config(e.to_string()))?;

    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for kind in &req.optimizers {
        let optimizer = config.optimizer(*kind);
        log::info!("{}: {} starts, seed {}", kind.name(), req.n_starts, req.master_seed);
        match multistart(optimizer.as_ref(), &problem, req.n_starts, req.master_seed) {
            Ok(mut report) => {
                report.attach_goodness_of_fit(&spec);
                artifacts.write_report(&report)?;
                reports.push(report);
            }
            Err(e) => {
                log::error!("{} failed: {e}", kind.name());
                failures.push(FailedOptimizer {
                    optimizer: kind.name().to_string(),
                    error: e.to_string(),
                });
            }
        }
    }
    artifacts.write_failures(&failures)?;
    if reports.is_empty() {
        return Err(CliError::AllFailed(failures.len()));
    }
    artifacts.write_comparison(&reports)?;
    artifacts.write_best(&reports)?;
    Ok(FitSummary {
        reports,
        failures,
        excluded: exclusions.len(),
        artifacts,
    })
}

/// Accepts either a bare parameter object or a `best_params.json` file.
#[derive(Deserialize)]
#[serde(untagged)]
enum ParamsFile {
    Bare(CurveParams),
    Wrapped { params: CurveParams },
}

pub fn load_params(path: &Path) -> Result<CurveParams, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::input(path, e))?;
    match serde_json::from_str::<ParamsFile>(&text) {
        Ok(ParamsFile::Bare(p)) | Ok(ParamsFile::Wrapped { params: p }) => Ok(p),
        Err(_) => Err(CliError::input(path, "not a curve parameter object")),
    }
}

/// One row of a bonds file for `price`.
#[derive(Debug, Clone, Deserialize)]
struct BondRow {
    id: String,
    issue_date: NaiveDate,
    maturity_date: NaiveDate,
    coupon_rate: f64,
    periodicity: u32,
    face: f64,
    #[serde(default)]
    currency: String,
    #[serde(default)]
    next_coupon_date: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PricedBond {
    pub id: String,
    pub maturity_years: f64,
    pub dirty_price: f64,
}

#[derive(Debug, Clone, Default)]
pub struct PriceOutcome {
    pub priced: Vec<PricedBond>,
    /// Bonds left out, with the reason.
    pub skipped: Vec<(String, String)>,
}

/// Model dirty prices of the bonds in `bonds` (CSV) under the curve in
/// `params` (JSON), written as CSV to `out`.
pub fn cmd_price(
    params: &Path,
    bonds: &Path,
    valuation: NaiveDate,
    day_count: DayCount,
    out: impl Write,
) -> Result<PriceOutcome, CliError> {
    let curve = load_params(params)?;
    let file = fs::File::open(bonds).map_err(|e| CliError::input(bonds, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let mut outcome = PriceOutcome::default();
    for (i, row) in rdr.deserialize::<BondRow>().enumerate() {
        let row = row.map_err(|e| CliError::input(bonds, format!("row {}: {e}", i + 2)))?;
        let bond = BondSpec {
            id: row.id,
            issue_date: row.issue_date,
            maturity_date: row.maturity_date,
            coupon_rate: row.coupon_rate,
            periodicity: row.periodicity,
            face: row.face,
            currency: row.currency,
            next_coupon_date: row.next_coupon_date,
        };
        match build_schedule(&bond, valuation, day_count) {
            Ok(schedule) => outcome.priced.push(PricedBond {
                maturity_years: schedule.maturity(),
                dirty_price: price(&schedule, &curve),
                id: bond.id,
            }),
            Err(e) => {
                log::warn!("skipping {}: {e}", bond.id);
                outcome.skipped.push((bond.id, e.to_string()));
            }
        }
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "maturity_years", "dirty_price"])
        .and_then(|_| {
            for p in &outcome.priced {
                w.write_record([p.id.clone(), p.maturity_years.to_string(), p.dirty_price.to_string()])?;
            }
            w.flush().map_err(csv::Error::from)
        })
        .map_err(|e| CliError::Output {
            path: "price output".into(),
            source: std::io::Error::other(e),
        })?;
    Ok(outcome)
}

/// Spot and forward rates of the curve in `params` over `grid`, as CSV.
pub fn cmd_curve(params: &Path, grid: &TenorGrid, out: impl Write) -> Result<usize, CliError> {
    let curve = load_params(params)?;
    artifacts::write_curve(&curve, grid, out).map_err(|source| CliError::Output {
        path: "curve output".into(),
        source,
    })?;
    Ok(grid.len())
}

/// Writes a synthetic book pair priced from the reference curve of `model`.
/// Returns the valuation date the fixture was built for.
pub fn cmd_synth(model: ModelKind, seed: u64, noise: f64, out: &Path) -> Result<NaiveDate, CliError> {
    let inst = generate_instance(&reference_params(model), seed, noise).map_err(|e| CliError::Config(e.to_string()))?;
    fs::create_dir_all(out).map_err(|source| CliError::Output {
        path: out.display().to_string(),
        source,
    })?;
    inst.write_fixture(out).map_err(|e| CliError::input(out, e))?;
    Ok(inst.valuation)
}

impl From<OptimError> for CliError {
    fn from(e: OptimError) -> Self {
        CliError::Config(e.to_string())
    }
}
