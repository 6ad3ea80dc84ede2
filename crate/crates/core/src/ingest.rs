//! Market-data ingestion: the book of closed operations, the books of buy
//! and sell offers, and their assembly into weighted observations.
//!
//! Inputs are CSV files with fixed headers (see [`OPERATION_COLUMNS`] and
//! [`OFFER_COLUMNS`]). Dates are ISO `YYYY-MM-DD`; prices are quoted per 100
//! of face.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bond::{accrued_interest, build_schedule, BondSpec, DayCount};
use crate::objective::{bid_ask_spread, BondObservation, Offer, Side, SPREAD_FLOOR};

pub const OPERATION_COLUMNS: [&str; 16] = [
    "instrument_id",
    "issuer",
    "classification",
    "isin",
    "currency",
    "issue_date",
    "maturity_date",
    "next_coupon_date",
    "periodicity",
    "net_rate",
    "rate_type",
    "operation_type",
    "operation_date",
    "nominal_yield",
    "clean_price",
    "transaction_value",
];

pub const OFFER_COLUMNS: [&str; 4] = ["instrument_id", "side", "yield", "facial"];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot open {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}, column `{column}`: {message}")]
    Field { row: u64, column: String, message: String },
    #[error("write failed: {0}")]
    Write(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateType {
    Fixed,
    Variable,
}

/// One row of the book of closed operations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedOperation {
    pub instrument_id: String,
    pub issuer: String,
    pub classification: String,
    pub isin: String,
    pub currency: String,
    pub issue_date: NaiveDate,
    pub maturity_date: NaiveDate,
    pub next_coupon_date: Option<NaiveDate>,
    pub periodicity: u32,
    /// Annual coupon rate as a decimal.
    pub net_rate: f64,
    pub rate_type: RateType,
    pub operation_type: String,
    pub operation_date: NaiveDate,
    pub nominal_yield: f64,
    /// Per 100 of face.
    pub clean_price: f64,
    pub transaction_value: f64,
}

impl ClosedOperation {
    pub fn bond_spec(&self, face: f64) -> BondSpec {
        BondSpec {
            id: self.instrument_id.clone(),
            issue_date: self.issue_date,
            maturity_date: self.maturity_date,
            coupon_rate: self.net_rate,
            periodicity: self.periodicity,
            face,
            currency: self.currency.clone(),
            next_coupon_date: self.next_coupon_date,
        }
    }
}

/// One row of the offer books.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfferRecord {
    pub instrument_id: String,
    pub side: Side,
    #[serde(rename = "yield")]
    pub yield_rate: f64,
    pub facial: f64,
}

impl OfferRecord {
    pub fn offer(&self) -> Offer {
        Offer {
            side: self.side,
            yield_rate: self.yield_rate,
            facial: self.facial,
        }
    }
}

/// An instrument left out of the fit, with a machine-readable reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub instrument_id: String,
    pub reason: String,
}

impl Exclusion {
    fn new(id: &str, reason: impl Into<String>) -> Self {
        Exclusion {
            instrument_id: id.to_string(),
            reason: reason.into(),
        }
    }
}

/// Column lookup for one header row, reporting errors by row and name.
struct Columns {
    index: HashMap<String, usize>,
}

impl Columns {
    fn new(headers: &csv::StringRecord, required: &[&str]) -> Result<Self, IngestError> {
        let index: HashMap<String, usize> = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim().to_string(), i))
            .collect();
        if let Some(missing) = required.iter().find(|c| !index.contains_key(**c)) {
            return Err(IngestError::MissingColumn(missing.to_string()));
        }
        Ok(Columns { index })
    }

    fn raw<'r>(&self, rec: &'r csv::StringRecord, col: &str) -> &'r str {
        rec.get(self.index[col]).unwrap_or("").trim()
    }

    fn parse<T: std::str::FromStr>(&self, rec: &csv::StringRecord, row: u64, col: &str) -> Result<T, IngestError>
    where
        T::Err: std::fmt::Display,
    {
        let s = self.raw(rec, col);
        s.parse().map_err(|e: T::Err| field(row, col, format!("`{s}`: {e}")))
    }

    fn date(&self, rec: &csv::StringRecord, row: u64, col: &str) -> Result<NaiveDate, IngestError> {
        let s = self.raw(rec, col);
        NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| field(row, col, format!("`{s}`: {e}")))
    }
}

fn field(row: u64, column: &str, message: impl Into<String>) -> IngestError {
    IngestError::Field {
        row,
        column: column.to_string(),
        message: message.into(),
    }
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads closed operations; variable-rate rows are dropped and returned as
/// exclusions. Rows are numbered from 1 at the header line.
pub fn read_closed_operations<R: Read>(
    reader: R,
    valuation: NaiveDate,
) -> Result<(Vec<ClosedOperation>, Vec<Exclusion>), IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let cols = Columns::new(rdr.headers()?, &OPERATION_COLUMNS)?;
    let mut ops = Vec::new();
    let mut dropped = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i as u64 + 2;
        let id = cols.raw(&rec, "instrument_id").to_string();
        if id.is_empty() {
            return Err(field(row, "instrument_id", "empty"));
        }
        let rate_type = match cols.raw(&rec, "rate_type").to_ascii_lowercase().as_str() {
            "fixed" => RateType::Fixed,
            "variable" => RateType::Variable,
            other => {
                return Err(field(
                    row,
                    "rate_type",
                    format!("`{other}`: expected fixed or variable"),
                ))
            }
        };
        if rate_type == RateType::Variable {
            warn!("row {row}: dropping variable-rate instrument {id}");
            dropped.push(Exclusion::new(&id, "variable rate"));
            continue;
        }
        let next = cols.raw(&rec, "next_coupon_date");
        let next_coupon_date = if next.is_empty() {
            None
        } else {
            Some(cols.date(&rec, row, "next_coupon_date")?)
        };
        let op = ClosedOperation {
            instrument_id: id,
            issuer: cols.raw(&rec, "issuer").to_string(),
            classification: cols.raw(&rec, "classification").to_string(),
            isin: cols.raw(&rec, "isin").to_string(),
            currency: cols.raw(&rec, "currency").to_string(),
            issue_date: cols.date(&rec, row, "issue_date")?,
            maturity_date: cols.date(&rec, row, "maturity_date")?,
            next_coupon_date,
            periodicity: cols.parse(&rec, row, "periodicity")?,
            net_rate: cols.parse(&rec, row, "net_rate")?,
            rate_type,
            operation_type: cols.raw(&rec, "operation_type").to_string(),
            operation_date: cols.date(&rec, row, "operation_date")?,
            nominal_yield: cols.parse(&rec, row, "nominal_yield")?,
            clean_price: cols.parse(&rec, row, "clean_price")?,
            transaction_value: cols.parse(&rec, row, "transaction_value")?,
        };
        if !(op.clean_price > 0.0 && op.clean_price.is_finite()) {
            return Err(field(row, "clean_price", "must be positive"));
        }
        if op.operation_date > valuation {
            return Err(field(
                row,
                "operation_date",
                format!("after valuation date {valuation}"),
            ));
        }
        ops.push(op);
    }
    Ok((ops, dropped))
}

pub fn parse_closed_operations(
    path: &Path,
    valuation: NaiveDate,
) -> Result<(Vec<ClosedOperation>, Vec<Exclusion>), IngestError> {
    read_closed_operations(open(path)?, valuation)
}

pub fn read_offers<R: Read>(reader: R) -> Result<Vec<OfferRecord>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let cols = Columns::new(rdr.headers()?, &OFFER_COLUMNS)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i as u64 + 2;
        let side = match cols.raw(&rec, "side").to_ascii_lowercase().as_str() {
            "buy" => Side::Buy,
            "sell" => Side::Sell,
            other => return Err(field(row, "side", format!("`{other}`: expected buy or sell"))),
        };
        let offer = OfferRecord {
            instrument_id: cols.raw(&rec, "instrument_id").to_string(),
            side,
            yield_rate: cols.parse(&rec, row, "yield")?,
            facial: cols.parse(&rec, row, "facial")?,
        };
        if !(offer.facial > 0.0 && offer.facial.is_finite()) {
            return Err(field(row, "facial", "must be positive"));
        }
        out.push(offer);
    }
    Ok(out)
}

pub fn parse_offers(path: &Path) -> Result<Vec<OfferRecord>, IngestError> {
    read_offers(open(path)?)
}

pub fn write_closed_operations<W: Write>(ops: &[ClosedOperation], writer: W) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(OPERATION_COLUMNS)?;
    for o in ops {
        let next = o.next_coupon_date.map(|d| d.to_string()).unwrap_or_default();
        let rate_type = match o.rate_type {
            RateType::Fixed => "fixed",
            RateType::Variable => "variable",
        };
        w.write_record([
            o.instrument_id.clone(),
            o.issuer.clone(),
            o.classification.clone(),
            o.isin.clone(),
            o.currency.clone(),
            o.issue_date.to_string(),
            o.maturity_date.to_string(),
            next,
            o.periodicity.to_string(),
            o.net_rate.to_string(),
            rate_type.to_string(),
            o.operation_type.clone(),
            o.operation_date.to_string(),
            o.nominal_yield.to_string(),
            o.clean_price.to_string(),
            o.transaction_value.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_offers<W: Write>(offers: &[OfferRecord], writer: W) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(OFFER_COLUMNS)?;
    for o in offers {
        let side = match o.side {
            Side::Buy => "buy",
            Side::Sell => "sell",
        };
        w.write_record([
            o.instrument_id.clone(),
            side.to_string(),
            o.yield_rate.to_string(),
            o.facial.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes one JSON object per line.
pub fn write_exclusions<W: Write>(exclusions: &[Exclusion], mut writer: W) -> Result<(), IngestError> {
    for e in exclusions {
        let line = serde_json::to_string(e).expect("exclusion serializes");
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

/// Keeps only the latest operation per instrument. A date tie goes to the
/// later row; output follows first appearance.
pub fn dedupe_last(ops: Vec<ClosedOperation>) -> Vec<ClosedOperation> {
    let mut slot: HashMap<String, usize> = HashMap::new();
    let mut out: Vec<ClosedOperation> = Vec::new();
    for op in ops {
        match slot.get(&op.instrument_id) {
            Some(&i) => {
                if op.operation_date >= out[i].operation_date {
                    out[i] = op;
                }
            }
            None => {
                slot.insert(op.instrument_id.clone(), out.len());
                out.push(op);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestOptions {
    /// Face amount the per-100 quotes are scaled to.
    pub face: f64,
    pub day_count: DayCount,
    /// Largest admissible share `w_k / Σw` of a single observation.
    pub weight_cap: Option<f64>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            face: 100.0,
            day_count: DayCount::default(),
            weight_cap: None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct IngestOutcome {
    pub observations: Vec<BondObservation>,
    pub exclusions: Vec<Exclusion>,
}

/// Turns deduplicated operations and the offer books into observations.
///
/// Dirty price is `clean·face/100` plus accrued interest; staleness is the
/// number of calendar days from trade to valuation; the spread comes from
/// the instrument's offers. Instruments without a usable spread or schedule
/// are excluded; with a weight cap, the largest over-cap share is removed
/// repeatedly until every share is within the cap.
pub fn build_observations(
    ops: &[ClosedOperation],
    offers: &[OfferRecord],
    valuation: NaiveDate,
    options: &IngestOptions,
) -> IngestOutcome {
    let mut book: HashMap<&str, Vec<Offer>> = HashMap::new();
    for o in offers {
        book.entry(o.instrument_id.as_str()).or_default().push(o.offer());
    }
    let mut outcome = IngestOutcome::default();
    for op in ops {
        let id = op.instrument_id.as_str();
        let spread = match bid_ask_spread(book.get(id).map(Vec::as_slice).unwrap_or(&[])) {
            Ok(h) => h,
            Err(crate::objective::ObjectiveError::DegenerateSpread) => {
                warn!("{id}: zero bid-ask spread, floored at {SPREAD_FLOOR}");
                SPREAD_FLOOR
            }
            Err(e) => {
                outcome.exclusions.push(Exclusion::new(id, e.reason()));
                continue;
            }
        };
        let bond = op.bond_spec(options.face);
        let schedule = match build_schedule(&bond, valuation, options.day_count) {
            Ok(s) => s,
            Err(e) => {
                let reason = match e {
                    crate::bond::PricingError::Matured { .. } => "matured",
                    _ => "invalid bond",
                };
                outcome.exclusions.push(Exclusion::new(id, reason));
                continue;
            }
        };
        let accrued = accrued_interest(&bond, valuation, options.day_count).unwrap_or(0.0);
        let staleness = (valuation - op.operation_date).num_days().max(0) as u32;
        outcome.observations.push(BondObservation {
            observed_dirty_price: op.clean_price * options.face / 100.0 + accrued,
            bond,
            schedule,
            staleness_days: staleness,
            spread,
        });
    }
    if let Some(cap) = options.weight_cap {
        apply_weight_cap(&mut outcome, cap);
    }
    outcome
}

fn apply_weight_cap(outcome: &mut IngestOutcome, cap: f64) {
    loop {
        let total: f64 = outcome.observations.iter().map(BondObservation::weight).sum();
        let Some((k, share)) = outcome
            .observations
            .iter()
            .map(|o| o.weight() / total)
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
        else {
            return;
        };
        if share <= cap * (1.0 + 1e-12) {
            return;
        }
        let removed = outcome.observations.remove(k);
        outcome
            .exclusions
            .push(Exclusion::new(&removed.bond.id, "weight share above cap"));
    }
}
