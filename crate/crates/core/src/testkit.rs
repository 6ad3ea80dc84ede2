//! Synthetic instances and independent reference computations.
//!
//! The oracles here deliberately avoid the library's own helpers: spot
//! rates, discounting and weights are recomputed term by term, so a bug in
//! the optimized code paths shows up as a disagreement.

use std::io::Write;

use chrono::{Days, Months, NaiveDate};
use serde::Serialize;
use thiserror::Error;

use crate::bond::{accrued_interest, build_schedule, BondSpec, DayCount, PricingError};
use crate::curve::{constraint_system, CurveParams, ModelKind};
use crate::ingest::{write_closed_operations, write_offers, ClosedOperation, IngestError, OfferRecord, RateType};
use crate::objective::{BondObservation, ObjectiveError, ObjectiveSpec, Side};
use crate::optim::RngStream;

pub const FACE: f64 = 100.0;

/// Maturities in months after the valuation date. The first four are zero
/// coupon; the rest pay semiannually on a shared calendar that last paid two
/// months before valuation.
const ZERO_MONTHS: [u32; 4] = [3, 6, 9, 12];
const COUPON_MONTHS: [u32; 21] = [
    16, 22, 28, 34, 40, 46, 52, 58, 64, 70, 76, 82, 94, 106, 118, 130, 142, 148, 154, 166, 178,
];

#[derive(Debug, Error)]
pub enum TestkitError {
    #[error("true parameters are infeasible: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Pricing(#[from] PricingError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// A 25-bond instance priced from known parameters.
#[derive(Debug, Clone, Serialize)]
pub struct SyntheticInstance {
    pub true_params: CurveParams,
    pub valuation: NaiveDate,
    pub seed: u64,
    pub noise: f64,
    pub observations: Vec<BondObservation>,
    /// Price perturbation added to each observation (all zero without noise).
    pub noise_draws: Vec<f64>,
}

pub fn valuation_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2015, 3, 17).expect("valid date")
}

/// Parameters used by the recovery tests.
pub fn reference_params(model: ModelKind) -> CurveParams {
    match model {
        ModelKind::NelsonSiegel => CurveParams::nelson_siegel(0.08, -0.03, 0.04, 0.6),
        ModelKind::Svensson => CurveParams::svensson(0.08, -0.03, 0.04, 0.6, 0.05, 0.15),
    }
    .expect("reference parameters are valid")
}

/// Rounds to a multiple of 2⁻²⁰ so that sums of such values are exact.
fn dyadic(x: f64) -> f64 {
    let s = (1u64 << 20) as f64;
    (x * s).round() / s
}

/// Builds the instance deterministically from `seed`. Spreads are drawn
/// from `U(0.001, 0.02)`, staleness from `{0, …, 5}` days, and with
/// `noise > 0` each dirty price is perturbed by `N(0, noise)`.
pub fn generate_instance(true_params: &CurveParams, seed: u64, noise: f64) -> Result<SyntheticInstance, TestkitError> {
    let cs = constraint_system(true_params.kind());
    if !cs.is_strictly_feasible(&true_params.to_vec()) {
        return Err(TestkitError::Infeasible(
            cs.violations(&true_params.to_vec()).join(", "),
        ));
    }
    let valuation = valuation_date();
    let mut rng = RngStream::new(seed);
    let mut observations = Vec::with_capacity(25);
    let mut noise_draws = Vec::with_capacity(25);
    let months = ZERO_MONTHS
        .iter()
        .map(|m| (*m, true))
        .chain(COUPON_MONTHS.iter().map(|m| (*m, false)));
    for (k, (m, zero)) in months.enumerate() {
        let maturity = valuation + Months::new(m);
        let id = format!("SYN{:02}", k + 1);
        let bond = if zero {
            BondSpec::zero_coupon(id, valuation - Months::new(12), maturity, FACE)
        } else {
            let coupon = (rng.uniform_in(0.04, 0.10) * 400.0).round() / 400.0;
            BondSpec::fixed_coupon(id, maturity - Months::new(12 * (m / 12 + 1)), maturity, coupon, 2, FACE)
        };
        let schedule = build_schedule(&bond, valuation, DayCount::Actual365Fixed)?;
        let spread = dyadic(rng.uniform_in(0.001, 0.02));
        let staleness = rng.index(6) as u32;
        let eps = if noise > 0.0 { rng.normal(0.0, noise) } else { 0.0 };
        let exact = crate::bond::price(&schedule, true_params);
        observations.push(BondObservation {
            bond,
            schedule,
            observed_dirty_price: exact + eps,
            staleness_days: staleness,
            spread,
        });
        noise_draws.push(eps);
    }
    Ok(SyntheticInstance {
        true_params: *true_params,
        valuation,
        seed,
        noise,
        observations,
        noise_draws,
    })
}

impl SyntheticInstance {
    pub fn objective(&self, model: ModelKind) -> Result<ObjectiveSpec, ObjectiveError> {
        ObjectiveSpec::new(model, self.observations.clone())
    }

    /// Rows in the closed-operations schema that ingest back to this instance.
    pub fn closed_operations(&self) -> Result<Vec<ClosedOperation>, TestkitError> {
        let mut ops = Vec::with_capacity(self.observations.len());
        for o in &self.observations {
            let accrued = accrued_interest(&o.bond, self.valuation, DayCount::Actual365Fixed)?;
            let clean = (o.observed_dirty_price - accrued) * 100.0 / o.bond.face;
            ops.push(ClosedOperation {
                instrument_id: o.bond.id.clone(),
                issuer: "SYNTH".into(),
                classification: if o.bond.is_zero_coupon() { "zero" } else { "fixed" }.into(),
                isin: format!("XS{}", o.bond.id),
                currency: o.bond.currency.clone(),
                issue_date: o.bond.issue_date,
                maturity_date: o.bond.maturity_date,
                next_coupon_date: None,
                periodicity: o.bond.periodicity,
                net_rate: o.bond.coupon_rate,
                rate_type: RateType::Fixed,
                operation_type: "secondary".into(),
                operation_date: self.valuation - Days::new(o.staleness_days as u64),
                nominal_yield: self.nominal_yield(o),
                clean_price: clean,
                transaction_value: clean * 10_000.0,
            });
        }
        Ok(ops)
    }

    fn nominal_yield(&self, o: &BondObservation) -> f64 {
        dyadic(self.true_params.spot_at(o.schedule.maturity()))
    }

    /// One buy at the nominal yield and one sell at yield plus spread, so
    /// the ingested spread equals the instance spread exactly.
    pub fn offers(&self) -> Vec<OfferRecord> {
        self.observations
            .iter()
            .flat_map(|o| {
                let y = self.nominal_yield(o);
                [
                    OfferRecord {
                        instrument_id: o.bond.id.clone(),
                        side: Side::Buy,
                        yield_rate: y,
                        facial: 1_000_000.0,
                    },
                    OfferRecord {
                        instrument_id: o.bond.id.clone(),
                        side: Side::Sell,
                        yield_rate: y + o.spread,
                        facial: 1_000_000.0,
                    },
                ]
            })
            .collect()
    }

    /// Writes `closed_operations.csv` and `offers.csv` into `dir`.
    pub fn write_fixture(&self, dir: &std::path::Path) -> Result<(), TestkitError> {
        let create = |name: &str| -> Result<std::fs::File, TestkitError> {
            std::fs::File::create(dir.join(name)).map_err(|e| TestkitError::Ingest(IngestError::Write(e)))
        };
        let mut ops = create("closed_operations.csv")?;
        write_closed_operations(&self.closed_operations()?, &mut ops)?;
        ops.flush().map_err(IngestError::Write)?;
        write_offers(&self.offers(), create("offers.csv")?)?;
        Ok(())
    }
}

/// Spot rate recomputed from the closed forms with plain `exp` calls.
fn oracle_spot(p: &CurveParams, t: f64) -> f64 {
    let v = p.to_vec();
    let load = |lambda: f64| {
        let x = lambda * t;
        if x == 0.0 {
            (1.0, 0.0)
        } else {
            let a = (1.0 - (-x).exp()) / x;
            (a, a - (-x).exp())
        }
    };
    let (s1, c1) = load(v[3]);
    let mut r = v[0] + v[1] * s1 + v[2] * c1;
    if v.len() == 6 {
        r += v[4] * load(v[5]).1;
    }
    r
}

/// Weighted sum of squared pricing errors, one cash flow at a time.
pub fn oracle_wsse(params: &CurveParams, observations: &[BondObservation]) -> f64 {
    let mut total = 0.0;
    for o in observations {
        let mut model = 0.0;
        for &(t, amount) in o.schedule.flows() {
            model += amount * (-oracle_spot(params, t) * t).exp();
        }
        let resid = o.observed_dirty_price - model;
        total += resid * resid / (o.spread * (1.0 + o.staleness_days as f64));
    }
    total
}

/// Present value of a schedule, one flow at a time.
pub fn oracle_price(params: &CurveParams, flows: &[(f64, f64)]) -> f64 {
    flows
        .iter()
        .map(|&(t, a)| a * (-oracle_spot(params, t) * t).exp())
        .sum()
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}
