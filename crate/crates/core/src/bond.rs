//! Cash-flow schedules for fixed-coupon and zero-coupon bonds, and
//! present-value pricing off a fitted curve.

use chrono::{Months, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::CurveParams;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PricingError {
    #[error("matured instrument `{id}`: valuation {valuation} is not before maturity {maturity}")]
    Matured {
        id: String,
        valuation: NaiveDate,
        maturity: NaiveDate,
    },
    #[error("invalid bond `{id}`: {reason}")]
    InvalidBond { id: String, reason: String },
    #[error("invalid cash-flow schedule: {0}")]
    InvalidSchedule(String),
}

/// Day-count basis used to turn calendar days into year fractions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DayCount {
    #[default]
    #[serde(rename = "act365")]
    Actual365Fixed,
    #[serde(rename = "act360")]
    Actual360,
}

impl DayCount {
    pub fn basis(self) -> f64 {
        match self {
            DayCount::Actual365Fixed => 365.0,
            DayCount::Actual360 => 360.0,
        }
    }

    pub fn year_fraction(self, from: NaiveDate, to: NaiveDate) -> f64 {
        (to - from).num_days() as f64 / self.basis()
    }
}

/// Static description of an instrument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BondSpec {
    pub id: String,
    pub issue_date: NaiveDate,
    pub maturity_date: NaiveDate,
    /// Annual coupon rate as a decimal; zero for zero-coupon bonds.
    pub coupon_rate: f64,
    /// Coupon payments per year; 0 marks a zero-coupon bond.
    pub periodicity: u32,
    pub face: f64,
    pub currency: String,
    /// First upcoming coupon date when the data source provides it.
    #[serde(default)]
    pub next_coupon_date: Option<NaiveDate>,
}

impl BondSpec {
    pub fn zero_coupon(id: impl Into<String>, issue: NaiveDate, maturity: NaiveDate, face: f64) -> Self {
        BondSpec {
            id: id.into(),
            issue_date: issue,
            maturity_date: maturity,
            coupon_rate: 0.0,
            periodicity: 0,
            face,
            currency: "CRC".into(),
            next_coupon_date: None,
        }
    }

    pub fn fixed_coupon(
        id: impl Into<String>,
        issue: NaiveDate,
        maturity: NaiveDate,
        coupon_rate: f64,
        periodicity: u32,
        face: f64,
    ) -> Self {
        BondSpec {
            id: id.into(),
            issue_date: issue,
            maturity_date: maturity,
            coupon_rate,
            periodicity,
            face,
            currency: "CRC".into(),
            next_coupon_date: None,
        }
    }

    pub fn validate(&self) -> Result<(), PricingError> {
        let fail = |reason: &str| {
            Err(PricingError::InvalidBond {
                id: self.id.clone(),
                reason: reason.to_string(),
            })
        };
        if self.maturity_date <= self.issue_date {
            return fail("maturity must follow issue date");
        }
        if ![0, 1, 2, 4, 12].contains(&self.periodicity) {
            return fail("periodicity must be one of 0, 1, 2, 4, 12");
        }
        if !(self.face > 0.0 && self.face.is_finite()) {
            return fail("face must be positive");
        }
        if !(self.coupon_rate >= 0.0 && self.coupon_rate.is_finite()) {
            return fail("coupon rate must be non-negative");
        }
        if self.periodicity == 0 && self.coupon_rate != 0.0 {
            return fail("zero-coupon bond with a non-zero coupon rate");
        }
        Ok(())
    }

    pub fn is_zero_coupon(&self) -> bool {
        self.periodicity == 0
    }

    fn period_months(&self) -> u32 {
        12 / self.periodicity
    }

    fn coupon_amount(&self) -> f64 {
        self.face * self.coupon_rate / self.periodicity as f64
    }

    /// Remaining coupon dates after `valuation` and the coupon date that
    /// starts the current accrual period (never earlier than issue).
    fn coupon_dates(&self, valuation: NaiveDate) -> (Vec<NaiveDate>, NaiveDate) {
        let step = self.period_months();
        let back = |k: u32| {
            self.maturity_date
                .checked_sub_months(Months::new(k * step))
                .unwrap_or(NaiveDate::MIN)
        };
        let mut remaining = Vec::new();
        let mut k = 0;
        let mut last = loop {
            let d = back(k);
            if d <= valuation {
                break d;
            }
            remaining.push(d);
            k += 1;
        };
        remaining.reverse();
        if let Some(next) = self.next_coupon_date {
            if next > valuation && next <= self.maturity_date {
                remaining.retain(|d| *d > next);
                remaining.insert(0, next);
                last = next.checked_sub_months(Months::new(step)).unwrap_or(NaiveDate::MIN);
            }
        }
        (remaining, last.max(self.issue_date))
    }
}

/// Future cash flows as `(years from valuation, amount)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CashFlowSchedule {
    flows: Vec<(f64, f64)>,
}

impl CashFlowSchedule {
    /// Checks that times are positive and strictly increasing.
    pub fn new(flows: Vec<(f64, f64)>) -> Result<Self, PricingError> {
        if flows.is_empty() {
            return Err(PricingError::InvalidSchedule("no cash flows".into()));
        }
        let mut prev = 0.0;
        for &(t, a) in &flows {
            if !(t > prev) || !t.is_finite() {
                return Err(PricingError::InvalidSchedule(format!(
                    "flow times must be positive and strictly increasing (saw {t} after {prev})"
                )));
            }
            if !a.is_finite() {
                return Err(PricingError::InvalidSchedule(format!("non-finite amount at t = {t}")));
            }
            prev = t;
        }
        Ok(CashFlowSchedule { flows })
    }

    pub fn flows(&self) -> &[(f64, f64)] {
        &self.flows
    }

    pub fn maturity(&self) -> f64 {
        self.flows.last().map_or(0.0, |f| f.0)
    }

    pub fn total_amount(&self) -> f64 {
        self.flows.iter().map(|f| f.1).sum()
    }
}

/// Remaining cash flows of `bond` seen from `valuation`.
///
/// Coupon dates step backward from maturity in `12/periodicity`-month
/// increments; a supplied next-coupon date replaces the first generated one.
pub fn build_schedule(
    bond: &BondSpec,
    valuation: NaiveDate,
    day_count: DayCount,
) -> Result<CashFlowSchedule, PricingError> {
    bond.validate()?;
    if valuation >= bond.maturity_date {
        return Err(PricingError::Matured {
            id: bond.id.clone(),
            valuation,
            maturity: bond.maturity_date,
        });
    }
    let t_mat = day_count.year_fraction(valuation, bond.maturity_date);
    if bond.is_zero_coupon() {
        return CashFlowSchedule::new(vec![(t_mat, bond.face)]);
    }
    let coupon = bond.coupon_amount();
    let (dates, _) = bond.coupon_dates(valuation);
    let mut flows: Vec<(f64, f64)> = dates
        .iter()
        .map(|d| (day_count.year_fraction(valuation, *d), coupon))
        .collect();
    match flows.last_mut() {
        Some(last) if *last == (t_mat, coupon) => last.1 += bond.face,
        _ => flows.push((t_mat, bond.face)),
    }
    CashFlowSchedule::new(flows)
}

/// Interest accrued since the start of the current coupon period.
pub fn accrued_interest(bond: &BondSpec, valuation: NaiveDate, day_count: DayCount) -> Result<f64, PricingError> {
    bond.validate()?;
    if valuation >= bond.maturity_date {
        return Err(PricingError::Matured {
            id: bond.id.clone(),
            valuation,
            maturity: bond.maturity_date,
        });
    }
    if bond.is_zero_coupon() || valuation < bond.issue_date {
        return Ok(0.0);
    }
    let (_, last) = bond.coupon_dates(valuation);
    let days = (valuation - last).num_days().max(0) as f64;
    Ok(bond.face * bond.coupon_rate * days / day_count.basis())
}

/// Present value `Σ amount·e^{−δ(t)·t}` of a schedule under a curve.
pub fn price(schedule: &CashFlowSchedule, params: &CurveParams) -> f64 {
    schedule
        .flows()
        .iter()
        .map(|&(t, a)| a * (-params.spot_at(t) * t).exp())
        .sum()
}
