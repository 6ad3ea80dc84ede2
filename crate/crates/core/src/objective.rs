//! Weighted least-squares pricing criterion.
//!
//! Each bond contributes `(Pr_k − P̃r_k)² / (H_k (1 + ND_k))` where `Pr_k`
//! is the observed dirty price, `P̃r_k` the model price, `H_k` the bid-ask
//! spread in yield and `ND_k` the number of days since the last trade.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bond::{BondSpec, CashFlowSchedule};
use crate::curve::{CurveParams, ModelKind};
use crate::optim::Objective;

/// Floor applied to a spread that comes out exactly zero.
pub const SPREAD_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObjectiveError {
    #[error("spread unavailable: no buy offers")]
    NoBuyOffers,
    #[error("spread unavailable: no sell offers")]
    NoSellOffers,
    #[error("spread unavailable: no offers")]
    NoOffers,
    #[error("degenerate spread: weighted buy and sell yields coincide")]
    DegenerateSpread,
    #[error("invalid offer: {0}")]
    InvalidOffer(String),
    #[error("spread must be positive, got {0}")]
    NonPositiveSpread(f64),
    #[error("invalid observation `{id}`: {reason}")]
    InvalidObservation { id: String, reason: String },
    #[error("{model} needs at least {needed} observations, got {got}")]
    TooFewObservations {
        model: ModelKind,
        needed: usize,
        got: usize,
    },
    #[error("parameters are for {got}, objective is {expected}")]
    ModelMismatch { expected: ModelKind, got: ModelKind },
}

impl ObjectiveError {
    /// Short machine-readable reason for exclusion logs.
    pub fn reason(&self) -> &'static str {
        match self {
            ObjectiveError::NoBuyOffers => "no buy offers",
            ObjectiveError::NoSellOffers => "no sell offers",
            ObjectiveError::NoOffers => "no offers",
            ObjectiveError::DegenerateSpread => "degenerate spread",
            _ => "invalid observation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Buy,
    Sell,
}

/// One quotation from the book of buy and sell offers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Offer {
    pub side: Side,
    #[serde(rename = "yield")]
    pub yield_rate: f64,
    pub facial: f64,
}

impl Offer {
    pub fn buy(yield_rate: f64, facial: f64) -> Self {
        Offer {
            side: Side::Buy,
            yield_rate,
            facial,
        }
    }

    pub fn sell(yield_rate: f64, facial: f64) -> Self {
        Offer {
            side: Side::Sell,
            yield_rate,
            facial,
        }
    }
}

/// Absolute gap between the facial-weighted mean sell and buy yields.
///
/// A zero gap is reported as [`ObjectiveError::DegenerateSpread`]; callers
/// decide whether to floor it.
pub fn bid_ask_spread(offers: &[Offer]) -> Result<f64, ObjectiveError> {
    let mut sums = [(0.0, 0.0); 2];
    let mut counts = [0usize; 2];
    for o in offers {
        if !(o.facial > 0.0 && o.facial.is_finite()) || !o.yield_rate.is_finite() {
            return Err(ObjectiveError::InvalidOffer(format!("{o:?}")));
        }
        let i = (o.side == Side::Sell) as usize;
        sums[i].0 += o.yield_rate * o.facial;
        sums[i].1 += o.facial;
        counts[i] += 1;
    }
    match counts {
        [0, 0] => return Err(ObjectiveError::NoOffers),
        [0, _] => return Err(ObjectiveError::NoBuyOffers),
        [_, 0] => return Err(ObjectiveError::NoSellOffers),
        _ => {}
    }
    let buy = sums[0].0 / sums[0].1;
    let sell = sums[1].0 / sums[1].1;
    let h = (sell - buy).abs();
    if h == 0.0 {
        Err(ObjectiveError::DegenerateSpread)
    } else {
        Ok(h)
    }
}

/// `1 / (H (1 + ND))`.
pub fn observation_weight(spread: f64, staleness_days: u32) -> Result<f64, ObjectiveError> {
    if !(spread > 0.0 && spread.is_finite()) {
        return Err(ObjectiveError::NonPositiveSpread(spread));
    }
    Ok(1.0 / (spread * (1.0 + staleness_days as f64)))
}

/// A priced instrument ready for fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BondObservation {
    pub bond: BondSpec,
    pub schedule: CashFlowSchedule,
    pub observed_dirty_price: f64,
    pub staleness_days: u32,
    pub spread: f64,
}

impl BondObservation {
    pub fn weight(&self) -> f64 {
        1.0 / (self.spread * (1.0 + self.staleness_days as f64))
    }

    fn validate(&self) -> Result<(), ObjectiveError> {
        let bad = |reason: &str| {
            Err(ObjectiveError::InvalidObservation {
                id: self.bond.id.clone(),
                reason: reason.into(),
            })
        };
        if !(self.spread > 0.0 && self.spread.is_finite()) {
            return bad("spread must be positive");
        }
        if !(self.observed_dirty_price > 0.0 && self.observed_dirty_price.is_finite()) {
            return bad("observed dirty price must be positive");
        }
        Ok(())
    }
}

/// Cash flows of all bonds indexed into one shared set of distinct times,
/// so each discount factor is computed once per evaluation.
#[derive(Debug, Clone)]
struct PricingGrid {
    times: Vec<f64>,
    /// Per bond: `(time index, amount)`.
    flows: Vec<Vec<(usize, f64)>>,
    /// Per time: `(bond index, amount)`.
    by_time: Vec<Vec<(usize, f64)>>,
}

impl PricingGrid {
    fn new(observations: &[BondObservation]) -> Self {
        let mut times: Vec<f64> = observations
            .iter()
            .flat_map(|o| o.schedule.flows().iter().map(|f| f.0))
            .collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let index = |t: f64| times.binary_search_by(|x| x.total_cmp(&t)).expect("time on grid");
        let flows: Vec<Vec<(usize, f64)>> = observations
            .iter()
            .map(|o| o.schedule.flows().iter().map(|&(t, a)| (index(t), a)).collect())
            .collect();
        let mut by_time = vec![Vec::new(); times.len()];
        for (k, fl) in flows.iter().enumerate() {
            for &(j, a) in fl {
                by_time[j].push((k, a));
            }
        }
        PricingGrid { times, flows, by_time }
    }
}

/// The fitting problem for one curve family over a set of observations.
#[derive(Debug, Clone)]
pub struct ObjectiveSpec {
    model: ModelKind,
    observations: Vec<BondObservation>,
    weights: Vec<f64>,
    grid: PricingGrid,
}

impl ObjectiveSpec {
    pub fn new(model: ModelKind, observations: Vec<BondObservation>) -> Result<Self, ObjectiveError> {
        let needed = model.dimension() + 1;
        if observations.len() < needed {
            return Err(ObjectiveError::TooFewObservations {
                model,
                needed,
                got: observations.len(),
            });
        }
        for o in &observations {
            o.validate()?;
        }
        let weights = observations.iter().map(BondObservation::weight).collect();
        let grid = PricingGrid::new(&observations);
        Ok(ObjectiveSpec {
            model,
            observations,
            weights,
            grid,
        })
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    pub fn observations(&self) -> &[BondObservation] {
        &self.observations
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn check(&self, params: &CurveParams) -> Result<(), ObjectiveError> {
        if params.kind() != self.model {
            return Err(ObjectiveError::ModelMismatch {
                expected: self.model,
                got: params.kind(),
            });
        }
        Ok(())
    }

    pub fn weighted_sse(&self, params: &CurveParams) -> Result<f64, ObjectiveError> {
        self.check(params)?;
        Ok(self.sse(params))
    }

    /// Model dirty price of every observation.
    pub fn model_prices(&self, params: &CurveParams) -> Vec<f64> {
        let dfs = self.discount_factors(params);
        self.grid
            .flows
            .iter()
            .map(|fl| fl.iter().map(|&(j, a)| a * dfs[j]).sum())
            .collect()
    }

    /// Mean absolute relative pricing error, in percent.
    pub fn goodness_of_fit(&self, params: &CurveParams) -> Result<f64, ObjectiveError> {
        self.check(params)?;
        let model = self.model_prices(params);
        let total: f64 = self
            .observations
            .iter()
            .zip(&model)
            .map(|(o, m)| (o.observed_dirty_price - m).abs() / o.observed_dirty_price)
            .sum();
        Ok(100.0 * total / self.observations.len() as f64)
    }

    fn discount_factors(&self, params: &CurveParams) -> Vec<f64> {
        self.grid
            .times
            .iter()
            .map(|&t| (-params.spot_at(t) * t).exp())
            .collect()
    }

    fn sse(&self, params: &CurveParams) -> f64 {
        let dfs = self.discount_factors(params);
        self.grid
            .flows
            .iter()
            .zip(&self.observations)
            .zip(&self.weights)
            .map(|((fl, o), w)| {
                let model: f64 = fl.iter().map(|&(j, a)| a * dfs[j]).sum();
                let r = o.observed_dirty_price - model;
                w * r * r
            })
            .sum()
    }

    /// Objective value and its analytic gradient in flat parameter order.
    pub fn sse_with_gradient(&self, params: &CurveParams, grad: &mut [f64]) -> f64 {
        let p = self.model.dimension();
        let n_t = self.grid.times.len();
        let mut dfs = Vec::with_capacity(n_t);
        let mut spot_grads = vec![0.0; n_t * p];
        for (j, &t) in self.grid.times.iter().enumerate() {
            let r = params.spot_with_gradient(t, &mut spot_grads[j * p..(j + 1) * p]);
            dfs.push((-r * t).exp());
        }
        // ∂F/∂P̃r_k = −2 w_k r_k
        let mut value = 0.0;
        let dprice: Vec<f64> = self
            .grid
            .flows
            .iter()
            .zip(&self.observations)
            .zip(&self.weights)
            .map(|((fl, o), w)| {
                let model: f64 = fl.iter().map(|&(j, a)| a * dfs[j]).sum();
                let r = o.observed_dirty_price - model;
                value += w * r * r;
                -2.0 * w * r
            })
            .collect();
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (j, &t) in self.grid.times.iter().enumerate() {
            let c: f64 = self.grid.by_time[j].iter().map(|&(k, a)| dprice[k] * a).sum();
            // ∂df/∂θ = −t·df·∂δ/∂θ
            let scale = -c * t * dfs[j];
            for (g, s) in grad.iter_mut().zip(&spot_grads[j * p..(j + 1) * p]) {
                *g += scale * s;
            }
        }
        value
    }

    fn params_unchecked(&self, theta: &[f64]) -> CurveParams {
        let hump = (self.model == ModelKind::Svensson).then(|| crate::curve::SecondHump {
            beta3: theta[4],
            lambda2: theta[5],
        });
        CurveParams {
            beta0: theta[0],
            beta1: theta[1],
            beta2: theta[2],
            lambda1: theta[3],
            hump,
        }
    }
}

impl Objective for ObjectiveSpec {
    fn dimension(&self) -> usize {
        self.model.dimension()
    }

    fn value(&self, theta: &[f64]) -> f64 {
        self.sse(&self.params_unchecked(theta))
    }

    fn value_and_gradient(&self, theta: &[f64], grad: &mut [f64]) -> Option<f64> {
        Some(self.sse_with_gradient(&self.params_unchecked(theta), grad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bond::{price, BondSpec};
    use chrono::NaiveDate;

    fn obs(t: f64, amount: f64, observed: f64, spread: f64, nd: u32) -> BondObservation {
        let d = NaiveDate::from_ymd_opt(2015, 1, 1).unwrap();
        BondObservation {
            bond: BondSpec::zero_coupon(format!("B{t}"), d, d + chrono::Days::new(4000), amount),
            schedule: CashFlowSchedule::new(vec![(t, amount)]).unwrap(),
            observed_dirty_price: observed,
            staleness_days: nd,
            spread,
        }
    }

    fn flat_zero() -> CurveParams {
        CurveParams::nelson_siegel(0.0, 0.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn spread_examples() {
        let h = bid_ask_spread(&[Offer::sell(0.07, 10.0), Offer::buy(0.065, 5.0)]).unwrap();
        assert!((h - 0.005).abs() < 1e-15);
        let h = bid_ask_spread(&[Offer::sell(0.07, 10.0), Offer::sell(0.08, 10.0), Offer::buy(0.07, 20.0)]).unwrap();
        assert!((h - 0.005).abs() < 1e-15);
        assert_eq!(
            bid_ask_spread(&[Offer::sell(0.07, 10.0), Offer::buy(0.07, 10.0)]),
            Err(ObjectiveError::DegenerateSpread)
        );
    }

    #[test]
    fn spread_unavailable() {
        assert_eq!(bid_ask_spread(&[]), Err(ObjectiveError::NoOffers));
        assert_eq!(
            bid_ask_spread(&[Offer::sell(0.07, 1.0)]),
            Err(ObjectiveError::NoBuyOffers)
        );
        assert_eq!(
            bid_ask_spread(&[Offer::buy(0.07, 1.0)]),
            Err(ObjectiveError::NoSellOffers)
        );
        assert!(bid_ask_spread(&[Offer::buy(0.07, 0.0), Offer::sell(0.08, 1.0)]).is_err());
    }

    #[test]
    fn weight_examples() {
        assert!((observation_weight(0.005, 0).unwrap() - 200.0).abs() < 1e-12);
        assert!((observation_weight(0.005, 1).unwrap() - 100.0).abs() < 1e-12);
        assert_eq!(observation_weight(1.0, 0).unwrap(), 1.0);
        assert!(observation_weight(0.0, 0).is_err());
        assert!(observation_weight(-1.0, 3).is_err());
    }

    fn spec_from(list: Vec<BondObservation>) -> ObjectiveSpec {
        // pad with perfectly priced bonds so the NS sample-size rule holds
        let mut all = list;
        while all.len() < 5 {
            let t = 10.0 + all.len() as f64;
            all.push(obs(t, 100.0, 100.0, 1.0, 0));
        }
        ObjectiveSpec::new(ModelKind::NelsonSiegel, all).unwrap()
    }

    #[test]
    fn wsse_examples() {
        let perfect = spec_from(vec![obs(1.0, 100.0, 100.0, 0.01, 2)]);
        assert_eq!(perfect.weighted_sse(&flat_zero()).unwrap(), 0.0);

        let one = spec_from(vec![obs(1.0, 100.0, 102.0, 0.5, 0)]);
        assert!((one.weighted_sse(&flat_zero()).unwrap() - 8.0).abs() < 1e-12);

        let two = spec_from(vec![obs(1.0, 100.0, 101.0, 1.0, 0), obs(2.0, 100.0, 99.0, 1.0, 0)]);
        assert!((two.weighted_sse(&flat_zero()).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn goodness_examples() {
        let perfect = spec_from(vec![obs(1.0, 100.0, 100.0, 0.01, 2)]);
        assert_eq!(perfect.goodness_of_fit(&flat_zero()).unwrap(), 0.0);

        let list: Vec<_> = (0..5)
            .map(|i| {
                let model = 100.0;
                let observed = if i == 0 { 100.0 / 0.99 } else { model };
                obs(1.0 + i as f64, model, observed, 1.0, 0)
            })
            .collect();
        let spec = ObjectiveSpec::new(ModelKind::NelsonSiegel, list).unwrap();
        // one bond 1% off out of five
        assert!((spec.goodness_of_fit(&flat_zero()).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn requires_enough_observations() {
        let list = vec![obs(1.0, 100.0, 100.0, 1.0, 0); 4];
        assert!(matches!(
            ObjectiveSpec::new(ModelKind::NelsonSiegel, list),
            Err(ObjectiveError::TooFewObservations { needed: 5, .. })
        ));
    }

    #[test]
    fn model_mismatch() {
        let spec = spec_from(vec![]);
        let sv = CurveParams::svensson(0.1, -0.05, 0.05, 1.0, 0.05, 2.0).unwrap();
        assert!(spec.weighted_sse(&sv).is_err());
    }

    #[test]
    fn grid_pricing_matches_direct() {
        let spec = spec_from(vec![obs(1.0, 100.0, 97.0, 0.01, 1), obs(2.5, 100.0, 90.0, 0.02, 0)]);
        let p = CurveParams::nelson_siegel(0.06, -0.02, 0.03, 0.7).unwrap();
        for (o, m) in spec.observations().iter().zip(spec.model_prices(&p)) {
            assert!((price(&o.schedule, &p) - m).abs() < 1e-12);
        }
    }
}
