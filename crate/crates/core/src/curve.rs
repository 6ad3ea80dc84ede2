//! Nelson-Siegel and Svensson curve shapes and their feasibility regions.
//!
//! Rates are decimal fractions per annum with continuous compounding and
//! tenors are measured in years. The flat parameter order used everywhere a
//! curve is treated as a vector is `(β₀, β₁, β₂, λ₁[, β₃, λ₂])`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Below this value of `λt` the loadings are evaluated from their series.
const SERIES_CUTOFF: f64 = 1e-8;

/// Below this value of `λt` the loading derivative is evaluated from its series.
const DERIV_SERIES_CUTOFF: f64 = 1e-2;

/// Distance by which optimizers keep iterates inside the open feasible box.
pub const INTERIOR_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error("tenor must be non-negative and finite, got {0}")]
    NegativeTenor(f64),
    #[error("forward interval requires 0 < s < t, got s = {s}, t = {t}")]
    ForwardInterval { s: f64, t: f64 },
    #[error("{model} expects {expected} parameters, got {got}")]
    Dimension {
        model: ModelKind,
        expected: usize,
        got: usize,
    },
    #[error("decay parameter must be positive and finite, got {0}")]
    Decay(f64),
    #[error("unknown model `{0}` (expected `ns` or `svensson`)")]
    UnknownModel(String),
    #[error("missing curve field `{0}`")]
    MissingField(&'static str),
    #[error("field `{0}` is not part of a Nelson-Siegel curve")]
    UnexpectedField(&'static str),
}

/// The two parametric families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "ns")]
    NelsonSiegel,
    #[serde(rename = "svensson")]
    Svensson,
}

impl ModelKind {
    pub const fn dimension(self) -> usize {
        match self {
            ModelKind::NelsonSiegel => 4,
            ModelKind::Svensson => 6,
        }
    }

    /// Short tag used in file names and JSON.
    pub const fn tag(self) -> &'static str {
        match self {
            ModelKind::NelsonSiegel => "ns",
            ModelKind::Svensson => "svensson",
        }
    }

    /// Display names of the parameters in flat order.
    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            ModelKind::NelsonSiegel => &["β₀", "β₁", "β₂", "λ"],
            ModelKind::Svensson => &["β₀", "β₁", "β₂", "λ₁", "β₃", "λ₂"],
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::NelsonSiegel => f.write_str("Nelson-Siegel"),
            ModelKind::Svensson => f.write_str("Svensson"),
        }
    }
}

impl FromStr for ModelKind {
    type Err = CurveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ns" | "nelson-siegel" | "nelson_siegel" | "nelsonsiegel" => Ok(ModelKind::NelsonSiegel),
            "svensson" | "nss" | "sv" => Ok(ModelKind::Svensson),
            other => Err(CurveError::UnknownModel(other.to_string())),
        }
    }
}

/// The extra hump term of the Svensson model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondHump {
    pub beta3: f64,
    pub lambda2: f64,
}

/// Parameters of a fitted or candidate curve.
///
/// Nelson-Siegel curves carry no [`SecondHump`]; Svensson curves always do.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FlatParams", into = "FlatParams")]
pub struct CurveParams {
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub lambda1: f64,
    pub hump: Option<SecondHump>,
}

fn check_decay(lambda: f64) -> Result<f64, CurveError> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(lambda)
    } else {
        Err(CurveError::Decay(lambda))
    }
}

impl CurveParams {
    pub fn nelson_siegel(beta0: f64, beta1: f64, beta2: f64, lambda: f64) -> Result<Self, CurveError> {
        Ok(CurveParams {
            beta0,
            beta1,
            beta2,
            lambda1: check_decay(lambda)?,
            hump: None,
        })
    }

    pub fn svensson(
        beta0: f64,
        beta1: f64,
        beta2: f64,
        lambda1: f64,
        beta3: f64,
        lambda2: f64,
    ) -> Result<Self, CurveError> {
        Ok(CurveParams {
            beta0,
            beta1,
            beta2,
            lambda1: check_decay(lambda1)?,
            hump: Some(SecondHump {
                beta3,
                lambda2: check_decay(lambda2)?,
            }),
        })
    }

    /// Builds parameters from a flat vector in `(β₀, β₁, β₂, λ₁[, β₃, λ₂])` order.
    pub fn from_slice(model: ModelKind, theta: &[f64]) -> Result<Self, CurveError> {
        if theta.len() != model.dimension() {
            return Err(CurveError::Dimension {
                model,
                expected: model.dimension(),
                got: theta.len(),
            });
        }
        match model {
            ModelKind::NelsonSiegel => Self::nelson_siegel(theta[0], theta[1], theta[2], theta[3]),
            ModelKind::Svensson => Self::svensson(theta[0], theta[1], theta[2], theta[3], theta[4], theta[5]),
        }
    }

    pub fn kind(&self) -> ModelKind {
        if self.hump.is_some() {
            ModelKind::Svensson
        } else {
            ModelKind::NelsonSiegel
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![self.beta0, self.beta1, self.beta2, self.lambda1];
        if let Some(h) = self.hump {
            v.push(h.beta3);
            v.push(h.lambda2);
        }
        v
    }

    /// Instantaneous forward rate at tenor `t`.
    pub fn forward_rate(&self, t: f64) -> Result<f64, CurveError> {
        check_tenor(t)?;
        Ok(self.forward_at(t))
    }

    /// Continuously compounded spot rate at tenor `t`.
    pub fn spot_rate(&self, t: f64) -> Result<f64, CurveError> {
        check_tenor(t)?;
        Ok(self.spot_at(t))
    }

    /// Forward rate for a tenor already known to be non-negative.
    pub(crate) fn forward_at(&self, t: f64) -> f64 {
        let x = self.lambda1 * t;
        let e = (-x).exp();
        let mut f = self.beta0 + self.beta1 * e + self.beta2 * x * e;
        if let Some(h) = self.hump {
            let x2 = h.lambda2 * t;
            f += h.beta3 * x2 * (-x2).exp();
        }
        f
    }

    /// Spot rate for a tenor already known to be non-negative.
    pub(crate) fn spot_at(&self, t: f64) -> f64 {
        let x = self.lambda1 * t;
        let slope = slope_loading(x);
        let mut r = self.beta0 + self.beta1 * slope + self.beta2 * (slope - (-x).exp());
        if let Some(h) = self.hump {
            r += h.beta3 * curvature_loading(h.lambda2 * t);
        }
        r
    }

    /// Spot rate and its gradient with respect to the flat parameter vector.
    ///
    /// `grad` must have length equal to the model dimension.
    pub(crate) fn spot_with_gradient(&self, t: f64, grad: &mut [f64]) -> f64 {
        let x = self.lambda1 * t;
        let e = (-x).exp();
        let slope = slope_loading(x);
        let curv = slope - e;
        let dslope = slope_loading_derivative(x);
        grad[0] = 1.0;
        grad[1] = slope;
        grad[2] = curv;
        grad[3] = t * (self.beta1 * dslope + self.beta2 * (dslope + e));
        let mut r = self.beta0 + self.beta1 * slope + self.beta2 * curv;
        if let Some(h) = self.hump {
            let x2 = h.lambda2 * t;
            let e2 = (-x2).exp();
            let c2 = slope_loading(x2) - e2;
            grad[4] = c2;
            grad[5] = t * h.beta3 * (slope_loading_derivative(x2) + e2);
            r += h.beta3 * c2;
        }
        r
    }
}

fn check_tenor(t: f64) -> Result<(), CurveError> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(CurveError::NegativeTenor(t))
    }
}

/// `(1 − e^{−x})/x`, the level-to-slope loading, with its limit 1 at `x = 0`.
pub fn slope_loading(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        1.0 - x / 2.0 + x * x / 6.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// `(1 − e^{−x})/x − e^{−x}`, the hump loading, with its limit 0 at `x = 0`.
pub fn curvature_loading(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        x / 2.0 - x * x / 3.0
    } else {
        slope_loading(x) - (-x).exp()
    }
}

/// Derivative of [`slope_loading`] with respect to `x`.
pub(crate) fn slope_loading_derivative(x: f64) -> f64 {
    if x.abs() < DERIV_SERIES_CUTOFF {
        let x2 = x * x;
        -0.5 + x / 3.0 - x2 / 8.0 + x2 * x / 30.0 - x2 * x2 / 144.0 + x2 * x2 * x / 840.0
    } else {
        ((-x).exp() * (1.0 + x) - 1.0) / (x * x)
    }
}

/// Forward rate implied between tenors `s < t` by spot rates `δ_s` and `δ_t`.
pub fn discrete_forward(delta_t: f64, t: f64, delta_s: f64, s: f64) -> Result<f64, CurveError> {
    if !(s > 0.0 && s < t && t.is_finite()) {
        return Err(CurveError::ForwardInterval { s, t });
    }
    Ok((t * delta_t - s * delta_s) / (t - s))
}

pub fn forward_rate(params: &CurveParams, t: f64) -> Result<f64, CurveError> {
    params.forward_rate(t)
}

pub fn spot_rate(params: &CurveParams, t: f64) -> Result<f64, CurveError> {
    params.spot_rate(t)
}

/// Flat JSON shape of [`CurveParams`].
#[derive(Debug, Clone, Serialize, Deserialize)]
struct FlatParams {
    model: ModelKind,
    beta0: f64,
    beta1: f64,
    beta2: f64,
    #[serde(alias = "lambda")]
    lambda1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda2: Option<f64>,
}

impl TryFrom<FlatParams> for CurveParams {
    type Error = CurveError;

    fn try_from(p: FlatParams) -> Result<Self, Self::Error> {
        match p.model {
            ModelKind::NelsonSiegel => {
                if p.beta3.is_some() {
                    return Err(CurveError::UnexpectedField("beta3"));
                }
                if p.lambda2.is_some() {
                    return Err(CurveError::UnexpectedField("lambda2"));
                }
                CurveParams::nelson_siegel(p.beta0, p.beta1, p.beta2, p.lambda1)
            }
            ModelKind::Svensson => CurveParams::svensson(
                p.beta0,
                p.beta1,
                p.beta2,
                p.lambda1,
                p.beta3.ok_or(CurveError::MissingField("beta3"))?,
                p.lambda2.ok_or(CurveError::MissingField("lambda2"))?,
            ),
        }
    }
}

impl From<CurveParams> for FlatParams {
    fn from(p: CurveParams) -> Self {
        FlatParams {
            model: p.kind(),
            beta0: p.beta0,
            beta1: p.beta1,
            beta2: p.beta2,
            lambda1: p.lambda1,
            beta3: p.hump.map(|h| h.beta3),
            lambda2: p.hump.map(|h| h.lambda2),
        }
    }
}

/// Open interval `(lower, upper)` for one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub lower: f64,
    pub upper: f64,
}

impl Bound {
    pub fn new(lower: f64, upper: f64) -> Self {
        Bound { lower, upper }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// The interval shrunk by [`INTERIOR_MARGIN`] on both sides (or collapsed
    /// to its midpoint when narrower than that).
    pub fn interior(&self) -> (f64, f64) {
        let lo = self.lower + INTERIOR_MARGIN;
        let hi = self.upper - INTERIOR_MARGIN;
        if lo <= hi {
            (lo, hi)
        } else {
            let mid = 0.5 * (self.lower + self.upper);
            (mid, mid)
        }
    }

    pub fn clamp_interior(&self, v: f64) -> f64 {
        let (lo, hi) = self.interior();
        if v.is_nan() {
            return 0.5 * (lo + hi);
        }
        v.clamp(lo, hi)
    }
}

/// `u'θ − c ≥ 0`, held strictly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub coefficients: Vec<f64>,
    pub constant: f64,
    pub label: String,
    /// Coordinate moved when an iterate has to be pushed back inside.
    #[serde(default)]
    pub repair_index: Option<usize>,
}

impl LinearConstraint {
    pub fn slack(&self, theta: &[f64]) -> f64 {
        self.coefficients.iter().zip(theta).map(|(u, t)| u * t).sum::<f64>() - self.constant
    }
}

/// Box bounds plus general linear inequalities, with a known interior point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSystem {
    pub model: Option<ModelKind>,
    pub names: Vec<String>,
    pub bounds: Vec<Bound>,
    pub linear: Vec<LinearConstraint>,
    pub witness: Vec<f64>,
}

fn fmt_limit(v: f64) -> String {
    if v != 0.0 && ((1.0 / v) - (1.0 / v).round()).abs() < 1e-9 && v.abs() < 1.0 && (1.0 / v).abs() > 100.0 {
        format!("1/{}", (1.0 / v).round())
    } else {
        format!("{v}")
    }
}

/// Feasibility verdict with the labels of every violated constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    pub violations: Vec<String>,
}

impl ConstraintSystem {
    /// A plain box with no linear constraints; the witness is the box centre.
    pub fn from_box(bounds: Vec<Bound>) -> Self {
        let names = (1..=bounds.len()).map(|i| format!("x{i}")).collect();
        let witness = bounds.iter().map(|b| 0.5 * (b.lower + b.upper)).collect();
        ConstraintSystem {
            model: None,
            names,
            bounds,
            linear: Vec::new(),
            witness,
        }
    }

    pub fn dimension(&self) -> usize {
        self.bounds.len()
    }

    /// Number of scalar inequalities: two faces per bound plus the linear ones.
    pub fn inequality_count(&self) -> usize {
        2 * self.bounds.len() + self.linear.len()
    }

    /// Every constraint, bound faces included, as `u'θ − c ≥ 0`.
    pub fn all_inequalities(&self) -> Vec<LinearConstraint> {
        let p = self.dimension();
        let mut out = Vec::with_capacity(self.inequality_count());
        for (i, b) in self.bounds.iter().enumerate() {
            let mut lo = vec![0.0; p];
            lo[i] = 1.0;
            out.push(LinearConstraint {
                coefficients: lo,
                constant: b.lower,
                label: format!("{} > {}", self.names[i], fmt_limit(b.lower)),
                repair_index: Some(i),
            });
            let mut hi = vec![0.0; p];
            hi[i] = -1.0;
            out.push(LinearConstraint {
                coefficients: hi,
                constant: -b.upper,
                label: format!("{} < {}", self.names[i], fmt_limit(b.upper)),
                repair_index: Some(i),
            });
        }
        out.extend(self.linear.iter().cloned());
        out
    }

    /// Labels of violated constraints; empty when `theta` is strictly feasible.
    pub fn violations(&self, theta: &[f64]) -> Vec<String> {
        self.all_inequalities()
            .into_iter()
            .filter(|c| !(c.slack(theta) > 0.0))
            .map(|c| c.label)
            .collect()
    }

    pub fn is_strictly_feasible(&self, theta: &[f64]) -> bool {
        theta.len() == self.dimension()
            && self.bounds.iter().zip(theta).all(|(b, &v)| v > b.lower && v < b.upper)
            && self.linear.iter().all(|c| c.slack(theta) > 0.0)
    }

    /// Clips into the shrunk box, then pushes each violated linear constraint
    /// back inside by moving its repair coordinate, spilling over to the
    /// other coordinates when that one hits its bound. Returns strict
    /// feasibility.
    pub fn repair(&self, theta: &mut [f64]) -> bool {
        for (v, b) in theta.iter_mut().zip(&self.bounds) {
            *v = b.clamp_interior(*v);
        }
        for c in &self.linear {
            let slack = c.slack(theta);
            if slack > INTERIOR_MARGIN {
                continue;
            }
            let mut need = 2.0 * INTERIOR_MARGIN - slack;
            let order = c
                .repair_index
                .into_iter()
                .chain((0..theta.len()).filter(|i| Some(*i) != c.repair_index));
            for i in order {
                let u = c.coefficients[i];
                if need <= 0.0 {
                    break;
                }
                if u == 0.0 {
                    continue;
                }
                let old = theta[i];
                theta[i] = self.bounds[i].clamp_interior(old + need / u);
                need -= u * (theta[i] - old);
            }
        }
        self.is_strictly_feasible(theta)
    }
}

/// Feasible region of a curve family.
///
/// Nelson-Siegel: `0 < β₀ < 0.25`, `−0.20 < β₁ < 0.20`, `0 < β₂ < 0.25`,
/// `1/300 < λ < 12` and `β₀ + β₁ > 0`. Svensson narrows `β₁` to
/// `(−0.20, 0)`, adds `0 < β₃ < 0.25` and `1/300 < λ₂ < 12`.
pub fn constraint_system(model: ModelKind) -> ConstraintSystem {
    let rate = Bound::new(0.0, 0.25);
    let decay = Bound::new(1.0 / 300.0, 12.0);
    let (bounds, witness) = match model {
        ModelKind::NelsonSiegel => (
            vec![rate, Bound::new(-0.20, 0.20), rate, decay],
            vec![0.10, -0.05, 0.05, 1.0],
        ),
        ModelKind::Svensson => (
            vec![rate, Bound::new(-0.20, 0.0), rate, decay, rate, decay],
            vec![0.10, -0.05, 0.05, 1.0, 0.05, 2.0],
        ),
    };
    let p = model.dimension();
    let mut level_plus_slope = vec![0.0; p];
    level_plus_slope[0] = 1.0;
    level_plus_slope[1] = 1.0;
    ConstraintSystem {
        model: Some(model),
        names: model.parameter_names().iter().map(|s| s.to_string()).collect(),
        bounds,
        linear: vec![LinearConstraint {
            coefficients: level_plus_slope,
            constant: 0.0,
            label: "β₀ + β₁ > 0".to_string(),
            repair_index: Some(1),
        }],
        witness,
    }
}

pub fn is_feasible(params: &CurveParams, cs: &ConstraintSystem) -> Result<Feasibility, CurveError> {
    let theta = params.to_vec();
    if theta.len() != cs.dimension() || cs.model.is_some_and(|m| m != params.kind()) {
        return Err(CurveError::Dimension {
            model: cs.model.unwrap_or(params.kind()),
            expected: cs.dimension(),
            got: theta.len(),
        });
    }
    let violations = cs.violations(&theta);
    Ok(Feasibility {
        feasible: violations.is_empty(),
        violations,
    })
}
