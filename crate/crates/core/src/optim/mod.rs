//! Shared optimizer machinery: the objective abstraction, seeded random
//! streams, feasible sampling, run records and the multistart protocol.

mod multistart;
mod rng;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{ConstraintSystem, CurveParams, ModelKind};

pub use multistart::{multistart, MultistartReport, RunFailure, Statistic};
pub use rng::{split_seed, RngStream};

/// Consecutive rejections after which [`sample_feasible`] gives up.
pub const MAX_REJECTIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimError {
    #[error("no feasible sample after {0} consecutive rejections")]
    SamplingExhausted(usize),
    #[error("objective has dimension {objective}, constraints have {constraints}")]
    DimensionMismatch { objective: usize, constraints: usize },
    #[error("{0} requires an objective with an analytic gradient")]
    GradientRequired(&'static str),
    #[error("barrier requires interior point: {0}")]
    NotInterior(String),
    #[error("objective is not finite at the starting point")]
    NonFiniteStart,
    #[error("optimizer returned an infeasible point: {0}")]
    InfeasibleResult(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("coefficient of variation undefined: {0}")]
    UndefinedVariation(&'static str),
    #[error("all {0} runs failed")]
    AllRunsFailed(usize),
}

/// A function to be minimized over a flat parameter vector.
pub trait Objective: Sync {
    fn dimension(&self) -> usize;

    fn value(&self, theta: &[f64]) -> f64;

    /// Writes the gradient into `grad` and returns the value, or `None` when
    /// no analytic gradient is available.
    fn value_and_gradient(&self, theta: &[f64], grad: &mut [f64]) -> Option<f64> {
        let _ = (theta, grad);
        None
    }
}

/// An objective together with its feasible region.
#[derive(Clone, Copy)]
pub struct ObjectiveProblem<'a> {
    objective: &'a dyn Objective,
    constraints: &'a ConstraintSystem,
}

impl<'a> ObjectiveProblem<'a> {
    pub fn new(objective: &'a dyn Objective, constraints: &'a ConstraintSystem) -> Result<Self, OptimError> {
        if objective.dimension() != constraints.dimension() {
            return Err(OptimError::DimensionMismatch {
                objective: objective.dimension(),
                constraints: constraints.dimension(),
            });
        }
        Ok(ObjectiveProblem { objective, constraints })
    }

    pub fn dimension(&self) -> usize {
        self.constraints.dimension()
    }

    pub fn constraints(&self) -> &'a ConstraintSystem {
        self.constraints
    }

    pub fn model(&self) -> Option<ModelKind> {
        self.constraints.model
    }

    pub fn evaluate(&self, theta: &[f64]) -> f64 {
        self.objective.value(theta)
    }

    pub fn value_and_gradient(&self, theta: &[f64], grad: &mut [f64]) -> Option<f64> {
        self.objective.value_and_gradient(theta, grad)
    }

    pub fn has_gradient(&self) -> bool {
        let mut g = vec![0.0; self.dimension()];
        self.objective
            .value_and_gradient(&self.constraints.witness, &mut g)
            .is_some()
    }
}

/// Draws a strictly feasible point: every coordinate uniform inside its
/// bounds, rejecting draws that break a linear constraint.
pub fn sample_feasible(cs: &ConstraintSystem, rng: &mut RngStream) -> Result<Vec<f64>, OptimError> {
    let mut theta = vec![0.0; cs.dimension()];
    for _ in 0..MAX_REJECTIONS {
        for (v, b) in theta.iter_mut().zip(&cs.bounds) {
            let (lo, hi) = b.interior();
            *v = rng.uniform_in(lo, hi);
        }
        if cs.is_strictly_feasible(&theta) {
            return Ok(theta);
        }
    }
    Err(OptimError::SamplingExhausted(MAX_REJECTIONS))
}

/// `100 · s / |mean|` with the `n − 1` sample standard deviation.
///
/// A single value has no observed dispersion and yields 0.
pub fn coefficient_of_variation(values: &[f64]) -> Result<f64, OptimError> {
    if values.is_empty() {
        return Err(OptimError::UndefinedVariation("empty sample"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return Err(OptimError::UndefinedVariation("zero mean"));
    }
    if values.len() == 1 {
        return Ok(0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    Ok(100.0 * (ss / (n - 1.0)).sqrt() / mean.abs())
}

/// What an optimizer hands back from one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Best value after each outer iteration.
    pub trace: Vec<f64>,
}

/// A minimizer over an [`ObjectiveProblem`].
pub trait Optimizer: Sync {
    fn name(&self) -> &'static str;

    /// JSON snapshot of the configuration, stored with every run.
    fn config(&self) -> serde_json::Value;

    /// Multistart statistic this optimizer is ranked by.
    fn statistic(&self) -> Statistic {
        Statistic::Mean
    }

    fn minimize(&self, problem: &ObjectiveProblem<'_>, rng: &mut RngStream) -> Result<Solution, OptimError>;
}

/// Record of one optimizer execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerRun {
    pub optimizer: String,
    pub run_index: usize,
    pub seed: u64,
    pub config: serde_json::Value,
    pub best_point: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_params: Option<CurveParams>,
    pub best_value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    #[serde(skip)]
    pub trace: Vec<f64>,
    pub wall_time: f64,
}

/// Runs `optimizer` once with its own stream and checks the result.
pub fn run_once(
    optimizer: &dyn Optimizer,
    problem: &ObjectiveProblem<'_>,
    seed: u64,
    run_index: usize,
) -> Result<OptimizerRun, OptimError> {
    let start = Instant::now();
    let mut rng = RngStream::new(seed);
    let sol = optimizer.minimize(problem, &mut rng)?;
    let wall_time = start.elapsed().as_secs_f64();
    let cs = problem.constraints();
    if !cs.is_strictly_feasible(&sol.point) {
        return Err(OptimError::InfeasibleResult(cs.violations(&sol.point).join(", ")));
    }
    let best_value = problem.evaluate(&sol.point);
    let best_params = problem
        .model()
        .and_then(|m| CurveParams::from_slice(m, &sol.point).ok());
    Ok(OptimizerRun {
        optimizer: optimizer.name().to_string(),
        run_index,
        seed,
        config: optimizer.config(),
        best_point: sol.point,
        best_params,
        best_value,
        iterations: sol.iterations,
        evaluations: sol.evaluations,
        trace: sol.trace,
        wall_time,
    })
}
