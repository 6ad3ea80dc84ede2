//! Gradient-based baseline: BFGS descent inside an adaptive logarithmic
//! barrier that keeps every iterate strictly feasible.

mod barrier;
mod bfgs;

use serde::{Deserialize, Serialize};

use crate::optim::{sample_feasible, ObjectiveProblem, OptimError, Optimizer, RngStream, Solution, Statistic};

pub use barrier::{barrier_value, BarrierProblem};
pub use bfgs::{bfgs_minimize, bfgs_update, BfgsOutcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BfgsConfig {
    /// Gradient-norm tolerance of each inner descent.
    pub tol: f64,
    /// Iteration cap of each inner descent.
    pub max_iters: usize,
    pub barrier_stages: usize,
    /// Barrier weight of the first stage; divided by 10 at every stage.
    pub mu0: f64,
}

impl Default for BfgsConfig {
    fn default() -> Self {
        BfgsConfig {
            tol: 1e-8,
            max_iters: 500,
            barrier_stages: 10,
            mu0: 1.0,
        }
    }
}

impl BfgsConfig {
    pub fn validate(&self) -> Result<(), OptimError> {
        if !(self.tol > 0.0) || !(self.mu0 > 0.0) || self.barrier_stages == 0 {
            return Err(OptimError::Config(
                "bfgs.tol and bfgs.mu0 must be positive and bfgs.barrier_stages at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Outer barrier loop: `μ = μ₀, μ₀/10, …`, re-anchoring at the current point
/// before each stage; stops early once a stage moves the point by less than
/// `1e−10`. The reported value is the raw objective.
pub fn constrained_minimize(
    problem: &ObjectiveProblem<'_>,
    start: &[f64],
    config: &BfgsConfig,
) -> Result<Solution, OptimError> {
    config.validate()?;
    barrier::require_interior(problem.constraints(), start)?;
    if !problem.has_gradient() {
        return Err(OptimError::GradientRequired("bfgs"));
    }
    let mut x = start.to_vec();
    let mut mu = config.mu0;
    let mut bp = BarrierProblem::new(*problem, &x, mu)?;
    let mut trace = vec![problem.evaluate(&x)];
    let (mut iterations, mut evaluations) = (0, 1);
    for stage in 0..config.barrier_stages {
        if stage > 0 {
            mu /= 10.0;
            bp = bp.reanchor(&x, mu)?;
        }
        let out = bfgs_minimize(|t, g| bp.value_and_gradient(t, g), &x, config.tol, config.max_iters)?;
        iterations += out.iterations;
        evaluations += out.evaluations;
        let moved = x
            .iter()
            .zip(&out.point)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        x = out.point;
        trace.push(problem.evaluate(&x));
        if moved < 1e-10 {
            break;
        }
    }
    barrier::require_interior(problem.constraints(), &x)?;
    Ok(Solution {
        value: problem.evaluate(&x),
        point: x,
        iterations,
        evaluations,
        trace,
    })
}

/// Multistart-compatible wrapper: a uniform feasible start, then
/// [`constrained_minimize`]. Compared by the minimum over starts.
#[derive(Debug, Clone, Default)]
pub struct BarrierBfgs {
    pub config: BfgsConfig,
}

impl BarrierBfgs {
    pub fn new(config: BfgsConfig) -> Self {
        BarrierBfgs { config }
    }
}

impl Optimizer for BarrierBfgs {
    fn name(&self) -> &'static str {
        "bfgs"
    }

    fn config(&self) -> serde_json::Value {
        serde_json::to_value(&self.config).expect("config serializes")
    }

    fn statistic(&self) -> Statistic {
        Statistic::Min
    }

    fn minimize(&self, problem: &ObjectiveProblem<'_>, rng: &mut RngStream) -> Result<Solution, OptimError> {
        let start = sample_feasible(problem.constraints(), rng)?;
        constrained_minimize(problem, &start, &self.config)
    }
}
