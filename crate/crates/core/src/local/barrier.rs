use crate::curve::{ConstraintSystem, LinearConstraint};
use crate::optim::{ObjectiveProblem, OptimError};

/// Objective plus an adaptive logarithmic barrier anchored at an interior
/// point `θ_k`:
///
/// `F(θ) − μ Σ_j [L_j(θ_k) ln L_j(θ) − u_j'θ]`, with `L_j(θ) = u_j'θ − c_j`.
///
/// Every bound face is one of the `L_j`.
#[derive(Clone)]
pub struct BarrierProblem<'a> {
    problem: ObjectiveProblem<'a>,
    inequalities: Vec<LinearConstraint>,
    anchor_slacks: Vec<f64>,
    mu: f64,
}

impl<'a> BarrierProblem<'a> {
    pub fn new(problem: ObjectiveProblem<'a>, anchor: &[f64], mu: f64) -> Result<Self, OptimError> {
        let inequalities = problem.constraints().all_inequalities();
        Self::with_inequalities(problem, inequalities, anchor, mu)
    }

    /// Barrier over an explicit list of inequalities instead of the
    /// problem's full constraint system.
    pub fn with_inequalities(
        problem: ObjectiveProblem<'a>,
        inequalities: Vec<LinearConstraint>,
        anchor: &[f64],
        mu: f64,
    ) -> Result<Self, OptimError> {
        let anchor_slacks: Vec<f64> = inequalities.iter().map(|c| c.slack(anchor)).collect();
        if let Some(c) = inequalities.iter().zip(&anchor_slacks).find(|(_, s)| !(**s > 0.0)) {
            return Err(OptimError::NotInterior(c.0.label.clone()));
        }
        Ok(BarrierProblem {
            problem,
            inequalities,
            anchor_slacks,
            mu,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Same constraints and weight, new anchor.
    pub fn reanchor(&self, anchor: &[f64], mu: f64) -> Result<Self, OptimError> {
        Self::with_inequalities(self.problem, self.inequalities.clone(), anchor, mu)
    }

    /// `Σ_j [L_j(θ_k) ln L_j(θ) − u_j'θ]`, or `None` outside the domain.
    fn barrier_sum(&self, theta: &[f64]) -> Option<f64> {
        let mut sum = 0.0;
        for (c, &a) in self.inequalities.iter().zip(&self.anchor_slacks) {
            let s = c.slack(theta);
            if !(s > 0.0) {
                return None;
            }
            let ut = s + c.constant;
            sum += a * s.ln() - ut;
        }
        Some(sum)
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        match self.barrier_sum(theta) {
            Some(b) => self.problem.evaluate(theta) - self.mu * b,
            None => f64::INFINITY,
        }
    }

    /// Value and gradient; `+∞` outside the domain or without an analytic
    /// objective gradient.
    pub fn value_and_gradient(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let Some(b) = self.barrier_sum(theta) else {
            return f64::INFINITY;
        };
        let Some(f) = self.problem.value_and_gradient(theta, grad) else {
            return f64::INFINITY;
        };
        for (c, &a) in self.inequalities.iter().zip(&self.anchor_slacks) {
            let scale = a / c.slack(theta) - 1.0;
            for (g, u) in grad.iter_mut().zip(&c.coefficients) {
                *g -= self.mu * scale * u;
            }
        }
        f - self.mu * b
    }
}

/// Barrier objective for a one-off evaluation; `+∞` outside the domain.
pub fn barrier_value(
    problem: &ObjectiveProblem<'_>,
    anchor: &[f64],
    mu: f64,
    theta: &[f64],
) -> Result<f64, OptimError> {
    Ok(BarrierProblem::new(*problem, anchor, mu)?.value(theta))
}

pub(crate) fn require_interior(cs: &ConstraintSystem, theta: &[f64]) -> Result<(), OptimError> {
    if cs.is_strictly_feasible(theta) {
        Ok(())
    } else {
        Err(OptimError::NotInterior(cs.violations(theta).join(", ")))
    }
}
