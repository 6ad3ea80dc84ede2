//! Very fast simulated annealing: a heavy-tailed neighbour generator whose
//! reach shrinks with the temperature, Metropolis acceptance and geometric
//! cooling over fixed-length Markov chains.

use log::warn;
use serde::{Deserialize, Serialize};

use super::{clip_to_box, linear_ok, violated_linear_coordinates, MetaError};
use crate::curve::ConstraintSystem;
use crate::optim::{sample_feasible, ObjectiveProblem, OptimError, Optimizer, RngStream, Solution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaConfig {
    pub chain_length: usize,
    pub cooling: f64,
    /// χ₀: acceptance ratio targeted by the initial temperature.
    pub initial_acceptance: f64,
    pub blank_iterations: usize,
    /// Cap on proposals, blank walk excluded.
    pub max_iterations: usize,
    /// The run ends once the temperature falls below this.
    pub min_temperature: f64,
    /// Consecutive chains without an accepted downhill move before stopping.
    pub stall_chains: usize,
    /// Redraws of the offending coordinates when a move breaks a linear constraint.
    pub redraws: usize,
}

impl Default for SaConfig {
    fn default() -> Self {
        SaConfig {
            chain_length: 100,
            cooling: 0.95,
            initial_acceptance: 0.95,
            blank_iterations: 1_000,
            max_iterations: 200_000,
            min_temperature: 1e-12,
            stall_chains: 5,
            redraws: 20,
        }
    }
}

impl SaConfig {
    pub fn validate(&self) -> Result<(), MetaError> {
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(MetaError::Config("sa.cooling must lie in (0, 1)".into()));
        }
        if !(self.initial_acceptance > 0.5 && self.initial_acceptance < 1.0) {
            return Err(MetaError::Config("sa.initial_acceptance must lie in (0.5, 1)".into()));
        }
        if self.chain_length == 0 || self.blank_iterations == 0 || self.stall_chains == 0 {
            return Err(MetaError::Config(
                "sa.chain_length, sa.blank_iterations and sa.stall_chains must be at least 1".into(),
            ));
        }
        if !(self.min_temperature >= 0.0) {
            return Err(MetaError::Config("sa.min_temperature must be non-negative".into()));
        }
        Ok(())
    }
}

/// Step fraction `λ = sgn(u − ½)·T·[(1 + 1/T)^{|2u−1|} − 1]`, in `[−1, 1]`.
pub fn vfsr_step(u: f64, temperature: f64) -> f64 {
    let a = (2.0 * u - 1.0).abs();
    let mag = temperature * ((a * (1.0 / temperature).ln_1p()).exp_m1());
    if u < 0.5 {
        -mag
    } else {
        mag
    }
}

/// Moves every coordinate by `λ_i · width_i`, clips into the box and redraws
/// coordinates of violated linear constraints before falling back to repair.
pub fn sa_neighbor(
    current: &[f64],
    temperature: f64,
    cs: &ConstraintSystem,
    redraws: usize,
    rng: &mut RngStream,
) -> Vec<f64> {
    let mut next: Vec<f64> = current
        .iter()
        .zip(&cs.bounds)
        .map(|(x, b)| x + vfsr_step(rng.uniform(), temperature) * b.width())
        .collect();
    clip_to_box(cs, &mut next);
    for _ in 0..redraws {
        if linear_ok(cs, &next) {
            break;
        }
        for i in violated_linear_coordinates(cs, &next) {
            let b = cs.bounds[i];
            next[i] = b.clamp_interior(current[i] + vfsr_step(rng.uniform(), temperature) * b.width());
        }
    }
    cs.repair(&mut next);
    next
}

/// `ΔF ≤ 0` always passes; otherwise passes with probability `exp(−ΔF/T)`.
/// Consumes a draw only in the second case.
pub fn metropolis_accept(delta: f64, temperature: f64, rng: &mut RngStream) -> bool {
    if delta <= 0.0 {
        return true;
    }
    rng.uniform() < (-delta / temperature).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TemperatureEstimate {
    pub temperature: f64,
    /// Proposals that lowered the cost.
    pub decreases: usize,
    /// Proposals that raised the cost.
    pub increases: usize,
    pub mean_increase: f64,
    /// Set when the closed form was unusable and a fallback was taken.
    pub fallback: Option<&'static str>,
}

/// `T₀ = ΔF⁺ / ln(m₂ / (m₂χ₀ − m₁(1 − χ₀)))`, with fallbacks: no increases
/// or a zero result give 1, a non-positive denominator gives `ΔF⁺/ln(1/χ₀)`.
pub fn initial_temperature_from_counts(
    decreases: usize,
    increases: usize,
    mean_increase: f64,
    chi0: f64,
) -> TemperatureEstimate {
    let (m1, m2) = (decreases as f64, increases as f64);
    let mut est = TemperatureEstimate {
        temperature: 1.0,
        decreases,
        increases,
        mean_increase,
        fallback: None,
    };
    if increases == 0 {
        est.fallback = Some("no cost increases during the blank walk");
        return est;
    }
    let denom = m2 * chi0 - m1 * (1.0 - chi0);
    let t = if denom > 0.0 {
        mean_increase / (m2 / denom).ln()
    } else {
        est.fallback = Some("acceptance target unreachable from the blank-walk counts");
        mean_increase / (1.0 / chi0).ln()
    };
    if t > 0.0 && t.is_finite() {
        est.temperature = t;
    } else {
        est.fallback = Some("degenerate initial temperature");
    }
    est
}

/// Random walk of `blank` proposals at reference temperature 1, accepting
/// every move, then the closed-form estimate from its statistics.
pub fn sa_initial_temperature(
    problem: &ObjectiveProblem<'_>,
    start: &[f64],
    chi0: f64,
    blank: usize,
    redraws: usize,
    rng: &mut RngStream,
) -> TemperatureEstimate {
    let cs = problem.constraints();
    let mut x = start.to_vec();
    let mut f = problem.evaluate(&x);
    let (mut m1, mut m2, mut up) = (0, 0, 0.0);
    for _ in 0..blank {
        let y = sa_neighbor(&x, 1.0, cs, redraws, rng);
        let g = problem.evaluate(&y);
        let d = g - f;
        if d < 0.0 {
            m1 += 1;
        } else if d > 0.0 {
            m2 += 1;
            up += d;
        }
        x = y;
        f = g;
    }
    let mean = if m2 > 0 { up / m2 as f64 } else { 0.0 };
    let est = initial_temperature_from_counts(m1, m2, mean, chi0);
    if let Some(why) = est.fallback {
        warn!("initial temperature fallback ({why}), T0 = {}", est.temperature);
    }
    est
}

#[derive(Debug, Clone, Default)]
pub struct SimulatedAnnealing {
    pub config: SaConfig,
}

impl SimulatedAnnealing {
    pub fn new(config: SaConfig) -> Self {
        SimulatedAnnealing { config }
    }

    /// Anneals from `start` with a given initial temperature.
    pub fn anneal(
        &self,
        problem: &ObjectiveProblem<'_>,
        start: Vec<f64>,
        initial_temperature: f64,
        rng: &mut RngStream,
    ) -> Result<Solution, OptimError> {
        let cfg = &self.config;
        cfg.validate().map_err(|e| OptimError::Config(e.to_string()))?;
        let cs = problem.constraints();
        let mut x = start;
        let mut fx = problem.evaluate(&x);
        let mut best = (x.clone(), fx);
        let mut evaluations = 1;
        let mut t = initial_temperature;
        let mut trace = Vec::new();
        let mut chains = 0;
        let mut stalled = 0;
        'outer: while t > cfg.min_temperature {
            chains += 1;
            let mut moved_down = false;
            for _ in 0..cfg.chain_length {
                if evaluations > cfg.max_iterations {
                    break 'outer;
                }
                let y = sa_neighbor(&x, t, cs, cfg.redraws, rng);
                let fy = problem.evaluate(&y);
                evaluations += 1;
                let delta = fy - fx;
                if metropolis_accept(delta, t, rng) {
                    if delta < 0.0 {
                        moved_down = true;
                    }
                    x = y;
                    fx = fy;
                    if fx < best.1 {
                        best = (x.clone(), fx);
                    }
                }
            }
            trace.push(best.1);
            stalled = if moved_down { 0 } else { stalled + 1 };
            if stalled >= cfg.stall_chains {
                break;
            }
            t *= cfg.cooling;
        }
        Ok(Solution {
            point: best.0,
            value: best.1,
            iterations: chains,
            evaluations,
            trace,
        })
    }
}

impl Optimizer for SimulatedAnnealing {
    fn name(&self) -> &'static str {
        "sa"
    }

    fn config(&self) -> serde_json::Value {
        serde_json::to_value(&self.config).expect("config serializes")
    }

    fn minimize(&self, problem: &ObjectiveProblem<'_>, rng: &mut RngStream) -> Result<Solution, OptimError> {
        let cfg = &self.config;
        cfg.validate().map_err(|e| OptimError::Config(e.to_string()))?;
        let start = sample_feasible(problem.constraints(), rng)?;
        let t0 = sa_initial_temperature(
            problem,
            &start,
            cfg.initial_acceptance,
            cfg.blank_iterations,
            cfg.redraws,
            rng,
        );
        let mut sol = self.anneal(problem, start, t0.temperature, rng)?;
        sol.evaluations += cfg.blank_iterations + 1;
        Ok(sol)
    }
}
