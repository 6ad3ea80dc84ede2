//! Population and trajectory metaheuristics.
//!
//! Every optimizer here works on flat parameter vectors, keeps its iterates
//! strictly inside the feasible region, and draws all randomness from the
//! [`RngStream`](crate::optim::RngStream) it is handed. The inner formulas
//! (pairing probabilities, kernel weights, velocity update, neighbour
//! generator, initial temperature) are exposed as free functions.

mod aco;
mod ga;
mod pso;
mod sa;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::ConstraintSystem;

pub use aco::{aco_kernel_weight, aco_sigma, AcoConfig, AntColony};
pub use ga::{
    blend_crossover, ga_crossover, ga_pairing_probability, mutation_count, FitnessStatistic, GaConfig,
    GeneticAlgorithm, ParentSelector,
};
pub use pso::{pso_velocity, velocity_update, Inertia, ParticleSwarm, PsoConfig};
pub use sa::{
    initial_temperature_from_counts, metropolis_accept, sa_initial_temperature, sa_neighbor, vfsr_step, SaConfig,
    SimulatedAnnealing, TemperatureEstimate,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetaError {
    #[error("rank {rank} out of range 1..={max}")]
    RankOutOfRange { rank: usize, max: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Per-algorithm configuration blocks as they appear in a config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetaConfigs {
    pub ga: GaConfig,
    pub aco: AcoConfig,
    pub pso: PsoConfig,
    pub sa: SaConfig,
}

/// Coordinates that appear in at least one violated linear constraint.
fn violated_linear_coordinates(cs: &ConstraintSystem, theta: &[f64]) -> Vec<usize> {
    let mut idx = Vec::new();
    for c in &cs.linear {
        if !(c.slack(theta) > 0.0) {
            for (i, u) in c.coefficients.iter().enumerate() {
                if *u != 0.0 && !idx.contains(&i) {
                    idx.push(i);
                }
            }
        }
    }
    idx
}

fn clip_to_box(cs: &ConstraintSystem, theta: &mut [f64]) {
    for (v, b) in theta.iter_mut().zip(&cs.bounds) {
        *v = b.clamp_interior(*v);
    }
}

fn linear_ok(cs: &ConstraintSystem, theta: &[f64]) -> bool {
    cs.linear.iter().all(|c| c.slack(theta) > 0.0)
}

fn sort_by_cost<T>(pop: &mut [(T, f64)]) {
    pop.sort_by(|a, b| a.1.total_cmp(&b.1));
}
