//! Ant colony optimization for continuous domains: a rank-weighted archive
//! of the best solutions acts as the pheromone, and new solutions are drawn
//! from a mixture of Gaussian kernels centred on archive members.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{sort_by_cost, MetaError};
use crate::optim::{sample_feasible, ObjectiveProblem, OptimError, Optimizer, RngStream, Solution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcoConfig {
    pub ants: usize,
    pub archive_size: usize,
    /// ξ: scales the kernel widths.
    pub locality: f64,
    /// ν: width of the rank weighting, relative to the archive size.
    pub convergence_speed: f64,
    pub max_iterations: usize,
    /// Draws outside the box are redrawn this many times before clipping.
    pub resample_attempts: usize,
}

impl Default for AcoConfig {
    fn default() -> Self {
        AcoConfig {
            ants: 2,
            archive_size: 50,
            locality: 0.4,
            convergence_speed: 1.1,
            max_iterations: 20_000,
            resample_attempts: 10,
        }
    }
}

impl AcoConfig {
    pub fn validate(&self) -> Result<(), MetaError> {
        if self.archive_size < 2 {
            return Err(MetaError::Config("aco.archive_size must be at least 2".into()));
        }
        if self.ants == 0 {
            return Err(MetaError::Config("aco.ants must be at least 1".into()));
        }
        if !(self.locality > 0.0) || !(self.convergence_speed > 0.0) {
            return Err(MetaError::Config(
                "aco.locality and aco.convergence_speed must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Weight of the kernel at rank `l` (1 = best):
/// `exp(−(l−1)² / (2ν²q²)) / (νq√(2π))`.
pub fn aco_kernel_weight(rank: usize, archive_size: usize, speed: f64) -> Result<f64, MetaError> {
    if rank == 0 || rank > archive_size {
        return Err(MetaError::RankOutOfRange {
            rank,
            max: archive_size,
        });
    }
    let s = speed * archive_size as f64;
    let d = (rank - 1) as f64;
    Ok((-d * d / (2.0 * s * s)).exp() / (s * (2.0 * PI).sqrt()))
}

/// Kernel width for archive member `l` along one coordinate:
/// `ξ · Σ_h |x_h − x_l| / (q − 1)`, never below `1e−9 · width`.
pub fn aco_sigma(column: &[f64], l: usize, locality: f64, width: f64) -> f64 {
    let q = column.len();
    let centre = column[l];
    let spread: f64 = column.iter().map(|x| (x - centre).abs()).sum();
    let sigma = if q > 1 { locality * spread / (q - 1) as f64 } else { 0.0 };
    sigma.max(1e-9 * width)
}

#[derive(Debug, Clone, Default)]
pub struct AntColony {
    pub config: AcoConfig,
}

impl AntColony {
    pub fn new(config: AcoConfig) -> Self {
        AntColony { config }
    }

    /// Runs from an explicit initial archive (any order, any size ≥ 2).
    pub fn search(
        &self,
        problem: &ObjectiveProblem<'_>,
        initial: Vec<Vec<f64>>,
        rng: &mut RngStream,
    ) -> Result<Solution, OptimError> {
        let cfg = &self.config;
        cfg.validate().map_err(|e| OptimError::Config(e.to_string()))?;
        let cs = problem.constraints();
        let p = problem.dimension();
        let mut archive: Vec<(Vec<f64>, f64)> = initial
            .into_iter()
            .map(|x| {
                let f = problem.evaluate(&x);
                (x, f)
            })
            .collect();
        let q = archive.len();
        if q < 2 {
            return Err(OptimError::Config("archive needs at least 2 solutions".into()));
        }
        let mut evaluations = q;
        sort_by_cost(&mut archive);

        let weights: Vec<f64> = (1..=q)
            .map(|l| aco_kernel_weight(l, q, cfg.convergence_speed).expect("rank in range"))
            .collect();
        let total: f64 = weights.iter().sum();
        let mut cumulative = Vec::with_capacity(q);
        let mut acc = 0.0;
        for w in &weights {
            acc += w / total;
            cumulative.push(acc);
        }

        let mut trace = Vec::with_capacity(cfg.max_iterations);
        let mut column = vec![0.0; q];
        let mut iterations = 0;
        for it in 1..=cfg.max_iterations {
            iterations = it;
            let mut fresh = Vec::with_capacity(cfg.ants);
            for _ in 0..cfg.ants {
                let u = rng.uniform();
                let l = cumulative.iter().position(|&c| u < c).unwrap_or(q - 1);
                let mut x = vec![0.0; p];
                #[allow(clippy::needless_range_loop)]
                for i in 0..p {
                    for (c, s) in column.iter_mut().zip(&archive) {
                        *c = s.0[i];
                    }
                    let b = cs.bounds[i];
                    let sigma = aco_sigma(&column, l, cfg.locality, b.width());
                    let (lo, hi) = b.interior();
                    let mut v = rng.normal(column[l], sigma);
                    let mut tries = 0;
                    while !(lo..=hi).contains(&v) && tries < cfg.resample_attempts {
                        v = rng.normal(column[l], sigma);
                        tries += 1;
                    }
                    x[i] = b.clamp_interior(v);
                }
                cs.repair(&mut x);
                let f = problem.evaluate(&x);
                evaluations += 1;
                fresh.push((x, f));
            }
            archive.extend(fresh);
            sort_by_cost(&mut archive);
            archive.truncate(q);
            trace.push(archive[0].1);
        }
        let (point, value) = archive.swap_remove(0);
        Ok(Solution {
            point,
            value,
            iterations,
            evaluations,
            trace,
        })
    }
}

impl Optimizer for AntColony {
    fn name(&self) -> &'static str {
        "aco"
    }

    fn config(&self) -> serde_json::Value {
        serde_json::to_value(&self.config).expect("config serializes")
    }

    fn minimize(&self, problem: &ObjectiveProblem<'_>, rng: &mut RngStream) -> Result<Solution, OptimError> {
        let initial = (0..self.config.archive_size)
            .map(|_| sample_feasible(problem.constraints(), rng))
            .collect::<Result<Vec<_>, _>>()?;
        self.search(problem, initial, rng)
    }
}
