//! Real-coded genetic algorithm with rank-based pairing, single-gene blend
//! crossover, elitist replacement and uniform mutation.

use serde::{Deserialize, Serialize};

use super::{clip_to_box, sort_by_cost, MetaError};
use crate::curve::ConstraintSystem;
use crate::optim::{sample_feasible, ObjectiveProblem, OptimError, Optimizer, RngStream, Solution};

/// Quantity whose population standard deviation drives the stop rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitnessStatistic {
    /// The objective value itself.
    Cost,
    /// `1 / cost`.
    InverseCost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population: usize,
    pub elite_fraction: f64,
    pub mutation_rate: f64,
    pub fitness_sd_threshold: f64,
    pub stop_statistic: FitnessStatistic,
    pub max_iterations: usize,
    /// Fresh blend factors tried before a child is repaired by clipping.
    pub alpha_redraws: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 100,
            elite_fraction: 0.5,
            mutation_rate: 0.01,
            fitness_sd_threshold: 0.5,
            stop_statistic: FitnessStatistic::Cost,
            max_iterations: 1_000,
            alpha_redraws: 10,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), MetaError> {
        if self.population < 4 || !self.population.is_multiple_of(2) {
            return Err(MetaError::Config("ga.population must be even and at least 4".into()));
        }
        for (name, v) in [
            ("elite_fraction", self.elite_fraction),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(MetaError::Config(format!("ga.{name} must lie in [0, 1]")));
            }
        }
        let keep = self.elite_count();
        if keep < 2 || keep >= self.population {
            return Err(MetaError::Config(
                "ga.elite_fraction must keep at least 2 and replace at least 1".into(),
            ));
        }
        Ok(())
    }

    fn elite_count(&self) -> usize {
        (self.elite_fraction * self.population as f64).round() as usize
    }
}

/// `(M/2 − i + 1) / Σ_{m=1}^{M/2} m`: probability of picking the parent of
/// rank `i` (1 = best) from the kept half of a population of `M`.
pub fn ga_pairing_probability(rank: usize, population: usize) -> Result<f64, MetaError> {
    let half = population / 2;
    if rank == 0 || rank > half {
        return Err(MetaError::RankOutOfRange { rank, max: half });
    }
    let total = (half * (half + 1) / 2) as f64;
    Ok((half - rank + 1) as f64 / total)
}

/// Rank-weighted sampler over the `n` best chromosomes.
#[derive(Debug, Clone)]
pub struct ParentSelector {
    cumulative: Vec<f64>,
}

impl ParentSelector {
    pub fn new(n: usize) -> Self {
        let total = (n * (n + 1) / 2) as f64;
        let mut acc = 0.0;
        let cumulative = (1..=n)
            .map(|i| {
                acc += (n - i + 1) as f64 / total;
                acc
            })
            .collect();
        ParentSelector { cumulative }
    }

    /// Zero-based rank of the selected parent.
    pub fn draw(&self, rng: &mut RngStream) -> usize {
        let u = rng.uniform();
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.cumulative.len() - 1)
    }
}

/// Children of a crossover at zero-based position `k` with blend factor `alpha`.
///
/// Gene `k` is blended; genes right of `k` are exchanged between the
/// parents, or the genes left of `k` when `k` is the last position.
pub fn blend_crossover(mother: &[f64], father: &[f64], k: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let p = mother.len();
    let diff = mother[k] - father[k];
    let g1 = mother[k] - alpha * diff;
    let g2 = father[k] + alpha * diff;
    let mut c1 = Vec::with_capacity(p);
    let mut c2 = Vec::with_capacity(p);
    if k + 1 < p {
        c1.extend_from_slice(&mother[..k]);
        c1.push(g1);
        c1.extend_from_slice(&father[k + 1..]);
        c2.extend_from_slice(&father[..k]);
        c2.push(g2);
        c2.extend_from_slice(&mother[k + 1..]);
    } else {
        c1.extend_from_slice(&father[..k]);
        c1.push(g1);
        c2.extend_from_slice(&mother[..k]);
        c2.push(g2);
    }
    (c1, c2)
}

/// Crossover with position `⌊u·p⌋ + 1` and blend factor `α ~ U(0,1)`.
///
/// Children outside the feasible region are clipped to the box; if a linear
/// constraint still fails, α is redrawn up to `alpha_redraws` times before
/// the repair coordinate is moved.
pub fn ga_crossover(
    mother: &[f64],
    father: &[f64],
    cs: &ConstraintSystem,
    alpha_redraws: usize,
    rng: &mut RngStream,
) -> Result<(Vec<f64>, Vec<f64>), MetaError> {
    if mother.len() != father.len() {
        return Err(MetaError::DimensionMismatch(mother.len(), father.len()));
    }
    if mother.len() != cs.dimension() {
        return Err(MetaError::DimensionMismatch(mother.len(), cs.dimension()));
    }
    let p = mother.len();
    let k = ((rng.uniform() * p as f64) as usize).min(p - 1);
    let mut attempt = 0;
    loop {
        let alpha = rng.uniform();
        let (mut c1, mut c2) = blend_crossover(mother, father, k, alpha);
        clip_to_box(cs, &mut c1);
        clip_to_box(cs, &mut c2);
        if (cs.is_strictly_feasible(&c1) && cs.is_strictly_feasible(&c2)) || attempt >= alpha_redraws {
            cs.repair(&mut c1);
            cs.repair(&mut c2);
            return Ok((c1, c2));
        }
        attempt += 1;
    }
}

/// Number of genes mutated per generation: `round(rate·(M − 1)·p)`, at least 1.
pub fn mutation_count(rate: f64, population: usize, dimension: usize) -> usize {
    ((rate * ((population - 1) * dimension) as f64).round() as usize).max(1)
}

fn dispersion(costs: impl Iterator<Item = f64>, stat: FitnessStatistic) -> f64 {
    let vals: Vec<f64> = costs
        .map(|c| match stat {
            FitnessStatistic::Cost => c,
            FitnessStatistic::InverseCost => 1.0 / c,
        })
        .collect();
    if vals.windows(2).all(|w| w[0] == w[1]) {
        return 0.0;
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var.is_finite() {
        var.sqrt()
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Default)]
pub struct GeneticAlgorithm {
    pub config: GaConfig,
}

impl GeneticAlgorithm {
    pub fn new(config: GaConfig) -> Self {
        GeneticAlgorithm { config }
    }

    /// Evolves a given initial population (of size `config.population`).
    pub fn evolve(
        &self,
        problem: &ObjectiveProblem<'_>,
        initial: Vec<Vec<f64>>,
        rng: &mut RngStream,
    ) -> Result<Solution, OptimError> {
        let cfg = &self.config;
        cfg.validate().map_err(|e| OptimError::Config(e.to_string()))?;
        let cs = problem.constraints();
        let p = problem.dimension();
        let m = cfg.population;
        if initial.len() != m {
            return Err(OptimError::Config(format!(
                "initial population has {} members, expected {m}",
                initial.len()
            )));
        }
        let mut pop: Vec<(Vec<f64>, f64)> = initial
            .into_iter()
            .map(|x| {
                let f = problem.evaluate(&x);
                (x, f)
            })
            .collect();
        let mut evaluations = m;
        sort_by_cost(&mut pop);
        let keep = cfg.elite_count();
        let selector = ParentSelector::new(keep);
        let n_mut = mutation_count(cfg.mutation_rate, m, p);
        let mut trace = Vec::new();
        let mut iterations = 0;
        let mut best = pop[0].clone();

        for generation in 1..=cfg.max_iterations {
            iterations = generation;
            if dispersion(pop.iter().map(|c| c.1), cfg.stop_statistic) < cfg.fitness_sd_threshold {
                break;
            }
            pop.truncate(keep);
            while pop.len() < m {
                let mo = selector.draw(rng);
                let mut fa = selector.draw(rng);
                for _ in 0..10 {
                    if fa != mo {
                        break;
                    }
                    fa = selector.draw(rng);
                }
                let (c1, c2) = ga_crossover(&pop[mo].0, &pop[fa].0, cs, cfg.alpha_redraws, rng)
                    .map_err(|e| OptimError::Config(e.to_string()))?;
                pop.push((c1, f64::NAN));
                if pop.len() < m {
                    pop.push((c2, f64::NAN));
                }
            }
            // mutate distinct genes outside the best chromosome
            let mut hit: Vec<usize> = Vec::with_capacity(n_mut);
            while hit.len() < n_mut.min((m - 1) * p) {
                let pos = p + rng.index((m - 1) * p);
                if !hit.contains(&pos) {
                    hit.push(pos);
                }
            }
            for pos in hit {
                let (row, col) = (pos / p, pos % p);
                let (lo, hi) = cs.bounds[col].interior();
                pop[row].0[col] = rng.uniform_in(lo, hi);
                cs.repair(&mut pop[row].0);
                pop[row].1 = f64::NAN;
            }
            for c in pop.iter_mut().filter(|c| c.1.is_nan()) {
                c.1 = problem.evaluate(&c.0);
                evaluations += 1;
            }
            sort_by_cost(&mut pop);
            if pop[0].1 < best.1 {
                best = pop[0].clone();
            }
            trace.push(best.1);
        }
        Ok(Solution {
            point: best.0,
            value: best.1,
            iterations,
            evaluations,
            trace,
        })
    }
}

impl Optimizer for GeneticAlgorithm {
    fn name(&self) -> &'static str {
        "ga"
    }

    fn config(&self) -> serde_json::Value {
        serde_json::to_value(&self.config).expect("config serializes")
    }

    fn minimize(&self, problem: &ObjectiveProblem<'_>, rng: &mut RngStream) -> Result<Solution, OptimError> {
        let initial = (0..self.config.population)
            .map(|_| sample_feasible(problem.constraints(), rng))
            .collect::<Result<Vec<_>, _>>()?;
        self.evolve(problem, initial, rng)
    }
}
