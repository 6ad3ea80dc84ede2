use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{coefficient_of_variation, run_once, split_seed, ObjectiveProblem, OptimError, Optimizer, OptimizerRun};
use crate::curve::ModelKind;
use crate::objective::ObjectiveSpec;

/// Which multistart summary an optimizer is compared by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    /// Expected value over starts (the metaheuristics).
    Mean,
    /// Best value over starts (the local baseline).
    Min,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub run_index: usize,
    pub seed: u64,
    pub error: String,
}

/// Aggregate of a multistart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultistartReport {
    pub optimizer: String,
    #[serde(default)]
    pub model: Option<ModelKind>,
    pub n_starts: usize,
    pub master_seed: u64,
    pub statistic: Statistic,
    pub mean_value: f64,
    pub min_value: f64,
    /// Percent; `None` when the mean is zero.
    pub coefficient_of_variation: Option<f64>,
    #[serde(default)]
    pub goodness_of_fit: Option<f64>,
    pub total_time: f64,
    pub average_time: f64,
    pub runs: Vec<OptimizerRun>,
    pub failures: Vec<RunFailure>,
}

impl MultistartReport {
    /// Builds the report from completed runs in any order.
    pub fn aggregate(
        optimizer: &str,
        model: Option<ModelKind>,
        statistic: Statistic,
        master_seed: u64,
        mut runs: Vec<OptimizerRun>,
        mut failures: Vec<RunFailure>,
        total_time: f64,
    ) -> Result<Self, OptimError> {
        runs.sort_by_key(|r| r.run_index);
        failures.sort_by_key(|f| f.run_index);
        let n_starts = runs.len() + failures.len();
        if runs.is_empty() {
            return Err(OptimError::AllRunsFailed(n_starts));
        }
        let values: Vec<f64> = runs.iter().map(|r| r.best_value).collect();
        let mean_value = values.iter().sum::<f64>() / values.len() as f64;
        let min_value = values.iter().copied().fold(f64::INFINITY, f64::min);
        let average_time = runs.iter().map(|r| r.wall_time).sum::<f64>() / runs.len() as f64;
        Ok(MultistartReport {
            optimizer: optimizer.to_string(),
            model,
            n_starts,
            master_seed,
            statistic,
            mean_value,
            min_value,
            coefficient_of_variation: coefficient_of_variation(&values).ok(),
            goodness_of_fit: None,
            total_time,
            average_time,
            runs,
            failures,
        })
    }

    /// Value used to rank this optimizer against others.
    pub fn comparison_value(&self) -> f64 {
        match self.statistic {
            Statistic::Mean => self.mean_value,
            Statistic::Min => self.min_value,
        }
    }

    /// The run with the lowest objective (earliest index on ties).
    pub fn best_run(&self) -> &OptimizerRun {
        self.runs
            .iter()
            .min_by(|a, b| a.best_value.total_cmp(&b.best_value))
            .expect("report holds at least one run")
    }

    /// Fills in the goodness of fit of the best run.
    pub fn attach_goodness_of_fit(&mut self, spec: &ObjectiveSpec) {
        self.goodness_of_fit = self
            .best_run()
            .best_params
            .as_ref()
            .and_then(|p| spec.goodness_of_fit(p).ok());
    }
}

/// Runs `optimizer` from `n_starts` independent seeds derived from `master_seed`.
///
/// Runs may execute concurrently; the report does not depend on scheduling
/// except for the timing fields. Failed runs are recorded, not retried.
pub fn multistart(
    optimizer: &dyn Optimizer,
    problem: &ObjectiveProblem<'_>,
    n_starts: usize,
    master_seed: u64,
) -> Result<MultistartReport, OptimError> {
    if n_starts == 0 {
        return Err(OptimError::Config("n_starts must be at least 1".into()));
    }
    let start = Instant::now();
    let outcomes: Vec<Result<OptimizerRun, RunFailure>> = (0..n_starts)
        .into_par_iter()
        .map(|i| {
            let seed = split_seed(master_seed, i as u64);
            run_once(optimizer, problem, seed, i).map_err(|e| {
                log::warn!("{} run {i} failed: {e}", optimizer.name());
                RunFailure {
                    run_index: i,
                    seed,
                    error: e.to_string(),
                }
            })
        })
        .collect();
    let total_time = start.elapsed().as_secs_f64();
    let (mut runs, mut failures) = (Vec::new(), Vec::new());
    for o in outcomes {
        match o {
            Ok(r) => runs.push(r),
            Err(f) => failures.push(f),
        }
    }
    MultistartReport::aggregate(
        optimizer.name(),
        problem.model(),
        optimizer.statistic(),
        master_seed,
        runs,
        failures,
        total_time,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{Bound, ConstraintSystem};
    use crate::optim::{sample_feasible, Objective, RngStream, Solution};

    struct Sphere;
    impl Objective for Sphere {
        fn dimension(&self) -> usize {
            2
        }
        fn value(&self, theta: &[f64]) -> f64 {
            theta.iter().map(|x| x * x).sum::<f64>() + 1.0
        }
    }

    /// Returns its random start.
    struct RandomGuess;
    impl Optimizer for RandomGuess {
        fn name(&self) -> &'static str {
            "guess"
        }
        fn config(&self) -> serde_json::Value {
            serde_json::json!({})
        }
        fn minimize(&self, p: &ObjectiveProblem<'_>, rng: &mut RngStream) -> Result<Solution, OptimError> {
            let point = sample_feasible(p.constraints(), rng)?;
            if point[0] > 0.8 {
                return Err(OptimError::Config("synthetic failure".into()));
            }
            Ok(Solution {
                value: p.evaluate(&point),
                point,
                iterations: 1,
                evaluations: 1,
                trace: vec![],
            })
        }
    }

    fn square() -> ConstraintSystem {
        ConstraintSystem::from_box(vec![Bound::new(-1.0, 1.0); 2])
    }

    #[test]
    fn single_start() {
        let cs = square();
        let p = ObjectiveProblem::new(&Sphere, &cs).unwrap();
        let mut seed = 0;
        let r = loop {
            if let Ok(r) = multistart(&RandomGuess, &p, 1, seed) {
                break r;
            }
            seed += 1;
        };
        assert_eq!(r.mean_value, r.min_value);
        assert_eq!(r.mean_value, r.runs[0].best_value);
        assert_eq!(r.coefficient_of_variation, Some(0.0));
    }

    #[test]
    fn deterministic_and_records_failures() {
        let cs = square();
        let p = ObjectiveProblem::new(&Sphere, &cs).unwrap();
        let a = multistart(&RandomGuess, &p, 40, 11).unwrap();
        let b = multistart(&RandomGuess, &p, 40, 11).unwrap();
        assert_eq!(a.mean_value.to_bits(), b.mean_value.to_bits());
        assert_eq!(a.failures, b.failures);
        assert!(!a.failures.is_empty());
        assert_eq!(a.runs.len() + a.failures.len(), 40);
        assert!(a.min_value <= a.mean_value);
    }

    #[test]
    fn aggregation_ignores_completion_order() {
        let cs = square();
        let p = ObjectiveProblem::new(&Sphere, &cs).unwrap();
        let a = multistart(&RandomGuess, &p, 30, 3).unwrap();
        let mut shuffled = a.runs.clone();
        shuffled.reverse();
        shuffled.swap(0, 5);
        let b = MultistartReport::aggregate(
            "guess",
            None,
            Statistic::Mean,
            3,
            shuffled,
            a.failures.clone(),
            a.total_time,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_starts_rejected() {
        let cs = square();
        let p = ObjectiveProblem::new(&Sphere, &cs).unwrap();
        assert!(multistart(&RandomGuess, &p, 0, 1).is_err());
    }
}
