//! Particle swarm with inertia, a cognitive pull toward each particle's own
//! best and a social pull toward the swarm best.

use serde::{Deserialize, Serialize};

use super::{clip_to_box, linear_ok, MetaError};
use crate::optim::{sample_feasible, ObjectiveProblem, OptimError, Optimizer, RngStream, Solution};

/// Inertia weight: fixed, or decreasing linearly from `w_max` to `w_min`
/// over `max_iterations`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inertia {
    Constant(f64),
    Linear { w_max: f64, w_min: f64 },
}

impl Inertia {
    pub fn at(&self, t: usize, t_max: usize) -> f64 {
        match *self {
            Inertia::Constant(w) => w,
            Inertia::Linear { w_max, w_min } => w_max - (w_max - w_min) * t as f64 / t_max.max(1) as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub inertia: Inertia,
    pub cognitive: f64,
    pub social: f64,
    /// Velocity bound per dimension as a fraction of that dimension's width.
    pub velocity_fraction: f64,
    pub max_iterations: usize,
    /// Pair the cognitive coefficient with the swarm best and the social one
    /// with the personal best, as the velocity formula is printed.
    pub swap_pulls: bool,
    /// Velocity redraws tried when a move breaks a linear constraint.
    pub redraws: usize,
}

impl Default for PsoConfig {
    fn default() -> Self {
        PsoConfig {
            swarm_size: 47,
            inertia: Inertia::Constant(-0.1832),
            cognitive: 0.5287,
            social: 3.1913,
            velocity_fraction: 0.5,
            max_iterations: 1_000,
            swap_pulls: false,
            redraws: 10,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<(), MetaError> {
        if self.swarm_size == 0 {
            return Err(MetaError::Config("pso.swarm_size must be at least 1".into()));
        }
        if !(self.velocity_fraction > 0.0) {
            return Err(MetaError::Config("pso.velocity_fraction must be positive".into()));
        }
        Ok(())
    }

    /// Coefficients applied to (personal best, swarm best).
    fn pulls(&self) -> (f64, f64) {
        if self.swap_pulls {
            (self.social, self.cognitive)
        } else {
            (self.cognitive, self.social)
        }
    }
}

/// `v' = w·v + c_p·r₁·(pbest − x) + c_g·r₂·(gbest − x)`, each component
/// clamped to `±v_max`. `r1` and `r2` hold one draw per dimension.
#[allow(clippy::too_many_arguments)]
pub fn velocity_update(
    velocity: &[f64],
    position: &[f64],
    personal_best: &[f64],
    global_best: &[f64],
    inertia: f64,
    personal_pull: f64,
    global_pull: f64,
    r1: &[f64],
    r2: &[f64],
    v_max: &[f64],
) -> Vec<f64> {
    (0..position.len())
        .map(|j| {
            let v = inertia * velocity[j]
                + personal_pull * r1[j] * (personal_best[j] - position[j])
                + global_pull * r2[j] * (global_best[j] - position[j]);
            v.clamp(-v_max[j], v_max[j])
        })
        .collect()
}

/// One velocity update with fresh `U[0,1]` draws per dimension.
#[allow(clippy::too_many_arguments)]
pub fn pso_velocity(
    velocity: &[f64],
    position: &[f64],
    personal_best: &[f64],
    global_best: &[f64],
    config: &PsoConfig,
    t: usize,
    v_max: &[f64],
    rng: &mut RngStream,
) -> Vec<f64> {
    let p = position.len();
    let r1: Vec<f64> = (0..p).map(|_| rng.uniform()).collect();
    let r2: Vec<f64> = (0..p).map(|_| rng.uniform()).collect();
    let (cp, cg) = config.pulls();
    velocity_update(
        velocity,
        position,
        personal_best,
        global_best,
        config.inertia.at(t, config.max_iterations),
        cp,
        cg,
        &r1,
        &r2,
        v_max,
    )
}

#[derive(Debug, Clone, Default)]
pub struct ParticleSwarm {
    pub config: PsoConfig,
}

impl ParticleSwarm {
    pub fn new(config: PsoConfig) -> Self {
        ParticleSwarm { config }
    }

    /// Flies a swarm from the given starting positions with zero velocity.
    pub fn fly(
        &self,
        problem: &ObjectiveProblem<'_>,
        start: Vec<Vec<f64>>,
        rng: &mut RngStream,
    ) -> Result<Solution, OptimError> {
        let cfg = &self.config;
        cfg.validate().map_err(|e| OptimError::Config(e.to_string()))?;
        let cs = problem.constraints();
        let p = problem.dimension();
        let v_max: Vec<f64> = cs.bounds.iter().map(|b| cfg.velocity_fraction * b.width()).collect();

        let mut pos = start;
        let mut vel = vec![vec![0.0; p]; pos.len()];
        let mut best_val: Vec<f64> = pos.iter().map(|x| problem.evaluate(x)).collect();
        let mut best_pos = pos.clone();
        let mut evaluations = pos.len();
        let leader = |vals: &[f64]| {
            (0..vals.len())
                .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
                .expect("non-empty swarm")
        };
        let mut g = leader(&best_val);
        let mut global = best_pos[g].clone();

        let mut trace = Vec::new();
        let mut iterations = 0;
        for t in 0..cfg.max_iterations {
            iterations = t + 1;
            let mut improved = false;
            for m in 0..pos.len() {
                let mut next = Vec::new();
                let mut v = Vec::new();
                for attempt in 0..=cfg.redraws {
                    v = pso_velocity(&vel[m], &pos[m], &best_pos[m], &global, cfg, t, &v_max, rng);
                    next = pos[m].iter().zip(&v).map(|(x, dv)| x + dv).collect();
                    clip_to_box(cs, &mut next);
                    if linear_ok(cs, &next) || attempt == cfg.redraws {
                        break;
                    }
                }
                cs.repair(&mut next);
                let f = problem.evaluate(&next);
                evaluations += 1;
                vel[m] = v;
                pos[m] = next;
                if f < best_val[m] {
                    best_val[m] = f;
                    best_pos[m].clone_from(&pos[m]);
                    improved = true;
                }
            }
            g = leader(&best_val);
            global.clone_from(&best_pos[g]);
            trace.push(best_val[g]);
            if !improved {
                break;
            }
        }
        Ok(Solution {
            point: global,
            value: best_val[g],
            iterations,
            evaluations,
            trace,
        })
    }
}

impl Optimizer for ParticleSwarm {
    fn name(&self) -> &'static str {
        "pso"
    }

    fn config(&self) -> serde_json::Value {
        serde_json::to_value(&self.config).expect("config serializes")
    }

    fn minimize(&self, problem: &ObjectiveProblem<'_>, rng: &mut RngStream) -> Result<Solution, OptimError> {
        let start = (0..self.config.swarm_size)
            .map(|_| sample_feasible(problem.constraints(), rng))
            .collect::<Result<Vec<_>, _>>()?;
        self.fly(problem, start, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{Bound, ConstraintSystem};
    use crate::optim::Objective;

    #[test]
    fn equilibrium_velocity_is_zero() {
        let x = [0.1, 0.2, 0.3];
        let cfg = PsoConfig::default();
        let v = pso_velocity(&[0.0; 3], &x, &x, &x, &cfg, 0, &[1.0; 3], &mut RngStream::new(1));
        assert_eq!(v, vec![0.0; 3]);
    }

    #[test]
    fn schedule_endpoints() {
        let w = Inertia::Linear { w_max: 0.9, w_min: 0.4 };
        assert_eq!(w.at(0, 100), 0.9);
        assert!((w.at(100, 100) - 0.4).abs() < 1e-15);
        assert_eq!(Inertia::Constant(-0.1832).at(57, 100), -0.1832);
    }

    #[test]
    fn social_term_alone() {
        let cfg = PsoConfig::default();
        let (cp, cg) = cfg.pulls();
        let x = [0.0, 0.0, 0.0, 0.0];
        let gbest = [1.0, 0.0, 0.0, 0.0];
        let v = velocity_update(
            &[0.0; 4], &x, &x, &gbest, -0.1832, cp, cg, &[0.7; 4], &[1.0; 4], &[10.0; 4],
        );
        assert_eq!(v, vec![3.1913, 0.0, 0.0, 0.0]);
        let v = velocity_update(
            &[0.0; 4], &x, &x, &gbest, -0.1832, cp, cg, &[0.7; 4], &[1.0; 4], &[0.5; 4],
        );
        assert_eq!(v[0], 0.5);
        let literal = PsoConfig {
            swap_pulls: true,
            ..PsoConfig::default()
        };
        let (cp, cg) = literal.pulls();
        let v = velocity_update(
            &[0.0; 4], &x, &x, &gbest, -0.1832, cp, cg, &[0.7; 4], &[1.0; 4], &[10.0; 4],
        );
        assert_eq!(v[0], 0.5287);
    }

    struct Bowl;
    impl Objective for Bowl {
        fn dimension(&self) -> usize {
            2
        }
        fn value(&self, t: &[f64]) -> f64 {
            (t[0] - 0.5).powi(2) + (t[1] + 0.25).powi(2)
        }
    }

    #[test]
    fn lone_particle_at_optimum_stalls() {
        let cs = ConstraintSystem::from_box(vec![Bound::new(-1.0, 1.0); 2]);
        let problem = ObjectiveProblem::new(&Bowl, &cs).unwrap();
        let pso = ParticleSwarm::new(PsoConfig {
            swarm_size: 1,
            ..PsoConfig::default()
        });
        let sol = pso
            .fly(&problem, vec![vec![0.5, -0.25]], &mut RngStream::new(3))
            .unwrap();
        assert_eq!(sol.iterations, 1);
        assert_eq!(sol.value, 0.0);
    }

    #[test]
    fn converges_on_bowl() {
        let cs = ConstraintSystem::from_box(vec![Bound::new(-1.0, 1.0); 2]);
        let problem = ObjectiveProblem::new(&Bowl, &cs).unwrap();
        let sol = ParticleSwarm::default()
            .minimize(&problem, &mut RngStream::new(5))
            .unwrap();
        assert!(sol.value < 1e-10, "{}", sol.value);
        assert!(sol.trace.windows(2).all(|w| w[1] <= w[0]));
    }
}
