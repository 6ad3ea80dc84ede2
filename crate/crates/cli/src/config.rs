use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use termfit::ingest::IngestOptions;
use termfit::local::{BarrierBfgs, BfgsConfig};
use termfit::meta::{
    AcoConfig, AntColony, GaConfig, GeneticAlgorithm, ParticleSwarm, PsoConfig, SaConfig, SimulatedAnnealing,
};
use termfit::Optimizer;

use crate::CliError;

/// Contents of the `--config` JSON file. Every block and field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub ga: GaConfig,
    pub aco: AcoConfig,
    pub pso: PsoConfig,
    pub sa: SaConfig,
    pub bfgs: BfgsConfig,
    pub data: IngestOptions,
}

impl FitConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::input(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::input(path, e))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |block: &str, e: &dyn fmt::Display| CliError::Config(format!("{block}: {e}"));
        self.ga.validate().map_err(|e| bad("ga", &e))?;
        self.aco.validate().map_err(|e| bad("aco", &e))?;
        self.pso.validate().map_err(|e| bad("pso", &e))?;
        self.sa.validate().map_err(|e| bad("sa", &e))?;
        self.bfgs.validate().map_err(|e| bad("bfgs", &e))?;
        let d = &self.data;
        if !(d.face > 0.0 && d.face.is_finite()) {
            return Err(CliError::Config(format!("data.face must be positive, got {}", d.face)));
        }
        if let Some(cap) = d.weight_cap {
            if !(cap > 0.0 && cap <= 1.0) {
                return Err(CliError::Config(format!(
                    "data.weight_cap must lie in (0, 1], got {cap}"
                )));
            }
        }
        Ok(())
    }

    pub fn optimizer(&self, kind: OptimizerKind) -> Box<dyn Optimizer> {
        match kind {
            OptimizerKind::Ga => Box::new(GeneticAlgorithm::new(self.ga.clone())),
            OptimizerKind::Aco => Box::new(AntColony::new(self.aco.clone())),
            OptimizerKind::Pso => Box::new(ParticleSwarm::new(self.pso.clone())),
            OptimizerKind::Sa => Box::new(SimulatedAnnealing::new(self.sa.clone())),
            OptimizerKind::Bfgs => Box::new(BarrierBfgs::new(self.bfgs.clone())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Ga,
    Aco,
    Pso,
    Sa,
    Bfgs,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 5] = [
        OptimizerKind::Pso,
        OptimizerKind::Sa,
        OptimizerKind::Ga,
        OptimizerKind::Aco,
        OptimizerKind::Bfgs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Ga => "ga",
            OptimizerKind::Aco => "aco",
            OptimizerKind::Pso => "pso",
            OptimizerKind::Sa => "sa",
            OptimizerKind::Bfgs => "bfgs",
        }
    }

    /// Parses a comma-separated list, keeping the first occurrence of repeats.
    pub fn parse_list(s: &str) -> Result<Vec<Self>, CliError> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let k: OptimizerKind = part.parse()?;
            if !out.contains(&k) {
                out.push(k);
            }
        }
        Ok(out)
    }
}

impl FromStr for OptimizerKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OptimizerKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| CliError::Config(format!("unknown optimizer `{s}` (expected ga, aco, pso, sa or bfgs)")))
    }
}
