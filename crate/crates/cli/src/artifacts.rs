use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use termfit::ingest::{write_exclusions, Exclusion};
use termfit::optim::Statistic;
use termfit::{CurveParams, ModelKind, MultistartReport};

use crate::{CliError, TenorGrid};

/// An optimizer whose every run failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedOptimizer {
    pub optimizer: String,
    pub error: String,
}

/// Best fit over all optimizers, as written to `best_params.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestFit {
    pub model: ModelKind,
    pub optimizer: String,
    pub run_index: usize,
    pub seed: u64,
    pub objective_value: f64,
    pub params: CurveParams,
}

/// File layout of one `fit` output directory.
#[derive(Debug, Clone)]
pub struct FitArtifacts {
    pub dir: PathBuf,
    pub model: ModelKind,
}

impl FitArtifacts {
    pub fn new(dir: &Path, model: ModelKind) -> Self {
        FitArtifacts {
            dir: dir.to_path_buf(),
            model,
        }
    }

    pub fn report(&self, optimizer: &str) -> PathBuf {
        self.dir.join(format!("report_{optimizer}.json"))
    }

    pub fn comparison(&self) -> PathBuf {
        self.dir.join("comparison.csv")
    }

    pub fn best_params(&self) -> PathBuf {
        self.dir.join("best_params.json")
    }

    pub fn curve_samples(&self) -> PathBuf {
        self.dir.join("curve_samples.csv")
    }

    pub fn exclusions(&self) -> PathBuf {
        self.dir.join("exclusions.jsonl")
    }

    pub fn failures(&self) -> PathBuf {
        self.dir.join("failures.json")
    }

    fn write_with(
        &self,
        path: PathBuf,
        f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
    ) -> Result<(), CliError> {
        let wrap = |source| CliError::Output {
            path: path.display().to_string(),
            source,
        };
        let mut w = BufWriter::new(File::create(&path).map_err(wrap)?);
        f(&mut w).and_then(|_| w.flush()).map_err(wrap)
    }

    fn write_json<T: Serialize>(&self, path: PathBuf, value: &T) -> Result<(), CliError> {
        self.write_with(path, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)
        })
    }

    pub fn write_report(&self, report: &MultistartReport) -> Result<(), CliError> {
        self.write_json(self.report(&report.optimizer), report)
    }

    pub fn write_failures(&self, failures: &[FailedOptimizer]) -> Result<(), CliError> {
        self.write_json(self.failures(), &failures)
    }

    pub fn write_exclusions(&self, exclusions: &[Exclusion]) -> Result<(), CliError> {
        self.write_with(self.exclusions(), |w| {
            write_exclusions(exclusions, w).map_err(io::Error::other)
        })
    }

    /// One row per optimizer, best comparison value first.
    pub fn write_comparison(&self, reports: &[MultistartReport]) -> Result<(), CliError> {
        let mut rows: Vec<&MultistartReport> = reports.iter().collect();
        rows.sort_by(|a, b| a.comparison_value().total_cmp(&b.comparison_value()));
        self.write_with(self.comparison(), |w| {
            let mut csv = csv::Writer::from_writer(w);
            csv.write_record([
                "optimizer",
                "statistic",
                "objective_value",
                "coefficient_of_variation",
                "goodness_of_fit",
                "average_time",
                "mean_value",
                "min_value",
                "runs",
                "failed_runs",
            ])?;
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            for r in rows {
                let statistic = match r.statistic {
                    Statistic::Mean => "mean",
                    Statistic::Min => "min",
                };
                csv.write_record([
                    r.optimizer.clone(),
                    statistic.to_string(),
                    r.comparison_value().to_string(),
                    opt(r.coefficient_of_variation),
                    opt(r.goodness_of_fit),
                    r.average_time.to_string(),
                    r.mean_value.to_string(),
                    r.min_value.to_string(),
                    r.runs.len().to_string(),
                    r.failures.len().to_string(),
                ])?;
            }
            csv.flush()
        })
    }

    /// Writes `best_params.json` and `curve_samples.csv` from the lowest
    /// objective value over every run of every optimizer. Ties keep the
    /// earlier optimizer in request order.
    pub fn write_best(&self, reports: &[MultistartReport]) -> Result<Option<BestFit>, CliError> {
        let mut best: Option<BestFit> = None;
        for r in reports {
            let run = r.best_run();
            let Some(params) = run.best_params else { continue };
            if best.as_ref().is_none_or(|b| run.best_value < b.objective_value) {
                best = Some(BestFit {
                    model: self.model,
                    optimizer: r.optimizer.clone(),
                    run_index: run.run_index,
                    seed: run.seed,
                    objective_value: run.best_value,
                    params,
                });
            }
        }
        if let Some(b) = &best {
            self.write_json(self.best_params(), b)?;
            self.write_with(self.curve_samples(), |w| {
                write_curve(&b.params, &TenorGrid::fit_samples(), w)
            })?;
        }
        Ok(best)
    }
}

/// `tenor_years,spot_rate,forward_rate` rows over `grid`.
pub fn write_curve(params: &CurveParams, grid: &TenorGrid, out: impl Write) -> io::Result<()> {
    let mut csv = csv::Writer::from_writer(out);
    csv.write_record(["tenor_years", "spot_rate", "forward_rate"])?;
    for t in grid.tenors() {
        let spot = params.spot_rate(t).map_err(io::Error::other)?;
        let fwd = params.forward_rate(t).map_err(io::Error::other)?;
        csv.write_record([t.to_string(), spot.to_string(), fwd.to_string()])?;
    }
    csv.flush()
}
