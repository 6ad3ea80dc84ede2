use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Parser, Subcommand, ValueEnum};

use termfit::{DayCount, ModelKind};
use termfit_cli::{cmd_curve, cmd_fit, cmd_price, cmd_synth, CliError, FitRequest, OptimizerKind, TenorGrid};

#[derive(Parser)]
#[command(
    name = "termfit",
    version,
    about = "Fit Nelson-Siegel and Svensson yield curves to bond books"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Ns,
    Svensson,
}

impl From<Model> for ModelKind {
    fn from(m: Model) -> Self {
        match m {
            Model::Ns => ModelKind::NelsonSiegel,
            Model::Svensson => ModelKind::Svensson,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Basis {
    Act365,
    Act360,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest the books and fit a curve with one or more optimizers.
    Fit {
        #[arg(long, value_enum)]
        model: Model,
        /// Comma-separated subset of pso,sa,ga,aco,bfgs.
        #[arg(long, default_value = "pso,sa,ga,aco,bfgs")]
        optimizer: String,
        #[arg(long, default_value_t = 50)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        valuation_date: NaiveDate,
        #[arg(long)]
        operations: PathBuf,
        #[arg(long)]
        offers: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        weight_cap: Option<f64>,
    },
    /// Model dirty prices of a bonds CSV under fitted parameters.
    Price {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        bonds: PathBuf,
        #[arg(long)]
        valuation_date: NaiveDate,
        #[arg(long, value_enum, default_value = "act365")]
        day_count: Basis,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spot and forward rates over a tenor grid.
    Curve {
        #[arg(long)]
        params: PathBuf,
        /// Inclusive `start:stop:step` in years.
        #[arg(long, default_value = "0.05:20:0.05")]
        grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic pair of books priced from a reference curve.
    Synth {
        #[arg(long, value_enum)]
        model: Model,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Standard deviation of the price noise.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn sink(out: Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    match out {
        Some(path) => File::create(&path)
            .map(|f| Box::new(f) as Box<dyn Write>)
            .map_err(|source| CliError::Output {
                path: path.display().to_string(),
                source,
            }),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit {
            model,
            optimizer,
            starts,
            seed,
            valuation_date,
            operations,
            offers,
            config,
            out,
            weight_cap,
        } => {
            let req = FitRequest {
                model: model.into(),
                optimizers: OptimizerKind::parse_list(&optimizer)?,
                n_starts: starts,
                master_seed: seed,
                valuation_date,
                operations,
                offers,
                config,
                out,
                weight_cap,
            };
            let summary = cmd_fit(&req)?;
            for r in &summary.reports {
                println!(
                    "{:<5} objective {:.6e}  cv {}  runs {}/{}",
                    r.optimizer,
                    r.comparison_value(),
                    r.coefficient_of_variation.map_or("n/a".into(), |c| format!("{c:.3}%")),
                    r.runs.len(),
                    r.n_starts
                );
            }
            for f in &summary.failures {
                println!("{:<5} failed: {}", f.optimizer, f.error);
            }
            println!("artifacts in {}", summary.artifacts.dir.display());
        }
        Command::Price {
            params,
            bonds,
            valuation_date,
            day_count,
            out,
        } => {
            let basis = match day_count {
                Basis::Act365 => DayCount::Actual365Fixed,
                Basis::Act360 => DayCount::Actual360,
            };
            let outcome = cmd_price(&params, &bonds, valuation_date, basis, sink(out)?)?;
            for (id, why) in &outcome.skipped {
                eprintln!("warning: skipped {id}: {why}");
            }
        }
        Command::Curve { params, grid, out } => {
            let grid: TenorGrid = grid.parse()?;
            cmd_curve(&params, &grid, sink(out)?)?;
        }
        Command::Synth {
            model,
            seed,
            noise,
            out,
        } => {
            let valuation = cmd_synth(model.into(), seed, noise, &out)?;
            println!("wrote {} (valuation date {valuation})", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
