//! Term-structure estimation with Nelson-Siegel and Svensson curves.
//!
//! Bond prices are fitted by minimizing a spread- and staleness-weighted sum
//! of squared pricing errors. Four population or trajectory metaheuristics
//! (genetic algorithm, continuous ant colony, particle swarm, very fast
//! simulated reannealing) and a BFGS descent inside an adaptive logarithmic
//! barrier are provided, all driven through a seeded multistart harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bond;
pub mod curve;
pub mod ingest;
pub mod local;
pub mod meta;
pub mod objective;
pub mod optim;
pub mod testkit;

pub use bond::{accrued_interest, build_schedule, price, BondSpec, CashFlowSchedule, DayCount};
pub use curve::{constraint_system, is_feasible, ConstraintSystem, CurveParams, ModelKind};
pub use objective::{BondObservation, ObjectiveSpec, Offer, Side};
pub use optim::{multistart, MultistartReport, ObjectiveProblem, Optimizer, OptimizerRun, RngStream};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/curves.md")]
    struct Curves;
    #[doc = include_str!("../../../book/src/pricing.md")]
    struct Pricing;
    #[doc = include_str!("../../../book/src/objective.md")]
    struct Objective;
    #[doc = include_str!("../../../book/src/ingest.md")]
    struct Ingest;
    #[doc = include_str!("../../../book/src/optimizers.md")]
    struct Optimizers;
    #[doc = include_str!("../../../book/src/multistart.md")]
    struct Multistart;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
