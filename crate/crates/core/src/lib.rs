//! Positionality-weighted cumulative voting.
//!
//! Voters spread a point budget over `k` value dimensions under quadratic or
//! linear cost. Voters who concentrate their budget on one dimension form a
//! minority, and the aggregate for that dimension can give the minority's
//! votes extra weight. Five methods are supported:
//!
//! | code   | voting    | weighting   |
//! |--------|-----------|-------------|
//! | `q-nw` | quadratic | none        |
//! | `q-sw` | quadratic | square root |
//! | `q-lw` | quadratic | linear      |
//! | `l-lw` | linear    | linear      |
//! | `l-nw` | linear    | none        |
//!
//! The crate is split into:
//!
//! - [`model`]: methods, scenarios, ballots, and per-method parameters;
//! - [`analytic`]: closed-form aggregate means, the minority cap, and curve sweeps;
//! - [`ballot`]: ballot validation, minority extraction, and the weighted
//!   decomposition of real ballots;
//! - [`simulation`]: seeded Monte Carlo populations checked against the closed forms;
//! - [`formats`]: ballot file readers and writers.
//!
//! ```
//! use posivote_core::{mean_ratio, MethodSpec};
//!
//! // Linear voting with linear weighting over 3 dimensions, a quarter of the
//! // voters in the minority, and the minority mean at 0.
//! let ratio = mean_ratio(MethodSpec::L_LW, 3, 0.25, 0.0).unwrap();
//! assert!((ratio - 1.0 / 3.75).abs() < 1e-12);
//! ```

pub mod analytic;
pub mod ballot;
pub mod erf;
mod error;
pub mod formats;
pub mod histogram;
pub mod model;
pub mod simulation;

pub use analytic::{
    coefficient, curve_grid, mean_ratio, minority_cap, weighted_mean, write_curves_csv, CurvePoint,
    CurveSeries, RGrid,
};
pub use ballot::{
    classify_ballots, decompose_and_aggregate, one_person_one_vote, validate_ballot, BudgetRule,
    ClassifiedBallots, ValidatedBallot,
};
pub use erf::erf_approx;
pub use error::{Error, Result};
pub use histogram::Histogram;
pub use model::{
    method_params, AggregateResult, Allocation, Ballot, MethodParams, MethodSpec, PopulationParams,
    VotingRule, Weighting,
};
pub use simulation::{run_trials, sample_population, SimConfig, SimReport};
