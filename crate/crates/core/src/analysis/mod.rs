//! Oracles and checks: exact drift, exact hitting times, theorem bounds,
//! the cycling lower-bound experiment and the frontier property of the
//! tightness network.

mod bounds;
mod drift;
mod frontier;
mod hitting;
mod lower_bound;

use thiserror::Error;

use crate::dynamics::ScheduleError;
use crate::game::GameError;

pub use bounds::{theorem_bound, TheoremBound};
pub use drift::{
    drift_closed_form, edge_interaction, exact_drift, exact_drift_capped,
    general_drift_identity_check, mc_drift, theorem_drift_bound, DriftBound, DriftReport,
    EdgeClasses, EXACT_DRIFT_CAP,
};
pub use frontier::{frontier_check, frontier_check_with, FrontierReport};
pub use hitting::{exact_hitting_time, HittingTimes, StateSpace, STATE_CAP};
pub use lower_bound::{
    balanced_bipartite_config, cycle_holds, cycle_params, lower_bound_experiment, CycleParams,
    LowerBoundReport, LowerBoundTrial, Orientation,
};

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("{count} unstable nodes exceed the enumeration cap of {cap}")]
    TooManyUnstable { count: usize, cap: usize },
    #[error("state space of {states} configurations exceeds the cap of {cap}")]
    StateSpaceTooLarge { states: u128, cap: usize },
    #[error("exact computation needs a deterministic response rule")]
    NonDeterministicRule,
    #[error("node {0} is not unstable")]
    NotUnstable(usize),
    #[error("identity violated: {lhs} != {rhs}")]
    IdentityViolated { lhs: i64, rhs: i64 },
    #[error("interaction term {value} exceeds 2Δ_uv = {bound}")]
    ExceedsBound { value: i64, bound: i64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("frontier property violated: {0}")]
    Frontier(String),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Game(#[from] GameError),
}
