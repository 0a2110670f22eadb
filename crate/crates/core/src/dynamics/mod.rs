//! Independent better-response dynamics.

mod engine;
mod response;
mod schedule;

pub use engine::{
    step, DynamicsState, RunResult, Simulation, StepError, StepReport, DEFAULT_MAX_STEPS,
};
pub use response::ResponseRule;
pub use schedule::{ActivationSchedule, ScheduleError, ScheduleKind, Theorem, Window};
