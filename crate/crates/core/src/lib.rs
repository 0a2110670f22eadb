//! Simulation and verification engine for independent better-response
//! dynamics on local interaction potential games.
//!
//! Every node of a graph plays a two-player potential game with each
//! neighbor. At each step every unstable node becomes active independently
//! with a schedule-given probability, and all active nodes switch to a
//! better (or best) response simultaneously. The [`analysis`] module checks
//! the expected one-step potential decrease exactly, computes exact
//! expected convergence times on small instances, and reproduces the
//! oscillation that keeps constant-probability dynamics away from
//! equilibrium on complete bipartite graphs.

pub mod analysis;
pub mod dynamics;
pub mod game;
pub mod graph;
pub mod report;
pub mod rng;
pub mod stats;

pub use dynamics::{
    ActivationSchedule, ResponseRule, RunResult, ScheduleKind, Simulation, StepReport, Theorem,
    Window,
};
pub use game::{Belief, Configuration, EdgeGame, GameError, GameInstance, InstanceFile};
pub use graph::{tightness_network, Graph, GraphError, StandardFamily, TightnessNetwork};
