//! Minimum-energy UAV tour planning under per-user deadlines.
//!
//! A rotary-wing UAV starts at a depot, serves `K` ground users over a
//! Rician air-to-ground link, and returns. Each user demands a content
//! size and a requested timeout. The library plans visiting orders that
//! meet every deadline (exhaustive, greedy, and dynamic-programming
//! searches plus a deadline-blind shortest-cycle baseline), then minimizes
//! propulsion energy over per-hop speeds by convex optimization, and
//! finally selects the cheapest plan within the energy budget. A
//! Monte-Carlo harness reproduces outage/energy/runtime comparisons across
//! random topologies.
//!
//! Modules mirror the pipeline: [`scenario`] owns instance data and
//! derived matrices, [`channel`] the outage-constrained link rate,
//! [`energy`] the propulsion model, [`planner`] the tour searches,
//! [`velocity`] the per-tour speed optimization, [`experiment`] the
//! Monte-Carlo harness, and [`emit`]/[`schema`] the byte-stable I/O
//! formats.

// float validations use `!(v > 0.0)` so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod emit;
pub mod energy;
pub mod error;
pub mod experiment;
pub mod planner;
pub mod scenario;
pub mod schema;
pub mod velocity;

pub use error::{Error, Result};
pub use scenario::{GroundUser, Scenario, UavParams};
pub use channel::ChannelParams;
pub use energy::{EnergyBreakdown, PowerModelParams};
pub use planner::{FeasiblePathSet, Method, PlanningCosts, Tour};
pub use velocity::{OptimizationReport, PlanResult, VelocityProfile};
pub use experiment::{ExperimentConfig, TrialStats};
