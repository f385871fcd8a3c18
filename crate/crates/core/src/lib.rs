//! Joint control and communication for an actuator that observes an MDP
//! only through intermittent state updates.
//!
//! Pull rules let the actuator request updates on a per-state schedule; push
//! rules let the base station (BS) decide when to transmit. Both are solved
//! by policy iteration and evaluated exactly through renewal equations over
//! update intervals.

pub mod baselines;
pub mod belief;
pub mod config;
pub mod counterexample;
pub mod error;
pub mod evaluation;
pub mod exact;
pub mod full_obs;
pub mod generator;
pub mod linalg;
pub mod mdp;
pub mod policy;
pub mod pull;
pub mod push;
pub mod report;
pub mod sweep;

pub use config::SolveConfig;
pub use error::{Error, Result};
pub use mdp::Mdp;
pub use policy::{ControlMap, JointPolicy, PeriodicPolicy, PeriodicSchedule, PullPolicy, PushPolicy, TransmitMap};
pub use report::EvaluationReport;
