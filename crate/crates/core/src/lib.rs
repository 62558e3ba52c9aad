//! Simulation and learning toolkit for fair PV curtailment on radial
//! low-voltage feeders.
//!
//! The crate models a single-feeder LV network whose customers each own a
//! PV system behind a smart inverter, solves the feeder's power flow, and
//! trains a DDPG agent that commands the inverters' reactive setpoints to
//! keep every bus voltage inside its band while curtailing as little — and
//! as evenly — as possible.
//!
//! Module map:
//!
//! * [`grid`] — network/topology types, file ingestion, profile CSVs.
//! * [`feeder`] — calibrated synthetic chain feeder and year profiles.
//! * [`power_flow`] — backward/forward sweep solver for radial networks.
//! * [`inverter`] — capability-circle dispatch and curtailment.
//! * [`env`] — observations, rewards, and the step function.
//! * [`nn`] — dense MLP forward/backward, Adam, Polyak updates.
//! * [`ddpg`] — replay buffer, actor-critic updates, training loop.
//! * [`checkpoint`] — binary agent snapshots with exact round-trip.
//! * [`metrics`] — Gini index and scenario summaries.
//! * [`runner`] — configuration, scenario orchestration, artifact files.

pub mod checkpoint;
pub mod ddpg;
pub mod env;
pub mod error;
pub mod feeder;
pub mod grid;
pub mod inverter;
pub mod metrics;
pub mod nn;
pub mod power_flow;
pub mod runner;
pub mod seeding;

pub use error::{Error, Result};
