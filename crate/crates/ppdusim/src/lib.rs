//! Discrete-event simulator for scheduling-duration policies in multi-user
//! OFDMA uplink WLANs.
//!
//! An access point schedules groups of stations round-robin, one group per
//! slot, and announces a common transmission duration T_s for the slot.
//! Stations whose data runs out before T_s transmit padding; stations with
//! more data than T_s covers leave the rest unserved (whether it persists
//! into their next slot is the traffic model's choice, see [`traffic`]).
//! The crate implements four rules for choosing T_s:
//!
//! - **fixed**: the same duration every slot;
//! - **throughput-optimal**: the smallest backlogged duration, which
//!   maximizes instantaneous total throughput;
//! - **dppdu**: a drift-plus-penalty rule minimizing padding subject to
//!   per-user emptying-frequency targets;
//! - **eadppdu**: a drift-plus-penalty rule maximizing emptied queues
//!   subject to per-user energy budgets.
//!
//! [`model`] holds the per-slot quantities, [`traffic`] the seeded demand
//! generators, [`policies`] the four rules, [`engine`] the simulation loop
//! with sweeps and searches, [`overhead`] the protocol-time accounting, and
//! [`config`]/[`report`] the TOML-in/CSV-and-JSON-out plumbing.
//!
//! # Example
//!
//! ```
//! use ppdusim::config::ExperimentConfig;
//! use ppdusim::model::PolicyKind;
//! use ppdusim::engine;
//!
//! let mut config = ExperimentConfig::reference_scenario(PolicyKind::Dppdu { v: 1000.0 });
//! config.scenario.num_groups = 1;
//! config.scenario.num_users = 5;
//! config.horizon_slots = 20_000;
//! let report = engine::run(&config).unwrap();
//! let metrics = report.headline();
//! // Every user empties its queue in most slots, at the cost of some padding.
//! assert!(metrics.avg_f.iter().all(|&f| f > 0.5));
//! assert!(metrics.avg_h_tot_ms > 0.0);
//! ```

#![forbid(unsafe_code)]

pub mod config;
pub mod engine;
pub mod model;
pub mod overhead;
pub mod policies;
pub mod report;
pub mod traffic;
