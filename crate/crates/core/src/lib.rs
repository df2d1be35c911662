//! Link-budget, power-consumption and energy-efficiency models for mmWave
//! downlinks served directly by a gNB or through a network-controlled
//! repeater (NCR), with exhaustive EE-maximizing configuration search,
//! distance sweeps and a multi-sector system-level study.

pub mod cli;
pub mod config;
pub mod error;
pub mod linkbudget;
pub mod optimizer;
pub mod powermodel;
pub mod report;
pub mod scenarios;
pub mod syslevel;
pub mod units;

pub use error::{Error, Result};
