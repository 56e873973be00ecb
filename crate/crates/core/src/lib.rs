//! Continuous double auction simulator.

pub mod cli;
pub mod config;
pub mod exchange;
pub mod market;
pub mod metrics;
pub mod price;
pub mod seed;
pub mod session;
pub mod sweep;
pub mod traders;
