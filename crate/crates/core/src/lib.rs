//! Automated test platform for a simulated dual-channel PLC personnel safety
//! system.

pub mod bus;
pub mod dsl;
pub mod engine;
pub mod runner;
pub mod station;
pub mod trace;
