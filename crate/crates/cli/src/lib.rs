//! Drivers behind the `paradiag` binary: single solves, table reproduction,
//! dense spectral verification and preconditioner benchmarks.

pub mod bench;
pub mod config;
pub mod output;
pub mod problem;
pub mod published;
pub mod reproduce;
pub mod run;
pub mod verify;
