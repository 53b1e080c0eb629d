//! NB-IoT random access success probabilities for a network with three
//! coverage-enhancement groups: closed-form single-slot and multi-slot
//! analytics, and a Monte Carlo simulator to check them against.

pub mod analytic;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod seeding;
pub mod simulator;
pub mod traffic;
pub mod units;

pub use error::{Error, Result};
