//! Robust multi-objective optimization of traffic-signal red-light ratios.
//!
//! Cities are undirected intersection graphs ([`network`]) loaded by a
//! stochastic, weather-modulated hourly demand model ([`demand`]). A
//! candidate plan assigns a red-light ratio to every intersection and is
//! scored on mean delay, network stability and robustness
//! ([`objectives`]). The adaptive hybrid optimizer in [`moea`] searches
//! that space, [`baselines`] provides comparison algorithms and
//! [`experiment`] drives complete runs and their file outputs.

pub mod baselines;
pub mod demand;
pub mod error;
pub mod experiment;
pub mod moea;
pub mod network;
pub mod objectives;
pub mod rng;

pub use error::{Error, Result};
