//! The adaptive hybrid optimizer and its building blocks.

mod ahmoa;
pub mod operators;
mod problem;
mod sorting;
mod strategy;

pub use ahmoa::{
    assign_rank_and_crowding, environmental_selection, generate_offspring, run_ahmoa, Ahmoa,
    AhmoaConfig, GenerationStats, RunResult, Solution, TelemetryRecord,
};
pub(crate) use ahmoa::{evaluate_population, telemetry, traffic_problem};
pub use problem::{evaluate_batch, Problem, TrafficProblem};
pub use sorting::{crowding_distance, dominates, non_dominated_indices, non_dominated_sort};
pub use strategy::{Strategy, StrategyState, SuccessDenominator};
