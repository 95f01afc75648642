use rayon::prelude::*;

use crate::demand::{generate_volumes, DemandProfile, HourlyMatrix};
use crate::error::{Error, Result};
use crate::network::TrafficNetwork;
use crate::objectives::{evaluate_on_matrices, LambdaVector, MemoryBuffer, ObjectiveVector, RobustnessMode};

/// A three-objective minimization problem over red-light-ratio vectors.
///
/// Optimizers call `begin_generation` once per generation; every
/// evaluation until the next call must see the same conditions, so
/// solutions within a generation are compared fairly and may be evaluated
/// concurrently.
pub trait Problem: Sync {
    fn dimension(&self) -> usize;

    fn begin_generation(&mut self, generation: usize) -> Result<()>;

    fn evaluate(&self, lambda: &LambdaVector) -> Result<ObjectiveVector>;
}

/// Evaluates a batch in parallel, preserving order.
pub fn evaluate_batch<P: Problem + ?Sized>(
    problem: &P,
    lambdas: &[&LambdaVector],
) -> Result<Vec<ObjectiveVector>> {
    lambdas.par_iter().map(|l| problem.evaluate(l)).collect()
}

/// Traffic-signal problem with memory-smoothed stochastic demand.
///
/// Generation `g` draws volume fields `g * n_e + 1 ..= g * n_e + n_e`,
/// pushes each through the memory buffer and keeps the resulting averaged
/// matrices as that generation's evaluation snapshot. The buffer state
/// depends only on the draws, never on the solutions evaluated.
#[derive(Debug, Clone)]
pub struct TrafficProblem<'a> {
    network: &'a TrafficNetwork,
    profile: &'a DemandProfile,
    seed: u64,
    draws: usize,
    memory: MemoryBuffer,
    mode: RobustnessMode,
    snapshot: Vec<HourlyMatrix>,
}

impl<'a> TrafficProblem<'a> {
    pub fn new(
        network: &'a TrafficNetwork,
        profile: &'a DemandProfile,
        seed: u64,
        draws: usize,
        memory_depth: usize,
        mode: RobustnessMode,
    ) -> Result<Self> {
        if draws == 0 {
            return Err(Error::config("n_e must be at least 1"));
        }
        profile.validate()?;
        Ok(TrafficProblem {
            network,
            profile,
            seed,
            draws,
            memory: MemoryBuffer::new(memory_depth)?,
            mode,
            snapshot: Vec::new(),
        })
    }

    pub fn network(&self) -> &TrafficNetwork {
        self.network
    }

    /// Averaged volume matrices of the current generation.
    pub fn snapshot(&self) -> &[HourlyMatrix] {
        &self.snapshot
    }
}

impl Problem for TrafficProblem<'_> {
    fn dimension(&self) -> usize {
        self.network.len()
    }

    fn begin_generation(&mut self, generation: usize) -> Result<()> {
        let base = (generation * self.draws) as u64;
        self.snapshot = (1..=self.draws as u64)
            .map(|j| {
                let field = generate_volumes(self.network, self.profile, self.seed, base + j);
                self.memory.update(&field)
            })
            .collect::<Result<_>>()?;
        Ok(())
    }

    fn evaluate(&self, lambda: &LambdaVector) -> Result<ObjectiveVector> {
        if self.snapshot.is_empty() {
            return Err(Error::config("evaluation requested before the first generation began"));
        }
        evaluate_on_matrices(lambda, self.network, &self.snapshot, self.mode)
    }
}
