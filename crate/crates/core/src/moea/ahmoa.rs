//! Adaptive hybrid multi-objective optimizer.
//!
//! Each generation re-evaluates the population under the problem's current
//! conditions, lets every parent produce one child with a strategy drawn
//! by roulette from the adaptive probabilities, keeps the best
//! `population_size` members of parents ∪ offspring by front and crowding
//! distance, and finally moves the probabilities toward the observed
//! per-strategy success rates.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::operators::{
    de_offspring, ga_offspring, local_search_offspring, pso_offspring, DeParams, GaParams,
    PsoParams,
};
use super::problem::{evaluate_batch, Problem, TrafficProblem};
use super::sorting::{crowding_distance, non_dominated_sort};
use super::strategy::{Strategy, StrategyState, SuccessDenominator};
use crate::demand::DemandProfile;
use crate::error::{Error, Result};
use crate::network::TrafficNetwork;
use crate::objectives::{LambdaBounds, LambdaVector, ObjectiveVector, RobustnessMode};
use crate::rng::{derive_seed, seeded_rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AhmoaConfig {
    pub population_size: usize,
    pub max_generations: usize,
    /// Evaluation draws per solution and generation.
    pub n_e: usize,
    /// Learning rate of the probability update.
    pub alpha: f64,
    pub probability_floor: f64,
    /// Starting probabilities for GA, DE, PSO and LS.
    pub initial_probabilities: [f64; 4],
    pub success_denominator: SuccessDenominator,
    pub sbx_eta: f64,
    pub mutation_eta: f64,
    /// Per-gene mutation probability; `None` means 1 / dimension.
    pub mutation_probability: Option<f64>,
    pub de_weight: f64,
    pub de_crossover_rate: f64,
    pub pso_inertia: f64,
    pub pso_cognitive: f64,
    pub pso_social: f64,
    pub velocity_max: f64,
    pub ls_radius: f64,
    /// Number of volume fields averaged by the memory buffer.
    pub memory_depth: usize,
    pub bounds: LambdaBounds,
    pub robustness_mode: RobustnessMode,
    /// Seed of the search itself.
    pub seed: u64,
    /// Seed of the demand draws; derived from `seed` when absent.
    pub evaluation_seed: Option<u64>,
}

impl Default for AhmoaConfig {
    fn default() -> Self {
        AhmoaConfig {
            population_size: 120,
            max_generations: 50,
            n_e: 5,
            alpha: 0.3,
            probability_floor: 0.02,
            initial_probabilities: [0.25; 4],
            success_denominator: SuccessDenominator::PerStrategy,
            sbx_eta: 15.0,
            mutation_eta: 20.0,
            mutation_probability: None,
            de_weight: 0.5,
            de_crossover_rate: 0.9,
            pso_inertia: 0.7,
            pso_cognitive: 1.5,
            pso_social: 1.5,
            velocity_max: 0.2,
            ls_radius: 0.02,
            memory_depth: 5,
            bounds: LambdaBounds::default(),
            robustness_mode: RobustnessMode::MeanTable,
            seed: 0,
            evaluation_seed: None,
        }
    }
}

impl AhmoaConfig {
    pub fn validate(&self, dimension: usize) -> Result<()> {
        if self.population_size < 4 {
            return Err(Error::config(format!(
                "population size must be at least 4, got {}",
                self.population_size
            )));
        }
        if dimension == 0 {
            return Err(Error::config("problem has no decision variables"));
        }
        if self.n_e == 0 || self.memory_depth == 0 {
            return Err(Error::config("n_e and memory_depth must be at least 1"));
        }
        self.bounds.validate()?;
        let non_negative = [
            ("sbx_eta", self.sbx_eta),
            ("mutation_eta", self.mutation_eta),
            ("de_weight", self.de_weight),
            ("pso_inertia", self.pso_inertia),
            ("pso_cognitive", self.pso_cognitive),
            ("pso_social", self.pso_social),
            ("ls_radius", self.ls_radius),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be a non-negative number")));
            }
        }
        for (name, v) in [
            ("de_crossover_rate", Some(self.de_crossover_rate)),
            ("mutation_probability", self.mutation_probability),
        ] {
            if let Some(v) = v {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::config(format!("{name} must lie in [0, 1]")));
                }
            }
        }
        if !(self.velocity_max > 0.0 && self.velocity_max.is_finite()) {
            return Err(Error::config("velocity_max must be positive"));
        }
        self.strategy_state().map(|_| ())
    }

    pub fn strategy_state(&self) -> Result<StrategyState> {
        StrategyState::new(self.initial_probabilities, self.alpha, self.probability_floor)
    }

    pub fn ga_params(&self, dimension: usize) -> GaParams {
        GaParams {
            sbx_eta: self.sbx_eta,
            mutation_eta: self.mutation_eta,
            mutation_probability: self
                .mutation_probability
                .unwrap_or(1.0 / dimension.max(1) as f64),
        }
    }

    pub fn de_params(&self) -> DeParams {
        DeParams {
            weight: self.de_weight,
            crossover_rate: self.de_crossover_rate,
        }
    }

    pub fn pso_params(&self) -> PsoParams {
        PsoParams {
            inertia: self.pso_inertia,
            cognitive: self.pso_cognitive,
            social: self.pso_social,
            velocity_max: self.velocity_max,
        }
    }

    pub fn evaluation_seed(&self) -> u64 {
        self.evaluation_seed
            .unwrap_or_else(|| derive_seed(self.seed, &[0xe7a1]))
    }

    /// Same settings with the strategy mix frozen at `probabilities`.
    pub fn frozen(&self, probabilities: [f64; 4]) -> Self {
        AhmoaConfig {
            initial_probabilities: probabilities,
            alpha: 0.0,
            probability_floor: 0.0,
            ..self.clone()
        }
    }
}

/// A population member.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub lambda: LambdaVector,
    pub objectives: ObjectiveVector,
    /// Index of the non-dominated front the solution was last sorted into.
    pub rank: usize,
    pub crowding: f64,
    pub velocity: Vec<f64>,
    pub personal_best: Option<(LambdaVector, ObjectiveVector)>,
}

impl Solution {
    /// Unevaluated solution at rest.
    pub fn new(lambda: LambdaVector) -> Self {
        let dim = lambda.len();
        Solution {
            lambda,
            objectives: ObjectiveVector::default(),
            rank: usize::MAX,
            crowding: 0.0,
            velocity: vec![0.0; dim],
            personal_best: None,
        }
    }

    fn offer_personal_best(&mut self) {
        let improved = match &self.personal_best {
            Some((_, best)) => self.objectives.dominates(best),
            None => true,
        };
        if improved {
            self.personal_best = Some((self.lambda.clone(), self.objectives));
        }
    }
}

/// One line of the per-generation telemetry stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    pub algorithm: String,
    pub generation: usize,
    pub p: [f64; 4],
    pub front_size: usize,
    pub best_f1: f64,
    pub best_f2: f64,
    pub best_r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationStats {
    pub telemetry: TelemetryRecord,
    /// Probabilities after the update, with the counters that produced them.
    pub strategy: StrategyState,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub algorithm: String,
    /// Mutually non-dominated members of the final population (or archive).
    pub front: Vec<Solution>,
    pub population: Vec<Solution>,
    /// Initial population as evaluated in the first generation.
    pub initial_population: Vec<Solution>,
    pub history: Vec<GenerationStats>,
}

impl RunResult {
    /// Writes the telemetry as JSON lines.
    pub fn write_telemetry<W: Write>(&self, mut out: W) -> Result<()> {
        for stats in &self.history {
            serde_json::to_writer(&mut out, &stats.telemetry)?;
            out.write_all(b"\n").map_err(|e| Error::io("telemetry", e))?;
        }
        Ok(())
    }
}

pub(crate) fn telemetry(
    algorithm: &str,
    generation: usize,
    p: [f64; 4],
    population: &[Solution],
) -> TelemetryRecord {
    let front: Vec<&Solution> = population.iter().filter(|s| s.rank == 0).collect();
    let best = |f: fn(&ObjectiveVector) -> f64| {
        front
            .iter()
            .map(|s| f(&s.objectives))
            .fold(f64::INFINITY, f64::min)
    };
    TelemetryRecord {
        algorithm: algorithm.to_string(),
        generation,
        p,
        front_size: front.len(),
        best_f1: best(|o| o.f1),
        best_f2: best(|o| o.f2),
        best_r: best(|o| o.r),
    }
}

pub(crate) fn evaluate_population<P: Problem + ?Sized>(
    problem: &P,
    population: &mut [Solution],
) -> Result<()> {
    let lambdas: Vec<&LambdaVector> = population.iter().map(|s| &s.lambda).collect();
    let objectives = evaluate_batch(problem, &lambdas)?;
    for (s, o) in population.iter_mut().zip(objectives) {
        s.objectives = o;
    }
    Ok(())
}

/// Sorts the population into fronts and stores rank and crowding distance
/// on every member.
pub fn assign_rank_and_crowding(population: &mut [Solution]) -> Vec<Vec<usize>> {
    let points: Vec<[f64; 3]> = population.iter().map(|s| s.objectives.to_array()).collect();
    let fronts = non_dominated_sort(&points);
    for (rank, front) in fronts.iter().enumerate() {
        let members: Vec<[f64; 3]> = front.iter().map(|&i| points[i]).collect();
        for (&i, d) in front.iter().zip(crowding_distance(&members)) {
            population[i].rank = rank;
            population[i].crowding = d;
        }
    }
    fronts
}

/// Keeps `target_size` members of parents ∪ offspring: whole fronts in
/// order, then the most isolated members (largest crowding distance, ties
/// by position) of the front that does not fit.
pub fn environmental_selection(
    parents: Vec<Solution>,
    offspring: Vec<Solution>,
    target_size: usize,
) -> Result<Vec<Solution>> {
    let mut combined: Vec<Solution> = parents.into_iter().chain(offspring).collect();
    if target_size > combined.len() {
        return Err(Error::config(format!(
            "cannot select {target_size} from {} solutions",
            combined.len()
        )));
    }
    let fronts = assign_rank_and_crowding(&mut combined);
    let mut chosen = Vec::with_capacity(target_size);
    for mut front in fronts {
        let room = target_size - chosen.len();
        if room == 0 {
            break;
        }
        if front.len() > room {
            front.sort_by(|&a, &b| {
                combined[b]
                    .crowding
                    .total_cmp(&combined[a].crowding)
                    .then(a.cmp(&b))
            });
            front.truncate(room);
        }
        chosen.extend(front);
    }
    let mut slots: Vec<Option<Solution>> = combined.into_iter().map(Some).collect();
    Ok(chosen
        .into_iter()
        .map(|i| slots[i].take().expect("each index chosen once"))
        .collect())
}

fn tournament<R: Rng + ?Sized>(population: &[Solution], rng: &mut R) -> usize {
    let a = rng.gen_range(0..population.len());
    let b = rng.gen_range(0..population.len());
    let (sa, sb) = (&population[a], &population[b]);
    if sa.rank < sb.rank || (sa.rank == sb.rank && sa.crowding > sb.crowding) {
        a
    } else {
        b
    }
}

/// Produces one child per parent with roulette-selected strategies,
/// evaluates the children, records which strategies beat their parents
/// (strict dominance) and updates the strategy probabilities.
///
/// The population must be evaluated and ranked under the problem's
/// current generation.
pub fn generate_offspring<P: Problem + ?Sized, R: Rng + ?Sized>(
    population: &[Solution],
    state: &mut StrategyState,
    cfg: &AhmoaConfig,
    problem: &P,
    rng: &mut R,
) -> Result<Vec<Solution>> {
    let dim = problem.dimension();
    let bounds = cfg.bounds;
    let ga = cfg.ga_params(dim);
    let de = cfg.de_params();
    let pso = cfg.pso_params();
    let mut leaders: Vec<usize> = (0..population.len())
        .filter(|&i| population[i].rank == 0)
        .collect();
    if leaders.is_empty() {
        leaders = (0..population.len()).collect();
    }
    let positions: Vec<&[f64]> = population.iter().map(|s| s.lambda.as_slice()).collect();

    state.reset_counts();
    let mut strategies = Vec::with_capacity(population.len());
    let mut children = Vec::with_capacity(population.len());
    for (i, parent) in population.iter().enumerate() {
        let strategy = state.select(rng);
        let mut child = match strategy {
            Strategy::Ga => {
                let mate = &population[tournament(population, rng)];
                Solution::new(ga_offspring(&parent.lambda, &mate.lambda, &ga, &bounds, rng))
            }
            Strategy::De => Solution::new(de_offspring(i, &positions, &de, &bounds, rng)?),
            Strategy::Pso => {
                let leader = &population[leaders[rng.gen_range(0..leaders.len())]].lambda;
                let own_best = parent
                    .personal_best
                    .as_ref()
                    .map_or(&parent.lambda, |(l, _)| l);
                let (lambda, velocity) = pso_offspring(
                    &parent.lambda,
                    &parent.velocity,
                    own_best,
                    leader,
                    &pso,
                    &bounds,
                    rng,
                );
                Solution {
                    velocity,
                    ..Solution::new(lambda)
                }
            }
            Strategy::LocalSearch => {
                Solution::new(local_search_offspring(&parent.lambda, cfg.ls_radius, &bounds, rng))
            }
        };
        child.personal_best = parent.personal_best.clone();
        strategies.push(strategy);
        children.push(child);
    }

    evaluate_population(problem, &mut children)?;
    for ((child, parent), strategy) in children.iter_mut().zip(population).zip(strategies) {
        state.record(strategy, child.objectives.dominates(&parent.objectives));
        child.offer_personal_best();
    }
    state.update(cfg.success_denominator);
    Ok(children)
}

/// Optimizer driver; `label` tags telemetry.
#[derive(Debug, Clone)]
pub struct Ahmoa {
    config: AhmoaConfig,
    label: String,
}

impl Ahmoa {
    pub fn new(config: AhmoaConfig) -> Self {
        Ahmoa {
            config,
            label: "ahmoa".to_string(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn config(&self) -> &AhmoaConfig {
        &self.config
    }

    pub fn run<P: Problem + ?Sized>(&self, problem: &mut P) -> Result<RunResult> {
        let cfg = &self.config;
        let dim = problem.dimension();
        cfg.validate(dim)?;
        let mut rng = seeded_rng(cfg.seed);
        let mut state = cfg.strategy_state()?;
        let (lo, hi) = (cfg.bounds.min, cfg.bounds.max);

        let mut population: Vec<Solution> = (0..cfg.population_size)
            .map(|_| {
                let genes = (0..dim).map(|_| rng.gen_range(lo..=hi)).collect();
                Solution::new(LambdaVector::clamped(genes, &cfg.bounds))
            })
            .collect();
        problem.begin_generation(0)?;
        evaluate_population(problem, &mut population)?;
        population.iter_mut().for_each(Solution::offer_personal_best);
        assign_rank_and_crowding(&mut population);
        let initial_population = population.clone();

        let mut history = Vec::with_capacity(cfg.max_generations);
        for generation in 0..cfg.max_generations {
            if generation > 0 {
                problem.begin_generation(generation)?;
                evaluate_population(problem, &mut population)?;
                assign_rank_and_crowding(&mut population);
            }
            let offspring = generate_offspring(&population, &mut state, cfg, problem, &mut rng)?;
            population = environmental_selection(population, offspring, cfg.population_size)?;
            let record = telemetry(&self.label, generation, state.probabilities(), &population);
            log::debug!(
                "{} gen {generation}: p={:?} front={} best_f1={:.3}",
                self.label,
                record.p,
                record.front_size,
                record.best_f1
            );
            history.push(GenerationStats {
                telemetry: record,
                strategy: state.clone(),
            });
        }

        let front = population.iter().filter(|s| s.rank == 0).cloned().collect();
        Ok(RunResult {
            algorithm: self.label.clone(),
            front,
            population,
            initial_population,
            history,
        })
    }
}

/// Runs the adaptive optimizer on a traffic network.
pub fn run_ahmoa(
    network: &TrafficNetwork,
    profile: &DemandProfile,
    cfg: &AhmoaConfig,
) -> Result<RunResult> {
    let mut problem = traffic_problem(network, profile, cfg)?;
    Ahmoa::new(cfg.clone()).run(&mut problem)
}

pub(crate) fn traffic_problem<'a>(
    network: &'a TrafficNetwork,
    profile: &'a DemandProfile,
    cfg: &AhmoaConfig,
) -> Result<TrafficProblem<'a>> {
    TrafficProblem::new(
        network,
        profile,
        cfg.evaluation_seed(),
        cfg.n_e,
        cfg.memory_depth,
        cfg.robustness_mode,
    )
}
