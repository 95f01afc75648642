//! Comparison optimizers sharing the evaluation pipeline of [`crate::moea`].
//!
//! `nsga3_style` and `nsde3` are the adaptive loop with its strategy mix
//! frozen on GA or DE. `moead` is a Tchebycheff decomposition over a
//! simplex-lattice weight set with an external non-dominated archive.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::demand::DemandProfile;
use crate::error::{Error, Result};
use crate::moea::operators::ga_offspring;
use crate::moea::{
    assign_rank_and_crowding, crowding_distance, evaluate_population, non_dominated_indices,
    run_ahmoa, telemetry, traffic_problem, Ahmoa, AhmoaConfig, GenerationStats, Problem,
    RunResult, Solution, StrategyState,
};
use crate::network::TrafficNetwork;
use crate::objectives::{LambdaVector, ObjectiveVector};
use crate::rng::seeded_rng;

const GA_ONLY: [f64; 4] = [1.0, 0.0, 0.0, 0.0];
const DE_ONLY: [f64; 4] = [0.0, 1.0, 0.0, 0.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Ahmoa,
    Nsga3Style,
    Nsde3,
    Moead,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Ahmoa,
        Algorithm::Nsga3Style,
        Algorithm::Nsde3,
        Algorithm::Moead,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Ahmoa => "ahmoa",
            Algorithm::Nsga3Style => "nsga3_style",
            Algorithm::Nsde3 => "nsde3",
            Algorithm::Moead => "moead",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.label() == label)
    }

    pub fn run(
        self,
        network: &TrafficNetwork,
        profile: &DemandProfile,
        cfg: &AhmoaConfig,
        moead: &MoeadParams,
    ) -> Result<RunResult> {
        match self {
            Algorithm::Ahmoa => run_ahmoa(network, profile, cfg),
            Algorithm::Nsga3Style => run_nsga3_style(network, profile, cfg),
            Algorithm::Nsde3 => run_nsde3(network, profile, cfg),
            Algorithm::Moead => run_moead(network, profile, cfg, moead),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Non-dominated sorting with crowding selection and GA variation only.
pub fn run_nsga3_style(
    network: &TrafficNetwork,
    profile: &DemandProfile,
    cfg: &AhmoaConfig,
) -> Result<RunResult> {
    let mut problem = traffic_problem(network, profile, cfg)?;
    Ahmoa::new(cfg.frozen(GA_ONLY))
        .with_label(Algorithm::Nsga3Style.label())
        .run(&mut problem)
}

/// As [`run_nsga3_style`] with DE variation.
pub fn run_nsde3(
    network: &TrafficNetwork,
    profile: &DemandProfile,
    cfg: &AhmoaConfig,
) -> Result<RunResult> {
    let mut problem = traffic_problem(network, profile, cfg)?;
    Ahmoa::new(cfg.frozen(DE_ONLY))
        .with_label(Algorithm::Nsde3.label())
        .run(&mut problem)
}

/// Weight vectors on the 3-simplex with their nearest-neighbor sets.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVectorSet {
    vectors: Vec<[f64; 3]>,
    neighborhood_size: usize,
    neighborhoods: Vec<Vec<usize>>,
}

impl WeightVectorSet {
    pub fn new(vectors: Vec<[f64; 3]>, neighborhood_size: usize) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::config("weight vector set is empty"));
        }
        if neighborhood_size == 0 || neighborhood_size > vectors.len() {
            return Err(Error::config(format!(
                "neighborhood size {neighborhood_size} must lie in 1..={}",
                vectors.len()
            )));
        }
        for w in &vectors {
            if w.iter().any(|&x| x < 0.0) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(Error::config(format!("weight vector {w:?} is not on the simplex")));
            }
        }
        let neighborhoods = (0..vectors.len())
            .map(|i| {
                let mut order: Vec<usize> = (0..vectors.len()).collect();
                let dist = |j: usize| -> f64 {
                    (0..3).map(|k| (vectors[i][k] - vectors[j][k]).powi(2)).sum()
                };
                order.sort_by(|&a, &b| dist(a).total_cmp(&dist(b)).then(a.cmp(&b)));
                order.truncate(neighborhood_size);
                order
            })
            .collect();
        Ok(WeightVectorSet {
            vectors,
            neighborhood_size,
            neighborhoods,
        })
    }

    /// Lattice with `divisions` steps per axis: `(d+1)(d+2)/2` vectors.
    pub fn simplex_lattice(divisions: usize) -> Vec<[f64; 3]> {
        let d = divisions.max(1);
        let mut out = Vec::with_capacity((d + 1) * (d + 2) / 2);
        for a in 0..=d {
            for b in 0..=d - a {
                let c = d - a - b;
                out.push([a as f64 / d as f64, b as f64 / d as f64, c as f64 / d as f64]);
            }
        }
        out
    }

    /// Lattice whose size is nearest to `target` (smaller on ties), with a
    /// neighborhood of `fraction` of the vectors (at least 2).
    pub fn for_population(target: usize, fraction: f64) -> Result<Self> {
        if target < 3 {
            return Err(Error::config(format!(
                "decomposition needs at least 3 subproblems, got {target}"
            )));
        }
        let size = |d: usize| (d + 1) * (d + 2) / 2;
        let mut d = 1;
        while size(d + 1) <= target {
            d += 1;
        }
        if size(d) != target && size(d + 1) - target < target - size(d) {
            d += 1;
        }
        let vectors = Self::simplex_lattice(d);
        if vectors.len() != target {
            log::info!(
                "population {target} is not a lattice size; using {} weight vectors",
                vectors.len()
            );
        }
        let t = ((fraction * vectors.len() as f64).round() as usize)
            .max(2)
            .min(vectors.len());
        Self::new(vectors, t)
    }

    pub fn vectors(&self) -> &[[f64; 3]] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn neighborhood_size(&self) -> usize {
        self.neighborhood_size
    }

    /// Indices of the closest vectors to `i`, itself first.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighborhoods[i]
    }
}

/// Decomposition settings not shared with the other algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MoeadParams {
    pub neighborhood_fraction: f64,
    /// Most neighbors a single child may replace.
    pub max_replacements: usize,
}

impl Default for MoeadParams {
    fn default() -> Self {
        MoeadParams {
            neighborhood_fraction: 0.1,
            max_replacements: 2,
        }
    }
}

impl MoeadParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.neighborhood_fraction > 0.0 && self.neighborhood_fraction <= 1.0) {
            return Err(Error::config("neighborhood_fraction must lie in (0, 1]"));
        }
        if self.max_replacements == 0 {
            return Err(Error::config("max_replacements must be at least 1"));
        }
        Ok(())
    }
}

/// Normalized Tchebycheff scalarization.
fn tchebycheff(f: &ObjectiveVector, w: &[f64; 3], ideal: &[f64; 3], nadir: &[f64; 3]) -> f64 {
    let f = f.to_array();
    (0..3)
        .map(|k| {
            let span = (nadir[k] - ideal[k]).max(1e-12);
            w[k].max(1e-6) * (f[k] - ideal[k]) / span
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn bounds_of(solutions: &[Solution]) -> ([f64; 3], [f64; 3]) {
    let mut ideal = [f64::INFINITY; 3];
    let mut nadir = [f64::NEG_INFINITY; 3];
    for s in solutions {
        for (k, v) in s.objectives.to_array().into_iter().enumerate() {
            ideal[k] = ideal[k].min(v);
            nadir[k] = nadir[k].max(v);
        }
    }
    (ideal, nadir)
}

/// Keeps the non-dominated members, thinned by crowding distance to `cap`.
fn refresh_archive(candidates: Vec<Solution>, cap: usize) -> Vec<Solution> {
    let points: Vec<[f64; 3]> = candidates.iter().map(|s| s.objectives.to_array()).collect();
    let keep = non_dominated_indices(&points);
    let mut slots: Vec<Option<Solution>> = candidates.into_iter().map(Some).collect();
    let mut archive: Vec<Solution> = keep
        .iter()
        .map(|&i| slots[i].take().expect("unique index"))
        .collect();
    while archive.len() > cap {
        let pts: Vec<[f64; 3]> = archive.iter().map(|s| s.objectives.to_array()).collect();
        let d = crowding_distance(&pts);
        let worst = (0..archive.len())
            .min_by(|&a, &b| d[a].total_cmp(&d[b]).then(b.cmp(&a)))
            .expect("archive is non-empty");
        archive.remove(worst);
    }
    let pts: Vec<[f64; 3]> = archive.iter().map(|s| s.objectives.to_array()).collect();
    for (s, d) in archive.iter_mut().zip(crowding_distance(&pts)) {
        s.rank = 0;
        s.crowding = d;
    }
    archive
}

/// Decomposition-based optimizer on a traffic network.
pub fn run_moead(
    network: &TrafficNetwork,
    profile: &DemandProfile,
    cfg: &AhmoaConfig,
    params: &MoeadParams,
) -> Result<RunResult> {
    let mut problem = traffic_problem(network, profile, cfg)?;
    run_moead_on(&mut problem, cfg, params)
}

/// [`run_moead`] on any problem.
pub fn run_moead_on<P: Problem + ?Sized>(
    problem: &mut P,
    cfg: &AhmoaConfig,
    params: &MoeadParams,
) -> Result<RunResult> {
    let dim = problem.dimension();
    cfg.validate(dim)?;
    params.validate()?;
    let weights = WeightVectorSet::for_population(cfg.population_size, params.neighborhood_fraction)?;
    let ga = cfg.ga_params(dim);
    let bounds = cfg.bounds;
    let mut rng = seeded_rng(cfg.seed);
    let frozen = StrategyState::new(GA_ONLY, 0.0, 0.0)?;
    let label = Algorithm::Moead.label();

    let mut population: Vec<Solution> = (0..weights.len())
        .map(|_| {
            let genes = (0..dim).map(|_| rng.gen_range(bounds.min..=bounds.max)).collect();
            Solution::new(LambdaVector::clamped(genes, &bounds))
        })
        .collect();
    problem.begin_generation(0)?;
    evaluate_population(problem, &mut population)?;
    assign_rank_and_crowding(&mut population);
    let initial_population = population.clone();
    let cap = cfg.population_size;
    let mut archive = refresh_archive(population.clone(), cap);

    let mut history = Vec::with_capacity(cfg.max_generations);
    for generation in 0..cfg.max_generations {
        if generation > 0 {
            problem.begin_generation(generation)?;
            evaluate_population(problem, &mut population)?;
            evaluate_population(problem, &mut archive)?;
        }
        let (mut ideal, nadir) = bounds_of(&population);

        let mut children: Vec<Solution> = (0..weights.len())
            .map(|i| {
                let hood = weights.neighbors(i);
                let picks: Vec<&usize> = hood.choose_multiple(&mut rng, 2).collect();
                let (a, b) = (&population[*picks[0]], &population[*picks[1]]);
                Solution::new(ga_offspring(&a.lambda, &b.lambda, &ga, &bounds, &mut rng))
            })
            .collect();
        evaluate_population(problem, &mut children)?;

        for (i, child) in children.iter().enumerate() {
            for (k, v) in child.objectives.to_array().into_iter().enumerate() {
                ideal[k] = ideal[k].min(v);
            }
            let mut hood = weights.neighbors(i).to_vec();
            hood.shuffle(&mut rng);
            let mut replaced = 0;
            for j in hood {
                if replaced == params.max_replacements {
                    break;
                }
                let w = &weights.vectors()[j];
                if tchebycheff(&child.objectives, w, &ideal, &nadir)
                    <= tchebycheff(&population[j].objectives, w, &ideal, &nadir)
                {
                    population[j] = child.clone();
                    replaced += 1;
                }
            }
        }
        assign_rank_and_crowding(&mut population);
        archive = refresh_archive(archive.into_iter().chain(children).collect(), cap);

        let record = telemetry(label, generation, GA_ONLY, &archive);
        history.push(GenerationStats {
            telemetry: record,
            strategy: frozen.clone(),
        });
    }

    Ok(RunResult {
        algorithm: label.to_string(),
        front: archive,
        population,
        initial_population,
        history,
    })
}
