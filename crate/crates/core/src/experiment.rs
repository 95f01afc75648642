//! Experiment orchestration: config files, multi-algorithm runs, front
//! tables, global-front merging and heatmap export.
//!
//! Output layout under `output_dir`:
//!
//! ```text
//! manifest.json
//! city.json
//! global_front.csv
//! runs/<algorithm>_rep<r>/{front.csv, front.json, telemetry.jsonl}
//! heatmaps/baseline.csv
//! heatmaps/<algorithm>_rep<r>.csv
//! ```

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{Algorithm, MoeadParams};
use crate::demand::{DemandProfile, HourWindow, HourlyMatrix, Interval};
use crate::error::{Error, Result};
use crate::moea::{non_dominated_indices, AhmoaConfig, RunResult, Solution};
use crate::network::{CityConfig, CityPreset, TrafficNetwork};
use crate::objectives::{
    mean_delay_matrix, memory_matrices, LambdaVector, MemoryBuffer, ObjectiveVector,
};
use crate::rng::derive_seed;

const EVALUATION_TAG: u64 = 0xe7a1_5eed;
/// Uniform red-light ratio of the pre-optimization heatmap.
pub const BASELINE_LAMBDA: f64 = 0.5;
pub const FRONT_CSV_HEADER: &str = "algorithm,log_f1,log_f2,log_r,raw_f1,raw_f2,raw_r";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CitySpec {
    /// A shipped scenario, built with the experiment's master seed.
    Preset(CityPreset),
    Custom(CityConfig),
}

/// Optional replacements for fields of the city's demand profile.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemandOverrides {
    pub peak_windows: Option<Vec<HourWindow>>,
    pub lunch_window: Option<HourWindow>,
    pub midnight_window: Option<HourWindow>,
    pub peak_base_factor: Option<f64>,
    pub peak_jitter: Option<Interval>,
    pub offpeak_range: Option<Interval>,
    pub lunch_base_factor: Option<f64>,
    pub lunch_jitter: Option<Interval>,
    pub midnight_factor: Option<f64>,
    pub city_uplift: Option<f64>,
    /// Collapse every jitter interval to its midpoint.
    pub without_jitter: bool,
}

impl DemandOverrides {
    pub fn apply(&self, base: DemandProfile) -> DemandProfile {
        let mut p = base;
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field {
                    p.$field = v.clone();
                })*
            };
        }
        take!(
            peak_windows,
            lunch_window,
            midnight_window,
            peak_base_factor,
            peak_jitter,
            offpeak_range,
            lunch_base_factor,
            lunch_jitter,
            midnight_factor,
            city_uplift
        );
        if self.without_jitter {
            p = p.without_jitter();
        }
        p
    }
}

fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Ahmoa]
}

fn default_repetitions() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub city: CitySpec,
    #[serde(default)]
    pub demand: DemandOverrides,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    /// Shared optimizer settings; seeds are replaced per run.
    #[serde(default)]
    pub ahmoa: AhmoaConfig,
    #[serde(default)]
    pub moead: MoeadParams,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Overrides the city's heatmap layout.
    #[serde(default)]
    pub heatmap_layout: Option<(usize, usize)>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_output_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.output_dir = dir.into();
        self
    }

    pub fn city_config(&self) -> CityConfig {
        match &self.city {
            CitySpec::Preset(p) => p.config(self.seed),
            CitySpec::Custom(c) => c.clone(),
        }
    }

    pub fn build_city(&self) -> Result<TrafficNetwork> {
        self.city_config().build()
    }

    pub fn demand_profile(&self) -> Result<DemandProfile> {
        let profile = self.demand.apply(self.city_config().demand_profile());
        profile.validate()?;
        Ok(profile)
    }

    pub fn layout_for(&self, n: usize) -> (usize, usize) {
        self.heatmap_layout
            .unwrap_or_else(|| self.city_config().layout_for(n))
    }

    /// Checks everything that can be checked without building the city.
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::config("repetitions must be at least 1"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::config("algorithm list is empty"));
        }
        self.city_config().validate()?;
        self.moead.validate()?;
        self.demand_profile().map(|_| ())
    }

    /// Seed of the search for one algorithm and repetition.
    pub fn search_seed(&self, algorithm: Algorithm, repetition: usize) -> u64 {
        let index = Algorithm::ALL
            .iter()
            .position(|&a| a == algorithm)
            .expect("algorithm is listed") as u64;
        derive_seed(self.seed, &[index, repetition as u64])
    }

    /// Seed of the demand draws, shared by every algorithm of a repetition.
    pub fn evaluation_seed(&self, repetition: usize) -> u64 {
        derive_seed(self.seed, &[EVALUATION_TAG, repetition as u64])
    }

    pub fn run_config(&self, algorithm: Algorithm, repetition: usize) -> AhmoaConfig {
        AhmoaConfig {
            seed: self.search_seed(algorithm, repetition),
            evaluation_seed: Some(self.evaluation_seed(repetition)),
            ..self.ahmoa.clone()
        }
    }

    pub fn run_name(algorithm: Algorithm, repetition: usize) -> String {
        format!("{}_rep{repetition}", algorithm.label())
    }
}

/// Natural log rounded half-to-even to 4 decimals; `0 → −∞`.
pub fn log_value(raw: f64) -> Result<f64> {
    if raw.is_nan() || raw < 0.0 {
        return Err(Error::Value(format!("cannot log-transform {raw}")));
    }
    if raw == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let v = (raw.ln() * 1e4).round_ties_even() / 1e4;
    Ok(if v == 0.0 { 0.0 } else { v })
}

pub fn log_transform(raw: &ObjectiveVector) -> Result<[f64; 3]> {
    let [a, b, c] = raw.to_array();
    Ok([log_value(a)?, log_value(b)?, log_value(c)?])
}

pub fn format_log(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        "-Inf".to_string()
    } else {
        format!("{v:.4}")
    }
}

pub fn parse_log(s: &str) -> Result<f64> {
    match s.trim() {
        "-Inf" => Ok(f64::NEG_INFINITY),
        t => t
            .parse()
            .map_err(|e| Error::Value(format!("bad log value {t:?}: {e}"))),
    }
}

mod log_triplet {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Cell {
        Number(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &[f64; 3], s: S) -> Result<S::Ok, S::Error> {
        v.map(|x| {
            if x.is_finite() {
                Cell::Number(x)
            } else {
                Cell::Text(super::format_log(x))
            }
        })
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[f64; 3], D::Error> {
        let cells = <[Cell; 3]>::deserialize(d)?;
        let mut out = [0.0; 3];
        for (o, c) in out.iter_mut().zip(cells) {
            *o = match c {
                Cell::Number(x) => x,
                Cell::Text(t) => super::parse_log(&t).map_err(serde::de::Error::custom)?,
            };
        }
        Ok(out)
    }
}

/// One row of a front table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontRecord {
    pub algorithm: String,
    #[serde(with = "log_triplet")]
    pub log_objectives: [f64; 3],
    pub raw_objectives: ObjectiveVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<LambdaVector>,
}

impl FrontRecord {
    pub fn new(algorithm: impl Into<String>, raw: ObjectiveVector) -> Result<Self> {
        Ok(FrontRecord {
            algorithm: algorithm.into(),
            log_objectives: log_transform(&raw)?,
            raw_objectives: raw,
            lambda: None,
        })
    }

    pub fn from_solution(algorithm: &str, s: &Solution) -> Result<Self> {
        Ok(FrontRecord {
            lambda: Some(s.lambda.clone()),
            ..Self::new(algorithm, s.objectives)?
        })
    }

    pub fn csv_line(&self) -> String {
        let [l1, l2, l3] = self.log_objectives.map(format_log);
        let o = &self.raw_objectives;
        format!("{},{l1},{l2},{l3},{},{},{}", self.algorithm, o.f1, o.f2, o.r)
    }

    fn parse_csv_line(line: &str) -> std::result::Result<Self, String> {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 7 {
            return Err(format!("expected 7 columns, found {}", cells.len()));
        }
        let mut logs = [0.0; 3];
        for (k, cell) in cells[1..4].iter().enumerate() {
            logs[k] = parse_log(cell).map_err(|e| e.to_string())?;
        }
        let mut raw = [0.0; 3];
        for (k, cell) in cells[4..7].iter().enumerate() {
            raw[k] = cell
                .trim()
                .parse()
                .map_err(|e| format!("bad raw value {cell:?}: {e}"))?;
        }
        Ok(FrontRecord {
            algorithm: cells[0].to_string(),
            log_objectives: logs,
            raw_objectives: ObjectiveVector::from_array(raw),
            lambda: None,
        })
    }
}

pub fn write_front_csv<W: Write>(records: &[FrontRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{FRONT_CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_line())?;
    }
    Ok(())
}

pub fn parse_front_csv(text: &str, origin: &Path) -> Result<Vec<FrontRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == FRONT_CSV_HEADER => {}
        _ => {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                line: 1,
                message: format!("expected header {FRONT_CSV_HEADER:?}"),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            FrontRecord::parse_csv_line(l).map_err(|message| Error::Parse {
                path: origin.to_path_buf(),
                line: n + 1,
                message,
            })
        })
        .collect()
}

pub fn read_front_csv(path: impl AsRef<Path>) -> Result<Vec<FrontRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_front_csv(&text, path)
}

/// Pools front records, drops those dominated on raw objectives, keeps the
/// first of any group identical after log rounding and sorts by the first
/// log objective.
pub fn merge_global_front<I: IntoIterator<Item = FrontRecord>>(records: I) -> Vec<FrontRecord> {
    let pool: Vec<FrontRecord> = records.into_iter().collect();
    let raw: Vec<[f64; 3]> = pool.iter().map(|r| r.raw_objectives.to_array()).collect();
    let mut merged: Vec<FrontRecord> = Vec::new();
    for i in non_dominated_indices(&raw) {
        let key = pool[i].log_objectives;
        if !merged.iter().any(|m| m.log_objectives == key) {
            merged.push(pool[i].clone());
        }
    }
    merged.sort_by(|a, b| a.log_objectives[0].total_cmp(&b.log_objectives[0]));
    merged
}

/// Per-run front file with embedded red-light ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFront {
    pub algorithm: String,
    pub repetition: usize,
    pub search_seed: u64,
    pub evaluation_seed: u64,
    pub records: Vec<FrontRecord>,
}

impl RunFront {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Record with the lowest delay, first on ties.
    pub fn lowest_delay(&self) -> Option<&FrontRecord> {
        self.records
            .iter()
            .reduce(|best, r| if r.raw_objectives.f1 < best.raw_objectives.f1 { r } else { best })
    }
}

/// `(row, col, mean delay)` cells, mapping intersection `k` to
/// `(k / cols, k % cols)`.
pub fn heatmap_cells(delays: &HourlyMatrix, layout: (usize, usize)) -> Result<Vec<(usize, usize, f64)>> {
    let (rows, cols) = layout;
    if rows * cols != delays.rows() {
        return Err(Error::shape(
            format!("{rows}x{cols} = {} cells", rows * cols),
            format!("{} intersections", delays.rows()),
        ));
    }
    Ok(delays
        .row_means()
        .into_iter()
        .enumerate()
        .map(|(k, d)| (k / cols, k % cols, d))
        .collect())
}

/// Writes `row,col,mean_delay_seconds`.
pub fn write_heatmap<W: Write>(delays: &HourlyMatrix, layout: (usize, usize), mut out: W) -> Result<()> {
    let cells = heatmap_cells(delays, layout)?;
    let io = |e| Error::io("heatmap", e);
    writeln!(out, "row,col,mean_delay_seconds").map_err(io)?;
    for (r, c, d) in cells {
        writeln!(out, "{r},{c},{d}").map_err(io)?;
    }
    Ok(())
}

pub fn export_heatmap(delays: &HourlyMatrix, layout: (usize, usize), path: impl AsRef<Path>) -> Result<()> {
    heatmap_cells(delays, layout)?;
    write_file(path.as_ref(), |w| write_heatmap(delays, layout, w))
}

/// Per-intersection hourly delay of `lambda` averaged over the `n_e`
/// evaluation draws of `seed` (fresh memory).
pub fn delay_matrix(
    lambda: &[f64],
    network: &TrafficNetwork,
    profile: &DemandProfile,
    seed: u64,
    cfg: &AhmoaConfig,
) -> Result<HourlyMatrix> {
    let mut memory = MemoryBuffer::new(cfg.memory_depth)?;
    let matrices = memory_matrices(network, profile, seed, cfg.n_e, &mut memory)?;
    mean_delay_matrix(lambda, network, &matrices)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    City,
    FrontCsv,
    FrontJson,
    Telemetry,
    GlobalFront,
    Heatmap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub kind: ArtifactKind,
    /// Relative to the output directory.
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repetition: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluation_seed: Option<u64>,
}

impl Artifact {
    fn plain(kind: ArtifactKind, path: impl Into<PathBuf>) -> Self {
        Artifact {
            kind,
            path: path.into(),
            algorithm: None,
            repetition: None,
            search_seed: None,
            evaluation_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub master_seed: u64,
    pub city_label: String,
    pub intersections: usize,
    pub heatmap_layout: (usize, usize),
    pub artifacts: Vec<Artifact>,
}

impl Manifest {
    pub const FILE_NAME: &'static str = "manifest.json";

    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let path = dir.as_ref().join(Self::FILE_NAME);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn of_kind(&self, kind: ArtifactKind) -> impl Iterator<Item = &Artifact> {
        self.artifacts.iter().filter(move |a| a.kind == kind)
    }
}

fn write_file<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<fs::File>) -> Result<()>,
{
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn ensure_writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

/// Builds the city and writes `city.json` into `dir`.
pub fn build_city(cfg: &ExperimentConfig, dir: &Path) -> Result<(TrafficNetwork, PathBuf)> {
    let network = cfg.build_city()?;
    let path = dir.join("city.json");
    let json = network.to_json()?;
    write_file(&path, |w| {
        w.write_all(json.as_bytes()).map_err(|e| Error::io("city.json", e))
    })?;
    Ok((network, path))
}

/// Result of one algorithm × repetition job.
#[derive(Debug, Clone)]
pub struct CompletedRun {
    pub algorithm: Algorithm,
    pub repetition: usize,
    pub config: AhmoaConfig,
    pub result: RunResult,
}

impl CompletedRun {
    pub fn records(&self) -> Result<Vec<FrontRecord>> {
        self.result
            .front
            .iter()
            .map(|s| FrontRecord::from_solution(self.algorithm.label(), s))
            .collect()
    }
}

/// Runs every algorithm × repetition job concurrently, in config order.
pub fn run_jobs(
    cfg: &ExperimentConfig,
    network: &TrafficNetwork,
    profile: &DemandProfile,
) -> Result<Vec<CompletedRun>> {
    let jobs: Vec<(Algorithm, usize)> = (0..cfg.repetitions)
        .flat_map(|r| cfg.algorithms.iter().map(move |&a| (a, r)))
        .collect();
    jobs.par_iter()
        .map(|&(algorithm, repetition)| {
            let config = cfg.run_config(algorithm, repetition);
            log::info!("running {} repetition {repetition}", algorithm.label());
            let result = algorithm.run(network, profile, &config, &cfg.moead)?;
            Ok(CompletedRun {
                algorithm,
                repetition,
                config,
                result,
            })
        })
        .collect()
}

fn write_run(dir: &Path, run: &CompletedRun) -> Result<Vec<Artifact>> {
    let name = ExperimentConfig::run_name(run.algorithm, run.repetition);
    let rel = PathBuf::from("runs").join(&name);
    let records = run.records()?;
    let front = RunFront {
        algorithm: run.algorithm.label().to_string(),
        repetition: run.repetition,
        search_seed: run.config.seed,
        evaluation_seed: run.config.evaluation_seed(),
        records: records.clone(),
    };
    let tagged = |kind, file: &str| Artifact {
        kind,
        path: rel.join(file),
        algorithm: Some(front.algorithm.clone()),
        repetition: Some(run.repetition),
        search_seed: Some(front.search_seed),
        evaluation_seed: Some(front.evaluation_seed),
    };
    let artifacts = vec![
        tagged(ArtifactKind::FrontCsv, "front.csv"),
        tagged(ArtifactKind::FrontJson, "front.json"),
        tagged(ArtifactKind::Telemetry, "telemetry.jsonl"),
    ];
    write_file(&dir.join(&artifacts[0].path), |w| {
        write_front_csv(&records, w).map_err(|e| Error::io("front.csv", e))
    })?;
    write_file(&dir.join(&artifacts[1].path), |w| {
        serde_json::to_writer_pretty(&mut *w, &front)?;
        Ok(())
    })?;
    write_file(&dir.join(&artifacts[2].path), |w| run.result.write_telemetry(w))?;
    Ok(artifacts)
}

/// Reads every per-run front CSV listed in the manifest of `dir`, merges
/// them and writes `global_front.csv`.
pub fn merge_fronts_in(dir: &Path) -> Result<(Vec<FrontRecord>, PathBuf)> {
    let manifest = Manifest::from_dir(dir)?;
    let mut pool = Vec::new();
    for a in manifest.of_kind(ArtifactKind::FrontCsv) {
        pool.extend(read_front_csv(dir.join(&a.path))?);
    }
    let merged = merge_global_front(pool);
    let path = dir.join("global_front.csv");
    write_file(&path, |w| {
        write_front_csv(&merged, w).map_err(|e| Error::io("global_front.csv", e))
    })?;
    Ok((merged, path))
}

/// Writes the uniform-λ baseline heatmap and one heatmap per run front
/// listed in the manifest of `dir` (its lowest-delay member). All maps
/// use the first repetition's evaluation draws.
pub fn export_heatmaps_in(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<Artifact>> {
    let network = cfg.build_city()?;
    let profile = cfg.demand_profile()?;
    let layout = cfg.layout_for(network.len());
    let seed = cfg.evaluation_seed(0);
    let manifest = Manifest::from_dir(dir)?;

    let mut jobs = vec![(
        PathBuf::from("heatmaps/baseline.csv"),
        None,
        None,
        vec![BASELINE_LAMBDA; network.len()],
    )];
    for a in manifest.of_kind(ArtifactKind::FrontJson) {
        let front = RunFront::from_path(dir.join(&a.path))?;
        let Some(best) = front.lowest_delay() else {
            continue;
        };
        let lambda = best
            .lambda
            .clone()
            .ok_or_else(|| Error::Value(format!("{} has no red-light ratios", a.path.display())))?;
        jobs.push((
            PathBuf::from(format!("heatmaps/{}_rep{}.csv", front.algorithm, front.repetition)),
            Some(front.algorithm),
            Some(front.repetition),
            lambda.into_inner(),
        ));
    }
    jobs.into_iter()
        .map(|(path, algorithm, repetition, lambda)| {
            let delays = delay_matrix(&lambda, &network, &profile, seed, &cfg.ahmoa)?;
            export_heatmap(&delays, layout, dir.join(&path))?;
            Ok(Artifact {
                algorithm,
                repetition,
                evaluation_seed: Some(seed),
                ..Artifact::plain(ArtifactKind::Heatmap, path)
            })
        })
        .collect()
}

fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<()> {
    write_file(&dir.join(Manifest::FILE_NAME), |w| {
        serde_json::to_writer_pretty(&mut *w, manifest)?;
        Ok(())
    })
}

/// Runs a complete experiment and returns its manifest.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Manifest> {
    cfg.validate()?;
    let dir = cfg.output_dir.as_path();
    let network = cfg.build_city()?;
    let profile = cfg.demand_profile()?;
    cfg.ahmoa.validate(network.len())?;
    let layout = cfg.layout_for(network.len());
    if layout.0 * layout.1 != network.len() {
        return Err(Error::config(format!(
            "heatmap layout {}x{} does not fit {} intersections",
            layout.0,
            layout.1,
            network.len()
        )));
    }
    ensure_writable(dir)?;

    build_city(cfg, dir)?;
    let mut manifest = Manifest {
        master_seed: cfg.seed,
        city_label: network.city_label().to_string(),
        intersections: network.len(),
        heatmap_layout: layout,
        artifacts: vec![Artifact::plain(ArtifactKind::City, "city.json")],
    };
    for run in run_jobs(cfg, &network, &profile)? {
        manifest.artifacts.extend(write_run(dir, &run)?);
    }
    write_manifest(dir, &manifest)?;

    merge_fronts_in(dir)?;
    manifest
        .artifacts
        .push(Artifact::plain(ArtifactKind::GlobalFront, "global_front.csv"));
    let heatmaps = export_heatmaps_in(cfg, dir)?;
    manifest.artifacts.extend(heatmaps);
    write_manifest(dir, &manifest)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moea::dominates;
    use crate::network::{build_grid_city, Archetype};
    use crate::rng::seeded_rng;
    use rand::Rng;

    #[test]
    fn log_values() {
        assert_eq!(log_value(1.0).unwrap(), 0.0);
        assert_eq!(log_value(0.0).unwrap(), f64::NEG_INFINITY);
        assert_eq!(log_value(std::f64::consts::E.powi(2)).unwrap(), 2.0);
        assert!(log_value(-1.0).is_err());
        assert_eq!(format_log(log_value(1.0).unwrap()), "0.0000");
        assert_eq!(format_log(f64::NEG_INFINITY), "-Inf");
        assert_eq!(parse_log("-Inf").unwrap(), f64::NEG_INFINITY);
        let v = ObjectiveVector::new(1.0, std::f64::consts::E.powi(2), 0.0);
        assert_eq!(log_transform(&v).unwrap(), [0.0, 2.0, f64::NEG_INFINITY]);
    }

    #[test]
    fn log_rounding_is_half_even() {
        let near = |v: f64| log_value(v.exp()).unwrap();
        assert_eq!(near(0.12344999), 0.1234);
        assert_eq!(near(0.12345001), 0.1235);
        assert_eq!((1.23445f64 * 1e4).round_ties_even(), 12344.0);
    }

    fn record(alg: &str, f: [f64; 3]) -> FrontRecord {
        FrontRecord::new(alg, ObjectiveVector::from_array(f)).unwrap()
    }

    #[test]
    fn merge_removes_dominated_run() {
        let a = vec![record("a", [1.0, 5.0, 1.0]), record("a", [5.0, 1.0, 1.0])];
        let b = vec![record("b", [2.0, 6.0, 2.0]), record("b", [6.0, 2.0, 1.0])];
        let merged = merge_global_front(a.into_iter().chain(b));
        assert_eq!(merged.len(), 2);
        assert!(merged.iter().all(|r| r.algorithm == "a"));
        assert!(merged[0].log_objectives[0] <= merged[1].log_objectives[0]);
    }

    #[test]
    fn merge_deduplicates_after_rounding() {
        let merged = merge_global_front(vec![
            record("a", [2.0, 3.0, 0.0]),
            record("a", [2.0, 3.0, 0.0]),
            record("a", [2.0000001, 3.0, 0.0]),
        ]);
        assert_eq!(merged.len(), 1);
        assert!(merge_global_front(Vec::new()).is_empty());
    }

    #[test]
    fn merged_random_fronts_are_non_dominated() {
        let mut rng = seeded_rng(9);
        for _ in 0..20 {
            let pool: Vec<FrontRecord> = (0..60)
                .map(|k| {
                    record(
                        if k % 2 == 0 { "x" } else { "y" },
                        [rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0)],
                    )
                })
                .collect();
            let merged = merge_global_front(pool);
            for a in &merged {
                for b in &merged {
                    assert!(!dominates(&a.raw_objectives.to_array(), &b.raw_objectives.to_array()));
                }
            }
        }
    }

    #[test]
    fn front_csv_round_trip() {
        let records = vec![
            record("ahmoa", [1234.5678912345, 0.1, 0.0]),
            record("moead", [std::f64::consts::PI, 1e-7, 42.0]),
        ];
        let mut buf = Vec::new();
        write_front_csv(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("-Inf"));
        let back = parse_front_csv(&text, Path::new("mem")).unwrap();
        assert_eq!(back, records);
        assert!(parse_front_csv("nope\n", Path::new("mem")).is_err());
    }

    #[test]
    fn front_json_round_trip() {
        let mut r = record("ahmoa", [3.0, 2.0, 0.0]);
        r.lambda = Some(LambdaVector::new(vec![0.25, 0.5]).unwrap());
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"-Inf\""));
        let back: FrontRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn heatmap_layouts() {
        let net = build_grid_city(2, 2, 1).unwrap();
        let profile = DemandProfile::default();
        let cfg = AhmoaConfig {
            n_e: 1,
            ..AhmoaConfig::default()
        };
        let delays = delay_matrix(&[0.5; 4], &net, &profile, 3, &cfg).unwrap();
        let cells = heatmap_cells(&delays, (2, 2)).unwrap();
        assert_eq!(cells.len(), 4);
        for (k, &(r, c, d)) in cells.iter().enumerate() {
            assert_eq!((r, c), (k / 2, k % 2));
            let hand = delays.row(k).iter().sum::<f64>() / 24.0;
            assert!((d - hand).abs() <= 1e-9 * hand);
        }
        assert!(heatmap_cells(&delays, (3, 2)).is_err());
    }

    #[test]
    fn config_parsing() {
        let json = r#"{
            "city": {"preset": "manhattan"},
            "algorithms": ["ahmoa", "nsde3"],
            "seed": 4,
            "output_dir": "out"
        }"#;
        let cfg = ExperimentConfig::from_json(json).unwrap();
        assert_eq!(cfg.repetitions, 1);
        assert_eq!(cfg.city_config().heatmap_layout, Some((88, 30)));
        cfg.validate().unwrap();
        let bad = json.replace("\"seed\": 4", "\"seed\": 4, \"colour\": 1");
        assert!(ExperimentConfig::from_json(&bad).is_err());
        let empty = ExperimentConfig {
            algorithms: vec![],
            ..cfg.clone()
        };
        assert!(empty.validate().is_err());
        let zero = ExperimentConfig {
            repetitions: 0,
            ..cfg.clone()
        };
        assert!(zero.validate().is_err());
        assert_ne!(
            cfg.search_seed(Algorithm::Ahmoa, 0),
            cfg.search_seed(Algorithm::Nsde3, 0)
        );
        assert_eq!(
            cfg.run_config(Algorithm::Ahmoa, 1).evaluation_seed,
            cfg.run_config(Algorithm::Moead, 1).evaluation_seed
        );
    }

    #[test]
    fn demand_overrides_apply() {
        let o = DemandOverrides {
            city_uplift: Some(0.3),
            without_jitter: true,
            ..DemandOverrides::default()
        };
        let p = o.apply(DemandProfile::default());
        assert_eq!(p.city_uplift, 0.3);
        assert_eq!(p.peak_jitter.low, p.peak_jitter.high);
    }

    fn tiny_config(dir: &Path) -> ExperimentConfig {
        ExperimentConfig {
            city: CitySpec::Custom(CityConfig {
                label: Some("tiny".into()),
                archetype: Archetype::Grid,
                arterial_count: 4,
                collector_count: 4,
                seed: 1,
                peak_windows: vec![HourWindow { start: 7, end: 9 }],
                peak_uplift: 0.0,
                heatmap_layout: None,
            }),
            demand: DemandOverrides::default(),
            algorithms: vec![Algorithm::Ahmoa],
            ahmoa: AhmoaConfig {
                population_size: 16,
                max_generations: 5,
                n_e: 2,
                ..AhmoaConfig::default()
            },
            moead: MoeadParams::default(),
            repetitions: 1,
            seed: 21,
            output_dir: dir.to_path_buf(),
            heatmap_layout: None,
        }
    }

    #[test]
    fn experiment_writes_parseable_artifacts() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = tiny_config(tmp.path());
        let manifest = run_experiment(&cfg).unwrap();
        assert!(manifest.artifacts.len() >= 4);
        assert_eq!(Manifest::from_dir(tmp.path()).unwrap(), manifest);
        for a in &manifest.artifacts {
            let path = tmp.path().join(&a.path);
            let text = fs::read_to_string(&path).unwrap();
            assert!(!text.is_empty(), "{}", a.path.display());
            match a.kind {
                ArtifactKind::City => {
                    TrafficNetwork::from_json(&text).unwrap();
                }
                ArtifactKind::FrontCsv | ArtifactKind::GlobalFront => {
                    assert!(!read_front_csv(&path).unwrap().is_empty());
                }
                ArtifactKind::FrontJson => {
                    RunFront::from_path(&path).unwrap();
                }
                ArtifactKind::Telemetry => {
                    for line in text.lines() {
                        serde_json::from_str::<crate::moea::TelemetryRecord>(line).unwrap();
                    }
                }
                ArtifactKind::Heatmap => assert_eq!(text.lines().count(), 17),
            }
        }
    }

    #[test]
    fn unwritable_output_fails_before_compute() {
        let tmp = tempfile::tempdir().unwrap();
        let blocker = tmp.path().join("file");
        fs::write(&blocker, b"x").unwrap();
        let cfg = tiny_config(&blocker.join("sub"));
        assert!(matches!(run_experiment(&cfg), Err(Error::Io { .. })));
    }
}
