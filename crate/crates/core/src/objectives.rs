//! Objective functions: average delay, network stability and robustness,
//! evaluated on memory-smoothed volume matrices.

use std::collections::VecDeque;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::demand::{generate_volumes, weather_factor, DemandProfile, HourlyMatrix, VolumeField};
use crate::error::{Error, Result};
use crate::network::{IntersectionSpec, TrafficNetwork};

pub const LAMBDA_MIN: f64 = 0.05;
pub const LAMBDA_MAX: f64 = 0.95;
/// Degrees of saturation above this are capped before entering the delay formula.
pub const SATURATION_CAP: f64 = 0.99;

/// Admissible range for red-light ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaBounds {
    pub min: f64,
    pub max: f64,
}

impl Default for LambdaBounds {
    fn default() -> Self {
        LambdaBounds {
            min: LAMBDA_MIN,
            max: LAMBDA_MAX,
        }
    }
}

impl LambdaBounds {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.min && self.min <= self.max && self.max <= 1.0) {
            return Err(Error::config(format!(
                "lambda bounds [{}, {}] must satisfy 0 <= min <= max <= 1",
                self.min, self.max
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.min, self.max)
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.min..=self.max).contains(&x)
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }
}

/// Red-light ratio per intersection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LambdaVector(Vec<f64>);

impl LambdaVector {
    pub fn new(ratios: Vec<f64>) -> Result<Self> {
        if let Some(bad) = ratios.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::Value(format!("red-light ratio {bad} outside [0, 1]")));
        }
        Ok(LambdaVector(ratios))
    }

    /// Builds a vector, clamping every component into `bounds`.
    pub fn clamped(mut ratios: Vec<f64>, bounds: &LambdaBounds) -> Self {
        for x in &mut ratios {
            *x = bounds.clamp(*x);
        }
        LambdaVector(ratios)
    }

    pub fn uniform(len: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; len])
    }

    pub fn within(&self, bounds: &LambdaBounds) -> bool {
        self.0.iter().all(|&x| bounds.contains(x))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for LambdaVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Objective values, all minimized.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectiveVector {
    /// Average delay, seconds.
    pub f1: f64,
    /// Stability penalty (lower is more stable).
    pub f2: f64,
    /// Robustness score: mean hourly standard deviation.
    pub r: f64,
}

impl ObjectiveVector {
    pub const fn new(f1: f64, f2: f64, r: f64) -> Self {
        ObjectiveVector { f1, f2, r }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.f1, self.f2, self.r]
    }

    pub fn from_array([f1, f2, r]: [f64; 3]) -> Self {
        ObjectiveVector { f1, f2, r }
    }

    pub fn dominates(&self, other: &ObjectiveVector) -> bool {
        crate::moea::dominates(&self.to_array(), &other.to_array())
    }
}

/// Ring buffer of the most recent volume fields.
#[derive(Debug, Clone)]
pub struct MemoryBuffer {
    capacity: usize,
    history: VecDeque<HourlyMatrix>,
}

impl MemoryBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("memory depth must be at least 1"));
        }
        Ok(MemoryBuffer {
            capacity,
            history: VecDeque::with_capacity(capacity),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    pub fn clear(&mut self) {
        self.history.clear();
    }

    fn check(&self, values: &HourlyMatrix) -> Result<()> {
        match self.history.front() {
            Some(existing) => values.check_shape(existing.rows(), existing.hours()),
            None => Ok(()),
        }
    }

    /// Stores `field`, evicting the oldest entry when full, and returns the
    /// element-wise mean over the stored fields.
    pub fn update(&mut self, field: &VolumeField) -> Result<HourlyMatrix> {
        self.push(field)?;
        Ok(self.mean().expect("buffer holds at least one field"))
    }

    pub fn push(&mut self, field: &VolumeField) -> Result<()> {
        self.check(&field.values)?;
        if self.history.len() == self.capacity {
            self.history.pop_front();
        }
        self.history.push_back(field.values.clone());
        Ok(())
    }

    /// Mean over the stored fields, or `None` when empty.
    pub fn mean(&self) -> Option<HourlyMatrix> {
        let first = self.history.front()?;
        Some(mean_of(self.history.iter(), first.rows(), first.hours()))
    }

    /// The mean `update(field)` would return, without modifying the buffer.
    pub fn preview(&self, field: &VolumeField) -> Result<HourlyMatrix> {
        self.check(&field.values)?;
        let keep = self.history.len().min(self.capacity - 1);
        let recent = self.history.iter().skip(self.history.len() - keep);
        let (rows, hours) = field.values.shape();
        Ok(mean_of(recent.chain([&field.values]), rows, hours))
    }
}

fn mean_of<'a>(
    items: impl Iterator<Item = &'a HourlyMatrix>,
    rows: usize,
    hours: usize,
) -> HourlyMatrix {
    let mut acc = HourlyMatrix::zeros(rows, hours);
    let mut count = 0usize;
    for m in items {
        for (a, v) in acc.as_mut_slice().iter_mut().zip(m.as_slice()) {
            *a += v;
        }
        count += 1;
    }
    let scale = 1.0 / count as f64;
    acc.as_mut_slice().iter_mut().for_each(|a| *a *= scale);
    acc
}

#[inline]
fn delay_unchecked(cycle: f64, lambda: f64, volume: f64, saturation: f64) -> f64 {
    let x = (volume / saturation).min(SATURATION_CAP);
    let green = (1.0 - lambda) * cycle;
    let red_share = 1.0 - green / cycle;
    let uniform = cycle * red_share * red_share / (2.0 * (1.0 - lambda * x));
    let per_second = saturation / 3600.0;
    let random = x * x / (2.0 * per_second * (1.0 - x));
    uniform + random
}

/// Per-vehicle delay in seconds from the modified Webster formula.
///
/// `volume` and `saturation` are in vehicles/hour; the overflow term uses
/// the saturation flow in vehicles/second. The degree of saturation is
/// capped at [`SATURATION_CAP`].
pub fn webster_delay(cycle: f64, lambda: f64, volume: f64, saturation: f64) -> Result<f64> {
    if !(cycle > 0.0 && cycle.is_finite()) {
        return Err(Error::Value(format!("cycle length must be positive, got {cycle}")));
    }
    if !(saturation > 0.0 && saturation.is_finite()) {
        return Err(Error::Value(format!("saturation flow must be positive, got {saturation}")));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Value(format!("red-light ratio {lambda} outside [0, 1]")));
    }
    if !(volume >= 0.0 && volume.is_finite()) {
        return Err(Error::Value(format!("volume must be non-negative, got {volume}")));
    }
    Ok(delay_unchecked(cycle, lambda, volume, saturation))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayBreakdown {
    pub f1: f64,
    /// `Σ_i D_i(t)` for each hour.
    pub per_hour: Vec<f64>,
    /// `D_i(t)` for every intersection and hour.
    pub per_cell: HourlyMatrix,
}

fn check_lambda(lambda: &[f64], n: usize) -> Result<()> {
    if lambda.len() != n {
        return Err(Error::shape(format!("{n} red-light ratios"), lambda.len()));
    }
    Ok(())
}

/// Average network delay over the day, with hourly and per-cell detail.
pub fn average_delay(
    lambda: &[f64],
    volumes: &HourlyMatrix,
    intersections: &[IntersectionSpec],
) -> Result<DelayBreakdown> {
    let n = intersections.len();
    check_lambda(lambda, n)?;
    let hours = volumes.hours();
    volumes.check_shape(n, hours)?;
    if hours == 0 {
        return Err(Error::shape("at least one hour", 0));
    }
    let weather: Vec<f64> = (0..hours).map(|t| weather_factor(t, hours)).collect();
    let mut per_cell = HourlyMatrix::zeros(n, hours);
    let mut per_hour = vec![0.0; hours];
    for (i, spec) in intersections.iter().enumerate() {
        if !(0.0..=1.0).contains(&lambda[i]) {
            return Err(Error::Value(format!("red-light ratio {} outside [0, 1]", lambda[i])));
        }
        let cycle = f64::from(spec.cycle_length);
        for t in 0..hours {
            let d = delay_unchecked(
                cycle,
                lambda[i],
                volumes.get(i, t),
                spec.base_saturation * weather[t],
            );
            per_cell.set(i, t, d);
            per_hour[t] += d;
        }
    }
    let f1 = per_hour.iter().sum::<f64>() / hours as f64;
    Ok(DelayBreakdown {
        f1,
        per_hour,
        per_cell,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityBreakdown {
    pub f2: f64,
    pub per_hour: Vec<f64>,
}

/// Stability penalty summed over edges and hours.
///
/// Each undirected edge `(i, j)` with `i < j` contributes
/// `(|M_it − M_jt| + |M_it − M_i,t+1|) · (1 + |λ_i − λ_j|) · w_i` per hour,
/// with the hour after the last wrapping to the first.
pub fn network_stability(
    lambda: &[f64],
    volumes: &HourlyMatrix,
    network: &TrafficNetwork,
) -> Result<StabilityBreakdown> {
    let n = network.len();
    check_lambda(lambda, n)?;
    let hours = volumes.hours();
    volumes.check_shape(n, hours)?;
    let mut per_hour = vec![0.0; hours];
    for &(i, j) in network.edges() {
        let coupling =
            (1.0 + (lambda[i] - lambda[j]).abs()) * network.intersections()[i].type_weight;
        for (t, slot) in per_hour.iter_mut().enumerate() {
            let next = (t + 1) % hours;
            let spatial = (volumes.get(i, t) - volumes.get(j, t)).abs();
            let temporal = (volumes.get(i, t) - volumes.get(i, next)).abs();
            *slot += (spatial + temporal) * coupling;
        }
    }
    Ok(StabilityBreakdown {
        f2: per_hour.iter().sum(),
        per_hour,
    })
}

/// Hourly values of each objective: `series[j][h]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlyObjectiveTable {
    series: Vec<Vec<f64>>,
}

impl HourlyObjectiveTable {
    pub fn new(series: Vec<Vec<f64>>) -> Result<Self> {
        let hours = series.first().map_or(0, Vec::len);
        if series.is_empty() {
            return Err(Error::shape("at least one objective series", 0));
        }
        if series.iter().any(|s| s.len() != hours) {
            return Err(Error::shape("equal-length hourly series", "ragged series"));
        }
        if hours < 2 {
            return Err(Error::shape("at least 2 hours", hours));
        }
        Ok(HourlyObjectiveTable { series })
    }

    pub fn series(&self) -> &[Vec<f64>] {
        &self.series
    }

    pub fn hours(&self) -> usize {
        self.series[0].len()
    }
}

fn sample_std_dev(values: &[f64]) -> f64 {
    // Shifted by the first sample so constant series give exactly zero.
    let n = values.len() as f64;
    let shift = values[0];
    let mean = values.iter().map(|v| v - shift).sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - shift - mean).powi(2)).sum();
    (ss / (n - 1.0)).sqrt()
}

/// Mean over objectives of the sample standard deviation across hours.
pub fn robustness(table: &HourlyObjectiveTable) -> f64 {
    let m = table.series.len() as f64;
    table.series.iter().map(|s| sample_std_dev(s)).sum::<f64>() / m
}

/// How the robustness score combines several evaluation draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobustnessMode {
    /// Average the hourly tables across draws, then score once.
    #[default]
    MeanTable,
    /// Score each draw and average the scores.
    MeanOfDraws,
}

/// Objective vector of `lambda` given one smoothed volume matrix per draw.
pub fn evaluate_on_matrices(
    lambda: &[f64],
    network: &TrafficNetwork,
    matrices: &[HourlyMatrix],
    mode: RobustnessMode,
) -> Result<ObjectiveVector> {
    if matrices.is_empty() {
        return Err(Error::config("at least one evaluation draw is required"));
    }
    let hours = matrices[0].hours();
    let draws = matrices.len() as f64;
    let mut f1 = 0.0;
    let mut f2 = 0.0;
    let mut r_sum = 0.0;
    let mut delay_hours = vec![0.0; hours];
    let mut stability_hours = vec![0.0; hours];
    for m in matrices {
        m.check_shape(network.len(), hours)?;
        let delay = average_delay(lambda, m, network.intersections())?;
        let stability = network_stability(lambda, m, network)?;
        f1 += delay.f1;
        f2 += stability.f2;
        match mode {
            RobustnessMode::MeanTable => {
                for t in 0..hours {
                    delay_hours[t] += delay.per_hour[t] / draws;
                    stability_hours[t] += stability.per_hour[t] / draws;
                }
            }
            RobustnessMode::MeanOfDraws => {
                let table = HourlyObjectiveTable::new(vec![delay.per_hour, stability.per_hour])?;
                r_sum += robustness(&table);
            }
        }
    }
    let r = match mode {
        RobustnessMode::MeanTable => {
            robustness(&HourlyObjectiveTable::new(vec![delay_hours, stability_hours])?)
        }
        RobustnessMode::MeanOfDraws => r_sum / draws,
    };
    Ok(ObjectiveVector {
        f1: f1 / draws,
        f2: f2 / draws,
        r,
    })
}

/// Draws `n_e` volume fields `(seed, 1..=n_e)`, smoothing each through the
/// memory buffer, and returns the expected objective vector.
pub fn evaluate_solution(
    lambda: &LambdaVector,
    network: &TrafficNetwork,
    profile: &DemandProfile,
    seed: u64,
    n_e: usize,
    memory: &mut MemoryBuffer,
) -> Result<ObjectiveVector> {
    evaluate_solution_with(lambda, network, profile, seed, n_e, memory, RobustnessMode::default())
}

pub fn evaluate_solution_with(
    lambda: &LambdaVector,
    network: &TrafficNetwork,
    profile: &DemandProfile,
    seed: u64,
    n_e: usize,
    memory: &mut MemoryBuffer,
    mode: RobustnessMode,
) -> Result<ObjectiveVector> {
    let matrices = memory_matrices(network, profile, seed, n_e, memory)?;
    evaluate_on_matrices(lambda, network, &matrices, mode)
}

/// Smoothed matrices for draws `1..=n_e`, advancing `memory` once per draw.
pub fn memory_matrices(
    network: &TrafficNetwork,
    profile: &DemandProfile,
    seed: u64,
    n_e: usize,
    memory: &mut MemoryBuffer,
) -> Result<Vec<HourlyMatrix>> {
    if n_e == 0 {
        return Err(Error::config("n_e must be at least 1"));
    }
    (1..=n_e as u64)
        .map(|draw| memory.update(&generate_volumes(network, profile, seed, draw)))
        .collect()
}

/// Per-intersection, per-hour delay averaged over the supplied draws.
pub fn mean_delay_matrix(
    lambda: &[f64],
    network: &TrafficNetwork,
    matrices: &[HourlyMatrix],
) -> Result<HourlyMatrix> {
    let first = matrices
        .first()
        .ok_or_else(|| Error::config("at least one evaluation draw is required"))?;
    let mut acc = HourlyMatrix::zeros(network.len(), first.hours());
    for m in matrices {
        let d = average_delay(lambda, m, network.intersections())?;
        for (a, v) in acc.as_mut_slice().iter_mut().zip(d.per_cell.as_slice()) {
            *a += v / matrices.len() as f64;
        }
    }
    Ok(acc)
}

/// Writes `i,t,delay_seconds` rows.
pub fn write_delay_csv<W: std::io::Write>(delays: &HourlyMatrix, mut out: W) -> std::io::Result<()> {
    writeln!(out, "i,t,delay_seconds")?;
    for i in 0..delays.rows() {
        for t in 0..delays.hours() {
            writeln!(out, "{i},{t},{}", delays.get(i, t))?;
        }
    }
    Ok(())
}
