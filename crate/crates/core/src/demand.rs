//! Stochastic hourly demand and weather-modulated capacity.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::TrafficNetwork;
use crate::rng::keyed_rng;

/// Number of hourly segments in a simulated day.
pub const HOURS_PER_DAY: usize = 24;

/// Half-open hour range `[start, end)`, serialized as `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "(u32, u32)", into = "(u32, u32)")]
pub struct HourWindow {
    pub start: u32,
    pub end: u32,
}

impl From<(u32, u32)> for HourWindow {
    fn from((start, end): (u32, u32)) -> Self {
        HourWindow { start, end }
    }
}

impl From<HourWindow> for (u32, u32) {
    fn from(w: HourWindow) -> Self {
        (w.start, w.end)
    }
}

impl HourWindow {
    pub fn contains(&self, hour: usize) -> bool {
        (self.start as usize..self.end as usize).contains(&hour)
    }

    pub fn validate(&self) -> Result<()> {
        if self.start >= 24 || self.end > 24 || self.start >= self.end {
            return Err(Error::config(format!(
                "hour window [{}, {}) must satisfy 0 <= start < end <= 24",
                self.start, self.end
            )));
        }
        Ok(())
    }
}

/// Closed interval `[low, high]`, serialized as `[low, high]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64)", into = "(f64, f64)")]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

impl From<(f64, f64)> for Interval {
    fn from((low, high): (f64, f64)) -> Self {
        Interval { low, high }
    }
}

impl From<Interval> for (f64, f64) {
    fn from(i: Interval) -> Self {
        (i.low, i.high)
    }
}

impl Interval {
    pub const fn new(low: f64, high: f64) -> Self {
        Interval { low, high }
    }

    pub const fn point(value: f64) -> Self {
        Interval {
            low: value,
            high: value,
        }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.low + self.high)
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        rng.gen_range(self.low..=self.high)
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.low > 0.0 && self.low <= self.high && self.high.is_finite()) {
            return Err(Error::config(format!(
                "{name}: interval [{}, {}] must be positive with low <= high",
                self.low, self.high
            )));
        }
        Ok(())
    }
}

/// Daily demand schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemandProfile {
    pub peak_windows: Vec<HourWindow>,
    pub lunch_window: HourWindow,
    pub midnight_window: HourWindow,
    pub peak_base_factor: f64,
    pub peak_jitter: Interval,
    pub offpeak_range: Interval,
    pub lunch_base_factor: f64,
    pub lunch_jitter: Interval,
    pub midnight_factor: f64,
    /// Extra relative peak demand (0.25 means +25%).
    pub city_uplift: f64,
}

impl Default for DemandProfile {
    fn default() -> Self {
        DemandProfile {
            peak_windows: vec![HourWindow::from((7, 9)), HourWindow::from((17, 19))],
            lunch_window: HourWindow::from((12, 14)),
            midnight_window: HourWindow::from((0, 5)),
            peak_base_factor: 1.5,
            peak_jitter: Interval::new(0.9, 1.3),
            offpeak_range: Interval::new(0.5, 1.0),
            lunch_base_factor: 1.1,
            lunch_jitter: Interval::new(0.8, 1.2),
            midnight_factor: 0.5,
            city_uplift: 0.0,
        }
    }
}

/// Which branch of the schedule an hour falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemandPeriod {
    Midnight,
    Peak,
    Lunch,
    OffPeak,
}

impl DemandProfile {
    /// Copy of this profile with every random interval collapsed to its
    /// midpoint, so each hour has a constant factor.
    pub fn without_jitter(&self) -> Self {
        DemandProfile {
            peak_jitter: Interval::point(self.peak_jitter.midpoint()),
            offpeak_range: Interval::point(self.offpeak_range.midpoint()),
            lunch_jitter: Interval::point(self.lunch_jitter.midpoint()),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for w in self
            .peak_windows
            .iter()
            .chain([&self.lunch_window, &self.midnight_window])
        {
            w.validate()?;
        }
        for (name, factor) in [
            ("peak_base_factor", self.peak_base_factor),
            ("lunch_base_factor", self.lunch_base_factor),
            ("midnight_factor", self.midnight_factor),
        ] {
            if !(factor > 0.0 && factor.is_finite()) {
                return Err(Error::config(format!("{name} must be positive")));
            }
        }
        self.peak_jitter.validate("peak_jitter")?;
        self.offpeak_range.validate("offpeak_range")?;
        self.lunch_jitter.validate("lunch_jitter")?;
        if !(self.city_uplift >= 0.0 && self.city_uplift.is_finite()) {
            return Err(Error::config("city_uplift must be non-negative"));
        }
        Ok(())
    }

    /// Classifies an hour. Precedence: midnight, peak, lunch, off-peak.
    pub fn period(&self, hour: usize) -> DemandPeriod {
        if self.midnight_window.contains(hour) {
            DemandPeriod::Midnight
        } else if self.peak_windows.iter().any(|w| w.contains(hour)) {
            DemandPeriod::Peak
        } else if self.lunch_window.contains(hour) {
            DemandPeriod::Lunch
        } else {
            DemandPeriod::OffPeak
        }
    }

    /// Expected demand factor for an hour.
    pub fn expected_factor(&self, hour: usize) -> f64 {
        match self.period(hour) {
            DemandPeriod::Midnight => self.midnight_factor,
            DemandPeriod::Peak => {
                self.peak_base_factor * self.peak_jitter.midpoint() * (1.0 + self.city_uplift)
            }
            DemandPeriod::Lunch => self.lunch_base_factor * self.lunch_jitter.midpoint(),
            DemandPeriod::OffPeak => self.offpeak_range.midpoint(),
        }
    }
}

/// Weather modulation of saturation flow: `0.8 + 0.4 sin(2πt/T)`.
pub fn weather_factor(hour: usize, segments: usize) -> f64 {
    0.8 + 0.4 * (2.0 * PI * hour as f64 / segments as f64).sin()
}

/// Saturation flow at hour `t` after weather modulation.
pub fn effective_saturation(base: f64, hour: usize, segments: usize) -> f64 {
    base * weather_factor(hour, segments)
}

/// Random demand multiplier for `hour`.
pub fn time_of_day_factor<R: Rng>(profile: &DemandProfile, hour: usize, rng: &mut R) -> f64 {
    match profile.period(hour) {
        DemandPeriod::Midnight => profile.midnight_factor,
        DemandPeriod::Peak => {
            profile.peak_base_factor * profile.peak_jitter.sample(rng) * (1.0 + profile.city_uplift)
        }
        DemandPeriod::Lunch => profile.lunch_base_factor * profile.lunch_jitter.sample(rng),
        DemandPeriod::OffPeak => profile.offpeak_range.sample(rng),
    }
}

/// Row-major `rows × hours` matrix of per-intersection hourly values.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlyMatrix {
    rows: usize,
    hours: usize,
    data: Vec<f64>,
}

impl HourlyMatrix {
    pub fn zeros(rows: usize, hours: usize) -> Self {
        HourlyMatrix {
            rows,
            hours,
            data: vec![0.0; rows * hours],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let hours = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != hours) {
            return Err(Error::shape(format!("{hours} columns"), format!("{} columns", bad.len())));
        }
        let n = rows.len();
        Ok(HourlyMatrix {
            rows: n,
            hours,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn hours(&self) -> usize {
        self.hours
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.hours)
    }

    #[inline]
    pub fn get(&self, i: usize, t: usize) -> f64 {
        self.data[i * self.hours + t]
    }

    #[inline]
    pub fn set(&mut self, i: usize, t: usize, value: f64) {
        self.data[i * self.hours + t] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.hours..(i + 1) * self.hours]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Mean of each row across hours.
    pub fn row_means(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().sum::<f64>() / self.hours as f64)
            .collect()
    }

    pub(crate) fn check_shape(&self, rows: usize, hours: usize) -> Result<()> {
        if self.shape() != (rows, hours) {
            return Err(Error::shape(
                format!("{rows}x{hours}"),
                format!("{}x{}", self.rows, self.hours),
            ));
        }
        Ok(())
    }
}

/// One stochastic draw of hourly vehicle volumes for every intersection.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeField {
    pub values: HourlyMatrix,
    pub seed: u64,
    pub draw_index: u64,
}

impl VolumeField {
    /// Writes `i,t,volume` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "i,t,volume")?;
        for i in 0..self.values.rows() {
            for t in 0..self.values.hours() {
                writeln!(out, "{i},{t},{}", self.values.get(i, t))?;
            }
        }
        Ok(())
    }
}

/// Draws the volume field for `(seed, draw_index)`. Cell `(i, t)` uses its
/// own random stream, so the result does not depend on evaluation order.
pub fn generate_volumes(
    network: &TrafficNetwork,
    profile: &DemandProfile,
    seed: u64,
    draw_index: u64,
) -> VolumeField {
    let mut values = HourlyMatrix::zeros(network.len(), HOURS_PER_DAY);
    for (i, spec) in network.intersections().iter().enumerate() {
        for t in 0..HOURS_PER_DAY {
            let mut rng = keyed_rng(seed, &[draw_index, i as u64, t as u64]);
            values.set(i, t, spec.base_saturation * time_of_day_factor(profile, t, &mut rng));
        }
    }
    VolumeField {
        values,
        seed,
        draw_index,
    }
}
