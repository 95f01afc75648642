//! Intersection-level network model and synthetic city generators.
//!
//! A [`TrafficNetwork`] is an undirected graph whose nodes are signalized
//! intersections. Each node carries a cycle length, a base saturation flow
//! and a road class; its `type_weight` is derived from the node degree once
//! the topology is final.
//!
//! Three generator families cover the city archetypes: a rectangular grid,
//! a ring-radial layout around a central hub, and an irregular mesh built
//! by rewiring a grid. All generators are pure functions of their
//! arguments.

use std::collections::{BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::demand::{DemandProfile, HourWindow};
use crate::error::{Error, Result};
use crate::rng::keyed_rng;

/// Default set of admissible cycle lengths, seconds.
pub const DEFAULT_CYCLE_LENGTHS: [u32; 3] = [60, 90, 120];
/// Inclusive bounds for base saturation flows, vehicles/hour.
pub const SATURATION_BOUNDS: (f64, f64) = (800.0, 2400.0);
/// Share of grid edges removed (and replaced by shortcuts) in irregular meshes.
pub const DEFAULT_REWIRE_FRACTION: f64 = 0.15;

const TAG_LINE: u64 = 1;
const TAG_NODE: u64 = 2;
const TAG_REWIRE: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoadClass {
    Local,
    Collector,
    Arterial,
}

impl RoadClass {
    /// Range of base saturation flows sampled for intersections of this class.
    pub fn saturation_range(self) -> (f64, f64) {
        match self {
            RoadClass::Local => (800.0, 1400.0),
            RoadClass::Collector => (1200.0, 1900.0),
            RoadClass::Arterial => (1700.0, 2400.0),
        }
    }
}

/// Weight encoding the intersection type, derived from node degree.
///
/// Four-way (or larger) crossings weigh 1.0, T-junctions 0.75 and
/// bends or dead ends 0.5.
pub fn type_weight_for_degree(degree: usize) -> f64 {
    match degree {
        0..=2 => 0.5,
        3 => 0.75,
        _ => 1.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionSpec {
    pub id: usize,
    /// Signal cycle length, seconds.
    #[serde(rename = "cycle")]
    pub cycle_length: u32,
    /// Saturation flow before weather modulation, vehicles/hour.
    pub base_saturation: f64,
    #[serde(rename = "class")]
    pub road_class: RoadClass,
    pub type_weight: f64,
}

/// Immutable intersection graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkDocument", into = "NetworkDocument")]
pub struct TrafficNetwork {
    city_label: String,
    intersections: Vec<IntersectionSpec>,
    /// Undirected edges with `i < j`, sorted.
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDocument {
    city_label: String,
    intersections: Vec<IntersectionSpec>,
    edges: Vec<[usize; 2]>,
}

impl TryFrom<NetworkDocument> for TrafficNetwork {
    type Error = Error;

    fn try_from(doc: NetworkDocument) -> Result<Self> {
        let edges = doc.edges.into_iter().map(|[i, j]| (i, j)).collect();
        TrafficNetwork::new(doc.city_label, doc.intersections, edges)
    }
}

impl From<TrafficNetwork> for NetworkDocument {
    fn from(net: TrafficNetwork) -> Self {
        NetworkDocument {
            city_label: net.city_label,
            intersections: net.intersections,
            edges: net.edges.into_iter().map(|(i, j)| [i, j]).collect(),
        }
    }
}

impl TrafficNetwork {
    /// Validates and assembles a network. Edges may be given in either
    /// orientation; they are canonicalized to `i < j`.
    pub fn new(
        city_label: impl Into<String>,
        intersections: Vec<IntersectionSpec>,
        edges: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let n = intersections.len();
        if n == 0 {
            return Err(Error::config("network needs at least one intersection"));
        }
        for (idx, spec) in intersections.iter().enumerate() {
            if spec.id != idx {
                return Err(Error::config(format!(
                    "intersection at position {idx} has id {}",
                    spec.id
                )));
            }
            if spec.cycle_length == 0 {
                return Err(Error::config(format!("intersection {idx}: zero cycle length")));
            }
            let (lo, hi) = SATURATION_BOUNDS;
            if !(lo..=hi).contains(&spec.base_saturation) {
                return Err(Error::config(format!(
                    "intersection {idx}: base saturation {} outside [{lo}, {hi}]",
                    spec.base_saturation
                )));
            }
            if !(spec.type_weight > 0.0 && spec.type_weight.is_finite()) {
                return Err(Error::config(format!(
                    "intersection {idx}: type weight must be positive"
                )));
            }
        }

        let mut canonical = BTreeSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::IndexOutOfRange {
                    index: a.max(b),
                    len: n,
                });
            }
            if a == b {
                return Err(Error::config(format!("self-loop at intersection {a}")));
            }
            if !canonical.insert((a.min(b), a.max(b))) {
                return Err(Error::config(format!("duplicate edge ({a}, {b})")));
            }
        }
        let edges: Vec<(usize, usize)> = canonical.into_iter().collect();

        let mut adjacency = vec![Vec::new(); n];
        for &(i, j) in &edges {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        if let Some(isolated) = adjacency.iter().position(Vec::is_empty) {
            return Err(Error::config(format!("intersection {isolated} is isolated")));
        }

        Ok(TrafficNetwork {
            city_label: city_label.into(),
            intersections,
            edges,
            adjacency,
        })
    }

    pub fn city_label(&self) -> &str {
        &self.city_label
    }

    pub fn len(&self) -> usize {
        self.intersections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intersections.is_empty()
    }

    pub fn intersections(&self) -> &[IntersectionSpec] {
        &self.intersections
    }

    pub fn intersection(&self, i: usize) -> Result<&IntersectionSpec> {
        self.intersections.get(i).ok_or(Error::IndexOutOfRange {
            index: i,
            len: self.len(),
        })
    }

    /// Undirected edges, each listed once with `i < j`, in sorted order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sorted neighbor list of intersection `i`.
    pub fn neighbors(&self, i: usize) -> Result<&[usize]> {
        self.adjacency
            .get(i)
            .map(Vec::as_slice)
            .ok_or(Error::IndexOutOfRange {
                index: i,
                len: self.len(),
            })
    }

    pub fn degree(&self, i: usize) -> Result<usize> {
        self.neighbors(i).map(<[usize]>::len)
    }

    pub fn is_adjacent(&self, i: usize, j: usize) -> bool {
        self.adjacency
            .get(i)
            .is_some_and(|list| list.binary_search(&j).is_ok())
    }

    pub fn is_connected(&self) -> bool {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut visited = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    visited += 1;
                    queue.push_back(v);
                }
            }
        }
        visited == n
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Knobs shared by all generators.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorOptions {
    pub cycle_lengths: Vec<u32>,
    /// Fraction of grid edges rewired into shortcuts (irregular meshes only).
    pub rewire_fraction: f64,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        GeneratorOptions {
            cycle_lengths: DEFAULT_CYCLE_LENGTHS.to_vec(),
            rewire_fraction: DEFAULT_REWIRE_FRACTION,
        }
    }
}

impl GeneratorOptions {
    fn validate(&self) -> Result<()> {
        if self.cycle_lengths.is_empty() || self.cycle_lengths.contains(&0) {
            return Err(Error::config("cycle length set must be non-empty and positive"));
        }
        if !(0.0..=1.0).contains(&self.rewire_fraction) {
            return Err(Error::config("rewire fraction must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Seeded class for each cross line: mostly collectors and locals, with a
/// few major lines that upgrade their crossings to arterial junctions.
fn line_classes(count: usize, seed: u64, family: u64) -> Vec<RoadClass> {
    (0..count)
        .map(|line| {
            let u: f64 = keyed_rng(seed, &[TAG_LINE, family, line as u64]).gen();
            if u < 0.1 {
                RoadClass::Arterial
            } else if u < 0.6 {
                RoadClass::Collector
            } else {
                RoadClass::Local
            }
        })
        .collect()
}

fn assemble(
    label: &str,
    classes: &[RoadClass],
    edges: Vec<(usize, usize)>,
    seed: u64,
    opts: &GeneratorOptions,
) -> Result<TrafficNetwork> {
    let n = classes.len();
    let mut degree = vec![0usize; n];
    for &(i, j) in &edges {
        degree[i] += 1;
        degree[j] += 1;
    }
    let intersections = classes
        .iter()
        .enumerate()
        .map(|(id, &class)| {
            let mut rng = keyed_rng(seed, &[TAG_NODE, id as u64]);
            let cycle_length = *opts
                .cycle_lengths
                .choose(&mut rng)
                .expect("validated non-empty");
            let (lo, hi) = class.saturation_range();
            IntersectionSpec {
                id,
                cycle_length,
                base_saturation: rng.gen_range(lo..=hi),
                road_class: class,
                type_weight: type_weight_for_degree(degree[id]),
            }
        })
        .collect();
    TrafficNetwork::new(label, intersections, edges)
}

fn grid_edges(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(2 * rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let id = r * cols + c;
            if c + 1 < cols {
                edges.push((id, id + 1));
            }
            if r + 1 < rows {
                edges.push((id, id + cols));
            }
        }
    }
    edges
}

/// Rectangular grid of `avenues × streets` intersections. Intersection
/// `a * streets + s` sits where avenue `a` crosses street `s`.
pub fn build_grid_city(avenues: usize, streets: usize, seed: u64) -> Result<TrafficNetwork> {
    build_grid_city_with(avenues, streets, seed, &GeneratorOptions::default())
}

pub fn build_grid_city_with(
    avenues: usize,
    streets: usize,
    seed: u64,
    opts: &GeneratorOptions,
) -> Result<TrafficNetwork> {
    opts.validate()?;
    if avenues < 2 || streets < 2 {
        return Err(Error::config(format!(
            "grid needs at least 2 avenues and 2 streets, got {avenues}x{streets}"
        )));
    }
    // Avenues are arterial throughout, so a crossing's class follows its street.
    let street_class = line_classes(streets, seed, 0);
    let classes: Vec<RoadClass> = (0..avenues * streets)
        .map(|id| street_class[id % streets])
        .collect();
    assemble(
        &format!("grid {avenues}x{streets}"),
        &classes,
        grid_edges(avenues, streets),
        seed,
        opts,
    )
}

/// Ring-radial city: a central hub (intersection 0) plus one intersection
/// wherever a radial crosses a ring. Crossing of radial `r` with ring `k`
/// (ring 0 innermost) has id `1 + k * radials + r`.
pub fn build_radial_city(radials: usize, rings: usize, seed: u64) -> Result<TrafficNetwork> {
    build_radial_city_with(radials, rings, seed, &GeneratorOptions::default())
}

pub fn build_radial_city_with(
    radials: usize,
    rings: usize,
    seed: u64,
    opts: &GeneratorOptions,
) -> Result<TrafficNetwork> {
    opts.validate()?;
    if radials < 3 {
        return Err(Error::config(format!(
            "radial city needs at least 3 radials, got {radials}"
        )));
    }
    if rings < 1 {
        return Err(Error::config("radial city needs at least one ring"));
    }
    let id = |r: usize, k: usize| 1 + k * radials + r;
    let mut edges = Vec::with_capacity(2 * radials * rings + radials);
    for r in 0..radials {
        edges.push((0, id(r, 0)));
        for k in 0..rings {
            if k + 1 < rings {
                edges.push((id(r, k), id(r, k + 1)));
            }
            edges.push((id(r, k), id((r + 1) % radials, k)));
        }
    }
    // The outermost ring is the orbital motorway; inner rings draw a seeded class.
    let mut ring_class = line_classes(rings, seed, 1);
    ring_class[rings - 1] = RoadClass::Arterial;
    let mut classes = Vec::with_capacity(1 + radials * rings);
    classes.push(RoadClass::Arterial);
    for &class in &ring_class {
        classes.extend(std::iter::repeat_n(class, radials));
    }
    assemble(
        &format!("radial {radials}x{rings}"),
        &classes,
        edges,
        seed,
        opts,
    )
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Irregular multi-centre mesh: an `arterials × collectors` crossing grid
/// where a seeded share of edges is removed and the same number of local
/// shortcuts (bridges, tunnels, diagonals) is added. A random spanning tree
/// is kept intact so the result stays connected.
pub fn build_irregular_city(
    arterials: usize,
    collectors: usize,
    seed: u64,
) -> Result<TrafficNetwork> {
    build_irregular_city_with(arterials, collectors, seed, &GeneratorOptions::default())
}

pub fn build_irregular_city_with(
    arterials: usize,
    collectors: usize,
    seed: u64,
    opts: &GeneratorOptions,
) -> Result<TrafficNetwork> {
    opts.validate()?;
    if arterials < 1 || collectors < 1 {
        return Err(Error::config("irregular city needs at least one arterial and one collector"));
    }
    let n = arterials * collectors;
    if n < 2 {
        return Err(Error::config(
            "irregular city with a single intersection cannot satisfy the no-isolated-node rule",
        ));
    }

    let mut rng = keyed_rng(seed, &[TAG_REWIRE]);
    let mut edges = grid_edges(arterials, collectors);
    edges.shuffle(&mut rng);

    let mut forest = DisjointSet::new(n);
    let (tree, spare): (Vec<_>, Vec<_>) =
        edges.into_iter().partition(|&(i, j)| forest.union(i, j));
    let total = tree.len() + spare.len();
    let rewired = ((total as f64) * opts.rewire_fraction).round() as usize;
    let removed = rewired.min(spare.len());

    let mut kept: BTreeSet<(usize, usize)> = tree.into_iter().collect();
    kept.extend(spare.into_iter().skip(removed));

    let collector_class = line_classes(collectors, seed, 2);
    let mut classes: Vec<RoadClass> = (0..n).map(|id| collector_class[id % collectors]).collect();

    let mut added = 0;
    let mut attempts = 0;
    while added < removed && attempts < 200 * removed.max(1) {
        attempts += 1;
        let u = rng.gen_range(0..n);
        let (ua, uc) = ((u / collectors) as i64, (u % collectors) as i64);
        let da = rng.gen_range(-3i64..=3);
        let dc = rng.gen_range(-3i64..=3);
        if da.abs() + dc.abs() < 2 {
            continue;
        }
        let (va, vc) = (ua + da, uc + dc);
        if va < 0 || vc < 0 || va >= arterials as i64 || vc >= collectors as i64 {
            continue;
        }
        let v = (va as usize) * collectors + vc as usize;
        if kept.insert((u.min(v), u.max(v))) {
            classes[u] = RoadClass::Arterial;
            classes[v] = RoadClass::Arterial;
            added += 1;
        }
    }

    assemble(
        &format!("irregular {arterials}x{collectors}"),
        &classes,
        kept.into_iter().collect(),
        seed,
        opts,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Archetype {
    Grid,
    RadialConcentric,
    IrregularMesh,
}

/// Parameters describing one city scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CityConfig {
    #[serde(default)]
    pub label: Option<String>,
    pub archetype: Archetype,
    /// Avenues (grid), radials (ring-radial) or arterial lines (mesh).
    pub arterial_count: usize,
    /// Streets (grid), rings (ring-radial) or collector lines (mesh).
    pub collector_count: usize,
    pub seed: u64,
    pub peak_windows: Vec<HourWindow>,
    #[serde(default)]
    pub peak_uplift: f64,
    /// Rows and columns used when exporting per-intersection heatmaps.
    #[serde(default)]
    pub heatmap_layout: Option<(usize, usize)>,
}

impl CityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.peak_windows.is_empty() {
            return Err(Error::config("city needs at least one peak window"));
        }
        for w in &self.peak_windows {
            w.validate()?;
        }
        if !(self.peak_uplift >= 0.0 && self.peak_uplift.is_finite()) {
            return Err(Error::config("peak uplift must be a non-negative number"));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<TrafficNetwork> {
        self.validate()?;
        let (a, c, s) = (self.arterial_count, self.collector_count, self.seed);
        let mut net = match self.archetype {
            Archetype::Grid => build_grid_city(a, c, s)?,
            Archetype::RadialConcentric => build_radial_city(a, c, s)?,
            Archetype::IrregularMesh => build_irregular_city(a, c, s)?,
        };
        if let Some(label) = &self.label {
            net.city_label = label.clone();
        }
        Ok(net)
    }

    /// Default demand profile with this city's peak windows and uplift.
    pub fn demand_profile(&self) -> DemandProfile {
        DemandProfile {
            peak_windows: self.peak_windows.clone(),
            city_uplift: self.peak_uplift,
            ..DemandProfile::default()
        }
    }

    /// Heatmap layout: the configured one, or the most square factorization
    /// of `n` with at least as many rows as columns.
    pub fn layout_for(&self, n: usize) -> (usize, usize) {
        self.heatmap_layout.unwrap_or_else(|| square_layout(n))
    }
}

pub fn square_layout(n: usize) -> (usize, usize) {
    let mut cols = (n as f64).sqrt() as usize;
    while cols > 1 && !n.is_multiple_of(cols) {
        cols -= 1;
    }
    let cols = cols.max(1);
    (n / cols, cols)
}

/// The four shipped city scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CityPreset {
    Manhattan,
    Istanbul,
    Paris,
    SaoPaulo,
}

impl CityPreset {
    pub const ALL: [CityPreset; 4] = [
        CityPreset::Manhattan,
        CityPreset::Istanbul,
        CityPreset::Paris,
        CityPreset::SaoPaulo,
    ];

    pub fn config(self, seed: u64) -> CityConfig {
        let w = |start, end| HourWindow { start, end };
        let (label, archetype, a, c, peaks, uplift, layout) = match self {
            CityPreset::Manhattan => (
                "Manhattan",
                Archetype::Grid,
                22,
                120,
                vec![w(7, 9), w(17, 19)],
                0.0,
                Some((88, 30)),
            ),
            CityPreset::Istanbul => (
                "Istanbul",
                Archetype::IrregularMesh,
                30,
                50,
                vec![w(7, 10), w(16, 20)],
                0.25,
                None,
            ),
            CityPreset::Paris => (
                "Paris",
                Archetype::RadialConcentric,
                20,
                60,
                vec![w(7, 9), w(17, 19)],
                0.0,
                None,
            ),
            CityPreset::SaoPaulo => (
                "Sao Paulo",
                Archetype::IrregularMesh,
                30,
                50,
                vec![w(6, 10), w(16, 21)],
                0.0,
                None,
            ),
        };
        CityConfig {
            label: Some(label.to_string()),
            archetype,
            arterial_count: a,
            collector_count: c,
            seed,
            peak_windows: peaks,
            peak_uplift: uplift,
            heatmap_layout: layout,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_well_formed(net: &TrafficNetwork) {
        for i in 0..net.len() {
            let nbrs = net.neighbors(i).unwrap();
            assert!(!nbrs.is_empty(), "node {i} isolated");
            assert!(!nbrs.contains(&i));
            for &j in nbrs {
                assert!(net.neighbors(j).unwrap().contains(&i));
            }
        }
        for spec in net.intersections() {
            assert!(DEFAULT_CYCLE_LENGTHS.contains(&spec.cycle_length));
            assert!((800.0..=2400.0).contains(&spec.base_saturation));
            assert!(spec.type_weight > 0.0);
        }
        assert!(net.is_connected());
    }

    #[test]
    fn smallest_grid() {
        let net = build_grid_city(2, 2, 1).unwrap();
        assert_eq!(net.len(), 4);
        assert_eq!(net.edges().len(), 4);
        for i in 0..4 {
            assert_eq!(net.degree(i).unwrap(), 2);
            assert_eq!(net.neighbors(i).unwrap().len(), 2);
        }
        assert_well_formed(&net);
    }

    #[test]
    fn grid_three_by_three_degrees() {
        let net = build_grid_city(3, 3, 9).unwrap();
        assert_eq!(net.neighbors(4).unwrap(), &[1, 3, 5, 7]);
        for corner in [0, 2, 6, 8] {
            assert_eq!(net.degree(corner).unwrap(), 2);
        }
        assert_eq!(net.intersection(4).unwrap().type_weight, 1.0);
        assert_eq!(net.intersection(1).unwrap().type_weight, 0.75);
    }

    #[test]
    fn manhattan_sized_grid() {
        let net = build_grid_city(22, 120, 3).unwrap();
        assert_eq!(net.len(), 2640);
        assert_well_formed(&net);
    }

    #[test]
    fn grid_rejects_thin_dimensions() {
        assert!(matches!(build_grid_city(1, 5, 0), Err(Error::Config(_))));
        assert!(matches!(build_grid_city(5, 1, 0), Err(Error::Config(_))));
    }

    #[test]
    fn minimal_radial() {
        let net = build_radial_city(3, 1, 5).unwrap();
        assert_eq!(net.len(), 4);
        assert_eq!(net.degree(0).unwrap(), 3);
        assert_well_formed(&net);
    }

    #[test]
    fn paris_sized_radial() {
        let net = build_radial_city(20, 60, 5).unwrap();
        assert_eq!(net.len(), 1201);
        assert_well_formed(&net);
        assert!(matches!(build_radial_city(2, 4, 0), Err(Error::Config(_))));
        assert!(matches!(build_radial_city(4, 0, 0), Err(Error::Config(_))));
    }

    #[test]
    fn irregular_mesh_is_connected_and_rewired() {
        let net = build_irregular_city(30, 50, 17).unwrap();
        assert_eq!(net.len(), 1500);
        assert_well_formed(&net);
        let grid = grid_edges(30, 50);
        let shortcuts = net
            .edges()
            .iter()
            .filter(|e| !grid.contains(e))
            .count();
        let expected = (grid.len() as f64 * DEFAULT_REWIRE_FRACTION).round() as usize;
        assert_eq!(shortcuts, expected);
        assert_eq!(net.edges().len(), grid.len());
    }

    #[test]
    fn irregular_single_node_rejected() {
        assert!(matches!(build_irregular_city(1, 1, 0), Err(Error::Config(_))));
    }

    #[test]
    fn generators_are_deterministic() {
        let a = build_irregular_city(12, 9, 44).unwrap();
        let b = build_irregular_city(12, 9, 44).unwrap();
        assert_eq!(a, b);
        let c = build_irregular_city(12, 9, 45).unwrap();
        assert_ne!(a.edges(), c.edges());
    }

    #[test]
    fn neighbors_out_of_range() {
        let net = build_grid_city(2, 2, 0).unwrap();
        assert!(matches!(
            net.neighbors(4),
            Err(Error::IndexOutOfRange { index: 4, len: 4 })
        ));
    }

    #[test]
    fn rejects_bad_documents() {
        let node = |id| IntersectionSpec {
            id,
            cycle_length: 60,
            base_saturation: 1000.0,
            road_class: RoadClass::Local,
            type_weight: 1.0,
        };
        assert!(TrafficNetwork::new("x", vec![node(0), node(1)], vec![(0, 0)]).is_err());
        assert!(TrafficNetwork::new("x", vec![node(0), node(1), node(2)], vec![(0, 1)]).is_err());
        assert!(TrafficNetwork::new("x", vec![node(0), node(1)], vec![(0, 1), (1, 0)]).is_err());
        assert!(TrafficNetwork::new("x", vec![], vec![]).is_err());
        let ok = TrafficNetwork::new("x", vec![node(0), node(1)], vec![(1, 0)]).unwrap();
        assert_eq!(ok.edges(), &[(0, 1)]);
    }

    #[test]
    fn json_document_shape() {
        let net = build_grid_city(2, 3, 8).unwrap();
        let value: serde_json::Value = serde_json::from_str(&net.to_json().unwrap()).unwrap();
        assert_eq!(value["city_label"], "grid 2x3");
        let first = &value["intersections"][0];
        for key in ["id", "cycle", "base_saturation", "class", "type_weight"] {
            assert!(first.get(key).is_some(), "missing {key}");
        }
        assert_eq!(value["edges"][0], serde_json::json!([0, 1]));
        assert_eq!(TrafficNetwork::from_json(&net.to_json().unwrap()).unwrap(), net);
    }

    #[test]
    fn presets_build() {
        let manhattan = CityPreset::Manhattan.config(1);
        assert_eq!(manhattan.layout_for(2640), (88, 30));
        let net = CityPreset::Paris.config(1).build().unwrap();
        assert_eq!(net.city_label(), "Paris");
        assert_eq!(net.len(), 1201);
    }

    #[test]
    fn square_layouts() {
        assert_eq!(square_layout(100), (10, 10));
        assert_eq!(square_layout(12), (4, 3));
        assert_eq!(square_layout(7), (7, 1));
    }
}
