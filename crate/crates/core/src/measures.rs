//! Empirical measures along orbits, a truncated weak* metric, cluster sets
//! `V(x)` and extraction of observable-measure candidates.
//!
//! A measure carries two views of the same orbit average: a histogram on a
//! uniform grid (torus) or on cylinders (shift), and the exact averages of a
//! fixed family of 64 test functions evaluated at the orbit points. The
//! metric is computed from the test-function averages; the histogram is for
//! export and total-variation comparisons.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::base::{BaseSystem, Point, SystemKind};
use crate::error::{LabError, Result};
use crate::numeric::wilson_interval;

/// Number of test functions in the weak* metric.
pub const TEST_FUNCTIONS: usize = 64;
/// Default grid resolution per torus dimension.
pub const TORUS_RESOLUTION: usize = 32;
/// Default cylinder depth on shifts.
pub const CYLINDER_DEPTH: usize = 8;
/// Largest histogram accepted (cells).
const MAX_CELLS: usize = 1 << 22;
/// Default mass floor for physical classification.
pub const PHYSICAL_FLOOR: f64 = 0.01;
/// Largest fraction of an exact basin expected to survive halving the
/// tolerance when the basin is a null set.
pub const NULL_RETENTION: f64 = 0.6;
pub const PHYSICAL_SIGNIFICANCE: f64 = 1e-3;
/// Default number of checkpoints for cluster sets.
pub const CLUSTER_CHECKPOINTS: usize = 8;

/// Where a measure lives and how it is discretized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum MeasureSpace {
    Torus { dim: usize, resolution: usize },
    Shift { alphabet: u8, depth: usize },
}

impl MeasureSpace {
    pub fn for_system(system: &BaseSystem, resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(LabError::InvalidParameter("resolution must be ≥ 1".into()));
        }
        let space = match system.kind() {
            SystemKind::Torus { dim, .. } => MeasureSpace::Torus {
                dim: *dim,
                resolution,
            },
            SystemKind::FullShift { alphabet, .. } => MeasureSpace::Shift {
                alphabet: *alphabet,
                depth: resolution,
            },
        };
        if space.cells() > MAX_CELLS {
            return Err(LabError::InvalidParameter(format!(
                "histogram with {} cells is too large",
                space.cells()
            )));
        }
        Ok(space)
    }

    /// Resolution used when none is configured: 32 per axis up to
    /// dimension 2, coarser above so the grid stays small; depth 8 on shifts.
    pub fn default_resolution(system: &BaseSystem) -> usize {
        match system.kind() {
            SystemKind::Torus { dim, .. } => match dim {
                0..=2 => TORUS_RESOLUTION,
                3 => 16,
                _ => 8,
            },
            SystemKind::FullShift { .. } => CYLINDER_DEPTH,
        }
    }

    pub fn cells(&self) -> usize {
        match self {
            MeasureSpace::Torus { dim, resolution } => {
                resolution.checked_pow(*dim as u32).unwrap_or(usize::MAX)
            }
            MeasureSpace::Shift { alphabet, depth } => {
                (*alphabet as usize).checked_pow(*depth as u32).unwrap_or(usize::MAX)
            }
        }
    }
}

/// The enumerated test functions `f_1, f_2, …` (each bounded by 1).
#[derive(Debug, Clone)]
enum TestFamily {
    /// `cos 2π⟨k,x⟩`, `sin 2π⟨k,x⟩` for each listed frequency, in order.
    Characters { frequencies: Vec<Vec<i32>>, max_power: i32 },
    /// Indicators of cylinders `[w]` at coordinates `0..|w|`: one entry per
    /// depth `(depth, first function index, word count at this depth)`.
    Cylinders { alphabet: u8, layers: Vec<(usize, usize, usize)> },
}

/// Canonical frequencies (first nonzero entry positive), ordered by `|k|₁`
/// and then lexicographically from the top, so `e_1` comes first.
fn torus_frequencies(dim: usize, count: usize) -> Vec<Vec<i32>> {
    let mut out: Vec<Vec<i32>> = Vec::new();
    let mut radius = 1i32;
    while out.len() < count {
        let side = (2 * radius + 1) as usize;
        let mut shell: Vec<Vec<i32>> = (0..side.pow(dim as u32))
            .map(|mut idx| {
                (0..dim)
                    .map(|_| {
                        let v = (idx % side) as i32 - radius;
                        idx /= side;
                        v
                    })
                    .collect::<Vec<i32>>()
            })
            .filter(|k| {
                let l1: i32 = k.iter().map(|v| v.abs()).sum();
                l1 == radius && k.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0)
            })
            .collect();
        shell.sort_by(|a, b| b.cmp(a));
        out.extend(shell);
        radius += 1;
    }
    out.truncate(count);
    out
}

impl TestFamily {
    fn for_space(space: &MeasureSpace) -> Self {
        match space {
            MeasureSpace::Torus { dim, .. } => {
                let frequencies = torus_frequencies(*dim, TEST_FUNCTIONS / 2);
                let max_power = frequencies
                    .iter()
                    .flat_map(|k| k.iter().map(|v| v.abs()))
                    .max()
                    .unwrap_or(1);
                TestFamily::Characters {
                    frequencies,
                    max_power,
                }
            }
            MeasureSpace::Shift { alphabet, .. } => {
                let mut layers = Vec::new();
                let mut used = 0;
                let mut depth = 1;
                while used < TEST_FUNCTIONS {
                    let words = (*alphabet as usize).pow(depth as u32);
                    let take = words.min(TEST_FUNCTIONS - used);
                    layers.push((depth, used, take));
                    used += take;
                    depth += 1;
                }
                TestFamily::Cylinders {
                    alphabet: *alphabet,
                    layers,
                }
            }
        }
    }

    fn max_depth(&self) -> usize {
        match self {
            TestFamily::Characters { .. } => 0,
            TestFamily::Cylinders { layers, .. } => layers.last().map_or(0, |l| l.0),
        }
    }
}

/// `(1/n) Σ_{j<n} δ_{T^j x}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalMeasure {
    pub system: String,
    pub space: MeasureSpace,
    pub n: usize,
    /// Nonzero cells `(flat index, weight)`, increasing by index.
    pub weights: Vec<(usize, f64)>,
    /// Averages of the test functions, in enumeration order.
    pub moments: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().map(|w| w.1).sum()
    }

    /// Weights of every cell, in flat-index order.
    pub fn dense_weights(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.space.cells()];
        for &(i, w) in &self.weights {
            out[i] = w;
        }
        out
    }

    pub fn weight_of_cell(&self, cell: usize) -> f64 {
        self.weights
            .binary_search_by_key(&cell, |w| w.0)
            .map_or(0.0, |i| self.weights[i].1)
    }
}

/// Running sums for one orbit; snapshots give empirical measures.
struct Accumulator<'a> {
    system: &'a BaseSystem,
    space: MeasureSpace,
    family: TestFamily,
    counts: Vec<u32>,
    sums: Vec<f64>,
    steps: usize,
    // scratch buffers for character evaluation
    powers: Vec<(f64, f64)>,
}

impl<'a> Accumulator<'a> {
    fn new(system: &'a BaseSystem, resolution: usize) -> Result<Self> {
        let space = MeasureSpace::for_system(system, resolution)?;
        let family = TestFamily::for_space(&space);
        Ok(Self {
            system,
            counts: vec![0; space.cells()],
            space,
            family,
            sums: vec![0.0; TEST_FUNCTIONS],
            steps: 0,
            powers: Vec::new(),
        })
    }

    fn add_torus(&mut self, coords: &[f64]) {
        let MeasureSpace::Torus { resolution, .. } = self.space else {
            unreachable!("torus accumulator");
        };
        let mut cell = 0;
        for &c in coords {
            let i = ((c * resolution as f64) as usize).min(resolution - 1);
            cell = cell * resolution + i;
        }
        self.counts[cell] += 1;
        let TestFamily::Characters {
            frequencies,
            max_power,
        } = &self.family
        else {
            unreachable!("torus family");
        };
        // powers[c * width + (p + max_power)] = e^{2πi p x_c}
        let m = *max_power as usize;
        let width = 2 * m + 1;
        self.powers.clear();
        self.powers.resize(coords.len() * width, (1.0, 0.0));
        for (ci, &x) in coords.iter().enumerate() {
            let (s, c) = (TAU * x).sin_cos();
            let row = &mut self.powers[ci * width..(ci + 1) * width];
            for p in 1..=m {
                let (re, im) = row[m + p - 1];
                row[m + p] = (re * c - im * s, re * s + im * c);
                row[m - p] = (row[m + p].0, -row[m + p].1);
            }
        }
        for (fi, k) in frequencies.iter().enumerate() {
            let (mut re, mut im) = (1.0, 0.0);
            for (ci, &kc) in k.iter().enumerate() {
                if kc != 0 {
                    let (pr, pi) = self.powers[ci * width + (kc + *max_power) as usize];
                    (re, im) = (re * pr - im * pi, re * pi + im * pr);
                }
            }
            self.sums[2 * fi] += re;
            self.sums[2 * fi + 1] += im;
        }
    }

    fn add_symbols(&mut self, word: &[u8]) {
        let TestFamily::Cylinders { alphabet, layers } = &self.family else {
            unreachable!("shift family");
        };
        let a = *alphabet as usize;
        let MeasureSpace::Shift { depth, .. } = self.space else {
            unreachable!("shift accumulator");
        };
        let cell = word[..depth].iter().fold(0, |acc, &s| acc * a + s as usize);
        self.counts[cell] += 1;
        let mut index = 0;
        let mut current = 0;
        for &(d, first, take) in layers {
            while current < d {
                index = index * a + word[current] as usize;
                current += 1;
            }
            if index < take {
                self.sums[first + index] += 1.0;
            }
        }
    }

    fn snapshot(&self) -> EmpiricalMeasure {
        let n = self.steps as f64;
        EmpiricalMeasure {
            system: self.system.name().to_string(),
            space: self.space.clone(),
            n: self.steps,
            weights: self
                .counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(i, &c)| (i, c as f64 / n))
                .collect(),
            moments: self.sums.iter().map(|s| s / n).collect(),
        }
    }
}

/// Empirical measures of the orbit of `x` at each checkpoint length
/// (increasing, ≥ 1), in one pass.
pub fn empirical_measures_at(
    system: &BaseSystem,
    x: &Point,
    checkpoints: &[usize],
    resolution: usize,
) -> Result<Vec<EmpiricalMeasure>> {
    let mut acc = Accumulator::new(system, resolution)?;
    let Some(&last) = checkpoints.last() else {
        return Ok(Vec::new());
    };
    if checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::InvalidParameter("checkpoints must be increasing and ≥ 1".into()));
    }
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    match x {
        Point::Torus(_) => {
            let mut cur = x.clone();
            for j in 1..=last {
                acc.add_torus(cur.coords().expect("torus point"));
                acc.steps = j;
                if next < checkpoints.len() && checkpoints[next] == j {
                    out.push(acc.snapshot());
                    next += 1;
                }
                if j < last {
                    cur = system.forward(&cur)?;
                }
            }
        }
        Point::Symbolic(w) => {
            let depth = acc.family.max_depth().max(match acc.space {
                MeasureSpace::Shift { depth, .. } => depth,
                MeasureSpace::Torus { .. } => 0,
            });
            let needed = (last + depth - 1) as i64;
            if w.forward_room() < needed {
                return Err(LabError::WindowTooShort {
                    needed,
                    available: w.forward_room(),
                });
            }
            let mut word = vec![0u8; depth];
            for j in 1..=last {
                for (i, s) in word.iter_mut().enumerate() {
                    *s = w.symbol((j - 1 + i) as i64).expect("room checked");
                }
                acc.add_symbols(&word);
                acc.steps = j;
                if next < checkpoints.len() && checkpoints[next] == j {
                    out.push(acc.snapshot());
                    next += 1;
                }
            }
        }
    }
    Ok(out)
}

/// `γ_{n,x}` on the grid of the given resolution (cylinder depth on shifts).
pub fn empirical_measure(system: &BaseSystem, x: &Point, n: usize, resolution: usize) -> Result<EmpiricalMeasure> {
    if n == 0 {
        return Err(LabError::InvalidParameter("empirical measures need n ≥ 1".into()));
    }
    Ok(empirical_measures_at(system, x, &[n], resolution)?.remove(0))
}

fn check_compatible(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<()> {
    if a.space != b.space {
        return Err(LabError::MeasureMismatch(format!(
            "{:?} vs {:?}",
            a.space, b.space
        )));
    }
    if a.system != b.system {
        return Err(LabError::MeasureMismatch(format!(
            "systems {} vs {}",
            a.system, b.system
        )));
    }
    Ok(())
}

/// `Σ_k 2^{-k} |∫f_k da − ∫f_k db|` over the 64 enumerated test functions.
pub fn weak_star_distance(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<f64> {
    check_compatible(a, b)?;
    Ok(moment_distance(&a.moments, &b.moments))
}

fn moment_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut weight = 1.0;
    let mut total = 0.0;
    for (x, y) in a.iter().zip(b) {
        weight *= 0.5;
        total += weight * (x - y).abs();
    }
    total
}

/// `Σ_cells |a − b|` on the histograms.
pub fn total_variation(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<f64> {
    check_compatible(a, b)?;
    let (mut i, mut j) = (0, 0);
    let mut total = 0.0;
    while i < a.weights.len() || j < b.weights.len() {
        let ka = a.weights.get(i).map_or(usize::MAX, |w| w.0);
        let kb = b.weights.get(j).map_or(usize::MAX, |w| w.0);
        if ka == kb {
            total += (a.weights[i].1 - b.weights[j].1).abs();
            i += 1;
            j += 1;
        } else if ka < kb {
            total += a.weights[i].1;
            i += 1;
        } else {
            total += b.weights[j].1;
            j += 1;
        }
    }
    Ok(total)
}

/// Checkpoints `n_j = ⌈n · 2^{j−J}⌉`, `j = 1..J`, deduplicated.
pub fn cluster_checkpoints(n: usize, count: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (1..=count)
        .map(|j| ((n as f64) * 2f64.powi(j as i32 - count as i32)).ceil().max(1.0) as usize)
        .collect();
    out.dedup();
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    /// The member with the longest orbit; also the clustering center.
    pub representative: EmpiricalMeasure,
    pub members: usize,
    /// Largest distance from a member to the representative.
    pub stability: f64,
    /// Checkpoint positions (0-based) of the members.
    pub checkpoint_indices: Vec<usize>,
    /// Some member lies in the final half of the checkpoints.
    pub in_final_half: bool,
}

/// Cluster structure of `{γ_{n_j, x}}`; the clusters reaching the final half
/// of the checkpoints stand in for `V(x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterSet {
    pub clusters: Vec<Cluster>,
    pub checkpoints: Vec<usize>,
    pub radius: f64,
}

impl ClusterSet {
    /// Representatives of the clusters making up `V(x)`.
    pub fn v_set(&self) -> Vec<&EmpiricalMeasure> {
        self.clusters
            .iter()
            .filter(|c| c.in_final_half)
            .map(|c| &c.representative)
            .collect()
    }
}

/// Leader clustering of measures taken in the given order: each measure
/// joins the first cluster whose leader is within `radius`, otherwise it
/// starts a new cluster. Returns the cluster index of every measure.
fn leader_clusters(measures: &[&EmpiricalMeasure], radius: f64) -> Vec<usize> {
    let mut leaders: Vec<usize> = Vec::new();
    measures
        .iter()
        .enumerate()
        .map(|(i, m)| {
            match leaders
                .iter()
                .position(|&l| moment_distance(&measures[l].moments, &m.moments) < radius)
            {
                Some(c) => c,
                None => {
                    leaders.push(i);
                    leaders.len() - 1
                }
            }
        })
        .collect()
}

/// Empirical measures of `x` at `checkpoints` logarithmic lengths up to `n`,
/// clustered at weak* `radius` (longest orbits first, so every cluster is
/// centred on its best-converged member).
pub fn cluster_points_with_resolution(
    system: &BaseSystem,
    x: &Point,
    n: usize,
    checkpoints: usize,
    radius: f64,
    resolution: usize,
) -> Result<ClusterSet> {
    if checkpoints < 4 {
        return Err(LabError::InvalidParameter("need at least 4 checkpoints".into()));
    }
    if !(radius > 0.0) {
        return Err(LabError::InvalidParameter("cluster radius must be positive".into()));
    }
    let schedule = cluster_checkpoints(n, checkpoints);
    let measures = empirical_measures_at(system, x, &schedule, resolution)?;
    let order: Vec<usize> = (0..measures.len()).rev().collect();
    let ordered: Vec<&EmpiricalMeasure> = order.iter().map(|&i| &measures[i]).collect();
    let labels = leader_clusters(&ordered, radius);
    let count = labels.iter().max().map_or(0, |m| m + 1);
    let half = schedule.len() / 2;
    let clusters = (0..count)
        .map(|c| {
            let idx: Vec<usize> = labels
                .iter()
                .zip(&order)
                .filter(|(l, _)| **l == c)
                .map(|(_, &i)| i)
                .collect();
            let leader = &measures[idx[0]];
            let stability = idx
                .iter()
                .map(|&i| moment_distance(&measures[i].moments, &leader.moments))
                .fold(0.0, f64::max);
            let mut checkpoint_indices = idx.clone();
            checkpoint_indices.sort_unstable();
            Cluster {
                representative: leader.clone(),
                members: idx.len(),
                stability,
                in_final_half: idx.iter().any(|&i| i >= half),
                checkpoint_indices,
            }
        })
        .collect();
    Ok(ClusterSet {
        clusters,
        checkpoints: schedule,
        radius,
    })
}

/// [`cluster_points_with_resolution`] at the default resolution.
pub fn cluster_points(system: &BaseSystem, x: &Point, n: usize, checkpoints: usize, radius: f64) -> Result<ClusterSet> {
    cluster_points_with_resolution(system, x, n, checkpoints, radius, MeasureSpace::default_resolution(system))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableCandidate {
    pub representative: EmpiricalMeasure,
    pub epsilon: f64,
    /// Fraction of the sample with `dist(V(x), μ) < ε`.
    pub basin_mass: f64,
    /// Wilson 95% interval for the basin mass.
    pub basin_interval: (f64, f64),
    /// Fraction with `V(x)` a single measure within `ε/2` of `μ`.
    pub exact_basin_mass: f64,
    /// Same with `ε` in place of `ε/2`.
    pub exact_basin_mass_wide: f64,
    /// Number of sample points behind `exact_basin_mass`.
    pub exact_support: usize,
    /// Number of sample points behind `exact_basin_mass_wide`.
    pub exact_support_wide: usize,
    pub physical: bool,
}

/// Candidates together with the per-point cluster sets they came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableAnalysis {
    pub epsilon: f64,
    pub n: usize,
    pub resolution: usize,
    pub candidates: Vec<ObservableCandidate>,
    /// `V(x)` for every sample point, in sample order.
    pub v_sets: Vec<Vec<EmpiricalMeasure>>,
    /// Fraction of the sample whose `V(x)` comes within `ε` of some candidate.
    pub coverage: f64,
}

fn dist_to_set(set: &[EmpiricalMeasure], mu: &EmpiricalMeasure) -> f64 {
    set.iter()
        .map(|m| moment_distance(&m.moments, &mu.moments))
        .fold(f64::INFINITY, f64::min)
}

/// Physical rule. A measure with an open basin keeps its exact-basin mass
/// when the tolerance halves; for a null basin of codimension `c` (a fiber,
/// a fixed point) the mass scales like `2^-c ≤ 1/2`. Of the `W` points in
/// the exact basin at `ε`, `N` stay within `ε/2`; the candidate is physical
/// when the basin mass at `ε/2` reaches `floor` and `N` is too large for a
/// retention probability of [`NULL_RETENTION`] (binomial tail below
/// [`PHYSICAL_SIGNIFICANCE`]).
fn is_physical(c: &ObservableCandidate, floor: f64) -> bool {
    if c.exact_basin_mass < floor || c.exact_support == 0 {
        return false;
    }
    let wide = c.exact_support_wide as u64;
    let null = Binomial::new(NULL_RETENTION, wide).expect("valid binomial");
    // P(N ≥ observed) = sf(observed − 1)
    null.sf(c.exact_support as u64 - 1) < PHYSICAL_SIGNIFICANCE
}

fn score_candidate(v_sets: &[Vec<EmpiricalMeasure>], mu: EmpiricalMeasure, epsilon: f64) -> ObservableCandidate {
    let total = v_sets.len();
    let hits = v_sets.iter().filter(|v| dist_to_set(v, &mu) < epsilon).count();
    let exact = |eta: f64| {
        v_sets
            .iter()
            .filter(|v| v.len() == 1 && moment_distance(&v[0].moments, &mu.moments) < eta)
            .count()
    };
    let narrow = exact(epsilon / 2.0);
    let wide = exact(epsilon);
    let mut c = ObservableCandidate {
        representative: mu,
        epsilon,
        basin_mass: hits as f64 / total as f64,
        basin_interval: wilson_interval(hits, total),
        exact_basin_mass: narrow as f64 / total as f64,
        exact_basin_mass_wide: wide as f64 / total as f64,
        exact_support: narrow,
        exact_support_wide: wide,
        physical: false,
    };
    c.physical = is_physical(&c, PHYSICAL_FLOOR);
    c
}

/// Pool `V(x)` over a Lebesgue sample, merge at `ε`, and estimate basin
/// masses. The candidate list is an `ε`-net of the observable measures seen,
/// not an enumeration of them.
pub fn observable_candidates_with_resolution(
    system: &BaseSystem,
    sample: &[Point],
    n: usize,
    epsilon: f64,
    resolution: usize,
) -> Result<ObservableAnalysis> {
    if sample.is_empty() {
        return Err(LabError::EmptySample);
    }
    if !(epsilon > 0.0) {
        return Err(LabError::InvalidParameter("ε must be positive".into()));
    }
    let radius = epsilon / 2.0;
    let v_sets: Vec<Vec<EmpiricalMeasure>> = sample
        .par_iter()
        .map(|x| {
            let set = cluster_points_with_resolution(system, x, n, CLUSTER_CHECKPOINTS, radius, resolution)?;
            Ok(set.v_set().into_iter().cloned().collect())
        })
        .collect::<Result<_>>()?;
    let pooled: Vec<&EmpiricalMeasure> = v_sets.iter().flatten().collect();
    let labels = leader_clusters(&pooled, epsilon);
    let mut leaders: Vec<&EmpiricalMeasure> = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        if l == leaders.len() {
            leaders.push(pooled[i]);
        }
    }
    let mut candidates: Vec<ObservableCandidate> = leaders
        .par_iter()
        .map(|mu| score_candidate(&v_sets, (*mu).clone(), epsilon))
        .collect();
    // stable sort keeps first-seen order among equal masses
    candidates.sort_by(|a, b| b.basin_mass.total_cmp(&a.basin_mass));
    let covered = v_sets
        .iter()
        .filter(|v| candidates.iter().any(|c| dist_to_set(v, &c.representative) < epsilon))
        .count();
    Ok(ObservableAnalysis {
        epsilon,
        n,
        resolution,
        candidates,
        coverage: covered as f64 / sample.len() as f64,
        v_sets,
    })
}

/// [`observable_candidates_with_resolution`] at the default resolution.
pub fn observable_candidates(system: &BaseSystem, sample: &[Point], n: usize, epsilon: f64) -> Result<ObservableAnalysis> {
    observable_candidates_with_resolution(system, sample, n, epsilon, MeasureSpace::default_resolution(system))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhysicalPartition {
    /// Indices into the candidate list.
    pub physical: Vec<usize>,
    pub non_physical: Vec<usize>,
    /// Fraction of the sample in the exact `ε/2`-basin of some physical
    /// candidate.
    pub physical_coverage: f64,
    /// Fraction of the sample in the `ε`-basin of some candidate.
    pub observable_coverage: f64,
}

/// Split candidates into physical and non-physical with the given mass
/// floor, and report how much of the sample the basins cover.
pub fn classify_physical(analysis: &ObservableAnalysis, floor: f64) -> Result<PhysicalPartition> {
    if !(0.0..=1.0).contains(&floor) {
        return Err(LabError::InvalidParameter("mass floor must lie in [0, 1]".into()));
    }
    let (physical, non_physical): (Vec<usize>, Vec<usize>) =
        (0..analysis.candidates.len()).partition(|&i| is_physical(&analysis.candidates[i], floor));
    let eta = analysis.epsilon / 2.0;
    let total = analysis.v_sets.len().max(1) as f64;
    let in_physical = analysis
        .v_sets
        .iter()
        .filter(|v| {
            v.len() == 1
                && physical.iter().any(|&i| {
                    moment_distance(&v[0].moments, &analysis.candidates[i].representative.moments) < eta
                })
        })
        .count();
    Ok(PhysicalPartition {
        physical,
        non_physical,
        physical_coverage: in_physical as f64 / total,
        observable_coverage: analysis.coverage,
    })
}

/// Candidate counts at each `ε` (finite-`𝒪` heuristic: the count settles as
/// `ε` shrinks when there are finitely many observable measures).
pub fn candidate_counts(system: &BaseSystem, sample: &[Point], n: usize, epsilons: &[f64]) -> Result<Vec<(f64, usize)>> {
    epsilons
        .iter()
        .map(|&e| observable_candidates(system, sample, n, e).map(|a| (e, a.candidates.len())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequencies_start_with_axes() {
        let f = torus_frequencies(2, 6);
        assert_eq!(f, vec![vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![1, -1], vec![0, 2]]);
        assert_eq!(torus_frequencies(1, 3), vec![vec![1], vec![2], vec![3]]);
    }

    #[test]
    fn fixed_and_period_two_orbits() {
        let cat = BaseSystem::cat_map();
        let m = empirical_measure(&cat, &Point::torus(&[0.0, 0.0]), 50, 8).unwrap();
        assert_eq!(m.weights, vec![(0, 1.0)]);

        let half = BaseSystem::translation(&[0.5]);
        let m = empirical_measure(&half, &Point::torus(&[0.1]), 10, 4).unwrap();
        assert_eq!(m.weights, vec![(0, 0.5), (2, 0.5)]);
        assert!(empirical_measure(&half, &Point::torus(&[0.1]), 0, 4).is_err());
    }

    #[test]
    fn cat_orbit_equidistributes() {
        let cat = BaseSystem::cat_map();
        let n = 100_000;
        let m = empirical_measure(&cat, &Point::torus(&[0.1234, 0.5678]), n, 16).unwrap();
        let p = 1.0 / 256.0;
        let bound = 3.0 * (p * (1.0 - p) / n as f64).sqrt();
        let dense = m.dense_weights();
        assert!((m.total_mass() - 1.0).abs() < 1e-12);
        // A 3σ band holds per cell with probability 0.997, so over 256 cells
        // a few excursions are expected: require 99% of cells inside 3σ and
        // every cell inside the Bonferroni-level 4σ band.
        let inside = dense.iter().filter(|w| (*w - p).abs() <= bound).count();
        assert!(inside as f64 >= 0.99 * 256.0, "{inside} cells inside 3σ");
        let worst = dense.iter().map(|w| (w - p).abs()).fold(0.0, f64::max);
        assert!(worst <= 4.0 / 3.0 * bound, "worst deviation {worst}");
    }

    #[test]
    fn dirac_distance_by_hand() {
        // At (1/2, 1/2) every character is (-1)^{|k|₁} and every sine vanishes,
        // so only cosines with odd |k|₁ contribute, each |1 - (-1)| = 2.
        // Canonical frequencies in dimension 2 come in shells of size 2r.
        let mut expected = 0.0;
        let mut index = 0;
        for r in 1..=6 {
            for _ in 0..2 * r {
                if index < 32 && r % 2 == 1 {
                    expected += 2.0 * 0.5f64.powi(2 * index + 1);
                }
                index += 1;
            }
        }
        let id = BaseSystem::identity(2);
        let a = empirical_measure(&id, &Point::torus(&[0.0, 0.0]), 1, 4).unwrap();
        let b = empirical_measure(&id, &Point::torus(&[0.5, 0.5]), 1, 4).unwrap();
        let d = weak_star_distance(&a, &b).unwrap();
        assert!((d - expected).abs() < 1e-12);
        assert!(d >= 1.0);
        assert_eq!(weak_star_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(d, weak_star_distance(&b, &a).unwrap());
    }

    #[test]
    fn mismatched_measures_are_rejected() {
        let id = BaseSystem::identity(2);
        let x = Point::torus(&[0.1, 0.2]);
        let a = empirical_measure(&id, &x, 3, 4).unwrap();
        let b = empirical_measure(&id, &x, 3, 8).unwrap();
        assert!(matches!(weak_star_distance(&a, &b), Err(LabError::MeasureMismatch(_))));
        let c = empirical_measure(&BaseSystem::cat_map(), &x, 3, 4).unwrap();
        assert!(weak_star_distance(&a, &c).is_err());
    }

    #[test]
    fn pushforward_changes_little() {
        let cat = BaseSystem::cat_map();
        let x = Point::torus(&[0.3, 0.7]);
        let n = 500;
        let a = empirical_measure(&cat, &x, n, 16).unwrap();
        let b = empirical_measure(&cat, &cat.forward(&x).unwrap(), n, 16).unwrap();
        assert!(total_variation(&a, &b).unwrap() <= 2.0 / n as f64 + 1e-12);
    }

    #[test]
    fn shift_measures_use_cylinders() {
        let shift = BaseSystem::full_shift(2, 64).unwrap();
        let x = shift.periodic_symbolic_point(&[0, 1]).unwrap();
        let m = empirical_measure(&shift, &x, 10, 3).unwrap();
        // cells 010 = 2 and 101 = 5
        assert_eq!(m.weights, vec![(2, 0.5), (5, 0.5)]);
        // [0], [1], then [00], [01], [10], [11]
        assert_eq!(&m.moments[..6], &[0.5, 0.5, 0.0, 0.5, 0.5, 0.0]);
        let short = BaseSystem::full_shift(2, 8).unwrap();
        let y = short.sample_point(1, 0);
        assert!(matches!(
            empirical_measure(&short, &y, 10, 3),
            Err(LabError::WindowTooShort { .. })
        ));
    }

    #[test]
    fn fixed_point_has_one_cluster() {
        let cat = BaseSystem::cat_map();
        let set = cluster_points(&cat, &Point::torus(&[0.0, 0.0]), 1000, 6, 0.01).unwrap();
        assert_eq!(set.clusters.len(), 1);
        assert_eq!(set.v_set()[0].weights, vec![(0, 1.0)]);
        assert!(cluster_points(&cat, &Point::torus(&[0.0, 0.0]), 1000, 3, 0.01).is_err());
    }

    #[test]
    fn cat_orbit_has_one_cluster_near_lebesgue() {
        let cat = BaseSystem::cat_map();
        let set = cluster_points(&cat, &Point::torus(&[0.31, 0.77]), 50_000, 8, 0.025).unwrap();
        let v = set.v_set();
        assert_eq!(v.len(), 1);
        // Lebesgue integrates every nontrivial character to 0
        assert!(v[0].moments.iter().all(|m| m.abs() < 0.03));
    }

    /// Zeros on `[4^k, 2·4^k)`, ones on `[2·4^k, 4^{k+1})`: the zero frequency
    /// alternates between 2/3 (at `2·4^k`) and 1/3 (at `4^{k+1}`), so the
    /// empirical measures at powers of two have two cluster points.
    fn oscillating_word(len: usize) -> Vec<u8> {
        (1..=len)
            .map(|t| {
                let k = (t as f64).log(4.0).floor() as u32;
                let start = 4usize.pow(k);
                u8::from(t >= 2 * start)
            })
            .collect()
    }

    #[test]
    fn oscillating_orbit_has_two_cluster_points() {
        let n = 1 << 17;
        let shift = BaseSystem::full_shift(2, n + 64).unwrap();
        let x = shift.point_with_prefix(&oscillating_word(n + 64), 0, 0).unwrap();
        let set = cluster_points(&shift, &x, n, 8, 0.05).unwrap();
        assert_eq!(set.v_set().len(), 2);
        let mut zeros: Vec<f64> = set.v_set().iter().map(|m| m.moments[0]).collect();
        zeros.sort_by(f64::total_cmp);
        assert!((zeros[0] - 1.0 / 3.0).abs() < 0.01);
        assert!((zeros[1] - 2.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn cat_has_single_physical_candidate() {
        let cat = BaseSystem::cat_map();
        let sample = cat.sample_initial_points(60, 11).unwrap();
        let a = observable_candidates(&cat, &sample, 100_000, 0.05).unwrap();
        assert_eq!(a.candidates.len(), 1);
        assert!(a.candidates[0].basin_mass >= 0.99);
        assert!(a.candidates[0].physical);
        let p = classify_physical(&a, PHYSICAL_FLOOR).unwrap();
        assert_eq!(p.physical, vec![0]);
        assert!(p.physical_coverage >= 0.99);
    }

    #[test]
    fn identity_has_no_physical_candidates() {
        let circle = BaseSystem::identity(1);
        let sample = circle.sample_initial_points(10, 3).unwrap();
        let a = observable_candidates(&circle, &sample, 100, 0.05).unwrap();
        assert!(a.candidates.len() >= 8);
        assert!(a.candidates.iter().all(|c| !c.physical));
        assert_eq!(a.coverage, 1.0);
        assert!(classify_physical(&a, PHYSICAL_FLOOR).unwrap().physical.is_empty());
    }

    #[test]
    fn checkpoint_schedule() {
        assert_eq!(cluster_checkpoints(1024, 4), vec![128, 256, 512, 1024]);
        assert_eq!(cluster_checkpoints(3, 4), vec![1, 2, 3]);
    }
}
