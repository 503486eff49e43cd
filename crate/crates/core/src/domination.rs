//! Finite-horizon evidence for dominated splittings: singular-value ratio
//! decay, invariant cone fields, the almost-additivity constant `κ`, and
//! almost-additivity of potential tables.
//!
//! Every verdict here is about the sampled orbits only. Passing on samples
//! is evidence for domination on the compact set they approximate, not a
//! proof of it.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;

use crate::base::{point_rng, Point};
use crate::cocycle::{log_inverse_norm_series, log_norm_series, orthonormalize, product_checkpoints, Cocycle, MatrixD};
use crate::error::{LabError, Result};
use crate::numeric::{linear_fit, log_checkpoints};

/// Largest fitted rate accepted as domination.
pub const MAX_RATE: f64 = 0.99;
/// Smallest `R²` accepted for the log-linear fit.
pub const MIN_R_SQUARED: f64 = 0.9;
/// Relative slack allowed above the fitted envelope `C τ^n`.
pub const ENVELOPE_SLACK: f64 = 0.1;
/// Boundary directions sampled per cone.
pub const CONE_BOUNDARY_SAMPLES: usize = 64;
/// Default angular margin for cone invariance (radians).
pub const CONE_MARGIN: f64 = 0.01;
/// `κ` below this counts as no almost additivity.
pub const KAPPA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DominationReport {
    pub index: usize,
    pub c: f64,
    pub tau: f64,
    pub r_squared: f64,
    pub checkpoints: Vec<usize>,
    /// `log(σ_{i+1}/σ_i)` per sample point (rows) and checkpoint (columns).
    pub log_ratios: Vec<Vec<f64>>,
    /// Per-checkpoint maximum over the sample.
    pub worst_log_ratio: Vec<f64>,
    pub verdict: bool,
    pub n_max: usize,
}

/// Fit `log r(n) = log C + n log τ` to the worst ratio `σ_{i+1}/σ_i` over
/// the sample at logarithmic checkpoints up to `n_max`.
///
/// Ratios are kept in log space throughout, so there is no underflow to
/// guard against even when `r(n)` is far below `1e-300`.
pub fn domination_report(c: &Cocycle, sample: &[Point], i: usize, n_max: usize) -> Result<DominationReport> {
    if i == 0 || i >= c.dim() {
        return Err(LabError::InvalidParameter(format!(
            "domination index must satisfy 1 ≤ i < {}",
            c.dim()
        )));
    }
    if n_max < 32 {
        return Err(LabError::InvalidParameter("n_max must be ≥ 32".into()));
    }
    if sample.is_empty() {
        return Err(LabError::EmptySample);
    }
    let checkpoints = log_checkpoints(n_max);
    let log_ratios: Vec<Vec<f64>> = sample
        .par_iter()
        .map(|x| {
            let snaps = product_checkpoints(c, x, &checkpoints)?;
            Ok(snaps
                .iter()
                .map(|lp| {
                    let sv = lp.log_singular_values();
                    sv[i] - sv[i - 1]
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let worst: Vec<f64> = (0..checkpoints.len())
        .map(|k| log_ratios.iter().map(|row| row[k]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let xs: Vec<f64> = checkpoints.iter().map(|&n| n as f64).collect();
    let (intercept, slope, r_squared) = linear_fit(&xs, &worst);
    let tau = slope.exp();
    // Per-n maxima of a random product bend away from the fitted line by
    // more than the slack even when the splitting is dominated, so C is the
    // least constant making Cτ^n an envelope for the fitted τ; the slack
    // check then only guards against rounding.
    let log_c = xs
        .iter()
        .zip(&worst)
        .map(|(n, r)| r - n * slope)
        .fold(intercept, f64::max);
    let slack = (1.0 + ENVELOPE_SLACK).ln();
    let within = xs
        .iter()
        .zip(&worst)
        .all(|(n, r)| *r <= log_c + n * slope + slack);
    Ok(DominationReport {
        index: i,
        c: log_c.exp(),
        tau,
        r_squared,
        checkpoints,
        log_ratios,
        worst_log_ratio: worst,
        verdict: tau <= MAX_RATE && r_squared >= MIN_R_SQUARED && within,
        n_max,
    })
}

/// A cone `{v : ∠(v, core) ≤ aperture}` around an `ℓ`-dimensional core.
#[derive(Debug, Clone, PartialEq)]
pub struct Cone {
    /// `d × ℓ`, orthonormal columns.
    pub core: MatrixD,
    pub aperture: f64,
}

impl Cone {
    pub fn new(core: MatrixD, aperture: f64) -> Result<Self> {
        if !(aperture > 0.0 && aperture < std::f64::consts::FRAC_PI_2) {
            return Err(LabError::InvalidParameter(format!(
                "cone aperture {aperture} outside (0, π/2)"
            )));
        }
        if core.ncols() == 0 || core.ncols() >= core.nrows() {
            return Err(LabError::InvalidParameter("cone core must have 1 ≤ ℓ < d".into()));
        }
        Ok(Self {
            core: orthonormalize(&core),
            aperture,
        })
    }

    /// Angle between `v` and the core subspace.
    pub fn angle_to_core(&self, v: &MatrixD) -> f64 {
        let norm = v.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let proj = (self.core.transpose() * v).norm() / norm;
        proj.min(1.0).acos()
    }

    fn complement(&self) -> MatrixD {
        let d = self.core.nrows();
        let ell = self.core.ncols();
        let full = MatrixD::identity(d, d);
        // project the standard basis off the core and keep the d-ℓ strongest
        let residual = &full - &self.core * (self.core.transpose() * &full);
        let svd = residual.svd(true, false);
        let u = svd.u.expect("requested");
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        MatrixD::from_fn(d, d - ell, |r, c| u[(r, order[c])])
    }

    /// Directions on the boundary `∠ = aperture`.
    pub fn boundary(&self, count: usize, seed: u64) -> Vec<MatrixD> {
        let d = self.core.nrows();
        let ell = self.core.ncols();
        let perp = self.complement();
        let (s, c) = self.aperture.sin_cos();
        if ell == 1 && d <= 3 {
            let u = self.core.column(0).into_owned();
            return (0..count)
                .map(|k| {
                    let t = std::f64::consts::TAU * k as f64 / count as f64;
                    let w = if d == 2 {
                        perp.column(0) * t.cos().signum()
                    } else {
                        perp.column(0) * t.cos() + perp.column(1) * t.sin()
                    };
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    let v = (&u * c + w * s) * sign;
                    MatrixD::from_column_slice(d, 1, v.as_slice())
                })
                .collect();
        }
        let mut rng = point_rng(seed, 0xc0e);
        (0..count)
            .map(|_| {
                let a = orthonormalize(&MatrixD::from_fn(ell, 1, |_, _| rng.gen_range(-1.0..1.0)));
                let b = orthonormalize(&MatrixD::from_fn(d - ell, 1, |_, _| rng.gen_range(-1.0..1.0)));
                &self.core * a * c + &perp * b * s
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub enum ConeLayout {
    Uniform(Cone),
    /// Torus grid of `resolution` cells per axis, keyed by cell index.
    Grid {
        resolution: usize,
        cells: HashMap<Vec<usize>, Cone>,
    },
}

#[derive(Debug, Clone)]
pub struct ConeField {
    pub ell: usize,
    pub layout: ConeLayout,
}

impl ConeField {
    pub fn uniform(cone: Cone) -> Self {
        Self {
            ell: cone.core.ncols(),
            layout: ConeLayout::Uniform(cone),
        }
    }

    pub fn grid(resolution: usize, cells: HashMap<Vec<usize>, Cone>) -> Result<Self> {
        let ell = cells
            .values()
            .next()
            .map(|c| c.core.ncols())
            .ok_or(LabError::ConeCoverage)?;
        if resolution == 0 || cells.values().any(|c| c.core.ncols() != ell) {
            return Err(LabError::InvalidParameter("inconsistent cone grid".into()));
        }
        Ok(Self {
            ell,
            layout: ConeLayout::Grid { resolution, cells },
        })
    }

    pub fn cone_at(&self, x: &Point) -> Result<&Cone> {
        match &self.layout {
            ConeLayout::Uniform(c) => Ok(c),
            ConeLayout::Grid { resolution, cells } => {
                let coords = x.coords().ok_or(LabError::ConeCoverage)?;
                let key: Vec<usize> = coords
                    .iter()
                    .map(|v| ((v * *resolution as f64) as usize).min(resolution - 1))
                    .collect();
                cells.get(&key).ok_or(LabError::ConeCoverage)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeCheck {
    pub pass: bool,
    /// Minimum over sampled boundary directions of
    /// `aperture(T x) − ∠(A(x) v, core(T x))`.
    pub min_slack: f64,
}

/// Map sampled boundary directions of the cone at `x` through `A(x)` and
/// measure how far inside the cone at `T(x)` they land.
pub fn verify_cone_field(c: &Cocycle, cones: &ConeField, sample: &[Point], margin: f64) -> Result<ConeCheck> {
    if !(margin > 0.0) {
        return Err(LabError::InvalidParameter("margin must be positive".into()));
    }
    if sample.is_empty() {
        return Err(LabError::EmptySample);
    }
    let slacks: Vec<f64> = sample
        .par_iter()
        .enumerate()
        .map(|(idx, x)| {
            let here = cones.cone_at(x)?;
            let there = cones.cone_at(&c.base().forward(x)?)?;
            let a = c.generate(x)?;
            Ok(here
                .boundary(CONE_BOUNDARY_SAMPLES, idx as u64)
                .iter()
                .map(|v| there.aperture - there.angle_to_core(&(&a * v)))
                .fold(f64::INFINITY, f64::min))
        })
        .collect::<Result<_>>()?;
    let min_slack = slacks.into_iter().fold(f64::INFINITY, f64::min);
    Ok(ConeCheck {
        pass: min_slack >= margin,
        min_slack,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KappaEstimate {
    pub kappa: f64,
    pub log_kappa: f64,
    /// `(sample index, m, n)` attaining the minimum.
    pub argmin: (usize, usize, usize),
    pub m_max: usize,
    pub n_max: usize,
    /// `κ ≥ 1e-12`.
    pub success: bool,
}

/// `min log ‖A^{m+n}(x)‖ − log ‖A^m(x)‖ − log ‖A^n(T^m x)‖` over the sample and
/// the grid `1 ≤ m ≤ m_max`, `1 ≤ n ≤ n_max`.
pub fn estimate_kappa(c: &Cocycle, sample: &[Point], m_max: usize, n_max: usize) -> Result<KappaEstimate> {
    if m_max < 2 || n_max < 2 {
        return Err(LabError::InvalidParameter("kappa grid needs m_max, n_max ≥ 2".into()));
    }
    if sample.is_empty() {
        return Err(LabError::EmptySample);
    }
    let per_point: Vec<(f64, usize, usize)> = sample
        .par_iter()
        .map(|x| {
            let from_x: Vec<usize> = (1..=m_max + n_max).collect();
            let head = log_norm_series(c, x, &from_x)?;
            let tail_steps: Vec<usize> = (1..=n_max).collect();
            let mut best = (f64::INFINITY, 0, 0);
            let mut y = x.clone();
            for m in 1..=m_max {
                y = c.base().forward(&y)?;
                let tail = log_norm_series(c, &y, &tail_steps)?;
                for n in 1..=n_max {
                    let v = head[m + n - 1] - head[m - 1] - tail[n - 1];
                    if v < best.0 {
                        best = (v, m, n);
                    }
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let (idx, &(log_kappa, m, n)) = per_point
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
        .expect("nonempty sample");
    let kappa = log_kappa.exp();
    Ok(KappaEstimate {
        kappa,
        log_kappa,
        argmin: (idx, m, n),
        m_max,
        n_max,
        success: log_kappa >= KAPPA_FLOOR.ln(),
    })
}

/// `log φ_n(T^j x)` for `j + n ≤ N`, stored as `table[j][n - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSeries {
    horizon: usize,
    table: Vec<Vec<f64>>,
}

impl PotentialSeries {
    pub fn from_table(table: Vec<Vec<f64>>) -> Result<Self> {
        let horizon = table.len();
        if horizon == 0 || table.iter().enumerate().any(|(j, row)| row.len() != horizon - j) {
            return Err(LabError::InvalidParameter(
                "potential table must be triangular: row j holds N - j values".into(),
            ));
        }
        Ok(Self { horizon, table })
    }

    fn along_orbit<F>(c: &Cocycle, x: &Point, horizon: usize, series: F) -> Result<Self>
    where
        F: Fn(&Cocycle, &Point, &[usize]) -> Result<Vec<f64>>,
    {
        if horizon == 0 {
            return Err(LabError::InvalidParameter("horizon must be ≥ 1".into()));
        }
        let mut table = Vec::with_capacity(horizon);
        let mut y = x.clone();
        for j in 0..horizon {
            let steps: Vec<usize> = (1..=horizon - j).collect();
            table.push(series(c, &y, &steps)?);
            if j + 1 < horizon {
                y = c.base().forward(&y)?;
            }
        }
        Ok(Self { horizon, table })
    }

    /// `φ_n = ‖A^n‖`.
    pub fn operator_norms(c: &Cocycle, x: &Point, horizon: usize) -> Result<Self> {
        Self::along_orbit(c, x, horizon, log_norm_series)
    }

    /// `φ_n = ‖(A^n)^{-1}‖`.
    pub fn inverse_norms(c: &Cocycle, x: &Point, horizon: usize) -> Result<Self> {
        Self::along_orbit(c, x, horizon, log_inverse_norm_series)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `log φ_n(T^j x)`.
    pub fn get(&self, j: usize, n: usize) -> f64 {
        self.table[j][n - 1]
    }

    /// Largest violations `(super, sub)` of
    /// `log φ_{n+m}(T^j x) − log φ_n(T^j x) − log φ_m(T^{j+n} x)` over the table,
    /// from above and from below.
    pub fn additivity_defects(&self) -> (f64, f64) {
        let mut above = f64::NEG_INFINITY;
        let mut below = f64::NEG_INFINITY;
        for j in 0..self.horizon {
            for n in 1..self.horizon - j {
                for m in 1..=self.horizon - j - n {
                    let d = self.get(j, n + m) - self.get(j, n) - self.get(j + n, m);
                    above = above.max(d);
                    below = below.max(-d);
                }
            }
        }
        (above, below)
    }
}

/// Both almost-additivity inequalities hold with constant `candidate_c`
/// (in log form, with a small rounding allowance).
pub fn almost_additivity_check(values: &PotentialSeries, candidate_c: f64) -> Result<bool> {
    if !(candidate_c >= 1.0) {
        return Err(LabError::InvalidParameter("candidate C must be ≥ 1".into()));
    }
    let (above, below) = values.additivity_defects();
    let slack = candidate_c.ln() + 1e-9;
    Ok(above <= slack && below <= slack)
}
