//! Lyapunov spectra, the exponent of a measure, Oseledets angle diagnostics,
//! uniform gap estimates and the entropy lower bound from exterior powers.

use rand::Rng;
use rayon::prelude::*;

use crate::base::{point_rng, BaseSystem, OrbitSegment, Point};
use crate::cocycle::{
    derivative_cocycle, exterior_power_norm, product, Cocycle, MatrixD,
    ProductAccumulator,
};
use crate::error::{LabError, Result};
use crate::numeric::{log_checkpoints, log_mean_exp, max_of, mean};

/// Shortest horizon accepted for spectrum estimates.
pub const MIN_SPECTRUM_HORIZON: usize = 100;

/// Gaps below this (nats per iterate) are treated as degenerate when
/// tracking Oseledets subspaces.
pub const SIMPLE_SPECTRUM_TOLERANCE: f64 = 0.05;

/// Horizon used to resolve the slow (complementary) subspace.
const COMPLEMENT_HORIZON: usize = 400;

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovSpectrum {
    /// `χ_1 ≥ … ≥ χ_d`.
    pub exponents: Vec<f64>,
    pub horizon: usize,
    /// `|χ_i(n) − χ_i(n/2)|`.
    pub residuals: Vec<f64>,
}

impl LyapunovSpectrum {
    pub fn gap(&self, p: usize) -> f64 {
        self.exponents[p - 1] - self.exponents[p]
    }

    pub fn sum(&self) -> f64 {
        self.exponents.iter().sum()
    }
}

/// Spectrum at `x` from the diagonals of step-wise QR re-orthonormalization.
pub fn lyapunov_spectrum(c: &Cocycle, x: &Point, n: usize) -> Result<LyapunovSpectrum> {
    if n < MIN_SPECTRUM_HORIZON {
        return Err(LabError::InvalidParameter(format!(
            "spectrum horizon must be ≥ {MIN_SPECTRUM_HORIZON}, got {n}"
        )));
    }
    let d = c.dim();
    let half = n / 2;
    let mut q = MatrixD::identity(d, d);
    let mut sums = vec![0.0; d];
    let mut at_half = vec![0.0; d];
    let mut cur = x.clone();
    for j in 1..=n {
        let a = c.generate(&cur)?;
        let det = a.determinant();
        if !(det.abs() > crate::cocycle::DET_FLOOR) {
            return Err(LabError::NotInvertible { det });
        }
        let qr = (a * &q).qr();
        let r = qr.r();
        q = qr.q();
        for (i, s) in sums.iter_mut().enumerate() {
            *s += r[(i, i)].abs().ln();
        }
        if j == half {
            at_half.clone_from(&sums);
        }
        if j < n {
            cur = c.base().forward(&cur)?;
        }
    }
    let mut pairs: Vec<(f64, f64)> = sums
        .iter()
        .zip(&at_half)
        .map(|(s, h)| {
            let full = s / n as f64;
            (full, (full - h / half as f64).abs())
        })
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(LyapunovSpectrum {
        exponents: pairs.iter().map(|p| p.0).collect(),
        horizon: n,
        residuals: pairs.iter().map(|p| p.1).collect(),
    })
}

/// A finite stand-in for an invariant measure.
#[derive(Debug, Clone, Copy)]
pub enum MeasureSample<'a> {
    /// Points distributed according to the measure.
    Points(&'a [Point]),
    /// A periodic orbit `x, …, T^p x = x`; the measure is the uniform
    /// average over its `p` distinct points.
    Periodic(&'a OrbitSegment),
}

impl<'a> From<&'a [Point]> for MeasureSample<'a> {
    fn from(points: &'a [Point]) -> Self {
        MeasureSample::Points(points)
    }
}

impl<'a> From<&'a Vec<Point>> for MeasureSample<'a> {
    fn from(points: &'a Vec<Point>) -> Self {
        MeasureSample::Points(points)
    }
}

impl<'a> From<&'a OrbitSegment> for MeasureSample<'a> {
    fn from(orbit: &'a OrbitSegment) -> Self {
        MeasureSample::Periodic(orbit)
    }
}

impl<'a> MeasureSample<'a> {
    pub fn points(&self) -> &'a [Point] {
        match self {
            MeasureSample::Points(p) => p,
            MeasureSample::Periodic(o) => &o.points()[..o.len()],
        }
    }
}

/// `(1/n) · mean_x log ‖A^n(x)‖` over the sample.
pub fn chi_of_measure<'a>(c: &Cocycle, sample: impl Into<MeasureSample<'a>>, n: usize) -> Result<f64> {
    let sample = sample.into();
    if let MeasureSample::Periodic(o) = sample {
        if !n.is_multiple_of(o.len()) {
            return Err(LabError::InvalidParameter(format!(
                "horizon {n} is not a multiple of the period {}",
                o.len()
            )));
        }
    }
    let points = sample.points();
    if points.is_empty() {
        return Err(LabError::EmptySample);
    }
    let values: Vec<f64> = points
        .par_iter()
        .map(|x| product(c, x, n).map(|lp| lp.log_norm()))
        .collect::<Result<_>>()?;
    Ok(mean(&values) / n as f64)
}

/// Top left (`left = true`) or right singular vector of `A^m(y)`.
fn top_singular_vector(c: &Cocycle, y: &Point, m: usize, left: bool) -> Result<MatrixD> {
    let mut acc = ProductAccumulator::new(c.dim());
    let mut cur = y.clone();
    for _ in 0..m {
        acc.push(&c.generate(&cur)?)?;
        cur = c.base().forward(&cur)?;
    }
    let svd = acc.snapshot().residual.svd(left, !left);
    let top = svd
        .singular_values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map_or(0, |(i, _)| i);
    let entries: Vec<f64> = if left {
        svd.u.expect("requested").column(top).iter().copied().collect()
    } else {
        svd.v_t.expect("requested").row(top).iter().copied().collect()
    };
    Ok(MatrixD::from_vec(c.dim(), 1, entries))
}

/// `(j, (1/j) log |sin ∠(E^1, E^{≥2})|)` at logarithmic checkpoints `j` along
/// the orbit of `x`. At `y = T^j x` the fast line is the most expanded output
/// direction of `A^m(T^{-m} y)` and the slow hyperplane is the orthogonal
/// complement of the most expanded input direction of `A^m(y)`.
pub fn oseledets_angle_check(c: &Cocycle, x: &Point, n: usize) -> Result<Vec<(usize, f64)>> {
    if c.dim() < 2 {
        return Err(LabError::InvalidParameter("angles need dimension ≥ 2".into()));
    }
    if !c.base().is_invertible() {
        return Err(LabError::Unsupported("angle tracking needs an invertible base".into()));
    }
    let spectrum = lyapunov_spectrum(c, x, n.max(MIN_SPECTRUM_HORIZON))?;
    let gap = (1..c.dim())
        .map(|p| spectrum.gap(p))
        .fold(f64::INFINITY, f64::min);
    if !(gap > SIMPLE_SPECTRUM_TOLERANCE) {
        return Err(LabError::GapTooSmall {
            gap,
            tolerance: SIMPLE_SPECTRUM_TOLERANCE,
        });
    }
    let m = COMPLEMENT_HORIZON;
    log_checkpoints(n)
        .into_iter()
        .map(|j| {
            let y = c.base().iterate(x, j as i64)?;
            let past = c.base().iterate(&y, -(m as i64))?;
            let u = top_singular_vector(c, &past, m, true)?;
            let v = top_singular_vector(c, &y, m, false)?;
            let sin = u.dot(&v).abs().min(1.0);
            Ok((j, sin.max(f64::MIN_POSITIVE).ln() / j as f64))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub p: usize,
    pub baseline_gap: f64,
    pub min_gap: f64,
    pub epsilon: f64,
    pub trials: usize,
    /// Lower bound for the gap over the perturbation family: no sampled
    /// perturbation produced a smaller mean gap.
    pub beta: f64,
}

/// Default number of perturbation trials.
pub const GAP_TRIALS: usize = 16;

/// A deterministic `d × d` matrix with entries uniform in `[-1, 1]`,
/// scaled to operator norm 1.
pub fn perturbation_direction(d: usize, seed: u64, trial: u64) -> MatrixD {
    let mut rng = point_rng(seed ^ 0x9e37_79b9_7f4a_7c15, trial);
    let s = MatrixD::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    let norm = crate::cocycle::operator_norm(&s);
    if norm > 0.0 {
        s / norm
    } else {
        s
    }
}

fn mean_gap(c: &Cocycle, sample: &[Point], p: usize, n: usize) -> Result<f64> {
    let gaps: Vec<f64> = sample
        .par_iter()
        .map(|x| lyapunov_spectrum(c, x, n).map(|s| s.gap(p)))
        .collect::<Result<_>>()?;
    Ok(mean(&gaps))
}

/// Mean gap `χ_p − χ_{p+1}` over the sample, for `A` and for `trials`
/// perturbations `A·(I + εS)` with `‖S‖ = 1`.
#[allow(clippy::too_many_arguments)]
pub fn uniform_p_gap(
    c: &Cocycle,
    sample: &[Point],
    p: usize,
    epsilon: f64,
    trials: usize,
    n: usize,
    seed: u64,
) -> Result<GapReport> {
    if p == 0 || p >= c.dim() {
        return Err(LabError::InvalidParameter(format!(
            "gap index must satisfy 1 ≤ p < {}",
            c.dim()
        )));
    }
    if !(epsilon > 0.0) || trials == 0 {
        return Err(LabError::InvalidParameter("need ε > 0 and at least one trial".into()));
    }
    if sample.is_empty() {
        return Err(LabError::EmptySample);
    }
    let baseline = mean_gap(c, sample, p, n)?;
    let trial_gaps: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let s = perturbation_direction(c.dim(), seed, t);
            mean_gap(&c.perturbed(&s, epsilon), sample, p, n)
        })
        .collect::<Result<_>>()?;
    let min_gap = trial_gaps.iter().copied().fold(baseline, f64::min);
    Ok(GapReport {
        p,
        baseline_gap: baseline,
        min_gap,
        epsilon,
        trials,
        beta: min_gap,
    })
}

/// `(integral, pointwise)` estimates of `(1/n) log ∫ max_k ‖Λ^k Df^n‖` and
/// `max_x (1/n) max_k log ‖Λ^k Df^n_x‖`. The `k = 0` term is 1, so both
/// estimates are ≥ 0.
pub fn kozlovski_bound(system: &BaseSystem, sample: &[Point], n: usize) -> Result<(f64, f64)> {
    if sample.is_empty() {
        return Err(LabError::EmptySample);
    }
    let c = derivative_cocycle(system)?;
    let values: Vec<f64> = sample
        .par_iter()
        .map(|x| {
            let lp = product(&c, x, n)?;
            (0..=c.dim())
                .map(|k| exterior_power_norm(&lp, k))
                .try_fold(f64::NEG_INFINITY, |m, v| v.map(|v| m.max(v)))
        })
        .collect::<Result<_>>()?;
    Ok((log_mean_exp(&values) / n as f64, max_of(&values) / n as f64))
}
