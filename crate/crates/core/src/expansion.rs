//! Non-uniform expansion along a center-unstable bundle and the search for
//! block constants `(λ, K)`.
//!
//! Every operation takes the cocycle already restricted to the bundle
//! (`B = Df|E^{cu}`, see [`center_unstable_cocycle`]) and works with its
//! inverses `‖(B^n)^{-1}‖` through products of one-step inverses.

use rayon::prelude::*;
use serde::Serialize;

use crate::base::{BaseSystem, Point};
use crate::check::CheckStatus;
use crate::cocycle::{
    compute_bundle_frames, log_inverse_norm_series, operator_norm, restrict_to_bundle, singular_values, Cocycle,
    FrameField, MatrixD,
};
use crate::domination::{domination_report, PotentialSeries};
use crate::ergopt::{maximizing_observable, resample_measure, RESAMPLE_POINTS};
use crate::error::{LabError, Result};
use crate::measures::observable_candidates;
use crate::numeric::{limsup_checkpoints, max_of, median};

/// Exponent rates at or above this count as "not negative".
pub const POSITIVITY_MARGIN: f64 = 0.01;
/// Default fraction of the sample that must satisfy the block condition.
pub const COVERAGE_FLOOR: f64 = 0.99;
/// Rounding allowance for the potential inequalities.
pub const INEQUALITY_TOLERANCE: f64 = 1e-8;

/// Restrict `c` to its dominant `k`-dimensional bundle.
///
/// The bundle is tracked from `probe` and must come out constant over the
/// base (frames agreeing to 1e-9 along the tracked stretch), which is the
/// case for the linear built-ins; invariance is then checked on
/// `check_points`.
pub fn center_unstable_cocycle(c: &Cocycle, k: usize, probe: &Point, check_points: &[Point]) -> Result<Cocycle> {
    let field = compute_bundle_frames(c, probe, k, 200, 16)?.into_constant_if_uniform(1e-9);
    if !matches!(field, FrameField::Constant(_)) {
        return Err(LabError::Unsupported(
            "center-unstable bundle varies over the base; supply frames per point".into(),
        ));
    }
    restrict_to_bundle(c, &field, check_points)
}

fn limsup_of_averages(checkpoints: &[usize], sums: &[f64], scale: usize) -> f64 {
    checkpoints
        .iter()
        .zip(sums)
        .map(|(&m, s)| s / (m * scale) as f64)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityReport {
    /// Checkpoint limsup of `(1/n) log ‖(B^n(x))^{-1}‖` per point.
    pub values: Vec<f64>,
    /// Every value is below `−0.01`.
    pub holds: bool,
}

/// Rates `limsup (1/n) log ‖(B^n)^{-1}‖` over the sample.
pub fn check_exponent_positivity(cu: &Cocycle, sample: &[Point], n: usize) -> Result<PositivityReport> {
    if sample.is_empty() {
        return Err(LabError::EmptySample);
    }
    let checkpoints = limsup_checkpoints(n);
    let values: Vec<f64> = sample
        .par_iter()
        .map(|x| {
            let series = log_inverse_norm_series(cu, x, &checkpoints)?;
            Ok(limsup_of_averages(&checkpoints, &series, 1))
        })
        .collect::<Result<_>>()?;
    let holds = values.iter().all(|&v| v < -POSITIVITY_MARGIN);
    Ok(PositivityReport { values, holds })
}

fn invert(m: MatrixD) -> Result<MatrixD> {
    let det = m.determinant();
    m.try_inverse().ok_or(LabError::NotInvertible { det })
}

/// `limsup_m (1/(mK)) Σ_{i<m} log ‖(B^K(T^{iK} x))^{-1}‖`, blocks indexed
/// from 0, limsup over checkpoints of the block count up to `n_blocks`.
pub fn nue_block_average(cu: &Cocycle, x: &Point, k: usize, n_blocks: usize) -> Result<f64> {
    if k == 0 || n_blocks == 0 {
        return Err(LabError::InvalidParameter("K and the block count must be ≥ 1".into()));
    }
    let checkpoints = limsup_checkpoints(n_blocks);
    let last = *checkpoints.last().expect("nonempty");
    let mut sums = Vec::with_capacity(checkpoints.len());
    let mut total = 0.0;
    let mut next = 0;
    let mut y = x.clone();
    for block in 1..=last {
        let mut inv = MatrixD::identity(cu.dim(), cu.dim());
        for _ in 0..k {
            inv *= invert(cu.generate(&y)?)?;
            y = cu.base().forward(&y)?;
        }
        total += operator_norm(&inv).ln();
        while next < checkpoints.len() && checkpoints[next] == block {
            sums.push(total);
            next += 1;
        }
    }
    Ok(limsup_of_averages(&checkpoints, &sums, k))
}

/// `limsup_n (1/n) Σ_{j<n} log ‖B(T^j x)^{-1}‖`, with each one-step term
/// taken as `−log σ_min(B(T^j x))`.
pub fn nue_limsup_average(cu: &Cocycle, x: &Point, n: usize) -> Result<f64> {
    let checkpoints = limsup_checkpoints(n);
    let last = *checkpoints.last().expect("nonempty");
    let mut sums = Vec::with_capacity(checkpoints.len());
    let mut total = 0.0;
    let mut next = 0;
    let mut y = x.clone();
    for j in 1..=last {
        let sv = singular_values(&cu.generate(&y)?);
        total -= sv.last().copied().unwrap_or(1.0).ln();
        while next < checkpoints.len() && checkpoints[next] == j {
            sums.push(total);
            next += 1;
        }
        if j < last {
            y = cu.base().forward(&y)?;
        }
    }
    Ok(limsup_of_averages(&checkpoints, &sums, 1))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockRow {
    pub k: usize,
    pub lambda: f64,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionReport {
    pub status: CheckStatus,
    pub k: Option<usize>,
    pub lambda: Option<f64>,
    pub coverage: f64,
    /// One row per `K` scanned, failures included.
    pub rows: Vec<BlockRow>,
    /// Block averages per point at the last `K` scanned.
    pub block_averages: Vec<f64>,
    pub positivity: Vec<f64>,
    pub k_max: usize,
    pub n: usize,
    pub sample_size: usize,
}

/// Index-1 domination of the inverse cocycle on `support`, checked as
/// index `k − 1` of the forward cocycle (the gap between the two smallest
/// singular values). A one-dimensional bundle needs no splitting.
pub fn inverse_domination_holds(cu: &Cocycle, support: &[Point], n_max: usize) -> Result<bool> {
    if cu.dim() < 2 {
        return Ok(true);
    }
    Ok(domination_report(cu, support, cu.dim() - 1, n_max)?.verdict)
}

/// `x ↦ B(x)^{-T}`, whose forward products satisfy
/// `‖C^n(x)‖ = ‖(B^n(x))^{-1}‖`: the inverse potential as a forward cocycle.
pub fn inverse_transpose(cu: &Cocycle) -> Cocycle {
    let inner = cu.clone();
    let label = format!("{}^-T", cu.label());
    Cocycle::new(cu.base().clone(), cu.dim(), &label, move |x| {
        Ok(invert(inner.generate(x)?)?.transpose())
    })
}

/// Points resampled from the observable candidate maximizing the inverse
/// potential `log ‖(B^n)^{-1}‖`, for the domination gate.
pub fn maximizing_support(
    system: &BaseSystem,
    cu: &Cocycle,
    sample: &[Point],
    measure_n: usize,
    epsilon: f64,
    chi_horizon: usize,
    seed: u64,
) -> Result<Vec<Point>> {
    let analysis = observable_candidates(system, sample, measure_n, epsilon)?;
    let (best, _) = maximizing_observable(system, &analysis.candidates, &inverse_transpose(cu), chi_horizon, seed)?;
    resample_measure(system, &analysis.candidates[best].representative, RESAMPLE_POINTS, seed)
}

/// Scan `K = 1 … K_max` for block constants.
///
/// Refused when the rates of `‖(B^n)^{-1}‖` are not all negative on the
/// sample, or when `support` (points resampled from the maximizing
/// observable measure) does not show index-1 domination of the inverse
/// bundle cocycle. For each `K`, `λ` is half the median magnitude of the
/// per-point block averages, and `K` succeeds when at least
/// `coverage_floor` of the points have block average ≤ −λ.
pub fn theorem_a_search(
    cu: &Cocycle,
    sample: &[Point],
    support: &[Point],
    k_max: usize,
    n: usize,
    coverage_floor: f64,
) -> Result<ExpansionReport> {
    if k_max == 0 {
        return Err(LabError::InvalidParameter("K_max must be ≥ 1".into()));
    }
    if !(0.0..=1.0).contains(&coverage_floor) {
        return Err(LabError::InvalidParameter("coverage floor must lie in [0, 1]".into()));
    }
    let positivity = check_exponent_positivity(cu, sample, n)?;
    let mut report = ExpansionReport {
        status: CheckStatus::Pass,
        k: None,
        lambda: None,
        coverage: 0.0,
        rows: Vec::new(),
        block_averages: Vec::new(),
        positivity: positivity.values.clone(),
        k_max,
        n,
        sample_size: sample.len(),
    };
    if !positivity.holds {
        report.status = CheckStatus::Refused(format!(
            "inverse growth rate not negative on the sample (largest {:.4})",
            max_of(&positivity.values)
        ));
        return Ok(report);
    }
    if !inverse_domination_holds(cu, support, 64)? {
        report.status = CheckStatus::Refused("no index-1 domination on the maximizing measure's support".into());
        return Ok(report);
    }
    for k in 1..=k_max {
        let blocks = (n / k).max(1);
        let averages: Vec<f64> = sample
            .par_iter()
            .map(|x| nue_block_average(cu, x, k, blocks))
            .collect::<Result<_>>()?;
        let lambda = 0.5 * median(&averages.iter().map(|v| v.abs()).collect::<Vec<_>>());
        let coverage = averages.iter().filter(|&&v| v <= -lambda).count() as f64 / averages.len() as f64;
        report.rows.push(BlockRow { k, lambda, coverage });
        report.block_averages = averages;
        report.coverage = coverage;
        if lambda > 0.0 && coverage >= coverage_floor {
            report.k = Some(k);
            report.lambda = Some(lambda);
            return Ok(report);
        }
    }
    report.status = CheckStatus::Fail(format!("no K ≤ {k_max} reached coverage {coverage_floor}"));
    Ok(report)
}

/// Subadditivity of `a` and `b` and the comparison
/// `a_n(x) ≤ a_{n+k}(x) + b_k(T^n x)`, on every stored triple, within 1e-8.
pub fn tian_hypotheses_check(a: &PotentialSeries, b: &PotentialSeries) -> Result<bool> {
    if a.horizon() != b.horizon() {
        return Err(LabError::InvalidParameter("series must share the orbit and horizon".into()));
    }
    let subadditive = |s: &PotentialSeries| s.additivity_defects().0 <= INEQUALITY_TOLERANCE;
    if !subadditive(a) || !subadditive(b) {
        return Ok(false);
    }
    let big_n = a.horizon();
    for j in 0..big_n {
        for n in 1..big_n - j {
            for k in 1..=big_n - j - n {
                if a.get(j, n) > a.get(j, n + k) + b.get(j + n, k) + INEQUALITY_TOLERANCE {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}
