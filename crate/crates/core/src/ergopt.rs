//! Ergodic optimization of the top Lyapunov exponent: `β(Φ)` from periodic
//! orbits and from pointwise growth, the two essential-supremum quantities,
//! and the exponent-maximizing observable measure.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::base::{point_rng, BaseSystem, OrbitSegment, Point, SystemKind};
use crate::check::CheckStatus;
use crate::cocycle::{derivative_cocycle, log_norm_series, spectral_radius, Cocycle, ProductAccumulator};
use crate::domination::domination_report;
use crate::error::{LabError, Result};
use crate::measures::{classify_physical, observable_candidates, EmpiricalMeasure, MeasureSpace, ObservableCandidate, PHYSICAL_FLOOR};
use crate::numeric::{limsup_checkpoints, max_of, mean};

/// Equality tolerance (nats) for the optimization identities.
pub const TOLERANCE: f64 = 0.05;
/// Smallest Lebesgue sample accepted for essential suprema.
pub const MIN_LEBESGUE_SAMPLE: usize = 100;

/// `(1/q) log ρ(A^q(x))` for the cycle `x, …, T^q x = x`.
pub fn periodic_exponent(c: &Cocycle, orbit: &OrbitSegment) -> Result<f64> {
    let q = orbit.len();
    let pts = orbit.points();
    if c.base().distance(&pts[0], &pts[q])? > 1e-9 {
        return Err(LabError::InvalidParameter("orbit segment is not closed".into()));
    }
    let mut acc = ProductAccumulator::new(c.dim());
    for x in &pts[..q] {
        acc.push(&c.generate(x)?)?;
    }
    let lp = acc.snapshot();
    Ok((lp.log_scale + spectral_radius(&lp.residual).ln()) / q as f64)
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

/// Largest periodic exponent over the given cycles. Ties (within 1e-12) go
/// to the lexicographically smallest orbit encoding.
pub fn beta_periodic(c: &Cocycle, orbits: &[OrbitSegment]) -> Result<(f64, OrbitSegment)> {
    if orbits.is_empty() {
        return Err(LabError::EmptySample);
    }
    let values: Vec<f64> = orbits
        .par_iter()
        .map(|o| periodic_exponent(c, o))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for i in 1..orbits.len() {
        let (v, b) = (values[i], values[best]);
        let tie = (v - b).abs() <= 1e-12 * b.abs().max(1.0);
        if (!tie && v > b) || (tie && lex_cmp(&orbits[i].encoding(), &orbits[best].encoding()).is_lt()) {
            best = i;
        }
    }
    Ok((values[best], orbits[best].clone()))
}

/// Checkpoint limsup of `(1/j) log ‖A^j(x)‖`.
pub fn pointwise_limsup(c: &Cocycle, x: &Point, n: usize) -> Result<f64> {
    let checkpoints = limsup_checkpoints(n);
    let series = log_norm_series(c, x, &checkpoints)?;
    Ok(checkpoints
        .iter()
        .zip(&series)
        .map(|(&j, v)| v / j as f64)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `max_x limsup_j (1/j) log ‖A^j(x)‖` over a grid.
pub fn beta_pointwise(c: &Cocycle, grid: &[Point], n: usize) -> Result<f64> {
    if grid.is_empty() {
        return Err(LabError::EmptySample);
    }
    let values: Vec<f64> = grid
        .par_iter()
        .map(|x| pointwise_limsup(c, x, n))
        .collect::<Result<_>>()?;
    Ok(max_of(&values))
}

/// `ess sup_x limsup_n (1/n) log ‖A^n(x)‖`, with the essential supremum
/// realized as a maximum over a Lebesgue sample.
pub fn ess_sup_limsup(c: &Cocycle, lebesgue_sample: &[Point], n: usize) -> Result<f64> {
    if lebesgue_sample.len() < MIN_LEBESGUE_SAMPLE {
        return Err(LabError::InvalidParameter(format!(
            "essential suprema need ≥ {MIN_LEBESGUE_SAMPLE} sample points"
        )));
    }
    beta_pointwise(c, lebesgue_sample, n)
}

/// Periodic points used to densify suprema at a fixed horizon: all points
/// of period ≤ 6 (rational points of small denominator on tori).
pub fn periodic_points(system: &BaseSystem) -> Result<Vec<Point>> {
    let max_den = match system.kind() {
        SystemKind::Torus { dim, shift, .. } => {
            if shift.iter().any(|&s| s != 0.0) {
                return Ok(Vec::new());
            }
            if *dim <= 2 {
                6
            } else {
                3
            }
        }
        SystemKind::FullShift { .. } => 1,
    };
    Ok(system
        .periodic_orbits(6, max_den)?
        .iter()
        .flat_map(|o| o.points()[..o.len()].to_vec())
        .collect())
}

/// `limsup_n (1/n) ess sup_x log ‖A^n(x)‖`.
///
/// For continuous `x ↦ log ‖A^n(x)‖` and a fully supported reference
/// measure the essential supremum at a fixed horizon is the supremum over
/// the whole space. At a fixed `n` that supremum is approximated over the
/// sample together with the periodic points of the base, which is what
/// separates this quantity from [`ess_sup_limsup`]: the maximum over a
/// finite set commutes with the limsup, so a Lebesgue sample alone would
/// return the same number for both.
pub fn limsup_ess_sup(c: &Cocycle, lebesgue_sample: &[Point], n: usize) -> Result<f64> {
    if lebesgue_sample.len() < MIN_LEBESGUE_SAMPLE {
        return Err(LabError::InvalidParameter(format!(
            "essential suprema need ≥ {MIN_LEBESGUE_SAMPLE} sample points"
        )));
    }
    let mut grid = lebesgue_sample.to_vec();
    grid.extend(periodic_points(c.base())?);
    let checkpoints = limsup_checkpoints(n);
    let rows: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|x| log_norm_series(c, x, &checkpoints))
        .collect::<Result<_>>()?;
    Ok(checkpoints
        .iter()
        .enumerate()
        .map(|(k, &j)| rows.iter().map(|r| r[k]).fold(f64::NEG_INFINITY, f64::max) / j as f64)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `count` points distributed like the histogram of `measure`: cells are
/// chosen by stratified inverse-CDF sampling, positions inside a cell are
/// uniform (torus) or a random continuation of the cylinder word (shift).
pub fn resample_measure(system: &BaseSystem, measure: &EmpiricalMeasure, count: usize, seed: u64) -> Result<Vec<Point>> {
    if measure.weights.is_empty() || count == 0 {
        return Err(LabError::EmptySample);
    }
    let mut cdf = Vec::with_capacity(measure.weights.len());
    let mut acc = 0.0;
    for &(_, w) in &measure.weights {
        acc += w;
        cdf.push(acc);
    }
    (0..count)
        .map(|i| {
            let u = (i as f64 + 0.5) / count as f64 * acc;
            let k = cdf.partition_point(|&c| c < u).min(cdf.len() - 1);
            let cell = measure.weights[k].0;
            match &measure.space {
                MeasureSpace::Torus { dim, resolution } => {
                    let mut rng = point_rng(seed, i as u64);
                    let mut rest = cell;
                    let mut coords = vec![0.0; *dim];
                    for c in coords.iter_mut().rev() {
                        let idx = rest % resolution;
                        rest /= resolution;
                        *c = (idx as f64 + rng.gen::<f64>()) / *resolution as f64;
                    }
                    Ok(Point::torus(&coords))
                }
                MeasureSpace::Shift { alphabet, depth } => {
                    let a = *alphabet as usize;
                    let mut rest = cell;
                    let mut word = vec![0u8; *depth];
                    for s in word.iter_mut().rev() {
                        *s = (rest % a) as u8;
                        rest /= a;
                    }
                    system.point_with_prefix(&word, seed, i as u64)
                }
            }
        })
        .collect()
}

/// Points resampled per candidate when evaluating its exponent.
pub const RESAMPLE_POINTS: usize = 64;

/// `χ(ν, Φ_A)` for each candidate from resampled points; returns the index
/// of the maximizer (ties within 1e-12 go to the earlier candidate, i.e. the
/// larger basin) and its value.
pub fn maximizing_observable(
    system: &BaseSystem,
    candidates: &[ObservableCandidate],
    c: &Cocycle,
    n: usize,
    seed: u64,
) -> Result<(usize, f64)> {
    if candidates.is_empty() {
        return Err(LabError::EmptySample);
    }
    let values: Vec<f64> = candidates
        .par_iter()
        .map(|cand| candidate_exponent(system, cand, c, n, seed))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] + 1e-12 {
            best = i;
        }
    }
    Ok((best, values[best]))
}

/// `χ(ν, Φ_A)` of one candidate.
pub fn candidate_exponent(system: &BaseSystem, cand: &ObservableCandidate, c: &Cocycle, n: usize, seed: u64) -> Result<f64> {
    let pts = resample_measure(system, &cand.representative, RESAMPLE_POINTS, seed)?;
    let values: Vec<f64> = pts
        .par_iter()
        .map(|x| log_norm_series(c, x, &[n]).map(|v| v[0] / n as f64))
        .collect::<Result<_>>()?;
    Ok(mean(&values))
}

/// Sample sizes, horizons and tolerance for the optimization checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgoptConfig {
    pub sample_size: usize,
    /// Horizon for the essential suprema and the pointwise sup.
    pub n: usize,
    /// Orbit length for empirical measures and cluster sets.
    pub measure_n: usize,
    /// Weak* radius for observable candidates.
    pub epsilon: f64,
    /// Horizon for `χ` of resampled candidates.
    pub chi_horizon: usize,
    /// `n_max` for the domination gate.
    pub domination_horizon: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for ErgoptConfig {
    fn default() -> Self {
        Self {
            sample_size: 500,
            n: 10_000,
            measure_n: 10_000,
            epsilon: 0.05,
            chi_horizon: 1000,
            domination_horizon: 64,
            tolerance: TOLERANCE,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationReport {
    /// Best periodic exponent and the encoding of its orbit (absent when
    /// the base has no enumerable periodic orbits).
    pub beta_periodic: Option<(f64, Vec<f64>)>,
    /// Pointwise sup over the sample together with the periodic points.
    pub beta_pointwise: f64,
    pub ess_sup_limsup: f64,
    pub limsup_ess_sup: f64,
    /// Index into the candidate list (sorted by basin mass).
    pub maximizing_candidate: usize,
    pub sup_observable: f64,
    pub candidate_count: usize,
    pub config: ErgoptConfig,
}

/// Everything the optimization checks need, computed once.
#[derive(Debug, Clone)]
pub struct OptimizationRun {
    pub report: OptimizationReport,
    pub analysis: crate::measures::ObservableAnalysis,
    pub sample: Vec<Point>,
}

pub fn optimization_run(c: &Cocycle, system: &BaseSystem, cfg: &ErgoptConfig) -> Result<OptimizationRun> {
    let sample = system.sample_initial_points(cfg.sample_size, cfg.seed)?;
    let analysis = observable_candidates(system, &sample, cfg.measure_n, cfg.epsilon)?;
    let (maximizing_candidate, sup_observable) =
        maximizing_observable(system, &analysis.candidates, c, cfg.chi_horizon, cfg.seed)?;
    let ess = ess_sup_limsup(c, &sample, cfg.n)?;
    let lse = limsup_ess_sup(c, &sample, cfg.n)?;
    let periodic = periodic_points(system)?;
    let beta_periodic = match system.periodic_orbits(6, if system.dim() <= 2 { 6 } else { 3 }) {
        Ok(orbits) if !orbits.is_empty() => {
            let (v, o) = beta_periodic(c, &orbits)?;
            Some((v, o.encoding()))
        }
        _ => None,
    };
    let mut grid = sample.clone();
    grid.extend(periodic);
    let beta_pointwise = beta_pointwise(c, &grid, cfg.n)?;
    Ok(OptimizationRun {
        report: OptimizationReport {
            beta_periodic,
            beta_pointwise,
            ess_sup_limsup: ess,
            limsup_ess_sup: lse,
            maximizing_candidate,
            sup_observable,
            candidate_count: analysis.candidates.len(),
            config: cfg.clone(),
        },
        analysis,
        sample,
    })
}

/// `None` when the cocycle is dominated with index 1 on points resampled
/// from `candidate`, otherwise the reason for refusing. One-dimensional
/// cocycles need no splitting: the top exponent is then additive.
pub fn domination_gate(
    c: &Cocycle,
    system: &BaseSystem,
    candidate: &ObservableCandidate,
    cfg: &ErgoptConfig,
) -> Result<Option<String>> {
    if c.dim() < 2 {
        return Ok(None);
    }
    let support = resample_measure(system, &candidate.representative, RESAMPLE_POINTS, cfg.seed)?;
    let report = domination_report(c, &support, 1, cfg.domination_horizon)?;
    Ok((!report.verdict).then(|| {
        format!(
            "no dominated splitting of index 1 on the maximizing candidate's support (fitted tau {:.4}, R² {:.3})",
            report.tau, report.r_squared
        )
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem41Report {
    pub status: CheckStatus,
    pub report: OptimizationReport,
}

/// The ess-sup-limsup equals the sup of `χ` over observable measures, and
/// is at most the limsup-ess-sup, both within the configured tolerance.
/// Refused unless the domination hypothesis holds on the maximizing
/// candidate's support.
pub fn theorem_41_check_with(c: &Cocycle, system: &BaseSystem, cfg: &ErgoptConfig) -> Result<Theorem41Report> {
    let run = optimization_run(c, system, cfg)?;
    let r = &run.report;
    let candidate = &run.analysis.candidates[r.maximizing_candidate];
    let status = match domination_gate(c, system, candidate, cfg)? {
        Some(reason) => CheckStatus::Refused(reason),
        None => {
            let eq = (r.ess_sup_limsup - r.sup_observable).abs();
            let le = r.ess_sup_limsup - r.limsup_ess_sup;
            if eq > cfg.tolerance {
                CheckStatus::Fail(format!("|ess-sup-limsup − sup over observables| = {eq:.4}"))
            } else if le > cfg.tolerance {
                CheckStatus::Fail(format!("ess-sup-limsup exceeds limsup-ess-sup by {le:.4}"))
            } else {
                CheckStatus::Pass
            }
        }
    };
    Ok(Theorem41Report {
        status,
        report: run.report,
    })
}

pub fn theorem_41_check(c: &Cocycle, system: &BaseSystem, sample_size: usize, n: usize, seed: u64) -> Result<Theorem41Report> {
    let cfg = ErgoptConfig {
        sample_size,
        n,
        measure_n: n,
        seed,
        ..ErgoptConfig::default()
    };
    theorem_41_check_with(c, system, &cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Corollary62Report {
    pub status: CheckStatus,
    pub report: OptimizationReport,
    /// Largest `χ` over candidates classified physical.
    pub sup_physical: Option<f64>,
    pub physical_count: usize,
}

/// For the derivative cocycle: ess-sup-limsup = sup over observable
/// measures = sup over physical measures, within tolerance.
pub fn corollary_62_check_with(system: &BaseSystem, cfg: &ErgoptConfig) -> Result<Corollary62Report> {
    let c = derivative_cocycle(system)?;
    let run = optimization_run(&c, system, cfg)?;
    let partition = classify_physical(&run.analysis, PHYSICAL_FLOOR)?;
    let physical_values: Vec<f64> = partition
        .physical
        .iter()
        .map(|&i| candidate_exponent(system, &run.analysis.candidates[i], &c, cfg.chi_horizon, cfg.seed))
        .collect::<Result<_>>()?;
    let sup_physical = (!physical_values.is_empty()).then(|| max_of(&physical_values));
    let r = &run.report;
    let candidate = &run.analysis.candidates[r.maximizing_candidate];
    let status = match domination_gate(&c, system, candidate, cfg)? {
        Some(reason) => CheckStatus::Refused(reason),
        None => match sup_physical {
            None => CheckStatus::Fail("no physical candidate found".into()),
            Some(phy) => {
                let a = (r.ess_sup_limsup - r.sup_observable).abs();
                let b = (r.sup_observable - phy).abs();
                if a > cfg.tolerance || b > cfg.tolerance {
                    CheckStatus::Fail(format!(
                        "chain gaps {a:.4} (ess sup vs observable), {b:.4} (observable vs physical)"
                    ))
                } else {
                    CheckStatus::Pass
                }
            }
        },
    };
    Ok(Corollary62Report {
        status,
        sup_physical,
        physical_count: partition.physical.len(),
        report: run.report,
    })
}

pub fn corollary_62_check(system: &BaseSystem, sample_size: usize, n: usize, seed: u64) -> Result<Corollary62Report> {
    let cfg = ErgoptConfig {
        sample_size,
        n,
        measure_n: n,
        seed,
        ..ErgoptConfig::default()
    };
    corollary_62_check_with(system, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::MatrixD;
    use crate::measures::observable_candidates;
    use approx::assert_relative_eq;

    fn diag(v: &[f64]) -> MatrixD {
        MatrixD::from_diagonal(&nalgebra::DVector::from_row_slice(v))
    }

    fn cat_log() -> f64 {
        ((3.0 + 5f64.sqrt()) / 2.0).ln()
    }

    fn two_symbol(horizon: usize, a0: MatrixD, a1: MatrixD) -> (BaseSystem, Cocycle) {
        let shift = BaseSystem::full_shift(2, horizon).unwrap();
        let c = Cocycle::symbol_table(shift.clone(), vec![a0, a1]).unwrap();
        (shift, c)
    }

    #[test]
    fn periodic_beta_of_constant_and_identity() {
        let cat = BaseSystem::cat_map();
        let orbits = cat.periodic_orbits(4, 5).unwrap();
        let c = Cocycle::constant(cat.clone(), MatrixD::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 0.5]));
        for o in &orbits {
            assert_relative_eq!(periodic_exponent(&c, o).unwrap(), 2f64.ln(), max_relative = 1e-10);
        }
        let (b, o) = beta_periodic(&c, &orbits).unwrap();
        assert_relative_eq!(b, 2f64.ln(), max_relative = 1e-10);
        // all tie, so the smallest encoding wins: the fixed point (0, 0)
        assert_eq!(o.encoding(), vec![0.0, 0.0]);
        let (b, _) = beta_periodic(&Cocycle::identity(cat, 2), &orbits).unwrap();
        assert_eq!(b, 0.0);
    }

    #[test]
    fn periodic_beta_two_symbols() {
        let (shift, c) = two_symbol(32, diag(&[2.0, 1.0]), diag(&[1.0, 3.0]));
        let orbits = shift.periodic_orbits(6, 1).unwrap();
        // brute force over all words: the cycle product is diagonal
        let mut best: f64 = 0.0;
        for len in 1..=6u32 {
            for w in 0..(1u32 << len) {
                let ones = w.count_ones() as f64;
                let zeros = len as f64 - ones;
                best = best.max((zeros * 2f64.ln()).max(ones * 3f64.ln()) / len as f64);
            }
        }
        let (b, o) = beta_periodic(&c, &orbits).unwrap();
        assert_relative_eq!(b, best, max_relative = 1e-12);
        assert_relative_eq!(b, 3f64.ln(), max_relative = 1e-12);
        assert_eq!(o.encoding(), vec![1.0]);
        assert!(beta_periodic(&c, &[]).is_err());
    }

    #[test]
    fn pointwise_beta() {
        let cat = BaseSystem::cat_map();
        let c = Cocycle::constant(cat.clone(), MatrixD::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 0.5]));
        let grid = cat.sample_initial_points(4, 1).unwrap();
        assert!((beta_pointwise(&c, &grid, 10_000).unwrap() - 2f64.ln()).abs() < 1e-3);
        assert_eq!(beta_pointwise(&Cocycle::identity(cat, 2), &grid, 100).unwrap(), 0.0);

        let (shift, c) = two_symbol(2100, diag(&[2.0, 1.0]), diag(&[1.0, 3.0]));
        let mut grid = shift.sample_initial_points(200, 4).unwrap();
        grid.push(shift.periodic_symbolic_point(&[1]).unwrap());
        assert!(beta_pointwise(&c, &grid, 2000).unwrap() >= 3f64.ln() - 0.05);
    }

    #[test]
    fn essential_suprema() {
        let cat = BaseSystem::cat_map();
        let d = crate::cocycle::derivative_cocycle(&cat).unwrap();
        let sample = cat.sample_initial_points(100, 2).unwrap();
        assert!((ess_sup_limsup(&d, &sample, 2000).unwrap() - cat_log()).abs() < 1e-2);
        let lse = limsup_ess_sup(&d, &sample, 2000).unwrap();
        assert_relative_eq!(lse, ess_sup_limsup(&d, &sample, 2000).unwrap(), max_relative = 1e-9);
        let id = Cocycle::identity(cat.clone(), 2);
        assert_eq!(ess_sup_limsup(&id, &sample, 500).unwrap(), 0.0);
        assert_eq!(limsup_ess_sup(&id, &sample, 500).unwrap(), 0.0);
        assert!(ess_sup_limsup(&id, &sample[..50], 500).is_err());
    }

    #[test]
    fn null_sets_are_invisible() {
        // identity at the fixed point (0, 0), diag(2, 1/2) everywhere else
        let cat = BaseSystem::cat_map();
        let c = Cocycle::new(cat.clone(), 2, "null-set", |x| {
            let p = x.coords().unwrap();
            Ok(if p[0] == 0.0 && p[1] == 0.0 {
                MatrixD::identity(2, 2)
            } else {
                MatrixD::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5])
            })
        });
        let sample = cat.sample_initial_points(100, 5).unwrap();
        assert_relative_eq!(ess_sup_limsup(&c, &sample, 500).unwrap(), 2f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn strict_gap_when_maximum_sits_on_a_null_orbit() {
        let n = 4000;
        let (shift, c) = two_symbol(n + 64, diag(&[1.0, 0.25]), diag(&[3.0, 1.0]));
        let sample = shift.sample_initial_points(100, 9).unwrap();
        let ess = ess_sup_limsup(&c, &sample, n).unwrap();
        let lse = limsup_ess_sup(&c, &sample, n).unwrap();
        assert_relative_eq!(lse, 3f64.ln(), max_relative = 1e-12);
        assert!(lse - ess >= 0.2, "ess {ess}, lse {lse}");
    }

    #[test]
    fn maximizing_candidate_for_cat() {
        let cat = BaseSystem::cat_map();
        let d = crate::cocycle::derivative_cocycle(&cat).unwrap();
        let sample = cat.sample_initial_points(40, 3).unwrap();
        let a = observable_candidates(&cat, &sample, 50_000, 0.05).unwrap();
        let (idx, chi) = maximizing_observable(&cat, &a.candidates, &d, 1000, 1).unwrap();
        assert_eq!(idx, 0);
        assert!((chi - cat_log()).abs() < 1e-3);
        let id = Cocycle::identity(cat.clone(), 2);
        assert_eq!(maximizing_observable(&cat, &a.candidates, &id, 100, 1).unwrap().1, 0.0);
        assert!(maximizing_observable(&cat, &[], &id, 100, 1).is_err());
    }

    #[test]
    fn resampling_respects_cells() {
        let cat = BaseSystem::cat_map();
        let m = crate::measures::empirical_measure(&cat, &Point::torus(&[0.0, 0.0]), 10, 8).unwrap();
        for p in resample_measure(&cat, &m, 16, 0).unwrap() {
            let c = p.coords().unwrap();
            assert!(c[0] < 0.125 && c[1] < 0.125);
        }
        let shift = BaseSystem::full_shift(2, 32).unwrap();
        let x = shift.periodic_symbolic_point(&[1]).unwrap();
        let m = crate::measures::empirical_measure(&shift, &x, 10, 4).unwrap();
        for p in resample_measure(&shift, &m, 4, 0).unwrap() {
            let w = p.window().unwrap();
            assert!((0..4).all(|i| w.symbol(i) == Some(1)));
        }
    }

    #[test]
    fn scaling_shifts_exponents_and_keeps_argmax() {
        let (shift, c) = two_symbol(32, diag(&[2.0, 1.0]), diag(&[1.0, 3.0]));
        let orbits = shift.periodic_orbits(5, 1).unwrap();
        let (b, o) = beta_periodic(&c, &orbits).unwrap();
        let (bs, os) = beta_periodic(&c.scaled(5.0), &orbits).unwrap();
        assert_relative_eq!(bs, b + 5f64.ln(), max_relative = 1e-12);
        assert_eq!(o.encoding(), os.encoding());
    }

    #[test]
    fn exponents_along_converging_cycles_stay_below_the_limit() {
        // cycles 0^k 1 converge to the fixed point 0^∞ whose exponent is log 2
        let (shift, c) = two_symbol(64, diag(&[2.0, 1.0]), diag(&[1.0, 3.0]));
        let fixed = shift.orbit(&shift.periodic_symbolic_point(&[0]).unwrap(), 1).unwrap();
        let limit = periodic_exponent(&c, &fixed).unwrap();
        let tail: Vec<f64> = (20..30)
            .map(|k| {
                let mut w = vec![0u8; k];
                w.push(1);
                let o = shift.orbit(&shift.periodic_symbolic_point(&w).unwrap(), k + 1).unwrap();
                periodic_exponent(&c, &o).unwrap()
            })
            .collect();
        assert!(max_of(&tail) <= limit + 0.02);
    }

    #[test]
    fn theorem_check_on_constant_diagonal() {
        let cat = BaseSystem::cat_map();
        let c = Cocycle::constant(cat.clone(), diag(&[2.0, 0.5]));
        let cfg = ErgoptConfig {
            sample_size: 100,
            n: 2000,
            measure_n: 50_000,
            ..ErgoptConfig::default()
        };
        let r = theorem_41_check_with(&c, &cat, &cfg).unwrap();
        assert!(r.status.passed(), "{:?}", r.status);
        for v in [r.report.ess_sup_limsup, r.report.sup_observable, r.report.limsup_ess_sup] {
            assert_relative_eq!(v, 2f64.ln(), max_relative = 1e-9);
        }
    }

    #[test]
    fn identity_chain_is_refused_with_zero_values() {
        let id = BaseSystem::identity(2);
        let cfg = ErgoptConfig {
            sample_size: 100,
            n: 200,
            measure_n: 200,
            ..ErgoptConfig::default()
        };
        let r = corollary_62_check_with(&id, &cfg).unwrap();
        assert!(r.status.refused());
        assert_eq!(r.report.ess_sup_limsup, 0.0);
        assert_eq!(r.report.sup_observable, 0.0);
        assert_eq!(r.physical_count, 0);
    }
}
