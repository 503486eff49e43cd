//! One function per operation, each turning a validated config into an
//! [`OpResult`].

use lyapunov_lab::domination::{domination_report, estimate_kappa, verify_cone_field, Cone, ConeField, CONE_MARGIN};
use lyapunov_lab::ergopt::{corollary_62_check_with, optimization_run, theorem_41_check_with, ErgoptConfig, OptimizationReport};
use lyapunov_lab::expansion::{center_unstable_cocycle, maximizing_support, theorem_a_search, COVERAGE_FLOOR};
use lyapunov_lab::measures::{classify_physical, empirical_measure, observable_candidates_with_resolution, weak_star_distance, MeasureSpace, PHYSICAL_FLOOR};
use lyapunov_lab::spectrum::{kozlovski_bound, lyapunov_spectrum, uniform_p_gap};
use lyapunov_lab::{CheckStatus, Cocycle, LabError, MatrixD, Point};
use toml::Value;

use crate::config::{ExperimentConfig, Setup, UsageError};
use crate::record::{floats, int, OpResult, Table};

const CONE_ORBIT: usize = 64;
const DEFAULT_APERTURE: f64 = 0.5;

pub fn run(op: &str, cfg: &ExperimentConfig) -> anyhow::Result<OpResult> {
    let setup = Setup::build(cfg)?;
    let mut out = OpResult::new(op);
    match op {
        "lyapunov" => lyapunov(&setup, cfg, &mut out)?,
        "dominate" => dominate(&setup, cfg, &mut out)?,
        "cones" => cones(&setup, cfg, &mut out)?,
        "kappa" => kappa(&setup, cfg, &mut out)?,
        "empirical" => empirical(&setup, cfg, &mut out)?,
        "observables" => observables(&setup, cfg, &mut out)?,
        "ergopt" => {
            let run = optimization_run(&setup.cocycle, &setup.system, &ergopt_config(cfg))?;
            report_values(&run.report, &mut out);
        }
        "theorem-4-1" => {
            let r = theorem_41_check_with(&setup.cocycle, &setup.system, &ergopt_config(cfg))?;
            report_values(&r.report, &mut out);
            out.set_status(&r.status);
        }
        "theorem-a" => theorem_a(&setup, cfg, &mut out)?,
        "corollary-6-2" => {
            let r = corollary_62_check_with(&setup.system, &ergopt_config(cfg))?;
            report_values(&r.report, &mut out);
            out.set("physical_count", int(r.physical_count));
            if let Some(v) = r.sup_physical {
                out.set("sup_physical", v);
            }
            out.set_status(&r.status);
        }
        "entropy" => {
            let p = &cfg.params;
            let sample = setup.sample(p.sample_size.unwrap_or(64), cfg.seed)?;
            let (integral, pointwise) = kozlovski_bound(&setup.system, &sample, p.n.unwrap_or(1000))?;
            out.set("integral_estimate", integral);
            out.set("pointwise_estimate", pointwise);
        }
        other => return Err(UsageError(format!("unknown operation {other:?}")).into()),
    }
    Ok(out)
}

fn lyapunov(setup: &Setup, cfg: &ExperimentConfig, out: &mut OpResult) -> anyhow::Result<()> {
    let p = &cfg.params;
    let n = p.n.unwrap_or(10_000);
    let sample = setup.sample(p.sample_size.unwrap_or(1), cfg.seed)?;
    let mut table = Table::new("spectra", &["point", "i", "exponent", "residual"]);
    let mut mean = vec![0.0; setup.cocycle.dim()];
    for (k, x) in sample.iter().enumerate() {
        let s = lyapunov_spectrum(&setup.cocycle, x, n)?;
        for (i, (e, r)) in s.exponents.iter().zip(&s.residuals).enumerate() {
            table.push(vec![int(k), int(i + 1), Value::Float(*e), Value::Float(*r)]);
            mean[i] += e / sample.len() as f64;
        }
        if k == 0 {
            out.set("exponents", floats(&s.exponents));
        }
    }
    out.set("mean_exponents", floats(&mean));
    out.set("n", int(n));
    out.tables.push(table);
    Ok(())
}

fn dominate(setup: &Setup, cfg: &ExperimentConfig, out: &mut OpResult) -> anyhow::Result<()> {
    let p = &cfg.params;
    let n_max = p.n_max.unwrap_or(64);
    if n_max < 32 {
        return Err(UsageError("dominate needs params.n_max ≥ 32".into()).into());
    }
    let sample = setup.sample(p.sample_size.unwrap_or(8), cfg.seed)?;
    let r = domination_report(&setup.cocycle, &sample, p.index.unwrap_or(1), n_max)?;
    out.set("index", int(r.index));
    out.set("tau", r.tau);
    out.set("c", r.c);
    out.set("r_squared", r.r_squared);
    out.set("verdict", r.verdict);
    let mut table = Table::new("log_ratios", &["n", "worst_log_ratio"]);
    for (n, v) in r.checkpoints.iter().zip(&r.worst_log_ratio) {
        table.push(vec![int(*n), Value::Float(*v)]);
    }
    out.tables.push(table);
    // perturbation estimate of the same gap, only when asked for
    if let Some(trials) = p.trials {
        let eps = p.epsilon.unwrap_or(0.01);
        let gap = uniform_p_gap(&setup.cocycle, &sample, r.index, eps, trials, p.n.unwrap_or(1000), cfg.seed)?;
        out.set("p_gap_baseline", gap.baseline_gap);
        out.set("p_gap_beta", gap.beta);
        out.set("p_gap_min", gap.min_gap);
    }
    Ok(())
}

fn cone_field(setup: &Setup, cfg: &ExperimentConfig) -> anyhow::Result<ConeField> {
    let aperture = cfg.params.aperture.unwrap_or(DEFAULT_APERTURE);
    if let Some(core) = &cfg.params.cone_core {
        if core.len() != setup.cocycle.dim() {
            return Err(UsageError(format!("params.cone_core needs {} entries", setup.cocycle.dim())).into());
        }
        let core = MatrixD::from_column_slice(core.len(), 1, core);
        return Ok(ConeField::uniform(Cone::new(core, aperture)?));
    }
    match &setup.example {
        Some(ex) if setup.example_cocycle && cfg.params.aperture.is_none() => ex
            .cone_field()
            .ok_or_else(|| UsageError(format!("{} has no built-in cone field; set params.cone_core", ex.name)).into()),
        _ => Err(UsageError("set params.cone_core for this system".into()).into()),
    }
}

fn cones(setup: &Setup, cfg: &ExperimentConfig, out: &mut OpResult) -> anyhow::Result<()> {
    let p = &cfg.params;
    let field = cone_field(setup, cfg)?;
    let sample = setup.sample(p.sample_size.unwrap_or(8), cfg.seed)?;
    let mut support: Vec<Point> = Vec::new();
    for x in &sample {
        support.extend_from_slice(setup.system.orbit(x, CONE_ORBIT)?.points());
    }
    let check = verify_cone_field(&setup.cocycle, &field, &support, CONE_MARGIN)?;
    out.set("pass", check.pass);
    out.set("min_slack", check.min_slack);
    out.set("checked_points", int(support.len()));
    if check.pass {
        let k = estimate_kappa(&setup.cocycle, &sample, p.m_max.unwrap_or(16), p.n_max.unwrap_or(16))?;
        out.set("kappa", k.kappa);
    }
    Ok(())
}

fn kappa(setup: &Setup, cfg: &ExperimentConfig, out: &mut OpResult) -> anyhow::Result<()> {
    let p = &cfg.params;
    let sample = setup.sample(p.sample_size.unwrap_or(8), cfg.seed)?;
    let k = estimate_kappa(&setup.cocycle, &sample, p.m_max.unwrap_or(16), p.n_max.unwrap_or(16))?;
    out.set("kappa", k.kappa);
    out.set("log_kappa", k.log_kappa);
    out.set("argmin", Value::Array(vec![int(k.argmin.0), int(k.argmin.1), int(k.argmin.2)]));
    out.set("success", k.success);
    Ok(())
}

fn resolution(setup: &Setup, cfg: &ExperimentConfig) -> usize {
    cfg.params.resolution.unwrap_or_else(|| MeasureSpace::default_resolution(&setup.system))
}

fn empirical(setup: &Setup, cfg: &ExperimentConfig, out: &mut OpResult) -> anyhow::Result<()> {
    let p = &cfg.params;
    let n = p.n.unwrap_or(10_000);
    let res = resolution(setup, cfg);
    let sample = setup.sample(p.sample_size.unwrap_or(4), cfg.seed)?;
    let measures = sample
        .iter()
        .map(|x| empirical_measure(&setup.system, x, n, res))
        .collect::<lyapunov_lab::Result<Vec<_>>>()?;
    let mut weights = Table::new("weights", &["point", "cell", "weight"]);
    for (k, mu) in measures.iter().enumerate() {
        for (cell, w) in &mu.weights {
            weights.push(vec![int(k), int(*cell), Value::Float(*w)]);
        }
    }
    let mut distances = Table::new("weak_star_distances", &["a", "b", "distance"]);
    for a in 0..measures.len() {
        for b in a + 1..measures.len() {
            distances.push(vec![int(a), int(b), Value::Float(weak_star_distance(&measures[a], &measures[b])?)]);
        }
    }
    out.set("n", int(n));
    out.set("resolution", int(res));
    out.tables.push(weights);
    out.tables.push(distances);
    Ok(())
}

fn observables(setup: &Setup, cfg: &ExperimentConfig, out: &mut OpResult) -> anyhow::Result<()> {
    let p = &cfg.params;
    let n = p.n.unwrap_or(10_000);
    let sample = setup.sample(p.sample_size.unwrap_or(100), cfg.seed)?;
    let a = observable_candidates_with_resolution(&setup.system, &sample, n, p.epsilon.unwrap_or(0.05), resolution(setup, cfg))?;
    let part = classify_physical(&a, PHYSICAL_FLOOR)?;
    out.set("candidates", int(a.candidates.len()));
    out.set("coverage", a.coverage);
    out.set("physical", int(part.physical.len()));
    out.set("physical_coverage", part.physical_coverage);
    let mut table = Table::new(
        "candidates",
        &["index", "basin_mass", "basin_low", "basin_high", "exact_basin_mass", "physical"],
    );
    for (i, c) in a.candidates.iter().enumerate() {
        table.push(vec![
            int(i),
            Value::Float(c.basin_mass),
            Value::Float(c.basin_interval.0),
            Value::Float(c.basin_interval.1),
            Value::Float(c.exact_basin_mass),
            Value::Boolean(c.physical),
        ]);
    }
    out.tables.push(table);
    Ok(())
}

fn ergopt_config(cfg: &ExperimentConfig) -> ErgoptConfig {
    let p = &cfg.params;
    let d = ErgoptConfig::default();
    let n = p.n.unwrap_or(d.n);
    ErgoptConfig {
        sample_size: p.sample_size.unwrap_or(d.sample_size),
        n,
        measure_n: p.measure_n.unwrap_or(n),
        epsilon: p.epsilon.unwrap_or(d.epsilon),
        chi_horizon: p.chi_horizon.unwrap_or(d.chi_horizon),
        domination_horizon: p.n_max.unwrap_or(d.domination_horizon),
        tolerance: p.tolerance.unwrap_or(d.tolerance),
        seed: cfg.seed,
    }
}

fn report_values(r: &OptimizationReport, out: &mut OpResult) {
    out.set("ess_sup_limsup", r.ess_sup_limsup);
    out.set("limsup_ess_sup", r.limsup_ess_sup);
    out.set("sup_observable", r.sup_observable);
    out.set("beta_pointwise", r.beta_pointwise);
    out.set("maximizing_candidate", int(r.maximizing_candidate));
    out.set("candidate_count", int(r.candidate_count));
    if let Some((beta, orbit)) = &r.beta_periodic {
        out.set("beta_periodic", *beta);
        out.set("beta_periodic_orbit", floats(orbit));
    }
}

/// Hypotheses that make the bundle unavailable are a refusal, not an error.
fn bundle_refusal(e: &LabError) -> bool {
    matches!(
        e,
        LabError::Unsupported(_) | LabError::FrameNotInvariant { .. } | LabError::NonConvergence { .. }
    )
}

fn center_unstable(setup: &Setup, cfg: &ExperimentConfig, sample: &[Point]) -> anyhow::Result<Result<Cocycle, String>> {
    let built = match (&setup.example, cfg.params.bundle_dim) {
        (_, Some(k)) => center_unstable_cocycle(&setup.cocycle, k, &sample[0], sample),
        (Some(ex), None) if setup.example_cocycle => ex.center_unstable(sample),
        _ => return Err(UsageError("set params.bundle_dim for this system".into()).into()),
    };
    match built {
        Ok(c) => Ok(Ok(c)),
        Err(e) if bundle_refusal(&e) => Ok(Err(e.to_string())),
        Err(e) => Err(e.into()),
    }
}

fn theorem_a(setup: &Setup, cfg: &ExperimentConfig, out: &mut OpResult) -> anyhow::Result<()> {
    let p = &cfg.params;
    let n = p.n.unwrap_or(10_000);
    let sample = setup.sample(p.sample_size.unwrap_or(500), cfg.seed)?;
    let cu = match center_unstable(setup, cfg, &sample)? {
        Ok(c) => c,
        Err(reason) => {
            out.set_status(&CheckStatus::Refused(format!("no center-unstable bundle: {reason}")));
            return Ok(());
        }
    };
    let support = if cu.dim() >= 2 {
        let eps = p.epsilon.unwrap_or(0.05);
        maximizing_support(&setup.system, &cu, &sample, p.measure_n.unwrap_or(n), eps, p.chi_horizon.unwrap_or(1000), cfg.seed)?
    } else {
        sample[..sample.len().min(64)].to_vec()
    };
    let r = theorem_a_search(&cu, &sample, &support, p.k_max.unwrap_or(5), n, p.coverage_floor.unwrap_or(COVERAGE_FLOOR))?;
    out.set("bundle_dim", int(cu.dim()));
    if let Some(k) = r.k {
        out.set("k", int(k));
    }
    if let Some(l) = r.lambda {
        out.set("lambda", l);
    }
    out.set("coverage", r.coverage);
    out.set("worst_positivity", r.positivity.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    let mut table = Table::new("k_scan", &["k", "lambda", "coverage"]);
    for row in &r.rows {
        table.push(vec![int(row.k), Value::Float(row.lambda), Value::Float(row.coverage)]);
    }
    out.tables.push(table);
    out.set_status(&r.status);
    Ok(())
}
