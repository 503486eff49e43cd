//! The ten acceptance criteria, one pass/fail line each.
//!
//! Run alone with `cargo test -p lyapunov-lab --test acceptance`.

mod common;

use std::time::{Duration, Instant};

use lyapunov_lab::catalog::{Example, NAMES};
use lyapunov_lab::domination::{almost_additivity_check, domination_report, estimate_kappa, verify_cone_field, PotentialSeries, CONE_MARGIN};
use lyapunov_lab::ergopt::{corollary_62_check, optimization_run, theorem_41_check, ErgoptConfig};
use lyapunov_lab::expansion::{theorem_a_search, COVERAGE_FLOOR};
use lyapunov_lab::measures::{classify_physical, observable_candidates, PHYSICAL_FLOOR};
use lyapunov_lab::spectrum::{kozlovski_bound, lyapunov_spectrum, uniform_p_gap};
use lyapunov_lab::{BaseSystem, MatrixD, Result};

type Outcome = Result<(bool, String)>;
type Criterion = (&'static str, fn() -> Outcome);

fn cat_log() -> f64 {
    ((3.0 + 5f64.sqrt()) / 2.0).ln()
}

/// Oracle: eigenvalues of the cat matrix, from the characteristic
/// polynomial rather than the closed form.
fn cat_eigen_logs() -> (f64, f64) {
    let m = MatrixD::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]);
    let ev = m.symmetric_eigenvalues();
    let (hi, lo) = (ev.max(), ev.min());
    (hi.ln(), lo.abs().ln())
}

fn criterion_1() -> Outcome {
    let ex = Example::build("cat-map")?;
    let (hi, lo) = cat_eigen_logs();
    let mut worst: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    for seed in 0..5 {
        let x = ex.sample(1, seed)?.remove(0);
        let t = Instant::now();
        let s = lyapunov_spectrum(&ex.cocycle, &x, 10_000)?;
        slowest = slowest.max(t.elapsed());
        worst = worst.max((s.exponents[0] - hi).abs()).max((s.exponents[1] - lo).abs());
    }
    let ok = worst < 1e-3 && slowest < Duration::from_secs(1);
    Ok((ok, format!("max error {worst:.2e} over 5 seeds, slowest run {slowest:.2?}")))
}

fn criterion_2() -> Outcome {
    let diag = Example::build("diagonal")?;
    let pts = diag.sample(8, 1)?;
    let r = domination_report(&diag.cocycle, &pts, 1, 64)?;
    // oracle: σ₂/σ₁ of diag(2, 1/2)^n is (1/4)^n exactly
    let tau_oracle = 0.5 / 2.0;
    let rot = Example::build("rotation")?;
    let q = domination_report(&rot.cocycle, &rot.sample(8, 1)?, 1, 64)?;
    let ok = r.verdict
        && (0.249..=0.251).contains(&r.tau)
        && (r.tau - tau_oracle).abs() < 1e-3
        && (0.99..=1.01).contains(&r.c)
        && !q.verdict;
    Ok((ok, format!("diagonal τ = {:.4}, C = {:.4}, verdict {}; rotation verdict {}", r.tau, r.c, r.verdict, q.verdict)))
}

fn criterion_3() -> Outcome {
    let mut lines = Vec::new();
    let mut disagreements = 0;
    for name in NAMES {
        let ex = Example::build(name)?;
        if ex.cocycle.dim() < 2 {
            continue;
        }
        let pts = ex.sample(8, 3)?;
        let gap = uniform_p_gap(&ex.cocycle, &pts, 1, 0.01, 16, 1000, 3)?;
        let dom = domination_report(&ex.cocycle, &pts, 1, 64)?;
        let gapped = gap.min_gap > 0.05;
        if gapped != dom.verdict {
            disagreements += 1;
        }
        lines.push(format!("{name}: β {:.3}/{}", gap.min_gap, if dom.verdict { "dom" } else { "no-dom" }));
    }
    Ok((disagreements == 0, format!("{disagreements} disagreements [{}]", lines.join(", "))))
}

fn criterion_4() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for name in NAMES {
        let ex = Example::build(name)?;
        let Some(cones) = ex.cone_field() else { continue };
        let pts = ex.sample(8, 4)?;
        // cones are checked along the first 64 steps of each orbit
        let mut support = Vec::new();
        for x in &pts {
            support.extend_from_slice(ex.system.orbit(x, 64)?.points());
        }
        if !verify_cone_field(&ex.cocycle, &cones, &support, CONE_MARGIN)?.pass {
            continue;
        }
        let k1 = estimate_kappa(&ex.cocycle, &pts, 16, 16)?.kappa;
        let k2 = estimate_kappa(&ex.cocycle, &pts, 32, 32)?.kappa;
        let stable = (k2 - k1).abs() <= 0.1 * k1;
        ok &= k1 >= 1e-3 && k2 >= 1e-3 && stable;
        lines.push(format!("{name}: κ {k1:.3}→{k2:.3}"));
    }
    let alt = Example::build("alternating")?;
    let pts = alt.sample(4, 4)?;
    let kappa = estimate_kappa(&alt.cocycle, &pts, 16, 16)?.kappa;
    // oracle: after 16 steps of diag(2, 1/2) and 16 of diag(1/2, 2) the
    // product is the identity while each half has norm 2^16
    let collapse = 4f64.powi(-16);
    let series = PotentialSeries::operator_norms(&alt.cocycle, &pts[0], 32)?;
    let mut additive_for = Vec::new();
    for c in [1.0, 10.0, 1e2, 1e3, 1e4, 1e5, 1e6] {
        if almost_additivity_check(&series, c)? {
            additive_for.push(c);
        }
    }
    ok &= kappa < 1e-8 && kappa <= collapse * (1.0 + 1e-9) && additive_for.is_empty();
    lines.push(format!("alternating: κ {kappa:.2e}, almost-additive for C in {additive_for:?}"));
    Ok((ok, lines.join(", ")))
}

fn criterion_5() -> Outcome {
    let cat = Example::build("cat-map")?;
    let a = observable_candidates(&cat.system, &cat.sample(500, 5)?, 100_000, 0.05)?;
    let cat_ok = a.candidates.len() == 1 && a.candidates[0].basin_mass >= 0.99 && a.candidates[0].physical;
    let cat_mass = a.candidates.first().map_or(0.0, |c| c.basin_mass);

    let skew = Example::build("example-5-5")?;
    let b = observable_candidates(&skew.system, &skew.sample(500, 5)?, 20_000, 0.05)?;
    let pb = classify_physical(&b, PHYSICAL_FLOOR)?;
    let skew_ok = b.candidates.len() >= 20 && pb.physical.is_empty() && pb.observable_coverage >= 0.99;

    let id = Example::build("identity")?;
    let c = observable_candidates(&id.system, &id.sample(200, 5)?, 100, 0.05)?;
    let pc = classify_physical(&c, PHYSICAL_FLOOR)?;
    let id_ok = pc.physical.is_empty();
    Ok((
        cat_ok && skew_ok && id_ok,
        format!(
            "cat: {} candidate(s), basin mass {cat_mass:.3}; example-5-5: {} candidates, {} physical, coverage {:.3}; identity: {} physical of {}",
            a.candidates.len(),
            b.candidates.len(),
            pb.physical.len(),
            pb.observable_coverage,
            pc.physical.len(),
            c.candidates.len()
        ),
    ))
}

fn criterion_6() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for name in ["cat-map", "example-5-5"] {
        let ex = Example::build(name)?;
        let r = theorem_41_check(&ex.cocycle, &ex.system, 500, 10_000, 6)?;
        let rep = &r.report;
        ok &= r.status.passed();
        lines.push(format!(
            "{name}: ess-sup-limsup {:.4}, sup observable {:.4}, limsup-ess-sup {:.4} ({})",
            rep.ess_sup_limsup,
            rep.sup_observable,
            rep.limsup_ess_sup,
            r.status.label()
        ));
    }
    let ex = Example::build("remark-4-2")?;
    let cfg = ErgoptConfig {
        sample_size: 300,
        n: 4000,
        measure_n: 4000,
        seed: 6,
        ..ErgoptConfig::default()
    };
    let rep = optimization_run(&ex.cocycle, &ex.system, &cfg)?.report;
    // oracle: the fixed point 1^∞ carries diag(3, 1)^n, so limsup-ess-sup is log 3
    let oracle = 3f64.ln();
    let gap = rep.limsup_ess_sup - rep.ess_sup_limsup.max(rep.sup_observable);
    ok &= gap >= 0.2 && (rep.limsup_ess_sup - oracle).abs() < 1e-9;
    lines.push(format!(
        "remark-4-2: limsup-ess-sup {:.4} exceeds ess-sup-limsup {:.4} and sup observable {:.4} by {gap:.3}",
        rep.limsup_ess_sup, rep.ess_sup_limsup, rep.sup_observable
    ));
    Ok((ok, lines.join("; ")))
}

fn criterion_7() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let half_rate = cat_log() / 2.0;
    let start = Instant::now();
    for name in ["cat-map", "example-5-5"] {
        let ex = Example::build(name)?;
        let pts = ex.sample(500, 7)?;
        let cu = ex.center_unstable(&pts)?;
        let r = theorem_a_search(&cu, &pts, &pts[..64], 5, 10_000, COVERAGE_FLOOR)?;
        let lambda = r.lambda.unwrap_or(0.0);
        ok &= r.status.passed() && r.k == Some(1) && (lambda - half_rate).abs() <= 0.2 * half_rate && r.coverage >= 0.99;
        lines.push(format!("{name}: K = {:?}, λ = {lambda:.4}, coverage {:.3}", r.k, r.coverage));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(30);
    Ok((ok, format!("{} in {elapsed:.2?}", lines.join("; "))))
}

fn criterion_8() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for name in ["cat-map", "cat-product"] {
        let ex = Example::build(name)?;
        let r = corollary_62_check(&ex.system, 500, 10_000, 8)?;
        let rep = &r.report;
        let phy = r.sup_physical.unwrap_or(f64::NAN);
        let spread = [rep.ess_sup_limsup, rep.sup_observable, phy];
        let width = spread.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - spread.iter().cloned().fold(f64::INFINITY, f64::min);
        ok &= r.status.passed() && width <= 0.05;
        lines.push(format!(
            "{name}: {:.4} / {:.4} / {phy:.4} ({})",
            rep.ess_sup_limsup,
            rep.sup_observable,
            r.status.label()
        ));
    }
    Ok((ok, lines.join("; ")))
}

fn criterion_9() -> Outcome {
    let cat = BaseSystem::cat_map();
    let (integral, pointwise) = kozlovski_bound(&cat, &cat.sample_initial_points(64, 9)?, 1000)?;
    let id = BaseSystem::identity(2);
    let (zero, zero_pw) = kozlovski_bound(&id, &id.sample_initial_points(16, 9)?, 1000)?;
    let ok = (0.94..=0.99).contains(&integral) && integral >= pointwise - 0.05 && zero == 0.0 && zero_pw == 0.0;
    Ok((ok, format!("cat integral {integral:.4} (pointwise {pointwise:.4}), h_top {:.4}; identity {zero}", cat_log())))
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    for suite in common::SUITES {
        if let Err(e) = common::run_suite(suite) {
            failures.push(format!("{suite}: {e}"));
        }
    }
    let elapsed = start.elapsed();
    let ok = failures.is_empty() && elapsed < Duration::from_secs(300);
    Ok((
        ok,
        format!("{} suites × {} cases in {elapsed:.2?} {}", common::SUITES.len(), common::CASES, failures.join("; ")),
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("cat-map spectrum", criterion_1),
        ("domination detector", criterion_2),
        ("gap vs domination", criterion_3),
        ("cones and kappa", criterion_4),
        ("observable measures", criterion_5),
        ("ergodic-optimization sandwich", criterion_6),
        ("block expansion search", criterion_7),
        ("corollary chain", criterion_8),
        ("entropy bound", criterion_9),
        ("property suites", criterion_10),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let suite_start = Instant::now();
    let mut failed = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "criterion {:>2} {} {title}: {detail} [{:.2?}]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed()
        );
    }
    println!("acceptance: {failed} failed, total {:.2?}", suite_start.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}
