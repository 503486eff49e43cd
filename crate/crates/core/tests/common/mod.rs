//! Shared generators and invariant predicates for the property suites and
//! the acceptance runner.
#![allow(dead_code)]

use lyapunov_lab::cocycle::{derivative_cocycle, product};
use lyapunov_lab::measures::{empirical_measure, weak_star_distance};
use lyapunov_lab::spectrum::lyapunov_spectrum;
use lyapunov_lab::{BaseSystem, Cocycle, MatrixD, Point};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

pub const CASES: u32 = 1000;

pub fn config() -> Config {
    Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    }
}

/// Matrices with entries in [-2, 2], shifted by `2I` when nearly singular.
fn invertible(d: usize, entries: &[f64]) -> MatrixD {
    let m = MatrixD::from_row_slice(d, d, &entries[..d * d]);
    if m.determinant().abs() < 0.1 {
        m + MatrixD::identity(d, d) * 2.5
    } else {
        m
    }
}

/// A cocycle drawn from the built-in families plus random generators.
#[derive(Debug, Clone)]
pub struct CocycleCase {
    pub family: u8,
    pub entries: Vec<f64>,
    pub angle: f64,
}

pub fn cocycle_case() -> impl Strategy<Value = CocycleCase> {
    (0u8..6, prop::collection::vec(-2.0f64..2.0, 18), 0.0f64..std::f64::consts::TAU).prop_map(|(family, entries, angle)| CocycleCase {
        family,
        entries,
        angle,
    })
}

impl CocycleCase {
    pub fn build(&self) -> Cocycle {
        match self.family {
            0 => derivative_cocycle(&BaseSystem::cat_map()).unwrap(),
            1 => derivative_cocycle(&BaseSystem::skew_product([[2, 1], [1, 1]]).unwrap()).unwrap(),
            2 => Cocycle::constant(BaseSystem::translation(&[0.618_034, 0.414_214]), invertible(3, &self.entries)),
            3 => Cocycle::rotation(BaseSystem::cat_map(), self.angle),
            4 => {
                let shift = BaseSystem::full_shift(2, 256).unwrap();
                let a = invertible(2, &self.entries[..4]);
                let b = invertible(2, &self.entries[4..8]);
                Cocycle::symbol_table(shift, vec![a, b]).unwrap()
            }
            _ => {
                let base = BaseSystem::cat_map();
                let a = invertible(2, &self.entries[..4]);
                let b = invertible(2, &self.entries[4..8]);
                Cocycle::half_split(base, a, b)
            }
        }
    }
}

fn rel_close(a: &MatrixD, b: &MatrixD, tol: f64) -> bool {
    (a - b).amax() <= tol * b.amax().max(1e-300)
}

pub fn subadditivity(case: &CocycleCase, seed: u64, m: usize, n: usize) -> Result<(), TestCaseError> {
    let c = case.build();
    let x = c.base().sample_point(seed, 0);
    let y = c.base().iterate(&x, n as i64).unwrap();
    let whole = product(&c, &x, m + n).unwrap().log_norm();
    let head = product(&c, &x, n).unwrap().log_norm();
    let tail = product(&c, &y, m).unwrap().log_norm();
    prop_assert!(whole <= head + tail + 1e-8, "{whole} > {head} + {tail}");
    Ok(())
}

pub fn cocycle_identity(case: &CocycleCase, seed: u64, m: usize, n: usize) -> Result<(), TestCaseError> {
    let c = case.build();
    let x = c.base().sample_point(seed, 0);
    let y = c.base().iterate(&x, n as i64).unwrap();
    let whole = product(&c, &x, m + n).unwrap().reconstruct();
    let split = product(&c, &y, m).unwrap().reconstruct() * product(&c, &x, n).unwrap().reconstruct();
    prop_assert!(rel_close(&whole, &split, 1e-6), "{whole} vs {split}");
    Ok(())
}

pub fn metric_axioms(system: u8, seeds: [u64; 3], n: usize) -> Result<(), TestCaseError> {
    let base = match system {
        0 => BaseSystem::cat_map(),
        1 => BaseSystem::skew_product([[2, 1], [1, 1]]).unwrap(),
        2 => BaseSystem::translation(&[0.618_034]),
        _ => BaseSystem::full_shift(3, 512).unwrap(),
    };
    let resolution = lyapunov_lab::measures::MeasureSpace::default_resolution(&base);
    let mu: Vec<_> = seeds
        .iter()
        .map(|&s| empirical_measure(&base, &base.sample_point(s, 0), n, resolution).unwrap())
        .collect();
    let d = |i: usize, j: usize| weak_star_distance(&mu[i], &mu[j]).unwrap();
    prop_assert!(d(0, 0).abs() <= 1e-12);
    prop_assert!(d(0, 1) >= 0.0);
    prop_assert!((d(0, 1) - d(1, 0)).abs() <= 1e-12);
    prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-12);
    Ok(())
}

/// Same seed, same numbers, whatever the thread count.
pub fn determinism(case: &CocycleCase, seed: u64) -> Result<(), TestCaseError> {
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let c = case.build();
                let pts: Vec<Point> = c.base().sample_initial_points(4, seed).unwrap();
                let keys: Vec<String> = pts.iter().map(|p| format!("{p:?}")).collect();
                let spectrum = lyapunov_spectrum(&c, &pts[0], 120).unwrap().exponents;
                let ess = lyapunov_lab::ergopt::beta_pointwise(&c, &pts, 120).unwrap();
                (keys, spectrum, ess)
            })
    };
    let (p1, s1, e1) = run(1);
    let (p4, s4, e4) = run(4);
    prop_assert_eq!(p1, p4);
    prop_assert_eq!(s1.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), s4.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    prop_assert_eq!(e1.to_bits(), e4.to_bits());
    Ok(())
}

/// Run one suite outside the `proptest!` macro; the acceptance runner
/// uses this to time all four.
pub fn run_suite(name: &str) -> Result<(), String> {
    let mut runner = TestRunner::new(config());
    let outcome = match name {
        "subadditivity" => runner.run(&(cocycle_case(), any::<u64>(), 1usize..50, 1usize..50), |(c, s, m, n)| {
            subadditivity(&c, s, m, n)
        }).map_err(|e| e.to_string()),
        "cocycle-identity" => runner.run(&(cocycle_case(), any::<u64>(), 1usize..50, 1usize..50), |(c, s, m, n)| {
            cocycle_identity(&c, s, m, n)
        }).map_err(|e| e.to_string()),
        "metric-axioms" => runner.run(&(0u8..4, any::<[u64; 3]>(), 1usize..400), |(sys, seeds, n)| {
            metric_axioms(sys, seeds, n)
        }).map_err(|e| e.to_string()),
        "determinism" => runner
            .run(&(cocycle_case(), any::<u64>()), |(c, s)| determinism(&c, s))
            .map_err(|e| e.to_string()),
        other => return Err(format!("unknown suite {other}")),
    };
    outcome
}

pub const SUITES: [&str; 4] = ["subadditivity", "cocycle-identity", "metric-axioms", "determinism"];
