//! Named built-in systems with their cocycles, sampling rules, cone fields
//! and center-unstable bundles.

use crate::base::{BaseSystem, Point};
use crate::cocycle::{derivative_cocycle, restrict_to_bundle, Cocycle, FrameField, MatrixD};
use crate::domination::{Cone, ConeField};
use crate::error::{LabError, Result};
use crate::expansion::center_unstable_cocycle;

/// Window half-width for symbolic points, enough for horizons up to 10⁴
/// plus lookahead.
pub const SHIFT_HORIZON: usize = 12_000;
/// Run length of each symbol in the alternating example's orbits.
pub const ALTERNATING_BLOCK: usize = 16;
const CONE_APERTURE: f64 = 0.5;

pub const NAMES: [&str; 9] = [
    "cat-map",
    "cat-product",
    "example-5-5",
    "identity",
    "isometric-bundle-example",
    "diagonal",
    "rotation",
    "alternating",
    "remark-4-2",
];

#[derive(Debug, Clone)]
enum Bundle {
    Tracked(usize),
    Frame(MatrixD),
    Absent,
}

#[derive(Debug, Clone)]
pub struct Example {
    pub name: &'static str,
    pub system: BaseSystem,
    pub cocycle: Cocycle,
    cone_core: Option<Vec<f64>>,
    bundle: Bundle,
}

fn diag(v: &[f64]) -> MatrixD {
    MatrixD::from_diagonal(&nalgebra::DVector::from_column_slice(v))
}

fn unit(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.iter().map(|a| a / norm).collect()
}

/// Expanding eigenvector `(1, λ − a)` of `[[a, b], [c, d]]` with `b = 1`.
fn expanding_direction(m: [[i64; 2]; 2]) -> [f64; 2] {
    let (a, d) = (m[0][0] as f64, m[1][1] as f64);
    let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) as f64;
    let tr = a + d;
    let lambda = (tr + (tr * tr - 4.0 * det).sqrt()) / 2.0;
    [1.0, lambda - a]
}

const CAT: [[i64; 2]; 2] = [[2, 1], [1, 1]];
const CAT_2: [[i64; 2]; 2] = [[3, 1], [2, 1]];

fn rows(m: [[i64; 2]; 2]) -> Vec<Vec<i64>> {
    m.iter().map(|r| r.to_vec()).collect()
}

impl Example {
    pub fn build(name: &str) -> Result<Self> {
        let (name, system, cocycle, cone_core, bundle) = match name {
            "cat-map" => {
                let s = BaseSystem::cat_map();
                let e = expanding_direction(CAT);
                (NAMES[0], s.clone(), derivative_cocycle(&s)?, Some(e.to_vec()), Bundle::Tracked(1))
            }
            "cat-product" => {
                let s = BaseSystem::torus_product(&[rows(CAT), rows(CAT_2)])?.with_name("cat-product");
                let e = expanding_direction(CAT_2);
                let core = vec![0.0, 0.0, e[0], e[1]];
                (NAMES[1], s.clone(), derivative_cocycle(&s)?, Some(core), Bundle::Tracked(2))
            }
            "example-5-5" => {
                let s = BaseSystem::skew_product(CAT)?;
                let e = expanding_direction(CAT);
                let core = vec![0.0, e[0], e[1]];
                (NAMES[2], s.clone(), derivative_cocycle(&s)?, Some(core), Bundle::Tracked(1))
            }
            "identity" => {
                let s = BaseSystem::identity(2);
                (NAMES[3], s.clone(), derivative_cocycle(&s)?, Some(vec![1.0, 0.0]), Bundle::Absent)
            }
            "isometric-bundle-example" => {
                let s = BaseSystem::identity(2).with_name("isometric-bundle-example");
                let frame = MatrixD::from_column_slice(2, 1, &[1.0, 0.0]);
                (NAMES[4], s.clone(), derivative_cocycle(&s)?, None, Bundle::Frame(frame))
            }
            "diagonal" => {
                let s = BaseSystem::cat_map();
                let c = Cocycle::constant(s.clone(), diag(&[2.0, 0.5])).labelled("diagonal");
                (NAMES[5], s, c, Some(vec![1.0, 0.0]), Bundle::Absent)
            }
            "rotation" => {
                let s = BaseSystem::cat_map();
                (NAMES[6], s.clone(), Cocycle::rotation(s, 0.7), Some(vec![1.0, 0.0]), Bundle::Absent)
            }
            "alternating" => {
                let s = BaseSystem::full_shift(2, SHIFT_HORIZON)?;
                let c = Cocycle::symbol_table(s.clone(), vec![diag(&[2.0, 0.5]), diag(&[0.5, 2.0])])?;
                (NAMES[7], s, c.labelled("alternating"), Some(vec![1.0, 0.0]), Bundle::Absent)
            }
            "remark-4-2" => {
                let s = BaseSystem::full_shift(2, SHIFT_HORIZON)?;
                let c = Cocycle::symbol_table(s.clone(), vec![diag(&[1.0, 0.25]), diag(&[3.0, 1.0])])?;
                (NAMES[8], s, c.labelled("remark-4-2"), Some(vec![1.0, 0.0]), Bundle::Absent)
            }
            other => return Err(LabError::InvalidParameter(format!("unknown built-in example {other:?}"))),
        };
        Ok(Self {
            name,
            system,
            cocycle,
            cone_core,
            bundle,
        })
    }

    /// Initial points: Lebesgue or Bernoulli samples, except for the
    /// alternating example whose points follow runs of
    /// [`ALTERNATING_BLOCK`] equal symbols.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<Point>> {
        if self.name != "alternating" {
            return self.system.sample_initial_points(count, seed);
        }
        let word: Vec<u8> = (0..SHIFT_HORIZON).map(|i| ((i / ALTERNATING_BLOCK) % 2) as u8).collect();
        (0..count as u64)
            .map(|i| self.system.point_with_prefix(&word, seed, i))
            .collect()
    }

    /// Constant one-dimensional cone around the expected dominant direction.
    pub fn cone_field(&self) -> Option<ConeField> {
        let core = self.cone_core.as_ref()?;
        let core = MatrixD::from_column_slice(core.len(), 1, &unit(core));
        Some(ConeField::uniform(Cone::new(core, CONE_APERTURE).ok()?))
    }

    /// The cocycle restricted to the center-unstable bundle.
    pub fn center_unstable(&self, check_points: &[Point]) -> Result<Cocycle> {
        match &self.bundle {
            Bundle::Tracked(k) => {
                let probe = check_points.first().ok_or(LabError::EmptySample)?;
                center_unstable_cocycle(&self.cocycle, *k, probe, check_points)
            }
            Bundle::Frame(f) => restrict_to_bundle(&self.cocycle, &FrameField::constant(f.clone()), check_points),
            Bundle::Absent => Err(LabError::Unsupported(format!(
                "{} has no center-unstable bundle",
                self.name
            ))),
        }
    }
}
