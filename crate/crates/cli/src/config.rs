//! Experiment configuration: parsing, validation and construction of the
//! system and cocycle it names.

use std::path::{Path, PathBuf};

use anyhow::Context;
use lyapunov_lab::catalog::{Example, NAMES};
use lyapunov_lab::cocycle::derivative_cocycle;
use lyapunov_lab::{BaseSystem, Cocycle, MatrixD};
use serde::{Deserialize, Serialize};

pub const OPERATIONS: [&str; 11] = [
    "lyapunov",
    "dominate",
    "cones",
    "kappa",
    "empirical",
    "observables",
    "ergopt",
    "theorem-4-1",
    "theorem-a",
    "corollary-6-2",
    "entropy",
];

/// A configuration problem the user must fix (exit status 4).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(msg: impl Into<String>) -> anyhow::Result<T> {
    Err(UsageError(msg.into()).into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Operation to run; the subcommand fills it in when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operation: Option<String>,
    pub seed: u64,
    pub system: SystemSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cocycle: Option<CocycleSpec>,
    #[serde(default)]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemSpec {
    /// A built-in example: its system, cocycle, cones and bundle.
    Named(String),
    Custom(CustomSystem),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CustomSystem {
    ToralAutomorphism { matrix: Vec<Vec<i64>> },
    TorusAffine { matrix: Vec<Vec<i64>>, shift: Vec<f64> },
    SkewProduct { fiber: [[i64; 2]; 2] },
    TorusProduct { blocks: Vec<Vec<Vec<i64>>> },
    Identity { dim: usize },
    Translation { shift: Vec<f64> },
    FullShift { alphabet: u8, horizon: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CocycleSpec {
    Derivative,
    Constant { matrix: Vec<Vec<f64>> },
    Rotation { angle: f64 },
    /// One matrix per symbol of a full shift.
    Table { matrices: Vec<Vec<Vec<f64>>> },
    /// `left` on `x₀ < 1/2`, `right` otherwise.
    HalfSplit { left: Vec<Vec<f64>>, right: Vec<Vec<f64>> },
}

/// Numeric parameters. Every field is optional; operations fall back to the
/// defaults documented in `docs/config.md`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measure_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi_horizon: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coverage_floor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aperture: Option<f64>,
    /// Core direction of a constant one-dimensional cone.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cone_core: Option<Vec<f64>>,
    /// Dimension of the tracked center-unstable bundle for custom systems.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bundle_dim: Option<usize>,
}

fn check_range<T: PartialOrd + std::fmt::Display + Copy>(name: &str, v: Option<T>, lo: T, hi: T) -> anyhow::Result<()> {
    match v {
        Some(x) if !(x >= lo && x <= hi) => usage(format!("params.{name} = {x} outside [{lo}, {hi}]")),
        _ => Ok(()),
    }
}

fn check_open(name: &str, v: Option<f64>, lo: f64, hi: f64) -> anyhow::Result<()> {
    match v {
        Some(x) if !(x > lo && x <= hi) => usage(format!("params.{name} = {x} outside ({lo}, {hi}]")),
        _ => Ok(()),
    }
}

impl Params {
    pub fn validate(&self) -> anyhow::Result<()> {
        check_range("n", self.n, 1, 10_000_000)?;
        check_range("sample_size", self.sample_size, 1, 100_000)?;
        check_open("epsilon", self.epsilon, 0.0, 1.0)?;
        check_range("resolution", self.resolution, 1, 256)?;
        check_open("tolerance", self.tolerance, 0.0, 1.0)?;
        check_range("k_max", self.k_max, 1, 1000)?;
        check_range("index", self.index, 1, 64)?;
        check_range("n_max", self.n_max, 2, 4096)?;
        check_range("m_max", self.m_max, 2, 1024)?;
        check_range("trials", self.trials, 1, 1024)?;
        check_range("measure_n", self.measure_n, 1, 10_000_000)?;
        check_range("chi_horizon", self.chi_horizon, 1, 10_000_000)?;
        check_range("coverage_floor", self.coverage_floor, 0.0, 1.0)?;
        check_open("aperture", self.aperture, 0.0, std::f64::consts::FRAC_PI_2 - 1e-12)?;
        check_range("bundle_dim", self.bundle_dim, 1, 64)?;
        if let Some(core) = &self.cone_core {
            if core.is_empty() || core.iter().all(|v| *v == 0.0) || core.iter().any(|v| !v.is_finite()) {
                return usage("params.cone_core must be a nonzero finite vector");
            }
        }
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).map_err(|e| match e.downcast::<UsageError>() {
            Ok(u) => UsageError(format!("{}: {u}", path.display())).into(),
            Err(e) => e,
        })
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = match toml::from_str(text) {
            Ok(c) => c,
            Err(e) => return usage(format!("malformed config: {}", e.message())),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if let Some(op) = &self.operation {
            if !OPERATIONS.contains(&op.as_str()) {
                return usage(format!("unknown operation {op:?}; expected one of {}", OPERATIONS.join(", ")));
            }
        }
        if let SystemSpec::Named(name) = &self.system {
            if !NAMES.contains(&name.as_str()) {
                return usage(format!("unknown built-in system {name:?}; expected one of {}", NAMES.join(", ")));
            }
        }
        self.params.validate()
    }

    /// The operation to run: the subcommand's, which must agree with the
    /// config's when both are given.
    pub fn resolve_operation(&mut self, subcommand: Option<&str>) -> anyhow::Result<String> {
        let op = match (subcommand, self.operation.as_deref()) {
            (Some(s), Some(c)) if s != c => {
                return usage(format!("subcommand {s} does not match config operation {c}"));
            }
            (Some(s), _) => s.to_string(),
            (None, Some(c)) => c.to_string(),
            (None, None) => return usage("config names no operation"),
        };
        self.operation = Some(op.clone());
        Ok(op)
    }
}

/// A system and cocycle ready to run, plus the built-in example they came
/// from if any.
pub struct Setup {
    pub system: BaseSystem,
    pub cocycle: Cocycle,
    pub example: Option<Example>,
    /// The cocycle is the example's own, so its cones and bundle apply.
    pub example_cocycle: bool,
}

fn matrix(rows: &[Vec<f64>]) -> anyhow::Result<MatrixD> {
    let d = rows.len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return usage("cocycle matrices must be square and non-empty");
    }
    Ok(MatrixD::from_fn(d, d, |i, j| rows[i][j]))
}

fn build_system(spec: &CustomSystem) -> lyapunov_lab::Result<BaseSystem> {
    match spec {
        CustomSystem::ToralAutomorphism { matrix } => BaseSystem::toral_automorphism("toral-automorphism", matrix),
        CustomSystem::TorusAffine { matrix, shift } => BaseSystem::torus_affine("torus-affine", matrix, shift),
        CustomSystem::SkewProduct { fiber } => BaseSystem::skew_product(*fiber),
        CustomSystem::TorusProduct { blocks } => BaseSystem::torus_product(blocks),
        CustomSystem::Identity { dim } => Ok(BaseSystem::identity(*dim)),
        CustomSystem::Translation { shift } => Ok(BaseSystem::translation(shift)),
        CustomSystem::FullShift { alphabet, horizon } => BaseSystem::full_shift(*alphabet, *horizon),
    }
}

fn build_cocycle(spec: &CocycleSpec, system: &BaseSystem) -> anyhow::Result<Cocycle> {
    Ok(match spec {
        CocycleSpec::Derivative => derivative_cocycle(system)?,
        CocycleSpec::Constant { matrix: m } => Cocycle::constant(system.clone(), matrix(m)?),
        CocycleSpec::Rotation { angle } => Cocycle::rotation(system.clone(), *angle),
        CocycleSpec::Table { matrices } => {
            let ms = matrices.iter().map(|m| matrix(m)).collect::<anyhow::Result<Vec<_>>>()?;
            Cocycle::symbol_table(system.clone(), ms)?
        }
        CocycleSpec::HalfSplit { left, right } => Cocycle::half_split(system.clone(), matrix(left)?, matrix(right)?),
    })
}

impl Setup {
    pub fn build(cfg: &ExperimentConfig) -> anyhow::Result<Self> {
        let (system, example) = match &cfg.system {
            SystemSpec::Named(name) => {
                let ex = Example::build(name)?;
                (ex.system.clone(), Some(ex))
            }
            SystemSpec::Custom(spec) => (build_system(spec).map_err(|e| UsageError(e.to_string()))?, None),
        };
        let cocycle = match (&cfg.cocycle, &example) {
            (Some(spec), _) => build_cocycle(spec, &system).map_err(|e| UsageError(e.to_string()))?,
            (None, Some(ex)) => ex.cocycle.clone(),
            (None, None) => derivative_cocycle(&system).map_err(|e| UsageError(e.to_string()))?,
        };
        Ok(Self {
            system,
            example_cocycle: cfg.cocycle.is_none() && example.is_some(),
            cocycle,
            example,
        })
    }

    pub fn sample(&self, count: usize, seed: u64) -> lyapunov_lab::Result<Vec<lyapunov_lab::Point>> {
        match &self.example {
            Some(ex) => ex.sample(count, seed),
            None => self.system.sample_initial_points(count, seed),
        }
    }
}
