//! Linear cocycles `A : X → GL(d, ℝ)` over a base system and their n-step
//! products `A^n(x) = A(T^{n-1}x) ⋯ A(x)`.
//!
//! Products are accumulated with a rescale after every step, so nothing
//! overflows for long horizons. Besides the rescaled product itself, the
//! accumulator carries every intermediate exterior power `Λ^k A^n(x)`
//! (compound matrices, each rescaled on its own). The top singular value of
//! `Λ^k` is `σ_1 ⋯ σ_k`, which gives every singular value of the product to
//! full relative precision, including the ones far below `σ_1 · ε_machine`.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::base::{BaseSystem, Point, PointKey, SystemKind};
use crate::error::{LabError, Result};

pub type MatrixD = DMatrix<f64>;

/// Matrices with `|det|` at or below this are treated as singular.
pub const DET_FLOOR: f64 = 1e-300;

/// Invariance tolerance for bundle frames.
pub const FRAME_TOLERANCE: f64 = 1e-6;

type Generator = dyn Fn(&Point) -> Result<MatrixD> + Send + Sync;

/// A linear cocycle `(A, T)`.
#[derive(Clone)]
pub struct Cocycle {
    dim: usize,
    base: BaseSystem,
    label: String,
    generator: Arc<Generator>,
}

impl std::fmt::Debug for Cocycle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Cocycle")
            .field("dim", &self.dim)
            .field("base", &self.base.name())
            .field("label", &self.label)
            .finish()
    }
}

impl Cocycle {
    pub fn new<F>(base: BaseSystem, dim: usize, label: &str, generator: F) -> Self
    where
        F: Fn(&Point) -> Result<MatrixD> + Send + Sync + 'static,
    {
        Self {
            dim,
            base,
            label: label.to_string(),
            generator: Arc::new(generator),
        }
    }

    pub fn constant(base: BaseSystem, matrix: MatrixD) -> Self {
        let dim = matrix.nrows();
        Self::new(base, dim, "constant", move |_| Ok(matrix.clone()))
    }

    pub fn identity(base: BaseSystem, dim: usize) -> Self {
        Self::constant(base, MatrixD::identity(dim, dim)).labelled("identity")
    }

    /// Constant planar rotation by `angle`.
    pub fn rotation(base: BaseSystem, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::constant(base, MatrixD::from_row_slice(2, 2, &[c, -s, s, c])).labelled("rotation")
    }

    /// Locally constant cocycle over a shift: `A(x) = matrices[x_0]`.
    pub fn symbol_table(base: BaseSystem, matrices: Vec<MatrixD>) -> Result<Self> {
        let alphabet = match base.kind() {
            SystemKind::FullShift { alphabet, .. } => *alphabet as usize,
            SystemKind::Torus { .. } => {
                return Err(LabError::Unsupported("symbol tables need a shift base".into()))
            }
        };
        if matrices.len() != alphabet {
            return Err(LabError::InvalidParameter(format!(
                "need one matrix per symbol ({alphabet}), got {}",
                matrices.len()
            )));
        }
        let dim = matrices[0].nrows();
        if matrices.iter().any(|m| m.nrows() != dim || m.ncols() != dim) {
            return Err(LabError::InvalidParameter("symbol matrices differ in shape".into()));
        }
        Ok(Self::new(base, dim, "symbol-table", move |x| {
            let s = x
                .current_symbol()
                .ok_or_else(|| LabError::InvalidParameter("symbolic point expected".into()))?;
            Ok(matrices[s as usize].clone())
        }))
    }

    /// Piecewise-constant cocycle over a torus: `left` where the first
    /// coordinate lies in `[0, 1/2)`, `right` otherwise.
    pub fn half_split(base: BaseSystem, left: MatrixD, right: MatrixD) -> Self {
        let dim = left.nrows();
        Self::new(base, dim, "half-split", move |x| {
            let c = x
                .coords()
                .ok_or_else(|| LabError::InvalidParameter("torus point expected".into()))?;
            Ok(if c[0] < 0.5 { left.clone() } else { right.clone() })
        })
    }

    pub fn labelled(mut self, label: &str) -> Self {
        self.label = label.to_string();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn base(&self) -> &BaseSystem {
        &self.base
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `A(x)`, checked for shape and finiteness.
    pub fn generate(&self, x: &Point) -> Result<MatrixD> {
        let m = (self.generator)(x)?;
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(LabError::InvalidParameter(format!(
                "generator returned {}x{}, expected {}x{}",
                m.nrows(),
                m.ncols(),
                self.dim,
                self.dim
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(LabError::InvalidParameter("generator returned non-finite entry".into()));
        }
        Ok(m)
    }

    /// `c · A(x)` for a constant `c > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        let inner = self.clone();
        let label = format!("{}*{factor}", self.label);
        Self::new(self.base.clone(), self.dim, &label, move |x| {
            Ok(inner.generate(x)? * factor)
        })
    }

    /// `Qᵀ A(x) Q` for a fixed orthogonal `Q`.
    pub fn conjugated(&self, q: MatrixD) -> Self {
        let inner = self.clone();
        let label = format!("{}^Q", self.label);
        Self::new(self.base.clone(), self.dim, &label, move |x| {
            Ok(q.transpose() * inner.generate(x)? * &q)
        })
    }

    /// `A(x) (I + ε S)` with a constant `S`.
    pub fn perturbed(&self, s: &MatrixD, epsilon: f64) -> Self {
        let factor = MatrixD::identity(self.dim, self.dim) + s * epsilon;
        let inner = self.clone();
        let label = format!("{}+perturbation", self.label);
        Self::new(self.base.clone(), self.dim, &label, move |x| {
            Ok(inner.generate(x)? * &factor)
        })
    }

    /// Same generator over a replacement base (used by the CLI).
    pub fn with_base(&self, base: BaseSystem) -> Self {
        Self {
            base,
            ..self.clone()
        }
    }
}

/// Derivative cocycle `A(x) = Df_x` of a built-in toral map.
pub fn derivative_cocycle(system: &BaseSystem) -> Result<Cocycle> {
    match system.torus_matrix() {
        Some((dim, m)) => {
            let jac = MatrixD::from_iterator(dim, dim, (0..dim * dim).map(|i| {
                let (col, row) = (i / dim, i % dim);
                m[row * dim + col] as f64
            }));
            Ok(Cocycle::constant(system.clone(), jac).labelled("derivative"))
        }
        None => Err(LabError::Unsupported(format!(
            "{} has no analytic Jacobian",
            system.name()
        ))),
    }
}

/// Singular values, descending.
pub fn singular_values(m: &MatrixD) -> Vec<f64> {
    match (m.nrows(), m.ncols()) {
        (0, _) | (_, 0) => return Vec::new(),
        (1, 1) => return vec![m[(0, 0)].abs()],
        (2, 2) => {
            // closed form; the small value from |det| / σ₁ avoids cancellation
            let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
            let big = 0.5 * ((a + d).hypot(c - b) + (a - d).hypot(b + c));
            if big == 0.0 {
                return vec![0.0, 0.0];
            }
            return vec![big, (a * d - b * c).abs() / big];
        }
        _ => {}
    }
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn operator_norm(m: &MatrixD) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn spectral_radius(m: &MatrixD) -> f64 {
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// k-th compound matrix (matrix of k×k minors), the matrix of `Λ^k m` in
/// the basis of wedge products of standard basis vectors.
pub fn compound(m: &MatrixD, k: usize) -> MatrixD {
    let subsets = combinations(m.nrows(), k);
    let size = subsets.len();
    let mut out = MatrixD::zeros(size, size);
    for (r, rows) in subsets.iter().enumerate() {
        for (c, cols) in subsets.iter().enumerate() {
            let minor = MatrixD::from_fn(k, k, |i, j| m[(rows[i], cols[j])]);
            out[(r, c)] = minor.determinant();
        }
    }
    out
}

fn invert(m: &MatrixD) -> Result<MatrixD> {
    let det = m.determinant();
    if !(det.abs() > DET_FLOOR) {
        return Err(LabError::NotInvertible { det });
    }
    m.clone()
        .try_inverse()
        .ok_or(LabError::NotInvertible { det })
}

/// A rescaled matrix `M` standing for `2^exponent · M`. Rescaling by powers
/// of two is exact, so e.g. products of isometries keep exactly zero logs.
#[derive(Debug, Clone)]
struct Scaled {
    matrix: MatrixD,
    exponent: i64,
}

impl Scaled {
    fn identity(n: usize) -> Self {
        Self {
            matrix: MatrixD::identity(n, n),
            exponent: 0,
        }
    }

    fn renormalize(&mut self) {
        let norm = self.matrix.amax();
        if norm > 0.0 && norm.is_finite() {
            let e = norm.log2().round() as i32;
            if e != 0 {
                self.matrix *= 2f64.powi(-e);
                self.exponent += i64::from(e);
            }
        }
    }

    fn log_scale(&self) -> f64 {
        self.exponent as f64 * std::f64::consts::LN_2
    }

    fn log_top(&self) -> f64 {
        self.log_scale() + operator_norm(&self.matrix).ln()
    }
}

/// Incremental product accumulator. `push` multiplies on the left (forward
/// products), `push_right` on the right (products of inverses read at the
/// endpoint).
#[derive(Debug, Clone)]
pub struct ProductAccumulator {
    dim: usize,
    steps: usize,
    residual: Scaled,
    compounds: Vec<Scaled>,
    log_det: f64,
}

impl ProductAccumulator {
    pub fn new(dim: usize) -> Self {
        let compounds = (2..dim)
            .map(|k| Scaled::identity(combinations(dim, k).len()))
            .collect();
        Self {
            dim,
            steps: 0,
            residual: Scaled::identity(dim),
            compounds,
            log_det: 0.0,
        }
    }

    fn absorb(&mut self, a: &MatrixD, left: bool) -> Result<()> {
        let det = a.determinant();
        if !(det.abs() > DET_FLOOR) {
            return Err(LabError::NotInvertible { det });
        }
        self.log_det += det.abs().ln();
        let mul = |s: &mut Scaled, m: &MatrixD| {
            s.matrix = if left { m * &s.matrix } else { &s.matrix * m };
            s.renormalize();
        };
        mul(&mut self.residual, a);
        for (idx, s) in self.compounds.iter_mut().enumerate() {
            let c = compound(a, idx + 2);
            mul(s, &c);
        }
        self.steps += 1;
        Ok(())
    }

    pub fn push(&mut self, a: &MatrixD) -> Result<()> {
        self.absorb(a, true)
    }

    pub fn push_right(&mut self, a: &MatrixD) -> Result<()> {
        self.absorb(a, false)
    }

    pub fn snapshot(&self) -> LogProduct {
        // L_k = log ‖Λ^k‖ for k = 0..=d
        let mut exterior = Vec::with_capacity(self.dim + 1);
        exterior.push(0.0);
        if self.dim >= 1 {
            if self.dim == 1 {
                exterior.push(self.log_det);
            } else {
                exterior.push(self.residual.log_top());
                for s in &self.compounds {
                    exterior.push(s.log_top());
                }
                exterior.push(self.log_det);
            }
        }
        let log_sv = exterior.windows(2).map(|w| w[1] - w[0]).collect();
        LogProduct {
            steps: self.steps,
            log_scale: self.residual.log_scale(),
            residual: self.residual.matrix.clone(),
            log_det: self.log_det,
            log_sv,
        }
    }
}

/// Rescaled n-step product with its log singular values.
#[derive(Debug, Clone)]
pub struct LogProduct {
    pub steps: usize,
    /// Accumulated log factor: the product equals `exp(log_scale)·residual`.
    pub log_scale: f64,
    pub residual: MatrixD,
    pub log_det: f64,
    log_sv: Vec<f64>,
}

impl LogProduct {
    /// `log ‖A^n(x)‖`.
    pub fn log_norm(&self) -> f64 {
        self.log_sv[0]
    }

    /// `log m(A^n(x)) = −log ‖(A^n(x))^{-1}‖ = log σ_d`.
    pub fn log_conorm(&self) -> f64 {
        *self.log_sv.last().expect("dimension ≥ 1")
    }

    /// `log σ_1 ≥ … ≥ log σ_d`.
    pub fn log_singular_values(&self) -> &[f64] {
        &self.log_sv
    }

    /// The product itself; only meaningful when it is representable.
    pub fn reconstruct(&self) -> MatrixD {
        &self.residual * self.log_scale.exp()
    }
}

/// `A^n(x)` as a [`LogProduct`].
pub fn product(c: &Cocycle, x: &Point, n: usize) -> Result<LogProduct> {
    if n == 0 {
        return Err(LabError::InvalidParameter("product horizon must be ≥ 1".into()));
    }
    let mut acc = ProductAccumulator::new(c.dim());
    let mut cur = x.clone();
    for j in 0..n {
        acc.push(&c.generate(&cur)?)?;
        if j + 1 < n {
            cur = c.base().forward(&cur)?;
        }
    }
    Ok(acc.snapshot())
}

/// `(A^n(x))^{-1} = A(x)^{-1} ⋯ A(T^{n-1}x)^{-1}`, accumulated from the
/// inverses along the orbit.
pub fn inverse_product(c: &Cocycle, x: &Point, n: usize) -> Result<LogProduct> {
    if n == 0 {
        return Err(LabError::InvalidParameter("product horizon must be ≥ 1".into()));
    }
    let mut acc = ProductAccumulator::new(c.dim());
    let mut cur = x.clone();
    for j in 0..n {
        acc.push_right(&invert(&c.generate(&cur)?)?)?;
        if j + 1 < n {
            cur = c.base().forward(&cur)?;
        }
    }
    Ok(acc.snapshot())
}

/// `log ‖Λ^k A^n(x)‖ = Σ_{i≤k} log σ_i`. `k = 0` gives 0.
pub fn exterior_power_norm(lp: &LogProduct, k: usize) -> Result<f64> {
    if k > lp.log_sv.len() {
        return Err(LabError::InvalidParameter(format!(
            "exterior power {k} exceeds dimension {}",
            lp.log_sv.len()
        )));
    }
    Ok(lp.log_sv[..k].iter().sum())
}

fn series(c: &Cocycle, x: &Point, checkpoints: &[usize], inverse: bool) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(checkpoints.len());
    let Some(&last) = checkpoints.last() else {
        return Ok(out);
    };
    let mut acc = Scaled::identity(c.dim());
    let mut next = 0;
    let mut cur = x.clone();
    for j in 1..=last {
        let a = c.generate(&cur)?;
        if inverse {
            acc.matrix = &acc.matrix * invert(&a)?;
        } else {
            acc.matrix = a * &acc.matrix;
        }
        acc.renormalize();
        while next < checkpoints.len() && checkpoints[next] == j {
            out.push(acc.log_top());
            next += 1;
        }
        if j < last {
            cur = c.base().forward(&cur)?;
        }
    }
    Ok(out)
}

/// `log ‖A^j(x)‖` at each (increasing, ≥ 1) checkpoint `j`, in one pass.
pub fn log_norm_series(c: &Cocycle, x: &Point, checkpoints: &[usize]) -> Result<Vec<f64>> {
    series(c, x, checkpoints, false)
}

/// `log ‖(A^j(x))^{-1}‖` at each checkpoint, in one pass.
pub fn log_inverse_norm_series(c: &Cocycle, x: &Point, checkpoints: &[usize]) -> Result<Vec<f64>> {
    series(c, x, checkpoints, true)
}

/// Snapshots of `A^j(x)` at each checkpoint, in one pass.
pub fn product_checkpoints(c: &Cocycle, x: &Point, checkpoints: &[usize]) -> Result<Vec<LogProduct>> {
    let mut out = Vec::with_capacity(checkpoints.len());
    let Some(&last) = checkpoints.last() else {
        return Ok(out);
    };
    let mut acc = ProductAccumulator::new(c.dim());
    let mut next = 0;
    let mut cur = x.clone();
    for j in 1..=last {
        acc.push(&c.generate(&cur)?)?;
        while next < checkpoints.len() && checkpoints[next] == j {
            out.push(acc.snapshot());
            next += 1;
        }
        if j < last {
            cur = c.base().forward(&cur)?;
        }
    }
    Ok(out)
}

/// Orthonormalize the columns of `m` (thin QR).
pub fn orthonormalize(m: &MatrixD) -> MatrixD {
    m.clone().qr().q()
}

/// `sin` of the largest principal angle between the column spans of two
/// orthonormal frames of equal rank.
pub fn subspace_distance(a: &MatrixD, b: &MatrixD) -> f64 {
    let residual = a - b * (b.transpose() * a);
    operator_norm(&residual)
}

/// Orthonormal k-frame spanning a subbundle at a point.
#[derive(Debug, Clone)]
pub struct BundleFrame {
    pub point: Point,
    pub basis: MatrixD,
}

/// A field of k-frames: constant over the base, or stored along an orbit.
#[derive(Debug, Clone)]
pub enum FrameField {
    Constant(MatrixD),
    Tracked {
        frames: Vec<BundleFrame>,
        index: HashMap<PointKey, usize>,
    },
}

impl FrameField {
    pub fn constant(basis: MatrixD) -> Self {
        FrameField::Constant(orthonormalize(&basis))
    }

    pub fn tracked(frames: Vec<BundleFrame>) -> Self {
        let index = frames
            .iter()
            .enumerate()
            .map(|(i, f)| (f.point.key(), i))
            .collect();
        FrameField::Tracked { frames, index }
    }

    pub fn rank(&self) -> usize {
        match self {
            FrameField::Constant(m) => m.ncols(),
            FrameField::Tracked { frames, .. } => frames.first().map_or(0, |f| f.basis.ncols()),
        }
    }

    pub fn frame_at(&self, x: &Point) -> Result<MatrixD> {
        match self {
            FrameField::Constant(m) => Ok(m.clone()),
            FrameField::Tracked { frames, index } => index
                .get(&x.key())
                .map(|&i| frames[i].basis.clone())
                .ok_or(LabError::FrameMissing),
        }
    }

    pub fn frames(&self) -> &[BundleFrame] {
        match self {
            FrameField::Constant(_) => &[],
            FrameField::Tracked { frames, .. } => frames,
        }
    }

    /// Collapse a tracked field to a constant one when every stored frame
    /// spans the same subspace within `tol`.
    pub fn into_constant_if_uniform(self, tol: f64) -> Self {
        if let FrameField::Tracked { frames, .. } = &self {
            if let Some(first) = frames.first() {
                if frames
                    .iter()
                    .all(|f| subspace_distance(&f.basis, &first.basis) <= tol)
                {
                    return FrameField::Constant(first.basis.clone());
                }
            }
        }
        self
    }
}

fn starting_frame(d: usize, k: usize, salt: u64) -> MatrixD {
    use rand::Rng;
    let mut rng = crate::base::point_rng(0x5eed_f4a3, salt);
    orthonormalize(&MatrixD::from_fn(d, k, |_, _| rng.gen_range(-1.0..1.0)))
}

/// Track the dominant k-dimensional subbundle along the orbit of `x`.
///
/// Two generic k-frames are pushed forward with re-orthonormalization for
/// `n_transient` steps; if they have not merged to within
/// [`FRAME_TOLERANCE`], there is no dominated splitting of index `k` to
/// converge to. The next `n_keep` frames along the orbit are returned.
pub fn compute_bundle_frames(
    c: &Cocycle,
    x: &Point,
    k: usize,
    n_transient: usize,
    n_keep: usize,
) -> Result<FrameField> {
    let d = c.dim();
    if k == 0 || k >= d {
        return Err(LabError::InvalidParameter(format!(
            "bundle rank must satisfy 1 ≤ k < {d}"
        )));
    }
    if n_transient == 0 || n_keep == 0 {
        return Err(LabError::InvalidParameter("transient and kept lengths must be ≥ 1".into()));
    }
    let mut fa = starting_frame(d, k, 1);
    let mut fb = starting_frame(d, k, 2);
    let mut cur = x.clone();
    for _ in 0..n_transient {
        let a = c.generate(&cur)?;
        fa = orthonormalize(&(&a * &fa));
        fb = orthonormalize(&(&a * &fb));
        cur = c.base().forward(&cur)?;
    }
    let drift = subspace_distance(&fa, &fb);
    if !(drift <= FRAME_TOLERANCE) {
        return Err(LabError::NonConvergence { drift });
    }
    let mut frames = Vec::with_capacity(n_keep);
    for j in 0..n_keep {
        frames.push(BundleFrame {
            point: cur.clone(),
            basis: fa.clone(),
        });
        if j + 1 < n_keep {
            let a = c.generate(&cur)?;
            fa = orthonormalize(&(&a * &fa));
            cur = c.base().forward(&cur)?;
        }
    }
    Ok(FrameField::tracked(frames))
}

fn invariance_drift(c: &Cocycle, field: &FrameField, x: &Point) -> Result<Option<f64>> {
    let here = field.frame_at(x)?;
    let next_point = c.base().forward(x)?;
    let there = match field.frame_at(&next_point) {
        Ok(f) => f,
        Err(LabError::FrameMissing) => return Ok(None),
        Err(e) => return Err(e),
    };
    let image = orthonormalize(&(c.generate(x)? * here));
    Ok(Some(subspace_distance(&image, &there)))
}

/// Express `A` in a moving frame: `B(x) = F(Tx)ᵀ A(x) F(x)`.
///
/// Invariance of the frames is checked before the restricted cocycle is
/// built: on every stored frame (tracked fields) or on `check_points`
/// (constant fields).
pub fn restrict_to_bundle(c: &Cocycle, frames: &FrameField, check_points: &[Point]) -> Result<Cocycle> {
    let mut worst: f64 = 0.0;
    let stored: Vec<Point> = frames.frames().iter().map(|f| f.point.clone()).collect();
    let points: &[Point] = if stored.is_empty() { check_points } else { &stored };
    for x in points {
        if let Some(drift) = invariance_drift(c, frames, x)? {
            worst = worst.max(drift);
        }
    }
    if !(worst <= FRAME_TOLERANCE) {
        return Err(LabError::FrameNotInvariant {
            drift: worst,
            tolerance: FRAME_TOLERANCE,
        });
    }
    let k = frames.rank();
    let field = frames.clone();
    let inner = c.clone();
    let label = format!("{}|bundle", c.label());
    if let FrameField::Constant(f) = frames {
        let ft = f.transpose();
        let f = f.clone();
        return Ok(Cocycle::new(c.base().clone(), k, &label, move |x| Ok(&ft * inner.generate(x)? * &f)));
    }
    Ok(Cocycle::new(c.base().clone(), k, &label, move |x| {
        let here = field.frame_at(x)?;
        let there = field.frame_at(&inner.base().forward(x)?)?;
        Ok(there.transpose() * inner.generate(x)? * here)
    }))
}
