//! Invertible base systems `T : X → X`: toral affine maps with integer
//! unimodular linear part, and full shifts over a finite alphabet.
//!
//! Torus points are stored reduced into `[0,1)^k` after every application of
//! the map. Shift points carry a finite two-sided window of symbols; the
//! window half-width is a constructor parameter of the shift (`horizon`) and
//! bounds how far a point may be iterated in either direction.

use std::collections::HashSet;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LabError, Result};

/// Reduce a real into `[0, 1)`.
#[inline]
pub fn wrap_unit(v: f64) -> f64 {
    let r = v.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

const LATTICE_BITS: u32 = 53;
const LATTICE_SCALE: f64 = (1u64 << LATTICE_BITS) as f64;
const LATTICE_MASK: u64 = (1u64 << LATTICE_BITS) - 1;

/// Nearest point of the lattice `2^-53 ℤ` mod 1, as an integer mod 2^53.
fn to_lattice(v: f64) -> u64 {
    ((wrap_unit(v) * LATTICE_SCALE).round() as u64) & LATTICE_MASK
}

fn from_lattice(a: u64) -> f64 {
    (a & LATTICE_MASK) as f64 / LATTICE_SCALE
}

/// Finite window of a bi-infinite symbol sequence. `center` is the array
/// index holding coordinate 0.
#[derive(Debug, Clone)]
pub struct SymbolWindow {
    symbols: Arc<[u8]>,
    center: usize,
}

impl SymbolWindow {
    pub fn new(symbols: Vec<u8>, center: usize) -> Result<Self> {
        if center >= symbols.len() {
            return Err(LabError::InvalidParameter(format!(
                "window center {center} outside window of length {}",
                symbols.len()
            )));
        }
        Ok(Self {
            symbols: symbols.into(),
            center,
        })
    }

    /// Symbol at coordinate `i` (coordinate 0 is the current position).
    pub fn symbol(&self, i: i64) -> Option<u8> {
        let idx = self.center as i64 + i;
        if idx < 0 {
            return None;
        }
        self.symbols.get(idx as usize).copied()
    }

    /// How many forward shifts the window supports.
    pub fn forward_room(&self) -> i64 {
        (self.symbols.len() - 1 - self.center) as i64
    }

    pub fn backward_room(&self) -> i64 {
        self.center as i64
    }

    fn shifted(&self, n: i64) -> Result<Self> {
        let room = if n >= 0 {
            self.forward_room()
        } else {
            self.backward_room()
        };
        if n.abs() > room {
            return Err(LabError::WindowTooShort {
                needed: n.abs(),
                available: room,
            });
        }
        Ok(Self {
            symbols: Arc::clone(&self.symbols),
            center: (self.center as i64 + n) as usize,
        })
    }

    fn identity_key(&self) -> (usize, usize) {
        (Arc::as_ptr(&self.symbols) as *const u8 as usize, self.center)
    }
}

/// A state of a base system.
#[derive(Debug, Clone)]
pub enum Point {
    Torus(Vec<f64>),
    Symbolic(SymbolWindow),
}

/// Hashable identity of a point, used to look up data stored along orbits.
/// Torus points compare by exact bit pattern; symbolic points by window
/// identity and position.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PointKey {
    Torus(Vec<u64>),
    Symbolic(usize, usize),
}

impl Point {
    /// Coordinates are reduced mod 1 and snapped to the `2^-53` lattice on
    /// which toral maps iterate exactly.
    pub fn torus(coords: &[f64]) -> Self {
        Point::Torus(coords.iter().map(|&c| from_lattice(to_lattice(c))).collect())
    }

    pub fn symbolic(symbols: Vec<u8>, center: usize) -> Result<Self> {
        Ok(Point::Symbolic(SymbolWindow::new(symbols, center)?))
    }

    pub fn coords(&self) -> Option<&[f64]> {
        match self {
            Point::Torus(c) => Some(c),
            Point::Symbolic(_) => None,
        }
    }

    pub fn window(&self) -> Option<&SymbolWindow> {
        match self {
            Point::Torus(_) => None,
            Point::Symbolic(w) => Some(w),
        }
    }

    /// Symbol at coordinate 0, for symbolic points.
    pub fn current_symbol(&self) -> Option<u8> {
        self.window().and_then(|w| w.symbol(0))
    }

    pub fn key(&self) -> PointKey {
        match self {
            Point::Torus(c) => PointKey::Torus(c.iter().map(|v| v.to_bits()).collect()),
            Point::Symbolic(w) => {
                let (p, c) = w.identity_key();
                PointKey::Symbolic(p, c)
            }
        }
    }
}

/// Kinds of built-in systems.
#[derive(Debug, Clone)]
pub enum SystemKind {
    /// `x ↦ M x + shift (mod 1)` with `M` integer, `|det M| = 1`.
    Torus {
        dim: usize,
        matrix: Vec<i64>,
        inverse: Vec<i64>,
        shift: Vec<f64>,
    },
    /// Two-sided full shift on `{0, …, alphabet-1}`; sampled windows carry
    /// `horizon` symbols on each side of coordinate 0.
    FullShift { alphabet: u8, horizon: usize },
}

#[derive(Debug, Clone)]
pub struct BaseSystem {
    name: String,
    kind: SystemKind,
}

fn int_det(m: &[i64], dim: usize) -> i64 {
    match dim {
        0 => 1,
        1 => m[0],
        _ => {
            let mut det = 0i64;
            for col in 0..dim {
                let minor: Vec<i64> = (1..dim)
                    .flat_map(|r| {
                        (0..dim)
                            .filter(move |&c| c != col)
                            .map(move |c| m[r * dim + c])
                    })
                    .collect();
                let sign = if col % 2 == 0 { 1 } else { -1 };
                det += sign * m[col] * int_det(&minor, dim - 1);
            }
            det
        }
    }
}

/// Inverse of a unimodular integer matrix via the adjugate.
fn int_inverse(m: &[i64], dim: usize) -> Option<Vec<i64>> {
    let det = int_det(m, dim);
    if det.abs() != 1 {
        return None;
    }
    if dim == 1 {
        return Some(vec![det]);
    }
    let mut inv = vec![0i64; dim * dim];
    for r in 0..dim {
        for c in 0..dim {
            let minor: Vec<i64> = (0..dim)
                .filter(|&i| i != r)
                .flat_map(|i| (0..dim).filter(|&j| j != c).map(move |j| m[i * dim + j]))
                .collect();
            let sign = if (r + c) % 2 == 0 { 1 } else { -1 };
            // adjugate is the transposed cofactor matrix
            inv[c * dim + r] = sign * int_det(&minor, dim - 1) * det;
        }
    }
    Some(inv)
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl BaseSystem {
    /// Toral affine map with integer unimodular linear part.
    pub fn torus_affine(name: &str, rows: &[Vec<i64>], shift: &[f64]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(LabError::InvalidParameter(
                "torus matrix must be square and non-empty".into(),
            ));
        }
        if shift.len() != dim {
            return Err(LabError::InvalidParameter(format!(
                "shift has length {}, expected {dim}",
                shift.len()
            )));
        }
        let matrix: Vec<i64> = rows.iter().flatten().copied().collect();
        let inverse = int_inverse(&matrix, dim).ok_or_else(|| {
            LabError::InvalidParameter(format!(
                "torus matrix must be unimodular (det = {})",
                int_det(&matrix, dim)
            ))
        })?;
        Ok(Self {
            name: name.to_string(),
            kind: SystemKind::Torus {
                dim,
                matrix,
                inverse,
                shift: shift.iter().map(|&s| from_lattice(to_lattice(s))).collect(),
            },
        })
    }

    pub fn toral_automorphism(name: &str, rows: &[Vec<i64>]) -> Result<Self> {
        Self::torus_affine(name, rows, &vec![0.0; rows.len()])
    }

    /// Arnold's cat map `[[2,1],[1,1]]`.
    pub fn cat_map() -> Self {
        Self::toral_automorphism("cat-map", &[vec![2, 1], vec![1, 1]]).expect("unimodular")
    }

    pub fn identity(dim: usize) -> Self {
        let rows: Vec<Vec<i64>> = (0..dim)
            .map(|i| (0..dim).map(|j| i64::from(i == j)).collect())
            .collect();
        Self::toral_automorphism("identity", &rows).expect("identity is unimodular")
    }

    /// Rigid translation `x ↦ x + shift` on the torus.
    pub fn translation(shift: &[f64]) -> Self {
        let dim = shift.len();
        let rows: Vec<Vec<i64>> = (0..dim)
            .map(|i| (0..dim).map(|j| i64::from(i == j)).collect())
            .collect();
        Self::torus_affine("translation", &rows, shift).expect("identity is unimodular")
    }

    /// Skew product `f(x, y, z) = (x, g(y, z))` on `T³` with `g` the toral
    /// automorphism given by `fiber`.
    pub fn skew_product(fiber: [[i64; 2]; 2]) -> Result<Self> {
        let rows = vec![
            vec![1, 0, 0],
            vec![0, fiber[0][0], fiber[0][1]],
            vec![0, fiber[1][0], fiber[1][1]],
        ];
        Self::toral_automorphism("skew-product", &rows)
    }

    /// Direct product of toral automorphisms (block-diagonal matrix).
    pub fn torus_product(blocks: &[Vec<Vec<i64>>]) -> Result<Self> {
        let dim: usize = blocks.iter().map(|b| b.len()).sum();
        let mut rows = vec![vec![0i64; dim]; dim];
        let mut offset = 0;
        for block in blocks {
            for (i, row) in block.iter().enumerate() {
                if row.len() != block.len() {
                    return Err(LabError::InvalidParameter("product block not square".into()));
                }
                for (j, &v) in row.iter().enumerate() {
                    rows[offset + i][offset + j] = v;
                }
            }
            offset += block.len();
        }
        Self::toral_automorphism("torus-product", &rows)
    }

    pub fn full_shift(alphabet: u8, horizon: usize) -> Result<Self> {
        if alphabet < 2 {
            return Err(LabError::InvalidParameter("alphabet needs at least 2 symbols".into()));
        }
        if horizon == 0 {
            return Err(LabError::InvalidParameter("horizon must be positive".into()));
        }
        Ok(Self {
            name: "full-shift".into(),
            kind: SystemKind::FullShift { alphabet, horizon },
        })
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &SystemKind {
        &self.kind
    }

    /// State dimension (torus dimension; 0 for shifts).
    pub fn dim(&self) -> usize {
        match &self.kind {
            SystemKind::Torus { dim, .. } => *dim,
            SystemKind::FullShift { .. } => 0,
        }
    }

    pub fn is_invertible(&self) -> bool {
        true
    }

    /// Integer linear part of a toral map, row-major.
    pub fn torus_matrix(&self) -> Option<(usize, &[i64])> {
        match &self.kind {
            SystemKind::Torus { dim, matrix, .. } => Some((*dim, matrix)),
            SystemKind::FullShift { .. } => None,
        }
    }

    fn check_point(&self, x: &Point) -> Result<()> {
        match (&self.kind, x) {
            (SystemKind::Torus { dim, .. }, Point::Torus(c)) if c.len() == *dim => Ok(()),
            (SystemKind::FullShift { .. }, Point::Symbolic(_)) => Ok(()),
            _ => Err(LabError::InvalidParameter(format!(
                "point does not belong to system {}",
                self.name
            ))),
        }
    }

    /// One step of `x ↦ Mx + s` (or its inverse) on the lattice
    /// `2^-53 ℤ^d / ℤ^d`, where integer arithmetic mod 2^53 is exact.
    fn apply_torus(m: &[i64], dim: usize, c: &[f64], offset: &[f64], subtract_first: bool) -> Vec<f64> {
        let src: Vec<u64> = c
            .iter()
            .zip(offset)
            .map(|(&x, &s)| {
                if subtract_first {
                    to_lattice(x).wrapping_sub(to_lattice(s))
                } else {
                    to_lattice(x)
                }
            })
            .collect();
        (0..dim)
            .map(|i| {
                let mut acc = if subtract_first { 0 } else { to_lattice(offset[i]) };
                for j in 0..dim {
                    acc = acc.wrapping_add((m[i * dim + j] as u64).wrapping_mul(src[j]));
                }
                from_lattice(acc)
            })
            .collect()
    }

    pub fn forward(&self, x: &Point) -> Result<Point> {
        self.iterate(x, 1)
    }

    pub fn inverse(&self, x: &Point) -> Result<Point> {
        self.iterate(x, -1)
    }

    /// `T^n(x)`; negative `n` applies the inverse map.
    pub fn iterate(&self, x: &Point, n: i64) -> Result<Point> {
        self.check_point(x)?;
        match (&self.kind, x) {
            (
                SystemKind::Torus {
                    dim,
                    matrix,
                    inverse,
                    shift,
                },
                Point::Torus(c),
            ) => {
                let mut cur = c.clone();
                if n >= 0 {
                    for _ in 0..n {
                        cur = Self::apply_torus(matrix, *dim, &cur, shift, false);
                    }
                } else {
                    for _ in 0..(-n) {
                        cur = Self::apply_torus(inverse, *dim, &cur, shift, true);
                    }
                }
                Ok(Point::Torus(cur))
            }
            (SystemKind::FullShift { .. }, Point::Symbolic(w)) => Ok(Point::Symbolic(w.shifted(n)?)),
            _ => unreachable!("checked above"),
        }
    }

    /// Orbit segment `x, T(x), …, T^n(x)`.
    pub fn orbit(&self, x: &Point, n: usize) -> Result<OrbitSegment> {
        if n == 0 {
            return Err(LabError::InvalidParameter("orbit length must be ≥ 1".into()));
        }
        self.check_point(x)?;
        if let Point::Symbolic(w) = x {
            if n as i64 > w.forward_room() {
                return Err(LabError::WindowTooShort {
                    needed: n as i64,
                    available: w.forward_room(),
                });
            }
        }
        let mut points = Vec::with_capacity(n + 1);
        points.push(x.clone());
        for j in 0..n {
            let next = self.forward(&points[j])?;
            points.push(next);
        }
        Ok(OrbitSegment { points })
    }

    /// Metric on `X`: flat metric on the torus, `2^{-k}` on shifts where `k`
    /// is the smallest `|i|` with differing symbols.
    pub fn distance(&self, a: &Point, b: &Point) -> Result<f64> {
        self.check_point(a)?;
        self.check_point(b)?;
        match (a, b) {
            (Point::Torus(x), Point::Torus(y)) => Ok(x
                .iter()
                .zip(y)
                .map(|(p, q)| {
                    let d = (p - q).abs();
                    let d = d.min(1.0 - d);
                    d * d
                })
                .sum::<f64>()
                .sqrt()),
            (Point::Symbolic(u), Point::Symbolic(v)) => {
                let reach = u
                    .forward_room()
                    .min(v.forward_room())
                    .max(u.backward_room().min(v.backward_room()));
                for k in 0..=reach {
                    let differs = |i: i64| match (u.symbol(i), v.symbol(i)) {
                        (Some(s), Some(t)) => s != t,
                        _ => false,
                    };
                    if differs(k) || differs(-k) {
                        return Ok(2f64.powi(-(k as i32)));
                    }
                }
                Ok(0.0)
            }
            _ => unreachable!("checked above"),
        }
    }

    /// Lebesgue sample: uniform on the torus, uniform Bernoulli windows on
    /// shifts. Point `i` is drawn from its own stream keyed by `(seed, i)`.
    pub fn sample_initial_points(&self, count: usize, seed: u64) -> Result<Vec<Point>> {
        if count == 0 {
            return Err(LabError::InvalidParameter("sample count must be ≥ 1".into()));
        }
        Ok((0..count).map(|i| self.sample_point(seed, i as u64)).collect())
    }

    pub fn sample_point(&self, seed: u64, index: u64) -> Point {
        let mut rng = point_rng(seed, index);
        match &self.kind {
            SystemKind::Torus { dim, .. } => {
                Point::Torus((0..*dim).map(|_| rng.gen::<f64>()).collect())
            }
            SystemKind::FullShift { alphabet, horizon } => {
                let symbols: Vec<u8> = (0..2 * horizon + 1)
                    .map(|_| rng.gen_range(0..*alphabet))
                    .collect();
                Point::symbolic(symbols, *horizon).expect("center inside window")
            }
        }
    }

    /// Symbolic point whose coordinates `0, 1, 2, …` are `word` followed by
    /// uniform random symbols (and random symbols at negative coordinates).
    pub fn point_with_prefix(&self, word: &[u8], seed: u64, index: u64) -> Result<Point> {
        match &self.kind {
            SystemKind::FullShift { alphabet, horizon } => {
                if word.iter().any(|&s| s >= *alphabet) {
                    return Err(LabError::InvalidParameter("symbol outside alphabet".into()));
                }
                let mut rng = point_rng(seed, index);
                let len = 2 * horizon + 1;
                let mut symbols: Vec<u8> = (0..len).map(|_| rng.gen_range(0..*alphabet)).collect();
                for (i, &s) in word.iter().enumerate() {
                    if horizon + i < len {
                        symbols[horizon + i] = s;
                    }
                }
                Point::symbolic(symbols, *horizon)
            }
            SystemKind::Torus { .. } => Err(LabError::Unsupported(
                "prefix points exist only on shifts".into(),
            )),
        }
    }

    /// The periodic point `…www.www…` of the shift.
    pub fn periodic_symbolic_point(&self, word: &[u8]) -> Result<Point> {
        match &self.kind {
            SystemKind::FullShift { alphabet, horizon } => {
                if word.is_empty() || word.iter().any(|&s| s >= *alphabet) {
                    return Err(LabError::InvalidParameter("invalid periodic word".into()));
                }
                let p = word.len() as i64;
                let h = *horizon as i64;
                let symbols = (-h..=h).map(|i| word[i.rem_euclid(p) as usize]).collect();
                Point::symbolic(symbols, *horizon)
            }
            SystemKind::Torus { .. } => Err(LabError::Unsupported(
                "symbolic periodic points exist only on shifts".into(),
            )),
        }
    }

    /// Periodic orbits of period ≤ `max_period`. Toral maps: all rational
    /// points with denominator ≤ `max_denominator`, grouped into orbits.
    /// Shifts: one orbit per primitive cycle (Lyndon word).
    pub fn periodic_orbits(
        &self,
        max_period: usize,
        max_denominator: usize,
    ) -> Result<Vec<OrbitSegment>> {
        if max_period == 0 {
            return Err(LabError::InvalidParameter("max_period must be ≥ 1".into()));
        }
        match &self.kind {
            SystemKind::Torus {
                dim, matrix, shift, ..
            } => {
                if shift.iter().any(|&s| s != 0.0) {
                    return Err(LabError::Unsupported(
                        "periodic-orbit enumeration requires a linear toral map".into(),
                    ));
                }
                Ok(torus_periodic_orbits(
                    *dim,
                    matrix,
                    max_period,
                    max_denominator.max(1),
                ))
            }
            SystemKind::FullShift { alphabet, .. } => {
                let mut out = Vec::new();
                for word in lyndon_words(*alphabet, max_period) {
                    let start = self.periodic_symbolic_point(&word)?;
                    out.push(self.orbit(&start, word.len())?);
                }
                Ok(out)
            }
        }
    }
}

pub(crate) fn point_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn torus_periodic_orbits(dim: usize, matrix: &[i64], max_period: usize, max_den: usize) -> Vec<OrbitSegment> {
    let mut out = Vec::new();
    let mut seen: HashSet<(i64, Vec<i64>)> = HashSet::new();
    for q in 1..=max_den as i64 {
        let total = (q as usize).pow(dim as u32);
        for idx in 0..total {
            let mut p = vec![0i64; dim];
            let mut rem = idx;
            for c in p.iter_mut() {
                *c = (rem % q as usize) as i64;
                rem /= q as usize;
            }
            if p.iter().fold(q, |g, &v| gcd(g, v)) != 1 || seen.contains(&(q, p.clone())) {
                continue;
            }
            let step = |v: &[i64]| -> Vec<i64> {
                (0..dim)
                    .map(|i| {
                        (0..dim)
                            .map(|j| matrix[i * dim + j] * v[j])
                            .sum::<i64>()
                            .rem_euclid(q)
                    })
                    .collect()
            };
            let mut cycle = vec![p.clone()];
            let mut cur = step(&p);
            while cur != p && cycle.len() < max_period {
                cycle.push(cur.clone());
                cur = step(&cur);
            }
            if cur != p {
                continue;
            }
            for v in &cycle {
                seen.insert((q, v.clone()));
            }
            let mut points: Vec<Point> = cycle
                .iter()
                .map(|v| Point::Torus(v.iter().map(|&a| a as f64 / q as f64).collect()))
                .collect();
            points.push(points[0].clone());
            out.push(OrbitSegment { points });
        }
    }
    out
}

/// Lyndon words of length ≤ `max_len` over `{0..alphabet}` (Duval).
pub fn lyndon_words(alphabet: u8, max_len: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut w: Vec<u8> = vec![0];
    let k = alphabet;
    loop {
        out.push(w.clone());
        let mut next: Vec<u8> = (0..max_len).map(|i| w[i % w.len()]).collect();
        while next.last() == Some(&(k - 1)) {
            next.pop();
        }
        match next.last_mut() {
            None => break,
            Some(last) => *last += 1,
        }
        w = next;
    }
    out
}

/// `x, T(x), …, T^n(x)`.
#[derive(Debug, Clone)]
pub struct OrbitSegment {
    points: Vec<Point>,
}

impl OrbitSegment {
    pub fn from_points(points: Vec<Point>) -> Result<Self> {
        if points.len() < 2 {
            return Err(LabError::InvalidParameter("orbit segment needs ≥ 2 points".into()));
        }
        Ok(Self { points })
    }

    pub fn start(&self) -> &Point {
        &self.points[0]
    }

    /// Number of steps `n` (the segment holds `n + 1` points).
    pub fn len(&self) -> usize {
        self.points.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.points.len() <= 1
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Encoding used for deterministic tie-breaking: torus coordinates of the
    /// start, or the first `n` symbols.
    pub fn encoding(&self) -> Vec<f64> {
        match &self.points[0] {
            Point::Torus(c) => c.clone(),
            Point::Symbolic(w) => (0..self.len() as i64)
                .map(|i| w.symbol(i).map_or(-1.0, f64::from))
                .collect(),
        }
    }
}
