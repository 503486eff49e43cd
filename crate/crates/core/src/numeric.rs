//! Small numerical helpers shared across modules: deterministic reductions,
//! checkpoint schedules and a couple of statistics.

/// Pairwise (tree) summation. The reduction order depends only on the
/// length of the slice, so results do not change with thread count.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        len if len <= 8 => values.iter().sum(),
        len => {
            let (left, right) = values.split_at(len / 2);
            pairwise_sum(left) + pairwise_sum(right)
        }
    }
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(values) / values.len() as f64
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    }
}

pub fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// `log(mean(exp(values)))` with a max shift so nothing overflows.
pub fn log_mean_exp(values: &[f64]) -> f64 {
    let top = max_of(values);
    if !top.is_finite() {
        return top;
    }
    let shifted: Vec<f64> = values.iter().map(|v| (v - top).exp()).collect();
    top + (pairwise_sum(&shifted) / values.len() as f64).ln()
}

/// Number of checkpoints used to realize a finite-horizon limsup.
pub const LIMSUP_CHECKPOINTS: usize = 16;

/// Geometric checkpoints between `ceil(n/8)` and `n` inclusive, deduplicated
/// and increasing. A finite-horizon `limsup` is the maximum over these.
pub fn limsup_checkpoints(n: usize) -> Vec<usize> {
    let n = n.max(1);
    let lo = n.div_ceil(8).max(1);
    geometric_checkpoints(lo, n, LIMSUP_CHECKPOINTS)
}

/// `count` geometrically spaced integers from `lo` to `hi` (both included),
/// deduplicated.
pub fn geometric_checkpoints(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    let lo = lo.max(1);
    let hi = hi.max(lo);
    if count <= 1 || lo == hi {
        return vec![hi];
    }
    let ratio = (hi as f64 / lo as f64).powf(1.0 / (count - 1) as f64);
    let mut out: Vec<usize> = (0..count)
        .map(|j| ((lo as f64) * ratio.powi(j as i32)).round() as usize)
        .map(|v| v.clamp(lo, hi))
        .collect();
    out[count - 1] = hi;
    out.dedup();
    out
}

/// Logarithmic checkpoints 1, ⌈√2⌉, 2, 3, 4, 6, 8, … up to and including
/// `n_max`.
pub fn log_checkpoints(n_max: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut x = 1.0_f64;
    while (x.round() as usize) < n_max {
        let v = x.round() as usize;
        if out.last() != Some(&v) {
            out.push(v);
        }
        x *= std::f64::consts::SQRT_2;
    }
    if out.last() != Some(&n_max) {
        out.push(n_max);
    }
    out
}

/// Wilson score interval (95%) for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * ((p * (1.0 - p) + z * z / (4.0 * n)) / n).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Ordinary least squares `y = a + b x`. Returns `(a, b, r_squared)`.
/// A perfectly constant response yields `r_squared = 1`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let mx = mean(xs);
    let my = mean(ys);
    let sxx: f64 = pairwise_sum(&xs.iter().map(|x| (x - mx) * (x - mx)).collect::<Vec<_>>());
    let sxy: f64 = pairwise_sum(
        &xs.iter()
            .zip(ys)
            .map(|(x, y)| (x - mx) * (y - my))
            .collect::<Vec<_>>(),
    );
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = pairwise_sum(
        &xs.iter()
            .zip(ys)
            .map(|(x, y)| {
                let r = y - intercept - slope * x;
                r * r
            })
            .collect::<Vec<_>>(),
    );
    let ss_tot: f64 = pairwise_sum(&ys.iter().map(|y| (y - my) * (y - my)).collect::<Vec<_>>());
    let scale = ys.iter().fold(0.0_f64, |m, y| m.max(y.abs())).max(1.0);
    let r2 = if ss_tot <= 1e-24 * scale * scale {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    (intercept, slope, r2)
}
