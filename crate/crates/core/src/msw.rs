//! Trimmed marginally-augmented sliced Wasserstein (MSW) distance.
//!
//! The distance mixes two pieces:
//!
//! - a *marginal* term, the average over coordinate axes of the trimmed
//!   one-dimensional Wasserstein distance, and
//! - a *sliced* term, the p-mean over random unit directions of the same
//!   one-dimensional distance between the pushforward measures.
//!
//! Both are built from one-dimensional quantile functions. Empirical
//! measures are compared exactly ([`trimmed_w_1d`]), while quantile tables
//! emitted by a network are compared through the trapezoid rule
//! ([`i_h_trapezoid`], [`msw_from_quantile_tables`]).

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::Rng;

/// Parameters of the trimmed MSW distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MswConfig {
    /// Order `p >= 1`.
    pub p: f64,
    /// Trimming constant in `[0, 1/2)`.
    pub delta: f64,
    /// Weight of the marginal term, in `(0, 1)`.
    pub lambda: f64,
    /// Number of random slices `K`.
    pub num_slices: usize,
    /// Number of quantile subintervals `H`.
    pub num_quantile_bins: usize,
}

impl Default for MswConfig {
    fn default() -> Self {
        Self {
            p: 1.0,
            delta: 0.02,
            lambda: 0.5,
            num_slices: 5,
            num_quantile_bins: 10,
        }
    }
}

impl MswConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "p must be >= 1, got {}",
                self.p
            )));
        }
        if !(0.0..0.5).contains(&self.delta) {
            return Err(Error::InvalidArgument(format!(
                "delta must lie in [0, 0.5), got {}",
                self.delta
            )));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda must lie in (0, 1), got {}",
                self.lambda
            )));
        }
        if self.num_slices == 0 || self.num_quantile_bins == 0 {
            return Err(Error::InvalidArgument(
                "num_slices and num_quantile_bins must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn grid(&self) -> QuantileGrid {
        QuantileGrid::new(self.delta, self.num_quantile_bins)
    }
}

/// `K` random unit directions followed by the `d` coordinate axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSet {
    directions: Vec<Vec<f64>>,
    dimension: usize,
    num_random: usize,
}

impl ProjectionSet {
    /// Builds a set from explicit random directions; the axes are appended.
    pub fn from_random_directions(dimension: usize, random: Vec<Vec<f64>>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        let num_random = random.len();
        let mut directions = Vec::with_capacity(num_random + dimension);
        for dir in random {
            if dir.len() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    got: dir.len(),
                });
            }
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::InvalidArgument("direction has zero norm".into()));
            }
            directions.push(dir.iter().map(|v| v / norm).collect());
        }
        for j in 0..dimension {
            let mut axis = vec![0.0; dimension];
            axis[j] = 1.0;
            directions.push(axis);
        }
        Ok(Self {
            directions,
            dimension,
            num_random,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// `K`, the number of random slices.
    pub fn num_random(&self) -> usize {
        self.num_random
    }

    /// `K' = K + d`.
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    pub fn random_directions(&self) -> &[Vec<f64>] {
        &self.directions[..self.num_random]
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.directions[self.num_random..]
    }

    /// Scalar projections `<phi_k, point>` for every direction.
    pub fn project(&self, point: &[f64]) -> Vec<f64> {
        self.directions.iter().map(|dir| dot(dir, point)).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Equidistant quantile levels `tau_h = delta + h * step` on `[delta, 1 - delta]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileGrid {
    delta: f64,
    levels: Vec<f64>,
}

impl QuantileGrid {
    pub fn new(delta: f64, bins: usize) -> Self {
        let step = (1.0 - 2.0 * delta) / bins as f64;
        let mut levels: Vec<f64> = (0..=bins).map(|h| delta + h as f64 * step).collect();
        // pin the endpoint against accumulated rounding
        levels[bins] = 1.0 - delta;
        Self { delta, levels }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// `H`, the number of subintervals.
    pub fn bins(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn step(&self) -> f64 {
        (1.0 - 2.0 * self.delta) / self.bins() as f64
    }
}

/// A sorted one-dimensional sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSample1D {
    values: Vec<f64>,
}

impl EmpiricalSample1D {
    /// Sorts `values`; rejects NaN.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::NonFinite("empirical sample"));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// 1-based rank `ceil(tau * m)` clamped to `[1, m]`.
pub(crate) fn quantile_rank(tau: f64, m: usize) -> usize {
    let x = tau * m as f64;
    // absorb rounding noise such as 0.3 * 10 = 3.0000000000000004
    let rank = (x - 1e-9).ceil();
    (rank.max(1.0) as usize).min(m)
}

/// Left-continuous inverse CDF of a sorted sample.
pub fn empirical_quantile(sample: &EmpiricalSample1D, tau: f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidArgument(format!(
            "tau must lie in [0, 1], got {tau}"
        )));
    }
    Ok(sample.values[quantile_rank(tau, sample.len()) - 1])
}

fn pow_abs(x: f64, p: f64) -> f64 {
    if p == 1.0 {
        x.abs()
    } else if p == 2.0 {
        x * x
    } else {
        x.abs().powf(p)
    }
}

/// `(1/(1-2δ)) ∫_δ^{1-δ} |F_a^{-1} - F_b^{-1}|^p dτ` over sorted slices,
/// integrated exactly across the merged rank breakpoints.
fn trimmed_power_integral(a: &[f64], b: &[f64], p: f64, delta: f64) -> f64 {
    let (m, n) = (a.len(), b.len());
    let upper = 1.0 - delta;
    let mut i = ((delta * m as f64).floor() as usize).min(m - 1);
    let mut j = ((delta * n as f64).floor() as usize).min(n - 1);
    let mut lo = delta;
    let mut acc = 0.0;
    loop {
        // compare (i+1)/m with (j+1)/n exactly
        let lhs = (i as u128 + 1) * n as u128;
        let rhs = (j as u128 + 1) * m as u128;
        let next = if lhs <= rhs {
            (i + 1) as f64 / m as f64
        } else {
            (j + 1) as f64 / n as f64
        };
        let hi = next.min(upper);
        if hi > lo {
            acc += (hi - lo) * pow_abs(a[i] - b[j], p);
            lo = hi;
        }
        if next >= upper {
            break;
        }
        match lhs.cmp(&rhs) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    acc / (1.0 - 2.0 * delta)
}

fn check_trim(p: f64, delta: f64) -> Result<()> {
    if !(0.0..0.5).contains(&delta) {
        return Err(Error::InvalidArgument(format!(
            "delta must lie in [0, 0.5), got {delta}"
        )));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("p must be >= 1, got {p}")));
    }
    Ok(())
}

/// The p-th power of the trimmed distance, `W_{p,δ}^p`.
pub fn trimmed_w_1d_pow(
    a: &EmpiricalSample1D,
    b: &EmpiricalSample1D,
    p: f64,
    delta: f64,
) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    check_trim(p, delta)?;
    Ok(trimmed_power_integral(&a.values, &b.values, p, delta))
}

/// The δ-trimmed `W_p` distance between two empirical measures.
pub fn trimmed_w_1d(
    a: &EmpiricalSample1D,
    b: &EmpiricalSample1D,
    p: f64,
    delta: f64,
) -> Result<f64> {
    Ok(trimmed_w_1d_pow(a, b, p, delta)?.powf(1.0 / p))
}

/// Trapezoid approximation of the trimmed p-th-power integral between two
/// quantile functions tabulated on an `H + 1` point grid. Un-rooted.
pub fn i_h_trapezoid(q1: &[f64], q2: &[f64], p: f64, delta: f64, bins: usize) -> Result<f64> {
    if q1.len() != bins + 1 || q2.len() != bins + 1 {
        return Err(Error::ShapeMismatch(format!(
            "expected {} quantile values, got {} and {}",
            bins + 1,
            q1.len(),
            q2.len()
        )));
    }
    Ok(trapezoid_unchecked(q1, q2, p, delta))
}

fn trapezoid_unchecked(q1: &[f64], q2: &[f64], p: f64, delta: f64) -> f64 {
    let bins = q1.len() - 1;
    let step = (1.0 - 2.0 * delta) / bins as f64;
    let mut sum = pow_abs(q1[0] - q2[0], p) + pow_abs(q1[bins] - q2[bins], p);
    for h in 1..bins {
        sum += 2.0 * pow_abs(q1[h] - q2[h], p);
    }
    step / (2.0 * (1.0 - 2.0 * delta)) * sum
}

/// Draws `K` directions uniformly on the sphere (normalized Gaussians) and
/// appends the coordinate axes.
pub fn sample_projections(dimension: usize, count: usize, rng: &mut Rng) -> Result<ProjectionSet> {
    if dimension == 0 || count == 0 {
        return Err(Error::InvalidArgument(
            "dimension and slice count must be >= 1".into(),
        ));
    }
    let mut random = Vec::with_capacity(count);
    while random.len() < count {
        let v: Vec<f64> = (0..dimension).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            random.push(v.iter().map(|x| x / norm).collect());
        }
    }
    ProjectionSet::from_random_directions(dimension, random)
}

fn projected_sorted<P: AsRef<[f64]>>(points: &[P], dir: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = points.iter().map(|x| dot(dir, x.as_ref())).collect();
    v.sort_by(f64::total_cmp);
    v
}

fn check_points<P: AsRef<[f64]>>(points: &[P], dim: usize) -> Result<()> {
    if points.is_empty() {
        return Err(Error::EmptySample);
    }
    for x in points {
        let x = x.as_ref();
        if x.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| v.is_nan()) {
            return Err(Error::NonFinite("point set"));
        }
    }
    Ok(())
}

/// Trimmed MSW distance between two empirical measures in `R^d`.
///
/// Each direction's 1-D term is computed independently (possibly in
/// parallel), then reduced sequentially in slice order so the result does
/// not depend on scheduling.
pub fn msw_empirical<P: AsRef<[f64]> + Sync>(
    samples_a: &[P],
    samples_b: &[P],
    cfg: &MswConfig,
    proj: &ProjectionSet,
) -> Result<f64> {
    cfg.validate()?;
    let d = proj.dimension();
    check_points(samples_a, d)?;
    check_points(samples_b, d)?;

    let terms: Vec<f64> = proj
        .directions()
        .par_iter()
        .map(|dir| {
            let a = projected_sorted(samples_a, dir);
            let b = projected_sorted(samples_b, dir);
            trimmed_power_integral(&a, &b, cfg.p, cfg.delta)
        })
        .collect();
    Ok(combine_terms(&terms, proj.num_random(), d, cfg))
}

/// Combines per-direction p-th-power terms (random slices first, then axes).
fn combine_terms(terms: &[f64], num_random: usize, d: usize, cfg: &MswConfig) -> f64 {
    let inv_p = 1.0 / cfg.p;
    let mut marginal = 0.0;
    for t in &terms[num_random..] {
        marginal += t.powf(inv_p);
    }
    marginal /= d as f64;
    let mut sliced = 0.0;
    for t in &terms[..num_random] {
        sliced += *t;
    }
    let sliced = if num_random == 0 {
        0.0
    } else {
        (sliced / num_random as f64).powf(inv_p)
    };
    cfg.lambda * marginal + (1.0 - cfg.lambda) * sliced
}

/// A `K' x (H+1)` table of conditional quantiles, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileTable {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl QuantileTable {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values cannot form a {rows}x{cols} table",
                values.len()
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch("ragged quantile rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.cols..(k + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sorts each row ascending.
    pub fn sort_rows(&mut self) {
        for row in self.values.chunks_mut(self.cols.max(1)) {
            row.sort_by(f64::total_cmp);
        }
    }
}

/// MSW estimate from two quantile tables, using the trapezoid rule per row.
/// Rows `0..K` are random slices and rows `K..K+d` are the axes.
pub fn msw_from_quantile_tables(
    qx: &QuantileTable,
    qstar: &QuantileTable,
    cfg: &MswConfig,
    d: usize,
) -> Result<f64> {
    if qx.rows != qstar.rows || qx.cols != qstar.cols {
        return Err(Error::ShapeMismatch(format!(
            "tables are {}x{} and {}x{}",
            qx.rows, qx.cols, qstar.rows, qstar.cols
        )));
    }
    if qx.cols != cfg.num_quantile_bins + 1 {
        return Err(Error::ShapeMismatch(format!(
            "table has {} columns, expected H+1 = {}",
            qx.cols,
            cfg.num_quantile_bins + 1
        )));
    }
    if d == 0 || qx.rows < d {
        return Err(Error::ShapeMismatch(format!(
            "{} rows cannot hold {d} axes",
            qx.rows
        )));
    }
    let num_random = qx.rows - d;
    let terms: Vec<f64> = (0..qx.rows)
        .map(|k| trapezoid_unchecked(qx.row(k), qstar.row(k), cfg.p, cfg.delta))
        .collect();
    Ok(combine_terms(&terms, num_random, d, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use approx::assert_abs_diff_eq;

    fn s(v: &[f64]) -> EmpiricalSample1D {
        EmpiricalSample1D::new(v.to_vec()).unwrap()
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(empirical_quantile(&s(&[1., 2., 3., 4.]), 0.5).unwrap(), 2.0);
        for tau in [0.0, 0.3, 1.0] {
            assert_eq!(empirical_quantile(&s(&[7.]), tau).unwrap(), 7.0);
        }
        assert_eq!(empirical_quantile(&s(&[0., 10.]), 0.76).unwrap(), 10.0);
        assert!(matches!(
            empirical_quantile(&s(&[]), 0.5),
            Err(Error::EmptySample)
        ));
    }

    #[test]
    fn quantile_matches_inf_definition() {
        // inf{x : F(x) >= tau} by brute force over the atoms
        let vals = [3.0, -1.0, 2.0, 2.0, 8.0, 0.5, 4.0];
        let sample = s(&vals);
        let m = vals.len() as f64;
        for step in 0..=100 {
            let tau = step as f64 / 100.0;
            let mut best = f64::INFINITY;
            for &x in &vals {
                let cdf = vals.iter().filter(|&&v| v <= x).count() as f64 / m;
                if cdf >= tau - 1e-12 && x < best {
                    best = x;
                }
            }
            assert_eq!(empirical_quantile(&sample, tau).unwrap(), best, "tau={tau}");
        }
    }

    #[test]
    fn trimmed_w_examples() {
        let a = s(&[0.3, 1.2, -4.0, 2.2]);
        assert_eq!(trimmed_w_1d(&a, &a, 2.0, 0.1).unwrap(), 0.0);
        assert_abs_diff_eq!(
            trimmed_w_1d(&s(&[0.]), &s(&[2.5]), 1.0, 0.1).unwrap(),
            2.5,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            trimmed_w_1d(&s(&[0., 1.]), &s(&[0., 2.]), 1.0, 0.0).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        assert!(trimmed_w_1d(&s(&[]), &a, 1.0, 0.0).is_err());
    }

    /// Riemann sum of the quantile gap on a fine grid of midpoints.
    fn riemann(a: &EmpiricalSample1D, b: &EmpiricalSample1D, p: f64, delta: f64, n: usize) -> f64 {
        let w = (1.0 - 2.0 * delta) / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let tau = delta + (i as f64 + 0.5) * w;
            let qa = empirical_quantile(a, tau).unwrap();
            let qb = empirical_quantile(b, tau).unwrap();
            acc += w * (qa - qb).abs().powf(p);
        }
        (acc / (1.0 - 2.0 * delta)).powf(1.0 / p)
    }

    #[test]
    fn unequal_sizes_match_fine_riemann_sum() {
        let mut rng = rng_from_seed(3);
        for (m, n) in [(3, 7), (10, 4), (13, 13), (1, 5)] {
            let a = s(&(0..m)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect::<Vec<_>>());
            let b = s(&(0..n)
                .map(|_| 1.0 + rng.sample::<f64, _>(StandardNormal))
                .collect::<Vec<_>>());
            for (p, delta) in [(1.0, 0.0), (2.0, 0.1), (1.5, 0.23)] {
                let exact = trimmed_w_1d(&a, &b, p, delta).unwrap();
                let approx = riemann(&a, &b, p, delta, 200_000);
                assert_abs_diff_eq!(exact, approx, epsilon = 1e-4);
            }
        }
    }

    #[test]
    fn trapezoid_examples() {
        let q = [0.1, 0.5, 0.9];
        assert_eq!(i_h_trapezoid(&q, &q, 1.0, 0.0, 2).unwrap(), 0.0);
        let shifted: Vec<f64> = q.iter().map(|v| v + 0.7).collect();
        assert_abs_diff_eq!(
            i_h_trapezoid(&q, &shifted, 2.0, 0.05, 2).unwrap(),
            0.49,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            i_h_trapezoid(&[0., 1., 0.], &[0., 0., 0.], 1.0, 0.0, 2).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        assert!(i_h_trapezoid(&[0., 1.], &[0., 0., 0.], 1.0, 0.0, 2).is_err());
    }

    #[test]
    fn grid_levels() {
        let g = QuantileGrid::new(0.02, 10);
        assert_eq!(g.levels()[0], 0.02);
        assert_eq!(g.levels()[10], 0.98);
        assert!(g.levels().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn projections_contract() {
        let mut rng = rng_from_seed(11);
        let proj = sample_projections(3, 5, &mut rng).unwrap();
        assert_eq!(proj.len(), 8);
        for dir in proj.directions() {
            let n: f64 = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() <= 1e-12);
        }
        assert_eq!(
            proj.axes(),
            &[vec![1., 0., 0.], vec![0., 1., 0.], vec![0., 0., 1.]]
        );
        let again = sample_projections(3, 5, &mut rng_from_seed(11)).unwrap();
        assert_eq!(proj, again);
    }

    #[test]
    fn msw_identity_and_dimension_check() {
        let cfg = MswConfig::default();
        let proj = sample_projections(2, 5, &mut rng_from_seed(1)).unwrap();
        let a = vec![vec![0.0, 1.0], vec![2.0, -1.0], vec![0.5, 0.5]];
        assert_eq!(msw_empirical(&a, &a, &cfg, &proj).unwrap(), 0.0);
        let bad = vec![vec![0.0, 1.0, 2.0]];
        assert!(matches!(
            msw_empirical(&a, &bad, &cfg, &proj),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn msw_point_masses_approach_closed_form() {
        // a = {(0,0)}, b = {c}: each 1-D term is |phi . c|, and E|phi . c| = (2/pi)|c| on S^1
        let c = [1.5, -0.8];
        let cfg = MswConfig {
            p: 1.0,
            delta: 0.0,
            lambda: 0.5,
            num_slices: 100_000,
            num_quantile_bins: 10,
        };
        let proj = sample_projections(2, cfg.num_slices, &mut rng_from_seed(5)).unwrap();
        let a = vec![vec![0.0, 0.0]; 3];
        let b = vec![c.to_vec(); 3];
        let got = msw_empirical(&a, &b, &cfg, &proj).unwrap();
        let norm = c[0] * c[0] + c[1] * c[1];
        let expected = 0.5 * (c[0].abs() + c[1].abs()) / 2.0
            + 0.5 * (2.0 / std::f64::consts::PI) * norm.sqrt();
        // Monte Carlo slice error ~ sd(|cos|)*|c| / sqrt(K)
        assert_abs_diff_eq!(got, expected, epsilon = 0.01);
    }

    #[test]
    fn table_examples() {
        let cfg = MswConfig {
            p: 1.0,
            delta: 0.0,
            lambda: 0.5,
            num_slices: 3,
            num_quantile_bins: 4,
        };
        let base: Vec<Vec<f64>> = (0..5)
            .map(|k| (0..5).map(|h| (k * h) as f64 * 0.1).collect())
            .collect();
        let qx = QuantileTable::from_rows(&base).unwrap();
        assert_eq!(msw_from_quantile_tables(&qx, &qx, &cfg, 2).unwrap(), 0.0);

        let shifted: Vec<Vec<f64>> = base
            .iter()
            .map(|r| r.iter().map(|v| v - 0.35).collect())
            .collect();
        let qs = QuantileTable::from_rows(&shifted).unwrap();
        assert_abs_diff_eq!(
            msw_from_quantile_tables(&qx, &qs, &cfg, 2).unwrap(),
            0.35,
            epsilon = 1e-12
        );

        let mut one_axis = base.clone();
        for v in one_axis[3].iter_mut() {
            *v += 1.0;
        }
        let qa = QuantileTable::from_rows(&one_axis).unwrap();
        assert_abs_diff_eq!(
            msw_from_quantile_tables(&qx, &qa, &cfg, 2).unwrap(),
            0.25,
            epsilon = 1e-12
        );

        let small = QuantileTable::from_rows(&base[..4]).unwrap();
        assert!(msw_from_quantile_tables(&qx, &small, &cfg, 2).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(MswConfig::default().validate().is_ok());
        for bad in [
            MswConfig {
                delta: 0.5,
                ..Default::default()
            },
            MswConfig {
                lambda: 1.0,
                ..Default::default()
            },
            MswConfig {
                p: 0.5,
                ..Default::default()
            },
            MswConfig {
                num_slices: 0,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn sample() -> impl Strategy<Value = Vec<f64>> {
            prop::collection::vec(-50.0..50.0f64, 1..40)
        }

        fn w(a: &[f64], b: &[f64], p: f64, delta: f64) -> f64 {
            trimmed_w_1d(&s(a), &s(b), p, delta).unwrap()
        }

        proptest! {
            #[test]
            fn trimmed_distance_is_a_pseudometric(
                a in sample(), b in sample(), c in sample(),
                p in 1.0..3.0f64, delta in 0.0..0.45f64,
            ) {
                let ab = w(&a, &b, p, delta);
                prop_assert!(ab >= 0.0);
                prop_assert!(w(&a, &a, p, delta) <= 1e-12);
                prop_assert!((ab - w(&b, &a, p, delta)).abs() <= 1e-9 * (1.0 + ab));
                let bound = w(&a, &c, p, delta) + w(&c, &b, p, delta);
                prop_assert!(ab <= bound + 1e-9 * (1.0 + bound));
            }

            #[test]
            fn translation_moves_distance_by_the_shift(
                a in sample(), shift in -20.0..20.0f64,
                p in 1.0..3.0f64, delta in 0.0..0.45f64,
            ) {
                let b: Vec<f64> = a.iter().map(|x| x + shift).collect();
                prop_assert!((w(&a, &b, p, delta) - shift.abs()).abs() <= 1e-9 * (1.0 + shift.abs()));
            }

            #[test]
            fn more_trimming_never_hurts_for_p_one(
                a in sample(), b in sample(), d1 in 0.0..0.2f64, extra in 0.0..0.25f64,
            ) {
                // the unnormalized trimmed integral shrinks as the window narrows
                let wide = trimmed_w_1d_pow(&s(&a), &s(&b), 1.0, d1).unwrap() * (1.0 - 2.0 * d1);
                let d2 = d1 + extra;
                let narrow = trimmed_w_1d_pow(&s(&a), &s(&b), 1.0, d2).unwrap() * (1.0 - 2.0 * d2);
                prop_assert!(narrow <= wide + 1e-9 * (1.0 + wide));
            }

            #[test]
            fn msw_is_symmetric_and_zero_on_itself(
                pts_a in prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 3), 2..30),
                pts_b in prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 3), 2..30),
                seed in 0u64..1000,
            ) {
                let cfg = MswConfig::default();
                let proj = sample_projections(3, cfg.num_slices, &mut rng_from_seed(seed)).unwrap();
                let ab = msw_empirical(&pts_a, &pts_b, &cfg, &proj).unwrap();
                let ba = msw_empirical(&pts_b, &pts_a, &cfg, &proj).unwrap();
                prop_assert!(ab >= 0.0);
                prop_assert!((ab - ba).abs() <= 1e-12 * (1.0 + ab));
                prop_assert!(msw_empirical(&pts_a, &pts_a, &cfg, &proj).unwrap() <= 1e-12);
            }
        }
    }
}
