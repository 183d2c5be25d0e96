//! Gaussian mixture proposal model.
//!
//! Fitted by EM from a k-means++ start for each candidate component count,
//! with the count chosen by BIC. Covariances are constrained to have every
//! eigenvalue at or above a floor; the M-step solves that constrained problem
//! exactly (eigenvalue clipping of the weighted scatter), so the observed
//! log-likelihood never decreases across EM iterations.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{stream, Rng};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Inclusive range of component counts tried.
    pub component_range: (usize, usize),
    pub em_max_iters: usize,
    /// Stop when the relative log-likelihood change falls below this.
    pub em_tol: f64,
    /// Eigenvalue floor as a multiple of the median marginal variance.
    pub cov_regularization: f64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            component_range: (1, 8),
            em_max_iters: 500,
            em_tol: 1e-6,
            cov_regularization: 1e-6,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.component_range;
        if lo < 1 || hi < lo {
            return Err(Error::InvalidArgument(format!(
                "bad component range ({lo}, {hi})"
            )));
        }
        if !(self.em_tol > 0.0) {
            return Err(Error::InvalidArgument("em_tol must be > 0".into()));
        }
        if !(self.cov_regularization > 0.0) {
            return Err(Error::InvalidArgument(
                "cov_regularization must be > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MixtureSpec {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    covariances: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone)]
struct Component {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    chol: DMatrix<f64>,
    /// Row-major lower Cholesky factor.
    chol_flat: Vec<f64>,
    /// `-0.5 * (d ln 2pi + ln det)`.
    log_norm: f64,
}

impl Component {
    fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let chol = cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("covariance is not positive definite".into()))?
            .l();
        let log_det = 2.0 * chol.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        if !log_det.is_finite() {
            return Err(Error::Numerical("degenerate covariance".into()));
        }
        let d = mean.len();
        let chol_flat = (0..d * d).map(|k| chol[(k / d, k % d)]).collect();
        Ok(Self {
            mean,
            cov,
            chol,
            chol_flat,
            log_norm: -0.5 * (d as f64 * LN_2PI + log_det),
        })
    }

    /// Log-density at `x`; `z` is scratch of length `d`.
    fn log_pdf_with(&self, x: &[f64], z: &mut [f64]) -> f64 {
        let d = x.len();
        let mean = self.mean.as_slice();
        let mut q = 0.0;
        for i in 0..d {
            let row = &self.chol_flat[i * d..i * d + i + 1];
            let mut s = x[i] - mean[i];
            for j in 0..i {
                s -= row[j] * z[j];
            }
            let v = s / row[i];
            z[i] = v;
            q += v * v;
        }
        self.log_norm - 0.5 * q
    }

    fn log_pdf(&self, x: &[f64]) -> f64 {
        let mut z = vec![0.0; x.len()];
        self.log_pdf_with(x, &mut z)
    }
}

/// A finite mixture of full-covariance Gaussians.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "MixtureSpec", into = "MixtureSpec")]
pub struct GaussianMixture {
    weights: Vec<f64>,
    components: Vec<Component>,
    dim: usize,
}

impl PartialEq for GaussianMixture {
    fn eq(&self, other: &Self) -> bool {
        self.weights == other.weights
            && self.components.len() == other.components.len()
            && self
                .components
                .iter()
                .zip(&other.components)
                .all(|(a, b)| a.mean == b.mean && a.cov == b.cov)
    }
}

impl TryFrom<MixtureSpec> for GaussianMixture {
    type Error = Error;
    fn try_from(spec: MixtureSpec) -> Result<Self> {
        GaussianMixture::new(spec.weights, spec.means, spec.covariances)
    }
}

impl From<GaussianMixture> for MixtureSpec {
    fn from(g: GaussianMixture) -> Self {
        MixtureSpec {
            weights: g.weights.clone(),
            means: g.means(),
            covariances: g.covariances(),
        }
    }
}

impl GaussianMixture {
    pub fn new(
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        covariances: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let k = weights.len();
        if k == 0 || means.len() != k || covariances.len() != k {
            return Err(Error::ShapeMismatch(
                "mixture needs matching weights, means and covariances".into(),
            ));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidArgument(
                "mixture weights must be nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "mixture weights sum to {total}"
            )));
        }
        let dim = means[0].len();
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "mixture dimension must be >= 1".into(),
            ));
        }
        let components = means
            .into_iter()
            .zip(covariances)
            .map(|(m, c)| {
                if m.len() != dim || c.len() != dim || c.iter().any(|r| r.len() != dim) {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: m.len(),
                    });
                }
                let cov = DMatrix::from_fn(dim, dim, |i, j| c[i][j]);
                Component::new(DVector::from_vec(m), cov)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            weights,
            components,
            dim,
        })
    }

    fn from_components(weights: Vec<f64>, components: Vec<Component>) -> Self {
        let dim = components[0].mean.len();
        Self {
            weights,
            components,
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_components(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> Vec<Vec<f64>> {
        self.components
            .iter()
            .map(|c| c.mean.iter().copied().collect())
            .collect()
    }

    pub fn covariances(&self) -> Vec<Vec<Vec<f64>>> {
        self.components
            .iter()
            .map(|c| {
                (0..self.dim)
                    .map(|i| c.cov.row(i).iter().copied().collect())
                    .collect()
            })
            .collect()
    }

    /// Overall mean and covariance of the mixture.
    pub fn moments(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        let d = self.dim;
        let mut mean = DVector::zeros(d);
        for (w, c) in self.weights.iter().zip(&self.components) {
            mean += *w * &c.mean;
        }
        let mut cov = DMatrix::zeros(d, d);
        for (w, c) in self.weights.iter().zip(&self.components) {
            let diff = &c.mean - &mean;
            cov += *w * (&c.cov + &diff * diff.transpose());
        }
        (
            mean.iter().copied().collect(),
            (0..d)
                .map(|i| cov.row(i).iter().copied().collect())
                .collect(),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Mixture log-density at `point`.
pub fn log_density(model: &GaussianMixture, point: &[f64]) -> f64 {
    let terms: Vec<f64> = model
        .weights
        .iter()
        .zip(&model.components)
        .map(|(w, c)| w.ln() + c.log_pdf(point))
        .collect();
    log_sum_exp(&terms)
}

/// Ancestral sampling: a categorical component draw, then `mean + L z`.
pub fn sample(model: &GaussianMixture, count: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
    (0..count).map(|_| sample_one(model, rng)).collect()
}

pub(crate) fn sample_one(model: &GaussianMixture, rng: &mut Rng) -> Vec<f64> {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut idx = model.weights.len() - 1;
    for (i, w) in model.weights.iter().enumerate() {
        acc += w;
        if u < acc {
            idx = i;
            break;
        }
    }
    // skip zero-weight tails picked up by rounding
    while model.weights[idx] == 0.0 && idx > 0 {
        idx -= 1;
    }
    let c = &model.components[idx];
    let z = DVector::from_iterator(
        model.dim,
        (0..model.dim).map(|_| rng.sample::<f64, _>(StandardNormal)),
    );
    (&c.mean + &c.chol * z).iter().copied().collect()
}

/// A single EM run and its log-likelihood trace.
#[derive(Debug, Clone)]
pub struct EmFit {
    pub mixture: GaussianMixture,
    /// Observed-data log-likelihood after each E-step.
    pub log_likelihoods: Vec<f64>,
}

impl EmFit {
    pub fn log_likelihood(&self) -> f64 {
        *self.log_likelihoods.last().unwrap()
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Absolute eigenvalue floor for `samples`.
fn covariance_floor(samples: &[Vec<f64>], regularization: f64) -> f64 {
    let d = samples[0].len();
    let n = samples.len() as f64;
    let mut variances = Vec::with_capacity(d);
    let mut scale: f64 = 1.0;
    for j in 0..d {
        let mean = samples.iter().map(|x| x[j]).sum::<f64>() / n;
        let var = samples.iter().map(|x| (x[j] - mean).powi(2)).sum::<f64>() / n;
        variances.push(var);
        scale = scale.max(mean.abs());
    }
    let med = median(variances);
    (regularization * med).max(1e-14 * scale * scale)
}

fn kmeans_pp(samples: &[Vec<f64>], k: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
    let n = samples.len();
    let mut centers = vec![samples[rng.random_range(0..n)].clone()];
    let mut dist: Vec<f64> = samples.iter().map(|x| sq_dist(x, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = dist.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, d) in dist.iter().enumerate() {
                acc += d;
                if acc > target {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centers.push(samples[next].clone());
        for (d, x) in dist.iter_mut().zip(samples) {
            *d = d.min(sq_dist(x, centers.last().unwrap()));
        }
    }
    centers
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Eigenvalues of the symmetric `s` clipped at `floor`.
fn clip_eigenvalues(s: DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let d = s.nrows();
    let eig = SymmetricEigen::new(s);
    let clipped = eig.eigenvalues.map(|v| v.max(floor));
    let q = &eig.eigenvectors;
    let mut out = q * DMatrix::from_diagonal(&clipped) * q.transpose();
    // exact symmetry
    for i in 0..d {
        for j in 0..i {
            let v = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// M-step from row-major samples (`n x d`) and responsibilities (`n x k`).
fn m_step(flat: &[f64], d: usize, resp: &[f64], k: usize, floor: f64) -> Result<GaussianMixture> {
    let n = flat.len() / d;
    let mut weights = Vec::with_capacity(k);
    let mut comps = Vec::with_capacity(k);
    let mut diff = vec![0.0; d];
    for c in 0..k {
        let total: f64 = (0..n).map(|i| resp[i * k + c]).sum();
        if !(total > 1e-10) {
            return Err(Error::Numerical(
                "mixture component lost all responsibility".into(),
            ));
        }
        let mut mean = vec![0.0; d];
        for (x, r) in flat.chunks_exact(d).zip(resp.chunks_exact(k)) {
            let w = r[c];
            for j in 0..d {
                mean[j] += w * x[j];
            }
        }
        mean.iter_mut().for_each(|m| *m /= total);
        // upper triangle of the weighted scatter
        let mut scatter = vec![0.0; d * d];
        for (x, r) in flat.chunks_exact(d).zip(resp.chunks_exact(k)) {
            let w = r[c];
            if w == 0.0 {
                continue;
            }
            for j in 0..d {
                diff[j] = x[j] - mean[j];
            }
            for a in 0..d {
                let wa = w * diff[a];
                let row = &mut scatter[a * d..(a + 1) * d];
                for b in a..d {
                    row[b] += wa * diff[b];
                }
            }
        }
        let s = DMatrix::from_fn(d, d, |a, b| {
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            scatter[a * d + b] / total
        });
        weights.push(total / n as f64);
        comps.push(Component::new(
            DVector::from_vec(mean),
            clip_eigenvalues(s, floor),
        )?);
    }
    let s: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= s);
    Ok(GaussianMixture::from_components(weights, comps))
}

/// E-step: fills `resp` (`n x k`) and returns the observed-data log-likelihood.
fn e_step(model: &GaussianMixture, flat: &[f64], d: usize, resp: &mut [f64]) -> f64 {
    let k = model.num_components();
    let log_w: Vec<f64> = model.weights.iter().map(|w| w.ln()).collect();
    let mut z = vec![0.0; d];
    let mut ll = 0.0;
    for (x, r) in flat.chunks_exact(d).zip(resp.chunks_exact_mut(k)) {
        let mut max = f64::NEG_INFINITY;
        for c in 0..k {
            let t = log_w[c] + model.components[c].log_pdf_with(x, &mut z);
            r[c] = t;
            max = max.max(t);
        }
        if !max.is_finite() {
            return f64::NEG_INFINITY;
        }
        let mut sum = 0.0;
        for v in r.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        r.iter_mut().for_each(|v| *v /= sum);
        ll += max + sum.ln();
    }
    ll
}

/// EM with `k` components from a seeded k-means++ start, at a fixed floor.
pub fn fit_em(
    samples: &[Vec<f64>],
    k: usize,
    floor: f64,
    max_iters: usize,
    tol: f64,
    rng: &mut Rng,
) -> Result<EmFit> {
    if samples.len() < k {
        return Err(Error::InsufficientDraws {
            have: samples.len(),
            need: k,
        });
    }
    let centers = kmeans_pp(samples, k, rng);
    let n = samples.len();
    let d = samples[0].len();
    let flat: Vec<f64> = samples.iter().flatten().copied().collect();
    let mut resp = vec![0.0; n * k];
    for (x, r) in samples.iter().zip(resp.chunks_exact_mut(k)) {
        let best = (0..k)
            .min_by(|&a, &b| sq_dist(x, &centers[a]).total_cmp(&sq_dist(x, &centers[b])))
            .unwrap();
        r[best] = 1.0;
    }
    // centers that won no point (duplicates) get a uniform share
    for c in 0..k {
        if (0..n).all(|i| resp[i * k + c] == 0.0) {
            let share = 1.0 / n as f64;
            (0..n).for_each(|i| resp[i * k + c] = share);
        }
    }
    let mut model = m_step(&flat, d, &resp, k, floor)?;
    let mut trace = Vec::new();
    for _ in 0..max_iters.max(1) {
        let ll = e_step(&model, &flat, d, &mut resp);
        if !ll.is_finite() {
            return Err(Error::Numerical("non-finite log-likelihood".into()));
        }
        let done = trace
            .last()
            .is_some_and(|prev: &f64| (ll - prev).abs() <= tol * ll.abs().max(1.0));
        trace.push(ll);
        if done {
            break;
        }
        model = m_step(&flat, d, &resp, k, floor)?;
    }
    // the trace's last entry is the likelihood of `model`
    Ok(EmFit {
        mixture: model,
        log_likelihoods: trace,
    })
}

fn bic(ll: f64, k: usize, d: usize, n: usize) -> f64 {
    let params = (k - 1) + k * d + k * d * (d + 1) / 2;
    -2.0 * ll + params as f64 * (n as f64).ln()
}

/// Fits a mixture to `samples`, choosing the component count by BIC.
pub fn fit(samples: &[Vec<f64>], cfg: &FitConfig) -> Result<GaussianMixture> {
    Ok(fit_with_diagnostics(samples, cfg)?.0)
}

/// Like [`fit`], also returning the chosen component count's EM trace.
pub fn fit_with_diagnostics(
    samples: &[Vec<f64>],
    cfg: &FitConfig,
) -> Result<(GaussianMixture, EmFit)> {
    cfg.validate()?;
    let n = samples.len();
    let d = samples.first().map_or(0, Vec::len);
    if d == 0 {
        return Err(Error::InsufficientDraws { have: n, need: 2 });
    }
    if n < 2 * d {
        return Err(Error::InsufficientDraws {
            have: n,
            need: 2 * d,
        });
    }
    if samples.iter().any(|x| x.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: 0,
        });
    }
    if samples.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("mixture training samples"));
    }
    // every component should be backed by a handful of points per free dimension
    let k_cap = (n / (5 * (d + 1))).max(1);
    let (k_lo, k_hi) = cfg.component_range;
    let k_hi = k_hi.min(k_cap).max(k_lo.min(k_cap));
    let k_lo = k_lo.min(k_hi);

    let base_floor = covariance_floor(samples, cfg.cov_regularization);
    let mut best: Option<(f64, EmFit)> = None;
    let mut last_err = None;
    for k in k_lo..=k_hi {
        let mut floor = base_floor;
        let mut attempt = 0;
        let fitted = loop {
            let mut rng = stream(cfg.seed, "gmm-init", (k as u64) << 8 | attempt as u64);
            match fit_em(samples, k, floor, cfg.em_max_iters, cfg.em_tol, &mut rng) {
                Ok(f) => break Some(f),
                Err(e) if attempt < 3 => {
                    last_err = Some(e);
                    floor *= 2.0;
                    attempt += 1;
                }
                Err(e) => {
                    last_err = Some(e);
                    break None;
                }
            }
        };
        if let Some(f) = fitted {
            let score = bic(f.log_likelihood(), k, d, n);
            if best.as_ref().is_none_or(|(b, _)| score < *b) {
                best = Some((score, f));
            }
        }
    }
    match best {
        Some((_, f)) => Ok((f.mixture.clone(), f)),
        None => Err(last_err.unwrap_or_else(|| Error::Numerical("EM failed".into()))),
    }
}
