//! Comparison methods and posterior-quality metrics.

use rand::seq::index::sample as sample_indices;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::SimulatorBundle;
use crate::nn::{Regressor, TrainConfig};
use crate::seed::{derive_seed, stream};

/// Largest point set `exact_w1` will solve.
pub const W1_CAP: usize = 2000;
pub const W1_MAX_DIM: usize = 16;
/// Pooled points used for the median-heuristic bandwidth.
const BANDWIDTH_SUBSAMPLE: usize = 1000;
const EVAL_SEED: u64 = 0x5eed_e7a1;

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn check_points(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<usize> {
    let d = a.first().ok_or(Error::EmptySample)?.len();
    if b.is_empty() {
        return Err(Error::EmptySample);
    }
    for p in a.iter().chain(b) {
        if p.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.len(),
            });
        }
    }
    Ok(d)
}

/// Minimum-cost perfect matching of a square cost matrix (row-major).
/// Shortest augmenting paths with potentials, O(n³).
pub fn assignment(cost: &[f64], n: usize) -> Vec<usize> {
    // 1-based arrays with a sentinel column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        minv.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|f| *f = false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let row = &cost[(i0 - 1) * n..i0 * n];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = row[j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        assign[p[j] - 1] = j - 1;
    }
    assign
}

/// Empirical W₁ between equal-size point sets, via an exact assignment.
pub fn exact_w1(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    let d = check_points(a, b)?;
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!(
            "exact_w1 needs equal sizes, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() > W1_CAP {
        return Err(Error::CapExceeded {
            size: a.len(),
            cap: W1_CAP,
        });
    }
    if d > W1_MAX_DIM {
        return Err(Error::CapExceeded {
            size: d,
            cap: W1_MAX_DIM,
        });
    }
    let n = a.len();
    let cost: Vec<f64> = a
        .par_iter()
        .flat_map_iter(|x| b.iter().map(move |y| euclid(x, y)))
        .collect();
    let assign = assignment(&cost, n);
    // sum in row order for a fixed reduction
    Ok(assign
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i * n + j])
        .sum::<f64>()
        / n as f64)
}

/// Median pairwise distance of the pooled sample (subsampled with a pinned seed).
pub fn median_heuristic(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let pooled: Vec<&Vec<f64>> = a.iter().chain(b).collect();
    let chosen: Vec<&Vec<f64>> = if pooled.len() > BANDWIDTH_SUBSAMPLE {
        let mut rng = stream(EVAL_SEED, "bandwidth", 0);
        let mut idx = sample_indices(&mut rng, pooled.len(), BANDWIDTH_SUBSAMPLE).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| pooled[i]).collect()
    } else {
        pooled
    };
    let mut dists: Vec<f64> = (0..chosen.len())
        .flat_map(|i| (i + 1..chosen.len()).map(move |j| (i, j)))
        .map(|(i, j)| euclid(chosen[i], chosen[j]))
        .collect();
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_by(f64::total_cmp);
    let m = dists.len();
    let med = if m % 2 == 1 {
        dists[m / 2]
    } else {
        0.5 * (dists[m / 2 - 1] + dists[m / 2])
    };
    if med > 0.0 {
        med
    } else {
        1.0
    }
}

/// Unbiased MMD² with a Gaussian kernel of bandwidth `h`.
pub fn mmd2_unbiased(a: &[Vec<f64>], b: &[Vec<f64>], h: f64) -> Result<f64> {
    check_points(a, b)?;
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidArgument(
            "unbiased MMD needs at least two points per sample".into(),
        ));
    }
    let g = -0.5 / (h * h);
    let k = |x: &[f64], y: &[f64]| {
        let d2: f64 = x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum();
        (g * d2).exp()
    };
    let within = |s: &[Vec<f64>]| -> f64 {
        let total: f64 = s
            .par_iter()
            .enumerate()
            .map(|(i, x)| s[i + 1..].iter().map(|y| k(x, y)).sum::<f64>())
            .collect::<Vec<_>>()
            .iter()
            .sum();
        2.0 * total / (s.len() * (s.len() - 1)) as f64
    };
    let cross: f64 = a
        .par_iter()
        .map(|x| b.iter().map(|y| k(x, y)).sum::<f64>())
        .collect::<Vec<_>>()
        .iter()
        .sum();
    Ok(within(a) + within(b) - 2.0 * cross / (a.len() * b.len()) as f64)
}

/// Gaussian-kernel MMD: `sqrt(max(MMD², 0))`, median-heuristic bandwidth by default.
pub fn mmd_gaussian(a: &[Vec<f64>], b: &[Vec<f64>], bandwidth: Option<f64>) -> Result<f64> {
    check_points(a, b)?;
    let h = match bandwidth {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => {
            return Err(Error::InvalidArgument(format!(
                "bandwidth must be > 0, got {h}"
            )))
        }
        None => median_heuristic(a, b),
    };
    Ok(mmd2_unbiased(a, b, h)?.max(0.0).sqrt())
}

/// Posterior-quality summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalReport {
    pub mmd: f64,
    pub w1: f64,
    pub mean_bias: Vec<f64>,
    pub corr_bias: f64,
}

fn means(s: &[Vec<f64>]) -> Vec<f64> {
    let d = s[0].len();
    let n = s.len() as f64;
    (0..d)
        .map(|j| s.iter().map(|x| x[j]).sum::<f64>() / n)
        .collect()
}

/// Correlation matrix; constant coordinates get zero off-diagonal entries.
pub fn correlation(s: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = s[0].len();
    let m = means(s);
    let mut cov = vec![vec![0.0; d]; d];
    for x in s {
        for i in 0..d {
            for j in 0..=i {
                cov[i][j] += (x[i] - m[i]) * (x[j] - m[j]);
            }
        }
    }
    let mut corr = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..=i {
            let denom = (cov[i][i] * cov[j][j]).sqrt();
            let r = if i == j {
                1.0
            } else if denom > 0.0 {
                cov[i][j] / denom
            } else {
                0.0
            };
            corr[i][j] = r;
            corr[j][i] = r;
        }
    }
    corr
}

fn subsample(s: &[Vec<f64>], k: usize, tag: &str) -> Vec<Vec<f64>> {
    if s.len() <= k {
        return s.to_vec();
    }
    let mut rng = stream(EVAL_SEED, tag, 0);
    let mut idx = sample_indices(&mut rng, s.len(), k).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| s[i].clone()).collect()
}

/// Compares posterior draws against reference draws.
pub fn evaluate(posterior: &[Vec<f64>], reference: &[Vec<f64>]) -> Result<EvalReport> {
    let d = check_points(posterior, reference)?;
    let mmd = mmd_gaussian(posterior, reference, None)?;
    let k = posterior.len().min(reference.len()).min(W1_CAP);
    let w1 = exact_w1(
        &subsample(posterior, k, "w1-a"),
        &subsample(reference, k, "w1-b"),
    )?;
    let (ma, mb) = (means(posterior), means(reference));
    let mean_bias = ma.iter().zip(&mb).map(|(a, b)| (a - b).abs()).collect();
    let (ca, cb) = (correlation(posterior), correlation(reference));
    let mut corr_bias = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                corr_bias += (ca[i][j] - cb[i][j]).abs();
            }
        }
    }
    Ok(EvalReport {
        mmd,
        w1,
        mean_bias,
        corr_bias,
    })
}

/// Prior-predictive draws with their data, simulated in parallel from
/// per-draw streams. Invalid simulations are discarded.
pub fn prior_predictive(
    model: &SimulatorBundle,
    budget: usize,
    seed: u64,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    (0..budget)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = stream(seed, "prior-predictive", i as u64);
            let theta = model.sample_prior(&mut rng);
            let sim = model.simulate(&theta, &mut rng);
            sim.valid.then_some((theta, sim.data))
        })
        .collect()
}

/// Keeps the `keep_fraction` share of `thetas` with the smallest distances
/// (ties broken by draw order).
pub fn keep_closest(
    thetas: Vec<Vec<f64>>,
    distances: &[f64],
    budget: usize,
    keep_fraction: f64,
) -> Result<Vec<Vec<f64>>> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "keep_fraction must lie in (0, 1], got {keep_fraction}"
        )));
    }
    if thetas.is_empty() {
        return Err(Error::InsufficientDraws { have: 0, need: 1 });
    }
    let keep = ((keep_fraction * budget as f64).ceil() as usize).clamp(1, thetas.len());
    let mut order: Vec<usize> = (0..thetas.len()).collect();
    order.sort_by(|&i, &j| distances[i].total_cmp(&distances[j]).then(i.cmp(&j)));
    order.truncate(keep);
    order.sort_unstable();
    let mut slots: Vec<Option<Vec<f64>>> = thetas.into_iter().map(Some).collect();
    Ok(order
        .into_iter()
        .map(|i| slots[i].take().unwrap())
        .collect())
}

fn check_budget(model: &SimulatorBundle, x_star: &[f64], budget: usize) -> Result<()> {
    if budget == 0 {
        return Err(Error::InvalidArgument("budget must be >= 1".into()));
    }
    if x_star.len() != model.data_dim {
        return Err(Error::DimensionMismatch {
            expected: model.data_dim,
            got: x_star.len(),
        });
    }
    Ok(())
}

/// Sorted (1-D optimal) W₂ between two equally long value sets.
pub fn sorted_w2(sorted_a: &[f64], sorted_b: &[f64]) -> f64 {
    let n = sorted_a.len() as f64;
    (sorted_a
        .iter()
        .zip(sorted_b)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n)
        .sqrt()
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Rejection ABC on the W₂ distance between flattened datasets, each treated
/// as a set of scalar observations.
pub fn wasserstein_abc(
    model: &SimulatorBundle,
    x_star: &[f64],
    budget: usize,
    keep_fraction: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    check_budget(model, x_star, budget)?;
    let star = sorted(x_star);
    let sims = prior_predictive(model, budget, seed);
    let dist: Vec<f64> = sims
        .par_iter()
        .map(|(_, x)| sorted_w2(&sorted(x), &star))
        .collect();
    keep_closest(
        sims.into_iter().map(|(t, _)| t).collect(),
        &dist,
        budget,
        keep_fraction,
    )
}

/// Plain rejection ABC on the Euclidean distance between raw data vectors.
pub fn rejection_abc(
    model: &SimulatorBundle,
    x_star: &[f64],
    budget: usize,
    keep_fraction: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    check_budget(model, x_star, budget)?;
    let sims = prior_predictive(model, budget, seed);
    let dist: Vec<f64> = sims.par_iter().map(|(_, x)| euclid(x, x_star)).collect();
    keep_closest(
        sims.into_iter().map(|(t, _)| t).collect(),
        &dist,
        budget,
        keep_fraction,
    )
}

/// Settings for the learned-summary baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AbcSsConfig {
    pub hidden: Vec<usize>,
    pub net: TrainConfig,
}

impl Default for AbcSsConfig {
    fn default() -> Self {
        Self {
            hidden: vec![128, 128, 128],
            net: TrainConfig::default(),
        }
    }
}

/// Result of the learned-summary baseline.
#[derive(Debug, Clone)]
pub struct AbcSsOutput {
    pub draws: Vec<Vec<f64>>,
    pub regressor: Regressor,
}

/// Rejection ABC on learned posterior-mean summaries: a network regresses θ
/// on x under squared loss, and draws are ranked by the Euclidean distance
/// between the summaries of their data and of x*, with each summary
/// coordinate scaled by its spread over the simulations.
pub fn abc_ss(
    model: &SimulatorBundle,
    x_star: &[f64],
    budget: usize,
    keep_fraction: f64,
    cfg: &AbcSsConfig,
    seed: u64,
) -> Result<AbcSsOutput> {
    check_budget(model, x_star, budget)?;
    let x_star = &model.input_view.apply(x_star)[..];
    let model = &model.viewed();
    let sims = prior_predictive(model, budget, seed);
    if sims.is_empty() {
        return Err(Error::InsufficientDraws { have: 0, need: 1 });
    }
    let xs: Vec<&[f64]> = sims.iter().map(|(_, x)| x.as_slice()).collect();
    let ys: Vec<&[f64]> = sims.iter().map(|(t, _)| t.as_slice()).collect();
    let mut net_cfg = cfg.net.clone();
    net_cfg.seed = derive_seed(seed, "abc-ss-net", net_cfg.seed);
    let (regressor, _) = Regressor::fit(&xs, &ys, &cfg.hidden, &net_cfg)?;
    let summaries = regressor.predict(&xs);
    let star = regressor.predict(&[x_star]).pop().unwrap();
    let d = star.len();
    let n = summaries.len() as f64;
    let scale: Vec<f64> = (0..d)
        .map(|j| {
            let m = summaries.iter().map(|s| s[j]).sum::<f64>() / n;
            let sd = (summaries.iter().map(|s| (s[j] - m).powi(2)).sum::<f64>() / n).sqrt();
            if sd > 0.0 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    let dist: Vec<f64> = summaries
        .iter()
        .map(|s| {
            s.iter()
                .zip(&star)
                .zip(&scale)
                .map(|((a, b), c)| ((a - b) / c).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let draws = keep_closest(
        sims.into_iter().map(|(t, _)| t).collect(),
        &dist,
        budget,
        keep_fraction,
    )?;
    Ok(AbcSsOutput { draws, regressor })
}
