//! The adaptive inference loop.
//!
//! Each iteration draws training pairs from the current proposal by
//! approximate rejection sampling (ARS) under the previous acceptance event,
//! refits the acceptance statistic, and redraws proposal pairs screened by
//! the refitted statistic at the previous threshold. It then picks the next
//! threshold, prunes, and fits a Gaussian mixture as the next proposal.
//! Simulated and observed data are seen through the model's input view.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmm::{self, FitConfig, GaussianMixture};
use crate::models::{SimulatorBundle, SupportTransform};
use crate::msw::{empirical_quantile, sample_projections, EmpiricalSample1D, MswConfig};
use crate::nn::TrainConfig;
use crate::quantile::{self, MswKernel, QuantileNet, DEFAULT_HIDDEN};
use crate::seed::{derive_seed, stream, Rng};
use crate::Pair;

/// Which acceptance statistic the loop uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    /// Estimated posterior MSW from the quantile network.
    Kernel,
    /// Euclidean distance between raw data vectors.
    Euclidean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AbiConfig {
    pub iterations: usize,
    pub proposals_per_iter: usize,
    pub train_pairs_per_iter: usize,
    pub ars_budget: usize,
    pub quantile_fraction: f64,
    pub statistic: StatisticKind,
    pub msw: MswConfig,
    pub hidden: Vec<usize>,
    pub net: TrainConfig,
    pub density: FitConfig,
    pub seed: u64,
}

impl Default for AbiConfig {
    fn default() -> Self {
        Self {
            iterations: 2,
            proposals_per_iter: 5000,
            train_pairs_per_iter: 5000,
            ars_budget: 20,
            quantile_fraction: 0.1,
            statistic: StatisticKind::Kernel,
            msw: MswConfig::default(),
            hidden: DEFAULT_HIDDEN.to_vec(),
            net: TrainConfig::default(),
            density: FitConfig::default(),
            seed: 0,
        }
    }
}

impl AbiConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0
            || self.proposals_per_iter == 0
            || self.train_pairs_per_iter == 0
            || self.ars_budget == 0
        {
            return Err(Error::InvalidArgument(
                "iterations, proposals_per_iter, train_pairs_per_iter and ars_budget must be >= 1"
                    .into(),
            ));
        }
        if !(self.quantile_fraction > 0.0 && self.quantile_fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "quantile_fraction must lie in (0, 1], got {}",
                self.quantile_fraction
            )));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::InvalidArgument(
                "hidden layer widths must be nonempty and >= 1".into(),
            ));
        }
        self.msw.validate()?;
        self.net.validate()?;
        self.density.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub index: usize,
    pub epsilon: f64,
    /// Accepted draws over simulator calls, across both ARS batches.
    pub ars_acceptance_rate: f64,
    pub retained_count: usize,
    /// Retained draws over proposals requested.
    pub retention_rate: f64,
    pub discarded_budget_exhausted: usize,
    pub simulator_calls: usize,
    /// Final-epoch training loss; absent when no network is trained.
    pub quantile_train_loss: Option<f64>,
}

/// A mixture fitted in the unconstrained image of a support transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformedMixture {
    pub mixture: GaussianMixture,
    pub transform: SupportTransform,
}

impl TransformedMixture {
    pub fn fit(thetas: &[Vec<f64>], transform: SupportTransform, cfg: &FitConfig) -> Result<Self> {
        let z: Vec<Vec<f64>> = thetas.iter().map(|t| transform.forward(t)).collect();
        Ok(Self {
            mixture: gmm::fit(&z, cfg)?,
            transform,
        })
    }

    pub fn sample_one(&self, rng: &mut Rng) -> Vec<f64> {
        self.transform.inverse(&gmm::sample_one(&self.mixture, rng))
    }

    pub fn sample(&self, count: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
        (0..count).map(|_| self.sample_one(rng)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct AbiResult {
    pub posterior: TransformedMixture,
    pub reports: Vec<IterationReport>,
    pub final_net: Option<QuantileNet>,
    /// Parameters retained at the final iteration.
    pub final_retained: Vec<Vec<f64>>,
}

/// Pairs and counters from one ARS batch.
#[derive(Debug, Clone, PartialEq)]
pub struct ArsOutput {
    /// Accepted pairs, in draw order.
    pub pairs: Vec<Pair>,
    pub simulator_calls: usize,
    /// Draws that used their whole budget without an acceptance.
    pub dropped: usize,
}

impl ArsOutput {
    pub fn acceptance_rate(&self) -> f64 {
        self.pairs.len() as f64 / self.simulator_calls as f64
    }
}

struct Slot {
    rng: Rng,
    theta: Vec<f64>,
    attempts: usize,
    done: bool,
}

/// Approximate rejection sampling.
///
/// Draw `i` takes its parameter from `source` and then simulates up to `r`
/// datasets, all from its own stream `(seed, "ars", i)`, keeping the first
/// dataset that `accept` passes. Invalid simulations are rejected without
/// consulting `accept`. Work is batched across draws for throughput, but the
/// outcome is the same as running each draw sequentially.
pub fn ars_sample<S, A>(
    source: S,
    model: &SimulatorBundle,
    accept: A,
    n: usize,
    r: usize,
    seed: u64,
) -> Result<ArsOutput>
where
    S: Fn(&mut Rng) -> Vec<f64> + Sync,
    A: Fn(&[&[f64]]) -> Result<Vec<bool>>,
{
    if n == 0 || r == 0 {
        return Err(Error::InvalidArgument("ARS needs N >= 1 and R >= 1".into()));
    }
    let mut slots: Vec<Slot> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, "ars", i as u64);
            let theta = source(&mut rng);
            Slot {
                rng,
                theta,
                attempts: 0,
                done: false,
            }
        })
        .collect();
    let mut accepted: Vec<Option<Vec<f64>>> = vec![None; n];
    let mut calls = 0usize;
    let mut dropped = 0usize;
    let target = (4_000_000 / model.data_dim.max(1)).clamp(256, 65_536);
    let mut active = n;
    while active > 0 {
        let per_slot = (target / active).clamp(1, 1024);
        let batch: Vec<(usize, Vec<crate::models::Simulation>)> = slots
            .par_iter_mut()
            .enumerate()
            .filter(|(_, s)| !s.done)
            .map(|(i, s)| {
                let k = per_slot.min(r - s.attempts);
                let sims = (0..k)
                    .map(|_| model.simulate(&s.theta, &mut s.rng))
                    .collect();
                (i, sims)
            })
            .collect();
        let views: Vec<&[f64]> = batch
            .iter()
            .flat_map(|(_, sims)| sims.iter().filter(|s| s.valid).map(|s| s.data.as_slice()))
            .collect();
        let flags = if views.is_empty() {
            Vec::new()
        } else {
            accept(&views)?
        };
        if flags.len() != views.len() {
            return Err(Error::ShapeMismatch(
                "acceptance predicate returned the wrong count".into(),
            ));
        }
        let mut flag_iter = flags.into_iter();
        for (i, sims) in batch {
            let slot = &mut slots[i];
            let mut hit = None;
            for (j, sim) in sims.iter().enumerate() {
                // consume flags for every valid sim in order, even past the hit
                let ok = sim.valid && flag_iter.next().expect("one flag per valid simulation");
                if ok && hit.is_none() {
                    hit = Some(j);
                }
            }
            match hit {
                Some(j) => {
                    slot.attempts += j + 1;
                    slot.done = true;
                    accepted[i] = Some(sims.into_iter().nth(j).unwrap().data);
                }
                None => {
                    slot.attempts += sims.len();
                    if slot.attempts >= r {
                        slot.done = true;
                        dropped += 1;
                    }
                }
            }
            if slot.done {
                calls += slot.attempts;
                active -= 1;
            }
        }
    }
    let pairs: Vec<Pair> = slots
        .into_iter()
        .zip(accepted)
        .filter_map(|(s, d)| {
            d.map(|data| Pair {
                theta: s.theta,
                data,
            })
        })
        .collect();
    if pairs.is_empty() {
        return Err(Error::ArsRetainedNothing { calls, dropped });
    }
    Ok(ArsOutput {
        pairs,
        simulator_calls: calls,
        dropped,
    })
}

/// Empirical α-quantile (left-continuous) of `distances`.
pub fn adaptive_threshold(distances: &[f64], alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )));
    }
    let sample = EmpiricalSample1D::new(distances.to_vec())?;
    empirical_quantile(&sample, alpha)
}

/// Splits `thetas` into those with statistic `<= epsilon` and the rest.
pub fn prune(thetas: &[Vec<f64>], stats: &[f64], epsilon: f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut keep = Vec::new();
    let mut drop = Vec::new();
    for (t, s) in thetas.iter().zip(stats) {
        if *s <= epsilon {
            keep.push(t.clone());
        } else {
            drop.push(t.clone());
        }
    }
    (keep, drop)
}

/// An acceptance statistic bound to the observation.
pub enum Statistic {
    Kernel(Box<MswKernel>),
    Euclidean(Vec<f64>),
}

impl Statistic {
    pub fn evaluate(&self, xs: &[&[f64]]) -> Result<Vec<f64>> {
        match self {
            Statistic::Kernel(k) => k.evaluate(xs),
            Statistic::Euclidean(star) => Ok(xs
                .par_iter()
                .map(|x| {
                    x.iter()
                        .zip(star)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect()),
        }
    }
}

enum Proposal {
    Prior,
    Mixture(TransformedMixture),
}

impl Proposal {
    fn draw(&self, model: &SimulatorBundle, rng: &mut Rng) -> Vec<f64> {
        match self {
            Proposal::Prior => model.sample_prior(rng),
            Proposal::Mixture(m) => m.sample_one(rng),
        }
    }
}

enum Schedule<'a> {
    Adaptive,
    Fixed(&'a [f64]),
}

/// Runs the loop with adaptively chosen thresholds.
pub fn run_abi(model: &SimulatorBundle, x_star: &[f64], cfg: &AbiConfig) -> Result<AbiResult> {
    run_abi_with_progress(model, x_star, cfg, |_| {})
}

pub fn run_abi_with_progress<F: FnMut(&IterationReport)>(
    model: &SimulatorBundle,
    x_star: &[f64],
    cfg: &AbiConfig,
    progress: F,
) -> Result<AbiResult> {
    run_loop(model, x_star, cfg, Schedule::Adaptive, progress)
}

/// Runs the loop with user-supplied thresholds; `cfg.iterations` is ignored
/// in favour of the schedule length.
pub fn run_abi_fixed_schedule(
    model: &SimulatorBundle,
    x_star: &[f64],
    thresholds: &[f64],
    cfg: &AbiConfig,
) -> Result<AbiResult> {
    run_abi_fixed_schedule_with_progress(model, x_star, thresholds, cfg, |_| {})
}

pub fn run_abi_fixed_schedule_with_progress<F: FnMut(&IterationReport)>(
    model: &SimulatorBundle,
    x_star: &[f64],
    thresholds: &[f64],
    cfg: &AbiConfig,
    progress: F,
) -> Result<AbiResult> {
    validate_schedule(thresholds)?;
    run_loop(model, x_star, cfg, Schedule::Fixed(thresholds), progress)
}

/// Thresholds must be positive, finite and non-increasing.
pub fn validate_schedule(thresholds: &[f64]) -> Result<()> {
    if thresholds.is_empty() {
        return Err(Error::InvalidArgument("tolerance schedule is empty".into()));
    }
    if thresholds.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::InvalidArgument(
            "tolerances must be positive and finite".into(),
        ));
    }
    if thresholds.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidArgument(
            "tolerance schedule must be non-increasing".into(),
        ));
    }
    Ok(())
}

/// Report, retained parameters, statistic, network and proposal of one
/// iteration.
type StepOutcome = (
    IterationReport,
    Vec<Vec<f64>>,
    Statistic,
    Option<QuantileNet>,
    TransformedMixture,
);

fn run_loop<F: FnMut(&IterationReport)>(
    model: &SimulatorBundle,
    x_star: &[f64],
    cfg: &AbiConfig,
    schedule: Schedule,
    mut progress: F,
) -> Result<AbiResult> {
    cfg.validate()?;
    if x_star.len() != model.data_dim {
        return Err(Error::DimensionMismatch {
            expected: model.data_dim,
            got: x_star.len(),
        });
    }
    let x_star = &model.input_view.apply(x_star);
    let model = &model.viewed();
    let iterations = match schedule {
        Schedule::Adaptive => cfg.iterations,
        Schedule::Fixed(eps) => eps.len(),
    };
    let d = model.theta_dim();
    let mut proposal = Proposal::Prior;
    let mut prev: Option<(Statistic, f64)> = None;
    let mut net: Option<QuantileNet> = None;
    let mut reports = Vec::with_capacity(iterations);
    let mut retained = Vec::new();

    for t in 1..=iterations {
        let outcome = {
            let step = || -> Result<StepOutcome> {
                let tag = t as u64;
                let accept = |xs: &[&[f64]]| -> Result<Vec<bool>> {
                    match &prev {
                        None => Ok(vec![true; xs.len()]),
                        Some((stat, eps)) => {
                            Ok(stat.evaluate(xs)?.into_iter().map(|s| s <= *eps).collect())
                        }
                    }
                };
                let source = |rng: &mut Rng| proposal.draw(model, rng);

                let mut calls = 0;
                let mut accepted = 0;
                let (stat, train_loss, new_net) = match cfg.statistic {
                    StatisticKind::Euclidean => (Statistic::Euclidean(x_star.to_vec()), None, None),
                    StatisticKind::Kernel => {
                        let batch = ars_sample(
                            source,
                            model,
                            accept,
                            cfg.train_pairs_per_iter,
                            cfg.ars_budget,
                            derive_seed(cfg.seed, "ars-train", tag),
                        )?;
                        calls += batch.simulator_calls;
                        accepted += batch.pairs.len();
                        let projections = sample_projections(
                            d,
                            cfg.msw.num_slices,
                            &mut stream(cfg.seed, "projections", tag),
                        )?;
                        let mut train_cfg = cfg.net.clone();
                        train_cfg.seed = derive_seed(cfg.net.seed, "train", tag);
                        let start = match &net {
                            None => QuantileNet::new(
                                model.data_dim,
                                &cfg.hidden,
                                projections,
                                cfg.msw.grid(),
                                derive_seed(cfg.seed, "net-init", 0),
                            )?,
                            Some(prev_net) => {
                                train_cfg.epochs = (cfg.net.epochs / 2).max(1);
                                let mut warm = prev_net.clone();
                                warm.set_projections(projections)?;
                                warm
                            }
                        };
                        let (trained, summary) = quantile::train(&batch.pairs, start, &train_cfg)?;
                        let kernel = MswKernel::new(trained.clone(), x_star, cfg.msw)?;
                        (
                            Statistic::Kernel(Box::new(kernel)),
                            Some(summary.final_loss()),
                            Some(trained),
                        )
                    }
                };

                // proposals are screened with this iteration's statistic, so every
                // accepted pair already sits below the previous tolerance
                let eps_prev = prev.as_ref().map_or(f64::INFINITY, |(_, e)| *e);
                let accept_current = |xs: &[&[f64]]| -> Result<Vec<bool>> {
                    if prev.is_none() {
                        return Ok(vec![true; xs.len()]);
                    }
                    Ok(stat
                        .evaluate(xs)?
                        .into_iter()
                        .map(|s| s <= eps_prev)
                        .collect())
                };
                let batch = ars_sample(
                    source,
                    model,
                    accept_current,
                    cfg.proposals_per_iter,
                    cfg.ars_budget,
                    derive_seed(cfg.seed, "ars-proposal", tag),
                )?;
                calls += batch.simulator_calls;
                accepted += batch.pairs.len();
                let data: Vec<&[f64]> = batch.pairs.iter().map(|p| p.data.as_slice()).collect();
                let stats = stat.evaluate(&data)?;
                let thetas: Vec<Vec<f64>> = batch.pairs.iter().map(|p| p.theta.clone()).collect();

                let epsilon = match schedule {
                    Schedule::Fixed(eps) => eps[t - 1],
                    Schedule::Adaptive => {
                        let candidates: Vec<f64> =
                            stats.iter().copied().filter(|s| *s <= eps_prev).collect();
                        if candidates.is_empty() {
                            return Err(Error::InsufficientDraws { have: 0, need: 1 });
                        }
                        let eps = adaptive_threshold(&candidates, cfg.quantile_fraction)?;
                        if !(eps < eps_prev) {
                            return Err(Error::Numerical(format!(
                                "threshold did not decrease ({eps} >= {eps_prev})"
                            )));
                        }
                        eps
                    }
                };
                let (keep, _) = prune(&thetas, &stats, epsilon);
                if keep.is_empty() {
                    return Err(Error::InsufficientDraws { have: 0, need: 1 });
                }
                let mut density = cfg.density.clone();
                density.seed = derive_seed(cfg.density.seed, "density", tag);
                let fitted = TransformedMixture::fit(&keep, model.support.clone(), &density)?;
                let report = IterationReport {
                    index: t,
                    epsilon,
                    ars_acceptance_rate: accepted as f64 / calls as f64,
                    retained_count: keep.len(),
                    retention_rate: keep.len() as f64 / cfg.proposals_per_iter as f64,
                    discarded_budget_exhausted: batch.dropped,
                    simulator_calls: calls,
                    quantile_train_loss: train_loss,
                };
                Ok((report, keep, stat, new_net, fitted))
            };
            step()
        };
        let (report, keep, stat, new_net, fitted) = outcome.map_err(|e| e.at_iteration(t))?;
        progress(&report);
        prev = Some((stat, report.epsilon));
        if new_net.is_some() {
            net = new_net;
        }
        proposal = Proposal::Mixture(fitted);
        retained = keep;
        reports.push(report);
    }
    let posterior = match proposal {
        Proposal::Mixture(m) => m,
        Proposal::Prior => unreachable!("at least one iteration runs"),
    };
    Ok(AbiResult {
        posterior,
        reports,
        final_net: net,
        final_retained: retained,
    })
}

/// One-line progress summary for a diagnostic stream.
pub fn format_progress(r: &IterationReport) -> String {
    format!(
        "iteration {}: epsilon={:.6e} acceptance={:.4} retained={} dropped={}",
        r.index, r.epsilon, r.ars_acceptance_rate, r.retained_count, r.discarded_budget_exhausted
    )
}
