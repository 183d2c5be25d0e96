//! Benchmark simulators.
//!
//! Every model is a [`SimulatorBundle`]: a prior sampler, a simulator that
//! flattens its output into a fixed-length vector, and a per-coordinate
//! support transform used when fitting proposal densities.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng as _;
use rand_distr::{Distribution, Exp, Normal, Open01, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{stream, Rng};

/// Seed used to regenerate observations for models without a shipped one.
pub const OBSERVATION_SEED: u64 = 20_240_917;

/// Simulator output; `valid == false` marks a guarded (truncated) run.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub data: Vec<f64>,
    pub valid: bool,
}

impl Simulation {
    fn ok(data: Vec<f64>) -> Self {
        Self { data, valid: true }
    }
}

pub type PriorFn = Arc<dyn Fn(&mut Rng) -> Vec<f64> + Send + Sync>;
pub type SimulatorFn = Arc<dyn Fn(&[f64], &mut Rng) -> Simulation + Send + Sync>;

/// How learned components see a data vector.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputView {
    /// The simulator output as is.
    #[default]
    Raw,
    /// Values sorted ascending; for models identified by the marginal
    /// distribution of their observations.
    Sorted,
}

impl InputView {
    pub fn apply(&self, data: &[f64]) -> Vec<f64> {
        let mut v = data.to_vec();
        if *self == InputView::Sorted {
            v.sort_by(f64::total_cmp);
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Bound {
    Unbounded,
    Interval(f64, f64),
}

/// Coordinate-wise bijection between the parameter space and R^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportTransform {
    bounds: Vec<Bound>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl SupportTransform {
    pub fn new(bounds: Vec<Bound>) -> Self {
        Self { bounds }
    }

    pub fn identity(d: usize) -> Self {
        Self::new(vec![Bound::Unbounded; d])
    }

    pub fn bounds(&self) -> &[Bound] {
        &self.bounds
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.iter().zip(&self.bounds).all(|(v, b)| match *b {
            Bound::Unbounded => v.is_finite(),
            Bound::Interval(lo, hi) => *v >= lo && *v <= hi,
        })
    }

    /// Parameter space → R^d.
    pub fn forward(&self, theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .zip(&self.bounds)
            .map(|(v, b)| match *b {
                Bound::Unbounded => *v,
                Bound::Interval(lo, hi) => {
                    let u =
                        ((v - lo) / (hi - lo)).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
                    u.ln() - (-u).ln_1p()
                }
            })
            .collect()
    }

    /// R^d → parameter space.
    pub fn inverse(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(&self.bounds)
            .map(|(v, b)| match *b {
                Bound::Unbounded => *v,
                Bound::Interval(lo, hi) => lo + (hi - lo) * sigmoid(*v),
            })
            .collect()
    }
}

/// Analytic or published posterior summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferencePosterior {
    pub mean: Vec<f64>,
    /// Marginal variances, when known.
    pub variance: Option<Vec<f64>>,
}

#[derive(Clone)]
pub struct SimulatorBundle {
    pub name: String,
    pub param_names: Vec<String>,
    pub data_dim: usize,
    pub prior: PriorFn,
    pub simulator: SimulatorFn,
    pub support: SupportTransform,
    pub truth: Option<Vec<f64>>,
    pub reference_posterior: Option<ReferencePosterior>,
    /// Shipped observation; otherwise one is simulated from `truth`.
    pub observed: Option<Vec<f64>>,
    pub input_view: InputView,
}

impl std::fmt::Debug for SimulatorBundle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SimulatorBundle")
            .field("name", &self.name)
            .field("param_names", &self.param_names)
            .field("data_dim", &self.data_dim)
            .field("support", &self.support)
            .field("truth", &self.truth)
            .field("input_view", &self.input_view)
            .finish_non_exhaustive()
    }
}

impl SimulatorBundle {
    pub fn theta_dim(&self) -> usize {
        self.param_names.len()
    }

    pub fn sample_prior(&self, rng: &mut Rng) -> Vec<f64> {
        (self.prior)(rng)
    }

    pub fn simulate(&self, theta: &[f64], rng: &mut Rng) -> Simulation {
        (self.simulator)(theta, rng)
    }

    /// The same model with `input_view` folded into the simulator, so that
    /// simulated data arrive already in the learned components' view.
    pub fn viewed(&self) -> SimulatorBundle {
        if self.input_view == InputView::Raw {
            return self.clone();
        }
        let view = self.input_view;
        let inner = Arc::clone(&self.simulator);
        SimulatorBundle {
            simulator: Arc::new(move |th, rng| {
                let sim = inner(th, rng);
                Simulation {
                    data: view.apply(&sim.data),
                    valid: sim.valid,
                }
            }),
            input_view: InputView::Raw,
            ..self.clone()
        }
    }

    /// The observation x* used by default for this model.
    pub fn observation(&self) -> Result<Vec<f64>> {
        if let Some(x) = &self.observed {
            return Ok(x.clone());
        }
        let truth = self.truth.as_ref().ok_or_else(|| {
            Error::InvalidArgument(format!("model {} has no observation or truth", self.name))
        })?;
        let mut rng = stream(OBSERVATION_SEED, &self.name, 0);
        Ok(self.simulate(truth, &mut rng).data)
    }
}

fn uniform(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    // open interval so logit images stay finite
    let u: f64 = Open01.sample(rng);
    lo + (hi - lo) * u
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

/// Two-by-two Cholesky factor with pivots floored at 1e-12.
fn cholesky2(s11: f64, s12: f64, s22: f64) -> [f64; 3] {
    let l11 = s11.max(1e-12).sqrt();
    let l21 = s12 / l11;
    let l22 = (s22 - l21 * l21).max(1e-12).sqrt();
    [l11, l21, l22]
}

pub fn multimodal_gaussian() -> SimulatorBundle {
    const DRAWS: usize = 4;
    SimulatorBundle {
        name: "multimodal_gaussian".into(),
        param_names: names(&["theta1", "theta2", "theta3", "theta4", "theta5"]),
        data_dim: 2 * DRAWS,
        prior: Arc::new(|rng| (0..5).map(|_| uniform(rng, -3.0, 3.0)).collect()),
        simulator: Arc::new(|th, rng| {
            let (s1, s2) = (th[2] * th[2], th[3] * th[3]);
            let rho = th[4].tanh();
            let [l11, l21, l22] = cholesky2(s1 * s1, rho * s1 * s2, s2 * s2);
            let mut out = Vec::with_capacity(2 * DRAWS);
            for _ in 0..DRAWS {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                out.push(th[0] + l11 * z1);
                out.push(th[1] + l21 * z1 + l22 * z2);
            }
            Simulation::ok(out)
        }),
        support: SupportTransform::new(vec![Bound::Interval(-3.0, 3.0); 5]),
        truth: Some(vec![0.7, -2.9, -1.0, -0.9, 0.6]),
        reference_posterior: None,
        observed: None,
        input_view: InputView::Raw,
    }
}

/// M/G/1 interdeparture times for parameters (θ₁, θ₂ − θ₁, θ₃).
pub fn simulate_mg1(theta: &[f64], n: usize, rng: &mut Rng) -> Vec<f64> {
    let (lo, width, rate) = (theta[0], theta[1], theta[2]);
    let arrivals = Exp::new(rate).unwrap_or_else(|_| Exp::new(f64::MIN_POSITIVE).unwrap());
    let mut arrival = 0.0;
    let mut departure = 0.0;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        arrival += arrivals.sample(rng);
        let service = lo + width * rng.random::<f64>();
        let y = service + (arrival - departure).max(0.0);
        departure += y;
        out.push(y);
    }
    out
}

pub fn mg1_queue() -> SimulatorBundle {
    const N: usize = 50;
    SimulatorBundle {
        name: "mg1_queue".into(),
        param_names: names(&["theta1", "theta2_minus_theta1", "theta3"]),
        data_dim: N,
        prior: Arc::new(|rng| {
            vec![
                uniform(rng, 0.0, 10.0),
                uniform(rng, 0.0, 10.0),
                uniform(rng, 0.0, 1.0 / 3.0),
            ]
        }),
        simulator: Arc::new(|th, rng| Simulation::ok(simulate_mg1(th, N, rng))),
        support: SupportTransform::new(vec![
            Bound::Interval(0.0, 10.0),
            Bound::Interval(0.0, 10.0),
            Bound::Interval(0.0, 1.0 / 3.0),
        ]),
        truth: Some(vec![4.0, 3.0, 0.15]),
        reference_posterior: Some(ReferencePosterior {
            mean: vec![3.96, 2.99, 0.177],
            variance: None,
        }),
        observed: None,
        input_view: InputView::Sorted,
    }
}

pub fn cosine_model() -> SimulatorBundle {
    const N: usize = 100;
    SimulatorBundle {
        name: "cosine".into(),
        param_names: names(&["omega", "phi", "log_sigma", "log_amplitude"]),
        data_dim: N,
        prior: Arc::new(|rng| {
            vec![
                uniform(rng, 0.0, 0.1),
                uniform(rng, 0.0, 2.0 * PI),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ]
        }),
        simulator: Arc::new(|th, rng| {
            let (omega, phi) = (th[0], th[1]);
            let (sigma, amp) = (th[2].exp(), th[3].exp());
            let data = (1..=N)
                .map(|t| {
                    let e: f64 = rng.sample(StandardNormal);
                    amp * (2.0 * PI * omega * t as f64 + phi).cos() + sigma * e
                })
                .collect();
            Simulation::ok(data)
        }),
        support: SupportTransform::new(vec![
            Bound::Interval(0.0, 0.1),
            Bound::Interval(0.0, 2.0 * PI),
            Bound::Unbounded,
            Bound::Unbounded,
        ]),
        truth: Some(vec![1.0 / 80.0, PI / 4.0, 0.0, 2f64.ln()]),
        reference_posterior: None,
        observed: None,
        input_view: InputView::Raw,
    }
}

pub const LV_INITIAL: (i64, i64) = (50, 100);
pub const LV_GRID_POINTS: usize = 101;
pub const LV_MAX_EVENTS: u64 = 1_000_000;
pub const LV_MAX_POPULATION: i64 = 50_000;

/// Full Gillespie run, with counters for testing.
#[derive(Debug, Clone, PartialEq)]
pub struct LvTrajectory {
    pub data: Vec<f64>,
    pub valid: bool,
    pub events: u64,
    pub waiting_draws: u64,
    /// Smallest population seen after any event.
    pub min_population: i64,
}

/// Gillespie simulation recorded on the grid 0, 0.1, ..., 10.
pub fn gillespie_lv(theta: &[f64], rng: &mut Rng) -> LvTrajectory {
    let (a, b, g, d) = (theta[0], theta[1], theta[2], theta[3]);
    let (mut x, mut y) = LV_INITIAL;
    let mut t = 0.0;
    let mut data = Vec::with_capacity(2 * LV_GRID_POINTS);
    let mut grid = 0usize;
    let mut events = 0u64;
    let mut waiting_draws = 0u64;
    let mut min_population = x.min(y);
    let mut valid = true;
    let grid_time = |k: usize| k as f64 / 10.0;
    while grid < LV_GRID_POINTS {
        let (xf, yf) = (x as f64, y as f64);
        let rates = [a * xf, b * xf * yf, g * yf, d * xf * yf];
        let total: f64 = rates.iter().sum();
        if !(total > 0.0) {
            break;
        }
        let dt: f64 = Exp::new(total).expect("positive total rate").sample(rng);
        waiting_draws += 1;
        let next = t + dt;
        while grid < LV_GRID_POINTS && grid_time(grid) < next {
            data.extend([xf, yf]);
            grid += 1;
        }
        if grid == LV_GRID_POINTS {
            break;
        }
        let u = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut event = 3;
        for (i, r) in rates.iter().enumerate() {
            acc += r;
            if u < acc {
                event = i;
                break;
            }
        }
        match event {
            0 => x += 1,
            1 => {
                x -= 1;
                y -= 1;
            }
            2 => y -= 1,
            _ => y += 1,
        }
        t = next;
        events += 1;
        min_population = min_population.min(x).min(y);
        if events >= LV_MAX_EVENTS || x > LV_MAX_POPULATION || y > LV_MAX_POPULATION {
            valid = false;
            x = x.min(LV_MAX_POPULATION);
            y = y.min(LV_MAX_POPULATION);
            break;
        }
    }
    while grid < LV_GRID_POINTS {
        data.extend([x as f64, y as f64]);
        grid += 1;
    }
    LvTrajectory {
        data,
        valid,
        events,
        waiting_draws,
        min_population,
    }
}

pub fn lotka_volterra() -> SimulatorBundle {
    let bounds = [(0.0, 1.0), (0.0, 0.1), (0.0, 2.0), (0.0, 0.1)];
    SimulatorBundle {
        name: "lotka_volterra".into(),
        param_names: names(&["alpha", "beta", "gamma", "delta"]),
        data_dim: 2 * LV_GRID_POINTS,
        prior: Arc::new(move |rng| {
            bounds
                .iter()
                .map(|(lo, hi)| uniform(rng, *lo, *hi))
                .collect()
        }),
        simulator: Arc::new(|th, rng| {
            let run = gillespie_lv(th, rng);
            Simulation {
                data: run.data,
                valid: run.valid,
            }
        }),
        support: SupportTransform::new(
            bounds
                .iter()
                .map(|(lo, hi)| Bound::Interval(*lo, *hi))
                .collect(),
        ),
        truth: Some(vec![0.5, 0.01, 1.0, 0.01]),
        reference_posterior: None,
        observed: None,
        input_view: InputView::Raw,
    }
}

pub const GG_PRIOR_VARIANCE: f64 = 20.0;
pub const GG_X_STAR: f64 = 6.24;

/// Conjugate posterior (mean, variance) of the Gaussian–Gaussian model.
pub fn gaussian_gaussian_posterior(x_star: f64) -> (f64, f64) {
    let shrink = GG_PRIOR_VARIANCE / (GG_PRIOR_VARIANCE + 1.0);
    (x_star * shrink, shrink)
}

pub fn gaussian_gaussian() -> SimulatorBundle {
    let (mean, var) = gaussian_gaussian_posterior(GG_X_STAR);
    let prior = Normal::new(0.0, GG_PRIOR_VARIANCE.sqrt()).unwrap();
    SimulatorBundle {
        name: "gaussian_gaussian".into(),
        param_names: names(&["theta"]),
        data_dim: 1,
        prior: Arc::new(move |rng| vec![prior.sample(rng)]),
        simulator: Arc::new(|th, rng| {
            let e: f64 = rng.sample(StandardNormal);
            Simulation::ok(vec![th[0] + e])
        }),
        support: SupportTransform::identity(1),
        truth: None,
        reference_posterior: Some(ReferencePosterior {
            mean: vec![mean],
            variance: Some(vec![var]),
        }),
        observed: Some(vec![GG_X_STAR]),
        input_view: InputView::Raw,
    }
}

pub const MODEL_NAMES: [&str; 5] = [
    "gaussian_gaussian",
    "multimodal_gaussian",
    "mg1_queue",
    "cosine",
    "lotka_volterra",
];

pub fn by_name(name: &str) -> Result<SimulatorBundle> {
    match name {
        "gaussian_gaussian" => Ok(gaussian_gaussian()),
        "multimodal_gaussian" => Ok(multimodal_gaussian()),
        "mg1_queue" => Ok(mg1_queue()),
        "cosine" => Ok(cosine_model()),
        "lotka_volterra" => Ok(lotka_volterra()),
        _ => Err(Error::UnknownModel {
            name: name.to_string(),
            available: MODEL_NAMES.join(", "),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurseRow {
    pub n: usize,
    pub acceptance_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurseTable {
    pub rows: Vec<CurseRow>,
    /// Least-squares slope of ln(rate) against n over the nonzero rates.
    pub slope: Option<f64>,
}

/// Default observation noise of the dimension demo.
pub const CURSE_SIGMA: f64 = 0.25;

/// Monte Carlo acceptance rate of ε-ball rejection as the data dimension grows.
///
/// Model: θ ~ U(−1, 1), X | θ ~ N(θ e₁, σ² I_n), observation x* = 0.
pub fn curse_of_dim_demo(
    dims: &[usize],
    epsilon: f64,
    trials: usize,
    sigma: f64,
    seed: u64,
) -> Result<CurseTable> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be > 0".into()));
    }
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidArgument(
            "dimensions must be nonempty and >= 1".into(),
        ));
    }
    if trials == 0 || !(sigma > 0.0) {
        return Err(Error::InvalidArgument(
            "need trials >= 1 and sigma > 0".into(),
        ));
    }
    let eps2 = epsilon * epsilon;
    let rows: Vec<CurseRow> = dims
        .par_iter()
        .enumerate()
        .map(|(i, &n)| {
            let mut rng = stream(seed, "curse", i as u64);
            let mut hits = 0usize;
            for _ in 0..trials {
                let theta = uniform(&mut rng, -1.0, 1.0);
                let mut dist2 = 0.0;
                for j in 0..n {
                    let e: f64 = rng.sample(StandardNormal);
                    let v = if j == 0 { theta + sigma * e } else { sigma * e };
                    dist2 += v * v;
                    if dist2 > eps2 {
                        break;
                    }
                }
                if dist2 <= eps2 {
                    hits += 1;
                }
            }
            CurseRow {
                n,
                acceptance_rate: hits as f64 / trials as f64,
            }
        })
        .collect();
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.acceptance_rate > 0.0)
        .map(|r| (r.n as f64, r.acceptance_rate.ln()))
        .collect();
    Ok(CurseTable {
        slope: least_squares_slope(&pts),
        rows,
    })
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}
