//! Conditional quantile network.
//!
//! One ReLU network maps a data vector to every projection's quantiles at
//! once: output entry `(H+1)*k + h` (0-based) is the `tau_h` quantile of
//! `<phi_k, theta>` given the data. Targets are standardized per slice and
//! inputs per feature; both scalers live in the network and are undone at
//! prediction time.

use std::path::Path;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::msw::{msw_from_quantile_tables, MswConfig, ProjectionSet, QuantileGrid, QuantileTable};
use crate::nn::{fit_mlp, Dense, Mlp, MlpArchitecture, Scaler, TrainConfig, TrainSummary};
use crate::seed::rng_from_seed;
use crate::Pair;

/// Default hidden widths.
pub const DEFAULT_HIDDEN: [usize; 3] = [128, 128, 128];

#[inline]
fn asymmetry(u: f64, tau: f64) -> f64 {
    if u < 0.0 {
        1.0 - tau
    } else {
        tau
    }
}

/// Huber quantile loss `rho_{tau,kappa}(u)`.
pub fn huber_quantile_loss(u: f64, tau: f64, kappa: f64) -> f64 {
    let w = asymmetry(u, tau);
    if u.abs() <= kappa {
        w * u * u / (2.0 * kappa)
    } else {
        w * (u.abs() - 0.5 * kappa)
    }
}

/// `d rho / du`.
pub fn huber_quantile_derivative(u: f64, tau: f64, kappa: f64) -> f64 {
    let w = asymmetry(u, tau);
    if u.abs() <= kappa {
        w * u / kappa
    } else {
        w * u.signum()
    }
}

/// Loss sum over a batch plus its gradient w.r.t. the raw network output.
fn quantile_batch_loss(
    out: ArrayView2<f64>,
    targets: ArrayView2<f64>,
    levels: &[f64],
    kappa: f64,
) -> (f64, Array2<f64>) {
    let cols = levels.len();
    let mut grad = Array2::zeros(out.raw_dim());
    let mut total = 0.0;
    for ((o, t), mut g) in out
        .outer_iter()
        .zip(targets.outer_iter())
        .zip(grad.outer_iter_mut())
    {
        for (k, &target) in t.iter().enumerate() {
            for (h, &tau) in levels.iter().enumerate() {
                let idx = k * cols + h;
                let u = target - o[idx];
                total += huber_quantile_loss(u, tau, kappa);
                g[idx] = -huber_quantile_derivative(u, tau, kappa);
            }
        }
    }
    (total, grad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileNet {
    mlp: Mlp,
    projections: ProjectionSet,
    grid: QuantileGrid,
    input_scaler: Scaler,
    target_scaler: Scaler,
}

impl QuantileNet {
    /// A freshly initialized network with identity scalers.
    pub fn new(
        input_dim: usize,
        hidden: &[usize],
        projections: ProjectionSet,
        grid: QuantileGrid,
        seed: u64,
    ) -> Result<Self> {
        let arch = MlpArchitecture::new(input_dim, hidden, projections.len() * grid.levels().len());
        let mlp = Mlp::he_init(&arch, &mut rng_from_seed(seed))?;
        Self::from_parts(mlp, projections, grid, Scaler::identity(input_dim), None)
    }

    /// All weights zero, identity scalers.
    pub fn zeros(
        input_dim: usize,
        hidden: &[usize],
        projections: ProjectionSet,
        grid: QuantileGrid,
    ) -> Result<Self> {
        let arch = MlpArchitecture::new(input_dim, hidden, projections.len() * grid.levels().len());
        let mlp = Mlp::zeros(&arch)?;
        Self::from_parts(mlp, projections, grid, Scaler::identity(input_dim), None)
    }

    fn from_parts(
        mlp: Mlp,
        projections: ProjectionSet,
        grid: QuantileGrid,
        input_scaler: Scaler,
        target_scaler: Option<Scaler>,
    ) -> Result<Self> {
        let target_scaler = target_scaler.unwrap_or_else(|| Scaler::identity(projections.len()));
        if mlp.output_dim() != projections.len() * grid.levels().len() {
            return Err(Error::ShapeMismatch(format!(
                "network emits {} values but K'(H+1) = {}",
                mlp.output_dim(),
                projections.len() * grid.levels().len()
            )));
        }
        if input_scaler.dim() != mlp.input_dim() || target_scaler.dim() != projections.len() {
            return Err(Error::ShapeMismatch(
                "scaler dimensions do not match the network".into(),
            ));
        }
        Ok(Self {
            mlp,
            projections,
            grid,
            input_scaler,
            target_scaler,
        })
    }

    pub fn architecture(&self) -> MlpArchitecture {
        self.mlp.architecture()
    }

    pub fn mlp(&self) -> &Mlp {
        &self.mlp
    }

    pub fn mlp_mut(&mut self) -> &mut Mlp {
        &mut self.mlp
    }

    pub fn projections(&self) -> &ProjectionSet {
        &self.projections
    }

    pub fn grid(&self) -> &QuantileGrid {
        &self.grid
    }

    pub fn input_dim(&self) -> usize {
        self.mlp.input_dim()
    }

    /// Swaps in a new projection set of the same size (the random slices are
    /// redrawn each iteration; the output layout is unchanged).
    pub fn set_projections(&mut self, projections: ProjectionSet) -> Result<()> {
        if projections.len() != self.projections.len()
            || projections.dimension() != self.projections.dimension()
        {
            return Err(Error::ShapeMismatch(format!(
                "projection set has {} directions in R^{}, network expects {} in R^{}",
                projections.len(),
                projections.dimension(),
                self.projections.len(),
                self.projections.dimension()
            )));
        }
        self.projections = projections;
        Ok(())
    }

    fn check_pairs(&self, pairs: &[Pair]) -> Result<()> {
        if pairs.is_empty() {
            return Err(Error::EmptySample);
        }
        for p in pairs {
            if p.data.len() != self.input_dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.input_dim(),
                    got: p.data.len(),
                });
            }
            if p.theta.len() != self.projections.dimension() {
                return Err(Error::DimensionMismatch {
                    expected: self.projections.dimension(),
                    got: p.theta.len(),
                });
            }
        }
        Ok(())
    }

    fn design(&self, pairs: &[Pair]) -> (Array2<f64>, Array2<f64>) {
        let data: Vec<&[f64]> = pairs.iter().map(|p| p.data.as_slice()).collect();
        let projected: Vec<Vec<f64>> = pairs
            .iter()
            .map(|p| self.projections.project(&p.theta))
            .collect();
        let proj_rows: Vec<&[f64]> = projected.iter().map(Vec::as_slice).collect();
        (
            self.input_scaler.transform_rows(&data),
            self.target_scaler.transform_rows(&proj_rows),
        )
    }

    /// Total Huber quantile loss over `pairs` under the current scalers.
    pub fn objective(&self, pairs: &[Pair], kappa: f64) -> Result<f64> {
        self.check_pairs(pairs)?;
        let (x, y) = self.design(pairs);
        let out = self.mlp.forward(x.view());
        Ok(quantile_batch_loss(out.view(), y.view(), self.grid.levels(), kappa).0)
    }

    /// Total loss and its gradient, flattened as in [`Mlp::flat_parameters`].
    pub fn objective_gradient(&self, pairs: &[Pair], kappa: f64) -> Result<(f64, Vec<f64>)> {
        self.check_pairs(pairs)?;
        let (x, y) = self.design(pairs);
        let levels = self.grid.levels();
        let (value, grads) = self.mlp.loss_and_gradients(x.view(), y.view(), &|o, t| {
            quantile_batch_loss(o, t, levels, kappa)
        });
        let flat = grads
            .iter()
            .flat_map(|g| {
                g.weights
                    .iter()
                    .chain(g.bias.iter())
                    .copied()
                    .collect::<Vec<_>>()
            })
            .collect();
        Ok((value, flat))
    }

    /// Quantile tables for a batch of data vectors; each row sorted ascending.
    pub fn predict_batch(&self, xs: &[&[f64]]) -> Result<Vec<QuantileTable>> {
        for x in xs {
            if x.len() != self.input_dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.input_dim(),
                    got: x.len(),
                });
            }
        }
        let rows = self.projections.len();
        let cols = self.grid.levels().len();
        let input = self.input_scaler.transform_rows(xs);
        let out = self.mlp.forward(input.view());
        out.outer_iter()
            .map(|o| {
                let mut values = Vec::with_capacity(rows * cols);
                for k in 0..rows {
                    let (m, s) = (self.target_scaler.mean[k], self.target_scaler.std[k]);
                    values.extend(o.iter().skip(k * cols).take(cols).map(|v| m + s * v));
                }
                let mut table = QuantileTable::new(rows, cols, values)?;
                table.sort_rows();
                Ok(table)
            })
            .collect()
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            layer_widths: self.architecture().layer_widths,
            layers: self
                .mlp
                .layers()
                .iter()
                .map(|l| LayerWeights {
                    weights: l.weights.iter().copied().collect(),
                    bias: l.bias.to_vec(),
                })
                .collect(),
            projections: self.projections.clone(),
            grid: self.grid.clone(),
            input_scaler: self.input_scaler.clone(),
            target_scaler: self.target_scaler.clone(),
        }
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self> {
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::Parse(format!(
                "unsupported checkpoint format '{}'",
                ck.format
            )));
        }
        if ck.layers.len() + 1 != ck.layer_widths.len() {
            return Err(Error::Parse(
                "layer count does not match layer widths".into(),
            ));
        }
        let layers = ck
            .layers
            .into_iter()
            .zip(ck.layer_widths.windows(2))
            .map(|(l, w)| {
                let weights = Array2::from_shape_vec((w[1], w[0]), l.weights)
                    .map_err(|e| Error::Parse(format!("weight matrix: {e}")))?;
                if l.bias.len() != w[1] {
                    return Err(Error::Parse(
                        "bias length does not match layer width".into(),
                    ));
                }
                Ok(Dense {
                    weights,
                    bias: l.bias.into(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mlp = Mlp::from_layers(layers)?;
        Self::from_parts(
            mlp,
            ck.projections,
            ck.grid,
            ck.input_scaler,
            Some(ck.target_scaler),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_checkpoint())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_checkpoint(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

const CHECKPOINT_FORMAT: &str = "abinfer-quantile-net/1";

/// Structured-text checkpoint: layer widths plus row-major weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub layer_widths: Vec<usize>,
    pub layers: Vec<LayerWeights>,
    pub projections: ProjectionSet,
    pub grid: QuantileGrid,
    pub input_scaler: Scaler,
    pub target_scaler: Scaler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerWeights {
    /// `out x in`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Fits (or fine-tunes, keeping the current weights as the start) the
/// network on `(data, theta)` pairs. Scalers are refit on `pairs`.
pub fn train(
    pairs: &[Pair],
    mut net: QuantileNet,
    cfg: &TrainConfig,
) -> Result<(QuantileNet, TrainSummary)> {
    cfg.validate()?;
    net.check_pairs(pairs)?;
    let data: Vec<&[f64]> = pairs.iter().map(|p| p.data.as_slice()).collect();
    let projected: Vec<Vec<f64>> = pairs
        .iter()
        .map(|p| net.projections.project(&p.theta))
        .collect();
    let proj_rows: Vec<&[f64]> = projected.iter().map(Vec::as_slice).collect();
    net.input_scaler = Scaler::fit(&data);
    net.target_scaler = Scaler::fit(&proj_rows);
    let x = net.input_scaler.transform_rows(&data);
    let y = net.target_scaler.transform_rows(&proj_rows);
    let levels = net.grid.levels().to_vec();
    let kappa = cfg.kappa;
    let summary = fit_mlp(&mut net.mlp, &x, &y, cfg, |o, t| {
        quantile_batch_loss(o, t, &levels, kappa)
    })?;
    Ok((net, summary))
}

pub fn predict_quantiles(net: &QuantileNet, x: &[f64]) -> Result<QuantileTable> {
    Ok(net.predict_batch(&[x])?.pop().unwrap())
}

fn check_grid(net: &QuantileNet, cfg: &MswConfig) -> Result<()> {
    cfg.validate()?;
    if cfg.num_quantile_bins != net.grid.bins() || (cfg.delta - net.grid.delta()).abs() > 1e-15 {
        return Err(Error::InvalidArgument(format!(
            "MSW config (H={}, delta={}) does not match the network grid (H={}, delta={})",
            cfg.num_quantile_bins,
            cfg.delta,
            net.grid.bins(),
            net.grid.delta()
        )));
    }
    Ok(())
}

/// Estimated posterior MSW between `pi(. | x)` and `pi(. | x_star)`: the kernel statistic.
pub fn estimated_msw(net: &QuantileNet, x: &[f64], x_star: &[f64], cfg: &MswConfig) -> Result<f64> {
    check_grid(net, cfg)?;
    let tables = net.predict_batch(&[x, x_star])?;
    msw_from_quantile_tables(&tables[0], &tables[1], cfg, net.projections.dimension())
}

/// The kernel statistic against a fixed observation, with the observation's
/// quantile table computed once.
#[derive(Debug, Clone)]
pub struct MswKernel {
    net: QuantileNet,
    star_table: QuantileTable,
    cfg: MswConfig,
}

impl MswKernel {
    pub fn new(net: QuantileNet, x_star: &[f64], cfg: MswConfig) -> Result<Self> {
        check_grid(&net, &cfg)?;
        let star_table = predict_quantiles(&net, x_star)?;
        Ok(Self {
            net,
            star_table,
            cfg,
        })
    }

    pub fn net(&self) -> &QuantileNet {
        &self.net
    }

    pub fn into_net(self) -> QuantileNet {
        self.net
    }

    pub fn evaluate(&self, xs: &[&[f64]]) -> Result<Vec<f64>> {
        let d = self.net.projections.dimension();
        // bounded batches keep the activation matrices small
        let mut out = Vec::with_capacity(xs.len());
        for chunk in xs.chunks(4096) {
            for table in self.net.predict_batch(chunk)? {
                out.push(msw_from_quantile_tables(
                    &table,
                    &self.star_table,
                    &self.cfg,
                    d,
                )?);
            }
        }
        Ok(out)
    }
}
