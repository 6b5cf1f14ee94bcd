//! Feed-forward policies with an explicit encoder/controller split.
//!
//! Layers `[0, split_index)` form the encoder that maps an observation to a
//! latent vector; layers `[split_index, len)` form the controller that maps
//! the latent to action logits.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::{Task, Visual, OBS_DIM};
use crate::error::{shape_err, Error, Result};
use crate::numerics::Matrix;

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Linear,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::Tanh => x.tanh(),
            Activation::Linear => x,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

/// Dense layer `y = act(W·x + b)` with `W` stored `out × in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub activation: Activation,
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(spec: LayerSpec) -> Self {
        Self {
            activation: spec.activation,
            weights: Matrix::zeros(spec.out_dim, spec.in_dim),
            bias: vec![0.0; spec.out_dim],
        }
    }

    pub fn spec(&self) -> LayerSpec {
        LayerSpec {
            in_dim: self.weights.cols(),
            out_dim: self.weights.rows(),
            activation: self.activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    fn forward_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.weights.row_iter().zip(&self.bias).map(|(w, b)| {
            let dot: f64 = w.iter().zip(x).map(|(a, v)| a * v).sum();
            self.activation.apply(dot + b)
        }));
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyNet {
    layers: Vec<Layer>,
    split_index: usize,
}

impl PolicyNet {
    pub fn new(layers: Vec<Layer>, split_index: usize) -> Result<Self> {
        let net = Self {
            layers,
            split_index,
        };
        net.validate()?;
        Ok(net)
    }

    /// All-zero network with the given layer shapes.
    pub fn zeros(specs: &[LayerSpec], split_index: usize) -> Result<Self> {
        Self::new(specs.iter().copied().map(Layer::zeros).collect(), split_index)
    }

    /// `obs → 64 relu → 32 relu | 32 relu → actions`, latent dimension 32.
    pub fn default_architecture(obs_dim: usize, n_actions: usize) -> Self {
        use Activation::*;
        let specs = [
            LayerSpec { in_dim: obs_dim, out_dim: 64, activation: Relu },
            LayerSpec { in_dim: 64, out_dim: 32, activation: Relu },
            LayerSpec { in_dim: 32, out_dim: 32, activation: Relu },
            LayerSpec { in_dim: 32, out_dim: n_actions, activation: Linear },
        ];
        Self::zeros(&specs, 2).expect("default architecture is well formed")
    }

    fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Validation("network has no layers".into()));
        }
        if self.split_index < 1 || self.split_index >= self.layers.len() {
            return Err(Error::Validation(format!(
                "split_index {} must lie in [1, {})",
                self.split_index,
                self.layers.len()
            )));
        }
        for (k, layer) in self.layers.iter().enumerate() {
            if layer.in_dim() == 0 || layer.out_dim() == 0 {
                return Err(Error::Validation(format!("layer {k} has a zero dimension")));
            }
            if layer.bias.len() != layer.out_dim() {
                return Err(Error::Validation(format!(
                    "layer {k} has {} biases for {} outputs",
                    layer.bias.len(),
                    layer.out_dim()
                )));
            }
            if !layer.weights.is_finite() || layer.bias.iter().any(|b| !b.is_finite()) {
                return Err(Error::Validation(format!("layer {k} has non-finite parameters")));
            }
        }
        for (k, pair) in self.layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::Validation(format!(
                    "layer {k} outputs {} values but layer {} expects {}",
                    pair[0].out_dim(),
                    k + 1,
                    pair[1].in_dim()
                )));
            }
        }
        Ok(())
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn split_index(&self) -> usize {
        self.split_index
    }

    pub fn obs_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn n_actions(&self) -> usize {
        self.layers.last().unwrap().out_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.layers[self.split_index - 1].out_dim()
    }

    pub fn encoder_layers(&self) -> &[Layer] {
        &self.layers[..self.split_index]
    }

    pub fn controller_layers(&self) -> &[Layer] {
        &self.layers[self.split_index..]
    }

    fn run(layers: &[Layer], x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for layer in layers {
            layer.forward_into(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    fn check_len(op: &'static str, got: usize, want: usize) -> Result<()> {
        if got != want {
            return Err(shape_err(op, format!("input of length {got}, expected {want}")));
        }
        Ok(())
    }

    pub fn forward(&self, obs: &[f64]) -> Result<Vec<f64>> {
        Self::check_len("forward", obs.len(), self.obs_dim())?;
        Ok(Self::run(&self.layers, obs))
    }

    pub fn encode(&self, obs: &[f64]) -> Result<Vec<f64>> {
        Self::check_len("encode", obs.len(), self.obs_dim())?;
        Ok(Self::run(self.encoder_layers(), obs))
    }

    pub fn control(&self, latent: &[f64]) -> Result<Vec<f64>> {
        Self::check_len("control", latent.len(), self.latent_dim())?;
        Ok(Self::run(self.controller_layers(), latent))
    }

    /// Encodes every row of `obs`.
    pub fn encode_batch(&self, obs: &Matrix) -> Result<Matrix> {
        let mut data = Vec::with_capacity(obs.rows() * self.latent_dim());
        for row in obs.row_iter() {
            data.extend(self.encode(row)?);
        }
        Matrix::from_vec(obs.rows(), self.latent_dim(), data)
    }

    pub fn act(&self, obs: &[f64]) -> Result<usize> {
        Ok(act_greedy(&self.forward(obs)?))
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.as_slice().len() + l.bias.len())
            .sum()
    }

    /// Parameters flattened layer by layer, weights (row-major) then bias.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(l.weights.as_slice());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    /// Overwrites every parameter from a flat vector in [`PolicyNet::params`] order.
    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(shape_err(
                "set_params",
                format!("{} values for {} parameters", params.len(), self.param_count()),
            ));
        }
        let mut rest = params;
        for l in &mut self.layers {
            let nw = l.weights.as_slice().len();
            l.weights.as_mut_slice().copy_from_slice(&rest[..nw]);
            rest = &rest[nw..];
            let nb = l.bias.len();
            l.bias.copy_from_slice(&rest[..nb]);
            rest = &rest[nb..];
        }
        Ok(())
    }
}

/// Index of the largest logit; ties go to the lowest index.
pub fn act_greedy(logits: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in logits.iter().enumerate().skip(1) {
        if v > logits[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleMeta {
    pub visual: Visual,
    pub task: Task,
    pub seed: u64,
    /// Mean evaluation return recorded at training time; absent for
    /// assembled (stitched) bundles.
    pub mean_return: Option<f64>,
    pub obs_dim: usize,
    pub n_actions: usize,
}

/// A policy network plus the variation it was trained on.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyBundle {
    pub net: PolicyNet,
    pub meta: BundleMeta,
}

impl PolicyBundle {
    pub fn new(net: PolicyNet, meta: BundleMeta) -> Result<Self> {
        let b = Self { net, meta };
        b.validate()?;
        Ok(b)
    }

    fn validate(&self) -> Result<()> {
        if self.meta.obs_dim != self.net.obs_dim() {
            return Err(Error::Validation(format!(
                "meta.obs_dim is {} but the first layer takes {}",
                self.meta.obs_dim,
                self.net.obs_dim()
            )));
        }
        if self.meta.n_actions != self.net.n_actions() {
            return Err(Error::Validation(format!(
                "meta.n_actions is {} but the last layer emits {}",
                self.meta.n_actions,
                self.net.n_actions()
            )));
        }
        Ok(())
    }

    /// `"{visual}-{task}"`.
    pub fn variation_id(&self) -> String {
        variation_id(self.meta.visual, self.meta.task)
    }

    /// `"{visual}-{task}-s{seed}"`.
    pub fn id(&self) -> String {
        format!("{}-s{}", self.variation_id(), self.meta.seed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&BundleFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: BundleFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

pub fn variation_id(visual: Visual, task: Task) -> String {
    format!("{}-{}", visual.as_str(), task.as_str())
}

pub fn save_bundle(b: &PolicyBundle, path: impl AsRef<Path>) -> Result<()> {
    b.save(path)
}

pub fn load_bundle(path: impl AsRef<Path>) -> Result<PolicyBundle> {
    PolicyBundle::load(path)
}

/// Template meta for a fresh network on the GridDrive observation.
pub fn default_meta(visual: Visual, task: Task, seed: u64) -> BundleMeta {
    BundleMeta {
        visual,
        task,
        seed,
        mean_return: None,
        obs_dim: OBS_DIM,
        n_actions: task.n_actions(),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerFile {
    #[serde(rename = "in")]
    in_dim: usize,
    #[serde(rename = "out")]
    out_dim: usize,
    activation: Activation,
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleFile {
    format_version: u32,
    layers: Vec<LayerFile>,
    split_index: usize,
    meta: BundleMeta,
}

impl From<&PolicyBundle> for BundleFile {
    fn from(b: &PolicyBundle) -> Self {
        Self {
            format_version: BUNDLE_FORMAT_VERSION,
            layers: b
                .net
                .layers
                .iter()
                .map(|l| LayerFile {
                    in_dim: l.in_dim(),
                    out_dim: l.out_dim(),
                    activation: l.activation,
                    weights: l.weights.to_rows(),
                    bias: l.bias.clone(),
                })
                .collect(),
            split_index: b.net.split_index,
            meta: b.meta.clone(),
        }
    }
}

impl TryFrom<BundleFile> for PolicyBundle {
    type Error = Error;

    fn try_from(f: BundleFile) -> Result<Self> {
        if f.format_version != BUNDLE_FORMAT_VERSION {
            return Err(Error::Validation(format!(
                "field `format_version`: unsupported version {}",
                f.format_version
            )));
        }
        let mut layers = Vec::with_capacity(f.layers.len());
        for (k, l) in f.layers.into_iter().enumerate() {
            let weights = Matrix::from_rows(&l.weights)
                .map_err(|e| Error::Validation(format!("field `layers[{k}].weights`: {e}")))?;
            if weights.shape() != (l.out_dim, l.in_dim) {
                return Err(Error::Validation(format!(
                    "field `layers[{k}].weights` is {}x{} but the layer declares out={}, in={}",
                    weights.rows(),
                    weights.cols(),
                    l.out_dim,
                    l.in_dim
                )));
            }
            layers.push(Layer {
                activation: l.activation,
                weights,
                bias: l.bias,
            });
        }
        let net = PolicyNet::new(layers, f.split_index)?;
        PolicyBundle::new(net, f.meta)
    }
}
