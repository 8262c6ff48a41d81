//! The adversarial dual GNN.
//!
//! The generator is a stack of GCN layers (tanh, no bias) applied twice
//! with the same weights: once over the graph itself (feature encoder,
//! output `U`) and once over the label-induced graph (label-induced
//! encoder, output `U^(g)`). The discriminator is a fully connected ReLU
//! network with a sigmoid output that tells rows of `U^(g)` from rows of
//! `U`. Only the feature encoder is used after training.

mod infer;
mod loss;
mod train;

pub use infer::{infer, infer_cluster, infer_embed, infer_features, InferenceInput};
pub use loss::{
    decode, discriminator_gradients, discriminator_loss, generator_gradients, generator_loss,
    loss_al, loss_cr, loss_d, loss_fr, DiscriminatorGrads, GeneratorLoss,
};
pub use train::{train, EpochReport, LabeledGraph, SequentialValidator, Validate, ValidationGraph};

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::coarsen::{constant_features, extract_features, FeatureMatrix};
use crate::error::{input_err, Result};
use crate::graph::{modularity_matrix, norm_adj, Graph, IsolatedNodes, StructKind, StructMatrix};
use crate::linalg::DenseMatrix;
use crate::nn::{
    dense_backward, dense_forward, gcn_backward, gcn_forward, Activation, BlockOperator,
    DenseCache, GcnCache, GcnOperator, LayerParams, Propagate,
};
use crate::partition::{indicator, label_induced_adjacency, IndicatorKind, Partition};

/// Which classic objective supplies `X` and `H`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Modularity matrix `Q`, binary `H`.
    IcdM,
    /// Normalized adjacency `M`, degree-weighted `H`.
    IcdC,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::IcdM => "ICD-M",
            Variant::IcdC => "ICD-C",
        }
    }

    pub fn struct_kind(self) -> StructKind {
        match self {
            Variant::IcdM => StructKind::Modularity,
            Variant::IcdC => StructKind::NormAdj,
        }
    }

    pub fn indicator_kind(self) -> IndicatorKind {
        match self {
            Variant::IcdM => IndicatorKind::ModularityH,
            Variant::IcdC => IndicatorKind::NcutH,
        }
    }

    /// `X` of the variant.
    pub fn structure(self, g: &Graph) -> Result<StructMatrix> {
        match self {
            Variant::IcdM => modularity_matrix(g),
            Variant::IcdC => norm_adj(g, IsolatedNodes::Zero),
        }
    }
}

/// Validation criterion used to pick the saved parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ValidationMetric {
    Nmi,
    Modularity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub alpha: f64,
    pub beta: f64,
    /// Graphs sampled per epoch (`p`).
    pub samples_per_epoch: usize,
    /// Alternating updates per sampled graph (`m`).
    pub updates_per_sample: usize,
    /// `n`.
    pub epochs: usize,
    pub lr_g: f64,
    pub lr_d: f64,
    /// `[L, …, k]`.
    pub gen_widths: Vec<usize>,
    /// `[k, …, 1]`.
    pub disc_widths: Vec<usize>,
    pub validation: ValidationMetric,
    pub seed: u64,
    /// K-Means restarts at validation and inference.
    pub restarts: usize,
    /// Feed all-ones features instead of the coarsened structure.
    pub constant_features: bool,
}

impl Default for TrainConfig {
    /// Desk-scale settings: G 256→128→64, D 64→32→16→1.
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            samples_per_epoch: 20,
            updates_per_sample: 1,
            epochs: 30,
            lr_g: 5e-4,
            lr_d: 5e-4,
            gen_widths: alloc::vec![256, 128, 64],
            disc_widths: alloc::vec![64, 32, 16, 1],
            validation: ValidationMetric::Nmi,
            seed: 0,
            restarts: crate::cluster::DEFAULT_RESTARTS,
            constant_features: false,
        }
    }
}

impl TrainConfig {
    pub fn feature_dim(&self) -> usize {
        self.gen_widths[0]
    }

    pub fn embedding_dim(&self) -> usize {
        *self.gen_widths.last().unwrap()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return Err(input_err!("loss weights must be non-negative"));
        }
        if self.samples_per_epoch == 0 || self.updates_per_sample == 0 || self.epochs == 0 {
            return Err(input_err!("p, m and n must all be at least 1"));
        }
        if !(self.lr_g > 0.0 && self.lr_d > 0.0) {
            return Err(input_err!("learning rates must be positive"));
        }
        if self.gen_widths.len() < 2 || self.gen_widths.contains(&0) {
            return Err(input_err!(
                "generator widths {:?} are invalid",
                self.gen_widths
            ));
        }
        if self.disc_widths.len() < 2 || self.disc_widths.contains(&0) {
            return Err(input_err!(
                "discriminator widths {:?} are invalid",
                self.disc_widths
            ));
        }
        if self.disc_widths[0] != self.embedding_dim() {
            return Err(input_err!(
                "discriminator input {} differs from embedding dim {}",
                self.disc_widths[0],
                self.embedding_dim()
            ));
        }
        if *self.disc_widths.last().unwrap() != 1 {
            return Err(input_err!("discriminator must end in a single output"));
        }
        Ok(())
    }
}

/// Gradients of one network, laid out like its layers.
#[derive(Clone, Debug, PartialEq)]
pub struct NetGrads {
    pub weights: Vec<DenseMatrix>,
    pub biases: Vec<Option<Vec<f64>>>,
}

impl NetGrads {
    fn zeros_like(layers: &[LayerParams]) -> Self {
        Self {
            weights: layers
                .iter()
                .map(|l| DenseMatrix::zeros(l.fan_in(), l.fan_out()))
                .collect(),
            biases: layers
                .iter()
                .map(|l| l.bias.as_ref().map(|b| alloc::vec![0.0; b.len()]))
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &NetGrads) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.add_assign(b);
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            if let (Some(a), Some(b)) = (a, b) {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            }
        }
    }

    /// Tensors in the order of [`layer_tensors_mut`].
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.push(w.as_slice());
            if let Some(b) = b {
                out.push(b.as_slice());
            }
        }
        out
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.tensors().concat()
    }
}

/// Every trainable tensor of `layers`: weight, then bias if present, per layer.
pub fn layer_tensors_mut(layers: &mut [LayerParams]) -> Vec<&mut [f64]> {
    let mut out = Vec::new();
    for l in layers {
        out.push(l.weight.as_mut_slice());
        if let Some(b) = &mut l.bias {
            out.push(b.as_mut_slice());
        }
    }
    out
}

pub fn tensor_sizes(layers: &[LayerParams]) -> Vec<usize> {
    let mut out = Vec::new();
    for l in layers {
        out.push(l.weight.as_slice().len());
        if let Some(b) = &l.bias {
            out.push(b.len());
        }
    }
    out
}

/// All parameters of `layers` as one vector.
pub fn flatten_layers(layers: &[LayerParams]) -> Vec<f64> {
    let mut out = Vec::new();
    for l in layers {
        out.extend_from_slice(l.weight.as_slice());
        if let Some(b) = &l.bias {
            out.extend_from_slice(b);
        }
    }
    out
}

/// Inverse of [`flatten_layers`].
pub fn unflatten_layers(layers: &mut [LayerParams], flat: &[f64]) {
    let mut at = 0;
    for t in layer_tensors_mut(layers) {
        t.copy_from_slice(&flat[at..at + t.len()]);
        at += t.len();
    }
    assert_eq!(at, flat.len(), "parameter vector length mismatch");
}

fn check_widths(widths: &[usize], what: &str) -> Result<()> {
    if widths.len() < 2 || widths.contains(&0) {
        return Err(input_err!("{what} widths {widths:?} are invalid"));
    }
    Ok(())
}

/// Shared GCN weights of the two encoders.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorNet {
    pub layers: Vec<LayerParams>,
}

impl GeneratorNet {
    pub fn new(widths: &[usize], rng: &mut impl Rng) -> Result<Self> {
        check_widths(widths, "generator")?;
        let layers = widths
            .windows(2)
            .map(|w| LayerParams::xavier(w[0], w[1], false, Activation::Tanh, rng))
            .collect();
        Ok(Self { layers })
    }

    pub fn widths(&self) -> Vec<usize> {
        layer_widths(&self.layers)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscriminatorNet {
    pub layers: Vec<LayerParams>,
}

impl DiscriminatorNet {
    pub fn new(widths: &[usize], rng: &mut impl Rng) -> Result<Self> {
        check_widths(widths, "discriminator")?;
        if *widths.last().unwrap() != 1 {
            return Err(input_err!("discriminator must end in a single output"));
        }
        let last = widths.len() - 2;
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i == last {
                    Activation::Sigmoid
                } else {
                    Activation::Relu
                };
                LayerParams::xavier(w[0], w[1], true, act, rng)
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn widths(&self) -> Vec<usize> {
        layer_widths(&self.layers)
    }
}

fn layer_widths(layers: &[LayerParams]) -> Vec<usize> {
    let mut w: Vec<usize> = layers.iter().map(LayerParams::fan_in).collect();
    w.extend(layers.last().map(LayerParams::fan_out));
    w
}

/// All trainable weights.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub generator: GeneratorNet,
    pub discriminator: DiscriminatorNet,
}

impl ModelParams {
    /// Xavier initialization; draws the generator first.
    pub fn init(cfg: &TrainConfig, rng: &mut impl Rng) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            generator: GeneratorNet::new(&cfg.gen_widths, rng)?,
            discriminator: DiscriminatorNet::new(&cfg.disc_widths, rng)?,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.generator
            .layers
            .iter()
            .chain(&self.discriminator.layers)
            .all(|l| {
                l.weight.is_finite()
                    && l.bias
                        .as_ref()
                        .is_none_or(|b| b.iter().all(|v| v.is_finite()))
            })
    }
}

/// Trained parameters with their provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub variant: Variant,
    pub config: TrainConfig,
    pub model: ModelParams,
    pub best_score: f64,
    /// 0 means the initial parameters were never beaten.
    pub best_epoch: usize,
    /// Free-form note kept with the checkpoint (e.g. the producing command).
    pub note: String,
}

/// Layer caches of one encoder pass.
#[derive(Clone, Debug)]
pub struct EncoderCache {
    layers: Vec<GcnCache>,
}

/// Chained GCN layers of `gen` over `prop`.
pub fn encode<P: Propagate + ?Sized>(
    gen: &GeneratorNet,
    prop: &P,
    z: &DenseMatrix,
) -> Result<DenseMatrix> {
    Ok(encode_cached(gen, prop, z)?.0)
}

pub fn encode_cached<P: Propagate + ?Sized>(
    gen: &GeneratorNet,
    prop: &P,
    z: &DenseMatrix,
) -> Result<(DenseMatrix, EncoderCache)> {
    let mut caches = Vec::with_capacity(gen.layers.len());
    let mut f = z.clone();
    for layer in &gen.layers {
        let (out, cache) = gcn_forward(prop, &f, layer)?;
        caches.push(cache);
        f = out;
    }
    Ok((f, EncoderCache { layers: caches }))
}

/// Weight gradients of the encoder given `dL/dU`.
pub fn encoder_backward<P: Propagate + ?Sized>(
    gen: &GeneratorNet,
    prop: &P,
    cache: &EncoderCache,
    d_u: &DenseMatrix,
) -> Result<NetGrads> {
    let mut grads = NetGrads::zeros_like(&gen.layers);
    let mut upstream = d_u.clone();
    for (i, (layer, c)) in gen.layers.iter().zip(&cache.layers).enumerate().rev() {
        let g = gcn_backward(prop, c, layer, &upstream)?;
        grads.weights[i] = g.weight;
        upstream = g.input;
    }
    Ok(grads)
}

/// Layer caches of one discriminator pass.
#[derive(Clone, Debug)]
pub struct DiscriminatorCache {
    layers: Vec<DenseCache>,
}

/// Per-row probabilities `y = D(S)`.
pub fn discriminate(disc: &DiscriminatorNet, s: &DenseMatrix) -> Result<Vec<f64>> {
    Ok(discriminate_cached(disc, s)?.0)
}

pub fn discriminate_cached(
    disc: &DiscriminatorNet,
    s: &DenseMatrix,
) -> Result<(Vec<f64>, DiscriminatorCache)> {
    let mut caches = Vec::with_capacity(disc.layers.len());
    let mut f = s.clone();
    for layer in &disc.layers {
        let (out, cache) = dense_forward(&f, layer)?;
        caches.push(cache);
        f = out;
    }
    Ok((f.into_vec(), DiscriminatorCache { layers: caches }))
}

/// Parameter gradients and `dL/dS` given `dL/dy`.
pub fn discriminator_backward(
    disc: &DiscriminatorNet,
    cache: &DiscriminatorCache,
    d_y: &[f64],
) -> Result<(NetGrads, DenseMatrix)> {
    let mut grads = NetGrads::zeros_like(&disc.layers);
    let mut upstream = DenseMatrix::from_vec(d_y.len(), 1, d_y.to_vec())?;
    for (i, (layer, c)) in disc.layers.iter().zip(&cache.layers).enumerate().rev() {
        let g = dense_backward(c, layer, &upstream)?;
        grads.weights[i] = g.weight;
        grads.biases[i] = g.bias;
        upstream = g.input;
    }
    Ok((grads, upstream))
}

/// `X` and the encoder input `Z` of a graph.
pub fn graph_features(
    g: &Graph,
    variant: Variant,
    l: usize,
    constant: bool,
) -> Result<(StructMatrix, FeatureMatrix)> {
    let x = variant.structure(g)?;
    let z = if constant {
        constant_features(g.num_nodes(), l)
    } else {
        extract_features(g, &x, l)?
    };
    Ok((x, z))
}

/// Everything one training step needs for one labeled graph.
#[derive(Clone, Debug)]
pub struct PreparedGraph {
    /// Dense `X` (`Q` or `M`).
    pub x: DenseMatrix,
    pub z: DenseMatrix,
    pub feature_op: GcnOperator,
    pub label_op: BlockOperator,
    /// `H Hᵀ` of the training labels.
    pub hht: DenseMatrix,
}

impl PreparedGraph {
    pub fn new(
        g: &Graph,
        labels: &Partition,
        variant: Variant,
        l: usize,
        constant: bool,
    ) -> Result<Self> {
        if labels.num_nodes() != g.num_nodes() {
            return Err(input_err!(
                "labels cover {} nodes but the graph has {}",
                labels.num_nodes(),
                g.num_nodes()
            ));
        }
        let (x, z) = graph_features(g, variant, l, constant)?;
        let h = indicator(labels, variant.indicator_kind(), Some(g))?;
        Ok(Self {
            x: x.to_dense(),
            z: z.values,
            feature_op: GcnOperator::new(g),
            label_op: BlockOperator::new(&label_induced_adjacency(labels)),
            hht: h.outer(),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.x.rows()
    }
}
