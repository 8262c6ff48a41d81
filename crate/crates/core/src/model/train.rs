use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    discriminator_gradients, generator_gradients, infer_cluster, infer_embed, infer_features,
    layer_tensors_mut, tensor_sizes, Checkpoint, InferenceInput, ModelParams, PreparedGraph,
    TrainConfig, ValidationMetric, Variant,
};
use crate::error::{input_err, Error, Result};
use crate::graph::{modularity_score, Graph};
use crate::metrics::nmi;
use crate::nn::Adam;
use crate::partition::Partition;

/// A graph with the community labels used as supervision (ground truth or
/// a baseline's output).
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledGraph {
    pub graph: Graph,
    pub labels: Partition,
}

/// A validation graph with its features precomputed.
#[derive(Clone, Debug)]
pub struct ValidationGraph {
    pub input: InferenceInput,
    pub graph: Graph,
    pub truth: Partition,
}

impl ValidationGraph {
    pub fn new(g: &LabeledGraph, variant: Variant, cfg: &TrainConfig) -> Result<Self> {
        Ok(Self {
            input: infer_features(&g.graph, variant, cfg.feature_dim(), cfg.constant_features)?,
            graph: g.graph.clone(),
            truth: g.labels.clone(),
        })
    }

    /// Quality of the model's partition of this graph.
    pub fn score(
        &self,
        model: &ModelParams,
        metric: ValidationMetric,
        restarts: usize,
        seed: u64,
    ) -> Result<f64> {
        let u = infer_embed(&model.generator, &self.input)?;
        let found = infer_cluster(&u, self.truth.num_communities(), restarts, seed)?;
        match metric {
            ValidationMetric::Nmi => nmi(&self.truth, &found),
            ValidationMetric::Modularity => modularity_score(&self.graph, &found),
        }
    }
}

/// Mean validation quality of a parameter set.
pub trait Validate {
    fn num_graphs(&self) -> usize;
    fn score(&self, model: &ModelParams) -> Result<f64>;
}

/// Scores validation graphs one after another.
#[derive(Clone, Debug)]
pub struct SequentialValidator {
    pub graphs: Vec<ValidationGraph>,
    pub metric: ValidationMetric,
    pub restarts: usize,
    pub seed: u64,
}

impl SequentialValidator {
    pub fn new(graphs: &[LabeledGraph], variant: Variant, cfg: &TrainConfig) -> Result<Self> {
        Ok(Self {
            graphs: graphs
                .iter()
                .map(|g| ValidationGraph::new(g, variant, cfg))
                .collect::<Result<_>>()?,
            metric: cfg.validation,
            restarts: cfg.restarts,
            seed: cfg.seed,
        })
    }
}

impl Validate for SequentialValidator {
    fn num_graphs(&self) -> usize {
        self.graphs.len()
    }

    fn score(&self, model: &ModelParams) -> Result<f64> {
        let mut sum = 0.0;
        for g in &self.graphs {
            sum += g.score(model, self.metric, self.restarts, self.seed)?;
        }
        Ok(sum / self.graphs.len() as f64)
    }
}

/// Per-epoch progress. Epoch 0 describes the initial parameters and has no
/// losses.
#[derive(Clone, Copy, Debug)]
pub struct EpochReport<'a> {
    pub epoch: usize,
    pub loss_d: Option<f64>,
    pub loss_g: Option<f64>,
    pub validation: f64,
    pub best_score: f64,
    pub best_epoch: usize,
    /// D-step/G-step pairs run so far.
    pub updates: usize,
    pub model: &'a ModelParams,
}

fn diverged(epoch: usize, what: &str, value: f64) -> Error {
    Error::Diverged {
        epoch,
        detail: alloc::format!("{what} = {value}"),
    }
}

/// Alternating adversarial training; returns the parameters with the best
/// mean validation score seen after any epoch (the initial parameters
/// included).
pub fn train(
    train_set: &[LabeledGraph],
    validator: &dyn Validate,
    cfg: &TrainConfig,
    variant: Variant,
    observer: &mut dyn FnMut(&EpochReport),
) -> Result<Checkpoint> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(input_err!("training set is empty"));
    }
    if validator.num_graphs() == 0 {
        return Err(input_err!("validation set is empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = ModelParams::init(cfg, &mut rng)?;
    let mut adam_g = Adam::new(cfg.lr_g, &tensor_sizes(&model.generator.layers));
    let mut adam_d = Adam::new(cfg.lr_d, &tensor_sizes(&model.discriminator.layers));

    let mut best_score = validator.score(&model)?;
    let mut best_model = model.clone();
    let mut best_epoch = 0;
    observer(&EpochReport {
        epoch: 0,
        loss_d: None,
        loss_g: None,
        validation: best_score,
        best_score,
        best_epoch,
        updates: 0,
        model: &model,
    });

    let mut updates = 0;
    let l = cfg.feature_dim();
    for epoch in 1..=cfg.epochs {
        let (mut sum_d, mut sum_g, mut steps) = (0.0, 0.0, 0usize);
        for _ in 0..cfg.samples_per_epoch {
            let sample = &train_set[rng.random_range(0..train_set.len())];
            let prep = PreparedGraph::new(
                &sample.graph,
                &sample.labels,
                variant,
                l,
                cfg.constant_features,
            )?;
            for _ in 0..cfg.updates_per_sample {
                let d = discriminator_gradients(&model, &prep)?;
                if !d.loss.is_finite() {
                    return Err(diverged(epoch, "discriminator loss", d.loss));
                }
                adam_d.step(
                    &mut layer_tensors_mut(&mut model.discriminator.layers),
                    &d.discriminator.tensors(),
                );

                let (g_loss, g_grads) = generator_gradients(&model, &prep, cfg.alpha, cfg.beta)?;
                if !g_loss.is_finite() {
                    return Err(diverged(epoch, "generator loss", g_loss.total));
                }
                adam_g.step(
                    &mut layer_tensors_mut(&mut model.generator.layers),
                    &g_grads.tensors(),
                );
                sum_d += d.loss;
                sum_g += g_loss.total;
                steps += 1;
                updates += 1;
            }
        }
        if !model.is_finite() {
            return Err(Error::Diverged {
                epoch,
                detail: String::from("non-finite parameters"),
            });
        }
        let score = validator.score(&model)?;
        if score > best_score {
            best_score = score;
            best_epoch = epoch;
            best_model = model.clone();
        }
        observer(&EpochReport {
            epoch,
            loss_d: Some(sum_d / steps as f64),
            loss_g: Some(sum_g / steps as f64),
            validation: score,
            best_score,
            best_epoch,
            updates,
            model: &model,
        });
    }
    Ok(Checkpoint {
        variant,
        config: cfg.clone(),
        model: best_model,
        best_score,
        best_epoch,
        note: String::new(),
    })
}
