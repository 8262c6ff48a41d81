//! Finite-difference check of the training gradients on small random graphs.

use icd_core::cluster::restart_rng;
use icd_core::model::{
    discriminator_gradients, discriminator_loss, encode, flatten_layers, generator_gradients,
    generator_loss, unflatten_layers, ModelParams, PreparedGraph, TrainConfig, Variant,
};
use icd_core::nn::{grad_check, GradCheckReport, DEFAULT_CHECK_COORDS, DEFAULT_CHECK_STEP};
use icd_core::{DenseMatrix, Graph, Partition, Result};
use rand::Rng;

pub const TOLERANCE: f64 = 1e-4;
const NODES: usize = 8;
const EDGE_PROB: f64 = 0.4;
const COMMUNITIES: usize = 3;
const FEATURES: usize = 4;
/// Parameters are redrawn while a ReLU input of the discriminator lies this
/// close to zero: a central difference straddling the kink compares against
/// a one-sided slope.
pub const KINK_MARGIN: f64 = 100.0 * DEFAULT_CHECK_STEP;
const MAX_REDRAWS: usize = 100;

/// Which loss was differentiated with respect to which parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    GeneratorLoss,
    DiscriminatorLoss,
    /// `L_D` through both encoders sharing the generator weights.
    DiscriminatorLossViaGenerator,
}

impl Target {
    pub fn describe(self) -> &'static str {
        match self {
            Target::GeneratorLoss => "dL_G/dG",
            Target::DiscriminatorLoss => "dL_D/dD",
            Target::DiscriminatorLossViaGenerator => "dL_D/dG (shared encoders)",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CheckOutcome {
    pub variant: Variant,
    pub graph: usize,
    pub target: Target,
    pub report: GradCheckReport,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.report.max_rel_error < TOLERANCE
    }
}

fn small_config() -> TrainConfig {
    TrainConfig {
        gen_widths: vec![FEATURES, 5, 3],
        disc_widths: vec![3, 4, 1],
        ..TrainConfig::default()
    }
}

/// Random graph without isolated nodes and a balanced random partition.
pub fn random_instance(
    n: usize,
    p: f64,
    k: usize,
    rng: &mut impl Rng,
) -> Result<(Graph, Partition)> {
    let g = loop {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        let g = Graph::new(n, &edges)?;
        if !g.has_isolated_nodes() {
            break g;
        }
    };
    let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    for i in (1..n).rev() {
        labels.swap(i, rng.random_range(0..=i));
    }
    Ok((g, Partition::new(labels)?))
}

/// Smallest `|pre-activation|` over the discriminator's ReLU units, on both
/// the real and the label-induced embeddings.
pub fn relu_margin(model: &ModelParams, prep: &PreparedGraph) -> Result<f64> {
    let layers = &model.discriminator.layers;
    let mut margin = f64::INFINITY;
    for s in [
        encode(&model.generator, &prep.feature_op, &prep.z)?,
        encode(&model.generator, &prep.label_op, &prep.z)?,
    ] {
        let mut h: DenseMatrix = s;
        for layer in &layers[..layers.len() - 1] {
            let mut pre = h.matmul(&layer.weight);
            if let Some(b) = &layer.bias {
                for i in 0..pre.rows() {
                    for (v, bj) in pre.row_mut(i).iter_mut().zip(b) {
                        *v += bj;
                    }
                }
            }
            margin = pre.as_slice().iter().fold(margin, |m, v| m.min(v.abs()));
            h = pre.map(|v| v.max(0.0));
        }
    }
    Ok(margin)
}

/// Checks every gradient of both variants, with `alpha = beta = 1`, on
/// `graphs` random 8-node graphs.
pub fn run(graphs: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    let cfg = small_config();
    let mut out = Vec::new();
    for variant in [Variant::IcdM, Variant::IcdC] {
        for gi in 0..graphs {
            let mut rng = restart_rng(seed, gi);
            let (g, p) = random_instance(NODES, EDGE_PROB, COMMUNITIES, &mut rng)?;
            let prep = PreparedGraph::new(&g, &p, variant, FEATURES, false)?;
            let mut model = ModelParams::init(&cfg, &mut rng)?;
            let mut redraws = 0;
            while relu_margin(&model, &prep)? < KINK_MARGIN {
                redraws += 1;
                if redraws > MAX_REDRAWS {
                    return Err(icd_core::Error::Input(
                        "no kink-free parameter draw found".into(),
                    ));
                }
                model = ModelParams::init(&cfg, &mut rng)?;
            }
            let mut push = |target, report| {
                out.push(CheckOutcome {
                    variant,
                    graph: gi,
                    target,
                    report,
                })
            };

            let (_, grads) = generator_gradients(&model, &prep, 1.0, 1.0)?;
            let mut flat = flatten_layers(&model.generator.layers);
            let report = grad_check(
                &mut flat,
                &grads.flatten(),
                DEFAULT_CHECK_STEP,
                DEFAULT_CHECK_COORDS,
                &mut rng,
                |w| {
                    let mut m = model.clone();
                    unflatten_layers(&mut m.generator.layers, w);
                    generator_loss(&m, &prep, 1.0, 1.0)
                        .expect("prepared instance")
                        .total
                },
            );
            push(Target::GeneratorLoss, report);

            let grads = discriminator_gradients(&model, &prep)?;
            let mut flat = flatten_layers(&model.discriminator.layers);
            let report = grad_check(
                &mut flat,
                &grads.discriminator.flatten(),
                DEFAULT_CHECK_STEP,
                DEFAULT_CHECK_COORDS,
                &mut rng,
                |w| {
                    let mut m = model.clone();
                    unflatten_layers(&mut m.discriminator.layers, w);
                    discriminator_loss(&m, &prep).expect("prepared instance")
                },
            );
            push(Target::DiscriminatorLoss, report);

            let mut flat = flatten_layers(&model.generator.layers);
            let report = grad_check(
                &mut flat,
                &grads.generator.flatten(),
                DEFAULT_CHECK_STEP,
                DEFAULT_CHECK_COORDS,
                &mut rng,
                |w| {
                    let mut m = model.clone();
                    unflatten_layers(&mut m.generator.layers, w);
                    discriminator_loss(&m, &prep).expect("prepared instance")
                },
            );
            push(Target::DiscriminatorLossViaGenerator, report);
        }
    }
    Ok(out)
}
