use super::{encode, graph_features, Checkpoint, GeneratorNet, Variant};
use crate::cluster::kmeans;
use crate::error::{input_err, Result};
use crate::graph::Graph;
use crate::linalg::DenseMatrix;
use crate::nn::GcnOperator;
use crate::partition::Partition;

/// Encoder input of one unseen graph.
#[derive(Clone, Debug)]
pub struct InferenceInput {
    pub z: DenseMatrix,
    pub op: GcnOperator,
}

/// Feature phase: `X`, coarsening, `Z` and the propagation operator.
pub fn infer_features(
    g: &Graph,
    variant: Variant,
    l: usize,
    constant: bool,
) -> Result<InferenceInput> {
    let (_, z) = graph_features(g, variant, l, constant)?;
    Ok(InferenceInput {
        z: z.values,
        op: GcnOperator::new(g),
    })
}

/// Propagation phase: one pass through the feature encoder.
pub fn infer_embed(gen: &GeneratorNet, input: &InferenceInput) -> Result<DenseMatrix> {
    encode(gen, &input.op, &input.z)
}

/// Clustering phase: K-Means on the embedding rows.
pub fn infer_cluster(u: &DenseMatrix, k: usize, restarts: usize, seed: u64) -> Result<Partition> {
    if k == 0 || k > u.rows() {
        return Err(input_err!("K = {k} must lie in [1, N = {}]", u.rows()));
    }
    Ok(kmeans(u, k, restarts, seed)?.labels)
}

/// Embedding and K-community partition of an unseen graph. Uses only the
/// checkpoint, the graph and `K`.
pub fn infer(ckpt: &Checkpoint, g: &Graph, k: usize) -> Result<(DenseMatrix, Partition)> {
    if k == 0 || k > g.num_nodes() {
        return Err(input_err!("K = {k} must lie in [1, N = {}]", g.num_nodes()));
    }
    let cfg = &ckpt.config;
    let input = infer_features(g, ckpt.variant, cfg.feature_dim(), cfg.constant_features)?;
    let u = infer_embed(&ckpt.model.generator, &input)?;
    let p = infer_cluster(&u, k, cfg.restarts, cfg.seed)?;
    Ok((u, p))
}
