//! Desk-scale train/test pipeline shared by the acceptance and integration
//! targets.

#![allow(dead_code)]

use icd::dataset::split_ranges;
use icd::eval::ParallelValidator;
use icd::selfcheck::random_instance;
use icd_core::metrics::nmi;
use icd_core::model::{
    infer_cluster, infer_embed, infer_features, train, Checkpoint, EpochReport, LabeledGraph,
    ModelParams, TrainConfig, ValidationGraph, Variant,
};
use icd_core::synth::{generate_gn, GnSpec};
use icd_core::{Graph, Partition};

pub const DESK_GRAPHS: usize = 50;
pub const DESK_NODES: usize = 300;
pub const DESK_K: usize = 6;

pub fn desk_config(seed: u64) -> TrainConfig {
    TrainConfig {
        alpha: 1.0,
        beta: 1.0,
        samples_per_epoch: 20,
        updates_per_sample: 1,
        epochs: 30,
        gen_widths: vec![64, 32, 16],
        disc_widths: vec![16, 8, 1],
        seed,
        ..TrainConfig::default()
    }
}

pub fn gn_dataset(count: usize, n: usize, k: usize, p_in: f64, seed: u64) -> Vec<LabeledGraph> {
    (0..count)
        .map(|i| {
            let (graph, labels) = generate_gn(&GnSpec {
                n,
                k,
                p_in,
                seed: seed + i as u64,
            })
            .unwrap();
            LabeledGraph { graph, labels }
        })
        .collect()
}

/// Mean NMI of a generator's partitions of `graphs` against their truth.
pub fn mean_test_nmi(
    model: &ModelParams,
    variant: Variant,
    cfg: &TrainConfig,
    graphs: &[LabeledGraph],
) -> f64 {
    let total: f64 = graphs
        .iter()
        .map(|g| {
            let input = infer_features(&g.graph, variant, cfg.feature_dim(), cfg.constant_features)
                .unwrap();
            let u = infer_embed(&model.generator, &input).unwrap();
            let p = infer_cluster(&u, g.labels.num_communities(), cfg.restarts, cfg.seed).unwrap();
            nmi(&g.labels, &p).unwrap()
        })
        .sum();
    total / graphs.len() as f64
}

#[derive(Debug)]
pub struct DeskOutcome {
    pub checkpoint: Checkpoint,
    /// Test NMI of the saved checkpoint.
    pub final_nmi: f64,
    /// Test NMI of the initial parameters.
    pub init_nmi: f64,
    /// Test NMI after the first epoch.
    pub first_epoch_nmi: f64,
}

/// 50 GN graphs (N = 300, K = 6), split 40/5/5, ICD-M at the desk config.
pub fn desk_run(p_in: f64, seed: u64) -> DeskOutcome {
    let data = gn_dataset(DESK_GRAPHS, DESK_NODES, DESK_K, p_in, seed);
    let (tr, va, te) = split_ranges(data.len());
    let (train_set, valid_set, test_set) = (&data[tr], &data[va], &data[te]);
    let cfg = desk_config(seed);
    let variant = Variant::IcdM;
    let validator = ParallelValidator {
        graphs: valid_set
            .iter()
            .map(|g| ValidationGraph::new(g, variant, &cfg))
            .collect::<Result<_, _>>()
            .unwrap(),
        metric: cfg.validation,
        restarts: cfg.restarts,
        seed: cfg.seed,
    };
    let mut init_nmi = f64::NAN;
    let mut first_epoch_nmi = f64::NAN;
    let mut observer = |r: &EpochReport| match r.epoch {
        0 => init_nmi = mean_test_nmi(r.model, variant, &cfg, test_set),
        1 => first_epoch_nmi = mean_test_nmi(r.model, variant, &cfg, test_set),
        _ => {}
    };
    let checkpoint = train(train_set, &validator, &cfg, variant, &mut observer).unwrap();
    let final_nmi = mean_test_nmi(&checkpoint.model, variant, &cfg, test_set);
    DeskOutcome {
        checkpoint,
        final_nmi,
        init_nmi,
        first_epoch_nmi,
    }
}

/// Random graph on `n` nodes without isolated nodes, with a random partition
/// into `k` blocks.
pub fn random_graph(n: usize, p: f64, k: usize, seed: u64) -> (Graph, Partition) {
    random_instance(n, p, k, &mut icd_core::cluster::restart_rng(seed, 0)).unwrap()
}
