//! Evaluation on the test split: per-graph records, aggregates and trade-off
//! scores.
//!
//! Per-graph CSV columns: `method, graph, nodes, edges, k, nmi, ac,
//! modularity, ncut, runtime_s, feat_s, prop_s, clus_s`. A cell is left empty
//! when the value does not exist (no ground truth, or no phase breakdown).
//! Runtimes cover feature extraction, propagation and clustering and exclude
//! file IO.

use std::fmt;
use std::io;
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use icd_core::graph::{modularity_score, ncut_score};
use icd_core::metrics::{accuracy, nmi};
use icd_core::model::{
    infer_cluster, infer_embed, infer_features, Checkpoint, ModelParams, Validate, ValidationGraph,
    ValidationMetric,
};
use icd_core::tos::{tos, QualityMetric};
use icd_core::{Graph, Partition};
use rayon::prelude::*;
use serde::Deserialize;

use crate::baselines::{greedy_modularity, spectral};
use crate::dataset::{Manifest, SplitTag};

/// A community detection method under evaluation.
#[derive(Clone, Debug)]
pub enum Method {
    /// A trained model; `name` labels its rows.
    Icd {
        name: String,
        checkpoint: Box<Checkpoint>,
    },
    Spectral {
        restarts: usize,
        seed: u64,
    },
    Greedy,
}

impl Method {
    pub fn name(&self) -> &str {
        match self {
            Method::Icd { name, .. } => name,
            Method::Spectral { .. } => "spectral",
            Method::Greedy => "greedy",
        }
    }

    /// Partition of `g` into `k` communities and the phase timings.
    pub fn detect(&self, g: &Graph, k: usize) -> Result<(Partition, Timing)> {
        match self {
            Method::Icd { checkpoint, .. } => {
                let cfg = &checkpoint.config;
                let t0 = Instant::now();
                let input = infer_features(
                    g,
                    checkpoint.variant,
                    cfg.feature_dim(),
                    cfg.constant_features,
                )?;
                let t1 = Instant::now();
                let u = infer_embed(&checkpoint.model.generator, &input)?;
                let t2 = Instant::now();
                let p = infer_cluster(&u, k, cfg.restarts, cfg.seed)?;
                let t3 = Instant::now();
                let phases = [t1 - t0, t2 - t1, t3 - t2].map(|d| d.as_secs_f64());
                Ok((
                    p,
                    Timing {
                        total: (t3 - t0).as_secs_f64(),
                        phases: Some(phases),
                    },
                ))
            }
            Method::Spectral { restarts, seed } => timed(|| spectral(g, k, *restarts, *seed)),
            Method::Greedy => timed(|| greedy_modularity(g, k)),
        }
    }
}

fn timed(f: impl FnOnce() -> icd_core::Result<Partition>) -> Result<(Partition, Timing)> {
    let t0 = Instant::now();
    let p = f()?;
    Ok((
        p,
        Timing {
            total: t0.elapsed().as_secs_f64(),
            phases: None,
        },
    ))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Timing {
    pub total: f64,
    /// Feature extraction, propagation, clustering.
    pub phases: Option<[f64; 3]>,
}

/// One method on one graph.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct GraphRecord {
    pub method: String,
    pub graph: String,
    pub nodes: usize,
    pub edges: usize,
    pub k: usize,
    pub nmi: Option<f64>,
    pub ac: Option<f64>,
    pub modularity: f64,
    pub ncut: f64,
    pub runtime_s: f64,
    pub feat_s: Option<f64>,
    pub prop_s: Option<f64>,
    pub clus_s: Option<f64>,
}

pub const RECORD_HEADER: [&str; 13] = [
    "method",
    "graph",
    "nodes",
    "edges",
    "k",
    "nmi",
    "ac",
    "modularity",
    "ncut",
    "runtime_s",
    "feat_s",
    "prop_s",
    "clus_s",
];

/// Formats with 6 significant digits.
pub fn fmt6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    // round first so 9.9999996 counts as 10
    let r: f64 = format!("{x:.5e}").parse().expect("float round trip");
    let exp = r.abs().log10().floor() as i32;
    if !(-5..=15).contains(&exp) {
        return format!("{r:.5e}");
    }
    let decimals = (5 - exp).max(0) as usize;
    format!("{r:.decimals$}")
}

/// `x` rounded to the 6 significant digits [`fmt6`] prints.
pub fn round6(x: f64) -> f64 {
    fmt6(x).parse().unwrap_or(x)
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt6).unwrap_or_default()
}

/// Scores `found` against `g` and, when known, the ground truth. Values are
/// rounded to what the CSV holds, so aggregates can be recomputed exactly
/// from the written rows.
pub fn score_partition(
    method: &str,
    graph: &str,
    g: &Graph,
    truth: Option<&Partition>,
    found: &Partition,
    timing: Timing,
) -> Result<GraphRecord> {
    let (nmi_v, ac_v) = match truth {
        Some(t) => (Some(nmi(t, found)?), Some(accuracy(t, found)?)),
        None => (None, None),
    };
    let (nmi_v, ac_v) = (nmi_v.map(round6), ac_v.map(round6));
    let phase = |i: usize| timing.phases.map(|p| round6(p[i]));
    Ok(GraphRecord {
        method: method.to_string(),
        graph: graph.to_string(),
        nodes: g.num_nodes(),
        edges: g.num_edges(),
        k: found.num_communities(),
        nmi: nmi_v,
        ac: ac_v,
        modularity: round6(modularity_score(g, found)?),
        ncut: round6(ncut_score(g, found)?),
        runtime_s: round6(timing.total),
        feat_s: phase(0),
        prop_s: phase(1),
        clus_s: phase(2),
    })
}

/// Runs every method on every test graph of the manifest, fanning graphs out
/// over `threads` workers (0 = all cores). Only ground-truth label files are
/// read. Records are ordered by method, then graph.
pub fn evaluate(
    manifest: &Manifest,
    methods: &[Method],
    threads: usize,
) -> Result<Vec<GraphRecord>> {
    if methods.is_empty() {
        bail!("no methods to evaluate");
    }
    let tests: Vec<_> = manifest.with_split(SplitTag::Test).collect();
    if tests.is_empty() {
        bail!("manifest has no test graphs; run `split` first");
    }
    let loaded = tests
        .iter()
        .map(|e| {
            let g = manifest.load_graph(e)?;
            let truth = manifest.load_truth(e)?;
            let k = e
                .communities
                .or(truth.as_ref().map(Partition::num_communities))
                .ok_or_else(|| anyhow!("{}: K unknown and no ground truth", e.path.display()))?;
            Ok((e.path.display().to_string(), g, truth, k))
        })
        .collect::<Result<Vec<_>>>()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()?;
    let per_graph: Vec<Vec<GraphRecord>> = pool.install(|| {
        loaded
            .par_iter()
            .map(|(name, g, truth, k)| {
                methods
                    .iter()
                    .map(|m| {
                        let (found, timing) = m
                            .detect(g, *k)
                            .with_context(|| format!("{} on {name}", m.name()))?;
                        score_partition(m.name(), name, g, truth.as_ref(), &found, timing)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut records = Vec::with_capacity(loaded.len() * methods.len());
    for mi in 0..methods.len() {
        records.extend(per_graph.iter().map(|row| row[mi].clone()));
    }
    Ok(records)
}

pub fn write_records(out: impl io::Write, records: &[GraphRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_HEADER)?;
    for r in records {
        w.write_record([
            r.method.clone(),
            r.graph.clone(),
            r.nodes.to_string(),
            r.edges.to_string(),
            r.k.to_string(),
            opt(r.nmi),
            opt(r.ac),
            fmt6(r.modularity),
            fmt6(r.ncut),
            fmt6(r.runtime_s),
            opt(r.feat_s),
            opt(r.prop_s),
            opt(r.clus_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(input: impl io::Read) -> Result<Vec<GraphRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != RECORD_HEADER {
        bail!("unexpected record columns: {}", header.join(","));
    }
    Ok(r.deserialize().collect::<csv::Result<Vec<GraphRecord>>>()?)
}

/// Mean and sample standard deviation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Stat { mean, std })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodSummary {
    pub method: String,
    pub graphs: usize,
    pub nmi: Option<Stat>,
    pub ac: Option<Stat>,
    pub modularity: Stat,
    pub ncut: Stat,
    pub runtime_s: Stat,
    pub feat_s: Option<Stat>,
    pub prop_s: Option<Stat>,
    pub clus_s: Option<Stat>,
}

/// Aggregates per method, in order of first appearance. An optional column
/// is aggregated only when every row of the method has it.
pub fn summarize(records: &[GraphRecord]) -> Vec<MethodSummary> {
    let mut order: Vec<&str> = Vec::new();
    for r in records {
        if !order.contains(&r.method.as_str()) {
            order.push(&r.method);
        }
    }
    order
        .into_iter()
        .map(|m| {
            let rows: Vec<&GraphRecord> = records.iter().filter(|r| r.method == m).collect();
            let all = |f: fn(&GraphRecord) -> f64| {
                Stat::of(&rows.iter().map(|r| f(r)).collect::<Vec<_>>()).unwrap()
            };
            let some = |f: fn(&GraphRecord) -> Option<f64>| {
                rows.iter()
                    .map(|r| f(r))
                    .collect::<Option<Vec<f64>>>()
                    .and_then(|v| Stat::of(&v))
            };
            MethodSummary {
                method: m.to_string(),
                graphs: rows.len(),
                nmi: some(|r| r.nmi),
                ac: some(|r| r.ac),
                modularity: all(|r| r.modularity),
                ncut: all(|r| r.ncut),
                runtime_s: all(|r| r.runtime_s),
                feat_s: some(|r| r.feat_s),
                prop_s: some(|r| r.prop_s),
                clus_s: some(|r| r.clus_s),
            }
        })
        .collect()
}

pub fn write_summary(out: impl io::Write, summaries: &[MethodSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["method".to_string(), "graphs".to_string()];
    for c in [
        "nmi",
        "ac",
        "modularity",
        "ncut",
        "runtime_s",
        "feat_s",
        "prop_s",
        "clus_s",
    ] {
        header.push(format!("{c}_mean"));
        header.push(format!("{c}_std"));
    }
    w.write_record(&header)?;
    for s in summaries {
        let mut row = vec![s.method.clone(), s.graphs.to_string()];
        for stat in [
            s.nmi,
            s.ac,
            Some(s.modularity),
            Some(s.ncut),
            Some(s.runtime_s),
            s.feat_s,
            s.prop_s,
            s.clus_s,
        ] {
            row.push(opt(stat.map(|x| x.mean)));
            row.push(opt(stat.map(|x| x.std)));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MetricColumn(pub QualityMetric);

impl fmt::Display for MetricColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            QualityMetric::Nmi => "nmi",
            QualityMetric::Accuracy => "ac",
            QualityMetric::Modularity => "modularity",
            QualityMetric::Ncut => "ncut",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TosRow {
    pub method: String,
    pub metric: QualityMetric,
    pub quality: f64,
    pub runtime_s: f64,
    pub tos: f64,
}

/// Trade-off scores of mean quality against mean runtime. The largest runtime
/// and the largest NCut are taken over the methods given. A metric missing
/// for any method is skipped for all.
pub fn tos_table(summaries: &[MethodSummary]) -> Result<Vec<TosRow>> {
    if summaries.len() < 2 {
        log::warn!("trade-off scores need at least two methods; a lone method scores 0");
    }
    let max_runtime = summaries
        .iter()
        .map(|s| s.runtime_s.mean)
        .fold(0.0, f64::max);
    let max_ncut = summaries.iter().map(|s| s.ncut.mean).fold(0.0, f64::max);
    let mut rows = Vec::new();
    for metric in [
        QualityMetric::Nmi,
        QualityMetric::Accuracy,
        QualityMetric::Modularity,
        QualityMetric::Ncut,
    ] {
        let quality = |s: &MethodSummary| match metric {
            QualityMetric::Nmi => s.nmi.map(|x| x.mean),
            QualityMetric::Accuracy => s.ac.map(|x| x.mean),
            QualityMetric::Modularity => Some(s.modularity.mean),
            QualityMetric::Ncut => Some(s.ncut.mean),
        };
        if summaries.iter().any(|s| quality(s).is_none()) {
            continue;
        }
        for s in summaries {
            let q = quality(s).unwrap();
            rows.push(TosRow {
                method: s.method.clone(),
                metric,
                quality: q,
                runtime_s: s.runtime_s.mean,
                tos: tos(q, metric, s.runtime_s.mean, max_ncut, max_runtime)?,
            });
        }
    }
    Ok(rows)
}

pub fn write_tos(out: impl io::Write, rows: &[TosRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "metric", "quality", "runtime_s", "tos"])?;
    for r in rows {
        w.write_record([
            r.method.clone(),
            MetricColumn(r.metric).to_string(),
            fmt6(r.quality),
            fmt6(r.runtime_s),
            fmt6(r.tos),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `records.csv`, `summary.csv` and `tos.csv` into `dir`.
pub fn write_all(dir: &Path, records: &[GraphRecord]) -> Result<Vec<MethodSummary>> {
    std::fs::create_dir_all(dir)?;
    let summaries = summarize(records);
    write_records(std::fs::File::create(dir.join("records.csv"))?, records)?;
    write_summary(std::fs::File::create(dir.join("summary.csv"))?, &summaries)?;
    write_tos(
        std::fs::File::create(dir.join("tos.csv"))?,
        &tos_table(&summaries)?,
    )?;
    Ok(summaries)
}

/// Validation scoring spread over the rayon pool.
#[derive(Clone, Debug)]
pub struct ParallelValidator {
    pub graphs: Vec<ValidationGraph>,
    pub metric: ValidationMetric,
    pub restarts: usize,
    pub seed: u64,
}

impl Validate for ParallelValidator {
    fn num_graphs(&self) -> usize {
        self.graphs.len()
    }

    fn score(&self, model: &ModelParams) -> icd_core::Result<f64> {
        let scores = self
            .graphs
            .par_iter()
            .map(|g| g.score(model, self.metric, self.restarts, self.seed))
            .collect::<icd_core::Result<Vec<f64>>>()?;
        // summed in order so the result does not depend on scheduling
        Ok(scores.iter().sum::<f64>() / scores.len() as f64)
    }
}
