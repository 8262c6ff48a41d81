//! Command-line surface. `main` only parses and dispatches here, so tests can
//! drive the same code paths with [`Cli::try_parse_from`].

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use icd_core::model::{infer, train, EpochReport, LabeledGraph, ValidationGraph};
use icd_core::synth::{generate_gn, generate_lfr, GnSpec, LfrSpec};
use icd_core::{DenseMatrix, Graph, Partition};
use log::{info, warn};
use rayon::prelude::*;

use crate::baselines::{greedy_modularity, spectral};
use crate::checkpoint::{self, variant_name};
use crate::config::ConfigFile;
use crate::dataset::{graph_file_name, Manifest, ManifestEntry, SplitTag, MANIFEST_NAME};
use crate::eval::{self, fmt6, Method, ParallelValidator};
use crate::formats::{read_edge_list, write_edge_list, write_labels};
use crate::selfcheck;

pub const CHECKPOINT_NAME: &str = "model.ckpt";
pub const TRAINING_LOG_NAME: &str = "training.csv";

#[derive(Debug, Parser)]
#[command(
    name = "icd",
    version,
    about = "Inductive community detection: datasets, training, inference, evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset of synthetic graphs with ground truth.
    Generate(Box<GenerateArgs>),
    /// Tag manifest entries train/valid/test by position (80/10/10).
    Split { manifest: PathBuf },
    /// Synthesize training labels with a baseline on the train and valid graphs.
    Label(LabelArgs),
    /// Train a model and save the best checkpoint.
    Train(Box<TrainArgs>),
    /// Partition one graph with a trained checkpoint.
    Infer(InferArgs),
    /// Evaluate methods on the test graphs.
    Eval(EvalArgs),
    /// Recompute summary and trade-off scores from a per-graph records CSV.
    Tos {
        records: PathBuf,
        /// Output CSV (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Finite-difference check of the training gradients.
    Gradcheck {
        #[arg(long, default_value_t = 3)]
        graphs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Gn,
    Lfr,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub family: Family,
    #[arg(long)]
    pub count: usize,
    #[arg(long)]
    pub outdir: PathBuf,
    #[arg(long, default_value_t = 5000)]
    pub nodes: usize,
    /// Block count (gn).
    #[arg(long, default_value_t = 250)]
    pub communities: usize,
    /// Within-block edge probability (gn).
    #[arg(long, default_value_t = 0.4)]
    pub p_in: f64,
    /// Mixing parameter (lfr).
    #[arg(long, default_value_t = 0.3)]
    pub mu: f64,
    #[arg(long, default_value_t = 10.0)]
    pub avg_degree: f64,
    #[arg(long, default_value_t = 100)]
    pub max_degree: usize,
    #[arg(long, default_value_t = 10)]
    pub min_community: usize,
    #[arg(long, default_value_t = 200)]
    pub max_community: usize,
    #[arg(long, default_value_t = 2.0)]
    pub tau1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub tau2: f64,
    /// Graph `i` uses seed `seed + i`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    Spectral,
    Greedy,
}

impl Baseline {
    pub fn name(self) -> &'static str {
        match self {
            Baseline::Spectral => "spectral",
            Baseline::Greedy => "greedy",
        }
    }
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    pub manifest: PathBuf,
    #[arg(long, value_enum)]
    pub method: Baseline,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    pub manifest: PathBuf,
    #[arg(long)]
    pub outdir: PathBuf,
    /// TOML file with training settings; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Label source: `truth` or a baseline name used with `label`.
    #[arg(long, default_value = "truth")]
    pub labels: String,
    /// icd-m or icd-c.
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub samples_per_epoch: Option<usize>,
    #[arg(long)]
    pub updates_per_sample: Option<usize>,
    #[arg(long)]
    pub lr_g: Option<f64>,
    #[arg(long)]
    pub lr_d: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub gen_widths: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub disc_widths: Option<Vec<usize>>,
    /// nmi or modularity.
    #[arg(long)]
    pub validation: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub constant_features: Option<bool>,
}

impl TrainArgs {
    fn overrides(&self) -> ConfigFile {
        ConfigFile {
            variant: self.variant.clone(),
            alpha: self.alpha,
            beta: self.beta,
            samples_per_epoch: self.samples_per_epoch,
            updates_per_sample: self.updates_per_sample,
            epochs: self.epochs,
            lr_g: self.lr_g,
            lr_d: self.lr_d,
            gen_widths: self.gen_widths.clone(),
            disc_widths: self.disc_widths.clone(),
            validation: self.validation.clone(),
            seed: self.seed,
            restarts: self.restarts,
            constant_features: self.constant_features,
        }
    }
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub k: usize,
    /// Label file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the embedding as CSV.
    #[arg(long)]
    pub embedding: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub manifest: PathBuf,
    /// `spectral`, `greedy` or a checkpoint path; repeat or comma-separate.
    #[arg(long, value_delimiter = ',', required = true)]
    pub methods: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// K-Means restarts of the spectral baseline.
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(&a),
        Command::Split { manifest } => split(&manifest),
        Command::Label(a) => label(&a),
        Command::Train(a) => train_cmd(&a),
        Command::Infer(a) => infer_cmd(&a),
        Command::Eval(a) => eval_cmd(&a),
        Command::Tos { records, out } => tos_cmd(&records, out.as_deref()),
        Command::Gradcheck { graphs, seed } => gradcheck(graphs, seed),
    }
}

fn generate_one(a: &GenerateArgs, seed: u64) -> icd_core::Result<(Graph, Partition)> {
    match a.family {
        Family::Gn => generate_gn(&GnSpec {
            n: a.nodes,
            k: a.communities,
            p_in: a.p_in,
            seed,
        }),
        Family::Lfr => generate_lfr(&LfrSpec {
            n: a.nodes,
            avg_degree: a.avg_degree,
            max_degree: a.max_degree,
            min_community: a.min_community,
            max_community: a.max_community,
            mu: a.mu,
            tau1: a.tau1,
            tau2: a.tau2,
            seed,
        }),
    }
}

pub fn generate(a: &GenerateArgs) -> Result<()> {
    fs::create_dir_all(&a.outdir)?;
    let graphs = (0..a.count)
        .into_par_iter()
        .map(|i| generate_one(a, a.seed + i as u64).with_context(|| format!("graph {i}")))
        .collect::<Result<Vec<_>>>()?;
    let mut manifest = Manifest {
        root: a.outdir.clone(),
        entries: Vec::with_capacity(a.count),
    };
    for (i, (g, truth)) in graphs.iter().enumerate() {
        let entry = ManifestEntry {
            path: PathBuf::from(graph_file_name(i)),
            nodes: g.num_nodes(),
            edges: g.num_edges(),
            communities: Some(truth.num_communities()),
            split: SplitTag::Unassigned,
        };
        write_edge_list(&manifest.edges_path(&entry), g)?;
        write_labels(&manifest.truth_path(&entry), truth)?;
        manifest.entries.push(entry);
    }
    manifest.write(&a.outdir.join(MANIFEST_NAME))?;
    info!("wrote {} graphs to {}", a.count, a.outdir.display());
    Ok(())
}

pub fn split(path: &Path) -> Result<()> {
    let mut m = Manifest::read(path)?;
    m.assign_split();
    m.write(path)?;
    let count = |t| m.with_split(t).count();
    info!(
        "train {} / valid {} / test {}",
        count(SplitTag::Train),
        count(SplitTag::Valid),
        count(SplitTag::Test)
    );
    Ok(())
}

pub fn label(a: &LabelArgs) -> Result<()> {
    let m = Manifest::read(&a.manifest)?;
    let entries: Vec<&ManifestEntry> = m
        .entries
        .iter()
        .filter(|e| matches!(e.split, SplitTag::Train | SplitTag::Valid))
        .collect();
    if entries.is_empty() {
        bail!("no train or valid graphs; run `split` first");
    }
    entries.par_iter().try_for_each(|e| -> Result<()> {
        let g = m.load_graph(e)?;
        let k = e
            .communities
            .with_context(|| format!("{}: K unknown in the manifest", e.path.display()))?;
        let p = match a.method {
            Baseline::Spectral => spectral(&g, k, a.restarts, a.seed)?,
            Baseline::Greedy => greedy_modularity(&g, k)?,
        };
        write_labels(&m.baseline_labels_path(e, a.method.name()), &p)?;
        Ok(())
    })?;
    info!("labelled {} graphs with {}", entries.len(), a.method.name());
    Ok(())
}

fn load_split(m: &Manifest, tag: SplitTag, source: &str) -> Result<Vec<LabeledGraph>> {
    m.with_split(tag)
        .map(|e| m.load_labeled(e, source))
        .collect()
}

pub fn train_cmd(a: &TrainArgs) -> Result<()> {
    let file = match &a.config {
        Some(p) => ConfigFile::read(p)?,
        None => ConfigFile::default(),
    };
    let (variant, cfg) = file.merge(a.overrides()).resolve()?;
    let m = Manifest::read(&a.manifest)?;
    let train_set = load_split(&m, SplitTag::Train, &a.labels)?;
    let valid_set = load_split(&m, SplitTag::Valid, &a.labels)?;
    let validator = ParallelValidator {
        graphs: valid_set
            .iter()
            .map(|g| ValidationGraph::new(g, variant, &cfg))
            .collect::<icd_core::Result<_>>()?,
        metric: cfg.validation,
        restarts: cfg.restarts,
        seed: cfg.seed,
    };
    info!(
        "training {} on {} graphs, validating on {}",
        variant_name(variant),
        train_set.len(),
        valid_set.len()
    );
    let mut log_rows = Vec::new();
    let mut observer = |r: &EpochReport| {
        info!(
            "epoch {:>3}  L_D {}  L_G {}  valid {:.4}  best {:.4} @ {}",
            r.epoch,
            r.loss_d.map_or("-".into(), fmt6),
            r.loss_g.map_or("-".into(), fmt6),
            r.validation,
            r.best_score,
            r.best_epoch
        );
        log_rows.push([
            r.epoch.to_string(),
            r.loss_d.map(fmt6).unwrap_or_default(),
            r.loss_g.map(fmt6).unwrap_or_default(),
            fmt6(r.validation),
            fmt6(r.best_score),
            r.best_epoch.to_string(),
        ]);
    };
    let mut ckpt = train(&train_set, &validator, &cfg, variant, &mut observer)?;
    ckpt.note = format!("labels={}", a.labels);

    fs::create_dir_all(&a.outdir)?;
    let mut w = csv::Writer::from_path(a.outdir.join(TRAINING_LOG_NAME))?;
    w.write_record([
        "epoch",
        "loss_d",
        "loss_g",
        "validation",
        "best_score",
        "best_epoch",
    ])?;
    for row in &log_rows {
        w.write_record(row)?;
    }
    w.flush()?;
    let path = a.outdir.join(CHECKPOINT_NAME);
    checkpoint::save(&path, &ckpt)?;
    info!(
        "saved {} (epoch {}, validation {:.4})",
        path.display(),
        ckpt.best_epoch,
        ckpt.best_score
    );
    Ok(())
}

pub fn write_embedding(out: impl Write, u: &DenseMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for i in 0..u.rows() {
        w.write_record(u.row(i).iter().map(|&x| format!("{x:?}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn infer_cmd(a: &InferArgs) -> Result<()> {
    let ckpt = checkpoint::load(&a.checkpoint)?;
    let g = read_edge_list(&a.graph).with_context(|| format!("reading {}", a.graph.display()))?;
    let (u, p) = infer(&ckpt, &g, a.k)?;
    match &a.out {
        Some(path) => write_labels(path, &p)?,
        None => {
            let mut out = io::stdout().lock();
            for &l in p.labels() {
                writeln!(out, "{l}")?;
            }
        }
    }
    if let Some(path) = &a.embedding {
        write_embedding(fs::File::create(path)?, &u)?;
    }
    Ok(())
}

/// Turns `eval --methods` entries into methods; checkpoint rows are named by
/// variant, with the file stem appended when two would collide.
pub fn parse_methods(specs: &[String], restarts: usize, seed: u64) -> Result<Vec<Method>> {
    let mut methods: Vec<Method> = Vec::new();
    for s in specs {
        let m = match s.as_str() {
            "spectral" => Method::Spectral { restarts, seed },
            "greedy" => Method::Greedy,
            path => {
                let checkpoint = checkpoint::load(Path::new(path))
                    .with_context(|| format!("loading checkpoint {path}"))?;
                let mut name = checkpoint.variant.name().to_string();
                if methods.iter().any(|m| m.name() == name) {
                    let stem = Path::new(path)
                        .parent()
                        .and_then(Path::file_name)
                        .unwrap_or_default()
                        .to_string_lossy();
                    name = format!("{name}:{stem}");
                }
                Method::Icd {
                    name,
                    checkpoint: Box::new(checkpoint),
                }
            }
        };
        if methods.iter().any(|x| x.name() == m.name()) {
            bail!("method `{}` listed twice", m.name());
        }
        methods.push(m);
    }
    Ok(methods)
}

pub fn eval_cmd(a: &EvalArgs) -> Result<()> {
    let methods = parse_methods(&a.methods, a.restarts, a.seed)?;
    let m = Manifest::read(&a.manifest)?;
    let records = eval::evaluate(&m, &methods, a.threads)?;
    let summaries = eval::write_all(&a.out, &records)?;
    for s in &summaries {
        info!(
            "{:<12} nmi {}  modularity {}  ncut {}  runtime {} s",
            s.method,
            s.nmi.map_or("-".into(), |x| fmt6(x.mean)),
            fmt6(s.modularity.mean),
            fmt6(s.ncut.mean),
            fmt6(s.runtime_s.mean)
        );
    }
    Ok(())
}

pub fn tos_cmd(records: &Path, out: Option<&Path>) -> Result<()> {
    let recs = eval::read_records(
        fs::File::open(records).with_context(|| format!("opening {}", records.display()))?,
    )?;
    let rows = eval::tos_table(&eval::summarize(&recs))?;
    match out {
        Some(p) => eval::write_tos(fs::File::create(p)?, &rows),
        None => eval::write_tos(io::stdout().lock(), &rows),
    }
}

pub fn gradcheck(graphs: usize, seed: u64) -> Result<()> {
    let outcomes = selfcheck::run(graphs, seed)?;
    let mut failed = 0;
    for o in &outcomes {
        let status = if o.passed() { "ok" } else { "FAIL" };
        println!(
            "{status:<4} {:<5} graph {} {:<26} max rel error {:.3e} over {} coordinates",
            o.variant.name(),
            o.graph,
            o.target.describe(),
            o.report.max_rel_error,
            o.report.checked
        );
        if !o.passed() {
            failed += 1;
        }
    }
    if failed > 0 {
        warn!(
            "{failed} of {} checks exceeded {:e}",
            outcomes.len(),
            selfcheck::TOLERANCE
        );
        bail!("gradient check failed");
    }
    Ok(())
}
