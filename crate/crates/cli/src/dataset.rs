//! Dataset directories, manifests and the positional 80/10/10 split.
//!
//! A dataset directory holds `graph_%04d.edges`, the ground truth
//! `graph_%04d.labels` (when known) and a manifest. Labels synthesized by a
//! baseline live next to them as `graph_%04d.<method>.labels`.

use std::fmt;
use std::fs;
use std::io::Write;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use icd_core::model::LabeledGraph;
use icd_core::{Graph, Partition};

use crate::formats::{read_edge_list, read_labels};

pub const MANIFEST_NAME: &str = "manifest.txt";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SplitTag {
    Train,
    Valid,
    Test,
    Unassigned,
}

impl fmt::Display for SplitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitTag::Train => "train",
            SplitTag::Valid => "valid",
            SplitTag::Test => "test",
            SplitTag::Unassigned => "-",
        })
    }
}

impl FromStr for SplitTag {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "train" => SplitTag::Train,
            "valid" => SplitTag::Valid,
            "test" => SplitTag::Test,
            "-" => SplitTag::Unassigned,
            other => bail!("unknown split tag `{other}`"),
        })
    }
}

/// One manifest line: `path N |E| K split`, with `-` for an unknown K.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    /// Edge-list path relative to the manifest's directory.
    pub path: PathBuf,
    pub nodes: usize,
    pub edges: usize,
    pub communities: Option<usize>,
    pub split: SplitTag,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 5 {
                bail!("{}:{}: expected `path N E K split`", path.display(), i + 1);
            }
            let num = |s: &str| {
                s.parse::<usize>()
                    .with_context(|| format!("line {}: `{s}`", i + 1))
            };
            entries.push(ManifestEntry {
                path: PathBuf::from(f[0]),
                nodes: num(f[1])?,
                edges: num(f[2])?,
                communities: if f[3] == "-" { None } else { Some(num(f[3])?) },
                split: f[4].parse()?,
            });
        }
        Ok(Self { root, entries })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(fs::File::create(path)?);
        writeln!(out, "# path nodes edges communities split")?;
        for e in &self.entries {
            let k = e
                .communities
                .map_or_else(|| "-".to_string(), |k| k.to_string());
            writeln!(
                out,
                "{} {} {} {} {}",
                e.path.display(),
                e.nodes,
                e.edges,
                k,
                e.split
            )?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn edges_path(&self, e: &ManifestEntry) -> PathBuf {
        self.root.join(&e.path)
    }

    /// Ground-truth label file of an entry.
    pub fn truth_path(&self, e: &ManifestEntry) -> PathBuf {
        self.edges_path(e).with_extension("labels")
    }

    /// Label file written by baseline `method`.
    pub fn baseline_labels_path(&self, e: &ManifestEntry, method: &str) -> PathBuf {
        self.edges_path(e)
            .with_extension(format!("{method}.labels"))
    }

    /// Tags entries by position: first 80% train, next 10% valid, rest test.
    pub fn assign_split(&mut self) {
        let (train, valid, _) = split_ranges(self.entries.len());
        for (i, e) in self.entries.iter_mut().enumerate() {
            e.split = if train.contains(&i) {
                SplitTag::Train
            } else if valid.contains(&i) {
                SplitTag::Valid
            } else {
                SplitTag::Test
            };
        }
    }

    pub fn with_split(&self, tag: SplitTag) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == tag)
    }

    pub fn load_graph(&self, e: &ManifestEntry) -> Result<Graph> {
        let path = self.edges_path(e);
        read_edge_list(&path).with_context(|| format!("reading {}", path.display()))
    }

    /// Graph plus labels from `source` (`truth` or a baseline name).
    pub fn load_labeled(&self, e: &ManifestEntry, source: &str) -> Result<LabeledGraph> {
        let graph = self.load_graph(e)?;
        let path = if source == "truth" {
            self.truth_path(e)
        } else {
            self.baseline_labels_path(e, source)
        };
        let labels = read_labels(&path).with_context(|| format!("reading {}", path.display()))?;
        if labels.num_nodes() != graph.num_nodes() {
            bail!(
                "{} has {} labels for {} nodes",
                path.display(),
                labels.num_nodes(),
                graph.num_nodes()
            );
        }
        Ok(LabeledGraph { graph, labels })
    }

    /// Ground truth of a test graph, if the dataset has one.
    pub fn load_truth(&self, e: &ManifestEntry) -> Result<Option<Partition>> {
        let path = self.truth_path(e);
        if !path.exists() {
            return Ok(None);
        }
        Ok(Some(
            read_labels(&path).with_context(|| format!("reading {}", path.display()))?,
        ))
    }
}

/// Positional 80/10/10 ranges over `n` graphs.
pub fn split_ranges(n: usize) -> (Range<usize>, Range<usize>, Range<usize>) {
    let train = n * 8 / 10;
    let valid = n / 10;
    (0..train, train..train + valid, train + valid..n)
}

pub fn graph_file_name(i: usize) -> String {
    format!("graph_{i:04}.edges")
}
