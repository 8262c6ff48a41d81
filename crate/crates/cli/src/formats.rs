//! Plain-text graph, label and manifest formats.
//!
//! Edge list: one edge per line as two whitespace-separated zero-based ids.
//! Lines starting with `#` are comments, except that a `# nodes <N>` line
//! fixes the node count (otherwise it is one more than the largest id).
//!
//! Labels: one integer community id per line, line `i` for node `i`.

use std::fs;
use std::io::Write;
use std::path::Path;

use icd_core::{Graph, Partition};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Core(#[from] icd_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn parse_err(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn parse_edge_list(text: &str) -> Result<Graph, FormatError> {
    let mut declared = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let mut words = comment.split_whitespace();
            if words.next() == Some("nodes") {
                let n = words
                    .next()
                    .and_then(|w| w.parse::<usize>().ok())
                    .ok_or_else(|| parse_err(lineno, "malformed `# nodes` header"))?;
                declared = Some(n);
            }
            continue;
        }
        let mut words = line.split_whitespace();
        let mut id = || -> Result<usize, FormatError> {
            words
                .next()
                .ok_or_else(|| parse_err(lineno, "expected two node ids"))?
                .parse()
                .map_err(|e| parse_err(lineno, format!("bad node id: {e}")))
        };
        let (a, b) = (id()?, id()?);
        if words.next().is_some() {
            return Err(parse_err(lineno, "trailing fields after the two node ids"));
        }
        edges.push((a, b));
    }
    let n = match declared {
        Some(n) => n,
        None => edges.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0),
    };
    Ok(Graph::new(n, &edges)?)
}

pub fn read_edge_list(path: &Path) -> Result<Graph, FormatError> {
    parse_edge_list(&fs::read_to_string(path)?)
}

/// Writes the header and every edge once as `i j`, `i < j`.
pub fn write_edge_list(path: &Path, g: &Graph) -> Result<(), FormatError> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "# nodes {}", g.num_nodes())?;
    for &(a, b) in g.edges() {
        writeln!(out, "{a} {b}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn parse_labels(text: &str) -> Result<Partition, FormatError> {
    let mut labels = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        labels.push(
            line.parse::<usize>()
                .map_err(|e| parse_err(idx + 1, format!("bad community id: {e}")))?,
        );
    }
    Ok(Partition::new(labels)?)
}

pub fn read_labels(path: &Path) -> Result<Partition, FormatError> {
    parse_labels(&fs::read_to_string(path)?)
}

pub fn write_labels(path: &Path, p: &Partition) -> Result<(), FormatError> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for &l in p.labels() {
        writeln!(out, "{l}")?;
    }
    out.flush()?;
    Ok(())
}
