//! Disjoint partitions, membership indicators and the label-induced graph.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{input_err, Error, Result};
use crate::graph::Graph;
use crate::linalg::DenseMatrix;
use crate::math;

/// Assignment of every node to exactly one of `K` nonempty communities.
///
/// Labels are compacted on construction: the distinct input ids, in
/// ascending order, become `0..K`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(input_err!("partition must cover at least one node"));
        }
        let mut ids: BTreeMap<usize, usize> = labels.iter().map(|&l| (l, 0)).collect();
        for (compact, v) in ids.values_mut().enumerate() {
            *v = compact;
        }
        let k = ids.len();
        let labels = labels.into_iter().map(|l| ids[&l]).collect();
        Ok(Self { labels, k })
    }

    /// Every node in its own community.
    pub fn singletons(n: usize) -> Result<Self> {
        Self::new((0..n).collect())
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn num_communities(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &l in &self.labels {
            s[l] += 1;
        }
        s
    }

    /// Node lists per community, each sorted ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            m[l].push(i);
        }
        m
    }
}

/// Which membership-indicator convention to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndicatorKind {
    /// One-hot `R`.
    BinaryR,
    /// Modularity-form `H`, identical to `R`.
    ModularityH,
    /// NCut-form `H` with `H_ir = √(d_i / vol(C_r))` on members.
    NcutH,
}

/// An `N × K` membership indicator.
#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorMatrix {
    pub kind: IndicatorKind,
    pub values: DenseMatrix,
}

/// Builds the indicator of `p`. [`IndicatorKind::NcutH`] needs the graph for
/// degrees and every community volume must be positive.
pub fn indicator(p: &Partition, kind: IndicatorKind, g: Option<&Graph>) -> Result<IndicatorMatrix> {
    let n = p.num_nodes();
    let mut values = DenseMatrix::zeros(n, p.num_communities());
    match kind {
        IndicatorKind::BinaryR | IndicatorKind::ModularityH => {
            for i in 0..n {
                values[(i, p.label(i))] = 1.0;
            }
        }
        IndicatorKind::NcutH => {
            let g = g.ok_or_else(|| input_err!("the NCut indicator needs the graph"))?;
            if g.num_nodes() != n {
                return Err(input_err!(
                    "partition covers {n} nodes but the graph has {}",
                    g.num_nodes()
                ));
            }
            let mut vol = vec![0usize; p.num_communities()];
            for i in 0..n {
                vol[p.label(i)] += g.degree(i);
            }
            if let Some(r) = vol.iter().position(|&v| v == 0) {
                return Err(Error::DegeneratePartition(alloc::format!(
                    "community {r} has zero volume"
                )));
            }
            for i in 0..n {
                let r = p.label(i);
                values[(i, r)] = math::sqrt(g.degree(i) as f64 / vol[r] as f64);
            }
        }
    }
    Ok(IndicatorMatrix { kind, values })
}

impl IndicatorMatrix {
    /// `H Hᵀ`, the `N × N` matrix the clustering-regularization term needs.
    pub fn outer(&self) -> DenseMatrix {
        self.values.matmul_t(&self.values)
    }
}

/// The graph with adjacency `A^(g) = R Rᵀ`: one fully connected block (with
/// unit self-entries) per community and nothing in between.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelInducedGraph {
    partition: Partition,
    members: Vec<Vec<usize>>,
}

/// Largest `N` for which [`LabelInducedGraph::to_dense`] materializes.
pub const DEFAULT_DENSE_CAP: usize = 4096;

pub fn label_induced_adjacency(p: &Partition) -> LabelInducedGraph {
    LabelInducedGraph {
        members: p.members(),
        partition: p.clone(),
    }
}

impl LabelInducedGraph {
    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn num_nodes(&self) -> usize {
        self.partition.num_nodes()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.members
    }

    /// Entry `(i, j)` of `R Rᵀ`.
    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if self.partition.label(i) == self.partition.label(j) {
            1.0
        } else {
            0.0
        }
    }

    /// Off-diagonal nonzeros as undirected edges `(i, j)`, `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.members.iter().flat_map(|block| {
            block
                .iter()
                .enumerate()
                .flat_map(move |(a, &i)| block[a + 1..].iter().map(move |&j| (i, j)))
        })
    }

    /// Dense `R Rᵀ`, refused above `cap` nodes.
    pub fn to_dense(&self, cap: usize) -> Result<DenseMatrix> {
        let n = self.num_nodes();
        if n > cap {
            return Err(input_err!(
                "{n} nodes exceeds the dense materialization cap {cap}"
            ));
        }
        Ok(DenseMatrix::from_fn(n, n, |i, j| self.entry(i, j)))
    }
}
