//! Undirected simple graphs and the structural matrices derived from them.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{input_err, Error, Result};
use crate::linalg::{CsrMatrix, DenseMatrix};
use crate::math;
use crate::partition::Partition;

/// Immutable undirected simple graph with CSR adjacency.
///
/// Every edge `{i, j}` is stored once in `edges` (as `i < j`) and twice in
/// the adjacency (row `i` and row `j`). Neighbor lists are sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph on `n` nodes. Pairs are symmetrized and deduplicated;
    /// self-loops are dropped.
    pub fn new(n: usize, edge_list: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(input_err!("graph must have at least one node"));
        }
        let mut edges = Vec::with_capacity(edge_list.len());
        for &(a, b) in edge_list {
            if a >= n || b >= n {
                return Err(input_err!(
                    "edge ({a}, {b}) has an endpoint outside [0, {n})"
                ));
            }
            if a != b {
                edges.push((a.min(b), a.max(b)));
            }
        }
        edges.sort_unstable();
        edges.dedup();

        let mut row_ptr = vec![0usize; n + 1];
        for &(a, b) in &edges {
            row_ptr[a + 1] += 1;
            row_ptr[b + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut fill = row_ptr.clone();
        let mut col_idx = vec![0usize; 2 * edges.len()];
        // Edges are sorted by (min, max), so pushing in this order keeps rows sorted.
        for &(a, b) in &edges {
            col_idx[fill[b]] = a;
            fill[b] += 1;
        }
        for &(a, b) in &edges {
            col_idx[fill[a]] = b;
            fill[a] += 1;
        }
        for i in 0..n {
            col_idx[row_ptr[i]..row_ptr[i + 1]].sort_unstable();
        }
        Ok(Self {
            n,
            row_ptr,
            col_idx,
            edges,
        })
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Undirected edges as `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.degree(i)).collect()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&j).is_ok()
    }

    pub fn has_isolated_nodes(&self) -> bool {
        (0..self.n).any(|i| self.degree(i) == 0)
    }

    /// 0/1 adjacency as a sparse matrix.
    pub fn adjacency(&self) -> CsrMatrix {
        CsrMatrix::from_raw(
            self.n,
            self.n,
            self.row_ptr.clone(),
            self.col_idx.clone(),
            vec![1.0; self.col_idx.len()],
        )
    }

    /// Sum of degrees over a node set.
    pub fn volume(&self, nodes: impl IntoIterator<Item = usize>) -> usize {
        nodes.into_iter().map(|i| self.degree(i)).sum()
    }
}

/// Which structural matrix a [`StructMatrix`] holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StructKind {
    /// `Q = A − d dᵀ / 2e`
    Modularity,
    /// `M = D^{-1/2} A D^{-1/2}`
    NormAdj,
    /// `L = I − M`
    NormLaplacian,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StructStorage {
    Dense(DenseMatrix),
    Sparse(CsrMatrix),
}

/// A square structural matrix of a graph: dense for `Q`, sparse for `M`, `L`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructMatrix {
    kind: StructKind,
    storage: StructStorage,
}

/// How [`norm_adj`] and [`norm_laplacian`] treat degree-0 nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum IsolatedNodes {
    /// Use `1/√0 := 0`; the node's row and column of `M` are zero.
    #[default]
    Zero,
    /// Refuse graphs with isolated nodes.
    Reject,
}

impl StructMatrix {
    pub fn kind(&self) -> StructKind {
        self.kind
    }

    pub fn storage(&self) -> &StructStorage {
        &self.storage
    }

    pub fn dim(&self) -> usize {
        match &self.storage {
            StructStorage::Dense(d) => d.rows(),
            StructStorage::Sparse(s) => s.rows(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            StructStorage::Dense(d) => d[(i, j)],
            StructStorage::Sparse(s) => s.get(i, j),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match &self.storage {
            StructStorage::Dense(d) => d.clone(),
            StructStorage::Sparse(s) => s.to_dense(),
        }
    }

    /// `out[:, dst] += scale · self[:, src]`.
    pub fn add_scaled_column(&self, src: usize, scale: f64, out: &mut DenseMatrix, dst: usize) {
        match &self.storage {
            StructStorage::Dense(d) => {
                for r in 0..d.rows() {
                    out[(r, dst)] += scale * d[(r, src)];
                }
            }
            // All structural matrices are symmetric, so column `src` is row `src`.
            StructStorage::Sparse(s) => {
                let (cols, vals) = s.row(src);
                for (&r, &v) in cols.iter().zip(vals) {
                    out[(r, dst)] += scale * v;
                }
            }
        }
    }

    /// `self · rhs`.
    pub fn mul_dense(&self, rhs: &DenseMatrix) -> DenseMatrix {
        match &self.storage {
            StructStorage::Dense(d) => d.matmul(rhs),
            StructStorage::Sparse(s) => s.mul_dense(rhs),
        }
    }
}

/// Dense modularity matrix `Q_ij = A_ij − d_i d_j / 2e`.
pub fn modularity_matrix(g: &Graph) -> Result<StructMatrix> {
    let e = g.num_edges();
    if e == 0 {
        return Err(Error::DegenerateGraph(
            "modularity matrix needs at least one edge".into(),
        ));
    }
    let two_e = 2.0 * e as f64;
    let d: Vec<f64> = g.degrees().into_iter().map(|d| d as f64).collect();
    let mut q = DenseMatrix::from_fn(g.num_nodes(), g.num_nodes(), |i, j| -d[i] * d[j] / two_e);
    for &(i, j) in g.edges() {
        q[(i, j)] += 1.0;
        q[(j, i)] += 1.0;
    }
    Ok(StructMatrix {
        kind: StructKind::Modularity,
        storage: StructStorage::Dense(q),
    })
}

fn inv_sqrt_degrees(g: &Graph, isolated: IsolatedNodes) -> Result<Vec<f64>> {
    if isolated == IsolatedNodes::Reject {
        if let Some(i) = (0..g.num_nodes()).find(|&i| g.degree(i) == 0) {
            return Err(Error::DegenerateGraph(alloc::format!(
                "node {i} is isolated"
            )));
        }
    }
    Ok((0..g.num_nodes())
        .map(|i| match g.degree(i) {
            0 => 0.0,
            d => 1.0 / math::sqrt(d as f64),
        })
        .collect())
}

/// Sparse normalized adjacency `M = D^{-1/2} A D^{-1/2}`.
pub fn norm_adj(g: &Graph, isolated: IsolatedNodes) -> Result<StructMatrix> {
    let s = inv_sqrt_degrees(g, isolated)?;
    let a = g.adjacency();
    let values = a.iter().map(|(i, j, _)| s[i] * s[j]).collect();
    Ok(StructMatrix {
        kind: StructKind::NormAdj,
        storage: StructStorage::Sparse(CsrMatrix::from_raw(
            g.num_nodes(),
            g.num_nodes(),
            g.row_ptr.clone(),
            g.col_idx.clone(),
            values,
        )),
    })
}

/// Sparse normalized Laplacian `L = I − M`.
pub fn norm_laplacian(g: &Graph, isolated: IsolatedNodes) -> Result<StructMatrix> {
    let s = inv_sqrt_degrees(g, isolated)?;
    let n = g.num_nodes();
    let mut triplets = Vec::with_capacity(n + 2 * g.num_edges());
    for i in 0..n {
        triplets.push((i, i, 1.0));
        for &j in g.neighbors(i) {
            triplets.push((i, j, -s[i] * s[j]));
        }
    }
    Ok(StructMatrix {
        kind: StructKind::NormLaplacian,
        storage: StructStorage::Sparse(CsrMatrix::from_triplets(n, n, &triplets)?),
    })
}

fn check_cover(g: &Graph, p: &Partition) -> Result<()> {
    if p.num_nodes() != g.num_nodes() {
        return Err(input_err!(
            "partition covers {} nodes but the graph has {}",
            p.num_nodes(),
            g.num_nodes()
        ));
    }
    Ok(())
}

/// Per-community internal edge count (each edge once) and volume.
fn internal_and_volume(g: &Graph, p: &Partition) -> (Vec<usize>, Vec<usize>) {
    let mut internal = vec![0usize; p.num_communities()];
    let mut volume = vec![0usize; p.num_communities()];
    for &(i, j) in g.edges() {
        if p.label(i) == p.label(j) {
            internal[p.label(i)] += 1;
        }
    }
    for i in 0..g.num_nodes() {
        volume[p.label(i)] += g.degree(i);
    }
    (internal, volume)
}

/// Modularity `(1/2e) Σ_r Σ_{i,j∈C_r} [A_ij − d_i d_j / 2e]`.
///
/// The inner double sum splits into `Σ_{i,j∈C_r} A_ij = 2·internal_r` and
/// `Σ_{i,j∈C_r} d_i d_j = vol_r²`.
pub fn modularity_score(g: &Graph, p: &Partition) -> Result<f64> {
    check_cover(g, p)?;
    let e = g.num_edges();
    if e == 0 {
        return Err(Error::DegenerateGraph(
            "modularity needs at least one edge".into(),
        ));
    }
    let two_e = 2.0 * e as f64;
    let (internal, volume) = internal_and_volume(g, p);
    let sum: f64 = internal
        .iter()
        .zip(&volume)
        .map(|(&m, &v)| 2.0 * m as f64 - (v as f64) * (v as f64) / two_e)
        .sum();
    Ok(sum / two_e)
}

/// Normalized cut `(1/2) Σ_r cut(C_r, C̄_r) / vol(C_r)`.
pub fn ncut_score(g: &Graph, p: &Partition) -> Result<f64> {
    check_cover(g, p)?;
    let (internal, volume) = internal_and_volume(g, p);
    let mut sum = 0.0;
    for (r, (&m, &v)) in internal.iter().zip(&volume).enumerate() {
        if v == 0 {
            return Err(Error::DegeneratePartition(alloc::format!(
                "community {r} has zero volume"
            )));
        }
        // vol = 2·internal + cut
        let cut = v - 2 * m;
        sum += cut as f64 / v as f64;
    }
    Ok(0.5 * sum)
}

/// Connected components of an undirected edge set on `n` nodes, labeled in
/// order of each component's smallest node.
pub fn connected_components(
    n: usize,
    edges: impl IntoIterator<Item = (usize, usize)>,
) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    (0..n)
        .map(|i| {
            let r = find(&mut parent, i);
            if label[r] == usize::MAX {
                label[r] = next;
                next += 1;
            }
            label[r]
        })
        .collect()
}
