//! Heavy-edge-matching (HEM) coarsening and fixed-width feature extraction.
//!
//! Graphs in a collection have different node counts, but the encoder needs a
//! fixed input width `L`. Each graph is coarsened to exactly `L` supernodes;
//! the structural feature matrix `X` (modularity or normalized adjacency) is
//! then projected onto the coarsening matrix, `Z = X C`, giving an `N × L`
//! block regardless of `N`.
//!
//! Matching runs level by level. At every level the current supergraph's
//! edges are sorted by weight, heaviest first (ties broken by the smaller
//! endpoint id, then the larger), and consumed as a queue: an edge merges its
//! endpoints only when neither has been merged at this level yet. Coarsening
//! stops the moment the supernode count reaches `L`, even in the middle of a
//! level. Edge weights start as `X_ij` and are summed when a merge creates
//! parallel edges.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{input_err, Result};
use crate::graph::{Graph, StructKind, StructMatrix};
use crate::linalg::{CsrMatrix, DenseMatrix};
use crate::math;

/// Supergraph edge with `a < b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedEdge {
    pub a: usize,
    pub b: usize,
    pub w: f64,
}

impl WeightedEdge {
    pub fn new(a: usize, b: usize, w: f64) -> Self {
        Self {
            a: a.min(b),
            b: a.max(b),
            w,
        }
    }
}

/// Membership of nodes in supernodes plus the coarsening matrix
/// `C_ij = |v_j|^{-1/2}` for `i ∈ v_j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoarseningMap {
    supernodes: Vec<Vec<usize>>,
    assignment: Vec<usize>,
    levels: usize,
}

impl CoarseningMap {
    fn from_groups(n: usize, mut supernodes: Vec<Vec<usize>>, levels: usize) -> Self {
        for s in &mut supernodes {
            s.sort_unstable();
        }
        supernodes.sort_unstable_by_key(|s| s[0]);
        let mut assignment = vec![0; n];
        for (j, s) in supernodes.iter().enumerate() {
            for &i in s {
                assignment[i] = j;
            }
        }
        Self {
            supernodes,
            assignment,
            levels,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_groups(n, (0..n).map(|i| vec![i]).collect(), 0)
    }

    pub fn num_supernodes(&self) -> usize {
        self.supernodes.len()
    }

    /// Supernode member lists, ordered by smallest member.
    pub fn supernodes(&self) -> &[Vec<usize>] {
        &self.supernodes
    }

    /// Supernode index of every node.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Number of coarsening levels that performed merges.
    pub fn levels(&self) -> usize {
        self.levels
    }

    /// `C_ij` for node `i` and its own supernode `j`.
    pub fn coefficient(&self, i: usize) -> f64 {
        1.0 / math::sqrt(self.supernodes[self.assignment[i]].len() as f64)
    }

    /// Sparse `N × L` coarsening matrix.
    pub fn coarsening_matrix(&self) -> CsrMatrix {
        let n = self.assignment.len();
        let row_ptr = (0..=n).collect();
        let values = (0..n).map(|i| self.coefficient(i)).collect();
        CsrMatrix::from_raw(
            n,
            self.supernodes.len(),
            row_ptr,
            self.assignment.clone(),
            values,
        )
    }
}

fn heaviest_first(x: &WeightedEdge, y: &WeightedEdge) -> Ordering {
    y.w.total_cmp(&x.w).then(x.a.cmp(&y.a)).then(x.b.cmp(&y.b))
}

/// Maps edge endpoints through `mapping` (old supernode → new supernode),
/// drops edges that fall inside one supernode and sums parallel edges.
/// The result is sorted by `(a, b)`.
pub fn supergraph_weights(edges: &[WeightedEdge], mapping: &[usize]) -> Vec<WeightedEdge> {
    let mut out: Vec<WeightedEdge> = edges
        .iter()
        .filter_map(|e| {
            let (a, b) = (mapping[e.a], mapping[e.b]);
            (a != b).then(|| WeightedEdge::new(a, b, e.w))
        })
        .collect();
    out.sort_unstable_by(|x, y| x.a.cmp(&y.a).then(x.b.cmp(&y.b)));
    out.dedup_by(|next, kept| {
        if next.a == kept.a && next.b == kept.b {
            kept.w += next.w;
            true
        } else {
            false
        }
    });
    out
}

fn check_features(g: &Graph, x: &StructMatrix) -> Result<()> {
    if x.kind() == StructKind::NormLaplacian {
        return Err(input_err!(
            "features must be the modularity or normalized adjacency matrix"
        ));
    }
    if x.dim() != g.num_nodes() {
        return Err(input_err!(
            "feature matrix is {0}x{0} but the graph has {1} nodes",
            x.dim(),
            g.num_nodes()
        ));
    }
    Ok(())
}

/// Coarsens `g` to `L` supernodes by heavy-edge matching on weights `X_ij`.
///
/// With `N ≤ L` every node is its own supernode. If a level has no edges
/// left while more than `L` supernodes remain (disconnected input), the
/// smallest supernodes are paired up directly.
pub fn hem_coarsen(g: &Graph, x: &StructMatrix, l: usize) -> Result<CoarseningMap> {
    if l < 1 {
        return Err(input_err!("target supernode count must be at least 1"));
    }
    check_features(g, x)?;
    let n = g.num_nodes();
    if n <= l {
        return Ok(CoarseningMap::identity(n));
    }

    let mut groups: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut edges: Vec<WeightedEdge> = g
        .edges()
        .iter()
        .map(|&(i, j)| WeightedEdge::new(i, j, x.get(i, j)))
        .collect();
    let mut remaining = n;
    let mut levels = 0;

    while remaining > l {
        let cur = groups.len();
        let mut matched = vec![false; cur];
        let mut pairs: Vec<(usize, usize)> = Vec::new();

        edges.sort_unstable_by(heaviest_first);
        for e in &edges {
            if remaining == l {
                break;
            }
            if !matched[e.a] && !matched[e.b] {
                matched[e.a] = true;
                matched[e.b] = true;
                pairs.push((e.a, e.b));
                remaining -= 1;
            }
        }
        if pairs.is_empty() {
            let mut order: Vec<usize> = (0..cur).collect();
            order.sort_unstable_by_key(|&s| (groups[s].len(), groups[s][0]));
            for chunk in order.chunks_exact(2) {
                if remaining == l {
                    break;
                }
                matched[chunk[0]] = true;
                matched[chunk[1]] = true;
                pairs.push((chunk[0], chunk[1]));
                remaining -= 1;
            }
        }

        // any member identifies an old supernode after the groups move
        let representative: Vec<usize> = groups.iter().map(|s| s[0]).collect();
        let mut next: Vec<Vec<usize>> = Vec::with_capacity(remaining);
        for &(a, b) in &pairs {
            let mut merged = core::mem::take(&mut groups[a]);
            merged.append(&mut groups[b]);
            next.push(merged);
        }
        for (s, members) in groups.iter_mut().enumerate() {
            if !matched[s] {
                next.push(core::mem::take(members));
            }
        }
        for s in &mut next {
            s.sort_unstable();
        }
        next.sort_unstable_by_key(|s| s[0]);

        let mut node_to_new = vec![0usize; n];
        for (j, s) in next.iter().enumerate() {
            for &i in s {
                node_to_new[i] = j;
            }
        }
        let mapping: Vec<usize> = representative.iter().map(|&i| node_to_new[i]).collect();
        edges = supergraph_weights(&edges, &mapping);
        groups = next;
        levels += 1;
    }
    Ok(CoarseningMap::from_groups(n, groups, levels))
}

/// Which structural matrix produced a [`FeatureMatrix`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureSource {
    Modularity,
    NormAdj,
    /// All-ones input, the usual attribute-free GNN baseline.
    Constant,
}

/// Dense `N × L` encoder input.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub values: DenseMatrix,
    pub source: FeatureSource,
}

impl FeatureMatrix {
    pub fn width(&self) -> usize {
        self.values.cols()
    }
}

/// `Z = X C` for `N > L`; `Z = [X, 0]` otherwise.
pub fn extract_features(g: &Graph, x: &StructMatrix, l: usize) -> Result<FeatureMatrix> {
    let map = hem_coarsen(g, x, l)?;
    Ok(project_features(x, &map, l))
}

/// Projects `X` through an existing coarsening map (padding with zero
/// columns up to width `l`).
pub fn project_features(x: &StructMatrix, map: &CoarseningMap, l: usize) -> FeatureMatrix {
    let n = x.dim();
    let mut z = DenseMatrix::zeros(n, l);
    for (j, members) in map.supernodes().iter().enumerate() {
        let coef = 1.0 / math::sqrt(members.len() as f64);
        for &i in members {
            x.add_scaled_column(i, coef, &mut z, j);
        }
    }
    let source = match x.kind() {
        StructKind::Modularity => FeatureSource::Modularity,
        _ => FeatureSource::NormAdj,
    };
    FeatureMatrix { values: z, source }
}

/// `1_{N×L}`.
pub fn constant_features(n: usize, l: usize) -> FeatureMatrix {
    FeatureMatrix {
        values: DenseMatrix::filled(n, l, 1.0),
        source: FeatureSource::Constant,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{modularity_matrix, norm_adj, IsolatedNodes};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Two 4-cliques {0..3} and {4..7} joined by the bridge (3, 4).
    fn running_example() -> Graph {
        let mut e = Vec::new();
        for base in [0, 4] {
            for i in 0..4 {
                for j in i + 1..4 {
                    e.push((base + i, base + j));
                }
            }
        }
        e.push((3, 4));
        Graph::new(8, &e).unwrap()
    }

    fn random_graph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Graph {
        let mut e = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < p {
                    e.push((i, j));
                }
            }
        }
        Graph::new(n, &e).unwrap()
    }

    #[test]
    fn running_example_two_levels() {
        let g = running_example();
        let q = modularity_matrix(&g).unwrap();
        let map = hem_coarsen(&g, &q, 2).unwrap();
        assert_eq!(map.supernodes(), [vec![0, 1, 2, 3], vec![4, 5, 6, 7]]);
        assert_eq!(map.levels(), 2);
        assert_eq!(map.coefficient(0), 0.5);

        let m = norm_adj(&g, IsolatedNodes::Reject).unwrap();
        let map = hem_coarsen(&g, &m, 2).unwrap();
        assert_eq!(map.supernodes(), [vec![0, 1, 2, 3], vec![4, 5, 6, 7]]);
    }

    #[test]
    fn small_graph_is_identity_and_padded() {
        let g = Graph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let q = modularity_matrix(&g).unwrap();
        let map = hem_coarsen(&g, &q, 5).unwrap();
        assert_eq!(map, CoarseningMap::identity(3));
        let z = extract_features(&g, &q, 5).unwrap();
        let x = q.to_dense();
        for i in 0..3 {
            assert_eq!(&z.values.row(i)[..3], x.row(i));
            assert_eq!(&z.values.row(i)[3..], [0.0, 0.0]);
        }
        assert!(hem_coarsen(&g, &q, 0).is_err());
    }

    #[test]
    fn identity_features_pad_with_zeros() {
        // M of a perfect matching is a permutation; its rows reproduce I up to order,
        // so check padding directly against X.
        let g = Graph::new(2, &[(0, 1)]).unwrap();
        let m = norm_adj(&g, IsolatedNodes::Reject).unwrap();
        let z = extract_features(&g, &m, 4).unwrap();
        assert_eq!(
            z.values,
            DenseMatrix::from_rows(&[[0.0, 1.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0]])
        );
        assert_eq!(z.source, FeatureSource::NormAdj);
    }

    #[test]
    fn laplacian_is_not_a_feature_source() {
        let g = running_example();
        let l = crate::graph::norm_laplacian(&g, IsolatedNodes::Reject).unwrap();
        assert!(hem_coarsen(&g, &l, 2).is_err());
    }

    #[test]
    fn supergraph_weight_examples() {
        // a=0, b=1, c=2; merge (a, b) -> 0, c -> 1
        let edges = [
            WeightedEdge::new(0, 2, 2.0),
            WeightedEdge::new(1, 2, 3.0),
            WeightedEdge::new(0, 1, 7.0),
        ];
        let out = supergraph_weights(&edges, &[0, 0, 1]);
        assert_eq!(out, [WeightedEdge::new(0, 1, 5.0)]);
        // two isolated nodes merged: nothing to emit
        assert!(supergraph_weights(&[], &[0, 0]).is_empty());
    }

    #[test]
    fn supergraph_weights_match_quotient_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = 12;
            let g = random_graph(n, 0.4, &mut rng);
            let edges: Vec<_> = g
                .edges()
                .iter()
                .map(|&(i, j)| WeightedEdge::new(i, j, rng.random_range(-1.0..1.0)))
                .collect();
            let mapping: Vec<usize> = (0..n).map(|_| rng.random_range(0..5)).collect();
            let out = supergraph_weights(&edges, &mapping);
            // quotient oracle: dense accumulation from scratch
            let mut dense = [[0.0f64; 5]; 5];
            let mut present = [[false; 5]; 5];
            for e in &edges {
                let (a, b) = (mapping[e.a], mapping[e.b]);
                if a != b {
                    dense[a.min(b)][a.max(b)] += e.w;
                    present[a.min(b)][a.max(b)] = true;
                }
            }
            let expect: usize = present.iter().flatten().filter(|&&p| p).count();
            assert_eq!(out.len(), expect);
            for e in out {
                assert!((e.w - dense[e.a][e.b]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn features_equal_dense_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_graph(12, 0.35, &mut rng);
        let q = modularity_matrix(&g).unwrap();
        let map = hem_coarsen(&g, &q, 4).unwrap();
        assert_eq!(map.num_supernodes(), 4);
        let z = extract_features(&g, &q, 4).unwrap();
        let c = map.coarsening_matrix().to_dense();
        let oracle = q.to_dense().matmul(&c);
        assert!(z.values.max_abs_diff(&oracle) < 1e-12);
        let ctc = c.t_matmul(&c);
        assert!(ctc.max_abs_diff(&DenseMatrix::identity(4)) < 1e-15);
    }

    #[test]
    fn disconnected_input_still_reaches_target() {
        let g = Graph::new(10, &[(0, 1), (2, 3)]).unwrap();
        let m = norm_adj(&g, IsolatedNodes::Zero).unwrap();
        let map = hem_coarsen(&g, &m, 3).unwrap();
        assert_eq!(map.num_supernodes(), 3);
        let mut all: Vec<usize> = map.supernodes().iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = random_graph(40, 0.2, &mut rng);
        let q = modularity_matrix(&g).unwrap();
        assert_eq!(
            hem_coarsen(&g, &q, 7).unwrap(),
            hem_coarsen(&g, &q, 7).unwrap()
        );
    }
}
