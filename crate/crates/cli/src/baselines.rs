//! In-house reference methods, used as label sources and comparison points.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use icd_core::cluster::kmeans;
use icd_core::graph::{norm_laplacian, IsolatedNodes};
use icd_core::{DenseMatrix, Error, Graph, Partition, Result};
use nalgebra::{DMatrix, SymmetricEigen};

/// Largest `N` the dense eigensolver accepts.
pub const SPECTRAL_DENSE_CAP: usize = 4096;

/// K-Means on the eigenvectors of the `K` smallest eigenvalues of the
/// normalized Laplacian.
pub fn spectral(g: &Graph, k: usize, restarts: usize, seed: u64) -> Result<Partition> {
    let n = g.num_nodes();
    if k == 0 || k > n {
        return Err(Error::Input(format!("K = {k} must lie in [1, N = {n}]")));
    }
    if n > SPECTRAL_DENSE_CAP {
        return Err(Error::Input(format!(
            "{n} nodes exceeds the dense eigensolver cap {SPECTRAL_DENSE_CAP}"
        )));
    }
    if k == 1 {
        return Partition::new(vec![0; n]);
    }
    let l = norm_laplacian(g, IsolatedNodes::Zero)?.to_dense();
    let eig = SymmetricEigen::new(DMatrix::from_row_slice(n, n, l.as_slice()));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .total_cmp(&eig.eigenvalues[b])
            .then(a.cmp(&b))
    });
    let embedding = DenseMatrix::from_fn(n, k, |i, c| eig.eigenvectors[(i, order[c])]);
    Ok(kmeans(&embedding, k, restarts, seed)?.labels)
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Candidate {
    gain: f64,
    a: usize,
    b: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        // largest gain first, then the smallest pair
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.a.cmp(&self.a))
            .then_with(|| other.b.cmp(&self.b))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Agglomerative modularity maximization: repeatedly merges the pair of
/// communities with the largest modularity gain until `K` remain. Gains may
/// go negative to reach `K`; when no connected pair is left, the two
/// communities of smallest volume are merged.
pub fn greedy_modularity(g: &Graph, k: usize) -> Result<Partition> {
    let n = g.num_nodes();
    if k == 0 || k > n {
        return Err(Error::Input(format!("K = {k} must lie in [1, N = {n}]")));
    }
    let m2 = 2.0 * g.num_edges() as f64;
    if m2 == 0.0 {
        return Err(Error::DegenerateGraph(
            "greedy modularity needs at least one edge".into(),
        ));
    }
    // e[c][d]: fraction of edge ends between c and d (each direction), a[c]: volume / 2e
    let mut links: Vec<HashMap<usize, f64>> = vec![HashMap::new(); n];
    for &(i, j) in g.edges() {
        *links[i].entry(j).or_insert(0.0) += 1.0 / m2;
        *links[j].entry(i).or_insert(0.0) += 1.0 / m2;
    }
    let mut a: Vec<f64> = (0..n).map(|i| g.degree(i) as f64 / m2).collect();
    let mut alive = vec![true; n];
    let mut parent: Vec<usize> = (0..n).collect();
    let gain = |e: f64, x: f64, y: f64| 2.0 * (e - x * y);

    let mut heap = BinaryHeap::new();
    for &(i, j) in g.edges() {
        heap.push(Candidate {
            gain: gain(links[i][&j], a[i], a[j]),
            a: i,
            b: j,
        });
    }
    let mut remaining = n;
    while remaining > k {
        let pick = loop {
            let Some(c) = heap.pop() else { break None };
            if !alive[c.a] || !alive[c.b] {
                continue;
            }
            let Some(&e) = links[c.a].get(&c.b) else {
                continue;
            };
            if gain(e, a[c.a], a[c.b]).to_bits() == c.gain.to_bits() {
                break Some((c.a, c.b));
            }
        };
        let (keep, gone) = match pick {
            Some((x, y)) => {
                if links[x].len() >= links[y].len() {
                    (x, y)
                } else {
                    (y, x)
                }
            }
            None => {
                let mut live: Vec<usize> = (0..n).filter(|&c| alive[c]).collect();
                live.sort_by(|&x, &y| a[x].total_cmp(&a[y]).then(x.cmp(&y)));
                (live[0], live[1])
            }
        };
        let moved = std::mem::take(&mut links[gone]);
        for (c, e) in moved {
            if c == keep {
                continue;
            }
            links[c].remove(&gone);
            *links[keep].entry(c).or_insert(0.0) += e;
            *links[c].entry(keep).or_insert(0.0) += e;
        }
        links[keep].remove(&gone);
        a[keep] += a[gone];
        alive[gone] = false;
        parent[gone] = keep;
        remaining -= 1;
        for (&c, &e) in &links[keep] {
            heap.push(Candidate {
                gain: gain(e, a[keep], a[c]),
                a: keep.min(c),
                b: keep.max(c),
            });
        }
    }
    let root = |mut i: usize| {
        while parent[i] != i {
            i = parent[i];
        }
        i
    };
    Partition::new((0..n).map(root).collect())
}
