use alloc::vec::Vec;

use crate::graph::Graph;
use crate::linalg::{CsrMatrix, DenseMatrix};
use crate::math;
use crate::partition::LabelInducedGraph;

/// A symmetric propagation operator `P = D̂^{-1/2}(A′ + I)D̂^{-1/2}`.
pub trait Propagate {
    fn dim(&self) -> usize;

    /// `P · F`.
    fn propagate(&self, f: &DenseMatrix) -> DenseMatrix;
}

/// GCN operator over an explicit sparse graph.
#[derive(Clone, Debug, PartialEq)]
pub struct GcnOperator {
    matrix: CsrMatrix,
}

impl GcnOperator {
    pub fn new(g: &Graph) -> Self {
        let n = g.num_nodes();
        let scale: Vec<f64> = (0..n)
            .map(|i| 1.0 / math::sqrt(g.degree(i) as f64 + 1.0))
            .collect();
        let mut triplets = Vec::with_capacity(n + 2 * g.num_edges());
        for i in 0..n {
            triplets.push((i, i, scale[i] * scale[i]));
            for &j in g.neighbors(i) {
                triplets.push((i, j, scale[i] * scale[j]));
            }
        }
        let matrix =
            CsrMatrix::from_triplets(n, n, &triplets).expect("indices come from the graph");
        Self { matrix }
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }
}

impl Propagate for GcnOperator {
    fn dim(&self) -> usize {
        self.matrix.rows()
    }

    fn propagate(&self, f: &DenseMatrix) -> DenseMatrix {
        self.matrix.mul_dense(f)
    }
}

/// GCN operator of the label-induced graph `R Rᵀ`, applied block-wise
/// without materializing it: row `i` of `P F` is
/// `(Σ_{j ∈ block(i)} F_j + F_i) / (s + 1)` for a block of size `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockOperator {
    blocks: Vec<Vec<usize>>,
    n: usize,
}

impl BlockOperator {
    pub fn new(lg: &LabelInducedGraph) -> Self {
        Self {
            blocks: lg.blocks().to_vec(),
            n: lg.num_nodes(),
        }
    }
}

impl Propagate for BlockOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn propagate(&self, f: &DenseMatrix) -> DenseMatrix {
        let cols = f.cols();
        let mut out = DenseMatrix::zeros(f.rows(), cols);
        let mut sum = alloc::vec![0.0; cols];
        for block in &self.blocks {
            sum.iter_mut().for_each(|s| *s = 0.0);
            for &j in block {
                for (s, v) in sum.iter_mut().zip(f.row(j)) {
                    *s += v;
                }
            }
            let inv = 1.0 / (block.len() as f64 + 1.0);
            for &i in block {
                let src = f.row(i);
                for ((o, s), v) in out.row_mut(i).iter_mut().zip(&sum).zip(src) {
                    *o = (s + v) * inv;
                }
            }
        }
        out
    }
}
