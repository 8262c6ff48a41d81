//! Kuhn-Munkres assignment with row/column potentials, `O(n³)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::DenseMatrix;

/// Minimum-cost perfect assignment on a square cost matrix.
///
/// Returns `assignment[row] = col` and the total cost.
pub fn min_cost_assignment(cost: &DenseMatrix) -> (Vec<usize>, f64) {
    let n = cost.rows();
    assert_eq!(n, cost.cols(), "assignment needs a square matrix");
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    // 1-based arrays; column 0 is a virtual column used to start each row.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0usize;
        let mut min_v = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if reduced < min_v[j] {
                    min_v[j] = reduced;
                    way[j] = j0;
                }
                if min_v[j] < delta {
                    delta = min_v[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        // augment along the alternating path
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[owner[j] - 1] = j - 1;
    }
    let total = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[(i, j)])
        .sum();
    (assignment, total)
}

/// Maximum-weight perfect assignment on a square weight matrix.
pub fn max_weight_assignment(weight: &DenseMatrix) -> (Vec<usize>, f64) {
    let neg = weight.map(|w| -w);
    let (assignment, total) = min_cost_assignment(&neg);
    (assignment, -total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_known_instance() {
        let c = DenseMatrix::from_rows(&[[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]]);
        let (a, total) = min_cost_assignment(&c);
        assert_eq!(total, 5.0);
        assert_eq!(a, [1, 0, 2]);
        let (_, best) = max_weight_assignment(&c);
        assert_eq!(best, 11.0);
    }

    #[test]
    fn empty_and_single() {
        assert_eq!(min_cost_assignment(&DenseMatrix::zeros(0, 0)).0.len(), 0);
        let (a, t) = max_weight_assignment(&DenseMatrix::from_rows(&[[3.5]]));
        assert_eq!((a, t), (vec![0], 3.5));
    }
}
