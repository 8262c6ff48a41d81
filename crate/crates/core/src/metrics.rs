//! Supervised partition-quality metrics: NMI and best-mapping accuracy.

use alloc::collections::BTreeMap;

use crate::error::{input_err, Result};
use crate::hungarian::max_weight_assignment;
use crate::linalg::DenseMatrix;
use crate::math;
use crate::partition::Partition;

fn check_len(truth: &Partition, result: &Partition) -> Result<usize> {
    if truth.num_nodes() != result.num_nodes() {
        return Err(input_err!(
            "partitions cover {} and {} nodes",
            truth.num_nodes(),
            result.num_nodes()
        ));
    }
    Ok(truth.num_nodes())
}

/// Normalized mutual information `2 I(H; C) / (H(H) + H(C))`, natural log.
///
/// Empty contingency cells contribute nothing. Two single-community
/// partitions score 1; a single community against a multi-class partition
/// scores 0.
pub fn nmi(truth: &Partition, result: &Partition) -> Result<f64> {
    let n = check_len(truth, result)?;
    let nf = n as f64;
    let (kt, kr) = (truth.num_communities(), result.num_communities());
    if kt == 1 && kr == 1 {
        return Ok(1.0);
    }
    if kt == 1 || kr == 1 {
        return Ok(0.0);
    }
    let mut joint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for i in 0..n {
        *joint.entry((truth.label(i), result.label(i))).or_insert(0) += 1;
    }
    let (st, sr) = (truth.sizes(), result.sizes());
    let mutual: f64 = joint
        .iter()
        .map(|(&(r, s), &nrs)| {
            let nrs = nrs as f64;
            nrs / nf * math::ln(nf * nrs / (st[r] as f64 * sr[s] as f64))
        })
        .sum();
    let entropy = |sizes: &[usize]| -> f64 {
        sizes
            .iter()
            .map(|&c| {
                let q = c as f64 / nf;
                -q * math::ln(q)
            })
            .sum()
    };
    let denom = entropy(&st) + entropy(&sr);
    Ok((2.0 * mutual / denom).clamp(0.0, 1.0))
}

/// Fraction of nodes whose result community maps onto their true community
/// under the best one-to-one mapping (Kuhn-Munkres on the zero-padded
/// confusion matrix).
pub fn accuracy(truth: &Partition, result: &Partition) -> Result<f64> {
    let n = check_len(truth, result)?;
    let size = truth.num_communities().max(result.num_communities());
    let mut confusion = DenseMatrix::zeros(size, size);
    for i in 0..n {
        confusion[(result.label(i), truth.label(i))] += 1.0;
    }
    let (_, matched) = max_weight_assignment(&confusion);
    Ok(matched / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    fn p(l: &[usize]) -> Partition {
        Partition::new(l.to_vec()).unwrap()
    }

    /// Contingency-table evaluation with explicit loops over every (r, s) cell.
    fn nmi_oracle(a: &[usize], b: &[usize]) -> f64 {
        let n = a.len() as f64;
        let ka = a.iter().max().unwrap() + 1;
        let kb = b.iter().max().unwrap() + 1;
        let mut table = vec![vec![0.0f64; kb]; ka];
        for (&x, &y) in a.iter().zip(b) {
            table[x][y] += 1.0;
        }
        let na: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
        let nb: Vec<f64> = (0..kb).map(|s| table.iter().map(|r| r[s]).sum()).collect();
        let mut num = 0.0;
        for r in 0..ka {
            for s in 0..kb {
                if table[r][s] > 0.0 {
                    num += table[r][s] / n * libm::log(n * table[r][s] / (na[r] * nb[s]));
                }
            }
        }
        let mut den = 0.0;
        for &c in na.iter().chain(&nb) {
            if c > 0.0 {
                den += c / n * libm::log(c / n);
            }
        }
        (-2.0 * num / den).abs()
    }

    #[test]
    fn nmi_unit_values() {
        let t = p(&[0, 0, 1, 1, 2]);
        assert!((nmi(&t, &t).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(nmi(&t, &p(&[0; 5])).unwrap(), 0.0);
        assert_eq!(nmi(&p(&[0; 5]), &t).unwrap(), 0.0);
        assert!(nmi(&t, &p(&[0, 1])).is_err());
    }

    #[test]
    fn nmi_matches_loop_oracle() {
        let got = nmi(&p(&[0, 0, 1, 1]), &p(&[0, 1, 1, 1])).unwrap();
        let expect = nmi_oracle(&[0, 0, 1, 1], &[0, 1, 1, 1]);
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
        // frozen reference value (arithmetic-mean NMI)
        assert!((got - 0.343_711_018_485_450_8).abs() < 1e-12, "{got}");
    }

    #[test]
    fn accuracy_examples() {
        let t = p(&[0, 0, 1, 1]);
        assert_eq!(accuracy(&t, &p(&[1, 1, 0, 0])).unwrap(), 1.0);
        assert_eq!(accuracy(&t, &p(&[0, 0, 0, 1])).unwrap(), 0.75);
        assert_eq!(accuracy(&p(&[0, 1, 2, 2]), &p(&[5, 5, 5, 5])).unwrap(), 0.5);
        assert!(accuracy(&t, &p(&[0])).is_err());
    }
}
