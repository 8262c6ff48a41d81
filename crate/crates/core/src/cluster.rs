//! Multi-restart K-Means with k-means++ seeding.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{input_err, Result};
use crate::linalg::DenseMatrix;
use crate::partition::Partition;

pub const DEFAULT_RESTARTS: usize = 10;
pub const MAX_ITERATIONS: usize = 300;

#[derive(Clone, Debug)]
pub struct KMeansResult {
    pub labels: Partition,
    pub centroids: DenseMatrix,
    pub inertia: f64,
    pub restarts_run: usize,
}

/// One Lloyd run from one k-means++ initialization.
#[derive(Clone, Debug)]
pub struct LloydRun {
    pub assignment: Vec<usize>,
    pub centroids: DenseMatrix,
    pub inertia: f64,
    /// Inertia after every iteration.
    pub history: Vec<f64>,
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &DenseMatrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.rows() {
        let d = sq_dist(point, centroids.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init(points: &DenseMatrix, k: usize, rng: &mut impl Rng) -> DenseMatrix {
    let n = points.rows();
    let mut centroids = DenseMatrix::zeros(k, points.cols());
    let first = rng.random_range(0..n);
    centroids.row_mut(0).copy_from_slice(points.row(first));
    let mut d2: Vec<f64> = (0..n)
        .map(|i| sq_dist(points.row(i), centroids.row(0)))
        .collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).copy_from_slice(points.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.row(i), centroids.row(c)));
        }
    }
    centroids
}

fn update_centroids(points: &DenseMatrix, assignment: &[usize], k: usize) -> DenseMatrix {
    let mut sums = DenseMatrix::zeros(k, points.cols());
    let mut counts = vec![0usize; k];
    for (i, &c) in assignment.iter().enumerate() {
        counts[c] += 1;
        for (s, &x) in sums.row_mut(c).iter_mut().zip(points.row(i)) {
            *s += x;
        }
    }
    for (c, &count) in counts.iter().enumerate() {
        let inv = 1.0 / count as f64;
        sums.row_mut(c).iter_mut().for_each(|s| *s *= inv);
    }
    sums
}

fn inertia_of(points: &DenseMatrix, assignment: &[usize], centroids: &DenseMatrix) -> f64 {
    assignment
        .iter()
        .enumerate()
        .map(|(i, &c)| sq_dist(points.row(i), centroids.row(c)))
        .sum()
}

/// Moves points into empty clusters: each empty cluster takes the point
/// farthest from its current centroid among clusters with more than one
/// member.
fn repair_empty(points: &DenseMatrix, assignment: &mut [usize], centroids: &DenseMatrix, k: usize) {
    let mut counts = vec![0usize; k];
    for &c in assignment.iter() {
        counts[c] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let mut far = None;
        let mut far_d = -1.0;
        for (i, &c) in assignment.iter().enumerate() {
            if counts[c] > 1 {
                let d = sq_dist(points.row(i), centroids.row(c));
                if d > far_d {
                    far_d = d;
                    far = Some(i);
                }
            }
        }
        // k ≤ n guarantees a donor cluster with at least two members
        let i = far.expect("no donor cluster");
        counts[assignment[i]] -= 1;
        assignment[i] = empty;
        counts[empty] = 1;
    }
}

/// Lloyd iterations from a k-means++ start until the assignment stops
/// changing or [`MAX_ITERATIONS`] is reached.
pub fn lloyd(points: &DenseMatrix, k: usize, rng: &mut impl Rng) -> Result<LloydRun> {
    let n = points.rows();
    if k == 0 || k > n {
        return Err(input_err!("K = {k} must lie in [1, {n}]"));
    }
    let mut centroids = plus_plus_init(points, k, rng);
    let mut assignment: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    for _ in 0..MAX_ITERATIONS {
        let mut next: Vec<usize> = (0..n)
            .map(|i| nearest(points.row(i), &centroids).0)
            .collect();
        repair_empty(points, &mut next, &centroids, k);
        let converged = next == assignment;
        assignment = next;
        centroids = update_centroids(points, &assignment, k);
        history.push(inertia_of(points, &assignment, &centroids));
        if converged {
            break;
        }
    }
    let inertia = *history.last().unwrap();
    Ok(LloydRun {
        assignment,
        centroids,
        inertia,
        history,
    })
}

/// Best-inertia result over `restarts` independent runs. Restart `r` draws
/// from ChaCha8 stream `r` of `seed`, so the result is reproducible and each
/// restart can be computed independently.
pub fn kmeans(points: &DenseMatrix, k: usize, restarts: usize, seed: u64) -> Result<KMeansResult> {
    let restarts = restarts.max(1);
    let mut best: Option<LloydRun> = None;
    for r in 0..restarts {
        let run = lloyd(points, k, &mut restart_rng(seed, r))?;
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let best = best.unwrap();
    Ok(KMeansResult {
        labels: Partition::new(best.assignment)?,
        centroids: best.centroids,
        inertia: best.inertia,
        restarts_run: restarts,
    })
}

pub fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}
