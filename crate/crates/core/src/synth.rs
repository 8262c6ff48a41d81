//! Synthetic benchmark graphs with planted communities.
//!
//! - GN-style stochastic block model: `K` equal blocks, within-block edge
//!   probability `p_in`, cross-block probability `(1 − p_in)/(K − 1)`.
//! - LFR-style generator: power-law degrees and community sizes, a mixing
//!   ratio `μ` splitting every node's degree into internal and external
//!   stubs, configuration-model wiring with rewiring of invalid pairs.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{input_err, Error, Result};
use crate::graph::Graph;
use crate::math;
use crate::partition::Partition;

/// Parameters of the GN benchmark.
#[derive(Clone, Debug, PartialEq)]
pub struct GnSpec {
    pub n: usize,
    pub k: usize,
    pub p_in: f64,
    pub seed: u64,
}

impl GnSpec {
    /// Edge probability between nodes of different blocks.
    pub fn cross_probability(&self) -> f64 {
        if self.k < 2 {
            0.0
        } else {
            (1.0 - self.p_in) / (self.k - 1) as f64
        }
    }

    /// Expected number of edges.
    pub fn expected_edges(&self) -> f64 {
        let s = (self.n / self.k) as f64;
        let total = (self.n * (self.n - 1) / 2) as f64;
        let within = self.k as f64 * s * (s - 1.0) / 2.0;
        within * self.p_in + (total - within) * self.cross_probability()
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 || self.n == 0 || !self.n.is_multiple_of(self.k) {
            return Err(input_err!("K = {} must divide N = {}", self.k, self.n));
        }
        if self.n / self.k < 2 {
            return Err(input_err!("blocks must hold at least two nodes"));
        }
        if !(self.p_in > 0.0 && self.p_in <= 1.0) {
            return Err(input_err!("p_in = {} must lie in (0, 1]", self.p_in));
        }
        let q = self.cross_probability();
        if !(0.0..=1.0).contains(&q) {
            return Err(input_err!("cross probability {q} outside [0, 1]"));
        }
        Ok(())
    }
}

/// Calls `f` with the index of every success among `count` independent
/// Bernoulli(`p`) trials, skipping ahead geometrically.
fn for_each_success(count: usize, p: f64, rng: &mut impl Rng, mut f: impl FnMut(usize)) {
    if p <= 0.0 || count == 0 {
        return;
    }
    if p >= 1.0 {
        (0..count).for_each(f);
        return;
    }
    let log_q = math::ln_1p(-p);
    let mut idx: usize = 0;
    let mut first = true;
    loop {
        let u = 1.0 - rng.random::<f64>(); // (0, 1]
        let skip = math::floor(math::ln(u) / log_q);
        if skip >= count as f64 {
            return;
        }
        let step = skip as usize + usize::from(!first);
        first = false;
        idx = match idx.checked_add(step) {
            Some(i) if i < count => i,
            _ => return,
        };
        f(idx);
    }
}

/// Generates a GN graph and its block partition.
pub fn generate_gn(spec: &GnSpec) -> Result<(Graph, Partition)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let s = spec.n / spec.k;
    let q = spec.cross_probability();
    let mut edges = Vec::with_capacity(spec.expected_edges() as usize + 16);

    for block in 0..spec.k {
        let base = block * s;
        // row-major enumeration of (i, j), i < j, inside the block
        let mut row = 0usize;
        let mut row_start = 0usize;
        for_each_success(s * (s - 1) / 2, spec.p_in, &mut rng, |t| {
            while t >= row_start + (s - 1 - row) {
                row_start += s - 1 - row;
                row += 1;
            }
            edges.push((base + row, base + row + 1 + (t - row_start)));
        });
    }
    for a in 0..spec.k {
        for b in a + 1..spec.k {
            for_each_success(s * s, q, &mut rng, |t| {
                edges.push((a * s + t / s, b * s + t % s));
            });
        }
    }
    let labels = (0..spec.n).map(|i| i / s).collect();
    Ok((Graph::new(spec.n, &edges)?, Partition::new(labels)?))
}

/// Parameters of the LFR-style benchmark.
#[derive(Clone, Debug, PartialEq)]
pub struct LfrSpec {
    pub n: usize,
    pub avg_degree: f64,
    pub max_degree: usize,
    pub min_community: usize,
    pub max_community: usize,
    pub mu: f64,
    /// Degree power-law exponent.
    pub tau1: f64,
    /// Community-size power-law exponent.
    pub tau2: f64,
    pub seed: u64,
}

impl LfrSpec {
    /// The usual `(d, d_max, c_min, c_max) = (10, 100, 10, 200)` setting.
    pub fn standard(n: usize, mu: f64, seed: u64) -> Self {
        Self {
            n,
            avg_degree: 10.0,
            max_degree: 100,
            min_community: 10,
            max_community: 200,
            mu,
            tau1: 2.0,
            tau2: 1.0,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mu) {
            return Err(input_err!("mixing ratio {} outside [0, 1]", self.mu));
        }
        if self.min_community < 2 || self.min_community > self.max_community {
            return Err(input_err!(
                "community size bounds [{}, {}] are invalid",
                self.min_community,
                self.max_community
            ));
        }
        if self.max_community > self.n {
            return Err(input_err!(
                "c_max = {} exceeds N = {}",
                self.max_community,
                self.n
            ));
        }
        if !(self.avg_degree >= 1.0 && self.avg_degree <= self.max_degree as f64) {
            return Err(input_err!(
                "average degree {} must lie in [1, d_max = {}]",
                self.avg_degree,
                self.max_degree
            ));
        }
        if self.tau1 <= 0.0 || self.tau2 <= 0.0 {
            return Err(input_err!("power-law exponents must be positive"));
        }
        Ok(())
    }
}

/// Continuous power law `p(x) ∝ x^{-γ}` on `[lo, hi]`.
#[derive(Clone, Copy, Debug)]
struct PowerLaw {
    gamma: f64,
    lo: f64,
    hi: f64,
}

impl PowerLaw {
    fn sample(&self, rng: &mut impl Rng) -> f64 {
        let u = rng.random::<f64>();
        if (self.gamma - 1.0).abs() < 1e-12 {
            self.lo * math::powf(self.hi / self.lo, u)
        } else {
            let e = 1.0 - self.gamma;
            let (a, b) = (math::powf(self.lo, e), math::powf(self.hi, e));
            math::powf(a + u * (b - a), 1.0 / e)
        }
    }

    fn mean(&self) -> f64 {
        let (g, a, b) = (self.gamma, self.lo, self.hi);
        // ∫ x^{1-γ} / ∫ x^{-γ}, with the logarithmic special cases
        let integral = |p: f64| -> f64 {
            if (p + 1.0).abs() < 1e-12 {
                math::ln(b / a)
            } else {
                (math::powf(b, p + 1.0) - math::powf(a, p + 1.0)) / (p + 1.0)
            }
        };
        integral(1.0 - g) / integral(-g)
    }
}

/// Finds the lower cutoff giving mean degree `target` for a power law
/// truncated at `hi`.
fn degree_law(target: f64, hi: f64, gamma: f64) -> Result<PowerLaw> {
    let law = |lo: f64| PowerLaw { gamma, lo, hi };
    if law(1.0).mean() > target {
        return Err(Error::Generation(
            "average degree is below what a minimum degree of 1 allows".to_string(),
        ));
    }
    let (mut lo, mut hi_cut) = (1.0, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi_cut);
        if law(mid).mean() < target {
            lo = mid;
        } else {
            hi_cut = mid;
        }
    }
    Ok(law(0.5 * (lo + hi_cut)))
}

fn draw_community_sizes(spec: &LfrSpec, rng: &mut impl Rng) -> Option<Vec<usize>> {
    let law = PowerLaw {
        gamma: spec.tau2,
        lo: spec.min_community as f64,
        hi: spec.max_community as f64 + 1.0,
    };
    let mut sizes = Vec::new();
    let mut total = 0;
    while total < spec.n {
        let s =
            (math::floor(law.sample(rng)) as usize).clamp(spec.min_community, spec.max_community);
        sizes.push(s);
        total += s;
    }
    let mut excess = total - spec.n;
    while excess > 0 {
        let shrinkable: Vec<usize> = (0..sizes.len())
            .filter(|&c| sizes[c] > spec.min_community)
            .collect();
        if shrinkable.is_empty() {
            return None;
        }
        let c = shrinkable[rng.random_range(0..shrinkable.len())];
        let take = excess
            .min(sizes[c] - spec.min_community)
            .min(1 + excess / shrinkable.len());
        sizes[c] -= take;
        excess -= take;
    }
    Some(sizes)
}

/// Places nodes (largest internal degree first) into random communities
/// that have room and are big enough to host the node's internal degree.
fn assign_communities(
    internal: &[usize],
    sizes: &[usize],
    rng: &mut impl Rng,
) -> Option<Vec<usize>> {
    let mut order: Vec<usize> = (0..internal.len()).collect();
    order.shuffle(rng);
    order.sort_by(|&a, &b| internal[b].cmp(&internal[a]));
    let mut free = sizes.to_vec();
    let mut community = vec![0usize; internal.len()];
    let mut candidates = Vec::with_capacity(sizes.len());
    for v in order {
        candidates.clear();
        candidates.extend((0..sizes.len()).filter(|&c| free[c] > 0 && sizes[c] > internal[v]));
        if candidates.is_empty() {
            return None;
        }
        let c = candidates[rng.random_range(0..candidates.len())];
        free[c] -= 1;
        community[v] = c;
    }
    Some(community)
}

const REWIRE_SWEEPS: usize = 100;

/// Configuration-model pairing of `stubs` followed by up to
/// [`REWIRE_SWEEPS`] sweeps of double-edge swaps that remove self-loops,
/// multi-edges and pairs rejected by `allowed`. Pairs still invalid after
/// the sweeps are dropped.
fn wire_stubs(
    mut stubs: Vec<usize>,
    allowed: impl Fn(usize, usize) -> bool,
    rng: &mut impl Rng,
) -> Vec<(usize, usize)> {
    if stubs.len() % 2 == 1 {
        stubs.pop();
    }
    stubs.shuffle(rng);
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut edges: Vec<(usize, usize)> = stubs.chunks_exact(2).map(|p| key(p[0], p[1])).collect();
    let mut count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for &e in &edges {
        *count.entry(e).or_insert(0) += 1;
    }
    let ok = |e: (usize, usize), count: &BTreeMap<(usize, usize), usize>| {
        e.0 != e.1 && allowed(e.0, e.1) && count.get(&e).copied().unwrap_or(0) <= 1
    };
    if edges.len() < 2 {
        return edges
            .into_iter()
            .filter(|&e| e.0 != e.1 && allowed(e.0, e.1))
            .collect();
    }
    for _ in 0..REWIRE_SWEEPS {
        let bad: Vec<usize> = (0..edges.len())
            .filter(|&i| !ok(edges[i], &count))
            .collect();
        if bad.is_empty() {
            break;
        }
        for i in bad {
            if ok(edges[i], &count) {
                continue;
            }
            let j = rng.random_range(0..edges.len());
            if j == i {
                continue;
            }
            let ((a, b), (c, d)) = (edges[i], edges[j]);
            let (x, y) = if rng.random::<bool>() {
                (key(a, d), key(c, b))
            } else {
                (key(a, c), key(b, d))
            };
            let valid = |e: (usize, usize)| e.0 != e.1 && allowed(e.0, e.1);
            if !valid(x) || !valid(y) || x == y {
                continue;
            }
            let present = |e: (usize, usize)| count.get(&e).copied().unwrap_or(0) > 0;
            if present(x) || present(y) {
                continue;
            }
            for old in [edges[i], edges[j]] {
                let c = count.get_mut(&old).unwrap();
                *c -= 1;
                if *c == 0 {
                    count.remove(&old);
                }
            }
            *count.entry(x).or_insert(0) += 1;
            *count.entry(y).or_insert(0) += 1;
            edges[i] = x;
            edges[j] = y;
        }
    }
    edges.retain(|&e| e.0 != e.1 && allowed(e.0, e.1));
    edges.sort_unstable();
    edges.dedup();
    edges
}

const LFR_ATTEMPTS: usize = 50;

/// Generates an LFR-style graph and its planted partition.
pub fn generate_lfr(spec: &LfrSpec) -> Result<(Graph, Partition)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let law = degree_law(spec.avg_degree, spec.max_degree as f64, spec.tau1)?;

    let mut last_problem = "community sizes cannot be trimmed to N within [c_min, c_max]";
    for _ in 0..LFR_ATTEMPTS {
        let mut degrees: Vec<usize> = (0..spec.n)
            .map(|_| (math::round(law.sample(&mut rng)) as usize).clamp(1, spec.max_degree))
            .collect();
        let mut internal: Vec<usize> = degrees
            .iter()
            .map(|&d| math::round((1.0 - spec.mu) * d as f64) as usize)
            .collect();
        let Some(sizes) = draw_community_sizes(spec, &mut rng) else {
            last_problem = "community sizes cannot be trimmed to N within [c_min, c_max]";
            continue;
        };
        let Some(community) = assign_communities(&internal, &sizes, &mut rng) else {
            last_problem = "no community is large enough to host a node's internal degree";
            continue;
        };

        let mut members = vec![Vec::new(); sizes.len()];
        for (v, &c) in community.iter().enumerate() {
            members[c].push(v);
        }
        let mut edges = Vec::new();
        for block in &members {
            let mut stubs = Vec::new();
            for &v in block {
                stubs.extend(core::iter::repeat_n(v, internal[v]));
            }
            if stubs.len() % 2 == 1 {
                // an odd stub count cannot be paired; drop one from the largest
                let &v = block.iter().max_by_key(|&&v| internal[v]).unwrap();
                internal[v] -= 1;
                degrees[v] -= 1;
                let p = stubs.iter().position(|&s| s == v).unwrap();
                stubs.swap_remove(p);
            }
            edges.extend(wire_stubs(stubs, |_, _| true, &mut rng));
        }
        let mut external = Vec::new();
        for v in 0..spec.n {
            external.extend(core::iter::repeat_n(v, degrees[v] - internal[v]));
        }
        edges.extend(wire_stubs(
            external,
            |a, b| community[a] != community[b],
            &mut rng,
        ));

        return Ok((Graph::new(spec.n, &edges)?, Partition::new(community)?));
    }
    Err(Error::Generation(alloc::format!(
        "infeasible after {LFR_ATTEMPTS} attempts: {last_problem}"
    )))
}

/// Mean over non-isolated nodes of external degree / total degree.
pub fn realized_mixing(g: &Graph, p: &Partition) -> f64 {
    let mut sum = 0.0;
    let mut counted = 0usize;
    for v in 0..g.num_nodes() {
        let d = g.degree(v);
        if d == 0 {
            continue;
        }
        let ext = g
            .neighbors(v)
            .iter()
            .filter(|&&u| p.label(u) != p.label(v))
            .count();
        sum += ext as f64 / d as f64;
        counted += 1;
    }
    if counted == 0 {
        0.0
    } else {
        sum / counted as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_skipping_is_unbiased() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut hits = 0usize;
        let trials = 200_000;
        for_each_success(trials, 0.05, &mut rng, |_| hits += 1);
        let expect = 0.05 * trials as f64;
        let sd = (trials as f64 * 0.05 * 0.95).sqrt();
        assert!((hits as f64 - expect).abs() < 4.0 * sd, "{hits}");

        let mut seen = Vec::new();
        for_each_success(5, 1.0, &mut rng, |i| seen.push(i));
        assert_eq!(seen, [0, 1, 2, 3, 4]);
        for_each_success(5, 0.0, &mut rng, |_| panic!("p = 0 must not fire"));
    }

    #[test]
    fn gn_degenerate_probabilities() {
        let spec = GnSpec {
            n: 4,
            k: 2,
            p_in: 1.0,
            seed: 3,
        };
        let (g, p) = generate_gn(&spec).unwrap();
        assert_eq!(g.edges(), [(0, 1), (2, 3)]);
        assert_eq!(p.labels(), [0, 0, 1, 1]);
    }

    #[test]
    fn gn_rejects_bad_specs() {
        assert!(generate_gn(&GnSpec {
            n: 10,
            k: 3,
            p_in: 0.5,
            seed: 0
        })
        .is_err());
        assert!(generate_gn(&GnSpec {
            n: 10,
            k: 10,
            p_in: 1.0,
            seed: 0
        })
        .is_err());
        assert!(generate_gn(&GnSpec {
            n: 10,
            k: 2,
            p_in: 0.0,
            seed: 0
        })
        .is_err());
        assert!(generate_gn(&GnSpec {
            n: 10,
            k: 2,
            p_in: 1.5,
            seed: 0
        })
        .is_err());
    }

    #[test]
    fn gn_expected_edge_formula() {
        let spec = GnSpec {
            n: 5000,
            k: 250,
            p_in: 0.4,
            seed: 0,
        };
        assert!((spec.expected_edges() - 49_000.0).abs() < 1e-6);
        let spec = GnSpec { p_in: 0.3, ..spec };
        assert!((spec.expected_edges() - 49_250.0).abs() < 1e-6);
    }

    #[test]
    fn gn_reproducible_and_block_counts() {
        let spec = GnSpec {
            n: 60,
            k: 3,
            p_in: 0.5,
            seed: 42,
        };
        let (a, pa) = generate_gn(&spec).unwrap();
        let (b, _) = generate_gn(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(pa.sizes(), [20, 20, 20]);
        let (c, _) = generate_gn(&GnSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn power_law_mean_matches_samples() {
        let law = degree_law(10.0, 100.0, 2.0).unwrap();
        assert!((law.mean() - 10.0).abs() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m: f64 = (0..200_000).map(|_| law.sample(&mut rng)).sum::<f64>() / 200_000.0;
        assert!((m - 10.0).abs() < 0.1, "{m}");
        let flat = PowerLaw {
            gamma: 1.0,
            lo: 10.0,
            hi: 200.0,
        };
        assert!((flat.mean() - 190.0 / libm::log(20.0)).abs() < 1e-9);
    }

    #[test]
    fn lfr_zero_mixing_has_no_cut() {
        let spec = LfrSpec {
            mu: 0.0,
            ..LfrSpec::standard(800, 0.0, 5)
        };
        let (g, p) = generate_lfr(&spec).unwrap();
        assert!(g.edges().iter().all(|&(a, b)| p.label(a) == p.label(b)));
    }

    #[test]
    fn lfr_respects_bounds_and_mixing() {
        let spec = LfrSpec::standard(2000, 0.3, 17);
        let (g, p) = generate_lfr(&spec).unwrap();
        assert!(g.degrees().into_iter().max().unwrap() <= spec.max_degree);
        for s in p.sizes() {
            assert!(
                (spec.min_community..=spec.max_community).contains(&s),
                "{s}"
            );
        }
        let mix = realized_mixing(&g, &p);
        assert!((mix - 0.3).abs() <= 0.05, "{mix}");
        let mean_deg = 2.0 * g.num_edges() as f64 / g.num_nodes() as f64;
        assert!((mean_deg - 10.0).abs() < 1.0, "{mean_deg}");
    }

    #[test]
    fn lfr_rejects_infeasible() {
        let bad = LfrSpec {
            min_community: 50,
            max_community: 20,
            ..LfrSpec::standard(500, 0.3, 1)
        };
        assert!(generate_lfr(&bad).is_err());
        // d_max = 100 with μ = 0.1 needs communities of at least 91 nodes
        let tight = LfrSpec {
            max_community: 30,
            min_community: 10,
            mu: 0.1,
            ..LfrSpec::standard(500, 0.1, 1)
        };
        assert!(matches!(generate_lfr(&tight), Err(Error::Generation(_))));
    }
}
