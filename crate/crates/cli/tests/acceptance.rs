//! Acceptance criteria 1 to 10. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line, in order, and the timing
//! criterion runs alone.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use icd::checkpoint;
use icd::selfcheck;
use icd_core::coarsen::{extract_features, hem_coarsen};
use icd_core::graph::{
    connected_components, modularity_matrix, modularity_score, ncut_score, norm_laplacian,
    IsolatedNodes,
};
use icd_core::hungarian::min_cost_assignment;
use icd_core::metrics::{accuracy, nmi};
use icd_core::model::{infer, infer_embed, infer_features, ModelParams, TrainConfig, Variant};
use icd_core::partition::{indicator, label_induced_adjacency, IndicatorKind};
use icd_core::synth::{generate_gn, GnSpec};
use icd_core::tos::{tos, QualityMetric};
use icd_core::{DenseMatrix, Graph, Partition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, ok: String, bad: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(bad)
    }
}

fn random_partition(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Partition {
    Partition::new((0..n).map(|_| rng.random_range(0..k)).collect()).unwrap()
}

fn random_graph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::new(n, &edges).unwrap()
}

fn gn_edge_statistics() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (p_in, target) in [(0.4, 48_999.0), (0.3, 49_246.0)] {
        let mean = (0..20u64)
            .map(|seed| {
                generate_gn(&GnSpec {
                    n: 5000,
                    k: 250,
                    p_in,
                    seed,
                })
                .unwrap()
                .0
                .num_edges() as f64
            })
            .sum::<f64>()
            / 20.0;
        let rel = (mean - target).abs() / target;
        ok &= rel < 0.01;
        lines.push(format!(
            "p_in {p_in}: mean |E| {mean:.1} vs {target} ({:.3}%)",
            rel * 100.0
        ));
    }
    let text = lines.join("; ");
    check(ok, text.clone(), text)
}

fn tos_published_value() -> Outcome {
    let v =
        tos(0.2792, QualityMetric::Modularity, 13.63, 0.0, 1670.29).map_err(|e| e.to_string())?;
    check(
        (v - 0.63).abs() <= 0.01,
        format!("TOS {v:.4}"),
        format!("TOS {v:.4} not within 0.63 ± 0.01"),
    )
}

fn trace_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 50 {
        let n = rng.random_range(4..=30);
        let g = random_graph(n, rng.random_range(0.15..0.6), &mut rng);
        if g.has_isolated_nodes() {
            continue;
        }
        let k = rng.random_range(1..=n.min(6));
        let p = random_partition(n, k, &mut rng);
        let e = g.num_edges() as f64;

        let q = modularity_matrix(&g).unwrap().to_dense();
        let h = indicator(&p, IndicatorKind::ModularityH, Some(&g))
            .unwrap()
            .values;
        let lhs = h.t_matmul(&q.matmul(&h)).trace();
        worst = worst.max((lhs - 2.0 * e * modularity_score(&g, &p).unwrap()).abs());

        let l = norm_laplacian(&g, IsolatedNodes::Reject)
            .unwrap()
            .to_dense();
        let h = indicator(&p, IndicatorKind::NcutH, Some(&g))
            .unwrap()
            .values;
        let lhs = h.t_matmul(&l.matmul(&h)).trace();
        worst = worst.max((lhs - 2.0 * ncut_score(&g, &p).unwrap()).abs());
        done += 1;
    }
    check(
        worst <= 1e-9,
        format!("50 graphs, max deviation {worst:.2e}"),
        format!("max deviation {worst:.2e} > 1e-9"),
    )
}

/// True when two labelings induce the same grouping.
fn same_grouping(a: &[usize], b: &[usize]) -> bool {
    let mut fwd = std::collections::HashMap::new();
    let mut back = std::collections::HashMap::new();
    a.iter()
        .zip(b)
        .all(|(x, y)| *fwd.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x)
}

fn label_induced_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut dense_checked = 0;
    for t in 0..100 {
        let n = rng.random_range(1..=200);
        let k = rng.random_range(1..=n.min(20));
        let p = random_partition(n, k, &mut rng);
        let lig = label_induced_adjacency(&p);
        let comps = connected_components(n, lig.edges());
        if !same_grouping(&comps, p.labels()) {
            return Err(format!("partition {t}: components differ from the labels"));
        }
        if n <= 50 {
            let r = indicator(&p, IndicatorKind::BinaryR, None).unwrap().values;
            let rrt = r.matmul_t(&r);
            let dense = lig.to_dense(50).unwrap();
            let implicit = DenseMatrix::from_fn(n, n, |i, j| lig.entry(i, j));
            if dense != rrt || implicit != rrt {
                return Err(format!(
                    "partition {t}: dense R Rᵀ differs from the implicit blocks"
                ));
            }
            dense_checked += 1;
        }
    }
    Ok(format!(
        "100 partitions, {dense_checked} also checked densely"
    ))
}

fn gradient_integrity() -> Outcome {
    let outcomes = selfcheck::run(3, 11).map_err(|e| e.to_string())?;
    let worst = outcomes
        .iter()
        .max_by(|a, b| a.report.max_rel_error.total_cmp(&b.report.max_rel_error))
        .unwrap();
    let all = outcomes.iter().all(|o| o.passed());
    let msg = format!(
        "{} checks over both variants, worst {:.2e} ({} {})",
        outcomes.len(),
        worst.report.max_rel_error,
        worst.variant.name(),
        worst.target.describe()
    );
    check(all, msg.clone(), msg)
}

fn coarsening_contract() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_diag: f64 = 0.0;
    let mut worst_feat: f64 = 0.0;
    for t in 0..50 {
        let l = rng.random_range(2..=12);
        let n = rng.random_range(l + 1..=10 * l);
        let density = rng.random_range(0.05..0.5);
        let g = loop {
            let g = random_graph(n, density, &mut rng);
            if g.num_edges() > 0 {
                break g;
            }
        };
        let x = modularity_matrix(&g).unwrap();
        let map = hem_coarsen(&g, &x, l).map_err(|e| e.to_string())?;
        if map.num_supernodes() != l {
            return Err(format!(
                "graph {t}: {} supernodes for L = {l}",
                map.num_supernodes()
            ));
        }
        let c = map.coarsening_matrix().to_dense();
        let ctc = c.t_matmul(&c);
        for i in 0..l {
            for j in 0..l {
                if i != j && ctc[(i, j)] != 0.0 {
                    return Err(format!("graph {t}: CᵀC[{i},{j}] = {}", ctc[(i, j)]));
                }
            }
            worst_diag = worst_diag.max((ctc[(i, i)] - 1.0).abs());
        }
        let z = extract_features(&g, &x, l).unwrap().values;
        worst_feat = worst_feat.max(z.max_abs_diff(&x.to_dense().matmul(&c)));
    }

    // two 4-cliques joined by a bridge
    let mut e = Vec::new();
    for base in [0, 4] {
        for i in 0..4 {
            for j in i + 1..4 {
                e.push((base + i, base + j));
            }
        }
    }
    e.push((3, 4));
    let g = Graph::new(8, &e).unwrap();
    let map = hem_coarsen(&g, &modularity_matrix(&g).unwrap(), 2).unwrap();
    let fixture = map.supernodes() == [vec![0, 1, 2, 3], vec![4, 5, 6, 7]];

    // a diagonal of s·(s^-1/2)² can round one ulp away from 1
    let ok = worst_diag <= 4.0 * f64::EPSILON && worst_feat <= 1e-12 && fixture;
    let msg =
        format!(
        "50 graphs: exactly L supernodes, off-diagonal CᵀC 0, diagonal within {worst_diag:.1e}, \
         |Z − XC| ≤ {worst_feat:.1e}, fixture {}",
        if fixture { "{1,2,3,4}/{5,6,7,8}" } else { "mismatch" }
    );
    check(ok, msg.clone(), msg)
}

fn desk_scale() -> Outcome {
    let t = Instant::now();
    let o = common::desk_run(0.25, 0);
    let a = o.final_nmi >= 0.70;
    let b = o.final_nmi - o.init_nmi >= 0.20;
    let c = o.final_nmi >= o.first_epoch_nmi;
    let msg = format!(
        "test NMI {:.4} (a: ≥ 0.70 {}), random init {:.4} (b: +0.20 {}), first epoch {:.4} (c: {}), {:.0}s",
        o.final_nmi,
        pass_word(a),
        o.init_nmi,
        pass_word(b),
        o.first_epoch_nmi,
        pass_word(c),
        t.elapsed().as_secs_f64()
    );
    check(a && b && c, msg.clone(), msg)
}

fn pass_word(ok: bool) -> &'static str {
    if ok {
        "met"
    } else {
        "missed"
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

fn metric_unit_values() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let p = random_partition(40, 5, &mut rng);
    let self_nmi = nmi(&p, &p).unwrap();
    let relabeled = Partition::new(p.labels().iter().map(|&l| (l * 3 + 1) % 5).collect()).unwrap();
    let perm_ac = accuracy(&p, &relabeled).unwrap();
    let single = nmi(&Partition::new(vec![0; 40]).unwrap(), &p).unwrap();
    if (self_nmi - 1.0).abs() > 1e-12 || (perm_ac - 1.0).abs() > 1e-12 || single != 0.0 {
        return Err(format!(
            "nmi(p,p) {self_nmi}, permuted AC {perm_ac}, single-vs-multi {single}"
        ));
    }
    let mut cases = 0;
    for k in 1..=6 {
        let perms = permutations(k);
        for _ in 0..20 {
            let cost = DenseMatrix::from_fn(k, k, |_, _| rng.random_range(-10.0..10.0));
            let (assign, total) = min_cost_assignment(&cost);
            let brute = perms
                .iter()
                .map(|p| {
                    p.iter()
                        .enumerate()
                        .map(|(i, &j)| cost[(i, j)])
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min);
            let recomputed: f64 = assign.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
            if (total - brute).abs() > 1e-9 || (recomputed - brute).abs() > 1e-9 {
                return Err(format!("K = {k}: Hungarian {total} vs exhaustive {brute}"));
            }
            cases += 1;
        }
    }
    Ok(format!(
        "unit values hold; Hungarian = exhaustive on {cases} matrices, K ≤ 6"
    ))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn prop_phase_scaling() -> Outcome {
    let n = 4000;
    let cfg = TrainConfig::default();
    let model = ModelParams::init(&cfg, &mut icd_core::cluster::restart_rng(9, 0)).unwrap();
    let mut times = Vec::new();
    for (deg, seed) in [(10.0, 1), (20.0, 2)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(n, deg / n as f64, &mut rng);
        let input = infer_features(&g, Variant::IcdM, cfg.feature_dim(), false).unwrap();
        infer_embed(&model.generator, &input).unwrap();
        let runs = (0..5)
            .map(|_| {
                let t = Instant::now();
                std::hint::black_box(infer_embed(&model.generator, &input).unwrap());
                t.elapsed().as_secs_f64()
            })
            .collect();
        times.push((g.num_edges(), median(runs)));
    }
    let ratio = times[1].1 / times[0].1;
    let msg = format!(
        "|E| {} -> {}: Prop {:.4}s -> {:.4}s, ratio {ratio:.2}",
        times[0].0, times[1].0, times[0].1, times[1].1
    );
    check(ratio < 4.0, msg.clone(), msg)
}

fn checkpoint_round_trip() -> Outcome {
    let cfg = TrainConfig {
        gen_widths: vec![16, 8, 4],
        disc_widths: vec![4, 3, 1],
        ..TrainConfig::default()
    };
    let ckpt = icd_core::model::Checkpoint {
        variant: Variant::IcdC,
        model: ModelParams::init(&cfg, &mut icd_core::cluster::restart_rng(10, 0)).unwrap(),
        config: cfg,
        best_score: 0.123456789,
        best_epoch: 7,
        note: "round trip".into(),
    };
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (first, second) = (dir.path().join("a.ckpt"), dir.path().join("b.ckpt"));
    checkpoint::save(&first, &ckpt).map_err(|e| e.to_string())?;
    let loaded = checkpoint::load(&first).map_err(|e| e.to_string())?;
    checkpoint::save(&second, &loaded).map_err(|e| e.to_string())?;
    let same_bytes = std::fs::read(&first).unwrap() == std::fs::read(&second).unwrap();

    let (g, _) = generate_gn(&GnSpec {
        n: 60,
        k: 3,
        p_in: 0.4,
        seed: 1,
    })
    .unwrap();
    let (u1, p1) = infer(&ckpt, &g, 3).unwrap();
    let (u2, p2) = infer(&loaded, &g, 3).unwrap();
    let bits = |u: &DenseMatrix| u.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    let same_embedding = bits(&u1) == bits(&u2) && p1 == p2;
    check(
        same_bytes && same_embedding,
        "save→load→save byte-identical; embeddings equal to 0 ulps".into(),
        format!("bytes identical {same_bytes}, embeddings identical {same_embedding}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("GN generator statistics", gn_edge_statistics),
        ("TOS published value", tos_published_value),
        ("metric-oracle trace identities", trace_identities),
        ("label-induced graph round trip", label_induced_round_trip),
        ("gradient integrity", gradient_integrity),
        ("coarsening contract", coarsening_contract),
        ("desk-scale end-to-end", desk_scale),
        ("metric unit values", metric_unit_values),
        ("Prop-phase scaling", prop_phase_scaling),
        ("checkpoint round trip", checkpoint_round_trip),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let what = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {what}"))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
