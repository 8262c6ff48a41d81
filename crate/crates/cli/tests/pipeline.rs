use std::fs;
use std::path::Path;
use std::process::Command as Process;

use clap::Parser;
use icd::cli::{run, Cli, CHECKPOINT_NAME, TRAINING_LOG_NAME};
use icd::dataset::{Manifest, SplitTag, MANIFEST_NAME};
use icd::eval::{read_records, round6, Stat};
use icd::formats::read_labels;

fn icd(args: &[&str]) -> anyhow::Result<()> {
    run(Cli::try_parse_from(
        std::iter::once("icd").chain(args.iter().copied()),
    )?)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// 20 small GN graphs, split 16/2/2.
fn dataset(dir: &Path) -> std::path::PathBuf {
    icd(&[
        "generate",
        "gn",
        "--count",
        "20",
        "--outdir",
        s(dir),
        "--nodes",
        "60",
        "--communities",
        "3",
        "--p-in",
        "0.5",
        "--seed",
        "7",
    ])
    .unwrap();
    let manifest = dir.join(MANIFEST_NAME);
    icd(&["split", s(&manifest)]).unwrap();
    manifest
}

fn tiny_train(manifest: &Path, out: &Path, extra: &[&str]) {
    let mut args = vec![
        "train",
        s(manifest),
        "--outdir",
        s(out),
        "--epochs",
        "2",
        "--samples-per-epoch",
        "3",
        "--gen-widths",
        "8,6,4",
        "--disc-widths",
        "4,2,1",
    ];
    args.extend_from_slice(extra);
    icd(&args).unwrap();
}

#[test]
fn generate_and_split_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ma = Manifest::read(&dataset(a.path())).unwrap();
    let mb = Manifest::read(&dataset(b.path())).unwrap();
    assert_eq!(ma.entries, mb.entries);
    let count = |t| ma.with_split(t).count();
    assert_eq!(
        (
            count(SplitTag::Train),
            count(SplitTag::Valid),
            count(SplitTag::Test)
        ),
        (16, 2, 2)
    );
    for e in &ma.entries {
        assert_eq!(
            fs::read(ma.edges_path(e)).unwrap(),
            fs::read(mb.edges_path(e)).unwrap()
        );
        assert_eq!(e.communities, Some(3));
    }
    // splitting again changes nothing
    let before = fs::read(a.path().join(MANIFEST_NAME)).unwrap();
    icd(&["split", s(&a.path().join(MANIFEST_NAME))]).unwrap();
    assert_eq!(before, fs::read(a.path().join(MANIFEST_NAME)).unwrap());
}

#[test]
fn full_pipeline_with_baseline_labels() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path());
    icd(&["label", s(&manifest), "--method", "spectral"]).unwrap();
    let m = Manifest::read(&manifest).unwrap();
    for e in &m.entries {
        let exists = m.baseline_labels_path(e, "spectral").exists();
        assert_eq!(exists, e.split != SplitTag::Test, "{}", e.path.display());
    }

    let out = dir.path().join("run");
    tiny_train(
        &manifest,
        &out,
        &["--labels", "spectral", "--variant", "icd-c"],
    );
    let ckpt = out.join(CHECKPOINT_NAME);
    let log = fs::read_to_string(out.join(TRAINING_LOG_NAME)).unwrap();
    assert_eq!(log.lines().count(), 1 + 3, "{log}");

    let test = m.with_split(SplitTag::Test).next().unwrap();
    let labels_out = dir.path().join("found.labels");
    let emb_out = dir.path().join("u.csv");
    icd(&[
        "infer",
        "--checkpoint",
        s(&ckpt),
        "--graph",
        s(&m.edges_path(test)),
        "--k",
        "3",
        "--out",
        s(&labels_out),
        "--embedding",
        s(&emb_out),
    ])
    .unwrap();
    let found = read_labels(&labels_out).unwrap();
    assert_eq!(found.num_nodes(), 60);
    assert!(found.num_communities() <= 3);
    let emb = fs::read_to_string(&emb_out).unwrap();
    assert_eq!(emb.lines().count(), 60);
    assert_eq!(emb.lines().next().unwrap().split(',').count(), 4);

    // a baseline label file for a test graph must never be read by eval
    fs::write(
        m.baseline_labels_path(test, "spectral"),
        "not a label file\n",
    )
    .unwrap();
    let eval_dir = dir.path().join("eval");
    icd(&[
        "eval",
        s(&manifest),
        "--methods",
        &format!("{},spectral,greedy", s(&ckpt)),
        "--out",
        s(&eval_dir),
        "--threads",
        "2",
    ])
    .unwrap();
    let records = read_records(fs::File::open(eval_dir.join("records.csv")).unwrap()).unwrap();
    assert_eq!(records.len(), 3 * 2);
    let methods: Vec<&str> = records.iter().map(|r| r.method.as_str()).collect();
    assert_eq!(
        methods,
        ["ICD-C", "ICD-C", "spectral", "spectral", "greedy", "greedy"]
    );
    for r in &records {
        assert!(r.nmi.is_some() && r.ac.is_some());
        let phases = [r.feat_s, r.prop_s, r.clus_s];
        if r.method == "ICD-C" {
            let sum: f64 = phases.iter().map(|p| p.unwrap()).sum();
            assert!(
                (sum - r.runtime_s).abs() <= 1e-5 * r.runtime_s.max(1e-3),
                "{r:?}"
            );
        } else {
            assert!(phases.iter().all(Option::is_none));
        }
    }

    // aggregates recomputed by hand from the per-graph rows
    let summary = fs::read_to_string(eval_dir.join("summary.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(summary.as_bytes());
    let header = rdr.headers().unwrap().clone();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    for row in rdr.records() {
        let row = row.unwrap();
        let method = &row[0];
        let ncut: Vec<f64> = records
            .iter()
            .filter(|r| r.method == method)
            .map(|r| r.ncut)
            .collect();
        let mean = ncut.iter().sum::<f64>() / ncut.len() as f64;
        let std =
            (ncut.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (ncut.len() - 1) as f64).sqrt();
        let got_mean: f64 = row[col("ncut_mean")].parse().unwrap();
        let got_std: f64 = row[col("ncut_std")].parse().unwrap();
        assert_eq!(got_mean, round6(mean), "{method}");
        assert_eq!(got_std, round6(std), "{method}");
        assert_eq!(Stat::of(&ncut).unwrap().mean, mean);
    }

    // the tos subcommand reproduces the eval output from the records alone
    let tos_again = dir.path().join("tos_again.csv");
    icd(&[
        "tos",
        s(&eval_dir.join("records.csv")),
        "--out",
        s(&tos_again),
    ])
    .unwrap();
    assert_eq!(
        fs::read_to_string(eval_dir.join("tos.csv")).unwrap(),
        fs::read_to_string(&tos_again).unwrap()
    );
}

#[test]
fn eval_without_truth_omits_label_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path());
    let m = Manifest::read(&manifest).unwrap();
    for e in m.with_split(SplitTag::Test) {
        fs::remove_file(m.truth_path(e)).unwrap();
    }
    let out = dir.path().join("eval");
    icd(&[
        "eval",
        s(&manifest),
        "--methods",
        "spectral",
        "--out",
        s(&out),
    ])
    .unwrap();
    let text = fs::read_to_string(out.join("records.csv")).unwrap();
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!((cells[5], cells[6]), ("", ""), "{line}");
    }
    // a lone method has no runtime headroom: every score is 0
    let tos = fs::read_to_string(out.join("tos.csv")).unwrap();
    assert_eq!(tos.lines().count(), 1 + 2);
    assert!(tos.lines().skip(1).all(|l| l.ends_with(",0")), "{tos}");
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path());
    let cfg = dir.path().join("train.toml");
    fs::write(
        &cfg,
        "variant = \"icd-c\"\nepochs = 5\nalpha = 0.5\nseed = 3\n",
    )
    .unwrap();
    let out = dir.path().join("run");
    tiny_train(&manifest, &out, &["--config", s(&cfg), "--alpha", "2"]);
    let ckpt = icd::checkpoint::load(&out.join(CHECKPOINT_NAME)).unwrap();
    assert_eq!(ckpt.variant, icd_core::model::Variant::IcdC);
    assert_eq!(ckpt.config.epochs, 2);
    assert_eq!(ckpt.config.alpha, 2.0);
    assert_eq!(ckpt.config.seed, 3);
    assert_eq!(ckpt.config.gen_widths, [8, 6, 4]);

    fs::write(&cfg, "epoch = 5\n").unwrap();
    assert!(icd(&[
        "train",
        s(&manifest),
        "--outdir",
        s(&out),
        "--config",
        s(&cfg)
    ])
    .is_err());
}

#[test]
fn bad_inputs_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path());
    // eval before split has no test graphs
    let other = tempfile::tempdir().unwrap();
    icd(&[
        "generate",
        "gn",
        "--count",
        "2",
        "--outdir",
        s(other.path()),
        "--nodes",
        "12",
        "--communities",
        "3",
    ])
    .unwrap();
    assert!(icd(&[
        "eval",
        s(&other.path().join(MANIFEST_NAME)),
        "--methods",
        "greedy",
        "--out",
        s(other.path())
    ])
    .is_err());
    // unknown method, missing checkpoint
    assert!(icd(&[
        "eval",
        s(&manifest),
        "--methods",
        "louvain",
        "--out",
        s(dir.path())
    ])
    .is_err());
    assert!(icd(&[
        "generate",
        "gn",
        "--count",
        "1",
        "--outdir",
        s(dir.path()),
        "--nodes",
        "10",
        "--communities",
        "3"
    ])
    .is_err());
    assert!(
        Cli::try_parse_from(["icd", "generate", "sbm", "--count", "1", "--outdir", "x"]).is_err()
    );
}

#[test]
fn binary_gradcheck_succeeds() {
    let out = Process::new(env!("CARGO_BIN_EXE_icd"))
        .args(["gradcheck", "--graphs", "1"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 2 * 3);
    assert!(text.lines().all(|l| l.starts_with("ok")), "{text}");
}
