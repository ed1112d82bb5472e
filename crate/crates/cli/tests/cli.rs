use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn toy(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/toy").join(file)
}

fn ibtrans(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ibtrans")).args(args).output().expect("binary runs")
}

fn analyze(out: &Path, extra: &[&str]) -> Output {
    let config = toy("config.toml");
    let mut args = vec!["analyze", "-c", config.to_str().unwrap(), "-o", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    ibtrans(&args)
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(|r| r.unwrap()).collect()
}

fn headers(path: &Path) -> Vec<String> {
    csv::Reader::from_path(path).unwrap().headers().unwrap().iter().map(String::from).collect()
}

fn num(r: &csv::StringRecord, i: usize) -> f64 {
    r[i].parse().unwrap()
}

#[test]
fn analyze_writes_every_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = analyze(&out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "frontier.csv",
        "infoplane.csv",
        "deviations.csv",
        "similarity_report.json",
        "similarity_report.csv",
        "lowrank_model.json",
        "config.toml",
        "manifest.json",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    assert_eq!(headers(&out.join("frontier.csv")), ["beta", "complexity_bits", "accuracy_bits", "converged"]);
    assert_eq!(
        headers(&out.join("infoplane.csv")),
        ["label", "kind", "language", "fraction", "complexity_bits", "accuracy_bits"]
    );

    // every point obeys the data-processing bound and sits on or above the frontier
    for r in rows(&out.join("infoplane.csv")) {
        assert!(num(&r, 5) <= num(&r, 4) + 1e-9, "{:?}", r);
    }
    for r in rows(&out.join("deviations.csv")) {
        assert!(num(&r, 3) >= -1e-6, "{:?}", r);
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "analyze");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(analyze(&a, &["--plot-jitter"]).status.success());
    assert!(analyze(&b, &["--plot-jitter"]).status.success());
    for f in ["frontier.csv", "infoplane.csv", "deviations.csv", "similarity_report.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_eq!(headers(&a.join("infoplane.csv")).last().unwrap(), "complexity_display");
}

#[test]
fn frontier_seed_only_moves_values_within_tolerance() {
    let tmp = tempfile::tempdir().unwrap();
    let config = toy("config.toml");
    let run = |name: &str, seed: &str| {
        let out = tmp.path().join(name);
        let o = ibtrans(&["frontier", "-c", config.to_str().unwrap(), "-o", out.to_str().unwrap(), "--frontier-seed", seed]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        rows(&out.join("frontier.csv"))
    };
    let (x, y) = (run("a", "0"), run("b", "99"));
    assert_eq!(x.len(), y.len());
    for (p, q) in x.iter().zip(&y) {
        let (bp, bq) = (num(p, 0), num(q, 0));
        assert_eq!(bp, bq);
        let f = |r: &csv::StringRecord| num(r, 1) - bp * num(r, 2);
        assert!((f(p) - f(q)).abs() <= 1e-6 * bp.max(1.0), "β = {bp}: {} vs {}", f(p), f(q));
    }
}

#[test]
fn empty_pile_sort_is_rejected_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let out = tmp.path().join("run");
    let o = analyze(&out, &["--pile-sort", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.exists());
    assert_eq!(std::fs::read_dir(tmp.path()).unwrap().count(), 1, "staging left behind");
}

#[test]
fn out_of_range_fraction_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = analyze(&out, &["--fractions", "0.1,1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("1.5"));
    assert!(!out.exists());
}

#[test]
fn strict_mode_surfaces_non_convergence() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = analyze(&out, &["--strict", "--max-iters", "1"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.exists());

    let lax = analyze(&out, &["--max-iters", "1"]);
    assert!(lax.status.success());
    assert!(rows(&out.join("frontier.csv")).iter().any(|r| &r[3] == "false"));
}

#[test]
fn mds_and_select() {
    let tmp = tempfile::tempdir().unwrap();
    let embeddings = toy("embeddings.tsv");
    let pile = toy("pilesort.csv");
    let out = tmp.path().join("mds");
    let o = ibtrans(&["mds", "--pile-sort", pile.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("mds.json")).unwrap()).unwrap();
    assert_eq!(m["items"].as_array().unwrap().len(), 24);

    let out = tmp.path().join("select");
    let o = ibtrans(&["select", "--embeddings", embeddings.to_str().unwrap(), "-k", "5", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(rows(&out.join("representatives.csv")).len(), 5);
}
