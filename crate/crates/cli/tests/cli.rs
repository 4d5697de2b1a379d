use std::path::Path;
use std::process::{Command, Output};

fn mvtpm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mvtpm")).args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn synth(dir: &Path, name: &str, n: usize, seed: u64) {
    let o = mvtpm(&["synth", "--name", name, "--n", &n.to_string(), "--seed", &seed.to_string(), "--out", p(dir)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn synth_writes_requested_rows_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    synth(&a, "synthetic3", 2000, 7);
    synth(&b, "synthetic3", 2000, 7);
    for f in ["viewA.csv", "viewB.csv", "labels.csv", "manifest.json"] {
        let x = std::fs::read(a.join(f)).unwrap();
        assert_eq!(x, std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let rows = std::fs::read_to_string(a.join("viewA.csv")).unwrap().lines().count();
    assert_eq!(rows, 2000);
}

#[test]
fn unknown_synthetic_name_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = mvtpm(&["synth", "--name", "synthetic9", "--n", "100", "--out", p(tmp.path())]);
    assert_eq!(o.status.code(), Some(2));
    let o = mvtpm(&["synth", "--name", "synthetic1", "--n", "7", "--out", p(tmp.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn train_predict_roundtrip() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("d");
    synth(&data, "synthetic3", 200, 1);
    let manifest = data.join("manifest.json");
    let model = tmp.path().join("model.json");
    let o = mvtpm(&["train", "--manifest", p(&manifest), "--out", p(&model)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("training accuracy: 1.000000"), "{out}");
    assert!(out.contains("duality_gap"));
    assert!(model.exists());
    let text = std::fs::read_to_string(&model).unwrap();
    assert!(text.contains("\"eps1\": 0.1"));
    assert!(text.contains("mvtpmsvm-model/1"));

    let (p1, p2) = (tmp.path().join("p1.csv"), tmp.path().join("p2.csv"));
    for out in [&p1, &p2] {
        let o = mvtpm(&["predict", "--model", p(&model), "--manifest", p(&manifest), "--out", p(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("accuracy: 1.000000"));
    }
    let first = std::fs::read_to_string(&p1).unwrap();
    assert_eq!(first, std::fs::read_to_string(&p2).unwrap());
    assert!(first.starts_with("index,f,label\n"));
    assert_eq!(first.lines().count(), 201);
    let labels: Vec<String> = std::fs::read_to_string(data.join("labels.csv")).unwrap().lines().map(str::to_string).collect();
    for (line, truth) in first.lines().skip(1).zip(&labels) {
        assert_eq!(line.rsplit(',').next().unwrap(), truth);
    }
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("d");
    synth(&data, "synthetic2", 60, 2);
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"c1": 0.5, "c2": 4.0, "kernel": "gaussian-squared", "sigma": 2.0}"#).unwrap();
    let model = tmp.path().join("m.json");
    let o = mvtpm(&[
        "train",
        "--manifest",
        p(&data.join("manifest.json")),
        "--config",
        p(&cfg),
        "--c1",
        "0.25",
        "--out",
        p(&model),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    let hp = &m["hyperparams"];
    assert_eq!(hp["c1"], 0.25);
    assert_eq!(hp["c2"], 4.0);
    assert_eq!(hp["d2"], 4.0);
    assert_eq!(hp["kernel_a"]["kind"], "gaussian-squared");
    assert_eq!(hp["eps2"], 0.1);
}

#[test]
fn missing_label_column_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("a.csv"), "1,2\n3,4\n5,6\n").unwrap();
    std::fs::write(tmp.path().join("m.json"), r#"{"name":"x","view_a":"a.csv","labels":{"column":7}}"#).unwrap();
    let o = mvtpm(&["train", "--manifest", p(&tmp.path().join("m.json")), "--out", p(&tmp.path().join("o.json"))]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(tmp.path().join("m.json"), r#"{"name":"x","view_a":"a.csv"}"#).unwrap();
    let o = mvtpm(&["train", "--manifest", p(&tmp.path().join("m.json")), "--out", p(&tmp.path().join("o.json"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn absent_view_b_without_pca_basis_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("d");
    synth(&data, "synthetic1", 40, 3);
    let model = tmp.path().join("m.json");
    assert!(mvtpm(&["train", "--manifest", p(&data.join("manifest.json")), "--out", p(&model)]).status.success());
    let mut manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(data.join("manifest.json")).unwrap()).unwrap();
    manifest.as_object_mut().unwrap().remove("view_b");
    let single = data.join("single.json");
    std::fs::write(&single, manifest.to_string()).unwrap();
    let o = mvtpm(&["predict", "--model", p(&model), "--manifest", p(&single), "--out", p(&tmp.path().join("p.csv"))]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no PCA basis"));
}

#[test]
fn single_view_dataset_gets_pca_view_b() {
    let tmp = tempfile::tempdir().unwrap();
    let mut text = String::new();
    for i in 0..40 {
        let t = i as f64 / 40.0;
        let label = if i % 2 == 0 { "yes" } else { "no" };
        let s = if i % 2 == 0 { 1.0 } else { -1.0 };
        text.push_str(&format!("{},{},{},{label}\n", s + t, 0.5 * t, s - t));
    }
    std::fs::write(tmp.path().join("a.csv"), text).unwrap();
    std::fs::write(
        tmp.path().join("m.json"),
        r#"{"name":"single","view_a":"a.csv","labels":{"column":3},"positive_label":"yes"}"#,
    )
    .unwrap();
    let model = tmp.path().join("model.json");
    let o = mvtpm(&["train", "--manifest", p(&tmp.path().join("m.json")), "--out", p(&model)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(std::fs::read_to_string(&model).unwrap().contains("\"pca\""));
    let out = tmp.path().join("p.csv");
    let o = mvtpm(&["predict", "--model", p(&model), "--manifest", p(&tmp.path().join("m.json")), "--out", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(std::fs::read_to_string(&out).unwrap().contains(",yes\n"));
}

#[test]
fn stats_reproduces_reference_rank_figures() {
    let o = mvtpm(&["stats", "--ranks", "3.25,4.29,4.62,3.89,2.87,2.07", "--datasets", "55", "--q-alpha", "2.850"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let value = |key: &str| -> f64 {
        let line = out.lines().find(|l| l.starts_with(key)).unwrap();
        line.split(':').nth(1).unwrap().trim().parse().unwrap()
    };
    assert!((value("chi_squared") - 70.1627).abs() < 0.02);
    assert!((value("f_statistic") - 18.4965).abs() < 0.002);
    assert!((value("critical_difference") - 1.0167).abs() < 0.0005);
}

#[test]
fn stats_on_matrices() {
    let tmp = tempfile::tempdir().unwrap();
    let same = tmp.path().join("same.csv");
    std::fs::write(&same, "dataset,a,b,c\nx,0.5,0.5,0.5\ny,0.8,0.8,0.8\nz,0.1,0.1,0.1\n").unwrap();
    let report = tmp.path().join("r.json");
    let o = mvtpm(&["stats", "--accuracy", p(&same), "--out", p(&report)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["schema"], "mvtpm-stats/1");
    assert_eq!(r["chi_squared"], 0.0);
    assert_eq!(r["win_tie_loss"]["pairs"][0]["ties"], 3);

    let bad = tmp.path().join("bad.csv");
    std::fs::write(&bad, "dataset,a,b\nx,0.5,oops\ny,0.1,0.2\n").unwrap();
    let o = mvtpm(&["stats", "--accuracy", p(&bad)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("parse error"));
}

#[test]
fn benchmark_smoke_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("d");
    synth(&data, "synthetic3", 80, 5);
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let o = mvtpm(&[
            "benchmark",
            "--manifest",
            p(&data.join("manifest.json")),
            "--grid",
            "coarse",
            "--folds",
            "3",
            "--seed",
            "11",
            "--cv-tol",
            "1e-3",
            "--cv-max-iter",
            "300",
            "--out",
            p(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (std::fs::read_to_string(&out).unwrap(), std::fs::read_to_string(out.with_extension("csv")).unwrap())
    };
    let (r1, c1) = run("r1.json");
    let (r2, c2) = run("r2.json");
    assert_eq!(r1, r2);
    assert_eq!(c1, c2);
    let report: serde_json::Value = serde_json::from_str(&r1).unwrap();
    assert_eq!(report["schema"], "mvtpm-report/1");
    let row = &report["rows"][0]["outcome"]["metrics"];
    let (acc, err) = (row["accuracy"].as_f64().unwrap(), row["error_rate"].as_f64().unwrap());
    assert!((acc + err - 1.0).abs() < 1e-12);
    assert_eq!(c1.lines().count(), 2);
}

#[test]
fn benchmark_with_only_failures_exits_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("m.json"), r#"{"name":"gone","view_a":"nothing.csv","labels":{"column":0}}"#).unwrap();
    let o = mvtpm(&["benchmark", "--manifest", p(&tmp.path().join("m.json")), "--out", p(&tmp.path().join("r.json"))]);
    assert_eq!(o.status.code(), Some(3));
    assert!(std::fs::read_to_string(tmp.path().join("r.json")).unwrap().contains("\"error\""));
}

#[test]
fn strict_flag_reports_non_convergence() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("d");
    synth(&data, "synthetic1", 60, 4);
    let o = mvtpm(&[
        "train",
        "--manifest",
        p(&data.join("manifest.json")),
        "--solver",
        "pg",
        "--max-iter",
        "1",
        "--strict",
        "--out",
        p(&tmp.path().join("m.json")),
    ]);
    assert_eq!(o.status.code(), Some(4));
}
