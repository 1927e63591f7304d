use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn infocons(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infocons"))
        .args(args)
        .current_dir(repo())
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn bubble_scan_csv() {
    let o = infocons(&["scan", "data/fixtures/bubble.c"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("name,file,t,a_fixed,a_var,a,info"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..6], ["bubble", "data/fixtures/bubble.c", "94", "19", "8", "27"]);
    assert_eq!(lines.next(), None);
}

#[test]
fn empty_directory_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = infocons(&["scan", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no analyzable files"), "{}", stderr(&o));
}

#[test]
fn exit_codes() {
    assert_eq!(infocons(&["scan", "--no-such-flag", "x"]).status.code(), Some(1));
    assert_eq!(
        infocons(&["scan", "--language", "cobol", "data/fixtures"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(infocons(&["scan", "data/does-not-exist"]).status.code(), Some(2));
    assert_eq!(infocons(&["fit", "data/does-not-exist.csv"]).status.code(), Some(2));
    assert_eq!(infocons(&["--help"]).status.code(), Some(0));
}

#[test]
fn scans_are_repeatable_and_execution_independent() {
    let a = infocons(&["scan", "data/corpus/lua-5.4"]);
    let b = infocons(&["scan", "data/corpus/lua-5.4"]);
    let c = infocons(&["--sequential", "scan", "data/corpus/lua-5.4"]);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn csv_and_json_records_fit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let json = dir.path().join("r.json");
    for (path, fmt) in [(&csv, "csv"), (&json, "json")] {
        let o = infocons(&[
            "--output",
            path.to_str().unwrap(),
            "--format",
            fmt,
            "scan",
            "data/corpus/lua-5.4",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert!(dir.path().join("r.report.json").exists());
    let fits: Vec<serde_json::Value> = [&csv, &json]
        .iter()
        .map(|p| {
            let out = p.with_extension("fit.json");
            let o = infocons(&["--output", out.to_str().unwrap(), "fit", p.to_str().unwrap()]);
            assert!(o.status.success(), "{}", stderr(&o));
            let mut v: serde_json::Value = serde_json::from_slice(&std::fs::read(out).unwrap()).unwrap();
            v.as_object_mut().unwrap().remove("records");
            v
        })
        .collect();
    assert_eq!(fits[0], fits[1]);
    assert!(fits[0]["fit"]["slope"].as_f64().unwrap() < 0.0);
}

#[test]
fn fit_writes_plot_files() {
    let dir = tempfile::tempdir().unwrap();
    let recs = dir.path().join("r.csv");
    infocons(&["--output", recs.to_str().unwrap(), "scan", "data/corpus/lua-5.4"]);
    let plots = dir.path().join("plots");
    let o = infocons(&[
        "fit",
        recs.to_str().unwrap(),
        "--measure",
        "alphabet",
        "--s-min",
        "5",
        "--s-max",
        "300",
        "--plot-dir",
        plots.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("Pr(>|t|)"));
    for ext in ["dat", "csv", "json"] {
        assert!(plots.join(format!("ccdf_alphabet.{ext}")).exists());
    }
}

#[test]
fn single_species_table_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("g.csv");
    std::fs::write(
        &table,
        "species,kingdom,length\nonly,prokaryote,900\nonly,prokaryote,1200\n",
    )
    .unwrap();
    let o = infocons(&["genes", table.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bundled_gene_table_regresses() {
    let o = infocons(&["genes", "data/genes/synthetic.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for k in v["kingdoms"].as_array().unwrap() {
        assert!(k["regression"]["fit"]["r_squared"].as_f64().unwrap() > 0.95);
    }
}

#[test]
fn gene_generator_is_reproducible() {
    let o = infocons(&["gen-genes", "data/genes/generator.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        o.stdout,
        std::fs::read(repo().join("data/genes/synthetic.csv")).unwrap()
    );
}

#[test]
fn simulate_agrees_with_enumeration() {
    let o = infocons(&["--seed", "5", "simulate", "data/experiments/small.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["config"]["seed"], 5);
    for row in v["agreement"].as_array().unwrap() {
        assert!(row["z"].as_f64().unwrap().abs() < 5.0, "{row}");
    }
}
