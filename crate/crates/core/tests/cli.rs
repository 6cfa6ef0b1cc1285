use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use modembed::generators;
use modembed::graph::CovarianceOperator;
use modembed::io;
use modembed::spectral::{self, EigenMode};

fn modembed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modembed")).args(args).output().unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn karate_file(dir: &Path) -> String {
    let path = dir.join("karate.tsv");
    let edges: String = generators::karate_edges().iter().map(|(u, w)| format!("{u}\t{w}\n")).collect();
    std::fs::write(&path, edges).unwrap();
    path.to_str().unwrap().to_string()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn embed_cafe_on_karate() {
    let dir = tempfile::tempdir().unwrap();
    let g = karate_file(dir.path());
    let out = path(dir.path(), "e.tsv");
    let o = modembed(&["embed", "cafe", "--graph", &g, "--k", "2", "--theta", "50", "--seed", "7", "--out", &out]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let (labels, matrix) = io::read_embedding(&out).unwrap();
    assert_eq!(labels.len(), 34);
    assert!((1..=2).contains(&matrix.ncols()));
    let stdout = text(&o.stdout);
    assert!(stdout.contains("objective") && stdout.contains("C "));

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(format!("{out}.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "embed cafe");
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["parameters"]["theta"], 50.0);
    assert_eq!(manifest["inputs"][&g].as_str().unwrap().len(), 64);
    let trace = manifest["objective_trace"].as_array().unwrap();
    assert!(trace.windows(2).all(|w| w[1].as_f64().unwrap() >= w[0].as_f64().unwrap() - 1e-10));
}

#[test]
fn embed_writes_to_stdout_without_out() {
    let dir = tempfile::tempdir().unwrap();
    let g = karate_file(dir.path());
    let o = modembed(&["embed", "sphere", "--graph", &g, "--k", "3"]);
    assert!(o.status.success());
    let (labels, _) = io::parse_embedding(&text(&o.stdout), "stdout").unwrap();
    assert_eq!(labels.len(), 34);
    assert!(text(&o.stderr).contains("\"command\": \"embed sphere\""));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let g = karate_file(dir.path());
    let o = modembed(&["embed", "cafe"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("--graph"));
    let out = path(dir.path(), "never.tsv");
    let o = modembed(&["embed", "cafe", "--graph", &g, "--full-label", "--out", &out]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!Path::new(&out).exists());
    assert_eq!(modembed(&["embed", "cafe", "--graph", &path(dir.path(), "missing.tsv")]).status.code(), Some(1));
    assert_eq!(modembed(&["embed", "cafe", "--graph", &g, "--k", "1"]).status.code(), Some(1));
    assert_eq!(modembed(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(modembed(&["--help"]).status.code(), Some(0));
    assert_eq!(modembed(&["--version"]).status.code(), Some(0));
}

#[test]
fn semi_supervised_and_full_label() {
    let dir = tempfile::tempdir().unwrap();
    let g = karate_file(dir.path());
    let labels = path(dir.path(), "labels.tsv");
    let rows: String = generators::karate_factions().iter().enumerate().map(|(u, f)| format!("{u}\tf{f}\n")).collect();
    std::fs::write(&labels, rows).unwrap();
    let pins = path(dir.path(), "pins.tsv");
    std::fs::write(&pins, "0\tf0\n33\tf1\n").unwrap();
    for extra in [vec!["--labels", pins.as_str()], vec!["--labels", labels.as_str(), "--full-label"]] {
        let out = path(dir.path(), "e.tsv");
        let mut args = vec!["embed", "cafe", "--graph", &g, "--out", &out];
        args.extend(extra);
        let o = modembed(&args);
        assert!(o.status.success(), "{}", text(&o.stderr));
        assert_eq!(io::read_embedding(&out).unwrap().0.len(), 34);
    }
    let bad = path(dir.path(), "bad.tsv");
    std::fs::write(&bad, "99\tf0\n").unwrap();
    assert_eq!(modembed(&["embed", "cafe", "--graph", &g, "--labels", &bad]).status.code(), Some(1));
}

#[test]
fn multilayer_writes_levels() {
    let dir = tempfile::tempdir().unwrap();
    let g = karate_file(dir.path());
    let out = path(dir.path(), "m.tsv");
    let o = modembed(&["embed", "multilayer", "--graph", &g, "--k", "8", "--out", &out]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let table = std::fs::read_to_string(&out).unwrap();
    assert_eq!(table.lines().count(), 34);
    assert!(Path::new(&format!("{out}.level0.tsv")).exists());
}

#[test]
fn verify_reports_status() {
    let dir = tempfile::tempdir().unwrap();
    let g = karate_file(dir.path());
    let o = modembed(&["verify", "--graph", &g, "--k", "2", "--theta", "50"]);
    assert_eq!(o.status.code(), Some(0));
    let report = text(&o.stdout);
    let field = |name: &str| -> String {
        report
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{name}\t")).map(str::to_string))
            .unwrap()
    };
    assert!(field("cos_qx").parse::<f64>().unwrap() >= field("cos_x").parse::<f64>().unwrap());
    assert_eq!(field("status"), "inapplicable");

    // An exact eigenvector of a gapped graph.
    let barbell = path(dir.path(), "barbell.tsv");
    let (_, edges) = generators::barbell_edges(6, 1);
    std::fs::write(&barbell, edges.iter().map(|(u, w)| format!("{u}\t{w}\n")).collect::<String>()).unwrap();
    let graph = io::read_edge_list(&barbell).unwrap();
    let q = graph.modularity().with_diag_zeroed(false);
    let v1 = spectral::eigendecompose(&q, EigenMode::Full).unwrap().vector(0).to_owned();
    let assignment = path(dir.path(), "v1.tsv");
    std::fs::write(&assignment, io::format_embedding(graph.labels(), v1.insert_axis(ndarray::Axis(1)).view())).unwrap();
    let o = modembed(&["verify", "--graph", &barbell, "--assignment", &assignment]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let report = text(&o.stdout);
    let epsilon: f64 = report.lines().find_map(|l| l.strip_prefix("epsilon\t")).unwrap().parse().unwrap();
    assert!(epsilon <= 1e-9);
    assert!(report.contains("status\tholds"));
}

#[test]
fn eigs_lists_descending_values() {
    let dir = tempfile::tempdir().unwrap();
    let g = karate_file(dir.path());
    let o = modembed(&["eigs", "--graph", &g, "--topk", "2"]);
    assert!(o.status.success());
    let values: Vec<f64> = text(&o.stdout)
        .lines()
        .map(|l| l.split('\t').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 2);
    assert!(values[0] >= values[1]);
    assert!((values[0] - 0.031904360421345).abs() < 1e-9);
}

#[test]
fn reduce_points_file() {
    let dir = tempfile::tempdir().unwrap();
    let points = path(dir.path(), "circles.xyz");
    std::fs::write(&points, io::format_xyz(generators::concentric_circles(200).view())).unwrap();
    let out = path(dir.path(), "r.tsv");
    let o = modembed(&["reduce", "--points", &points, "--k", "6", "--theta", "0.01", "--out", &out]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let residuals: Vec<f64> = std::fs::read_to_string(&out)
        .unwrap()
        .lines()
        .map(|l| l.split('\t').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(residuals.len(), 6);
    assert_eq!(residuals.iter().filter(|r| r.abs() <= 1e-3).count(), 2);
    let coords = io::read_xyz(format!("{out}.coords.xyz")).unwrap();
    assert_eq!(coords.dim(), (200, 2));
}

#[test]
fn eval_commands_emit_three_metric_lines() {
    let dir = tempfile::tempdir().unwrap();
    let g = karate_file(dir.path());
    let emb = path(dir.path(), "e.tsv");
    assert!(modembed(&["embed", "sphere", "--graph", &g, "--k", "4", "--out", &emb]).status.success());
    let labels = path(dir.path(), "labels.tsv");
    let rows: String = generators::karate_factions().iter().enumerate().map(|(u, f)| format!("{u}\t{f}\n")).collect();
    std::fs::write(&labels, rows).unwrap();
    let o = modembed(&["eval", "classify", "--embeddings", &emb, "--labels", &labels, "--train", "0.5", "--reps", "20"]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let names: Vec<String> = text(&o.stdout).lines().map(|l| l.split('\t').next().unwrap().to_string()).collect();
    assert_eq!(names, ["accuracy", "macro_f1", "roc_auc_ovr"]);
    let o = modembed(&["eval", "link", "--graph", &g, "--embeddings", &emb, "--reps", "5", "--features", "concat"]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert_eq!(text(&o.stdout).lines().count(), 3);
}

#[test]
fn identical_invocations_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let g = karate_file(dir.path());
    let outputs: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let out: PathBuf = dir.path().join(format!("run{i}.tsv"));
            let o = modembed(&["embed", "cafe", "--graph", &g, "--k", "3", "--seed", "5", "--out", out.to_str().unwrap()]);
            assert!(o.status.success());
            std::fs::read(out).unwrap()
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
}
