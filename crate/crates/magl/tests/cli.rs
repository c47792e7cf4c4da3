mod common;

use std::path::Path;
use std::process::{Command, Output};

fn magl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magl")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = magl(args);
    assert!(
        out.status.success(),
        "magl {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    magl(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_config(dir: &Path, p: usize, m: usize) -> std::path::PathBuf {
    let path = dir.join("small.toml");
    let text = format!("p = {p}\nm = {m}\np_er = 0.3\nn_list = [300]\nruns = 2\ngrid_size = 5\nseed = 4\n");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn gen_fit_select_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 8, 2);
    let gen = dir.path().join("gen");
    ok(&["gen", "--config", s(&cfg), "--output-dir", s(&gen)]);
    let truth: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(gen.join("truth.json")).unwrap()).unwrap();
    assert_eq!(truth["p"], 8);
    assert_eq!(truth["m"], 2);
    let data = gen.join("data.csv");
    let header = std::fs::read_to_string(&data).unwrap();
    assert!(header.starts_with("rows,cols,p,m\n300,16,8,2\n"));

    let fit = dir.path().join("fit");
    let stdout = ok(&[
        "fit", "--input", s(&data), "--penalty", "log-sum", "--lambda", "0.1", "--alpha", "0.05", "--trace",
        "--output-dir", s(&fit),
    ]);
    assert!(stdout.contains("edges"));
    let est: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(fit.join("estimate.json")).unwrap()).unwrap();
    assert_eq!(est["penalty"], "log-sum");
    assert_eq!(est["lla_rounds"], 2);
    let edges = std::fs::read_to_string(fit.join("edges.tsv")).unwrap();
    assert_eq!(edges.lines().next().unwrap(), "node_a\tnode_b\tweight");
    assert_eq!(edges.lines().count() as u64, est["n_edges"].as_u64().unwrap() + 1);
    let trace = std::fs::read_to_string(fit.join("trace.csv")).unwrap();
    assert!(trace.starts_with("iteration,primal_residual,dual_residual,rho,objective"));
    assert!(trace.lines().count() > 2);

    let sel = dir.path().join("select");
    ok(&[
        "select", "--config", s(&cfg), "--input", s(&data), "--penalty", "lasso", "--lambda-only", "--output-dir",
        s(&sel),
    ]);
    let table = std::fs::read_to_string(sel.join("bic_table.csv")).unwrap();
    assert_eq!(table.lines().next().unwrap(), "lambda,alpha,bic,n_edges,converged");
    assert_eq!(table.lines().count(), 6);
    assert!(sel.join("omega.csv").is_file());
}

#[test]
fn binary_matrices_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 5, 2);
    let gen = dir.path().join("gen");
    ok(&["gen", "--config", s(&cfg), "--output-dir", s(&gen)]);
    let f = magl::format::read_matrix(&gen.join("data.csv")).unwrap();
    let bin = dir.path().join("data.magm");
    magl::format::write_matrix(&bin, &f).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["fit", "--input", s(&gen.join("data.csv")), "--lambda", "0.2", "--output-dir", s(&a)]);
    ok(&["fit", "--input", s(&bin), "--lambda", "0.2", "--output-dir", s(&b)]);
    assert_eq!(
        std::fs::read_to_string(a.join("omega.csv")).unwrap(),
        std::fs::read_to_string(b.join("omega.csv")).unwrap()
    );
}

#[test]
fn synth_writes_metrics_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 8, 2);
    let strip = |p: &Path| -> String {
        std::fs::read_to_string(p.join("metrics.csv"))
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect::<Vec<_>>()
            .join("\n")
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let stdout = ok(&["synth", "--config", s(&cfg), "--penalty", "lasso", "--penalty", "scad", "--output-dir", s(&a)]);
    assert_eq!(stdout.lines().count(), 2);
    ok(&[
        "synth", "--config", s(&cfg), "--penalty", "lasso", "--penalty", "scad", "--jobs", "2", "--output-dir", s(&b),
    ]);
    assert_eq!(strip(&a), strip(&b));
    assert!(a.join("aggregate.csv").is_file() && a.join("summary.json").is_file());
}

#[test]
fn ingest_with_groups_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let (paths, _) = common::price_fixture(dir.path(), 5, 2, 120, 61);
    let groups = dir.path().join("groups.csv");
    std::fs::write(&groups, "node0,tech\nnode1,tech\nnode2,energy\nnode3,energy\nnode4,utilities\n").unwrap();
    let out = dir.path().join("out");
    let mut args = vec!["ingest", "--files"];
    args.extend(paths.iter().map(|p| s(p)));
    args.extend(["--features", "f0,f1", "--penalty", "lasso", "--groups", s(&groups), "--output-dir", s(&out)]);
    ok(&args);
    let returns = magl::format::read_matrix(&out.join("returns.csv")).unwrap();
    assert_eq!((returns.data.rows(), returns.p, returns.m), (120, 5, 2));
    let edges = std::fs::read_to_string(out.join("lasso/edges.tsv")).unwrap();
    assert!(edges.starts_with("node_a\tnode_b\tweight\tgroup_a\tgroup_b\n"));
    for line in edges.lines().skip(1) {
        let cols: Vec<&str> = line.split('\t').collect();
        assert_eq!(cols.len(), 5);
        assert!(cols[0].starts_with("node") && !cols[3].is_empty());
    }
}

#[test]
fn diagnostics_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 4, 2);
    let out = dir.path().join("irrep");
    ok(&["diagnose", "irrep", "--config", s(&cfg), "--output-dir", s(&out)]);
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("irrep.json")).unwrap()).unwrap();
    assert!(r["lhs_group"].as_f64().unwrap() >= 0.0);

    let gen = dir.path().join("gen");
    ok(&["gen", "--config", s(&cfg), "--output-dir", s(&gen)]);
    let truth = magl::format::read_matrix(&gen.join("omega_star.csv")).unwrap().into_block().unwrap();
    let sigma = BlockCov::from(&truth);
    let sigma_path = dir.path().join("sigma.csv");
    magl::format::write_matrix(&sigma_path, &magl::format::MatrixFile::from_block(&sigma.0)).unwrap();
    let conv = dir.path().join("conv");
    ok(&["diagnose", "convexity", "--omega", s(&gen.join("omega_star.csv")), "--mu", "0.01", "--output-dir", s(&conv)]);
    let h: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(conv.join("convexity.json")).unwrap()).unwrap();
    assert_eq!(h["convex"], true);
    assert_eq!(h["consistent"], true);

    let tail = dir.path().join("tail");
    ok(&[
        "diagnose", "tail-bound", "--sigma", s(&sigma_path), "--n", "200", "--trials", "20", "--output-dir", s(&tail),
    ]);
    let trials = std::fs::read_to_string(tail.join("tail_bound_trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 21);

    let fit = dir.path().join("fit");
    ok(&["fit", "--input", s(&sigma_path), "--covariance", "--lambda", "0.05", "--output-dir", s(&fit)]);
    let kkt = dir.path().join("kkt");
    ok(&[
        "diagnose", "kkt", "--omega", s(&fit.join("omega.csv")), "--sigma", s(&sigma_path), "--lambda", "0.05",
        "--output-dir", s(&kkt),
    ]);
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(kkt.join("kkt.json")).unwrap()).unwrap();
    assert_eq!(r["subgradient_feasible"], true);
}

struct BlockCov(magl_core::BlockMatrix);

impl From<&magl_core::BlockMatrix> for BlockCov {
    fn from(omega: &magl_core::BlockMatrix) -> Self {
        let inv = omega.matrix().spd_inverse().unwrap();
        BlockCov(magl_core::BlockMatrix::symmetric(inv, omega.p(), omega.m()).unwrap())
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["--version"]), 0);
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["frobnicate"]), 1);

    let bad_cfg = dir.path().join("bad.toml");
    std::fs::write(&bad_cfg, "p = 10\nunknown_key = 1\n").unwrap();
    assert_eq!(code(&["synth", "--config", s(&bad_cfg)]), 1);

    let cfg = small_config(dir.path(), 4, 2);
    let gen = dir.path().join("gen");
    ok(&["gen", "--config", s(&cfg), "--output-dir", s(&gen)]);
    let data = gen.join("data.csv");
    assert_eq!(code(&["fit", "--input", s(&data), "--output-dir", s(&gen)]), 1);
    assert_eq!(code(&["fit", "--input", s(&data), "--lambda", "-1", "--output-dir", s(&gen)]), 1);
    assert_eq!(code(&["fit", "--input", s(&dir.path().join("missing.csv")), "--lambda", "0.1"]), 2);

    let garbage = dir.path().join("garbage.csv");
    std::fs::write(&garbage, "rows,cols,p,m\n2,2,1,2\n1,x\n").unwrap();
    assert_eq!(code(&["fit", "--input", s(&garbage), "--lambda", "0.1"]), 2);

    // A covariance with a zero diagonal entry cannot be initialized.
    let singular = dir.path().join("singular.csv");
    std::fs::write(&singular, "rows,cols,p,m\n2,2,2,1\n1,0\n0,0\n").unwrap();
    assert_eq!(
        code(&["fit", "--input", s(&singular), "--covariance", "--lambda", "0.1", "--output-dir", s(&gen)]),
        2
    );
}
