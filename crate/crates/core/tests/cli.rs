use std::process::Command;

use cipeem::experiment::{read_csv, CSV_COLUMNS};
use cipeem::forms::Method;

fn cipeem() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cipeem"));
    c.env("RUST_LOG", "error");
    c
}

fn run(args: &[&str]) -> (bool, String, String) {
    let out = cipeem().args(args).output().unwrap();
    (
        out.status.success(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn mesh_info_counts() {
    let (ok, out, _) = run(&["mesh-info", "--n", "2"]);
    assert!(ok);
    assert!(out.contains("tets = 48"), "{out}");
    assert!(out.contains("dofs = 196"), "{out}");
}

#[test]
fn solve_writes_csv_vtk_and_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let vtk = dir.path().join("e.vtk");
    let mtx = dir.path().join("a.mtx");
    let (ok, out, err) = run(&[
        "solve",
        "--kappa",
        "3",
        "--n",
        "3",
        "--method",
        "eem,cip",
        "--gamma",
        "-0.05-0.01i,-0.03-0.01i,0",
        "--out",
        csv.to_str().unwrap(),
        "--vtk",
        vtk.to_str().unwrap(),
        "--matrix-out",
        mtx.to_str().unwrap(),
    ]);
    assert!(ok, "{err}");
    assert!(out.starts_with("# config: "));
    assert!(out.contains("gamma=-0.05-0.01i,-0.03-0.01i,0+0i"), "{out}");

    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
    assert!(lines.next().unwrap().starts_with("# config: kappa=3 "));
    let records = read_csv(&csv).unwrap();
    assert_eq!(records.len(), 2);
    assert_eq!(records[0].method, Method::Eem);
    assert_eq!(records[1].method, Method::Cip);
    assert!(records.iter().all(|r| r.n == 3 && r.residual <= 1e-10));

    let vtk = std::fs::read_to_string(&vtk).unwrap();
    for tag in [
        "VECTORS E_re double",
        "VECTORS E_im double",
        "VECTORS curlE_re double",
        "VECTORS curlE_im double",
    ] {
        assert!(vtk.contains(tag));
    }
    let mtx = std::fs::read_to_string(&mtx).unwrap();
    assert!(mtx.starts_with("%%MatrixMarket matrix coordinate complex general"));
}

#[test]
fn csv_appends_one_header() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    for n in ["2", "3"] {
        let (ok, _, err) = run(&[
            "solve",
            "--kappa",
            "2",
            "--n",
            n,
            "--out",
            csv.to_str().unwrap(),
        ]);
        assert!(ok, "{err}");
    }
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("method,")).count(), 1);
    assert_eq!(
        text.lines().filter(|l| l.starts_with("# config:")).count(),
        2
    );
    assert_eq!(read_csv(&csv).unwrap().len(), 2);
}

#[test]
fn config_file_and_cli_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# study settings\n[common]\nkappa = 2\nn = 2\n\n[solve]\nn = 3\nmethod = cip\ngamma = zero\n\n[convergence]\nn = 9\n",
    )
    .unwrap();
    let (ok, out, err) = run(&["solve", "--config", cfg.to_str().unwrap()]);
    assert!(ok, "{err}");
    assert!(
        out.contains("kappa=2 ") && out.contains(" n=3 ") && out.contains("methods=CIP"),
        "{out}"
    );
    let (ok, out, _) = run(&["solve", "--config", cfg.to_str().unwrap(), "--n", "2"]);
    assert!(ok);
    assert!(out.contains(" n=2 "), "{out}");
}

#[test]
fn bad_arguments_fail() {
    assert!(!run(&["solve", "--method", "dg"]).0);
    assert!(!run(&["solve", "--gamma", "1,2"]).0);
    assert!(!run(&["solve", "--kappa", "-1"]).0);
    assert!(!run(&["solve", "--n", "0"]).0);
    let (ok, _, err) = run(&["solve", "--n", "60"]);
    assert!(!ok);
    assert!(err.contains("allow_large"), "{err}");
}

#[test]
fn convergence_prints_slopes() {
    let (ok, out, err) = run(&[
        "convergence",
        "--kappa",
        "2",
        "--n-list",
        "2,4,8",
        "--method",
        "eem",
    ]);
    assert!(ok, "{err}");
    let line = out.lines().find(|l| l.starts_with("# slopes EEM")).unwrap();
    let slope: f64 = line.split_whitespace().nth(6).unwrap().parse().unwrap();
    assert!((0.75..=1.25).contains(&slope), "{line}");
}

#[test]
fn ksweep_uses_fixed_kappa_h0() {
    let (ok, out, err) = run(&[
        "ksweep",
        "--kappa-list",
        "2,4",
        "--kappa-h0",
        "1",
        "--method",
        "eem",
    ]);
    assert!(ok, "{err}");
    assert!(out.contains("# EEM kappa 2 n 2"), "{out}");
    assert!(out.contains("# EEM kappa 4 n 4"), "{out}");
}
