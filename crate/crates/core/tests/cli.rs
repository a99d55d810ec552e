use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use steklov::cli::{exit_code_for, RunConfig};
use steklov::mesh::{BoundaryShape, SimplicialMesh};

fn steklov(args: &[&str], dir: &Path, env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_steklov"));
    cmd.args(args).current_dir(dir);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p
}

fn golden(name: &str) -> String {
    fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("tests/golden")
            .join(name),
    )
    .unwrap()
}

fn assert_csv_close(actual: &str, expected: &str, rel: f64) {
    let (a, e): (Vec<&str>, Vec<&str>) = (actual.lines().collect(), expected.lines().collect());
    assert_eq!(a.len(), e.len());
    assert_eq!(a[0], e[0]);
    for (la, le) in a.iter().zip(&e).skip(1) {
        for (x, y) in la.split(',').zip(le.split(',')) {
            match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(x), Ok(y)) => {
                    assert!((x - y).abs() <= rel * y.abs().max(1e-12), "{la} vs {le}")
                }
                _ => assert_eq!(x, y),
            }
        }
    }
}

#[test]
fn verify_disk_matches_golden_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = steklov(&["verify-disk", "--out", "o"], dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("o/verify-disk.csv")).unwrap();
    assert_csv_close(&csv, &golden("verify-disk.csv"), 1e-9);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/verify-disk.json")).unwrap())
            .unwrap();
    assert_eq!(json["command"], "verify-disk");
    assert_eq!(json["pass"], true);
    assert_eq!(json["config_hash"], RunConfig::default().hash().unwrap());
    assert_eq!(json["rows"].as_array().unwrap().len(), 6);
    assert!(fs::read_to_string(dir.path().join("o/verify-disk.txt"))
        .unwrap()
        .contains("pass: true"));
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("command: verify-disk"));
}

#[test]
fn euclidean_ball_fit_matches_golden_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[fit]\nr_grid = [0.3, 0.2, 0.1]\n");
    let out = steklov(
        &[
            "fit-ball",
            "--config",
            cfg.to_str().unwrap(),
            "--level",
            "3",
            "--out",
            "o",
        ],
        dir.path(),
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("o/fit-ball.csv")).unwrap();
    assert_csv_close(&csv, &golden("fit-ball-euclidean-l3.csv"), 1e-9);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        steklov(&["no-such-command"], dir.path(), &[]).status.code(),
        Some(2)
    );
    assert_eq!(
        steklov(&["verify-disk", "--level", "x"], dir.path(), &[])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        steklov(
            &["verify-disk", "--config", "missing.toml"],
            dir.path(),
            &[]
        )
        .status
        .code(),
        Some(2)
    );
    let cfg = write_config(dir.path(), "unknown_key = 3\n");
    assert_eq!(
        steklov(
            &["verify-disk", "--config", cfg.to_str().unwrap()],
            dir.path(),
            &[]
        )
        .status
        .code(),
        Some(2)
    );
    let cfg = write_config(
        dir.path(),
        "[search]\nbudget = 20\nstart = [3.0, 0.0, 0.0, 0.0, 0.0, 0.0]\n",
    );
    let out = steklov(
        &[
            "shape-search",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            "o",
        ],
        dir.path(),
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    let out = steklov(
        &["verify-disk", "--level", "2", "--out", "o"],
        dir.path(),
        &[("STEKLOV_THREADS", "zero")],
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(steklov(&["--help"], dir.path(), &[]).status.code(), Some(0));
}

#[test]
fn tolerance_breach_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[disk]\ntolerance = 1e-12\n");
    let out = steklov(
        &[
            "verify-disk",
            "--config",
            cfg.to_str().unwrap(),
            "--level",
            "2",
            "--out",
            "o",
        ],
        dir.path(),
        &[],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(fs::read_to_string(dir.path().join("o/verify-disk.txt"))
        .unwrap()
        .contains("pass: false"));
}

#[test]
fn strict_mode_fails_on_warnings() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[search]\nbudget = 12\nnu2_tolerance = 0.5\namplitude_tolerance = 0.5\n",
    );
    let args = [
        "shape-search",
        "--config",
        cfg.to_str().unwrap(),
        "--level",
        "2",
        "--out",
        "o",
    ];
    assert_eq!(steklov(&args, dir.path(), &[]).status.code(), Some(0));
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(steklov(&strict, dir.path(), &[]).status.code(), Some(1));
}

#[test]
fn numeric_failures_map_to_three() {
    let err = SimplicialMesh::from_parts(
        2,
        vec![0.0, 0.0, 1.0, 0.0, 2.0, 0.0],
        vec![0, 1, 2],
        0,
        BoundaryShape::UnitSphere,
    )
    .unwrap_err();
    assert_eq!(exit_code_for(&err), 3);
}

#[test]
fn seeded_runs_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[brock]\ndomains = 6\n");
    let run = |out: &str, seed: &str, threads: &str| {
        let args = [
            "isoperimetric",
            "--config",
            cfg.to_str().unwrap(),
            "--level",
            "2",
            "--seed",
            seed,
            "--out",
            out,
        ];
        let status = steklov(&args, dir.path(), &[("STEKLOV_THREADS", threads)]).status;
        assert!(status.code() == Some(0) || status.code() == Some(1));
        fs::read(dir.path().join(out).join("isoperimetric.csv")).unwrap()
    };
    let a = run("a", "7", "1");
    let b = run("b", "7", "4");
    let c = run("c", "8", "4");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn export_mesh_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[mesh]\ndim = 2\nmodes = [[3, 0.1, 0.0]]\n");
    let out = steklov(
        &[
            "export-mesh",
            "--config",
            cfg.to_str().unwrap(),
            "--level",
            "2",
            "--out",
            "o",
        ],
        dir.path(),
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read(dir.path().join("o/mesh.txt")).unwrap();
    let mesh = SimplicialMesh::read_text(text.as_slice()).unwrap();
    assert_eq!(mesh.dim(), 2);
    assert_eq!(mesh.euler_characteristic(), 1);
    let cfg = write_config(dir.path(), "[mesh]\nmodes = [[3, nan, 0.0]]\n");
    let out = steklov(
        &[
            "export-mesh",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            "o",
        ],
        dir.path(),
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
}
