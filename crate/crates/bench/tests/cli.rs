use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn spdflow(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_spdflow"));
    cmd.args(args).env_remove("SPDFLOW_SEED");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn spdflow")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn write_config(dir: &Path, json: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_string()
}

const INTEGRATORS: [&str; 5] = ["euler", "rk4", "riemannian_rk4", "lie_euler", "rkmk4"];

#[test]
fn run_preset_writes_all_files() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("out");
    let out = spdflow(&["run", "--preset", "case2", "--out", dir.to_str().unwrap()], &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let summary = String::from_utf8(out.stdout).unwrap();
    assert!(summary.starts_with("integrator,final_frob,final_affine,max_frob,non_spd_points,failure\n"));

    for name in INTEGRATORS.iter().chain(&["reference"]) {
        let csv = read(&dir, &format!("{name}.csv"));
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,p_11,p_12,p_22,min_eig,spd"));
        assert_eq!(lines.count(), 11, "{name}");
    }
    let errors = read(&dir, "errors.csv");
    let mut lines = errors.lines();
    assert_eq!(lines.next(), Some("t,integrator,frob_dist,affine_dist_or_NA,spd"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 5 * 11);
    for r in &rows {
        assert_eq!(r.len(), 5);
        assert_eq!(r[3] != "NA", r[4] == "true", "{r:?}");
    }
    // Euclidean Euler leaves the cone on this preset.
    assert!(rows.iter().any(|r| r[1] == "euler" && r[4] == "false"));
}

#[test]
fn outputs_are_byte_stable() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        let out = spdflow(&["run", "--preset", "case1", "--out", d.to_str().unwrap()], &[]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    for name in ["errors.csv", "reference.csv", "rkmk4.csv", "euler.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

fn linear_config(points: usize, parallel: bool) -> String {
    format!(
        r#"{{
  "model": {{"kind": "linear", "a": [[-1.0, 0.5], [0.0, -0.3]]}},
  "p0": [[1.0, 0.2], [0.2, 0.5]],
  "grid": {{"t0": 0.0, "t1": 1.0, "points": {points}}},
  "refine": 16,
  "parallel": {parallel}
}}"#
    )
}

#[test]
fn two_point_grid_gives_two_rows() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &linear_config(2, false));
    let dir = tmp.path().join("out");
    let out = spdflow(&["run", "--config", &cfg, "--out", dir.to_str().unwrap()], &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    for name in INTEGRATORS {
        assert_eq!(read(&dir, &format!("{name}.csv")).lines().count(), 3);
    }
    assert_eq!(read(&dir, "errors.csv").lines().count(), 1 + 2 * 5);
}

#[test]
fn parallel_matches_sequential() {
    let tmp = TempDir::new().unwrap();
    let mut dirs = Vec::new();
    for parallel in [false, true] {
        let sub = tmp.path().join(format!("p{parallel}"));
        fs::create_dir_all(&sub).unwrap();
        let cfg = write_config(&sub, &linear_config(21, parallel));
        let dir = sub.join("out");
        let out = spdflow(&["run", "--config", &cfg, "--out", dir.to_str().unwrap()], &[]);
        assert!(out.status.success(), "{}", stderr(&out));
        dirs.push(dir);
    }
    for name in ["errors.csv", "rk4.csv", "rkmk4.csv", "reference.csv"] {
        assert_eq!(read(&dirs[0], name), read(&dirs[1], name), "{name}");
    }
}

#[test]
fn seed_env_overrides_config_seed() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"model": {"kind": "sinusoidal_random", "n": 3, "scale": 0.5},
            "grid": {"t0": 0.0, "t1": 0.5, "points": 3}, "refine": 8, "seed": 4}"#,
    );
    let run = |name: &str, envs: &[(&str, &str)]| {
        let dir = tmp.path().join(name);
        let out = spdflow(&["run", "--config", &cfg, "--out", dir.to_str().unwrap()], envs);
        assert!(out.status.success(), "{}", stderr(&out));
        read(&dir, "reference.csv")
    };
    let base = run("base", &[]);
    assert_eq!(run("same", &[("SPDFLOW_SEED", "4")]), base);
    assert_ne!(run("other", &[("SPDFLOW_SEED", "5")]), base);

    let bad = spdflow(&["run", "--config", &cfg], &[("SPDFLOW_SEED", "abc")]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).starts_with("error kind=config"));
}

#[test]
fn m0_flag_changes_gbm_run() {
    let tmp = TempDir::new().unwrap();
    let run = |name: &str, extra: &[&str]| {
        let dir = tmp.path().join(name);
        let mut args = vec!["run", "--preset", "case2", "--out", dir.to_str().unwrap()];
        args.extend_from_slice(extra);
        let out = spdflow(&args, &[]);
        assert!(out.status.success(), "{}", stderr(&out));
        read(&dir, "reference.csv")
    };
    let zero = run("zero", &[]);
    assert_eq!(run("explicit", &["--m0", "0,0"]), zero);
    assert_ne!(run("shifted", &["--m0", "0.3,-0.2"]), zero);

    let wrong_len = spdflow(&["run", "--preset", "case2", "--m0", "1,2,3"], &[]);
    assert_eq!(wrong_len.status.code(), Some(2));
}

#[test]
fn config_errors_exit_2() {
    let cases: Vec<Vec<&str>> = vec![
        vec!["run", "--preset", "case9"],
        vec!["run"],
        vec!["run", "--preset", "case1", "--config", "x.json"],
        vec!["run", "--config", "/nonexistent/spdflow.json"],
        vec!["bounds", "--preset", "case2", "--field", "midpoint"],
        vec!["convergence", "--model", "frozen", "--hs", "0.1,0.05"],
        vec!["frobnicate"],
    ];
    for args in cases {
        let out = spdflow(&args, &[]);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
        let err = stderr(&out);
        assert!(err.starts_with("error kind=config message="), "{args:?}: {err}");
        assert_eq!(err.lines().count(), 1, "{args:?}: {err}");
    }

    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), r#"{"model": {"kind": "linear", "a": [[1.0]]}, "grid": {"t0": 0, "t1": 1, "points": 2}, "extra": 1}"#);
    assert_eq!(spdflow(&["run", "--config", &cfg], &[]).status.code(), Some(2));
}

#[test]
fn reference_leaving_the_cone_exits_3() {
    // dP/dt = -I from P = 0.1 I reaches the boundary at t = 0.1.
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"model": {"kind": "riccati", "a": [[0.0, 0.0], [0.0, 0.0]], "b": [[0.0], [0.0]],
                      "q": [[1.0, 0.0], [0.0, 1.0]], "r": [[1.0]]},
            "p0": [[0.1, 0.0], [0.0, 0.1]],
            "grid": {"t0": 0.0, "t1": 1.0, "points": 11}}"#,
    );
    let out = spdflow(&["run", "--config", &cfg], &[]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).starts_with("error kind=numerical message="));
}

#[test]
fn bounds_prints_both_fields() {
    let out = spdflow(&["bounds", "--preset", "case2"], &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("field=euler rho_stay="));
    assert!(lines[1].starts_with("field=rk4 rho_stay="));
    assert!(lines.iter().all(|l| l.ends_with("regime=bounded")));

    let one = spdflow(&["bounds", "--preset", "case2", "--field", "rk4"], &[]);
    assert_eq!(String::from_utf8(one.stdout).unwrap().trim_end(), lines[1]);
}

#[test]
fn convergence_writes_csv() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("conv");
    let out = spdflow(
        &["convergence", "--model", "frozen", "--hs", "0.1,0.05,0.025,0.0125", "--out", dir.to_str().unwrap()],
        &[],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("lie_euler slope=exact"));
    assert!(text.contains("rkmk4 slope=exact"));
    let csv = read(&dir, "convergence.csv");
    assert!(csv.starts_with("h,integrator,error\n"));
    assert_eq!(csv.lines().count(), 1 + 4 * 5);
}
