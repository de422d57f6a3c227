//! End-to-end checks of the binary: flag handling, exit codes, and
//! byte-level determinism of the CSV artifacts.

use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_esg-incentives"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn solve_prints_the_benchmark_diagonal() {
    let out = run(&["solve", "--config", "table1", "--gamma-p", "0"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("z_Q,1,1,0.4768"));
}

#[test]
fn solve_accepts_a_real_config_path() {
    let dir = std::env::temp_dir().join("esg-incentives-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let config = dir.join("economy.json");
    std::fs::write(
        &config,
        r#"{"n": 2, "c": 1.0, "gamma": 1.0, "nu": 1.0, "rho": 0.3, "sigma": 1.0, "gamma_P": 0.5}"#,
    )
    .unwrap();
    let out_path = dir.join("solve.csv");
    let out = run(&[
        "solve",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let written = std::fs::read_to_string(&out_path).unwrap();
    assert!(written.starts_with("quantity,i,j,value\n"));
}

#[test]
fn malformed_config_exits_2_with_a_diagnostic() {
    let dir = std::env::temp_dir().join("esg-incentives-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let config = dir.join("broken.json");
    std::fs::write(&config, "{ this is not json").unwrap();
    let out = run(&["solve", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("cannot parse config"));
}

#[test]
fn invalid_parameters_exit_2() {
    let dir = std::env::temp_dir().join("esg-incentives-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let config = dir.join("invalid.json");
    std::fs::write(
        &config,
        r#"{"n": 2, "c": 1.0, "gamma": 1.0, "nu": 1.0, "rho": [0.3, 1.5], "sigma": 1.0, "gamma_P": 0.5}"#,
    )
    .unwrap();
    let out = run(&["solve", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("correlation out of open interval"));
}

#[test]
fn unknown_preset_exits_2() {
    let out = run(&["solve", "--config", "table9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("neither a file nor a bundled preset"));
}

#[test]
fn sweep_single_point_matches_solve() {
    let sweep = run(&["sweep", "--config", "table2", "--grid", "3:3:1"]);
    assert!(sweep.status.success());
    let sweep_csv = stdout(&sweep);
    let row: Vec<&str> = sweep_csv.lines().nth(1).unwrap().split(',').collect();
    let solve = run(&["solve", "--config", "table2", "--gamma-p", "3"]);
    let solve_csv = stdout(&solve);
    // zS_1 from the sweep equals the z_S,1 row of the solve dump.
    let z_s_1 = solve_csv
        .lines()
        .find(|l| l.starts_with("z_S,1,"))
        .unwrap()
        .rsplit(',')
        .next()
        .unwrap();
    assert_eq!(row[1], z_s_1);
}

#[test]
fn sweep_rejects_descending_grids() {
    let out = run(&["sweep", "--config", "table1", "--grid", "10:0:1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("grid must increase"));
}

#[test]
fn figure_presets_drive_the_sweep() {
    let out = run(&["sweep", "--preset", "fig4"]);
    assert!(out.status.success());
    let csv = stdout(&out);
    assert_eq!(csv.lines().count(), 42);
    assert!(csv.lines().nth(41).unwrap().starts_with("40,"));
}

#[test]
fn flip_threshold_matches_the_desk_value_and_rejects_stable_rows() {
    let out = run(&[
        "flip-threshold",
        "--config",
        "table3",
        "--row",
        "3",
        "--bracket",
        "0.1,2",
        "--tol",
        "1e-4",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let value: f64 = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((value - 0.629).abs() <= 0.01);

    let stable = run(&["flip-threshold", "--config", "table1", "--row", "1"]);
    assert_eq!(stable.status.code(), Some(2));
    assert!(stderr(&stable).contains("no sign change"));
}

#[test]
fn convergence_emits_the_fixed_schema_and_validates_decades() {
    let out = run(&["convergence", "--config", "table2", "--decades", "2:4"]);
    assert!(out.status.success());
    let csv = stdout(&out);
    assert!(csv.starts_with(
        "gamma_P,resid_W,err_x,err_iota,gap_g,scaled_resid,scaled_err,scaled_iota,scaled_gap\n"
    ));
    assert_eq!(csv.lines().count(), 4);

    let single = run(&["convergence", "--config", "table2", "--decades", "2:2"]);
    assert!(single.status.success());
    assert_eq!(stdout(&single).lines().count(), 2);

    let bad = run(&["convergence", "--config", "table2", "--decades", "4:2"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("grid must increase"));
}

#[test]
fn constrained_reports_verdicts() {
    let out = run(&["constrained", "--config", "table2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("agent,zS_bar,zQ_bar_diag"));
    assert!(text.contains("mixed_sign_verdict,mixed"));

    let hom = run(&["constrained", "--config", "table1"]);
    assert!(stdout(&hom).contains("mixed_sign_verdict,all-zero"));

    let flip = run(&["constrained", "--config", "table3"]);
    assert!(stdout(&flip).contains("aligned-negative"));
}

#[test]
fn simulate_is_byte_deterministic_and_validates_paths() {
    let dir = std::env::temp_dir().join("esg-incentives-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let first = dir.join("sim1.csv");
    let second = dir.join("sim2.csv");
    for path in [&first, &second] {
        let out = run(&[
            "simulate",
            "--config",
            "table1",
            "--paths",
            "4000",
            "--seed",
            "7",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        assert!(stdout(&out).contains("principal_within_3se,true"));
    }
    let a = std::fs::read(&first).unwrap();
    let b = std::fs::read(&second).unwrap();
    assert_eq!(a, b, "same seed must give identical CSV bytes");
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("agent,CE,SE,r,pass\n"));
    assert_eq!(text.lines().count(), 7);

    let bad = run(&["simulate", "--config", "table1", "--paths", "0"]);
    assert_eq!(bad.status.code(), Some(2));
}
