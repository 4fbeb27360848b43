use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rkbayes"))
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().expect("spawn rkbayes");
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn write_data(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("data.csv");
    run_ok(bin().args(["simulate", "--preset", "table2-n100", "--seed", "9", "--write-data"]).arg(&path));
    path
}

#[test]
fn solve_writes_trajectory_columns() {
    let text = run_ok(bin().args(["solve", "--model", "null-q3", "--r-n", "4"]));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,f,f_deriv_1,f_deriv_2"));
    assert_eq!(lines.next(), Some("0,1,1,1"));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn simulated_data_has_xy_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_data(dir.path());
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.starts_with("x,y\n"));
    assert_eq!(text.lines().count(), 101);
}

#[test]
fn fit_commands_produce_draws() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path());
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"n_draws": 40}"#).unwrap();

    let out = dir.path().join("rksb.csv");
    let rksb_cfg = dir.path().join("rksb.json");
    std::fs::write(&rksb_cfg, r#"{"chain_length": 600, "burn_in": 100}"#).unwrap();
    run_ok(bin().args(["fit-rksb", "--seed", "2", "--data"]).arg(&data).arg("--config").arg(&rksb_cfg).arg("--out").arg(&out));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("theta1,sigma2\n"));
    assert_eq!(text.lines().count(), 501);

    for (cmd, extra) in [
        ("fit-rktb", vec!["--kn", "3", "--m", "5"]),
        ("fit-ts", vec!["--weight", "sine", "--m", "7"]),
    ] {
        let out = dir.path().join(format!("{cmd}.csv"));
        run_ok(bin().arg(cmd).args(&extra).arg("--data").arg(&data).arg("--config").arg(&cfg).arg("--out").arg(&out));
        assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 41, "{cmd}");
    }

    let json = run_ok(bin().args(["fit-nls", "--data"]).arg(&data));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let theta = v["fit"]["theta"][0].as_f64().unwrap();
    let ci = &v["intervals"][0];
    assert!(ci[0].as_f64().unwrap() < theta && theta < ci[1].as_f64().unwrap());
}

#[test]
fn same_seed_same_draws() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path());
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"n_draws": 20}"#).unwrap();
    let run = || run_ok(bin().args(["fit-ts", "--seed", "4", "--data"]).arg(&data).arg("--config").arg(&cfg));
    assert_eq!(run(), run());
}

#[test]
fn simulate_reports_every_method() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.json");
    std::fs::write(
        &cfg,
        r#"{"n": 40, "replications": 2, "methods": ["NLS", "TS"], "ts": {"n_draws": 30}}"#,
    )
    .unwrap();
    let json = dir.path().join("report.json");
    let csv = run_ok(bin().args(["simulate", "--config"]).arg(&cfg).arg("--json").arg(&json));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("method,coverage,coverage_se,length,length_se"));
    assert!(lines.next().unwrap().starts_with("NLS,"));
    assert!(lines.next().unwrap().starts_with("TS,"));
    let report: serde_json::Value = serde_json::from_reader(std::fs::File::open(json).unwrap()).unwrap();
    assert_eq!(report["records"].as_array().unwrap().len(), 4);
}

#[test]
fn errors_exit_nonzero() {
    let out = bin().args(["solve", "--model", "lorenz"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("lorenz"));
    let out = bin().args(["solve", "--theta", "20"]).output().unwrap();
    assert!(!out.status.success());
    let out = bin().args(["simulate", "--preset", "table9"]).output().unwrap();
    assert!(!out.status.success());
}
