use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_dpbandit");

fn dpbandit(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("DPBANDIT_OUT_DIR");
    if let Some(dir) = env_out {
        cmd.env("DPBANDIT_OUT_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("exp.cfg");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = "d = 10\ns0 = 2\nhorizon = 64\nreplications = 3\nepsilon = 1, inf\nbaselines = random\nwishart_k = 30\n";

#[test]
fn single_round_single_row() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "d = 10\ns0 = 2\nhorizon = 1\nreplications = 1\nepsilon = 1\n");
    let out = tmp.path().join("out");
    let o = dpbandit(&["run", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "policy,epsilon,replication,t,arm,reward,inst_regret,cum_regret,episode,support_size");
    assert_eq!(lines.len(), 2);
    for name in ["summary.csv", "support.csv", "accuracy.csv", "budget.csv", "config.txt"] {
        assert!(out.join(name).exists(), "{name}");
    }
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.starts_with("policy,epsilon,replications,mean_regret,stderr_regret\n"));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(dpbandit(&["run", "--config", &cfg, "--out", a.to_str().unwrap(), "--jobs", "1"], None).status.success());
    assert!(dpbandit(&["run", "--config", &cfg, "--out", b.to_str().unwrap(), "--jobs", "3"], None).status.success());
    for name in ["trajectory.csv", "summary.csv", "support.csv", "accuracy.csv", "budget.csv"] {
        let x = std::fs::read(a.join(name)).unwrap();
        let y = std::fs::read(b.join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
    let traj = std::fs::read_to_string(a.join("trajectory.csv")).unwrap();
    // 3 policies × 3 replications × 64 rounds.
    assert_eq!(traj.lines().count(), 1 + 3 * 3 * 64);
    let reward = traj.lines().nth(1).unwrap().split(',').nth(5).unwrap();
    let mantissa = reward.trim_start_matches('-').split('e').next().unwrap();
    assert_eq!(mantissa.replace('.', "").len(), 17, "{reward}");
}

#[test]
fn env_var_sets_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "d = 10\ns0 = 2\nhorizon = 4\nreplications = 1\nout_dir = ignored\n");
    let env_dir = tmp.path().join("from-env");
    let o = dpbandit(&["run", "--config", &cfg], Some(&env_dir));
    assert!(o.status.success());
    assert!(env_dir.join("trajectory.csv").exists());
    assert!(!Path::new("ignored").exists());
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "d = 10\ns0 = 20\n");
    let o = dpbandit(&["run", "--config", &cfg, "--out", tmp.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    let cfg = write_config(tmp.path(), "epsilon = soon\n");
    assert_eq!(dpbandit(&["run", "--config", &cfg], None).status.code(), Some(2));
    assert_eq!(dpbandit(&["probe", "--mechanism", "coin", "--trials", "10"], None).status.code(), Some(2));
    assert_eq!(dpbandit(&["run"], None).status.code(), Some(2));
}

#[test]
fn io_errors_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.cfg");
    assert_eq!(dpbandit(&["run", "--config", missing.to_str().unwrap()], None).status.code(), Some(3));
    let cfg = write_config(tmp.path(), "d = 10\ns0 = 2\nhorizon = 2\nreplications = 1\n");
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let o = dpbandit(&["run", "--config", &cfg, "--out", blocker.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(dpbandit(&["plot", "--in", tmp.path().join("empty").to_str().unwrap()], None).status.code(), Some(3));
}

#[test]
fn probe_reports_estimate() {
    let o = dpbandit(&["probe", "--mechanism", "laplace-scalar", "--trials", "100000"], None);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let eps_hat: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("epsilon_hat = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((eps_hat - 1.0).abs() < 0.25, "{text}");
    let o = dpbandit(&["probe", "--mechanism", "svt-single-coordinate", "--trials", "20"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn plot_renders_svg() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("run");
    assert!(dpbandit(&["run", "--config", &cfg, "--out", out.to_str().unwrap()], None).status.success());
    let o = dpbandit(&["plot", "--in", out.to_str().unwrap()], None);
    assert!(o.status.success());
    let svg = std::fs::read_to_string(out.join("regret.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 3);
}
