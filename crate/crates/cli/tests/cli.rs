use assert_cmd::Command;
use predicates::prelude::*;

fn rodflux() -> Command {
    Command::cargo_bin("rodflux").unwrap()
}

#[test]
fn list_experiments_prints_registry() {
    rodflux()
        .arg("list-experiments")
        .assert()
        .success()
        .stdout(predicate::str::contains("tagged-msd-setupA"))
        .stdout(predicate::str::contains("pair-gamma-setupB"));
}

#[test]
fn unknown_subcommand_is_usage_error() {
    rodflux().arg("frobnicate").assert().code(2);
}

#[test]
fn unknown_experiment_is_usage_error() {
    rodflux()
        .args(["tagged-msd", "--experiment", "setupZ", "--trials", "10"])
        .assert()
        .code(2)
        .stderr(predicate::str::contains("experiment"));
}

#[test]
fn bad_eps_is_usage_error() {
    rodflux()
        .args(["static-cov", "--eps", "0", "--trials", "10"])
        .assert()
        .code(2)
        .stderr(predicate::str::contains("eps"));
}

#[test]
fn too_few_trials_is_usage_error() {
    rodflux()
        .args(["static-cov", "--trials", "1"])
        .assert()
        .code(2)
        .stderr(predicate::str::contains("trials"));
}

#[test]
fn malformed_config_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    // weights must sum to one; the parser must name the problem
    std::fs::write(
        &cfg,
        "rho = 1.0\n\n[[atoms]]\nv = 1.0\nr = 0.5\nw = 0.9\n",
    )
    .unwrap();
    rodflux()
        .args(["sample", "--config"])
        .arg(&cfg)
        .assert()
        .code(2)
        .stderr(predicate::str::contains("measure"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "bogus_key = 3\n").unwrap();
    rodflux()
        .args(["sample", "--config"])
        .arg(&cfg)
        .assert()
        .code(2)
        .stderr(predicate::str::contains("bogus_key"));
}

#[test]
fn sample_writes_particles() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gas.toml");
    std::fs::write(
        &cfg,
        "rho = 1.0\n\n[[atoms]]\nv = -1.0\nr = 0.5\nw = 0.5\n\n[[atoms]]\nv = 1.0\nr = 0.5\nw = 0.5\n",
    )
    .unwrap();
    rodflux()
        .args(["sample", "--eps", "0.1", "--seed", "3", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(dir.path())
        .assert()
        .success();
    let body = std::fs::read_to_string(dir.path().join("particles.csv")).unwrap();
    assert!(body.starts_with("id,x,v,r,atom\n"));
    assert!(body.lines().count() > 10);
}

#[test]
fn experiment_run_writes_artifacts_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    rodflux()
        .args([
            "static-cov",
            "--eps",
            "0.05",
            "--trials",
            "300",
            "--seed",
            "5",
            "--out",
        ])
        .arg(dir.path())
        .assert()
        .success()
        .stdout(predicate::str::contains("PASS"));
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.starts_with("statistic,mean,variance,stderr,target,z,pass\n"));
    let trials = std::fs::read_to_string(dir.path().join("trials.csv")).unwrap();
    assert!(trials.starts_with("trial,statistic_name,value\n"));
    let verdict: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("verdict.json")).unwrap())
            .unwrap();
    assert_eq!(verdict["pass"], serde_json::Value::Bool(true));
    assert_eq!(verdict["trials"], serde_json::json!(300));
}

#[test]
fn identical_seeds_give_identical_artifacts() {
    let run = |dir: &std::path::Path| {
        rodflux()
            .args([
                "tagged-msd",
                "--eps",
                "0.05",
                "--trials",
                "50",
                "--seed",
                "9",
                "--out",
            ])
            .arg(dir)
            .assert()
            .success();
        std::fs::read(dir.join("trials.csv")).unwrap()
    };
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    assert_eq!(run(d1.path()), run(d2.path()));
}

#[test]
fn threads_flag_does_not_change_results() {
    let run = |threads: &str| {
        let dir = tempfile::tempdir().unwrap();
        rodflux()
            .args([
                "pair-cov",
                "--experiment",
                "pair-gamma-setupB",
                "--eps",
                "0.05",
                "--trials",
                "40",
                "--seed",
                "4",
                "--threads",
                threads,
                "--out",
            ])
            .arg(dir.path())
            .assert()
            .success();
        std::fs::read(dir.path().join("trials.csv")).unwrap()
    };
    assert_eq!(run("1"), run("2"));
}

#[test]
fn env_var_sets_threads() {
    let dir = tempfile::tempdir().unwrap();
    rodflux()
        .env("RODFLUX_THREADS", "1")
        .args([
            "euler-field",
            "--eps",
            "0.02",
            "--trials",
            "200",
            "--seed",
            "2",
            "--out",
        ])
        .arg(dir.path())
        .assert()
        .success();
}

#[test]
fn json_format_writes_summary_json() {
    let dir = tempfile::tempdir().unwrap();
    rodflux()
        .args([
            "diffusive-field",
            "--eps",
            "0.1",
            "--trials",
            "40",
            "--seed",
            "6",
            "--format",
            "json",
            "--out",
        ])
        .arg(dir.path())
        .assert()
        .success();
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert!(summary.as_array().unwrap().iter().any(|s| s["statistic"]
        .as_str()
        .unwrap()
        .starts_with("var_flat")));
}

#[test]
fn report_emits_dat_series() {
    let dir = tempfile::tempdir().unwrap();
    rodflux()
        .args([
            "fourier",
            "--eps",
            "0.1",
            "--trials",
            "30",
            "--seed",
            "8",
            "--out",
        ])
        .arg(dir.path())
        .assert()
        .success();
    rodflux()
        .args(["report", "--out"])
        .arg(dir.path())
        .assert()
        .success();
    let dat = std::fs::read_to_string(dir.path().join("report-mode_sq_t25.dat")).unwrap();
    assert!(dat.starts_with("# trial mode_sq_t25\n"));
    assert!(dat.lines().count() == 31);
}

#[test]
fn window_config_narrows_sample() {
    let dir = tempfile::tempdir().unwrap();
    let base = "rho = 1.0\n\n[[atoms]]\nv = 1.0\nr = 0.5\nw = 1.0\n";
    let run = |name: &str, window_line: &str| {
        let cfg = dir.path().join(name).with_extension("toml");
        let out = dir.path().join(name);
        std::fs::write(&cfg, format!("{base}\n[run]\n{window_line}\n")).unwrap();
        rodflux()
            .args(["sample", "--eps", "0.1", "--seed", "7", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .assert()
            .success();
        std::fs::read_to_string(out.join("particles.csv"))
            .unwrap()
            .lines()
            .count()
    };
    let narrow = run("narrow", "window = [-1.0, 1.0]");
    let auto = run("auto", "window = \"auto\"");
    // auto falls back to the default [-10, 10]; ten times the narrow span
    assert!(auto > 3 * narrow, "auto {auto} vs narrow {narrow}");
}

#[test]
fn inverted_window_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        "rho = 1.0\n\n[[atoms]]\nv = 1.0\nr = 0.5\nw = 1.0\n\n[run]\nwindow = [2.0, -2.0]\n",
    )
    .unwrap();
    rodflux()
        .args(["sample", "--config"])
        .arg(&cfg)
        .assert()
        .code(2)
        .stderr(predicate::str::contains("window"));
}

#[test]
fn config_file_drives_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "[experiment]\nname = \"effective-velocity-setupA\"\n\n\
             [run]\neps = 0.05\ntrials = 80\nseed = 12\nout = \"{}\"\n",
            dir.path().display()
        ),
    )
    .unwrap();
    rodflux()
        .args(["tagged-msd", "--config"])
        .arg(&cfg)
        .assert()
        .success()
        .stdout(predicate::str::contains("effective-velocity-setupA"));
}
