use std::path::Path;
use std::process::{Command, Output};

fn spinelab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinelab"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn emitted_config_is_accepted_back() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinelab(dir.path(), &["emit-config", "--out-dir", "cfg"]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(dir.path().join("cfg/spinelab.toml")).unwrap();
    assert!(text.lines().filter(|l| l.starts_with('#')).count() > 50);
    let o = spinelab(
        dir.path(),
        &[
            "--config",
            "cfg/spinelab.toml",
            "figure8",
            "--speeds",
            "1.0",
            "--out-dir",
            "f8",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn figure8_writes_table_i_layout() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinelab(dir.path(), &["figure8", "--out-dir", "out"]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("out/figure8_metrics.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "v_x (m/s),Total Time (s),Average Path Tracking Error (m),Average Velocity Tracking Error (m/s)"
    );
    assert_eq!(lines.count(), 4);

    let o = spinelab(
        dir.path(),
        &[
            "--format",
            "json",
            "figure8",
            "--speeds",
            "2.0",
            "--out-dir",
            "json",
        ],
    );
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("json/figure8_metrics.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(v[0]["v_x (m/s)"], 2.0);
    assert!(v[0]["Average Path Tracking Error (m)"].as_f64().unwrap() >= 0.0);
}

#[test]
fn drop_test_writes_table_ii_layout() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinelab(
        dir.path(),
        &[
            "drop-test",
            "--trials",
            "3",
            "--orientation",
            "0,0",
            "--orientation",
            "180,0",
            "--out-dir",
            "out",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/drop_summary.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "Init. Orient,Robot Cfg,Success rates (%),Trials,Successes"
    );
    assert_eq!(lines.len(), 5);
    assert!(
        lines[1].starts_with("upright,Rigid-trunk,100.0,3,3"),
        "{}",
        lines[1]
    );
    assert!(
        lines[3].starts_with("r=180°,Rigid-trunk,0.0,3,0"),
        "{}",
        lines[3]
    );
}

#[test]
fn drop_reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "--seed",
        "9",
        "drop-test",
        "--trials",
        "4",
        "--orientation",
        "135,45",
    ];
    let a = spinelab(dir.path(), &[&args[..], &["--out-dir", "a"]].concat());
    let b = spinelab(dir.path(), &[&args[..], &["--out-dir", "b"]].concat());
    assert!(a.status.success() && b.status.success());
    let read =
        |d: &str| std::fs::read_to_string(dir.path().join(d).join("drop_trials.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
}

#[test]
fn rollout_then_gait_analysis_of_its_log() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinelab(
        dir.path(),
        &["rollout", "--steps", "60", "--vx", "0", "--out-dir", "out"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let contacts = std::fs::read_to_string(dir.path().join("out/contacts.csv")).unwrap();
    assert!(contacts.starts_with("t,LF,RF,LH,RH\n"));
    assert_eq!(contacts.lines().count(), 61);
    // a standing robot has no stride to analyse
    let o = spinelab(
        dir.path(),
        &[
            "analyze-gait",
            "--contacts",
            "out/trajectory.csv",
            "--out-dir",
            "g",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn analyze_constructed_gallop() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinelab(
        dir.path(),
        &["analyze-gait", "--pattern", "rotary-g2", "--out-dir", "out"],
    );
    assert!(o.status.success());
    assert!(
        stdout(&o).starts_with("rotary_gallop (G2)"),
        "{}",
        stdout(&o)
    );
    let o = spinelab(
        dir.path(),
        &[
            "analyze-gait",
            "--contacts",
            "out/gait_diagram.csv",
            "--out-dir",
            "x",
        ],
    );
    // a gait diagram is not a contact log
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn short_training_run_and_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let o = spinelab(
        dir.path(),
        &[
            "train",
            "--env",
            "toy-1d",
            "--iterations",
            "3",
            "--quiet",
            "--out-dir",
            "t",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let log = std::fs::read_to_string(dir.path().join("t/training_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 4);
    let cur = std::fs::read_to_string(dir.path().join("t/curriculum.csv")).unwrap();
    assert!(cur.starts_with("iteration,linear_fraction,angular_fraction,"));
    let ckpt: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("t/checkpoint.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(ckpt["format"], "spinelab-policy");
    assert_eq!(ckpt["version"], 1);
    assert_eq!(ckpt["env"], "toy-1d");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(spinelab(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(
        spinelab(dir.path(), &["no-such-command"]).status.code(),
        Some(1)
    );
    assert_eq!(
        spinelab(dir.path(), &["figure8", "--speeds", "-1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        spinelab(dir.path(), &["--config", "missing.toml", "figure8"])
            .status
            .code(),
        Some(1)
    );
    std::fs::write(dir.path().join("bad.toml"), "[reward]\nsigma = -1.0\n").unwrap();
    let o = spinelab(dir.path(), &["--config", "bad.toml", "figure8"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sigma"));

    std::fs::write(dir.path().join("stiff.toml"), "[contact]\nk_n = 1e12\n").unwrap();
    let o = spinelab(
        dir.path(),
        &[
            "--config",
            "stiff.toml",
            "rollout",
            "--steps",
            "10",
            "--out-dir",
            "s",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}
