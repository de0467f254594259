use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_enlighten"))
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).env("RUST_LOG", "warn").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read(p: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

const SMALL: &str = "n_seeds = 2\n[dataset]\nn_independent = 3\nn_collinear = 4\n[teacher]\nhorizon = 6\nrollout_samples = 4\nn_aux = 2\nn_eval = 3\n[grid]\nw1_points = 5\nw2_points = 5\n[meta]\nhidden = [8]\nn_tasks = 12\nrounds = 4\nmaml_steps = 30\nmeta_steps_per_round = 3\nn_seeds = 2\nn_heldout = 3\n";

fn small_config(dir: &Path) -> String {
    let p = dir.join("small.toml");
    std::fs::write(&p, SMALL).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn gen_data_writes_21_datasets_idempotently() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["gen-data", "--out", "a"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csvs: Vec<_> = std::fs::read_dir(dir.path().join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    assert_eq!(csvs.len(), 21);
    run(&["gen-data", "--out", "b"], dir.path());
    for name in &csvs {
        assert_eq!(read(dir.path().join("a").join(name)), read(dir.path().join("b").join(name)), "{name}");
    }
    let o = run(&["gen-data", "--out", "c", "--seed", "5"], dir.path());
    assert_eq!(code(&o), 0);
    assert_ne!(read(dir.path().join("a/teaching.csv")), read(dir.path().join("c/teaching.csv")));
}

#[test]
fn malformed_config_exits_with_line_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "seed = 1\n[teacher]\nhorizon = \"long\"\n").unwrap();
    let o = run(&["--config", "bad.toml", "gen-data"], dir.path());
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
    let o = run(&["--config", "missing.toml", "gen-data"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["experiment", "--id", "4"], dir.path())), 1);
    assert_eq!(code(&run(&["frobnicate"], dir.path())), 1);
    assert_eq!(code(&run(&["experiment"], dir.path())), 1);
    assert_eq!(code(&run(&["--help"], dir.path())), 0);
}

#[test]
fn experiments_are_byte_identical_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    for id in ["1", "2", "3"] {
        for out in ["r1", "r2"] {
            let o = run(&["--config", &cfg, "experiment", "--id", id, "--out", out], dir.path());
            assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        }
    }
    let names: Vec<String> = std::fs::read_dir(dir.path().join("r1"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert!(names.contains(&"exp1_curves.csv".to_string()));
    assert!(names.contains(&"exp2_unassisted.csv".to_string()));
    assert!(names.contains(&"exp3_random_seed1.csv".to_string()));
    for n in &names {
        assert_eq!(read(dir.path().join("r1").join(n)), read(dir.path().join("r2").join(n)), "{n}");
    }
    let curves = String::from_utf8(read(dir.path().join("r1/exp1_curves.csv"))).unwrap();
    assert!(curves.starts_with("experiment,teacher,t,metric,mean,ci_half_width,n\n"));
    let teachers: std::collections::BTreeSet<&str> = curves.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(teachers.into_iter().collect::<Vec<_>>(), ["manipulative", "rollout"]);
}

#[test]
fn verify_reports_counts_and_premises() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--out", "v"], dir.path());
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_slice(&read(dir.path().join("v/verify_report.json"))).unwrap();
    assert_eq!(report["no_tutor"]["policies_enumerated"], 81);
    assert_eq!(report["no_tutor"]["status"], "pass");
    assert_eq!(report["tutor"]["status"], "pass");
    let o = run(&["verify", "--out", "v0", "--eta", "0"], dir.path());
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_slice(&read(dir.path().join("v0/verify_report.json"))).unwrap();
    assert_eq!(report["tutor"]["status"], "unsatisfied-premise");
}

#[test]
fn failed_verification_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    // The enlightened learner rejects the independent covariate, so no
    // policy ends at the optimum without manipulation.
    std::fs::write(
        dir.path().join("v.toml"),
        "[verify.learner]\nw1 = 10.0\nw2_enlightened = -100.0\nw0 = -6.0\n",
    )
    .unwrap();
    let o = run(&["--config", "v.toml", "verify", "--out", "v"], dir.path());
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 4, "{text}");
}

#[test]
fn meta_curves_are_reproducible_and_cached() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let o = run(&["--config", &cfg, "meta", "--out", "m1"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("m1/cache/target_seed0.json").exists());
    let o = run(&["--config", &cfg, "meta", "--out", "m2", "--cache", "m1/cache"], dir.path());
    assert_eq!(code(&o), 0);
    assert_eq!(read(dir.path().join("m1/meta_curves.csv")), read(dir.path().join("m2/meta_curves.csv")));
    assert!(!dir.path().join("m2/cache").exists());
    let csv = String::from_utf8(read(dir.path().join("m1/meta_curves.csv"))).unwrap();
    assert!(csv.starts_with("round,teacher,seed,distance,two_shot_loss\n"));
    // 2 teachers x 2 seeds x 4 rounds.
    assert_eq!(csv.lines().count(), 1 + 16);
    assert!(dir.path().join("m1/tasks_seed1.json").exists());
}

#[test]
fn serve_answers_health_and_reports_port_conflicts() {
    let dir = tempfile::tempdir().unwrap();
    let busy = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = busy.local_addr().unwrap().to_string();
    let o = run(&["serve", "--bind", &addr], dir.path());
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot bind"));
    drop(busy);

    let free = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap();
    let mut child = bin()
        .args(["serve", "--bind", &free.to_string(), "--log-dir", "logs"])
        .current_dir(dir.path())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let request = |raw: &str| -> Option<String> {
        let mut s = TcpStream::connect(free).ok()?;
        s.write_all(raw.as_bytes()).ok()?;
        let mut buf = String::new();
        s.read_to_string(&mut buf).ok()?;
        Some(buf)
    };
    let start = Instant::now();
    let body = loop {
        if let Some(b) = request("GET /health HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n") {
            break b;
        }
        assert!(start.elapsed() < Duration::from_secs(30), "server did not start");
        std::thread::sleep(Duration::from_millis(50));
    };
    assert!(body.starts_with("HTTP/1.1 200"), "{body}");
    assert!(body.contains("\"status\":\"ok\""));

    let json = r#"{"teacher":"manipulative"}"#;
    let created = request(&format!(
        "POST /v1/sessions HTTP/1.1\r\nHost: x\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{json}",
        json.len()
    ))
    .unwrap();
    assert!(created.starts_with("HTTP/1.1 201"), "{created}");

    // An interrupt shuts down cleanly and writes the open session's log.
    let st = Command::new("kill").args(["-INT", &child.id().to_string()]).status().unwrap();
    assert!(st.success());
    let status = child.wait().unwrap();
    assert!(status.success(), "{status:?}");
    let logs: Vec<_> = std::fs::read_dir(dir.path().join("logs")).unwrap().collect();
    assert_eq!(logs.len(), 2);
}
