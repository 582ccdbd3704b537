use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn groundhold(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_groundhold"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn generate(dir: &Path, preset: &str, seed: &str, file: &str) {
    let out = groundhold(
        &[
            "generate", "--preset", preset, "--seed", seed, "--out", file,
        ],
        dir,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn solve_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "tiny", "0", "tiny.json");
    let out = groundhold(
        &[
            "solve",
            "--instance",
            "tiny.json",
            "--max-iter",
            "5000",
            "--seed",
            "7",
            "--out",
            "report.json",
        ],
        dir.path(),
    );
    assert!(matches!(code(&out), 0 | 3));
    let text = fs::read_to_string(dir.path().join("report.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["seed"], 7);
    assert!(json["runtime_seconds"].is_number());
    assert_eq!(code(&out) == 0, json["feasible"] == true);
}

#[test]
fn infeasible_preset_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "infeasible", "1", "bad.json");
    let out = groundhold(
        &[
            "solve",
            "--instance",
            "bad.json",
            "--max-iter",
            "300",
            "--out",
            "r.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 3);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(json["feasible"], false);
    assert_eq!(json["min_violations"], 1);

    let oracle = groundhold(
        &["verify", "--instance", "bad.json", "--brute-force"],
        dir.path(),
    );
    assert_eq!(code(&oracle), 0);
    let json: serde_json::Value = serde_json::from_slice(&oracle.stdout).unwrap();
    assert_eq!(json["feasible"], false);
}

#[test]
fn report_converts_formats() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "tiny", "2", "t.json");
    groundhold(
        &[
            "solve",
            "--instance",
            "t.json",
            "--seed",
            "1",
            "--out",
            "r.json",
            "--svg",
            "h.svg",
        ],
        dir.path(),
    );
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();

    let csv = groundhold(&["report", "--in", "r.json", "--format", "csv"], dir.path());
    assert_eq!(code(&csv), 0);
    let csv = String::from_utf8(csv.stdout).unwrap();
    assert!(csv.contains(&format!("total_delay,{}\n", json["total_delay"])));
    assert!(csv.contains(&format!("waiting_flights,{}\n", json["waiting_flights"])));

    let md = groundhold(
        &[
            "report", "--in", "r.json", "--format", "md", "--out", "r.md",
        ],
        dir.path(),
    );
    assert_eq!(code(&md), 0);
    assert!(fs::read_to_string(dir.path().join("r.md"))
        .unwrap()
        .starts_with("## Summary"));
    assert!(fs::read_to_string(dir.path().join("h.svg"))
        .unwrap()
        .starts_with("<svg"));
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "tiny", "4", "t.json");
    for name in ["a.json", "b.json"] {
        groundhold(
            &[
                "solve",
                "--instance",
                "t.json",
                "--seed",
                "9",
                "--starts",
                "2",
                "--no-timing",
                "--out",
                name,
            ],
            dir.path(),
        );
    }
    let a = fs::read(dir.path().join("a.json")).unwrap();
    let b = fs::read(dir.path().join("b.json")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn verify_accepts_solver_output() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "tiny", "6", "t.json");
    let out = groundhold(
        &["solve", "--instance", "t.json", "--out", "r.json"],
        dir.path(),
    );
    let check = groundhold(
        &["verify", "--instance", "t.json", "--report", "r.json"],
        dir.path(),
    );
    if code(&out) == 0 {
        assert_eq!(code(&check), 0);
        let json: serde_json::Value = serde_json::from_slice(&check.stdout).unwrap();
        assert_eq!(json["ok"], true);
    } else {
        assert_eq!(code(&check), 3);
    }
}

#[test]
fn scenario_flags_override_instance() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "tiny", "3", "t.json");
    let base = groundhold(&["inspect", "--instance", "t.json"], dir.path());
    let loose = groundhold(
        &[
            "inspect",
            "--instance",
            "t.json",
            "--cap",
            "100",
            "--max-hold",
            "5",
        ],
        dir.path(),
    );
    assert_eq!(code(&loose), 0);
    let base: serde_json::Value = serde_json::from_slice(&base.stdout).unwrap();
    let loose: serde_json::Value = serde_json::from_slice(&loose.stdout).unwrap();
    assert_eq!(base["waiting_flights"], loose["waiting_flights"]);

    let bad = groundhold(
        &["inspect", "--instance", "t.json", "--step", "0"],
        dir.path(),
    );
    assert_eq!(code(&bad), 2);
}

#[test]
fn usage_and_io_errors_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&groundhold(&["solve", "--bogus"], dir.path())), 2);
    assert_eq!(code(&groundhold(&["frobnicate"], dir.path())), 2);
    assert_eq!(
        code(&groundhold(
            &["solve", "--instance", "missing.json"],
            dir.path()
        )),
        4
    );

    fs::write(dir.path().join("broken.json"), "{\"params\": ").unwrap();
    let out = groundhold(&["solve", "--instance", "broken.json"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));

    generate(dir.path(), "tiny", "0", "t.json");
    let out = groundhold(
        &[
            "solve",
            "--instance",
            "t.json",
            "--out",
            "no/such/dir/r.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 4);

    fs::write(dir.path().join("cfg.json"), "{\"max_iterations\": 5}").unwrap();
    let out = groundhold(
        &["solve", "--instance", "t.json", "--config", "cfg.json"],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
}
