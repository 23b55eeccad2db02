use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use majorreach::io::{to_canonical_string, ProblemFile, ReportFile, ScheduleFile};
use majorreach::linalg::diag_real;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_majorreach"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_problem(dir: &Path, name: &str, edit: impl FnOnce(&mut ProblemFile)) -> PathBuf {
    let mut p = ProblemFile::load(&data("two_level.json")).unwrap();
    edit(&mut p);
    let path = dir.join(name);
    fs::write(&path, to_canonical_string(&p)).unwrap();
    path
}

#[test]
fn check_accepts_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let ok = run(&["check", data("two_level.json").to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    assert!(stdout(&ok).contains("partial sums: true"));

    let reversed = write_problem(dir.path(), "reversed.json", |p| {
        std::mem::swap(&mut p.rho0, &mut p.rho_target);
    });
    let bad = run(&["check", reversed.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stderr(&bad).contains("NotMajorized"));
}

#[test]
fn synthesize_then_verify_and_execute() {
    let dir = tempfile::tempdir().unwrap();
    let problem = data("two_level.json");
    let schedule = dir.path().join("schedule.json");
    let o = run(&[
        "synthesize",
        problem.to_str().unwrap(),
        "--out",
        schedule.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let file = ScheduleFile::load(&schedule).unwrap();
    assert_eq!(file.version, 1);
    let text = fs::read_to_string(&schedule).unwrap();
    assert_eq!(to_canonical_string(&file), text);
    let report: ReportFile =
        majorreach::io::read_json(&schedule.with_extension("report.json")).unwrap();
    assert!(report.verification.achieved_error < 1e-3);
    assert!(report.verification.achieved_error <= report.verification.budget_total);

    let v = run(&[
        "verify",
        problem.to_str().unwrap(),
        schedule.to_str().unwrap(),
    ]);
    assert_eq!(v.status.code(), Some(0), "{}", stderr(&v));
    assert!(stdout(&v).contains("budget satisfied: true"));

    let state = dir.path().join("state.json");
    let e = run(&[
        "execute",
        problem.to_str().unwrap(),
        schedule.to_str().unwrap(),
        "--out",
        state.to_str().unwrap(),
    ]);
    assert_eq!(e.status.code(), Some(0), "{}", stderr(&e));
    let value: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&state).unwrap()).unwrap();
    let rho = &value["rho"];
    assert!((rho[0][0][0].as_f64().unwrap() - 0.5).abs() < 1e-3);
    assert!((rho[1][1][0].as_f64().unwrap() - 0.5).abs() < 1e-3);
}

#[test]
fn synthesis_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let problem = data("two_level.json");
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = run(&[
            "synthesize",
            problem.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--mode",
            "trotter",
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn domain_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let flat = write_problem(dir.path(), "flat.json", |p| p.v = diag_real(&[1.0, 1.0]));
    let out = dir.path().join("s.json");
    let o = run(&[
        "synthesize",
        flat.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("NoDistinctPair"));

    let abelian = write_problem(dir.path(), "abelian.json", |p| {
        p.controls = vec![diag_real(&[0.5, 0.0])]
    });
    let o = run(&["lie-rank", abelian.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("NotControllable"));
}

#[test]
fn file_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["check", "/nonexistent/problem.json"]);
    assert_eq!(o.status.code(), Some(2));

    let garbage = dir.path().join("garbage.json");
    fs::write(&garbage, "{ not json").unwrap();
    assert_eq!(
        run(&["check", garbage.to_str().unwrap()]).status.code(),
        Some(2)
    );

    let future = write_problem(dir.path(), "future.json", |p| p.version = 2);
    assert_eq!(
        run(&["check", future.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn lie_rank_reports_full_algebra() {
    let o = run(&["lie-rank", data("two_level.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("lie dimension: 3 of 3"));
    assert!(stdout(&o).contains("connected: true"));
}

#[test]
fn trotter_study_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("study.csv");
    let o = run(&[
        "trotter-study",
        data("two_level.json").to_str().unwrap(),
        "--slices",
        "8,16,32,64",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "slices,deviation");
    assert_eq!(rows.len(), 5);
    assert!(rows[1].starts_with("8,"));
}

#[test]
fn crange_needs_a_seed_and_matches_closed_form() {
    let input = data("crange_diag.json");
    let missing = run(&["crange", input.to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("crange.json");
    let o = run(&[
        "crange",
        input.to_str().unwrap(),
        "--seed",
        "7",
        "--samples",
        "200",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let value: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!((value["k_c"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!((value["k_c_bruteforce"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!(value["max_sample"].as_f64().unwrap() <= 2.0 + 1e-9);
    assert_eq!(value["spectrum_exhaustive"], true);

    let again = dir.path().join("again.json");
    run(&[
        "crange",
        input.to_str().unwrap(),
        "--seed",
        "7",
        "--samples",
        "200",
        "--out",
        again.to_str().unwrap(),
    ]);
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());
}
