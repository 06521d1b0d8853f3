use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
preset = "1"
order = 3
energy_step = 0.25

[sweep]
values = [4, 8]
"#;

fn pnfem(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pnfem"))
        .args(args)
        .current_dir(dir)
        .env_remove("PNFEM_THREADS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_reports_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("study.toml"), format!("{SMALL}[output]\ncheckpoint = \"binary\"\n")).unwrap();
    let o = pnfem(&["run", "--config", "study.toml", "--out", "out"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    let csv = fs::read_to_string(out.join("report.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "inv_h,e_even,eoc_even,e_odd,eoc_odd,e_energy,eoc_energy");
    assert_eq!(lines.len(), 3);
    assert!(lines[2].starts_with("8,"));
    let meta = fs::read_to_string(out.join("metadata.toml")).unwrap();
    assert!(meta.contains("status = \"ok\""));
    assert!(meta.contains("started_unix"));
    let echo = fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(echo.contains("preset = \"1\""));
    assert!(out.join("trajectory-4.bin").exists() && out.join("trajectory-8.bin").exists());
}

#[test]
fn markdown_report_and_single_run() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("one.toml"), SMALL.replace("[4, 8]", "[4]")).unwrap();
    let o = pnfem(&["run", "--config", "one.toml", "--out", "o", "--format", "md"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let md = fs::read_to_string(dir.path().join("o/report.md")).unwrap();
    assert!(md.starts_with("| 1/h | e⁺ | e⁻ | E⁺ |"), "{md}");
    assert!(!md.contains("eoc"));
}

#[test]
fn identical_csv_for_any_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("study.toml"), SMALL).unwrap();
    let a = pnfem(&["run", "--config", "study.toml", "--out", "a", "--threads", "1", "--deterministic"], dir.path());
    let b = Command::new(env!("CARGO_BIN_EXE_pnfem"))
        .args(["run", "--config", "study.toml", "--out", "b", "--deterministic"])
        .current_dir(dir.path())
        .env("PNFEM_THREADS", "3")
        .output()
        .unwrap();
    assert!(a.status.success() && b.status.success());
    let read = |d: &str| fs::read(dir.path().join(d).join("report.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    let echo = fs::read_to_string(dir.path().join("b/config.toml")).unwrap();
    assert!(echo.contains("threads = 3"), "{echo}");
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("even.toml", "preset = \"2\"\n[sweep]\nvalues = [1, 2]\n", "odd positive"),
        ("unknown.toml", "preset = \"1\"\nresolution = 3\n", "resolution"),
        ("missing.toml", "order = 5\n", "missing `preset`"),
        ("unordered.toml", "preset = \"1\"\n[sweep]\nvalues = [16, 8]\n", "strictly increasing"),
    ];
    for (name, text, needle) in cases {
        fs::write(dir.path().join(name), text).unwrap();
        let o = pnfem(&["run", "--config", name], dir.path());
        assert_eq!(o.status.code(), Some(1), "{name}");
        assert!(stderr(&o).contains(needle), "{name}: {}", stderr(&o));
    }
    let o = pnfem(&["run", "--config", "absent.toml"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = pnfem(&["run", "--preset", "7"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = pnfem(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solver_failure_exits_with_two_and_keeps_partial_report() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}[solver]\nmax_iterations = 1\nrtol = 1e-14\n");
    fs::write(dir.path().join("hard.toml"), text).unwrap();
    let o = pnfem(&["run", "--config", "hard.toml", "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("o/report.csv")).unwrap();
    assert!(csv.contains("# run 4 failed"), "{csv}");
    let meta = fs::read_to_string(dir.path().join("o/metadata.toml")).unwrap();
    assert!(meta.contains("status = \"failed\""));
}

#[test]
fn dump_operators_lists_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let o = pnfem(&["dump-operators", "--order", "1", "--out", "ops.csv"], dir.path());
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("ops.csv")).unwrap();
    for axis in ["x", "y", "z"] {
        assert!(text.contains(&format!("# A_{axis} 3x1")), "{text}");
    }
    assert!(text.contains("# W_x 1x1"));
    let o = pnfem(&["dump-operators", "--order", "4"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = pnfem(&["check"], dir.path());
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{out}{}", stderr(&o));
    assert!(out.lines().count() > 20);
    assert!(out.lines().all(|l| l.starts_with("PASS ")), "{out}");
}
