//! Black-box tests of the `fracgrad` binary: exit codes, artifact layout,
//! sweep tables, and the error surface for malformed or mistyped configs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_fracgrad")
}

/// Fresh per-test scratch directory (wiped if a previous run left one).
fn scratch(leaf: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(leaf);
    if dir.exists() {
        std::fs::remove_dir_all(&dir).expect("wiping stale scratch dir");
    }
    std::fs::create_dir_all(&dir).expect("creating scratch dir");
    dir
}

fn write_config(dir: &Path, file: &str, text: &str) -> PathBuf {
    let path = dir.join(file);
    std::fs::write(&path, text).expect("writing config");
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawning the binary")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// A 21×21 grid with a 3×3-cell interior block and a constant datum: solves
/// in milliseconds, exercises the full artifact path.
const MINI: &str = r#"
name = "cli_mini"
kind = "solve"

[grid]
origin = [-1.05, -1.05]
extent = 2.1
levels = [21]

[domain]
kind = "rect"
min = [-0.16, -0.16]
max = [0.16, 0.16]

[datum]
kind = "constant"
value = 1.0

[solver]
s_list = [0.5]
r_trunc = 0.5
verify_trials = 4

[[assertions]]
kind = "constant_solution"
value = 1.0

[[assertions]]
kind = "zero_energy"

[[assertions]]
kind = "minimal"
"#;

#[test]
fn run_writes_artifacts_and_exits_zero() {
    let dir = scratch("run_ok");
    let cfg = write_config(&dir, "mini.toml", MINI);
    let out_root = dir.join("out");
    let out = run(&["run", cfg.to_str().unwrap(), "--out", out_root.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "expected exit 0\nstdout:\n{}\nstderr:\n{}",
        stdout(&out),
        stderr(&out)
    );
    let text = stdout(&out);
    assert!(text.contains("[PASS] cli_mini :: 01_constant_solution"), "stdout:\n{text}");
    assert!(text.contains("[PASS] cli_mini :: 02_zero_energy"), "stdout:\n{text}");
    assert!(text.contains("[PASS] cli_mini :: 03_minimal"), "stdout:\n{text}");
    assert!(!text.contains("[FAIL]"), "stdout:\n{text}");

    let scen = out_root.join("cli_mini");
    assert!(scen.join("assertions.json").is_file());
    let inst = scen.join("0.5").join("21");
    for artifact in ["field.csv", "summary.json", "sets_t000.txt"] {
        assert!(inst.join(artifact).is_file(), "missing artifact {artifact}");
    }
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(scen.join("assertions.json")).unwrap())
            .expect("assertions.json parses");
    let entries = parsed.as_array().expect("array of assertion results");
    assert_eq!(entries.len(), 3);
    assert!(entries.iter().all(|e| e["passed"] == serde_json::Value::Bool(true)));
}

#[test]
fn failing_assertion_flips_the_exit_code() {
    let dir = scratch("run_fail");
    // Same scenario, but the asserted constant disagrees with the datum.
    let text = MINI.replacen(
        "kind = \"constant_solution\"\nvalue = 1.0",
        "kind = \"constant_solution\"\nvalue = 2.0",
        1,
    );
    assert!(text.contains("value = 2.0"), "the assertion block must have been rewritten");
    let cfg = write_config(&dir, "bad.toml", &text);
    let out_root = dir.join("out");
    let out = run(&["run", cfg.to_str().unwrap(), "--out", out_root.to_str().unwrap()]);
    assert!(!out.status.success(), "a failing assertion must exit nonzero");
    let text = stdout(&out);
    assert!(text.contains("[FAIL] cli_mini :: 01_constant_solution"), "stdout:\n{text}");
    assert!(text.contains("[PASS] cli_mini :: 02_zero_energy"), "stdout:\n{text}");
}

#[test]
fn seed_override_is_accepted() {
    let dir = scratch("run_seed");
    let cfg = write_config(&dir, "mini.toml", MINI);
    let out_root = dir.join("out");
    let out = run(&[
        "run",
        cfg.to_str().unwrap(),
        "--out",
        out_root.to_str().unwrap(),
        "--seed",
        "12345",
        "--jobs",
        "2",
    ]);
    assert!(out.status.success(), "stderr:\n{}", stderr(&out));
    assert!(out_root.join("cli_mini").join("assertions.json").is_file());
}

#[test]
fn sweep_prints_a_table_and_an_empty_axis_prints_only_the_header() {
    let dir = scratch("sweep");
    let cfg = write_config(&dir, "mini.toml", MINI);
    let out_root = dir.join("out");
    let out = run(&[
        "sweep",
        cfg.to_str().unwrap(),
        "--axis",
        "s",
        "--out",
        out_root.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr:\n{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "s,energy_max,energy_min,minimizer_gap,interior_osc,boundary_jump");
    assert_eq!(lines.len(), 2, "one header plus one row for s_list = [0.5]:\n{text}");
    assert!(lines[1].starts_with("0.5,"), "row:\n{text}");
    assert!(out_root.join("cli_mini").join("sweep_s.csv").is_file());

    // Empty axis: the table degenerates to its header, still exit 0.
    let empty = write_config(
        &dir,
        "empty.toml",
        &MINI
            .replace("s_list = [0.5]", "s_list = []")
            .replace("name = \"cli_mini\"", "name = \"cli_empty\"")
            .split("[[assertions]]")
            .next()
            .unwrap(),
    );
    let out = run(&[
        "sweep",
        empty.to_str().unwrap(),
        "--axis",
        "s",
        "--out",
        out_root.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr:\n{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(
        text.trim_end(),
        "s,energy_max,energy_min,minimizer_gap,interior_osc,boundary_jump",
        "expected a header-only table:\n{text}"
    );
}

#[test]
fn malformed_toml_reports_the_file_and_fails() {
    let dir = scratch("parse_error");
    let cfg = write_config(&dir, "broken.toml", "kind = [unclosed\n");
    let out = run(&["run", cfg.to_str().unwrap(), "--out", dir.join("out").to_str().unwrap()]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("error:"), "stderr:\n{err}");
    assert!(err.contains("broken.toml"), "the message must name the offending file:\n{err}");
}

#[test]
fn unknown_config_keys_are_rejected_by_name() {
    let dir = scratch("unknown_key");
    let cfg = write_config(&dir, "typo.toml", &format!("{MINI}\nmistyped_knob = 3\n"));
    let out = run(&["run", cfg.to_str().unwrap(), "--out", dir.join("out").to_str().unwrap()]);
    assert!(!out.status.success(), "an unknown key must be a hard error");
    let err = stderr(&out);
    assert!(err.contains("mistyped_knob"), "the message must name the unknown key:\n{err}");
}

#[test]
fn missing_config_file_fails_cleanly() {
    let dir = scratch("missing");
    let out = run(&[
        "run",
        dir.join("nope.toml").to_str().unwrap(),
        "--out",
        dir.join("out").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("error:"), "stderr:\n{}", stderr(&out));
}
