//! End-to-end tests driving the `arbor` binary: golden outputs for every
//! subcommand at the default configuration, the exit-code contract, error
//! objects, cache behavior, thread invariance, and config precedence.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// Env names honored by the binary; cleared so the host environment
/// cannot leak into a test.
const ENV_VARS: &[&str] = &[
    "ARBOR_CONFIG",
    "ARBOR_RANK",
    "ARBOR_EPSILON",
    "ARBOR_T",
    "ARBOR_T_PRIME",
    "ARBOR_LEVEL",
    "ARBOR_N_MAX",
    "ARBOR_TOL",
    "ARBOR_FORMAT",
    "ARBOR_OUT",
    "ARBOR_CACHE_DIR",
    "ARBOR_THREADS",
    "ARBOR_SEED",
    "ARBOR_EXPERIMENT",
];

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_arbor"));
    for v in ENV_VARS {
        cmd.env_remove(v);
    }
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn arbor")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is UTF-8")
}

fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Compares against the stored golden file; `GOLDEN_REGEN=1` rewrites it.
fn check_golden(name: &str, actual: &str) {
    let path = golden_path(name);
    if std::env::var_os("GOLDEN_REGEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| {
        panic!("missing golden file {} ({e}); regenerate with GOLDEN_REGEN=1", path.display())
    });
    assert_eq!(actual, expected, "output drifted from golden {name}");
}

fn golden_subcommand(cmd: &str) {
    let out = run(&[cmd]);
    assert!(
        out.status.code() == Some(0),
        "{cmd} exited {:?}, stderr:\n{}",
        out.status.code(),
        stderr_of(&out)
    );
    check_golden(&format!("{cmd}.csv"), &stdout_of(&out));
}

#[test]
fn golden_phi() {
    golden_subcommand("phi");
}

#[test]
fn golden_sigma() {
    golden_subcommand("sigma");
}

#[test]
fn golden_gram() {
    golden_subcommand("gram");
}

#[test]
fn golden_scan_positivity() {
    golden_subcommand("scan-positivity");
}

#[test]
fn golden_equi() {
    golden_subcommand("equi");
}

#[test]
fn golden_pairs() {
    golden_subcommand("pairs");
}

#[test]
fn golden_bml() {
    golden_subcommand("bml");
}

#[test]
fn golden_schur() {
    golden_subcommand("schur");
}

#[test]
fn golden_rd() {
    golden_subcommand("rd");
}

#[test]
fn golden_besov() {
    golden_subcommand("besov");
}

#[test]
fn golden_poisson() {
    golden_subcommand("poisson");
}

#[test]
fn golden_mixing() {
    golden_subcommand("mixing");
}

#[test]
fn golden_selftest() {
    golden_subcommand("selftest");
}

#[test]
fn golden_sigma_json_envelope() {
    let out = run(&["sigma", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    check_golden("sigma.json", &text);
    // every report embeds the resolved config and the artifact version
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["config"]["rank"], 2);
    assert_eq!(v["config"]["format"], "json");
    assert_eq!(v["report"]["id"], "sigma");
    assert_eq!(v["report"]["verdict"], "pass");
}

#[test]
fn verdict_failure_exits_one() {
    let out = run(&["poisson", "--n-max", "2", "--tol", "1e-9"]);
    assert_eq!(out.status.code(), Some(1));
    // the report is still emitted in full; only the verdict flips
    assert!(stdout_of(&out).contains("n,re,im,abs_err"));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["sigma", "--rank", "1"][..],
        &["equi", "--f", "ind:xyz"][..],
        &["pairs", "--f", "ind:a"][..],
        &["scan-positivity", "--t-grid", "bogus"][..],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "args {args:?}, stderr: {}", stderr_of(&out));
        assert!(out.stdout.is_empty(), "usage failure must not emit a report");
    }
    // unknown flags are rejected by the parser with the same code
    let out = run(&["sigma", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn json_mode_reports_errors_as_objects() {
    let out = run(&["sigma", "--rank", "1", "--format", "json"]);
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(stderr_of(&out).trim()).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["error"]["kind"], "usage");
    assert!(v["error"]["message"].as_str().unwrap().contains("rank"));
}

#[test]
fn config_file_unknown_key_rejected_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    std::fs::write(&path, "rank=2\nbogus_key=3\n").unwrap();
    let out = run(&["sigma", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(err.contains("bogus_key") && err.contains("line 2"), "stderr: {err}");
}

#[test]
fn ht_experiment_past_midpoint_is_a_precondition_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    std::fs::write(&path, "experiment=ht\nt=0.75\n").unwrap();
    let out = run(&["rd", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("positivity"), "stderr: {}", stderr_of(&out));
}

#[test]
fn internal_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("not-a-dir");
    std::fs::write(&file, b"x").unwrap();
    let out = run(&["gram", "--cache-dir", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr_of(&out));
}

#[test]
fn cache_cold_and_warm_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let args = ["gram", "--cache-dir", cache.to_str().unwrap()];
    let cold = run(&args);
    assert_eq!(cold.status.code(), Some(0));
    let entries: Vec<_> = std::fs::read_dir(&cache).unwrap().collect();
    assert_eq!(entries.len(), 1, "one content-addressed cache entry expected");
    let warm = run(&args);
    assert_eq!(warm.status.code(), Some(0));
    assert_eq!(cold.stdout, warm.stdout);

    // a corrupted entry is evicted and recomputed, not trusted
    let entry = entries[0].as_ref().unwrap().path();
    std::fs::write(&entry, b"garbage").unwrap();
    let healed = run(&args);
    assert_eq!(healed.status.code(), Some(0));
    assert_eq!(cold.stdout, healed.stdout);
}

/// Drops the config header line, which honestly records the differing knob.
fn report_body(stdout: &str) -> String {
    stdout.lines().filter(|l| !l.starts_with("# config:")).collect::<Vec<_>>().join("\n")
}

#[test]
fn worker_count_does_not_change_the_report() {
    let one = run(&["equi", "--threads", "1"]);
    let four = run(&["equi", "--threads", "4"]);
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(four.status.code(), Some(0));
    assert_eq!(report_body(&stdout_of(&one)), report_body(&stdout_of(&four)));
}

#[test]
fn env_overrides_file_and_flags_override_env() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    std::fs::write(&path, "rank=3\nt=0.4\n").unwrap();
    let conf = path.to_str().unwrap();

    let from_file = run(&["sigma", "--config", conf]);
    assert!(stdout_of(&from_file).contains("rank=3 epsilon=1 t=0.4"));

    let mut with_env = bin();
    with_env.args(["sigma", "--config", conf]).env("ARBOR_T", "0.3");
    let with_env = with_env.output().unwrap();
    assert!(stdout_of(&with_env).contains("rank=3 epsilon=1 t=0.3"));

    let mut with_flag = bin();
    with_flag.args(["sigma", "--config", conf, "--t", "0.2"]).env("ARBOR_T", "0.3");
    let with_flag = with_flag.output().unwrap();
    assert!(stdout_of(&with_flag).contains("rank=3 epsilon=1 t=0.2"));
}

#[test]
fn out_flag_writes_the_report_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("sub").join("report.csv");
    let out = run(&["sigma", "--out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty(), "report goes to the file, not stdout");
    let text = std::fs::read_to_string(&target).unwrap();
    assert!(text.starts_with("# arbor "));
    assert!(text.contains("quantity,value"));
    let leftovers: Vec<_> = std::fs::read_dir(target.parent().unwrap())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path() != target)
        .collect();
    assert!(leftovers.is_empty(), "no temp files may remain");
}
