use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_pursuit");

fn pursuit(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn failure(out: &Output) -> String {
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    err
}

const TWENTY: &str = r#"
duration_s = 2.5

[layout]
targets = 20

[[pursuit]]
target = 3
start_s = 0.0
end_s = 2.5
"#;

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn layout_lists_dial_and_cancel() {
    let text = stdout(&pursuit(&["layout", "--targets", "20"]));
    let rows = rows(&text);
    assert_eq!(rows.len(), 21);
    assert_eq!(rows[0][..4], ["0", "0", "1090", "540"]);
    assert_eq!(rows[10][1], "A");
    assert_eq!(rows[20][1], "CANCEL");
    assert_eq!(rows[20][6], "ccw");
}

#[test]
fn unsupported_layout_size_fails() {
    let err = failure(&pursuit(&["layout", "--targets", "7"]));
    assert!(err.starts_with("error:"), "{err}");
}

/// Slope-method neighbours meet both conditions only in isolated samples,
/// while the correlation method holds both on a neighbour long enough to fire.
#[test]
fn trace_neighbour_overlap() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "twenty.toml", TWENTY);
    // (samples with cond_both on a neighbour, longest consecutive run)
    let neighbour_overlap = |method: &str| {
        let text = stdout(&pursuit(&["trace", &scenario, "--method", method]));
        let rows = rows(&text);
        assert_eq!(rows.len(), 150 * 21);
        let neighbours: Vec<_> = rows.iter().filter(|r| r[1] == "2" || r[1] == "4").collect();
        let both = neighbours.iter().filter(|r| r[8] == "1").count();
        let run = neighbours
            .iter()
            .map(|r| r[9].parse::<usize>().unwrap())
            .max()
            .unwrap();
        (both, run)
    };
    let (both, run) = neighbour_overlap("slope");
    assert!(both * 50 < 300, "{both} of 300 neighbour samples");
    assert_eq!(run, 1);
    let (both, run) = neighbour_overlap("correlation");
    assert!(both > 30, "{both}");
    assert!(run >= 20, "{run}");
}

#[test]
fn trace_rejects_bad_scenario_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.toml",
        "duration_s = 2.0\n[layout]\ntargets = 6\n\n[[pursuit]]\ntarget = 99\nstart_s = 0.0\nend_s = 1.0\n",
    );
    let err = failure(&pursuit(&["trace", &bad]));
    assert!(err.contains("line 5"), "{err}");
}

#[test]
fn run_summarises_both_methods() {
    let text = stdout(&pursuit(&["run", "--targets", "20", "--pursue", "3"]));
    let rows = rows(&text);
    assert_eq!(rows[0][0], "slope");
    assert_eq!(rows[0][3], "0");
    assert_eq!(rows[1][0], "correlation");
    assert_ne!(rows[1][3], "0");
}

#[test]
fn config_overrides_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[correlation]\nmin_duration = 1\n");
    let text = stdout(&pursuit(&[
        "run",
        "--targets",
        "6",
        "--pursue",
        "2",
        "--method",
        "correlation",
        "--config",
        &cfg,
    ]));
    assert_eq!(rows(&text)[0][4], "30");
    let bad = write(dir.path(), "bad.toml", "window = 3\n");
    let err = failure(&pursuit(&["run", "--targets", "6", "--config", &bad]));
    assert!(err.contains("line 1"), "{err}");
}

#[test]
fn generate_then_replay() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("gaze.csv");
    let log = log.to_str().unwrap();
    stdout(&pursuit(&[
        "generate",
        "--targets",
        "12",
        "--pursue",
        "5",
        "--duration",
        "3",
        "--out",
        log,
    ]));
    let first = stdout(&pursuit(&["replay", log, "--targets", "12"]));
    let again = stdout(&pursuit(&["replay", log, "--targets", "12"]));
    assert_eq!(first, again);
    let events = rows(&first);
    assert!(!events.is_empty());
    assert!(events.iter().all(|e| e[2] == "5" && e[4] == "slope"));

    let trace = dir.path().join("trace.csv");
    stdout(&pursuit(&[
        "replay",
        log,
        "--targets",
        "12",
        "--method",
        "correlation",
        "--out",
        trace.to_str().unwrap(),
    ]));
    assert_eq!(
        fs::read_to_string(trace).unwrap().lines().count(),
        1 + 180 * 13
    );
}

#[test]
fn replay_names_offending_line() {
    let dir = tempfile::tempdir().unwrap();
    let log = write(
        dir.path(),
        "gaze.csv",
        "t_ms,gx_px,gy_px\n0,960,410\n16.6,961,410\n10,962,410\n",
    );
    let err = failure(&pursuit(&["replay", &log, "--targets", "6"]));
    assert!(err.contains("line 4"), "{err}");
    let log = write(dir.path(), "junk.csv", "t_ms,gx_px,gy_px\n0,960,abc\n");
    let err = failure(&pursuit(&["replay", &log, "--targets", "6"]));
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn sweep_is_deterministic() {
    let args = [
        "sweep",
        "--targets",
        "6,8",
        "--noise",
        "2",
        "--seed",
        "9",
        "--repetitions",
        "2",
    ];
    let a = stdout(&pursuit(&args));
    let b = stdout(&pursuit(&args));
    assert_eq!(a, b);
    let rows = rows(&a);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0][..3], ["6", "slope", "12"]);
}

#[test]
fn missing_inputs_fail_cleanly() {
    failure(&pursuit(&["trace"]));
    failure(&pursuit(&[
        "replay",
        "/nonexistent/gaze.csv",
        "--targets",
        "6",
    ]));
}
