//! End-to-end tests of the `tdse` binary: run real configs in temporary
//! directories and check exit codes, artifacts, and determinism.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tdse"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("binary exited with a code")
}

const FLOW: &str = r#"
schema_version = 1
experiment = "flow"
seed = 7
flow_seeds = 1

[grid]
n = 1
points_per_axis = 64
half_width = 20.0
t0 = -2.0
t1 = 2.0
steps = 16
"#;

const SOLVE: &str = r#"
schema_version = 1
experiment = "solve"
seed = 3

[grid]
n = 1
points_per_axis = 128
half_width = 20.0
t0 = -2.0
t1 = 2.0
steps = 64

[potential]
kind = "compact_bump"
amplitude = 0.4
center_z = [0.0]
center_t = 0.0
width_z = 3.0
width_t = 1.0

[data]
builtin = "gaussian"
"#;

const SCATTER: &str = r#"
schema_version = 1
experiment = "scatter"
seed = 11

[grid]
n = 1
points_per_axis = 512
half_width = 60.0
t0 = -10.0
t1 = 10.0
steps = 200

[potential]
kind = "compact_bump"
amplitude = 0.3
center_z = [0.5]
center_t = 0.0
width_z = 3.0
width_t = 2.0

[data]
builtin = "random"
"#;

const NORMS: &str = r#"
schema_version = 1
experiment = "norms"
seed = 5

[grid]
n = 1
points_per_axis = 256
half_width = 30.0
t0 = -3.0
t1 = 3.0
steps = 48

[orders]
s = 0.0
l = 1.0
kappa = 1
k = 2

[data]
builtin = "hermite"
hermite_m = 2
"#;

#[test]
fn flow_traces_and_monotone_weight() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", FLOW);
    let out = run(&["flow", "--config", "c.toml", "--out", "o"], dir.path());
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    // One CSV row per sample with the documented columns, and a forward
    // base weight that never increases.
    let csv = std::fs::read_to_string(dir.path().join("o/flow_seed0_forward.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(
        header,
        ["s", "z1", "t", "zeta1", "tau", "rho_base", "dist_plus", "dist_minus"]
    );
    let col = header.iter().position(|h| *h == "rho_base").unwrap();
    let rho: Vec<f64> = lines
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect();
    assert!(rho.len() > 10, "trace produced only {} samples", rho.len());
    for pair in rho.windows(2) {
        assert!(pair[1] <= pair[0] * (1.0 + 1.0e-12), "rho_base increased: {pair:?}");
    }

    assert!(dir.path().join("o/flow_seed0.json").exists());
    assert!(dir.path().join("o/report.json").exists());
}

#[test]
fn solve_dumps_field_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", SOLVE);
    let out = run(&["solve", "--config", "c.toml", "--out", "o"], dir.path());
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["passed"], serde_json::Value::Bool(true));
    assert_eq!(report["experiment"], "solve");
    assert!(report["metrics"]["residual_rel"].as_f64().unwrap() < 5.0e-2);
    assert_eq!(report["metrics"]["roundtrip_bit_exact"].as_f64().unwrap(), 1.0);

    // Raw dump size must match the sidecar shape: 65 slices x 128 points,
    // 16 bytes per value.
    let sidecar: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("o/solution.c128.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(sidecar["shape"][0].as_u64().unwrap(), 65);
    assert_eq!(sidecar["shape"][1].as_u64().unwrap(), 128);
    let raw = std::fs::metadata(dir.path().join("o/solution.c128")).unwrap().len();
    assert_eq!(raw, 65 * 128 * 16);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", SOLVE);
    let a = run(&["solve", "--config", "c.toml", "--out", "a"], dir.path());
    let b = run(&["solve", "--config", "c.toml", "--out", "b"], dir.path());
    assert_eq!(code(&a), 0);
    assert_eq!(code(&b), 0);
    let ra = std::fs::read(dir.path().join("a/report.json")).unwrap();
    let rb = std::fs::read(dir.path().join("b/report.json")).unwrap();
    assert_eq!(ra, rb, "report.json differs between identical runs");
    let fa = std::fs::read(dir.path().join("a/solution.c128")).unwrap();
    let fb = std::fs::read(dir.path().join("b/solution.c128")).unwrap();
    assert_eq!(fa, fb, "field dump differs between identical runs");
}

#[test]
fn scatter_emits_outgoing_datum() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", SCATTER);
    let out = run(&["scatter", "--config", "c.toml", "--out", "o"], dir.path());
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("o/f_plus.c128").exists());
    assert!(dir.path().join("o/f_plus.c128.json").exists());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/report.json")).unwrap())
            .unwrap();
    let ratio = report["metrics"]["norm_ratio"].as_f64().unwrap();
    assert!((ratio - 1.0).abs() < 5.0e-2, "norm ratio {ratio}");
}

#[test]
fn norms_reports_residuals() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", NORMS);
    let out = run(&["norms", "--config", "c.toml", "--out", "o"], dir.path());
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/report.json")).unwrap())
            .unwrap();
    assert!(report["metrics"]["commutation_galilean"].as_f64().unwrap() < 1.0e-6);
    let w0 = report["metrics"]["data_wk_0"].as_f64().unwrap();
    let w3 = report["metrics"]["data_wk_3"].as_f64().unwrap();
    assert!(w0 <= w3, "W^k tower not monotone: {w0} vs {w3}");
}

#[test]
fn datum_files_round_trip_into_norms() {
    let dir = tempfile::tempdir().unwrap();
    // A window-scaled datum: it decays at the window edge, so the file fed
    // back into `norms` below keeps the Galilean residual meaningful.
    let scatter_cfg = SCATTER.replace("builtin = \"random\"", "builtin = \"gaussian\"");
    write(dir.path(), "scatter.toml", &scatter_cfg);
    let out = run(&["scatter", "--config", "scatter.toml", "--out", "o"], dir.path());
    assert_eq!(code(&out), 0);

    // Feed the dumped incoming datum back in as a file source on the same
    // grid.
    let norms_cfg = scatter_cfg
        .replace("experiment = \"scatter\"", "experiment = \"norms\"")
        .replace("builtin = \"gaussian\"", "path = \"o/f_minus.c128\"");
    write(dir.path(), "norms.toml", &norms_cfg);
    let out = run(&["norms", "--config", "norms.toml", "--out", "n"], dir.path());
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn numerical_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{SOLVE}\n[tolerances]\nsolve_residual = 1.0e-18\n");
    write(dir.path(), "c.toml", &cfg);
    let out = run(&["solve", "--config", "c.toml", "--out", "o"], dir.path());
    assert_eq!(code(&out), 1, "unattainable tolerance must fail the run");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["passed"], serde_json::Value::Bool(false));
}

#[test]
fn invalid_configs_exit_two() {
    let dir = tempfile::tempdir().unwrap();

    // Empty file: missing schema version.
    write(dir.path(), "empty.toml", "");
    assert_eq!(code(&run(&["solve", "--config", "empty.toml"], dir.path())), 2);

    // Unknown key.
    write(dir.path(), "typo.toml", "schema_version = 1\nexperimnet = \"solve\"\n");
    assert_eq!(code(&run(&["--config", "typo.toml"], dir.path())), 2);

    // Wrong schema version.
    write(dir.path(), "ver.toml", "schema_version = 2\nexperiment = \"flow\"\n");
    assert_eq!(code(&run(&["--config", "ver.toml"], dir.path())), 2);

    // Grid rejected by the constructor (not a power of two).
    let bad_grid = SOLVE.replace("points_per_axis = 128", "points_per_axis = 100");
    write(dir.path(), "grid.toml", &bad_grid);
    assert_eq!(code(&run(&["--config", "grid.toml"], dir.path())), 2);

    // Module-word cap violated.
    let bad_orders = NORMS.replace("kappa = 1", "kappa = 3");
    write(dir.path(), "orders.toml", &bad_orders);
    assert_eq!(code(&run(&["--config", "orders.toml"], dir.path())), 2);

    // No config and not verify-all.
    assert_eq!(code(&run(&["flow"], dir.path())), 2);

    // Subcommand and flag disagree.
    write(dir.path(), "flow.toml", FLOW);
    let out = run(
        &["solve", "--experiment", "flow", "--config", "flow.toml"],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
}
