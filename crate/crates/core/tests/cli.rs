use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_repcut"))
}

fn baseline() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/baseline.toml")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Rows of a CSV table as header-keyed records.
fn table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(text: &str, name: &str) -> Vec<f64> {
    let (h, rows) = table(text);
    let i = h.iter().position(|c| c == name).expect("column present");
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

fn write_config(dir: &Path, edit: impl Fn(String) -> String) -> PathBuf {
    let text = std::fs::read_to_string(baseline()).unwrap();
    let path = dir.join("model.toml");
    std::fs::write(&path, edit(text)).unwrap();
    path
}

#[test]
fn solve_baseline_row() {
    let o = run(&["solve", baseline().to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    let (h, rows) = table(&text);
    assert_eq!(
        h,
        [
            "pi",
            "cutoff",
            "pi_success",
            "pi_failure",
            "pi_safe",
            "p_c",
            "rho_high_type",
            "rho_unconditional",
            "rd_derivative",
            "n_roots",
            "flags"
        ]
    );
    assert_eq!(rows.len(), 1);
    let c = column(&text, "cutoff")[0];
    assert!((c - 0.500).abs() < 2e-3, "{c}");
    assert!(text.ends_with('\n') && !text.contains('\r'));
}

#[test]
fn invalid_pi_exits_2_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), |t| t.replace("pi = 0.5", "pi = 1.0"));
    let o = run(&["solve", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("beliefs.pi"));
}

#[test]
fn pi_override_matches_edited_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), |t| t.replace("pi = 0.5", "pi = 0.3"));
    let edited = run(&["solve", cfg.to_str().unwrap()]);
    let flag = run(&["solve", baseline().to_str().unwrap(), "--pi", "0.3"]);
    assert!(edited.status.success());
    assert_eq!(edited.stdout, flag.stdout);
}

#[test]
fn sweep_pi_has_21_rows() {
    let o = run(&[
        "sweep",
        baseline().to_str().unwrap(),
        "--param",
        "pi",
        "--from",
        "0.05",
        "--to",
        "0.95",
        "--points",
        "21",
    ]);
    assert!(o.status.success());
    let (h, rows) = table(&stdout(&o));
    assert_eq!(h[0], "param");
    assert_eq!(rows.len(), 21);
    assert!(rows.iter().all(|r| r[0] == "pi"));
}

#[test]
fn sweep_beta1_rho_strictly_monotone() {
    let o = run(&[
        "sweep",
        baseline().to_str().unwrap(),
        "--param",
        "beta1",
        "--from",
        "-0.9",
        "--to",
        "0.2",
        "--points",
        "12",
    ]);
    assert!(o.status.success());
    let rho = column(&stdout(&o), "rho_high_type");
    // Along the solved fixed point the rate falls as the bonus rises.
    assert!(rho.windows(2).all(|w| w[1] < w[0]), "{rho:?}");
}

#[test]
fn sweep_lambda_cutoff_nonincreasing() {
    let o = run(&[
        "sweep",
        baseline().to_str().unwrap(),
        "--param",
        "lambda",
        "--from",
        "0.1",
        "--to",
        "1",
        "--points",
        "10",
    ]);
    assert!(o.status.success());
    let c = column(&stdout(&o), "cutoff");
    assert!(c.windows(2).all(|w| w[1] <= w[0]), "{c:?}");
}

#[test]
fn unknown_sweep_param_exits_2() {
    let o = run(&[
        "sweep",
        baseline().to_str().unwrap(),
        "--param",
        "gamma",
        "--from",
        "0",
        "--to",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn calibrate_reproduces_table() {
    let o = run(&[
        "calibrate",
        baseline().to_str().unwrap(),
        "--rho-star",
        "0.20,0.35,0.50,0.65,0.80",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let (h, rows) = table(&text);
    assert_eq!(h, ["rho_star", "cutoff", "p_h", "beta1", "ll_violation"]);
    assert_eq!(rows.len(), 5);
    let want = [
        (1.450, 0.721, 0.160),
        (0.936, 0.607, 0.101),
        (0.500, 0.500, 0.022),
        (0.064, 0.393, -0.117),
        (-0.450, 0.279, -0.423),
    ];
    let (c, p, b) = (
        column(&text, "cutoff"),
        column(&text, "p_h"),
        column(&text, "beta1"),
    );
    for (i, w) in want.iter().enumerate() {
        assert!((c[i] - w.0).abs() <= 2e-3);
        assert!((p[i] - w.1).abs() <= 2e-3);
        assert!((b[i] - w.2).abs() <= 2e-3);
    }
    let ll: Vec<&str> = rows.iter().map(|r| r[4].as_str()).collect();
    assert_eq!(ll, ["false", "false", "false", "true", "true"]);
}

#[test]
fn calibrate_at_no_transfer_rate_needs_no_bonus() {
    let o = run(&[
        "calibrate",
        baseline().to_str().unwrap(),
        "--rho-star",
        "0.530768595",
    ]);
    assert!(o.status.success());
    let b = column(&stdout(&o), "beta1")[0];
    assert!(b.abs() < 1e-6, "{b}");
}

#[test]
fn calibrate_rejects_boundary_target() {
    let o = run(&[
        "calibrate",
        baseline().to_str().unwrap(),
        "--rho-star",
        "1.0",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_is_byte_identical_and_within_3se() {
    let cfg = baseline();
    let args = [
        "simulate",
        cfg.to_str().unwrap(),
        "--episodes",
        "1000000",
        "--seed",
        "42",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let (_, rows) = table(&text);
    let z: Vec<f64> = rows
        .iter()
        .filter(|r| !r[4].is_empty())
        .map(|r| r[4].parse().unwrap())
        .collect();
    assert!(!z.is_empty());
    assert!(z.iter().all(|z| z.abs() <= 3.0), "{z:?}");
}

#[test]
fn simulate_single_episode() {
    let o = run(&[
        "simulate",
        baseline().to_str().unwrap(),
        "--episodes",
        "1",
        "--seed",
        "7",
    ]);
    assert!(o.status.success());
    let (_, rows) = table(&stdout(&o));
    for r in rows.iter().filter(|r| r[0].starts_with("freq(")) {
        assert!(r[2] == "0" || r[2] == "1", "{r:?}");
    }
}

#[test]
fn dump_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = run(&["--dump-config", baseline().to_str().unwrap()]);
    assert!(first.status.success());
    let path = dir.path().join("dumped.toml");
    std::fs::write(&path, &first.stdout).unwrap();
    let second = run(&["--dump-config", path.to_str().unwrap()]);
    assert_eq!(first.stdout, second.stdout);
    let a = run(&["solve", baseline().to_str().unwrap()]);
    let b = run(&["solve", path.to_str().unwrap()]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn version_prints() {
    let o = run(&["--version"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("repcut "));
}
