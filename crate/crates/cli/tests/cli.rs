use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fig1() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/fig1.json")
}

fn qprivamp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qprivamp")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const QUANTUM: &str = r#"{"kind": "cq", "x_dim": 2, "e_dim": 2, "probs": [0.4, 0.6],
  "cond_states": [[[[0.7, 0], [0.2, 0.1]], [[0.2, -0.1], [0.3, 0]]],
                  [[[0.5, 0], [0, -0.3]], [[0, 0.3], [0.5, 0]]]]}"#;

#[test]
fn curve_csv_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve.csv");
    let f = fig1();
    let args = ["curve", "--state", f.to_str().unwrap(), "--rmin", "0", "--rmax", "2", "--steps", "201", "--out", out.to_str().unwrap()];
    let o = qprivamp(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "R,E_pa,alpha_star");
    assert_eq!(lines.len(), 202);
    assert_eq!(lines[201], "2.00000000,1.21203233,0.500000000");
    for row in &lines[1..] {
        let cells: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells.len(), 3);
        assert!(cells[1] >= 0.0 && (0.5..=1.0).contains(&cells[2]));
    }
    let again = dir.path().join("again.csv");
    let mut args2 = args;
    args2[10] = again.to_str().unwrap();
    assert_eq!(qprivamp(&args2).status.code(), Some(0));
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn entropy_of_fig1() {
    let f = fig1();
    let o = qprivamp(&["entropy", "--state", f.to_str().unwrap(), "--kind", "club", "--alpha", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let (v, unit) = s.trim().split_once(' ').unwrap();
    assert_eq!(unit, "bits");
    assert!((v.parse::<f64>().unwrap() - 0.787968).abs() < 1e-6);
    let vn = qprivamp(&["entropy", "--state", f.to_str().unwrap(), "--kind", "vn", "--log-base", "e"]);
    let v: f64 = stdout(&vn).split(' ').next().unwrap().parse().unwrap();
    assert!((v - 0.634852 * std::f64::consts::LN_2).abs() < 1e-6);
}

#[test]
fn bell_state_density_file() {
    let dir = tempfile::tempdir().unwrap();
    let h = 0.5;
    let bell = format!(
        r#"{{"kind": "density", "dims": [2, 2], "matrix": [
          [[{h}, 0], [0, 0], [0, 0], [{h}, 0]],
          [[0, 0], [0, 0], [0, 0], [0, 0]],
          [[0, 0], [0, 0], [0, 0], [0, 0]],
          [[{h}, 0], [0, 0], [0, 0], [{h}, 0]]]}}"#
    );
    let p = write(&dir, "bell.json", &bell);
    let o = qprivamp(&["entropy", "--state", p.to_str().unwrap(), "--kind", "vn"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: f64 = stdout(&o).split(' ').next().unwrap().parse().unwrap();
    assert!((v + 1.0).abs() < 1e-9);
    let c = qprivamp(&["curve", "--state", p.to_str().unwrap()]);
    assert_eq!(c.status.code(), Some(1));
    assert!(stderr(&c).contains("cq state"));
}

#[test]
fn invalid_inputs_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let f = fig1();
    let o = qprivamp(&["entropy", "--state", f.to_str().unwrap(), "--frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"));
    let o = qprivamp(&["entropy", "--state", f.to_str().unwrap(), "--alpha", "0.7", "--log-base", "10"]);
    assert_eq!(o.status.code(), Some(1));
    let o = qprivamp(&["entropy", "--state", f.to_str().unwrap(), "--alpha", "0.2"]);
    assert_eq!(o.status.code(), Some(1));
    let o = qprivamp(&["entropy", "--state", f.to_str().unwrap(), "--kind", "petz_down", "--alpha", "0.7", "--lambda", "-1"]);
    assert_eq!(o.status.code(), Some(1));
    let trace = write(&dir, "trace.json", r#"{"kind": "density", "dims": [2], "matrix": [[[0.7, 0], [0, 0]], [[0, 0], [0.7, 0]]]}"#);
    let o = qprivamp(&["entropy", "--state", trace.to_str().unwrap(), "--kind", "vn"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("matrix:") && stderr(&o).contains("trace"));
    let broken = write(&dir, "broken.json", "{\n  \"kind\": \"cq\",\n  \"x_dim\": [\n}");
    let o = qprivamp(&["critical-rate", "--state", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line"));
    assert_eq!(qprivamp(&[]).status.code(), Some(1));
    assert_eq!(qprivamp(&["--help"]).status.code(), Some(0));
}

#[test]
fn non_convergence_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let q = write(&dir, "q.json", QUANTUM);
    let o = qprivamp(&["curve", "--state", q.to_str().unwrap(), "--steps", "5", "--max-iter", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout(&o).lines().count(), 6);
    let ok = qprivamp(&["curve", "--state", q.to_str().unwrap(), "--steps", "5"]);
    assert_eq!(ok.status.code(), Some(0));
}

#[test]
fn critical_rate_and_oneshot() {
    let f = fig1();
    let o = qprivamp(&["critical-rate", "--state", f.to_str().unwrap()]);
    assert_eq!(stdout(&o), "0.880369661 bits\n");
    let o = qprivamp(&["oneshot", "--state", f.to_str().unwrap(), "--n", "1", "--zdim", "2", "--hash", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let first: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(first[0], "0.500000000");
    assert!(first[4].parse::<f64>().unwrap().abs() < 1e-9);
    let o = qprivamp(&["oneshot", "--state", f.to_str().unwrap(), "--n", "2", "--zdim", "2"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn simulate_table() {
    let f = fig1();
    let o = qprivamp(&["simulate", "--state", f.to_str().unwrap(), "--rate", "0.9", "--nmax", "2", "--sequential"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1,2,1.00000000,0.863320210,0.212032333,"));
    let too_big = qprivamp(&["simulate", "--state", f.to_str().unwrap(), "--rate", "0.9", "--nmax", "3"]);
    assert_eq!(too_big.status.code(), Some(1));
}

#[test]
fn verify_suites() {
    let o = qprivamp(&["verify", "--suite", "all", "--seed", "42", "--trials", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    for name in ["operator-core", "quantum-states", "symmetric-group", "divergences", "conditional-entropy", "exponent", "pa-simulator", "cli"] {
        assert!(out.contains(&format!("[{name}]")), "{name} missing");
    }
    assert!(!out.contains("FAIL"));
    let one = qprivamp(&["verify", "--suite", "divergences", "--trials", "3"]);
    assert_eq!(one.status.code(), Some(0));
    assert!(!stdout(&one).contains("[cli]"));
    assert_eq!(qprivamp(&["verify", "--suite", "nonsense"]).status.code(), Some(1));
}
