use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn deconv(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deconv"))
        .args(args)
        .current_dir(dir)
        .env_remove("DECONV_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const CONFIG: &str = r#"
n_grid = [400, 1600, 6400]
reps = 10
seed = 5
p = 4.0

[error]
kind = "binomial"
m = 1

[density]
kind = "smooth_compact"
width = 2.0
"#;

#[test]
fn coeffs_for_uniform() {
    let dir = tempfile::tempdir().unwrap();
    let o = deconv(
        &["coeffs", "--error", "uniform", "--theta", "1", "--n", "5"],
        dir.path(),
    );
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# deconv ") && lines[0].contains("config_sha256="));
    assert_eq!(lines[1], "ell,c_plus_re,c_plus_im,c_minus_re,c_minus_im");
    let rows = &lines[2..];
    assert_eq!(rows.len(), 6);
    for (j, row) in rows.iter().enumerate() {
        let f: Vec<f64> = row.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(f, vec![2.0 * j as f64, 1.0, 0.0, -1.0, 0.0]);
    }
}

#[test]
fn kernel_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = deconv(&["kernel", "--k0", "3", "--orders", "2", "--points", "11"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[1], "t,K,K1,K2");
    assert_eq!(lines.len(), 13);
    let o = deconv(
        &["kernel", "--deconv", "--error", "binomial", "--m", "1", "--points", "9"],
        dir.path(),
    );
    assert!(o.status.success());
    assert!(stdout(&o).contains("t,L_plus,L_minus"));
}

#[test]
fn simulate_writes_artifacts_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("exp.toml"), CONFIG).unwrap();
    let o = deconv(&["simulate", "exp.toml", "--output-dir", "a", "--plot"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["rates.csv", "report.csv", "plot.svg"] {
        assert!(dir.path().join("a").join(f).exists(), "{f}");
    }
    let o = Command::new(env!("CARGO_BIN_EXE_deconv"))
        .args(["simulate", "exp.toml", "--threads", "2"])
        .current_dir(dir.path())
        .env("DECONV_OUTPUT_DIR", "b")
        .output()
        .unwrap();
    assert!(o.status.success());
    let a = fs::read(dir.path().join("a/rates.csv")).unwrap();
    let b = fs::read(dir.path().join("b/rates.csv")).unwrap();
    assert_eq!(a, b);
    let rates = String::from_utf8(a).unwrap();
    assert_eq!(rates.lines().nth(1), Some("n,h,N,risk,stderr"));
    assert_eq!(rates.lines().count(), 5);
}

#[test]
fn estimate_from_sample_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("exp.toml"), CONFIG).unwrap();
    let mut sample = String::from("# observations\ny\n");
    for i in 0..2000 {
        // deterministic spread over [-1.5, 1]
        sample.push_str(&format!(
            "{}\n",
            ((i as f64 * 0.618_034).fract() * 2.0 - 1.0) - (i % 2) as f64 * 0.5
        ));
    }
    fs::write(dir.path().join("y.csv"), sample).unwrap();
    let o = deconv(
        &[
            "estimate", "--config", "exp.toml", "--sample", "y.csv", "--from", "-1", "--to", "1", "--points", "5",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(text.lines().nth(1), Some("x,f_hat"));
    assert_eq!(text.lines().count(), 7);

    fs::write(dir.path().join("bad.csv"), "1.0\nabc\n").unwrap();
    let o = deconv(&["estimate", "--config", "exp.toml", "--sample", "bad.csv"], dir.path());
    assert!(!o.status.success());
}

#[test]
fn config_errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), CONFIG.replace("m = 1", "m = 1\nbogus = 2")).unwrap();
    let o = deconv(&["simulate", "bad.toml"], dir.path());
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bogus") && err.contains("error"), "{err}");
    let o = deconv(&["simulate", "missing.toml"], dir.path());
    assert!(!o.status.success());
}

#[test]
fn check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = deconv(&["check"], dir.path());
    assert!(o.status.success(), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
}
