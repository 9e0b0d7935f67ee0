use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use conelab::oracle::dp_conditional_endpoint;
use conelab::{ChamberFamily, HarmonicCone, IncrementDistribution};
use serde_json::Value;

fn conelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conelab")).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, body).unwrap();
    p
}

fn run(sub: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    conelab(&args)
}

fn json_lines(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

const HALF_LINE: &str = r#"
name = "half"
seed = 5
workers = 1
method = "dp"
starts = [[1.0]]
horizons = [1, 2, 3]

[cone]
family = "C"
dimension = 1

[distribution]
kind = "rademacher"

[budgets]
trials = 200000
particles = 5000
"#;

#[test]
fn survival_dp_matches_hand_computation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), HALF_LINE);
    let out = run("survival", &cfg, dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = json_lines(&dir.path().join("survival.jsonl"));
    let est: Vec<f64> = serde_json::from_value(lines[0]["estimates"].clone()).unwrap();
    assert_eq!(est, vec![0.5, 0.5, 0.375]);
    assert_eq!(lines[0]["schema"], 1);
    assert_eq!(lines[0]["seed"], 5);
    let csv = std::fs::read_to_string(dir.path().join("survival.csv")).unwrap();
    assert!(csv.starts_with("# conelab "));
}

#[test]
fn mc_and_splitting_agree_with_dp() {
    let dir = tempfile::tempdir().unwrap();
    let dp_est = [0.5, 0.5, 0.375];
    for method in ["mc", "splitting"] {
        let cfg = write_config(dir.path(), &HALF_LINE.replace("method = \"dp\"", &format!("method = \"{method}\"")));
        let out = run("survival", &cfg, dir.path(), &[]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let line = &json_lines(&dir.path().join("survival.jsonl"))[0];
        let est: Vec<f64> = serde_json::from_value(line["estimates"].clone()).unwrap();
        let se: Vec<f64> = serde_json::from_value(line["std_errors"].clone()).unwrap();
        for i in 0..3 {
            assert!(
                (est[i] - dp_est[i]).abs() <= 4.0 * se[i].max(1e-3),
                "{method} n={}: {} vs {}",
                i + 1,
                est[i],
                dp_est[i]
            );
        }
    }
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &HALF_LINE.replace("method = \"dp\"", "method = \"mc\""));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run("survival", &cfg, &a, &["--workers", "1"]).status.success());
    assert!(run("survival", &cfg, &b, &["--workers", "3"]).status.success());
    for f in ["survival.csv", "survival.jsonl"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &HALF_LINE.replace("seed = 5\n", ""));
    let out = run("survival", &cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));

    let cfg = write_config(dir.path(), &HALF_LINE.replace("starts = [[1.0]]", "starts = [[-1.0]]"));
    assert_eq!(run("survival", &cfg, dir.path(), &[]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_with_code_1() {
    assert_eq!(conelab(&["survival"]).status.code(), Some(1));
    assert_eq!(conelab(&["frobnicate"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), HALF_LINE);
    assert_eq!(run("survival", &cfg, dir.path(), &["--workers", "0"]).status.code(), Some(1));
}

#[test]
fn harmonic_grid_and_shifts() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
name = "a2"
seed = 3
workers = 1
method = "dp"

[cone]
family = "A"
dimension = 2

[distribution]
kind = "asym3"

[harmonic]
grid = [[0.0, 1.0], [0.0, 4.0], [0.0, 16.0]]
method = "both"
R = [2.0]
"#;
    let cfg = write_config(dir.path(), body);
    let out = run("harmonic", &cfg, dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = json_lines(&dir.path().join("harmonic.jsonl"));
    assert_eq!(lines.len(), 6);
    // truncated then corrected for each grid point
    let corrected: Vec<&Value> = lines.iter().skip(1).step_by(2).collect();
    let ratios: Vec<f64> = corrected.iter().map(|l| l["v_over_h"].as_f64().unwrap()).collect();
    // V/h decreases to 1 along the ray
    assert!(ratios.windows(2).all(|w| 1.0 < w[1] && w[1] < w[0]), "{ratios:?}");
    assert!(ratios[2] - 1.0 < 0.2 * (ratios[0] - 1.0), "{ratios:?}");
    for l in &corrected {
        let rel = l["other_shifts"][0]["relative_difference"].as_f64().unwrap();
        assert!(rel.abs() < 1e-6, "{l}");
    }
    for pair in lines.chunks(2) {
        let (a, b) = (pair[0]["value"].as_f64().unwrap(), pair[1]["value"].as_f64().unwrap());
        assert!((a - b).abs() / b < 1e-6, "{a} vs {b}");
    }

    let cfg = write_config(dir.path(), &body.replace("[0.0, 16.0]", "[1.0, 0.0]"));
    assert_eq!(run("harmonic", &cfg, dir.path(), &[]).status.code(), Some(2));
}

#[test]
fn verify_shipped_config_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/weylC2_rademacher.toml");
    let out = run("verify", &cfg, dir.path(), &[]);
    let report = std::fs::read_to_string(dir.path().join("verify.txt")).unwrap();
    assert!(out.status.success(), "{report}");
    assert!(report.contains("kappa_hat"), "{report}");
    assert!(!report.contains("FAIL"), "{report}");
    let curves = std::fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    assert!(curves.lines().count() > 4);
}

#[test]
fn verify_reports_fail_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    // far too few horizons near the origin for the target slope
    let body = HALF_LINE.replace("horizons = [1, 2, 3]", "horizons = [1, 2, 3, 4]") + "\n[verify]\nslope_tol = 0.001\n";
    let cfg = write_config(dir.path(), &body);
    let out = run("verify", &cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.path().join("verify.txt")).unwrap();
    assert!(report.contains("FAIL"));
}

#[test]
fn corrupted_curves_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.csv"), "cone,x,n\nnot,a,curve\n").unwrap();
    let body = HALF_LINE.to_string() + "\n[verify]\ncurves = \"bad.csv\"\n";
    let cfg = write_config(dir.path(), &body);
    let out = run("verify", &cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.csv"));
}

#[test]
fn conditioned_paths_follow_the_dp_law() {
    let dir = tempfile::tempdir().unwrap();
    let body = HALF_LINE.to_string() + "\n[sample]\nsampler = \"conditioned\"\nstart = [1.0]\nn = 8\npaths = 4000\n";
    let cfg = write_config(dir.path(), &body);
    assert!(run("sample", &cfg, dir.path(), &[]).status.success());
    let first = std::fs::read(dir.path().join("paths.jsonl")).unwrap();
    assert!(run("sample", &cfg, dir.path(), &[]).status.success());
    assert_eq!(first, std::fs::read(dir.path().join("paths.jsonl")).unwrap());

    let lines = json_lines(&dir.path().join("paths.jsonl"));
    assert_eq!(lines.len(), 4000);
    let mut ends = Vec::new();
    for l in &lines {
        let pts: Vec<Vec<f64>> = serde_json::from_value(l["points"].clone()).unwrap();
        assert_eq!(pts.len(), 9);
        assert!(pts.iter().all(|p| p[0] > 0.0), "{pts:?}");
        ends.push(pts[8][0]);
    }
    let cone = HarmonicCone::weyl_chamber(ChamberFamily::C, 1).unwrap();
    let law = dp_conditional_endpoint(&cone, &[1.0], &IncrementDistribution::rademacher(), 8).unwrap();
    for (p, q) in law.points.iter().zip(&law.probs) {
        let y = p[0] * law.scale;
        let freq = ends.iter().filter(|e| (**e - y).abs() < 1e-9).count() as f64 / ends.len() as f64;
        let se = (q * (1.0 - q) / ends.len() as f64).sqrt();
        assert!((freq - q).abs() <= 5.0 * se, "endpoint {y}: {freq} vs {q}");
    }
}

#[test]
fn h_transform_paths_stay_inside() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
name = "c2"
seed = 9
workers = 1
method = "dp"

[cone]
family = "C"
dimension = 2

[distribution]
kind = "rademacher"

[sample]
sampler = "h_transform"
start = [1.0, 2.0]
n = 50
paths = 20
"#;
    let cfg = write_config(dir.path(), body);
    let out = run("sample", &cfg, dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for l in json_lines(&dir.path().join("paths.jsonl")) {
        let pts: Vec<Vec<f64>> = serde_json::from_value(l["points"].clone()).unwrap();
        assert!(pts.iter().all(|p| 0.0 < p[0] && p[0] < p[1]), "{pts:?}");
    }
}
