use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.toml"))
}

fn overdet(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_overdet")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn run_scenario(cmd: &str, name: &str, out: &Path, extra: &[&str]) -> i32 {
    let cfg = scenario(name);
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let (code, _, err) = overdet(&args);
    assert!(code != 2, "{cmd} {name}: {err}");
    code
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn perturbed_serrin_audit_reports_one_negative_half() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run_scenario("index-audit", "perturbed-serrin", d.path(), &[]), 0);
    let r = json(&d.path().join("index-report.json"));
    let interior = r["interior"].as_array().unwrap();
    assert_eq!(interior.len(), 1);
    assert_eq!(interior[0]["index"], -0.5);
    assert!(interior[0]["x"].as_f64().unwrap().abs() < 1e-4);
    for f in ["z1.csv", "z2.csv", "u.csv", "v.csv", "curve.csv"] {
        assert!(d.path().join(f).exists(), "{f}");
    }
}

#[test]
fn ellipse_candidate_is_canonical() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run_scenario("check-solution", "ellipse-canonical", d.path(), &[]), 0);
    assert_eq!(json(&d.path().join("solution-report.json"))["verdict"], "canonical");
}

#[test]
fn wrong_neumann_data_fails_with_report() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run_scenario("check-solution", "ellipse-half-neumann", d.path(), &[]), 1);
    let r = json(&d.path().join("solution-report.json"));
    assert!(r["neumannMax"].as_f64().unwrap() > 0.1);
    assert_ne!(r["verdict"], "canonical");
}

#[test]
fn tolerance_scale_loosens_every_threshold() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run_scenario("check-solution", "ellipse-half-neumann", d.path(), &["--tol-scale", "1e7"]), 0);
    assert_eq!(json(&d.path().join("solution-report.json"))["tolerances"]["neumann"], 10.0);
}

#[test]
fn grid_flag_sets_spacing() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run_scenario("solve", "solve-laplace", d.path(), &["--grid", "16"]), 0);
    let r = json(&d.path().join("solve-report.json"));
    assert_eq!(r["h"], 0.0625);
    assert!(r["maxError"].as_f64().unwrap() < 1e-12);
    assert!(json(&d.path().join("convergence.json")).is_array());
}

#[test]
fn seed_changes_the_noisy_start_only() {
    let d = tempfile::tempdir().unwrap();
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    assert_eq!(run_scenario("solve", "solve-monge-ampere", &a, &["--seed", "1"]), 0);
    assert_eq!(run_scenario("solve", "solve-monge-ampere", &b, &["--seed", "2"]), 0);
    assert_ne!(
        fs::read(a.join("convergence.json")).unwrap(),
        fs::read(b.join("convergence.json")).unwrap()
    );
    for p in [&a, &b] {
        assert!(json(&p.join("solve-report.json"))["maxError"].as_f64().unwrap() < 1e-12);
    }
}

#[test]
fn unknown_key_is_reported_with_its_line() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("bad.toml");
    fs::write(&cfg, "[scenario]\nname = \"bad\"\nsed = 3\n").unwrap();
    let (code, _, err) = overdet(&["verify-family", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("line 3") && err.contains("sed"), "{err}");
}

#[test]
fn unknown_fixture_names_its_key() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("bad.toml");
    fs::write(&cfg, "[scenario]\nname = \"bad\"\n[index]\nfixture = \"zeta-cubed\"\n").unwrap();
    let (code, _, err) = overdet(&["index-audit", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("index.fixture"), "{err}");
}

#[test]
fn missing_config_is_an_input_error() {
    assert_eq!(overdet(&["solve"]).0, 2);
    assert_eq!(overdet(&["solve", "--config", "/nonexistent/x.toml"]).0, 2);
    assert_eq!(overdet(&["no-such-command"]).0, 2);
}

#[test]
fn render_reads_back_audit_dumps() {
    let d = tempfile::tempdir().unwrap();
    run_scenario("index-audit", "perturbed-serrin", d.path(), &[]);
    let cfg = d.path().join("render.toml");
    fs::write(
        &cfg,
        "[scenario]\nname = \"r\"\n[render]\nlines = \"z1.csv\"\ncurve = \"curve.csv\"\nreport = \"index-report.json\"\n",
    )
    .unwrap();
    let out = d.path().join("svg");
    let (code, _, err) = overdet(&["render", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let svg = fs::read_to_string(out.join("render.svg")).unwrap();
    assert_eq!(svg.matches("class=\"singularity\"").count(), 1);
    assert!(svg.contains(">\u{2212}1/2<"));
    assert!(svg.contains("<polyline"));
}

#[test]
fn sphere_fixture_render_sums_to_two() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run_scenario("render", "fixture-zeta", d.path(), &[]), 0);
    let svg = fs::read_to_string(d.path().join("render.svg")).unwrap();
    assert_eq!(svg.matches("class=\"singularity\"").count(), 2);
    assert!(svg.contains("index sum 2<"));
}

#[test]
fn rerun_reproduces_artifacts() {
    let d = tempfile::tempdir().unwrap();
    let read_all = |p: &Path| {
        let mut v: Vec<(PathBuf, Vec<u8>)> = fs::read_dir(p)
            .unwrap()
            .map(|e| {
                let p = e.unwrap().path();
                let b = fs::read(&p).unwrap();
                (p, b)
            })
            .collect();
        v.sort();
        v
    };
    for (cmd, name) in [("index-audit", "perturbed-serrin"), ("render", "perturbed-serrin"), ("solve", "solve-monge-ampere")] {
        let out = d.path().join(name).join(cmd);
        run_scenario(cmd, name, &out, &[]);
        let first = read_all(&out);
        run_scenario(cmd, name, &out, &[]);
        assert_eq!(first, read_all(&out), "{cmd} {name}");
    }
}

/// Canonical scenarios compared byte-for-byte against checked-in reports.
/// `UPDATE_GOLDEN=1` rewrites them.
#[test]
fn golden_reports() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let cases = [
        ("verify-family", "serrin-family", "family-report.json"),
        ("extract-neumann", "ellipse-canonical", "neumann.json"),
        ("check-solution", "ellipse-canonical", "solution-report.json"),
        ("check-solution", "ellipse-half-neumann", "solution-report.json"),
        ("index-audit", "perturbed-serrin", "index-report.json"),
        ("index-audit", "fixture-zeta", "index-report.json"),
        ("index-audit", "fixture-tangent-disk", "index-report.json"),
        ("index-audit", "fixture-disk-contradiction", "index-report.json"),
    ];
    let d = tempfile::tempdir().unwrap();
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    for (cmd, name, file) in cases {
        let out = d.path().join(name).join(cmd);
        run_scenario(cmd, name, &out, &[]);
        let got = fs::read_to_string(out.join(file)).unwrap();
        let path = golden.join(name).join(file);
        if update {
            fs::create_dir_all(path.parent().unwrap()).unwrap();
            fs::write(&path, &got).unwrap();
        }
        let want = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(got, want, "{cmd} {name} {file}");
    }
}
