//! End-to-end tests of the `aip` binary against the shipped problem files:
//! exit codes, report structure, CSV contents and determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_aip")
}

fn testdata(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("testdata").join(name)
}

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn checks_of(v: &serde_json::Value) -> Vec<(String, bool)> {
    v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| (c["name"].as_str().unwrap().to_string(), c["pass"].as_bool().unwrap()))
        .collect()
}

#[test]
fn validate_passes_on_good_data() {
    let tmp = tempfile::tempdir().unwrap();
    for file in ["moment_101.json", "moment_111.json", "tangential_node_i.json"] {
        let out = run(&["validate", testdata(file).to_str().unwrap()], tmp.path());
        assert_eq!(out.status.code(), Some(0), "{file}: {}", String::from_utf8_lossy(&out.stderr));
        let v = stdout_json(&out);
        assert_eq!(v["passed"], serde_json::Value::Bool(true));
        assert!(v["inputs_digest"].as_str().unwrap().len() == 64);
    }
}

#[test]
fn validate_fails_on_indefinite_moments() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["validate", testdata("moment_bad.json").to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    let failed: Vec<_> = checks_of(&v).into_iter().filter(|(_, p)| !p).collect();
    assert!(failed.iter().any(|(n, _)| n == "hankel-psd"), "failed checks: {failed:?}");
}

#[test]
fn parse_error_names_the_field_and_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["validate", testdata("missing_eta.json").to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("eta"), "stderr should name the missing field: {err}");
}

#[test]
fn solve_emits_expected_values_and_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let csv_path = tmp.path().join("out.csv");
    // parameter 0 of the regular moment file is (q,p) = (1,0): m = -1/z,
    // so at z = i the value is i
    let out = run(
        &[
            "solve",
            testdata("moment_101.json").to_str().unwrap(),
            "--param",
            "0",
            "--grid",
            "0,1",
            "--out",
            csv_path.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    let sample = &v["solutions"][0]["samples"][0];
    assert_eq!(sample["status"], "ok");
    let m = sample["m"][0][0].as_array().unwrap();
    assert!(m[0].as_f64().unwrap().abs() < 1e-12);
    assert!((m[1].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "re_lambda,im_lambda,re_m_00,im_m_00,status");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!((row[2].parse::<f64>().unwrap()).abs() < 1e-12);
    assert!((row[3].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(row[4], "ok");
}

#[test]
fn solve_degenerate_forced_parameter() {
    let tmp = tempfile::tempdir().unwrap();
    // m = 1/(1 - z) at z = 2i: 1/(1-2i) = (1+2i)/5
    let out = run(
        &[
            "solve",
            testdata("moment_111.json").to_str().unwrap(),
            "--param",
            "0",
            "--grid",
            "0,2",
        ],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    let m = v["solutions"][0]["samples"][0]["m"][0][0].as_array().unwrap();
    assert!((m[0].as_f64().unwrap() - 0.2).abs() < 1e-12);
    assert!((m[1].as_f64().unwrap() - 0.4).abs() < 1e-12);
}

#[test]
fn solve_tangential_interpolates() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "solve",
            testdata("tangential_node_i.json").to_str().unwrap(),
            "--param",
            "0",
            "--grid",
            "0,2;1,1",
        ],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    // the m = z solution: value at 0+2i is 2i
    let m = v["solutions"][0]["samples"][0]["m"][0][0].as_array().unwrap();
    assert!(m[0].as_f64().unwrap().abs() < 1e-10);
    assert!((m[1].as_f64().unwrap() - 2.0).abs() < 1e-10);
    assert!(checks_of(&v).iter().any(|(n, p)| n.contains("interpolation-node") && *p));
}

#[test]
fn oracle_check_passes_and_flags_corrupt_corrector() {
    let tmp = tempfile::tempdir().unwrap();
    for file in ["moment_101.json", "moment_111.json", "tangential_node_i.json"] {
        let out = run(&["oracle-check", testdata(file).to_str().unwrap()], tmp.path());
        assert_eq!(out.status.code(), Some(0), "{file}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = run(&["oracle-check", testdata("raw_corrupt_v.json").to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    let failed: Vec<_> = checks_of(&v).into_iter().filter(|(_, p)| !p).collect();
    assert!(
        failed.iter().any(|(n, _)| n.contains("corrector-j-unitary")),
        "corrupted corrector should be localized, failed: {failed:?}"
    );
}

#[test]
fn verify_runs_all_parameter_classes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["verify", testdata("mixed_params.json").to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    let names: Vec<String> = checks_of(&v).into_iter().map(|(n, _)| n).collect();
    for prefix in ["param0/", "param1/", "param2/"] {
        assert!(names.iter().any(|n| n.starts_with(prefix)), "missing {prefix} checks");
    }
}

#[test]
fn sample_theta_at_zero_equals_corrector() {
    let tmp = tempfile::tempdir().unwrap();
    // the regular moment realization has corrector I; at z = 0 the
    // resolvent matrix equals it exactly
    let out = run(
        &[
            "sample",
            testdata("moment_101.json").to_str().unwrap(),
            "--segment",
            "line:0,0:0,0:1",
            "--param",
            "1",
            "--theta",
        ],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8_lossy(&out.stdout);
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let theta_cols: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with("re_theta") || h.starts_with("im_theta"))
        .map(|(i, _)| i)
        .collect();
    assert_eq!(theta_cols.len(), 8); // 2d x 2d complex entries, d = 1

    let expect_identity = |name: &str, val: f64| {
        let is_diag_re = name == "re_theta_00" || name == "re_theta_11";
        let expect = if is_diag_re { 1.0 } else { 0.0 };
        assert!((val - expect).abs() < 1e-14, "{name} = {val}");
    };
    for &i in &theta_cols {
        expect_identity(header[i], row[i].parse::<f64>().unwrap());
    }
}

#[test]
fn sample_imag_segment_counts_and_flags_poles() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "sample",
            testdata("moment_101.json").to_str().unwrap(),
            "--segment",
            "imag:0.1:100:25",
            "--param",
            "0",
        ],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8_lossy(&out.stdout);
    assert_eq!(csv.lines().count(), 26); // header + 25 samples
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",ok")));
    // m = -1/z along the axis: at z = iR the value is -1/(iR) = i/R
    let second: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let r: f64 = second[1].parse().unwrap();
    let im_m: f64 = second[3].parse().unwrap();
    assert!((im_m - 1.0 / r).abs() < 1e-12);
}

#[test]
fn reports_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let a = run(&["validate", testdata("moment_101.json").to_str().unwrap()], tmp.path());
    let b = run(&["validate", testdata("moment_101.json").to_str().unwrap()], tmp.path());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.status.code(), b.status.code());
}

#[test]
fn inadmissible_parameter_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    // the degenerate problem forces (0, I); ask for a free parameter file
    let text = std::fs::read_to_string(testdata("moment_111.json")).unwrap();
    let patched = text.replace(
        "\"q\": [[[0.0, 0.0]]], \"p\": [[[1.0, 0.0]]]",
        "\"q\": [[[1.0, 0.0]]], \"p\": [[[0.0, 0.0]]]",
    );
    let path = tmp.path().join("bad_param.json");
    std::fs::write(&path, patched).unwrap();
    let out = run(&["solve", path.to_str().unwrap(), "--param", "0"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("diag(0_nu, q1)"), "error should print the required block form: {err}");
}
