use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tricorn-lab"))
        .args(args)
        .env_remove("TRICORN_LAB_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn cn_table_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cn.json");
    let out = lab(&["cn", "--n-max", "5", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rows: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[5]["N"], 13);
    assert!(rows.iter().all(|r| r["orbit_check"] == true));
}

#[test]
fn scaling_csv_passes_the_decay_check() {
    let out = lab(&["scaling", "--n-lo", "2", "--n-hi", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("n,e_n,ratio\n"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn period_three_access_verdict() {
    let out = lab(&["access", "--period", "3", "--epsilon", "0.05"]);
    assert_eq!(out.status.code(), Some(0));
    let rep = json(&out);
    assert_eq!(rep["verdict"], true);
    assert_eq!(rep["period"], 3);
    assert!(rep["E_crit"].as_f64().unwrap().abs() < 1e-6);
}

#[test]
fn period_one_access_off_the_symmetric_point() {
    let out = lab(&["access", "--phi", "0.4", "--budget", "2000"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["verdict"], false);
}

#[test]
fn parabolic_report() {
    let out = lab(&["parabolic", "--period", "1", "--target", "0.3"]);
    assert_eq!(out.status.code(), Some(0));
    let rep = json(&out);
    assert!((rep["e_crit"].as_f64().unwrap() - 0.3).abs() < 1e-6);
    assert!(rep["multiplier_residual"].as_f64().unwrap() < 1e-10);
}

#[test]
fn aspect_check_reports_a_failed_tolerance() {
    let out = lab(&["aspect", "--n-max", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["frames"].as_array().unwrap().len(), 3);
}

#[test]
fn checks_with_exit_status() {
    assert_eq!(lab(&["interval"]).status.code(), Some(0));
    assert_eq!(lab(&["bconst"]).status.code(), Some(0));
    let out = lab(&["rl-fit", "--count", "5000"]);
    assert_eq!(out.status.code(), Some(0));
    assert!((0.4..=0.6).contains(&json(&out)["slope"].as_f64().unwrap()));
}

#[test]
fn koenigs_report() {
    let out = lab(&["koenigs", "--c-re", "-2"]);
    assert_eq!(out.status.code(), Some(0));
    let rep = json(&out);
    assert!((rep["chart"]["lambda"][0].as_f64().unwrap() - 16.0).abs() < 1e-12);
    assert_eq!(rep["coefficients_a"].as_array().unwrap().len(), 5);
}

#[test]
fn images_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    for args in [
        vec!["render", "--px", "32", "--max-iter", "50", "--out", d],
        vec!["julia", "--c-re", "-1", "--px", "32", "--max-iter", "50", "--out", d],
        vec!["baby", "--n", "2", "--px", "16", "--max-iter", "200", "--out", d],
    ] {
        assert_eq!(lab(&args).status.code(), Some(0), "{args:?}");
    }
    for stem in ["render", "julia", "baby_2"] {
        for ext in ["ppm", "png", "json"] {
            assert!(dir.path().join(format!("{stem}.{ext}")).exists(), "{stem}.{ext}");
        }
    }
}

#[test]
fn rays_as_csv_and_json() {
    let out = lab(&["ray", "--c-re", "-2", "--angle-num", "0", "--angle-den", "1", "--g-lo", "1e-3"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("potential,re,im\n"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ray.json");
    let out = lab(&["param-ray", "--angle-num", "1", "--angle-den", "3", "--g-lo", "0.01", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(v.is_object());
}

#[test]
fn reports_are_reproducible() {
    let args = ["argquant", "--n", "3", "--m", "2", "--count", "200000", "--seed", "5"];
    let a = lab(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, lab(&args).stdout);
    assert_eq!(json(&a)["seed"], 5);
    let threaded = Command::new(env!("CARGO_BIN_EXE_tricorn-lab"))
        .args(args)
        .env("TRICORN_LAB_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(a.stdout, threaded.stdout);
}

#[test]
fn usage_and_runtime_errors_exit_one() {
    assert_eq!(lab(&["render", "--bogus"]).status.code(), Some(1));
    assert_eq!(lab(&["nope"]).status.code(), Some(1));
    assert_eq!(lab(&["cn", "--out", "/nonexistent/dir/cn.json"]).status.code(), Some(1));
    assert_eq!(lab(&["cn", "--threads", "0"]).status.code(), Some(1));
    assert_eq!(lab(&["argquant", "--n", "9", "--m", "2"]).status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_tricorn-lab"))
        .args(["cn"])
        .env("TRICORN_LAB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(lab(&["--help"]).status.code(), Some(0));
}
