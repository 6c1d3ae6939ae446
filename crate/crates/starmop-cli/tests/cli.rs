use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn starmop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_starmop"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}); stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

const D3: [&str; 6] = ["--d", "3", "--t0", "0.05", "--t-top", "2"];

fn with<'a>(cmd: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![cmd];
    v.extend_from_slice(&D3);
    v.extend_from_slice(extra);
    v
}

#[test]
fn params_report() {
    let out = starmop(&with("params", &[]));
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["schema"], "1");
    assert_eq!(v["command"], "params");
    let o = &v["outputs"];
    let close = |key: &str, want: f64, tol: f64| {
        let got = o[key].as_f64().unwrap();
        assert!((got - want).abs() < tol, "{key}: {got}");
    };
    close("r", 0.2272748, 1e-7);
    close("x_star", 0.2261015, 1e-7);
    close("rho", 0.7461, 1e-4);
    close("t0_crit", 0.1111, 1e-4);
    assert!(v["diagnostics"]["psi_prime_at_rho"].as_f64().unwrap() < 1e-12);
    assert!(v["timestamp"]["unix_seconds"].as_u64().unwrap() > 0);
}

#[test]
fn droplet_moments() {
    let out = starmop(&with("droplet", &["--moments", "8"]));
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    let m = v["outputs"]["moments"].as_array().unwrap();
    assert_eq!(m.len(), 9);
    for (k, e) in m.iter().enumerate() {
        let re = e[0].as_f64().unwrap();
        let im = e[1].as_f64().unwrap();
        let want = match k {
            0 => 0.05,
            4 => 2.0,
            _ => 0.0,
        };
        assert!(
            (re - want).abs() < 1e-10 && im.abs() < 1e-10,
            "k = {k}: {re} {im}"
        );
    }
}

#[test]
fn verify_passes_for_d2() {
    let out = starmop(&["verify", "--d", "2", "--t0", "0.05", "--t-top", "1"]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(0), "{err}");
    assert_eq!(err.lines().filter(|l| l.starts_with("PASS")).count(), 8);
    let v = json_of(&out);
    assert_eq!(v["outputs"]["passed"], true);
    assert_eq!(v["outputs"]["criteria"].as_array().unwrap().len(), 10);
}

#[test]
fn failing_check_exits_with_2() {
    // two degrees are too few for the zero statistics to reach their bounds
    let out = starmop(&with("verify", &["--n", "6", "--n", "12"]));
    assert_eq!(out.status.code(), Some(2));
    let v = json_of(&out);
    let failed = v["diagnostics"]["failed"].as_array().unwrap();
    assert!(failed.contains(&Value::from(8)));
}

#[test]
fn invalid_config_exits_with_3() {
    for args in [
        with("params", &["--n", "7"]),
        vec!["params", "--d", "3", "--t0", "0.5", "--t-top", "2"],
        vec!["params", "--d", "1", "--t0", "0.05", "--t-top", "2"],
        vec!["params", "--d", "3", "--t-top", "2"],
        with("params", &["--x-hat", "5"]),
        with("params", &["--bogus"]),
        with("mop", &["--precision-bits", "8"]),
    ] {
        let out = starmop(&args);
        assert_eq!(out.status.code(), Some(3), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    let out = starmop(&["params", "--d", "3", "--t0", "-1", "--t-top", "2"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("t0"));
}

fn strip_timestamp(path: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("timestamp");
    v
}

#[test]
fn deterministic_reports() {
    let dir = TempDir::new().unwrap();
    for cmd in ["mop", "curve"] {
        let a = dir.path().join(format!("{cmd}-a.json"));
        let b = dir.path().join(format!("{cmd}-b.json"));
        for p in [&a, &b] {
            let out = starmop(&with(
                cmd,
                &["--n", "6", "--seed", "7", "--out", p.to_str().unwrap()],
            ));
            assert_eq!(out.status.code(), Some(0));
            assert!(out.stdout.is_empty());
        }
        let (va, vb) = (strip_timestamp(&a), strip_timestamp(&b));
        assert_eq!(
            serde_json::to_string(&va).unwrap(),
            serde_json::to_string(&vb).unwrap()
        );
    }
}

#[test]
fn zeros_csv() {
    let out = starmop(&with("mop", &["--n", "6", "--n", "12", "--format", "csv"]));
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,re,im,modulus,ray_angle"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 18);
    assert_eq!(rows.iter().filter(|r| r[0] == 12.0).count(), 12);
    for r in &rows {
        assert!((r[1].hypot(r[2]) - r[3]).abs() < 1e-12);
    }
}

#[test]
fn config_file_and_precedence() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"d": 3, "t0": 0.05, "t_top": 2.0, "grid": 5, "format": "csv"}"#,
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    let out = starmop(&["density", "--config", c]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("k,s,density"));
    assert_eq!(text.lines().count(), 1 + 3 * 5);

    // flags win over the file
    let out = starmop(&["density", "--config", c, "--grid", "3", "--format", "json"]);
    let v = json_of(&out);
    assert_eq!(v["inputs"]["grid"], 3);
    assert_eq!(
        v["outputs"]["densities"][0]["samples"]
            .as_array()
            .unwrap()
            .len(),
        3
    );

    std::fs::write(&cfg, "{not json").unwrap();
    assert_eq!(starmop(&["params", "--config", c]).status.code(), Some(3));
}

#[test]
fn airy_and_curve() {
    let out = starmop(&[
        "airy", "--d", "2", "--t0", "0.05", "--t-top", "1", "--grid", "11",
    ]);
    let v = json_of(&out);
    // x = 0 is the middle sample; p_0 = Ai there
    let ai0 = v["outputs"]["samples"][5]["values"][0][0].as_f64().unwrap();
    assert!((ai0 - 0.355_028_053_887_817_2).abs() < 1e-14);
    assert!(v["diagnostics"]["ode_residual"].as_f64().unwrap() < 1e-10);

    let v = json_of(&starmop(&with("curve", &[])));
    let c = v["outputs"]["c"].as_array().unwrap();
    assert!((c[2].as_f64().unwrap() - 2.0).abs() < 1e-10);
    assert!((c[1].as_f64().unwrap() - 0.1).abs() < 1e-10);
    assert_eq!(v["outputs"]["all_positive"], true);
}
