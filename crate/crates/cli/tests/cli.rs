use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn solgas(args: &[&str], config_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_solgas"));
    cmd.args(args).env_remove("SOLGAS_CONFIG_DIR");
    if let Some(d) = config_dir {
        cmd.env("SOLGAS_CONFIG_DIR", d);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!(
            "{e}\nstdout: {}\nstderr: {}",
            String::from_utf8_lossy(&o.stdout),
            String::from_utf8_lossy(&o.stderr)
        )
    })
}

fn without_timestamp(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timestamp");
    v
}

#[test]
fn flat_kdv_verifies() {
    let o = solgas(
        &[
            "verify",
            "--family",
            "kdv_flat",
            "--n",
            "3",
            "--samples",
            "30",
            "--seed",
            "7",
            "--json",
        ],
        None,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let v = json(&o);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["command"], "verify");
    assert_eq!(v["verdict"], "PASS");
    assert_eq!(v["result"]["n"], 3);
    assert!(v["timestamp"].as_u64().unwrap() > 0);
}

#[test]
fn declared_failure_exits_zero() {
    let o = solgas(
        &[
            "verify",
            "--family",
            "lieb_liniger_cc",
            "--c",
            "1",
            "--expect",
            "fail",
        ],
        None,
    );
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("verdict FAIL (expected FAIL)"));
    // same run expecting a pass
    let o = solgas(
        &[
            "verify",
            "--family",
            "lieb_liniger_cc",
            "--c",
            "1",
            "--expect",
            "pass",
        ],
        None,
    );
    assert_eq!(code(&o), 1);
}

#[test]
fn tolerance_override_can_flip_a_verdict() {
    let o = solgas(
        &[
            "verify",
            "--family",
            "kdv_flat",
            "--n",
            "2",
            "--tol",
            "flat=1e-30",
            "--json",
        ],
        None,
    );
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["verdict"], "FAIL");
    let o = solgas(
        &["verify", "--family", "kdv_flat", "--tol", "nonsense=1"],
        None,
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn usage_and_config_errors_exit_two() {
    assert_eq!(
        code(&solgas(&["verify", "--family", "no_such_family"], None)),
        2
    );
    assert_eq!(code(&solgas(&["verify"], None)), 2);
    assert_eq!(
        code(&solgas(&["verify", "--family", "kdv_ii", "--n", "3"], None)),
        2
    );
    assert_eq!(
        code(&solgas(
            &["classify", "--kernel", "kdv", "--s", "eta +"],
            None
        )),
        2
    );
}

#[test]
fn catalogue_lists_builtins_only_for_an_empty_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = solgas(&["catalogue", "--json"], Some(dir.path()));
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["result"]["kernels"].as_array().unwrap().len(), 7);
    let plain = json(&solgas(&["catalogue", "--json"], None));
    assert_eq!(
        v["result"]["families"].as_array().unwrap().len(),
        plain["result"]["families"].as_array().unwrap().len()
    );
    assert!(v["result"]["sources"].as_array().unwrap().is_empty());
}

#[test]
fn user_kernel_and_family_from_config_dir() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("k.json"),
        r#"{"name": "my_rod", "G": "-2", "S": "eta"}"#,
    )
    .unwrap();
    std::fs::write(
        dir.path().join("f.json"),
        r#"{"name": "rod_flat", "kernel": "my_rod", "regime": "flat", "s": "1", "density": "-eta^2/2"}"#,
    )
    .unwrap();
    let cat = json(&solgas(&["catalogue", "--json"], Some(dir.path())));
    let names: Vec<&str> = cat["result"]["kernels"]
        .as_array()
        .unwrap()
        .iter()
        .map(|k| k["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"my_rod"));

    // the flag wins over the environment
    let empty = tempfile::tempdir().unwrap();
    let dir_arg = dir.path().to_str().unwrap();
    let o = solgas(
        &[
            "--config-dir",
            dir_arg,
            "verify",
            "--family",
            "rod_flat",
            "--n",
            "2",
            "--json",
        ],
        Some(empty.path()),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["result"]["kernel"], "my_rod");
}

#[test]
fn broken_config_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{ not json").unwrap();
    assert_eq!(code(&solgas(&["catalogue"], Some(dir.path()))), 2);
}

#[test]
fn reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let o = solgas(
            &[
                "verify",
                "--family",
                "kdv_cc",
                "--n",
                "2",
                "--out",
                p.to_str().unwrap(),
            ],
            None,
        );
        assert_eq!(code(&o), 0);
    }
    let read = |p: &Path| -> Value {
        without_timestamp(serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap())
    };
    let (va, vb) = (read(&a), read(&b));
    assert_eq!(
        serde_json::to_string(&va)
            .unwrap()
            .replace("a.json", "b.json"),
        serde_json::to_string(&vb).unwrap()
    );
}

#[test]
fn classify_inline_metric() {
    let o = solgas(
        &["classify", "--kernel", "lieb_liniger", "--s", "1", "--json"],
        None,
    );
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["result"]["class"], "flat");
    let o = solgas(
        &["classify", "--family", "kdv_cc", "--n", "2", "--json"],
        None,
    );
    let v = json(&o);
    assert_eq!(v["result"]["class"], "constant_curvature");
    assert!((v["result"]["curvature"].as_f64().unwrap() + 1.0).abs() < 1e-6);
    let o = solgas(
        &[
            "classify",
            "--kernel",
            "lieb_liniger",
            "--s",
            "1",
            "--psi",
            "-eta^2",
        ],
        None,
    );
    assert_eq!(code(&o), 1);
}

#[test]
fn conditions_template_fit() {
    let o = solgas(
        &[
            "conditions",
            "--kernel",
            "lieb_liniger",
            "--fit",
            "--c",
            "1",
            "--expect",
            "fail",
            "--json",
        ],
        None,
    );
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert!(v["result"]["pair_residual"].as_f64().unwrap() > 1e-3);
    assert_eq!(v["result"]["fit"]["degree"], 4);

    let o = solgas(&["conditions", "--family", "kdv_cc", "--n", "3"], None);
    assert_eq!(code(&o), 0);
}

#[test]
fn simulate_writes_snapshots_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = solgas(
        &[
            "simulate",
            "--kernel",
            "kdv",
            "--n",
            "2",
            "--grid",
            "100",
            "--tmax",
            "0.1",
            "--out-dir",
            out.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let csvs: Vec<_> = std::fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "csv"))
        .collect();
    assert!(csvs.len() >= 2);
    let first = std::fs::read_to_string(out.join("snapshot_00000.csv")).unwrap();
    assert!(first.starts_with("x,u1,u2,eta1,eta2\n"));
    assert_eq!(first.lines().count(), 101);
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "PASS");
    assert_eq!(report["result"]["density_family"], "kdv_flat");
    let drift = report["result"]["conservation"]["mass_drift"]
        .as_array()
        .unwrap();
    assert!(drift.iter().all(|d| d.as_f64().unwrap() <= 1e-10));
    assert_eq!(report["result"]["characteristics"]["verdict"], "PASS");
}

#[test]
fn simulate_from_config_and_breakdown_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    // unit rods with a Burgers-like speed pile up until the system degenerates
    let cfg = r#"{
        "grid": {"m": 40, "x_min": 0, "x_max": 1},
        "t_max": 5,
        "kernel": {"name": "rods", "G": "-1", "S": "eta^2"},
        "initial": {
            "u": [{"kind": "constant", "value": 0.1}, {"kind": "constant", "value": 0.1}],
            "eta": [
                {"kind": "gaussian", "base": 0.5, "amplitude": 0.8, "center": 0.25, "width": 0.1},
                {"kind": "gaussian", "base": 1.0, "amplitude": 0.4, "center": 0.75, "width": 0.1}
            ]
        }
    }"#;
    let path = dir.path().join("sim.json");
    std::fs::write(&path, cfg).unwrap();
    let out = dir.path().join("run");
    let o = solgas(
        &[
            "simulate",
            "--config",
            path.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["exit_code"], 3);
    assert!(report["result"]["conservation"]["aborted"].is_string());
    assert!(out.join("snapshot_00000.csv").exists());

    // flags and a config file do not mix
    let o = solgas(
        &[
            "simulate",
            "--config",
            path.to_str().unwrap(),
            "--grid",
            "10",
        ],
        None,
    );
    assert_eq!(code(&o), 2);
}
