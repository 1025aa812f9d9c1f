use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conformal2d"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn without_metadata(p: &Path) -> Value {
    let mut v = read_json(p);
    v.as_object_mut().unwrap().remove("metadata");
    v
}

#[test]
fn counterexample_report_embeds_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = run(&[
        "verify",
        "--suite",
        "counterexample",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out);
    assert_eq!(r["schema"], "conformal2d/1");
    assert_eq!(r["pass"], true);
    let c = &r["details"]["counterexample"]["a1_y1"];
    assert_eq!(c["lhs"]["a11"].as_f64().unwrap(), -2.75);
    assert_eq!(c["lhs"]["a22"].as_f64().unwrap(), 0.75);
    assert_eq!(c["rhs"]["a11"].as_f64().unwrap(), -2.0);
    assert_eq!(c["eigen_gap"].as_f64().unwrap(), 0.75);
}

#[test]
fn malformed_config_exits_2_without_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    let out = dir.path().join("r.json");
    for text in [
        r#"{"suites": ["covariance"], "sede": 3}"#,
        "{not json",
        r#"{"tol": 0}"#,
    ] {
        std::fs::write(&cfg, text).unwrap();
        let o = run(&[
            "verify",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 2, "{text}");
        assert!(!out.exists());
    }
    assert_eq!(code(&run(&["verify", "--suite", "nonsense"])), 2);
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"suites": ["covariance", "b-covariance", "bubble"], "seed": 3,
            "sweep": {"maps": 3, "points": 5},
            "fields": [{"family": "quadratic", "parameters": {"a": 0.4}}]}"#,
    )
    .unwrap();
    let paths: Vec<_> = (0..2)
        .map(|i| dir.path().join(format!("r{i}.json")))
        .collect();
    for p in &paths {
        let o = run(&[
            "verify",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(without_metadata(&paths[0]), without_metadata(&paths[1]));
    let r = read_json(&paths[0]);
    assert_eq!(r["seed"], 3);
    assert_eq!(r["checks"][0]["points_tested"], 3 * 10 * 5);
    assert!(r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .any(|c| c["name"] == "a_covariance_config_fields"));

    let pinned: Vec<Vec<u8>> = (0..2)
        .map(|_| {
            Command::new(env!("CARGO_BIN_EXE_conformal2d"))
                .args(["verify", "--suite", "counterexample"])
                .env("SOURCE_DATE_EPOCH", "1700000000")
                .output()
                .unwrap()
                .stdout
        })
        .collect();
    assert_eq!(pinned[0], pinned[1]);
}

#[test]
fn solve_radial_writes_csv_and_dat() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = run(&[
        "solve-radial",
        "--f",
        "sigma2",
        "--grid",
        "0:5:1000",
        "--csv-dir",
        dir.path().to_str().unwrap(),
        "--dat",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 1001);
    assert_eq!(lines[0], "r,v,dv,lambda1,lambda2,residual");
    let max_res = lines[1..]
        .iter()
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert!(max_res <= 1e-9);
    let dat = std::fs::read_to_string(dir.path().join("solution.dat")).unwrap();
    assert!(dat.starts_with("# r v dv"));
    assert_eq!(dat.lines().count(), 1001);
    assert_eq!(read_json(&out)["pass"], true);
}

#[test]
fn solve_radial_sigma1_and_bad_cone() {
    let o = run(&["solve-radial", "--f", "sigma1", "--grid", "0:5:51"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["command"], "solve-radial");
    assert_eq!(code(&run(&["solve-radial", "--cone", "0.5"])), 2);
    assert_eq!(code(&run(&["solve-radial", "--f", "sigma7"])), 2);
    assert_eq!(code(&run(&["solve-radial", "--grid", "5:0:10"])), 2);
}

#[test]
fn envelope_from_profile_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let prof = dir.path().join("p.csv");
    let mut text = String::from("r,v\n");
    for i in 0..201 {
        let r = i as f64 * 0.02;
        text.push_str(&format!("{r},{}\n", r * r));
    }
    std::fs::write(&prof, text).unwrap();
    let csv_dir = dir.path().join("env");
    let o = run(&[
        "envelope",
        "--profile",
        prof.to_str().unwrap(),
        "--eps",
        "1",
        "--csv-dir",
        csv_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let env = std::fs::read_to_string(csv_dir.join("envelope.csv")).unwrap();
    assert_eq!(env.lines().count(), 202);

    let o = run(&[
        "envelope",
        "--field",
        r#"{"family": "bubble", "parameters": {"a": 1, "b": 8}}"#,
        "--grid",
        "0:3:61",
        "--eps",
        "0.1",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(code(&run(&["envelope", "--eps", "1"])), 2);
    assert_eq!(
        code(&run(&[
            "envelope",
            "--profile",
            prof.to_str().unwrap(),
            "--eps",
            "-1"
        ])),
        2
    );
}

#[test]
fn io_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    assert_eq!(
        code(&run(&[
            "envelope",
            "--profile",
            missing.to_str().unwrap(),
            "--eps",
            "1"
        ])),
        3
    );
    let bad_out = dir.path().join("no/such/dir/r.json");
    assert_eq!(
        code(&run(&[
            "verify",
            "--suite",
            "counterexample",
            "--out",
            bad_out.to_str().unwrap()
        ])),
        3
    );
    assert_eq!(
        code(&run(&["verify", "--config", missing.to_str().unwrap()])),
        3
    );
}

#[test]
fn moving_spheres_on_bubble_and_constant() {
    let o = run(&["moving-spheres", "--radii", "60", "--angles", "16"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    let lam = r["details"]["moving_spheres"]["lambda_bar"]
        .as_f64()
        .unwrap();
    assert!((lam - 1.0).abs() < 2e-3, "{lam}");
    assert_eq!(r["details"]["fit"]["is_bubble"], true);

    let o = run(&[
        "moving-spheres",
        "--field",
        r#"{"family": "constant", "parameters": {"c": 0.3}}"#,
        "--radii",
        "20",
        "--angles",
        "8",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["details"]["moving_spheres"]["unbounded"], true);
}

#[test]
fn report_merges_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert_eq!(
        code(&run(&[
            "verify",
            "--suite",
            "counterexample",
            "--out",
            a.to_str().unwrap()
        ])),
        0
    );
    assert_eq!(
        code(&run(&[
            "verify",
            "--suite",
            "monotone",
            "--out",
            b.to_str().unwrap()
        ])),
        0
    );
    let merged = dir.path().join("m.json");
    let o = run(&[
        "report",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--out",
        merged.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let m = read_json(&merged);
    let n = read_json(&a)["checks"].as_array().unwrap().len()
        + read_json(&b)["checks"].as_array().unwrap().len();
    assert_eq!(m["checks"].as_array().unwrap().len(), n);
    assert_eq!(m["details"]["sources"].as_array().unwrap().len(), 2);

    let mut failing = read_json(&a);
    failing["checks"][0]["pass"] = Value::Bool(false);
    std::fs::write(&b, failing.to_string()).unwrap();
    assert_eq!(code(&run(&["report", b.to_str().unwrap()])), 1);

    std::fs::write(&b, r#"{"schema": "other/9"}"#).unwrap();
    assert_eq!(code(&run(&["report", b.to_str().unwrap()])), 2);
}
