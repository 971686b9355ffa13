use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsens")).current_dir(dir).args(args).output().unwrap()
}

fn header(dir: &Path, file: &str) -> String {
    std::fs::read_to_string(dir.join(file)).unwrap().lines().next().unwrap().to_string()
}

fn error_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stderr).unwrap()
}

#[test]
fn csv_headers() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cases: [(&[&str], &str); 7] = [
        (&["decompose"], "degree,norm_sq"),
        (&["influence", "--function", "and3"], "coord,inf1,inf2,classical"),
        (&["noise-cov", "--samples", "1000"], "epsilon,cov_exact,cov_mc,stderr"),
        (&["bounds-check"], "mode,epsilon,q,eta_q,gamma,lhs,rhs,holds"),
        (&["tribes", "--t-grid", "1000,3000"], "t,a_t,p_t,m_t,r_t,q_eps,cov_exact,var,w_inf1,w_classical,lhs_ratio,rhs_ratio,ratio"),
        (&["polymer", "--N", "64", "--samples", "50"], "N,beta_N,sigma_N,R_N,W,W_times_logN,cov_mc,stderr"),
        (&["counterexample", "--N", "10"], "N,epsilon,var,cov,cov_over_var,inf1,W,W_times_N,q,mq_lower,n_power"),
    ];
    for (args, expected) in cases {
        let o = run(d, args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(header(d, &format!("{}.csv", args[0])), expected);
        assert!(d.join(format!("{}.manifest.json", args[0])).exists());
    }
}

#[test]
fn json_output_parses() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), &["hyper", "--format", "json", "--out", "h.json"]).status.success());
    let rows: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("h.json")).unwrap()).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert!((rows[1]["eta_q"].as_f64().unwrap() - 1.0 / 3f64.sqrt()).abs() < 1e-9);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("run.toml"), "seed = 9\n\n[noise-cov]\nsamples = 500\nfunction = \"parity3\"\n").unwrap();
    let o = run(d, &["noise-cov", "--config", "run.toml", "--samples", "800", "--out", "n.csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("n.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 9);
    assert_eq!(m["params"]["samples"], 800);
    assert_eq!(m["params"]["function"], "parity3");

    let o = run(d, &["noise-cov", "--config", "run.toml", "--seed", "2", "--out", "n.csv"]);
    assert!(o.status.success());
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("n.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 2);
    assert_eq!(m["params"]["samples"], 500);
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.toml"), "[hyper]\nlaww = \"rademacher\"\n").unwrap();
    for args in [
        &["hyper", "--config", "bad.toml"][..],
        &["hyper", "--bogus"],
        &["decompose", "--function", "maj4"],
        &["hyper", "--law", "custom:0/0.5,1/0.6"],
        &["decompose", "--workers", "0"],
        &["polymer", "--N", "4"],
    ] {
        let o = run(d, args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let e = error_json(&o);
        assert_eq!(e["exit_code"], 2);
        assert!(e["message"].as_str().is_some_and(|m| !m.is_empty()));
    }
    assert!(!d.join("hyper.csv").exists());
}

#[test]
fn enumeration_cap_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["decompose", "--function", "random-boolean:25"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_json(&o)["exit_code"], 3);
}

#[test]
fn file_fixture_and_custom_law() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let f = r#"{"laws": [{"atoms": [0, 1, 2], "probs": [0.2, 0.3, 0.5]}, {"atoms": [-1, 1], "probs": [0.5, 0.5]}],
               "values": [0, 1, 0, 1, 1, 0]}"#;
    std::fs::write(d.join("f.json"), f).unwrap();
    assert!(run(d, &["decompose", "--function", "file:f.json"]).status.success());
    assert!(run(d, &["hyper", "--law", "custom:-1/0.25,0/0.25,2/0.5", "--q", "4"]).status.success());
}

#[test]
fn field_dump_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = run(d, &["polymer", "--N", "64", "--samples", "20", "--dump-field", "fields"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let bytes = std::fs::read(d.join("fields").join("field-N64.nspf")).unwrap();
    assert_eq!(&bytes[..4], b"NSPF");
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["noise-cov", "--function", "random-real:5:3", "--seed", "3", "--workers", "2", "--samples", "5000"];
    assert!(run(a.path(), &args).status.success());
    assert!(run(b.path(), &args).status.success());
    for f in ["noise-cov.csv", "noise-cov.manifest.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
}
