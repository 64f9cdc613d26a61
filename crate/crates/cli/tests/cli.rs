use std::fs;
use std::process::{Command, Output};

use rmoment::frame_kinematics::{recover_state, FluidState, MomentPair};
use rmoment::orthopoly::Precision;
use rmoment::quasi1d::Reduced;

fn rmoment(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rmoment")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| if v.is_empty() { f64::NAN } else { v.parse().unwrap() }).collect())
        .collect();
    (header, rows)
}

#[test]
fn check_passes_everything() {
    let o = rmoment(&["check", "--M", "3", "--zeta", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert!(rows.len() >= 10);
    assert!(rows.iter().all(|r| r.ends_with(",PASS")), "{text}");
}

#[test]
fn check_is_deterministic_for_a_seed() {
    let a = rmoment(&["check", "--M", "2", "--zeta", "0.5,5", "--seed", "3"]);
    let b = rmoment(&["check", "--M", "2", "--zeta", "0.5,5", "--seed", "3"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn negative_temperature_is_inadmissible() {
    let o = rmoment(&["spectrum", "--M", "2", "--state", "1,0,0,0,-0.5", "--nhat", "0,0,1"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("temperature"));
}

#[test]
fn validation_errors_exit_with_two() {
    for args in [
        vec!["coeffs", "--ell", "1", "--zeta", "-1", "-k", "3"],
        vec!["spectrum", "--M", "2", "--state", "1,0,0", "--nhat", "0,0,1"],
        vec!["spectrum", "--M", "2", "--state", "1,0,0,0,1", "--nhat", "0,0,2"],
        vec!["stability", "--M", "2", "--state", "1,0,0,0,1", "--tau", "0"],
        vec!["check", "--M", "0", "--zeta", "1"],
    ] {
        assert_eq!(rmoment(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn spectrum_is_subluminal_and_full_precision() {
    let o = rmoment(&["spectrum", "--M", "2", "--state", "1.2,0.3,-0.2,0.1,0.8", "--extra", "0.02,0.01", "--nhat", "0.6,0,0.8"]);
    assert!(o.status.success());
    let (header, rows) = parse_csv(&stdout(&o));
    assert_eq!(header.len(), 3 + 14);
    assert!(rows[0][3..].iter().all(|l| l.abs() < 1.0));
    let line = stdout(&o).lines().nth(1).unwrap().to_string();
    let mantissa = line.split(',').nth(3).unwrap().split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(mantissa.len(), 17);
}

#[test]
fn coefficients_table() {
    let o = rmoment(&["coeffs", "--ell", "2", "--zeta", "1.5", "-k", "5"]);
    let (header, rows) = parse_csv(&stdout(&o));
    assert_eq!(header[..4], ["k", "a", "b", "c"]);
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r[1] > 0.0 && r[2] > 0.0));
    // cross coefficients stop one degree short
    assert!(rows[5][4].is_nan() && rows[4][4] > 0.0);
}

#[test]
fn assemble_json_shapes() {
    let o = rmoment(&["assemble", "--M", "2", "--state", "1,0.2,0,0,1", "--extra", "0.05"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["w"].as_array().unwrap().len(), 14);
    assert_eq!(v["m"].as_array().unwrap().len(), 4);
    assert_eq!(v["d"].as_array().unwrap().len(), 14);
    assert!(v["det_d"].as_f64().unwrap() < 0.0);
}

#[test]
fn stability_table() {
    let o = rmoment(&["stability", "--M", "2", "--state", "1,0,0,0.3,1", "--tau", "0.5", "--count", "4", "--dir", "1,0,0", "--dir", "0,1,1"]);
    assert!(o.status.success());
    let (_, rows) = parse_csv(&stdout(&o));
    assert_eq!(rows.len(), (1 + 2 * 4) * 14);
    assert!(rows.iter().all(|r| r[4] >= -1e-9));
}

#[test]
fn recover_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let s = FluidState::new(1.3, [0.1, -0.4, 0.2], 0.7).unwrap();
    let mp = MomentPair::equilibrium(&s, 0.05).unwrap();
    let path = dir.path().join("nt.json");
    fs::write(&path, serde_json::json!({"N": mp.n, "T": mp.t}).to_string()).unwrap();
    let o = rmoment(&["recover", "--input", path.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["n"].as_f64().unwrap() - 1.3).abs() < 1e-10);
    assert!((v["theta"].as_f64().unwrap() - 0.7).abs() < 1e-10);
    assert!((v["pi"].as_f64().unwrap() - 0.05).abs() < 1e-10);
    assert!((v["u"][1].as_f64().unwrap() + 0.4).abs() < 1e-10);
}

#[test]
fn solve1d_snapshots_recover_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sod.json");
    fs::write(
        &cfg,
        r#"{"M": 2, "cells": 200, "x_range": [0, 1], "cfl": 0.5, "tau": 0.01, "t_end": 0.4,
            "snapshot_every": 50, "left_state": [1, 0, 0.6], "right_state": [0.125, 0, 0.48], "bc": "outflow"}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = rmoment(&["solve1d", "--config", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let snaps = summary["snapshots"].as_u64().unwrap() as usize;
    assert!(snaps >= 3);
    assert!(summary["drift"].as_array().unwrap().iter().all(|d| d.as_f64().unwrap() < 1e-3));
    for i in 0..snaps {
        let (header, rows) = parse_csv(&fs::read_to_string(out.join(format!("snapshot_{i:05}.csv"))).unwrap());
        assert_eq!(header, ["x", "n", "u", "theta", "Pi", "w4", "w5"]);
        assert_eq!(rows.len(), 200);
        for r in &rows {
            let m = Reduced::new(2, &r[1..], Precision::Double).unwrap().moments();
            let rec = recover_state(&m).unwrap();
            assert!((rec.state.n - r[1]).abs() < 1e-9 * r[1]);
            assert!((rec.state.u[2] - r[2]).abs() < 1e-9);
            assert!((rec.state.theta - r[3]).abs() < 1e-9 * r[3]);
        }
    }
}

#[test]
fn solve1d_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(
        &cfg,
        r#"{"M": 2, "cells": 20, "x_range": [0, 1], "cfl": 0.9, "tau": 0.01, "t_end": 0.1,
            "left_state": [1, 0, 0.6], "right_state": [0.125, 0, 0.48], "bc": "outflow"}"#,
    )
    .unwrap();
    let o = rmoment(&["solve1d", "--config", cfg.to_str().unwrap(), "--out-dir", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cfl"));
}
