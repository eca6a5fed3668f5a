use std::path::PathBuf;
use std::process::{Command, Output};

use hypolift::kernels::calibrated_heisenberg;
use hypolift::model_file::{BuiltModel, GRUSHIN, SINE_SE2};
use hypolift::saturation::{saturate, SaturationOptions};
use hypolift::suite::lifted_operator;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypolift")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn temp_model(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hypolift-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn closure_reports_structure_constants() {
    let o = run(&["closure"]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("X3 = (0, 1) from word [1, 2]"), "{out}");
    assert!(out.contains("c_12^3 = 1"));
    assert!(out.contains("certified = true"));

    let o = run(&["--model", "sine-se2", "closure"]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("c_12^3 = 1") && out.contains("c_13^2 = -1"), "{out}");
}

#[test]
fn hormander_failure_exits_2() {
    let p = temp_model("flat.model", &GRUSHIN.replace("X2 = 0, x1", "X2 = x2, 0"));
    let o = run(&["--model", p.to_str().unwrap(), "closure"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn configuration_errors_exit_3() {
    // no kernel: the sin model declares none
    assert_eq!(code(&run(&["--model", "sine-se2", "verify"])), 3);
    assert_eq!(code(&run(&["--kernel", "none", "verify"])), 3);
    assert_eq!(code(&run(&["--kernel", "/nonexistent/kernel.expr", "saturate"])), 3);
    assert_eq!(code(&run(&["--model", "/nonexistent/model", "closure"])), 3);
    assert_eq!(code(&run(&["saturate", "--grid", "garbage"])), 3);
    let p = temp_model("dependent.model", &GRUSHIN.replace("X2 = 0, x1", "X2 = 2, 0"));
    assert_eq!(code(&run(&["--model", p.to_str().unwrap(), "lift"])), 3);
}

#[test]
fn lift_prints_fields_and_densities() {
    let o = run(&["lift"]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("lift X2 = x1*dx2 + ds1"), "{out}");
    assert!(out.contains("rho = 1/sqrt(1 + x1^2)"));
}

#[test]
fn single_grid_point_matches_library() {
    let o = run(&["saturate", "--grid", "pole=0.3,0.1;s=0;y1=1:1:1;y2=-0.4:-0.4:1"]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8(o.stdout).unwrap();
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[7], "ok");
    let cli: f64 = row[4].parse().unwrap();

    let b = BuiltModel::builtin("grushin").unwrap();
    let (kernel, _) = calibrated_heisenberg(&b.model, &lifted_operator(&b).unwrap()).unwrap();
    let lib = saturate(&kernel, &b.model, &[0.3, 0.1], &[1.0, -0.4], &[0.0], &SaturationOptions::default()).unwrap();
    assert_eq!(cli.to_bits(), lib.value.to_bits());
}

#[test]
fn pole_rows_are_flagged() {
    let o = run(&["saturate", "--grid", "pole=0,0;s=0;y1=0:0:1;y2=0:0:1"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8(o.stdout).unwrap().lines().nth(1).unwrap().ends_with(",pole"));
}

fn check_names(json: &str) -> Vec<String> {
    let v: serde_json::Value = serde_json::from_str(json).unwrap();
    v["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap().to_string()).collect()
}

#[test]
fn quotient_checks_run_iff_section_present() {
    let json = temp_model("with.json", "");
    let with = run(&["--model", "sine-se2", "--kernel", "synthetic", "verify", "--json-out", json.to_str().unwrap()]);
    assert_eq!(code(&with), 0, "{}", String::from_utf8_lossy(&with.stderr));
    let names = check_names(&std::fs::read_to_string(&json).unwrap());
    assert!(names.iter().any(|n| n.starts_with("quotient.")), "{names:?}");

    let cut = SINE_SE2.split("[quotient]").next().unwrap();
    let p = temp_model("noquot.model", cut);
    let json = temp_model("without.json", "");
    let without = run(&["--model", p.to_str().unwrap(), "--kernel", "synthetic", "verify", "--json-out", json.to_str().unwrap()]);
    assert_eq!(code(&without), 0);
    let names = check_names(&std::fs::read_to_string(&json).unwrap());
    assert!(!names.is_empty());
    assert!(names.iter().all(|n| !n.starts_with("quotient.")), "{names:?}");
}
