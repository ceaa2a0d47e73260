//! Runs the built binary and validates every envelope against the shipped schema.

use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_mmot-decouple");

fn validator() -> jsonschema::Validator {
    let text = include_str!("../schema/report.schema.json");
    jsonschema::validator_for(&serde_json::from_str(text).unwrap()).unwrap()
}

/// Runs the binary and returns `(exit code, envelope)` after schema validation.
fn run(args: &[&str]) -> (i32, Value) {
    let out = Command::new(BIN).args(args).output().unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    let env: Value =
        serde_json::from_str(&stdout).unwrap_or_else(|e| panic!("{args:?}: stdout is not JSON ({e}): {stdout}"));
    let errors: Vec<String> = validator().iter_errors(&env).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{args:?}: {errors:?}");
    (out.status.code().unwrap(), env)
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn check<'a>(env: &'a Value, name: &str) -> &'a Value {
    env["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap_or_else(|| panic!("no {name}"))
}

#[test]
fn analyze_reports_orientation() {
    let (code, env) = run(&["analyze", "--spec", "ac-quadratic", "--m", "3"]);
    assert_eq!(code, 0);
    assert_eq!(env["data"]["equivalence"]["orientable"]["verdict"], "orientable");
    assert_eq!(env["data"]["equivalence"]["orientable"]["theta"], serde_json::json!([1, 1, 1]));
}

#[test]
fn analyze_parity_obstruction_is_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sum.cfg", "name = pairwise-sum\nm = 3\ncoef = 1\n");
    let (code, env) = run(&["analyze", "--spec-config", &cfg]);
    assert_eq!(code, 0);
    assert_eq!(env["data"]["equivalence"]["orientable"]["verdict"], "not_orientable");
}

#[test]
fn configuration_errors_exit_two() {
    let (code, env) = run(&["analyze", "--spec-config", "/nonexistent/bad_path"]);
    assert_eq!(code, 2);
    assert_eq!(env["failure_stage"], "input");
    assert!(env["data"]["error"].is_string());

    let (code, _) = run(&["solve", "--spec", "no-such-spec"]);
    assert_eq!(code, 2);
    let (code, _) = run(&["analyze", "--spec", "ac-quadratic", "--tol-sign=-1"]);
    assert_eq!(code, 2);
    let (code, _) = run(&["solve", "--spec", "ac-quadratic", "--n", "2"]);
    assert_eq!(code, 2);
}

#[test]
fn malformed_files_are_structured_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.csv", "x1,x2,u1,u2\n0,0,oops\n");
    let (code, _) = run(&["rearrange", "--spec", "ac-quadratic", "--input", &bad]);
    assert_eq!(code, 2);
    let garbage = write(dir.path(), "m.csv", "atom\nnot-a-number\n");
    let (code, _) = run(&["mmot", "--spec", "ac-quadratic", "--marginal", &garbage, "--marginal", &garbage]);
    assert_eq!(code, 2);
    let (code, _) = run(&["decouple", "--spec", "ac-quadratic", "--input", &bad]);
    assert_eq!(code, 2);
}

#[test]
fn mmot_uniform_marginals_match_hand_computation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "neg.cfg", "name = pairwise-sum\nm = 2\ncoef = -1\n");
    let marg = write(dir.path(), "u.csv", "atom\n0\n1\n2\n");
    let out = dir.path().join("out");
    let (code, env) = run(&[
        "mmot",
        "--spec-config",
        &cfg,
        "--marginal",
        &marg,
        "--marginal",
        &marg,
        "--oracle",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let cert = &env["data"]["certificate"];
    assert!((cert["primal"].as_f64().unwrap() + 5.0 / 3.0).abs() < 1e-12);
    assert!((cert["dual"].as_f64().unwrap() + 5.0 / 3.0).abs() < 1e-12);
    assert!(check(&env, "oracle_gap")["pass"].as_bool().unwrap());
    assert!(out.join("coupling.csv").exists());
    let stored: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(stored, env);

    let (code, env) =
        run(&["mmot", "--spec-config", &cfg, "--marginal", &marg, "--marginal", &marg, "--theta", "1,-1"]);
    assert_eq!(code, 1);
    assert_eq!(env["pass"], false);
}

#[test]
fn single_atoms_give_a_trivial_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let one = write(dir.path(), "one.csv", "atom\n0.5\n");
    let (code, env) = run(&["mmot", "--spec", "ac-quadratic", "--marginal", &one, "--marginal", &one, "--oracle"]);
    assert_eq!(code, 0);
    assert_eq!(env["data"]["coupling"]["support"], serde_json::json!([[0.5, 0.5]]));
}

#[test]
fn solve_then_decouple() {
    let dir = tempfile::tempdir().unwrap();
    let solved = dir.path().join("solve");
    let (code, env) =
        run(&["solve", "--spec", "quadratic-coupling", "--L", "12", "--n", "601", "--out", solved.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(check(&env, "residual")["pass"].as_bool().unwrap());
    let profile = solved.join("profile.csv");
    assert!(profile.exists());

    // At n = 601 the Modica margin misses 1e-6 by the O(h²) first-integral drift.
    let (code, env) = run(&["decouple", "--spec", "quadratic-coupling", "--input", profile.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert_eq!(env["failure_stage"], "modica");
    for name in ["on_solution_identity", "global_inequality", "decoupled_pde"] {
        assert!(check(&env, name)["pass"].as_bool().unwrap(), "{name}");
    }

    let fine = dir.path().join("fine");
    let (code, _) = run(&["solve", "--spec", "quadratic-coupling", "--n", "1201", "--out", fine.to_str().unwrap()]);
    assert_eq!(code, 0);
    let pots = dir.path().join("pots");
    let (code, env) = run(&[
        "decouple",
        "--spec",
        "quadratic-coupling",
        "--input",
        fine.join("profile.csv").to_str().unwrap(),
        "--out",
        pots.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{env}");
    assert!(pots.join("potential_1.csv").exists() && pots.join("potential_2.csv").exists());
}

#[test]
fn mixed_orientation_is_refused_by_the_inequality() {
    // Under the quadratic Allen-Cahn coupling every pair must move together
    // (or every pair apart); signs (1,-1,1) do neither.
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let (code, _) = run(&["solve", "--spec", "ac-logsumexp", "--signs", "1,-1,1", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let (code, env) =
        run(&["decouple", "--spec", "ac-quadratic", "--m", "3", "--input", out.join("profile.csv").to_str().unwrap()]);
    assert_eq!(code, 1);
    assert_eq!(env["failure_stage"], "h_monotone");
    assert!(env["data"]["inequality"]["refused"].is_string());
}

#[test]
fn rearrange_tilted_field_decreases_energy() {
    let (code, env) = run(&["rearrange", "--spec", "ac-quadratic", "--seed", "7"]);
    assert_eq!(code, 0);
    assert_eq!(env["seed"], 7);
    assert!(check(&env, "energy_decrease")["pass"].as_bool().unwrap());

    // Round trip through a field file.
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("x1,xN,u1,u2\n");
    for a in 0..5 {
        for b in 0..9 {
            let (x, y) = (a as f64 / 4.0, b as f64 / 8.0);
            // Constant on the bottom and top slices, as rearrangement requires.
            let bump = (std::f64::consts::PI * y).sin() * (3.0 * x).cos();
            csv.push_str(&format!("{x},{y},{},{}\n", 2.0 * y - 1.0 + 0.4 * bump, 1.0 - 2.0 * y + 0.3 * bump));
        }
    }
    let input = write(dir.path(), "tilted.csv", &csv);
    let out = dir.path().join("r");
    let (code, env) = run(&["rearrange", "--input", &input, "--spec", "ac-quadratic", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{env}");
    assert!(out.join("rearranged.csv").exists());
}

#[test]
fn examples_single_case() {
    let dir = tempfile::tempdir().unwrap();
    let (code, env) =
        run(&["examples", "--case", "ac-quadratic", "--m", "2", "--n", "401", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(env["checks"].as_array().unwrap().len() >= 6);
    assert!(dir.path().join("ac-quadratic").join("profile.csv").exists());

    let (code, env) = run(&["examples", "--case", "ac-logsumexp", "--signs", "1,-1,1"]);
    assert_eq!(code, 0, "{env}");
    let (code, _) = run(&["examples", "--case", "nope"]);
    assert_eq!(code, 2);
}

#[test]
fn seeds_are_embedded_and_reproducible() {
    let a = run(&["rearrange", "--spec", "ac-quadratic", "--seed", "11"]).1;
    let b = run(&["rearrange", "--spec", "ac-quadratic", "--seed", "11"]).1;
    assert_eq!(a, b);
    assert_eq!(a["seed"], 11);
}

#[test]
fn closed_stdout_does_not_panic() {
    use std::process::Stdio;
    let mut child = Command::new(BIN)
        .args(["examples", "--case", "ac-quadratic"])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    drop(child.stdout.take());
    let out = child.wait_with_output().unwrap();
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(!stderr.contains("panicked"), "{stderr}");
    assert_eq!(out.status.code(), Some(0));
}
