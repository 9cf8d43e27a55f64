use std::path::Path;
use std::process::{Command, Output};

use polysjt_cli::check::CheckReport;
use polysjt_cli::integrate::{IntegrateReport, ScanReport};
use polysjt_cli::solve::SolveReport;
use polysjt_cli::stability::StabilityTable;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use tempfile::TempDir;

fn polysjt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polysjt")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

/// Parses into the report type and serializes again; the JSON must be unchanged.
fn round_trip<T: Serialize + DeserializeOwned>(p: &Path) -> T {
    let raw = read_json(p);
    let report: T = serde_json::from_value(raw.clone()).unwrap();
    assert_eq!(serde_json::to_value(&report).unwrap(), raw);
    report
}

fn write(dir: &TempDir, name: &str, v: &Value) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p.display().to_string()
}

fn out(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).display().to_string()
}

fn circle_cubic_json() -> Value {
    json!({
        "n": 2,
        "L": [[0.0, 0.0], [0.0, -1.0]],
        "quadratic": [[0, 0, 0, 1.0], [0, 1, 1, 1.0]],
        "cubic": [[1, 0, 0, 0, 0.75]],
        "F": [-1.0, 0.9]
    })
}

/// `4U_i + 0.1·U_i·U_{i+1} + 0.5·U_{i+1} = b_i`, diagonally dominant near 1.
fn dominant_json() -> Value {
    json!({
        "n": 3,
        "L": [[4.0, 0.5, 0.0], [0.0, 4.0, 0.5], [0.5, 0.0, 4.0]],
        "quadratic": [[0, 0, 1, 0.1], [1, 1, 2, 0.1], [2, 2, 0, 0.1]],
        "F": [-4.0, -4.0, -4.0]
    })
}

#[test]
fn solve_newton_on_circle_cubic_file() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "circle_cubic.json", &circle_cubic_json());
    let o = out(&dir, "trace.json");
    let r = polysjt(&["solve", "--method", "newton", &input, "--out", &o]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let rep: SolveReport = round_trip(Path::new(&o));
    let u = rep.trace.final_state();
    assert!((u[0] - 0.3569).abs() < 1e-4 && (u[1] - 0.9341).abs() < 1e-4, "{u:?}");
    assert!(rep.trace.final_residual() <= 1e-10);
}

#[test]
fn every_solver_runs_on_the_preset() {
    let dir = TempDir::new().unwrap();
    for m in ["newton", "classic-rank1", "modified-rank1"] {
        let r = polysjt(&["solve", "circle-cubic", "--method", m, "--out", &out(&dir, "t.json")]);
        assert_eq!(code(&r), 0, "{m}: {}", stderr(&r));
    }
}

#[test]
fn sor_with_unit_omega_matches_gauss_seidel() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "dom.json", &dominant_json());
    let (gs, sor) = (out(&dir, "gs.json"), out(&dir, "sor.json"));
    assert_eq!(code(&polysjt(&["solve", &input, "--method", "gauss-seidel", "--out", &gs])), 0);
    assert_eq!(code(&polysjt(&["solve", &input, "--method", "sor", "--omega", "1.0", "--out", &sor])), 0);
    let a: SolveReport = round_trip(Path::new(&gs));
    let b: SolveReport = round_trip(Path::new(&sor));
    assert_eq!(a.trace.iterates, b.trace.iterates);
    assert_eq!(a.trace.residual_norms, b.trace.residual_norms);
}

#[test]
fn solver_failure_exits_two() {
    let dir = TempDir::new().unwrap();
    let r = polysjt(&["solve", "circle-cubic", "--method", "newton", "--max-iter", "1", "--out", &out(&dir, "t.json")]);
    assert_eq!(code(&r), 2);
    // the trace is still written
    let rep: SolveReport = round_trip(&dir.path().join("t.json"));
    assert!(!rep.trace.status.is_converged());
}

#[test]
fn usage_and_io_errors_exit_one() {
    assert_eq!(code(&polysjt(&["solve", "/nonexistent/system.json"])), 1);
    assert_eq!(code(&polysjt(&["solve", "circle-cubic", "--method", "bisection"])), 1);
    assert_eq!(code(&polysjt(&["frobnicate"])), 1);
    assert_eq!(code(&polysjt(&["solve", "circle-cubic", "--method", "sor", "--omega", "2.5"])), 1);
    assert_eq!(code(&polysjt(&["solve", "circle-cubic", "--state", "1,2,3"])), 1);
    assert_eq!(code(&polysjt(&["integrate", "circle-cubic"])), 1);
    assert_eq!(code(&polysjt(&["--help"])), 0);
}

#[test]
fn malformed_json_names_the_field() {
    let dir = TempDir::new().unwrap();
    let mut v = circle_cubic_json();
    v.as_object_mut().unwrap().remove("F");
    let r = polysjt(&["solve", &write(&dir, "a.json", &v)]);
    assert_eq!(code(&r), 1);
    assert!(stderr(&r).contains("`F`"), "{}", stderr(&r));
    let mut v = circle_cubic_json();
    v["quadratic"] = json!([[0, 0, 1]]);
    let r = polysjt(&["solve", &write(&dir, "b.json", &v)]);
    assert_eq!(code(&r), 1);
    assert!(stderr(&r).contains("quadratic"), "{}", stderr(&r));
}

#[test]
fn check_jacobian_exact_and_finite_difference() {
    let dir = TempDir::new().unwrap();
    let o = out(&dir, "c.json");
    let r = polysjt(&["check-jacobian", "circle-cubic", "--out", &o]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let rep: CheckReport = round_trip(Path::new(&o));
    assert_eq!(rep.states.len(), 20);
    assert!(rep.max_deviation.unwrap() <= 1e-12);
    assert!(rep.max_fd_rel_error <= 1e-6);
    assert!(rep.max_identity_residual.unwrap() <= 1e-12);

    let r = polysjt(&["check-jacobian", "circle-cubic", "--approx-fd", "1e-3", "--random", "5", "--out", &o]);
    assert_eq!(code(&r), 0);
    let rep: CheckReport = round_trip(Path::new(&o));
    assert_eq!(rep.states.len(), 5);
    assert!(rep.max_deviation.unwrap() > 0.0);
}

#[test]
fn check_jacobian_with_matrix_file() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "j.json", &json!([[1.0, 0.0], [0.0, 1.0]]));
    let o = out(&dir, "c.json");
    let r = polysjt(&["check-jacobian", "circle-cubic", "--state", "0.5,1", "--approx", &m, "--out", &o]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let rep: CheckReport = round_trip(Path::new(&o));
    assert_eq!(rep.states.len(), 1);
    assert!(rep.max_deviation.unwrap() > 0.1);
    let bad = write(&dir, "k.json", &json!([[1.0, 0.0, 0.0]]));
    assert_eq!(code(&polysjt(&["check-jacobian", "circle-cubic", "--approx", &bad])), 1);
}

#[test]
fn check_jacobian_on_expression_tree() {
    let dir = TempDir::new().unwrap();
    // exp(U) ∘ (M·U)
    let tree = json!({
        "op": "hproduct",
        "children": [
            {"op": "hfunction", "name": "exp"},
            {"op": "linear", "matrix": [[1.0, 2.0], [-1.0, 0.5]]}
        ]
    });
    let input = write(&dir, "tree.json", &tree);
    let o = out(&dir, "c.json");
    let r = polysjt(&["check-jacobian", &input, "--out", &o]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let rep: CheckReport = round_trip(Path::new(&o));
    assert!(rep.max_fd_rel_error <= 1e-6);
    assert!(rep.max_identity_residual.is_none());
    // non-polynomial trees cannot be solved
    assert_eq!(code(&polysjt(&["solve", &input])), 1);
}

#[test]
fn stability_tables() {
    let dir = TempDir::new().unwrap();
    let o = out(&dir, "s.json");
    let r = polysjt(&["stability", "burgers", "--out", &o]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let t: StabilityTable = round_trip(Path::new(&o));
    for row in &t.rows {
        let (e, rk) = (row.explicit_euler.unwrap(), row.rk4.unwrap());
        assert!(e > 0.0 && rk > e);
        assert!((rk / e - 1.3925).abs() < 1e-12);
        assert!(row.burgers.unwrap() <= e);
    }

    let diag = json!({"n": 3, "L": [[-1.0, 0.0, 0.0], [0.0, -2.0, 0.0], [0.0, 0.0, -4.0]], "F": [0.0, 0.0, 0.0]});
    let r = polysjt(&["stability", &write(&dir, "d.json", &diag), "--out", &o]);
    assert_eq!(code(&r), 0);
    let t: StabilityTable = round_trip(Path::new(&o));
    let linf = t.rows.iter().find(|r| r.norm == polysjt::NormKind::Linf).unwrap();
    assert_eq!(linf.explicit_euler, Some(0.5));
    assert!(t.negdef);

    let r = polysjt(&["stability", "circle-cubic", "--state", "0.5,-1", "--out", &o]);
    assert_eq!(code(&r), 0);
    let t: StabilityTable = round_trip(Path::new(&o));
    assert!(!t.negdef && t.lambda_max_symmetric > 0.0);
}

#[test]
fn integrate_burgers_below_bound_and_csv_layout() {
    let dir = TempDir::new().unwrap();
    let o = out(&dir, "t.json");
    let r = polysjt(&["integrate", "burgers", "--h-factor", "0.9", "--out", &o]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let rep: IntegrateReport = round_trip(Path::new(&o));
    assert!(rep.trajectory.completed());
    assert!(*rep.trajectory.times.last().unwrap() >= 1.0);

    let c = out(&dir, "t.csv");
    assert_eq!(code(&polysjt(&["integrate", "burgers", "--n", "8", "--h-factor", "0.9", "--format", "csv", "--out", &c])), 0);
    let text = std::fs::read_to_string(&c).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,U0,U1,U2,U3,U4,U5,U6,U7,h_bound,negdef");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 11);
    assert!(first[9].parse::<f64>().unwrap() > 0.0);
    assert_eq!(first[10], "");
    let last: Vec<&str> = text.lines().last().unwrap().split(',').collect();
    assert_eq!(last[9], "");
}

#[test]
fn integrate_divergence_exits_two() {
    let dir = TempDir::new().unwrap();
    let o = out(&dir, "t.json");
    let r = polysjt(&["integrate", "burgers", "--h-factor", "50", "--steps", "20", "--out", &o]);
    assert_eq!(code(&r), 2);
    assert!(stderr(&r).contains("diverged at step"), "{}", stderr(&r));
    let rep: IntegrateReport = round_trip(Path::new(&o));
    assert!(matches!(rep.trajectory.status, polysjt::TrajectoryStatus::Diverged { .. }));
}

#[test]
fn scan_reports_threshold_above_bound() {
    let dir = TempDir::new().unwrap();
    let o = out(&dir, "scan.json");
    let r = polysjt(&["integrate", "burgers", "--scan", "--out", &o]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let rep: ScanReport = round_trip(Path::new(&o));
    assert!(rep.threshold >= rep.a_priori_bound);
    assert!(stderr(&r).contains("threshold"));
}

#[test]
fn implicit_euler_on_stiff_linear_system() {
    let dir = TempDir::new().unwrap();
    let sys = json!({"n": 2, "L": [[-1.0, 0.0], [0.0, -1000.0]], "F": [0.0, 0.0]});
    let input = write(&dir, "stiff.json", &sys);
    let o = out(&dir, "t.json");
    let r = polysjt(&["integrate", &input, "--method", "implicit-euler", "--h", "1", "--steps", "10", "--out", &o]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let rep: IntegrateReport = round_trip(Path::new(&o));
    let norms: Vec<f64> = rep.trajectory.states.iter().map(|s| s.norm_inf()).collect();
    assert!(norms.windows(2).all(|w| w[1] < w[0]));
    assert!(rep.trajectory.per_step_reports.iter().all(|r| r.negdef_certificate == Some(true)));
}

#[test]
fn reports_are_valid_inputs() {
    let dir = TempDir::new().unwrap();
    let first = out(&dir, "a.json");
    assert_eq!(code(&polysjt(&["stability", "burgers", "--n", "12", "--re", "40", "--out", &first])), 0);
    let second = out(&dir, "b.json");
    assert_eq!(code(&polysjt(&["stability", &first, "--out", &second])), 0);
    assert_eq!(read_json(Path::new(&first)), read_json(Path::new(&second)));

    let solved = out(&dir, "s.json");
    assert_eq!(code(&polysjt(&["solve", "circle-cubic", "--out", &solved])), 0);
    let again = out(&dir, "s2.json");
    assert_eq!(code(&polysjt(&["solve", &solved, "--out", &again])), 0);
    assert_eq!(read_json(Path::new(&solved)), read_json(Path::new(&again)));
}

#[test]
fn seeded_runs_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let run = |seed: &str, name: &str| {
        let o = out(&dir, name);
        assert_eq!(code(&polysjt(&["check-jacobian", "burgers", "--n", "8", "--seed", seed, "--format", "csv", "--out", &o])), 0);
        std::fs::read(&o).unwrap()
    };
    assert_eq!(run("7", "a.csv"), run("7", "b.csv"));
    assert_ne!(run("7", "a.csv"), run("8", "c.csv"));
}
