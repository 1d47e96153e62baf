use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use essrate::cli::config::{self, SimulationReport};

fn essrate(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_essrate"));
    c.args(args).env_remove("ESSRATE_THREADS");
    for (k, v) in envs {
        c.env(k, v);
    }
    c.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn euler_config(dir: &Path, x0: &str) -> String {
    let body = format!(
        r#"{{
  "objective": {{"kind": "quadratic", "eigs": [10, 1]}},
  "model": {{"name": "gradient_flow"}},
  "method": "euler",
  "policy": {{"kind": "fixed", "h": 0.1}},
  "stop": {{"max_steps": 50}},
  "metrics": ["gap", "dist"],
  "x0": {x0},
  "fits": [{{"metric": "gap", "kind": "linear_in_k", "window": 0.5}}],
  "outputs": {{
    "trajectory_csv": "{d}/traj.csv",
    "report_json": "{d}/report.json",
    "svg": "{d}/plot.svg"
  }}
}}"#,
        d = dir.display()
    );
    write_config(dir, "euler.json", &body)
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(i).unwrap().parse().unwrap()).collect()
}

#[test]
fn simulate_gap_matches_per_component_formula() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = euler_config(dir.path(), "[1.0, 1.0]");
    let out = essrate(&["simulate", &cfg], &[]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("traj.csv")).unwrap();
    assert!(csv.starts_with("k,t,h,rho,phi_gap,phi_dist,phi_minsgrad,phi_tmmdist,y0,y1\n"));
    let gap = column(&csv, "phi_gap");
    assert_eq!(gap.len(), 51);
    for (k, g) in gap.iter().enumerate() {
        let want: f64 = [10.0f64, 1.0]
            .iter()
            .map(|l| 0.5 * l * (1.0 - 0.1 * l).powi(2 * k as i32))
            .sum();
        assert!((g - want).abs() <= 1e-12 * want, "k={k}: {g} vs {want}");
    }
    let svg = fs::read_to_string(dir.path().join("plot.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = euler_config(dir.path(), "[1.0, 1.0]");
    assert_eq!(code(&essrate(&["simulate", &cfg], &[])), 0);
    let text = fs::read_to_string(dir.path().join("report.json")).unwrap();
    let report: SimulationReport = serde_json::from_str(&text).unwrap();
    assert_eq!(report.steps, 50);
    let fit = report.fits[0].fit.as_ref().unwrap();
    // The slowest mode contracts by 0.9 per step.
    assert!((fit.exponent + 2.0 * 0.9f64.ln()).abs() < 1e-6);
    let again = serde_json::to_string_pretty(&report).unwrap();
    assert_eq!(serde_json::from_str::<SimulationReport>(&again).unwrap(), report);
    // The embedded config is itself a valid config.
    let cfg_text = serde_json::to_string(&report.config).unwrap();
    assert_eq!(config::parse(&cfg_text).unwrap()[0], report.config);
}

#[test]
fn start_at_optimum_gives_flat_zero_gap() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = euler_config(dir.path(), "[0.0, 0.0]");
    assert_eq!(code(&essrate(&["simulate", &cfg], &[])), 0);
    let csv = fs::read_to_string(dir.path().join("traj.csv")).unwrap();
    assert!(column(&csv, "phi_gap").iter().all(|g| *g == 0.0));
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let body = |name: &str| {
        format!(
            r#"{{"objective": {{"kind": "quadratic", "eigs": [10, 4, 1]}},
               "model": {{"name": "tmm", "rescaling": {{"kind": "linear", "r": 0.2}}}},
               "stop": {{"t_max": 30}}, "metrics": ["gap", "tmmdist"],
               "outputs": {{"trajectory_csv": "{}/{name}.csv"}}}}"#,
            dir.path().display()
        )
    };
    let a = write_config(dir.path(), "a.json", &body("a"));
    let b = write_config(dir.path(), "b.json", &body("b"));
    assert_eq!(code(&essrate(&["simulate", &a], &[("ESSRATE_THREADS", "1")])), 0);
    assert_eq!(code(&essrate(&["simulate", &b], &[("ESSRATE_THREADS", "3")])), 0);
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    let b = fs::read(dir.path().join("b.csv")).unwrap();
    assert!(a.len() > 1000);
    assert_eq!(a, b);
}

#[test]
fn sweep_writes_one_file_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        r#"{{"objective": {{"kind": "quadratic", "eigs": [10, 1]}},
           "model": {{"name": "gradient_flow"}},
           "method": "euler", "policy": {{"kind": "stability_capped", "safety": 1.0}},
           "stop": {{"max_steps": 20}},
           "sweep": {{"model.rescaling": [{{"kind": "linear", "r": 0.1}}, {{"kind": "linear", "r": 10}}]}},
           "outputs": {{"trajectory_csv": "{}/s.csv"}}}}"#,
        dir.path().display()
    );
    let cfg = write_config(dir.path(), "sweep.json", &body);
    let out = essrate(&["simulate", &cfg], &[]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let a = fs::read_to_string(dir.path().join("s-0.csv")).unwrap();
    let b = fs::read_to_string(dir.path().join("s-1.csv")).unwrap();
    // The rescaling factor cancels: same iterates, time axes differ by 100x.
    assert_eq!(column(&a, "y0"), column(&b, "y0"));
    let (ta, tb) = (column(&a, "t"), column(&b, "t"));
    assert!((ta[20] / tb[20] - 100.0).abs() < 1e-9);
    assert_eq!(stdout(&out).lines().filter(|l| l.starts_with('[')).count(), 2);
}

#[test]
fn malformed_config_exits_1_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        r#"{"objective": {"kind": "quadratic", "eigs": [1]}, "model": {"name": "gradient_flow"},
            "policy": {"kind": "fixed", "h": "big"}, "stop": {"max_steps": 3}}"#,
    );
    let out = essrate(&["simulate", &cfg], &[]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("at `policy`"), "{}", stderr(&out));

    let cfg = write_config(dir.path(), "trunc.json", r#"{"objective": {"kind": "#);
    assert_eq!(code(&essrate(&["simulate", &cfg], &[])), 1);

    let cfg = write_config(
        dir.path(),
        "neg.json",
        r#"{"objective": {"kind": "quadratic", "eigs": [1], "ell": -1}, "model": {"name": "gradient_flow"},
            "stop": {"max_steps": 3}}"#,
    );
    let out = essrate(&["simulate", &cfg], &[]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("ell"), "{}", stderr(&out));

    assert_eq!(code(&essrate(&["simulate", "/nonexistent/x.json"], &[])), 1);
    assert_eq!(code(&essrate(&["frobnicate"], &[])), 1);
}

#[test]
fn divergence_exits_2_and_io_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "div.json",
        r#"{"objective": {"kind": "quadratic", "eigs": [10]}, "model": {"name": "gradient_flow"},
            "method": "euler", "policy": {"kind": "fixed", "h": 1.0}, "stop": {"max_steps": 1000}}"#,
    );
    let out = essrate(&["simulate", &cfg], &[]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));

    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let body = format!(
        r#"{{"objective": {{"kind": "quadratic", "eigs": [1]}}, "model": {{"name": "gradient_flow"}},
           "stop": {{"max_steps": 3}}, "outputs": {{"trajectory_csv": "{}/sub/t.csv"}}}}"#,
        blocker.display()
    );
    let cfg = write_config(dir.path(), "io.json", &body);
    assert_eq!(code(&essrate(&["simulate", &cfg], &[])), 3);
}

#[test]
fn thread_variable_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = euler_config(dir.path(), "[1.0, 1.0]");
    assert_eq!(code(&essrate(&["simulate", &cfg], &[("ESSRATE_THREADS", "zero")])), 1);
    assert_eq!(code(&essrate(&["simulate", &cfg], &[("ESSRATE_THREADS", "2")])), 0);
}

#[test]
fn stability_command() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("e.csv");
    let svg = dir.path().join("e.svg");
    let out = essrate(
        &["stability", "euler", "--re=-3,1", "--im=-2,2", "--res", "21", "-o", csv.to_str().unwrap(), "--svg", svg.to_str().unwrap()],
        &[],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("domain_radius: 2.000000"));
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 21 * 21);
    assert!(text.starts_with("re,im,abs_r\n"));
    assert!(fs::read_to_string(&svg).unwrap().contains("<rect"));

    let out = essrate(&["stability", "rk4", "-o", csv.to_str().unwrap()], &[]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("real_axis_radius: 2.785"), "{}", stdout(&out));

    let out = essrate(&["stability", "euler", "--res", "1", "-o", csv.to_str().unwrap()], &[]);
    assert_eq!(code(&out), 1);
    let out = essrate(&["stability", "rk7", "-o", csv.to_str().unwrap()], &[]);
    assert_eq!(code(&out), 1);
}

fn essential_config(dir: &Path, name: &str, model: &str, rescaling: &str, ell: f64) -> String {
    let body = format!(
        r#"{{"objective": {{"kind": "quadratic_witness", "dim": 2, "mu": 0, "ell": {ell}}},
           "model": {{"name": "{model}", "rescaling": {rescaling}}},
           "family": {{"count": 6, "mu": 0.5}},
           "seed": 11}}"#
    );
    write_config(dir, name, &body)
}

#[test]
fn essential_check_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let gf = essential_config(dir.path(), "gf.json", "gradient_flow", r#"{"kind": "linear", "r": 0.25}"#, 4.0);
    let out = essrate(&["essential-check", &gf], &[]);
    assert_eq!(code(&out), 0, "{}{}", stdout(&out), stderr(&out));
    assert!(stdout(&out).contains("1-essential"));

    let agm = essential_config(dir.path(), "agm.json", "agm_convex", r#"{"kind": "power", "p": 2, "scale": 0.25}"#, 4.0);
    assert_eq!(code(&essrate(&["essential-check", &agm], &[])), 0);

    let raw = essential_config(dir.path(), "raw.json", "agm_convex", r#"{"kind": "power", "p": 2, "scale": 1}"#, 4.0);
    let out = essrate(&["essential-check", &raw], &[]);
    assert_eq!(code(&out), 4);
    let s = stdout(&out);
    let c: f64 = s.split("c_estimate = ").nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
    assert!((c - 2.0).abs() < 0.02, "{s}");
}

#[test]
fn theorem_check_reports_the_cancelled_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"objective": {"kind": "quadratic", "eigs": [10, 3, 1]},
        "model": {"name": "gradient_flow", "rescaling": {"kind": "linear", "r": 0.1}},
        "method": "euler", "policy": {"kind": "stability_capped", "safety": 1.0},
        "stop": {"max_steps": 300},
        "theorem": {"alpha": {"kind": "linear", "r": 1.0}, "k_min": 100}}"#;
    let cfg = write_config(dir.path(), "th.json", body);
    let out = essrate(&["theorem-check", &cfg, "--eps", "0.05"], &[]);
    assert_eq!(code(&out), 0, "{}{}", stdout(&out), stderr(&out));
    assert!(stdout(&out).contains("fraction_satisfied = 1.000000"));
    assert!(stdout(&out).contains("r + eps = 2.050000"));

    // With a smaller budget the ratio, which tends to 2, exceeds it.
    let out = essrate(&["theorem-check", &cfg, "--eps", "0"], &[]);
    assert_eq!(code(&out), 4, "{}", stdout(&out));

    let fixed = body.replace(r#"{"kind": "stability_capped", "safety": 1.0}"#, r#"{"kind": "fixed", "h": 0.1}"#);
    let cfg = write_config(dir.path(), "fixed.json", &fixed);
    assert_eq!(code(&essrate(&["theorem-check", &cfg], &[])), 1);
}

#[test]
fn reproduce_subset_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("report");
    let out = essrate(&["reproduce-paper", "-o", out_dir.to_str().unwrap(), "--only", "AC-1,AC-8"], &[]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let md = fs::read_to_string(out_dir.join("report.md")).unwrap();
    assert!(md.contains("2 of 2 criteria pass"));
    let csv = fs::read_to_string(out_dir.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);

    let out = essrate(&["reproduce-paper", "-o", out_dir.to_str().unwrap(), "--only", "AC-6,AC-7"], &[]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("AC-6 FAIL"));

    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = essrate(&["reproduce-paper", "-o", blocker.join("r").to_str().unwrap()], &[]);
    assert_eq!(code(&out), 3);

    let out = essrate(&["reproduce-paper", "-o", out_dir.to_str().unwrap(), "--only", "AC-99"], &[]);
    assert_eq!(code(&out), 1);
}
