use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use traffic_core::io::{self, RunMetadata};
use traffic_core::{CapacitySpec, ParticleConfig, ParticleInit, RelaxationMode, Scenario};

fn traffic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_traffic"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_scenario(dir: &Path, name: &str, s: &Scenario) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, s.to_json()).unwrap();
    p
}

fn small_paper() -> Scenario {
    Scenario::paper(1e-2, 1e-2)
}

fn small_accident() -> Scenario {
    let mut s = Scenario::paper_accident(2e-2, 2e-2);
    s.params.t_end = 2.0;
    s.params.n_vehicles = 400;
    s.params.vehicle_length = 1.0 / 400.0;
    s
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_macro2_writes_fields_and_metadata() {
    let dir = TempDir::new().unwrap();
    let sc = write_scenario(dir.path(), "s.json", &small_paper());
    let out = dir.path().join("out");
    let o = traffic(&[
        "simulate",
        "--scenario",
        s(&sc),
        "--model",
        "macro2",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for t in ["0", "5", "10"] {
        assert!(out.join(format!("fields_t{t}.csv")).exists());
    }
    let meta: RunMetadata = io::read_json(&out.join("metadata.json")).unwrap();
    assert_eq!(meta.scheme, "lax_friedrichs_split");
    assert!(meta.mass_drift <= 1e-10, "{}", meta.mass_drift);
    let (x, rho, h) = io::read_field_csv(&out.join("fields_t0.csv")).unwrap();
    let init = small_paper().initial_field();
    assert_eq!(x, init.grid.centers());
    assert_eq!(rho, init.rho);
    assert_eq!(h, init.h);
}

#[test]
fn fields_parse_back_exactly() {
    let dir = TempDir::new().unwrap();
    let scen = small_paper();
    let sc = write_scenario(dir.path(), "s.json", &scen);
    let out = dir.path().join("out");
    let o = traffic(&[
        "simulate",
        "--scenario",
        s(&sc),
        "--model",
        "macro1",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success());
    let n = scen.n_steps().unwrap();
    let direct = scen.run_macro1(None, &[n]).unwrap().pop().unwrap().1;
    let (_, rho, h) = io::read_field_csv(&out.join("fields_t10.csv")).unwrap();
    assert_eq!(rho, direct.rho);
    assert_eq!(h, direct.h);
}

#[test]
fn cfl_violation_exits_with_config_code() {
    let dir = TempDir::new().unwrap();
    let sc = write_scenario(dir.path(), "s.json", &Scenario::paper(1e-2, 2e-2));
    let o = traffic(&[
        "simulate",
        "--scenario",
        s(&sc),
        "--model",
        "macro1",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ratio"));
}

#[test]
fn unknown_key_is_named() {
    let dir = TempDir::new().unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&small_paper().to_json()).unwrap();
    v["params"]["lane_count"] = serde_json::json!(2);
    let p = dir.path().join("s.json");
    std::fs::write(&p, v.to_string()).unwrap();
    let o = traffic(&[
        "simulate",
        "--scenario",
        s(&p),
        "--model",
        "macro1",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lane_count"));
}

#[test]
fn missing_file_is_io_error() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("absent.json");
    let o = traffic(&["simulate", "--scenario", s(&p), "--model", "macro1"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn numerical_failure_exit_code() {
    let dir = TempDir::new().unwrap();
    let mut scen = small_paper();
    // Vehicles with a time step this large collide at the ramp.
    scen.params.dt = 0.5;
    scen.params.t_end = 10.0;
    scen.params.n_vehicles = 1000;
    scen.params.vehicle_length = 1e-3;
    scen.domain = traffic_core::Grid1D::paper_road(1.0).unwrap();
    let sc = write_scenario(dir.path(), "s.json", &scen);
    let o = traffic(&[
        "simulate",
        "--scenario",
        s(&sc),
        "--model",
        "micro",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

fn read_distances(path: &Path) -> Vec<(String, String, f64)> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (c[0].to_string(), c[1].to_string(), c[2].parse().unwrap())
        })
        .collect()
}

#[test]
fn compare_same_model_is_zero() {
    let dir = TempDir::new().unwrap();
    let sc = write_scenario(dir.path(), "s.json", &small_paper());
    let out = dir.path().join("cmp");
    let o = traffic(&[
        "compare",
        "--scenario",
        s(&sc),
        "--models",
        "macro2,macro2,macro1",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_distances(&out.join("distances.csv"));
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0].2, 0.0);
    assert!(rows[1].2 > 0.0);
    assert!(out.join("2_macro1").join("fields_t10.csv").exists());
}

#[test]
fn relaxation_brings_models_together() {
    let dir = TempDir::new().unwrap();
    let mut scen = Scenario::paper(4e-3, 4e-3);
    let mut d = |a: f64| {
        scen.params.a = a;
        let sc = write_scenario(dir.path(), &format!("a{a}.json"), &scen);
        let out = dir.path().join(format!("cmp{a}"));
        let o = traffic(&[
            "compare",
            "--scenario",
            s(&sc),
            "--models",
            "macro2,macro1",
            "--out",
            s(&out),
        ]);
        assert!(o.status.success());
        read_distances(&out.join("distances.csv"))[0].2
    };
    let (d0, d1) = (d(0.0), d(1.0));
    assert!(d1 < d0, "{d1} vs {d0}");
}

#[test]
fn mc_with_one_sample_equals_single_run() {
    let dir = TempDir::new().unwrap();
    let scen = small_accident();
    let sc = write_scenario(dir.path(), "s.json", &scen);
    let out = dir.path().join("mc");
    let o = traffic(&[
        "uq",
        "mc",
        "--scenario",
        s(&sc),
        "--samples",
        "1",
        "--seed",
        "5",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ys = io::read_table(&out.join("samples.csv"))
        .unwrap()
        .column("y")
        .unwrap();
    let y = ys[0];
    let single = dir.path().join("single");
    let o = traffic(&[
        "simulate",
        "--scenario",
        s(&sc),
        "--model",
        "macro2",
        "--y",
        &y.to_string(),
        "--out",
        s(&single),
    ]);
    assert!(o.status.success());
    let summary = io::read_summary_csv(&out.join("summary.csv"), 1).unwrap();
    let (_, rho, h) = io::read_field_csv(&single.join("fields_t2.csv")).unwrap();
    assert_eq!(summary.rho.mean, rho);
    assert_eq!(summary.rho.median, rho);
    assert_eq!(summary.h.q05, h);
    let meta: serde_json::Value = io::read_json(&out.join("metadata.json")).unwrap();
    assert_eq!(meta["seed"], 5);
    assert_eq!(meta["n_samples"], 1);
    assert_eq!(meta["distribution"]["kind"], "uniform");
}

#[test]
fn pce_with_one_node_equals_mean_accident() {
    let dir = TempDir::new().unwrap();
    let scen = small_accident();
    let sc = write_scenario(dir.path(), "s.json", &scen);
    let out = dir.path().join("pce");
    let o = traffic(&[
        "uq",
        "pce",
        "--scenario",
        s(&sc),
        "--nodes",
        "1",
        "--order",
        "0",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let n = scen.n_steps().unwrap();
    let det = scen
        .run_conservative(Some(2.0), &[n])
        .unwrap()
        .pop()
        .unwrap()
        .1;
    let (_, rho, h) = io::read_field_csv(&out.join("expectation.csv")).unwrap();
    for i in 0..rho.len() {
        assert!((rho[i] - det.rho[i]).abs() <= 1e-12);
        assert!((h[i] - det.h[i]).abs() <= 1e-12);
    }
}

#[test]
fn convergence_writes_one_row_per_node_count() {
    let dir = TempDir::new().unwrap();
    let sc = write_scenario(dir.path(), "s.json", &small_accident());
    let out = dir.path().join("conv");
    let o = traffic(&[
        "uq",
        "convergence",
        "--scenario",
        s(&sc),
        "--nodes",
        "1,2,3",
        "--samples",
        "50",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = io::read_convergence_csv(&out.join("convergence.csv")).unwrap();
    assert_eq!(rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![1, 2, 3]);
    assert!(rows.iter().all(|r| r.l2_rho > 0.0 && r.l2_h >= 0.0));
    assert!(out.join("reference.csv").exists());
}

#[test]
fn uq_rejects_deterministic_capacity() {
    let dir = TempDir::new().unwrap();
    let sc = write_scenario(dir.path(), "s.json", &small_paper());
    let o = traffic(&[
        "uq",
        "mc",
        "--scenario",
        s(&sc),
        "--samples",
        "2",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn analyze_eigen_report() {
    let o = traffic(&[
        "analyze", "eigen", "--rho", "0.3", "--h", "1.2", "--c", "0.8",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["eigen_residual"].as_f64().unwrap() <= 1e-10);
    assert_eq!(v["strictly_hyperbolic"], true);
    assert_eq!(v["lambda"][0], 0.0);
}

#[test]
fn analyze_curve_family_two_is_closed_form() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("a");
    let o = traffic(&[
        "analyze",
        "curves",
        "--family",
        "2",
        "--rho",
        "0.2",
        "--h",
        "1.5",
        "--c",
        "0.9",
        "--sigma-max",
        "0.1",
        "--steps",
        "10",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = io::read_table(&out.join("curve.csv")).unwrap();
    assert_eq!(t.header, ["sigma", "rho", "h", "c", "lambda"]);
    let kappa = traffic_core::ModelParams::default().pressure_coeff();
    for r in &t.rows {
        assert!((r[1] - (0.2 + r[0])).abs() <= 1e-15);
        assert!((r[2] - (1.5 - kappa * r[0])).abs() <= 1e-15);
        assert_eq!(r[3], 0.9);
    }
    let rep: serde_json::Value = io::read_json(&out.join("report.json")).unwrap();
    assert_eq!(rep["classification"], "genuinely_nonlinear");
}

#[test]
fn analyze_rh_trivial_jump() {
    let o = traffic(&[
        "analyze",
        "rh",
        "--left",
        "0.3,1.1,0.7",
        "--right",
        "0.3,1.1,0.7",
        "--lambda",
        "0.4",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["max_abs_residual"], 0.0);
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

#[test]
fn particle_output_independent_of_threads() {
    let dir = TempDir::new().unwrap();
    let mut scen = small_paper();
    scen.params.t_end = 1.0;
    scen.params.dt = 1e-3;
    scen.particle = Some(ParticleConfig {
        n_particles: 5000,
        dx: 0.05,
        init: ParticleInit::Random,
        relaxation: RelaxationMode::Slow,
    });
    scen.capacity = CapacitySpec::paper_ramp();
    let sc = write_scenario(dir.path(), "s.json", &scen);
    let run = |threads: &str| {
        let out = dir.path().join(format!("t{threads}"));
        let o = traffic(&[
            "simulate",
            "--scenario",
            s(&sc),
            "--model",
            "particle",
            "--seed",
            "11",
            "--threads",
            threads,
            "--dump-raw",
            "--out",
            s(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        dir_bytes(&out)
    };
    let a = run("1");
    assert!(a.iter().any(|(n, _)| n == "ensemble.csv"));
    assert_eq!(a, run("3"));
}
