//! Command implementations of the `traffic` binary.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use traffic_core::io::{self, RunMetadata};
use traffic_core::uq::{
    convergence_study, monte_carlo_at, pce_expectation, sample_ys, Estimator, PceTarget, UqModel,
};
use traffic_core::{
    bin_to_fields, l1_distance, relative_l1, Family, MacroField, ModelKind, Result, Scenario,
    StateUHC, TrafficError, WaveSystem,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

pub fn exit_code(err: &TrafficError) -> i32 {
    match err {
        TrafficError::Io(_) => EXIT_IO,
        e if e.is_numerical() => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "traffic",
    version,
    about = "Multiscale traffic flow simulations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one model and write its fields at the output times.
    Simulate(SimulateArgs),
    /// Run several models and tabulate pairwise L1 distances at `T`.
    Compare(CompareArgs),
    /// Monte Carlo and polynomial chaos studies of the accident size.
    #[command(subcommand)]
    Uq(UqCommand),
    /// Wave structure of the second-order system.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 picks the number of cores.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Defaults to the scenario's `model`.
    #[arg(long)]
    pub model: Option<ModelKind>,
    /// Accident half-width for a random accident capacity.
    #[arg(long)]
    pub y: Option<f64>,
    /// Also dump micro trajectories or the raw particle ensemble.
    #[arg(long)]
    pub dump_raw: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', required = true)]
    pub models: Vec<ModelKind>,
    #[arg(long)]
    pub y: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum UqCommand {
    /// Per-cell statistics over sampled accident sizes.
    Mc {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "macro2")]
        model: UqModel,
        /// Defaults to the scenario's `uq.n_samples`.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Expectation from the stochastic Galerkin system.
    Pce {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "macro")]
        target: PceTarget,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        order: Option<usize>,
    },
    /// L2 error of the chaos expectation against a Monte Carlo reference.
    Convergence {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "macro")]
        target: PceTarget,
        #[arg(long, value_delimiter = ',', default_value = "1,3,5,7,9")]
        nodes: Vec<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value = "galerkin")]
        estimator: Estimator,
    },
}

#[derive(Debug, Args)]
pub struct StateArgs {
    #[arg(long)]
    pub rho: f64,
    #[arg(long)]
    pub h: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
}

#[derive(Debug, Args)]
pub struct AnalysisParams {
    /// Take `gamma` and `eta` from a scenario instead of the defaults.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Write here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    Eigen {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        params: AnalysisParams,
    },
    /// Rarefaction curve through a state; writes `curve.csv` and `report.json`.
    Curves {
        #[arg(long)]
        family: u8,
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, default_value_t = 0.5)]
        sigma_max: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[command(flatten)]
        params: AnalysisParams,
    },
    /// Rankine-Hugoniot residual of a jump `left | right` with speed `lambda`.
    Rh {
        /// `rho,h,c`
        #[arg(long, value_delimiter = ',')]
        left: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        right: Vec<f64>,
        #[arg(long)]
        lambda: f64,
        #[command(flatten)]
        params: AnalysisParams,
    },
}

/// Runs a parsed command; output goes to files or `stdout`.
pub fn run(cli: Cli, stdout: &mut dyn std::io::Write) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => {
            let threads = a.common.threads;
            with_threads(threads, || simulate(&a))
        }
        Command::Compare(a) => {
            let threads = a.common.threads;
            with_threads(threads, || compare(&a))
        }
        Command::Uq(u) => {
            let threads = match &u {
                UqCommand::Mc { common, .. }
                | UqCommand::Pce { common, .. }
                | UqCommand::Convergence { common, .. } => common.threads,
            };
            with_threads(threads, || uq(&u))
        }
        Command::Analyze(a) => analyze(&a, stdout),
    }
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| TrafficError::Config(format!("thread pool: {e}")))?;
    pool.install(f)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| TrafficError::Io(format!("{}: {e}", dir.display())))
}

fn relative_drift(m0: f64, m: f64) -> f64 {
    if m0 == 0.0 {
        m.abs()
    } else {
        ((m - m0) / m0).abs()
    }
}

fn scheme_name(model: ModelKind) -> &'static str {
    match model {
        ModelKind::Micro => "follow_the_leader_explicit_euler",
        ModelKind::Particle => "particle_monte_carlo",
        ModelKind::Macro1 => "lax_friedrichs",
        ModelKind::Macro2 => "lax_friedrichs_split",
    }
}

/// Fields of one model at the requested steps, plus the step-0 field.
struct ModelRun {
    fields: Vec<(usize, MacroField)>,
    raw: Option<String>,
}

fn run_model(
    scenario: &Scenario,
    model: ModelKind,
    y: Option<f64>,
    seed: u64,
    steps: &[usize],
    dump_raw: bool,
    particle_on_domain: bool,
) -> Result<ModelRun> {
    let dt = scenario.params.dt;
    Ok(match model {
        ModelKind::Macro1 => ModelRun {
            fields: scenario.run_macro1(y, steps)?,
            raw: None,
        },
        ModelKind::Macro2 => ModelRun {
            fields: scenario.run_macro2(y, steps)?,
            raw: None,
        },
        ModelKind::Micro => {
            let states = scenario.run_micro(y, steps)?;
            let raw = dump_raw.then(|| {
                let view: Vec<(f64, &_)> =
                    states.iter().map(|(n, s)| (*n as f64 * dt, s)).collect();
                io::trajectory_csv(&view)
            });
            ModelRun {
                fields: states
                    .iter()
                    .map(|(n, s)| (*n, scenario.micro_field(s)))
                    .collect(),
                raw,
            }
        }
        ModelKind::Particle => {
            let ens = scenario.run_particle(y, seed, steps)?;
            let grid = if particle_on_domain {
                scenario.domain
            } else {
                scenario.particle_grid()?
            };
            let raw = dump_raw.then(|| {
                let view: Vec<(f64, &_)> = ens.iter().map(|(n, e)| (*n as f64 * dt, e)).collect();
                io::ensemble_csv(&view)
            });
            ModelRun {
                fields: ens
                    .iter()
                    .map(|(n, e)| (*n, bin_to_fields(e, &grid)))
                    .collect(),
                raw,
            }
        }
    })
}

fn write_fields(
    dir: &Path,
    outputs: &[(f64, usize)],
    fields: &[(usize, MacroField)],
) -> Result<()> {
    for &(t, n) in outputs {
        let (_, f) = fields
            .iter()
            .find(|(m, _)| *m == n)
            .expect("output step recorded");
        io::write_field_csv(&dir.join(io::field_file_name(t)), f)?;
    }
    Ok(())
}

fn mass_drift(fields: &[(usize, MacroField)]) -> f64 {
    let m0 = fields[0].1.total_mass();
    fields
        .iter()
        .map(|(_, f)| relative_drift(m0, f.total_mass()))
        .fold(0.0, f64::max)
}

/// Output `(time, step)` pairs and the sorted steps at which to record.
type RecordPlan = (Vec<(f64, usize)>, Vec<usize>);

fn record_steps(scenario: &Scenario) -> Result<RecordPlan> {
    let outputs = scenario.output_steps()?;
    let mut steps: Vec<usize> = outputs.iter().map(|&(_, n)| n).collect();
    steps.push(0);
    steps.push(scenario.n_steps()?);
    steps.sort_unstable();
    steps.dedup();
    Ok((outputs, steps))
}

fn resolve_model(cli: Option<ModelKind>, scenario: &Scenario) -> Result<ModelKind> {
    cli.or(scenario.model).ok_or_else(|| {
        TrafficError::Config("no model given on the command line or in the scenario".to_string())
    })
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let scenario = Scenario::from_path(&a.common.scenario)?;
    let model = resolve_model(a.model, &scenario)?;
    let (outputs, steps) = record_steps(&scenario)?;
    let run = run_model(
        &scenario,
        model,
        a.y,
        a.common.seed,
        &steps,
        a.dump_raw,
        false,
    )?;
    let dir = &a.common.out;
    create_dir(dir)?;
    write_fields(dir, &outputs, &run.fields)?;
    if let Some(raw) = &run.raw {
        let name = match model {
            ModelKind::Micro => "trajectory.csv",
            _ => "ensemble.csv",
        };
        io::write_text(&dir.join(name), raw)?;
    }
    let grid = run.fields[0].1.grid;
    let stochastic = model == ModelKind::Particle;
    io::write_json(
        &dir.join("metadata.json"),
        &RunMetadata {
            model: model.name().to_string(),
            scheme: scheme_name(model).to_string(),
            dx: grid.dx,
            dt: scenario.params.dt,
            t_end: scenario.params.t_end,
            mass_drift: mass_drift(&run.fields),
            output_times: outputs.iter().map(|&(t, _)| t).collect(),
            seed: stochastic.then_some(a.common.seed),
            y: a.y,
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceRow {
    pub model_a: String,
    pub model_b: String,
    pub l1_rho: f64,
    pub l1_h: f64,
    pub rel_l1_rho: f64,
}

pub fn compare(a: &CompareArgs) -> Result<()> {
    let scenario = Scenario::from_path(&a.common.scenario)?;
    let (outputs, steps) = record_steps(&scenario)?;
    let n = scenario.n_steps()?;
    let dir = &a.common.out;
    create_dir(dir)?;
    let mut finals = Vec::with_capacity(a.models.len());
    for (k, &model) in a.models.iter().enumerate() {
        let run = run_model(&scenario, model, a.y, a.common.seed, &steps, false, true)?;
        let sub = dir.join(format!("{k}_{}", model.name()));
        create_dir(&sub)?;
        write_fields(&sub, &outputs, &run.fields)?;
        let (_, f) = run
            .fields
            .into_iter()
            .find(|(m, _)| *m == n)
            .expect("final step");
        finals.push((model, f));
    }
    let dx = scenario.domain.dx;
    let mut rows = Vec::new();
    for i in 0..finals.len() {
        for j in i + 1..finals.len() {
            let (ma, fa) = &finals[i];
            let (mb, fb) = &finals[j];
            rows.push(DistanceRow {
                model_a: ma.name().to_string(),
                model_b: mb.name().to_string(),
                l1_rho: l1_distance(&fa.rho, &fb.rho, dx),
                l1_h: l1_distance(&fa.h, &fb.h, dx),
                rel_l1_rho: relative_l1(&fa.rho, &fb.rho, dx),
            });
        }
    }
    let mut csv = String::from("model_a,model_b,l1_rho,l1_h,rel_l1_rho\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.model_a, r.model_b, r.l1_rho, r.l1_h, r.rel_l1_rho
        ));
    }
    io::write_text(&dir.join("distances.csv"), &csv)?;
    io::write_json(&dir.join("distances.json"), &rows)
}

#[derive(Debug, Serialize)]
struct UqMetadata<'a> {
    study: &'static str,
    model: String,
    dx: f64,
    dt: f64,
    #[serde(rename = "T")]
    t_end: f64,
    distribution: traffic_core::uq::AccidentDistribution,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pce_nodes: Option<&'a [usize]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pce_order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rate_rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rate_h: Option<f64>,
}

fn require_random(scenario: &Scenario) -> Result<()> {
    if !scenario.capacity.is_random() {
        return Err(TrafficError::Config(
            "uq needs an accident capacity without a fixed y".to_string(),
        ));
    }
    Ok(())
}

fn target_name(t: PceTarget) -> &'static str {
    match t {
        PceTarget::Macro => "macro",
        PceTarget::Micro => "micro",
    }
}

fn mc_model_name(m: UqModel) -> &'static str {
    match m {
        UqModel::Micro => "micro",
        UqModel::Macro2 => "macro2",
        UqModel::Macro2Conservative => "macro2_conservative",
    }
}

pub fn uq(cmd: &UqCommand) -> Result<()> {
    match cmd {
        UqCommand::Mc {
            common,
            model,
            samples,
        } => {
            let scenario = Scenario::from_path(&common.scenario)?;
            require_random(&scenario)?;
            let cfg = scenario.uq_config();
            let n = samples.unwrap_or(cfg.n_samples);
            let ys = sample_ys(&cfg.distribution, n, common.seed);
            let summary = monte_carlo_at(&scenario, *model, &ys)?;
            create_dir(&common.out)?;
            io::write_summary_csv(&common.out.join("summary.csv"), &summary)?;
            let samples_csv = io::format_table(
                "sample,y",
                ys.iter().enumerate().map(|(i, &y)| [i as f64, y]),
            );
            io::write_text(&common.out.join("samples.csv"), &samples_csv)?;
            io::write_json(
                &common.out.join("metadata.json"),
                &UqMetadata {
                    study: "monte_carlo",
                    model: mc_model_name(*model).to_string(),
                    dx: scenario.domain.dx,
                    dt: scenario.params.dt,
                    t_end: scenario.params.t_end,
                    distribution: cfg.distribution,
                    seed: Some(common.seed),
                    n_samples: Some(n),
                    pce_nodes: None,
                    pce_order: None,
                    rate_rho: None,
                    rate_h: None,
                },
            )
        }
        UqCommand::Pce {
            common,
            target,
            nodes,
            order,
        } => {
            let scenario = Scenario::from_path(&common.scenario)?;
            require_random(&scenario)?;
            let cfg = scenario.uq_config();
            let nodes = nodes.unwrap_or(cfg.pce_nodes);
            let order = order.unwrap_or(cfg.pce_order);
            let e = pce_expectation(&scenario, *target, nodes, order)?;
            create_dir(&common.out)?;
            io::write_field_csv(&common.out.join("expectation.csv"), &e)?;
            io::write_json(
                &common.out.join("metadata.json"),
                &UqMetadata {
                    study: "polynomial_chaos",
                    model: target_name(*target).to_string(),
                    dx: scenario.domain.dx,
                    dt: scenario.params.dt,
                    t_end: scenario.params.t_end,
                    distribution: cfg.distribution,
                    seed: None,
                    n_samples: None,
                    pce_nodes: Some(&[nodes]),
                    pce_order: Some(order),
                    rate_rho: None,
                    rate_h: None,
                },
            )
        }
        UqCommand::Convergence {
            common,
            target,
            nodes,
            samples,
            estimator,
        } => {
            let scenario = Scenario::from_path(&common.scenario)?;
            require_random(&scenario)?;
            let cfg = scenario.uq_config();
            let n = samples.unwrap_or(cfg.n_samples);
            let model = match target {
                PceTarget::Macro => UqModel::Macro2Conservative,
                PceTarget::Micro => UqModel::Micro,
            };
            let ys = sample_ys(&cfg.distribution, n, common.seed);
            let reference = monte_carlo_at(&scenario, model, &ys)?;
            let study = convergence_study(&scenario, *target, *estimator, nodes, &reference)?;
            create_dir(&common.out)?;
            io::write_summary_csv(&common.out.join("reference.csv"), &reference)?;
            io::write_convergence_csv(&common.out.join("convergence.csv"), &study.rows)?;
            io::write_json(
                &common.out.join("metadata.json"),
                &UqMetadata {
                    study: match estimator {
                        Estimator::Galerkin => "convergence_galerkin",
                        Estimator::Collocation => "convergence_collocation",
                    },
                    model: target_name(*target).to_string(),
                    dx: scenario.domain.dx,
                    dt: scenario.params.dt,
                    t_end: scenario.params.t_end,
                    distribution: cfg.distribution,
                    seed: Some(common.seed),
                    n_samples: Some(n),
                    pce_nodes: Some(nodes),
                    pce_order: Some(0),
                    rate_rho: study.rate_rho,
                    rate_h: study.rate_h,
                },
            )
        }
    }
}

fn wave_system(p: &AnalysisParams) -> Result<WaveSystem> {
    let params = match &p.scenario {
        Some(path) => Scenario::from_path(path)?.params,
        None => Default::default(),
    };
    Ok(WaveSystem::new(&params))
}

fn emit(p: &AnalysisParams, name: &str, text: &str, stdout: &mut dyn std::io::Write) -> Result<()> {
    match &p.out {
        Some(dir) => {
            create_dir(dir)?;
            io::write_text(&dir.join(name), text)
        }
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| TrafficError::Io(e.to_string())),
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serialisable report") + "\n"
}

#[derive(Debug, Serialize)]
pub struct EigenReport {
    pub state: StateUHC,
    pub lambda: [f64; 3],
    pub eigenvectors: [[f64; 3]; 3],
    pub strictly_hyperbolic: bool,
    pub eigen_residual: f64,
    pub genuine_nonlinearity: [f64; 3],
}

#[derive(Debug, Serialize)]
pub struct CurveReport {
    pub family: u8,
    /// `genuinely_nonlinear` or `linearly_degenerate`.
    pub classification: &'static str,
    pub directional_derivative: f64,
    pub truncated: bool,
    pub n_points: usize,
}

#[derive(Debug, Serialize)]
pub struct RhReport {
    pub left: StateUHC,
    pub right: StateUHC,
    pub lambda: f64,
    pub residual: [f64; 3],
    pub max_abs_residual: f64,
}

const FD_STEP: f64 = 1e-5;
const DEGENERATE_TOL: f64 = 1e-8;

fn state_of(v: &[f64]) -> Result<StateUHC> {
    match *v {
        [rho, h, c] => StateUHC::new(rho, h, c),
        _ => Err(TrafficError::Config(format!(
            "a state is `rho,h,c`, got {} values",
            v.len()
        ))),
    }
}

pub fn analyze(cmd: &AnalyzeCommand, stdout: &mut dyn std::io::Write) -> Result<()> {
    match cmd {
        AnalyzeCommand::Eigen { state, params } => {
            let sys = wave_system(params)?;
            let u = StateUHC::new(state.rho, state.h, state.c)?;
            let d = sys.eigenstructure(&u);
            let report = EigenReport {
                state: u,
                lambda: Family::ALL.map(|f| d.lambda(f)),
                eigenvectors: Family::ALL.map(|f| d.r(f)),
                strictly_hyperbolic: d.strict,
                eigen_residual: sys.eigen_residual(&u),
                genuine_nonlinearity: Family::ALL
                    .map(|f| sys.directional_derivative_fd(f, &u, FD_STEP)),
            };
            emit(params, "eigen.json", &to_json(&report), stdout)
        }
        AnalyzeCommand::Curves {
            family,
            state,
            sigma_max,
            steps,
            params,
        } => {
            let sys = wave_system(params)?;
            let family = Family::from_index(*family)?;
            let u = StateUHC::new(state.rho, state.h, state.c)?;
            let curve = sys.rarefaction_curve(family, &u, *sigma_max, *steps)?;
            let dd = sys.directional_derivative_fd(family, &u, FD_STEP);
            let report = CurveReport {
                family: family.index(),
                classification: if dd.abs() <= DEGENERATE_TOL {
                    "linearly_degenerate"
                } else {
                    "genuinely_nonlinear"
                },
                directional_derivative: dd,
                truncated: curve.truncated,
                n_points: curve.points.len(),
            };
            match &params.out {
                Some(dir) => {
                    create_dir(dir)?;
                    io::write_text(&dir.join("curve.csv"), &io::curve_csv(&curve))?;
                    io::write_json(&dir.join("report.json"), &report)
                }
                None => emit(params, "", &io::curve_csv(&curve), stdout),
            }
        }
        AnalyzeCommand::Rh {
            left,
            right,
            lambda,
            params,
        } => {
            let sys = wave_system(params)?;
            let (l, r) = (state_of(left)?, state_of(right)?);
            let residual = sys.rh_residual(&l, &r, *lambda);
            let report = RhReport {
                left: l,
                right: r,
                lambda: *lambda,
                residual,
                max_abs_residual: residual.iter().fold(0.0, |m: f64, v| m.max(v.abs())),
            };
            emit(params, "rh.json", &to_json(&report), stdout)
        }
    }
}
