//! JSON scenario documents and the deterministic runs they describe.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::capacity::{Capacity, CapacitySpec};
use crate::closures::{Closures, HeadwayLaw};
use crate::error::{Result, TrafficError};
use crate::field::MacroField;
use crate::grid::Grid1D;
use crate::macroscopic::MacroSolver;
use crate::micro::{micro_init_from_density, MicroModel, MicroState};
use crate::params::{steps_for, ModelParams};
use crate::particle::{
    init_ensemble, ParticleEnsemble, ParticleInit, ParticleModel, RelaxationMode,
};
use crate::profile::PiecewiseProfile;
use crate::uq::distribution::AccidentDistribution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Micro,
    Particle,
    Macro1,
    Macro2,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Micro => "micro",
            ModelKind::Particle => "particle",
            ModelKind::Macro1 => "macro1",
            ModelKind::Macro2 => "macro2",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = TrafficError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "micro" => Ok(ModelKind::Micro),
            "particle" => Ok(ModelKind::Particle),
            "macro1" => Ok(ModelKind::Macro1),
            "macro2" => Ok(ModelKind::Macro2),
            other => Err(TrafficError::Config(format!(
                "unknown model `{other}`, expected micro, particle, macro1 or macro2"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    pub rho: PiecewiseProfile,
    pub h: PiecewiseProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UqConfig {
    #[serde(default)]
    pub distribution: AccidentDistribution,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default = "default_nodes")]
    pub pce_nodes: usize,
    #[serde(default)]
    pub pce_order: usize,
}

fn default_samples() -> usize {
    2000
}

fn default_nodes() -> usize {
    9
}

impl Default for UqConfig {
    fn default() -> Self {
        UqConfig {
            distribution: AccidentDistribution::default(),
            n_samples: default_samples(),
            pce_nodes: default_nodes(),
            pce_order: 0,
        }
    }
}

/// Settings of the particle model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleConfig {
    pub n_particles: usize,
    /// Width of the binning cells used for partner search and output.
    pub dx: f64,
    #[serde(default)]
    pub init: ParticleInit,
    #[serde(default)]
    pub relaxation: RelaxationMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub domain: Grid1D,
    pub params: ModelParams,
    pub capacity: CapacitySpec,
    pub initial: InitialData,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uq: Option<UqConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particle: Option<ParticleConfig>,
}

impl Scenario {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let s: Scenario =
            serde_json::from_str(text).map_err(|e| TrafficError::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TrafficError::Io(format!("{}: {e}", path.display())))?;
        Scenario::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises")
    }

    /// The ramp scenario on `[-4, 4]` with the paper parameters, at grid
    /// width `dx` and step `dt`.
    pub fn paper(dx: f64, dt: f64) -> Self {
        Scenario {
            domain: Grid1D::paper_road(dx).expect("paper grid"),
            params: ModelParams {
                dt,
                ..ModelParams::default()
            },
            capacity: CapacitySpec::paper_ramp(),
            initial: InitialData {
                rho: PiecewiseProfile::paper_density(),
                h: PiecewiseProfile::paper_headway(),
            },
            uq: None,
            model: None,
            output_times: None,
            particle: None,
        }
    }

    /// The paper scenario with the random accident capacity.
    pub fn paper_accident(dx: f64, dt: f64) -> Self {
        Scenario {
            capacity: CapacitySpec::paper_accident(),
            uq: Some(UqConfig::default()),
            ..Scenario::paper(dx, dt)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        self.domain.require_periodic()?;
        self.params.validate()?;
        self.capacity.validate()?;
        self.initial.rho.validate()?;
        self.initial.h.validate()?;
        if let Some(uq) = &self.uq {
            uq.distribution.validate()?;
            if uq.n_samples == 0 || uq.pce_nodes == 0 {
                return Err(TrafficError::Config(
                    "uq needs n_samples >= 1 and pce_nodes >= 1".to_string(),
                ));
            }
            if uq.pce_order + 1 > uq.pce_nodes {
                return Err(TrafficError::Config(format!(
                    "pce_order {} needs at least {} quadrature nodes",
                    uq.pce_order,
                    uq.pce_order + 1
                )));
            }
        }
        if let Some(p) = &self.particle {
            if p.n_particles == 0 {
                return Err(TrafficError::Config(
                    "n_particles must be positive".to_string(),
                ));
            }
            Grid1D::new(self.domain.x_min, self.domain.x_max, p.dx, true)?;
        }
        self.params.n_steps()?;
        self.output_steps()?;
        Ok(())
    }

    pub fn n_steps(&self) -> Result<usize> {
        self.params.n_steps()
    }

    /// Output times (default `0, T/2, T`) with their step indices.
    pub fn output_steps(&self) -> Result<Vec<(f64, usize)>> {
        let t_end = self.params.t_end;
        let times = match &self.output_times {
            Some(t) => t.clone(),
            None => vec![0.0, 0.5 * t_end, t_end],
        };
        times
            .into_iter()
            .map(|t| {
                if !(0.0..=t_end * (1.0 + 1e-12)).contains(&t) {
                    return Err(TrafficError::Config(format!(
                        "output time {t} lies outside [0, {t_end}]"
                    )));
                }
                Ok((
                    t,
                    if t == 0.0 {
                        0
                    } else {
                        steps_for(t, self.params.dt)?
                    },
                ))
            })
            .collect()
    }

    pub fn uq_config(&self) -> UqConfig {
        self.uq.unwrap_or_default()
    }

    pub fn capacity_for(&self, y: Option<f64>) -> Result<Capacity> {
        self.capacity.resolve(y)
    }

    pub fn initial_field(&self) -> MacroField {
        MacroField::from_profiles(self.domain, &self.initial.rho, &self.initial.h)
    }

    pub fn macro_solver(
        &self,
        y: Option<f64>,
    ) -> Result<MacroSolver<crate::RationalSpeed, crate::RationalHeadway, crate::LinearMicroSpeed>>
    {
        MacroSolver::new(
            self.domain,
            self.params,
            &self.capacity_for(y)?,
            Closures::default(),
        )
    }

    pub fn run_macro1(&self, y: Option<f64>, record: &[usize]) -> Result<Vec<(usize, MacroField)>> {
        let solver = self.macro_solver(y)?;
        solver.run_first_order(&self.initial_field().rho, self.n_steps()?, record)
    }

    pub fn run_macro2(&self, y: Option<f64>, record: &[usize]) -> Result<Vec<(usize, MacroField)>> {
        let solver = self.macro_solver(y)?;
        solver.run_second_order(&self.initial_field(), self.n_steps()?, record)
    }

    /// Second-order model in the conservative variables `(rho, z)`.
    pub fn run_conservative(
        &self,
        y: Option<f64>,
        record: &[usize],
    ) -> Result<Vec<(usize, MacroField)>> {
        let solver = self.macro_solver(y)?;
        solver.run_conservative(&self.initial_field(), self.n_steps()?, record)
    }

    pub fn micro_initial(&self) -> Result<MicroState> {
        micro_init_from_density(
            &self.initial.rho,
            self.params.n_vehicles,
            self.params.vehicle_length,
            &self.domain,
        )
    }

    pub fn micro_model(
        &self,
        y: Option<f64>,
    ) -> Result<MicroModel<crate::RationalSpeed, crate::RationalHeadway, crate::LinearMicroSpeed>>
    {
        MicroModel::new(self.capacity_for(y)?, Closures::default(), self.params.dt)
    }

    pub fn run_micro(&self, y: Option<f64>, record: &[usize]) -> Result<Vec<(usize, MicroState)>> {
        self.micro_model(y)?
            .run(&self.micro_initial()?, self.n_steps()?, record)
    }

    /// Micro density sampled at the cell centers, with headway `H(rho)`.
    pub fn micro_field(&self, state: &MicroState) -> MacroField {
        let rho = state.sample_on_grid(&self.domain);
        let headway = crate::RationalHeadway;
        let h = rho.iter().map(|&r| headway.value(r)).collect();
        MacroField {
            grid: self.domain,
            rho,
            h,
        }
    }

    pub fn particle_config(&self) -> ParticleConfig {
        self.particle.unwrap_or(ParticleConfig {
            n_particles: self.params.n_vehicles,
            dx: self.domain.dx,
            init: ParticleInit::default(),
            relaxation: RelaxationMode::default(),
        })
    }

    pub fn particle_grid(&self) -> Result<Grid1D> {
        Grid1D::new(
            self.domain.x_min,
            self.domain.x_max,
            self.particle_config().dx,
            true,
        )
    }

    pub fn particle_initial(&self, seed: u64) -> Result<ParticleEnsemble> {
        let cfg = self.particle_config();
        init_ensemble(
            &self.initial.rho,
            &self.initial.h,
            cfg.n_particles,
            &self.particle_grid()?,
            cfg.init,
            seed,
        )
    }

    pub fn run_particle(
        &self,
        y: Option<f64>,
        seed: u64,
        record: &[usize],
    ) -> Result<Vec<(usize, ParticleEnsemble)>> {
        let cfg = self.particle_config();
        let model = ParticleModel::new(
            self.particle_grid()?,
            self.params,
            self.capacity_for(y)?,
            Closures::<crate::RationalSpeed, crate::RationalHeadway, crate::LinearMicroSpeed>::default(),
            cfg.relaxation,
        )?;
        model.run(&self.particle_initial(seed)?, self.n_steps()?, record, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAPER_JSON: &str = r#"{
        "domain": {"xmin": -4, "xmax": 4, "dx": 0.01, "periodic": true},
        "params": {"gamma": 0.5, "eta": 0.01, "epsilon": 0.001, "a": 0,
                   "dt": 0.01, "T": 1, "L": 0.0001, "N": 10000},
        "capacity": {"variant": "piecewise_ramp", "c_low": 0.6, "x_l": -2, "x_r": 2, "delta": 0.1},
        "initial": {"rho": [{"x_lt": 0, "value": 0.15}, {"x_lt": 4, "value": 0.1}],
                    "h": [{"x_lt": 0, "value": 0.8}, {"x_lt": 4, "value": 0.95}]},
        "uq": {"distribution": {"kind": "uniform"}, "n_samples": 10, "pce_nodes": 3, "pce_order": 0},
        "model": "macro2"
    }"#;

    #[test]
    fn parses_paper_document() {
        let s = Scenario::from_json_str(PAPER_JSON).unwrap();
        assert_eq!(s.model, Some(ModelKind::Macro2));
        assert_eq!(s.capacity, CapacitySpec::paper_ramp());
        assert_eq!(s.initial.rho, PiecewiseProfile::paper_density());
        assert_eq!(
            s.output_steps().unwrap(),
            vec![(0.0, 0), (0.5, 50), (1.0, 100)]
        );
        let back = Scenario::from_json_str(&s.to_json()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_unknown_keys_by_name() {
        let bad = PAPER_JSON.replace("\"model\"", "\"modle\"");
        match Scenario::from_json_str(&bad) {
            Err(TrafficError::Config(msg)) => assert!(msg.contains("modle"), "{msg}"),
            other => panic!("{other:?}"),
        }
        let nested = PAPER_JSON.replace("\"gamma\"", "\"gama\"");
        let msg = Scenario::from_json_str(&nested).unwrap_err().to_string();
        assert!(msg.contains("gama"), "{msg}");
    }

    #[test]
    fn rejects_bad_output_times_and_orders() {
        let mut s = Scenario::from_json_str(PAPER_JSON).unwrap();
        s.output_times = Some(vec![2.0]);
        assert!(s.validate().is_err());
        s.output_times = Some(vec![0.015]);
        assert!(s.validate().is_err());
        s.output_times = None;
        s.uq = Some(UqConfig {
            pce_order: 3,
            pce_nodes: 3,
            ..UqConfig::default()
        });
        assert!(s.validate().is_err());
    }

    #[test]
    fn paper_constructors_validate() {
        Scenario::paper(0.01, 0.01).validate().unwrap();
        let acc = Scenario::paper_accident(0.01, 0.01);
        acc.validate().unwrap();
        assert!(acc.capacity_for(None).is_err());
        assert!(acc.capacity_for(Some(2.0)).is_ok());
    }
}
