use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, TrafficError};
use crate::field::MacroField;
use crate::rng::RngStream;
use crate::scenario::Scenario;
use crate::uq::distribution::AccidentDistribution;
use crate::uq::stats::StatSummary;

/// Model evaluated once per sampled accident size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UqModel {
    Micro,
    /// Second-order model with the `z = rho h` splitting scheme.
    Macro2,
    /// Second-order model in the conservative variables, as used by the
    /// chaos expansion.
    Macro2Conservative,
}

impl std::str::FromStr for UqModel {
    type Err = TrafficError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "micro" => Ok(UqModel::Micro),
            "macro2" => Ok(UqModel::Macro2),
            "macro2_conservative" => Ok(UqModel::Macro2Conservative),
            other => Err(TrafficError::Config(format!(
                "unknown uq model `{other}`, expected micro, macro2 or macro2_conservative"
            ))),
        }
    }
}

/// Draw `i` comes from `RngStream(seed, i)`.
pub fn sample_ys(dist: &AccidentDistribution, n: usize, seed: u64) -> Vec<f64> {
    (0..n)
        .map(|i| dist.sample(&mut RngStream::new(seed, i as u64).rng()))
        .collect()
}

/// Field at the final time for accident half-width `y`.
pub fn run_at(scenario: &Scenario, model: UqModel, y: f64) -> Result<MacroField> {
    let n = scenario.n_steps()?;
    let last =
        |mut v: Vec<(usize, MacroField)>| v.pop().map(|(_, f)| f).expect("final step recorded");
    Ok(match model {
        UqModel::Macro2 => last(scenario.run_macro2(Some(y), &[n])?),
        UqModel::Macro2Conservative => last(scenario.run_conservative(Some(y), &[n])?),
        UqModel::Micro => {
            let mut states = scenario.run_micro(Some(y), &[n])?;
            let (_, state) = states.pop().expect("final step recorded");
            scenario.micro_field(&state)
        }
    })
}

/// Runs the model for every `y` (in parallel) and summarises the final
/// fields. The first failing sample, in sample order, is reported.
pub fn monte_carlo_at(scenario: &Scenario, model: UqModel, ys: &[f64]) -> Result<StatSummary> {
    let runs: Vec<Result<MacroField>> = ys
        .par_iter()
        .enumerate()
        .map(|(i, &y)| {
            run_at(scenario, model, y).map_err(|e| TrafficError::Sample {
                sample: i,
                y,
                source: Box::new(e),
            })
        })
        .collect();
    let fields = runs.into_iter().collect::<Result<Vec<_>>>()?;
    StatSummary::from_fields(&fields)
}

/// Monte Carlo with `n_samples` draws of the scenario's distribution.
pub fn monte_carlo(
    scenario: &Scenario,
    model: UqModel,
    n_samples: usize,
    seed: u64,
) -> Result<StatSummary> {
    let dist = scenario.uq_config().distribution;
    monte_carlo_at(scenario, model, &sample_ys(&dist, n_samples, seed))
}
