use rand::{Rng, RngExt};
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Result, TrafficError};

/// Law of the accident half-width `Y = 1 + 2 Z` on `[1, 3]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AccidentDistribution {
    /// `Z` uniform on `[0, 1]`.
    #[default]
    #[serde(rename = "uniform")]
    Uniform13,
    /// `Z ~ Beta(alpha, beta)`.
    #[serde(rename = "beta")]
    ScaledBeta { alpha: f64, beta: f64 },
}

impl AccidentDistribution {
    pub fn validate(&self) -> Result<()> {
        if let AccidentDistribution::ScaledBeta { alpha, beta } = *self {
            if !(alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
                return Err(TrafficError::Config(format!(
                    "beta parameters must be positive, got alpha = {alpha}, beta = {beta}"
                )));
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match *self {
            AccidentDistribution::Uniform13 => 2.0,
            AccidentDistribution::ScaledBeta { alpha, beta } => 1.0 + 2.0 * alpha / (alpha + beta),
        }
    }

    /// Draws `Y`; Beta variates are `G_a / (G_a + G_b)` for independent
    /// Gamma variates.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z = match *self {
            AccidentDistribution::Uniform13 => rng.random::<f64>(),
            AccidentDistribution::ScaledBeta { alpha, beta } => {
                let ga = Gamma::new(alpha, 1.0).expect("validated shape").sample(rng);
                let gb = Gamma::new(beta, 1.0).expect("validated shape").sample(rng);
                if ga + gb > 0.0 {
                    ga / (ga + gb)
                } else {
                    // both variates underflowed; only reachable for tiny shapes
                    if alpha >= beta {
                        1.0
                    } else {
                        0.0
                    }
                }
            }
        };
        1.0 + 2.0 * z
    }
}
