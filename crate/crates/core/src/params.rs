use crate::error::{Result, TrafficError};
use serde::{Deserialize, Serialize};

/// Parameters shared by the micro, particle and macro models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Interaction timescale.
    pub gamma: f64,
    /// Interaction distance.
    pub eta: f64,
    /// Ratio of relaxation rate to interaction rate.
    pub epsilon: f64,
    /// Relaxation strength.
    pub a: f64,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    /// Vehicle length of the Follow-the-Leader model.
    #[serde(rename = "L")]
    pub vehicle_length: f64,
    #[serde(rename = "N")]
    pub n_vehicles: usize,
}

impl Default for ModelParams {
    /// Values of the comparison study with `N = 10^4`.
    fn default() -> Self {
        ModelParams {
            gamma: 0.5,
            eta: 1e-2,
            epsilon: 1e-3,
            a: 0.0,
            dt: 2e-4,
            t_end: 10.0,
            vehicle_length: 1e-4,
            n_vehicles: 10_000,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(TrafficError::Config(msg));
        if !(self.gamma >= 0.0) || self.gamma > 1.0 {
            return fail(format!("gamma = {} must lie in [0, 1]", self.gamma));
        }
        if !(self.eta > 0.0) {
            return fail(format!("eta = {} must be positive", self.eta));
        }
        if !(self.epsilon > 0.0) {
            return fail(format!("epsilon = {} must be positive", self.epsilon));
        }
        if !(0.0..=1.0).contains(&self.a) {
            return fail(format!("a = {} must lie in [0, 1]", self.a));
        }
        if !(self.dt > 0.0) || !(self.t_end > 0.0) {
            return fail(format!(
                "dt = {} and T = {} must be positive",
                self.dt, self.t_end
            ));
        }
        if !(self.vehicle_length > 0.0) {
            return fail(format!("L = {} must be positive", self.vehicle_length));
        }
        if self.n_vehicles == 0 {
            return fail("N must be at least 1".to_string());
        }
        Ok(())
    }

    /// `(gamma / 2) * eta`, the pressure coefficient.
    #[inline]
    pub fn pressure_coeff(&self) -> f64 {
        0.5 * self.gamma * self.eta
    }

    /// Number of time steps covering `[0, T]`; `T` must be a multiple of `dt`.
    pub fn n_steps(&self) -> Result<usize> {
        steps_for(self.t_end, self.dt)
    }
}

/// Number of steps of size `dt` to reach `t`, requiring `t / dt` to be an
/// integer within `1e-9` relative.
pub fn steps_for(t: f64, dt: f64) -> Result<usize> {
    let ratio = t / dt;
    let n = ratio.round();
    if !(n >= 0.0) || (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
        return Err(TrafficError::Config(format!(
            "time {t} is not an integer multiple of dt = {dt}"
        )));
    }
    Ok(n as usize)
}
