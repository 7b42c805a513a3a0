//! Model closures: the macroscopic speed law `V(h)`, the optimal headway
//! `H(rho)`, the microscopic speed `Ṽ(u)` and the pressure `p(rho)`.
//!
//! The closures are traits so alternative laws can be plugged into the
//! solvers and the eigenstructure analysis. The defaults are
//! `V(h) = h / (h + 1)`, `H(rho) = 1 / (1 + rho)` and `Ṽ(u) = 1 - u`.

use crate::error::{Result, TrafficError};
use std::fmt::Debug;

/// Speed as a function of headway. Must be non-negative, increasing and
/// bounded by `C h` for some `C > 0`.
pub trait SpeedLaw: Debug + Send + Sync {
    fn value(&self, h: f64) -> f64;
    fn derivative(&self, h: f64) -> f64;
    fn second_derivative(&self, h: f64) -> f64;
    /// Supremum of `V` over admissible headways, used by the CFL guard.
    fn sup(&self) -> f64;
}

/// Optimal headway as a function of density: non-negative and decreasing.
pub trait HeadwayLaw: Debug + Send + Sync {
    fn value(&self, rho: f64) -> f64;
}

/// Speed of the Follow-the-Leader model as a function of the occupancy
/// ratio `L / s`.
pub trait MicroSpeedLaw: Debug + Send + Sync {
    fn value(&self, u: f64) -> f64;
    fn sup(&self) -> f64;
}

/// `V(h) = h / (h + 1)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RationalSpeed;

impl SpeedLaw for RationalSpeed {
    #[inline]
    fn value(&self, h: f64) -> f64 {
        h / (h + 1.0)
    }

    #[inline]
    fn derivative(&self, h: f64) -> f64 {
        1.0 / ((1.0 + h) * (1.0 + h))
    }

    #[inline]
    fn second_derivative(&self, h: f64) -> f64 {
        -2.0 / ((1.0 + h) * (1.0 + h) * (1.0 + h))
    }

    fn sup(&self) -> f64 {
        1.0
    }
}

/// `V(h) = slope * h`, capped at `cap` for the CFL bound. Only the
/// uncapped branch is differentiated; it exists for the analysis module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSpeed {
    pub slope: f64,
    pub cap: f64,
}

impl SpeedLaw for LinearSpeed {
    fn value(&self, h: f64) -> f64 {
        self.slope * h
    }

    fn derivative(&self, _h: f64) -> f64 {
        self.slope
    }

    fn second_derivative(&self, _h: f64) -> f64 {
        0.0
    }

    fn sup(&self) -> f64 {
        self.cap
    }
}

/// `H(rho) = 1 / (1 + rho)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RationalHeadway;

impl HeadwayLaw for RationalHeadway {
    #[inline]
    fn value(&self, rho: f64) -> f64 {
        1.0 / (1.0 + rho)
    }
}

/// `Ṽ(u) = 1 - u`, floored at zero so that vehicles never reverse.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LinearMicroSpeed;

impl MicroSpeedLaw for LinearMicroSpeed {
    #[inline]
    fn value(&self, u: f64) -> f64 {
        (1.0 - u).max(0.0)
    }

    fn sup(&self) -> f64 {
        1.0
    }
}

/// The three closures used by every model.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Closures<V = RationalSpeed, H = RationalHeadway, M = LinearMicroSpeed> {
    pub speed: V,
    pub headway: H,
    pub micro_speed: M,
}

impl<V: SpeedLaw, H: HeadwayLaw, M: MicroSpeedLaw> Closures<V, H, M> {
    /// `V(H(rho))`, the equilibrium speed of the first-order model.
    #[inline]
    pub fn equilibrium_speed(&self, rho: f64) -> f64 {
        self.speed.value(self.headway.value(rho))
    }
}

/// Default speed law `V(h) = h/(h+1)`; negative headways are rejected.
pub fn speed_v(h: f64) -> Result<f64> {
    if !(h >= 0.0) {
        return Err(TrafficError::Domain {
            what: "headway",
            value: h,
        });
    }
    Ok(RationalSpeed.value(h))
}

/// Default optimal headway `H(rho) = 1/(1+rho)`.
pub fn headway_h(rho: f64) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(TrafficError::Domain {
            what: "density",
            value: rho,
        });
    }
    Ok(RationalHeadway.value(rho))
}

/// The unfloored microscopic speed `1 - u`. Callers apply their own
/// policy for `u > 1`; the solvers use [`LinearMicroSpeed`], which floors.
pub fn micro_speed_vtilde(u: f64) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(TrafficError::Domain {
            what: "occupancy",
            value: u,
        });
    }
    Ok(1.0 - u)
}

/// Pressure `p(rho) = (gamma / 2) * eta * rho`.
#[inline]
pub fn pressure(rho: f64, gamma: f64, eta: f64) -> f64 {
    0.5 * gamma * eta * rho
}
