use crate::error::{Result, TrafficError};
use serde::{Deserialize, Serialize};

/// Road capacity `c(x)` or accident-parameterised `c(x; y)`, valued in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum CapacitySpec {
    Constant {
        value: f64,
    },
    /// `1` outside `[x_l - delta, x_r + delta]`, `c_low` on
    /// `[x_l + delta, x_r - delta]`, linear in between.
    PiecewiseRamp {
        c_low: f64,
        x_l: f64,
        x_r: f64,
        delta: f64,
    },
    /// `1 - drop` on `[-y, y]`, `1` elsewhere. `y` may be fixed here or
    /// supplied at evaluation time (it is the random input of the UQ study).
    Accident {
        drop: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        y: Option<f64>,
    },
}

impl CapacitySpec {
    /// The reduced-capacity road used in the comparison study.
    pub fn paper_ramp() -> Self {
        CapacitySpec::PiecewiseRamp {
            c_low: 0.6,
            x_l: -2.0,
            x_r: 2.0,
            delta: 0.1,
        }
    }

    /// The random accident `1 - 0.4 * 1_[-y, y]`.
    pub fn paper_accident() -> Self {
        CapacitySpec::Accident { drop: 0.4, y: None }
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64, what: &str| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(TrafficError::Config(format!(
                    "capacity {what} = {v} must lie in [0, 1]"
                )))
            }
        };
        match *self {
            CapacitySpec::Constant { value } => in_unit(value, "value"),
            CapacitySpec::PiecewiseRamp {
                c_low,
                x_l,
                x_r,
                delta,
            } => {
                in_unit(c_low, "c_low")?;
                if !(delta > 0.0) || !(x_r - x_l >= 2.0 * delta) {
                    return Err(TrafficError::Config(format!(
                        "ramp needs delta > 0 and x_r - x_l >= 2 delta (x_l = {x_l}, x_r = {x_r}, delta = {delta})"
                    )));
                }
                Ok(())
            }
            CapacitySpec::Accident { drop, y } => {
                in_unit(drop, "drop")?;
                if let Some(y) = y {
                    if !(y >= 0.0) {
                        return Err(TrafficError::Config(format!(
                            "accident half-width y = {y} must be non-negative"
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// Whether the capacity depends on the accident half-width supplied at
    /// evaluation time.
    pub fn is_random(&self) -> bool {
        matches!(self, CapacitySpec::Accident { y: None, .. })
    }

    /// Fixes the accident half-width; an `Accident` with a stored `y`
    /// ignores the argument, the other variants ignore it too.
    pub fn resolve(&self, y: Option<f64>) -> Result<Capacity> {
        self.validate()?;
        Ok(match *self {
            CapacitySpec::Constant { value } => Capacity::Constant(value),
            CapacitySpec::PiecewiseRamp {
                c_low,
                x_l,
                x_r,
                delta,
            } => Capacity::Ramp {
                c_low,
                x_l,
                x_r,
                delta,
            },
            CapacitySpec::Accident { drop, y: fixed } => {
                let y = fixed.or(y).ok_or_else(|| {
                    TrafficError::Config("accident capacity needs a half-width y".to_string())
                })?;
                if !(y >= 0.0) {
                    return Err(TrafficError::Config(format!(
                        "accident half-width y = {y} must be non-negative"
                    )));
                }
                Capacity::Accident { drop, y }
            }
        })
    }

    /// Evaluates `c(x; y)`. Periodic wrapping of `x` is the caller's job.
    pub fn eval(&self, x: f64, y: Option<f64>) -> Result<f64> {
        Ok(self.resolve(y)?.at(x))
    }

    /// `||c||_inf` over all admissible `y`.
    pub fn sup(&self) -> f64 {
        match *self {
            CapacitySpec::Constant { value } => value,
            CapacitySpec::PiecewiseRamp { c_low, .. } => c_low.max(1.0),
            CapacitySpec::Accident { .. } => 1.0,
        }
    }
}

/// A capacity function with every parameter fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Capacity {
    Constant(f64),
    Ramp {
        c_low: f64,
        x_l: f64,
        x_r: f64,
        delta: f64,
    },
    Accident {
        drop: f64,
        y: f64,
    },
}

impl Capacity {
    #[inline]
    pub fn at(&self, x: f64) -> f64 {
        match *self {
            Capacity::Constant(c) => c,
            Capacity::Ramp {
                c_low,
                x_l,
                x_r,
                delta,
            } => {
                let gap = 1.0 - c_low;
                if x < x_l - delta || x > x_r + delta {
                    1.0
                } else if x <= x_l + delta {
                    1.0 - gap * (x - (x_l - delta)) / (2.0 * delta)
                } else if x < x_r - delta {
                    c_low
                } else {
                    c_low + gap * (x - (x_r - delta)) / (2.0 * delta)
                }
            }
            Capacity::Accident { drop, y } => {
                if (-y..=y).contains(&x) {
                    1.0 - drop
                } else {
                    1.0
                }
            }
        }
    }

    pub fn sup(&self) -> f64 {
        match *self {
            Capacity::Constant(c) => c,
            Capacity::Ramp { c_low, .. } => c_low.max(1.0),
            Capacity::Accident { drop, .. } => 1.0f64.max(1.0 - drop),
        }
    }
}
