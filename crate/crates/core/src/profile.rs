use crate::error::{Result, TrafficError};
use serde::{Deserialize, Serialize};

/// One piece of a step profile: `value` holds for `x < x_lt` (and at or
/// beyond the previous piece's `x_lt`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step {
    /// Upper end of the piece; `null` in JSON for an unbounded last piece.
    #[serde(with = "open_bound")]
    pub x_lt: f64,
    pub value: f64,
}

mod open_bound {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Piecewise-constant profile. The first piece extends to `-inf`, the last
/// one to `+inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PiecewiseProfile {
    steps: Vec<Step>,
}

impl PiecewiseProfile {
    pub fn new(steps: Vec<Step>) -> Result<Self> {
        let p = PiecewiseProfile { steps };
        p.validate()?;
        Ok(p)
    }

    pub fn constant(value: f64) -> Self {
        PiecewiseProfile {
            steps: vec![Step {
                x_lt: f64::INFINITY,
                value,
            }],
        }
    }

    /// Initial density `0.15` on `x < 0`, `0.1` on `x >= 0`.
    pub fn paper_density() -> Self {
        PiecewiseProfile {
            steps: vec![
                Step {
                    x_lt: 0.0,
                    value: 0.15,
                },
                Step {
                    x_lt: 4.0,
                    value: 0.1,
                },
            ],
        }
    }

    /// Initial headway `0.8` on `x < 0`, `0.95` on `x >= 0`.
    pub fn paper_headway() -> Self {
        PiecewiseProfile {
            steps: vec![
                Step {
                    x_lt: 0.0,
                    value: 0.8,
                },
                Step {
                    x_lt: 4.0,
                    value: 0.95,
                },
            ],
        }
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps.is_empty() {
            return Err(TrafficError::Config("empty step profile".to_string()));
        }
        if self.steps.windows(2).any(|w| !(w[1].x_lt > w[0].x_lt)) {
            return Err(TrafficError::Config(
                "step profile breakpoints must be strictly increasing".to_string(),
            ));
        }
        if let Some(s) = self
            .steps
            .iter()
            .find(|s| !(s.value >= 0.0) || !s.value.is_finite())
        {
            return Err(TrafficError::Config(format!(
                "step profile value {} must be finite and non-negative",
                s.value
            )));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.steps
            .iter()
            .find(|s| x < s.x_lt)
            .unwrap_or_else(|| self.steps.last().unwrap())
            .value
    }

    /// Pieces restricted to `[a, b)` as `(start, end, value)`.
    fn pieces(&self, a: f64, b: f64) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        let mut lo = a;
        for (k, s) in self.steps.iter().enumerate() {
            let hi = if k + 1 == self.steps.len() {
                b
            } else {
                s.x_lt.min(b)
            };
            if hi > lo {
                out.push((lo, hi, s.value));
                lo = hi;
            }
            if lo >= b {
                break;
            }
        }
        out
    }

    /// `int_a^b rho dx`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        self.pieces(a, b)
            .iter()
            .map(|&(lo, hi, v)| (hi - lo) * v)
            .sum()
    }

    /// Smallest `x` in `[a, b]` with `int_a^x rho = m`.
    pub fn inverse_mass(&self, a: f64, b: f64, m: f64) -> f64 {
        let mut acc = 0.0;
        for (lo, hi, v) in self.pieces(a, b) {
            let piece = (hi - lo) * v;
            if v > 0.0 && acc + piece >= m {
                return (lo + (m - acc) / v).min(hi);
            }
            acc += piece;
        }
        b
    }

    pub fn max_value(&self) -> f64 {
        self.steps.iter().map(|s| s.value).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_profile() {
        let p = PiecewiseProfile::paper_density();
        assert_eq!(p.eval(-1.0), 0.15);
        assert_eq!(p.eval(0.0), 0.1);
        assert_eq!(p.eval(10.0), 0.1);
        assert!((p.mass(-4.0, 4.0) - 1.0).abs() < 1e-15);
        assert!((p.inverse_mass(-4.0, 4.0, 0.6) - 0.0).abs() < 1e-12);
        assert!((p.inverse_mass(-4.0, 4.0, 0.15) + 3.0).abs() < 1e-12);
        assert!((p.inverse_mass(-4.0, 4.0, 0.7) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_unsorted() {
        assert!(PiecewiseProfile::new(vec![
            Step {
                x_lt: 1.0,
                value: 0.1
            },
            Step {
                x_lt: 0.0,
                value: 0.2
            },
        ])
        .is_err());
        assert!(PiecewiseProfile::new(vec![]).is_err());
        assert!(PiecewiseProfile::new(vec![Step {
            x_lt: 0.0,
            value: -1.0
        }])
        .is_err());
    }
}
