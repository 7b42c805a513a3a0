use crate::error::{Result, TrafficError};
use serde::{Deserialize, Serialize};

/// Equispaced 1-D grid of cells `[x_min + i dx, x_min + (i+1) dx)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid1D {
    #[serde(rename = "xmin")]
    pub x_min: f64,
    #[serde(rename = "xmax")]
    pub x_max: f64,
    pub dx: f64,
    pub periodic: bool,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, dx: f64, periodic: bool) -> Result<Self> {
        let grid = Grid1D {
            x_min,
            x_max,
            dx,
            periodic,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// The default road `[-4, 4]`, periodic.
    pub fn paper_road(dx: f64) -> Result<Self> {
        Self::new(-4.0, 4.0, dx, true)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_max > self.x_min) || !self.x_min.is_finite() || !self.x_max.is_finite() {
            return Err(TrafficError::Config(format!(
                "domain [{}, {}] is empty or not finite",
                self.x_min, self.x_max
            )));
        }
        if !(self.dx > 0.0) {
            return Err(TrafficError::Config(format!(
                "dx = {} must be positive",
                self.dx
            )));
        }
        let ratio = self.length() / self.dx;
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio {
            return Err(TrafficError::Config(format!(
                "domain length {} is not an integer multiple of dx = {}",
                self.length(),
                self.dx
            )));
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn n_cells(&self) -> usize {
        (self.length() / self.dx).round() as usize
    }

    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells()).map(|i| self.center(i)).collect()
    }

    /// Maps `x` into `[x_min, x_max)` on periodic grids; identity otherwise.
    #[inline]
    pub fn wrap(&self, x: f64) -> f64 {
        if !self.periodic {
            return x;
        }
        let len = self.length();
        let w = self.x_min + (x - self.x_min).rem_euclid(len);
        // rem_euclid can round up to exactly len
        if w >= self.x_max {
            self.x_min
        } else {
            w
        }
    }

    /// Index of the cell containing `x` (after wrapping), clamped to the grid.
    #[inline]
    pub fn cell_of(&self, x: f64) -> usize {
        let k = ((self.wrap(x) - self.x_min) / self.dx).floor();
        let n = self.n_cells();
        if k < 0.0 {
            0
        } else if k as usize >= n {
            n - 1
        } else {
            k as usize
        }
    }

    pub fn require_periodic(&self) -> Result<()> {
        if self.periodic {
            Ok(())
        } else {
            Err(TrafficError::Config(
                "only periodic roads are supported".to_string(),
            ))
        }
    }
}
