use crate::error::{Result, TrafficError};
use crate::grid::Grid1D;
use crate::profile::PiecewiseProfile;

/// Density and mean headway sampled at the cell centers of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroField {
    pub grid: Grid1D,
    pub rho: Vec<f64>,
    pub h: Vec<f64>,
}

impl MacroField {
    pub fn new(grid: Grid1D, rho: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        let n = grid.n_cells();
        if rho.len() != n || h.len() != n {
            return Err(TrafficError::Config(format!(
                "field arrays have lengths {} and {}, grid has {n} cells",
                rho.len(),
                h.len()
            )));
        }
        if let Some(i) = rho.iter().chain(&h).position(|v| !v.is_finite()) {
            return Err(TrafficError::SolverFailure {
                cell: i % n,
                what: "non-finite field value",
                value: f64::NAN,
            });
        }
        Ok(MacroField { grid, rho, h })
    }

    pub fn from_profiles(grid: Grid1D, rho: &PiecewiseProfile, h: &PiecewiseProfile) -> Self {
        let centers = grid.centers();
        MacroField {
            grid,
            rho: centers.iter().map(|&x| rho.eval(x)).collect(),
            h: centers.iter().map(|&x| h.eval(x)).collect(),
        }
    }

    pub fn total_mass(&self) -> f64 {
        total_mass(&self.rho, &self.grid)
    }
}

/// `sum_i rho_i dx`.
pub fn total_mass(rho: &[f64], grid: &Grid1D) -> f64 {
    rho.iter().sum::<f64>() * grid.dx
}

/// `sum_i |a_i - b_i| dx`.
pub fn l1_distance(a: &[f64], b: &[f64], dx: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * dx
}

/// `l1_distance(a, b) / sum_i |b_i| dx`.
pub fn relative_l1(a: &[f64], b: &[f64], dx: f64) -> f64 {
    let norm: f64 = b.iter().map(|v| v.abs()).sum::<f64>() * dx;
    l1_distance(a, b, dx) / norm
}

/// `sqrt(sum_i (a_i - b_i)^2 dx)`.
pub fn l2_distance(a: &[f64], b: &[f64], dx: f64) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() * dx).sqrt()
}
