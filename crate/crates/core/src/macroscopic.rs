//! Lax-Friedrichs solvers for the first-order model
//! `rho_t + (c rho V(H(rho)))_x = 0` and the second-order density-headway
//! model, on periodic grids.

use crate::capacity::{Capacity, CapacitySpec};
use crate::closures::{Closures, HeadwayLaw, MicroSpeedLaw, SpeedLaw};
use crate::error::{Result, TrafficError};
use crate::field::MacroField;
use crate::grid::Grid1D;
use crate::params::ModelParams;

/// Smallest density from which the headway is recovered as `z / rho`.
pub const RHO_GUARD: f64 = 1e-12;

/// Computes `(dt / dx) |c|_inf |V|_inf` and fails when it exceeds 1.
pub fn cfl_check(dt: f64, grid: &Grid1D, capacity_sup: f64, speed_sup: f64) -> Result<f64> {
    let ratio = dt / grid.dx * capacity_sup * speed_sup;
    if ratio > 1.0 + 1e-12 {
        Err(TrafficError::Cfl { ratio })
    } else {
        Ok(ratio)
    }
}

/// [`cfl_check`] for a capacity specification and the default speed law.
pub fn cfl_check_spec(params: &ModelParams, capacity: &CapacitySpec, grid: &Grid1D) -> Result<f64> {
    cfl_check(params.dt, grid, capacity.sup(), 1.0)
}

#[inline]
fn neighbours(i: usize, n: usize) -> (usize, usize) {
    (
        if i == 0 { n - 1 } else { i - 1 },
        if i + 1 == n { 0 } else { i + 1 },
    )
}

/// Holds the grid, the capacity at the cell centers and the closures.
#[derive(Debug, Clone)]
pub struct MacroSolver<V, H, M> {
    pub grid: Grid1D,
    pub params: ModelParams,
    pub closures: Closures<V, H, M>,
    cap: Vec<f64>,
}

impl<V: SpeedLaw, H: HeadwayLaw, M: MicroSpeedLaw> MacroSolver<V, H, M> {
    pub fn new(
        grid: Grid1D,
        params: ModelParams,
        capacity: &Capacity,
        closures: Closures<V, H, M>,
    ) -> Result<Self> {
        grid.require_periodic()?;
        params.validate()?;
        cfl_check(params.dt, &grid, capacity.sup(), closures.speed.sup())?;
        let cap = grid.centers().into_iter().map(|x| capacity.at(x)).collect();
        Ok(MacroSolver {
            grid,
            params,
            closures,
            cap,
        })
    }

    /// Capacity values at the cell centers.
    pub fn capacity(&self) -> &[f64] {
        &self.cap
    }

    fn lambda(&self) -> f64 {
        self.params.dt / self.grid.dx
    }

    /// Lax-Friedrichs update of a conserved quantity with cell fluxes `flux`.
    #[inline]
    fn lf(&self, q: &[f64], flux: &[f64], i: usize) -> f64 {
        let (l, r) = neighbours(i, q.len());
        0.5 * (q[l] + q[r]) - 0.5 * self.lambda() * (flux[r] - flux[l])
    }

    pub fn step_first_order(&self, rho: &[f64]) -> Result<Vec<f64>> {
        let flux: Vec<f64> = rho
            .iter()
            .zip(&self.cap)
            .map(|(&r, &c)| c * self.closures.equilibrium_speed(r) * r)
            .collect();
        (0..rho.len())
            .map(|i| {
                let next = self.lf(rho, &flux, i);
                if !(next >= -1e-12) {
                    return Err(TrafficError::SolverFailure {
                        cell: i,
                        what: "density",
                        value: next,
                    });
                }
                Ok(next)
            })
            .collect()
    }

    /// Advection of `rho` and `z = rho h`, then the interaction and
    /// relaxation source on `z` evaluated at the advected state, then
    /// `h = z / rho`.
    pub fn step_second_order(&self, field: &MacroField) -> Result<MacroField> {
        let (rho, h) = (&field.rho, &field.h);
        let n = rho.len();
        let p = &self.params;
        let speed: Vec<f64> = h
            .iter()
            .zip(&self.cap)
            .map(|(&hi, &c)| c * self.closures.speed.value(hi))
            .collect();
        let z: Vec<f64> = rho.iter().zip(h).map(|(r, h)| r * h).collect();
        let flux_rho: Vec<f64> = speed.iter().zip(rho).map(|(s, r)| s * r).collect();
        let flux_z: Vec<f64> = speed.iter().zip(&z).map(|(s, z)| s * z).collect();

        let mut rho_new = Vec::with_capacity(n);
        let mut z_adv = Vec::with_capacity(n);
        let mut h_adv = Vec::with_capacity(n);
        for i in 0..n {
            let r_next = self.lf(rho, &flux_rho, i);
            if !(r_next > RHO_GUARD) {
                return Err(TrafficError::DivisionGuard {
                    cell: i,
                    rho: r_next,
                });
            }
            rho_new.push(r_next);
            z_adv.push(self.lf(&z, &flux_z, i));
            h_adv.push(z_adv[i] / r_next);
        }

        let speed_adv: Vec<f64> = h_adv
            .iter()
            .zip(&self.cap)
            .map(|(&hi, &c)| c * self.closures.speed.value(hi))
            .collect();
        let mut h_new = Vec::with_capacity(n);
        for i in 0..n {
            let (r, ha) = (rho_new[i], h_adv[i]);
            let (_, right) = neighbours(i, n);
            let interaction =
                p.pressure_coeff() * r * r * (speed_adv[right] - speed_adv[i]) / self.grid.dx;
            let relaxation = p.a * r * (self.closures.headway.value(r) - ha);
            let h_next = (z_adv[i] + p.dt * (interaction + relaxation)) / r;
            if !h_next.is_finite() {
                return Err(TrafficError::SolverFailure {
                    cell: i,
                    what: "headway",
                    value: h_next,
                });
            }
            h_new.push(h_next);
        }
        Ok(MacroField {
            grid: field.grid,
            rho: rho_new,
            h: h_new,
        })
    }

    /// Headway recovered from the conservative pair, `z / rho - p(rho)`.
    #[inline]
    pub fn headway_from_conservative(&self, rho: f64, z: f64) -> f64 {
        z / rho - self.params.pressure_coeff() * rho
    }

    /// Conservative second-order variable `z = rho (h + p(rho))`.
    #[inline]
    pub fn conservative_z(&self, rho: f64, h: f64) -> f64 {
        rho * (h + self.params.pressure_coeff() * rho)
    }

    /// Lax-Friedrichs step of the conservative form in `(rho, z)`, followed by
    /// the relaxation source on `z` when `a > 0`.
    pub fn step_conservative(&self, rho: &[f64], z: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = rho.len();
        let p = &self.params;
        let mut h = Vec::with_capacity(n);
        for i in 0..n {
            if !(rho[i] > RHO_GUARD) {
                return Err(TrafficError::DivisionGuard {
                    cell: i,
                    rho: rho[i],
                });
            }
            h.push(self.headway_from_conservative(rho[i], z[i]));
        }
        let speed: Vec<f64> = h
            .iter()
            .zip(&self.cap)
            .map(|(&hi, &c)| c * self.closures.speed.value(hi))
            .collect();
        let flux_rho: Vec<f64> = speed.iter().zip(rho).map(|(s, r)| s * r).collect();
        let flux_z: Vec<f64> = speed.iter().zip(z).map(|(s, z)| s * z).collect();
        let mut rho_new = Vec::with_capacity(n);
        let mut z_new = Vec::with_capacity(n);
        for i in 0..n {
            let r_next = self.lf(rho, &flux_rho, i);
            let mut z_next = self.lf(z, &flux_z, i);
            if !(r_next > RHO_GUARD) {
                return Err(TrafficError::DivisionGuard {
                    cell: i,
                    rho: r_next,
                });
            }
            if p.a > 0.0 {
                let h_adv = self.headway_from_conservative(r_next, z_next);
                z_next += p.dt * p.a * r_next * (self.closures.headway.value(r_next) - h_adv);
            }
            rho_new.push(r_next);
            z_new.push(z_next);
        }
        Ok((rho_new, z_new))
    }

    /// Field of the first-order model, with headway `H(rho)`.
    pub fn first_order_field(&self, rho: Vec<f64>) -> MacroField {
        let h = rho
            .iter()
            .map(|&r| self.closures.headway.value(r))
            .collect();
        MacroField {
            grid: self.grid,
            rho,
            h,
        }
    }

    pub fn run_first_order(
        &self,
        rho0: &[f64],
        n_steps: usize,
        record: &[usize],
    ) -> Result<Vec<(usize, MacroField)>> {
        let mut out = Vec::new();
        let mut rho = rho0.to_vec();
        if record.contains(&0) {
            out.push((0, self.first_order_field(rho.clone())));
        }
        for k in 1..=n_steps {
            rho = self.step_first_order(&rho)?;
            if record.contains(&k) {
                out.push((k, self.first_order_field(rho.clone())));
            }
        }
        Ok(out)
    }

    pub fn run_second_order(
        &self,
        initial: &MacroField,
        n_steps: usize,
        record: &[usize],
    ) -> Result<Vec<(usize, MacroField)>> {
        let mut out = Vec::new();
        let mut field = initial.clone();
        if record.contains(&0) {
            out.push((0, field.clone()));
        }
        for k in 1..=n_steps {
            field = self.step_second_order(&field)?;
            if record.contains(&k) {
                out.push((k, field.clone()));
            }
        }
        Ok(out)
    }

    /// Runs the conservative form from `(rho, h)` and reports `(rho, h)`.
    pub fn run_conservative(
        &self,
        initial: &MacroField,
        n_steps: usize,
        record: &[usize],
    ) -> Result<Vec<(usize, MacroField)>> {
        let mut rho = initial.rho.clone();
        let mut z: Vec<f64> = rho
            .iter()
            .zip(&initial.h)
            .map(|(&r, &h)| self.conservative_z(r, h))
            .collect();
        let snapshot = |rho: &[f64], z: &[f64]| MacroField {
            grid: self.grid,
            rho: rho.to_vec(),
            h: rho
                .iter()
                .zip(z)
                .map(|(&r, &z)| self.headway_from_conservative(r, z))
                .collect(),
        };
        let mut out = Vec::new();
        if record.contains(&0) {
            out.push((0, snapshot(&rho, &z)));
        }
        for k in 1..=n_steps {
            (rho, z) = self.step_conservative(&rho, &z)?;
            if record.contains(&k) {
                out.push((k, snapshot(&rho, &z)));
            }
        }
        Ok(out)
    }
}
