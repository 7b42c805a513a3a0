//! Stochastic Galerkin propagation of the Legendre modes in `Y ~ U[1, 3]`
//! for the conservative second-order model and the Follow-the-Leader model.
//! Projections are evaluated by Gauss-Legendre quadrature at `y_j = z_j + 2`.

use rayon::prelude::*;

use crate::capacity::{Capacity, CapacitySpec};
use crate::closures::{
    HeadwayLaw, LinearMicroSpeed, MicroSpeedLaw, RationalHeadway, RationalSpeed, SpeedLaw,
};
use crate::error::{Result, TrafficError};
use crate::field::MacroField;
use crate::grid::Grid1D;
use crate::macroscopic::{cfl_check, RHO_GUARD};
use crate::micro::MicroState;
use crate::params::ModelParams;
use crate::uq::quadrature::{legendre_phi, Quadrature};

/// `rho_hat[k][cell]`, `z_hat[k][cell]` for `k = 0..=order`.
#[derive(Debug, Clone, PartialEq)]
pub struct PceModesMacro {
    pub rho_hat: Vec<Vec<f64>>,
    pub z_hat: Vec<Vec<f64>>,
}

impl PceModesMacro {
    pub fn order(&self) -> usize {
        self.rho_hat.len() - 1
    }
}

/// `x_hat[i][k]` for vehicle `i` and `k = 0..=order`.
#[derive(Debug, Clone, PartialEq)]
pub struct PceModesMicro {
    pub x_hat: Vec<Vec<f64>>,
}

/// Basis values and half-weights at the mapped nodes.
#[derive(Debug, Clone)]
struct Projection {
    /// `phi[k][j] = phi_k(y_j)`.
    phi: Vec<Vec<f64>>,
    /// `w_j / 2`.
    half_w: Vec<f64>,
    ys: Vec<f64>,
}

impl Projection {
    fn new(quad: &Quadrature, order: usize) -> Result<Self> {
        if order + 1 > quad.order() {
            return Err(TrafficError::Config(format!(
                "order {order} needs at least {} quadrature nodes, got {}",
                order + 1,
                quad.order()
            )));
        }
        let ys = quad.mapped_nodes();
        Ok(Projection {
            phi: (0..=order)
                .map(|k| ys.iter().map(|&y| legendre_phi(k, y)).collect())
                .collect(),
            half_w: quad.weights.iter().map(|w| 0.5 * w).collect(),
            ys,
        })
    }

    fn nodes(&self) -> usize {
        self.ys.len()
    }

    /// `sum_k c_k phi_k(y_j)` given a mode accessor.
    #[inline]
    fn reconstruct(&self, j: usize, coeff: impl Fn(usize) -> f64) -> f64 {
        self.phi
            .iter()
            .enumerate()
            .map(|(k, p)| coeff(k) * p[j])
            .sum()
    }

    /// `sum_j (w_j / 2) values_j phi_k(y_j)`.
    #[inline]
    fn project(&self, k: usize, values: &[f64]) -> f64 {
        self.half_w
            .iter()
            .zip(&self.phi[k])
            .zip(values)
            .map(|((w, p), v)| w * p * v)
            .sum()
    }
}

fn capacity_at_nodes(spec: &CapacitySpec, ys: &[f64]) -> Result<Vec<Capacity>> {
    ys.iter().map(|&y| spec.resolve(Some(y))).collect()
}

/// Galerkin system of the conservative second-order model.
#[derive(Debug, Clone)]
pub struct PceMacro {
    pub grid: Grid1D,
    pub params: ModelParams,
    proj: Projection,
    /// `cap[j][cell] = c(x_cell; y_j)`.
    cap: Vec<Vec<f64>>,
}

impl PceMacro {
    pub fn new(
        grid: Grid1D,
        params: ModelParams,
        capacity: &CapacitySpec,
        quad: &Quadrature,
        order: usize,
    ) -> Result<Self> {
        grid.require_periodic()?;
        params.validate()?;
        cfl_check(params.dt, &grid, capacity.sup(), RationalSpeed.sup())?;
        let proj = Projection::new(quad, order)?;
        let centers = grid.centers();
        let cap = capacity_at_nodes(capacity, &proj.ys)?
            .iter()
            .map(|c| centers.iter().map(|&x| c.at(x)).collect())
            .collect();
        Ok(PceMacro {
            grid,
            params,
            proj,
            cap,
        })
    }

    pub fn order(&self) -> usize {
        self.proj.phi.len() - 1
    }

    /// Modes of deterministic initial data: only mode 0 is non-zero.
    pub fn initial_modes(&self, field: &MacroField) -> PceModesMacro {
        let k = self.params.pressure_coeff();
        let n = field.rho.len();
        let mut rho_hat = vec![vec![0.0; n]; self.order() + 1];
        let mut z_hat = rho_hat.clone();
        rho_hat[0] = field.rho.clone();
        z_hat[0] = field
            .rho
            .iter()
            .zip(&field.h)
            .map(|(&r, &h)| r * (h + k * r))
            .collect();
        PceModesMacro { rho_hat, z_hat }
    }

    /// Reconstructed `(rho, z, h)` at every node of one cell.
    fn node_states(&self, m: &PceModesMacro, cell: usize) -> Result<Vec<[f64; 3]>> {
        let kappa = self.params.pressure_coeff();
        (0..self.proj.nodes())
            .map(|j| {
                let rho = self.proj.reconstruct(j, |k| m.rho_hat[k][cell]);
                let z = self.proj.reconstruct(j, |k| m.z_hat[k][cell]);
                if !(rho > RHO_GUARD) {
                    return Err(TrafficError::NodeFailure {
                        index: cell,
                        node: j,
                        what: "density",
                        value: rho,
                    });
                }
                Ok([rho, z, z / rho - kappa * rho])
            })
            .collect()
    }

    /// Projected fluxes of `rho` and `z` at one cell, per mode.
    fn cell_fluxes(&self, m: &PceModesMacro, cell: usize) -> Result<Vec<[f64; 2]>> {
        let states = self.node_states(m, cell)?;
        let mut f_rho = Vec::with_capacity(states.len());
        let mut f_z = Vec::with_capacity(states.len());
        for (j, &[rho, z, h]) in states.iter().enumerate() {
            let s = self.cap[j][cell] * RationalSpeed.value(h);
            f_rho.push(s * rho);
            f_z.push(s * z);
        }
        Ok((0..=self.order())
            .map(|k| [self.proj.project(k, &f_rho), self.proj.project(k, &f_z)])
            .collect())
    }

    /// Projected relaxation source `a rho (H(rho) - h)` at one cell, per mode.
    fn cell_relaxation(&self, m: &PceModesMacro, cell: usize) -> Result<Vec<f64>> {
        let src: Vec<f64> = self
            .node_states(m, cell)?
            .iter()
            .map(|&[rho, _, h]| self.params.a * rho * (RationalHeadway.value(rho) - h))
            .collect();
        Ok((0..=self.order())
            .map(|k| self.proj.project(k, &src))
            .collect())
    }

    fn per_cell<T: Send>(&self, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
        (0..self.grid.n_cells())
            .into_par_iter()
            .with_min_len(256)
            .map(f)
            .collect::<Vec<_>>()
            .into_iter()
            .collect()
    }

    /// One Lax-Friedrichs step on every mode, followed by the projected
    /// relaxation source when `a > 0`.
    #[allow(clippy::needless_range_loop)]
    pub fn step(&self, m: &PceModesMacro) -> Result<PceModesMacro> {
        let n = self.grid.n_cells();
        let flux = self.per_cell(|cell| self.cell_fluxes(m, cell))?;
        let lambda = self.params.dt / self.grid.dx;
        let mut out = m.clone();
        for k in 0..=self.order() {
            for i in 0..n {
                let l = if i == 0 { n - 1 } else { i - 1 };
                let r = if i + 1 == n { 0 } else { i + 1 };
                out.rho_hat[k][i] = 0.5 * (m.rho_hat[k][l] + m.rho_hat[k][r])
                    - 0.5 * lambda * (flux[r][k][0] - flux[l][k][0]);
                out.z_hat[k][i] = 0.5 * (m.z_hat[k][l] + m.z_hat[k][r])
                    - 0.5 * lambda * (flux[r][k][1] - flux[l][k][1]);
            }
        }
        if self.params.a > 0.0 {
            let src = self.per_cell(|cell| self.cell_relaxation(&out, cell))?;
            for (i, s) in src.iter().enumerate() {
                for (k, v) in s.iter().enumerate() {
                    out.z_hat[k][i] += self.params.dt * v;
                }
            }
        } else {
            // positivity at the nodes after the step
            self.per_cell(|cell| self.node_states(&out, cell).map(|_| ()))?;
        }
        Ok(out)
    }

    pub fn run(&self, initial: &PceModesMacro, n_steps: usize) -> Result<PceModesMacro> {
        let mut m = initial.clone();
        for _ in 0..n_steps {
            m = self.step(&m)?;
        }
        Ok(m)
    }

    /// `rho = rho_hat_0`, `h = z_hat_0 / rho_hat_0 - (gamma/2) eta rho_hat_0`.
    pub fn expectation(&self, m: &PceModesMacro) -> MacroField {
        expectation_from_modes(m, self.grid, &self.params)
    }
}

pub fn expectation_from_modes(m: &PceModesMacro, grid: Grid1D, params: &ModelParams) -> MacroField {
    let k = params.pressure_coeff();
    let rho = m.rho_hat[0].clone();
    let h = rho
        .iter()
        .zip(&m.z_hat[0])
        .map(|(&r, &z)| z / r - k * r)
        .collect();
    MacroField { grid, rho, h }
}

/// Galerkin system of the Follow-the-Leader model.
#[derive(Debug, Clone)]
pub struct PceMicro {
    pub road: Grid1D,
    pub vehicle_length: f64,
    pub dt: f64,
    proj: Projection,
    cap: Vec<Capacity>,
}

impl PceMicro {
    pub fn new(
        road: Grid1D,
        params: &ModelParams,
        capacity: &CapacitySpec,
        quad: &Quadrature,
        order: usize,
    ) -> Result<Self> {
        road.require_periodic()?;
        let bound = 1.0 / (capacity.sup() * LinearMicroSpeed.sup());
        if !(params.dt > 0.0) || params.dt > bound * (1.0 + 1e-12) {
            return Err(TrafficError::Config(format!(
                "micro step dt = {} exceeds 1 / (|c| |V|) = {bound}",
                params.dt
            )));
        }
        let proj = Projection::new(quad, order)?;
        let cap = capacity_at_nodes(capacity, &proj.ys)?;
        Ok(PceMicro {
            road,
            vehicle_length: params.vehicle_length,
            dt: params.dt,
            proj,
            cap,
        })
    }

    pub fn order(&self) -> usize {
        self.proj.phi.len() - 1
    }

    pub fn initial_modes(&self, state: &MicroState) -> PceModesMicro {
        PceModesMicro {
            x_hat: state
                .positions
                .iter()
                .map(|&x| {
                    let mut v = vec![0.0; self.order() + 1];
                    v[0] = x;
                    v
                })
                .collect(),
        }
    }

    /// Gap to the leader at node `j`; the mode-0 difference is taken modulo
    /// the road length.
    fn gap(&self, m: &PceModesMicro, i: usize, j: usize) -> f64 {
        let n = m.x_hat.len();
        let len = self.road.length();
        if n == 1 {
            return len;
        }
        let next = if i + 1 == n { 0 } else { i + 1 };
        let (a, b) = (&m.x_hat[i], &m.x_hat[next]);
        let base = (b[0] - a[0]).rem_euclid(len);
        base + self
            .proj
            .reconstruct(j, |k| if k == 0 { 0.0 } else { b[k] - a[k] })
    }

    /// One explicit Euler step of the mode coefficients.
    pub fn step(&self, m: &PceModesMicro) -> Result<PceModesMicro> {
        let n = m.x_hat.len();
        let nodes = self.proj.nodes();
        let order = self.order();
        let rows: Vec<Result<Vec<f64>>> = (0..n)
            .into_par_iter()
            .with_min_len(256)
            .map(|i| {
                let mut v = vec![0.0; nodes];
                for (j, vj) in v.iter_mut().enumerate() {
                    let g = self.gap(m, i, j);
                    if !(g > 0.0) {
                        return Err(TrafficError::NodeFailure {
                            index: i,
                            node: j,
                            what: "gap",
                            value: g,
                        });
                    }
                    let x = self.road.wrap(self.proj.reconstruct(j, |k| m.x_hat[i][k]));
                    *vj = self.cap[j].at(x) * LinearMicroSpeed.value(self.vehicle_length / g);
                }
                Ok((0..=order)
                    .map(|r| {
                        let x = m.x_hat[i][r] + self.dt * self.proj.project(r, &v);
                        if r == 0 {
                            self.road.wrap(x)
                        } else {
                            x
                        }
                    })
                    .collect())
            })
            .collect();
        let x_hat = rows.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(PceModesMicro { x_hat })
    }

    pub fn run(&self, initial: &PceModesMicro, n_steps: usize) -> Result<PceModesMicro> {
        let mut m = initial.clone();
        for _ in 0..n_steps {
            m = self.step(&m)?;
        }
        Ok(m)
    }

    /// Mode-0 positions as a vehicle configuration.
    pub fn mean_state(&self, m: &PceModesMicro) -> Result<MicroState> {
        MicroState::new(
            m.x_hat.iter().map(|v| v[0]).collect(),
            self.vehicle_length,
            &self.road,
        )
    }

    /// Expected micro density on `grid` from the mode-0 positions, with
    /// headway `H(rho)`.
    pub fn expectation(&self, m: &PceModesMicro, grid: &Grid1D) -> Result<MacroField> {
        let rho = self.mean_state(m)?.sample_on_grid(grid);
        let h = rho.iter().map(|&r| RationalHeadway.value(r)).collect();
        Ok(MacroField {
            grid: *grid,
            rho,
            h,
        })
    }
}
