//! Follow-the-Leader model `x_i' = c(x_i) Ṽ(L / (x_{i+1} - x_i))` on a
//! periodic road, integrated with explicit Euler.

use crate::capacity::Capacity;
use crate::closures::{Closures, HeadwayLaw, MicroSpeedLaw, SpeedLaw};
use crate::error::{Result, TrafficError};
use crate::grid::Grid1D;
use crate::profile::PiecewiseProfile;

/// Vehicle positions in periodic order on `[x_min, x_min + road_length)`.
/// Vehicle `i + 1` leads vehicle `i`; vehicle `0`, shifted by one road
/// length, leads the last one.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroState {
    pub positions: Vec<f64>,
    pub vehicle_length: f64,
    pub x_min: f64,
    pub road_length: f64,
}

impl MicroState {
    pub fn new(positions: Vec<f64>, vehicle_length: f64, road: &Grid1D) -> Result<Self> {
        road.require_periodic()?;
        let state = MicroState {
            positions: positions.into_iter().map(|x| road.wrap(x)).collect(),
            vehicle_length,
            x_min: road.x_min,
            road_length: road.length(),
        };
        state.validate()?;
        Ok(state)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    #[inline]
    pub fn wrap(&self, x: f64) -> f64 {
        let w = self.x_min + (x - self.x_min).rem_euclid(self.road_length);
        if w >= self.x_min + self.road_length {
            self.x_min
        } else {
            w
        }
    }

    /// Gap from vehicle `i` to its leader.
    #[inline]
    pub fn gap(&self, i: usize) -> f64 {
        periodic_gap(&self.positions, i, self.road_length)
    }

    pub fn gaps(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.gap(i)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(TrafficError::Config("no vehicles".to_string()));
        }
        let gaps = self.gaps();
        if let Some((i, &g)) = gaps.iter().enumerate().find(|(_, &g)| !(g > 0.0)) {
            return Err(TrafficError::OrderingViolation {
                step: 0,
                index: i,
                gap: g,
            });
        }
        let total: f64 = gaps.iter().sum();
        if (total - self.road_length).abs() > 1e-9 * self.road_length {
            return Err(TrafficError::Config(format!(
                "positions are not in periodic order: gaps sum to {total}, road length {}",
                self.road_length
            )));
        }
        Ok(())
    }

    /// Local densities `L / s_i`, each valid on `[x_i, x_i + s_i)`.
    pub fn local_density(&self) -> Vec<f64> {
        self.gaps()
            .iter()
            .map(|&s| self.vehicle_length / s)
            .collect()
    }

    /// Evaluates the piecewise-constant local density at the cell centers.
    pub fn sample_on_grid(&self, grid: &Grid1D) -> Vec<f64> {
        let rho = self.local_density();
        let mut order: Vec<(f64, f64)> = self.positions.iter().copied().zip(rho).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        grid.centers()
            .into_iter()
            .map(|c| {
                let c = self.wrap(c);
                let k = order.partition_point(|&(x, _)| x <= c);
                // before the first vehicle we are on the last vehicle's interval
                if k == 0 {
                    order[order.len() - 1].1
                } else {
                    order[k - 1].1
                }
            })
            .collect()
    }

    /// Headway field `H(rho)` of the sampled density.
    pub fn headway_field<H: HeadwayLaw>(&self, grid: &Grid1D, headway: &H) -> Vec<f64> {
        self.sample_on_grid(grid)
            .into_iter()
            .map(|r| headway.value(r))
            .collect()
    }
}

/// Gap from vehicle `i` to vehicle `i + 1` (cyclically) on a ring.
#[inline]
pub(crate) fn periodic_gap(positions: &[f64], i: usize, road_length: f64) -> f64 {
    let n = positions.len();
    if n == 1 {
        return road_length;
    }
    let next = if i + 1 == n { 0 } else { i + 1 };
    (positions[next] - positions[i]).rem_euclid(road_length)
}

/// Places `n` vehicles so their local densities reproduce `rho0`, by
/// inverting the cumulative mass at multiples of `mass / n`.
pub fn micro_init_from_density(
    rho0: &PiecewiseProfile,
    n: usize,
    vehicle_length: f64,
    road: &Grid1D,
) -> Result<MicroState> {
    road.require_periodic()?;
    let (a, b) = (road.x_min, road.x_max);
    let mass = rho0.mass(a, b);
    if !(mass > 0.0) {
        return Err(TrafficError::Infeasible(
            "initial density has zero mass".to_string(),
        ));
    }
    if n as f64 * vehicle_length > road.length() {
        return Err(TrafficError::Infeasible(format!(
            "{n} vehicles of length {vehicle_length} do not fit on a road of length {}",
            road.length()
        )));
    }
    let occupied = n as f64 * vehicle_length;
    if (occupied - mass).abs() > 1e-6 * mass {
        return Err(TrafficError::Infeasible(format!(
            "N L = {occupied} does not match the initial mass {mass}"
        )));
    }
    if rho0.max_value() > 1.0 {
        return Err(TrafficError::Infeasible(format!(
            "initial density {} exceeds 1: vehicles would overlap",
            rho0.max_value()
        )));
    }
    let per_vehicle = mass / n as f64;
    let positions = (0..n)
        .map(|i| rho0.inverse_mass(a, b, i as f64 * per_vehicle))
        .collect();
    MicroState::new(positions, vehicle_length, road)
}

/// Explicit Euler integrator of the Follow-the-Leader model.
#[derive(Debug, Clone)]
pub struct MicroModel<V, H, M> {
    pub capacity: Capacity,
    pub closures: Closures<V, H, M>,
    pub dt: f64,
}

impl<V: SpeedLaw, H: HeadwayLaw, M: MicroSpeedLaw> MicroModel<V, H, M> {
    pub fn new(capacity: Capacity, closures: Closures<V, H, M>, dt: f64) -> Result<Self> {
        let bound = 1.0 / (capacity.sup() * closures.micro_speed.sup());
        if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
            return Err(TrafficError::Config(format!(
                "micro step dt = {dt} exceeds 1 / (|c| |V|) = {bound}"
            )));
        }
        Ok(MicroModel {
            capacity,
            closures,
            dt,
        })
    }

    /// Vehicle speeds `c(x_i) Ṽ(L / s_i)`.
    pub fn speeds(&self, state: &MicroState) -> Vec<f64> {
        (0..state.len())
            .map(|i| {
                let u = state.vehicle_length / state.gap(i);
                self.capacity.at(state.positions[i]) * self.closures.micro_speed.value(u)
            })
            .collect()
    }

    /// One Euler step; `step` is only used in diagnostics.
    pub fn step(&self, state: &MicroState, step: usize) -> Result<MicroState> {
        let v = self.speeds(state);
        let n = state.len();
        for i in 0..n {
            let next = if i + 1 == n { 0 } else { i + 1 };
            let new_gap = if n == 1 {
                state.road_length
            } else {
                state.gap(i) + self.dt * (v[next] - v[i])
            };
            if !(new_gap > 0.0) {
                return Err(TrafficError::OrderingViolation {
                    step,
                    index: i,
                    gap: new_gap,
                });
            }
        }
        let positions = state
            .positions
            .iter()
            .zip(&v)
            .map(|(&x, &vi)| state.wrap(x + self.dt * vi))
            .collect();
        Ok(MicroState {
            positions,
            ..state.clone()
        })
    }

    /// Advances `n_steps`, returning the states after each step listed in
    /// `record` (step 0 is the initial state).
    pub fn run(
        &self,
        initial: &MicroState,
        n_steps: usize,
        record: &[usize],
    ) -> Result<Vec<(usize, MicroState)>> {
        let mut out = Vec::new();
        let mut state = initial.clone();
        if record.contains(&0) {
            out.push((0, state.clone()));
        }
        for k in 1..=n_steps {
            state = self.step(&state, k)?;
            if record.contains(&k) {
                out.push((k, state.clone()));
            }
        }
        Ok(out)
    }
}
