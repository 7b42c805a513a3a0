//! Discrete-time stochastic particle model: each particle carries a position
//! `X` and a headway `S`. Per step it moves with speed `c(X) V(S)`, takes an
//! interaction with a partner ahead with probability `dt`, and relaxes
//! towards the optimal headway with probability `epsilon dt`.

use crate::capacity::Capacity;
use crate::closures::{Closures, HeadwayLaw, MicroSpeedLaw, SpeedLaw};
use crate::error::{Result, TrafficError};
use crate::field::MacroField;
use crate::grid::Grid1D;
use crate::params::ModelParams;
use crate::profile::PiecewiseProfile;
use crate::rng::RngStream;
use rand::RngExt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Weighted particles `(X, S)`; every particle carries mass `weight`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub weight: f64,
}

impl ParticleEnsemble {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weight * self.len() as f64
    }
}

/// How initial particle positions are drawn from the density profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParticleInit {
    /// Positions at the mid-quantiles of the cumulative mass.
    #[default]
    Quantile,
    /// Independent draws from the normalised density.
    Random,
}

/// Which headway updates are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelaxationMode {
    /// Interactions with rate 1 and relaxation with rate `epsilon`.
    #[default]
    Slow,
    /// Interactions only.
    Off,
}

/// Builds an ensemble of `n` particles with density `rho0` and headway
/// `h0(X)`.
pub fn init_ensemble(
    rho0: &PiecewiseProfile,
    h0: &PiecewiseProfile,
    n: usize,
    grid: &Grid1D,
    init: ParticleInit,
    seed: u64,
) -> Result<ParticleEnsemble> {
    grid.require_periodic()?;
    if n == 0 {
        return Err(TrafficError::Config(
            "particle count must be positive".to_string(),
        ));
    }
    let (a, b) = (grid.x_min, grid.x_max);
    let mass = rho0.mass(a, b);
    if !(mass > 0.0) {
        return Err(TrafficError::Infeasible(
            "initial density has zero mass".to_string(),
        ));
    }
    let x: Vec<f64> = (0..n)
        .map(|i| {
            let q = match init {
                ParticleInit::Quantile => (i as f64 + 0.5) / n as f64,
                ParticleInit::Random => RngStream::new(seed, i as u64)
                    .rng_at(u64::MAX)
                    .random::<f64>(),
            };
            grid.wrap(rho0.inverse_mass(a, b, q * mass))
        })
        .collect();
    let s = x.iter().map(|&xi| h0.eval(xi)).collect();
    Ok(ParticleEnsemble {
        x,
        s,
        weight: mass / n as f64,
    })
}

/// Particles grouped by grid cell (counting sort of a snapshot).
#[derive(Debug, Clone)]
pub struct BinIndex {
    /// `offsets[k]..offsets[k + 1]` indexes `order` for cell `k`.
    pub offsets: Vec<usize>,
    pub order: Vec<usize>,
}

impl BinIndex {
    pub fn build(x: &[f64], grid: &Grid1D) -> Self {
        let n_cells = grid.n_cells();
        let cells: Vec<usize> = x.iter().map(|&xi| grid.cell_of(xi)).collect();
        let mut offsets = vec![0usize; n_cells + 1];
        for &c in &cells {
            offsets[c + 1] += 1;
        }
        for k in 0..n_cells {
            offsets[k + 1] += offsets[k];
        }
        let mut fill = offsets.clone();
        let mut order = vec![0usize; x.len()];
        for (i, &c) in cells.iter().enumerate() {
            order[fill[c]] = i;
            fill[c] += 1;
        }
        BinIndex { offsets, order }
    }

    #[inline]
    pub fn count(&self, cell: usize) -> usize {
        self.offsets[cell + 1] - self.offsets[cell]
    }

    #[inline]
    pub fn members(&self, cell: usize) -> &[usize] {
        &self.order[self.offsets[cell]..self.offsets[cell + 1]]
    }
}

/// Density `W count / dx` and mean headway per cell (`0` in empty cells).
pub fn bin_to_fields(ens: &ParticleEnsemble, grid: &Grid1D) -> MacroField {
    let n = grid.n_cells();
    let mut count = vec![0usize; n];
    let mut sum_s = vec![0.0f64; n];
    for (&x, &s) in ens.x.iter().zip(&ens.s) {
        let k = grid.cell_of(x);
        count[k] += 1;
        sum_s[k] += s;
    }
    let rho = count
        .iter()
        .map(|&c| ens.weight * c as f64 / grid.dx)
        .collect();
    let h = count
        .iter()
        .zip(&sum_s)
        .map(|(&c, &s)| if c == 0 { 0.0 } else { s / c as f64 })
        .collect();
    MacroField {
        grid: *grid,
        rho,
        h,
    }
}

/// The particle model on a periodic road; `grid` is the binning grid used
/// for partner lookup and the local density of the relaxation step.
#[derive(Debug, Clone)]
pub struct ParticleModel<V, H, M> {
    pub grid: Grid1D,
    pub params: ModelParams,
    pub capacity: Capacity,
    pub closures: Closures<V, H, M>,
    pub mode: RelaxationMode,
}

impl<V: SpeedLaw, H: HeadwayLaw, M: MicroSpeedLaw> ParticleModel<V, H, M> {
    pub fn new(
        grid: Grid1D,
        params: ModelParams,
        capacity: Capacity,
        closures: Closures<V, H, M>,
        mode: RelaxationMode,
    ) -> Result<Self> {
        grid.require_periodic()?;
        params.validate()?;
        let bound = 1.0f64.min(1.0 / params.epsilon);
        if params.dt > bound {
            return Err(TrafficError::Config(format!(
                "particle step dt = {} exceeds min(1, 1/epsilon) = {bound}",
                params.dt
            )));
        }
        Ok(ParticleModel {
            grid,
            params,
            capacity,
            closures,
            mode,
        })
    }

    /// Chooses the interaction partner of particle `i`: uniformly among the
    /// particles within one cell width around `X + eta`, otherwise the
    /// nearest particle ahead. Returns `None` when `i` is alone.
    fn partner(&self, ens: &ParticleEnsemble, bins: &BinIndex, i: usize, u: f64) -> Option<usize> {
        let g = &self.grid;
        let len = g.length();
        let n_cells = g.n_cells();
        let lo = g.wrap(ens.x[i] + self.params.eta - 0.5 * g.dx);
        let first = g.cell_of(lo);
        let span = if n_cells == 1 { 1 } else { 2 };
        let in_window = |j: usize| j != i && (ens.x[j] - lo).rem_euclid(len) < g.dx;

        let mut count = 0usize;
        for k in 0..span {
            let cell = (first + k) % n_cells;
            count += bins.members(cell).iter().filter(|&&j| in_window(j)).count();
        }
        if count > 0 {
            let mut pick = ((u * count as f64) as usize).min(count - 1);
            for k in 0..span {
                let cell = (first + k) % n_cells;
                for &j in bins.members(cell) {
                    if in_window(j) {
                        if pick == 0 {
                            return Some(j);
                        }
                        pick -= 1;
                    }
                }
            }
        }

        // nearest particle ahead of X
        let xi = ens.x[i];
        let home = g.cell_of(xi);
        let behind_start = xi - (g.x_min + home as f64 * g.dx);
        let mut best: Option<(f64, usize)> = None;
        for k in 0..n_cells {
            let cell = (home + k) % n_cells;
            for &j in bins.members(cell) {
                if j == i {
                    continue;
                }
                let d = (ens.x[j] - xi).rem_euclid(len);
                if d > 0.0 && best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, j));
                }
            }
            if let Some((bd, _)) = best {
                // every particle in later cells is at least this far ahead
                if bd <= (k + 1) as f64 * g.dx - behind_start {
                    break;
                }
            }
        }
        best.map(|(_, j)| j)
    }

    /// One synchronous step against the snapshot `ens`. Draws for particle
    /// `i` at step `step` come from `RngStream(seed, i)`, so the result does
    /// not depend on the number of worker threads.
    pub fn step(&self, ens: &ParticleEnsemble, step: usize, seed: u64) -> Result<ParticleEnsemble> {
        let p = &self.params;
        let g = &self.grid;
        let bins = BinIndex::build(&ens.x, g);
        let updates: Vec<(f64, f64)> = (0..ens.len())
            .into_par_iter()
            .with_min_len(1024)
            .map(|i| {
                let mut rng = RngStream::new(seed, i as u64).rng_at(step as u64);
                let (x, s) = (ens.x[i], ens.s[i]);
                let flow = self.capacity.at(x) * self.closures.speed.value(s);
                let mut s_new = s;

                let theta = rng.random::<f64>() < p.dt;
                let xi =
                    self.mode == RelaxationMode::Slow && rng.random::<f64>() < p.epsilon * p.dt;
                if theta && p.gamma > 0.0 {
                    let u = rng.random::<f64>();
                    if let Some(j) = self.partner(ens, &bins, i, u) {
                        let lead = self.capacity.at(ens.x[j]) * self.closures.speed.value(ens.s[j]);
                        s_new += p.gamma * (lead - flow);
                    }
                }
                if xi {
                    let local = ens.weight * bins.count(g.cell_of(x)) as f64 / g.dx;
                    s_new += p.a * (self.closures.headway.value(local) - s);
                }
                if !(s_new >= 0.0) {
                    return Err(TrafficError::InvariantViolation {
                        step,
                        index: i,
                        what: format!("headway became {s_new}"),
                    });
                }
                Ok((g.wrap(x + flow * p.dt), s_new))
            })
            .collect::<Result<_>>()?;
        let (x, s) = updates.into_iter().unzip();
        Ok(ParticleEnsemble {
            x,
            s,
            weight: ens.weight,
        })
    }

    /// Advances `n_steps` and returns the ensembles after the steps listed in
    /// `record` (step 0 is the initial ensemble).
    pub fn run(
        &self,
        initial: &ParticleEnsemble,
        n_steps: usize,
        record: &[usize],
        seed: u64,
    ) -> Result<Vec<(usize, ParticleEnsemble)>> {
        let mut out = Vec::new();
        if record.contains(&0) {
            out.push((0, initial.clone()));
        }
        let mut ens = initial.clone();
        for k in 1..=n_steps {
            ens = self.step(&ens, k, seed)?;
            if record.contains(&k) {
                out.push((k, ens.clone()));
            }
        }
        Ok(out)
    }
}
