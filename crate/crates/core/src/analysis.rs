//! Wave structure of the hyperbolic system in the quasilinear variables
//! `U = (rho, h, c)`:
//!
//! ```text
//! rho_t + (c V(h) rho)_x = 0
//! (rho w)_t + (c V(h) rho w)_x = 0,   w = h + p(rho)
//! c_t = 0
//! ```

use rand::RngExt;
use serde::Serialize;

use crate::closures::{RationalSpeed, SpeedLaw};
use crate::error::{Result, TrafficError};
use crate::params::ModelParams;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateUHC {
    pub rho: f64,
    pub h: f64,
    pub c: f64,
}

impl StateUHC {
    pub fn new(rho: f64, h: f64, c: f64) -> Result<Self> {
        for (what, value) in [("rho", rho), ("h", h), ("c", c)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(TrafficError::Domain { what, value });
            }
        }
        Ok(StateUHC { rho, h, c })
    }

    fn is_admissible(&self) -> bool {
        self.rho > 0.0 && self.h > 0.0 && self.c > 0.0
    }

    fn to_array(self) -> [f64; 3] {
        [self.rho, self.h, self.c]
    }

    fn from_array(a: [f64; 3]) -> Self {
        StateUHC {
            rho: a[0],
            h: a[1],
            c: a[2],
        }
    }

    fn shifted(self, dir: [f64; 3], t: f64) -> Self {
        StateUHC {
            rho: self.rho + t * dir[0],
            h: self.h + t * dir[1],
            c: self.c + t * dir[2],
        }
    }
}

/// Eigenvalues and right eigenvectors, indexed by family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenDecomp {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub r1: [f64; 3],
    pub r2: [f64; 3],
    pub r3: [f64; 3],
    /// `0 < lambda2 < lambda3`.
    pub strict: bool,
}

impl EigenDecomp {
    pub fn lambda(&self, family: Family) -> f64 {
        match family {
            Family::One => self.lambda1,
            Family::Two => self.lambda2,
            Family::Three => self.lambda3,
        }
    }

    pub fn r(&self, family: Family) -> [f64; 3] {
        match family {
            Family::One => self.r1,
            Family::Two => self.r2,
            Family::Three => self.r3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Family {
    One,
    Two,
    Three,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::One, Family::Two, Family::Three];

    pub fn from_index(k: u8) -> Result<Self> {
        match k {
            1 => Ok(Family::One),
            2 => Ok(Family::Two),
            3 => Ok(Family::Three),
            _ => Err(TrafficError::Config(format!(
                "wave family must be 1, 2 or 3, got {k}"
            ))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Family::One => 1,
            Family::Two => 2,
            Family::Three => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub sigma: f64,
    pub state: StateUHC,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RarefactionCurve {
    pub family: Family,
    pub points: Vec<CurvePoint>,
    /// The curve left the region `rho, h, c > 0` and was cut there.
    pub truncated: bool,
}

/// The system for a speed law `V` and interaction parameters `gamma`, `eta`.
#[derive(Debug, Clone, Copy)]
pub struct WaveSystem<V = RationalSpeed> {
    pub speed: V,
    /// Pressure coefficient `(gamma / 2) eta`.
    pub kappa: f64,
}

impl WaveSystem<RationalSpeed> {
    pub fn new(params: &ModelParams) -> Self {
        WaveSystem::with_speed(params, RationalSpeed)
    }
}

impl<V: SpeedLaw> WaveSystem<V> {
    pub fn with_speed(params: &ModelParams, speed: V) -> Self {
        WaveSystem {
            speed,
            kappa: params.pressure_coeff(),
        }
    }

    /// Quasilinear matrix `A(U)` with `U_t + A(U) U_x = 0`.
    pub fn matrix(&self, u: &StateUHC) -> [[f64; 3]; 3] {
        let v = self.speed.value(u.h);
        let dv = self.speed.derivative(u.h);
        let k = self.kappa;
        [
            [u.c * v, u.c * u.rho * dv, v * u.rho],
            [0.0, u.c * (v - k * u.rho * dv), -k * v * u.rho],
            [0.0, 0.0, 0.0],
        ]
    }

    pub fn lambda(&self, family: Family, u: &StateUHC) -> f64 {
        let v = self.speed.value(u.h);
        match family {
            Family::One => 0.0,
            Family::Two => u.c * (v - self.kappa * u.rho * self.speed.derivative(u.h)),
            Family::Three => u.c * v,
        }
    }

    pub fn eigenvector(&self, family: Family, u: &StateUHC) -> [f64; 3] {
        let k = self.kappa;
        match family {
            Family::One => {
                let v = self.speed.value(u.h);
                let dv = self.speed.derivative(u.h);
                [v * u.rho, -k * v * u.rho, u.c * (k * u.rho * dv - v)]
            }
            Family::Two => [1.0, -k, 0.0],
            Family::Three => [1.0, 0.0, 0.0],
        }
    }

    pub fn eigenstructure(&self, u: &StateUHC) -> EigenDecomp {
        let lambda2 = self.lambda(Family::Two, u);
        let lambda3 = self.lambda(Family::Three, u);
        EigenDecomp {
            lambda1: 0.0,
            lambda2,
            lambda3,
            r1: self.eigenvector(Family::One, u),
            r2: self.eigenvector(Family::Two, u),
            r3: self.eigenvector(Family::Three, u),
            strict: lambda2 > 0.0 && lambda2 < lambda3,
        }
    }

    /// `max_k |A r_k - lambda_k r_k|_inf`.
    pub fn eigen_residual(&self, u: &StateUHC) -> f64 {
        let a = self.matrix(u);
        let e = self.eigenstructure(u);
        Family::ALL
            .iter()
            .flat_map(|&f| {
                let r = e.r(f);
                let l = e.lambda(f);
                (0..3).map(move |i| {
                    let ar: f64 = (0..3).map(|j| a[i][j] * r[j]).sum();
                    (ar - l * r[i]).abs()
                })
            })
            .fold(0.0, f64::max)
    }

    /// `V(h) - (gamma/2) eta rho V'(h)`; positive exactly when the system is
    /// strictly hyperbolic (for `gamma > 0`).
    pub fn hyperbolicity_margin(&self, u: &StateUHC) -> f64 {
        self.speed.value(u.h) - self.kappa * u.rho * self.speed.derivative(u.h)
    }

    /// `V'(h) - (rho / 2) V''(h)`, reported as a diagnostic only.
    pub fn theorem_diagnostic(&self, u: &StateUHC) -> f64 {
        self.speed.derivative(u.h) - 0.5 * u.rho * self.speed.second_derivative(u.h)
    }

    /// `grad lambda2 . r2 = -c gamma eta V' + c (gamma eta / 2)^2 rho V''`.
    pub fn genuine_nonlinearity_2(&self, u: &StateUHC) -> f64 {
        let k = self.kappa;
        let dv = self.speed.derivative(u.h);
        let ddv = self.speed.second_derivative(u.h);
        u.c * (-2.0 * k * dv + k * k * u.rho * ddv)
    }

    /// Central difference of `lambda_family` along `r_family` at `u`.
    pub fn directional_derivative_fd(&self, family: Family, u: &StateUHC, step: f64) -> f64 {
        let r = self.eigenvector(family, u);
        let plus = self.lambda(family, &u.shifted(r, step));
        let minus = self.lambda(family, &u.shifted(r, -step));
        (plus - minus) / (2.0 * step)
    }

    /// Rarefaction curve through `left` for `sigma` from 0 to `sigma_max` in
    /// `n_steps` equal steps. Families 2 and 3 are closed form, family 1 is
    /// integrated with the classical Runge-Kutta method.
    pub fn rarefaction_curve(
        &self,
        family: Family,
        left: &StateUHC,
        sigma_max: f64,
        n_steps: usize,
    ) -> Result<RarefactionCurve> {
        if n_steps == 0 {
            return Err(TrafficError::Config(
                "rarefaction curve needs n_steps >= 1".into(),
            ));
        }
        if !sigma_max.is_finite() {
            return Err(TrafficError::Domain {
                what: "sigma_max",
                value: sigma_max,
            });
        }
        let ds = sigma_max / n_steps as f64;
        let mut points = Vec::with_capacity(n_steps + 1);
        let mut truncated = false;
        let mut state = *left;
        for k in 0..=n_steps {
            let sigma = k as f64 * ds;
            if k > 0 {
                state = match family {
                    Family::One => self.rk4_step(&state, ds),
                    Family::Two => StateUHC {
                        rho: left.rho + sigma,
                        h: left.h - self.kappa * sigma,
                        c: left.c,
                    },
                    Family::Three => StateUHC {
                        rho: left.rho + sigma,
                        ..*left
                    },
                };
            }
            if !state.is_admissible() {
                truncated = true;
                break;
            }
            points.push(CurvePoint {
                sigma,
                state,
                lambda: self.lambda(family, &state),
            });
        }
        Ok(RarefactionCurve {
            family,
            points,
            truncated,
        })
    }

    fn rk4_step(&self, u: &StateUHC, ds: f64) -> StateUHC {
        let f = |s: [f64; 3]| self.eigenvector(Family::One, &StateUHC::from_array(s));
        let y = u.to_array();
        let add =
            |a: [f64; 3], b: [f64; 3], t: f64| [a[0] + t * b[0], a[1] + t * b[1], a[2] + t * b[2]];
        let k1 = f(y);
        let k2 = f(add(y, k1, 0.5 * ds));
        let k3 = f(add(y, k2, 0.5 * ds));
        let k4 = f(add(y, k3, ds));
        let mut out = y;
        for i in 0..3 {
            out[i] += ds / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        StateUHC::from_array(out)
    }

    fn conserved_and_flux(&self, u: &StateUHC) -> ([f64; 3], [f64; 3]) {
        let w = u.h + self.kappa * u.rho;
        let q = u.c * self.speed.value(u.h) * u.rho;
        ([u.rho, u.rho * w, u.c], [q, q * w, 0.0])
    }

    /// Signed residuals `lambda (W^- - W) - (F^- - F)` of the three jump
    /// conditions, `W = (rho, rho w, c)`.
    pub fn rh_residual(&self, left: &StateUHC, right: &StateUHC, lambda: f64) -> [f64; 3] {
        let (wl, fl) = self.conserved_and_flux(left);
        let (wr, fr) = self.conserved_and_flux(right);
        [0, 1, 2].map(|i| lambda * (wl[i] - wr[i]) - (fl[i] - fr[i]))
    }

    /// Samples the rarefaction curve, solves the first jump condition for the
    /// speed at each sample and returns the largest remaining residual.
    pub fn shock_equals_rarefaction_check(
        &self,
        family: Family,
        left: &StateUHC,
        sigma_max: f64,
        n_points: usize,
    ) -> Result<f64> {
        let curve = self.rarefaction_curve(family, left, sigma_max, n_points)?;
        let (_, fl) = self.conserved_and_flux(left);
        let mut worst: f64 = 0.0;
        for p in curve.points.iter().skip(1) {
            let drho = left.rho - p.state.rho;
            let (_, fr) = self.conserved_and_flux(&p.state);
            let dflux = fl[0] - fr[0];
            let lambda = if drho == 0.0 { 0.0 } else { dflux / drho };
            let r = self.rh_residual(left, &p.state, lambda);
            worst = worst.max(r[1].abs()).max(r[2].abs());
        }
        Ok(worst)
    }
}

/// States with `rho` in [0.01, 1], `h` in [0.1, 5] and `c` in [0.1, 1], each
/// log-uniform and independent.
pub fn sample_admissible_states(n: usize, seed: u64) -> Vec<StateUHC> {
    let log_uniform = |lo: f64, hi: f64, u: f64| (lo.ln() + u * (hi.ln() - lo.ln())).exp();
    (0..n)
        .map(|i| {
            let mut rng = RngStream::new(seed, i as u64).rng();
            StateUHC {
                rho: log_uniform(0.01, 1.0, rng.random()),
                h: log_uniform(0.1, 5.0, rng.random()),
                c: log_uniform(0.1, 1.0, rng.random()),
            }
        })
        .collect()
}
