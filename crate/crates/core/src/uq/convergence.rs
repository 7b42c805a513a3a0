use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, TrafficError};
use crate::field::{l2_distance, MacroField};
use crate::scenario::Scenario;
use crate::uq::monte_carlo::{run_at, UqModel};
use crate::uq::pce::{PceMacro, PceMicro};
use crate::uq::quadrature::gauss_legendre;
use crate::uq::stats::StatSummary;

/// Which model the chaos expansion is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PceTarget {
    Macro,
    Micro,
}

impl std::str::FromStr for PceTarget {
    type Err = TrafficError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "macro" => Ok(PceTarget::Macro),
            "micro" => Ok(PceTarget::Micro),
            other => Err(TrafficError::Config(format!(
                "unknown chaos target `{other}`, expected macro or micro"
            ))),
        }
    }
}

/// Expected final field of the Galerkin system with `nodes` quadrature
/// nodes and truncation `order`.
pub fn pce_expectation(
    scenario: &Scenario,
    target: PceTarget,
    nodes: usize,
    order: usize,
) -> Result<MacroField> {
    let quad = gauss_legendre(nodes)?;
    let n_steps = scenario.n_steps()?;
    match target {
        PceTarget::Macro => {
            let sys = PceMacro::new(
                scenario.domain,
                scenario.params,
                &scenario.capacity,
                &quad,
                order,
            )?;
            let m = sys.run(&sys.initial_modes(&scenario.initial_field()), n_steps)?;
            Ok(sys.expectation(&m))
        }
        PceTarget::Micro => {
            let sys = PceMicro::new(
                scenario.domain,
                &scenario.params,
                &scenario.capacity,
                &quad,
                order,
            )?;
            let m = sys.run(&sys.initial_modes(&scenario.micro_initial()?), n_steps)?;
            sys.expectation(&m, &scenario.domain)
        }
    }
}

/// Mean of the final field over the quadrature nodes, `sum_j (w_j / 2)
/// u(y_j)`, each node run deterministically. Unlike the order-0 Galerkin
/// truncation this converges to the expectation of the random solution.
pub fn collocation_expectation(
    scenario: &Scenario,
    target: PceTarget,
    nodes: usize,
) -> Result<MacroField> {
    let quad = gauss_legendre(nodes)?;
    let model = match target {
        PceTarget::Macro => UqModel::Macro2Conservative,
        PceTarget::Micro => UqModel::Micro,
    };
    let runs = quad
        .mapped_nodes()
        .par_iter()
        .map(|&y| run_at(scenario, model, y))
        .collect::<Result<Vec<_>>>()?;
    let n_cells = scenario.domain.n_cells();
    let mut rho = vec![0.0; n_cells];
    let mut h = vec![0.0; n_cells];
    for (f, &w) in runs.iter().zip(&quad.weights) {
        for i in 0..n_cells {
            rho[i] += 0.5 * w * f.rho[i];
            h[i] += 0.5 * w * f.h[i];
        }
    }
    Ok(MacroField {
        grid: scenario.domain,
        rho,
        h,
    })
}

/// How the expectation at `n` nodes is formed in a convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Mode 0 of the order-0 stochastic Galerkin system.
    Galerkin,
    Collocation,
}

impl std::str::FromStr for Estimator {
    type Err = TrafficError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "galerkin" => Ok(Estimator::Galerkin),
            "collocation" => Ok(Estimator::Collocation),
            other => Err(TrafficError::Config(format!(
                "unknown estimator `{other}`, expected galerkin or collocation"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub l2_rho: f64,
    pub l2_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    /// Minus the least-squares slope of `log error` against `log n`; `None`
    /// when some error is zero.
    pub rate_rho: Option<f64>,
    pub rate_h: Option<f64>,
}

impl ConvergenceStudy {
    pub fn strictly_decreasing_rho(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].l2_rho < w[0].l2_rho)
    }
}

/// `-slope` of the least-squares line through `(log n, log e)`.
pub fn fitted_rate(ns: &[usize], errors: &[f64]) -> Option<f64> {
    if ns.len() < 2 || errors.iter().any(|&e| !(e > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(-sxy / sxx)
}

/// L2 grid-norm error of the order-0 expectation against the reference mean,
/// for each node count in `n_list`.
pub fn pce_convergence_study(
    scenario: &Scenario,
    target: PceTarget,
    n_list: &[usize],
    reference: &StatSummary,
) -> Result<ConvergenceStudy> {
    convergence_study(scenario, target, Estimator::Galerkin, n_list, reference)
}

pub fn convergence_study(
    scenario: &Scenario,
    target: PceTarget,
    estimator: Estimator,
    n_list: &[usize],
    reference: &StatSummary,
) -> Result<ConvergenceStudy> {
    if reference.x.len() != scenario.domain.n_cells() {
        return Err(TrafficError::Config(
            "reference summary does not match the scenario grid".to_string(),
        ));
    }
    let dx = scenario.domain.dx;
    let rows = n_list
        .iter()
        .map(|&n| {
            let e = match estimator {
                Estimator::Galerkin => pce_expectation(scenario, target, n, 0)?,
                Estimator::Collocation => collocation_expectation(scenario, target, n)?,
            };
            Ok(ConvergenceRow {
                n,
                l2_rho: l2_distance(&e.rho, &reference.rho.mean, dx),
                l2_h: l2_distance(&e.h, &reference.h.mean, dx),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let rho: Vec<f64> = rows.iter().map(|r| r.l2_rho).collect();
    let h: Vec<f64> = rows.iter().map(|r| r.l2_h).collect();
    Ok(ConvergenceStudy {
        rate_rho: fitted_rate(n_list, &rho),
        rate_h: fitted_rate(n_list, &h),
        rows,
    })
}
