//! Gauss-Legendre quadrature and the orthonormal Legendre basis on `[1, 3]`
//! with respect to the uniform density `1/2`.

use crate::error::{Result, TrafficError};

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    let (mut d0, mut d1) = (0.0, 1.0);
    for k in 1..n {
        let k = k as f64;
        let p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        // derivative of the same recurrence
        let d2 = ((2.0 * k + 1.0) * (p1 + x * d1) - k * d0) / (k + 1.0);
        (p0, p1) = (p1, p2);
        (d0, d1) = (d1, d2);
    }
    (p1, d1)
}

/// `phi_k(y) = sqrt(2k + 1) P_k(y - 2)`.
pub fn legendre_phi(k: usize, y: f64) -> f64 {
    ((2 * k + 1) as f64).sqrt() * legendre(k, y - 2.0).0
}

/// Nodes in `(-1, 1)`, ascending, with weights summing to 2.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes shifted onto `[1, 3]`.
    pub fn mapped_nodes(&self) -> Vec<f64> {
        self.nodes.iter().map(|z| z + 2.0).collect()
    }

    /// `sum_k w_k f(z_k)`, approximating the integral over `[-1, 1]`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w * f(z))
            .sum()
    }

    /// `sum_k (w_k / 2) g(z_k + 2)`, the expectation of `g(Y)` for `Y ~ U[1, 3]`.
    pub fn expectation(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| 0.5 * w * g(z + 2.0))
            .sum()
    }

    /// Coefficients `c_k = E[g(Y) phi_k(Y)]` for `k = 0..=order`.
    pub fn project(&self, order: usize, g: impl Fn(f64) -> f64) -> Vec<f64> {
        let values: Vec<f64> = self.mapped_nodes().iter().map(|&y| g(y)).collect();
        (0..=order)
            .map(|k| {
                self.mapped_nodes()
                    .iter()
                    .zip(&self.weights)
                    .zip(&values)
                    .map(|((&y, &w), &v)| 0.5 * w * v * legendre_phi(k, y))
                    .sum()
            })
            .collect()
    }
}

/// Gauss-Legendre rule with `n` nodes. Each root of `P_n` is bracketed by a
/// sign scan and refined by Newton steps that fall back to bisection when
/// they leave the bracket, starting from `cos(pi (k - 1/4) / (n + 1/2))`.
/// Weights are `2 / ((1 - z^2) P_n'(z)^2)`.
pub fn gauss_legendre(n: usize) -> Result<Quadrature> {
    if n == 0 {
        return Err(TrafficError::Config(
            "quadrature needs at least one node".to_string(),
        ));
    }
    let nf = n as f64;
    let scan = 64 * n;
    let theta = |j: usize| std::f64::consts::PI * j as f64 / scan as f64;
    let mut brackets = Vec::with_capacity(n);
    let mut prev = (theta(0).cos(), legendre(n, 1.0).0);
    for j in 1..=scan {
        let x = theta(j).cos();
        let p = legendre(n, x).0;
        if p == 0.0 || p.signum() != prev.1.signum() {
            brackets.push((x, prev.0));
        }
        if p == 0.0 {
            // step past an exact root so it is not bracketed twice
            prev = (x, -prev.1);
        } else {
            prev = (x, p);
        }
    }
    if brackets.len() != n {
        return Err(TrafficError::SolverFailure {
            cell: n,
            what: "legendre root count",
            value: brackets.len() as f64,
        });
    }

    let mut roots: Vec<f64> = brackets
        .iter()
        .enumerate()
        .map(|(idx, &(lo, hi))| {
            let k = idx as f64 + 1.0;
            let guess = (std::f64::consts::PI * (k - 0.25) / (nf + 0.5)).cos();
            refine_root(n, lo, hi, guess)
        })
        .collect();
    roots.sort_by(f64::total_cmp);
    for k in 0..n / 2 {
        let m = 0.5 * (roots[n - 1 - k] - roots[k]);
        roots[k] = -m;
        roots[n - 1 - k] = m;
    }
    if n % 2 == 1 {
        roots[n / 2] = 0.0;
    }
    let weights = roots
        .iter()
        .map(|&z| {
            let d = legendre(n, z).1;
            2.0 / ((1.0 - z * z) * d * d)
        })
        .collect();
    Ok(Quadrature {
        nodes: roots,
        weights,
    })
}

fn refine_root(n: usize, mut lo: f64, mut hi: f64, guess: f64) -> f64 {
    let p_lo = legendre(n, lo).0;
    if p_lo == 0.0 {
        return lo;
    }
    let mut x = if guess > lo && guess < hi {
        guess
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..200 {
        let (p, d) = legendre(n, x);
        if p == 0.0 {
            return x;
        }
        if p.signum() == p_lo.signum() {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - p / d;
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 1e-15 * x.abs().max(1e-300) || hi - lo <= 1e-15 {
            return next;
        }
        x = next;
    }
    x
}
