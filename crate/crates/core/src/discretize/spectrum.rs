//! Second and smallest eigenvalues of a reversible chain.
//!
//! Work with the symmetrization `S = D^{1/2} P D^{-1/2}` (`D = diag(pi)`) on
//! the complement of `u = sqrt(pi)`. Each end of the spectrum gets a shifted
//! power iteration first. If that stalls, which happens when the end of the
//! spectrum is clustered, it is finished by inverse iteration. The shift is
//! moved past the end until a Cholesky factorization succeeds, which
//! certifies that no eigenvalue lies beyond it.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DiscreteKernel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub lambda2: f64,
    pub lambda_min: f64,
    /// `1 - max(|lambda2|, |lambda_min|)`
    pub gap: f64,
    /// `||S v - lambda v||` for the two unit eigenvectors.
    pub residual2: f64,
    pub residual_min: f64,
    pub iterations: usize,
    /// Right eigenvector of `P` for `lambda2`, normalized in `L^2(pi)`.
    /// Zero on states with no stationary mass.
    pub eigenvector2: Vec<f64>,
}

pub const EIGEN_TOLERANCE: f64 = 1e-11;
const POWER_ITERATIONS: usize = 500;
const INVERSE_ITERATIONS: usize = 200;

struct Symmetric {
    n: usize,
    s: Vec<f64>,
    u: Vec<f64>,
}

impl Symmetric {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self
            .s
            .par_chunks(n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect();
        self.project(&mut y);
        y
    }

    fn project(&self, x: &mut [f64]) {
        let c = dot(&self.u, x);
        for (xi, ui) in x.iter_mut().zip(&self.u) {
            *xi -= c * ui;
        }
    }

    /// Rayleigh quotient and residual for a unit vector.
    fn rayleigh(&self, x: &[f64]) -> (f64, f64) {
        let sx = self.apply(x);
        let theta = dot(x, &sx);
        let r = sx
            .iter()
            .zip(x)
            .map(|(a, b)| (a - theta * b).powi(2))
            .sum::<f64>()
            .sqrt();
        (theta, r)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(x: &mut [f64]) -> f64 {
    let norm = dot(x, x).sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
    norm
}

#[derive(Clone, Copy, PartialEq)]
enum End {
    Top,
    Bottom,
}

struct Eigen {
    value: f64,
    residual: f64,
    vector: Vec<f64>,
    iterations: usize,
}

fn start_vector(sym: &Symmetric, end: End) -> Vec<f64> {
    // smooth for the top, alternating for the bottom, plus an irregular part
    let n = sym.n;
    let mut x: Vec<f64> = (0..n)
        .map(|i| {
            let t = (i as f64 + 0.5) / n as f64;
            let base = if end == End::Top {
                t - 0.5
            } else if i % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            base + 1e-3 * ((i as f64 * 0.618_033_988_75).fract() - 0.5)
        })
        .collect();
    sym.project(&mut x);
    normalize(&mut x);
    x
}

fn extreme(sym: &Symmetric, end: End, tol: f64) -> Result<Eigen> {
    let mut x = start_vector(sym, end);
    let mut iterations = 0;
    // Power iteration on I + S (top) or I - S (bottom); both are PSD on u-perp.
    let sign = if end == End::Top { 1.0 } else { -1.0 };
    let (mut theta, mut r) = sym.rayleigh(&x);
    while r > tol && iterations < POWER_ITERATIONS {
        let sx = sym.apply(&x);
        for (xi, si) in x.iter_mut().zip(&sx) {
            *xi += sign * si;
        }
        sym.project(&mut x);
        if normalize(&mut x) == 0.0 {
            break;
        }
        iterations += 1;
        (theta, r) = sym.rayleigh(&x);
    }
    if r <= tol {
        return Ok(Eigen {
            value: theta,
            residual: r,
            vector: x,
            iterations,
        });
    }

    // Shift beyond the end of the spectrum, certified by Cholesky.
    let mut delta = r.max(1e-12);
    let factor = loop {
        let mu = theta + sign * delta;
        if let Some(l) = DMatrix::from_row_slice(sym.n, sym.n, &shifted(sym, mu, end)).cholesky() {
            break l;
        }
        if delta > 4.0 {
            return Err(Error::EigenNotConverged {
                iterations,
                residual: r,
            });
        }
        delta *= 2.0;
    };
    for _ in 0..INVERSE_ITERATIONS {
        x = factor.solve(&DVector::from_vec(x)).data.into();
        sym.project(&mut x);
        normalize(&mut x);
        iterations += 1;
        (theta, r) = sym.rayleigh(&x);
        if r <= tol {
            return Ok(Eigen {
                value: theta,
                residual: r,
                vector: x,
                iterations,
            });
        }
    }
    Err(Error::EigenNotConverged {
        iterations,
        residual: r,
    })
}

/// `mu I - S + 2 u u^T` for the top, `S - mu I` for the bottom. The `u`
/// direction gets eigenvalue `1 + mu` or `1 - mu`, so it never blocks the
/// factorization.
fn shifted(sym: &Symmetric, mu: f64, end: End) -> Vec<f64> {
    let n = sym.n;
    let mut m = vec![0.0; n * n];
    m.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for j in 0..n {
            let s = sym.s[i * n + j];
            row[j] = match end {
                End::Top => -s + 2.0 * sym.u[i] * sym.u[j],
                End::Bottom => s,
            };
        }
        row[i] += if end == End::Top { mu } else { -mu };
    });
    m
}

/// `lambda2`, `lambda_min` and the absolute spectral gap of a reversible chain.
/// States with zero stationary mass are dropped.
pub fn spectral_gap(dk: &DiscreteKernel) -> Result<SpectrumResult> {
    spectral_gap_with_tolerance(dk, EIGEN_TOLERANCE)
}

pub fn spectral_gap_with_tolerance(dk: &DiscreteKernel, tol: f64) -> Result<SpectrumResult> {
    let pi = dk.stationary();
    let active: Vec<usize> = (0..dk.n()).filter(|&i| pi[i] > 0.0).collect();
    let n = active.len();
    if n < 2 {
        return Err(Error::DegenerateStationary);
    }
    let root: Vec<f64> = active.iter().map(|&i| pi[i].sqrt()).collect();
    let mut s = vec![0.0; n * n];
    for (a, &i) in active.iter().enumerate() {
        for (b, &j) in active.iter().enumerate() {
            s[a * n + b] = root[a] / root[b] * dk.get(i, j);
        }
    }
    for a in 0..n {
        for b in (a + 1)..n {
            let m = 0.5 * (s[a * n + b] + s[b * n + a]);
            s[a * n + b] = m;
            s[b * n + a] = m;
        }
    }
    let mut u = root.clone();
    normalize(&mut u);
    let sym = Symmetric { n, s, u };

    let top = extreme(&sym, End::Top, tol)?;
    let bottom = extreme(&sym, End::Bottom, tol)?;
    let mut eigenvector2 = vec![0.0; dk.n()];
    for (a, &i) in active.iter().enumerate() {
        eigenvector2[i] = top.vector[a] / root[a];
    }
    Ok(SpectrumResult {
        lambda2: top.value,
        lambda_min: bottom.value,
        gap: 1.0 - top.value.abs().max(bottom.value.abs()),
        residual2: top.residual,
        residual_min: bottom.residual,
        iterations: top.iterations + bottom.iterations,
        eigenvector2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle_walk(n: usize, lazy: f64) -> DiscreteKernel {
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            rows[i][i] = lazy;
            rows[i][(i + 1) % n] += 0.5 * (1.0 - lazy);
            rows[i][(i + n - 1) % n] += 0.5 * (1.0 - lazy);
        }
        DiscreteKernel::from_rows(rows, vec![1.0 / n as f64; n]).unwrap()
    }

    #[test]
    fn two_state_spectrum() {
        let dk = DiscreteKernel::from_rows(vec![vec![0.7, 0.3], vec![0.3, 0.7]], vec![0.5, 0.5])
            .unwrap();
        // only one non-trivial eigenvalue 1 - 2p
        let r = spectral_gap(&dk).unwrap();
        assert!((r.lambda2 - 0.4).abs() < 1e-12);
        assert!((r.lambda_min - 0.4).abs() < 1e-12);
        assert!((r.gap - 0.6).abs() < 1e-12);
    }

    #[test]
    fn cycle_walk_eigenvalues() {
        // eigenvalues lazy + (1 - lazy) cos(2 pi k / n)
        let n = 12;
        let lazy = 0.1;
        let r = spectral_gap(&cycle_walk(n, lazy)).unwrap();
        let cos = |k: f64| (2.0 * std::f64::consts::PI * k / n as f64).cos();
        assert!((r.lambda2 - (lazy + (1.0 - lazy) * cos(1.0))).abs() < 1e-10);
        assert!((r.lambda_min - (lazy - (1.0 - lazy))).abs() < 1e-10);
        assert!((r.gap - (1.0 - (r.lambda2.abs().max(r.lambda_min.abs())))).abs() < 1e-15);
    }

    #[test]
    fn periodic_chain_has_zero_gap() {
        let r = spectral_gap(&cycle_walk(10, 0.0)).unwrap();
        assert!((r.lambda_min + 1.0).abs() < 1e-10);
        assert!(r.gap.abs() < 1e-10);
    }
}
