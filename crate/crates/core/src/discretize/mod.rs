//! Finite-state approximations of a kernel on a uniform grid.
//!
//! The grid chain lumps the continuous chain over cells: for cells `i != j`
//!
//! ```text
//! F_ij = ∫_{cell i} ∫_{cell j} phi_sigma(y - x) min(f(x), f(y)) dy dx
//! P_ij = F_ij / m_i,      m_i = ∫_{cell i} f
//! ```
//!
//! i.e. the probability that one step from `X ~ pi|_{cell i}` lands in cell
//! `j`. `F` is symmetric, so the chain is exactly reversible with respect to
//! the cell masses, and threshold-cut conductances coincide with the
//! continuous ones on cell-aligned sets. Rejected moves and proposals that
//! leave the grid are absorbed on the diagonal.

mod spectrum;

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalUnion};
use crate::kernel::MarkovKernel;
use crate::quadrature::{Integrator, GAUSS_LEGENDRE_8};
use crate::special::{norm_mass, LN_SQRT_2PI};
use crate::target::DEFAULT_TAIL_RADIUS;

pub use spectrum::{spectral_gap, spectral_gap_with_tolerance, SpectrumResult, EIGEN_TOLERANCE};

/// Uniform grid of `n` cells on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    lo: f64,
    hi: f64,
    n: usize,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid needs finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 2 cells, got {n}"
            )));
        }
        Ok(Self { lo, hi, n })
    }

    /// `[-1 - 12 sigma_max, 1 + 12 sigma_max]` with at least 40 cells per
    /// `sigma` and at least 400 cells. The count is rounded up to even so
    /// that `0` is a cell boundary.
    pub fn default_for(sigma: f64, sigma_max: f64) -> Result<Self> {
        let lo = -1.0 - DEFAULT_TAIL_RADIUS * sigma_max;
        let hi = 1.0 + DEFAULT_TAIL_RADIUS * sigma_max;
        let mut n = ((40.0 * (hi - lo) / sigma).ceil() as usize).max(400);
        n += n % 2;
        Self::new(lo, hi, n)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.n as f64
    }

    pub fn edge(&self, k: usize) -> f64 {
        if k == self.n {
            self.hi
        } else {
            self.lo + k as f64 * self.width()
        }
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.width()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.center(i)).collect()
    }

    /// Cell `i` as the half-open interval `[edge_i, edge_{i+1})`.
    pub fn cell(&self, i: usize) -> IntervalUnion {
        Interval::closed_open(self.edge(i), self.edge(i + 1)).into()
    }
}

/// Row-stochastic matrix with its stationary weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteKernel {
    n: usize,
    matrix: Vec<f64>,
    stationary: Vec<f64>,
    grid: Option<Grid>,
}

/// Default bound on `max |pi_i P_ij - pi_j P_ji|` accepted at construction.
pub const DETAILED_BALANCE_BOUND: f64 = 1e-8;

impl DiscreteKernel {
    /// Validate and wrap an explicit chain (rows of `P` and its stationary vector).
    pub fn from_rows(rows: Vec<Vec<f64>>, stationary: Vec<f64>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) || stationary.len() != n {
            return Err(Error::InvalidKernel(
                "matrix must be square and match the stationary vector".into(),
            ));
        }
        Self::from_parts(rows.concat(), stationary, None, DETAILED_BALANCE_BOUND)
    }

    fn from_parts(
        matrix: Vec<f64>,
        stationary: Vec<f64>,
        grid: Option<Grid>,
        db_bound: f64,
    ) -> Result<Self> {
        let n = stationary.len();
        let dk = Self {
            n,
            matrix,
            stationary,
            grid,
        };
        for i in 0..n {
            let row = dk.row(i);
            if row.iter().any(|&p| !(p >= -1e-15)) {
                return Err(Error::InvalidKernel(format!(
                    "row {i} has a negative or NaN entry"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidKernel(format!("row {i} sums to {sum}")));
            }
        }
        let total: f64 = dk.stationary.iter().sum();
        if (total - 1.0).abs() > 1e-12 || dk.stationary.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidKernel(format!(
                "stationary weights sum to {total}"
            )));
        }
        let residual = dk.detailed_balance_residual();
        if residual > db_bound {
            return Err(Error::InvalidKernel(format!(
                "detailed-balance residual {residual:e} exceeds {db_bound:e}"
            )));
        }
        Ok(dk)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> Option<&Grid> {
        self.grid.as_ref()
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.matrix[i * self.n..(i + 1) * self.n]
    }

    /// Row-major entries.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn detailed_balance_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let r = (self.stationary[i] * self.get(i, j) - self.stationary[j] * self.get(j, i))
                    .abs();
                worst = worst.max(r);
            }
        }
        worst
    }

    /// `pi P`; equals `pi` for a stationary vector.
    pub fn left_multiply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, &vi) in v.iter().enumerate() {
            if vi != 0.0 {
                for (o, p) in out.iter_mut().zip(self.row(i)) {
                    *o += vi * p;
                }
            }
        }
        out
    }

    /// Relabel states `i -> n - 1 - i`.
    pub fn reversed(&self) -> Self {
        let n = self.n;
        let mut matrix = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                matrix[(n - 1 - i) * n + (n - 1 - j)] = self.get(i, j);
            }
        }
        Self {
            n,
            matrix,
            stationary: self.stationary.iter().rev().copied().collect(),
            grid: self.grid,
        }
    }

    /// `P^steps` as a dense row-major matrix, by repeated squaring.
    pub fn power(&self, steps: u64) -> Vec<f64> {
        let n = self.n;
        let mut result: Vec<f64> = (0..n * n)
            .map(|k| if k / n == k % n { 1.0 } else { 0.0 })
            .collect();
        let mut base = self.matrix.clone();
        let mut e = steps;
        while e > 0 {
            if e & 1 == 1 {
                result = matmul(&result, &base, n);
            }
            e >>= 1;
            if e > 0 {
                base = matmul(&base, &base, n);
            }
        }
        result
    }

    /// Dense row-major text: one row per line, space separated.
    pub fn write_dense<W: Write>(&self, mut w: W) -> io::Result<()> {
        for i in 0..self.n {
            let line: Vec<String> = self.row(i).iter().map(|p| format!("{p:.17e}")).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik != 0.0 {
                let brow = &b[k * n..(k + 1) * n];
                for (o, bkj) in row.iter_mut().zip(brow) {
                    *o += aik * bkj;
                }
            }
        }
    });
    out
}

/// Total-variation distance between two probability vectors.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    /// Proposals are truncated this many step sizes from the current state.
    pub tail_radius: f64,
    /// Largest target mass allowed outside the grid.
    pub max_uncovered_mass: f64,
    /// Largest stationary probability flux `m_i P(i -> off grid)` for any row.
    pub max_leakage: f64,
    pub detailed_balance_bound: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            tail_radius: DEFAULT_TAIL_RADIUS,
            max_uncovered_mass: 1e-12,
            max_leakage: 1e-9,
            detailed_balance_bound: DETAILED_BALANCE_BOUND,
        }
    }
}

struct Node {
    x: f64,
    weight: f64,
    log_f: f64,
}

/// Discretize `kernel` on `grid` by cell lumping (see the module docs).
pub fn build_grid_kernel<K: MarkovKernel + ?Sized>(
    kernel: &K,
    grid: &Grid,
    opts: &GridOptions,
) -> Result<DiscreteKernel> {
    let target = kernel.stationary();
    let sigma = kernel.step_sigma();
    let n = grid.n();
    let h = grid.width();

    let masses: Vec<f64> = (0..n)
        .map(|i| target.interval_mass(&grid.cell(i)))
        .collect();
    let covered: f64 = masses.iter().sum();
    if 1.0 - covered > opts.max_uncovered_mass {
        return Err(Error::GridCoverage {
            uncovered: 1.0 - covered,
        });
    }

    // Gauss–Legendre nodes, with panels no wider than sigma/4.
    let panels = ((h / (0.25 * sigma)).ceil() as usize).max(1);
    let panel_width = h / panels as f64;
    let nodes: Vec<Vec<Node>> = (0..n)
        .map(|i| {
            let mut cell = Vec::with_capacity(8 * panels);
            for p in 0..panels {
                let mid = grid.edge(i) + (p as f64 + 0.5) * panel_width;
                for &(t, w) in &GAUSS_LEGENDRE_8 {
                    let x = mid + 0.5 * panel_width * t;
                    cell.push(Node {
                        x,
                        weight: 0.5 * panel_width * w,
                        log_f: target.log_density(x),
                    });
                }
            }
            cell
        })
        .collect();

    // Off-grid leakage. The cheap bound replaces min(f(x), f(y)) with f(x);
    // cells that fail it are integrated properly before giving up.
    let off_grid = target
        .support()
        .difference(&Interval::closed(grid.lo(), grid.hi()).into());
    let integrator = Integrator::new(1e-3 * opts.max_leakage, 1e-6);
    let breaks = target.breakpoints();
    for (i, cell) in nodes.iter().enumerate() {
        let live = || cell.iter().filter(|node| node.log_f > f64::NEG_INFINITY);
        let bound: f64 = live()
            .map(|node| {
                let escape: f64 = off_grid
                    .intervals()
                    .iter()
                    .map(|piece| {
                        norm_mass((piece.lo - node.x) / sigma, (piece.hi - node.x) / sigma)
                    })
                    .sum();
                node.weight * node.log_f.exp() * escape
            })
            .sum();
        if bound <= opts.max_leakage {
            continue;
        }
        let mut leak = 0.0;
        for node in live() {
            let reach = opts.tail_radius * sigma;
            let window = (node.x - reach, node.x + reach);
            let inner = integrator.integrate_union(
                |y| {
                    let d = (y - node.x) / sigma;
                    (node.log_f.min(target.log_density(y)) - 0.5 * d * d - sigma.ln() - LN_SQRT_2PI)
                        .exp()
                },
                &off_grid,
                window,
                &breaks,
            )?;
            leak += node.weight * inner.value;
        }
        if leak > opts.max_leakage {
            return Err(Error::GridLeakage { cell: i, leak });
        }
    }

    let band = ((opts.tail_radius * sigma) / h).ceil() as usize + 1;
    let log_norm = sigma.ln() + LN_SQRT_2PI;
    let inv_two_var = 0.5 / (sigma * sigma);
    let flux_rows: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut out = Vec::new();
            for j in (i + 1)..n.min(i + band + 1) {
                let mut total = 0.0;
                for a in &nodes[i] {
                    if a.log_f == f64::NEG_INFINITY {
                        continue;
                    }
                    for b in &nodes[j] {
                        let m = a.log_f.min(b.log_f);
                        if m == f64::NEG_INFINITY {
                            continue;
                        }
                        let d = b.x - a.x;
                        total += a.weight * b.weight * (m - d * d * inv_two_var - log_norm).exp();
                    }
                }
                if total > 0.0 {
                    out.push((j, total));
                }
            }
            out
        })
        .collect();

    let mut matrix = vec![0.0; n * n];
    for (i, row) in flux_rows.iter().enumerate() {
        for &(j, flux) in row {
            if masses[i] > 0.0 {
                matrix[i * n + j] = flux / masses[i];
            }
            if masses[j] > 0.0 {
                matrix[j * n + i] = flux / masses[j];
            }
        }
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| matrix[i * n + j]).sum();
        if off > 1.0 + 1e-12 {
            return Err(Error::InvalidKernel(format!(
                "row {i} moves {off} of its mass; the grid is too coarse for step {sigma}"
            )));
        }
        matrix[i * n + i] = (1.0 - off).max(0.0);
        // renormalize so the row sums to one in floating point
        let sum: f64 = matrix[i * n..(i + 1) * n].iter().sum();
        matrix[i * n + i] += 1.0 - sum;
    }
    let stationary: Vec<f64> = masses.iter().map(|m| m / covered).collect();
    DiscreteKernel::from_parts(matrix, stationary, Some(*grid), opts.detailed_balance_bound)
}

/// Which side of a cut forms the set `S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutSide {
    /// `S = {0, ..., cut}`
    Lower,
    /// `S = {cut + 1, ..., n - 1}`
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCut {
    pub phi: f64,
    pub cut_index: usize,
    pub side: CutSide,
    pub mass: f64,
}

/// Sets with mass up to `1/2 + MASS_SLACK` take part in the cut search, so
/// the symmetric cut is kept despite rounding in the prefix sums.
const MASS_SLACK: f64 = 1e-12;

/// Minimal conductance over the `2(n-1)` threshold sets with `mu(S) <= 1/2`.
pub fn threshold_conductance(dk: &DiscreteKernel) -> Result<ThresholdCut> {
    let n = dk.n();
    let pi = dk.stationary();
    if pi.iter().any(|&p| p >= 1.0 - 1e-15) {
        return Err(Error::DegenerateStationary);
    }
    let mut best: Option<ThresholdCut> = None;
    let mut flux = 0.0;
    let mut lower_mass = 0.0;
    for c in 0..n - 1 {
        // moving state c from the upper to the lower side
        for i in 0..c {
            flux -= pi[i] * dk.get(i, c);
        }
        for j in (c + 1)..n {
            flux += pi[c] * dk.get(c, j);
        }
        lower_mass += pi[c];
        let upper_mass = (1.0 - lower_mass).max(0.0);
        for (side, mass) in [(CutSide::Lower, lower_mass), (CutSide::Upper, upper_mass)] {
            if mass > 0.0 && mass <= 0.5 + MASS_SLACK {
                let phi = flux.max(0.0) / mass;
                if best.is_none_or(|b| phi < b.phi) {
                    best = Some(ThresholdCut {
                        phi,
                        cut_index: c,
                        side,
                        mass,
                    });
                }
            }
        }
    }
    best.ok_or(Error::DegenerateStationary)
}

/// Conductance `sum_{i in S, j not in S} pi_i P_ij / pi(S)` of an arbitrary state set.
pub fn set_conductance(dk: &DiscreteKernel, in_set: &[bool]) -> f64 {
    let pi = dk.stationary();
    let mass: f64 = (0..dk.n()).filter(|&i| in_set[i]).map(|i| pi[i]).sum();
    let mut flux = 0.0;
    for i in (0..dk.n()).filter(|&i| in_set[i]) {
        for j in (0..dk.n()).filter(|&j| !in_set[j]) {
            flux += pi[i] * dk.get(i, j);
        }
    }
    flux / mass
}

/// Outcome of checking `phi^2/2 <= gap <= 2 phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheegerVerdict {
    pub pass: bool,
    /// `gap - phi^2/2`
    pub lower_margin: f64,
    /// `2 phi - gap`
    pub upper_margin: f64,
}

pub const CHEEGER_SLACK: f64 = 1e-9;

pub fn cheeger_check(gap: f64, phi: f64) -> CheegerVerdict {
    let lower_margin = gap - 0.5 * phi * phi;
    let upper_margin = 2.0 * phi - gap;
    CheegerVerdict {
        pass: lower_margin >= -CHEEGER_SLACK && upper_margin >= -CHEEGER_SLACK,
        lower_margin,
        upper_margin,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{RestrictedKernel, RwmKernel};

    fn two_state(p: f64) -> DiscreteKernel {
        DiscreteKernel::from_rows(vec![vec![1.0 - p, p], vec![p, 1.0 - p]], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn grid_geometry() {
        let g = Grid::new(-3.0, 3.0, 6).unwrap();
        assert_eq!(g.centers(), vec![-2.5, -1.5, -0.5, 0.5, 1.5, 2.5]);
        assert!(Grid::new(1.0, 0.0, 10).is_err());
        assert!(Grid::new(0.0, 1.0, 1).is_err());
        let d = Grid::default_for(0.3, 0.3).unwrap();
        assert_eq!(d.n() % 2, 0);
        assert!(d.width() <= 0.3 / 40.0 + 1e-12);
    }

    #[test]
    fn invalid_rows_rejected() {
        assert!(
            DiscreteKernel::from_rows(vec![vec![0.5, 0.6], vec![0.5, 0.5]], vec![0.5, 0.5])
                .is_err()
        );
        // not reversible w.r.t. the given weights
        assert!(
            DiscreteKernel::from_rows(vec![vec![0.5, 0.5], vec![0.1, 0.9]], vec![0.5, 0.5])
                .is_err()
        );
    }

    #[test]
    fn mixture_grid_is_stochastic_and_reversible() {
        let kernel = RwmKernel::mixture(0.3).unwrap();
        let grid = Grid::new(-4.6, 4.6, 400).unwrap();
        let dk = build_grid_kernel(&kernel, &grid, &GridOptions::default()).unwrap();
        for i in 0..dk.n() {
            let s: f64 = dk.row(i).iter().sum();
            assert!((s - 1.0).abs() <= 1e-12);
        }
        assert!(dk.detailed_balance_residual() < 1e-8);
        // stationary = cell masses, and it is a left fixed point
        let pi_p = dk.left_multiply(dk.stationary());
        let l1: f64 = pi_p
            .iter()
            .zip(dk.stationary())
            .map(|(a, b)| (a - b).abs())
            .sum();
        assert!(l1 < 1e-6, "{l1}");
        let target = kernel.target();
        let mass_l1: f64 = (0..grid.n())
            .map(|i| (target.interval_mass(&grid.cell(i)) - dk.stationary()[i]).abs())
            .sum();
        assert!(mass_l1 < 1e-6);
    }

    #[test]
    fn narrow_grid_reports_leakage() {
        let kernel = RwmKernel::mixture(0.3).unwrap();
        let grid = Grid::new(-1.5, 1.5, 200).unwrap();
        let opts = GridOptions {
            max_uncovered_mass: 1.0,
            ..GridOptions::default()
        };
        assert!(matches!(
            build_grid_kernel(&kernel, &grid, &opts),
            Err(Error::GridLeakage { .. })
        ));
        assert!(matches!(
            build_grid_kernel(&kernel, &grid, &GridOptions::default()),
            Err(Error::GridCoverage { .. })
        ));
    }

    #[test]
    fn restricted_grid_never_moves_past_zero() {
        let s = 0.3;
        let restricted =
            RestrictedKernel::new(RwmKernel::mixture(s).unwrap(), IntervalUnion::below(0.0))
                .unwrap();
        let grid = Grid::new(-1.0 - 12.0 * s, 0.0, 300).unwrap();
        let dk = build_grid_kernel(&restricted, &grid, &GridOptions::default()).unwrap();
        assert!(dk.detailed_balance_residual() < 1e-8);
        // a wider grid has no mass beyond zero to move into
        let wide = Grid::new(-1.0 - 12.0 * s, 1.0, 400).unwrap();
        let dk = build_grid_kernel(&restricted, &wide, &GridOptions::default()).unwrap();
        let first_positive = (0..wide.n()).find(|&i| wide.edge(i) >= 0.0).unwrap();
        for i in 0..first_positive {
            for j in first_positive..wide.n() {
                assert_eq!(dk.get(i, j), 0.0);
            }
        }
    }

    #[test]
    fn restriction_identity_on_grid() {
        // restricted kernel vs. plain RWM against the restricted target
        let s = 0.3;
        let support = IntervalUnion::below(0.0);
        let inner = RwmKernel::mixture(s).unwrap();
        let a = RestrictedKernel::new(inner.clone(), support.clone()).unwrap();
        let b = RwmKernel::new(s, inner.target().restrict(&support).unwrap()).unwrap();
        let grid = Grid::new(-1.0 - 12.0 * s, 0.0, 240).unwrap();
        let da = build_grid_kernel(&a, &grid, &GridOptions::default()).unwrap();
        let db = build_grid_kernel(&b, &grid, &GridOptions::default()).unwrap();
        let worst = da
            .matrix()
            .iter()
            .zip(db.matrix())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn two_state_threshold_conductance() {
        let dk = two_state(0.3);
        let cut = threshold_conductance(&dk).unwrap();
        assert!((cut.phi - 0.3).abs() < 1e-15);
        assert!(cheeger_check(0.6, cut.phi).pass);
    }

    #[test]
    fn all_mass_in_one_cell_is_degenerate() {
        let dk = DiscreteKernel::from_rows(vec![vec![1.0, 0.0], vec![0.5, 0.5]], vec![1.0, 0.0])
            .unwrap();
        assert_eq!(threshold_conductance(&dk), Err(Error::DegenerateStationary));
    }

    #[test]
    fn cheeger_examples() {
        let ok = cheeger_check(0.6, 0.3);
        assert!(ok.pass);
        assert!(ok.upper_margin.abs() < 1e-15);
        let bad = cheeger_check(0.7, 0.3);
        assert!(!bad.pass);
        assert!(bad.upper_margin < 0.0);
        assert!(!cheeger_check(0.01, 0.3).pass);
    }

    #[test]
    fn symmetric_mixture_cuts_at_midpoint() {
        let kernel = RwmKernel::mixture(0.4).unwrap();
        let grid = Grid::new(-5.8, 5.8, 400).unwrap();
        let dk = build_grid_kernel(&kernel, &grid, &GridOptions::default()).unwrap();
        let cut = threshold_conductance(&dk).unwrap();
        assert!(
            (grid.edge(cut.cut_index + 1)).abs() < 1e-12,
            "cut at {}",
            grid.edge(cut.cut_index + 1)
        );
    }

    #[test]
    fn power_and_total_variation() {
        let dk = two_state(0.3);
        let p2 = dk.power(2);
        // (1-2p)^2 = 0.16 contraction of the difference
        assert!((p2[0] - (0.5 + 0.5 * 0.16)).abs() < 1e-15);
        assert!((total_variation(&p2[0..2], dk.stationary()) - 0.08).abs() < 1e-15);
        let p0 = dk.power(0);
        assert_eq!(p0, vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn dense_dump_has_one_line_per_row() {
        let dk = two_state(0.25);
        let mut buf = Vec::new();
        dk.write_dense(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<Vec<f64>> = text
            .lines()
            .map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows, vec![vec![0.75, 0.25], vec![0.25, 0.75]]);
    }
}
