//! Brute-force cross-checks. Everything on the oracle side is written out by
//! hand here and shares no code with the library.

use metastable_core::{
    build_grid_kernel, spectral_gap, threshold_conductance, DiscreteKernel, Grid, GridOptions,
    Integrator, IntervalUnion, RandomStream, RwmKernel, Target,
};

fn mixture_density(x: f64, s: f64) -> f64 {
    let c = 1.0 / (s * (2.0 * std::f64::consts::PI).sqrt());
    0.5 * c * ((-0.5 * ((x + 1.0) / s).powi(2)).exp() + (-0.5 * ((x - 1.0) / s).powi(2)).exp())
}

#[test]
fn first_moment_of_left_half_matches_trapezoid() {
    let s = 0.3;
    let target = Target::mixture(s).unwrap();
    let got = Integrator::default()
        .integrate_union(
            |x| x * target.density(x),
            &IntervalUnion::below(0.0),
            target.window(12.0),
            &target.breakpoints(),
        )
        .unwrap()
        .value;

    let n = 10_000_000usize;
    let (a, b) = (-4.0, 0.0);
    let h = (b - a) / (n - 1) as f64;
    let mut sum = 0.0;
    for k in 0..n {
        let x = a + h * k as f64;
        let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
        sum += w * x * mixture_density(x, s);
    }
    let oracle = sum * h;
    assert!((got - oracle).abs() < 1e-8, "{got} vs {oracle}");
}

/// All eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

fn random_birth_death(n: usize, seed: u64) -> DiscreteKernel {
    let mut rng = RandomStream::from_seed(seed);
    let up: Vec<f64> = (0..n)
        .map(|i| {
            if i + 1 < n {
                0.05 + 0.4 * rng.uniform()
            } else {
                0.0
            }
        })
        .collect();
    let down: Vec<f64> = (0..n)
        .map(|i| {
            if i > 0 {
                0.05 + 0.4 * rng.uniform()
            } else {
                0.0
            }
        })
        .collect();
    let mut pi = vec![1.0; n];
    for i in 1..n {
        pi[i] = pi[i - 1] * up[i - 1] / down[i];
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= total);
    let rows = (0..n)
        .map(|i| {
            let mut row = vec![0.0; n];
            if i + 1 < n {
                row[i + 1] = up[i];
            }
            if i > 0 {
                row[i - 1] = down[i];
            }
            row[i] = 1.0 - up[i] - down[i];
            row
        })
        .collect();
    DiscreteKernel::from_rows(rows, pi).unwrap()
}

#[test]
fn gap_matches_dense_eigensolve() {
    let n = 50;
    for seed in [3, 17, 2024] {
        let dk = random_birth_death(n, seed);
        let pi = dk.stationary();
        let sym: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        (pi[i] / pi[j]).sqrt() * dk.get(i, j) * 0.5
                            + (pi[j] / pi[i]).sqrt() * dk.get(j, i) * 0.5
                    })
                    .collect()
            })
            .collect();
        let eig = jacobi_eigenvalues(sym);
        assert!((eig[n - 1] - 1.0).abs() < 1e-12);
        let oracle = 1.0 - eig[n - 2].abs().max(eig[0].abs());
        let got = spectral_gap(&dk).unwrap();
        assert!(
            (got.gap - oracle).abs() <= 1e-10,
            "seed {seed}: {} vs {oracle}",
            got.gap
        );
    }
}

fn brute_force_conductance(dk: &DiscreteKernel) -> f64 {
    let n = dk.n();
    let pi = dk.stationary();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << n) - 1 {
        let inside = |i: usize| mask >> i & 1 == 1;
        let mass: f64 = (0..n).filter(|&i| inside(i)).map(|i| pi[i]).sum();
        if mass <= 0.0 || mass > 0.5 + 1e-12 {
            continue;
        }
        let mut flow = 0.0;
        for i in (0..n).filter(|&i| inside(i)) {
            for j in (0..n).filter(|&j| !inside(j)) {
                flow += pi[i] * dk.get(i, j);
            }
        }
        best = best.min(flow / mass);
    }
    best
}

#[test]
fn threshold_cut_is_the_exhaustive_minimum() {
    for (s, n) in [(0.5, 8), (0.5, 14), (0.35, 12), (0.3, 14)] {
        let kernel = RwmKernel::mixture(s).unwrap();
        let r = 1.0 + 12.0 * s;
        let dk = build_grid_kernel(
            &kernel,
            &Grid::new(-r, r, n).unwrap(),
            &GridOptions::default(),
        )
        .unwrap();
        let cut = threshold_conductance(&dk).unwrap();
        let oracle = brute_force_conductance(&dk);
        assert!(
            (cut.phi - oracle).abs() <= 1e-12 * oracle,
            "sigma {s} n {n}: {} vs {oracle}",
            cut.phi
        );
    }
}
