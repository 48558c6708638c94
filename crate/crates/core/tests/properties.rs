use metastable_core::metastability::{drift_violation, DriftProblem, DEFAULT_ALPHAS};
use metastable_core::{
    build_grid_kernel, conductance_mc, conductance_quadrature, drift_check, hitting_time,
    replicate, spectral_gap, threshold_conductance, DiscreteKernel, Grid, GridOptions,
    IntervalUnion, RwmKernel, StreamId,
};

fn mixture_grid(s: f64, lo: f64, hi: f64, n: usize) -> DiscreteKernel {
    let kernel = RwmKernel::mixture(s).unwrap();
    build_grid_kernel(
        &kernel,
        &Grid::new(lo, hi, n).unwrap(),
        &GridOptions::default(),
    )
    .unwrap()
}

#[test]
fn grid_chain_keeps_the_cell_masses() {
    let s = 0.3;
    let kernel = RwmKernel::mixture(s).unwrap();
    let grid = Grid::new(-1.0 - 12.0 * s, 1.0 + 12.0 * s, 400).unwrap();
    let dk = build_grid_kernel(&kernel, &grid, &GridOptions::default()).unwrap();
    let masses: Vec<f64> = (0..grid.n())
        .map(|i| kernel.target().interval_mass(&grid.cell(i)))
        .collect();
    let moved = dk.left_multiply(&masses);
    let l1: f64 = moved.iter().zip(&masses).map(|(a, b)| (a - b).abs()).sum();
    assert!(l1 < 1e-6, "{l1}");
}

#[test]
fn detailed_balance_on_narrow_window() {
    // [-3, 3] drops ~1e-11 of mass at sigma 0.3, above the default coverage bound
    let kernel = RwmKernel::mixture(0.3).unwrap();
    let opts = GridOptions {
        max_uncovered_mass: 1e-10,
        ..GridOptions::default()
    };
    let dk = build_grid_kernel(&kernel, &Grid::new(-3.0, 3.0, 400).unwrap(), &opts).unwrap();
    assert!(dk.detailed_balance_residual() < 1e-8);
}

#[test]
fn refining_the_grid_barely_moves_the_gap() {
    for s in [0.5, 0.3, 0.2] {
        let r = 1.0 + 12.0 * s;
        let coarse = spectral_gap(&mixture_grid(s, -r, r, 400)).unwrap().gap;
        let fine = spectral_gap(&mixture_grid(s, -r, r, 800)).unwrap().gap;
        assert!(
            (coarse - fine).abs() < 0.05 * fine,
            "sigma {s}: {coarse} vs {fine}"
        );
    }
}

#[test]
fn relabelling_states_keeps_the_gap() {
    let dk = mixture_grid(0.5, -7.0, 7.0, 400);
    let a = spectral_gap(&dk).unwrap().gap;
    let b = spectral_gap(&dk.reversed()).unwrap().gap;
    assert!((a - b).abs() < 1e-12, "{a} vs {b}");
}

#[test]
fn second_eigenvector_is_orthogonal_to_the_top() {
    let dk = mixture_grid(0.4, -5.8, 5.8, 600);
    let spec = spectral_gap(&dk).unwrap();
    let pi = dk.stationary();
    let h = &spec.eigenvector2;
    let dot: f64 = pi.iter().zip(h).map(|(p, v)| p * v).sum();
    let norm: f64 = pi.iter().zip(h).map(|(p, v)| p * v * v).sum::<f64>().sqrt();
    assert!((dot / norm).abs() < 1e-8, "{}", dot / norm);
    // and it is antisymmetric for the symmetric mixture
    let n = h.len();
    assert!(h[0] * h[n - 1] < 0.0);
}

#[test]
fn grid_cut_tracks_the_continuous_conductance() {
    let s = 0.3;
    let r = 1.0 + 12.0 * s;
    let dk = mixture_grid(s, -r, r, 1548);
    let cut = threshold_conductance(&dk).unwrap();
    let phi = conductance_quadrature(
        &RwmKernel::mixture(s).unwrap(),
        &IntervalUnion::below(0.0),
        1e-9,
    )
    .unwrap()
    .phi;
    assert!((cut.phi - phi).abs() < 0.02 * phi, "{} vs {phi}", cut.phi);
}

#[test]
fn conductance_grows_with_sigma() {
    let left = IntervalUnion::below(0.0);
    let values: Vec<f64> = [0.15, 0.2, 0.25, 0.3, 0.4, 0.5]
        .iter()
        .map(|&s| {
            conductance_quadrature(&RwmKernel::mixture(s).unwrap(), &left, 1e-9)
                .unwrap()
                .phi
        })
        .collect();
    assert!(values.windows(2).all(|w| w[0] < w[1]), "{values:?}");
}

#[test]
fn reflected_sets_have_equal_conductance() {
    let kernel = RwmKernel::mixture(0.4).unwrap();
    for set in ["(-inf, -0.5)", "[-1, 0.3)", "(-inf, -2] U [0.5, 1]"] {
        let u: IntervalUnion = set.parse().unwrap();
        let a = conductance_quadrature(&kernel, &u, 1e-10).unwrap().phi;
        let b = conductance_quadrature(&kernel, &u.reflect(), 1e-10)
            .unwrap()
            .phi;
        assert!((a - b).abs() < 1e-8 * a, "{set}: {a} vs {b}");
    }
}

#[test]
fn monte_carlo_conductance_agrees_over_many_seeds() {
    let kernel = RwmKernel::mixture(0.4).unwrap();
    let left = IntervalUnion::below(0.0);
    let exact = conductance_quadrature(&kernel, &left, 1e-9).unwrap().phi;
    let within = (0..100)
        .filter(|&seed| {
            let mc = conductance_mc(&kernel, &left, 20_000, StreamId::new(seed, 7, 0, 0)).unwrap();
            (mc.phi - exact).abs() <= 3.0 * mc.stderr
        })
        .count();
    assert!(within >= 99, "{within}/100");
}

#[test]
fn drift_certificate_survives_finer_audit() {
    let s = 0.3;
    let kernel = RwmKernel::mixture(s).unwrap();
    let problem = DriftProblem {
        v_scale: 1.0 / s,
        centers: vec![-1.0, 1.0],
        region: "[-4.6, -3]".parse().unwrap(),
        alphas: DEFAULT_ALPHAS.to_vec(),
        x_points: 200,
        c_cap: 100.0,
    };
    let cert = drift_check(&kernel, &problem).unwrap();
    assert!(cert.max_violation <= 0.0);
    let worst = drift_violation(&kernel, &cert, 2000).unwrap();
    assert!(worst <= 1e-6, "{worst}");
}

#[test]
fn hitting_times_scale_like_inverse_conductance() {
    let s = 0.35;
    let kernel = RwmKernel::mixture(s).unwrap();
    let phi = conductance_quadrature(&kernel, &IntervalUnion::below(0.0), 1e-9)
        .unwrap()
        .phi;
    let right = IntervalUnion::at_least(0.0);
    let cap = (100.0 / phi).ceil() as u64;
    let taus = replicate(StreamId::new(11, 3, 0, 0), 200, |_, rng| {
        hitting_time(&kernel, -1.0, &right, cap, rng).unwrap()
    });
    assert!(taus.iter().all(|t| !t.is_censored()));
    let log_mean = taus
        .iter()
        .map(|t| (t.tau.unwrap() as f64).ln())
        .sum::<f64>()
        / taus.len() as f64;
    let ratio = log_mean.exp() * phi;
    assert!((1.0 / 3.0..=3.0).contains(&ratio), "{ratio}");
}
