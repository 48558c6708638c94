//! Target densities: the symmetric two-mode Gaussian mixture and its
//! restrictions to interval unions.
//!
//! Everything is evaluated in log space. At `sigma <= 0.15` the mixture
//! density between the modes drops below `1e-300`, so density ratios are
//! always formed as `exp(log f(y) - log f(x))`.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::IntervalUnion;
use crate::rng::RandomStream;
use crate::special::{log_add_exp, norm_mass, truncated_normal, LN_SQRT_2PI};

/// Infinite limits are truncated this many `sigma` beyond the outer mode.
/// The mass left outside is below `exp(-60)`.
pub const DEFAULT_TAIL_RADIUS: f64 = 12.0;

/// `pi_sigma = N(-1, sigma^2)/2 + N(1, sigma^2)/2`.
///
/// `sigma` is both the mode width and the random-walk step size; the
/// inverse temperature of the metastability statements is `beta = 1/sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    sigma: f64,
}

impl GaussianMixture {
    pub const CENTERS: [f64; 2] = [-1.0, 1.0];
    pub const WEIGHTS: [f64; 2] = [0.5, 0.5];

    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.sigma
    }

    pub fn log_density(&self, x: f64) -> f64 {
        let s2 = 2.0 * self.sigma * self.sigma;
        let a = -(x + 1.0).powi(2) / s2;
        let b = -(x - 1.0).powi(2) / s2;
        log_add_exp(a, b) - LN_2 - self.sigma.ln() - LN_SQRT_2PI
    }

    /// Exact mass via normal CDF differences.
    pub fn interval_mass(&self, set: &IntervalUnion) -> f64 {
        let mut total = 0.0;
        for piece in set.intervals() {
            for (c, w) in Self::CENTERS.iter().zip(Self::WEIGHTS) {
                total += w * norm_mass((piece.lo - c) / self.sigma, (piece.hi - c) / self.sigma);
            }
        }
        total.clamp(0.0, 1.0)
    }

    pub fn window(&self, radius: f64) -> (f64, f64) {
        (-1.0 - radius * self.sigma, 1.0 + radius * self.sigma)
    }

    pub fn sample(&self, rng: &mut RandomStream) -> f64 {
        let center = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
        center + self.sigma * rng.normal()
    }

    /// Sample from the mixture conditioned on `set`: choose a (component,
    /// piece) pair by mass, then invert the truncated normal.
    fn sample_in(&self, set: &IntervalUnion, total: f64, rng: &mut RandomStream) -> f64 {
        let mut pick = rng.uniform() * total;
        let u = rng.uniform_open();
        let mut last = None;
        for piece in set.intervals() {
            for (c, w) in Self::CENTERS.iter().zip(Self::WEIGHTS) {
                let (a, b) = ((piece.lo - c) / self.sigma, (piece.hi - c) / self.sigma);
                let m = w * norm_mass(a, b);
                if m <= 0.0 {
                    continue;
                }
                last = Some((a, b, *c));
                if pick < m {
                    return c + self.sigma * truncated_normal(a, b, u);
                }
                pick -= m;
            }
        }
        // rounding pushed `pick` past the last piece
        let (a, b, c) = last.expect("set has positive mass");
        c + self.sigma * truncated_normal(a, b, u)
    }
}

/// `pi|_S(A) = pi(S ∩ A) / pi(S)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictedTarget {
    base: GaussianMixture,
    support: IntervalUnion,
    normalization: f64,
}

impl RestrictedTarget {
    pub fn new(base: GaussianMixture, support: IntervalUnion) -> Result<Self> {
        let normalization = base.interval_mass(&support);
        if !(normalization > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "support {support} has no mass under the base target"
            )));
        }
        Ok(Self {
            base,
            support,
            normalization,
        })
    }

    pub fn base(&self) -> &GaussianMixture {
        &self.base
    }

    pub fn support(&self) -> &IntervalUnion {
        &self.support
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }
}

/// A one-dimensional normalized target density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Target {
    Mixture(GaussianMixture),
    Restricted(RestrictedTarget),
}

impl Target {
    pub fn mixture(sigma: f64) -> Result<Self> {
        GaussianMixture::new(sigma).map(Target::Mixture)
    }

    /// Restriction of `self` to `support`. Restricting a restriction
    /// intersects the supports.
    pub fn restrict(&self, support: &IntervalUnion) -> Result<Self> {
        let (base, support) = match self {
            Target::Mixture(m) => (*m, support.clone()),
            Target::Restricted(r) => (r.base, r.support.intersect(support)),
        };
        RestrictedTarget::new(base, support).map(Target::Restricted)
    }

    pub fn base(&self) -> &GaussianMixture {
        match self {
            Target::Mixture(m) => m,
            Target::Restricted(r) => &r.base,
        }
    }

    /// Scale of the base mixture.
    pub fn sigma(&self) -> f64 {
        self.base().sigma()
    }

    pub fn support(&self) -> IntervalUnion {
        match self {
            Target::Mixture(_) => IntervalUnion::full(),
            Target::Restricted(r) => r.support.clone(),
        }
    }

    /// `log f(x)`; `-inf` outside the support of a restriction.
    pub fn log_density(&self, x: f64) -> f64 {
        match self {
            Target::Mixture(m) => m.log_density(x),
            Target::Restricted(r) => {
                if r.support.contains(x) {
                    r.base.log_density(x) - r.normalization.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        self.log_density(x).exp()
    }

    /// Mass of `set`, in `[0, 1]`.
    pub fn interval_mass(&self, set: &IntervalUnion) -> f64 {
        match self {
            Target::Mixture(m) => m.interval_mass(set),
            Target::Restricted(r) => {
                (r.base.interval_mass(&set.intersect(&r.support)) / r.normalization).clamp(0.0, 1.0)
            }
        }
    }

    /// Finite window holding all but a negligible tail of the mass.
    pub fn window(&self, radius: f64) -> (f64, f64) {
        let (lo, hi) = self.base().window(radius);
        match self {
            Target::Mixture(_) => (lo, hi),
            Target::Restricted(r) => (
                r.support.inf().map_or(lo, |a| a.max(lo)),
                r.support.sup().map_or(hi, |b| b.min(hi)),
            ),
        }
    }

    /// Points where the density or its derivatives change character.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = vec![-1.0, 0.0, 1.0];
        if let Target::Restricted(r) = self {
            for piece in r.support.intervals() {
                out.extend([piece.lo, piece.hi].into_iter().filter(|x| x.is_finite()));
            }
        }
        out
    }

    /// Exact draw from the target.
    pub fn sample_exact(&self, rng: &mut RandomStream) -> Result<f64> {
        match self {
            Target::Mixture(m) => Ok(m.sample(rng)),
            Target::Restricted(r) => Ok(r.base.sample_in(&r.support, r.normalization, rng)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::Integrator;
    use crate::special::norm_cdf;
    use proptest::prelude::*;

    fn mixture(s: f64) -> Target {
        Target::mixture(s).unwrap()
    }

    #[test]
    fn midpoint_log_density() {
        let v = mixture(1.0).log_density(0.0);
        let expected = ((-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt()).ln();
        assert!((v - expected).abs() < 1e-12);
        assert!((v + 1.418_939).abs() < 1e-6);
    }

    #[test]
    fn log_density_at_mode() {
        let s = 0.5;
        let phi =
            |z: f64| (-z * z / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
        let expected = (0.5 * phi(2.0) + 0.5 * phi(0.0)).ln();
        assert!((mixture(s).log_density(1.0) - expected).abs() < 1e-12);
    }

    #[test]
    fn restricted_density_vanishes_outside() {
        let r = mixture(1.0).restrict(&IntervalUnion::below(0.0)).unwrap();
        assert_eq!(r.log_density(0.5), f64::NEG_INFINITY);
        // inside: doubled
        let t = mixture(1.0);
        assert!((r.log_density(-0.5) - t.log_density(-0.5) - LN_2).abs() < 1e-12);
    }

    #[test]
    fn masses_in_closed_form() {
        for s in [0.1, 0.3, 1.0, 2.0] {
            assert!((mixture(s).interval_mass(&IntervalUnion::below(0.0)) - 0.5).abs() < 1e-15);
            assert!((mixture(s).interval_mass(&IntervalUnion::full()) - 1.0).abs() < 1e-15);
        }
        let m = mixture(1.0).interval_mass(&IntervalUnion::below(-1.0));
        assert!((m - (0.25 + 0.5 * norm_cdf(-2.0))).abs() < 1e-15);
        assert!((m - 0.261_375).abs() < 1e-6);
    }

    #[test]
    fn degenerate_interval_has_no_mass() {
        let u: IntervalUnion = "[1, 1)".parse().unwrap();
        assert_eq!(mixture(0.3).interval_mass(&u), 0.0);
    }

    #[test]
    fn restricted_mass_normalizes() {
        let r = mixture(0.3).restrict(&IntervalUnion::below(0.0)).unwrap();
        assert!((r.interval_mass(&IntervalUnion::full()) - 1.0).abs() < 1e-15);
        assert!((r.interval_mass(&IntervalUnion::below(-1.0)) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn closed_form_mass_matches_quadrature() {
        let t = mixture(0.3);
        let u: IntervalUnion = "(-2, -0.7) U [0.2, 1.5]".parse().unwrap();
        let q = Integrator::default()
            .integrate_union(
                |x| t.density(x),
                &u,
                t.window(DEFAULT_TAIL_RADIUS),
                &t.breakpoints(),
            )
            .unwrap();
        assert!((q.value - t.interval_mass(&u)).abs() < 1e-10);
    }

    #[test]
    fn sampler_matches_mass() {
        // 4-sigma binomial budget
        let t = mixture(0.2);
        let mut rng = RandomStream::from_seed(11);
        let n = 100_000;
        let sets: Vec<IntervalUnion> = ["(-inf, 0)", "(-1.1, -0.8)", "[0.9, 1.3] U (-0.5, -0.2)"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let draws: Vec<f64> = (0..n).map(|_| t.sample_exact(&mut rng).unwrap()).collect();
        for set in &sets {
            let p = t.interval_mass(set);
            let freq = draws.iter().filter(|&&x| set.contains(x)).count() as f64 / n as f64;
            assert!(
                (freq - p).abs() <= 4.0 * (p * (1.0 - p) / n as f64).sqrt(),
                "{set}: {freq} vs {p}"
            );
        }
        let left = draws.iter().filter(|&&x| x < 0.0).count() as f64 / n as f64;
        assert!((left - 0.5).abs() <= 3.0 * 0.5 / (n as f64).sqrt());
    }

    #[test]
    fn restricted_sampler_respects_support() {
        let support: IntervalUnion = "(-inf, 0)".parse().unwrap();
        let r = mixture(0.4).restrict(&support).unwrap();
        let mut rng = RandomStream::from_seed(3);
        for _ in 0..20_000 {
            assert!(r.sample_exact(&mut rng).unwrap() < 0.0);
        }
        // a far-tail window still samples inside
        let tail: IntervalUnion = "[3, 3.5]".parse().unwrap();
        let r = mixture(0.2).restrict(&tail).unwrap();
        for _ in 0..1000 {
            let x = r.sample_exact(&mut rng).unwrap();
            assert!(tail.contains(x));
        }
    }

    #[test]
    fn mean_absolute_value_matches_quadrature() {
        let s = 0.1;
        let t = mixture(s);
        // oracle: quadrature of |x| f(x)
        let oracle = Integrator::default()
            .integrate_with_breaks(
                |x: f64| x.abs() * t.density(x),
                -1.0 - 12.0 * s,
                1.0 + 12.0 * s,
                &[-1.0, 0.0, 1.0],
            )
            .unwrap()
            .value;
        let mut rng = RandomStream::from_seed(5);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| t.sample_exact(&mut rng).unwrap().abs())
            .collect();
        let e = crate::estimate::Estimate::mean(&draws);
        assert!(
            (e.value - oracle).abs() < 3.0 * e.stderr,
            "{} vs {oracle}",
            e.value
        );
        assert!((oracle - 1.0).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn mixture_is_symmetric(x in -20.0f64..20.0, s in 0.05f64..2.0) {
            let t = mixture(s);
            prop_assert!((t.log_density(x) - t.log_density(-x)).abs() < 1e-12);
        }

        #[test]
        fn mass_plus_complement_is_one(lo in -3.0f64..3.0, w in 0.0f64..3.0, s in 0.1f64..1.0) {
            let t = mixture(s);
            let u: IntervalUnion = crate::interval::Interval::open(lo, lo + w).into();
            let total = t.interval_mass(&u) + t.interval_mass(&u.complement());
            prop_assert!((total - 1.0).abs() < 1e-10);
        }
    }
}
