//! Standard normal helpers that stay accurate deep in the tails.

use std::f64::consts::{PI, SQRT_2};

use statrs::distribution::{Beta, ContinuousCDF};
use statrs::function::erf::{erfc, erfc_inv};

/// `ln(sqrt(2 pi))`
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln(exp(a) + exp(b))` without overflow; handles `-inf` operands.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Log density of `N(0, s^2)` at `x`.
pub fn log_normal_pdf(x: f64, s: f64) -> f64 {
    -0.5 * (x / s).powi(2) - s.ln() - LN_SQRT_2PI
}

/// Density of `N(0, s^2)` at `x`.
pub fn normal_pdf(x: f64, s: f64) -> f64 {
    (-0.5 * (x / s).powi(2)).exp() / (s * (2.0 * PI).sqrt())
}

/// `P[Z <= z]`
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// `P[Z > z]`
pub fn norm_sf(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// `P[a < Z < b]`, computed on the side of zero that avoids cancellation.
pub fn norm_mass(a: f64, b: f64) -> f64 {
    if !(a < b) {
        return 0.0;
    }
    if a >= 0.0 {
        (norm_sf(a) - norm_sf(b)).max(0.0)
    } else if b <= 0.0 {
        (norm_cdf(b) - norm_cdf(a)).max(0.0)
    } else {
        (1.0 - norm_cdf(a) - norm_sf(b)).max(0.0)
    }
}

/// Inverse of [`norm_sf`].
pub fn norm_isf(p: f64) -> f64 {
    SQRT_2 * erfc_inv(2.0 * p)
}

/// Standard normal truncated to `(a, b)`, sampled by inversion of `u in (0,1)`.
pub fn truncated_normal(a: f64, b: f64, u: f64) -> f64 {
    let z = if a >= 0.0 {
        let (pa, pb) = (norm_sf(a), norm_sf(b));
        norm_isf(pb + u * (pa - pb))
    } else if b <= 0.0 {
        // mirror of the upper-tail case
        let (pa, pb) = (norm_sf(-b), norm_sf(-a));
        -norm_isf(pa + u * (pb - pa))
    } else {
        let (ca, cb) = (norm_cdf(a), norm_cdf(b));
        -norm_isf(ca + u * (cb - ca))
    };
    z.clamp(a, b)
}

/// One-sided 95% Clopper–Pearson upper bound for `k` events in `n` trials.
/// For `k = 0` this is `1 - 0.05^(1/n)`, close to the rule of three `3/n`.
pub fn binomial_upper_95(k: u64, n: u64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    if k >= n {
        return 1.0;
    }
    if k == 0 {
        return 1.0 - 0.05f64.powf(1.0 / n as f64);
    }
    Beta::new(k as f64 + 1.0, (n - k) as f64)
        .map(|b| b.inverse_cdf(0.95))
        .unwrap_or(1.0)
}

/// One-sided 95% Clopper–Pearson lower bound for `k` events in `n` trials.
pub fn binomial_lower_95(k: u64, n: u64) -> f64 {
    if k == 0 || n == 0 {
        return 0.0;
    }
    if k >= n {
        return 0.05f64.powf(1.0 / n as f64);
    }
    Beta::new(k as f64, (n - k + 1) as f64)
        .map(|b| b.inverse_cdf(0.05))
        .unwrap_or(0.0)
}
