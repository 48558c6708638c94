use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::conductance::move_probability;
use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalUnion};
use crate::kernel::{MarkovKernel, RestrictedKernel};
use crate::quadrature::Integrator;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinorizationCertificate {
    pub interval: IntervalUnion,
    pub epsilon: f64,
    pub cells: usize,
    pub grid_points: usize,
}

/// `epsilon = cells * min_{x, J} K(x, J)` over `x_points` starting points in
/// `interval` and the `cells` equal cells `J` of it, so that
/// `K(x, .) >= epsilon * Unif(interval)` on the tested cells. Only accepted
/// moves are counted; the holding mass at `x` is dropped, which keeps this a
/// lower bound.
pub fn minorization_check(
    kernel: &RestrictedKernel,
    interval: Interval,
    cells: usize,
    x_points: usize,
) -> Result<MinorizationCertificate> {
    if !(interval.lo.is_finite() && interval.hi.is_finite()) || interval.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "minorization needs a finite interval, got {interval}"
        )));
    }
    let as_union = IntervalUnion::from(interval);
    if !as_union.is_subset_of(&kernel.support()) {
        return Err(Error::InvalidParameter(format!(
            "{interval} is not inside the support {}",
            kernel.support()
        )));
    }
    if cells == 0 || x_points < 2 {
        return Err(Error::InvalidParameter(
            "need at least one cell and two points".into(),
        ));
    }
    let len = interval.length();
    let xs: Vec<f64> = (0..x_points)
        .map(|k| {
            let x = interval.lo + len * k as f64 / (x_points - 1) as f64;
            if interval.contains(x) {
                x
            } else if k == 0 {
                x + 1e-12 * len
            } else {
                x - 1e-12 * len
            }
        })
        .collect();
    let h = len / cells as f64;
    let integrator = Integrator::new(1e-15, 1e-10);
    let minima: Vec<f64> = xs
        .par_iter()
        .map(|&x| {
            let mut lowest = f64::INFINITY;
            for j in 0..cells {
                let cell =
                    Interval::closed(interval.lo + j as f64 * h, interval.lo + (j + 1) as f64 * h);
                let p =
                    move_probability(kernel, x, &as_union.intersect(&cell.into()), &integrator)?;
                lowest = lowest.min(p);
            }
            Ok(lowest)
        })
        .collect::<Result<_>>()?;
    let epsilon = cells as f64 * minima.into_iter().fold(f64::INFINITY, f64::min);
    if !(epsilon > 0.0) {
        return Err(Error::MinorizationFailed { epsilon });
    }
    Ok(MinorizationCertificate {
        interval: as_union,
        epsilon,
        cells,
        grid_points: x_points,
    })
}

/// `[c - w sigma, c + w sigma]`
pub fn centered_interval(center: f64, half_width_sigmas: f64, sigma: f64) -> Interval {
    Interval::closed(
        center - half_width_sigmas * sigma,
        center + half_width_sigmas * sigma,
    )
}
