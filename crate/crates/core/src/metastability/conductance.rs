use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::Estimate;
use crate::interval::{Interval, IntervalUnion};
use crate::kernel::{replicate, MarkovKernel, RwmKernel};
use crate::quadrature::Integrator;
use crate::rng::StreamId;
use crate::special::LN_SQRT_2PI;
use crate::target::DEFAULT_TAIL_RADIUS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Quadrature,
    MonteCarlo,
    Grid,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "monte_carlo",
            Method::Grid => "grid",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConductanceValue {
    pub phi: f64,
    pub method: Method,
    pub stderr: f64,
    pub set: IntervalUnion,
}

/// Probability that one step from `x` is an accepted move into `set`:
/// `∫_set phi_sigma(y - x) min(1, f(y)/f(x)) dy`, over `y` within
/// `DEFAULT_TAIL_RADIUS` step sizes of `x`.
pub(crate) fn move_probability<K: MarkovKernel + ?Sized>(
    kernel: &K,
    x: f64,
    set: &IntervalUnion,
    integrator: &Integrator,
) -> Result<f64> {
    let log_fx = kernel.log_target(x);
    if log_fx == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let s = kernel.step_sigma();
    let r = DEFAULT_TAIL_RADIUS * s;
    let mut breaks = kernel.stationary().breakpoints();
    breaks.extend([x, -x]);
    let log_norm = s.ln() + LN_SQRT_2PI;
    let v = integrator.integrate_union(
        |y| {
            let d = (y - x) / s;
            (-0.5 * d * d - log_norm + (kernel.log_target(y) - log_fx).min(0.0)).exp()
        },
        set,
        (x - r, x + r),
        &breaks,
    )?;
    Ok(v.value)
}

/// `f(x) P(x, set)` for the accepted-move part of the kernel.
pub(crate) fn accepted_flux<K: MarkovKernel + ?Sized>(
    kernel: &K,
    x: f64,
    set: &IntervalUnion,
    integrator: &Integrator,
) -> Result<f64> {
    Ok(kernel.stationary().density(x) * move_probability(kernel, x, set, integrator)?)
}

/// `Phi(S) = (1/pi(S)) ∫_S ∫_{S^c} phi_sigma(y - x) min(f(x), f(y)) dy dx`
/// by nested adaptive quadrature with relative tolerance `tol`.
pub fn conductance_quadrature(
    kernel: &RwmKernel,
    set: &IntervalUnion,
    tol: f64,
) -> Result<ConductanceValue> {
    let target = kernel.target();
    let mass = target.interval_mass(set);
    if !(mass > 0.0 && mass < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "conductance needs 0 < pi(S) < 1, got {mass} for {set}"
        )));
    }
    let outside = set.complement();
    let inner = Integrator::new(0.0, 0.1 * tol);
    let outer = Integrator::new(0.0, tol);
    // no flux starts further than the tail radius from the complement
    let reach = DEFAULT_TAIL_RADIUS * kernel.step_sigma();
    let window = target.window(DEFAULT_TAIL_RADIUS);
    let near = IntervalUnion::from_intervals(
        outside
            .intervals()
            .iter()
            .map(|piece| Interval::closed(piece.lo - reach, piece.hi + reach)),
    );
    let domain = set.intersect(&near);
    let mut breaks = target.breakpoints();
    for piece in outside.intervals() {
        breaks.extend([piece.lo, piece.hi, -piece.lo, -piece.hi]);
    }
    breaks.retain(|b| b.is_finite());
    let failure = RefCell::new(None);
    let flux = outer.integrate_union(
        |x| match accepted_flux(kernel, x, &outside, &inner) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        &domain,
        window,
        &breaks,
    );
    // the closure cannot return errors, so inner failures surface here
    let flux = flux?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let phi = flux.value / mass;
    if !(phi > 0.0 && phi.is_finite()) {
        return Err(Error::ConductanceUnderflow { value: phi });
    }
    Ok(ConductanceValue {
        phi,
        method: Method::Quadrature,
        stderr: 0.0,
        set: set.clone(),
    })
}

/// Draw `X_0 ~ pi`, keep it if it lies in `S`, take one step and count exits.
/// Sample `i` uses stream `stream.with_replica(i)`.
pub fn conductance_mc(
    kernel: &RwmKernel,
    set: &IntervalUnion,
    samples: u64,
    stream: StreamId,
) -> Result<ConductanceValue> {
    let target = kernel.target();
    let outcomes = replicate(stream, samples, |_, rng| -> Result<Option<bool>> {
        let x0 = target.sample_exact(rng)?;
        if !set.contains(x0) {
            return Ok(None);
        }
        Ok(Some(!set.contains(kernel.step(x0, rng))))
    });
    let mut retained = 0u64;
    let mut exits = 0u64;
    for o in outcomes {
        if let Some(exited) = o? {
            retained += 1;
            exits += exited as u64;
        }
    }
    if retained == 0 {
        return Err(Error::NoSamplesRetained);
    }
    let e = Estimate::proportion(exits, retained);
    Ok(ConductanceValue {
        phi: e.value,
        method: Method::MonteCarlo,
        stderr: e.stderr,
        set: set.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(s: f64) -> RwmKernel {
        RwmKernel::mixture(s).unwrap()
    }

    #[test]
    fn swapping_the_halves_gives_the_same_value() {
        let kernel = k(0.4);
        let left = conductance_quadrature(&kernel, &IntervalUnion::below(0.0), 1e-11).unwrap();
        let right = conductance_quadrature(&kernel, &IntervalUnion::at_least(0.0), 1e-11).unwrap();
        assert!(
            (left.phi - right.phi).abs() <= 1e-10 * left.phi,
            "{} {}",
            left.phi,
            right.phi
        );
    }

    #[test]
    fn mass_must_be_strictly_between_zero_and_one() {
        let kernel = k(0.3);
        assert!(conductance_quadrature(&kernel, &IntervalUnion::full(), 1e-8).is_err());
        assert!(conductance_quadrature(&kernel, &IntervalUnion::empty(), 1e-8).is_err());
    }

    #[test]
    fn empty_retention_is_an_error() {
        let kernel = k(0.3);
        let far: IntervalUnion = "[100, 101]".parse().unwrap();
        let r = conductance_mc(&kernel, &far, 100, StreamId::new(1, 0, 0, 0));
        assert_eq!(r, Err(Error::NoSamplesRetained));
    }

    #[test]
    fn almost_everything_has_nothing_to_exit_to() {
        let kernel = k(0.3);
        let wide: IntervalUnion = "[-10, 10]".parse().unwrap();
        let r = conductance_mc(&kernel, &wide, 2000, StreamId::new(3, 0, 0, 0)).unwrap();
        assert_eq!(r.phi, 0.0);
        assert_eq!(r.stderr, 0.0);
    }
}
