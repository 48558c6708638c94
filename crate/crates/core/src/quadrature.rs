//! Adaptive Gauss–Kronrod quadrature.
//!
//! Each panel is evaluated with the 7-point Gauss / 15-point Kronrod pair and
//! the panel error is `|K15 - G7|`. The panel with the largest error is
//! bisected until the summed error meets `max(abs_tol, rel_tol * |value|)`.
//! Refinement is deterministic, so tightening the tolerance only continues
//! the same refinement sequence and never raises the reported error.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::interval::IntervalUnion;

/// Kronrod abscissae on `[0, 1]`; odd indices are the Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// 8-point Gauss–Legendre rule on `[-1, 1]` (nodes, weights).
pub const GAUSS_LEGENDRE_8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

/// Result of a quadrature: value and error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrator {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for Integrator {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 0.0,
            max_subdivisions: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    // Floor at rounding level so panels of exact polynomials still terminate.
    let floor = 50.0 * f64::EPSILON * value.abs();
    Panel {
        a,
        b,
        value,
        error: error.max(floor),
    }
}

impl Integrator {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }

    /// Integrate `f` over `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<Integral> {
        self.integrate_with_breaks(f, a, b, &[])
    }

    /// Integrate over `[a, b]`, starting from panels split at `breaks`
    /// (points outside `(a, b)` are ignored). Kinks and peaks of the
    /// integrand belong in `breaks`.
    pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
        &self,
        f: F,
        a: f64,
        b: f64,
        breaks: &[f64],
    ) -> Result<Integral> {
        if !(a < b) {
            return Ok(Integral {
                value: 0.0,
                error: 0.0,
                subdivisions: 0,
            });
        }
        self.integrate_panels(&f, split_at(a, b, breaks))
    }

    /// Integrate over an interval union, truncated to the finite `window`.
    pub fn integrate_union<F: Fn(f64) -> f64>(
        &self,
        f: F,
        set: &IntervalUnion,
        window: (f64, f64),
        breaks: &[f64],
    ) -> Result<Integral> {
        let clipped = set.clip(window.0, window.1);
        let mut panels = Vec::new();
        for piece in clipped.intervals() {
            if piece.lo < piece.hi {
                panels.extend(split_at(piece.lo, piece.hi, breaks));
            }
        }
        if panels.is_empty() {
            return Ok(Integral {
                value: 0.0,
                error: 0.0,
                subdivisions: 0,
            });
        }
        self.integrate_panels(&f, panels)
    }

    fn integrate_panels<F: Fn(f64) -> f64>(
        &self,
        f: &F,
        initial: Vec<(f64, f64)>,
    ) -> Result<Integral> {
        let mut heap: BinaryHeap<Panel> =
            initial.iter().map(|&(a, b)| kronrod15(f, a, b)).collect();
        let mut subdivisions = 0usize;
        loop {
            let (value, error) = heap
                .iter()
                .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
            if error <= self.target(value) {
                return Ok(Integral {
                    value,
                    error,
                    subdivisions,
                });
            }
            let worst = heap.pop().expect("heap is never empty");
            let mid = 0.5 * (worst.a + worst.b);
            if subdivisions >= self.max_subdivisions || !(worst.a < mid && mid < worst.b) {
                return Err(Error::QuadratureNotConverged {
                    estimate: value,
                    error,
                    subdivisions,
                });
            }
            heap.push(kronrod15(f, worst.a, mid));
            heap.push(kronrod15(f, mid, worst.b));
            subdivisions += 1;
        }
    }
}

fn split_at(a: f64, b: f64, breaks: &[f64]) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut lo = a;
    for c in cuts {
        out.push((lo, c));
        lo = c;
    }
    out.push((lo, b));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn linear_is_exact() {
        let r = Integrator::default().integrate(|x| x, 0.0, 1.0).unwrap();
        assert!((r.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gaussian_normalizes() {
        let s = 0.3;
        let phi = |x: f64| (-x * x / (2.0 * s * s)).exp() / (s * (2.0 * PI).sqrt());
        let r = Integrator::default()
            .integrate_with_breaks(phi, -12.0 * s, 12.0 * s, &[0.0])
            .unwrap();
        assert!((r.value - 1.0).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn kink_handled_adaptively() {
        // |x - 1/3| on [0,1] without a break at the kink
        let r = Integrator::default()
            .integrate(|x: f64| (x - 1.0 / 3.0).abs(), 0.0, 1.0)
            .unwrap();
        let exact = (1.0 / 9.0 + 4.0 / 9.0) / 2.0;
        assert!((r.value - exact).abs() < 1e-10);
    }

    #[test]
    fn non_convergence_is_reported() {
        let integrator = Integrator {
            abs_tol: 1e-14,
            rel_tol: 0.0,
            max_subdivisions: 5,
        };
        let err = integrator
            .integrate(|x: f64| x.sqrt().recip(), 1e-300, 1.0)
            .unwrap_err();
        match err {
            Error::QuadratureNotConverged {
                estimate, error, ..
            } => {
                assert!(estimate > 0.0);
                assert!(error > 1e-14);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_range_is_zero() {
        let r = Integrator::default().integrate(|_| 1.0, 2.0, 1.0).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn halving_tolerance_never_raises_error_estimate() {
        let f = |x: f64| (5.0 * x).sin() * (-x * x).exp() + (x - 0.2).abs();
        let mut tol = 1e-4;
        let mut last = f64::INFINITY;
        for _ in 0..18 {
            let r = Integrator::new(tol, 0.0).integrate(f, -3.0, 3.0).unwrap();
            assert!(r.error <= last, "error rose from {last:e} to {:e}", r.error);
            last = r.error;
            tol /= 2.0;
        }
    }

    #[test]
    fn union_integration_skips_gaps() {
        let u: IntervalUnion = "[0, 1] U [2, 3]".parse().unwrap();
        let r = Integrator::default()
            .integrate_union(|_| 1.0, &u, (-10.0, 10.0), &[])
            .unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
    }
}
