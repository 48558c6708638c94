use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalUnion};

/// One piece of a partition: the mode `set`, its deep interior `good`, the
/// buffer `cover` with `good ⊂ cover ⊂ set`, and a privileged point in `good`.
/// The tail `set \ cover` is never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub set: IntervalUnion,
    pub good: IntervalUnion,
    pub cover: IntervalUnion,
    pub privileged_point: f64,
}

impl Mode {
    pub fn validate(&self) -> Result<()> {
        if self.set.is_empty() {
            return Err(Error::InvalidParameter("mode set is empty".into()));
        }
        if !self.good.is_subset_of(&self.cover) || !self.cover.is_subset_of(&self.set) {
            return Err(Error::InvalidParameter(format!(
                "need good ⊂ cover ⊂ set, got {} / {} / {}",
                self.good, self.cover, self.set
            )));
        }
        if !self.good.contains(self.privileged_point) {
            return Err(Error::InvalidParameter(format!(
                "privileged point {} is not in {}",
                self.privileged_point, self.good
            )));
        }
        Ok(())
    }

    /// `cover \ good`
    pub fn shell(&self) -> IntervalUnion {
        self.cover.difference(&self.good)
    }

    pub fn reflect(&self) -> Self {
        Self {
            set: self.set.reflect(),
            good: self.good.reflect(),
            cover: self.cover.reflect(),
            privileged_point: -self.privileged_point,
        }
    }
}

/// Disjoint modes covering the real line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    modes: Vec<Mode>,
}

impl Partition {
    pub fn new(modes: Vec<Mode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidParameter("partition has no modes".into()));
        }
        for m in &modes {
            m.validate()?;
        }
        let mut union = IntervalUnion::empty();
        for (i, m) in modes.iter().enumerate() {
            if !m.set.is_disjoint_from(&union) {
                return Err(Error::InvalidParameter(format!(
                    "mode {i} overlaps an earlier mode"
                )));
            }
            union = union.union(&m.set);
        }
        if union != IntervalUnion::full() {
            return Err(Error::InvalidParameter(format!(
                "modes leave {} uncovered",
                union.complement()
            )));
        }
        Ok(Self { modes })
    }

    /// Two modes split at `cut`. The left interior and buffer reach
    /// `good_width` and `cover_width` below the cut; the right ones mirror
    /// them upward and contain the cut itself. Privileged points are the
    /// mixture centers when they fall inside the interiors, and the
    /// interior midpoints otherwise.
    pub fn split_at(cut: f64, good_width: f64, cover_width: f64) -> Result<Self> {
        if !(0.0 < good_width && good_width < cover_width) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < good width < cover width, got {good_width}, {cover_width}"
            )));
        }
        let left_good = IntervalUnion::from(Interval::open(cut - good_width, cut));
        let right_good = IntervalUnion::from(Interval::closed_open(cut, cut + good_width));
        let pick = |good: &IntervalUnion, center: f64, mid: f64| {
            if good.contains(center) {
                center
            } else {
                mid
            }
        };
        Self::new(vec![
            Mode {
                set: IntervalUnion::below(cut),
                cover: Interval::open(cut - cover_width, cut).into(),
                privileged_point: pick(&left_good, -1.0, cut - 0.5 * good_width),
                good: left_good,
            },
            Mode {
                set: IntervalUnion::at_least(cut),
                cover: Interval::closed_open(cut, cut + cover_width).into(),
                privileged_point: pick(&right_good, 1.0, cut + 0.5 * good_width),
                good: right_good,
            },
        ])
    }

    /// `(-inf, 0) | [0, inf)` with interiors of width 3 and buffers of width 4.
    pub fn symmetric() -> Self {
        Self::split_at(0.0, 3.0, 4.0).expect("valid default partition")
    }

    /// Interiors `sigma^-good_exp` and buffers `sigma^-cover_exp` wide.
    pub fn scaled(sigma: f64, good_exp: f64, cover_exp: f64) -> Result<Self> {
        Self::split_at(0.0, sigma.powf(-good_exp), sigma.powf(-cover_exp))
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn mode_of(&self, x: f64) -> Option<usize> {
        self.modes.iter().position(|m| m.set.contains(x))
    }

    pub fn good_union(&self) -> IntervalUnion {
        self.modes
            .iter()
            .fold(IntervalUnion::empty(), |acc, m| acc.union(&m.good))
    }

    pub fn cover_union(&self) -> IntervalUnion {
        self.modes
            .iter()
            .fold(IntervalUnion::empty(), |acc, m| acc.union(&m.cover))
    }
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            modes: Vec<Mode>,
        }
        let raw = Raw::deserialize(d)?;
        Partition::new(raw.modes).map_err(serde::de::Error::custom)
    }
}
