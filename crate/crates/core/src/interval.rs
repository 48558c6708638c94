//! Finite unions of real intervals with explicit endpoint closure.
//!
//! Sets such as the modes `(-inf, 0)` and `[0, inf)` need exact membership at
//! their shared boundary, so every endpoint carries an open/closed flag and
//! [`IntervalUnion::complement`] flips it. Unions are kept normalized: sorted,
//! pairwise disjoint, and with touching pieces merged.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A single interval. Infinite endpoints are always open.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Self {
        Self {
            lo,
            hi,
            lo_closed: lo_closed && lo.is_finite(),
            hi_closed: hi_closed && hi.is_finite(),
        }
    }

    /// `(lo, hi)`
    pub fn open(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, false, false)
    }

    /// `[lo, hi]`
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, true, true)
    }

    /// `[lo, hi)`
    pub fn closed_open(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, true, false)
    }

    /// `(lo, hi]`
    pub fn open_closed(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, false, true)
    }

    pub fn is_empty(&self) -> bool {
        if self.lo.is_nan() || self.hi.is_nan() {
            return true;
        }
        match self.lo.partial_cmp(&self.hi) {
            Some(Ordering::Less) => false,
            Some(Ordering::Equal) => !(self.lo_closed && self.hi_closed),
            _ => true,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed {
            x >= self.lo
        } else {
            x > self.lo
        };
        let below = if self.hi_closed {
            x <= self.hi
        } else {
            x < self.hi
        };
        above && below
    }

    pub fn length(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.hi - self.lo
        }
    }

    fn intersect(&self, other: &Interval) -> Interval {
        let (lo, lo_closed) = match self.lo.partial_cmp(&other.lo) {
            Some(Ordering::Greater) => (self.lo, self.lo_closed),
            Some(Ordering::Less) => (other.lo, other.lo_closed),
            _ => (self.lo, self.lo_closed && other.lo_closed),
        };
        let (hi, hi_closed) = match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Less) => (self.hi, self.hi_closed),
            Some(Ordering::Greater) => (other.hi, other.hi_closed),
            _ => (self.hi, self.hi_closed && other.hi_closed),
        };
        Interval::new(lo, hi, lo_closed, hi_closed)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.lo_closed { '[' } else { '(' };
        let close = if self.hi_closed { ']' } else { ')' };
        write!(
            f,
            "{open}{}, {}{close}",
            fmt_endpoint(self.lo),
            fmt_endpoint(self.hi)
        )
    }
}

fn fmt_endpoint(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x}")
    }
}

/// Sorted union of pairwise disjoint intervals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalUnion {
    intervals: Vec<Interval>,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn full() -> Self {
        Self::from(Interval::open(f64::NEG_INFINITY, f64::INFINITY))
    }

    /// `(-inf, x)`
    pub fn below(x: f64) -> Self {
        Self::from(Interval::open(f64::NEG_INFINITY, x))
    }

    /// `[x, inf)`
    pub fn at_least(x: f64) -> Self {
        Self::from(Interval::closed_open(x, f64::INFINITY))
    }

    pub fn from_intervals(intervals: impl IntoIterator<Item = Interval>) -> Self {
        let mut pieces: Vec<Interval> = intervals.into_iter().filter(|i| !i.is_empty()).collect();
        pieces.sort_by(|a, b| {
            a.lo.partial_cmp(&b.lo)
                .unwrap_or(Ordering::Equal)
                .then_with(|| b.lo_closed.cmp(&a.lo_closed))
        });
        let mut merged: Vec<Interval> = Vec::with_capacity(pieces.len());
        for piece in pieces {
            if let Some(last) = merged.last_mut() {
                let touches = piece.lo < last.hi
                    || (piece.lo == last.hi && (piece.lo_closed || last.hi_closed));
                if touches {
                    match piece.hi.partial_cmp(&last.hi) {
                        Some(Ordering::Greater) => {
                            last.hi = piece.hi;
                            last.hi_closed = piece.hi_closed;
                        }
                        Some(Ordering::Equal) => last.hi_closed |= piece.hi_closed,
                        _ => {}
                    }
                    continue;
                }
            }
            merged.push(piece);
        }
        Self { intervals: merged }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        // Pieces are sorted, so a binary search on `hi` would also work; unions
        // here have a handful of pieces.
        self.intervals.iter().any(|i| i.contains(x))
    }

    pub fn complement(&self) -> Self {
        let mut out = Vec::with_capacity(self.intervals.len() + 1);
        let mut cursor = f64::NEG_INFINITY;
        let mut cursor_closed = false;
        for piece in &self.intervals {
            out.push(Interval::new(
                cursor,
                piece.lo,
                !cursor_closed,
                !piece.lo_closed,
            ));
            cursor = piece.hi;
            cursor_closed = piece.hi_closed;
        }
        out.push(Interval::new(cursor, f64::INFINITY, !cursor_closed, false));
        // A leading gap `(-inf, -inf)` or trailing `(inf, inf)` is empty and dropped.
        Self::from_intervals(out)
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::from_intervals(self.intervals.iter().chain(other.intervals.iter()).copied())
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        for a in &self.intervals {
            for b in &other.intervals {
                out.push(a.intersect(b));
            }
        }
        Self::from_intervals(out)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.intersect(&other.complement())
    }

    /// Intersection with the closed window `[lo, hi]`.
    pub fn clip(&self, lo: f64, hi: f64) -> Self {
        self.intersect(&Self::from(Interval::closed(lo, hi)))
    }

    /// True when every point of `self` lies in `other`.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.difference(other).is_empty()
    }

    pub fn is_disjoint_from(&self, other: &Self) -> bool {
        self.intersect(other).is_empty()
    }

    /// Lebesgue measure (may be infinite).
    pub fn length(&self) -> f64 {
        self.intervals.iter().map(Interval::length).sum()
    }

    pub fn inf(&self) -> Option<f64> {
        self.intervals.first().map(|i| i.lo)
    }

    pub fn sup(&self) -> Option<f64> {
        self.intervals.last().map(|i| i.hi)
    }

    /// Mirror image `{-x : x in self}`.
    pub fn reflect(&self) -> Self {
        Self::from_intervals(
            self.intervals
                .iter()
                .map(|i| Interval::new(-i.hi, -i.lo, i.hi_closed, i.lo_closed)),
        )
    }
}

impl From<Interval> for IntervalUnion {
    fn from(interval: Interval) -> Self {
        Self::from_intervals([interval])
    }
}

impl fmt::Display for IntervalUnion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return write!(f, "{{}}");
        }
        for (k, piece) in self.intervals.iter().enumerate() {
            if k > 0 {
                write!(f, " U ")?;
            }
            write!(f, "{piece}")?;
        }
        Ok(())
    }
}

impl FromStr for IntervalUnion {
    type Err = Error;

    /// Parses the [`Display`](fmt::Display) form, e.g. `(-inf, 0) U [1, 2]` or `{}`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "{}" {
            return Ok(Self::empty());
        }
        let bad = || Error::InvalidParameter(format!("cannot parse interval union {s:?}"));
        let mut pieces = Vec::new();
        for part in s.split('U') {
            let part = part.trim();
            let lo_closed = match part.chars().next() {
                Some('[') => true,
                Some('(') => false,
                _ => return Err(bad()),
            };
            let hi_closed = match part.chars().last() {
                Some(']') => true,
                Some(')') => false,
                _ => return Err(bad()),
            };
            let inner = &part[1..part.len() - 1];
            let (lo, hi) = inner.split_once(',').ok_or_else(bad)?;
            let lo = parse_endpoint(lo.trim()).ok_or_else(bad)?;
            let hi = parse_endpoint(hi.trim()).ok_or_else(bad)?;
            pieces.push(Interval::new(lo, hi, lo_closed, hi_closed));
        }
        Ok(Self::from_intervals(pieces))
    }
}

fn parse_endpoint(s: &str) -> Option<f64> {
    match s {
        "inf" | "+inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

impl Serialize for IntervalUnion {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for IntervalUnion {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
