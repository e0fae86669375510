//! Pieces of cake: finite unions of closed intervals, kept in canonical form.
//!
//! Utilities are lengths, so single points never matter: intervals that only
//! touch are merged and degenerate intervals are dropped.

use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self> {
        if lo > hi {
            return Err(Error::MalformedInterval {
                lo: rational::format(&lo),
                hi: rational::format(&hi),
            });
        }
        Ok(Interval { lo, hi })
    }

    pub fn length(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / rational::int(2)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Sorted, pairwise disjoint, non-adjacent, non-degenerate closed intervals.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct IntervalSet {
    intervals: Vec<Interval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet::default()
    }

    pub fn single(lo: Rational, hi: Rational) -> Result<Self> {
        Self::normalize(vec![(lo, hi)])
    }

    /// Canonical form of an arbitrary list of closed intervals.
    pub fn normalize(pairs: Vec<(Rational, Rational)>) -> Result<Self> {
        let mut intervals = pairs
            .into_iter()
            .map(|(lo, hi)| Interval::new(lo, hi))
            .collect::<Result<Vec<_>>>()?;
        intervals.retain(|iv| iv.lo < iv.hi);
        intervals.sort_by(|a, b| a.lo.cmp(&b.lo).then_with(|| a.hi.cmp(&b.hi)));
        let mut merged: Vec<Interval> = Vec::with_capacity(intervals.len());
        for iv in intervals {
            match merged.last_mut() {
                Some(last) if iv.lo <= last.hi => {
                    if iv.hi > last.hi {
                        last.hi = iv.hi;
                    }
                }
                _ => merged.push(iv),
            }
        }
        Ok(IntervalSet { intervals: merged })
    }

    /// Builds from intervals already known to be canonical.
    fn from_canonical(intervals: Vec<Interval>) -> Self {
        debug_assert!(intervals.iter().all(|iv| iv.lo < iv.hi));
        debug_assert!(intervals.windows(2).all(|w| w[0].hi < w[1].lo));
        IntervalSet { intervals }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn measure(&self) -> Rational {
        self.intervals
            .iter()
            .fold(Rational::zero(), |acc, iv| acc + iv.length())
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            let lo = rational::max(&a[i].lo, &b[j].lo);
            let hi = rational::min(&a[i].hi, &b[j].hi);
            if lo < hi {
                out.push(Interval { lo, hi });
            }
            if a[i].hi < b[j].hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet::from_canonical(out)
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let pairs = self
            .intervals
            .iter()
            .chain(other.intervals.iter())
            .map(|iv| (iv.lo.clone(), iv.hi.clone()))
            .collect();
        IntervalSet::normalize(pairs).expect("canonical intervals are well formed")
    }

    /// `self \ other`, up to measure zero.
    pub fn difference(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        for iv in &self.intervals {
            let mut cursor = iv.lo.clone();
            for cut in &other.intervals {
                if cut.hi <= cursor || cut.lo >= iv.hi {
                    continue;
                }
                if cut.lo > cursor {
                    out.push(Interval {
                        lo: cursor.clone(),
                        hi: cut.lo.clone(),
                    });
                }
                if cut.hi > cursor {
                    cursor = cut.hi.clone();
                }
                if cursor >= iv.hi {
                    break;
                }
            }
            if cursor < iv.hi {
                out.push(Interval {
                    lo: cursor,
                    hi: iv.hi.clone(),
                });
            }
        }
        IntervalSet::from_canonical(out)
    }

    /// True when `self ⊆ other` up to measure zero.
    pub fn is_subset(&self, other: &IntervalSet) -> bool {
        self.difference(other).is_empty()
    }

    /// True when the (closed) set contains the point.
    pub fn contains_point(&self, x: &Rational) -> bool {
        self.intervals.iter().any(|iv| &iv.lo <= x && x <= &iv.hi)
    }

    /// The leftmost sub-piece of the given length. Errors if the set is too short.
    pub fn leftmost(&self, length: &Rational) -> Result<IntervalSet> {
        let mut remaining = length.clone();
        let mut out = Vec::new();
        for iv in &self.intervals {
            if remaining.is_zero() {
                break;
            }
            let len = iv.length();
            if len <= remaining {
                remaining -= &len;
                out.push(iv.clone());
            } else {
                out.push(Interval {
                    lo: iv.lo.clone(),
                    hi: &iv.lo + &remaining,
                });
                remaining = Rational::zero();
            }
        }
        if !remaining.is_zero() {
            return Err(Error::Domain(format!(
                "cannot take length {} from a piece of length {}",
                length,
                self.measure()
            )));
        }
        // Adjacent pieces cannot arise: the input is canonical.
        Ok(IntervalSet::from_canonical(out))
    }

    /// All interval endpoints, in order.
    pub fn endpoints(&self) -> impl Iterator<Item = &Rational> {
        self.intervals.iter().flat_map(|iv| [&iv.lo, &iv.hi])
    }

    pub fn to_pairs(&self) -> Vec<(Rational, Rational)> {
        self.intervals
            .iter()
            .map(|iv| (iv.lo.clone(), iv.hi.clone()))
            .collect()
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return write!(f, "∅");
        }
        for (k, iv) in self.intervals.iter().enumerate() {
            if k > 0 {
                write!(f, " ∪ ")?;
            }
            write!(f, "{iv}")?;
        }
        Ok(())
    }
}

impl Serialize for IntervalSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[String; 2]> = self
            .intervals
            .iter()
            .map(|iv| [rational::format(&iv.lo), rational::format(&iv.hi)])
            .collect();
        pairs.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for IntervalSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = Vec::<[String; 2]>::deserialize(deserializer)?;
        let pairs = raw
            .iter()
            .map(|[lo, hi]| Ok((rational::parse(lo)?, rational::parse(hi)?)))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        IntervalSet::normalize(pairs).map_err(serde::de::Error::custom)
    }
}
