use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sorted, duplicate-free set of predictor indices (0-based).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoordSet(Vec<usize>);

impl CoordSet {
    pub fn new(mut coords: Vec<usize>) -> Self {
        coords.sort_unstable();
        coords.dedup();
        Self(coords)
    }

    pub fn singleton(k: usize) -> Self {
        Self(vec![k])
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.0.binary_search(&k).is_ok()
    }

    /// Position of `k` within the set.
    pub fn position(&self, k: usize) -> Option<usize> {
        self.0.binary_search(&k).ok()
    }

    pub fn with(&self, k: usize) -> Self {
        let mut v = self.0.clone();
        if let Err(pos) = v.binary_search(&k) {
            v.insert(pos, k);
        }
        Self(v)
    }

    pub fn without(&self, k: usize) -> Self {
        Self(self.0.iter().copied().filter(|&c| c != k).collect())
    }

    pub fn is_subset_of(&self, other: &CoordSet) -> bool {
        self.0.iter().all(|&k| other.contains(k))
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }
}

impl fmt::Display for CoordSet {
    /// 1-based labels joined with `:`, e.g. `x1:x3`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(":")?;
            }
            write!(f, "x{}", k + 1)?;
        }
        Ok(())
    }
}

/// Axis-aligned box over `coords`; each side is the half-open interval
/// `(lower, upper]`, with `±inf` for unbounded sides.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    coords: CoordSet,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Region {
    /// The whole space over `coords`.
    pub fn unbounded(coords: CoordSet) -> Self {
        let m = coords.len();
        Self {
            coords,
            lower: vec![f64::NEG_INFINITY; m],
            upper: vec![f64::INFINITY; m],
        }
    }

    pub fn new(coords: CoordSet, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Format("region without coordinates".into()));
        }
        if lower.len() != coords.len() || upper.len() != coords.len() {
            return Err(Error::Format("region bounds do not match its coordinates".into()));
        }
        for (lo, hi) in lower.iter().zip(&upper) {
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(Error::Format(format!("empty interval ({lo}, {hi}]")));
            }
        }
        Ok(Self {
            coords,
            lower,
            upper,
        })
    }

    pub fn coords(&self) -> &CoordSet {
        &self.coords
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// `(lower, upper)` of coordinate `k`; the whole line when `k` is not constrained.
    pub fn interval(&self, k: usize) -> (f64, f64) {
        match self.coords.position(k) {
            Some(p) => (self.lower[p], self.upper[p]),
            None => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Membership of a full `d`-vector.
    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        self.coords
            .0
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&k, (&lo, &hi))| lo < x[k] && x[k] <= hi)
    }

    /// The region extended by an unbounded interval in coordinate `k`.
    pub fn lift(&self, k: usize) -> Self {
        if self.coords.contains(k) {
            return self.clone();
        }
        let coords = self.coords.with(k);
        let p = coords.position(k).expect("inserted coordinate");
        let mut lower = self.lower.clone();
        let mut upper = self.upper.clone();
        lower.insert(p, f64::NEG_INFINITY);
        upper.insert(p, f64::INFINITY);
        Self {
            coords,
            lower,
            upper,
        }
    }

    /// Children `(plus, minus)` from cutting coordinate `k` at `c`:
    /// `plus` keeps `x_k > c`, `minus` keeps `x_k <= c`.
    pub fn cut(&self, k: usize, c: f64) -> Result<(Self, Self)> {
        let p = self.coords.position(k).ok_or(Error::CoordinateNotInRegion(k))?;
        let (lo, hi) = (self.lower[p], self.upper[p]);
        if !(c.is_finite() && lo < c && c < hi) {
            return Err(Error::InvalidSplitPoint {
                coord: k,
                point: c,
                lower: lo,
                upper: hi,
            });
        }
        let mut plus = self.clone();
        let mut minus = self.clone();
        plus.lower[p] = c;
        minus.upper[p] = c;
        Ok((plus, minus))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn region(coords: &[usize], bounds: &[(f64, f64)]) -> Region {
        Region::new(
            CoordSet::new(coords.to_vec()),
            bounds.iter().map(|b| b.0).collect(),
            bounds.iter().map(|b| b.1).collect(),
        )
        .unwrap()
    }

    #[test]
    fn contains_examples() {
        let whole = Region::unbounded(CoordSet::singleton(0));
        assert!(whole.contains(&[7.3, -1.0]));
        let unit = region(&[0], &[(0.0, 1.0)]);
        assert!(!unit.contains(&[0.0]));
        assert!(unit.contains(&[1.0]));
        let square = region(&[0, 1], &[(0.0, 1.0), (0.0, 1.0)]);
        assert!(!square.contains(&[0.5, 2.0]));
        assert!(square.contains(&[0.5, 0.5]));
    }

    #[test]
    fn lift_and_cut() {
        let leaf = region(&[1], &[(0.0, 1.0)]);
        let lifted = leaf.lift(0);
        assert_eq!(lifted.coords().as_slice(), &[0, 1]);
        assert_eq!(lifted.interval(0), (f64::NEG_INFINITY, f64::INFINITY));
        assert_eq!(lifted.interval(1), (0.0, 1.0));
        let (plus, minus) = lifted.cut(0, 0.3).unwrap();
        assert_eq!(plus.interval(0), (0.3, f64::INFINITY));
        assert_eq!(minus.interval(0), (f64::NEG_INFINITY, 0.3));
        assert!(leaf.cut(0, 0.5).is_err());
        assert!(leaf.cut(1, 1.0).is_err());
        assert!(leaf.cut(1, 0.0).is_err());
    }

    #[test]
    fn rejects_empty_intervals() {
        assert!(Region::new(CoordSet::singleton(0), vec![1.0], vec![1.0]).is_err());
        assert!(Region::new(CoordSet::new(vec![]), vec![], vec![]).is_err());
    }

    #[test]
    fn coord_set_ops() {
        let u = CoordSet::new(vec![3, 1, 3]);
        assert_eq!(u.as_slice(), &[1, 3]);
        assert_eq!(u.with(2).as_slice(), &[1, 2, 3]);
        assert_eq!(u.without(1).as_slice(), &[3]);
        assert!(CoordSet::singleton(3).is_subset_of(&u));
        assert_eq!(u.to_string(), "x2:x4");
    }
}
