//! Exact integer intervals, coordinate boxes and interval sets.
//!
//! These are the building blocks of every finite window in the crate: a
//! [`CoordBox`] is a product of [`StridedInterval`]s and has O(1) membership
//! and exact cardinality no matter how large its sides are.

use serde::{Deserialize, Serialize};

use crate::groups::Coords;
use crate::int::Int;

/// `{start, start + step, ..., start + (count - 1) * step}` with `step >= 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StridedInterval {
    pub start: Int,
    pub step: Int,
    pub count: Int,
}

impl StridedInterval {
    pub fn new(start: Int, step: Int, count: Int) -> Self {
        assert!(step.is_positive(), "interval step must be positive");
        let count = if count.is_negative() { Int::ZERO } else { count };
        StridedInterval { start, step, count }
    }

    pub fn empty() -> Self {
        StridedInterval::new(Int::ZERO, Int::ONE, Int::ZERO)
    }

    /// `[lo, hi]`, empty when `hi < lo`.
    pub fn range(lo: Int, hi: Int) -> Self {
        let count = &hi - &lo + 1;
        StridedInterval::new(lo, Int::ONE, count)
    }

    /// `[1, n]`.
    pub fn one_to(n: Int) -> Self {
        StridedInterval::range(Int::ONE, n)
    }

    /// `(-m, m]`.
    pub fn centered(m: Int) -> Self {
        let lo = -&m + 1;
        StridedInterval::range(lo, m)
    }

    /// `[1, n]` restricted to odd integers.
    pub fn odd_one_to(n: Int) -> Self {
        let count = (&n + 1).div_floor(&Int::from(2));
        StridedInterval::new(Int::ONE, Int::from(2), count)
    }

    pub fn is_empty(&self) -> bool {
        !self.count.is_positive()
    }

    pub fn len(&self) -> &Int {
        &self.count
    }

    pub fn first(&self) -> Option<&Int> {
        (!self.is_empty()).then_some(&self.start)
    }

    pub fn last(&self) -> Option<Int> {
        (!self.is_empty()).then(|| &self.start + &self.step * (&self.count - 1))
    }

    pub fn contains(&self, x: &Int) -> bool {
        if self.is_empty() || x < &self.start {
            return false;
        }
        let (q, r) = (x - &self.start).div_rem_euclid(&self.step);
        r.is_zero() && q < self.count
    }

    pub fn translate(&self, by: &Int) -> Self {
        StridedInterval::new(&self.start + by, self.step.clone(), self.count.clone())
    }

    pub fn negate(&self) -> Self {
        match self.last() {
            Some(l) => StridedInterval::new(-l, self.step.clone(), self.count.clone()),
            None => StridedInterval::empty(),
        }
    }

    /// Exact intersection of two strided intervals (Chinese remaindering on the
    /// two progressions).
    pub fn intersect(&self, other: &Self) -> Self {
        let (Some(l1), Some(l2)) = (self.last(), other.last()) else {
            return StridedInterval::empty();
        };
        let lo = self.start.max_of(&other.start).clone();
        let hi = l1.min_of(&l2).clone();
        if lo > hi {
            return StridedInterval::empty();
        }
        let (g, x, _) = self.step.extended_gcd(&other.step);
        let diff = &other.start - &self.start;
        let (q, r) = diff.div_rem_euclid(&g);
        if !r.is_zero() {
            return StridedInterval::empty();
        }
        let lcm = &self.step * &other.step.div_floor(&g);
        // x * step1 = g (mod step2) so start1 + step1 * x * q solves both
        let base = (&self.start + &self.step * (&x * &q)).rem_euclid(&lcm);
        // smallest solution >= lo
        let first = &lo + (&base - &lo).rem_euclid(&lcm);
        if first > hi {
            return StridedInterval::empty();
        }
        let count = (&hi - &first).div_floor(&lcm) + 1;
        StridedInterval::new(first, lcm, count)
    }

    /// Enumerates the members; panics if the count does not fit in `u64`.
    pub fn iter(&self) -> impl Iterator<Item = Int> + '_ {
        let n = self.count.to_u64().expect("interval too large to enumerate");
        (0..n).map(move |k| &self.start + &self.step * Int::from(k))
    }
}

/// A product of strided intervals, one per coordinate.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CoordBox {
    pub axes: Vec<StridedInterval>,
}

impl CoordBox {
    pub fn new(axes: Vec<StridedInterval>) -> Self {
        CoordBox { axes }
    }

    /// `(-m, m]^dim`.
    pub fn centered_cube(dim: usize, m: Int) -> Self {
        CoordBox::new(vec![StridedInterval::centered(m); dim])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> Int {
        self.axes.iter().map(|a| a.count.clone()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.axes.iter().any(StridedInterval::is_empty)
    }

    pub fn contains(&self, x: &[Int]) -> bool {
        x.len() == self.axes.len() && self.axes.iter().zip(x).all(|(a, v)| a.contains(v))
    }

    pub fn translate(&self, by: &[Int]) -> Self {
        CoordBox::new(self.axes.iter().zip(by).map(|(a, v)| a.translate(v)).collect())
    }

    pub fn negate(&self) -> Self {
        CoordBox::new(self.axes.iter().map(StridedInterval::negate).collect())
    }

    pub fn intersect(&self, other: &Self) -> Self {
        CoordBox::new(
            self.axes
                .iter()
                .zip(&other.axes)
                .map(|(a, b)| a.intersect(b))
                .collect(),
        )
    }

    /// Lexicographic enumeration (first coordinate varies slowest).
    pub fn iter(&self) -> BoxIter<'_> {
        let counts: Vec<u64> = self
            .axes
            .iter()
            .map(|a| a.count.to_u64().expect("box side too large to enumerate"))
            .collect();
        let done = counts.contains(&0);
        BoxIter {
            bx: self,
            counts,
            pos: vec![0; self.axes.len()],
            done,
        }
    }
}

pub struct BoxIter<'a> {
    bx: &'a CoordBox,
    counts: Vec<u64>,
    pos: Vec<u64>,
    done: bool,
}

impl Iterator for BoxIter<'_> {
    type Item = Coords;

    fn next(&mut self) -> Option<Coords> {
        if self.done {
            return None;
        }
        let out: Coords = self
            .bx
            .axes
            .iter()
            .zip(&self.pos)
            .map(|(a, &k)| &a.start + &a.step * Int::from(k))
            .collect();
        let mut i = self.pos.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.pos[i] += 1;
            if self.pos[i] < self.counts[i] {
                break;
            }
            self.pos[i] = 0;
        }
        Some(out)
    }
}

/// A finite union of closed integer intervals, kept sorted and merged.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalSet {
    spans: Vec<(Int, Int)>,
}

impl IntervalSet {
    pub fn new() -> Self {
        IntervalSet::default()
    }

    pub fn from_values<'a>(values: impl IntoIterator<Item = &'a Int>) -> Self {
        let mut s = IntervalSet::new();
        for v in values {
            s.insert(v.clone(), v.clone());
        }
        s
    }

    pub fn spans(&self) -> &[(Int, Int)] {
        &self.spans
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    /// Number of integers in the set.
    pub fn len(&self) -> Int {
        self.spans.iter().map(|(a, b)| b - a + 1).sum()
    }

    /// Adds `[lo, hi]`, merging with touching or overlapping spans.
    pub fn insert(&mut self, lo: Int, hi: Int) {
        if hi < lo {
            return;
        }
        let (mut lo, mut hi) = (lo, hi);
        // first span that could touch [lo, hi]
        let start = self.spans.partition_point(|(_, b)| b + 1 < lo);
        let mut end = start;
        while end < self.spans.len() && self.spans[end].0 <= &hi + 1 {
            lo = lo.min_of(&self.spans[end].0).clone();
            hi = hi.max_of(&self.spans[end].1).clone();
            end += 1;
        }
        self.spans.splice(start..end, std::iter::once((lo, hi)));
    }

    pub fn union_with(&mut self, other: &IntervalSet) {
        for (a, b) in &other.spans {
            self.insert(a.clone(), b.clone());
        }
    }

    pub fn contains(&self, x: &Int) -> bool {
        let i = self.spans.partition_point(|(_, b)| b < x);
        i < self.spans.len() && &self.spans[i].0 <= x
    }

    /// `|[lo, hi] ∩ self|`.
    pub fn count_in(&self, lo: &Int, hi: &Int) -> Int {
        if hi < lo {
            return Int::ZERO;
        }
        let mut i = self.spans.partition_point(|(_, b)| b < lo);
        let mut total = Int::ZERO;
        while i < self.spans.len() && &self.spans[i].0 <= hi {
            let a = self.spans[i].0.max_of(lo);
            let b = self.spans[i].1.min_of(hi);
            total += b - a + 1;
            i += 1;
        }
        total
    }

    /// The parts of `[lo, hi]` not covered by the set.
    pub fn complement_within(&self, lo: &Int, hi: &Int) -> Vec<(Int, Int)> {
        let mut out = Vec::new();
        let mut cur = lo.clone();
        let mut i = self.spans.partition_point(|(_, b)| b < lo);
        while i < self.spans.len() && &self.spans[i].0 <= hi {
            let (a, b) = &self.spans[i];
            if a > &cur {
                out.push((cur.clone(), a - 1));
            }
            cur = cur.max_of(&(b + 1)).clone();
            i += 1;
        }
        if &cur <= hi {
            out.push((cur, hi.clone()));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn si(start: i64, step: i64, count: i64) -> StridedInterval {
        StridedInterval::new(Int::from(start), Int::from(step), Int::from(count))
    }

    #[test]
    fn conventions() {
        let c = StridedInterval::centered(Int::from(1));
        assert_eq!(c.iter().collect::<Vec<_>>(), vec![Int::from(0), Int::from(1)]);
        let o = StridedInterval::odd_one_to(Int::from(9));
        assert_eq!(o.len(), &Int::from(5));
        assert!(o.contains(&Int::from(9)) && !o.contains(&Int::from(8)));
        assert_eq!(StridedInterval::odd_one_to(Int::from(10)).len(), &Int::from(5));
        assert_eq!(StridedInterval::one_to(Int::from(3)).len(), &Int::from(3));
    }

    #[test]
    fn box_iteration_is_lexicographic() {
        let b = CoordBox::new(vec![si(0, 1, 2), si(5, 2, 2)]);
        let got: Vec<Vec<i64>> = b
            .iter()
            .map(|c| c.iter().map(|x| x.to_i64().unwrap()).collect())
            .collect();
        assert_eq!(got, vec![vec![0, 5], vec![0, 7], vec![1, 5], vec![1, 7]]);
        assert_eq!(b.len(), Int::from(4));
    }

    #[test]
    fn interval_set_merging() {
        let mut s = IntervalSet::new();
        s.insert(Int::from(5), Int::from(7));
        s.insert(Int::from(1), Int::from(2));
        s.insert(Int::from(3), Int::from(4));
        assert_eq!(s.spans().len(), 1);
        assert_eq!(s.len(), Int::from(7));
        s.insert(Int::from(10), Int::from(12));
        assert_eq!(s.count_in(&Int::from(0), &Int::from(11)), Int::from(9));
        assert_eq!(
            s.complement_within(&Int::from(0), &Int::from(13)),
            vec![
                (Int::from(0), Int::from(0)),
                (Int::from(8), Int::from(9)),
                (Int::from(13), Int::from(13))
            ]
        );
    }

    proptest! {
        #[test]
        fn intersection_matches_enumeration(
            s1 in -30i64..30, k1 in 1i64..7, c1 in 0i64..25,
            s2 in -30i64..30, k2 in 1i64..7, c2 in 0i64..25,
        ) {
            let a = si(s1, k1, c1);
            let b = si(s2, k2, c2);
            let got: Vec<Int> = a.intersect(&b).iter().collect();
            let want: Vec<Int> = a.iter().filter(|x| b.contains(x)).collect();
            prop_assert_eq!(got, want);
        }

        #[test]
        fn interval_set_matches_bitmap(spans in proptest::collection::vec((-40i64..40, 0i64..8), 0..12),
                                       lo in -50i64..50, w in 0i64..40) {
            let mut s = IntervalSet::new();
            let mut bits = std::collections::BTreeSet::new();
            for (a, l) in spans {
                s.insert(Int::from(a), Int::from(a + l));
                bits.extend(a..=a + l);
            }
            let hi = lo + w;
            let want = (lo..=hi).filter(|x| bits.contains(x)).count();
            prop_assert_eq!(s.count_in(&Int::from(lo), &Int::from(hi)), Int::from(want));
            prop_assert_eq!(s.len(), Int::from(bits.len()));
            let comp: usize = s.complement_within(&Int::from(lo), &Int::from(hi))
                .iter().map(|(a, b)| (b - a + 1).to_i64().unwrap() as usize).sum();
            prop_assert_eq!(comp, (hi - lo + 1) as usize - want);
        }
    }
}
