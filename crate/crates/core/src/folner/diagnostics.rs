use std::fmt;
use std::ops::RangeInclusive;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{lattice_like, FolnerFamily, FolnerRepr, FolnerSet, PhiMap};
use crate::error::{Error, Result};
use crate::groups::{GroupElement, GroupError};
use crate::int::Int;
use crate::rational::Rational;
use crate::region::{CoordBox, StridedInterval};
use crate::sets::{BoxUnion, Rule, SetBody, SetFamily};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// `g Φ_N`.
    Left,
    /// `Φ_N g`.
    Right,
}

fn nonempty(s: &FolnerSet) -> Result<Int> {
    let n = s.len();
    if n.is_zero() {
        return Err(Error::InvalidInput(format!("Φ_{} is empty", s.index)));
    }
    Ok(n)
}

/// `|g Φ_N △ Φ_N| / |Φ_N|` (or the right analogue) for each test element.
pub fn folner_defect(f: &FolnerFamily, n: u32, test_elems: &[GroupElement], side: Side) -> Result<Vec<Rational>> {
    let g = f.group();
    for t in test_elems {
        g.check(t)?;
    }
    let s = f.set(n)?;
    let size = nonempty(&s)?;
    let mut out = Vec::with_capacity(test_elems.len());
    for t in test_elems {
        let escaped = match (&s.repr, lattice_like(g)) {
            (FolnerRepr::Boxes(bs), true) if bs.len() <= 64 => {
                let moved: Vec<CoordBox> = bs.iter().map(|b| b.translate(t.coords())).collect();
                let overlap: Int = moved
                    .iter()
                    .flat_map(|m| bs.iter().map(move |b| m.intersect(b).len()))
                    .sum();
                &size - &overlap
            }
            _ => {
                let mut count = 0u64;
                s.for_each(f.budget(), |x| {
                    let y = match side {
                        Side::Left => g.mul_coords(t.coords(), x),
                        Side::Right => g.mul_coords(x, t.coords()),
                    };
                    if !s.contains_coords(&y) {
                        count += 1;
                    }
                })?;
                Int::from(count)
            }
        };
        out.push(Rational::new(escaped * 2, size.clone()));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DensityRow {
    pub n: u32,
    pub size: Int,
    pub hits: Int,
    pub density: Rational,
    pub running_max: Rational,
}

/// Exact densities `|A ∩ Φ_N| / |Φ_N|` along a range of indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DensityTable {
    pub rows: Vec<DensityRow>,
    /// Indices where `Φ_N` was empty and no density is defined.
    pub skipped_empty: Vec<u32>,
    /// The running maximum over the computed range: a finite stand-in for
    /// the limit superior, not the limit superior itself.
    pub running_max_note: &'static str,
}

impl DensityTable {
    pub fn last(&self) -> Option<&DensityRow> {
        self.rows.last()
    }
}

pub fn density_along(a: &SetFamily, f: &FolnerFamily, range: RangeInclusive<u32>) -> Result<DensityTable> {
    if a.group() != f.group() {
        return Err(GroupError::GroupMismatch {
            expected: f.group().kind(),
            found: a.group().kind(),
        }
        .into());
    }
    let mut rows: Vec<DensityRow> = Vec::new();
    let mut skipped = Vec::new();
    for n in range {
        let s = f.set(n)?;
        let size = s.len();
        if size.is_zero() {
            skipped.push(n);
            continue;
        }
        let hits = count_members(a, &s, f.budget())?;
        let density = Rational::new(hits.clone(), size.clone());
        let running_max = match rows.last() {
            Some(r) => r.running_max.clone().max(density.clone()),
            None => density.clone(),
        };
        rows.push(DensityRow {
            n,
            size,
            hits,
            density,
            running_max,
        });
    }
    Ok(DensityTable {
        rows,
        skipped_empty: skipped,
        running_max_note: "running maximum over the computed range (finite proxy for limsup)",
    })
}

/// The members of `[lo, hi]` congruent to `r` modulo `m`.
fn residue_class(axis: &StridedInterval, m: &Int, r: &Int) -> StridedInterval {
    let (Some(lo), Some(hi)) = (axis.first(), axis.last()) else {
        return StridedInterval::empty();
    };
    let r = r.rem_euclid(m);
    let first = lo + (&r - lo).rem_euclid(m);
    if first > hi {
        return StridedInterval::empty();
    }
    let count = (&hi - &first).div_floor(m) + 1;
    axis.intersect(&StridedInterval::new(first, m.clone(), count))
}

/// `|A ∩ S|`, by box algebra where the shapes allow it.
pub(crate) fn count_members(a: &SetFamily, s: &FolnerSet, budget: u64) -> Result<Int> {
    if let FolnerRepr::Boxes(bs) = &s.repr {
        match a.body() {
            SetBody::Predicate { rule, window } if !matches!(rule, Rule::Custom { .. }) => {
                let mut total = Int::ZERO;
                for b in bs {
                    let b = match window {
                        Some(w) => b.intersect(w),
                        None => b.clone(),
                    };
                    let part = match rule {
                        Rule::Congruence { moduli, residues } => CoordBox::new(
                            b.axes
                                .iter()
                                .zip(moduli.iter().zip(residues))
                                .map(|(ax, (m, r))| residue_class(ax, m, r))
                                .collect(),
                        ),
                        _ => b,
                    };
                    total += part.len();
                }
                return Ok(total);
            }
            SetBody::Boxes(BoxUnion::Scales(sc)) => {
                let probe = SetFamily::heisenberg_scales(*sc);
                let mut total = Int::ZERO;
                for b in bs {
                    total += Int::from(probe.enumerate_in(b, budget)?.len());
                }
                return Ok(total);
            }
            SetBody::Boxes(BoxUnion::Blocks(blocks)) if blocks.len() <= 1 => {
                return Ok(blocks
                    .iter()
                    .flat_map(|k| bs.iter().map(move |b| k.intersect(b).len()))
                    .sum());
            }
            _ => {}
        }
    }
    if let SetBody::Explicit(v) = a.body() {
        return Ok(Int::from(v.iter().filter(|e| s.contains(e)).count()));
    }
    let mut hits = 0u64;
    s.for_each(budget, |x| {
        if a.contains_coords(x) {
            hits += 1;
        }
    })?;
    Ok(Int::from(hits))
}

/// A bounded weight `u : G -> [0, 1]` with values `numerator / denominator`.
pub trait Weight: Send + Sync {
    fn denominator(&self) -> u64;
    /// At most [`denominator`](Weight::denominator).
    fn numerator(&self, x: &[Int]) -> u64;
}

/// `u = num / den` everywhere.
#[derive(Clone, Copy, Debug)]
pub struct ConstWeight {
    pub num: u64,
    pub den: u64,
}

impl Weight for ConstWeight {
    fn denominator(&self) -> u64 {
        self.den
    }
    fn numerator(&self, _: &[Int]) -> u64 {
        self.num
    }
}

/// The indicator function of a coordinate predicate.
#[derive(Clone)]
pub struct IndicatorWeight {
    pub label: String,
    test: crate::sets::CoordPredicate,
}

impl IndicatorWeight {
    pub fn new(label: impl Into<String>, test: impl Fn(&[Int]) -> bool + Send + Sync + 'static) -> Self {
        IndicatorWeight {
            label: label.into(),
            test: Arc::new(test),
        }
    }
}

impl fmt::Debug for IndicatorWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IndicatorWeight({})", self.label)
    }
}

impl Weight for IndicatorWeight {
    fn denominator(&self) -> u64 {
        1
    }
    fn numerator(&self, x: &[Int]) -> u64 {
        (self.test)(x) as u64
    }
}

type CoordWeight = Arc<dyn Fn(&[Int]) -> u64 + Send + Sync>;

/// Any function with values in `{0, .., den} / den`; numerators are clamped.
#[derive(Clone)]
pub struct FnWeight {
    pub den: u64,
    f: CoordWeight,
}

impl FnWeight {
    pub fn new(den: u64, f: impl Fn(&[Int]) -> u64 + Send + Sync + 'static) -> Self {
        FnWeight { den, f: Arc::new(f) }
    }
}

impl Weight for FnWeight {
    fn denominator(&self) -> u64 {
        self.den
    }
    fn numerator(&self, x: &[Int]) -> u64 {
        (self.f)(x).min(self.den)
    }
}

/// A pseudo-random weight: a seeded hash of the coordinates reduced to
/// `{0, .., den}`.
#[derive(Clone, Copy, Debug)]
pub struct HashWeight {
    pub seed: u64,
    pub den: u64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Weight for HashWeight {
    fn denominator(&self) -> u64 {
        self.den
    }
    fn numerator(&self, x: &[Int]) -> u64 {
        let mut h = self.seed;
        for c in x {
            let v = match c {
                Int::Small(v) => *v as u64,
                Int::Big(b) => {
                    use std::hash::{Hash, Hasher};
                    let mut s = std::collections::hash_map::DefaultHasher::new();
                    b.hash(&mut s);
                    s.finish()
                }
            };
            h = splitmix(h ^ v);
        }
        h % (self.den + 1)
    }
}

/// `(1/|Φ_N|) Σ_{g ∈ Φ_N} u(φ(g))`, with `φ` the identity when `compose` is `None`.
pub fn weighted_average(u: &dyn Weight, f: &FolnerFamily, n: u32, compose: Option<&PhiMap>) -> Result<Rational> {
    Ok(weighted_averages(&[u], f, n, compose)?.remove(0))
}

/// Several averages over the same set in one pass.
pub fn weighted_averages(
    us: &[&dyn Weight],
    f: &FolnerFamily,
    n: u32,
    compose: Option<&PhiMap>,
) -> Result<Vec<Rational>> {
    let s = f.set(n)?;
    let size = nonempty(&s)?;
    let g = f.group();
    let mut sums = vec![0u128; us.len()];
    s.for_each(f.budget(), |x| match compose {
        Some(phi) => {
            let y = phi.apply(g, x);
            for (acc, u) in sums.iter_mut().zip(us) {
                *acc += u.numerator(&y) as u128;
            }
        }
        None => {
            for (acc, u) in sums.iter_mut().zip(us) {
                *acc += u.numerator(x) as u128;
            }
        }
    })?;
    Ok(sums
        .into_iter()
        .zip(us)
        .map(|(sum, u)| {
            let num = Int::from(num_bigint::BigInt::from(sum));
            Rational::new(num, &size * Int::from(u.denominator()))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;
    use crate::groups::GroupDescriptor;

    fn z_boxes() -> FolnerFamily {
        box_folner(
            &GroupDescriptor::lattice(1),
            SideSchedule::Linear { factor: 1 },
            IntervalConvention::OneTo,
        )
        .unwrap()
    }

    #[test]
    fn integer_box_defect() {
        let z = GroupDescriptor::lattice(1);
        let f = z_boxes();
        let d = folner_defect(&f, 100, &[z.element([1]).unwrap(), z.identity()], Side::Left).unwrap();
        assert_eq!(d[0], (2, 100));
        assert_eq!(d[1], (0, 1));
        // explicit path agrees
        let e = invert_folner(&invert_folner(&f).with_budget(1000));
        let d2 = folner_defect(&e, 100, &[z.element([1]).unwrap()], Side::Right).unwrap();
        assert_eq!(d2[0], (2, 100));
    }

    #[test]
    fn heisenberg_defect_small_and_decreasing() {
        let h = GroupDescriptor::heisenberg();
        let f = nilpotent_square_folner(&h).unwrap();
        let g = h.element([1, 0, 0]).unwrap();
        let d: Vec<Rational> = (1..=3)
            .map(|n| folner_defect(&f, n, std::slice::from_ref(&g), Side::Left).unwrap().remove(0))
            .collect();
        assert!(d[2] < (3, 10));
        assert!(d[1] > d[2]);
    }

    #[test]
    fn density_of_evens() {
        let z = GroupDescriptor::lattice(1);
        let evens = SetFamily::congruence(&z, &[2], &[0], None).unwrap();
        let t = density_along(&evens, &z_boxes(), 10..=10).unwrap();
        assert_eq!(t.rows[0].density, (1, 2));
        let empty = SetFamily::empty(&z);
        let t = density_along(&empty, &z_boxes(), 1..=5).unwrap();
        assert!(t.rows.iter().all(|r| r.density == (0, 1)));
    }

    #[test]
    fn density_fast_path_matches_enumeration() {
        let z2 = GroupDescriptor::lattice(2);
        let f = box_folner(&z2, SideSchedule::Linear { factor: 1 }, IntervalConvention::CenteredHalfOpen).unwrap();
        let a = SetFamily::congruence(&z2, &[3, 2], &[1, 1], None).unwrap();
        let c = SetFamily::custom(
            &z2,
            "x = 1 mod 3, y odd",
            |x| x[0].rem_euclid(&Int::from(3)) == Int::ONE && x[1].is_odd(),
            None,
        )
        .unwrap();
        for n in 1..12 {
            let fast = density_along(&a, &f, n..=n).unwrap();
            let slow = density_along(&c, &f, n..=n).unwrap();
            assert_eq!(fast.rows, slow.rows);
        }
    }

    #[test]
    fn averages() {
        let h = GroupDescriptor::heisenberg();
        let psi = nilpotent_square_folner(&h).unwrap();
        let phi = index_shift(&psi, 1);
        let one = ConstWeight { num: 1, den: 1 };
        assert_eq!(weighted_average(&one, &psi, 2, None).unwrap(), (1, 1));
        let even = IndicatorWeight::new("x1 even", |x| x[0].is_even());
        assert_eq!(weighted_average(&even, &psi, 3, Some(&PhiMap::Square)).unwrap(), (1, 1));
        assert_eq!(weighted_average(&even, &phi, 3, None).unwrap(), (1, 2));
        let w = HashWeight { seed: 7, den: 10 };
        let a = weighted_average(&w, &psi, 2, None).unwrap();
        assert!(a > (0, 1) && a < (1, 1));
    }
}
