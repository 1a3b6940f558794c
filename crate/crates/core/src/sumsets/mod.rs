//! Product sets `{b_i b_j}`, shifted-product witnesses and their verification,
//! witness search, and finite-slice emptiness certificates for the Heisenberg
//! scale sets.
//!
//! Shifted membership is fixed once for the whole crate: `x ∈ t⁻¹A` is tested
//! as `t·x ∈ A` ([`ShiftSide::LeftShift`]) and `x ∈ A·t⁻¹` as `x·t ∈ A`
//! ([`ShiftSide::RightShift`]).

mod search;
mod slices;

use std::collections::BTreeSet;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::groups::{GroupDescriptor, GroupElement, GroupKind};
use crate::int::Int;
use crate::sets::{HeisenbergScales, SetFamily};

pub use search::{search_witness, SearchConfig, SearchOutcome, SearchStats};
pub use slices::{
    certify_slice, scan_slice, validate_parity_filter, verify_conjugated_slice,
    verify_full_scale_slice, verify_odd_scale_slice, BSource, EmptinessCertificate, JobSummary,
    ParityFilter, ParityValidation, ProductForm, SliceConfig, SliceHit, SliceScan, Strategy,
    SLICE_BUDGET,
};

/// Which index pairs `(i, j)` contribute `b_i b_j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Order {
    /// `i < j`.
    Increasing,
    /// `i > j`.
    Decreasing,
    /// `i != j`.
    Both,
}

impl Order {
    /// Products `b_i b_j` contributed when `b_j` (at position `j`) joins the
    /// earlier elements `earlier`.
    pub(crate) fn new_products(
        self,
        g: &GroupDescriptor,
        earlier: &[GroupElement],
        b: &GroupElement,
    ) -> Vec<GroupElement> {
        let mut out = Vec::with_capacity(earlier.len() * 2);
        for e in earlier {
            if matches!(self, Order::Increasing | Order::Both) {
                out.push(g.element_unchecked(g.mul_coords(e.coords(), b.coords())));
            }
            if matches!(self, Order::Decreasing | Order::Both) {
                out.push(g.element_unchecked(g.mul_coords(b.coords(), e.coords())));
            }
        }
        out
    }
}

/// How the shift `t` is applied to a product before testing membership.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftSide {
    /// Products lie in `t⁻¹A`: `t·x ∈ A`.
    LeftShift,
    /// Products lie in `A·t⁻¹`: `x·t ∈ A`.
    RightShift,
}

impl ShiftSide {
    pub fn apply(self, g: &GroupDescriptor, t: &GroupElement, x: &GroupElement) -> GroupElement {
        let c = match self {
            ShiftSide::LeftShift => g.mul_coords(t.coords(), x.coords()),
            ShiftSide::RightShift => g.mul_coords(x.coords(), t.coords()),
        };
        g.element_unchecked(c)
    }
}

fn check_elements(g: &GroupDescriptor, b: &[GroupElement]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for x in b {
        g.check(x)?;
        if !seen.insert(x) {
            return Err(Error::DuplicateElement(x.clone()));
        }
    }
    Ok(())
}

/// The set `{b_i b_j}` over the index pairs selected by `order`, sorted and
/// deduplicated.
pub fn product_set(g: &GroupDescriptor, b: &[GroupElement], order: Order) -> Result<Vec<GroupElement>> {
    check_elements(g, b)?;
    let mut out = BTreeSet::new();
    for j in 0..b.len() {
        out.extend(order.new_products(g, &b[..j], &b[j]));
    }
    Ok(out.into_iter().collect())
}

/// A finite witness `t, B = (b_1, ..., b_k)` for a shifted product-set inclusion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub group: GroupDescriptor,
    pub t: GroupElement,
    pub b: Vec<GroupElement>,
    pub side: ShiftSide,
    pub order: Order,
    /// Number of pair products checked when the witness was last verified.
    pub verified_pairs: u64,
    /// Whether the witness also claims `B ⊂ A`.
    pub b_in_target: bool,
}

#[derive(Serialize, Deserialize)]
struct WitnessRepr {
    group: GroupKind,
    t: Vec<Int>,
    b: Vec<Vec<Int>>,
    side: ShiftSide,
    order: Order,
    verified_pairs: u64,
    b_in_target: bool,
}

impl Serialize for Witness {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        WitnessRepr {
            group: self.group.kind(),
            t: self.t.coords().to_vec(),
            b: self.b.iter().map(|x| x.coords().to_vec()).collect(),
            side: self.side,
            order: self.order,
            verified_pairs: self.verified_pairs,
            b_in_target: self.b_in_target,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Witness {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = WitnessRepr::deserialize(d)?;
        let group = GroupDescriptor::new(r.group).map_err(D::Error::custom)?;
        let t = group.element(r.t).map_err(D::Error::custom)?;
        let b = r
            .b
            .into_iter()
            .map(|c| group.element(c))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        Ok(Witness {
            group,
            t,
            b,
            side: r.side,
            order: r.order,
            verified_pairs: r.verified_pairs,
            b_in_target: r.b_in_target,
        })
    }
}

impl Witness {
    pub fn new(
        group: &GroupDescriptor,
        t: GroupElement,
        b: Vec<GroupElement>,
        side: ShiftSide,
        order: Order,
    ) -> Result<Self> {
        group.check(&t)?;
        check_elements(group, &b)?;
        Ok(Witness {
            group: group.clone(),
            t,
            b,
            side,
            order,
            verified_pairs: 0,
            b_in_target: false,
        })
    }

    pub fn with_b_in_target(mut self, flag: bool) -> Self {
        self.b_in_target = flag;
        self
    }

    /// Index pairs `(i, j)` whose product `b_i b_j` must land in the target.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let k = self.b.len();
        let mut out = Vec::new();
        for i in 0..k {
            for j in 0..k {
                let keep = match self.order {
                    Order::Increasing => i < j,
                    Order::Decreasing => i > j,
                    Order::Both => i != j,
                };
                if keep {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// A pair product that missed the target.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairFailure {
    pub i: usize,
    pub j: usize,
    pub product: GroupElement,
    pub shifted: GroupElement,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub passed: bool,
    pub pairs_checked: u64,
    pub failures: Vec<PairFailure>,
    /// Positions of elements of `B` outside the target, when `B ⊂ A` is claimed.
    pub outside_target: Vec<usize>,
    /// First repeated element of `B`, if any.
    pub duplicate: Option<GroupElement>,
}

/// Checks every required pair product of `w` against `a`, and `B ⊂ a` when
/// the witness claims it. Failures are collected, not raised.
pub fn verify_witness(a: &SetFamily, w: &Witness) -> Result<VerificationReport> {
    let g = &w.group;
    if a.group() != g {
        return Err(crate::groups::GroupError::GroupMismatch {
            expected: a.group().kind(),
            found: g.kind(),
        }
        .into());
    }
    g.check(&w.t)?;
    let mut seen = BTreeSet::new();
    let mut duplicate = None;
    for x in &w.b {
        g.check(x)?;
        if !seen.insert(x) && duplicate.is_none() {
            duplicate = Some(x.clone());
        }
    }
    let mut failures = Vec::new();
    let mut pairs_checked = 0u64;
    for (i, j) in w.pairs() {
        let product = g.element_unchecked(g.mul_coords(w.b[i].coords(), w.b[j].coords()));
        let shifted = w.side.apply(g, &w.t, &product);
        pairs_checked += 1;
        if !a.contains(&shifted) {
            failures.push(PairFailure {
                i,
                j,
                product,
                shifted,
            });
        }
    }
    let outside_target: Vec<usize> = if w.b_in_target {
        (0..w.b.len()).filter(|&i| !a.contains(&w.b[i])).collect()
    } else {
        Vec::new()
    };
    Ok(VerificationReport {
        passed: failures.is_empty() && outside_target.is_empty() && duplicate.is_none(),
        pairs_checked,
        failures,
        outside_target,
        duplicate,
    })
}

/// Moves a witness between the two shift sides by conjugation.
///
/// A left-shift witness `t·(B′B′) ⊂ A` becomes the right-shift witness
/// `B = tB′t⁻¹` with `(BB) t ⊂ A`, since `(tb′_i t⁻¹)(tb′_j t⁻¹) t = t b′_i b′_j`.
/// A right-shift witness goes back through `B′ = t⁻¹Bt`. The claim `B ⊂ A` is
/// kept only for abelian groups, where the transform is the identity on `B`.
pub fn conjugate_transform(w: &Witness) -> Result<Witness> {
    let g = &w.group;
    g.check(&w.t)?;
    let t_inv = g.element_unchecked(g.inv_coords(w.t.coords()));
    let (left, right, side) = match w.side {
        ShiftSide::LeftShift => (&w.t, &t_inv, ShiftSide::RightShift),
        ShiftSide::RightShift => (&t_inv, &w.t, ShiftSide::LeftShift),
    };
    let b = w
        .b
        .iter()
        .map(|x| {
            let lx = g.mul_coords(left.coords(), x.coords());
            g.element_unchecked(g.mul_coords(&lx, right.coords()))
        })
        .collect();
    Ok(Witness {
        group: g.clone(),
        t: w.t.clone(),
        b,
        side,
        order: w.order,
        verified_pairs: w.verified_pairs,
        b_in_target: w.b_in_target && g.is_abelian(),
    })
}

/// `⋃_N (2^N + [N]′) × [N]′ × [N²]′` in the Heisenberg group, `[N]′` the odd
/// integers of `[1, N]`.
pub fn odd_scale_family() -> SetFamily {
    SetFamily::heisenberg_scales(HeisenbergScales::odd())
}

/// `⋃_N (2^N + [N]) × [N] × [N²]` in the Heisenberg group.
pub fn full_scale_family() -> SetFamily {
    SetFamily::heisenberg_scales(HeisenbergScales::full())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::{CoordBox, StridedInterval};

    fn z(v: i64) -> GroupElement {
        GroupDescriptor::lattice(1).element([v]).unwrap()
    }

    fn h3(c: [i64; 3]) -> GroupElement {
        GroupDescriptor::heisenberg().element(c).unwrap()
    }

    fn z_window(lo: i64, hi: i64, m: i64, r: i64) -> SetFamily {
        let g = GroupDescriptor::lattice(1);
        let w = CoordBox::new(vec![StridedInterval::range(lo.into(), hi.into())]);
        SetFamily::congruence(&g, &[m], &[r], Some(w)).unwrap()
    }

    #[test]
    fn integer_pair_sums() {
        let g = GroupDescriptor::lattice(1);
        let b = vec![z(2), z(4), z(6)];
        let s = product_set(&g, &b, Order::Increasing).unwrap();
        assert_eq!(s, vec![z(6), z(8), z(10)]);
        assert_eq!(product_set(&g, &b, Order::Decreasing).unwrap(), s);
        assert_eq!(product_set(&g, &b, Order::Both).unwrap(), s);
        assert!(product_set(&g, &[z(1)], Order::Both).unwrap().is_empty());
        assert!(matches!(
            product_set(&g, &[z(1), z(1)], Order::Both),
            Err(Error::DuplicateElement(_))
        ));
    }

    #[test]
    fn heisenberg_orders_differ() {
        let g = GroupDescriptor::heisenberg();
        let b = vec![h3([1, 0, 0]), h3([0, 1, 0])];
        assert_eq!(product_set(&g, &b, Order::Increasing).unwrap(), vec![h3([1, 1, 1])]);
        assert_eq!(product_set(&g, &b, Order::Decreasing).unwrap(), vec![h3([1, 1, 0])]);
        assert_eq!(
            product_set(&g, &b, Order::Both).unwrap(),
            vec![h3([1, 1, 0]), h3([1, 1, 1])]
        );
    }

    #[test]
    fn verify_examples() {
        let g = GroupDescriptor::lattice(1);
        let a = z_window(-100, 100, 3, 0);
        let w = Witness::new(&g, z(0), vec![z(3), z(6), z(9), z(12)], ShiftSide::LeftShift, Order::Increasing)
            .unwrap();
        let r = verify_witness(&a, &w).unwrap();
        assert!(r.passed);
        assert_eq!(r.pairs_checked, 6);

        let odd = z_window(-100, 100, 2, 1);
        let w = Witness::new(&g, z(1), vec![z(1), z(3), z(5), z(7)], ShiftSide::LeftShift, Order::Increasing)
            .unwrap();
        assert!(verify_witness(&odd, &w).unwrap().passed);
        let w0 = Witness { t: z(0), ..w };
        let r = verify_witness(&odd, &w0).unwrap();
        assert!(!r.passed);
        assert_eq!(r.failures.len(), 6);

        let h = GroupDescriptor::heisenberg();
        let all = SetFamily::window(&h, CoordBox::centered_cube(3, Int::from(50))).unwrap();
        let w = Witness::new(&h, h3([1, -2, 3]), vec![h3([0, 1, 0]), h3([2, 2, 2]), h3([-1, 0, 4])], ShiftSide::RightShift, Order::Both)
            .unwrap();
        let r = verify_witness(&all, &w).unwrap();
        assert!(r.passed);
        assert_eq!(r.pairs_checked, 6);
    }

    #[test]
    fn containment_claim_is_checked() {
        let g = GroupDescriptor::lattice(1);
        let even = z_window(-100, 100, 2, 0);
        let w = Witness::new(&g, z(0), vec![z(1), z(3)], ShiftSide::LeftShift, Order::Increasing).unwrap();
        assert!(verify_witness(&even, &w).unwrap().passed);
        let r = verify_witness(&even, &w.clone().with_b_in_target(true)).unwrap();
        assert!(!r.passed);
        assert_eq!(r.outside_target, vec![0, 1]);
    }

    #[test]
    fn witness_round_trip() {
        let h = GroupDescriptor::heisenberg();
        let w = Witness::new(&h, h3([1, 0, -5]), vec![h3([0, 1, 0]), h3([3, 3, 3])], ShiftSide::LeftShift, Order::Decreasing)
            .unwrap()
            .with_b_in_target(true);
        let s = serde_json::to_string(&w).unwrap();
        let back: Witness = serde_json::from_str(&s).unwrap();
        assert_eq!(back, w);
        assert!(serde_json::from_str::<Witness>(&s.replace("\"3\"", "\"x\"")).is_err());
    }

    #[test]
    fn conjugation_examples() {
        let h = GroupDescriptor::heisenberg();
        let w = Witness::new(&h, h3([1, 0, 0]), vec![h3([0, 1, 0])], ShiftSide::LeftShift, Order::Increasing).unwrap();
        let c = conjugate_transform(&w).unwrap();
        assert_eq!(c.b, vec![h3([0, 1, 1])]);
        assert_eq!(c.side, ShiftSide::RightShift);
        assert_eq!(conjugate_transform(&c).unwrap(), w);

        let g = GroupDescriptor::lattice(2);
        let e = |a, b| g.element([a, b]).unwrap();
        let w = Witness::new(&g, e(4, -1), vec![e(1, 2), e(3, 4)], ShiftSide::LeftShift, Order::Both).unwrap();
        assert_eq!(conjugate_transform(&w).unwrap().b, w.b);
    }

    #[test]
    fn scale_family_membership() {
        let odd = odd_scale_family();
        let full = full_scale_family();
        assert!(odd.contains(&h3([9, 3, 5])));
        assert!(!odd.contains(&h3([9, 2, 5])));
        assert!(full.contains(&h3([9, 2, 5])));
        assert!(full.contains(&h3([2050, 11, 121])));
        assert!(!full.contains(&h3([2050, 12, 121])));
        assert_eq!(HeisenbergScales::full().locate(&Int::from(2050)), Some(11));
    }
}
