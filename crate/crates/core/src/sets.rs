//! Membership oracles over a group: explicit finite sets, unions of
//! coordinate boxes and coordinate predicates.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{Coords, GroupDescriptor, GroupElement, GroupKind};
use crate::int::Int;
use crate::region::{CoordBox, StridedInterval};

/// A coordinate predicate usable as a membership rule.
pub type CoordPredicate = Arc<dyn Fn(&[Int]) -> bool + Send + Sync>;

/// The scale families of the Heisenberg examples: at scale `N >= 1` the block
/// `(2^N + I_N) x I_N x I_{N^2}` with `I_M = [1, M]`, or its odd part when
/// `odd` is set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeisenbergScales {
    pub odd: bool,
    pub min_scale: u32,
    pub max_scale: Option<u32>,
}

impl HeisenbergScales {
    /// Blocks with every coordinate odd.
    pub fn odd() -> Self {
        HeisenbergScales {
            odd: true,
            min_scale: 1,
            max_scale: None,
        }
    }

    pub fn full() -> Self {
        HeisenbergScales {
            odd: false,
            min_scale: 1,
            max_scale: None,
        }
    }

    fn side(&self, m: Int) -> StridedInterval {
        if self.odd {
            StridedInterval::odd_one_to(m)
        } else {
            StridedInterval::one_to(m)
        }
    }

    /// The block at scale `n`.
    pub fn block(&self, n: u32) -> CoordBox {
        let nn = Int::from(n);
        let shift = Int::from(2).pow(n);
        CoordBox::new(vec![
            self.side(nn.clone()).translate(&shift),
            self.side(nn.clone()),
            self.side(&nn * &nn),
        ])
    }

    fn in_range(&self, n: u32) -> bool {
        n >= self.min_scale.max(1) && self.max_scale.is_none_or(|m| n <= m)
    }

    /// The only scale whose first-coordinate range can contain `x1`:
    /// `floor(log2(x1 - 1))`, since `2^N + [1, N]` lies in `[2^N + 1, 2^{N+1}]`.
    pub fn locate(&self, x1: &Int) -> Option<u32> {
        let y = x1 - 1;
        if !y.is_positive() {
            return None;
        }
        let n = (y.bits() - 1) as u32;
        self.in_range(n).then_some(n)
    }

    pub fn contains(&self, x: &[Int]) -> bool {
        match self.locate(&x[0]) {
            Some(n) => self.block(n).contains(x),
            None => false,
        }
    }

    /// The same test on machine integers, for the hot loops of the
    /// counterexample verifiers. Valid while `N <= 40`.
    #[inline]
    pub fn contains_i64(&self, x: [i64; 3]) -> bool {
        let y = x[0] - 1;
        if y <= 0 {
            return false;
        }
        let n = 63 - y.leading_zeros();
        if !self.in_range(n) || n > 61 {
            return false;
        }
        let n64 = n as i64;
        let a = x[0] - (1i64 << n);
        let ok = |v: i64, m: i64| v >= 1 && v <= m && (!self.odd || v & 1 == 1);
        ok(a, n64) && ok(x[1], n64) && ok(x[2], n64 * n64)
    }

    /// Scales whose first-coordinate range meets `[lo, hi]`.
    fn scales_meeting(&self, lo: &Int, hi: &Int) -> Vec<u32> {
        let first = if lo <= &Int::from(3) {
            1
        } else {
            self.locate(lo).unwrap_or_else(|| ((lo - 1).bits() - 1) as u32)
        };
        let mut out = Vec::new();
        let mut n = first.max(self.min_scale).max(1);
        loop {
            if let Some(m) = self.max_scale {
                if n > m {
                    break;
                }
            }
            let start = Int::from(2).pow(n) + 1;
            if &start > hi {
                break;
            }
            out.push(n);
            n += 1;
        }
        out
    }
}

/// A union of boxes: either a finite list or one of the infinite scale families.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoxUnion {
    Blocks(Vec<CoordBox>),
    Scales(HeisenbergScales),
}

#[derive(Clone)]
pub enum Rule {
    /// Every element.
    All,
    /// `x_i = r_i (mod m_i)` for every coordinate; modulus 1 means unconstrained.
    Congruence { moduli: Vec<Int>, residues: Vec<Int> },
    Custom { label: String, test: CoordPredicate },
}

impl fmt::Debug for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::All => f.write_str("All"),
            Rule::Congruence { moduli, residues } => f
                .debug_struct("Congruence")
                .field("moduli", moduli)
                .field("residues", residues)
                .finish(),
            Rule::Custom { label, .. } => write!(f, "Custom({label})"),
        }
    }
}

impl Rule {
    fn test(&self, x: &[Int]) -> bool {
        match self {
            Rule::All => true,
            Rule::Congruence { moduli, residues } => moduli
                .iter()
                .zip(residues)
                .zip(x)
                .all(|((m, r), v)| v.rem_euclid(m) == r.rem_euclid(m)),
            Rule::Custom { test, .. } => test(x),
        }
    }
}

#[derive(Clone, Debug)]
pub enum SetBody {
    /// Sorted and deduplicated.
    Explicit(Vec<GroupElement>),
    Boxes(BoxUnion),
    /// Elements passing `rule`, intersected with `window` when given.
    Predicate { rule: Rule, window: Option<CoordBox> },
}

/// A subset of a group given by a membership oracle.
#[derive(Clone, Debug)]
pub struct SetFamily {
    group: GroupDescriptor,
    body: SetBody,
    window_hint: Option<CoordBox>,
}

impl SetFamily {
    pub fn explicit(group: &GroupDescriptor, elems: impl IntoIterator<Item = GroupElement>) -> Result<Self> {
        let mut v: Vec<GroupElement> = Vec::new();
        for e in elems {
            if e.kind() != group.kind() {
                return Err(crate::groups::GroupError::GroupMismatch {
                    expected: group.kind(),
                    found: e.kind(),
                }
                .into());
            }
            v.push(e);
        }
        v.sort();
        v.dedup();
        let hint = bounding_box(group.dim(), &v);
        Ok(SetFamily {
            group: group.clone(),
            body: SetBody::Explicit(v),
            window_hint: hint,
        })
    }

    /// Explicit set from integer tuples.
    pub fn from_coords<I, R>(group: &GroupDescriptor, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = i64>,
    {
        let elems = rows
            .into_iter()
            .map(|r| group.element(r))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        SetFamily::explicit(group, elems)
    }

    pub fn blocks(group: &GroupDescriptor, blocks: Vec<CoordBox>) -> Result<Self> {
        if let Some(b) = blocks.iter().find(|b| b.dim() != group.dim()) {
            return Err(Error::InvalidInput(format!(
                "block of dimension {} in a group with {} coordinates",
                b.dim(),
                group.dim()
            )));
        }
        Ok(SetFamily {
            group: group.clone(),
            body: SetBody::Boxes(BoxUnion::Blocks(blocks)),
            window_hint: None,
        })
    }

    /// A scale family over the Heisenberg group.
    pub fn heisenberg_scales(scales: HeisenbergScales) -> Self {
        SetFamily {
            group: GroupDescriptor::heisenberg(),
            body: SetBody::Boxes(BoxUnion::Scales(scales)),
            window_hint: None,
        }
    }

    pub fn predicate(group: &GroupDescriptor, rule: Rule, window: Option<CoordBox>) -> Result<Self> {
        if let Rule::Congruence { moduli, residues } = &rule {
            if moduli.len() != group.dim() || residues.len() != group.dim() {
                return Err(Error::InvalidInput(
                    "congruence needs one modulus and one residue per coordinate".into(),
                ));
            }
            if moduli.iter().any(|m| !m.is_positive()) {
                return Err(Error::InvalidInput("congruence moduli must be positive".into()));
            }
        }
        if let Some(w) = &window {
            if w.dim() != group.dim() {
                return Err(Error::InvalidInput("window dimension does not match the group".into()));
            }
        }
        Ok(SetFamily {
            group: group.clone(),
            window_hint: window.clone(),
            body: SetBody::Predicate { rule, window },
        })
    }

    /// `{x : x_i = r_i mod m_i}` inside an optional window.
    pub fn congruence(
        group: &GroupDescriptor,
        moduli: &[i64],
        residues: &[i64],
        window: Option<CoordBox>,
    ) -> Result<Self> {
        SetFamily::predicate(
            group,
            Rule::Congruence {
                moduli: moduli.iter().map(|&m| Int::from(m)).collect(),
                residues: residues.iter().map(|&r| Int::from(r)).collect(),
            },
            window,
        )
    }

    pub fn window(group: &GroupDescriptor, window: CoordBox) -> Result<Self> {
        SetFamily::predicate(group, Rule::All, Some(window))
    }

    pub fn custom(
        group: &GroupDescriptor,
        label: impl Into<String>,
        test: impl Fn(&[Int]) -> bool + Send + Sync + 'static,
        window: Option<CoordBox>,
    ) -> Result<Self> {
        SetFamily::predicate(
            group,
            Rule::Custom {
                label: label.into(),
                test: Arc::new(test),
            },
            window,
        )
    }

    pub fn empty(group: &GroupDescriptor) -> Self {
        SetFamily {
            group: group.clone(),
            body: SetBody::Explicit(Vec::new()),
            window_hint: None,
        }
    }

    pub fn with_window_hint(mut self, hint: CoordBox) -> Self {
        self.window_hint = Some(hint);
        self
    }

    pub fn group(&self) -> &GroupDescriptor {
        &self.group
    }

    pub fn body(&self) -> &SetBody {
        &self.body
    }

    pub fn window_hint(&self) -> Option<&CoordBox> {
        self.window_hint.as_ref()
    }

    /// Membership; elements of another group are never members.
    pub fn contains(&self, x: &GroupElement) -> bool {
        x.kind() == self.group.kind() && self.contains_coords(x.coords())
    }

    pub fn contains_coords(&self, x: &[Int]) -> bool {
        match &self.body {
            SetBody::Explicit(v) => v
                .binary_search_by(|e| e.coords().cmp(x))
                .is_ok(),
            SetBody::Boxes(BoxUnion::Blocks(bs)) => bs.iter().any(|b| b.contains(x)),
            SetBody::Boxes(BoxUnion::Scales(s)) => s.contains(x),
            SetBody::Predicate { rule, window } => {
                window.as_ref().is_none_or(|w| w.contains(x)) && rule.test(x)
            }
        }
    }

    /// Whether the set is known to be finite.
    pub fn is_finite(&self) -> bool {
        match &self.body {
            SetBody::Explicit(_) | SetBody::Boxes(BoxUnion::Blocks(_)) => true,
            SetBody::Boxes(BoxUnion::Scales(s)) => s.max_scale.is_some(),
            SetBody::Predicate { window, .. } => window.is_some(),
        }
    }

    /// All members inside `window`, in lexicographic order.
    pub fn enumerate_in(&self, window: &CoordBox, budget: u64) -> Result<Vec<GroupElement>> {
        let mk = |c: Coords| self.group.element(c).map_err(Error::from);
        let mut out = Vec::new();
        match &self.body {
            SetBody::Explicit(v) => {
                out.extend(v.iter().filter(|e| window.contains(e.coords())).cloned());
            }
            SetBody::Boxes(BoxUnion::Blocks(bs)) => {
                for b in bs {
                    let part = b.intersect(window);
                    check_budget("block ∩ window", &part.len(), budget)?;
                    for c in part.iter() {
                        out.push(mk(c)?);
                    }
                }
                out.sort();
                out.dedup();
            }
            SetBody::Boxes(BoxUnion::Scales(s)) => {
                let (lo, hi) = match (window.axes[0].first(), window.axes[0].last()) {
                    (Some(a), Some(b)) => (a.clone(), b),
                    _ => return Ok(out),
                };
                for n in s.scales_meeting(&lo, &hi) {
                    let part = s.block(n).intersect(window);
                    check_budget("scale block ∩ window", &part.len(), budget)?;
                    for c in part.iter() {
                        out.push(mk(c)?);
                    }
                }
            }
            SetBody::Predicate { rule, window: own } => {
                let w = match own {
                    Some(o) => o.intersect(window),
                    None => window.clone(),
                };
                check_budget("predicate window", &w.len(), budget)?;
                for c in w.iter() {
                    if rule.test(&c) {
                        out.push(mk(c)?);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Members inside the window hint (or all members of an explicit set).
    pub fn enumerate(&self, budget: u64) -> Result<Vec<GroupElement>> {
        match (&self.body, &self.window_hint) {
            (SetBody::Explicit(v), _) => Ok(v.clone()),
            (_, Some(w)) => self.enumerate_in(w, budget),
            (SetBody::Boxes(BoxUnion::Blocks(bs)), None) => {
                let mut out = Vec::new();
                for b in bs {
                    out.extend(self.enumerate_in(b, budget)?);
                }
                out.sort();
                out.dedup();
                Ok(out)
            }
            _ => Err(Error::InvalidInput(
                "set has no finite window to enumerate; supply one".into(),
            )),
        }
    }
}

fn check_budget(what: &str, size: &Int, budget: u64) -> Result<()> {
    if *size > Int::from(budget) {
        return Err(Error::budget(what, size.clone(), budget));
    }
    Ok(())
}

fn bounding_box(dim: usize, v: &[GroupElement]) -> Option<CoordBox> {
    let first = v.first()?;
    let mut lo: Vec<Int> = first.coords().to_vec();
    let mut hi = lo.clone();
    for e in v {
        for i in 0..dim {
            let c = e.coord(i);
            if c < &lo[i] {
                lo[i] = c.clone();
            }
            if c > &hi[i] {
                hi[i] = c.clone();
            }
        }
    }
    Some(CoordBox::new(
        lo.into_iter().zip(hi).map(|(a, b)| StridedInterval::range(a, b)).collect(),
    ))
}

/// Serializable description of a set family, used by configuration files.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SetSpec {
    Explicit {
        elements: Vec<Vec<Int>>,
    },
    Congruence {
        moduli: Vec<Int>,
        residues: Vec<Int>,
        /// Per-axis closed ranges `[lo, hi]`.
        #[serde(default)]
        window: Option<Vec<(Int, Int)>>,
    },
    Window {
        window: Vec<(Int, Int)>,
    },
    Blocks {
        blocks: Vec<Vec<(Int, Int)>>,
    },
    /// Odd-coordinate Heisenberg scale blocks.
    HeisenbergOdd {
        #[serde(default)]
        max_scale: Option<u32>,
    },
    /// Full Heisenberg scale blocks.
    HeisenbergFull {
        #[serde(default)]
        max_scale: Option<u32>,
    },
}

pub fn ranges_to_box(r: &[(Int, Int)]) -> CoordBox {
    CoordBox::new(
        r.iter()
            .map(|(a, b)| StridedInterval::range(a.clone(), b.clone()))
            .collect(),
    )
}

impl SetSpec {
    pub fn build(&self, group: &GroupDescriptor) -> Result<SetFamily> {
        let need_h3 = || -> Result<()> {
            if group.kind() != GroupKind::Heisenberg3 {
                return Err(Error::InvalidInput("scale families live in the Heisenberg group".into()));
            }
            Ok(())
        };
        match self {
            SetSpec::Explicit { elements } => {
                let elems = elements
                    .iter()
                    .map(|r| group.element(r.iter().cloned()))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                SetFamily::explicit(group, elems)
            }
            SetSpec::Congruence {
                moduli,
                residues,
                window,
            } => SetFamily::predicate(
                group,
                Rule::Congruence {
                    moduli: moduli.clone(),
                    residues: residues.clone(),
                },
                window.as_deref().map(ranges_to_box),
            ),
            SetSpec::Window { window } => SetFamily::window(group, ranges_to_box(window)),
            SetSpec::Blocks { blocks } => {
                SetFamily::blocks(group, blocks.iter().map(|b| ranges_to_box(b)).collect())
            }
            SetSpec::HeisenbergOdd { max_scale } => {
                need_h3()?;
                Ok(SetFamily::heisenberg_scales(HeisenbergScales {
                    max_scale: *max_scale,
                    ..HeisenbergScales::odd()
                }))
            }
            SetSpec::HeisenbergFull { max_scale } => {
                need_h3()?;
                Ok(SetFamily::heisenberg_scales(HeisenbergScales {
                    max_scale: *max_scale,
                    ..HeisenbergScales::full()
                }))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn h(c: [i64; 3]) -> Vec<Int> {
        c.iter().map(|&v| Int::from(v)).collect()
    }

    #[test]
    fn odd_scale_membership() {
        let s = HeisenbergScales::odd();
        assert!(s.contains(&h([9, 3, 5])));
        assert!(!s.contains(&h([9, 2, 5])));
        assert!(s.contains_i64([9, 3, 5]));
        assert!(!s.contains_i64([9, 2, 5]));
        assert_eq!(s.locate(&Int::from(2050)), Some(11));
    }

    #[test]
    fn scale_ranges_are_disjoint_and_located() {
        let s = HeisenbergScales::full();
        for n in 1..=40u32 {
            let b = s.block(n);
            let lo = b.axes[0].first().unwrap().clone();
            let hi = b.axes[0].last().unwrap();
            assert_eq!(s.locate(&lo), Some(n));
            assert_eq!(s.locate(&hi), Some(n));
        }
        assert_eq!(s.locate(&Int::from(2)), None);
    }

    #[test]
    fn enumerate_scales_in_window() {
        let a = SetFamily::heisenberg_scales(HeisenbergScales::odd());
        let w = CoordBox::new(vec![
            StridedInterval::range(Int::from(0), Int::from(20)),
            StridedInterval::range(Int::from(-5), Int::from(5)),
            StridedInterval::range(Int::from(0), Int::from(20)),
        ]);
        let got = a.enumerate_in(&w, 1 << 20).unwrap();
        let brute: Vec<_> = w
            .iter()
            .filter(|c| a.contains_coords(c))
            .collect();
        assert_eq!(got.len(), brute.len());
        assert!(got.iter().all(|e| a.contains(e)));
    }

    #[test]
    fn explicit_dedups_and_spec_round_trips() {
        let g = GroupDescriptor::lattice(1);
        let a = SetFamily::from_coords(&g, [[3], [1], [3]]).unwrap();
        assert_eq!(a.enumerate(10).unwrap().len(), 2);
        let spec = SetSpec::Congruence {
            moduli: vec![Int::from(2)],
            residues: vec![Int::ZERO],
            window: Some(vec![(Int::from(-4), Int::from(4))]),
        };
        let txt = serde_json::to_string(&spec).unwrap();
        let back: SetSpec = serde_json::from_str(&txt).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.build(&g).unwrap().enumerate(100).unwrap().len(), 5);
    }

    proptest! {
        #[test]
        fn i64_and_exact_membership_agree(x1 in -10i64..5000, x2 in -3i64..15, x3 in -3i64..200, odd in any::<bool>()) {
            let s = if odd { HeisenbergScales::odd() } else { HeisenbergScales::full() };
            prop_assert_eq!(s.contains_i64([x1, x2, x3]), s.contains(&h([x1, x2, x3])));
        }
    }
}
