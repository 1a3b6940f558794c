//! Følner families, their diagnostics, square-absolute-continuity
//! certificates and the thinning construction.
//!
//! A [`FolnerFamily`] is a generator `N -> Φ_N` for `N >= 1`. Sets are kept as
//! disjoint unions of coordinate boxes whenever possible, so cardinalities and
//! membership stay exact and cheap even when the sets are far too large to
//! enumerate; operations that must enumerate refuse above the family's budget.

mod diagnostics;
mod sac;
mod thin;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{Coords, GroupDescriptor, GroupElement, GroupError, GroupKind};
use crate::int::Int;
use crate::rational::Rational;
use crate::region::{CoordBox, StridedInterval};
use crate::DEFAULT_BUDGET;

pub use diagnostics::{
    density_along, folner_defect, weighted_average, weighted_averages, ConstWeight, DensityRow,
    DensityTable, FnWeight, HashWeight, IndicatorWeight, Side, Weight,
};
pub use sac::{
    check_average_chain, sac_certificate, sampled_inclusion, AverageChainRecord, PhiMap,
    SacCertificate, SacRecord, SampledInclusion,
};
pub use thin::{
    decompose_lines, thin_folner, LineClass, LineDecomposition, QSchedule, ThinConfig, ThinResult,
    ThinStage, ThinStep,
};

/// How `Φ_N` is stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FolnerRepr {
    /// Pairwise disjoint boxes.
    Boxes(Vec<CoordBox>),
    /// Sorted, deduplicated elements.
    Explicit(Vec<GroupElement>),
}

/// One member `Φ_N` of a family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FolnerSet {
    pub index: u32,
    kind: GroupKind,
    repr: FolnerRepr,
}

impl FolnerSet {
    pub fn from_boxes(index: u32, kind: GroupKind, boxes: Vec<CoordBox>) -> Self {
        let boxes = boxes.into_iter().filter(|b| !b.is_empty()).collect();
        FolnerSet {
            index,
            kind,
            repr: FolnerRepr::Boxes(boxes),
        }
    }

    pub fn from_elements(index: u32, kind: GroupKind, mut elems: Vec<GroupElement>) -> Self {
        elems.sort();
        elems.dedup();
        FolnerSet {
            index,
            kind,
            repr: FolnerRepr::Explicit(elems),
        }
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn repr(&self) -> &FolnerRepr {
        &self.repr
    }

    pub fn len(&self) -> Int {
        match &self.repr {
            FolnerRepr::Boxes(bs) => bs.iter().map(CoordBox::len).sum(),
            FolnerRepr::Explicit(v) => Int::from(v.len()),
        }
    }

    pub fn is_empty(&self) -> bool {
        match &self.repr {
            FolnerRepr::Boxes(bs) => bs.iter().all(CoordBox::is_empty),
            FolnerRepr::Explicit(v) => v.is_empty(),
        }
    }

    pub fn contains(&self, x: &GroupElement) -> bool {
        x.kind() == self.kind && self.contains_coords(x.coords())
    }

    pub fn contains_coords(&self, x: &[Int]) -> bool {
        match &self.repr {
            FolnerRepr::Boxes(bs) => bs.iter().any(|b| b.contains(x)),
            FolnerRepr::Explicit(v) => v.binary_search_by(|e| e.coords().cmp(x)).is_ok(),
        }
    }

    pub fn check_budget(&self, budget: u64) -> Result<()> {
        let n = self.len();
        if n > Int::from(budget) {
            return Err(Error::budget(format!("Φ_{}", self.index), n, budget));
        }
        Ok(())
    }

    /// Visits every element's coordinates; box members in lexicographic order
    /// box by box.
    pub fn for_each<F: FnMut(&[Int])>(&self, budget: u64, mut f: F) -> Result<()> {
        self.check_budget(budget)?;
        match &self.repr {
            FolnerRepr::Boxes(bs) => {
                for b in bs {
                    for c in b.iter() {
                        f(&c);
                    }
                }
            }
            FolnerRepr::Explicit(v) => v.iter().for_each(|e| f(e.coords())),
        }
        Ok(())
    }

    /// All elements, sorted.
    pub fn elements(&self, budget: u64) -> Result<Vec<GroupElement>> {
        let mut out = Vec::new();
        self.for_each(budget, |c| out.push(GroupElement::from_parts(self.kind, c.iter().cloned().collect())))?;
        if matches!(self.repr, FolnerRepr::Boxes(_)) {
            out.sort();
        }
        Ok(out)
    }

    /// A uniformly random element. Panics on an empty set.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupElement {
        match &self.repr {
            FolnerRepr::Explicit(v) => v[rng.gen_range(0..v.len())].clone(),
            FolnerRepr::Boxes(bs) => {
                let total = self.len();
                let mut pick = uniform_below(rng, &total);
                for b in bs {
                    let l = b.len();
                    if pick < l {
                        let c: Coords = b
                            .axes
                            .iter()
                            .map(|a| &a.start + &a.step * uniform_below(rng, &a.count))
                            .collect();
                        return GroupElement::from_parts(self.kind, c);
                    }
                    pick -= l;
                }
                unreachable!("sample drawn below the total size")
            }
        }
    }
}

/// Uniform integer in `[0, n)`.
fn uniform_below<R: Rng + ?Sized>(rng: &mut R, n: &Int) -> Int {
    use num_bigint::RandBigInt;
    match n.to_u64() {
        Some(m) => Int::from(rng.gen_range(0..m)),
        None => Int::from(rng.gen_bigint_range(&num_bigint::BigInt::from(0), &n.to_bigint())),
    }
}

/// Side lengths `side(N)` of a box family.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SideSchedule {
    /// `side(N) = factor * N`.
    Linear { factor: u64 },
    /// `side(N) = sides[N - 1]`.
    Table { sides: Vec<Int> },
}

impl SideSchedule {
    pub fn side(&self, n: u32) -> Result<Int> {
        match self {
            SideSchedule::Linear { factor } => Ok(Int::from(*factor) * Int::from(n)),
            SideSchedule::Table { sides } => sides.get(n as usize - 1).cloned().ok_or_else(|| {
                Error::InvalidInput(format!("side table has {} entries, asked for N = {n}", sides.len()))
            }),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SideSchedule::Linear { factor: 0 } => Err(Error::EmptySchedule),
            SideSchedule::Table { sides } if sides.is_empty() => Err(Error::EmptySchedule),
            SideSchedule::Table { sides } if sides.iter().any(|s| !s.is_positive()) => {
                Err(Error::InvalidInput("box sides must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

/// The two interval conventions: `[1, n]` and `(-n, n]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntervalConvention {
    OneTo,
    CenteredHalfOpen,
}

impl IntervalConvention {
    pub fn interval(&self, n: Int) -> StridedInterval {
        match self {
            IntervalConvention::OneTo => StridedInterval::one_to(n),
            IntervalConvention::CenteredHalfOpen => StridedInterval::centered(n),
        }
    }
}

/// The parameters of the nilpotent squaring family.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NilpotentParams {
    pub d: Vec<u32>,
    pub b: Vec<Int>,
    pub gamma: Vec<usize>,
    pub c: Vec<Int>,
    /// `prod c_i^{-d_i}`.
    pub eta: Rational,
}

impl NilpotentParams {
    /// Half-side `c_i^{(N-1) d_i}` of axis `i` of `Ψ_N`.
    pub fn half_side(&self, i: usize, n: u32) -> Int {
        self.c[i].pow((n - 1) * self.d[i])
    }
}

/// Runs the weighted-degree recursion on the squaring polynomials.
pub fn nilpotent_params(g: &GroupDescriptor) -> Result<NilpotentParams> {
    if !g.kind().is_torsion_free() {
        return Err(GroupError::NotTorsionFree(g.kind()).into());
    }
    let polys = g.square_polys();
    let s = polys.len();
    let mut d: Vec<u32> = Vec::with_capacity(s);
    let mut b = Vec::with_capacity(s);
    let mut gamma = Vec::with_capacity(s);
    for (i, p) in polys.iter().enumerate() {
        gamma.push(p.term_count());
        if i == 0 || p.is_zero() {
            d.push(1);
            b.push(Int::ZERO);
            continue;
        }
        let weight = |e: &Vec<u32>| -> u32 { e.iter().zip(&d).map(|(k, w)| k * w).sum() };
        let top = p.terms().map(|(e, _)| weight(e)).max().unwrap_or(0);
        let bi = p
            .terms()
            .filter(|(e, _)| weight(e) == top)
            .map(|(_, c)| c.abs())
            .max()
            .unwrap_or(Int::ZERO);
        d.push(top.max(1));
        b.push(bi);
    }
    let c: Vec<Int> = gamma
        .iter()
        .zip(&b)
        .map(|(&gm, bi)| bi * Int::from(gm) + 2)
        .collect();
    let denom: Int = c.iter().zip(&d).map(|(ci, &di)| ci.pow(di)).product();
    Ok(NilpotentParams {
        d,
        b,
        gamma,
        c,
        eta: Rational::new(Int::ONE, denom),
    })
}

/// A subgroup given by a membership rule, for restriction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Subgroup {
    Whole,
    /// `{x : m_i | x_i for all i}` in a lattice.
    Congruence { moduli: Vec<Int> },
}

impl Subgroup {
    /// The index `[G : H]`.
    pub fn index(&self) -> Int {
        match self {
            Subgroup::Whole => Int::ONE,
            Subgroup::Congruence { moduli } => moduli.iter().product(),
        }
    }

    pub fn contains_coords(&self, x: &[Int]) -> bool {
        match self {
            Subgroup::Whole => true,
            Subgroup::Congruence { moduli } => {
                moduli.iter().zip(x).all(|(m, v)| v.rem_euclid(m).is_zero())
            }
        }
    }

    /// Generators `m_i e_i`.
    pub fn generators(&self, g: &GroupDescriptor) -> Vec<GroupElement> {
        match self {
            Subgroup::Whole => (0..g.dim()).map(|i| g.basis(i)).collect(),
            Subgroup::Congruence { moduli } => moduli
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    let mut c: Coords = std::iter::repeat_n(Int::ZERO, g.dim()).collect();
                    c[i] = m.clone();
                    g.element_unchecked(c)
                })
                .collect(),
        }
    }

    fn restrict_box(&self, b: &CoordBox) -> CoordBox {
        match self {
            Subgroup::Whole => b.clone(),
            Subgroup::Congruence { moduli } => CoordBox::new(
                b.axes
                    .iter()
                    .zip(moduli)
                    .map(|(a, m)| match a.last() {
                        Some(last) => {
                            let lo = a.start.div_ceil(m) * m;
                            let hi = last.div_floor(m) * m;
                            let count = (&hi - &lo).div_floor(m) + 1;
                            a.intersect(&StridedInterval::new(lo, m.clone(), count))
                        }
                        None => StridedInterval::empty(),
                    })
                    .collect(),
            ),
        }
    }
}

/// Right translations `N -> g_N`.
#[derive(Clone)]
pub struct ShiftSchedule {
    label: String,
    f: Arc<dyn Fn(u32) -> GroupElement + Send + Sync>,
}

impl ShiftSchedule {
    pub fn new(label: impl Into<String>, f: impl Fn(u32) -> GroupElement + Send + Sync + 'static) -> Self {
        ShiftSchedule {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn constant(g: GroupElement) -> Self {
        let label = format!("constant {g}");
        ShiftSchedule::new(label, move |_| g.clone())
    }

    pub fn shift(&self, n: u32) -> GroupElement {
        (self.f)(n)
    }
}

impl fmt::Debug for ShiftSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ShiftSchedule({})", self.label)
    }
}

/// Which construction a family came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyTag {
    Box,
    NilpotentSquare,
    Thinned,
    Restricted,
    Shifted,
    Coset,
    Inverted,
    IndexShift,
}

#[derive(Clone, Debug)]
enum FamilyKind {
    Box {
        schedule: SideSchedule,
        convention: IntervalConvention,
        stride: Int,
    },
    NilpotentSquare(NilpotentParams),
    Thinned(Arc<Vec<FolnerSet>>),
    Restricted {
        inner: Box<FolnerFamily>,
        subgroup: Subgroup,
    },
    Shifted {
        inner: Box<FolnerFamily>,
        shifts: ShiftSchedule,
    },
    Coset {
        inner: Box<FolnerFamily>,
        reps: Vec<GroupElement>,
    },
    Inverted {
        inner: Box<FolnerFamily>,
    },
    IndexShift {
        inner: Box<FolnerFamily>,
        offset: u32,
    },
}

/// A generator `N -> Φ_N` (`N >= 1`) of finite subsets of a group.
#[derive(Clone, Debug)]
pub struct FolnerFamily {
    group: GroupDescriptor,
    kind: FamilyKind,
    budget: u64,
}

fn lattice_like(g: &GroupDescriptor) -> bool {
    matches!(g.kind(), GroupKind::Lattice { .. })
}

/// Boxes `prod [1, side(N)]` or `prod (-side(N), side(N)]` in a lattice. In a
/// finite vector group each side is truncated to `[0, min(side, p) - 1]`.
pub fn box_folner(
    g: &GroupDescriptor,
    schedule: SideSchedule,
    convention: IntervalConvention,
) -> Result<FolnerFamily> {
    box_folner_scaled(g, schedule, convention, Int::ONE)
}

/// Like [`box_folner`] with every coordinate multiplied by `stride`.
pub fn box_folner_scaled(
    g: &GroupDescriptor,
    schedule: SideSchedule,
    convention: IntervalConvention,
    stride: Int,
) -> Result<FolnerFamily> {
    if !g.is_abelian() || !g.kind().is_torsion_free() && stride != Int::ONE {
        return Err(Error::InvalidInput(format!(
            "box families need a lattice or finite vector group, got {}",
            g.kind()
        )));
    }
    if !stride.is_positive() {
        return Err(Error::InvalidInput("stride must be positive".into()));
    }
    schedule.validate()?;
    Ok(FolnerFamily {
        group: g.clone(),
        kind: FamilyKind::Box {
            schedule,
            convention,
            stride,
        },
        budget: DEFAULT_BUDGET,
    })
}

/// The squaring-compatible family `Ψ_N = prod (-c_i^{(N-1)d_i}, c_i^{(N-1)d_i}]`.
pub fn nilpotent_square_folner(g: &GroupDescriptor) -> Result<FolnerFamily> {
    let params = nilpotent_params(g)?;
    Ok(FolnerFamily {
        group: g.clone(),
        kind: FamilyKind::NilpotentSquare(params),
        budget: DEFAULT_BUDGET,
    })
}

/// `Ψ_N = Φ_N ∩ H`.
pub fn restrict_folner(f: &FolnerFamily, subgroup: Subgroup) -> Result<FolnerFamily> {
    if let Subgroup::Congruence { moduli } = &subgroup {
        if !lattice_like(&f.group) {
            return Err(Error::InvalidInput("congruence subgroups are defined for lattices".into()));
        }
        if moduli.len() != f.group.dim() || moduli.iter().any(|m| !m.is_positive()) {
            return Err(Error::InvalidInput(
                "congruence subgroup needs one positive modulus per coordinate".into(),
            ));
        }
    }
    Ok(f.wrap(FamilyKind::Restricted {
        inner: Box::new(f.clone()),
        subgroup,
    }))
}

/// `Ψ_N = Φ_N g_N`.
pub fn shift_folner(f: &FolnerFamily, shifts: ShiftSchedule) -> FolnerFamily {
    f.wrap(FamilyKind::Shifted {
        inner: Box::new(f.clone()),
        shifts,
    })
}

/// `Ψ_N = Φ_N^{-1}`.
pub fn invert_folner(f: &FolnerFamily) -> FolnerFamily {
    f.wrap(FamilyKind::Inverted {
        inner: Box::new(f.clone()),
    })
}

/// `Ψ_N = Φ_{N + offset}`.
pub fn index_shift(f: &FolnerFamily, offset: u32) -> FolnerFamily {
    f.wrap(FamilyKind::IndexShift {
        inner: Box::new(f.clone()),
        offset,
    })
}

/// `Φ_N = ⊔ β_i + Φ̃_N` over coset representatives of `2G`.
pub fn coset_folner(g: &GroupDescriptor, inner: &FolnerFamily, reps: Vec<GroupElement>) -> Result<FolnerFamily> {
    if !g.is_abelian() {
        return Err(GroupError::NotAbelian(g.kind()).into());
    }
    if inner.group != *g {
        return Err(GroupError::GroupMismatch {
            expected: g.kind(),
            found: inner.group.kind(),
        }
        .into());
    }
    if reps.is_empty() {
        return Err(Error::InvalidInput("no coset representatives".into()));
    }
    for r in &reps {
        if r.kind() != g.kind() {
            return Err(GroupError::GroupMismatch {
                expected: g.kind(),
                found: r.kind(),
            }
            .into());
        }
    }
    let mut sorted = reps.clone();
    sorted.sort();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateElement(w[0].clone()));
    }
    Ok(inner.wrap(FamilyKind::Coset {
        inner: Box::new(inner.clone()),
        reps,
    }))
}

/// A family built from a precomputed finite prefix `Φ_1, .., Φ_K`.
pub(crate) fn prefix_family(g: &GroupDescriptor, sets: Vec<FolnerSet>, budget: u64) -> FolnerFamily {
    FolnerFamily {
        group: g.clone(),
        kind: FamilyKind::Thinned(Arc::new(sets)),
        budget,
    }
}

fn in_doubled(kind: GroupKind, a: &StridedInterval) -> bool {
    match kind {
        GroupKind::FiniteVector { .. } => true,
        _ => a.is_empty() || a.start.is_even() && (a.count <= Int::ONE || a.step.is_even()),
    }
}

impl FolnerFamily {
    fn wrap(&self, kind: FamilyKind) -> FolnerFamily {
        FolnerFamily {
            group: self.group.clone(),
            kind,
            budget: self.budget,
        }
    }

    pub fn group(&self) -> &GroupDescriptor {
        &self.group
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn tag(&self) -> FamilyTag {
        match &self.kind {
            FamilyKind::Box { .. } => FamilyTag::Box,
            FamilyKind::NilpotentSquare(_) => FamilyTag::NilpotentSquare,
            FamilyKind::Thinned(_) => FamilyTag::Thinned,
            FamilyKind::Restricted { .. } => FamilyTag::Restricted,
            FamilyKind::Shifted { .. } => FamilyTag::Shifted,
            FamilyKind::Coset { .. } => FamilyTag::Coset,
            FamilyKind::Inverted { .. } => FamilyTag::Inverted,
            FamilyKind::IndexShift { .. } => FamilyTag::IndexShift,
        }
    }

    pub fn nilpotent_params(&self) -> Option<&NilpotentParams> {
        match &self.kind {
            FamilyKind::NilpotentSquare(p) => Some(p),
            _ => None,
        }
    }

    /// Largest valid index, for families known only on a finite prefix.
    pub fn max_index(&self) -> Option<u32> {
        match &self.kind {
            FamilyKind::Thinned(v) => Some(v.len() as u32),
            FamilyKind::Restricted { inner, .. }
            | FamilyKind::Shifted { inner, .. }
            | FamilyKind::Coset { inner, .. }
            | FamilyKind::Inverted { inner } => inner.max_index(),
            FamilyKind::IndexShift { inner, offset } => inner.max_index().map(|m| m.saturating_sub(*offset)),
            FamilyKind::Box {
                schedule: SideSchedule::Table { sides },
                ..
            } => Some(sides.len() as u32),
            _ => None,
        }
    }

    /// A short human-readable description.
    pub fn label(&self) -> String {
        match &self.kind {
            FamilyKind::Box {
                schedule,
                convention,
                stride,
            } => format!("box({schedule:?}, {convention:?}, stride {stride})"),
            FamilyKind::NilpotentSquare(p) => {
                format!("nilpotent-square(d = {:?}, c = {:?}, eta = {})", p.d, p.c, p.eta)
            }
            FamilyKind::Thinned(v) => format!("thinned({} steps)", v.len()),
            FamilyKind::Restricted { inner, subgroup } => format!("{} ∩ {subgroup:?}", inner.label()),
            FamilyKind::Shifted { inner, shifts } => format!("{} · {}", inner.label(), shifts.label),
            FamilyKind::Coset { inner, reps } => format!("{} cosets of {}", reps.len(), inner.label()),
            FamilyKind::Inverted { inner } => format!("({})^-1", inner.label()),
            FamilyKind::IndexShift { inner, offset } => format!("{}[N + {offset}]", inner.label()),
        }
    }

    /// `|Φ_N|`, without enumerating when the set is a union of boxes.
    pub fn size(&self, n: u32) -> Result<Int> {
        Ok(self.set(n)?.len())
    }

    /// Materializes `Φ_N` (as boxes when possible).
    pub fn set(&self, n: u32) -> Result<FolnerSet> {
        if n == 0 {
            return Err(Error::InvalidInput("Følner indices start at 1".into()));
        }
        let kind = self.group.kind();
        match &self.kind {
            FamilyKind::Box {
                schedule,
                convention,
                stride,
            } => {
                let side = schedule.side(n)?;
                let axis = match kind {
                    GroupKind::FiniteVector { p, .. } => {
                        StridedInterval::range(Int::ZERO, side.min_of(&Int::from(p)) - 1)
                    }
                    _ => {
                        let a = convention.interval(side);
                        StridedInterval::new(&a.start * stride, &a.step * stride, a.count)
                    }
                };
                Ok(FolnerSet::from_boxes(n, kind, vec![CoordBox::new(vec![axis; self.group.dim()])]))
            }
            FamilyKind::NilpotentSquare(p) => {
                let axes = (0..p.c.len())
                    .map(|i| StridedInterval::centered(p.half_side(i, n)))
                    .collect();
                Ok(FolnerSet::from_boxes(n, kind, vec![CoordBox::new(axes)]))
            }
            FamilyKind::Thinned(v) => v.get(n as usize - 1).cloned().ok_or_else(|| {
                Error::InvalidInput(format!("thinned family has {} steps, asked for N = {n}", v.len()))
            }),
            FamilyKind::IndexShift { inner, offset } => {
                let mut s = inner.set(n + offset)?;
                s.index = n;
                Ok(s)
            }
            FamilyKind::Restricted { inner, subgroup } => {
                let s = inner.set(n)?;
                Ok(match s.repr {
                    FolnerRepr::Boxes(bs) => {
                        FolnerSet::from_boxes(n, kind, bs.iter().map(|b| subgroup.restrict_box(b)).collect())
                    }
                    FolnerRepr::Explicit(v) => FolnerSet::from_elements(
                        n,
                        kind,
                        v.into_iter().filter(|e| subgroup.contains_coords(e.coords())).collect(),
                    ),
                })
            }
            FamilyKind::Shifted { inner, shifts } => {
                let s = inner.set(n)?;
                let g = shifts.shift(n);
                self.group.check(&g)?;
                self.map_set(n, &s, |x| self.group.mul_coords(x, g.coords()), |b| {
                    Some(b.translate(g.coords()))
                })
            }
            FamilyKind::Inverted { inner } => {
                let s = inner.set(n)?;
                self.map_set(n, &s, |x| self.group.inv_coords(x), |b| Some(b.negate()))
            }
            FamilyKind::Coset { inner, reps } => self.coset_set(n, inner, reps),
        }
    }

    /// Applies a bijection elementwise, using the box form `on_box` in a lattice.
    fn map_set(
        &self,
        n: u32,
        s: &FolnerSet,
        on_elem: impl Fn(&[Int]) -> Coords,
        on_box: impl Fn(&CoordBox) -> Option<CoordBox>,
    ) -> Result<FolnerSet> {
        let kind = self.group.kind();
        if let (true, FolnerRepr::Boxes(bs)) = (lattice_like(&self.group), &s.repr) {
            if let Some(out) = bs.iter().map(&on_box).collect::<Option<Vec<_>>>() {
                return Ok(FolnerSet::from_boxes(n, kind, out));
            }
        }
        let mut out = Vec::new();
        s.for_each(self.budget, |x| out.push(self.group.element_unchecked(on_elem(x))))?;
        Ok(FolnerSet::from_elements(n, kind, out))
    }

    fn coset_set(&self, n: u32, inner: &FolnerFamily, reps: &[GroupElement]) -> Result<FolnerSet> {
        let s = inner.set(n)?;
        let kind = self.group.kind();
        match (&s.repr, lattice_like(&self.group)) {
            (FolnerRepr::Boxes(bs), true) => {
                if !bs.iter().all(|b| b.axes.iter().all(|a| in_doubled(kind, a))) {
                    return Err(Error::InvalidInput(format!("inner set at N = {n} is not inside 2G")));
                }
                let mut blocks: Vec<(usize, CoordBox)> = Vec::new();
                for (i, r) in reps.iter().enumerate() {
                    for b in bs {
                        blocks.push((i, b.translate(r.coords())));
                    }
                }
                for (x, (i, a)) in blocks.iter().enumerate() {
                    for (j, b) in &blocks[x + 1..] {
                        if !a.intersect(b).is_empty() {
                            return Err(Error::CosetOverlap {
                                n,
                                first: *i,
                                second: *j,
                            });
                        }
                    }
                }
                Ok(FolnerSet::from_boxes(n, kind, blocks.into_iter().map(|(_, b)| b).collect()))
            }
            _ => {
                let inner_elems = s.elements(self.budget)?;
                let doubled = |x: &[Int]| match kind {
                    GroupKind::FiniteVector { .. } => true,
                    _ => x.iter().all(Int::is_even),
                };
                if !inner_elems.iter().all(|e| doubled(e.coords())) {
                    return Err(Error::InvalidInput(format!("inner set at N = {n} is not inside 2G")));
                }
                let mut out = Vec::with_capacity(inner_elems.len() * reps.len());
                let mut owner = std::collections::HashMap::new();
                for (i, r) in reps.iter().enumerate() {
                    for e in &inner_elems {
                        let y = self.group.element_unchecked(self.group.mul_coords(r.coords(), e.coords()));
                        if let Some(&j) = owner.get(&y) {
                            return Err(Error::CosetOverlap { n, first: j, second: i });
                        }
                        owner.insert(y.clone(), i);
                        out.push(y);
                    }
                }
                Ok(FolnerSet::from_elements(n, kind, out))
            }
        }
    }
}
