//! A symbolic shift system over a group, evaluated lazily on finite windows,
//! and the greedy extraction of a product-set witness from an approximate
//! progression `(a, x₁, x₂)`.
//!
//! Points of `{0,1}^G` are evaluated coordinatewise; the action is
//! `(T_h x)(g) = x(g h)`, so that `T_{h₁} T_{h₂} = T_{h₁ h₂}`.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::groups::{GroupDescriptor, GroupElement, GroupKind};
use crate::int::Int;
use crate::rational::Rational;
use crate::region::{CoordBox, StridedInterval};
use crate::sets::SetFamily;
use crate::sumsets::{verify_witness, Order, ShiftSide, VerificationReport, Witness};

/// A point of `{0,1}^G`.
#[derive(Clone, Debug)]
pub enum Point {
    /// The indicator function of a set.
    Indicator(SetFamily),
    /// `T_by base`.
    Translate { base: Arc<Point>, by: GroupElement },
    /// Finitely many listed values, `default` elsewhere.
    Table {
        values: BTreeMap<GroupElement, bool>,
        default: bool,
    },
}

impl Point {
    pub fn eval(&self, g: &GroupDescriptor, x: &GroupElement) -> bool {
        match self {
            Point::Indicator(a) => a.contains(x),
            Point::Translate { base, by } => {
                let y = g.element_unchecked(g.mul_coords(x.coords(), by.coords()));
                base.eval(g, &y)
            }
            Point::Table { values, default } => values.get(x).copied().unwrap_or(*default),
        }
    }

    /// `T_h` of this point. Nested translates are merged using
    /// `T_h T_k = T_{hk}`.
    pub fn translate(&self, g: &GroupDescriptor, h: &GroupElement) -> Point {
        match self {
            Point::Translate { base, by } => Point::Translate {
                base: base.clone(),
                by: g.element_unchecked(g.mul_coords(h.coords(), by.coords())),
            },
            other => Point::Translate {
                base: Arc::new(other.clone()),
                by: h.clone(),
            },
        }
    }
}

/// The orbit closure setting of a set `A`: the base point `a = 1_A`.
#[derive(Clone, Debug)]
pub struct SymbolicSystem {
    group: GroupDescriptor,
    a: Point,
}

impl SymbolicSystem {
    pub fn new(a: &SetFamily) -> Self {
        SymbolicSystem {
            group: a.group().clone(),
            a: Point::Indicator(a.clone()),
        }
    }

    pub fn group(&self) -> &GroupDescriptor {
        &self.group
    }

    pub fn base_point(&self) -> &Point {
        &self.a
    }

    /// `(T_h x)(g)`.
    pub fn eval_translate(&self, x: &Point, h: &GroupElement, at: &GroupElement) -> bool {
        let y = self.group.element_unchecked(self.group.mul_coords(at.coords(), h.coords()));
        x.eval(&self.group, &y)
    }
}

/// Elements with `|x|_inf <= r`, sorted by norm and then lexicographically.
/// For finite vector groups coordinates are the representatives in `[0, p)`.
pub fn graded_ball(g: &GroupDescriptor, r: u64) -> Vec<GroupElement> {
    let axis = match g.kind() {
        GroupKind::FiniteVector { p, .. } => StridedInterval::range(Int::ZERO, Int::from(r.min(p - 1))),
        _ => StridedInterval::range(-Int::from(r), Int::from(r)),
    };
    let b = CoordBox::new(vec![axis; g.dim()]);
    let mut out: Vec<GroupElement> = b.iter().map(|c| g.element_unchecked(c)).collect();
    out.sort_by(|x, y| x.linf_norm().cmp(&y.linf_norm()).then_with(|| x.cmp(y)));
    out
}

/// The first `n` elements of the graded lexicographic enumeration.
pub fn graded_prefix(g: &GroupDescriptor, n: usize) -> Vec<GroupElement> {
    let mut r = 0u64;
    loop {
        let ball = graded_ball(g, r);
        let full = match g.kind() {
            GroupKind::FiniteVector { p, .. } => r + 1 >= p,
            _ => false,
        };
        if ball.len() >= n || full {
            return ball.into_iter().take(n).collect();
        }
        r += 1;
    }
}

/// A nested sequence of finite windows `W₁ ⊂ W₂ ⊂ ...`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Exhaustion {
    windows: Vec<Vec<GroupElement>>,
}

impl Exhaustion {
    /// `W_n` = the first `n` elements of the graded enumeration, `n <= depth`.
    pub fn graded(g: &GroupDescriptor, depth: usize) -> Self {
        let all = graded_prefix(g, depth);
        Exhaustion {
            windows: (1..=all.len()).map(|n| all[..n].to_vec()).collect(),
        }
    }

    /// `W_n` = the ball of radius `n`, `1 <= n <= depth`.
    pub fn balls(g: &GroupDescriptor, depth: u64) -> Self {
        Exhaustion {
            windows: (1..=depth).map(|r| graded_ball(g, r)).collect(),
        }
    }

    pub fn depth(&self) -> usize {
        self.windows.len()
    }

    pub fn window(&self, n: usize) -> &[GroupElement] {
        &self.windows[n - 1]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Distance {
    /// `2^-n` for the largest `n` with agreement on `W_n`; `1` without
    /// agreement on `W₁`; `0` with agreement on every evaluated window.
    pub value: Rational,
    pub agreement_depth: usize,
    /// Agreement reached the last evaluated window.
    pub capped: bool,
}

pub fn cylinder_distance(g: &GroupDescriptor, x: &Point, y: &Point, exh: &Exhaustion) -> Distance {
    let mut depth = 0;
    for n in 1..=exh.depth() {
        if exh.window(n).iter().all(|h| x.eval(g, h) == y.eval(g, h)) {
            depth = n;
        } else {
            break;
        }
    }
    let capped = depth == exh.depth();
    let value = if capped {
        Rational::zero()
    } else {
        Rational::new(1, 1) / Rational::from_int(Int::from(2).pow(depth as u32))
    };
    Distance {
        value,
        agreement_depth: depth,
        capped,
    }
}

/// Up to `count` elements `g` of `domain`, in lexicographic order, with
/// `a(h g) = x₁(h)` and `x₁(h g) = x₂(h)` for every `h` in `window`.
pub fn find_approach(
    sys: &SymbolicSystem,
    x1: &Point,
    x2: &Point,
    window: &[GroupElement],
    domain: &[GroupElement],
    count: usize,
) -> Vec<GroupElement> {
    let g = &sys.group;
    let expect: Vec<(bool, bool)> = window.iter().map(|h| (x1.eval(g, h), x2.eval(g, h))).collect();
    let mut dom = domain.to_vec();
    dom.sort();
    dom.dedup();
    let hits: Vec<GroupElement> = dom
        .par_iter()
        .filter(|cand| {
            window.iter().zip(&expect).all(|(h, &(e1, e2))| {
                sys.eval_translate(&sys.a, cand, h) == e1 && sys.eval_translate(x1, cand, h) == e2
            })
        })
        .cloned()
        .collect();
    hits.into_iter().take(count).collect()
}

/// A cylinder set `{x : x(c) = v for every listed (c, v)}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cylinder {
    pub fixed: Vec<(GroupElement, bool)>,
}

impl Cylinder {
    /// `{x : x(c) = 1}`.
    pub fn at(c: GroupElement) -> Self {
        Cylinder {
            fixed: vec![(c, true)],
        }
    }

    /// Whether `T_h x` lies in the cylinder.
    pub fn holds(&self, sys: &SymbolicSystem, x: &Point, h: &GroupElement) -> bool {
        self.fixed.iter().all(|(c, v)| sys.eval_translate(x, h, c) == *v)
    }
}

/// A condition checked when extending `B`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Constraint {
    /// `T_b a ∈ E`.
    BaseInE,
    /// `T_{b_m b} a ∈ F` for the earlier element at position `m`.
    PairInF { with: usize },
    /// `T_b x₁ ∈ F`, which keeps later extensions possible.
    LookaheadInF,
    /// `b` already occurs in `B`.
    Distinct,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub step: usize,
    pub chosen: GroupElement,
    /// Candidates rejected before this one at this step.
    pub rejected: usize,
    pub constraints: Vec<Constraint>,
}

/// Why an extraction stopped short of `k` elements.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Blocking {
    pub step: usize,
    pub candidates: usize,
    /// The constraint that rejected the most candidates.
    pub constraint: Constraint,
    pub rejected_by_e: usize,
    pub rejected_by_pair: usize,
    pub rejected_by_lookahead: usize,
    pub rejected_as_duplicate: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Extraction {
    pub b: Vec<GroupElement>,
    pub trace: Vec<TraceStep>,
    pub blocked: Option<Blocking>,
}

/// Greedily builds `B = (b_1, ..., b_k)` from `candidates`, taking at each
/// step the first candidate with `T_b a ∈ E`, `T_{b_m b} a ∈ F` for every
/// earlier `b_m`, and `T_b x₁ ∈ F`.
pub fn greedy_extract(
    sys: &SymbolicSystem,
    x1: &Point,
    candidates: &[GroupElement],
    e: &Cylinder,
    f: &Cylinder,
    k: usize,
) -> Extraction {
    let g = &sys.group;
    let mut b: Vec<GroupElement> = Vec::new();
    let mut trace = Vec::new();
    while b.len() < k {
        let step = b.len() + 1;
        let (mut by_e, mut by_pair, mut by_look, mut by_dup) = (0, 0, 0, 0);
        let mut chosen = None;
        for cand in candidates {
            if b.contains(cand) {
                by_dup += 1;
                continue;
            }
            if !e.holds(sys, &sys.a, cand) {
                by_e += 1;
                continue;
            }
            let pairs_ok = b.iter().all(|bm| {
                let p = g.element_unchecked(g.mul_coords(bm.coords(), cand.coords()));
                f.holds(sys, &sys.a, &p)
            });
            if !pairs_ok {
                by_pair += 1;
                continue;
            }
            if !f.holds(sys, x1, cand) {
                by_look += 1;
                continue;
            }
            chosen = Some(cand.clone());
            break;
        }
        match chosen {
            Some(c) => {
                let mut constraints = vec![Constraint::BaseInE];
                constraints.extend((0..b.len()).map(|m| Constraint::PairInF { with: m }));
                constraints.push(Constraint::LookaheadInF);
                trace.push(TraceStep {
                    step,
                    chosen: c.clone(),
                    rejected: by_e + by_pair + by_look + by_dup,
                    constraints,
                });
                b.push(c);
            }
            None => {
                let counts = [
                    (by_e, Constraint::BaseInE),
                    (by_pair, Constraint::PairInF { with: b.len().saturating_sub(1) }),
                    (by_look, Constraint::LookaheadInF),
                    (by_dup, Constraint::Distinct),
                ];
                let constraint = counts
                    .iter()
                    .max_by_key(|(n, _)| *n)
                    .map(|(_, c)| c.clone())
                    .expect("non-empty");
                return Extraction {
                    b,
                    trace,
                    blocked: Some(Blocking {
                        step,
                        candidates: candidates.len(),
                        constraint,
                        rejected_by_e: by_e,
                        rejected_by_pair: by_pair,
                        rejected_by_lookahead: by_look,
                        rejected_as_duplicate: by_dup,
                    }),
                };
            }
        }
    }
    Extraction {
        b,
        trace,
        blocked: None,
    }
}

/// Windows for [`end_to_end_extract`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExtractConfig {
    pub k: usize,
    /// Shifts `t` tried, giving `F = {x : x(t) = 1}`.
    pub t_window: Vec<GroupElement>,
    /// Translations `s` tried, giving `x₁ = T_s a` and `x₂ = T_s x₁`.
    pub s_window: Vec<GroupElement>,
    /// Window on which approach conditions are tested.
    pub approach_window: Vec<GroupElement>,
    /// Elements searched for approaching `g`.
    pub domain: Vec<GroupElement>,
    pub approach_count: usize,
}

impl ExtractConfig {
    /// All windows as graded balls of the given radii.
    pub fn balls(g: &GroupDescriptor, k: usize, t_radius: u64, s_radius: u64, window_radius: u64, domain_radius: u64) -> Self {
        ExtractConfig {
            k,
            t_window: graded_ball(g, t_radius),
            s_window: graded_ball(g, s_radius),
            approach_window: graded_ball(g, window_radius),
            domain: graded_ball(g, domain_radius),
            approach_count: usize::MAX,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExtractAttempt {
    pub t: GroupElement,
    pub s: GroupElement,
    pub approach_found: usize,
    pub extracted: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtractOutcome {
    pub witness: Witness,
    pub s: GroupElement,
    pub approach: Vec<GroupElement>,
    pub extraction: Extraction,
    pub report: VerificationReport,
    pub attempts: Vec<ExtractAttempt>,
}

/// Extracts a verified witness `t, B` with `t·(B⋖B) ⊂ A` and `B ⊂ A`.
///
/// For each `t` and then each `s` (in enumeration order) the approach set of
/// `(a, T_s a, T_{s²} a)` is searched in the domain and a greedy extraction is
/// run on it with `E = {x(e) = 1}` and `F = {x(t) = 1}`. Only a witness that
/// passes [`verify_witness`] is returned; if none does, the error lists how
/// far every attempt got.
pub fn end_to_end_extract(a: &SetFamily, cfg: &ExtractConfig) -> Result<ExtractOutcome> {
    let g = a.group();
    if cfg.k == 0 {
        return Err(Error::InvalidInput("witness size k must be positive".into()));
    }
    for x in cfg.t_window.iter().chain(&cfg.s_window).chain(&cfg.approach_window).chain(&cfg.domain) {
        g.check(x)?;
    }
    let sys = SymbolicSystem::new(a);
    let e = Cylinder::at(g.identity());
    let mut attempts = Vec::new();
    for t in &cfg.t_window {
        let f = Cylinder::at(t.clone());
        for s in &cfg.s_window {
            let x1 = sys.a.translate(g, s);
            let x2 = x1.translate(g, s);
            let approach = find_approach(&sys, &x1, &x2, &cfg.approach_window, &cfg.domain, cfg.approach_count);
            let extraction = if approach.len() >= cfg.k {
                greedy_extract(&sys, &x1, &approach, &e, &f, cfg.k)
            } else {
                Extraction {
                    b: Vec::new(),
                    trace: Vec::new(),
                    blocked: None,
                }
            };
            attempts.push(ExtractAttempt {
                t: t.clone(),
                s: s.clone(),
                approach_found: approach.len(),
                extracted: extraction.b.len(),
            });
            if extraction.b.len() < cfg.k {
                continue;
            }
            let mut w = Witness::new(g, t.clone(), extraction.b.clone(), ShiftSide::LeftShift, Order::Increasing)?
                .with_b_in_target(true);
            let report = verify_witness(a, &w)?;
            if report.passed {
                w.verified_pairs = report.pairs_checked;
                return Ok(ExtractOutcome {
                    witness: w,
                    s: s.clone(),
                    approach,
                    extraction,
                    report,
                    attempts,
                });
            }
        }
    }
    let best = attempts.iter().map(|x| x.extracted).max().unwrap_or(0);
    Err(Error::NoWitness(format!(
        "{} attempts, longest extraction {} of {}",
        attempts.len(),
        best,
        cfg.k
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn z(v: i64) -> GroupElement {
        GroupDescriptor::lattice(1).element([v]).unwrap()
    }

    fn z_class(m: i64, r: i64, lo: i64, hi: i64) -> SetFamily {
        let g = GroupDescriptor::lattice(1);
        let w = CoordBox::new(vec![StridedInterval::range(lo.into(), hi.into())]);
        SetFamily::congruence(&g, &[m], &[r], Some(w)).unwrap()
    }

    fn table(vals: &[i64]) -> Point {
        Point::Table {
            values: vals.iter().map(|&v| (z(v), true)).collect(),
            default: false,
        }
    }

    #[test]
    fn graded_order() {
        let g = GroupDescriptor::lattice(1);
        let p: Vec<i64> = graded_prefix(&g, 5).iter().map(|x| x.coord(0).to_i64().unwrap()).collect();
        assert_eq!(p, vec![0, -1, 1, -2, 2]);
        let h = GroupDescriptor::heisenberg();
        assert_eq!(graded_prefix(&h, 27).len(), 27);
        assert_eq!(graded_ball(&h, 1).len(), 27);
        let f = GroupDescriptor::finite_vector(3, 2).unwrap();
        assert_eq!(graded_prefix(&f, 100).len(), 9);
    }

    #[test]
    fn distance_examples() {
        let g = GroupDescriptor::lattice(1);
        let exh = Exhaustion::balls(&g, 6);
        let x = table(&[0, 5]);
        let y = table(&[0, -4]);
        let d = cylinder_distance(&g, &x, &y, &exh);
        assert_eq!(d.agreement_depth, 3);
        assert_eq!(d.value, Rational::new(1, 8));
        assert_eq!(cylinder_distance(&g, &x, &x, &exh).value, Rational::zero());
        assert!(cylinder_distance(&g, &x, &x, &exh).capped);
        assert_eq!(cylinder_distance(&g, &table(&[]), &table(&[0]), &exh).value, Rational::one());
    }

    #[test]
    fn approach_examples() {
        let g = GroupDescriptor::lattice(1);
        let a = z_class(3, 0, -500, 500);
        let sys = SymbolicSystem::new(&a);
        let w: Vec<GroupElement> = (-9..=9).map(z).collect();
        let dom: Vec<GroupElement> = (-30..=30).map(z).collect();
        let x = sys.base_point().clone();
        let got = find_approach(&sys, &x, &x, &w, &dom, usize::MAX);
        let expect: Vec<GroupElement> = (-30..=30).filter(|v| v % 3 == 0).map(z).collect();
        assert_eq!(got, expect);

        let all = SetFamily::window(&g, CoordBox::centered_cube(1, Int::from(1000))).unwrap();
        let sys_all = SymbolicSystem::new(&all);
        let x = sys_all.base_point().clone();
        assert_eq!(find_approach(&sys_all, &x, &x, &w, &dom, 10).len(), 10);

        // x₂ = 1_{3Z+1}: a(h+g) = a(h) forces g ≡ 0 while a(h+g) = x₂(h)
        // forces g ≡ 1, so nothing qualifies.
        let x2 = Point::Indicator(z_class(3, 1, -500, 500));
        let x = sys.base_point().clone();
        let got = find_approach(&sys, &x, &x2, &w, &dom, usize::MAX);
        let brute: Vec<GroupElement> = dom
            .iter()
            .filter(|c| {
                let c = c.coord(0).to_i64().unwrap();
                (-9..=9).all(|h: i64| {
                    let ahg = (h + c) % 3 == 0 && (h + c).abs() <= 500;
                    let ah = h % 3 == 0;
                    let x2h = (h - 1).rem_euclid(3) == 0;
                    ahg == ah && ahg == x2h
                })
            })
            .cloned()
            .collect();
        assert_eq!(got, brute);
        assert!(got.is_empty());
    }

    #[test]
    fn greedy_examples() {
        let a = z_class(3, 0, -500, 500);
        let sys = SymbolicSystem::new(&a);
        let x1 = sys.base_point().clone();
        let cands: Vec<GroupElement> = (1..=60).map(z).collect();
        let e = Cylinder::at(z(0));
        let ex = greedy_extract(&sys, &x1, &cands, &e, &e, 6);
        let vals: Vec<i64> = ex.b.iter().map(|x| x.coord(0).to_i64().unwrap()).collect();
        assert_eq!(vals, vec![3, 6, 9, 12, 15, 18]);
        assert_eq!(ex.trace.len(), 6);
        assert_eq!(ex.trace[0].rejected, 2);
        assert!(ex.blocked.is_none());

        let one = greedy_extract(&sys, &x1, &cands, &e, &e, 1);
        assert_eq!(one.b, vec![z(3)]);

        let lone = SetFamily::explicit(&GroupDescriptor::lattice(1), [z(3)]).unwrap();
        let sys = SymbolicSystem::new(&lone);
        let x1 = sys.base_point().clone();
        let ex = greedy_extract(&sys, &x1, &cands, &e, &e, 3);
        assert_eq!(ex.b, vec![z(3)]);
        let bl = ex.blocked.unwrap();
        assert_eq!(bl.step, 2);
        assert_eq!(bl.constraint, Constraint::BaseInE);
    }

    #[test]
    fn extraction_end_to_end() {
        let g = GroupDescriptor::lattice(1);
        let a = z_class(2, 0, -500, 500);
        let cfg = ExtractConfig::balls(&g, 8, 0, 2, 6, 60);
        let out = end_to_end_extract(&a, &cfg).unwrap();
        assert!(out.report.passed);
        assert_eq!(out.witness.b.len(), 8);

        let a = z_class(4, 2, -2000, 2000);
        let cfg = ExtractConfig::balls(&g, 8, 4, 4, 8, 120);
        let out = end_to_end_extract(&a, &cfg).unwrap();
        assert!(out.report.passed);
        assert_eq!(out.witness.t.coord(0).to_i64().unwrap().rem_euclid(4), 2);

        let none = ExtractConfig::balls(&g, 8, 0, 0, 6, 60);
        assert!(matches!(end_to_end_extract(&a, &none), Err(Error::NoWitness(_))));
    }

    proptest! {
        #[test]
        fn action_law(h1 in prop::array::uniform3(-5i64..5), h2 in prop::array::uniform3(-5i64..5), at in prop::array::uniform3(-5i64..5)) {
            let g = GroupDescriptor::heisenberg();
            let a = SetFamily::congruence(&g, &[2, 3, 2], &[0, 1, 1], None).unwrap();
            let x = Point::Indicator(a);
            let (h1, h2, at) = (g.element(h1).unwrap(), g.element(h2).unwrap(), g.element(at).unwrap());
            let lhs = x.translate(&g, &h2).translate(&g, &h1);
            let nested = Point::Translate { base: Arc::new(Point::Translate { base: Arc::new(x.clone()), by: h2.clone() }), by: h1.clone() };
            let rhs = x.translate(&g, &g.mul(&h1, &h2).unwrap());
            prop_assert_eq!(lhs.eval(&g, &at), rhs.eval(&g, &at));
            prop_assert_eq!(nested.eval(&g, &at), rhs.eval(&g, &at));
        }
    }
}
