//! Finite-slice checks that no shifted product of two scale-set elements lands
//! in a Heisenberg scale union.
//!
//! A slice fixes a product form (for example `(b c) t`), a finite list of `b`,
//! a finite set of scales for `c`, and the shifts `t` with `|t|_inf <= bound`.
//! Every triple is accounted for. Three evaluation strategies exist:
//!
//! * `Raw` multiplies out every triple in machine integers.
//! * `Sweep` uses that the third coordinate of `c` enters the third coordinate
//!   of the product additively and nowhere else, so the innermost loop over
//!   `c_3` collapses to an intersection of two arithmetic progressions.
//! * `Exact` multiplies out every triple in arbitrary precision. It is used
//!   automatically once a scale exceeds 40.
//!
//! The optional parity filter drops shifts whose residue class mod 2 cannot
//! send any `(b, c)` into the target. It is sound because reduction mod 2 is a
//! homomorphism onto the Heisenberg group over `Z/2`; [`validate_parity_filter`]
//! re-checks it against unfiltered enumeration anyway.

use std::collections::BTreeSet;

use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{GroupDescriptor, GroupElement};
use crate::int::Int;
use crate::sets::HeisenbergScales;

/// Largest scale handled in machine integers.
const I64_SCALE_LIMIT: u32 = 40;
/// Largest scale accepted at all: block coordinates must fit in `i64`.
const SCALE_LIMIT: u32 = 60;
/// Largest coordinate of `b` or `t` handled in machine integers.
const I64_COORD_LIMIT: i64 = 1 << 20;

/// The element tested for membership, built from `b`, `c` and the shift `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProductForm {
    /// `(b c) t`: the product `b c` lies in `A t⁻¹`.
    BcT,
    /// `t (c b)`: the product `c b` lies in `t⁻¹ A`.
    TCb,
    /// `(c b) t`: the product `c b` lies in `A t⁻¹`.
    CbT,
}

#[inline]
fn mul3(a: [i64; 3], b: [i64; 3]) -> [i64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2] + a[0] * b[1]]
}

impl ProductForm {
    #[inline]
    fn eval(self, b: [i64; 3], c: [i64; 3], t: [i64; 3]) -> [i64; 3] {
        match self {
            ProductForm::BcT => mul3(mul3(b, c), t),
            ProductForm::TCb => mul3(t, mul3(c, b)),
            ProductForm::CbT => mul3(mul3(c, b), t),
        }
    }

    fn eval_exact(self, g: &GroupDescriptor, b: &[Int], c: &[Int], t: &[Int]) -> Vec<Int> {
        let r = match self {
            ProductForm::BcT => g.mul_coords(&g.mul_coords(b, c), t),
            ProductForm::TCb => g.mul_coords(t, &g.mul_coords(c, b)),
            ProductForm::CbT => g.mul_coords(&g.mul_coords(c, b), t),
        };
        r.to_vec()
    }

    fn describe(self) -> &'static str {
        match self {
            ProductForm::BcT => "(b c) t",
            ProductForm::TCb => "t (c b)",
            ProductForm::CbT => "(c b) t",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Raw,
    Sweep,
    Exact,
    /// `Sweep` when machine integers suffice, `Exact` otherwise.
    Auto,
}

/// Where the first factor `b` ranges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum BSource {
    /// All of the given scale blocks of a scale family.
    Scales { family: HeisenbergScales, scales: Vec<u32> },
    /// The integer box `∏ [lo_i, hi_i]`, optionally without the plane `b_2 = 0`.
    Window { ranges: [(i64, i64); 3], exclude_b2_zero: bool },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceConfig {
    pub form: ProductForm,
    pub target: HeisenbergScales,
    pub b: BSource,
    pub c_family: HeisenbergScales,
    pub c_scales: Vec<u32>,
    pub t_bound: i64,
    pub parity_filter: bool,
    pub strategy: Strategy,
    /// Cap on inner-loop evaluations.
    pub budget: u64,
}

/// Default evaluation cap of the slice verifiers.
pub const SLICE_BUDGET: u64 = 4_000_000_000;

/// One triple whose product lands in the target.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SliceHit {
    pub b: GroupElement,
    pub c: GroupElement,
    pub t: GroupElement,
    pub product: GroupElement,
}

/// Counts for one unit of work: one `b` scale (if any) and one `c` scale.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct JobSummary {
    pub b_scale: Option<u32>,
    pub c_scale: u32,
    pub b_count: u64,
    pub c_count: u64,
    pub t_count: u64,
    pub triples: u64,
    pub evaluations: u64,
    pub hits: u64,
    #[serde(skip)]
    pub first_hit: Option<SliceHit>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParityFilter {
    /// Residue classes mod 2 of the shifts that are kept.
    pub kept_classes: Vec<[u8; 3]>,
    pub shifts_before: u64,
    pub shifts_after: u64,
}

/// The outcome of a slice run, violations included.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SliceScan {
    pub strategy: Strategy,
    pub parity: Option<ParityFilter>,
    pub triples: u64,
    pub evaluations: u64,
    pub hits: u64,
    pub first_hit: Option<SliceHit>,
    pub jobs: Vec<JobSummary>,
}

/// A certificate that no triple of a finite slice lands in the target.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EmptinessCertificate {
    pub statement: String,
    pub scope: String,
    pub config: SliceConfig,
    pub strategy: Strategy,
    pub parity_filter: Option<ParityFilter>,
    pub triples_examined: u64,
    pub evaluations: u64,
    pub violations: Vec<SliceHit>,
    pub jobs: Vec<JobSummary>,
}

/// `{start + k step : 0 <= k < count}` over `i64`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Ap {
    start: i64,
    step: i64,
    count: i64,
}

impl Ap {
    fn from_interval(s: &crate::region::StridedInterval) -> Ap {
        let ap = Ap {
            start: s.start.to_i64().expect("scale block fits in i64"),
            step: s.step.to_i64().expect("scale block fits in i64"),
            count: s.count.to_i64().expect("scale block fits in i64"),
        };
        ap.normalized()
    }

    fn normalized(self) -> Ap {
        if self.count <= 1 {
            Ap { step: 1, ..self }
        } else {
            self
        }
    }

    fn last(&self) -> i64 {
        self.start + (self.count - 1) * self.step
    }

    fn iter(self) -> impl Iterator<Item = i64> {
        (0..self.count).map(move |k| self.start + k * self.step)
    }

    fn residues(&self) -> Vec<u8> {
        match self.count {
            0 => vec![],
            1 => vec![self.start.rem_euclid(2) as u8],
            _ if self.step % 2 == 1 => vec![0, 1],
            _ => vec![self.start.rem_euclid(2) as u8],
        }
    }

    /// The number of `x` in `self` with `x + shift` in `other`, and the least one.
    fn shifted_overlap(&self, shift: i64, other: &Ap) -> (i64, Option<i64>) {
        if self.count <= 0 || other.count <= 0 {
            return (0, None);
        }
        let (a1, s1) = (self.start as i128, self.step as i128);
        let (a2, s2) = ((other.start - shift) as i128, other.step as i128);
        let lo = a1.max(a2);
        let hi = (self.last() as i128).min(other.last() as i128 - shift as i128);
        if lo > hi {
            return (0, None);
        }
        let e = s1.extended_gcd(&s2);
        let gcd = e.gcd;
        if (a2 - a1) % gcd != 0 {
            return (0, None);
        }
        let lcm = s1 / gcd * s2;
        let m2 = s2 / gcd;
        let k = ((a2 - a1) / gcd * e.x).rem_euclid(m2);
        let x0 = a1 + s1 * k;
        let first = lo + (x0 - lo).rem_euclid(lcm);
        if first > hi {
            return (0, None);
        }
        (((hi - first) / lcm + 1) as i64, Some(first as i64))
    }
}

fn in_range(f: &HeisenbergScales, n: u32) -> bool {
    n >= f.min_scale.max(1) && f.max_scale.is_none_or(|m| n <= m)
}

/// The allowed third coordinates of a target element with first two
/// coordinates `x1, x2`, or `None` if no target element has them.
#[inline]
fn third_axis(f: &HeisenbergScales, x1: i64, x2: i64) -> Option<Ap> {
    let y = x1 - 1;
    if y <= 0 {
        return None;
    }
    let n = 63 - y.leading_zeros();
    if n > 61 || !in_range(f, n) {
        return None;
    }
    let n = n as i64;
    let ok = |v: i64| v >= 1 && v <= n && (!f.odd || v & 1 == 1);
    if !ok(x1 - (1i64 << n)) || !ok(x2) {
        return None;
    }
    let side = n * n;
    Some(if f.odd {
        Ap { start: 1, step: 2, count: (side + 1) / 2 }.normalized()
    } else {
        Ap { start: 1, step: 1, count: side }
    })
}

fn block_aps(f: &HeisenbergScales, n: u32) -> [Ap; 3] {
    let b = f.block(n);
    [
        Ap::from_interval(&b.axes[0]),
        Ap::from_interval(&b.axes[1]),
        Ap::from_interval(&b.axes[2]),
    ]
}

fn h3(c: [i64; 3]) -> GroupElement {
    GroupDescriptor::heisenberg()
        .element(c)
        .expect("three coordinates")
}

fn hit(form: ProductForm, b: [i64; 3], c: [i64; 3], t: [i64; 3]) -> SliceHit {
    let g = GroupDescriptor::heisenberg();
    let ints = |x: [i64; 3]| x.iter().map(|&v| Int::from(v)).collect::<Vec<_>>();
    let p = form.eval_exact(&g, &ints(b), &ints(c), &ints(t));
    SliceHit {
        b: h3(b),
        c: h3(c),
        t: h3(t),
        product: g.element(p).expect("three coordinates"),
    }
}

struct Job {
    b_scale: Option<u32>,
    c_scale: u32,
    bs: Vec<[i64; 3]>,
}

fn validate(cfg: &SliceConfig) -> Result<()> {
    let bad = |m: String| Err(Error::InvalidInput(m));
    if cfg.t_bound < 0 {
        return bad(format!("shift bound {} is negative", cfg.t_bound));
    }
    if cfg.t_bound > I64_COORD_LIMIT {
        return bad(format!("shift bound {} is above {}", cfg.t_bound, I64_COORD_LIMIT));
    }
    let mut scales: Vec<u32> = cfg.c_scales.clone();
    if let BSource::Scales { scales: s, .. } = &cfg.b {
        scales.extend(s);
    }
    if let Some(&n) = scales.iter().find(|&&n| n == 0 || n > SCALE_LIMIT) {
        return bad(format!("scale {n} is outside [1, {SCALE_LIMIT}]"));
    }
    if let BSource::Window { ranges, .. } = &cfg.b {
        for &(lo, hi) in ranges {
            if lo.abs() > I64_COORD_LIMIT || hi.abs() > I64_COORD_LIMIT {
                return bad(format!("window bound beyond {I64_COORD_LIMIT}"));
            }
        }
    }
    Ok(())
}

fn b_list_window(ranges: &[(i64, i64); 3], exclude_b2_zero: bool) -> Vec<[i64; 3]> {
    let mut out = Vec::new();
    for b1 in ranges[0].0..=ranges[0].1 {
        for b2 in ranges[1].0..=ranges[1].1 {
            if exclude_b2_zero && b2 == 0 {
                continue;
            }
            for b3 in ranges[2].0..=ranges[2].1 {
                out.push([b1, b2, b3]);
            }
        }
    }
    out
}

fn b_list_block(f: &HeisenbergScales, n: u32) -> Vec<[i64; 3]> {
    let [a1, a2, a3] = block_aps(f, n);
    let mut out = Vec::new();
    for x1 in a1.iter() {
        for x2 in a2.iter() {
            for x3 in a3.iter() {
                out.push([x1, x2, x3]);
            }
        }
    }
    out
}

fn jobs(cfg: &SliceConfig) -> Vec<Job> {
    let mut c_scales = cfg.c_scales.clone();
    c_scales.sort_unstable();
    c_scales.dedup();
    let mut out = Vec::new();
    match &cfg.b {
        BSource::Scales { family, scales } => {
            let mut s = scales.clone();
            s.sort_unstable();
            s.dedup();
            for &n in &s {
                let bs = if in_range(family, n) { b_list_block(family, n) } else { Vec::new() };
                for &m in &c_scales {
                    out.push(Job { b_scale: Some(n), c_scale: m, bs: bs.clone() });
                }
            }
        }
        BSource::Window { ranges, exclude_b2_zero } => {
            let bs = b_list_window(ranges, *exclude_b2_zero);
            for &m in &c_scales {
                out.push(Job { b_scale: None, c_scale: m, bs: bs.clone() });
            }
        }
    }
    out
}

/// Residue classes mod 2 present in a list of triples.
fn residues_of(xs: &[[i64; 3]]) -> BTreeSet<[u8; 3]> {
    xs.iter()
        .map(|x| [x[0].rem_euclid(2) as u8, x[1].rem_euclid(2) as u8, x[2].rem_euclid(2) as u8])
        .collect()
}

fn residues_of_block(aps: &[Ap; 3]) -> BTreeSet<[u8; 3]> {
    let mut out = BTreeSet::new();
    for &r1 in &aps[0].residues() {
        for &r2 in &aps[1].residues() {
            for &r3 in &aps[2].residues() {
                out.insert([r1, r2, r3]);
            }
        }
    }
    out
}

/// Shift classes mod 2 for which some `b`, `c` and target residues match.
fn kept_classes(cfg: &SliceConfig, jobs: &[Job]) -> Vec<[u8; 3]> {
    let mut rb = BTreeSet::new();
    let mut rc = BTreeSet::new();
    for j in jobs {
        rb.extend(residues_of(&j.bs));
        if in_range(&cfg.c_family, j.c_scale) {
            rc.extend(residues_of_block(&block_aps(&cfg.c_family, j.c_scale)));
        }
    }
    // Block residues are the same at every scale from 2 on, so the first few
    // scales in range give the residues of the whole union.
    let mut ra = BTreeSet::new();
    let first = cfg.target.min_scale.max(1);
    for n in first..first + 4 {
        if in_range(&cfg.target, n) && n <= SCALE_LIMIT {
            ra.extend(residues_of_block(&block_aps(&cfg.target, n)));
        }
    }
    let mut kept = Vec::new();
    for r in 0..8u8 {
        let t = [(r >> 2 & 1) as i64, (r >> 1 & 1) as i64, (r & 1) as i64];
        let ok = rb.iter().any(|b| {
            rc.iter().any(|c| {
                let b = b.map(i64::from);
                let c = c.map(i64::from);
                let x = cfg.form.eval(b, c, t).map(|v| v.rem_euclid(2) as u8);
                ra.contains(&x)
            })
        });
        if ok {
            kept.push(t.map(|v| v as u8));
        }
    }
    kept
}

fn shifts(bound: i64) -> Vec<[i64; 3]> {
    let mut out = Vec::new();
    for t1 in -bound..=bound {
        for t2 in -bound..=bound {
            for t3 in -bound..=bound {
                out.push([t1, t2, t3]);
            }
        }
    }
    out
}

fn run_job(cfg: &SliceConfig, strategy: Strategy, job: &Job, ts: &[[i64; 3]]) -> JobSummary {
    let [c1s, c2s, c3s] = if in_range(&cfg.c_family, job.c_scale) {
        block_aps(&cfg.c_family, job.c_scale)
    } else {
        [Ap { start: 0, step: 1, count: 0 }; 3]
    };
    let c_count = (c1s.count * c2s.count * c3s.count) as u64;
    let mut s = JobSummary {
        b_scale: job.b_scale,
        c_scale: job.c_scale,
        b_count: job.bs.len() as u64,
        c_count,
        t_count: ts.len() as u64,
        triples: job.bs.len() as u64 * c_count * ts.len() as u64,
        evaluations: 0,
        hits: 0,
        first_hit: None,
    };
    let form = cfg.form;
    match strategy {
        Strategy::Sweep => {
            for &b in &job.bs {
                for c1 in c1s.iter() {
                    for c2 in c2s.iter() {
                        for &t in ts {
                            s.evaluations += 1;
                            let x = form.eval(b, [c1, c2, 0], t);
                            let Some(axis) = third_axis(&cfg.target, x[0], x[1]) else {
                                continue;
                            };
                            let (n, first) = c3s.shifted_overlap(x[2], &axis);
                            if n > 0 {
                                s.hits += n as u64;
                                if s.first_hit.is_none() {
                                    let c3 = first.expect("non-empty overlap");
                                    s.first_hit = Some(hit(form, b, [c1, c2, c3], t));
                                }
                            }
                        }
                    }
                }
            }
        }
        Strategy::Raw => {
            for &b in &job.bs {
                for c1 in c1s.iter() {
                    for c2 in c2s.iter() {
                        for c3 in c3s.iter() {
                            for &t in ts {
                                s.evaluations += 1;
                                let c = [c1, c2, c3];
                                if cfg.target.contains_i64(form.eval(b, c, t)) {
                                    s.hits += 1;
                                    if s.first_hit.is_none() {
                                        s.first_hit = Some(hit(form, b, c, t));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Strategy::Exact | Strategy::Auto => {
            let g = GroupDescriptor::heisenberg();
            let ints = |x: [i64; 3]| x.iter().map(|&v| Int::from(v)).collect::<Vec<_>>();
            let ts_exact: Vec<Vec<Int>> = ts.iter().map(|&t| ints(t)).collect();
            for &b in &job.bs {
                let be = ints(b);
                for c1 in c1s.iter() {
                    for c2 in c2s.iter() {
                        for c3 in c3s.iter() {
                            let ce = ints([c1, c2, c3]);
                            for (ti, te) in ts_exact.iter().enumerate() {
                                s.evaluations += 1;
                                if cfg.target.contains(&form.eval_exact(&g, &be, &ce, te)) {
                                    s.hits += 1;
                                    if s.first_hit.is_none() {
                                        s.first_hit = Some(hit(form, b, [c1, c2, c3], ts[ti]));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    s
}

fn resolve(cfg: &SliceConfig) -> Strategy {
    let mut max_scale = cfg.c_scales.iter().copied().max().unwrap_or(0);
    if let BSource::Scales { scales, .. } = &cfg.b {
        max_scale = max_scale.max(scales.iter().copied().max().unwrap_or(0));
    }
    let big = max_scale > I64_SCALE_LIMIT;
    match cfg.strategy {
        Strategy::Auto if big => Strategy::Exact,
        Strategy::Auto => Strategy::Sweep,
        Strategy::Raw | Strategy::Sweep if big => Strategy::Exact,
        s => s,
    }
}

/// Runs a slice and counts every triple whose product lands in the target.
///
/// Jobs run in parallel and are merged in a fixed order, so the result does
/// not depend on the number of threads.
pub fn scan_slice(cfg: &SliceConfig) -> Result<SliceScan> {
    validate(cfg)?;
    let strategy = resolve(cfg);
    let jobs = jobs(cfg);
    let all_t = shifts(cfg.t_bound);
    let (ts, parity) = if cfg.parity_filter {
        let kept = kept_classes(cfg, &jobs);
        let ts: Vec<[i64; 3]> = all_t
            .iter()
            .copied()
            .filter(|t| kept.contains(&t.map(|v| v.rem_euclid(2) as u8)))
            .collect();
        let p = ParityFilter {
            kept_classes: kept,
            shifts_before: all_t.len() as u64,
            shifts_after: ts.len() as u64,
        };
        (ts, Some(p))
    } else {
        (all_t, None)
    };

    let mut planned = 0u64;
    for j in &jobs {
        let c = if in_range(&cfg.c_family, j.c_scale) {
            let [a, b, c] = block_aps(&cfg.c_family, j.c_scale);
            match strategy {
                Strategy::Sweep => a.count * b.count,
                _ => a.count * b.count * c.count,
            }
        } else {
            0
        };
        planned = planned.saturating_add((j.bs.len() as u64).saturating_mul(c as u64).saturating_mul(ts.len() as u64));
    }
    if planned > cfg.budget {
        return Err(Error::budget("slice evaluations", Int::from(planned), cfg.budget));
    }

    let summaries: Vec<JobSummary> = jobs.par_iter().map(|j| run_job(cfg, strategy, j, &ts)).collect();
    let mut scan = SliceScan {
        strategy,
        parity,
        triples: 0,
        evaluations: 0,
        hits: 0,
        first_hit: None,
        jobs: Vec::with_capacity(summaries.len()),
    };
    for s in summaries {
        scan.triples += s.triples;
        scan.evaluations += s.evaluations;
        scan.hits += s.hits;
        if scan.first_hit.is_none() {
            scan.first_hit = s.first_hit.clone();
        }
        scan.jobs.push(s);
    }
    Ok(scan)
}

fn statement(cfg: &SliceConfig) -> String {
    let fam = |f: &HeisenbergScales| if f.odd { "odd scale union" } else { "scale union" };
    let b = match &cfg.b {
        BSource::Scales { family, scales } => format!("b in the {} blocks at scales {:?}", fam(family), scales),
        BSource::Window { ranges, exclude_b2_zero } => format!(
            "b in {:?} x {:?} x {:?}{}",
            ranges[0],
            ranges[1],
            ranges[2],
            if *exclude_b2_zero { " with b2 != 0" } else { "" }
        ),
    };
    format!(
        "for all {b}, c in the {} blocks at scales {:?} and |t|_inf <= {}: {} is not in the {}",
        fam(&cfg.c_family),
        cfg.c_scales,
        cfg.t_bound,
        cfg.form.describe(),
        fam(&cfg.target)
    )
}

/// Runs a slice and certifies that no triple lands in the target. A hit is an
/// error carrying the first offending triple.
pub fn certify_slice(cfg: &SliceConfig) -> Result<EmptinessCertificate> {
    let scan = scan_slice(cfg)?;
    if let Some(h) = &scan.first_hit {
        return Err(Error::CounterexampleViolation(format!(
            "{} triples land in the target; first: b = {}, c = {}, t = {}, product = {}",
            scan.hits, h.b, h.c, h.t, h.product
        )));
    }
    Ok(EmptinessCertificate {
        statement: statement(cfg),
        scope: "finite slice only: the asymptotic statement for all large scales is not certified".into(),
        config: cfg.clone(),
        strategy: scan.strategy,
        parity_filter: scan.parity,
        triples_examined: scan.triples,
        evaluations: scan.evaluations,
        violations: Vec::new(),
        jobs: scan.jobs,
    })
}

/// `(b c) t ∉ ⋃ Φ′` for `b ∈ Φ′_N`, `c ∈ Φ′_M`, `|t|_inf <= t_bound`, where
/// `Φ′` are the odd scale blocks. Shifts are parity filtered.
pub fn verify_odd_scale_slice(n_scales: &[u32], m_scales: &[u32], t_bound: i64) -> Result<EmptinessCertificate> {
    certify_slice(&SliceConfig {
        form: ProductForm::BcT,
        target: HeisenbergScales::odd(),
        b: BSource::Scales {
            family: HeisenbergScales::odd(),
            scales: n_scales.to_vec(),
        },
        c_family: HeisenbergScales::odd(),
        c_scales: m_scales.to_vec(),
        t_bound,
        parity_filter: true,
        strategy: Strategy::Auto,
        budget: SLICE_BUDGET,
    })
}

/// `t (c b) ∉ ⋃ Φ` for `b` in the box `b_ranges` with `b_2 != 0`, `c ∈ Φ_M`,
/// `|t|_inf <= t_bound`, where `Φ` are the full scale blocks.
pub fn verify_full_scale_slice(
    b_ranges: [(i64, i64); 3],
    m_scales: &[u32],
    t_bound: i64,
) -> Result<EmptinessCertificate> {
    certify_slice(&full_config(ProductForm::TCb, b_ranges, m_scales, t_bound))
}

/// `(c b) t ∉ ⋃ Φ` over the same ranges as [`verify_full_scale_slice`].
///
/// With `b′ = t⁻¹bt` and `c′ = t⁻¹ct` one has `(c b) t = t (c′ b′)`, and
/// conjugation keeps the first two coordinates, so `b′_2 = b_2 != 0`.
pub fn verify_conjugated_slice(
    b_ranges: [(i64, i64); 3],
    m_scales: &[u32],
    t_bound: i64,
) -> Result<EmptinessCertificate> {
    certify_slice(&full_config(ProductForm::CbT, b_ranges, m_scales, t_bound))
}

fn full_config(form: ProductForm, b_ranges: [(i64, i64); 3], m_scales: &[u32], t_bound: i64) -> SliceConfig {
    SliceConfig {
        form,
        target: HeisenbergScales::full(),
        b: BSource::Window {
            ranges: b_ranges,
            exclude_b2_zero: true,
        },
        c_family: HeisenbergScales::full(),
        c_scales: m_scales.to_vec(),
        t_bound,
        parity_filter: false,
        strategy: Strategy::Auto,
        budget: SLICE_BUDGET,
    }
}

/// The parity filter checked against unfiltered raw enumeration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParityValidation {
    pub filtered: SliceScan,
    pub unfiltered: SliceScan,
    /// Hits among shifts the filter drops. Zero when the filter is sound.
    pub hits_in_dropped_classes: u64,
    pub agree: bool,
}

/// Runs `cfg` with and without the parity filter, the latter by raw
/// enumeration, and compares the hit counts.
pub fn validate_parity_filter(cfg: &SliceConfig) -> Result<ParityValidation> {
    let filtered = scan_slice(&SliceConfig {
        parity_filter: true,
        ..cfg.clone()
    })?;
    let unfiltered = scan_slice(&SliceConfig {
        parity_filter: false,
        strategy: Strategy::Raw,
        ..cfg.clone()
    })?;
    let kept = &filtered.parity.as_ref().expect("filter ran").kept_classes;
    let dropped_cfg = SliceConfig {
        parity_filter: false,
        strategy: Strategy::Raw,
        ..cfg.clone()
    };
    // Count hits among dropped shifts directly.
    let jobs = jobs(&dropped_cfg);
    let dropped: Vec<[i64; 3]> = shifts(cfg.t_bound)
        .into_iter()
        .filter(|t| !kept.contains(&t.map(|v| v.rem_euclid(2) as u8)))
        .collect();
    let hits_in_dropped_classes = jobs
        .iter()
        .map(|j| run_job(&dropped_cfg, Strategy::Raw, j, &dropped).hits)
        .sum();
    let agree = filtered.hits == unfiltered.hits && hits_in_dropped_classes == 0;
    Ok(ParityValidation {
        filtered,
        unfiltered,
        hits_in_dropped_classes,
        agree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop, prop_assert_eq, prop_oneof, proptest, Just, ProptestConfig};
    use proptest::strategy::Strategy as Gen;

    fn small(form: ProductForm, target: HeisenbergScales, b: BSource, c_scales: Vec<u32>, t_bound: i64) -> SliceConfig {
        SliceConfig {
            form,
            target,
            b,
            c_family: target,
            c_scales,
            t_bound,
            parity_filter: false,
            strategy: Strategy::Raw,
            budget: SLICE_BUDGET,
        }
    }

    #[test]
    fn ap_overlap_matches_enumeration() {
        let aps = [
            Ap { start: 1, step: 2, count: 10 },
            Ap { start: -3, step: 1, count: 7 },
            Ap { start: 4, step: 3, count: 5 },
            Ap { start: 2, step: 2, count: 1 }.normalized(),
            Ap { start: 0, step: 1, count: 0 },
        ];
        for a in aps {
            for b in aps {
                for shift in -12..12 {
                    let brute: Vec<i64> = a
                        .iter()
                        .filter(|x| b.iter().any(|y| y == x + shift))
                        .collect();
                    assert_eq!(a.shifted_overlap(shift, &b), (brute.len() as i64, brute.first().copied()));
                }
            }
        }
    }

    #[test]
    fn parity_keeps_only_odd_odd_even_shifts() {
        let cfg = SliceConfig {
            parity_filter: true,
            ..small(
                ProductForm::BcT,
                HeisenbergScales::odd(),
                BSource::Scales { family: HeisenbergScales::odd(), scales: vec![3] },
                vec![10],
                2,
            )
        };
        let scan = scan_slice(&cfg).unwrap();
        let p = scan.parity.unwrap();
        assert_eq!(p.kept_classes, vec![[1, 1, 0]]);
        // No shift with even second coordinate survives.
        assert!(p.kept_classes.iter().all(|c| c[1] == 1));
        assert_eq!(p.shifts_before, 125);
        assert_eq!(p.shifts_after, 2 * 2 * 3);
    }

    #[test]
    fn odd_scale_slice_small() {
        let cert = verify_odd_scale_slice(&[3], &[12], 9).unwrap();
        assert!(cert.violations.is_empty());
        // |Φ′_3| = 2·2·5, |Φ′_12| = 6·6·72, shifts (odd, odd, even) in [-9, 9]: 10·10·9.
        assert_eq!(cert.triples_examined, 20 * 2592 * 900);
        assert!(verify_odd_scale_slice(&[3], &[], 9).unwrap().triples_examined == 0);
    }

    #[test]
    fn full_scale_slice_small() {
        let cert = verify_full_scale_slice([(0, 0), (1, 1), (0, 0)], &[12], 0).unwrap();
        assert_eq!(cert.triples_examined, 12 * 12 * 144);
        let empty = verify_full_scale_slice([(0, 0), (0, 0), (0, 0)], &[12], 2).unwrap();
        assert_eq!(empty.triples_examined, 0);
    }

    #[test]
    fn hits_are_reported_with_the_triple() {
        // With b = e, t = e every c is its own product and lies in the target.
        let cfg = small(
            ProductForm::TCb,
            HeisenbergScales::full(),
            BSource::Window { ranges: [(0, 0), (0, 0), (0, 0)], exclude_b2_zero: false },
            vec![3],
            0,
        );
        for strategy in [Strategy::Raw, Strategy::Sweep, Strategy::Exact] {
            let scan = scan_slice(&SliceConfig { strategy, ..cfg.clone() }).unwrap();
            assert_eq!(scan.hits, 3 * 3 * 9);
            let h = scan.first_hit.unwrap();
            assert_eq!(h.product, h3([9, 1, 1]));
        }
        match certify_slice(&cfg) {
            Err(Error::CounterexampleViolation(m)) => assert!(m.contains("(9,1,1)")),
            other => panic!("expected a violation, got {other:?}"),
        }
    }

    #[test]
    fn budget_and_input_checks() {
        let mut cfg = small(
            ProductForm::BcT,
            HeisenbergScales::odd(),
            BSource::Scales { family: HeisenbergScales::odd(), scales: vec![3] },
            vec![9],
            3,
        );
        cfg.budget = 10;
        assert!(matches!(scan_slice(&cfg), Err(Error::BudgetExceeded { .. })));
        cfg.budget = SLICE_BUDGET;
        cfg.t_bound = -1;
        assert!(matches!(scan_slice(&cfg), Err(Error::InvalidInput(_))));
        cfg.t_bound = 1;
        cfg.c_scales = vec![0];
        assert!(matches!(scan_slice(&cfg), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn large_scales_use_exact_arithmetic() {
        let cfg = SliceConfig {
            strategy: Strategy::Auto,
            ..small(
                ProductForm::TCb,
                HeisenbergScales::full(),
                BSource::Window { ranges: [(0, 0), (1, 1), (0, 0)], exclude_b2_zero: true },
                vec![41],
                0,
            )
        };
        assert_eq!(resolve(&cfg), Strategy::Exact);
        let cfg = SliceConfig { c_scales: vec![12], ..cfg };
        assert_eq!(resolve(&cfg), Strategy::Sweep);
    }

    fn form() -> impl Gen<Value = ProductForm> {
        prop_oneof![Just(ProductForm::BcT), Just(ProductForm::TCb), Just(ProductForm::CbT)]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn sweep_and_exact_count_like_raw(
            f in form(),
            odd in any::<bool>(),
            lo in prop::array::uniform3(-3i64..3),
            m in 2u32..5,
            t_bound in 0i64..2,
        ) {
            let target = if odd { HeisenbergScales::odd() } else { HeisenbergScales::full() };
            let ranges = [(lo[0], lo[0] + 2), (lo[1], lo[1] + 1), (lo[2], lo[2] + 2)];
            let cfg = small(f, target, BSource::Window { ranges, exclude_b2_zero: false }, vec![m, m + 1], t_bound);
            let raw = scan_slice(&cfg).unwrap();
            let sweep = scan_slice(&SliceConfig { strategy: Strategy::Sweep, ..cfg.clone() }).unwrap();
            let exact = scan_slice(&SliceConfig { strategy: Strategy::Exact, ..cfg.clone() }).unwrap();
            prop_assert_eq!(raw.triples, sweep.triples);
            prop_assert_eq!(raw.hits, sweep.hits);
            prop_assert_eq!(raw.hits, exact.hits);
            prop_assert_eq!(raw.first_hit.is_some(), sweep.first_hit.is_some());
        }
    }
}
