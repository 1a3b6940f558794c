//! Thinning a Følner family so that every coordinate eventually avoids any
//! fixed finite set of values.
//!
//! One stage works on one coordinate axis. Each `Ψ_N` is split into maximal
//! lines along the axis, lines of length at most `Q_N` are discarded, and the
//! `k`-th emitted set removes every element whose axis coordinate was already
//! used by an earlier emitted set. The index `N_k` is the first one after
//! `N_{k-1}` keeping more than `1 - 1/k` of the surviving lines. Stages for
//! several axes are chained, each consuming the previous stage's output.

use num_integer::Roots;
use serde::{Deserialize, Serialize};

use super::{folner_defect, prefix_family, FolnerFamily, FolnerRepr, FolnerSet, Side};
use crate::error::{Error, Result};
use crate::groups::Coords;
use crate::int::Int;
use crate::rational::Rational;
use crate::region::{CoordBox, IntervalSet, StridedInterval};

/// Above this many boxes an emitted set is stored as explicit elements.
const MAX_BOXES: usize = 64;

/// A bundle of parallel lines: the template's axis side is the line, the
/// other sides enumerate the line positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineClass {
    pub template: CoordBox,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineDecomposition {
    pub axis: usize,
    pub classes: Vec<LineClass>,
}

impl LineClass {
    fn line(&self, axis: usize) -> (Int, Int) {
        let a = &self.template.axes[axis];
        (a.first().cloned().unwrap_or(Int::ZERO), a.last().unwrap_or(Int::from(-1)))
    }

    pub fn line_length(&self, axis: usize) -> Int {
        self.template.axes[axis].count.clone()
    }

    pub fn line_count(&self, axis: usize) -> Int {
        let l = self.line_length(axis);
        if l.is_zero() {
            Int::ZERO
        } else {
            self.template.len().div_floor(&l)
        }
    }
}

impl LineDecomposition {
    pub fn line_count(&self) -> Int {
        self.classes.iter().map(|c| c.line_count(self.axis)).sum()
    }

    pub fn element_count(&self) -> Int {
        self.classes.iter().map(|c| c.template.len()).sum()
    }
}

/// Splits a set into lines along `axis` that are maximal within the set.
/// Lines are found by a lexicographic scan: positions sorted by the other
/// coordinates, each line extended as far as the set allows.
pub fn decompose_lines(set: &FolnerSet, axis: usize, budget: u64) -> Result<LineDecomposition> {
    if let FolnerRepr::Boxes(bs) = set.repr() {
        if bs.len() == 1 && bs[0].dim() > axis {
            let a = &bs[0].axes[axis];
            if a.step == Int::ONE || a.count <= Int::ONE {
                return Ok(LineDecomposition {
                    axis,
                    classes: vec![LineClass {
                        template: bs[0].clone(),
                    }],
                });
            }
        }
    }
    let mut pts: Vec<Coords> = Vec::new();
    set.for_each(budget, |x| {
        let mut c: Coords = x.iter().cloned().collect();
        // move the axis coordinate last so sorting groups lines together
        let v = c.remove(axis);
        c.push(v);
        pts.push(c);
    })?;
    pts.sort_unstable();
    let last = |c: &Coords| c[c.len() - 1].clone();
    let mut classes = Vec::new();
    let mut i = 0;
    while i < pts.len() {
        let others = &pts[i][..pts[i].len() - 1];
        let lo = last(&pts[i]);
        let mut hi = lo.clone();
        let mut j = i + 1;
        while j < pts.len() && &pts[j][..pts[j].len() - 1] == others && last(&pts[j]) == &hi + 1 {
            hi = last(&pts[j]);
            j += 1;
        }
        let mut axes: Vec<StridedInterval> = others
            .iter()
            .map(|v| StridedInterval::range(v.clone(), v.clone()))
            .collect();
        axes.insert(axis, StridedInterval::range(lo, hi));
        classes.push(LineClass {
            template: CoordBox::new(axes),
        });
        i = j;
    }
    Ok(LineDecomposition { axis, classes })
}

/// The threshold `Q_N` below which lines are discarded.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum QSchedule {
    /// `floor(δ_N^{-1/2})` with `δ_N` the largest defect of `Ψ_N` under the
    /// coordinate generators.
    Auto,
    /// `floor(sqrt(N))`.
    Sqrt,
    /// `Q_N = values[N - 1]`.
    Table { values: Vec<u64> },
}

impl QSchedule {
    fn validate(&self) -> Result<()> {
        if let QSchedule::Table { values } = self {
            if values.is_empty() {
                return Err(Error::ScheduleNotDivergent("empty Q table".into()));
            }
            if values.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::ScheduleNotDivergent("Q table decreases".into()));
            }
            if values.first() == values.last() {
                return Err(Error::ScheduleNotDivergent("Q table is constant".into()));
            }
        }
        Ok(())
    }

    fn q(&self, f: &FolnerFamily, n: u32) -> Result<Option<Int>> {
        match self {
            QSchedule::Sqrt => Ok(Some(Int::from((n as u64).sqrt()))),
            QSchedule::Table { values } => Ok(values.get(n as usize - 1).map(|&v| Int::from(v))),
            QSchedule::Auto => {
                let g = f.group();
                let gens: Vec<_> = (0..g.dim()).map(|i| g.basis(i)).collect();
                let delta = folner_defect(f, n, &gens, Side::Left)?
                    .into_iter()
                    .max()
                    .expect("at least one coordinate");
                if delta == Rational::zero() {
                    return Ok(Some(Int::ZERO));
                }
                // floor(sqrt(den/num)) = isqrt(floor(den/num))
                let ratio = delta.denom().div_floor(&delta.numer());
                Ok(Some(Int::from(ratio.to_bigint().sqrt())))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThinConfig {
    /// Coordinate axes, processed in order.
    pub axes: Vec<usize>,
    pub q: QSchedule,
    /// Values every emitted set from step 2 on must avoid on each axis.
    #[serde(default)]
    pub enforced: Vec<Int>,
    pub max_steps: usize,
    /// Largest input index searched for `N_k`.
    pub max_index: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ThinStep {
    pub k: usize,
    /// `N_k` in this stage's input family.
    pub source_index: u32,
    /// The index in the original family this set descends from.
    pub origin_index: u32,
    pub q: Int,
    pub lines_total: Int,
    pub lines_dropped: Int,
    pub elements_dropped: Int,
    /// `|Ψ^{(1)}_{N_k}|`, the size after discarding short lines.
    pub base_size: Int,
    /// Number of excluded axis values before this step.
    pub excluded_values: Int,
    pub size: Int,
    /// `|Ψ̃_k| / |Ψ^{(1)}_{N_k}|`.
    pub retained_fraction: Rational,
    /// Axis projection of the emitted set, as closed spans.
    pub projection: Vec<(Int, Int)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ThinStage {
    pub axis: usize,
    pub steps: Vec<ThinStep>,
    pub stopped: String,
}

#[derive(Clone, Debug)]
pub struct ThinResult {
    pub stages: Vec<ThinStage>,
    /// The final emitted prefix as a family (`Ψ'_k` for `k = 1..=K`).
    pub family: FolnerFamily,
}

impl ThinResult {
    pub fn steps(&self) -> &[ThinStep] {
        self.stages.last().map_or(&[], |s| &s.steps)
    }
}

struct Candidate {
    q: Int,
    lines_total: Int,
    lines_dropped: Int,
    elements_dropped: Int,
    base_size: Int,
    kept: Vec<LineClass>,
}

fn candidate(f: &FolnerFamily, schedule: &QSchedule, axis: usize, n: u32) -> Result<Option<Candidate>> {
    let Some(q) = schedule.q(f, n)? else {
        return Ok(None);
    };
    let s = f.set(n)?;
    let lines = decompose_lines(&s, axis, f.budget())?;
    let (mut kept, mut lines_dropped, mut elements_dropped) = (Vec::new(), Int::ZERO, Int::ZERO);
    for c in lines.classes.iter() {
        if c.line_length(axis) > q {
            kept.push(c.clone());
        } else {
            lines_dropped += c.line_count(axis);
            elements_dropped += c.template.len();
        }
    }
    let base_size = kept.iter().map(|c| c.template.len()).sum();
    Ok(Some(Candidate {
        q,
        lines_total: lines.line_count(),
        lines_dropped,
        elements_dropped,
        base_size,
        kept,
    }))
}

/// Removes excluded axis values from the kept lines.
fn exclude(c: &Candidate, axis: usize, excluded: &IntervalSet) -> (Int, Vec<CoordBox>) {
    let mut size = Int::ZERO;
    let mut boxes = Vec::new();
    for class in &c.kept {
        let (lo, hi) = class.line(axis);
        let per_line = class.line_count(axis);
        for (a, b) in excluded.complement_within(&lo, &hi) {
            size += &per_line * (&b - &a + 1);
            let mut t = class.template.clone();
            t.axes[axis] = StridedInterval::range(a, b);
            boxes.push(t);
        }
    }
    (size, boxes)
}

fn run_stage(
    f: &FolnerFamily,
    axis: usize,
    cfg: &ThinConfig,
    origin: &dyn Fn(u32) -> u32,
) -> Result<(ThinStage, Vec<FolnerSet>)> {
    let kind = f.group().kind();
    let limit = f.max_index().map_or(cfg.max_index, |m| m.min(cfg.max_index));
    let mut enforced = IntervalSet::new();
    for v in &cfg.enforced {
        enforced.insert(v.clone(), v.clone());
    }
    let mut used = IntervalSet::new();
    let mut steps: Vec<ThinStep> = Vec::new();
    let mut sets = Vec::new();
    let mut n = 0u32;
    let stopped = loop {
        if steps.len() >= cfg.max_steps {
            break format!("reached {} steps", cfg.max_steps);
        }
        let k = steps.len() + 1;
        let mut excluded = used.clone();
        if k >= 2 {
            excluded.union_with(&enforced);
        }
        let threshold = Rational::new(Int::from(k as u64 - 1), Int::from(k as u64));
        let mut found = None;
        while n < limit {
            n += 1;
            let c = match candidate(f, &cfg.q, axis, n) {
                Ok(Some(c)) => c,
                Ok(None) => break,
                Err(Error::BudgetExceeded { .. }) => {
                    n = limit;
                    break;
                }
                Err(e) => return Err(e),
            };
            if c.base_size.is_zero() {
                continue;
            }
            let (size, boxes) = exclude(&c, axis, &excluded);
            if size.is_zero() {
                continue;
            }
            let frac = Rational::new(size.clone(), c.base_size.clone());
            if k == 1 || frac > threshold {
                found = Some((c, size, boxes, frac));
                break;
            }
        }
        let Some((c, size, boxes, frac)) = found else {
            break format!("no admissible index up to {limit} for step {k}");
        };
        let mut proj = IntervalSet::new();
        for b in &boxes {
            let a = &b.axes[axis];
            proj.insert(a.start.clone(), a.last().expect("non-empty"));
        }
        let excluded_values = excluded.len();
        used.union_with(&proj);
        let set = if boxes.len() <= MAX_BOXES {
            FolnerSet::from_boxes(k as u32, kind, boxes)
        } else {
            let tmp = FolnerSet::from_boxes(k as u32, kind, boxes);
            FolnerSet::from_elements(k as u32, kind, tmp.elements(f.budget())?)
        };
        steps.push(ThinStep {
            k,
            source_index: n,
            origin_index: origin(n),
            q: c.q,
            lines_total: c.lines_total,
            lines_dropped: c.lines_dropped,
            elements_dropped: c.elements_dropped,
            base_size: c.base_size,
            excluded_values,
            size,
            retained_fraction: frac,
            projection: proj.spans().to_vec(),
        });
        sets.push(set);
    };
    Ok((ThinStage { axis, steps, stopped }, sets))
}

/// Runs one thinning stage per configured axis.
pub fn thin_folner(f: &FolnerFamily, cfg: &ThinConfig) -> Result<ThinResult> {
    let g = f.group();
    if !g.kind().is_torsion_free() {
        return Err(Error::InvalidInput("thinning needs integer coordinates".into()));
    }
    if cfg.axes.is_empty() || cfg.axes.iter().any(|&a| a >= g.dim()) {
        return Err(Error::InvalidInput(format!(
            "thinning axes must be non-empty and below {}",
            g.dim()
        )));
    }
    if cfg.max_steps == 0 || cfg.max_index == 0 {
        return Err(Error::InvalidInput("max_steps and max_index must be positive".into()));
    }
    cfg.q.validate()?;
    let mut stages: Vec<ThinStage> = Vec::new();
    let mut input = f.clone();
    for &axis in &cfg.axes {
        let prev: Option<Vec<u32>> = stages
            .last()
            .map(|s| s.steps.iter().map(|st| st.origin_index).collect());
        let origin = |n: u32| match &prev {
            Some(v) => v[n as usize - 1],
            None => n,
        };
        let (stage, sets) = run_stage(&input, axis, cfg, &origin)?;
        input = prefix_family(g, sets, f.budget());
        stages.push(stage);
    }
    Ok(ThinResult { stages, family: input })
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;
    use crate::groups::GroupDescriptor;

    fn z2_boxes() -> FolnerFamily {
        box_folner(
            &GroupDescriptor::lattice(2),
            SideSchedule::Linear { factor: 1 },
            IntervalConvention::OneTo,
        )
        .unwrap()
    }

    #[test]
    fn lines_of_a_box_and_of_a_scattered_set() {
        let f = z2_boxes();
        let d = decompose_lines(&f.set(5).unwrap(), 0, 100).unwrap();
        assert_eq!(d.line_count(), Int::from(5));
        let z2 = GroupDescriptor::lattice(2);
        let pts = [[0, 0], [1, 0], [3, 0], [0, 1]].map(|c| z2.element(c).unwrap());
        let s = FolnerSet::from_elements(1, z2.kind(), pts.to_vec());
        let d = decompose_lines(&s, 0, 100).unwrap();
        let lens: Vec<Int> = d.classes.iter().map(|c| c.line_length(0)).collect();
        assert_eq!(lens, vec![Int::from(2), Int::from(1), Int::from(1)]);
        assert_eq!(d.element_count(), Int::from(4));
    }

    #[test]
    fn first_steps_follow_the_exclusion_rule() {
        let cfg = ThinConfig {
            axes: vec![0],
            q: QSchedule::Auto,
            enforced: vec![],
            max_steps: 3,
            max_index: 100,
        };
        let r = thin_folner(&z2_boxes(), &cfg).unwrap();
        let s = r.steps();
        assert_eq!(s[0].source_index, 1);
        assert_eq!(s[0].projection, vec![(Int::ONE, Int::ONE)]);
        assert_eq!(s[1].source_index, 3);
        assert_eq!(s[1].projection, vec![(Int::from(2), Int::from(3))]);
        assert_eq!(s[2].source_index, 10);
        let sqrt = ThinConfig { q: QSchedule::Sqrt, ..cfg };
        let r = thin_folner(&z2_boxes(), &sqrt).unwrap();
        // lines of a full box have length N > floor(sqrt(N)) once N >= 2
        assert_eq!(r.steps()[0].source_index, 2);
        assert!(r.steps().iter().all(|x| x.lines_dropped.is_zero()));
    }

    #[test]
    fn enforced_values_shape_the_schedule() {
        let cfg = ThinConfig {
            axes: vec![0, 1],
            q: QSchedule::Auto,
            enforced: (0..10).map(Int::from).collect(),
            max_steps: 5,
            max_index: 100_000,
        };
        let r = thin_folner(&z2_boxes(), &cfg).unwrap();
        let first: Vec<u32> = r.stages[0].steps.iter().map(|s| s.source_index).collect();
        assert_eq!(first, vec![1, 19, 58, 233, 1166]);
        let second: Vec<u32> = r.stages[1].steps.iter().map(|s| s.origin_index).collect();
        assert_eq!(second, vec![1, 19, 58, 233, 1166]);
        for st in &r.stages {
            for (k, step) in st.steps.iter().enumerate() {
                let k = k as i64 + 1;
                assert!(step.retained_fraction >= Rational::new(k - 1, k));
            }
        }
    }

    #[test]
    fn bad_schedules() {
        let cfg = ThinConfig {
            axes: vec![0],
            q: QSchedule::Table { values: vec![3, 3, 3] },
            enforced: vec![],
            max_steps: 3,
            max_index: 10,
        };
        assert!(matches!(thin_folner(&z2_boxes(), &cfg), Err(Error::ScheduleNotDivergent(_))));
    }
}
