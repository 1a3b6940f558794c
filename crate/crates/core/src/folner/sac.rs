use std::fmt;
use std::ops::RangeInclusive;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{FolnerFamily, Weight};
use crate::error::{Error, Result};
use crate::groups::{Coords, GroupDescriptor, GroupElement, GroupError};
use crate::int::Int;
use crate::rational::Rational;

type CoordMap = Arc<dyn Fn(&GroupDescriptor, &[Int]) -> Coords + Send + Sync>;

/// The map `φ` transported between the two families.
#[derive(Clone)]
pub enum PhiMap {
    Identity,
    /// `g -> g^2`.
    Square,
    Custom {
        label: String,
        f: CoordMap,
    },
}

impl PhiMap {
    pub fn custom(
        label: impl Into<String>,
        f: impl Fn(&GroupDescriptor, &[Int]) -> Coords + Send + Sync + 'static,
    ) -> Self {
        PhiMap::Custom {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn apply(&self, g: &GroupDescriptor, x: &[Int]) -> Coords {
        match self {
            PhiMap::Identity => x.iter().cloned().collect(),
            PhiMap::Square => g.mul_coords(x, x),
            PhiMap::Custom { f, .. } => f(g, x),
        }
    }

    pub fn name(&self) -> String {
        match self {
            PhiMap::Identity => "identity".into(),
            PhiMap::Square => "square".into(),
            PhiMap::Custom { label, .. } => label.clone(),
        }
    }
}

impl fmt::Debug for PhiMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PhiMap({})", self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SacRecord {
    pub n: u32,
    pub psi_size: Int,
    pub phi_size: Int,
    /// `|φ(Ψ_N)|`.
    pub image_size: Int,
    /// `φ(Ψ_N) ⊂ Φ_N`, checked element by element.
    pub inclusion_verified: bool,
    /// `|φ(Ψ_N)| / |Φ_N|`.
    pub ratio: Rational,
    pub max_fiber: u64,
}

/// Per-index evidence that `φ(Ψ_N) ⊂ Φ_N`, `|φ(Ψ_N)| / |Φ_N| >= η` and every
/// fiber of `φ` on `Ψ_N` has at most `M` points.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SacCertificate {
    pub phi: String,
    pub psi: String,
    pub map: String,
    pub m: u64,
    pub eta: Rational,
    pub records: Vec<SacRecord>,
}

impl SacCertificate {
    /// The transfer constant `M / η`.
    pub fn bound(&self) -> Rational {
        Rational::from_int(self.m) / self.eta.clone()
    }

    /// `δ = η ε / M`.
    pub fn delta_for(&self, eps: &Rational) -> Rational {
        &(&self.eta * eps) / &Rational::from_int(self.m)
    }

    pub fn record(&self, n: u32) -> Option<&SacRecord> {
        self.records.iter().find(|r| r.n == n)
    }
}

/// Images collected for fiber counting: flat machine integers when every
/// coordinate fits, exact coordinates otherwise.
enum Images {
    Flat { dim: usize, data: Vec<i64> },
    Exact(Vec<Coords>),
}

impl Images {
    fn push(&mut self, y: Coords) {
        match self {
            Images::Flat { dim, data } => {
                if y.iter().all(|c| c.to_i64().is_some()) {
                    data.extend(y.iter().map(|c| c.to_i64().unwrap()));
                } else {
                    let rows: Vec<Coords> = data
                        .chunks(*dim)
                        .map(|r| r.iter().map(|&v| Int::from(v)).collect())
                        .collect();
                    let mut rows = rows;
                    rows.push(y);
                    *self = Images::Exact(rows);
                }
            }
            Images::Exact(v) => v.push(y),
        }
    }

    /// `(distinct images, largest fiber, an image attaining it)`.
    fn fibers(self) -> (u64, u64, Option<Coords>) {
        let runs = |len: usize, eq: &dyn Fn(usize, usize) -> bool| -> (u64, u64, Option<usize>) {
            let (mut distinct, mut best, mut at, mut run) = (0u64, 0u64, None, 0u64);
            for i in 0..len {
                if i == 0 || !eq(i - 1, i) {
                    distinct += 1;
                    run = 0;
                }
                run += 1;
                if run > best {
                    best = run;
                    at = Some(i);
                }
            }
            (distinct, best, at)
        };
        match self {
            Images::Flat { dim, data } => {
                let len = data.len() / dim.max(1);
                let mut idx: Vec<u32> = (0..len as u32).collect();
                let row = |i: u32| &data[i as usize * dim..(i as usize + 1) * dim];
                idx.sort_unstable_by(|&a, &b| row(a).cmp(row(b)));
                let (d, b, at) = runs(len, &|i, j| row(idx[i]) == row(idx[j]));
                (d, b, at.map(|i| row(idx[i]).iter().map(|&v| Int::from(v)).collect()))
            }
            Images::Exact(mut v) => {
                v.sort_unstable();
                let (d, b, at) = runs(v.len(), &|i, j| v[i] == v[j]);
                (d, b, at.map(|i| v[i].clone()))
            }
        }
    }
}

/// Checks the three finite conditions index by index and fails on the first
/// violated one.
pub fn sac_certificate(
    phi_family: &FolnerFamily,
    psi_family: &FolnerFamily,
    map: &PhiMap,
    range: RangeInclusive<u32>,
    m: u64,
    eta: Rational,
) -> Result<SacCertificate> {
    let g = psi_family.group();
    if phi_family.group() != g {
        return Err(GroupError::GroupMismatch {
            expected: g.kind(),
            found: phi_family.group().kind(),
        }
        .into());
    }
    if m == 0 || eta <= Rational::zero() {
        return Err(Error::InvalidInput("fiber bound and η must be positive".into()));
    }
    let mut records = Vec::new();
    for n in range {
        let psi = psi_family.set(n)?;
        let phi = phi_family.set(n)?;
        let mut images = Images::Flat {
            dim: g.dim(),
            data: Vec::new(),
        };
        let mut violation: Option<(Coords, Coords)> = None;
        psi.for_each(psi_family.budget(), |x| {
            if violation.is_some() {
                return;
            }
            let y = map.apply(g, x);
            if !phi.contains_coords(&y) {
                violation = Some((x.iter().cloned().collect(), y));
                return;
            }
            images.push(y);
        })?;
        if let Some((x, y)) = violation {
            return Err(Error::InclusionViolation {
                n,
                element: g.element_unchecked(x),
                image: g.element_unchecked(y),
            });
        }
        let (distinct, max_fiber, at) = images.fibers();
        if max_fiber > m {
            return Err(Error::FiberExceeded {
                n,
                image: g.element_unchecked(at.expect("non-empty")),
                fiber: max_fiber,
                bound: m,
            });
        }
        let phi_size = phi.len();
        if phi_size.is_zero() {
            return Err(Error::InvalidInput(format!("Φ_{n} is empty")));
        }
        let ratio = Rational::new(Int::from(distinct), phi_size.clone());
        if ratio < eta {
            return Err(Error::RatioBelowEta { n, ratio, eta });
        }
        records.push(SacRecord {
            n,
            psi_size: psi.len(),
            phi_size,
            image_size: Int::from(distinct),
            inclusion_verified: true,
            ratio,
            max_fiber,
        });
    }
    Ok(SacCertificate {
        phi: phi_family.label(),
        psi: psi_family.label(),
        map: map.name(),
        m,
        eta,
        records,
    })
}

/// Inclusion `φ(Ψ_N) ⊂ Φ_N` checked on uniform random samples of `Ψ_N`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SampledInclusion {
    pub n: u32,
    pub samples: u64,
    pub seed: u64,
    pub violations: u64,
    pub first_violation: Option<(GroupElement, GroupElement)>,
}

pub fn sampled_inclusion(
    phi_family: &FolnerFamily,
    psi_family: &FolnerFamily,
    map: &PhiMap,
    n: u32,
    samples: u64,
    seed: u64,
) -> Result<SampledInclusion> {
    let g = psi_family.group();
    let psi = psi_family.set(n)?;
    let phi = phi_family.set(n)?;
    if psi.is_empty() {
        return Err(Error::InvalidInput(format!("Ψ_{n} is empty")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ u64::from(n).rotate_left(32));
    let mut violations = 0;
    let mut first = None;
    for _ in 0..samples {
        let x = psi.sample(&mut rng);
        let y = map.apply(g, x.coords());
        if !phi.contains_coords(&y) {
            violations += 1;
            if first.is_none() {
                first = Some((x, g.element_unchecked(y)));
            }
        }
    }
    Ok(SampledInclusion {
        n,
        samples,
        seed,
        violations,
        first_violation: first,
    })
}

/// One instance of `avg_{Ψ_N}(u ∘ φ) <= (M/η) avg_{Φ_N}(u)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AverageChainRecord {
    pub n: u32,
    pub weight: usize,
    pub lhs: Rational,
    pub rhs: Rational,
    pub holds: bool,
}

/// Evaluates the averaged inequality implied by a certificate for each weight.
pub fn check_average_chain(
    cert: &SacCertificate,
    phi_family: &FolnerFamily,
    psi_family: &FolnerFamily,
    map: &PhiMap,
    weights: &[&dyn Weight],
    n: u32,
) -> Result<Vec<AverageChainRecord>> {
    if cert.record(n).is_none() {
        return Err(Error::InvalidInput(format!("certificate has no record for N = {n}")));
    }
    let lhs = super::weighted_averages(weights, psi_family, n, Some(map))?;
    let base = super::weighted_averages(weights, phi_family, n, None)?;
    let k = cert.bound();
    Ok(lhs
        .into_iter()
        .zip(base)
        .enumerate()
        .map(|(i, (l, b))| {
            let rhs = &k * &b;
            AverageChainRecord {
                n,
                weight: i,
                holds: l <= rhs,
                lhs: l,
                rhs,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;

    #[test]
    fn heisenberg_certificate() {
        let h = GroupDescriptor::heisenberg();
        let psi = nilpotent_square_folner(&h).unwrap();
        let phi = index_shift(&psi, 1);
        let eta = psi.nilpotent_params().unwrap().eta.clone();
        let c = sac_certificate(&phi, &psi, &PhiMap::Square, 1..=3, 1, eta).unwrap();
        for r in &c.records {
            assert_eq!(r.ratio, (1, 36));
            assert_eq!(r.max_fiber, 1);
        }
        assert_eq!(c.bound(), Rational::from_int(36));
        assert_eq!(c.delta_for(&Rational::new(1, 2)), (1, 72));
    }

    #[test]
    fn doubling_on_integers() {
        let z = GroupDescriptor::lattice(1);
        let psi = box_folner(&z, SideSchedule::Linear { factor: 1 }, IntervalConvention::OneTo).unwrap();
        let phi = box_folner(&z, SideSchedule::Linear { factor: 2 }, IntervalConvention::OneTo).unwrap();
        let c = sac_certificate(&phi, &psi, &PhiMap::Square, 1..=6, 1, Rational::new(1, 2)).unwrap();
        assert!(c.records.iter().all(|r| r.ratio == (1, 2)));
        match sac_certificate(&psi, &psi, &PhiMap::Square, 1..=3, 1, Rational::new(1, 2)) {
            Err(Error::InclusionViolation { n: 1, element, .. }) => assert_eq!(element, z.element([1]).unwrap()),
            other => panic!("expected an inclusion violation, got {other:?}"),
        }
    }

    #[test]
    fn fiber_and_ratio_failures() {
        let z = GroupDescriptor::lattice(1);
        let f = box_folner(&z, SideSchedule::Linear { factor: 1 }, IntervalConvention::OneTo).unwrap();
        let collapse = PhiMap::custom("to one", |g, _| g.basis(0).into_coords());
        assert!(matches!(
            sac_certificate(&f, &f, &collapse, 2..=2, 1, Rational::new(1, 100)),
            Err(Error::FiberExceeded { fiber: 2, .. })
        ));
        assert!(matches!(
            sac_certificate(&f, &f, &PhiMap::Identity, 2..=2, 1, Rational::new(2, 1)),
            Err(Error::RatioBelowEta { .. })
        ));
    }

    #[test]
    fn sampled_inclusion_is_seeded() {
        let h = GroupDescriptor::heisenberg();
        let psi = nilpotent_square_folner(&h).unwrap();
        let phi = index_shift(&psi, 1);
        let a = sampled_inclusion(&phi, &psi, &PhiMap::Square, 6, 2000, 1).unwrap();
        let b = sampled_inclusion(&phi, &psi, &PhiMap::Square, 6, 2000, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.violations, 0);
        let bad = sampled_inclusion(&psi, &psi, &PhiMap::Square, 3, 2000, 1).unwrap();
        assert!(bad.violations > 0);
    }
}
