use std::collections::HashMap;

use serde::Serialize;

use super::{GroupDescriptor, GroupElement, GroupError, GroupKind};
use crate::int::Int;

/// Outcome of hashing every square over a finite window.
#[derive(Clone, Debug, Serialize)]
pub struct InjectivityReport {
    pub checked: u64,
    pub distinct_squares: u64,
    /// Pairs `a != b` with `a^2 = b^2`, in discovery order.
    pub collisions: Vec<(GroupElement, GroupElement)>,
}

impl InjectivityReport {
    pub fn is_injective(&self) -> bool {
        self.collisions.is_empty()
    }
}

/// Squares every element of `window` and reports all collisions.
///
/// Duplicate elements in the window are ignored rather than reported.
pub fn verify_square_injectivity<I>(g: &GroupDescriptor, window: I) -> Result<InjectivityReport, GroupError>
where
    I: IntoIterator<Item = GroupElement>,
{
    let iter = window.into_iter();
    let mut seen: HashMap<GroupElement, GroupElement> = HashMap::with_capacity(iter.size_hint().0);
    let mut checked = 0u64;
    let mut collisions = Vec::new();
    for a in iter {
        let sq = g.square(&a)?;
        checked += 1;
        match seen.get(&sq) {
            Some(prev) if *prev != a => collisions.push((prev.clone(), a)),
            Some(_) => {}
            None => {
                seen.insert(sq, a);
            }
        }
    }
    Ok(InjectivityReport {
        checked,
        distinct_squares: seen.len() as u64,
        collisions,
    })
}

/// Index of the doubling subgroup `2G` together with coset representatives;
/// the first representative is always the identity.
#[derive(Clone, Debug, Serialize)]
pub struct DoublingIndex {
    pub index: Int,
    pub representatives: Vec<GroupElement>,
}

pub fn doubling_subgroup_index(g: &GroupDescriptor) -> Result<DoublingIndex, GroupError> {
    match g.kind() {
        GroupKind::Lattice { dim } => {
            // {0,1}^d in binary-counting order, starting at zero
            let reps = (0u64..1 << dim)
                .map(|mask| g.element_unchecked((0..dim).map(|i| Int::from((mask >> i) & 1)).collect()))
                .collect::<Vec<_>>();
            Ok(DoublingIndex {
                index: Int::from(2).pow(dim as u32),
                representatives: reps,
            })
        }
        GroupKind::Unitriangular { n: 2 } => Ok(DoublingIndex {
            index: Int::from(2),
            representatives: vec![g.identity(), g.basis(0)],
        }),
        GroupKind::FiniteVector { .. } => Ok(DoublingIndex {
            index: Int::ONE,
            representatives: vec![g.identity()],
        }),
        k => Err(GroupError::NotAbelian(k)),
    }
}
