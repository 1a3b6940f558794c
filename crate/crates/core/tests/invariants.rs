use std::collections::HashSet;

use proptest::prelude::*;

use prodset::dynamics::{
    end_to_end_extract, find_approach, graded_ball, greedy_extract, Cylinder, ExtractConfig, Point, SymbolicSystem,
};
use prodset::folner::{
    box_folner, check_average_chain, coset_folner, folner_defect, index_shift, nilpotent_square_folner,
    restrict_folner, sac_certificate, shift_folner, thin_folner, HashWeight, IntervalConvention, PhiMap, QSchedule,
    ShiftSchedule, Side, SideSchedule, Subgroup, ThinConfig, Weight,
};
use prodset::groups::doubling_subgroup_index;
use prodset::sumsets::{search_witness, verify_witness, Order, SearchConfig, ShiftSide};
use prodset::{GroupDescriptor, Int, Rational, SetFamily};

fn boxes(g: &GroupDescriptor) -> prodset::folner::FolnerFamily {
    box_folner(g, SideSchedule::Linear { factor: 1 }, IntervalConvention::CenteredHalfOpen).unwrap()
}

#[test]
fn coset_union_is_disjoint() {
    let g = GroupDescriptor::lattice(2);
    let even = restrict_folner(
        &boxes(&g),
        Subgroup::Congruence {
            moduli: vec![Int::from(2), Int::from(2)],
        },
    )
    .unwrap();
    let reps = doubling_subgroup_index(&g).unwrap().representatives;
    assert_eq!(reps.len(), 4);
    let cosets = coset_folner(&g, &even, reps).unwrap();
    for n in 1..=6 {
        let parts = even.set(n).unwrap().len() * Int::from(4);
        let elems = cosets.set(n).unwrap().elements(u64::MAX).unwrap();
        let distinct: HashSet<_> = elems.iter().collect();
        assert_eq!(Int::from(distinct.len()), parts);
        assert_eq!(cosets.set(n).unwrap().len(), parts);
    }
}

#[test]
fn right_shift_keeps_left_defect() {
    let g = GroupDescriptor::heisenberg();
    let f = nilpotent_square_folner(&g).unwrap();
    let gn = g.element([3i64, -2, 5]).unwrap();
    let shifted = shift_folner(&f, ShiftSchedule::constant(gn));
    let tests = vec![g.basis(0), g.basis(1), g.element([1i64, 1, -1]).unwrap()];
    for n in 1..=3 {
        assert_eq!(
            folner_defect(&f, n, &tests, Side::Left).unwrap(),
            folner_defect(&shifted, n, &tests, Side::Left).unwrap()
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn certificates_bound_every_average(seeds in prop::collection::vec((any::<u64>(), 1u64..50), 1..8)) {
        let g = GroupDescriptor::heisenberg();
        let psi = nilpotent_square_folner(&g).unwrap();
        let phi = index_shift(&psi, 1);
        let cert = sac_certificate(&phi, &psi, &PhiMap::Square, 1..=2, 1, Rational::new(1, 36)).unwrap();
        for r in &cert.records {
            prop_assert!(r.ratio >= cert.eta);
            prop_assert!(r.max_fiber <= cert.m);
        }
        let ws: Vec<HashWeight> = seeds.iter().map(|&(seed, den)| HashWeight { seed, den }).collect();
        let refs: Vec<&dyn Weight> = ws.iter().map(|w| w as &dyn Weight).collect();
        for n in 1..=2 {
            for r in check_average_chain(&cert, &phi, &psi, &PhiMap::Square, &refs, n).unwrap() {
                prop_assert!(r.holds);
                prop_assert!(r.lhs <= r.rhs);
            }
        }
    }

    #[test]
    fn thinning_avoids_enforced_values(values in prop::collection::btree_set(-20i64..20, 1..8), two_axes in any::<bool>()) {
        let g = GroupDescriptor::lattice(2);
        let axes = if two_axes { vec![0, 1] } else { vec![1] };
        let cfg = ThinConfig {
            axes: axes.clone(),
            q: QSchedule::Auto,
            enforced: values.iter().map(|&v| Int::from(v)).collect(),
            max_steps: 4,
            max_index: 2000,
        };
        let r = thin_folner(&boxes(&g), &cfg).unwrap();
        for stage in &r.stages {
            for s in &stage.steps {
                let bound = Rational::new(Int::from(s.k as i64 - 1), Int::from(s.k as i64));
                prop_assert!(s.retained_fraction >= bound);
            }
        }
        for k in 2..=r.steps().len() as u32 {
            let mut bad = false;
            r.family.set(k).unwrap().for_each(u64::MAX, |x| {
                bad |= axes.iter().any(|&i| values.contains(&x[i].to_i64().unwrap()));
            }).unwrap();
            prop_assert!(!bad, "set {} meets an enforced value", k);
        }
    }

    #[test]
    fn approach_points_satisfy_the_definition(m in 2i64..6, r in 0i64..6, s in -4i64..5) {
        let g = GroupDescriptor::lattice(1);
        let a = SetFamily::congruence(&g, &[m], &[r], None).unwrap();
        let sys = SymbolicSystem::new(&a);
        let s = g.element([s]).unwrap();
        let x1 = sys.base_point().translate(&g, &s);
        let x2 = x1.translate(&g, &s);
        let window = graded_ball(&g, 3);
        let domain = graded_ball(&g, 30);
        let found = find_approach(&sys, &x1, &x2, &window, &domain, usize::MAX);
        let mut expect = Vec::new();
        for cand in &domain {
            let ok = window.iter().all(|h| {
                let hg = g.mul(h, cand).unwrap();
                a.contains(&hg) == x1.eval(&g, h) && x1.eval(&g, &hg) == x2.eval(&g, h)
            });
            if ok {
                expect.push(cand.clone());
            }
        }
        expect.sort();
        prop_assert_eq!(found, expect);
    }

    #[test]
    fn greedy_output_meets_its_conditions(m in 2i64..5, r in 0i64..5, t in -3i64..4, k in 1usize..6) {
        let g = GroupDescriptor::lattice(1);
        let a = SetFamily::congruence(&g, &[m], &[r], None).unwrap();
        let sys = SymbolicSystem::new(&a);
        let base = Point::Indicator(a.clone());
        let x1 = base.translate(&g, &g.element([1i64]).unwrap());
        let t = g.element([t]).unwrap();
        let (e, f) = (Cylinder::at(g.identity()), Cylinder::at(t.clone()));
        let cands = graded_ball(&g, 20);
        let ex = greedy_extract(&sys, &x1, &cands, &e, &f, k);
        let b = &ex.b;
        prop_assert!(b.len() == k || ex.blocked.is_some());
        for (i, bi) in b.iter().enumerate() {
            prop_assert!(a.contains(bi));
            for bj in &b[i + 1..] {
                let p = g.mul(&g.mul(bi, bj).unwrap(), &t).unwrap();
                prop_assert!(a.contains(&p));
            }
        }
    }

    #[test]
    fn search_is_sound(elems in prop::collection::btree_set(-40i64..40, 0..40), k in 2usize..4, both in any::<bool>()) {
        let g = GroupDescriptor::lattice(1);
        let a = SetFamily::from_coords(&g, elems.iter().map(|&v| [v])).unwrap();
        let order = if both { Order::Both } else { Order::Increasing };
        let cfg = SearchConfig::new(k, ShiftSide::LeftShift, order);
        let out = search_witness(&a, &graded_ball(&g, 20), &graded_ball(&g, 2), &cfg).unwrap();
        if let Some(w) = out.witness {
            prop_assert_eq!(w.b.len(), k);
            prop_assert!(verify_witness(&a, &w).unwrap().passed);
        }
    }
}

#[test]
fn extraction_is_deterministic_and_verified() {
    let g = GroupDescriptor::lattice(1);
    let a = SetFamily::congruence(&g, &[3], &[1], None).unwrap();
    let cfg = ExtractConfig::balls(&g, 6, 3, 3, 6, 90);
    let first = end_to_end_extract(&a, &cfg).unwrap();
    let second = end_to_end_extract(&a, &cfg).unwrap();
    assert_eq!(first.witness, second.witness);
    assert!(verify_witness(&a, &first.witness).unwrap().passed);
}
