use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use prodset::region::{CoordBox, StridedInterval};
use prodset::sets::HeisenbergScales;
use prodset::sumsets::{conjugate_transform, product_set, verify_witness, Order, ShiftSide, Witness};
use prodset::{GroupDescriptor, GroupElement, Int, SetFamily};

fn groups() -> Vec<GroupDescriptor> {
    vec![
        GroupDescriptor::lattice(3),
        GroupDescriptor::heisenberg(),
        GroupDescriptor::unitriangular(4).unwrap(),
        GroupDescriptor::finite_vector(5, 3).unwrap(),
    ]
}

fn element(g: &GroupDescriptor, raw: &[i64]) -> GroupElement {
    g.element_reduced(raw[..g.dim()].iter().copied()).unwrap()
}

fn coords() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-1000i64..1000, 6)
}

proptest! {
    #[test]
    fn group_axioms(which in 0usize..4, a in coords(), b in coords(), c in coords()) {
        let g = &groups()[which];
        let (a, b, c) = (element(g, &a), element(g, &b), element(g, &c));
        let ab_c = g.mul(&g.mul(&a, &b).unwrap(), &c).unwrap();
        let a_bc = g.mul(&a, &g.mul(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(ab_c, a_bc);
        let e = g.identity();
        prop_assert_eq!(g.mul(&a, &e).unwrap(), a.clone());
        prop_assert_eq!(g.mul(&e, &a).unwrap(), a.clone());
        let ai = g.inv(&a).unwrap();
        prop_assert!(g.mul(&a, &ai).unwrap().is_identity());
        prop_assert!(g.mul(&ai, &a).unwrap().is_identity());
        if g.is_abelian() {
            prop_assert_eq!(g.mul(&a, &b).unwrap(), g.mul(&b, &a).unwrap());
        }
    }

    #[test]
    fn square_matches_polynomials(which in 0usize..3, a in coords()) {
        let g = &groups()[which];
        let a = element(g, &a);
        let sq = g.square(&a).unwrap();
        prop_assert_eq!(&sq, &g.mul(&a, &a).unwrap());
        prop_assert_eq!(&sq, &g.square_via_polys(&a).unwrap());
        for (i, p) in g.square_polys().iter().enumerate() {
            let expect = a.coord(i) * &Int::from(2) + p.eval(&a.coords()[..i]);
            prop_assert_eq!(sq.coord(i), &expect);
        }
    }

    #[test]
    fn both_orders_are_the_union(which in 0usize..4, raw in prop::collection::vec(coords(), 1..6)) {
        let g = &groups()[which];
        let b: Vec<GroupElement> = raw.iter().map(|r| element(g, r)).collect::<BTreeSet<_>>().into_iter().collect();
        let inc: BTreeSet<_> = product_set(g, &b, Order::Increasing).unwrap().into_iter().collect();
        let dec: BTreeSet<_> = product_set(g, &b, Order::Decreasing).unwrap().into_iter().collect();
        let both: BTreeSet<_> = product_set(g, &b, Order::Both).unwrap().into_iter().collect();
        prop_assert_eq!(&both, &inc.union(&dec).cloned().collect());
        if g.is_abelian() {
            prop_assert_eq!(inc, dec);
        }
    }

    #[test]
    fn witnesses_survive_serialization_and_conjugation(
        which in 0usize..4,
        t in coords(),
        raw in prop::collection::vec(coords(), 2..5),
        left in any::<bool>(),
        order in 0usize..3,
    ) {
        let g = &groups()[which];
        let t = element(g, &t);
        let b: Vec<GroupElement> = raw.iter().map(|r| element(g, r)).collect::<BTreeSet<_>>().into_iter().collect();
        let side = if left { ShiftSide::LeftShift } else { ShiftSide::RightShift };
        let order = [Order::Increasing, Order::Decreasing, Order::Both][order];
        let w = Witness::new(g, t.clone(), b, side, order).unwrap();
        let targets = w.pairs().into_iter().map(|(i, j)| {
            let p = g.mul(&w.b[i], &w.b[j]).unwrap();
            match side {
                ShiftSide::LeftShift => g.mul(&t, &p).unwrap(),
                ShiftSide::RightShift => g.mul(&p, &t).unwrap(),
            }
        });
        let a = SetFamily::explicit(g, targets).unwrap();
        prop_assert!(verify_witness(&a, &w).unwrap().passed);

        let text = serde_json::to_string(&w).unwrap();
        let back: Witness = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &w);
        prop_assert!(verify_witness(&a, &back).unwrap().passed);

        let moved = conjugate_transform(&w).unwrap();
        prop_assert!(moved.side != w.side);
        prop_assert!(verify_witness(&a, &moved).unwrap().passed);
    }
}

#[test]
fn scale_membership_matches_blocks() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for family in [HeisenbergScales::odd(), HeisenbergScales::full()] {
        let blocks: Vec<CoordBox> = (1..=12).map(|n| family.block(n)).collect();
        let g = GroupDescriptor::heisenberg();
        let union = SetFamily::blocks(&g, blocks.clone()).unwrap();
        let mut inside = 0;
        for _ in 0..100_000 {
            // Probes land in or just around a random block.
            let b = &blocks[rng.gen_range(0..12)];
            let mut near = b.axes.iter().map(|a| {
                let lo = a.start.to_i64().unwrap();
                let hi = a.last().map_or(lo, |v| v.to_i64().unwrap());
                rng.gen_range(lo - 2..=hi + 2)
            });
            let (x1, x2, x3) = (near.next().unwrap(), near.next().unwrap(), near.next().unwrap());
            let x: Vec<Int> = [x1, x2, x3].iter().map(|&v| Int::from(v)).collect();
            let naive = blocks.iter().any(|b| b.contains(&x));
            inside += naive as u32;
            let in_range = family.locate(&x[0]).is_some_and(|n| n <= 12);
            if in_range {
                assert_eq!(family.contains(&x), naive, "{x:?}");
                assert_eq!(family.contains_i64([x1, x2, x3]), naive, "{x:?}");
            }
            assert_eq!(union.contains_coords(&x), naive, "{x:?}");
        }
        assert!(inside > 1_000 && inside < 100_000, "only {inside} probes inside");
    }
}

#[test]
fn block_union_matches_naive_membership() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let g = GroupDescriptor::lattice(2);
    let blocks: Vec<CoordBox> = (0..20)
        .map(|_| {
            let axis = |rng: &mut ChaCha8Rng| {
                let start = rng.gen_range(-50..50i64);
                StridedInterval::new(Int::from(start), Int::from(rng.gen_range(1..4i64)), Int::from(rng.gen_range(0..15i64)))
            };
            CoordBox::new(vec![axis(&mut rng), axis(&mut rng)])
        })
        .collect();
    let a = SetFamily::blocks(&g, blocks.clone()).unwrap();
    for _ in 0..100_000 {
        let x = vec![Int::from(rng.gen_range(-60..100i64)), Int::from(rng.gen_range(-60..100i64))];
        assert_eq!(a.contains_coords(&x), blocks.iter().any(|b| b.contains(&x)));
    }
}
