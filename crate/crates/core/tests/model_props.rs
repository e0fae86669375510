mod common;

use num_traits::Zero;
use proptest::prelude::*;

use mixvote::atoms::{atomize, atomize_full, AtomKind};
use mixvote::io::{instance_from_json, instance_to_json};
use mixvote::rational::{self, Rational};

use common::{candidates, random_instance, subsets};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn utility_is_bounded_by_both_sizes(seed in any::<u64>()) {
        let inst = random_instance(seed, 6, 4, 3);
        for a in candidates(&inst, 1) {
            for (i, r) in inst.agents().iter().enumerate() {
                let u = inst.utility(i, &a).unwrap();
                prop_assert!(u <= r.size() && u <= a.size());
            }
        }
    }

    #[test]
    fn common_bundle_is_antitone(seed in any::<u64>()) {
        let inst = random_instance(seed, 5, 4, 3);
        let groups: Vec<Vec<usize>> = subsets(inst.n()).collect();
        for x in &groups {
            for y in &groups {
                if x.iter().all(|i| y.contains(i)) {
                    let cx = inst.common_bundle(x).unwrap();
                    let cy = inst.common_bundle(y).unwrap();
                    prop_assert!(cy.is_subset(&cx));
                    prop_assert!(cy.size() <= cx.size());
                }
            }
        }
    }

    #[test]
    fn atoms_partition_the_resource(seed in any::<u64>()) {
        let inst = random_instance(seed, 6, 5, 4);
        let atoms = atomize_full(&inst);
        let total: Rational = atoms.iter().map(|a| a.size()).sum();
        prop_assert_eq!(total, inst.cake_length() + rational::from_usize(inst.m()));
        for atom in &atoms {
            let bundle = atom.to_bundle();
            let expected: Vec<usize> = (0..inst.n())
                .filter(|&i| inst.approval(i).unwrap().overlap(&bundle) == atom.size())
                .collect();
            prop_assert_eq!(&atom.approvers, &expected);
            if let AtomKind::Cake(iv) = &atom.kind {
                // Every agent approves the whole atom or none of it.
                for i in 0..inst.n() {
                    let share = inst.approval(i).unwrap().overlap(&bundle);
                    prop_assert!(share.is_zero() || share == iv.length());
                }
            }
        }
        // Atomizing a remainder covers exactly that remainder.
        if let Some(first) = inst.full_cake().intervals().first() {
            let half = mixvote::IntervalSet::single(first.lo.clone(), first.midpoint()).unwrap();
            let rest = inst.full_cake().difference(&half);
            let goods = (0..inst.m()).step_by(2).collect();
            let part = atomize(&inst, &rest, &goods);
            let size: Rational = part.iter().map(|a| a.size()).sum();
            prop_assert_eq!(size, rest.measure() + rational::from_usize(goods.len()));
        }
    }

    #[test]
    fn json_round_trip_is_exact(seed in any::<u64>()) {
        let inst = random_instance(seed, 8, 6, 4);
        prop_assert_eq!(instance_from_json(&instance_to_json(&inst)).unwrap(), inst);
    }
}
