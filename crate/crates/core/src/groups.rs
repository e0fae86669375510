//! Closed groups: pairs `(X, B)` where `B = ∩_{i∈X} R_i` and `X` is every agent
//! (among those considered) whose approval contains `B`.
//!
//! Every nonempty agent subset `Y` sits inside the closed group generated by its
//! common bundle, and that closed group has the same common bundle and at least
//! as many members. Cohesiveness requirements only grow with group size and
//! common-bundle size, so scanning closed groups (and, for per-member
//! conditions, their lowest-utility prefixes) covers all `2^n` subsets. The
//! number of closed groups is the number of distinct intersections of approval
//! sets, which is small for structured instances.

use std::collections::HashSet;

use crate::atoms::{AtomIndex, AtomSet};
use crate::error::{Error, Result};

/// Caps on exhaustive searches. `force` lifts them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Distinct common bundles a group search may visit.
    pub max_common_bundles: usize,
    /// Goods over which subsets are enumerated (GPAV, MNW).
    pub max_enumerated_goods: usize,
    /// Candidate allocations an oracle may enumerate.
    pub max_candidates: u64,
    pub force: bool,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_common_bundles: 1 << 20,
            max_enumerated_goods: 16,
            max_candidates: 1 << 24,
            force: false,
        }
    }
}

impl Limits {
    pub fn forced() -> Self {
        Limits {
            force: true,
            ..Limits::default()
        }
    }

    pub fn check_goods(&self, m: usize) -> Result<()> {
        if !self.force && m > self.max_enumerated_goods {
            return Err(Error::Capacity(format!(
                "{m} goods exceed the enumeration cap of {} (use --force)",
                self.max_enumerated_goods
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosedGroup {
    pub common: AtomSet,
    /// Ascending agent indices.
    pub members: Vec<usize>,
}

/// All closed groups over `agents` with a nonempty common bundle, sorted by members.
pub fn closed_groups(
    index: &AtomIndex,
    agents: &[usize],
    limits: &Limits,
) -> Result<Vec<ClosedGroup>> {
    let mut family: HashSet<AtomSet> = HashSet::new();
    for &i in agents {
        let approval = index.approval(i);
        if approval.is_empty() {
            continue;
        }
        let mut fresh: Vec<AtomSet> = family
            .iter()
            .map(|b| b.and(approval))
            .filter(|b| !b.is_empty())
            .collect();
        fresh.push(approval.clone());
        family.extend(fresh);
        if !limits.force && family.len() > limits.max_common_bundles {
            return Err(Error::Capacity(format!(
                "more than {} distinct common bundles (use --force)",
                limits.max_common_bundles
            )));
        }
    }
    let mut groups: Vec<ClosedGroup> = family
        .into_iter()
        .map(|common| {
            let members = agents
                .iter()
                .copied()
                .filter(|&i| common.is_subset(index.approval(i)))
                .collect();
            ClosedGroup { common, members }
        })
        .collect();
    groups.sort_by(|a, b| a.members.cmp(&b.members).then_with(|| a.common.cmp(&b.common)));
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::IntervalSet;
    use crate::model::{Bundle, Instance};
    use crate::rational::{int, ratio};

    #[test]
    fn fig1_closed_groups() {
        let cake = IntervalSet::single(int(0), ratio(9, 10)).unwrap();
        let inst = Instance::with_indexed_goods(
            ratio(9, 10),
            2,
            vec![Bundle::new(cake.clone(), [0]), Bundle::new(cake, [1])],
            int(2),
        )
        .unwrap();
        let index = AtomIndex::new(&inst);
        let groups = closed_groups(&index, &[0, 1], &Limits::default()).unwrap();
        let members: Vec<_> = groups.iter().map(|g| g.members.clone()).collect();
        assert_eq!(members, vec![vec![0], vec![0, 1], vec![1]]);
    }

    #[test]
    fn every_subset_is_covered_by_its_closure() {
        // Five agents over four goods with overlapping approvals.
        let approvals = [vec![0, 1], vec![1, 2], vec![0, 1, 2], vec![2, 3], vec![1]];
        let inst = Instance::with_indexed_goods(
            int(0),
            4,
            approvals.iter().map(|g| Bundle::goods_only(g.clone())).collect(),
            int(2),
        )
        .unwrap();
        let index = AtomIndex::new(&inst);
        let agents: Vec<usize> = (0..5).collect();
        let groups = closed_groups(&index, &agents, &Limits::default()).unwrap();
        for mask in 1u32..32 {
            let subset: Vec<usize> = (0..5).filter(|i| mask & (1 << i) != 0).collect();
            let common = index.common(&subset);
            if common.is_empty() {
                continue;
            }
            let closure = groups.iter().find(|g| g.common == common).expect("closure present");
            assert!(subset.iter().all(|i| closure.members.contains(i)));
        }
    }

    #[test]
    fn capacity_is_enforced() {
        let inst = Instance::with_indexed_goods(
            int(0),
            6,
            (0..6)
                .map(|i| Bundle::goods_only((0..6).filter(move |&g| g != i)))
                .collect(),
            int(2),
        )
        .unwrap();
        let index = AtomIndex::new(&inst);
        let agents: Vec<usize> = (0..6).collect();
        let tight = Limits {
            max_common_bundles: 10,
            ..Limits::default()
        };
        assert!(closed_groups(&index, &agents, &tight).unwrap_err().is_capacity());
        let forced = Limits { force: true, ..tight };
        assert_eq!(closed_groups(&index, &agents, &forced).unwrap().len(), 62);
    }
}
