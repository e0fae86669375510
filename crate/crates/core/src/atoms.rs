//! Atomization: splitting the resource into pieces that every agent approves
//! either entirely or not at all.
//!
//! Cake atoms are delimited by the endpoints of the agents' approved intervals
//! (plus `0` and `c`). [`AtomIndex`] numbers the atoms of the whole resource and
//! stores each agent's approval as a bitset, so common bundles of large groups
//! are a few word-wise ANDs.

use std::collections::BTreeSet;

use num_traits::Zero;

use crate::interval::{Interval, IntervalSet};
use crate::model::{Bundle, Instance};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomKind {
    Good(usize),
    Cake(Interval),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub kind: AtomKind,
    /// Agents approving the atom, ascending.
    pub approvers: Vec<usize>,
}

impl Atom {
    pub fn size(&self) -> Rational {
        match &self.kind {
            AtomKind::Good(_) => rational::one(),
            AtomKind::Cake(iv) => iv.length(),
        }
    }

    pub fn is_good(&self) -> bool {
        matches!(self.kind, AtomKind::Good(_))
    }

    pub fn to_bundle(&self) -> Bundle {
        match &self.kind {
            AtomKind::Good(g) => Bundle::goods_only([*g]),
            AtomKind::Cake(iv) => Bundle::cake_only(
                IntervalSet::single(iv.lo.clone(), iv.hi.clone()).expect("atom interval"),
            ),
        }
    }
}

/// Every endpoint of an approved interval, plus `0` and `c`.
pub fn breakpoints(inst: &Instance) -> Vec<Rational> {
    let mut points: BTreeSet<Rational> = inst
        .agents()
        .iter()
        .flat_map(|a| a.cake.endpoints().cloned())
        .collect();
    points.insert(Rational::zero());
    points.insert(inst.cake_length().clone());
    points.into_iter().collect()
}

/// Splits `cake` at the given sorted breakpoints.
pub fn split_cake(cake: &IntervalSet, points: &[Rational]) -> Vec<Interval> {
    let mut out = Vec::new();
    for iv in cake.intervals() {
        let start = points.partition_point(|p| p <= &iv.lo);
        let mut lo = iv.lo.clone();
        for p in &points[start..] {
            if p >= &iv.hi {
                break;
            }
            out.push(Interval {
                lo: lo.clone(),
                hi: p.clone(),
            });
            lo = p.clone();
        }
        out.push(Interval {
            lo,
            hi: iv.hi.clone(),
        });
    }
    out
}

fn cake_approvers(inst: &Instance, piece: &Interval) -> Vec<usize> {
    let mid = piece.midpoint();
    inst.agents()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.cake.contains_point(&mid))
        .map(|(i, _)| i)
        .collect()
}

/// Atoms of the remaining resource: goods first (by index), then cake pieces left to right.
pub fn atomize(
    inst: &Instance,
    remaining_cake: &IntervalSet,
    remaining_goods: &BTreeSet<usize>,
) -> Vec<Atom> {
    let mut atoms: Vec<Atom> = remaining_goods
        .iter()
        .map(|&g| Atom {
            kind: AtomKind::Good(g),
            approvers: inst
                .agents()
                .iter()
                .enumerate()
                .filter(|(_, a)| a.goods.contains(&g))
                .map(|(i, _)| i)
                .collect(),
        })
        .collect();
    let points = breakpoints(inst);
    for piece in split_cake(remaining_cake, &points) {
        let approvers = cake_approvers(inst, &piece);
        atoms.push(Atom {
            kind: AtomKind::Cake(piece),
            approvers,
        });
    }
    atoms
}

/// Atoms of the whole resource.
pub fn atomize_full(inst: &Instance) -> Vec<Atom> {
    atomize(inst, &inst.full_cake(), &(0..inst.m()).collect())
}

/// Fixed-width bitset over atom indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomSet {
    words: Vec<u64>,
}

impl AtomSet {
    pub fn with_capacity(bits: usize) -> Self {
        AtomSet {
            words: vec![0; bits.div_ceil(64).max(1)],
        }
    }

    pub fn insert(&mut self, bit: usize) {
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn contains(&self, bit: usize) -> bool {
        self.words[bit / 64] & (1 << (bit % 64)) != 0
    }

    pub fn and(&self, other: &AtomSet) -> AtomSet {
        AtomSet {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_subset(&self, other: &AtomSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            (0..64).filter(move |b| word & (1 << b) != 0).map(move |b| w * 64 + b)
        })
    }
}

/// The atoms of an instance with per-agent approval bitsets.
#[derive(Debug, Clone)]
pub struct AtomIndex {
    pub atoms: Vec<Atom>,
    approvals: Vec<AtomSet>,
}

impl AtomIndex {
    pub fn new(inst: &Instance) -> Self {
        let atoms = atomize_full(inst);
        let mut approvals = vec![AtomSet::with_capacity(atoms.len()); inst.n()];
        for (a, atom) in atoms.iter().enumerate() {
            for &i in &atom.approvers {
                approvals[i].insert(a);
            }
        }
        AtomIndex { atoms, approvals }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn approval(&self, agent: usize) -> &AtomSet {
        &self.approvals[agent]
    }

    /// `(number of goods, cake length)` of an atom set.
    pub fn split_size(&self, set: &AtomSet) -> (usize, Rational) {
        let mut goods = 0;
        let mut cake = Rational::zero();
        for a in set.iter() {
            match &self.atoms[a].kind {
                AtomKind::Good(_) => goods += 1,
                AtomKind::Cake(iv) => cake += iv.length(),
            }
        }
        (goods, cake)
    }

    pub fn size(&self, set: &AtomSet) -> Rational {
        let (goods, cake) = self.split_size(set);
        cake + rational::from_usize(goods)
    }

    pub fn to_bundle(&self, set: &AtomSet) -> Bundle {
        let mut goods = BTreeSet::new();
        let mut pieces = Vec::new();
        for a in set.iter() {
            match &self.atoms[a].kind {
                AtomKind::Good(g) => {
                    goods.insert(*g);
                }
                AtomKind::Cake(iv) => pieces.push((iv.lo.clone(), iv.hi.clone())),
            }
        }
        Bundle {
            cake: IntervalSet::normalize(pieces).expect("atom intervals are well formed"),
            goods,
        }
    }

    /// Common approval set of a group (all atoms for the empty group).
    pub fn common(&self, group: &[usize]) -> AtomSet {
        let mut it = group.iter();
        let Some(&first) = it.next() else {
            let mut all = AtomSet::with_capacity(self.len());
            (0..self.len()).for_each(|a| all.insert(a));
            return all;
        };
        it.fold(self.approvals[first].clone(), |acc, &i| {
            acc.and(&self.approvals[i])
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn fig1() -> Instance {
        let cake = IntervalSet::single(int(0), ratio(9, 10)).unwrap();
        Instance::with_indexed_goods(
            ratio(9, 10),
            2,
            vec![Bundle::new(cake.clone(), [0]), Bundle::new(cake, [1])],
            int(2),
        )
        .unwrap()
    }

    #[test]
    fn fig1_atoms() {
        let inst = fig1();
        let atoms = atomize_full(&inst);
        assert_eq!(atoms.len(), 3);
        assert_eq!(atoms[0].kind, AtomKind::Good(0));
        assert_eq!(atoms[0].approvers, vec![0]);
        assert_eq!(atoms[1].kind, AtomKind::Good(1));
        assert_eq!(atoms[1].approvers, vec![1]);
        assert_eq!(
            atoms[2].kind,
            AtomKind::Cake(Interval {
                lo: int(0),
                hi: ratio(9, 10)
            })
        );
        assert_eq!(atoms[2].approvers, vec![0, 1]);
    }

    #[test]
    fn goods_only_instance_has_no_cake_atoms() {
        let inst = Instance::with_indexed_goods(
            int(0),
            2,
            vec![Bundle::goods_only([0]), Bundle::goods_only([0, 1])],
            int(1),
        )
        .unwrap();
        let atoms = atomize_full(&inst);
        assert!(atoms.iter().all(Atom::is_good));
        assert_eq!(atoms[0].approvers, vec![0, 1]);
    }

    #[test]
    fn breakpoints_split_overlapping_approvals() {
        let a = IntervalSet::single(int(0), ratio(1, 2)).unwrap();
        let b = IntervalSet::single(ratio(1, 4), int(1)).unwrap();
        let inst = Instance::with_indexed_goods(
            int(1),
            0,
            vec![Bundle::cake_only(a), Bundle::cake_only(b)],
            int(1),
        )
        .unwrap();
        let atoms = atomize_full(&inst);
        let pieces: Vec<_> = atoms
            .iter()
            .map(|a| match &a.kind {
                AtomKind::Cake(iv) => (iv.lo.clone(), iv.hi.clone()),
                AtomKind::Good(_) => unreachable!(),
            })
            .collect();
        assert_eq!(
            pieces,
            vec![
                (int(0), ratio(1, 4)),
                (ratio(1, 4), ratio(1, 2)),
                (ratio(1, 2), int(1))
            ]
        );
        assert_eq!(atoms[0].approvers, vec![0]);
        assert_eq!(atoms[1].approvers, vec![0, 1]);
        assert_eq!(atoms[2].approvers, vec![1]);
    }

    #[test]
    fn atom_sizes_add_up() {
        let inst = fig1();
        let remaining = IntervalSet::single(ratio(1, 10), ratio(1, 2)).unwrap();
        let goods: BTreeSet<usize> = [1].into();
        let atoms = atomize(&inst, &remaining, &goods);
        let total = atoms.iter().fold(Rational::zero(), |acc, a| acc + a.size());
        assert_eq!(total, remaining.measure() + int(1));
    }

    #[test]
    fn index_common_bundles() {
        let inst = fig1();
        let index = AtomIndex::new(&inst);
        let common = index.common(&[0, 1]);
        assert_eq!(index.split_size(&common), (0, ratio(9, 10)));
        assert_eq!(index.to_bundle(&common), inst.common_bundle(&[0, 1]).unwrap());
        assert_eq!(index.size(index.approval(0)), ratio(19, 10));
    }
}
