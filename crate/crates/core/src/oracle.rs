//! Brute-force ground truth for small instances.
//!
//! Candidates are every good subset of size at most `⌊α⌋` crossed with every
//! set of cake cells that fits the remaining budget. Cells come from the
//! uniform grid `c·j/grid` refined at every agent breakpoint, so each cell is
//! approved entirely or not at all by each agent and no cell is longer than
//! `c/grid`. Without cake the enumeration is exact.

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atoms::{breakpoints, split_cake};
use crate::error::{Error, Result};
use crate::groups::Limits;
use crate::harmonic::{score_of_utilities, HarmonicValue};
use crate::interval::{Interval, IntervalSet};
use crate::model::{Bundle, Instance};
use crate::rational::{self, Rational};
use crate::rules::subsets_up_to;
use crate::verify::{Mode, Verifier};

/// Cells beyond this are never enumerated, whatever the limits say.
const MAX_CELLS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationConfig {
    /// Uniform grid resolution for the cake.
    pub cake_grid: usize,
    /// Largest number of goods in a candidate (further capped by `⌊α⌋`).
    pub good_cap: usize,
}

impl Default for EnumerationConfig {
    fn default() -> Self {
        EnumerationConfig {
            cake_grid: 1,
            good_cap: usize::MAX,
        }
    }
}

impl EnumerationConfig {
    pub fn with_grid(cake_grid: usize) -> Self {
        EnumerationConfig {
            cake_grid,
            ..Self::default()
        }
    }
}

/// The candidate space of one instance.
struct Lattice<'a> {
    inst: &'a Instance,
    cells: Vec<Interval>,
    /// Total cell length for every cell mask.
    mask_length: Vec<Rational>,
    /// Cells each agent approves.
    approved_cells: Vec<u64>,
    good_sets: Vec<Vec<usize>>,
}

impl<'a> Lattice<'a> {
    fn new(inst: &'a Instance, cfg: &EnumerationConfig, limits: &Limits) -> Result<Self> {
        if cfg.cake_grid == 0 {
            return Err(Error::Domain("cake grid must be positive".into()));
        }
        let cells = if inst.has_cake() {
            let c = inst.cake_length();
            let mut points = breakpoints(inst);
            points.extend((0..=cfg.cake_grid).map(|j| c * rational::from_usize(j) / rational::from_usize(cfg.cake_grid)));
            points.sort();
            points.dedup();
            split_cake(&inst.full_cake(), &points)
        } else {
            Vec::new()
        };
        let largest = rational::floor_usize(inst.alpha()).min(inst.m()).min(cfg.good_cap);
        let good_sets = subsets_up_to(inst.m(), largest);
        let too_many = cells.len() > MAX_CELLS
            || (good_sets.len() as u128) << cells.len() > limits.max_candidates as u128;
        if too_many && !(limits.force && cells.len() <= MAX_CELLS) {
            return Err(Error::Capacity(format!(
                "{} good subsets times 2^{} cell subsets exceed the candidate cap of {}",
                good_sets.len(),
                cells.len(),
                limits.max_candidates
            )));
        }
        let mut mask_length = vec![Rational::zero(); 1usize << cells.len()];
        for mask in 1..mask_length.len() {
            let low = mask.trailing_zeros() as usize;
            mask_length[mask] = &mask_length[mask & (mask - 1)] + cells[low].length();
        }
        let approved_cells = inst
            .agents()
            .iter()
            .map(|a| {
                cells
                    .iter()
                    .enumerate()
                    .filter(|(_, cell)| a.cake.contains_point(&cell.midpoint()))
                    .fold(0u64, |acc, (k, _)| acc | (1 << k))
            })
            .collect();
        Ok(Lattice {
            inst,
            cells,
            mask_length,
            approved_cells,
            good_sets,
        })
    }

    /// Cell masks affordable alongside `goods`, in increasing order.
    fn masks(&self, goods: usize) -> impl Iterator<Item = usize> + '_ {
        let budget = self.inst.alpha() - rational::from_usize(goods);
        (0..self.mask_length.len()).filter(move |&mask| self.mask_length[mask] <= budget)
    }

    fn bundle(&self, goods: &[usize], mask: usize) -> Bundle {
        let pairs = (0..self.cells.len())
            .filter(|k| mask >> k & 1 == 1)
            .map(|k| (self.cells[k].lo.clone(), self.cells[k].hi.clone()))
            .collect();
        let cake = IntervalSet::normalize(pairs).expect("grid cells are well formed");
        Bundle::new(cake, goods.iter().copied())
    }

    fn utilities(&self, goods: &[usize], mask: usize) -> Vec<Rational> {
        self.inst
            .agents()
            .iter()
            .zip(&self.approved_cells)
            .map(|(a, &cells)| {
                let shared = goods.iter().filter(|g| a.goods.contains(g)).count();
                rational::from_usize(shared) + &self.mask_length[mask & cells as usize]
            })
            .collect()
    }

    fn count(&self) -> u64 {
        self.good_sets
            .iter()
            .map(|goods| self.masks(goods.len()).count() as u64)
            .sum()
    }
}

/// Every candidate allocation, goods subsets by size then lexicographically,
/// cell masks in increasing order within each.
pub fn enumerate_allocations(inst: &Instance, cfg: &EnumerationConfig, limits: &Limits) -> Result<Vec<Bundle>> {
    let lattice = Lattice::new(inst, cfg, limits)?;
    Ok(lattice
        .good_sets
        .iter()
        .flat_map(|goods| lattice.masks(goods.len()).map(|mask| lattice.bundle(goods, mask)))
        .collect())
}

/// Number of candidate allocations.
pub fn count_allocations(inst: &Instance, cfg: &EnumerationConfig, limits: &Limits) -> Result<u64> {
    Ok(Lattice::new(inst, cfg, limits)?.count())
}

/// True when no candidate satisfies EJR-β in the given mode.
pub fn oracle_no_ejr_beta(
    inst: &Instance,
    beta: &Rational,
    mode: Mode,
    cfg: &EnumerationConfig,
    limits: &Limits,
) -> Result<bool> {
    let lattice = Lattice::new(inst, cfg, limits)?;
    let verifier = Verifier::new(inst, limits)?;
    let zero = Rational::zero();
    let found = lattice.good_sets.par_iter().map(|goods| {
        for mask in lattice.masks(goods.len()) {
            let report = verifier.ejr_beta(&lattice.bundle(goods, mask), beta, mode, &zero)?;
            if report.pass {
                return Ok(true);
            }
        }
        Ok(false)
    });
    let found: Vec<bool> = found.collect::<Result<_>>()?;
    Ok(!found.into_iter().any(|f| f))
}

/// Groups (as agent lists) with `|X| ≥ t·n/α` and a common bundle of size at least `t`.
pub fn cohesive_groups(inst: &Instance, t: &Rational, limits: &Limits) -> Result<Vec<Vec<usize>>> {
    let n = inst.n();
    if n >= 64 || (!limits.force && (1u64 << n) > limits.max_candidates) {
        return Err(Error::Capacity(format!("2^{n} agent subsets exceed the candidate cap")));
    }
    let mut out = Vec::new();
    for mask in 1u64..(1u64 << n) {
        let group: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        if &inst.group_cap(group.len()) < t {
            continue;
        }
        if &inst.common_bundle(&group)?.size() >= t {
            out.push(group);
        }
    }
    Ok(out)
}

/// `max_A min_X avg_X(A)` over candidates `A` and `t`-cohesive groups `X`.
/// `None` means no group is `t`-cohesive, so the minimum is `+∞`.
pub fn oracle_min_max_avg(
    inst: &Instance,
    t: &Rational,
    cfg: &EnumerationConfig,
    limits: &Limits,
) -> Result<Option<Rational>> {
    if !t.is_positive() {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    let groups = cohesive_groups(inst, t, limits)?;
    if groups.is_empty() {
        return Ok(None);
    }
    let lattice = Lattice::new(inst, cfg, limits)?;
    let best = lattice
        .good_sets
        .par_iter()
        .map(|goods| {
            lattice
                .masks(goods.len())
                .map(|mask| {
                    let u = lattice.utilities(goods, mask);
                    groups
                        .iter()
                        .map(|g| g.iter().map(|&i| &u[i]).sum::<Rational>() / rational::from_usize(g.len()))
                        .min()
                        .expect("at least one group")
                })
                .max()
                .expect("the empty cake set always fits")
        })
        .max()
        .expect("at least the empty good set");
    Ok(Some(best))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// `Σ_i H_{u_i}`.
    Gpav,
    /// Most agents with positive utility, then the largest product of those utilities.
    Nash,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveValue {
    Gpav(HarmonicValue),
    Nash {
        positive: usize,
        #[serde(with = "rational::serde_str")]
        product: Rational,
    },
}

impl ObjectiveValue {
    fn beats(&self, other: &ObjectiveValue) -> bool {
        match (self, other) {
            (ObjectiveValue::Gpav(a), ObjectiveValue::Gpav(b)) => a.value > b.value,
            (
                ObjectiveValue::Nash { positive, product },
                ObjectiveValue::Nash {
                    positive: p2,
                    product: q2,
                },
            ) => (positive, product) > (p2, q2),
            _ => unreachable!("objectives are never mixed"),
        }
    }
}

fn evaluate(objective: Objective, utilities: &[Rational], tol: f64) -> Result<ObjectiveValue> {
    Ok(match objective {
        Objective::Gpav => ObjectiveValue::Gpav(score_of_utilities(utilities, tol)?),
        Objective::Nash => {
            let positive: Vec<&Rational> = utilities.iter().filter(|u| u.is_positive()).collect();
            ObjectiveValue::Nash {
                positive: positive.len(),
                product: positive.into_iter().fold(Rational::one(), |acc, u| acc * u),
            }
        }
    })
}

/// The best candidate under `objective`; ties go to the first in enumeration order.
pub fn oracle_discretized_opt(
    inst: &Instance,
    objective: Objective,
    cfg: &EnumerationConfig,
    tol: f64,
    limits: &Limits,
) -> Result<(Bundle, ObjectiveValue)> {
    let lattice = Lattice::new(inst, cfg, limits)?;
    let partial: Vec<(usize, usize, ObjectiveValue)> = lattice
        .good_sets
        .par_iter()
        .enumerate()
        .map(|(gi, goods)| {
            let mut best: Option<(usize, ObjectiveValue)> = None;
            for mask in lattice.masks(goods.len()) {
                let value = evaluate(objective, &lattice.utilities(goods, mask), tol)?;
                if best.as_ref().map_or(true, |(_, b)| value.beats(b)) {
                    best = Some((mask, value));
                }
            }
            let (mask, value) = best.expect("the empty cake set always fits");
            Ok((gi, mask, value))
        })
        .collect::<Result<_>>()?;
    let mut best: Option<(usize, usize, ObjectiveValue)> = None;
    for entry in partial {
        if best.as_ref().map_or(true, |b| entry.2.beats(&b.2)) {
            best = Some(entry);
        }
    }
    let (gi, mask, value) = best.expect("at least the empty good set");
    Ok((lattice.bundle(&lattice.good_sets[gi], mask), value))
}
