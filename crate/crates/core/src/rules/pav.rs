//! Generalized PAV: maximize `Σ_i H_{u_i(A)}` subject to `s(A) ≤ α`.
//!
//! The outer loop enumerates good subsets of size at most `⌊α⌋`. For each, the
//! remaining budget is spread over cake atoms by maximizing a smooth concave
//! function: atoms with the same approvers are merged into one variable, and
//! projected gradient ascent with backtracking runs until the Frank–Wolfe gap
//! (an upper bound on the distance to the optimum for concave objectives) is
//! small. The solution is rounded to rationals and the gap recomputed there.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, Zero};
use rayon::prelude::*;

use crate::atoms::{atomize_full, Atom, AtomKind};
use crate::error::{Error, Result};
use crate::groups::Limits;
use crate::harmonic::{self, HarmonicValue};
use crate::interval::{Interval, IntervalSet};
use crate::model::{Bundle, Instance};
use crate::rational::{self, Rational};
use crate::rules::subsets_up_to;

pub const DEFAULT_EPS: f64 = 1e-9;

const MAX_ITERATIONS: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct CakeOptimum {
    /// Length taken from the left end of each input atom.
    pub lengths: Vec<Rational>,
    pub score: HarmonicValue,
    /// Certified upper bound on `optimum - score`.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PavSolution {
    pub allocation: Bundle,
    pub score: HarmonicValue,
    pub optimality_gap: f64,
    pub atom_lengths: Vec<(Interval, Rational)>,
}

/// The merged variables of the inner problem.
struct Problem {
    base: Vec<f64>,
    /// Approvers of each variable.
    members: Vec<Vec<usize>>,
    caps: Vec<f64>,
    budget: f64,
    tol: f64,
}

impl Problem {
    fn utilities(&self, y: &[f64]) -> Vec<f64> {
        let mut u = self.base.clone();
        for (g, members) in self.members.iter().enumerate() {
            for &i in members {
                u[i] += y[g];
            }
        }
        u
    }

    fn value(&self, y: &[f64]) -> Result<f64> {
        self.utilities(y)
            .iter()
            .try_fold(0.0, |acc, &u| Ok(acc + harmonic::harmonic(u.max(0.0), self.tol)?.value))
    }

    fn gradient(&self, y: &[f64]) -> Vec<f64> {
        let slopes: Vec<f64> = self
            .utilities(y)
            .iter()
            .map(|&u| harmonic::harmonic_slope(u.max(0.0)))
            .collect();
        self.members
            .iter()
            .map(|m| m.iter().map(|&i| slopes[i]).sum())
            .collect()
    }

    /// `max_{s feasible} ∇F(y)·(s - y)`: fill the budget in order of gradient.
    fn frank_wolfe_gap(&self, y: &[f64], grad: &[f64]) -> f64 {
        let mut order: Vec<usize> = (0..y.len()).collect();
        order.sort_by(|&a, &b| grad[b].total_cmp(&grad[a]));
        let mut left = self.budget;
        let mut best = 0.0;
        for g in order {
            if left <= 0.0 || grad[g] <= 0.0 {
                break;
            }
            let take = self.caps[g].min(left);
            best += grad[g] * take;
            left -= take;
        }
        let current: f64 = grad.iter().zip(y).map(|(g, y)| g * y).sum();
        (best - current).max(0.0)
    }

    /// Euclidean projection onto `{0 ≤ y ≤ cap, Σ y = budget}`.
    fn project(&self, v: &[f64]) -> Vec<f64> {
        let clamp = |tau: f64| -> Vec<f64> {
            v.iter()
                .zip(&self.caps)
                .map(|(&x, &c)| (x - tau).clamp(0.0, c))
                .collect()
        };
        let total = |y: &[f64]| y.iter().sum::<f64>();
        let (mut lo, mut hi) = (
            v.iter().zip(&self.caps).map(|(x, c)| x - c).fold(f64::INFINITY, f64::min),
            v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        );
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if total(&clamp(mid)) > self.budget {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        clamp(hi)
    }

    fn solve(&self, target: f64) -> Result<Vec<f64>> {
        let total_cap: f64 = self.caps.iter().sum();
        let mut y: Vec<f64> = self
            .caps
            .iter()
            .map(|c| c * self.budget / total_cap)
            .collect();
        let mut value = self.value(&y)?;
        let mut step = 1.0;
        for _ in 0..MAX_ITERATIONS {
            let grad = self.gradient(&y);
            if self.frank_wolfe_gap(&y, &grad) <= target {
                break;
            }
            loop {
                let trial: Vec<f64> = y.iter().zip(&grad).map(|(y, g)| y + step * g).collect();
                let next = self.project(&trial);
                let moved: f64 = next.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
                let linear: f64 = next.iter().zip(&y).zip(&grad).map(|((a, b), g)| g * (a - b)).sum();
                let next_value = self.value(&next)?;
                if next_value >= value + linear - moved / (2.0 * step) - 1e-15 * value.abs() {
                    y = next;
                    value = next_value;
                    step *= 1.5;
                    break;
                }
                step *= 0.5;
                if step < 1e-18 {
                    return Ok(y);
                }
            }
        }
        Ok(y)
    }
}

/// Spreads `budget` over the cake atoms to maximize `Σ_i H_{u_i}` with the
/// goods in `fixed_goods` already chosen. `atoms` must be cake atoms.
pub fn concave_cake_opt(
    inst: &Instance,
    atoms: &[Atom],
    fixed_goods: &BTreeSet<usize>,
    budget: &Rational,
    eps: f64,
    tol: f64,
) -> Result<CakeOptimum> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    if budget.is_negative() {
        return Err(Error::Domain(format!("negative budget {budget}")));
    }
    let fixed = Bundle::goods_only(fixed_goods.iter().copied());
    let base_exact = inst.utilities(&fixed);

    let mut merged: BTreeMap<&[usize], Vec<usize>> = BTreeMap::new();
    for (a, atom) in atoms.iter().enumerate() {
        let AtomKind::Cake(_) = &atom.kind else {
            return Err(Error::Domain("concave_cake_opt takes cake atoms only".into()));
        };
        if !atom.approvers.is_empty() {
            merged.entry(atom.approvers.as_slice()).or_default().push(a);
        }
    }
    let members: Vec<Vec<usize>> = merged.keys().map(|k| k.to_vec()).collect();
    let parts: Vec<Vec<usize>> = merged.into_values().collect();
    let caps_exact: Vec<Rational> = parts
        .iter()
        .map(|p| p.iter().map(|&a| atoms[a].size()).sum())
        .collect();

    let total: Rational = caps_exact.iter().sum();
    let amounts: Vec<Rational> = if &total <= budget {
        caps_exact.clone()
    } else {
        let problem = Problem {
            base: base_exact.iter().map(rational::to_f64).collect(),
            members: members.clone(),
            caps: caps_exact.iter().map(rational::to_f64).collect(),
            budget: rational::to_f64(budget),
            tol,
        };
        let y = problem.solve(eps / 4.0)?;
        round_feasible(&y, &caps_exact, budget)
    };

    let mut lengths = vec![Rational::zero(); atoms.len()];
    for (part, amount) in parts.iter().zip(&amounts) {
        let mut left = amount.clone();
        for &a in part {
            let take = rational::min(&atoms[a].size(), &left);
            left -= &take;
            lengths[a] = take;
        }
    }

    let mut utilities = base_exact;
    for (m, amount) in members.iter().zip(&amounts) {
        for &i in m {
            utilities[i] += amount;
        }
    }
    let score = harmonic::score_of_utilities(&utilities, tol)?;
    let gap = if &total <= budget {
        0.0
    } else {
        let problem = Problem {
            base: inst.utilities(&fixed).iter().map(rational::to_f64).collect(),
            members,
            caps: caps_exact.iter().map(rational::to_f64).collect(),
            budget: rational::to_f64(budget),
            tol,
        };
        let y: Vec<f64> = amounts.iter().map(rational::to_f64).collect();
        let grad = problem.gradient(&y);
        let scale: f64 = grad.iter().zip(&problem.caps).map(|(g, c)| g * c).sum();
        problem.frank_wolfe_gap(&y, &grad) + 1e-13 * (1.0 + scale)
    };
    Ok(CakeOptimum {
        lengths,
        score,
        gap,
    })
}

/// Rational amounts near `y` within the caps and the budget.
fn round_feasible(y: &[f64], caps: &[Rational], budget: &Rational) -> Vec<Rational> {
    let mut out: Vec<Rational> = y
        .iter()
        .zip(caps)
        .map(|(&v, cap)| {
            let r = rational::approximate(v.max(0.0), 1e-14 * (1.0 + v.abs()))
                .unwrap_or_else(Rational::zero);
            rational::min(&rational::max(&r, &Rational::zero()), cap)
        })
        .collect();
    let mut excess: Rational = out.iter().sum::<Rational>() - budget;
    while excess.is_positive() {
        let (g, _) = out
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1))
            .expect("positive excess needs a positive amount");
        let cut = rational::min(&out[g], &excess);
        out[g] -= &cut;
        excess -= cut;
    }
    out
}

/// Runs Generalized PAV. The reported gap bounds `optimum - score`.
pub fn generalized_pav(inst: &Instance, eps: f64, tol: f64, limits: &Limits) -> Result<PavSolution> {
    limits.check_goods(inst.m())?;
    let atoms = atomize_full(inst);
    let cake_atoms: Vec<Atom> = atoms.into_iter().filter(|a| !a.is_good()).collect();
    let largest = rational::floor_usize(inst.alpha()).min(inst.m());
    let subsets = subsets_up_to(inst.m(), largest);

    let results: Vec<(CakeOptimum, BTreeSet<usize>)> = subsets
        .into_par_iter()
        .map(|goods| {
            let goods: BTreeSet<usize> = goods.into_iter().collect();
            let budget = inst.alpha() - rational::from_usize(goods.len());
            concave_cake_opt(inst, &cake_atoms, &goods, &budget, eps, tol).map(|r| (r, goods))
        })
        .collect::<Result<_>>()?;

    let mut best = 0;
    for (k, (r, _)) in results.iter().enumerate() {
        if r.score.value > results[best].0.score.value {
            best = k;
        }
    }
    let (opt, goods) = &results[best];
    let ceiling = results
        .iter()
        .map(|(r, _)| r.score.value + r.gap + r.score.abs_error_bound)
        .fold(f64::NEG_INFINITY, f64::max);
    let optimality_gap = (ceiling - (opt.score.value - opt.score.abs_error_bound)).max(0.0);
    if optimality_gap > eps {
        return Err(Error::Domain(format!(
            "could not certify an optimality gap below {eps} (reached {optimality_gap})"
        )));
    }

    let mut pieces = Vec::new();
    let mut atom_lengths = Vec::new();
    for (atom, len) in cake_atoms.iter().zip(&opt.lengths) {
        if let AtomKind::Cake(iv) = &atom.kind {
            if len.is_positive() {
                pieces.push((iv.lo.clone(), &iv.lo + len));
            }
            atom_lengths.push((iv.clone(), len.clone()));
        }
    }
    let allocation = Bundle::new(IntervalSet::normalize(pieces)?, goods.iter().copied());
    debug_assert!(&allocation.size() <= inst.alpha());
    Ok(PavSolution {
        allocation,
        score: opt.score,
        optimality_gap,
        atom_lengths,
    })
}
