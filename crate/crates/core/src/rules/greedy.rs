//! GreedyEJR-M.
//!
//! Each round picks the largest `t*` for which some group of remaining agents
//! is `t*`-cohesive and has a commonly approved bundle of size exactly `t*`,
//! removes that group and adds the bundle. For a fixed common bundle with `m*`
//! goods and cake length `ℓ*`, the exactly attainable sizes are
//! `∪_{j ≤ m*} [j, j + ℓ*]`, so the best `t` for a group is a closed-form
//! expression ([`achievable_exact_size`]). Only closed groups need to be
//! considered: closing a group keeps its common bundle and raises its cap.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::atoms::AtomIndex;
use crate::error::{Error, Result};
use crate::groups::{closed_groups, Limits};
use crate::model::{Bundle, Instance};
use crate::rational::{self, Rational};

/// Largest `t ≤ min(cap, m* + ℓ*)` in `∪_{j=0..m*} [j, j + ℓ*]`.
pub fn achievable_exact_size(m_star: usize, ell_star: &Rational, cap: &Rational) -> Rational {
    let total = rational::from_usize(m_star) + ell_star;
    let upper = rational::min(cap, &total);
    if upper <= Rational::zero() {
        return Rational::zero();
    }
    let j = rational::floor_usize(&upper).min(m_star);
    let reach = rational::from_usize(j) + ell_star;
    if upper <= reach {
        upper
    } else {
        reach
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GreedyRound {
    pub t_star: Rational,
    pub group: Vec<usize>,
    pub witness: Bundle,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GreedyTrace {
    pub rounds: Vec<GreedyRound>,
}

impl GreedyTrace {
    /// Union of the round witnesses.
    pub fn allocation(&self) -> Bundle {
        self.rounds
            .iter()
            .fold(Bundle::empty(), |acc, r| acc.union(&r.witness))
    }
}

/// One scripted choice of `(N*, R*)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptStep {
    pub group: Vec<usize>,
    pub witness: Bundle,
}

/// How a round picks among the pairs attaining `t*`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum TieBreaker {
    /// Largest group, then lexicographically smallest; lowest-index goods then leftmost cake.
    #[default]
    Default,
    /// Follow the given steps in order, then continue with the default.
    Script(Vec<ScriptStep>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreakKind {
    Default,
    Script,
}

/// Lowest-index goods first, then the leftmost cake, for a total size of `t`.
fn canonical_witness(common: &Bundle, t: &Rational) -> Bundle {
    let j = rational::floor_usize(t).min(common.goods.len());
    let goods = common.goods.iter().copied().take(j);
    let rest = t - rational::from_usize(j);
    let cake = common
        .cake
        .leftmost(&rest)
        .expect("an attainable size fits in the common bundle");
    Bundle::new(cake, goods)
}

fn check_step(
    inst: &Instance,
    round: usize,
    step: &ScriptStep,
    remaining: &[bool],
    t_star: &Rational,
) -> Result<()> {
    let fail = |reason: String| Err(Error::Script { round, reason });
    if step.group.is_empty() {
        return fail("empty group".into());
    }
    if let Some(&i) = step.group.iter().find(|&&i| i >= inst.n() || !remaining[i]) {
        return fail(format!("agent {i} is not among the remaining agents"));
    }
    let mut sorted = step.group.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != step.group.len() {
        return fail("group lists an agent twice".into());
    }
    if &inst.group_cap(sorted.len()) < t_star {
        return fail(format!(
            "{} agents are not {}-cohesive (need |X|·α/n ≥ t)",
            sorted.len(),
            t_star
        ));
    }
    let common = inst.common_bundle(&sorted)?;
    if !step.witness.is_subset(&common) {
        return fail("witness is not commonly approved by the group".into());
    }
    if &step.witness.size() != t_star {
        return fail(format!(
            "witness has size {} but this round's t* is {}",
            step.witness.size(),
            t_star
        ));
    }
    Ok(())
}

/// Runs GreedyEJR-M. Rounds with `t* = 0` add nothing and end the run.
pub fn greedy_ejr_m(
    inst: &Instance,
    tie_breaker: &TieBreaker,
    limits: &Limits,
) -> Result<(Bundle, GreedyTrace)> {
    let index = AtomIndex::new(inst);
    let script: &[ScriptStep] = match tie_breaker {
        TieBreaker::Default => &[],
        TieBreaker::Script(steps) => steps,
    };
    let mut remaining = vec![true; inst.n()];
    let mut allocation = Bundle::empty();
    let mut trace = GreedyTrace::default();

    loop {
        let agents: Vec<usize> = (0..inst.n()).filter(|&i| remaining[i]).collect();
        if agents.is_empty() {
            break;
        }
        let mut best: Option<(Rational, Vec<usize>, crate::atoms::AtomSet)> = None;
        for group in closed_groups(&index, &agents, limits)? {
            let (goods, cake) = index.split_size(&group.common);
            let cap = inst.group_cap(group.members.len());
            let t = achievable_exact_size(goods, &cake, &cap);
            let better = match &best {
                None => true,
                Some((bt, bm, _)) => {
                    t > *bt
                        || (t == *bt
                            && (group.members.len() > bm.len()
                                || (group.members.len() == bm.len() && group.members < *bm)))
                }
            };
            if better {
                best = Some((t, group.members, group.common));
            }
        }
        let Some((t_star, members, common)) = best else {
            break;
        };
        if t_star.is_zero() {
            break;
        }
        let round = trace.rounds.len();
        let (group, witness) = match script.get(round) {
            Some(step) => {
                check_step(inst, round, step, &remaining, &t_star)?;
                let mut group = step.group.clone();
                group.sort_unstable();
                (group, step.witness.clone())
            }
            None => {
                let witness = canonical_witness(&index.to_bundle(&common), &t_star);
                (members, witness)
            }
        };
        for &i in &group {
            remaining[i] = false;
        }
        allocation = allocation.union(&witness);
        trace.rounds.push(GreedyRound {
            t_star,
            group,
            witness,
        });
    }
    Ok((allocation, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::IntervalSet;
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
    fn achievable_sizes() {
        assert_eq!(achievable_exact_size(1, &ratio(9, 10), &int(1)), int(1));
        assert_eq!(achievable_exact_size(2, &int(0), &ratio(3, 2)), int(1));
        assert_eq!(achievable_exact_size(0, &int(5), &ratio(7, 3)), ratio(7, 3));
        assert_eq!(achievable_exact_size(2, &ratio(1, 4), &ratio(3, 2)), ratio(5, 4));
        assert_eq!(achievable_exact_size(0, &int(0), &int(3)), int(0));
        assert_eq!(achievable_exact_size(3, &int(1), &int(0)), int(0));
        assert_eq!(achievable_exact_size(1, &ratio(1, 2), &int(5)), ratio(3, 2));
    }

    /// Scans a fine grid of candidate sizes directly against the definition.
    #[test]
    fn achievable_size_matches_grid_scan() {
        for m in 0..4usize {
            for ell_num in 0..9i64 {
                let ell = ratio(ell_num, 4);
                for cap_num in 0..25i64 {
                    let cap = ratio(cap_num, 4);
                    let mut best = int(0);
                    for t_num in 0..=100i64 {
                        let t = ratio(t_num, 16);
                        if t > cap || t > rational::from_usize(m) + &ell {
                            continue;
                        }
                        let ok = (0..=m).any(|j| {
                            let j = rational::from_usize(j);
                            j <= t && t <= &j + &ell
                        });
                        if ok && t > best {
                            best = t;
                        }
                    }
                    assert_eq!(achievable_exact_size(m, &ell, &cap), best, "m={m} ell={ell} cap={cap}");
                }
            }
        }
    }

    #[test]
    fn fig1_run() {
        let inst = fig1();
        let (allocation, trace) = greedy_ejr_m(&inst, &TieBreaker::Default, &Limits::default()).unwrap();
        assert_eq!(allocation, Bundle::goods_only([0, 1]));
        assert_eq!(trace.rounds.len(), 2);
        assert_eq!(trace.rounds[0].t_star, int(1));
        assert_eq!(trace.rounds[0].group, vec![0]);
        assert_eq!(trace.rounds[0].witness, Bundle::goods_only([0]));
        assert_eq!(trace.rounds[1].group, vec![1]);
        assert_eq!(trace.rounds[1].witness, Bundle::goods_only([1]));
        assert_eq!(trace.allocation(), allocation);
    }

    #[test]
    fn single_cake_agent() {
        let inst = Instance::with_indexed_goods(
            int(1),
            0,
            vec![Bundle::cake_only(IntervalSet::single(int(0), int(1)).unwrap())],
            int(1),
        )
        .unwrap();
        let (allocation, _) = greedy_ejr_m(&inst, &TieBreaker::Default, &Limits::default()).unwrap();
        assert_eq!(allocation.size(), int(1));
        assert_eq!(inst.utility(0, &allocation).unwrap(), int(1));
    }

    #[test]
    fn script_is_followed_and_validated() {
        let inst = fig1();
        let script = TieBreaker::Script(vec![ScriptStep {
            group: vec![1],
            witness: Bundle::goods_only([1]),
        }]);
        let (allocation, trace) = greedy_ejr_m(&inst, &script, &Limits::default()).unwrap();
        assert_eq!(trace.rounds[0].group, vec![1]);
        assert_eq!(trace.rounds[1].group, vec![0]);
        assert_eq!(allocation, Bundle::goods_only([0, 1]));

        let wrong_size = TieBreaker::Script(vec![ScriptStep {
            group: vec![0, 1],
            witness: Bundle::cake_only(IntervalSet::single(int(0), ratio(9, 10)).unwrap()),
        }]);
        assert!(matches!(
            greedy_ejr_m(&inst, &wrong_size, &Limits::default()),
            Err(Error::Script { round: 0, .. })
        ));

        let not_common = TieBreaker::Script(vec![ScriptStep {
            group: vec![0],
            witness: Bundle::goods_only([1]),
        }]);
        assert!(matches!(
            greedy_ejr_m(&inst, &not_common, &Limits::default()),
            Err(Error::Script { round: 0, .. })
        ));
    }
}
