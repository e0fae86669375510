//! Axiom checkers (EJR-M, EJR-1, EJR-β, cake EJR) and proportionality audits.
//!
//! Every definition quantifies over all groups `X` and all `t` for which `X` is
//! `t`-cohesive. Two reductions make this finite and exact:
//!
//! * For a fixed group the requirement only grows with `t`, and the set of
//!   admissible `t` is closed, so it suffices to test the largest one: the
//!   cohesiveness supremum `min(|X|·α/n, s(∩R_i))`, or for EJR-M the largest
//!   size of an exactly attainable commonly approved sub-bundle.
//! * Let `Y` be any group and `S` the set of all agents approving `∩_{i∈Y} R_i`.
//!   The `|Y|` members of `S` with the lowest utilities (ties by index) form a
//!   group whose common bundle contains that of `Y`, whose cap is the same, and
//!   whose largest and average utilities are no higher. If `Y` violates a
//!   condition, so does that prefix. Scanning every closed group's sorted
//!   prefixes therefore covers all `2^n` groups.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::atoms::{AtomIndex, AtomSet};
use crate::error::{Error, Result};
use crate::groups::{closed_groups, ClosedGroup, Limits};
use crate::model::{Bundle, Instance};
use crate::rational::{self, Rational};
use crate::rules::achievable_exact_size;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// `u_j > t - β`.
    Strict,
    /// `u_j ≥ t - β`.
    Weak,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CohesiveProfile {
    /// Ascending agent indices.
    pub group: Vec<usize>,
    pub t_cohesive_sup: Rational,
    pub t_exact_max: Rational,
    /// Ascending.
    pub group_utilities: Vec<Rational>,
}

impl CohesiveProfile {
    pub fn max_utility(&self) -> Rational {
        self.group_utilities.last().cloned().unwrap_or_else(Rational::zero)
    }

    pub fn average(&self) -> Rational {
        let total: Rational = self.group_utilities.iter().sum();
        total / rational::from_usize(self.group_utilities.len())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub group: Vec<usize>,
    #[serde(with = "rational::serde_str")]
    pub t: Rational,
    #[serde(with = "rational::serde_str")]
    pub threshold: Rational,
    #[serde(with = "rational::serde_str")]
    pub max_utility_in_group: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub axiom: String,
    pub pass: bool,
    pub witness: Option<Witness>,
}

impl AxiomReport {
    fn from_witness(axiom: impl Into<String>, witness: Option<Witness>) -> Self {
        AxiomReport {
            axiom: axiom.into(),
            pass: witness.is_none(),
            witness,
        }
    }
}

/// Lower bounds on average satisfaction, as functions of `t`.
#[derive(Clone)]
pub enum DegreeBound {
    /// `⌊t⌋ (1 - (⌊t⌋ + 1) / 2t)`.
    EjrM,
    /// `(t - 2 + 1/t) / 2`.
    Ejr1,
    /// `t - 1`.
    Gpav,
    /// `(⌈t⌉ + 1) / 2`.
    MesUpper,
    /// Any non-decreasing function.
    Custom(std::sync::Arc<dyn Fn(&Rational) -> Rational + Send + Sync>),
}

impl std::fmt::Debug for DegreeBound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl DegreeBound {
    pub fn name(&self) -> &'static str {
        match self {
            DegreeBound::EjrM => "ejr-m",
            DegreeBound::Ejr1 => "ejr-1",
            DegreeBound::Gpav => "gpav",
            DegreeBound::MesUpper => "mes-upper",
            DegreeBound::Custom(_) => "custom",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "ejr-m" => DegreeBound::EjrM,
            "ejr-1" => DegreeBound::Ejr1,
            "gpav" => DegreeBound::Gpav,
            "mes-upper" => DegreeBound::MesUpper,
            other => return Err(Error::Parse(format!("unknown bound {other:?}"))),
        })
    }

    pub fn eval(&self, t: &Rational) -> Rational {
        let one = rational::one();
        let two = rational::int(2);
        match self {
            DegreeBound::EjrM => {
                let k = rational::floor_rat(t);
                &k * (&one - (&k + &one) / (&two * t))
            }
            DegreeBound::Ejr1 => (t - &two + t.recip()) / &two,
            DegreeBound::Gpav => t - &one,
            DegreeBound::MesUpper => (rational::ceil_rat(t) + &one) / &two,
            DegreeBound::Custom(f) => f(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeReport {
    pub bound: String,
    /// `None` when no group is `t`-cohesive for any `t ≥ 1`.
    #[serde(with = "rational::serde_opt")]
    pub min_slack: Option<Rational>,
    pub group: Option<Vec<usize>>,
    #[serde(with = "rational::serde_opt")]
    pub t: Option<Rational>,
    #[serde(with = "rational::serde_opt")]
    pub average: Option<Rational>,
}

/// Precomputed closed groups of one instance, reusable across allocations.
pub struct Verifier<'a> {
    inst: &'a Instance,
    index: AtomIndex,
    groups: Vec<ClosedGroup>,
}

impl<'a> Verifier<'a> {
    pub fn new(inst: &'a Instance, limits: &Limits) -> Result<Self> {
        let index = AtomIndex::new(inst);
        let agents: Vec<usize> = (0..inst.n()).collect();
        let groups = closed_groups(&index, &agents, limits)?;
        Ok(Verifier {
            inst,
            index,
            groups,
        })
    }

    pub fn instance(&self) -> &Instance {
        self.inst
    }

    fn profile(&self, group: Vec<usize>, common: &AtomSet, utilities: Vec<Rational>) -> CohesiveProfile {
        let (goods, cake) = self.index.split_size(common);
        let cap = self.inst.group_cap(group.len());
        let total = rational::from_usize(goods) + &cake;
        CohesiveProfile {
            t_cohesive_sup: rational::min(&cap, &total),
            t_exact_max: achievable_exact_size(goods, &cake, &cap),
            group,
            group_utilities: utilities,
        }
    }

    /// One profile per closed group, with the allocation's utilities.
    pub fn closed_profiles(&self, allocation: &Bundle) -> Vec<CohesiveProfile> {
        let u = self.inst.utilities(allocation);
        self.groups
            .iter()
            .map(|g| {
                let mut utilities: Vec<Rational> = g.members.iter().map(|&i| u[i].clone()).collect();
                utilities.sort();
                self.profile(g.members.clone(), &g.common, utilities)
            })
            .collect()
    }

    /// Calls `visit` on every lowest-utility prefix of every closed group.
    fn for_each_prefix(&self, allocation: &Bundle, mut visit: impl FnMut(CohesiveProfile)) {
        let u = self.inst.utilities(allocation);
        for g in &self.groups {
            let mut order = g.members.clone();
            order.sort_by(|&a, &b| u[a].cmp(&u[b]).then(a.cmp(&b)));
            let mut common = self.index.approval(order[0]).clone();
            for k in 1..=order.len() {
                if k > 1 {
                    common = common.and(self.index.approval(order[k - 1]));
                }
                let mut group = order[..k].to_vec();
                group.sort_unstable();
                let utilities: Vec<Rational> = order[..k].iter().map(|&i| u[i].clone()).collect();
                visit(self.profile(group, &common, utilities));
            }
        }
    }

    /// Among violating profiles, the one with the largest `threshold - max utility`.
    fn worst(
        &self,
        allocation: &Bundle,
        test: impl Fn(&CohesiveProfile) -> Option<(Rational, Rational)>,
    ) -> Option<Witness> {
        let mut best: Option<(Rational, Witness)> = None;
        self.for_each_prefix(allocation, |p| {
            let Some((t, threshold)) = test(&p) else { return };
            let mt = p.max_utility();
            let excess = &threshold - &mt;
            let better = match &best {
                None => true,
                Some((e, w)) => excess > *e || (excess == *e && p.group < w.group),
            };
            if better {
                best = Some((
                    excess,
                    Witness {
                        group: p.group,
                        t,
                        threshold,
                        max_utility_in_group: mt,
                    },
                ));
            }
        });
        best.map(|(_, w)| w)
    }

    pub fn ejr_m(&self, allocation: &Bundle) -> Result<AxiomReport> {
        self.inst.check_allocation(allocation)?;
        let witness = self.worst(allocation, |p| {
            let t = &p.t_exact_max;
            (t.is_positive() && p.max_utility() < *t).then(|| (t.clone(), t.clone()))
        });
        Ok(AxiomReport::from_witness("ejr-m", witness))
    }

    /// EJR-β. In strict mode a group passes when some member has more than
    /// `t - β - margin`; `margin = 0` is the exact definition.
    pub fn ejr_beta(
        &self,
        allocation: &Bundle,
        beta: &Rational,
        mode: Mode,
        margin: &Rational,
    ) -> Result<AxiomReport> {
        if beta.is_negative() {
            return Err(Error::Domain(format!("beta must be nonnegative, got {beta}")));
        }
        if margin.is_negative() {
            return Err(Error::Domain(format!("margin must be nonnegative, got {margin}")));
        }
        self.inst.check_allocation(allocation)?;
        let witness = self.worst(allocation, |p| {
            let t = &p.t_cohesive_sup;
            if !t.is_positive() {
                return None;
            }
            let threshold = t - beta;
            let mt = p.max_utility();
            let violated = match mode {
                Mode::Strict => mt <= &threshold - margin,
                Mode::Weak => mt < threshold,
            };
            violated.then(|| (t.clone(), threshold))
        });
        let name = match mode {
            Mode::Strict => format!("ejr-beta({beta})"),
            Mode::Weak => format!("weak-ejr-beta({beta})"),
        };
        Ok(AxiomReport::from_witness(name, witness))
    }

    pub fn ejr_1(&self, allocation: &Bundle, margin: &Rational) -> Result<AxiomReport> {
        let mut report = self.ejr_beta(allocation, &rational::one(), Mode::Strict, margin)?;
        report.axiom = "ejr-1".into();
        Ok(report)
    }

    pub fn cake_ejr(&self, allocation: &Bundle) -> Result<AxiomReport> {
        if !self.inst.is_cake_only() {
            return Err(Error::Unsupported(
                "cake EJR is defined for instances without indivisible goods".into(),
            ));
        }
        let mut report = self.ejr_m(allocation)?;
        report.axiom = "cake-ejr".into();
        Ok(report)
    }

    /// Minimum of `average - f(t)` over groups that are `t`-cohesive with `t ≥ 1`.
    pub fn audit(&self, allocation: &Bundle, bound: &DegreeBound) -> Result<DegreeReport> {
        self.inst.check_allocation(allocation)?;
        let one = rational::one();
        let mut best: Option<(Rational, CohesiveProfile)> = None;
        self.for_each_prefix(allocation, |p| {
            if p.t_cohesive_sup < one {
                return;
            }
            let slack = p.average() - bound.eval(&p.t_cohesive_sup);
            let better = match &best {
                None => true,
                Some((s, q)) => slack < *s || (slack == *s && p.group < q.group),
            };
            if better {
                best = Some((slack, p));
            }
        });
        Ok(match best {
            Some((slack, p)) => DegreeReport {
                bound: bound.name().into(),
                min_slack: Some(slack),
                average: Some(p.average()),
                t: Some(p.t_cohesive_sup),
                group: Some(p.group),
            },
            None => DegreeReport {
                bound: bound.name().into(),
                min_slack: None,
                group: None,
                t: None,
                average: None,
            },
        })
    }

    /// Every lowest-utility prefix profile (the groups the checks scan).
    pub fn prefix_profiles(&self, allocation: &Bundle) -> Vec<CohesiveProfile> {
        let mut out = Vec::new();
        self.for_each_prefix(allocation, |p| out.push(p));
        out
    }
}

/// Profiles of the closed groups (the largest group for each distinct common bundle).
pub fn cohesive_profiles(inst: &Instance, allocation: &Bundle, limits: &Limits) -> Result<Vec<CohesiveProfile>> {
    Ok(Verifier::new(inst, limits)?
        .closed_profiles(allocation)
        .into_iter()
        .filter(|p| p.t_cohesive_sup.is_positive())
        .collect())
}

/// The profile of one explicit group.
pub fn group_profile(inst: &Instance, allocation: &Bundle, group: &[usize]) -> Result<CohesiveProfile> {
    let common = inst.common_bundle(group)?;
    let mut group = group.to_vec();
    group.sort_unstable();
    group.dedup();
    let cap = inst.group_cap(group.len());
    let cake = common.cake.measure();
    let goods = common.goods.len();
    let mut utilities = group
        .iter()
        .map(|&i| inst.utility(i, allocation))
        .collect::<Result<Vec<_>>>()?;
    utilities.sort();
    Ok(CohesiveProfile {
        t_cohesive_sup: rational::min(&cap, &(rational::from_usize(goods) + &cake)),
        t_exact_max: achievable_exact_size(goods, &cake, &cap),
        group,
        group_utilities: utilities,
    })
}

/// `average - f(t_sup)` for one explicit group.
pub fn group_slack(inst: &Instance, allocation: &Bundle, group: &[usize], bound: &DegreeBound) -> Result<Rational> {
    let p = group_profile(inst, allocation, group)?;
    Ok(p.average() - bound.eval(&p.t_cohesive_sup))
}

pub fn verify_ejr_m(inst: &Instance, allocation: &Bundle, limits: &Limits) -> Result<AxiomReport> {
    Verifier::new(inst, limits)?.ejr_m(allocation)
}

/// Exact EJR-1; `margin` relaxes the strict inequality (use 0 for the definition).
pub fn verify_ejr_1(inst: &Instance, allocation: &Bundle, margin: f64, limits: &Limits) -> Result<AxiomReport> {
    let margin = margin_rational(margin)?;
    Verifier::new(inst, limits)?.ejr_1(allocation, &margin)
}

pub fn verify_ejr_beta(
    inst: &Instance,
    allocation: &Bundle,
    beta: &Rational,
    mode: Mode,
    limits: &Limits,
) -> Result<AxiomReport> {
    Verifier::new(inst, limits)?.ejr_beta(allocation, beta, mode, &Rational::zero())
}

pub fn verify_cake_ejr(inst: &Instance, allocation: &Bundle, limits: &Limits) -> Result<AxiomReport> {
    if !inst.is_cake_only() {
        return Err(Error::Unsupported(
            "cake EJR is defined for instances without indivisible goods".into(),
        ));
    }
    Verifier::new(inst, limits)?.cake_ejr(allocation)
}

pub fn audit_degree(
    inst: &Instance,
    allocation: &Bundle,
    bound: &DegreeBound,
    limits: &Limits,
) -> Result<DegreeReport> {
    Verifier::new(inst, limits)?.audit(allocation, bound)
}

pub fn margin_rational(margin: f64) -> Result<Rational> {
    if !(margin >= 0.0) || !margin.is_finite() {
        return Err(Error::Domain(format!("margin must be a finite nonnegative number, got {margin}")));
    }
    Ok(rational::from_f64(margin).expect("finite"))
}
