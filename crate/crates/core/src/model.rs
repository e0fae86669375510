//! Instances, bundles, sizes and utilities.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::interval::IntervalSet;
use crate::rational::{self, Rational};

/// A piece of cake together with a set of indivisible goods (by index).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Bundle {
    pub cake: IntervalSet,
    pub goods: BTreeSet<usize>,
}

impl Bundle {
    pub fn new(cake: IntervalSet, goods: impl IntoIterator<Item = usize>) -> Self {
        Bundle {
            cake,
            goods: goods.into_iter().collect(),
        }
    }

    pub fn empty() -> Self {
        Bundle::default()
    }

    pub fn goods_only(goods: impl IntoIterator<Item = usize>) -> Self {
        Bundle::new(IntervalSet::empty(), goods)
    }

    pub fn cake_only(cake: IntervalSet) -> Self {
        Bundle::new(cake, [])
    }

    /// `ℓ(cake) + |goods|`.
    pub fn size(&self) -> Rational {
        self.cake.measure() + rational::from_usize(self.goods.len())
    }

    pub fn is_empty(&self) -> bool {
        self.cake.is_empty() && self.goods.is_empty()
    }

    pub fn intersect(&self, other: &Bundle) -> Bundle {
        Bundle {
            cake: self.cake.intersect(&other.cake),
            goods: self.goods.intersection(&other.goods).copied().collect(),
        }
    }

    pub fn union(&self, other: &Bundle) -> Bundle {
        Bundle {
            cake: self.cake.union(&other.cake),
            goods: self.goods.union(&other.goods).copied().collect(),
        }
    }

    pub fn is_subset(&self, other: &Bundle) -> bool {
        self.goods.is_subset(&other.goods) && self.cake.is_subset(&other.cake)
    }

    /// Size of the overlap with `other`, without materializing it.
    pub fn overlap(&self, other: &Bundle) -> Rational {
        self.cake.intersect(&other.cake).measure()
            + rational::from_usize(self.goods.intersection(&other.goods).count())
    }
}

pub fn bundle_size(bundle: &Bundle) -> Rational {
    bundle.size()
}

/// Agents, their approved bundles, the cake `[0, c]`, the goods and the size budget `α`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    cake_length: Rational,
    goods: Vec<String>,
    agents: Vec<Bundle>,
    alpha: Rational,
}

impl Instance {
    pub fn new(
        cake_length: Rational,
        goods: Vec<String>,
        agents: Vec<Bundle>,
        alpha: Rational,
    ) -> Result<Self> {
        let inst = Instance {
            cake_length,
            goods,
            agents,
            alpha,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Goods named `g1..gm`.
    pub fn with_indexed_goods(
        cake_length: Rational,
        m: usize,
        agents: Vec<Bundle>,
        alpha: Rational,
    ) -> Result<Self> {
        Self::new(cake_length, good_names(m), agents, alpha)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        if self.cake_length.is_negative() {
            return bad(format!("negative cake length {}", self.cake_length));
        }
        if self.cake_length.is_zero() && self.goods.is_empty() {
            return bad("resource is empty (no cake and no goods)".into());
        }
        if self.agents.is_empty() {
            return bad("at least one agent is required".into());
        }
        let total = self.resource_size();
        if !self.alpha.is_positive() || self.alpha > total {
            return bad(format!(
                "alpha = {} must lie in (0, {}]",
                self.alpha, total
            ));
        }
        let mut names = BTreeSet::new();
        for name in &self.goods {
            if !names.insert(name.as_str()) {
                return bad(format!("duplicate good name {name:?}"));
            }
        }
        let full = self.full_bundle();
        for (i, agent) in self.agents.iter().enumerate() {
            if let Some(&g) = agent.goods.iter().find(|&&g| g >= self.goods.len()) {
                return bad(format!("agent {i} approves unknown good index {g}"));
            }
            if let Some(iv) = agent.cake.intervals().iter().find(|iv| {
                iv.lo.is_negative() || iv.hi > self.cake_length
            }) {
                return bad(format!(
                    "agent {i} approves {iv}, outside the cake [0, {}]",
                    self.cake_length
                ));
            }
            debug_assert!(agent.is_subset(&full));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.agents.len()
    }

    pub fn m(&self) -> usize {
        self.goods.len()
    }

    pub fn alpha(&self) -> &Rational {
        &self.alpha
    }

    pub fn cake_length(&self) -> &Rational {
        &self.cake_length
    }

    pub fn goods(&self) -> &[String] {
        &self.goods
    }

    pub fn agents(&self) -> &[Bundle] {
        &self.agents
    }

    pub fn approval(&self, agent: usize) -> Result<&Bundle> {
        self.agents.get(agent).ok_or(Error::AgentOutOfRange {
            index: agent,
            agents: self.n(),
        })
    }

    pub fn has_cake(&self) -> bool {
        self.cake_length.is_positive()
    }

    pub fn is_indivisible(&self) -> bool {
        !self.has_cake()
    }

    pub fn is_cake_only(&self) -> bool {
        self.goods.is_empty()
    }

    /// `n / α`, the number of agents that "deserve" one unit of resource.
    pub fn agents_per_unit(&self) -> Rational {
        rational::from_usize(self.n()) / &self.alpha
    }

    /// `α / n`, each agent's share of the budget.
    pub fn share(&self) -> Rational {
        &self.alpha / rational::from_usize(self.n())
    }

    /// `|X|·α/n`.
    pub fn group_cap(&self, group_size: usize) -> Rational {
        rational::from_usize(group_size) * &self.alpha / rational::from_usize(self.n())
    }

    pub fn full_cake(&self) -> IntervalSet {
        if self.has_cake() {
            IntervalSet::single(Rational::zero(), self.cake_length.clone())
                .expect("cake length is nonnegative")
        } else {
            IntervalSet::empty()
        }
    }

    pub fn full_bundle(&self) -> Bundle {
        Bundle::new(self.full_cake(), 0..self.m())
    }

    pub fn resource_size(&self) -> Rational {
        &self.cake_length + rational::from_usize(self.m())
    }

    /// Checks that `bundle` lies inside the resource.
    pub fn check_bundle(&self, bundle: &Bundle) -> Result<()> {
        if let Some(&g) = bundle.goods.iter().find(|&&g| g >= self.m()) {
            return Err(Error::InvalidAllocation(format!("unknown good index {g}")));
        }
        if !bundle.cake.is_subset(&self.full_cake())
            || bundle
                .cake
                .intervals()
                .iter()
                .any(|iv| iv.lo.is_negative() || iv.hi > self.cake_length)
        {
            return Err(Error::InvalidAllocation(format!(
                "cake {} lies outside [0, {}]",
                bundle.cake, self.cake_length
            )));
        }
        Ok(())
    }

    /// Checks that `allocation` lies inside the resource and has size at most `α`.
    pub fn check_allocation(&self, allocation: &Bundle) -> Result<()> {
        self.check_bundle(allocation)?;
        let size = allocation.size();
        if size > self.alpha {
            return Err(Error::InvalidAllocation(format!(
                "size {} exceeds alpha = {}",
                size, self.alpha
            )));
        }
        Ok(())
    }

    /// `u_i(A) = s(R_i ∩ A)`.
    pub fn utility(&self, agent: usize, allocation: &Bundle) -> Result<Rational> {
        Ok(self.approval(agent)?.overlap(allocation))
    }

    pub fn utilities(&self, allocation: &Bundle) -> Vec<Rational> {
        self.agents.iter().map(|r| r.overlap(allocation)).collect()
    }

    /// `∩_{i∈X} R_i`.
    pub fn common_bundle(&self, group: &[usize]) -> Result<Bundle> {
        let (&first, rest) = group.split_first().ok_or(Error::InvalidGroup)?;
        let mut common = self.approval(first)?.clone();
        for &i in rest {
            common = common.intersect(self.approval(i)?);
        }
        Ok(common)
    }

    pub fn good_index(&self, name: &str) -> Option<usize> {
        self.goods.iter().position(|g| g == name)
    }
}

pub fn good_names(m: usize) -> Vec<String> {
    (1..=m).map(|k| format!("g{k}")).collect()
}

pub fn utility(inst: &Instance, agent: usize, allocation: &Bundle) -> Result<Rational> {
    inst.utility(agent, allocation)
}

pub fn common_bundle(inst: &Instance, group: &[usize]) -> Result<Bundle> {
    inst.common_bundle(group)
}
