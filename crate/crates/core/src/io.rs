//! JSON wire formats. Rationals travel as `"p/q"` strings, goods by name,
//! cake as `[[lo, hi], ...]`, agents by 0-based index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generate::{Construction, Metadata};
use crate::harmonic::HarmonicValue;
use crate::interval::{Interval, IntervalSet};
use crate::model::{Bundle, Instance};
use crate::rational::{self, Rational};
use crate::rules::{GreedyTrace, PavSolution, PaymentLedger, PurchaseItem, ScriptStep};

fn parse_err(e: serde_json::Error) -> Error {
    Error::Parse(e.to_string())
}

fn interval_pair(iv: &Interval) -> [String; 2] {
    [rational::format(&iv.lo), rational::format(&iv.hi)]
}

fn good_names_of(inst: &Instance, bundle: &Bundle) -> Vec<String> {
    bundle.goods.iter().map(|&g| inst.goods()[g].clone()).collect()
}

fn resolve_goods(inst: &Instance, names: &[String]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|name| {
            inst.good_index(name)
                .ok_or_else(|| Error::Parse(format!("unknown good {name:?}")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentFile {
    pub goods: Vec<String>,
    pub cake: IntervalSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(with = "rational::serde_str")]
    pub cake_length: Rational,
    pub goods: Vec<String>,
    #[serde(with = "rational::serde_str")]
    pub alpha: Rational,
    pub agents: Vec<AgentFile>,
}

impl InstanceFile {
    pub fn from_instance(inst: &Instance) -> Self {
        InstanceFile {
            cake_length: inst.cake_length().clone(),
            goods: inst.goods().to_vec(),
            alpha: inst.alpha().clone(),
            agents: inst
                .agents()
                .iter()
                .map(|a| AgentFile {
                    goods: good_names_of(inst, a),
                    cake: a.cake.clone(),
                })
                .collect(),
        }
    }

    pub fn to_instance(&self) -> Result<Instance> {
        let mut agents = Vec::with_capacity(self.agents.len());
        for (i, a) in self.agents.iter().enumerate() {
            let goods = a
                .goods
                .iter()
                .map(|name| {
                    self.goods.iter().position(|g| g == name).ok_or_else(|| {
                        Error::InvalidInstance(format!("agent {i} approves unknown good {name:?}"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            agents.push(Bundle::new(a.cake.clone(), goods));
        }
        Instance::new(self.cake_length.clone(), self.goods.clone(), agents, self.alpha.clone())
    }
}

pub fn instance_from_json(text: &str) -> Result<Instance> {
    serde_json::from_str::<InstanceFile>(text).map_err(parse_err)?.to_instance()
}

pub fn instance_to_json(inst: &Instance) -> String {
    serde_json::to_string_pretty(&InstanceFile::from_instance(inst)).expect("instance serializes")
}

/// Compact JSON with sorted keys; equal instances give identical bytes.
pub fn canonical_instance_json(inst: &Instance) -> String {
    let value = serde_json::to_value(InstanceFile::from_instance(inst)).expect("instance serializes");
    serde_json::to_string(&value).expect("value serializes")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationFile {
    pub goods: Vec<String>,
    pub cake: IntervalSet,
    #[serde(with = "rational::serde_opt", default, skip_serializing_if = "Option::is_none")]
    pub size: Option<Rational>,
}

impl AllocationFile {
    pub fn from_bundle(inst: &Instance, bundle: &Bundle) -> Self {
        AllocationFile {
            goods: good_names_of(inst, bundle),
            cake: bundle.cake.clone(),
            size: Some(bundle.size()),
        }
    }

    /// Resolves good names; a stated size must match the bundle.
    pub fn to_bundle(&self, inst: &Instance) -> Result<Bundle> {
        let bundle = Bundle::new(self.cake.clone(), resolve_goods(inst, &self.goods)?);
        if let Some(size) = &self.size {
            if size != &bundle.size() {
                return Err(Error::InvalidAllocation(format!(
                    "stated size {size} differs from the bundle's size {}",
                    bundle.size()
                )));
            }
        }
        inst.check_bundle(&bundle)?;
        Ok(bundle)
    }
}

pub fn allocation_from_json(inst: &Instance, text: &str) -> Result<Bundle> {
    serde_json::from_str::<AllocationFile>(text).map_err(parse_err)?.to_bundle(inst)
}

pub fn allocation_to_json(inst: &Instance, bundle: &Bundle) -> String {
    serde_json::to_string_pretty(&AllocationFile::from_bundle(inst, bundle)).expect("allocation serializes")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundFile {
    #[serde(with = "rational::serde_str")]
    pub t_star: Rational,
    pub group: Vec<usize>,
    pub witness: AllocationFile,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceFile {
    pub rounds: Vec<RoundFile>,
}

impl TraceFile {
    pub fn from_trace(inst: &Instance, trace: &GreedyTrace) -> Self {
        TraceFile {
            rounds: trace
                .rounds
                .iter()
                .map(|r| RoundFile {
                    t_star: r.t_star.clone(),
                    group: r.group.clone(),
                    witness: AllocationFile::from_bundle(inst, &r.witness),
                })
                .collect(),
        }
    }
}

/// One step of a tie-break script.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptStepFile {
    pub group: Vec<usize>,
    pub witness: AllocationFile,
}

pub fn script_to_file(inst: &Instance, script: &[ScriptStep]) -> Vec<ScriptStepFile> {
    script
        .iter()
        .map(|s| ScriptStepFile {
            group: s.group.clone(),
            witness: AllocationFile::from_bundle(inst, &s.witness),
        })
        .collect()
}

pub fn script_from_file(inst: &Instance, steps: &[ScriptStepFile]) -> Result<Vec<ScriptStep>> {
    steps
        .iter()
        .map(|s| {
            Ok(ScriptStep {
                group: s.group.clone(),
                witness: s.witness.to_bundle(inst)?,
            })
        })
        .collect()
}

pub fn script_from_json(inst: &Instance, text: &str) -> Result<Vec<ScriptStep>> {
    let steps: Vec<ScriptStepFile> = serde_json::from_str(text).map_err(parse_err)?;
    script_from_file(inst, &steps)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ItemFile {
    Good(String),
    Cake([String; 2]),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PurchaseFile {
    pub item: ItemFile,
    pub atom: Option<[String; 2]>,
    pub payers: Vec<usize>,
    #[serde(with = "rational::serde_vec")]
    pub amounts: Vec<Rational>,
    #[serde(with = "rational::serde_str")]
    pub rho: Rational,
    #[serde(with = "rational::serde_opt")]
    pub x: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerFile {
    #[serde(with = "rational::serde_str")]
    pub initial_budget: Rational,
    #[serde(with = "rational::serde_vec")]
    pub budgets: Vec<Rational>,
    #[serde(with = "rational::serde_str")]
    pub total_paid: Rational,
    pub purchases: Vec<PurchaseFile>,
}

impl LedgerFile {
    pub fn from_ledger(inst: &Instance, ledger: &PaymentLedger) -> Self {
        LedgerFile {
            initial_budget: ledger.initial_budget.clone(),
            budgets: ledger.budgets.clone(),
            total_paid: ledger.total_paid(),
            purchases: ledger
                .purchases
                .iter()
                .map(|p| PurchaseFile {
                    item: match &p.item {
                        PurchaseItem::Good(g) => ItemFile::Good(inst.goods()[*g].clone()),
                        PurchaseItem::Cake(iv) => ItemFile::Cake(interval_pair(iv)),
                    },
                    atom: p.atom.as_ref().map(interval_pair),
                    payers: p.payers.clone(),
                    amounts: p.amounts.clone(),
                    rho: p.rho.clone(),
                    x: p.x.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomLengthFile {
    pub atom: [String; 2],
    #[serde(with = "rational::serde_str")]
    pub length: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PavSolutionFile {
    pub score: HarmonicValue,
    pub optimality_gap: f64,
    pub atom_lengths: Vec<AtomLengthFile>,
}

impl PavSolutionFile {
    pub fn from_solution(solution: &PavSolution) -> Self {
        PavSolutionFile {
            score: solution.score,
            optimality_gap: solution.optimality_gap,
            atom_lengths: solution
                .atom_lengths
                .iter()
                .map(|(iv, len)| AtomLengthFile {
                    atom: interval_pair(iv),
                    length: len.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetadataFile {
    pub name: String,
    pub target_group: Option<Vec<usize>>,
    #[serde(with = "rational::serde_opt")]
    pub t: Option<Rational>,
    #[serde(with = "rational::serde_opt")]
    pub beta: Option<Rational>,
    #[serde(with = "rational::serde_opt")]
    pub epsilon: Option<Rational>,
    #[serde(with = "rational::serde_opt")]
    pub lower_bound: Option<Rational>,
    #[serde(with = "rational::serde_opt")]
    pub upper_bound: Option<Rational>,
    pub allocation: Option<AllocationFile>,
    pub script: Option<Vec<ScriptStepFile>>,
    pub notes: Vec<String>,
}

impl MetadataFile {
    pub fn from_construction(c: &Construction) -> Self {
        let inst = &c.instance;
        let Metadata {
            name,
            target_group,
            t,
            beta,
            epsilon,
            lower_bound,
            upper_bound,
            allocation,
            script,
            notes,
        } = c.meta.clone();
        MetadataFile {
            name,
            target_group,
            t,
            beta,
            epsilon,
            lower_bound,
            upper_bound,
            allocation: allocation.map(|a| AllocationFile::from_bundle(inst, &a)),
            script: script.map(|s| script_to_file(inst, &s)),
            notes,
        }
    }
}
