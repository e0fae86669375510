//! Generalized Method of Equal Shares.
//!
//! Every agent starts with `α/n`. A good costs 1 and is bought at the smallest
//! `ρ` with `Σ_{i∈N_g} min(b_i, ρ) = 1`. For a cake atom with `k` approvers
//! still holding money the only possible price per unit of utility is `1/k`,
//! and the largest affordable prefix has length `min(x_1 - x_0, k·min b_i)`;
//! every approver pays an equal `1/k` of it. The cheapest option is bought,
//! goods before cake on ties, goods by index and cake by left endpoint.
//!
//! All budgets and prices are exact. To keep large instances fast, prices are
//! first ranked with a floating-point estimate and only the near-best options
//! are priced exactly; the estimate's relative error is far below the window,
//! so the exact minimum is always among them.

use std::cmp::Ordering;

use num_traits::{Signed, Zero};

use crate::atoms::{atomize_full, AtomKind};
use crate::interval::{Interval, IntervalSet};
use crate::model::{Bundle, Instance};
use crate::rational::{self, Rational};

/// Smallest `ρ ≥ 0` with `Σ min(b_i, ρ) = cost`, or `None` if the budgets fall short.
pub fn mes_price(budgets: &[Rational], cost: &Rational) -> Option<Rational> {
    let mut sorted: Vec<&Rational> = budgets.iter().filter(|b| b.is_positive()).collect();
    sorted.sort();
    let mut prefix = Rational::zero();
    let k = sorted.len();
    for (j, b) in sorted.iter().enumerate() {
        let rho = (cost - &prefix) / rational::from_usize(k - j);
        if &rho <= *b {
            return Some(rho);
        }
        prefix += *b;
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PurchaseItem {
    Good(usize),
    /// The bought prefix `[x_0, x]`.
    Cake(Interval),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Purchase {
    pub item: PurchaseItem,
    /// The atom the prefix was cut from (cake only).
    pub atom: Option<Interval>,
    pub payers: Vec<usize>,
    pub amounts: Vec<Rational>,
    pub rho: Rational,
    /// Right end of the bought prefix (cake only).
    pub x: Option<Rational>,
}

impl Purchase {
    pub fn cost(&self) -> Rational {
        match &self.item {
            PurchaseItem::Good(_) => rational::one(),
            PurchaseItem::Cake(iv) => iv.length(),
        }
    }

    pub fn paid(&self) -> Rational {
        self.amounts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaymentLedger {
    pub initial_budget: Rational,
    /// Remaining budget per agent.
    pub budgets: Vec<Rational>,
    pub purchases: Vec<Purchase>,
}

impl PaymentLedger {
    pub fn total_paid(&self) -> Rational {
        self.purchases.iter().map(Purchase::paid).sum()
    }

    /// Budget bounds, per-purchase balance, conservation against `allocation`
    /// and non-decreasing prices. Returns the first violation found.
    pub fn check(&self, allocation: &Bundle) -> Result<(), String> {
        for (i, b) in self.budgets.iter().enumerate() {
            if b.is_negative() || b > &self.initial_budget {
                return Err(format!("agent {i} has budget {b} outside [0, {}]", self.initial_budget));
            }
        }
        for (k, p) in self.purchases.iter().enumerate() {
            if p.paid() != p.cost() {
                return Err(format!("purchase {k} collects {} for cost {}", p.paid(), p.cost()));
            }
        }
        let spent: Rational = self
            .budgets
            .iter()
            .map(|b| &self.initial_budget - b)
            .sum();
        if spent != allocation.size() || self.total_paid() != spent {
            return Err(format!(
                "spent {spent}, payments {}, allocation size {}",
                self.total_paid(),
                allocation.size()
            ));
        }
        if let Some(w) = self.purchases.windows(2).find(|w| w[1].rho < w[0].rho) {
            return Err(format!("price fell from {} to {}", w[0].rho, w[1].rho));
        }
        Ok(())
    }
}

struct CakeAtom {
    lo: Rational,
    hi: Rational,
    approvers: Vec<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Choice {
    Good(usize),
    Cake(usize),
}

const WINDOW: f64 = 1e-9;

fn approx_price(budgets: &mut [f64], cost: f64) -> f64 {
    let total: f64 = budgets.iter().sum();
    if total < cost * (1.0 - WINDOW) {
        return f64::INFINITY;
    }
    budgets.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let k = budgets.len();
    let mut prefix = 0.0;
    for (j, &b) in budgets.iter().enumerate() {
        let rho = (cost - prefix) / (k - j) as f64;
        if rho <= b {
            return rho;
        }
        prefix += b;
    }
    // Within the window of affordability; let the exact test decide.
    budgets.last().copied().unwrap_or(f64::INFINITY)
}

/// Runs Generalized MES.
pub fn generalized_mes(inst: &Instance) -> (Bundle, PaymentLedger) {
    let share = inst.share();
    let share_f = rational::to_f64(&share);
    let mut budgets = vec![share.clone(); inst.n()];
    let mut approx = vec![share_f; inst.n()];

    let mut goods: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut cake: Vec<CakeAtom> = Vec::new();
    for atom in atomize_full(inst) {
        if atom.approvers.is_empty() {
            continue;
        }
        match atom.kind {
            AtomKind::Good(g) => goods.push((g, atom.approvers)),
            AtomKind::Cake(iv) => cake.push(CakeAtom {
                lo: iv.lo,
                hi: iv.hi,
                approvers: atom.approvers,
            }),
        }
    }

    let mut bought_goods = Vec::new();
    let mut bought_cake = Vec::new();
    let mut purchases: Vec<Purchase> = Vec::new();
    let mut scratch = Vec::new();

    loop {
        let mut ranked: Vec<(f64, Choice)> = Vec::new();
        for (k, (_, approvers)) in goods.iter().enumerate() {
            scratch.clear();
            scratch.extend(approvers.iter().map(|&i| approx[i]).filter(|&b| b > 0.0));
            let estimate = approx_price(&mut scratch, 1.0);
            if estimate.is_finite() {
                ranked.push((estimate, Choice::Good(k)));
            }
        }
        for (k, atom) in cake.iter().enumerate() {
            let active = atom.approvers.iter().filter(|&&i| budgets[i].is_positive()).count();
            if active > 0 {
                ranked.push((1.0 / active as f64, Choice::Cake(k)));
            }
        }
        ranked.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));

        let mut best: Option<(Rational, Choice)> = None;
        for &(estimate, option) in &ranked {
            if let Some((rho, _)) = &best {
                let bound = rational::to_f64(rho);
                if estimate > bound * (1.0 + WINDOW) + f64::MIN_POSITIVE {
                    break;
                }
            }
            let exact = match option {
                Choice::Good(k) => {
                    let owned: Vec<Rational> =
                        goods[k].1.iter().map(|&i| budgets[i].clone()).collect();
                    mes_price(&owned, &rational::one())
                }
                Choice::Cake(k) => {
                    let active = cake[k]
                        .approvers
                        .iter()
                        .filter(|&&i| budgets[i].is_positive())
                        .count();
                    Some(rational::ratio(1, active as i64))
                }
            };
            let Some(rho) = exact else { continue };
            let replace = match &best {
                None => true,
                Some((b, o)) => rho < *b || (rho == *b && option < *o),
            };
            if replace {
                best = Some((rho, option));
            }
        }
        let Some((rho, option)) = best else { break };
        debug_assert!(purchases.last().map_or(true, |p| p.rho <= rho));

        let purchase = match option {
            Choice::Good(k) => {
                let (g, approvers) = goods.remove(k);
                let payers: Vec<usize> = approvers
                    .into_iter()
                    .filter(|&i| budgets[i].is_positive())
                    .collect();
                let amounts: Vec<Rational> = payers
                    .iter()
                    .map(|&i| rational::min(&budgets[i], &rho))
                    .collect();
                bought_goods.push(g);
                Purchase {
                    item: PurchaseItem::Good(g),
                    atom: None,
                    payers,
                    amounts,
                    rho: rho.clone(),
                    x: None,
                }
            }
            Choice::Cake(k) => {
                let atom = &mut cake[k];
                let payers: Vec<usize> = atom
                    .approvers
                    .iter()
                    .copied()
                    .filter(|&i| budgets[i].is_positive())
                    .collect();
                let poorest = payers
                    .iter()
                    .map(|&i| &budgets[i])
                    .min()
                    .expect("at least one payer");
                let reach = poorest * rational::from_usize(payers.len());
                let length = rational::min(&(&atom.hi - &atom.lo), &reach);
                let each = &length * &rho;
                let x = &atom.lo + &length;
                let before = Interval {
                    lo: atom.lo.clone(),
                    hi: atom.hi.clone(),
                };
                let piece = Interval {
                    lo: atom.lo.clone(),
                    hi: x.clone(),
                };
                atom.lo = x.clone();
                if atom.lo == atom.hi {
                    cake.remove(k);
                }
                bought_cake.push((piece.lo.clone(), piece.hi.clone()));
                Purchase {
                    item: PurchaseItem::Cake(piece),
                    atom: Some(before),
                    amounts: vec![each; payers.len()],
                    payers,
                    rho: rho.clone(),
                    x: Some(x),
                }
            }
        };
        for (&i, amount) in purchase.payers.iter().zip(&purchase.amounts) {
            budgets[i] -= amount;
            approx[i] = rational::to_f64(&budgets[i]);
        }
        purchases.push(purchase);
    }

    let allocation = Bundle::new(
        IntervalSet::normalize(bought_cake).expect("bought pieces are well formed"),
        bought_goods,
    );
    let ledger = PaymentLedger {
        initial_budget: share,
        budgets,
        purchases,
    };
    (allocation, ledger)
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
    fn price_examples() {
        assert_eq!(mes_price(&[int(1), int(1)], &ratio(9, 10)), Some(ratio(9, 20)));
        assert_eq!(mes_price(&[int(1), int(1)], &int(1)), Some(ratio(1, 2)));
        assert_eq!(mes_price(&[ratio(1, 4), int(1)], &int(1)), Some(ratio(3, 4)));
        assert_eq!(mes_price(&[ratio(1, 4), ratio(1, 4)], &int(1)), None);
        assert_eq!(mes_price(&[ratio(1, 2), ratio(1, 2)], &int(1)), Some(ratio(1, 2)));
        assert_eq!(mes_price(&[], &int(1)), None);
    }

    #[test]
    fn fig1_buys_only_the_cake() {
        let inst = fig1();
        let (allocation, ledger) = generalized_mes(&inst);
        assert_eq!(allocation, Bundle::cake_only(inst.full_cake()));
        assert_eq!(ledger.purchases.len(), 1);
        let p = &ledger.purchases[0];
        assert_eq!(p.payers, vec![0, 1]);
        assert_eq!(p.amounts, vec![ratio(9, 20), ratio(9, 20)]);
        assert_eq!(p.rho, ratio(1, 2));
        assert_eq!(p.x, Some(ratio(9, 10)));
        assert_eq!(ledger.budgets, vec![ratio(11, 20), ratio(11, 20)]);
        ledger.check(&allocation).unwrap();
    }

    #[test]
    fn single_shared_good() {
        let inst = Instance::with_indexed_goods(
            int(0),
            1,
            vec![Bundle::goods_only([0]); 4],
            int(1),
        )
        .unwrap();
        let (allocation, ledger) = generalized_mes(&inst);
        assert_eq!(allocation, Bundle::goods_only([0]));
        assert_eq!(ledger.purchases[0].amounts, vec![ratio(1, 4); 4]);
        ledger.check(&allocation).unwrap();
    }

    #[test]
    fn partial_cake_purchase_leaves_the_remainder() {
        // One agent with budget 1/2 approving [0, 1]: buys [0, 1/2] at ρ = 1.
        let inst = Instance::with_indexed_goods(
            int(1),
            0,
            vec![
                Bundle::cake_only(IntervalSet::single(int(0), int(1)).unwrap()),
                Bundle::empty(),
            ],
            int(1),
        )
        .unwrap();
        let (allocation, ledger) = generalized_mes(&inst);
        assert_eq!(allocation.cake, IntervalSet::single(int(0), ratio(1, 2)).unwrap());
        assert_eq!(ledger.purchases[0].rho, int(1));
        assert_eq!(ledger.budgets[0], int(0));
        ledger.check(&allocation).unwrap();
    }

    #[test]
    fn empty_approvals_buy_nothing() {
        let inst = Instance::with_indexed_goods(int(1), 1, vec![Bundle::empty(); 3], int(1)).unwrap();
        let (allocation, ledger) = generalized_mes(&inst);
        assert!(allocation.is_empty());
        assert!(ledger.purchases.is_empty());
    }
}
