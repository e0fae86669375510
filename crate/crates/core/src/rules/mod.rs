//! Allocation rules.

pub mod greedy;
pub mod mes;
pub mod mnw;
pub mod pav;

pub use greedy::{achievable_exact_size, greedy_ejr_m, GreedyRound, GreedyTrace, ScriptStep, TieBreaker};
pub use mes::{generalized_mes, mes_price, PaymentLedger, Purchase, PurchaseItem};
pub use mnw::mnw_indivisible;
pub use pav::{concave_cake_opt, generalized_pav, CakeOptimum, PavSolution};

/// All subsets of `0..m` with at most `k` elements, by size then lexicographically.
pub fn subsets_up_to(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for size in 1..=k.min(m) {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            out.push(combo.clone());
            let Some(pos) = (0..size).rev().find(|&p| combo[p] < m - size + p) else {
                break;
            };
            combo[pos] += 1;
            for q in pos + 1..size {
                combo[q] = combo[q - 1] + 1;
            }
        }
    }
    out
}
