//! Maximum Nash welfare for indivisible instances, by enumeration.
//!
//! Allocations are compared first by the number of agents with positive
//! utility, then by the product of those utilities.

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::groups::Limits;
use crate::model::{Bundle, Instance};
use crate::rational;
use crate::rules::subsets_up_to;

/// Every optimal good subset of size at most `⌊α⌋`, in enumeration order.
pub fn mnw_indivisible(inst: &Instance, limits: &Limits) -> Result<Vec<Bundle>> {
    if inst.has_cake() {
        return Err(Error::Unsupported(
            "MNW is implemented for instances without cake".into(),
        ));
    }
    limits.check_goods(inst.m())?;
    let largest = rational::floor_usize(inst.alpha()).min(inst.m());
    let mut best: Option<(usize, BigUint)> = None;
    let mut winners = Vec::new();
    for subset in subsets_up_to(inst.m(), largest) {
        let mut positive = 0;
        let mut product = BigUint::from(1u32);
        for agent in inst.agents() {
            let u = subset.iter().filter(|g| agent.goods.contains(g)).count();
            if u > 0 {
                positive += 1;
                product *= u;
            }
        }
        let key = (positive, product);
        match &best {
            Some(b) if key < *b => continue,
            Some(b) if key == *b => {}
            _ => {
                best = Some(key);
                winners.clear();
            }
        }
        winners.push(Bundle::goods_only(subset));
    }
    Ok(winners)
}
