//! Timing harness for Generalized MES on seeded random instances.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::atoms::atomize_full;
use crate::error::{Error, Result};
use crate::generate::gen_random;
use crate::rational;
use crate::rules::generalized_mes;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchSize {
    pub n: usize,
    pub m: usize,
    pub atoms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub m: usize,
    /// Cake atoms requested from the generator.
    pub atoms: usize,
    /// Cake atoms after atomization.
    pub cake_atoms: usize,
    pub millis: f64,
    /// Purchases made (one per pass of the main loop).
    pub iterations: usize,
    /// `m + atoms·n + n`: each pass buys a good, finishes an atom or empties a budget.
    pub iteration_bound: usize,
}

/// Density of random approvals in benchmark instances.
pub const BENCH_DENSITY: f64 = 0.1;

/// Runs MES once per size; `α` is half the resource. Fails if a run exceeds its progress bound.
pub fn bench_mes(sizes: &[BenchSize], seed: u64) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::with_capacity(sizes.len());
    for (k, size) in sizes.iter().enumerate() {
        let total = size.m + size.atoms;
        let alpha = rational::ratio(total.max(1) as i64, 2);
        let inst = gen_random(size.n, size.m, size.atoms, &alpha, BENCH_DENSITY, seed.wrapping_add(k as u64))?;
        let cake_atoms = atomize_full(&inst).iter().filter(|a| !a.is_good()).count();
        let start = Instant::now();
        let (allocation, ledger) = generalized_mes(&inst);
        let millis = start.elapsed().as_secs_f64() * 1e3;
        ledger.check(&allocation).map_err(Error::InvalidAllocation)?;
        let iterations = ledger.purchases.len();
        let iteration_bound = size.m + cake_atoms * size.n + size.n;
        if iterations > iteration_bound {
            return Err(Error::Domain(format!(
                "{iterations} purchases exceed the progress bound {iteration_bound}"
            )));
        }
        rows.push(BenchRow {
            n: size.n,
            m: size.m,
            atoms: size.atoms,
            cake_atoms,
            millis,
            iterations,
            iteration_bound,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sizes_respect_the_bound() {
        let sizes = [
            BenchSize { n: 1, m: 3, atoms: 2 },
            BenchSize { n: 20, m: 10, atoms: 8 },
        ];
        let rows = bench_mes(&sizes, 7).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].iterations <= rows[0].iteration_bound);
        assert!(rows[1].iterations > 0);
    }
}
