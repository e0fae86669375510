#![allow(dead_code)]

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mixvote::generate::gen_random;
use mixvote::groups::Limits;
use mixvote::oracle::{enumerate_allocations, EnumerationConfig};
use mixvote::rational::{self, ratio, Rational};
use mixvote::{Bundle, Instance};

/// Seeded random instance with `n ≤ max_n`, `m ≤ max_m`, cake atoms `≤ max_atoms`.
pub fn random_instance(seed: u64, max_n: usize, max_m: usize, max_atoms: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n = rng.gen_range(1..=max_n);
        let m = rng.gen_range(0..=max_m);
        let atoms = rng.gen_range(0..=max_atoms);
        if m + atoms == 0 {
            continue;
        }
        let halves = 2 * m + atoms;
        let alpha = ratio(rng.gen_range(1..=halves) as i64, 2);
        let density = rng.gen_range(0.2..0.9);
        return gen_random(n, m, atoms, &alpha, density, rng.gen()).unwrap();
    }
}

/// Random indivisible instance with integral `α`.
pub fn random_indivisible(seed: u64, max_n: usize, max_m: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_n);
    let m = rng.gen_range(1..=max_m);
    let alpha = rational::from_usize(rng.gen_range(1..=m));
    let density = rng.gen_range(0.2..0.9);
    gen_random(n, m, 0, &alpha, density, rng.gen()).unwrap()
}

/// Every candidate allocation on a grid of the given resolution.
pub fn candidates(inst: &Instance, grid: usize) -> Vec<Bundle> {
    enumerate_allocations(inst, &EnumerationConfig::with_grid(grid), &Limits::default()).unwrap()
}

/// All nonempty agent subsets.
pub fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (1u32..(1 << n)).map(move |mask| (0..n).filter(|i| mask >> i & 1 == 1).collect())
}

pub fn max_utility(inst: &Instance, a: &Bundle, group: &[usize]) -> Rational {
    group
        .iter()
        .map(|&i| inst.utility(i, a).unwrap())
        .max()
        .unwrap_or_else(Rational::zero)
}

/// `|X|·α/n`.
pub fn cap(inst: &Instance, size: usize) -> Rational {
    rational::from_usize(size) * inst.alpha() / rational::from_usize(inst.n())
}
