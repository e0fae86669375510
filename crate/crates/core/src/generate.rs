//! Instance constructions: the worked example, the impossibility and tightness
//! families, and seeded random instances.
//!
//! Agents and goods are numbered from 0 here; the formulas in the comments use
//! the 1-based numbering in which the families are usually stated.

use num_traits::{Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::interval::IntervalSet;
use crate::model::{Bundle, Instance};
use crate::rational::{self, Rational};
use crate::rules::ScriptStep;

#[derive(Debug, Clone, PartialEq)]
pub enum ConstructionSpec {
    Fig1,
    /// Disjoint singleton approvals with `α = β′·n`.
    Prop1 { beta_prime: Rational, n: usize },
    /// `γ = β + 2`, `n = γ² + γ`, `m = 2γ`, `α = γ + 1`.
    Prop4 { beta: usize },
    /// Cake `[0, 2t]`, `α = t`, nested approvals; needs the closing inequality to hold for `eps`.
    Thm4 { t: Rational, n: usize, delta: Rational, eps: Rational },
    /// Indivisible instance with dummy agents and a scripted GreedyEJR-M run.
    Thm6 { t: Rational, n: usize, eps: Option<Rational> },
    /// `(k+1)²` goods in `k+1` blocks, each approved by all but one agent class.
    Appendix { t: Rational, eps: Rational, gamma: Rational, q: usize },
    Random { n: usize, m: usize, cake_atoms: usize, alpha: Rational, density: f64, seed: u64 },
}

impl ConstructionSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ConstructionSpec::Fig1 => "fig1",
            ConstructionSpec::Prop1 { .. } => "prop1",
            ConstructionSpec::Prop4 { .. } => "prop4",
            ConstructionSpec::Thm4 { .. } => "thm4",
            ConstructionSpec::Thm6 { .. } => "thm6",
            ConstructionSpec::Appendix { .. } => "appendix",
            ConstructionSpec::Random { .. } => "random",
        }
    }
}

/// What a construction is meant to exhibit.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata {
    pub name: String,
    /// The designated group (`N*`, `N`, or the first `γ²` agents).
    pub target_group: Option<Vec<usize>>,
    pub t: Option<Rational>,
    pub beta: Option<Rational>,
    pub epsilon: Option<Rational>,
    /// Guaranteed lower bound on the target group's average satisfaction.
    pub lower_bound: Option<Rational>,
    /// Bound the construction shows can be approached from above.
    pub upper_bound: Option<Rational>,
    /// A designated allocation, when the construction names one.
    pub allocation: Option<Bundle>,
    /// Tie-break script reproducing the intended GreedyEJR-M run.
    pub script: Option<Vec<ScriptStep>>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Construction {
    pub instance: Instance,
    pub meta: Metadata,
}

fn param_error<T>(msg: String) -> Result<T> {
    Err(Error::ConstructionParameter(msg))
}

fn to_usize(value: &Rational, what: &str) -> Result<usize> {
    if !value.is_integer() || value.is_negative() {
        return param_error(format!("{what} = {value} must be a nonnegative integer"));
    }
    Ok(rational::floor_usize(value))
}

pub fn gen_construction(spec: &ConstructionSpec) -> Result<Construction> {
    match spec {
        ConstructionSpec::Fig1 => fig1(),
        ConstructionSpec::Prop1 { beta_prime, n } => prop1(beta_prime, *n),
        ConstructionSpec::Prop4 { beta } => prop4(*beta),
        ConstructionSpec::Thm4 { t, n, delta, eps } => thm4(t, *n, delta, eps),
        ConstructionSpec::Thm6 { t, n, eps } => thm6(t, *n, eps.as_ref()),
        ConstructionSpec::Appendix { t, eps, gamma, q } => appendix(t, eps, gamma, *q),
        ConstructionSpec::Random {
            n,
            m,
            cake_atoms,
            alpha,
            density,
            seed,
        } => Ok(Construction {
            instance: gen_random(*n, *m, *cake_atoms, alpha, *density, *seed)?,
            meta: Metadata {
                name: "random".into(),
                ..Metadata::default()
            },
        }),
    }
}

/// Two agents, goods `g1`, `g2` and a cake of length 9/10 approved by both.
pub fn fig1() -> Result<Construction> {
    let c = rational::ratio(9, 10);
    let cake = IntervalSet::single(Rational::zero(), c.clone())?;
    let instance = Instance::with_indexed_goods(
        c,
        2,
        vec![Bundle::new(cake.clone(), [0]), Bundle::new(cake, [1])],
        rational::int(2),
    )?;
    Ok(Construction {
        instance,
        meta: Metadata {
            name: "fig1".into(),
            allocation: Some(Bundle::goods_only([0, 1])),
            notes: vec!["{g1, g2} gives both agents utility 1".into()],
            ..Metadata::default()
        },
    })
}

pub fn prop1(beta_prime: &Rational, n: usize) -> Result<Construction> {
    if !(beta_prime.is_positive() && beta_prime < &rational::one()) {
        return param_error(format!("beta' = {beta_prime} must lie in (0, 1)"));
    }
    if n == 0 {
        return param_error("n must be positive".into());
    }
    let alpha = beta_prime * rational::from_usize(n);
    to_usize(&alpha, "alpha = beta'·n")?;
    if alpha.is_zero() {
        return param_error("alpha = beta'·n must be positive".into());
    }
    let agents = (0..n).map(|i| Bundle::goods_only([i])).collect();
    let instance = Instance::with_indexed_goods(Rational::zero(), n, agents, alpha)?;
    Ok(Construction {
        instance,
        meta: Metadata {
            name: "prop1".into(),
            t: Some(beta_prime.clone()),
            notes: vec![format!(
                "every singleton is {beta_prime}-cohesive; no allocation satisfies weak EJR-beta for beta < {beta_prime}"
            )],
            ..Metadata::default()
        },
    })
}

pub fn prop4(beta: usize) -> Result<Construction> {
    if beta == 0 {
        return param_error("beta must be a positive integer".into());
    }
    let gamma = beta + 2;
    let n = gamma * gamma + gamma;
    let mut agents = vec![Bundle::goods_only(0..gamma); gamma * gamma];
    agents.extend((0..gamma).map(|i| Bundle::goods_only([gamma + i])));
    let instance = Instance::with_indexed_goods(
        Rational::zero(),
        2 * gamma,
        agents,
        rational::from_usize(gamma + 1),
    )?;
    debug_assert_eq!(instance.n(), n);
    Ok(Construction {
        instance,
        meta: Metadata {
            name: "prop4".into(),
            target_group: Some((0..gamma * gamma).collect()),
            t: Some(rational::from_usize(gamma)),
            beta: Some(rational::from_usize(beta)),
            notes: vec!["every MNW allocation picks the singles' goods plus one shared good".into()],
            ..Metadata::default()
        },
    })
}

/// `δ(t-1)/t + t/(2n²) + (t-1+δ)/n`, the excess over `(t - 2 + 1/t)/2`.
pub fn thm4_excess(t: &Rational, n: usize, delta: &Rational) -> Rational {
    let one = rational::one();
    let n = rational::from_usize(n);
    delta * (t - &one) / t + t / (rational::int(2) * &n * &n) + (t - &one + delta) / &n
}

pub fn thm4(t: &Rational, n: usize, delta: &Rational, eps: &Rational) -> Result<Construction> {
    let one = rational::one();
    if t < &one {
        return param_error(format!("t = {t} must be at least 1"));
    }
    if !(delta.is_positive() && delta < &one) {
        return param_error(format!("delta = {delta} must lie in (0, 1)"));
    }
    if !eps.is_positive() {
        return param_error(format!("eps = {eps} must be positive"));
    }
    if n == 0 {
        return param_error("n must be positive".into());
    }
    let excess = thm4_excess(t, n, delta);
    if &excess > eps {
        return param_error(format!(
            "delta(t-1)/t + t/(2n^2) + (t-1+delta)/n = {excess} exceeds eps = {eps} (slack {})",
            eps - &excess
        ));
    }
    let alpha = t.clone();
    let r = rational::from_usize(n) / &alpha;
    let first = rational::ceil_usize(&r);
    let agents = (1..=n)
        .map(|i| {
            let hi = if i < first {
                t.clone()
            } else {
                t + (rational::from_usize(i) - &r) / &r + delta
            };
            IntervalSet::single(Rational::zero(), hi).map(Bundle::cake_only)
        })
        .collect::<Result<Vec<_>>>()?;
    let c = rational::int(2) * t;
    let allocation = Bundle::cake_only(IntervalSet::single(t.clone(), c.clone())?);
    let instance = Instance::with_indexed_goods(c, 0, agents, alpha)?;
    let f1 = (t - rational::int(2) + t.recip()) / rational::int(2);
    Ok(Construction {
        instance,
        meta: Metadata {
            name: "thm4".into(),
            target_group: Some((0..n).collect()),
            t: Some(t.clone()),
            epsilon: Some(eps.clone()),
            lower_bound: Some(f1.clone()),
            upper_bound: Some(f1 + eps),
            allocation: Some(allocation),
            notes: vec![format!("excess over (t-2+1/t)/2 is at most {excess}")],
            ..Metadata::default()
        },
    })
}

/// `⌊t⌋(⌊t⌋² + ⌊t⌋ + 2)/(n t)`, the excess over `⌊t⌋(1 - (⌊t⌋+1)/2t)`.
pub fn thm6_excess(t: &Rational, n: usize) -> Rational {
    let k = rational::floor_rat(t);
    &k * (&k * &k + &k + rational::int(2)) / (rational::from_usize(n) * t)
}

pub fn thm6(t: &Rational, n: usize, eps: Option<&Rational>) -> Result<Construction> {
    let one = rational::one();
    if t < &one {
        return param_error(format!("t = {t} must be at least 1"));
    }
    let k = rational::floor_usize(t);
    let alpha = (k * k + k + 2) / 2;
    if n % alpha != 0 || n < 2 * alpha {
        return param_error(format!("n = {n} must be a multiple of alpha = {alpha} and at least {}", 2 * alpha));
    }
    let r = n / alpha;
    let frac = t - rational::from_usize(k);
    let spill = rational::ceil_usize(&(&frac * rational::from_usize(r)));
    if spill > r - 1 {
        return param_error(format!(
            "ceil((t - floor t)·n/alpha) = {spill} exceeds n/alpha - 1 = {}",
            r - 1
        ));
    }
    let excess = thm6_excess(t, n);
    if let Some(eps) = eps {
        if &excess > eps {
            return param_error(format!("floor(t)(floor(t)^2+floor(t)+2)/(n t) = {excess} exceeds eps = {eps}"));
        }
    }
    let target = rational::ceil_usize(&(t * rational::from_usize(r)));
    let shared = rational::ceil_usize(t);

    // Agents 1..=target form N*; N_j = [j·r, (j+1)·r - 1] for j < k and N_k = [k·r, target].
    let class_of = |i: usize| -> usize { (i / r).min(k) };
    let mut agents: Vec<Bundle> = Vec::with_capacity(n);
    let mut dummy_goods: Vec<Vec<usize>> = vec![Vec::new(); k + 1];
    let mut next_good = shared;
    for (j, goods) in dummy_goods.iter_mut().enumerate().skip(1) {
        *goods = (next_good..next_good + j).collect();
        next_good += j;
    }
    let m = next_good;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k + 1];
    for i in 1..=target {
        let j = class_of(i);
        let mut goods: Vec<usize> = (0..shared).collect();
        if j >= 1 {
            goods.extend(&dummy_goods[j]);
            members[j].push(i - 1);
        }
        agents.push(Bundle::goods_only(goods));
    }
    let dummy_sizes: Vec<usize> = if k >= 2 {
        (1..=k)
            .map(|j| match j {
                1 => 1,
                j if j == k => 2 * k * r - target - 1,
                j => (j - 1) * r,
            })
            .collect()
    } else {
        vec![n - target]
    };
    for (idx, &size) in dummy_sizes.iter().enumerate() {
        let j = idx + 1;
        for _ in 0..size {
            members[j].push(agents.len());
            agents.push(Bundle::goods_only(dummy_goods[j].clone()));
        }
    }
    if agents.len() != n {
        return param_error(format!("agent classes add up to {} instead of n = {n}", agents.len()));
    }
    let instance = Instance::with_indexed_goods(Rational::zero(), m, agents, rational::from_usize(alpha))?;
    let script: Vec<ScriptStep> = (1..=k)
        .rev()
        .map(|j| ScriptStep {
            group: members[j].clone(),
            witness: Bundle::goods_only(dummy_goods[j].clone()),
        })
        .collect();
    let allocation = Bundle::goods_only(dummy_goods.iter().flatten().copied());
    let kk = rational::from_usize(k);
    let lower = &kk * (&one - (&kk + &one) / (rational::int(2) * t));
    Ok(Construction {
        instance,
        meta: Metadata {
            name: "thm6".into(),
            target_group: Some((0..target).collect()),
            t: Some(t.clone()),
            epsilon: Some(eps.cloned().unwrap_or_else(|| excess.clone())),
            upper_bound: Some(&lower + &excess),
            lower_bound: Some(lower),
            allocation: Some(allocation),
            script: Some(script),
            notes: vec![format!("n/alpha = {r}; |N*| = {target}; excess bound {excess}")],
            ..Metadata::default()
        },
    })
}

pub fn appendix(t: &Rational, eps: &Rational, gamma: &Rational, q: usize) -> Result<Construction> {
    let one = rational::one();
    if t < &one {
        return param_error(format!("t = {t} must be at least 1"));
    }
    if !eps.is_positive() {
        return param_error(format!("eps = {eps} must be positive"));
    }
    let k = rational::floor_usize(t);
    let c = t - rational::from_usize(k);
    // γ = ε still leaves the bound strict when t is fractional, since kγ/t < γ.
    let below_eps = gamma < eps || (gamma == eps && c.is_positive());
    if !(gamma.is_positive() && below_eps && gamma < &(&one - &c)) {
        return param_error(format!("gamma = {gamma} must lie in (0, min(eps, 1 - c)) with c = {c}"));
    }
    let qr = rational::from_usize(q);
    if q == 0 || !(&c * &qr).is_integer() || !(gamma * &qr).is_integer() {
        return param_error(format!("q = {q} must be a common denominator of c = {c} and gamma = {gamma}"));
    }
    let kr = rational::from_usize(k);
    let n0 = to_usize(&(&qr * ((&kr + &one) * &c + &kr * gamma)), "|N_0|")?;
    let ni = to_usize(&(&qr * (&one - &c - gamma)), "|N_i|")?;
    let blocks = k + 1;
    let mut class = vec![0usize; n0];
    for i in 1..=blocks {
        class.extend(std::iter::repeat(i).take(ni));
    }
    let agents: Vec<Bundle> = class
        .iter()
        .map(|&cls| {
            Bundle::goods_only(
                (1..=blocks)
                    .filter(|&b| b != cls)
                    .flat_map(|b| (b - 1) * blocks..b * blocks),
            )
        })
        .collect();
    let alpha = &kr + &one - gamma;
    let instance = Instance::with_indexed_goods(Rational::zero(), blocks * blocks, agents, alpha)?;
    let bound = t - &one + &c * (&one - &c) / t + eps;
    Ok(Construction {
        instance,
        meta: Metadata {
            name: "appendix".into(),
            t: Some(t.clone()),
            epsilon: Some(eps.clone()),
            upper_bound: Some(bound),
            notes: vec![format!(
                "|N_0| = {n0}, |N_1..N_{blocks}| = {ni}; every M_i = N \\ N_i is t-cohesive"
            )],
            ..Metadata::default()
        },
    })
}

/// Seeded random instance. The cake has length `cake_atoms / 2` and is cut at
/// random rational points into `cake_atoms` pieces; each agent approves each
/// good and each piece independently with probability `density`.
pub fn gen_random(
    n: usize,
    m: usize,
    cake_atoms: usize,
    alpha: &Rational,
    density: f64,
    seed: u64,
) -> Result<Instance> {
    if n == 0 || m + cake_atoms == 0 {
        return Err(Error::Domain("need n >= 1 and m + cake_atoms >= 1".into()));
    }
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::Domain(format!("density {density} must lie in [0, 1]")));
    }
    let c = rational::ratio(cake_atoms as i64, 2);
    if !alpha.is_positive() || alpha > &(&c + rational::from_usize(m)) {
        return Err(Error::Domain(format!(
            "alpha = {alpha} must lie in (0, {}]",
            &c + rational::from_usize(m)
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Cut points on the grid c·j/(4·atoms), j = 1..4·atoms-1.
    let cells = 4 * cake_atoms;
    let mut cuts: Vec<usize> = (1..cells).collect();
    cuts.shuffle(&mut rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(cake_atoms.saturating_sub(1)).collect();
    cuts.sort_unstable();
    let mut points = vec![Rational::zero()];
    points.extend(cuts.iter().map(|&j| &c * rational::ratio(j as i64, cells as i64)));
    points.push(c.clone());

    let mut agents: Vec<Bundle> = (0..n)
        .map(|_| {
            let goods: Vec<usize> = (0..m).filter(|_| rng.gen_bool(density)).collect();
            let pieces: Vec<(Rational, Rational)> = points
                .windows(2)
                .filter(|_| rng.gen_bool(density))
                .map(|w| (w[0].clone(), w[1].clone()))
                .collect();
            Bundle::new(IntervalSet::normalize(pieces).expect("ordered cut points"), goods)
        })
        .collect();
    if agents.iter().all(Bundle::is_empty) {
        agents[0] = if m > 0 {
            Bundle::goods_only([0])
        } else {
            Bundle::cake_only(IntervalSet::single(points[0].clone(), points[1].clone())?)
        };
    }
    Instance::with_indexed_goods(c, m, agents, alpha.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn fig1_shape() {
        let inst = fig1().unwrap().instance;
        assert_eq!((inst.n(), inst.m()), (2, 2));
        assert_eq!(inst.cake_length(), &ratio(9, 10));
        assert_eq!(inst.alpha(), &int(2));
    }

    #[test]
    fn prop4_shape() {
        let inst = prop4(1).unwrap().instance;
        assert_eq!((inst.n(), inst.m()), (12, 6));
        assert_eq!(inst.alpha(), &int(4));
        assert!(inst.agents()[..9].iter().all(|a| a == &Bundle::goods_only([0, 1, 2])));
        for i in 0..3 {
            assert_eq!(inst.agents()[9 + i], Bundle::goods_only([3 + i]));
        }
        assert!(prop4(0).is_err());
    }

    #[test]
    fn prop1_requires_integral_alpha() {
        let inst = prop1(&ratio(1, 2), 4).unwrap().instance;
        assert_eq!(inst.alpha(), &int(2));
        assert_eq!(inst.m(), 4);
        assert!(matches!(prop1(&ratio(1, 2), 3), Err(Error::ConstructionParameter(_))));
        assert!(prop1(&int(1), 3).is_err());
    }

    #[test]
    fn thm4_shape() {
        let c = thm4(&int(2), 32, &ratio(1, 100), &ratio(1, 4)).unwrap();
        let inst = c.instance;
        assert_eq!(inst.n(), 32);
        assert_eq!(inst.cake_length(), &int(4));
        // n/α = 16: agents 1..15 approve [0, 2]; agent i ≥ 16 approves [0, 2 + (i-16)/16 + 1/100].
        assert_eq!(inst.agents()[14].cake, IntervalSet::single(int(0), int(2)).unwrap());
        assert_eq!(inst.agents()[15].cake, IntervalSet::single(int(0), ratio(201, 100)).unwrap());
        assert_eq!(
            inst.agents()[31].cake,
            IntervalSet::single(int(0), ratio(301, 100)).unwrap()
        );
        let tight = thm4(&int(2), 4, &ratio(1, 2), &ratio(1, 10));
        assert!(matches!(tight, Err(Error::ConstructionParameter(_))));
    }

    #[test]
    fn thm6_shape() {
        let c = thm6(&ratio(5, 2), 20, None).unwrap();
        let inst = c.instance;
        assert_eq!(inst.alpha(), &int(4));
        assert_eq!(inst.m(), 6);
        assert_eq!(c.meta.target_group.as_ref().unwrap().len(), 13);
        let script = c.meta.script.unwrap();
        assert_eq!(script.len(), 2);
        // N_2 ∪ D_2 has 4 + 6 agents; N_1 ∪ D_1 has 5 + 1.
        assert_eq!(script[0].group.len(), 10);
        assert_eq!(script[0].witness, Bundle::goods_only([4, 5]));
        assert_eq!(script[1].group.len(), 6);
        assert_eq!(script[1].witness, Bundle::goods_only([3]));
        assert_eq!(c.meta.epsilon, Some(ratio(8, 25)));
        assert!(thm6(&ratio(5, 2), 21, None).is_err());
    }

    #[test]
    fn thm6_case_two() {
        let c = thm6(&ratio(3, 2), 20, None).unwrap();
        let inst = c.instance;
        assert_eq!(inst.alpha(), &int(2));
        assert_eq!(inst.m(), 3);
        // n/α = 10, |N*| = 15: N_0 = 9 agents, N_1 = 6, D_1 = 5.
        let script = c.meta.script.unwrap();
        assert_eq!(script.len(), 1);
        assert_eq!(script[0].group.len(), 11);
    }

    #[test]
    fn appendix_shape() {
        let c = appendix(&ratio(3, 2), &ratio(1, 4), &ratio(1, 4), 4).unwrap();
        let inst = c.instance;
        assert_eq!(inst.n(), 7);
        assert_eq!(inst.alpha(), &ratio(7, 4));
        assert_eq!(inst.m(), 4);
        for block in [vec![0, 1], vec![2, 3]] {
            let approvers = inst.agents().iter().filter(|a| block.iter().all(|g| a.goods.contains(g))).count();
            assert_eq!(approvers, 6);
        }
        assert_eq!(c.meta.upper_bound, Some(ratio(11, 12)));
        assert!(appendix(&ratio(3, 2), &ratio(1, 4), &ratio(1, 4), 3).is_err());
    }

    #[test]
    fn random_is_reproducible() {
        let a = gen_random(4, 3, 2, &int(2), 0.5, 42).unwrap();
        let b = gen_random(4, 3, 2, &int(2), 0.5, 42).unwrap();
        assert_eq!(a, b);
        let full = gen_random(3, 2, 3, &int(1), 1.0, 7).unwrap();
        assert!(full.agents().iter().all(|x| x == &full.full_bundle()));
        let cake = gen_random(3, 0, 3, &int(1), 0.5, 7).unwrap();
        assert!(cake.is_cake_only());
        assert!(gen_random(3, 1, 0, &int(5), 0.5, 1).is_err());
    }
}
