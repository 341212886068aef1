//! Exact offline makespan oracles.
//!
//! A depth-first branch-and-bound assigns jobs in non-increasing size order. Machine
//! loads are kept sorted so symmetric placements collapse, and every `(position, loads)`
//! pair is explored at most once: the incumbent only ever shrinks, so a revisit can
//! never improve on what the first visit already found.

use std::collections::{BTreeMap, HashSet};
use std::hash::Hash;
use std::ops::Add;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::grid::EpsilonConfig;
use crate::rational::Rational;

pub const DEFAULT_OPT_NODE_CAP: usize = 5_000_000;

/// Job sizes (as exponents of (1+ε)) with multiplicities.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct JobMultiset {
    pub counts: BTreeMap<i64, u32>,
}

impl JobMultiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, exp: i64, n: u32) {
        if n > 0 {
            *self.counts.entry(exp).or_insert(0) += n;
        }
    }

    pub fn len(&self) -> usize {
        self.counts.values().map(|&n| n as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

trait Load: Clone + Ord + Hash + Zero + Add<Output = Self> {}
impl<T: Clone + Ord + Hash + Zero + Add<Output = T>> Load for T {}

/// Generic search. `sizes` must be sorted non-increasing. `eval` scores a complete
/// assignment, `bound` gives a lower bound on any completion of a partial one.
fn branch_and_bound<T, V>(
    sizes: &[T],
    m: usize,
    cap: usize,
    eval: impl Fn(&[T]) -> V,
    bound: impl Fn(&[T]) -> V,
) -> Result<V>
where
    T: Load,
    V: Ord + Clone,
{
    // list scheduling on the sorted order (LPT) seeds the incumbent
    let mut lpt = vec![T::zero(); m];
    for p in sizes {
        let i = (0..m).min_by(|&a, &b| lpt[a].cmp(&lpt[b])).unwrap();
        lpt[i] = lpt[i].clone() + p.clone();
    }
    lpt.sort_unstable_by(|a, b| b.cmp(a));
    let mut best = eval(&lpt);

    struct Search<'a, T, V, E, B> {
        sizes: &'a [T],
        eval: E,
        bound: B,
        best: V,
        seen: HashSet<(usize, Vec<T>)>,
        nodes: usize,
        cap: usize,
    }

    impl<T: Load, V: Ord + Clone, E: Fn(&[T]) -> V, B: Fn(&[T]) -> V> Search<'_, T, V, E, B> {
        fn run(&mut self, pos: usize, loads: &mut Vec<T>) -> Result<()> {
            self.nodes += 1;
            if self.nodes > self.cap {
                return Err(Error::Resource(format!(
                    "offline optimum needs more than {} search nodes",
                    self.cap
                )));
            }
            if (self.bound)(loads) >= self.best {
                return Ok(());
            }
            if pos == self.sizes.len() {
                let v = (self.eval)(loads);
                if v < self.best {
                    self.best = v;
                }
                return Ok(());
            }
            if !self.seen.insert((pos, loads.clone())) {
                return Ok(());
            }
            let p = &self.sizes[pos];
            for i in 0..loads.len() {
                if i > 0 && loads[i] == loads[i - 1] {
                    continue;
                }
                let old = loads.clone();
                loads[i] = loads[i].clone() + p.clone();
                loads.sort_unstable_by(|a, b| b.cmp(a));
                self.run(pos + 1, loads)?;
                *loads = old;
                if (self.bound)(loads) >= self.best {
                    break;
                }
            }
            Ok(())
        }
    }

    let mut search = Search {
        sizes,
        eval,
        bound,
        best: best.clone(),
        seen: HashSet::new(),
        nodes: 0,
        cap,
    };
    let mut loads = vec![T::zero(); m];
    search.run(0, &mut loads)?;
    if search.best < best {
        best = search.best;
    }
    Ok(best)
}

fn expand<T: Clone + Ord>(jobs: impl IntoIterator<Item = (T, u32)>) -> Vec<T> {
    let mut sizes: Vec<T> = jobs
        .into_iter()
        .flat_map(|(s, n)| std::iter::repeat_n(s, n as usize))
        .collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

/// Minimum makespan, in ticks, for integral jobs given as `(size_ticks, count)`.
pub fn opt_integral_ticks(jobs: &[(u128, u32)], m: usize, cap: usize) -> Result<u128> {
    let sizes = expand(jobs.iter().copied().filter(|&(s, n)| s > 0 && n > 0));
    if sizes.is_empty() {
        return Ok(0);
    }
    let total: u128 = sizes.iter().sum();
    let avg = total.div_ceil(m as u128);
    let remaining_max = sizes[0];
    branch_and_bound(
        &sizes,
        m,
        cap,
        |loads| loads[0],
        |loads| loads[0].max(avg).max(remaining_max),
    )
}

/// Exact offline optimum with every job scheduled integrally.
pub fn opt_makespan_integral(
    cfg: &EpsilonConfig,
    jobs: &JobMultiset,
    m: usize,
    cap: usize,
) -> Result<Rational> {
    let mut ticks = Vec::with_capacity(jobs.counts.len());
    for (&exp, &n) in &jobs.counts {
        if exp < -(cfg.c0 as i64) || exp > cfg.omega as i64 {
            return Err(Error::Input(format!("job exponent {exp} outside [-c0, ω]")));
        }
        ticks.push((cfg.weight(exp), n));
    }
    let t = opt_integral_ticks(&ticks, m, cap)?;
    Ok(cfg.ticks_to_rational(t))
}

/// Brings rationals onto a common integer scale; returns the scaled values and the scale.
fn common_scale<'a>(xs: impl IntoIterator<Item = &'a Rational>) -> (Vec<BigInt>, BigInt) {
    let xs: Vec<&Rational> = xs.into_iter().collect();
    let mut l = BigInt::one();
    for x in &xs {
        l = l.lcm(x.denom());
    }
    let scaled = xs.iter().map(|x| x.numer() * (&l / x.denom())).collect();
    (scaled, l)
}

/// Exact offline optimum for arbitrary positive job sizes, all integral.
pub fn opt_makespan_sizes(sizes: &[Rational], m: usize, cap: usize) -> Result<Rational> {
    if sizes.iter().any(|s| s.is_negative()) {
        return Err(Error::Input("negative job size".into()));
    }
    let (scaled, l) = common_scale(sizes.iter());
    let sizes = expand(scaled.into_iter().filter(|s| !s.is_zero()).map(|s| (s, 1)));
    if sizes.is_empty() {
        return Ok(Rational::zero());
    }
    let total: BigInt = sizes.iter().sum();
    let avg = Integer::div_ceil(&total, &BigInt::from(m));
    let first = sizes[0].clone();
    let best = branch_and_bound(
        &sizes,
        m,
        cap,
        |loads| loads[0].clone(),
        |loads| loads[0].clone().max(avg.clone()).max(first.clone()),
    )?;
    Ok(Rational::new(best, l))
}

/// Level reached when `fluid` is poured onto machines with the given loads.
fn water_level(loads: &[BigInt], fluid: &BigInt) -> Rational {
    let mut sorted: Vec<&BigInt> = loads.iter().collect();
    sorted.sort();
    let mut sum = fluid.clone();
    let mut level = Rational::zero();
    for k in 0..sorted.len() {
        sum += sorted[k];
        let cand = Rational::new(sum.clone(), BigInt::from(k + 1));
        let next_ok = k + 1 == sorted.len() || cand <= Rational::from_integer(sorted[k + 1].clone());
        if next_ok {
            level = cand;
            break;
        }
    }
    level
}

/// Offline optimum where big jobs are integral and `small_total` may be split freely.
pub fn opt_makespan_fluid(
    big_jobs: &[(Rational, u32)],
    small_total: &Rational,
    m: usize,
    cap: usize,
) -> Result<Rational> {
    if small_total.is_negative() || big_jobs.iter().any(|(s, _)| s.is_negative()) {
        return Err(Error::Input("negative job size".into()));
    }
    let all: Vec<&Rational> = big_jobs.iter().map(|(s, _)| s).chain([small_total]).collect();
    let (scaled, l) = common_scale(all);
    let fluid = scaled.last().unwrap().clone();
    let sizes = expand(
        scaled[..scaled.len() - 1]
            .iter()
            .zip(big_jobs)
            .filter(|(s, (_, n))| !s.is_zero() && *n > 0)
            .map(|(s, (_, n))| (s.clone(), *n)),
    );
    let total: BigInt = sizes.iter().sum::<BigInt>() + &fluid;
    let avg = Rational::new(total, BigInt::from(m));
    let first = sizes.first().cloned().unwrap_or_else(BigInt::zero);
    let eval = |loads: &[BigInt]| {
        let top = Rational::from_integer(loads.iter().max().cloned().unwrap_or_else(BigInt::zero));
        top.max(water_level(loads, &fluid))
    };
    let bound = |loads: &[BigInt]| {
        let top = loads.iter().max().cloned().unwrap_or_else(BigInt::zero).max(first.clone());
        Rational::from_integer(top).max(avg.clone())
    };
    let best = if sizes.is_empty() {
        eval(&vec![BigInt::zero(); m])
    } else {
        branch_and_bound(&sizes, m, cap, eval, bound)?
    };
    Ok(best / Rational::from_integer(l))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> Rational {
        Rational::from(n)
    }

    #[test]
    fn integral_examples() {
        let cap = DEFAULT_OPT_NODE_CAP;
        assert_eq!(opt_makespan_sizes(&[r(1), r(1), r(2)], 2, cap).unwrap(), r(2));
        assert_eq!(opt_makespan_sizes(&[r(4)], 3, cap).unwrap(), r(4));
        assert_eq!(opt_makespan_sizes(&vec![r(1); 6], 2, cap).unwrap(), r(3));
        assert_eq!(opt_makespan_sizes(&[], 2, cap).unwrap(), r(0));
        let c = EpsilonConfig::new(Rational::one(), 2).unwrap();
        let mut jobs = JobMultiset::new();
        jobs.add(0, 6);
        assert_eq!(opt_makespan_integral(&c, &jobs, 2, cap).unwrap(), r(3));
        let mut jobs = JobMultiset::new();
        jobs.add(0, 2);
        jobs.add(1, 1);
        assert_eq!(opt_makespan_integral(&c, &jobs, 2, cap).unwrap(), r(2));
    }

    #[test]
    fn fluid_examples() {
        let cap = DEFAULT_OPT_NODE_CAP;
        assert_eq!(opt_makespan_fluid(&[], &r(2), 2, cap).unwrap(), r(1));
        assert_eq!(opt_makespan_fluid(&[(r(2), 1)], &r(0), 2, cap).unwrap(), r(2));
        assert_eq!(
            opt_makespan_fluid(&[(r(2), 3)], &r(3), 2, cap).unwrap(),
            Rational::new(9, 2)
        );
    }

    #[test]
    fn search_cap_is_enforced() {
        let sizes: Vec<Rational> = (1..=30).map(|k| Rational::new(1000 + k * k, 7)).collect();
        assert!(matches!(
            opt_makespan_sizes(&sizes, 3, 50),
            Err(Error::Resource(_))
        ));
    }
}
