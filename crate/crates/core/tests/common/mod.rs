//! Reference implementations used to cross-check the library. Nothing here calls into
//! the code under test except for data accessors.
#![allow(dead_code)]

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use makespan_game::solver::{Solution, BOT};
use makespan_game::scenario::TrimmedScenario;
use makespan_game::Rational;

pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn to_big(r: &Rational) -> BigRational {
    r.inner().clone()
}

fn pow(base: &BigRational, e: i64) -> BigRational {
    if e >= 0 {
        num_traits::pow(base.clone(), e as usize)
    } else {
        num_traits::pow(base.recip(), (-e) as usize)
    }
}

/// Smallest `k >= 0` with `(1+ε)^k >= x`.
pub fn min_exp(eps: &BigRational, x: &BigRational) -> i64 {
    let base = BigRational::one() + eps;
    let mut acc = BigRational::one();
    let mut k = 0;
    while &acc < x {
        acc *= &base;
        k += 1;
    }
    k
}

/// Number of integer tuples `(n_{-c0}, …, n_ω)` with `Σ n_i (1+ε)^i <= 4(1+ε)^ω + 2(1+ε)^{-c0}`,
/// counted with plain nested recursion.
pub fn count_states(eps: &BigRational, c0: i64, omega: i64) -> usize {
    let base = BigRational::one() + eps;
    let cap = q(4, 1) * pow(&base, omega) + q(2, 1) * pow(&base, -c0);
    let sizes: Vec<BigRational> = (-c0..=omega).map(|i| pow(&base, i)).collect();
    fn rec(sizes: &[BigRational], room: BigRational) -> usize {
        match sizes.split_first() {
            None => 1,
            Some((s, rest)) => {
                let mut total = 0;
                let mut left = room;
                while left >= BigRational::zero() {
                    total += rec(rest, left.clone());
                    left -= s;
                }
                total
            }
        }
    }
    rec(&sizes, cap)
}

/// Offline optimum by trying all `m^n` assignments.
pub fn opt_enum(sizes: &[u64], m: usize) -> u64 {
    let n = sizes.len();
    let mut best = u64::MAX;
    let mut assign = vec![0usize; n];
    loop {
        let mut loads = vec![0u64; m];
        for (s, &h) in sizes.iter().zip(&assign) {
            loads[h] += s;
        }
        best = best.min(loads.into_iter().max().unwrap_or(0));
        let mut i = 0;
        loop {
            if i == n {
                return if n == 0 { 0 } else { best };
            }
            assign[i] += 1;
            if assign[i] < m {
                break;
            }
            assign[i] = 0;
            i += 1;
        }
    }
}

/// Two-machine optimum via subset sums.
pub fn opt_two(sizes: &[u64]) -> u64 {
    let total: u64 = sizes.iter().sum();
    let mut reach = vec![false; total as usize / 2 + 1];
    reach[0] = true;
    for &s in sizes {
        for v in (s as usize..reach.len()).rev() {
            if reach[v - s as usize] {
                reach[v] = true;
            }
        }
    }
    let best = (0..reach.len()).rev().find(|&v| reach[v]).unwrap() as u64;
    total - best
}

/// Integer job sizes of a two-or-more machine trimmed-scenario: coordinate `i` (exponent
/// `i - c0`) has size `a^i q^{ω+c0-i}` where `ε = p/q`, `a = p+q`.
pub fn trimmed_jobs(eps: &BigRational, c0: i64, omega: i64, machines: &[Vec<u16>]) -> Vec<Vec<u64>> {
    let p: u64 = eps.numer().try_into().unwrap();
    let d: u64 = eps.denom().try_into().unwrap();
    let a = p + d;
    let top = (omega + c0) as u32;
    let w: Vec<u64> = (0..=top).map(|i| a.pow(i) * d.pow(top - i)).collect();
    machines
        .iter()
        .map(|st| {
            st.iter()
                .enumerate()
                .flat_map(|(i, &c)| std::iter::repeat_n(w[i], c as usize))
                .collect()
        })
        .collect()
}

/// Smallest point of `{1, 1+ε, 1+2ε, …}` capped at `top` that is `>= r`.
pub fn grid_up(eps: &BigRational, top: &BigRational, r: &BigRational) -> BigRational {
    let k = ((r - BigRational::one()) / eps).ceil();
    let v = BigRational::one() + k * eps;
    if &v > top {
        top.clone()
    } else {
        v
    }
}

/// Grid-rounded instant ratio of every node, recomputed for two machines.
pub fn node_ratios_two(sol: &Solution) -> Vec<BigRational> {
    let cfg = &sol.graph.cfg;
    let eps = to_big(&cfg.eps);
    let top = to_big(cfg.grid_top());
    sol.graph
        .nodes
        .iter()
        .map(|phi| match phi {
            TrimmedScenario::Empty => BigRational::one(),
            TrimmedScenario::Bot => unreachable!("BOT is not a node"),
            TrimmedScenario::Node(states) => {
                let counts: Vec<Vec<u16>> = states.iter().map(|s| s.0.clone()).collect();
                let jobs = trimmed_jobs(&eps, cfg.c0 as i64, cfg.omega as i64, &counts);
                let cmax = jobs.iter().map(|j| j.iter().sum::<u64>()).max().unwrap();
                let all: Vec<u64> = jobs.concat();
                let opt = opt_two(&all);
                grid_up(&eps, &top, &q(cmax as i64, opt as i64))
            }
        })
        .collect()
}

/// Game values by attractor computation: a node is worth at least `x` when the adversary
/// can force, in finitely many moves, a node whose ratio is at least `x`.
pub fn attractor_values(sol: &Solution, ratios: &[BigRational]) -> Vec<BigRational> {
    let g = &sol.graph;
    let r_len = g.cfg.r_len();
    let n = g.len();
    let mut thresholds: Vec<BigRational> = ratios.to_vec();
    thresholds.sort();
    thresholds.dedup();
    let mut value = vec![BigRational::zero(); n];
    for x in &thresholds {
        let mut win: Vec<bool> = ratios.iter().map(|r| r >= x).collect();
        loop {
            let mut grew = false;
            for v in 0..n {
                if win[v] {
                    continue;
                }
                let forced = (1..r_len).any(|alpha| {
                    let s = g.succ(v as u32, alpha);
                    !s.is_empty() && s.iter().all(|&t| t == BOT || win[t as usize])
                });
                if forced {
                    win[v] = true;
                    grew = true;
                }
            }
            if !grew {
                break;
            }
        }
        for v in 0..n {
            if win[v] {
                value[v] = x.clone();
            }
        }
    }
    value
}

/// Bounded semi-online game value by memoized recursion over the game tree.
pub fn semi_minimax(m: usize, qmax: u64) -> BigRational {
    type State = Vec<Vec<u64>>;
    fn ratio(st: &State, m: usize) -> BigRational {
        let cmax: u64 = st.iter().map(|j| j.iter().sum::<u64>()).max().unwrap();
        if cmax == 0 {
            return BigRational::one();
        }
        let all: Vec<u64> = st.concat();
        q(cmax as i64, opt_enum(&all, m) as i64)
    }
    fn value(st: State, m: usize, qmax: u64, cap: u64, memo: &mut HashMap<State, BigRational>) -> BigRational {
        if let Some(v) = memo.get(&st) {
            return v.clone();
        }
        let total: u64 = st.iter().flatten().sum();
        let mut best = ratio(&st, m);
        for s in 1..=qmax {
            if total + s > cap {
                break;
            }
            let mut worst: Option<BigRational> = None;
            for h in 0..m {
                let mut next = st.clone();
                next[h].push(s);
                next[h].sort_unstable();
                next.sort();
                let v = value(next, m, qmax, cap, memo);
                if worst.as_ref().is_none_or(|w| &v < w) {
                    worst = Some(v);
                }
            }
            best = best.max(worst.unwrap());
        }
        memo.insert(st, best.clone());
        best
    }
    let mut memo = HashMap::new();
    value(vec![Vec::new(); m], m, qmax, 2 * m as u64 * qmax, &mut memo)
}
