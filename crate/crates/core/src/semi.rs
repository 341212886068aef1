//! Exact solver for the bounded semi-online game `P|p_j <= q|C_max`.
//!
//! Job sizes are integers in `1..=q`. The adversary may keep releasing jobs while the
//! total stays within `2mq`; beyond that, play falls back to list scheduling.

use std::collections::HashMap;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cache::{seal, unseal};
use crate::error::{invariant, Error, Result};
use crate::opt::opt_integral_ticks;
use crate::players::ls_place;
use crate::rational::Rational;

pub const DEFAULT_SEMI_STATE_CAP: usize = 2_000_000;

/// Sorted multiset of per-machine count vectors; entry `s-1` counts jobs of size `s`.
pub type SemiScenario = Vec<Vec<u16>>;

type Value = Ratio<u64>;

fn load(counts: &[u16]) -> u64 {
    counts.iter().enumerate().map(|(i, &c)| (i as u64 + 1) * c as u64).sum()
}

fn ratio_of(sc: &SemiScenario, opt_cap: usize) -> Result<Value> {
    let cmax = sc.iter().map(|c| load(c)).max().unwrap_or(0);
    if cmax == 0 {
        return Ok(Value::from_integer(1));
    }
    let q = sc[0].len();
    let jobs: Vec<(u128, u32)> = (0..q)
        .map(|i| (i as u128 + 1, sc.iter().map(|c| c[i] as u32).sum()))
        .collect();
    let opt = opt_integral_ticks(&jobs, sc.len(), opt_cap)?;
    Ok(Value::new(cmax, opt as u64))
}

fn to_rational(v: &Value) -> Rational {
    Rational::new(*v.numer(), *v.denom())
}

/// Fixed point of the bounded game.
pub struct SemiValueTable {
    pub m: usize,
    pub q: usize,
    pub scenarios: Vec<SemiScenario>,
    index: HashMap<SemiScenario, u32>,
    pub values: Vec<Rational>,
    pub ratio_star: Rational,
    pub sweeps: u32,
}

impl SemiValueTable {
    pub fn index_of(&self, sc: &SemiScenario) -> Option<u32> {
        self.index.get(sc).copied()
    }

    pub fn total_cap(&self) -> u64 {
        2 * (self.m * self.q) as u64
    }

    /// Best-response machine for a job of size `s` given machine-ordered count vectors,
    /// or `None` once the bounded game is over.
    pub fn best_response(&self, ordered: &[Vec<u16>], s: usize) -> Option<usize> {
        let total: u64 = ordered.iter().map(|c| load(c)).sum();
        if s == 0 || s > self.q || total + s as u64 > self.total_cap() {
            return None;
        }
        let mut best: Option<(&Rational, usize)> = None;
        for h in 0..ordered.len() {
            let mut next = ordered.to_vec();
            next[h][s - 1] += 1;
            next.sort_unstable();
            let id = self.index_of(&next)? as usize;
            let v = &self.values[id];
            if best.is_none_or(|(b, _)| v < b) {
                best = Some((v, h));
            }
        }
        best.map(|(_, h)| h)
    }
}

fn successors(sc: &SemiScenario, q: usize, cap: u64) -> Vec<Vec<SemiScenario>> {
    let total: u64 = sc.iter().map(|c| load(c)).sum();
    (1..=q)
        .map(|s| {
            if total + s as u64 > cap {
                return Vec::new();
            }
            let mut out = Vec::new();
            for h in 0..sc.len() {
                if h > 0 && sc[h] == sc[h - 1] {
                    continue;
                }
                let mut next = sc.clone();
                next[h][s - 1] += 1;
                next.sort_unstable();
                out.push(next);
            }
            out
        })
        .collect()
}

pub fn semi_solve(m: usize, q: usize, state_cap: usize, opt_cap: usize) -> Result<SemiValueTable> {
    if m < 2 || q < 1 {
        return Err(Error::Input(format!("need m >= 2 and q >= 1, got m={m}, q={q}")));
    }
    let cap = 2 * (m * q) as u64;
    let empty: SemiScenario = vec![vec![0; q]; m];
    let mut scenarios = vec![empty.clone()];
    let mut index = HashMap::new();
    index.insert(empty, 0u32);
    // succ[i][s-1]: successors under a job of size s, empty when it would overflow 2mq
    let mut succ: Vec<Vec<Vec<u32>>> = Vec::new();
    let mut i = 0;
    while i < scenarios.len() {
        let groups = successors(&scenarios[i], q, cap);
        let mut ids = Vec::with_capacity(q);
        for group in groups {
            let mut g = Vec::with_capacity(group.len());
            for next in group {
                let id = match index.get(&next) {
                    Some(&id) => id,
                    None => {
                        if scenarios.len() >= state_cap {
                            return Err(Error::Resource(format!("more than {state_cap} semi-online scenarios")));
                        }
                        let id = scenarios.len() as u32;
                        index.insert(next.clone(), id);
                        scenarios.push(next);
                        id
                    }
                };
                g.push(id);
            }
            ids.push(g);
        }
        succ.push(ids);
        i += 1;
    }

    let mut cur: Vec<Value> = scenarios
        .par_iter()
        .map(|sc| ratio_of(sc, opt_cap))
        .collect::<Result<_>>()?;
    let mut sweeps = 0;
    loop {
        let next: Vec<Value> = (0..cur.len())
            .into_par_iter()
            .map(|i| {
                let mut best = cur[i];
                for group in &succ[i] {
                    if let Some(worst) = group.iter().map(|&s| cur[s as usize]).min() {
                        best = best.max(worst);
                    }
                }
                best
            })
            .collect();
        let mut changed = false;
        for (i, (a, b)) in cur.iter().zip(&next).enumerate() {
            invariant!(b >= a, "semi-online value of scenario {i} decreased");
            changed |= a != b;
        }
        if !changed {
            break;
        }
        sweeps += 1;
        invariant!(sweeps as usize <= scenarios.len() + 1, "semi-online iteration did not settle");
        cur = next;
    }
    let values: Vec<Rational> = cur.iter().map(to_rational).collect();
    let ratio_star = values[0].clone();
    Ok(SemiValueTable { m, q, scenarios, index, values, ratio_star, sweeps })
}

/// Placements of the LS-composition: table best responses while the bounded game lasts,
/// list scheduling afterwards.
pub fn semi_schedule(table: &SemiValueTable, stream: &[u64]) -> Result<Vec<usize>> {
    let mut ordered: Vec<Vec<u16>> = vec![vec![0; table.q]; table.m];
    let mut loads = vec![Rational::zero(); table.m];
    let mut bounded = true;
    let mut out = Vec::with_capacity(stream.len());
    for &s in stream {
        if s == 0 || s > table.q as u64 {
            return Err(Error::Input(format!("job size {s} outside 1..={}", table.q)));
        }
        let s = s as usize;
        let h = match bounded.then(|| table.best_response(&ordered, s)).flatten() {
            Some(h) => {
                ordered[h][s - 1] += 1;
                h
            }
            None => {
                bounded = false;
                ls_place(&loads)
            }
        };
        loads[h] = &loads[h] + &Rational::from(s as i64);
        out.push(h);
    }
    Ok(out)
}

/// On-disk strategy table keyed by `(m, q)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemiCacheFile {
    pub version: u32,
    pub m: usize,
    pub q: usize,
    pub scenarios: Vec<SemiScenario>,
    pub values: Vec<Rational>,
    pub ratio_star: Rational,
    pub sweeps: u32,
}

impl SemiCacheFile {
    pub fn from_table(t: &SemiValueTable) -> Self {
        SemiCacheFile {
            version: crate::cache::CACHE_VERSION,
            m: t.m,
            q: t.q,
            scenarios: t.scenarios.clone(),
            values: t.values.clone(),
            ratio_star: t.ratio_star.clone(),
            sweeps: t.sweeps,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        seal(self)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let f: SemiCacheFile = unseal(text)?;
        if f.version != crate::cache::CACHE_VERSION {
            return Err(Error::Cache(format!("unsupported cache version {}", f.version)));
        }
        if f.values.len() != f.scenarios.len() {
            return Err(Error::Cache("values and scenarios disagree in length".into()));
        }
        Ok(f)
    }
}
