//! Whole-schedule encodings: real scenarios with a scaling factor and trimmed-scenarios
//! stored as sorted multisets of trimmed-states.

use std::fmt;
use std::str::FromStr;

use dashmap::DashMap;
use num_bigint::BigInt;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::grid::{EpsilonConfig, GridValue};
use crate::opt::{opt_integral_ticks, opt_makespan_fluid};
use crate::rational::Rational;
use crate::state::{MachineState, TrimmedState};

/// A trimmed-scenario, or one of the two sentinels.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum TrimmedScenario {
    /// No job released yet.
    Empty,
    /// Sorted multiset of `m` trimmed-states.
    Node(Vec<TrimmedState>),
    /// Any infeasible trimmed-scenario.
    Bot,
}

impl TrimmedScenario {
    /// Canonical form of a machine-ordered state vector.
    pub fn from_ordered(states: &[TrimmedState]) -> Self {
        if states.iter().all(TrimmedState::is_zero) {
            return TrimmedScenario::Empty;
        }
        let mut v = states.to_vec();
        v.sort_unstable();
        TrimmedScenario::Node(v)
    }

    pub fn states(&self) -> Option<&[TrimmedState]> {
        match self {
            TrimmedScenario::Node(v) => Some(v),
            _ => None,
        }
    }

    /// Machine-ordered view, with EMPTY expanded to `m` zero states.
    pub fn to_ordered(&self, cfg: &EpsilonConfig) -> Option<Vec<TrimmedState>> {
        match self {
            TrimmedScenario::Empty => Some(vec![TrimmedState::zero(cfg); cfg.m]),
            TrimmedScenario::Node(v) => Some(v.clone()),
            TrimmedScenario::Bot => None,
        }
    }
}

impl Serialize for TrimmedScenario {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TrimmedScenario::Empty => serializer.serialize_str("EMPTY"),
            TrimmedScenario::Bot => serializer.serialize_str("BOT"),
            TrimmedScenario::Node(v) => v.serialize(serializer),
        }
    }
}

impl<'de> Deserialize<'de> for TrimmedScenario {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Wire {
            Tag(String),
            Node(Vec<TrimmedState>),
        }
        match Wire::deserialize(deserializer)? {
            Wire::Tag(t) if t == "EMPTY" => Ok(TrimmedScenario::Empty),
            Wire::Tag(t) if t == "BOT" => Ok(TrimmedScenario::Bot),
            Wire::Tag(t) => Err(serde::de::Error::custom(format!("unknown sentinel {t:?}"))),
            Wire::Node(v) => {
                if v.is_empty() {
                    return Err(serde::de::Error::custom("trimmed-scenario with no machines"));
                }
                if v.windows(2).any(|w| w[0] > w[1]) {
                    return Err(serde::de::Error::custom("trimmed-states not sorted"));
                }
                if v.iter().any(|s| s.0.len() != v[0].0.len()) {
                    return Err(serde::de::Error::custom("ragged trimmed-states"));
                }
                Ok(TrimmedScenario::Node(v))
            }
        }
    }
}

impl fmt::Display for TrimmedScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_string(self).map_err(|_| fmt::Error)?;
        f.write_str(&s)
    }
}

impl FromStr for TrimmedScenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Total load, largest job and lower-bound tests on a slice of trimmed-states, in ticks.
pub(crate) struct TickSummary {
    pub total: u128,
    pub pmax: u128,
    pub cmax: u128,
}

pub(crate) fn summarize(cfg: &EpsilonConfig, states: &[TrimmedState]) -> TickSummary {
    let mut total = 0;
    let mut cmax = 0;
    let mut pmax = cfg.small_ticks();
    for s in states {
        let l = s.load_ticks(cfg);
        total += l;
        cmax = cmax.max(l);
        if let Some(p) = s.max_big_ticks(cfg) {
            pmax = pmax.max(p);
        }
    }
    TickSummary { total, pmax, cmax }
}

impl TickSummary {
    /// `max{LD/m, P_max} >= x`.
    pub fn lb_at_least(&self, m: usize, x: u128) -> bool {
        self.total >= m as u128 * x || self.pmax >= x
    }
}

/// NODE feasibility: every state within the cap and `1 <= LB < band_hi`.
pub fn is_feasible_node(cfg: &EpsilonConfig, states: &[TrimmedState]) -> bool {
    if states.len() != cfg.m || states.iter().any(|s| !s.is_feasible(cfg)) {
        return false;
    }
    let s = summarize(cfg, states);
    s.lb_at_least(cfg.m, cfg.unit_ticks()) && !s.lb_at_least(cfg.m, cfg.band_hi_ticks())
}

/// Membership in Φ′: the lower bound sits below `(1+ε)^ω`, so no g₁ shift is due.
pub fn in_phi_prime(cfg: &EpsilonConfig, phi: &TrimmedScenario) -> bool {
    match phi {
        TrimmedScenario::Node(v) => !summarize(cfg, v).lb_at_least(cfg.m, cfg.big_ticks()),
        _ => true,
    }
}

/// Applies g₁ until the states land in Φ′; returns the number of shifts used.
pub(crate) fn canonicalize_ordered(cfg: &EpsilonConfig, states: &mut [TrimmedState]) -> u32 {
    let mut shifts = 0;
    while summarize(cfg, states).lb_at_least(cfg.m, cfg.big_ticks()) {
        for s in states.iter_mut() {
            *s = s.g1(cfg);
        }
        shifts += 1;
    }
    shifts
}

/// The Φ′ representative of a feasible trimmed-scenario.
pub fn canonicalize(cfg: &EpsilonConfig, phi: &TrimmedScenario) -> Result<TrimmedScenario> {
    match phi {
        TrimmedScenario::Node(v) => {
            if !is_feasible_node(cfg, v) {
                return Err(Error::Input(format!("infeasible trimmed-scenario {phi}")));
            }
            let mut v = v.clone();
            canonicalize_ordered(cfg, &mut v);
            Ok(TrimmedScenario::from_ordered(&v))
        }
        other => Ok(other.clone()),
    }
}

/// Summed job counts of a trimmed-scenario, one entry per coordinate.
pub fn job_counts(states: &[TrimmedState]) -> Vec<u32> {
    let len = states.first().map_or(0, |s| s.0.len());
    let mut out = vec![0u32; len];
    for s in states {
        for (o, &c) in out.iter_mut().zip(&s.0) {
            *o += c as u32;
        }
    }
    out
}

/// Memo of integral offline optima keyed by the job multiset of a trimmed-scenario.
pub struct OptCache {
    m: usize,
    node_cap: usize,
    map: DashMap<Vec<u32>, u128>,
}

impl OptCache {
    pub fn new(m: usize, node_cap: usize) -> Self {
        OptCache { m, node_cap, map: DashMap::new() }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// OPT in ticks for the given job counts.
    pub fn opt_ticks(&self, cfg: &EpsilonConfig, counts: &[u32]) -> Result<u128> {
        if let Some(v) = self.map.get(counts) {
            return Ok(*v);
        }
        let jobs: Vec<(u128, u32)> = counts
            .iter()
            .zip(cfg.weights())
            .map(|(&n, &w)| (w, n))
            .collect();
        let v = opt_integral_ticks(&jobs, self.m, self.node_cap)?;
        self.map.insert(counts.to_vec(), v);
        Ok(v)
    }
}

/// Exact `C_max(φ) / OPT(φ)` before grid rounding; `None` for the sentinels.
pub fn raw_ratio_trimmed(
    cfg: &EpsilonConfig,
    phi: &TrimmedScenario,
    cache: &OptCache,
) -> Result<Option<(u128, u128)>> {
    let TrimmedScenario::Node(v) = phi else {
        return Ok(None);
    };
    let cmax = summarize(cfg, v).cmax;
    let opt = cache.opt_ticks(cfg, &job_counts(v))?;
    if opt == 0 {
        return Err(Error::Input("trimmed-scenario without jobs".into()));
    }
    Ok(Some((cmax, opt)))
}

/// Grid-rounded instant ratio: EMPTY → 1, BOT → ∞.
pub fn instant_ratio_trimmed(
    cfg: &EpsilonConfig,
    phi: &TrimmedScenario,
    cache: &OptCache,
) -> Result<GridValue> {
    match phi {
        TrimmedScenario::Empty => Ok(GridValue::ONE),
        TrimmedScenario::Bot => Ok(GridValue::INFINITY),
        TrimmedScenario::Node(_) => {
            let (c, o) = raw_ratio_trimmed(cfg, phi, cache)?.expect("node has a ratio");
            cfg.grid_round_up_ticks(c, o)
        }
    }
}

/// A real schedule: per-machine states relative to the scaling factor `(1+ε)^t_exp`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct Scenario {
    pub states: Vec<MachineState>,
    pub t_exp: i64,
}

impl Scenario {
    pub fn empty(cfg: &EpsilonConfig) -> Self {
        Scenario { states: vec![MachineState::zero(cfg); cfg.m], t_exp: 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.states.iter().all(MachineState::is_zero)
    }

    /// Total relative load.
    pub fn total_load(&self, cfg: &EpsilonConfig) -> Rational {
        self.states
            .iter()
            .fold(Rational::zero(), |acc, s| acc + s.load(cfg))
    }

    /// Largest relative job size, `(1+ε)^{-c0}` without big jobs.
    pub fn pmax(&self, cfg: &EpsilonConfig) -> Rational {
        let e = self
            .states
            .iter()
            .filter_map(|s| s.max_big_exp(cfg))
            .max()
            .unwrap_or(-(cfg.c0 as i64));
        cfg.pow_eps(e)
    }

    pub fn lower_bound(&self, cfg: &EpsilonConfig) -> Rational {
        let avg = self.total_load(cfg) / Rational::from(self.states.len() as i64);
        avg.max(self.pmax(cfg))
    }

    pub fn is_feasible(&self, cfg: &EpsilonConfig) -> bool {
        let lb = self.lower_bound(cfg);
        lb >= Rational::one() && lb < cfg.pow_eps(cfg.omega as i64)
    }

    /// Largest relative machine load.
    pub fn cmax(&self, cfg: &EpsilonConfig) -> Rational {
        self.states
            .iter()
            .map(|s| s.load(cfg))
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// Relative loads per machine.
    pub fn loads(&self, cfg: &EpsilonConfig) -> Vec<Rational> {
        self.states.iter().map(|s| s.load(cfg)).collect()
    }

    /// The scaling factor T.
    pub fn scale(&self, cfg: &EpsilonConfig) -> Rational {
        cfg.pow_eps(self.t_exp)
    }
}

/// Exact `C_max(ψ)/OPT(ψ)` with small jobs splittable; `1` for the empty scenario.
pub fn instant_ratio_real(cfg: &EpsilonConfig, psi: &Scenario, node_cap: usize) -> Result<Rational> {
    if psi.is_empty() {
        return Ok(Rational::one());
    }
    let c0 = cfg.c0 as i64;
    let mut big = Vec::new();
    let mut small = Rational::zero();
    let nbig = psi.states[0].big.len();
    for k in 0..nbig {
        let n: u32 = psi.states.iter().map(|s| s.big[k]).sum();
        if n > 0 {
            big.push((cfg.pow_eps(k as i64 + 1 - c0), n));
        }
    }
    for s in &psi.states {
        small = small + &s.small;
    }
    small = small * cfg.pow_eps(-c0);
    let opt = opt_makespan_fluid(&big, &small, psi.states.len(), node_cap)?;
    Ok(psi.cmax(cfg) / opt)
}

/// Rational value of a tick count ratio.
pub fn tick_ratio(num: u128, den: u128) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}
