//! Per-machine encodings: real states (fractional small-load coordinate) and
//! trimmed-states (all-integer), with the rescaling maps `f_k` / `g_k`.
//!
//! Coordinate `0` of both encodings holds the small-job load measured in units of
//! `(1+ε)^{-c0}`; coordinate `i + c0` for `-c0 < i <= ω` counts big jobs of relative
//! size `(1+ε)^i`.

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::EpsilonConfig;
use crate::rational::Rational;

/// Integer job-count vector of length ω + c0 + 1.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrimmedState(pub Vec<u16>);

impl TrimmedState {
    pub fn zero(cfg: &EpsilonConfig) -> Self {
        TrimmedState(vec![0; cfg.tuple_len])
    }

    pub fn from_counts(counts: &[u16]) -> Self {
        TrimmedState(counts.to_vec())
    }

    pub fn counts(&self) -> &[u16] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn small(&self) -> u16 {
        self.0[0]
    }

    /// Load in ticks.
    pub fn load_ticks(&self, cfg: &EpsilonConfig) -> u128 {
        self.0
            .iter()
            .zip(cfg.weights())
            .map(|(&c, &w)| c as u128 * w)
            .sum()
    }

    pub fn load(&self, cfg: &EpsilonConfig) -> Rational {
        cfg.ticks_to_rational(self.load_ticks(cfg))
    }

    pub fn is_feasible(&self, cfg: &EpsilonConfig) -> bool {
        self.0.len() == cfg.tuple_len && self.load_ticks(cfg) <= cfg.state_cap_ticks()
    }

    /// Largest big-job weight present, in ticks.
    pub fn max_big_ticks(&self, cfg: &EpsilonConfig) -> Option<u128> {
        (1..self.0.len())
            .rev()
            .find(|&k| self.0[k] > 0)
            .map(|k| cfg.weights()[k])
    }

    /// Adds one job of relative size `(1+ε)^exp`, `-c0 <= exp <= ω`.
    pub fn add_job(&mut self, cfg: &EpsilonConfig, exp: i64) {
        let idx = (exp + cfg.c0 as i64) as usize;
        debug_assert!(idx < self.0.len(), "exponent {exp} outside the bucket range");
        self.0[idx] += 1;
    }

    /// One application of `g_1`: shift by ω, fold the low buckets into the small
    /// coordinate and round it up.
    pub fn g1(&self, cfg: &EpsilonConfig) -> TrimmedState {
        let w = cfg.omega as usize;
        let len = self.0.len();
        let weights = cfg.weights();
        // fold coordinates whose exponent is <= ω - c0, i.e. index <= ω
        let folded: u128 = (0..=w.min(len - 1))
            .map(|k| self.0[k] as u128 * weights[k])
            .sum();
        let divisor = weights[w];
        let mut out = vec![0u16; len];
        out[0] = folded.div_ceil(divisor) as u16;
        for (k, slot) in out.iter_mut().enumerate().skip(1) {
            if k + w < len {
                *slot = self.0[k + w];
            }
        }
        TrimmedState(out)
    }

    /// `g_k = g_{k-1} ∘ g_1`.
    pub fn g_shift(&self, cfg: &EpsilonConfig, k: u32) -> TrimmedState {
        let mut cur = self.clone();
        for _ in 0..k {
            let next = cur.g1(cfg);
            if next == cur {
                break;
            }
            cur = next;
        }
        cur
    }
}

/// Real per-machine state: fractional small-load coordinate plus big-job counts.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct MachineState {
    /// Small-job load in units of (1+ε)^{-c0}.
    pub small: Rational,
    /// Counts for exponents -c0+1 ..= ω.
    pub big: Vec<u32>,
}

impl MachineState {
    pub fn zero(cfg: &EpsilonConfig) -> Self {
        MachineState { small: Rational::zero(), big: vec![0; cfg.tuple_len - 1] }
    }

    pub fn is_zero(&self) -> bool {
        self.small.is_zero() && self.big.iter().all(|&c| c == 0)
    }

    pub fn load(&self, cfg: &EpsilonConfig) -> Rational {
        let c0 = cfg.c0 as i64;
        let mut total = &self.small * &cfg.pow_eps(-c0);
        for (k, &n) in self.big.iter().enumerate() {
            if n > 0 {
                total = total + cfg.pow_eps(k as i64 + 1 - c0) * Rational::from(n as i64);
            }
        }
        total
    }

    /// Exponent of the largest big job present.
    pub fn max_big_exp(&self, cfg: &EpsilonConfig) -> Option<i64> {
        self.big
            .iter()
            .rposition(|&n| n > 0)
            .map(|k| k as i64 + 1 - cfg.c0 as i64)
    }

    /// `st + rel_size`: a big power increments its bucket, anything up to
    /// (1+ε)^{-c0} joins the small coordinate, zero is the identity.
    pub fn add(&self, cfg: &EpsilonConfig, rel_size: &Rational) -> Result<MachineState> {
        if rel_size.is_zero() {
            return Ok(self.clone());
        }
        if rel_size.is_negative() {
            return Err(Error::Input(format!("negative job size {rel_size}")));
        }
        let c0 = cfg.c0 as i64;
        let small_unit = cfg.pow_eps(-c0);
        let mut out = self.clone();
        if rel_size <= &small_unit {
            out.small = out.small + rel_size / &small_unit;
            return Ok(out);
        }
        match cfg.exponent_of(rel_size) {
            Some(mu) if mu > -c0 && mu <= cfg.omega as i64 => {
                out.big[(mu + c0 - 1) as usize] += 1;
                Ok(out)
            }
            _ => Err(Error::Input(format!("relative size {rel_size} has no bucket"))),
        }
    }

    /// Adds a job of relative size `(1+ε)^mu`, `mu <= ω`.
    pub fn add_exp(&mut self, cfg: &EpsilonConfig, mu: i64) {
        let c0 = cfg.c0 as i64;
        debug_assert!(mu <= cfg.omega as i64);
        if mu <= -c0 {
            self.small = &self.small + &cfg.pow_eps(mu + c0);
        } else {
            self.big[(mu + c0 - 1) as usize] += 1;
        }
    }

    /// `f_k`: exact rescaling by (1+ε)^{kω}.
    pub fn f_shift(&self, cfg: &EpsilonConfig, k: u32) -> MachineState {
        if k == 0 {
            return self.clone();
        }
        let c0 = cfg.c0 as i64;
        let shift = k as i64 * cfg.omega as i64;
        let mut small = &self.small * &cfg.pow_eps(-shift);
        let mut big = vec![0u32; self.big.len()];
        for (kk, &n) in self.big.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let exp = kk as i64 + 1 - c0;
            let new_exp = exp - shift;
            if new_exp > -c0 {
                big[(new_exp + c0 - 1) as usize] += n;
            } else {
                small = small + cfg.pow_eps(new_exp + c0) * Rational::from(n as i64);
            }
        }
        MachineState { small, big }
    }
}

/// `τ` simulates `st`: identical big counts and `η <= ν <= η + 2` on the small coordinate.
pub fn is_simulating(tau: &TrimmedState, st: &MachineState) -> bool {
    if tau.0.len() != st.big.len() + 1 {
        return false;
    }
    if tau.0[1..].iter().zip(&st.big).any(|(&a, &b)| a as u32 != b) {
        return false;
    }
    let nu = Rational::from_integer(BigInt::from(tau.0[0]));
    st.small <= nu && nu <= &st.small + &Rational::from(2)
}

/// All trimmed-states with load at most the state cap, in lexicographic order.
pub fn enumerate_trimmed_states(cfg: &EpsilonConfig, cap: usize) -> Result<Vec<TrimmedState>> {
    let weights = cfg.weights();
    let limit = cfg.state_cap_ticks();
    let len = cfg.tuple_len;
    let mut out = Vec::new();
    let mut cur = vec![0u16; len];

    fn rec(
        k: usize,
        used: u128,
        cur: &mut Vec<u16>,
        weights: &[u128],
        limit: u128,
        out: &mut Vec<TrimmedState>,
        cap: usize,
    ) -> Result<()> {
        if k == cur.len() {
            if out.len() >= cap {
                return Err(Error::Resource(format!("more than {cap} trimmed-states")));
            }
            out.push(TrimmedState(cur.clone()));
            return Ok(());
        }
        let mut c = 0u16;
        loop {
            let load = used + c as u128 * weights[k];
            if load > limit {
                break;
            }
            cur[k] = c;
            rec(k + 1, load, cur, weights, limit, out, cap)?;
            c += 1;
        }
        cur[k] = 0;
        Ok(())
    }

    rec(0, 0, &mut cur, weights, limit, &mut out, cap)?;
    Ok(out)
}

pub const DEFAULT_STATE_CAP: usize = 10_000_000;
