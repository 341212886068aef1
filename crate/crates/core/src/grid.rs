//! Constants derived from the precision parameter ε and the ratio grid Δ.
//!
//! Everything the solver compares is decided exactly. Besides the [`Rational`] views
//! exposed here, the config precomputes an integer "tick" scale in which every
//! power `(1+ε)^i` with `-c0 <= i <= ω` is an integer, so the hot paths of the game
//! (loads, feasibility bands, offline optima) run on `u128` without rounding.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Point of the ratio grid Δ, stored as its index `k` (value `1 + kε`, last point clamped
/// to the grid top). `INFINITY` marks the infeasible sentinel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridValue(pub u32);

impl GridValue {
    pub const ONE: GridValue = GridValue(0);
    pub const INFINITY: GridValue = GridValue(u32::MAX);

    pub fn is_infinite(self) -> bool {
        self == Self::INFINITY
    }
}

/// The JSON form `{"eps": "p/q", "m": int}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSpec {
    pub eps: Rational,
    pub m: usize,
}

#[derive(Clone, Debug)]
pub struct EpsilonConfig {
    pub eps: Rational,
    pub m: usize,
    pub c0: u32,
    pub omega: u32,
    pub mu0: u32,
    /// ω + c0 + 1 coordinates per trimmed-state.
    pub tuple_len: usize,
    /// Largest exponent in R: ⌈μ0/ω⌉·ω + ω − 1.
    pub r_max_exp: i64,
    pub r_set: Vec<Rational>,
    pub delta_grid: Vec<Rational>,
    /// 4(1+ε)^ω + 2(1+ε)^{-c0}
    pub state_cap: Rational,
    pub band_lo: Rational,
    /// (1+ε)^ω + 2(1+ε)^{-c0}
    pub band_hi: Rational,
    eps_num: u128,
    eps_den: u128,
    weights: Vec<u128>,
    grid_top: Rational,
    grid_steps: u32,
}

fn checked_pow(base: u128, exp: u32) -> Option<u128> {
    base.checked_pow(exp)
}

impl EpsilonConfig {
    pub fn new(eps: Rational, m: usize) -> Result<Self> {
        if eps.is_negative() || eps.is_zero() || eps > Rational::one() {
            return Err(Error::Input(format!("eps must lie in (0, 1], got {eps}")));
        }
        if m < 2 {
            return Err(Error::Input(format!("need at least 2 machines, got {m}")));
        }
        let base = Rational::one() + &eps;
        let min_exp = |target: &Rational| -> u32 {
            let mut k = 0u32;
            let mut acc = Rational::one();
            while &acc < target {
                acc = acc * &base;
                k += 1;
            }
            k
        };
        let c0 = min_exp(&eps.recip());
        let omega = min_exp(&Rational::from(3));
        let mu0 = min_exp(&(Rational::from(4) * base.pow((omega + c0 + 1) as i64)));
        let blocks = mu0.div_ceil(omega) as i64;
        let r_max_exp = blocks * omega as i64 + omega as i64 - 1;

        let pow = |j: i64| base.pow(j);
        let mut r_set = vec![Rational::zero()];
        r_set.extend((-(c0 as i64)..=r_max_exp).map(pow));

        let small = pow(-(c0 as i64));
        let big = pow(omega as i64);
        let state_cap = Rational::from(4) * &big + Rational::from(2) * &small;
        let band_hi = &big + &(Rational::from(2) * &small);

        let twenty = Rational::from(20);
        let grid_top = if state_cap > twenty {
            Rational::from_integer(state_cap.ceil())
        } else {
            twenty
        };
        // floor((top - 1) / eps) regular steps; the final point is the top itself.
        let span = (&grid_top - &Rational::one()) / &eps;
        let grid_steps = span
            .floor()
            .to_u32()
            .ok_or_else(|| Error::Resource("ratio grid too fine".into()))?;
        let mut delta_grid: Vec<Rational> = (0..grid_steps)
            .map(|k| Rational::one() + Rational::from(k as i64) * &eps)
            .collect();
        delta_grid.push(grid_top.clone());

        let to_u128 = |x: &BigInt| x.to_u128();
        let (eps_num, eps_den) = match (to_u128(eps.numer()), to_u128(eps.denom())) {
            (Some(n), Some(d)) => (n, d),
            _ => return Err(Error::Resource("eps numerator/denominator too large".into())),
        };
        let a = eps_num + eps_den;
        let mut weights = Vec::with_capacity((omega + c0 + 1) as usize);
        for i in -(c0 as i64)..=omega as i64 {
            let wa = checked_pow(a, (i + c0 as i64) as u32);
            let wq = checked_pow(eps_den, (omega as i64 - i) as u32);
            let w = wa
                .zip(wq)
                .and_then(|(x, y)| x.checked_mul(y))
                .filter(|w| w.leading_zeros() >= 24)
                .ok_or_else(|| Error::Resource(format!("eps {eps} needs more than u128 ticks")))?;
            weights.push(w);
        }

        Ok(EpsilonConfig {
            eps,
            m,
            c0,
            omega,
            mu0,
            tuple_len: (omega + c0 + 1) as usize,
            r_max_exp,
            r_set,
            delta_grid,
            state_cap,
            band_lo: Rational::one(),
            band_hi,
            eps_num,
            eps_den,
            weights,
            grid_top,
            grid_steps,
        })
    }

    pub fn from_spec(spec: &ConfigSpec) -> Result<Self> {
        Self::new(spec.eps.clone(), spec.m)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ConfigSpec = serde_json::from_str(text)?;
        Self::from_spec(&spec)
    }

    pub fn spec(&self) -> ConfigSpec {
        ConfigSpec { eps: self.eps.clone(), m: self.m }
    }

    /// Same ε, different machine count.
    pub fn with_machines(&self, m: usize) -> Result<Self> {
        Self::new(self.eps.clone(), m)
    }

    /// Exact `(1+ε)^j`.
    pub fn pow_eps(&self, j: i64) -> Rational {
        (Rational::one() + &self.eps).pow(j)
    }

    /// The exponent `j` with `(1+ε)^j == x`, if `x` lies on the geometric grid.
    pub fn exponent_of(&self, x: &Rational) -> Option<i64> {
        if x.is_negative() || x.is_zero() {
            return None;
        }
        let a = BigInt::from(self.eps_num + self.eps_den);
        let q = BigInt::from(self.eps_den);
        // (a/q)^j in lowest terms is a^j / q^j for j >= 0 and q^|j| / a^|j| otherwise.
        let (num, den, sign) = if x >= &Rational::one() {
            (x.numer().clone(), x.denom().clone(), 1i64)
        } else {
            (x.denom().clone(), x.numer().clone(), -1i64)
        };
        let strip = |mut v: BigInt, f: &BigInt| -> Option<(BigInt, i64)> {
            let mut k = 0i64;
            if f.is_one() {
                return Some((v, 0));
            }
            while !v.is_zero() && v.is_multiple_of(f) {
                v /= f;
                k += 1;
            }
            Some((v, k))
        };
        let (rest_n, kn) = strip(num, &a)?;
        if !rest_n.is_one() {
            return None;
        }
        if q.is_one() {
            return den.is_one().then_some(sign * kn);
        }
        let (rest_d, kd) = strip(den, &q)?;
        (rest_d.is_one() && kd == kn).then_some(sign * kn)
    }

    /// Number of entries in R (including the zero job).
    pub fn r_len(&self) -> usize {
        self.r_set.len()
    }

    /// Exponent of the `idx`-th entry of R; `None` for the zero job at index 0.
    pub fn r_exponent(&self, idx: usize) -> Option<i64> {
        (idx > 0).then(|| idx as i64 - 1 - self.c0 as i64)
    }

    pub fn r_index_of_exponent(&self, exp: i64) -> Option<usize> {
        if exp < -(self.c0 as i64) || exp > self.r_max_exp {
            return None;
        }
        Some((exp + self.c0 as i64 + 1) as usize)
    }

    /// Projects an arbitrary exponent above ω onto R by dropping whole blocks of ω beyond
    /// ⌈μ0/ω⌉·ω; exponents already inside R are returned unchanged.
    pub fn truncate_exponent(&self, exp: i64) -> i64 {
        if exp <= self.r_max_exp {
            return exp;
        }
        let w = self.omega as i64;
        let blocks = (self.mu0 as i64 + w - 1) / w;
        blocks * w + exp.rem_euclid(w)
    }

    pub fn grid_top(&self) -> &Rational {
        &self.grid_top
    }

    pub fn grid_len(&self) -> usize {
        self.delta_grid.len()
    }

    pub fn grid_value(&self, g: GridValue) -> Option<Rational> {
        self.delta_grid.get(g.0 as usize).cloned()
    }

    /// Smallest grid point `>= r`.
    pub fn grid_round_up(&self, r: &Rational) -> Result<GridValue> {
        if r < &Rational::one() || r > &self.grid_top {
            return Err(Error::Input(format!("ratio {r} outside [1, {}]", self.grid_top)));
        }
        let k = ((r - &Rational::one()) / &self.eps).ceil();
        let k = k.to_u32().unwrap_or(u32::MAX).min(self.grid_steps);
        Ok(GridValue(k))
    }

    /// Same as [`grid_round_up`](Self::grid_round_up) for the ratio `num/den` of two
    /// tick counts.
    pub fn grid_round_up_ticks(&self, num: u128, den: u128) -> Result<GridValue> {
        if num < den {
            return Err(Error::Input(format!("ratio {num}/{den} below 1")));
        }
        // k = ceil((num - den) * q / (den * p))
        let top = (num - den) * self.eps_den;
        let bottom = den * self.eps_num;
        let k = top.div_ceil(bottom);
        if k > self.grid_steps as u128 {
            let r = Rational::new(BigInt::from(num), BigInt::from(den));
            if r > self.grid_top {
                return Err(Error::Input(format!("ratio {r} above grid top")));
            }
        }
        Ok(GridValue(k.min(self.grid_steps as u128) as u32))
    }

    // ---- tick scale ----------------------------------------------------------------

    /// Tick weight of `(1+ε)^i` for `-c0 <= i <= ω`.
    #[inline]
    pub fn weight(&self, i: i64) -> u128 {
        self.weights[(i + self.c0 as i64) as usize]
    }

    /// Tick weights indexed by trimmed-state coordinate.
    #[inline]
    pub fn weights(&self) -> &[u128] {
        &self.weights
    }

    /// Ticks in one unit of load.
    #[inline]
    pub fn unit_ticks(&self) -> u128 {
        self.weight(0)
    }

    /// Ticks of (1+ε)^ω.
    #[inline]
    pub fn big_ticks(&self) -> u128 {
        self.weight(self.omega as i64)
    }

    /// Ticks of (1+ε)^{-c0}.
    #[inline]
    pub fn small_ticks(&self) -> u128 {
        self.weights[0]
    }

    #[inline]
    pub fn state_cap_ticks(&self) -> u128 {
        4 * self.big_ticks() + 2 * self.small_ticks()
    }

    #[inline]
    pub fn band_hi_ticks(&self) -> u128 {
        self.big_ticks() + 2 * self.small_ticks()
    }

    pub fn ticks_to_rational(&self, t: u128) -> Rational {
        Rational::new(BigInt::from(t), BigInt::from(self.unit_ticks()))
    }

    /// The `p/q` pair of ε, as used by the grid arithmetic.
    pub fn eps_parts(&self) -> (u128, u128) {
        (self.eps_num, self.eps_den)
    }
}

pub fn make_config(eps: Rational, m: usize) -> Result<EpsilonConfig> {
    EpsilonConfig::new(eps, m)
}
