//! Job addition for real scenarios and trimmed-scenarios, and the projection of a
//! real job onto the finite alphabet R.

use crate::error::{Error, Result};
use crate::grid::EpsilonConfig;
use crate::rational::Rational;
use crate::scenario::{canonicalize_ordered, summarize, Scenario, TrimmedScenario};
use crate::state::TrimmedState;

/// Result of adding one real job.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RealOutcome {
    pub psi: Scenario,
    /// Number of ω-blocks the scaling factor moved up.
    pub shifts: u32,
    /// The target machine ended above `4(1+ε)^ω`, certifying a ratio above 2.
    pub forbidden: bool,
}

/// Adds a real job of size `(1+ε)^j` to machine `h` (0-based).
pub fn scenario_add_exp(cfg: &EpsilonConfig, psi: &Scenario, j: i64, h: usize) -> Result<RealOutcome> {
    if h >= psi.states.len() {
        return Err(Error::Input(format!("machine {h} out of range")));
    }
    let w = cfg.omega as i64;
    let big = cfg.pow_eps(w);
    let mut out = psi.clone();
    if psi.is_empty() {
        out.t_exp = j.div_euclid(w) * w;
        out.states[h].add_exp(cfg, j.rem_euclid(w));
        return Ok(RealOutcome { psi: out, shifts: 0, forbidden: false });
    }
    let mu = j - psi.t_exp;
    if mu <= w {
        out.states[h].add_exp(cfg, mu);
        if out.lower_bound(cfg) >= big {
            for s in out.states.iter_mut() {
                *s = s.f_shift(cfg, 1);
            }
            out.t_exp += w;
            return Ok(RealOutcome { psi: out, shifts: 1, forbidden: false });
        }
        let limit = Rational::from(4) * &big;
        let forbidden = out.states[h].load(cfg) > limit;
        return Ok(RealOutcome { psi: out, shifts: 0, forbidden });
    }
    let k = mu.div_euclid(w);
    for s in out.states.iter_mut() {
        *s = s.f_shift(cfg, k as u32);
    }
    out.t_exp += k * w;
    out.states[h].add_exp(cfg, mu - k * w);
    Ok(RealOutcome { psi: out, shifts: k as u32, forbidden: false })
}

/// Adds a real job of size `p`; `p` must be an exact power of (1+ε).
pub fn scenario_add(cfg: &EpsilonConfig, psi: &Scenario, p: &Rational, h: usize) -> Result<RealOutcome> {
    let j = cfg
        .exponent_of(p)
        .ok_or_else(|| Error::Input(format!("job size {p} is not a power of 1+eps")))?;
    scenario_add_exp(cfg, psi, j, h)
}

/// Result of adding a job from R to a machine-ordered trimmed-scenario.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TrimmedOutcome {
    /// New machine-ordered states (all zero for EMPTY) and the scale change in
    /// exponent units (always a multiple of ω).
    Next { states: Vec<TrimmedState>, scale: i64 },
    Bot,
}

/// Adds `α = (1+ε)^mu` (or the zero job for `None`) on machine position `target`.
///
/// `states` is machine-ordered; the all-zero vector stands for EMPTY.
pub fn trimmed_add_ordered(
    cfg: &EpsilonConfig,
    states: &[TrimmedState],
    mu: Option<i64>,
    target: usize,
) -> Result<TrimmedOutcome> {
    if target >= states.len() {
        return Err(Error::Input(format!("target {target} out of range")));
    }
    let Some(mu) = mu else {
        return Ok(TrimmedOutcome::Next { states: states.to_vec(), scale: 0 });
    };
    if mu < -(cfg.c0 as i64) || mu > cfg.r_max_exp {
        return Err(Error::Input(format!("exponent {mu} not in R")));
    }
    let w = cfg.omega as i64;
    let mut out = states.to_vec();
    if out.iter().all(TrimmedState::is_zero) {
        let rel = mu.rem_euclid(w);
        out[target].add_job(cfg, rel);
        return Ok(TrimmedOutcome::Next { states: out, scale: mu - rel });
    }
    let mut scale = 0;
    if mu <= w {
        out[target].add_job(cfg, mu);
        let s = summarize(cfg, &out);
        if s.lb_at_least(cfg.m, cfg.big_ticks()) {
            for t in out.iter_mut() {
                *t = t.g1(cfg);
            }
            scale += w;
        } else if out[target].load_ticks(cfg) > cfg.state_cap_ticks() {
            return Ok(TrimmedOutcome::Bot);
        }
    } else {
        let k = mu.div_euclid(w);
        for t in out.iter_mut() {
            *t = t.g_shift(cfg, k as u32);
        }
        out[target].add_job(cfg, mu - k * w);
        scale += k * w;
    }
    scale += canonicalize_ordered(cfg, &mut out) as i64 * w;
    if out.iter().any(|t| !t.is_feasible(cfg)) {
        return Err(Error::Invariant(format!("trimmed addition left the cap: {out:?}")));
    }
    Ok(TrimmedOutcome::Next { states: out, scale })
}

/// Canonical successor of a trimmed-scenario: α given by its R index (0 = zero job),
/// placed onto the state at position `target` of the sorted multiset.
pub fn trimmed_add(
    cfg: &EpsilonConfig,
    phi: &TrimmedScenario,
    alpha_idx: usize,
    target: usize,
) -> Result<TrimmedScenario> {
    if alpha_idx >= cfg.r_len() {
        return Err(Error::Input(format!("alpha index {alpha_idx} outside R")));
    }
    let Some(states) = phi.to_ordered(cfg) else {
        return Ok(TrimmedScenario::Bot);
    };
    match trimmed_add_ordered(cfg, &states, cfg.r_exponent(alpha_idx), target)? {
        TrimmedOutcome::Next { states, .. } => Ok(TrimmedScenario::from_ordered(&states)),
        TrimmedOutcome::Bot => Ok(TrimmedScenario::Bot),
    }
}

/// The job of R that a real job is mapped to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Projected {
    Zero,
    /// Exponent of the projected job, together with the extra scale dropped by truncation.
    Exp { mu: i64, dropped: i64 },
}

/// Projects a real job whose exponent relative to the trimmed scale is `mu`.
/// `small_fits` reports whether the target machine's rescaled small load still fits
/// under its trimmed small coordinate after the job is added.
pub fn project_exponent(cfg: &EpsilonConfig, mu: i64, small_fits: bool) -> Projected {
    let c0 = cfg.c0 as i64;
    if mu <= -c0 {
        return if small_fits { Projected::Zero } else { Projected::Exp { mu: -c0, dropped: 0 } };
    }
    let t = cfg.truncate_exponent(mu);
    Projected::Exp { mu: t, dropped: mu - t }
}

/// Rational form of [`project_exponent`] for a job `p` against effective scale `t_eff`.
pub fn project_job(cfg: &EpsilonConfig, p: &Rational, t_eff: &Rational, small_fits: bool) -> Result<Rational> {
    let rel = p / t_eff;
    let small = cfg.pow_eps(-(cfg.c0 as i64));
    if rel <= small {
        return Ok(if small_fits { Rational::zero() } else { small });
    }
    let mu = cfg
        .exponent_of(&rel)
        .ok_or_else(|| Error::Input(format!("job size {p} is not on the grid of {t_eff}")))?;
    match project_exponent(cfg, mu, small_fits) {
        Projected::Zero => Ok(Rational::zero()),
        Projected::Exp { mu, .. } => Ok(cfg.pow_eps(mu)),
    }
}
