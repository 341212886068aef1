//! Seeded self-check suite: rescaling identities, simulation along random trajectories,
//! table convergence, sweep determinism and cache integrity.

use std::path::Path;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cache::CacheFile;
use crate::error::{Error, Result};
use crate::grid::EpsilonConfig;
use crate::players::{random_exponent, Tracker};
use crate::rational::Rational;
use crate::scenario::TrimmedScenario;
use crate::solver::{value_iterate, IterateOptions, Solution, BOT};
use crate::state::{enumerate_trimmed_states, is_simulating, MachineState, TrimmedState, DEFAULT_STATE_CAP};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Random real state with load at most the state cap.
pub fn random_machine_state(cfg: &EpsilonConfig, rng: &mut impl Rng) -> MachineState {
    let cap = cfg.state_cap.clone();
    let mut st = MachineState::zero(cfg);
    let c0 = cfg.c0 as i64;
    for _ in 0..rng.gen_range(0..12) {
        let k = rng.gen_range(0..st.big.len());
        st.big[k] += 1;
        if st.load(cfg) > cap {
            st.big[k] -= 1;
            break;
        }
    }
    let den = rng.gen_range(1..=12i64);
    let room = (&cap - &st.load(cfg)) / cfg.pow_eps(-c0);
    let max_num = (room * Rational::from(den)).floor();
    let max_num = i64::try_from(max_num).unwrap_or(0).max(0);
    st.small = Rational::new(rng.gen_range(0..=max_num), den);
    st
}

/// A trimmed-state simulating `st` (small coordinate anywhere in `[η, η+2]`).
pub fn random_simulating_state(st: &MachineState, rng: &mut impl Rng) -> TrimmedState {
    let lo = st.small.ceil();
    let hi = (&st.small + &Rational::from(2)).floor();
    let span = u64::try_from(&hi - &lo).unwrap_or(0);
    let nu = lo + BigInt::from(rng.gen_range(0..=span));
    let mut v = vec![u16::try_from(nu).expect("small coordinate fits")];
    v.extend(st.big.iter().map(|&c| c as u16));
    TrimmedState(v)
}

/// Exact `(1+ε)^{kω}` rescaling identity, the g_k sandwich and simulation preservation
/// on `n` random states; returns the number of violations.
pub fn fuzz_rescaling(cfg: &EpsilonConfig, rng: &mut impl Rng, n: usize) -> usize {
    let w = cfg.omega as i64;
    let two_s = Rational::from(2) * cfg.pow_eps(-(cfg.c0 as i64));
    let mut bad = 0;
    for _ in 0..n {
        let st = random_machine_state(cfg, rng);
        let tau = random_simulating_state(&st, rng);
        let k = rng.gen_range(1..=3u32);
        let scale = cfg.pow_eps(k as i64 * w);
        let f = st.f_shift(cfg, k);
        if &scale * &f.load(cfg) != st.load(cfg) {
            bad += 1;
        }
        if tau.is_feasible(cfg) {
            let g = tau.g_shift(cfg, k);
            let lhs = tau.load(cfg);
            let mid = &scale * &g.load(cfg);
            if !(lhs <= mid && mid <= &lhs + &(&two_s * &scale)) || !g.is_feasible(cfg) {
                bad += 1;
            }
            if !is_simulating(&g, &f) {
                bad += 1;
            }
        }
    }
    bad
}

/// Random job streams with random placements, tracked through the game graph.
/// Every step re-checks the per-machine simulation; the trajectory ends early if the
/// placement certifies a ratio above 2. Returns the number of violations.
pub fn fuzz_trajectories(sol: &Solution, rng: &mut impl Rng, n: usize, len: usize) -> Result<usize> {
    let cfg = &sol.graph.cfg;
    let two_s = Rational::from(2) * cfg.pow_eps(-(cfg.c0 as i64));
    let mut bad = 0;
    for _ in 0..n {
        let mut t = Tracker::new(sol);
        for _ in 0..len {
            let j = random_exponent(cfg, rng, t.psi.t_exp);
            let h = rng.gen_range(0..cfg.m);
            let p = match t.preview(sol, j, h) {
                Ok(p) => p,
                Err(Error::Invariant(_)) => {
                    bad += 1;
                    break;
                }
                Err(e) => return Err(e),
            };
            if p.forbidden || p.node == BOT {
                break;
            }
            t.commit(p);
            for tau in &t.theta {
                let g = tau.g1(cfg);
                let big = cfg.pow_eps(cfg.omega as i64);
                let mid = &big * &g.load(cfg);
                if !(tau.load(cfg) <= mid && mid <= tau.load(cfg) + &two_s * &big) {
                    bad += 1;
                }
            }
            if t.check_simulation(sol).is_err() {
                bad += 1;
            }
        }
    }
    Ok(bad)
}

fn check(name: &str, passed: bool, detail: impl Into<String>) -> Check {
    Check { name: name.to_string(), passed, detail: detail.into() }
}

/// Runs every check for one solved configuration.
pub fn run_verify(sol: &Solution, seed: u64, fuzz: usize, cache: Option<&Path>) -> Result<VerifyReport> {
    let cfg = &sol.graph.cfg;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    let states = enumerate_trimmed_states(cfg, DEFAULT_STATE_CAP)?;
    let sorted = states.windows(2).all(|w| w[0] < w[1]);
    checks.push(check("enumeration_sorted", sorted, format!("{} trimmed-states", states.len())));

    let bad = fuzz_rescaling(cfg, &mut rng, fuzz);
    checks.push(check("rescaling_identities", bad == 0, format!("{bad} violations in {fuzz} samples")));

    let bad = fuzz_trajectories(sol, &mut rng, fuzz / 10 + 1, 30)?;
    checks.push(check("trajectory_simulation", bad == 0, format!("{bad} violations")));

    let closed = sol.graph.nodes.iter().enumerate().all(|(i, phi)| {
        i == 0 || matches!(phi, TrimmedScenario::Node(_)) && crate::scenario::in_phi_prime(cfg, phi)
    });
    checks.push(check("graph_in_phi_prime", closed, format!("{} nodes", sol.graph.len())));

    let seq = value_iterate(
        &sol.graph,
        &sol.ratios,
        IterateOptions { parallel: false, ..IterateOptions::default() },
    )?;
    checks.push(check(
        "sequential_equals_parallel",
        seq == sol.table,
        format!("{} sweeps", seq.sweeps),
    ));

    let z_ok = sol.table.z_trace.windows(2).all(|w| &w[1] - &w[0] >= cfg.eps);
    checks.push(check("potential_steps", z_ok, format!("{} entries", sol.table.z_trace.len())));

    let file = CacheFile::from_solution(sol);
    let text = file.to_json()?;
    let round = CacheFile::parse(&text).map(|f| f == file).unwrap_or(false);
    checks.push(check("cache_round_trip", round, format!("{} bytes", text.len())));

    if let Some(path) = cache {
        let detail = match CacheFile::read(path) {
            Ok(f) if f == file => Ok("matches recomputation".to_string()),
            Ok(_) => Err("differs from recomputation".to_string()),
            Err(e) => Err(e.to_string()),
        };
        checks.push(match detail {
            Ok(d) => check("cache_file", true, d),
            Err(d) => check("cache_file", false, d),
        });
    }

    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport { seed, checks, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve, SolveOptions};

    #[test]
    fn suite_passes_and_is_reproducible() {
        let cfg = EpsilonConfig::new(Rational::one(), 2).unwrap();
        let sol = solve(&cfg, SolveOptions::default()).unwrap();
        let a = run_verify(&sol, 7, 200, None).unwrap();
        let b = run_verify(&sol, 7, 200, None).unwrap();
        assert!(a.passed, "{a:?}");
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
