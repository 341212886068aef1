use std::sync::OnceLock;

use proptest::prelude::*;

use makespan_game::opt::{opt_makespan_sizes, DEFAULT_OPT_NODE_CAP};
use makespan_game::players::ls_place;
use makespan_game::scenario::{canonicalize, in_phi_prime, is_feasible_node, Scenario, TrimmedScenario};
use makespan_game::solver::{solve, Solution, SolveOptions};
use makespan_game::state::{enumerate_trimmed_states, is_simulating, MachineState, TrimmedState, DEFAULT_STATE_CAP};
use makespan_game::transition::{scenario_add_exp, trimmed_add};
use makespan_game::{EpsilonConfig, Rational};

fn cfg_one() -> &'static EpsilonConfig {
    static C: OnceLock<EpsilonConfig> = OnceLock::new();
    C.get_or_init(|| EpsilonConfig::new(Rational::one(), 2).unwrap())
}

fn cfg_half() -> &'static EpsilonConfig {
    static C: OnceLock<EpsilonConfig> = OnceLock::new();
    C.get_or_init(|| EpsilonConfig::new(Rational::new(1, 2), 2).unwrap())
}

fn sol_half() -> &'static Solution {
    static S: OnceLock<Solution> = OnceLock::new();
    S.get_or_init(|| solve(cfg_half(), SolveOptions::default()).unwrap())
}

/// States light enough that any pair of them stays below the band's upper edge.
fn light_states_half() -> &'static [TrimmedState] {
    static S: OnceLock<Vec<TrimmedState>> = OnceLock::new();
    S.get_or_init(|| {
        let cfg = cfg_half();
        let mut v = enumerate_trimmed_states(cfg, DEFAULT_STATE_CAP).unwrap();
        v.retain(|s| s.load(cfg) < cfg.band_hi);
        v
    })
}

fn any_cfg() -> impl Strategy<Value = &'static EpsilonConfig> {
    prop_oneof![Just(cfg_one()), Just(cfg_half())]
}

fn machine_state(cfg: &'static EpsilonConfig) -> impl Strategy<Value = MachineState> {
    let n = cfg.tuple_len - 1;
    (prop::collection::vec(0u32..3, n), 0i64..40, 1i64..8).prop_filter_map("over cap", move |(big, num, den)| {
        let st = MachineState { small: Rational::new(num, den), big };
        (st.load(cfg) <= cfg.state_cap).then_some(st)
    })
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn rational_text_round_trip(n in any::<i64>(), d in 1i64..1_000_000) {
        let r = Rational::new(n, d);
        prop_assert_eq!(r.to_string().parse::<Rational>().unwrap(), r);
    }

    #[test]
    fn grid_rounding_is_the_next_point(cfg in any_cfg(), num in 0i64..2000, den in 1i64..100) {
        let r = Rational::one() + Rational::new(num, den);
        prop_assume!(&r <= cfg.grid_top());
        let g = cfg.grid_round_up(&r).unwrap();
        let v = cfg.grid_value(g).unwrap();
        prop_assert!(v >= r);
        if g.0 > 0 {
            let below = cfg.grid_value(makespan_game::GridValue(g.0 - 1)).unwrap();
            prop_assert!(below < r);
        }
    }

    #[test]
    fn rescaling_is_exact(cfg in any_cfg().prop_flat_map(|c| (Just(c), machine_state(c))), k in 1u32..4) {
        let (cfg, st) = cfg;
        let scaled = st.f_shift(cfg, k);
        prop_assert_eq!(scaled.load(cfg) * cfg.pow_eps(k as i64 * cfg.omega as i64), st.load(cfg));
    }

    #[test]
    fn trimmed_shift_sandwich(cfg in any_cfg().prop_flat_map(|c| (Just(c), machine_state(c))), slack in 0u16..3, k in 1u32..4) {
        let (cfg, st) = cfg;
        let nu = st.small.ceil();
        let nu = u16::try_from(nu).unwrap() + slack;
        let mut v = vec![nu];
        v.extend(st.big.iter().map(|&c| c as u16));
        let tau = TrimmedState(v);
        prop_assume!(is_simulating(&tau, &st) && tau.is_feasible(cfg));
        let g = tau.g_shift(cfg, k);
        let big = cfg.pow_eps(k as i64 * cfg.omega as i64);
        let two_s = Rational::from(2) * cfg.pow_eps(-(cfg.c0 as i64));
        let lifted = &g.load(cfg) * &big;
        prop_assert!(tau.load(cfg) <= lifted);
        prop_assert!(lifted <= tau.load(cfg) + two_s * big);
        prop_assert!(is_simulating(&g, &st.f_shift(cfg, k)));
    }

    #[test]
    fn canonical_form_is_idempotent(i in any::<usize>(), j in any::<usize>()) {
        let cfg = cfg_half();
        let states = light_states_half();
        let pair = vec![states[i % states.len()].clone(), states[j % states.len()].clone()];
        prop_assume!(is_feasible_node(cfg, &pair));
        let phi = TrimmedScenario::from_ordered(&pair);
        let c = canonicalize(cfg, &phi).unwrap();
        prop_assert!(in_phi_prime(cfg, &c));
        prop_assert_eq!(canonicalize(cfg, &c).unwrap(), c);
    }

    #[test]
    fn graph_is_closed_under_trimmed_addition(node in 0usize..8847, alpha in 0usize..18, target in 0usize..2) {
        let sol = sol_half();
        let cfg = &sol.graph.cfg;
        let phi = &sol.graph.nodes[node % sol.graph.len()];
        let next = trimmed_add(cfg, phi, alpha % cfg.r_len(), target).unwrap();
        if next != TrimmedScenario::Bot {
            prop_assert!(in_phi_prime(cfg, &next));
            prop_assert!(sol.graph.node_index(&next).is_some());
        }
        let text = serde_json::to_string(&next).unwrap();
        prop_assert_eq!(serde_json::from_str::<TrimmedScenario>(&text).unwrap(), next);
    }

    #[test]
    fn real_addition_conserves_load(cfg in any_cfg(), jobs in prop::collection::vec((-6i64..12, 0usize..2), 1..25)) {
        let mut psi = Scenario::empty(cfg);
        let mut total = Rational::zero();
        for (j, h) in jobs {
            let j = psi.t_exp + j;
            let out = scenario_add_exp(cfg, &psi, j, h).unwrap();
            if out.forbidden {
                break;
            }
            total = total + cfg.pow_eps(j);
            psi = out.psi;
            prop_assert_eq!(&psi.total_load(cfg) * &psi.scale(cfg), total.clone());
            prop_assert!(psi.lower_bound(cfg) < cfg.pow_eps(cfg.omega as i64));
        }
    }

    #[test]
    fn opt_lies_between_bounds(sizes in prop::collection::vec(1i64..30, 1..10), m in 2usize..4) {
        let rs: Vec<Rational> = sizes.iter().map(|&s| Rational::from(s)).collect();
        let opt = opt_makespan_sizes(&rs, m, DEFAULT_OPT_NODE_CAP).unwrap();
        let total: i64 = sizes.iter().sum();
        let pmax = *sizes.iter().max().unwrap();
        prop_assert!(opt >= Rational::new(total, m as i64));
        prop_assert!(opt >= Rational::from(pmax));
        let mut loads = vec![Rational::zero(); m];
        for s in &rs {
            let h = ls_place(&loads);
            loads[h] = &loads[h] + s;
        }
        let cmax = loads.into_iter().fold(Rational::zero(), Rational::max);
        prop_assert!(opt <= cmax.clone());
        prop_assert!(cmax <= opt * Rational::new(2 * m as i64 - 1, m as i64));
    }
}
