use std::io::Cursor;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use makespan_game::opt::DEFAULT_OPT_NODE_CAP;
use makespan_game::players::{
    coupling_holds, ls_place, random_exponent, run_match, ExternalScheduler, LsScheduler, MatchEnd, MatchOptions,
    TableAdversary, TableScheduler, Tracker,
};
use makespan_game::scenario::{OptCache, TrimmedScenario};
use makespan_game::semi::{semi_schedule, semi_solve, DEFAULT_SEMI_STATE_CAP};
use makespan_game::solver::{solve, Solution, SolveOptions, BOT};
use makespan_game::state::TrimmedState;
use makespan_game::transition::trimmed_add;
use makespan_game::{EpsilonConfig, Rational};

fn solved(n: i64, d: i64) -> Solution {
    solve(&EpsilonConfig::new(Rational::new(n, d), 2).unwrap(), SolveOptions::default()).unwrap()
}

fn place(sol: &Solution, t: &mut Tracker, j: i64, h: usize) {
    let p = t.preview(sol, j, h).unwrap();
    assert!(!p.forbidden && p.node != BOT);
    t.commit(p);
}

#[test]
fn adversary_beats_list_scheduling() {
    let sol = solved(1, 1);
    let r = run_match(&sol, &mut TableAdversary, &mut LsScheduler, MatchOptions::default()).unwrap();
    assert_eq!(r.end, MatchEnd::Stopped);
    assert!(r.final_trimmed_ratio >= Rational::from(2));
}

#[test]
fn table_players_meet_at_rho_star() {
    for sol in [solved(1, 1), solved(1, 2)] {
        let r = run_match(&sol, &mut TableAdversary, &mut TableScheduler, MatchOptions::default()).unwrap();
        assert!(r.steps.iter().all(|s| s.node_value == sol.rho_star()));
        assert_eq!((r.scheduler_violations, r.adversary_violations), (0, 0));
    }
}

#[test]
fn stacked_unit_jobs_end_the_game() {
    let sol = solved(1, 1);
    let mut t = Tracker::new(&sol);
    place(&sol, &mut t, 0, 0);
    place(&sol, &mut t, 0, 0);
    assert_eq!(TableAdversary::choose(&sol, t.node).unwrap(), None);
    assert_eq!(sol.graph.cfg.grid_value(sol.ratio_of(t.node)).unwrap(), Rational::from(2));
}

#[test]
fn first_job_lands_in_the_tracked_state() {
    let sol = solved(1, 1);
    let mut t = Tracker::new(&sol);
    place(&sol, &mut t, 0, 1);
    assert_eq!(t.theta[1], TrimmedState(vec![1, 0, 0]));
    assert!(t.theta[0].is_zero());
    let phi = &sol.graph.nodes[t.node as usize];
    assert_eq!(&trimmed_add(&sol.graph.cfg, phi, 0, 0).unwrap(), phi);
}

#[test]
fn huge_job_shifts_the_tracked_states() {
    let sol = solved(1, 1);
    let cfg = &sol.graph.cfg;
    let mut t = Tracker::new(&sol);
    place(&sol, &mut t, 0, 0);
    place(&sol, &mut t, 0, 1);
    let before = t.u;
    place(&sol, &mut t, 10, 0);
    assert!(t.u - before >= 2 * cfg.omega as i64);
    assert!(t.check_simulation(&sol).is_ok());
    assert!(matches!(sol.graph.nodes[t.node as usize], TrimmedScenario::Node(_)));
}

#[test]
fn tiny_jobs_are_absorbed_lazily() {
    let sol = solved(1, 2);
    let mut t = Tracker::new(&sol);
    place(&sol, &mut t, 0, 0);
    let tiny = -(sol.graph.cfg.c0 as i64) - 3;
    let h = TableScheduler::choose(&sol, &t, tiny).unwrap();
    place(&sol, &mut t, tiny, h);
    let node = t.node;
    let h = TableScheduler::choose(&sol, &t, tiny).unwrap();
    place(&sol, &mut t, tiny, h);
    assert_eq!(t.node, node);
}

#[test]
fn echo_scheduler_is_punished() {
    let sol = solved(1, 1);
    let script = "{\"type\":\"place\",\"machine\":1}\n".repeat(50);
    let mut ext = ExternalScheduler::new(Cursor::new(script.into_bytes()), Vec::new());
    let r = run_match(&sol, &mut TableAdversary, &mut ext, MatchOptions::default()).unwrap();
    assert_eq!(r.final_trimmed_ratio, Rational::from(2));
    assert!(r.steps.len() <= 3);
}

#[test]
fn malformed_reply_aborts_the_match() {
    let sol = solved(1, 1);
    let mut ext = ExternalScheduler::new(Cursor::new(b"{\"type\":\"place\",\"machine\":3}\n".to_vec()), Vec::new());
    assert!(run_match(&sol, &mut TableAdversary, &mut ext, MatchOptions::default()).is_err());
}

#[test]
fn real_and_trimmed_stay_coupled() {
    for sol in [solved(1, 1), solved(1, 2)] {
        let cfg = &sol.graph.cfg;
        let cache = OptCache::new(cfg.m, DEFAULT_OPT_NODE_CAP);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..300 {
            let mut t = Tracker::new(&sol);
            for _ in 0..20 {
                let j = random_exponent(cfg, &mut rng, t.psi.t_exp);
                let p = t.preview(&sol, j, rng.gen_range(0..cfg.m)).unwrap();
                if p.forbidden || p.node == BOT {
                    break;
                }
                t.commit(p);
                assert!(coupling_holds(&sol, &t, &cache, DEFAULT_OPT_NODE_CAP).unwrap());
            }
        }
    }
}

#[test]
fn semi_online_schedules() {
    let t = semi_solve(2, 2, DEFAULT_SEMI_STATE_CAP, DEFAULT_OPT_NODE_CAP).unwrap();
    let placed = semi_schedule(&t, &[1, 1, 2]).unwrap();
    let mut loads = [0u64; 2];
    for (s, h) in [1u64, 1, 2].iter().zip(&placed) {
        loads[*h] += s;
    }
    assert_eq!(loads.iter().max(), Some(&3));
    assert_eq!(semi_schedule(&t, &[2]).unwrap(), vec![0]);

    let stream: Vec<u64> = (0..30).map(|i| 1 + (i % 2)).collect();
    let placed = semi_schedule(&t, &stream).unwrap();
    let mut loads = vec![Rational::zero(); 2];
    let mut total = 0;
    for (&s, &h) in stream.iter().zip(&placed) {
        if total + s > t.total_cap() {
            assert_eq!(h, ls_place(&loads));
        }
        total += s;
        loads[h] = &loads[h] + &Rational::from(s as i64);
    }
}

#[test]
fn semi_online_ratio_grows_with_q() {
    let r: Vec<Rational> = (1..=3)
        .map(|q| semi_solve(2, q, DEFAULT_SEMI_STATE_CAP, DEFAULT_OPT_NODE_CAP).unwrap().ratio_star)
        .collect();
    assert!(r.windows(2).all(|w| w[0] <= w[1]));
    let three = semi_solve(3, 2, DEFAULT_SEMI_STATE_CAP, DEFAULT_OPT_NODE_CAP).unwrap();
    assert!(three.ratio_star >= Rational::new(3, 2));
}
