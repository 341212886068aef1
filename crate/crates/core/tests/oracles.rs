mod common;

use common::*;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use makespan_game::opt::{opt_makespan_integral, opt_makespan_sizes, JobMultiset, DEFAULT_OPT_NODE_CAP};
use makespan_game::semi::{semi_solve, DEFAULT_SEMI_STATE_CAP};
use makespan_game::solver::{solve, SolveOptions};
use makespan_game::state::{enumerate_trimmed_states, DEFAULT_STATE_CAP};
use makespan_game::{EpsilonConfig, Rational};

fn cfg(n: i64, d: i64, m: usize) -> EpsilonConfig {
    EpsilonConfig::new(Rational::new(n, d), m).unwrap()
}

#[test]
fn state_count_matches_nested_loops() {
    for (n, d) in [(1, 1), (1, 2), (1, 3)] {
        let c = cfg(n, d, 2);
        let expect = count_states(&q(n, d), c.c0 as i64, c.omega as i64);
        let got = enumerate_trimmed_states(&c, DEFAULT_STATE_CAP).unwrap().len();
        assert_eq!(got, expect, "eps {n}/{d}");
    }
}

#[test]
fn constants_match_defining_inequalities() {
    for (n, d) in [(1, 1), (1, 2), (1, 3), (1, 4), (2, 3)] {
        let c = cfg(n, d, 2);
        let eps = q(n, d);
        assert_eq!(c.c0 as i64, min_exp(&eps, &q(d, n)));
        assert_eq!(c.omega as i64, min_exp(&eps, &q(3, 1)));
        let base = q(1, 1) + &eps;
        let target = q(4, 1) * num_traits::pow(base, (c.omega + c.c0 + 1) as usize);
        assert_eq!(c.mu0 as i64, min_exp(&eps, &target));
    }
}

#[test]
fn integral_opt_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for m in [2usize, 3] {
        for _ in 0..300 {
            let n = rng.gen_range(0..=8);
            let kinds = rng.gen_range(1..=4);
            let menu: Vec<u64> = (0..kinds).map(|_| rng.gen_range(1..=12)).collect();
            let sizes: Vec<u64> = (0..n).map(|_| menu[rng.gen_range(0..kinds)]).collect();
            let rs: Vec<Rational> = sizes.iter().map(|&s| Rational::from(s as i64)).collect();
            let got = opt_makespan_sizes(&rs, m, DEFAULT_OPT_NODE_CAP).unwrap();
            assert_eq!(got, Rational::from(opt_enum(&sizes, m) as i64), "{sizes:?} m={m}");
        }
    }
}

#[test]
fn opt_over_grid_exponents() {
    let c = cfg(1, 1, 2);
    let mut jobs = JobMultiset::new();
    jobs.add(0, 2);
    jobs.add(1, 1);
    assert_eq!(opt_makespan_integral(&c, &jobs, 2, DEFAULT_OPT_NODE_CAP).unwrap(), Rational::from(2));
    assert_eq!(opt_enum(&[1, 1, 2], 2), 2);
}

fn check_values_against_oracles(n: i64, d: i64) -> BigRational {
    let c = cfg(n, d, 2);
    let sol = solve(&c, SolveOptions::default()).unwrap();
    let ratios = node_ratios_two(&sol);
    for (i, (mine, theirs)) in sol.ratios.iter().zip(&ratios).enumerate() {
        assert_eq!(&to_big(&c.grid_value(*mine).unwrap()), theirs, "ratio of node {i}");
    }
    let values = attractor_values(&sol, &ratios);
    for (i, (mine, theirs)) in sol.table.values.iter().zip(&values).enumerate() {
        assert_eq!(&to_big(&c.grid_value(*mine).unwrap()), theirs, "value of node {i}");
    }
    values[0].clone()
}

#[test]
fn game_values_match_attractor_eps_one() {
    assert_eq!(check_values_against_oracles(1, 1), q(2, 1));
}

#[test]
fn game_values_match_attractor_eps_half() {
    assert_eq!(check_values_against_oracles(1, 2), q(3, 2));
}

#[test]
fn semi_values_match_tree_search() {
    for qq in 1..=3usize {
        let t = semi_solve(2, qq, DEFAULT_SEMI_STATE_CAP, DEFAULT_OPT_NODE_CAP).unwrap();
        assert_eq!(to_big(&t.ratio_star), semi_minimax(2, qq as u64), "q={qq}");
    }
}
