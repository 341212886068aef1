//! The reachable trimmed-scenario game graph and its min-max value iteration.

use std::collections::HashMap;

use num_bigint::BigInt;
use rayon::prelude::*;

use crate::error::{invariant, Error, Result};
use crate::grid::{EpsilonConfig, GridValue};
use crate::rational::Rational;
use crate::scenario::{instant_ratio_trimmed, OptCache, TrimmedScenario};
use crate::transition::{trimmed_add_ordered, TrimmedOutcome};

/// Successor index standing for BOT.
pub const BOT: u32 = u32::MAX;

pub const DEFAULT_NODE_CAP: usize = 5_000_000;

/// One layer of the transformation graph, restricted to what EMPTY can reach.
pub struct GameGraph {
    pub cfg: EpsilonConfig,
    pub nodes: Vec<TrimmedScenario>,
    index: HashMap<TrimmedScenario, u32>,
    offsets: Vec<u64>,
    data: Vec<u32>,
}

impl GameGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_index(&self, phi: &TrimmedScenario) -> Option<u32> {
        if *phi == TrimmedScenario::Bot {
            return Some(BOT);
        }
        self.index.get(phi).copied()
    }

    /// Sorted, duplicate-free successors of `node` under the R entry `alpha`.
    pub fn succ(&self, node: u32, alpha: usize) -> &[u32] {
        let k = node as usize * self.cfg.r_len() + alpha;
        &self.data[self.offsets[k] as usize..self.offsets[k + 1] as usize]
    }

    pub fn edge_count(&self) -> usize {
        self.data.len()
    }
}

/// Successor scenarios of one node, grouped by α and in target order.
fn expand(cfg: &EpsilonConfig, phi: &TrimmedScenario) -> Result<Vec<Vec<TrimmedScenario>>> {
    let states = phi.to_ordered(cfg).expect("BOT is never expanded");
    let mut out = Vec::with_capacity(cfg.r_len());
    out.push(vec![phi.clone()]);
    for alpha in 1..cfg.r_len() {
        let mu = cfg.r_exponent(alpha);
        let mut succ = Vec::new();
        for target in 0..states.len() {
            if target > 0 && states[target] == states[target - 1] {
                continue;
            }
            let next = match trimmed_add_ordered(cfg, &states, mu, target)? {
                TrimmedOutcome::Next { states, .. } => TrimmedScenario::from_ordered(&states),
                TrimmedOutcome::Bot => TrimmedScenario::Bot,
            };
            succ.push(next);
        }
        out.push(succ);
    }
    Ok(out)
}

/// Breadth-first closure from EMPTY. Nodes are numbered in discovery order, exploring
/// α ascending and target states in sorted order, so numbering is deterministic.
pub fn build_reachable_graph(cfg: &EpsilonConfig, node_cap: usize) -> Result<GameGraph> {
    let mut nodes = vec![TrimmedScenario::Empty];
    let mut index = HashMap::new();
    index.insert(TrimmedScenario::Empty, 0u32);
    let mut offsets = vec![0u64];
    let mut data = Vec::new();
    let mut start = 0usize;
    while start < nodes.len() {
        let end = nodes.len();
        let expanded: Vec<_> = nodes[start..end]
            .par_iter()
            .map(|phi| expand(cfg, phi))
            .collect::<Result<_>>()?;
        for groups in expanded {
            for succ in groups {
                let mut ids = Vec::with_capacity(succ.len());
                for phi in succ {
                    if phi == TrimmedScenario::Bot {
                        ids.push(BOT);
                        continue;
                    }
                    let id = match index.get(&phi) {
                        Some(&id) => id,
                        None => {
                            if nodes.len() >= node_cap {
                                return Err(Error::Resource(format!(
                                    "more than {node_cap} reachable trimmed-scenarios"
                                )));
                            }
                            let id = nodes.len() as u32;
                            index.insert(phi.clone(), id);
                            nodes.push(phi);
                            id
                        }
                    };
                    ids.push(id);
                }
                ids.sort_unstable();
                ids.dedup();
                data.extend_from_slice(&ids);
                offsets.push(data.len() as u64);
            }
        }
        start = end;
    }
    Ok(GameGraph { cfg: cfg.clone(), nodes, index, offsets, data })
}

/// Grid-rounded instant ratio of every node.
pub fn compute_ratios(graph: &GameGraph, cache: &OptCache) -> Result<Vec<GridValue>> {
    graph
        .nodes
        .par_iter()
        .map(|phi| instant_ratio_trimmed(&graph.cfg, phi, cache))
        .collect()
}

/// Fixed point of the value iteration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValueTable {
    pub values: Vec<GridValue>,
    pub rho_star: GridValue,
    /// Sweeps that changed at least one value.
    pub sweeps: u32,
    /// Potential `Z` after each sweep, starting with the initial table.
    pub z_trace: Vec<Rational>,
    /// Per node, the first sweep index whose value reached `rho_star` (`u32::MAX` if never).
    pub levels: Vec<u32>,
}

#[derive(Clone, Copy, Debug)]
pub struct IterateOptions {
    pub parallel: bool,
    pub max_sweeps: Option<u64>,
    /// Sweeps run after convergence to confirm the table is absorbing.
    pub extra_sweeps: u32,
}

impl Default for IterateOptions {
    fn default() -> Self {
        IterateOptions { parallel: true, max_sweeps: None, extra_sweeps: 3 }
    }
}

fn sweep_node(graph: &GameGraph, prev: &[GridValue], i: usize) -> GridValue {
    let r = graph.cfg.r_len();
    let mut best = prev[i];
    for alpha in 1..r {
        let worst = graph
            .succ(i as u32, alpha)
            .iter()
            .map(|&s| if s == BOT { GridValue::INFINITY } else { prev[s as usize] })
            .min()
            .unwrap_or(GridValue::INFINITY);
        if worst > best {
            best = worst;
        }
    }
    best
}

fn sweep(graph: &GameGraph, prev: &[GridValue], parallel: bool) -> Vec<GridValue> {
    if parallel {
        (0..prev.len()).into_par_iter().map(|i| sweep_node(graph, prev, i)).collect()
    } else {
        (0..prev.len()).map(|i| sweep_node(graph, prev, i)).collect()
    }
}

/// Sum of node values as an exact rational.
pub fn potential(cfg: &EpsilonConfig, values: &[GridValue]) -> Rational {
    let top = (cfg.grid_len() - 1) as u32;
    let mut steps = BigInt::from(0u32);
    let mut regular = 0i64;
    let mut at_top = 0i64;
    for v in values {
        if v.0 == top {
            at_top += 1;
        } else {
            regular += 1;
            steps += v.0;
        }
    }
    Rational::from(regular)
        + Rational::from_integer(steps) * &cfg.eps
        + Rational::from(at_top) * cfg.grid_top()
}

/// Jacobi value iteration `V_{t+1}(i) = max_α min_{succ} V_t` from the instant ratios.
pub fn value_iterate(graph: &GameGraph, ratios: &[GridValue], opts: IterateOptions) -> Result<ValueTable> {
    let cfg = &graph.cfg;
    if ratios.len() != graph.len() {
        return Err(Error::Input("one ratio per node required".into()));
    }
    if ratios.iter().any(|v| v.is_infinite()) {
        return Err(Error::Input("reachable nodes must have finite ratios".into()));
    }
    let bound = {
        let b = (Rational::from(20 * graph.len() as i64) / &cfg.eps).floor() + 1;
        u64::try_from(b).unwrap_or(u64::MAX)
    };
    let cap = opts.max_sweeps.map_or(bound, |c| c.min(bound));
    let mut cur = ratios.to_vec();
    let mut z_trace = vec![potential(cfg, &cur)];
    let mut changes: Vec<Vec<(u32, GridValue)>> = Vec::new();
    loop {
        let next = sweep(graph, &cur, opts.parallel);
        let mut changed = Vec::new();
        for (i, (a, b)) in cur.iter().zip(&next).enumerate() {
            invariant!(b >= a, "value of node {i} decreased");
            invariant!(!b.is_infinite(), "node {i} was forced into BOT");
            if a != b {
                changed.push((i as u32, *b));
            }
        }
        if changed.is_empty() {
            break;
        }
        if changes.len() as u64 >= cap {
            return Err(Error::Invariant(format!("no fixed point after {cap} sweeps")));
        }
        let z = potential(cfg, &next);
        let last = z_trace.last().unwrap();
        invariant!(&z - last >= cfg.eps, "potential grew by less than eps");
        z_trace.push(z);
        changes.push(changed);
        cur = next;
    }
    for extra in 0..opts.extra_sweeps {
        let again = sweep(graph, &cur, opts.parallel);
        invariant!(again == cur, "table moved on post-convergence sweep {extra}");
    }
    let rho_star = cur[0];
    let mut levels: Vec<u32> = ratios
        .iter()
        .map(|&v| if v >= rho_star { 0 } else { u32::MAX })
        .collect();
    for (t, changed) in changes.iter().enumerate() {
        for &(i, v) in changed {
            let l = &mut levels[i as usize];
            if *l == u32::MAX && v >= rho_star {
                *l = t as u32 + 1;
            }
        }
    }
    Ok(ValueTable { values: cur, rho_star, sweeps: changes.len() as u32, z_trace, levels })
}

/// Graph, instant ratios and value table for one `(ε, m)`.
pub struct Solution {
    pub graph: GameGraph,
    pub ratios: Vec<GridValue>,
    pub table: ValueTable,
}

impl Solution {
    pub fn rho_star(&self) -> Rational {
        self.graph.cfg.grid_value(self.table.rho_star).expect("finite rho*")
    }

    pub fn value_of(&self, node: u32) -> GridValue {
        if node == BOT {
            GridValue::INFINITY
        } else {
            self.table.values[node as usize]
        }
    }

    pub fn ratio_of(&self, node: u32) -> GridValue {
        if node == BOT {
            GridValue::INFINITY
        } else {
            self.ratios[node as usize]
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub node_cap: usize,
    pub opt_cap: usize,
    pub iterate: IterateOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            node_cap: DEFAULT_NODE_CAP,
            opt_cap: crate::opt::DEFAULT_OPT_NODE_CAP,
            iterate: IterateOptions::default(),
        }
    }
}

pub fn solve(cfg: &EpsilonConfig, opts: SolveOptions) -> Result<Solution> {
    let graph = build_reachable_graph(cfg, opts.node_cap)?;
    let cache = OptCache::new(cfg.m, opts.opt_cap);
    let ratios = compute_ratios(&graph, &cache)?;
    let table = value_iterate(&graph, &ratios, opts.iterate)?;
    Ok(Solution { graph, ratios, table })
}
