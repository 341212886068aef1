//! Executable strategies and the match runner.
//!
//! The runner owns the real scenario ψ and a [`Tracker`] that keeps a trimmed-scenario
//! φ of the game graph simulating ψ machine by machine (possibly one g₁ shift ahead).
//! Table players read the tracker; external players only see job sizes and placements.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{EpsilonConfig, GridValue};
use crate::opt::opt_makespan_sizes;
use crate::protocol::{read_message, write_message, Message};
use crate::rational::Rational;
use crate::scenario::{instant_ratio_real, raw_ratio_trimmed, tick_ratio, OptCache, Scenario, TrimmedScenario};
use crate::solver::{Solution, BOT};
use crate::state::{is_simulating, TrimmedState};
use crate::transition::{project_exponent, scenario_add_exp, trimmed_add_ordered, Projected, TrimmedOutcome};

/// The real scenario together with its simulating trimmed-scenario.
#[derive(Clone, Debug)]
pub struct Tracker {
    pub psi: Scenario,
    /// Trimmed-state simulating each machine.
    pub theta: Vec<TrimmedState>,
    /// Exponent of the trimmed scale; equals `psi.t_exp` or `psi.t_exp + ω`.
    pub u: i64,
    pub node: u32,
}

/// Everything that placing one job on one machine would change.
#[derive(Clone, Debug)]
pub struct Preview {
    pub machine: usize,
    pub psi: Scenario,
    pub real_shifts: u32,
    pub forbidden: bool,
    pub theta: Vec<TrimmedState>,
    pub u: i64,
    pub node: u32,
    pub projected: Projected,
}

impl Tracker {
    pub fn new(sol: &Solution) -> Self {
        let cfg = &sol.graph.cfg;
        Tracker {
            psi: Scenario::empty(cfg),
            theta: vec![TrimmedState::zero(cfg); cfg.m],
            u: 0,
            node: 0,
        }
    }

    pub fn shifted(&self) -> bool {
        self.u != self.psi.t_exp
    }

    /// Exponent of the effective scale `T_eff` against which jobs are projected.
    pub fn effective_scale(&self) -> i64 {
        self.u
    }

    /// Machine-wise simulation check at the current scales.
    pub fn check_simulation(&self, sol: &Solution) -> Result<()> {
        check_pair(sol, &self.psi, &self.theta, self.u)
    }

    /// Outcome of placing a job of size `(1+ε)^j` on machine `h`, without committing it.
    pub fn preview(&self, sol: &Solution, j: i64, h: usize) -> Result<Preview> {
        let cfg = &sol.graph.cfg;
        let w = cfg.omega as i64;
        let real = scenario_add_exp(cfg, &self.psi, j, h)?;
        let psi = real.psi;
        let (mu, base_u) = if self.node == 0 {
            (j.rem_euclid(w), j.div_euclid(w) * w)
        } else {
            (j - self.u, self.u)
        };
        let small_fits = self.node != 0 && base_u >= psi.t_exp && {
            let d = ((base_u - psi.t_exp) / w) as u32;
            let eta = psi.states[h].f_shift(cfg, d).small;
            eta <= Rational::from(self.theta[h].small() as i64)
        };
        let projected = project_exponent(cfg, mu, small_fits);
        let (theta, u, node) = match projected {
            Projected::Zero => (self.theta.clone(), self.u, self.node),
            Projected::Exp { mu, dropped } => {
                match trimmed_add_ordered(cfg, &self.theta, Some(mu), h)? {
                    TrimmedOutcome::Bot => (self.theta.clone(), self.u, BOT),
                    TrimmedOutcome::Next { states, scale } => {
                        let phi = TrimmedScenario::from_ordered(&states);
                        let node = sol.graph.node_index(&phi).ok_or_else(|| {
                            Error::Invariant(format!("successor {phi} missing from the graph"))
                        })?;
                        (states, base_u + dropped + scale, node)
                    }
                }
            }
        };
        if node != BOT && !real.forbidden {
            check_pair(sol, &psi, &theta, u)?;
        }
        Ok(Preview {
            machine: h,
            psi,
            real_shifts: real.shifts,
            forbidden: real.forbidden,
            theta,
            u,
            node,
            projected,
        })
    }

    pub fn commit(&mut self, p: Preview) {
        self.psi = p.psi;
        self.theta = p.theta;
        self.u = p.u;
        self.node = p.node;
    }
}

fn check_pair(sol: &Solution, psi: &Scenario, theta: &[TrimmedState], u: i64) -> Result<()> {
    let cfg = &sol.graph.cfg;
    let w = cfg.omega as i64;
    if psi.is_empty() {
        if theta.iter().all(TrimmedState::is_zero) {
            return Ok(());
        }
        return Err(Error::Invariant("jobs in φ but none in ψ".into()));
    }
    let d = u - psi.t_exp;
    if d != 0 && d != w {
        return Err(Error::Invariant(format!("trimmed scale {u} vs real scale {}", psi.t_exp)));
    }
    for (h, (tau, st)) in theta.iter().zip(&psi.states).enumerate() {
        let st = st.f_shift(cfg, (d / w) as u32);
        if !is_simulating(tau, &st) {
            return Err(Error::Invariant(format!(
                "machine {h}: {tau:?} does not simulate {st:?} (shift {})",
                d / w
            )));
        }
    }
    Ok(())
}

/// Minimum-load machine, lowest index on ties.
pub fn ls_place(loads: &[Rational]) -> usize {
    let mut best = 0;
    for (h, l) in loads.iter().enumerate() {
        if l < &loads[best] {
            best = h;
        }
    }
    best
}

/// What a player may look at: the job sizes and placements so far, plus the tracker.
pub struct MatchView<'a> {
    pub sol: &'a Solution,
    pub tracker: &'a Tracker,
    pub loads: &'a [Rational],
    pub jobs: &'a [Rational],
}

pub trait Adversary {
    /// Next job size, or `None` to stop.
    fn next_job(&mut self, view: &MatchView) -> Result<Option<Rational>>;
    /// The scheduler's answer to the last job.
    fn observe(&mut self, _machine: usize) -> Result<()> {
        Ok(())
    }
    /// Final ratios once the match ends.
    fn finish(&mut self, _trimmed: &Rational, _real: &Rational) -> Result<()> {
        Ok(())
    }
    /// Whether this player guarantees `V(φ) >= ρ*` after every observation.
    fn is_table(&self) -> bool {
        false
    }
}

pub trait Scheduler {
    fn place(&mut self, view: &MatchView, size: &Rational) -> Result<usize>;
    fn finish(&mut self, _trimmed: &Rational, _real: &Rational) -> Result<()> {
        Ok(())
    }
    /// Whether this player guarantees `V(φ) <= ρ*` after every placement.
    fn is_table(&self) -> bool {
        false
    }
}

/// The near-optimal adversary read off the value table.
#[derive(Default)]
pub struct TableAdversary;

impl TableAdversary {
    /// R index of the next job at the tracked node, or `None` to stop.
    pub fn choose(sol: &Solution, node: u32) -> Result<Option<usize>> {
        let rho = sol.table.rho_star;
        if sol.ratio_of(node) >= rho {
            return Ok(None);
        }
        let level = sol.table.levels[node as usize];
        if level == u32::MAX {
            return Err(Error::Invariant(format!("adversary stranded at node {node} below rho*")));
        }
        let level_of = |s: u32| if s == BOT { 0 } else { sol.table.levels[s as usize] };
        let mut best: Option<(GridValue, usize)> = None;
        for alpha in 1..sol.graph.cfg.r_len() {
            let succ = sol.graph.succ(node, alpha);
            if !succ.iter().all(|&s| level_of(s) < level) {
                continue;
            }
            let worst = succ.iter().map(|&s| sol.value_of(s)).min().unwrap_or(GridValue::INFINITY);
            if best.is_none_or(|(v, _)| worst > v) {
                best = Some((worst, alpha));
            }
        }
        match best {
            Some((_, alpha)) => Ok(Some(alpha)),
            None => Err(Error::Invariant(format!("no progressing job at node {node}"))),
        }
    }
}

impl Adversary for TableAdversary {
    fn next_job(&mut self, view: &MatchView) -> Result<Option<Rational>> {
        let cfg = &view.sol.graph.cfg;
        Ok(Self::choose(view.sol, view.tracker.node)?.map(|alpha| {
            let mu = cfg.r_exponent(alpha).expect("nonzero job");
            cfg.pow_eps(mu + view.tracker.effective_scale())
        }))
    }

    fn is_table(&self) -> bool {
        true
    }
}

/// The near-optimal online scheduler read off the value table.
#[derive(Default)]
pub struct TableScheduler;

impl TableScheduler {
    pub fn choose(sol: &Solution, tracker: &Tracker, j: i64) -> Result<usize> {
        let m = tracker.psi.states.len();
        let previews = (0..m)
            .map(|h| tracker.preview(sol, j, h))
            .collect::<Result<Vec<_>>>()?;
        if let Some(p) = previews
            .iter()
            .find(|p| p.real_shifts == 0 && p.projected == Projected::Zero)
        {
            return Ok(p.machine);
        }
        previews
            .iter()
            .filter(|p| !p.forbidden && p.node != BOT && sol.value_of(p.node) <= sol.table.rho_star)
            .min_by_key(|p| (sol.value_of(p.node), p.node, p.machine))
            .map(|p| p.machine)
            .ok_or_else(|| Error::Invariant(format!("no placement keeps V <= rho* at node {}", tracker.node)))
    }
}

impl Scheduler for TableScheduler {
    fn place(&mut self, view: &MatchView, size: &Rational) -> Result<usize> {
        let cfg = &view.sol.graph.cfg;
        let j = cfg
            .exponent_of(size)
            .ok_or_else(|| Error::Input(format!("job size {size} is not a power of 1+eps")))?;
        Self::choose(view.sol, view.tracker, j)
    }

    fn is_table(&self) -> bool {
        true
    }
}

/// List scheduling.
#[derive(Default)]
pub struct LsScheduler;

impl Scheduler for LsScheduler {
    fn place(&mut self, view: &MatchView, _size: &Rational) -> Result<usize> {
        Ok(ls_place(view.loads))
    }
}

/// Always answers with one fixed machine.
pub struct FixedScheduler(pub usize);

impl Scheduler for FixedScheduler {
    fn place(&mut self, _view: &MatchView, _size: &Rational) -> Result<usize> {
        Ok(self.0)
    }
}

/// Seeded stream of random grid-sized jobs around the current scale.
pub struct RandomAdversary {
    rng: ChaCha8Rng,
    remaining: usize,
}

impl RandomAdversary {
    pub fn new(seed: u64, length: usize) -> Self {
        RandomAdversary { rng: ChaCha8Rng::seed_from_u64(seed), remaining: length }
    }
}

impl Adversary for RandomAdversary {
    fn next_job(&mut self, view: &MatchView) -> Result<Option<Rational>> {
        if self.remaining == 0 {
            return Ok(None);
        }
        self.remaining -= 1;
        let cfg = &view.sol.graph.cfg;
        let j = random_exponent(cfg, &mut self.rng, view.tracker.psi.t_exp);
        Ok(Some(cfg.pow_eps(j)))
    }
}

/// Job exponent near the scale `t_exp`: mostly tiny to big, occasionally huge.
pub fn random_exponent(cfg: &EpsilonConfig, rng: &mut impl Rng, t_exp: i64) -> i64 {
    let lo = -(cfg.c0 as i64) - 2;
    let hi = cfg.omega as i64 + 1;
    let mut j = t_exp + rng.gen_range(lo..=hi);
    if rng.gen_ratio(1, 20) {
        j += rng.gen_range(1..=3 * cfg.r_max_exp);
    }
    j
}

/// A scheduler on the other end of a line protocol.
pub struct ExternalScheduler<R, W> {
    input: R,
    output: W,
}

impl<R: BufRead, W: Write> ExternalScheduler<R, W> {
    pub fn new(input: R, output: W) -> Self {
        ExternalScheduler { input, output }
    }
}

impl<R: BufRead, W: Write> Scheduler for ExternalScheduler<R, W> {
    fn place(&mut self, view: &MatchView, size: &Rational) -> Result<usize> {
        write_message(&mut self.output, &Message::Job { size: size.clone() })?;
        match read_message(&mut self.input)? {
            Some(Message::Place { machine }) if (1..=view.loads.len()).contains(&machine) => Ok(machine - 1),
            Some(Message::Place { machine }) => Err(Error::Protocol(format!("machine {machine} out of range"))),
            Some(other) => Err(Error::Protocol(format!("expected place, got {}", other.to_line()))),
            None => Err(Error::Protocol("scheduler closed the stream".into())),
        }
    }

    fn finish(&mut self, trimmed: &Rational, real: &Rational) -> Result<()> {
        let msg = Message::Stop { trimmed_ratio: trimmed.clone(), real_ratio: real.clone() };
        write_message(&mut self.output, &msg)
    }
}

/// An adversary on the other end of a line protocol.
pub struct ExternalAdversary<R, W> {
    input: R,
    output: W,
}

impl<R: BufRead, W: Write> ExternalAdversary<R, W> {
    pub fn new(input: R, output: W) -> Self {
        ExternalAdversary { input, output }
    }
}

impl<R: BufRead, W: Write> Adversary for ExternalAdversary<R, W> {
    fn next_job(&mut self, _view: &MatchView) -> Result<Option<Rational>> {
        match read_message(&mut self.input)? {
            Some(Message::Job { size }) => Ok(Some(size)),
            Some(Message::Stop { .. }) | None => Ok(None),
            Some(other) => Err(Error::Protocol(format!("expected job, got {}", other.to_line()))),
        }
    }

    fn observe(&mut self, machine: usize) -> Result<()> {
        write_message(&mut self.output, &Message::Place { machine: machine + 1 })
    }

    fn finish(&mut self, trimmed: &Rational, real: &Rational) -> Result<()> {
        let msg = Message::Stop { trimmed_ratio: trimmed.clone(), real_ratio: real.clone() };
        write_message(&mut self.output, &msg)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub size: Rational,
    /// 1-based, as on the wire.
    pub machine: usize,
    /// `C_max/OPT` with small jobs splittable.
    pub real_ratio: Rational,
    /// `C_max/OPT` with every job integral, if requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_ratio: Option<Rational>,
    pub trimmed_ratio: Rational,
    pub node: u32,
    pub node_value: Rational,
    pub shifted: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchEnd {
    Stopped,
    MaxSteps,
    /// The scheduler's move certified a ratio above 2; the match cannot be tracked further.
    Forbidden,
}

#[derive(Clone, Debug, Serialize)]
pub struct MatchRecord {
    pub rho_star: Rational,
    pub steps: Vec<StepRecord>,
    pub end: MatchEnd,
    pub final_trimmed_ratio: Rational,
    pub final_real_ratio: Rational,
    /// Steps after which a table scheduler had `V(φ) > ρ*`.
    pub scheduler_violations: usize,
    /// Steps after which a table adversary had `V(φ) < ρ*`.
    pub adversary_violations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct MatchOptions {
    pub max_steps: usize,
    /// Also compute the integral offline optimum of every prefix.
    pub exact_ratios: bool,
    pub opt_cap: usize,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions { max_steps: 1000, exact_ratios: false, opt_cap: crate::opt::DEFAULT_OPT_NODE_CAP }
    }
}

/// Alternates emit/place until the adversary stops or `max_steps` jobs were placed.
pub fn run_match(
    sol: &Solution,
    adversary: &mut dyn Adversary,
    scheduler: &mut dyn Scheduler,
    opts: MatchOptions,
) -> Result<MatchRecord> {
    let cfg = &sol.graph.cfg;
    let rho = sol.table.rho_star;
    let mut tracker = Tracker::new(sol);
    let mut loads = vec![Rational::zero(); cfg.m];
    let mut jobs: Vec<Rational> = Vec::new();
    let mut steps = Vec::new();
    let mut sched_bad = 0;
    let mut adv_bad = 0;
    let grid = |v: GridValue| cfg.grid_value(v).unwrap_or_else(|| cfg.grid_top().clone());
    let end = loop {
        if steps.len() >= opts.max_steps {
            break MatchEnd::MaxSteps;
        }
        let view = MatchView { sol, tracker: &tracker, loads: &loads, jobs: &jobs };
        let Some(size) = adversary.next_job(&view)? else {
            break MatchEnd::Stopped;
        };
        let j = cfg
            .exponent_of(&size)
            .ok_or_else(|| Error::Protocol(format!("job size {size} is off the grid")))?;
        let h = scheduler.place(&view, &size)?;
        if h >= cfg.m {
            return Err(Error::Protocol(format!("machine {} out of range", h + 1)));
        }
        let preview = tracker.preview(sol, j, h)?;
        let forbidden = preview.forbidden || preview.node == BOT;
        loads[h] = &loads[h] + &size;
        jobs.push(size.clone());
        adversary.observe(h)?;
        if forbidden {
            tracker.psi = preview.psi;
            break MatchEnd::Forbidden;
        }
        tracker.commit(preview);
        let value = sol.value_of(tracker.node);
        if scheduler.is_table() && value > rho {
            sched_bad += 1;
        }
        if adversary.is_table() && value < rho {
            adv_bad += 1;
        }
        let exact_ratio = if opts.exact_ratios {
            let cmax = loads.iter().max().cloned().unwrap_or_else(Rational::zero);
            Some(cmax / opt_makespan_sizes(&jobs, cfg.m, opts.opt_cap)?)
        } else {
            None
        };
        steps.push(StepRecord {
            step: steps.len() + 1,
            size,
            machine: h + 1,
            real_ratio: instant_ratio_real(cfg, &tracker.psi, opts.opt_cap)?,
            exact_ratio,
            trimmed_ratio: grid(sol.ratio_of(tracker.node)),
            node: tracker.node,
            node_value: grid(value),
            shifted: tracker.shifted(),
        });
    };
    let final_trimmed = grid(sol.ratio_of(tracker.node));
    let final_real = instant_ratio_real(cfg, &tracker.psi, opts.opt_cap)?;
    adversary.finish(&final_trimmed, &final_real)?;
    scheduler.finish(&final_trimmed, &final_real)?;
    Ok(MatchRecord {
        rho_star: sol.rho_star(),
        steps,
        end,
        final_trimmed_ratio: final_trimmed,
        final_real_ratio: final_real,
        scheduler_violations: sched_bad,
        adversary_violations: adv_bad,
    })
}

/// Pre-grid trimmed ratio of the tracked node as an exact rational.
pub fn raw_trimmed_ratio(sol: &Solution, node: u32, cache: &OptCache) -> Result<Option<Rational>> {
    if node == BOT {
        return Ok(None);
    }
    let phi = &sol.graph.nodes[node as usize];
    Ok(raw_ratio_trimmed(&sol.graph.cfg, phi, cache)?.map(|(c, o)| tick_ratio(c, o)))
}

/// Coupling between ψ and an unshifted simulating φ:
/// `C_max(ψ) <= C_max(φ) <= C_max(ψ) + 2s` and `OPT(ψ) <= OPT(φ) <= OPT(ψ) + 3s`,
/// with `s = (1+ε)^{-c0}` and OPT(ψ) letting small jobs split.
pub fn coupling_holds(sol: &Solution, tracker: &Tracker, cache: &OptCache, opt_cap: usize) -> Result<bool> {
    let cfg = &sol.graph.cfg;
    if tracker.shifted() || tracker.node == 0 || tracker.node == BOT {
        return Ok(true);
    }
    let phi = &sol.graph.nodes[tracker.node as usize];
    let Some((cmax_t, opt_t)) = raw_ratio_trimmed(cfg, phi, cache)? else {
        return Ok(true);
    };
    let cmax_phi = cfg.ticks_to_rational(cmax_t);
    let opt_phi = cfg.ticks_to_rational(opt_t);
    let s = cfg.pow_eps(-(cfg.c0 as i64));
    let cmax_psi = tracker.psi.cmax(cfg);
    let ratio_psi = instant_ratio_real(cfg, &tracker.psi, opt_cap)?;
    let opt_psi = &cmax_psi / &ratio_psi;
    let two_s = Rational::from(2) * &s;
    let three_s = Rational::from(3) * &s;
    Ok(cmax_psi <= cmax_phi
        && cmax_phi <= &cmax_psi + &two_s
        && opt_psi <= opt_phi
        && opt_phi <= &opt_psi + &three_s)
}
