use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use makespan_game::cache::CacheFile;
use makespan_game::opt::DEFAULT_OPT_NODE_CAP;
use makespan_game::players::{
    run_match, Adversary, ExternalAdversary, ExternalScheduler, FixedScheduler, LsScheduler, MatchOptions,
    RandomAdversary, Scheduler, TableAdversary, TableScheduler,
};
use makespan_game::semi::{semi_solve, SemiCacheFile, DEFAULT_SEMI_STATE_CAP};
use makespan_game::solver::{build_reachable_graph, solve, Solution, SolveOptions, DEFAULT_NODE_CAP};
use makespan_game::state::{enumerate_trimmed_states, DEFAULT_STATE_CAP};
use makespan_game::verify::run_verify;
use makespan_game::{EpsilonConfig, Error, Rational, Result};

#[derive(Parser)]
#[command(name = "makespan-game", version, about = "Solve and play the online makespan game on identical machines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count trimmed-states and the reachable game graph.
    Enumerate(GameArgs),
    /// Solve the game and persist the value table.
    Solve(GameArgs),
    /// Play one match between two strategies.
    Match(MatchArgs),
    /// Solve the bounded semi-online game with job sizes 1..=q.
    Semi(SemiArgs),
    /// Run the seeded self-check suite.
    Verify(VerifyArgs),
}

#[derive(Args, Clone)]
struct GameArgs {
    /// Precision ε as "p/q".
    #[arg(long, default_value = "1")]
    eps: Rational,
    /// Number of machines.
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// JSON file with "eps" and "m"; overrides both flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
    node_cap: usize,
    #[arg(long, default_value_t = DEFAULT_OPT_NODE_CAP)]
    opt_cap: usize,
    /// Value-table cache file.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Print JSON instead of plain text.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum AdversaryKind {
    Table,
    Random,
    External,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchedulerKind {
    Table,
    Ls,
    /// Always machine 1.
    Fixed,
    External,
}

#[derive(Args)]
struct MatchArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long, value_enum, default_value = "table")]
    adversary: AdversaryKind,
    #[arg(long, value_enum, default_value = "table")]
    scheduler: SchedulerKind,
    #[arg(long, default_value_t = 1000)]
    max_steps: usize,
    /// Seed for the random adversary.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also report the integral offline optimum of every prefix.
    #[arg(long)]
    exact: bool,
    /// Where to write the match record; defaults to stdout, or stderr when stdio is in use.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SemiArgs {
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 2)]
    q: usize,
    #[arg(long, default_value_t = DEFAULT_SEMI_STATE_CAP)]
    node_cap: usize,
    #[arg(long, default_value_t = DEFAULT_OPT_NODE_CAP)]
    opt_cap: usize,
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random samples per fuzz check.
    #[arg(long, default_value_t = 2000)]
    fuzz: usize,
}

fn game_config(a: &GameArgs) -> Result<EpsilonConfig> {
    match &a.config {
        Some(path) => EpsilonConfig::from_json(&std::fs::read_to_string(path)?),
        None => EpsilonConfig::new(a.eps.clone(), a.m),
    }
}

fn envelope(command: &str, config: Value, result: Value) -> Value {
    json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
        "result": result,
    })
}

fn emit(out: &mut dyn Write, as_json: bool, doc: &Value) -> Result<()> {
    if as_json {
        writeln!(out, "{}", serde_json::to_string_pretty(doc)?)?;
    } else if let Some(fields) = doc["result"].as_object() {
        for (k, v) in fields {
            match v {
                Value::String(s) => writeln!(out, "{k}: {s}")?,
                Value::Array(_) | Value::Object(_) => {}
                other => writeln!(out, "{k}: {other}")?,
            }
        }
    }
    Ok(())
}

fn solve_opts(a: &GameArgs) -> SolveOptions {
    SolveOptions { node_cap: a.node_cap, opt_cap: a.opt_cap, ..SolveOptions::default() }
}

/// Loads the cached solution when it matches the configuration, otherwise solves.
fn load_or_solve(cfg: &EpsilonConfig, a: &GameArgs) -> Result<Solution> {
    if let Some(path) = a.cache.as_deref().filter(|p| p.exists()) {
        let file = CacheFile::read(path)?;
        if file.eps == cfg.eps && file.m == cfg.m {
            return file.into_solution(a.node_cap);
        }
    }
    solve(cfg, solve_opts(a))
}

fn cmd_enumerate(a: &GameArgs) -> Result<()> {
    let cfg = game_config(a)?;
    let start = Instant::now();
    let states = enumerate_trimmed_states(&cfg, DEFAULT_STATE_CAP)?;
    let graph = build_reachable_graph(&cfg, a.node_cap)?;
    let result = json!({
        "lambda": states.len(),
        "r_size": cfg.r_len(),
        "c0": cfg.c0,
        "omega": cfg.omega,
        "mu0": cfg.mu0,
        "nodes": graph.len(),
        "edges": graph.edge_count(),
        "build_ms": start.elapsed().as_millis() as u64,
    });
    emit(&mut io::stdout(), a.json, &envelope("enumerate", json!(cfg.spec()), result))
}

fn cmd_solve(a: &GameArgs) -> Result<()> {
    let cfg = game_config(a)?;
    let sol = solve(&cfg, solve_opts(a))?;
    let fresh = CacheFile::from_solution(&sol);
    let mut cache_status = "none";
    if let Some(path) = &a.cache {
        if path.exists() {
            let stored = CacheFile::read(path)?;
            if stored.eps == cfg.eps && stored.m == cfg.m {
                if stored != fresh {
                    return Err(Error::Cache(format!("{} differs from the recomputed table", path.display())));
                }
                cache_status = "verified";
            } else {
                fresh.write(path)?;
                cache_status = "written";
            }
        } else {
            fresh.write(path)?;
            cache_status = "written";
        }
    }
    let result = json!({
        "rho_star": sol.rho_star().to_string(),
        "sweeps": sol.table.sweeps,
        "nodes": sol.graph.len(),
        "cache": cache_status,
    });
    emit(&mut io::stdout(), a.json, &envelope("solve", json!(cfg.spec()), result))
}

fn cmd_match(a: &MatchArgs) -> Result<()> {
    let cfg = game_config(&a.game)?;
    let sol = load_or_solve(&cfg, &a.game)?;
    let uses_stdio =
        matches!(a.adversary, AdversaryKind::External) || matches!(a.scheduler, SchedulerKind::External);
    if matches!(a.adversary, AdversaryKind::External) && matches!(a.scheduler, SchedulerKind::External) {
        return Err(Error::Input("at most one player can be external".into()));
    }
    let stdin = io::stdin();
    let mut adversary: Box<dyn Adversary> = match a.adversary {
        AdversaryKind::Table => Box::new(TableAdversary),
        AdversaryKind::Random => Box::new(RandomAdversary::new(a.seed, a.max_steps)),
        AdversaryKind::External => Box::new(ExternalAdversary::new(BufReader::new(stdin.lock()), io::stdout())),
    };
    let mut scheduler: Box<dyn Scheduler> = match a.scheduler {
        SchedulerKind::Table => Box::new(TableScheduler),
        SchedulerKind::Ls => Box::new(LsScheduler),
        SchedulerKind::Fixed => Box::new(FixedScheduler(0)),
        SchedulerKind::External => Box::new(ExternalScheduler::new(BufReader::new(stdin.lock()), io::stdout())),
    };
    let opts = MatchOptions { max_steps: a.max_steps, exact_ratios: a.exact, opt_cap: a.game.opt_cap };
    let record = run_match(&sol, adversary.as_mut(), scheduler.as_mut(), opts)?;
    let result = serde_json::to_value(&record)?;
    let doc = envelope(
        "match",
        json!({ "eps": cfg.eps, "m": cfg.m, "max_steps": a.max_steps, "seed": a.seed }),
        result,
    );
    match &a.output {
        Some(path) => {
            let mut f = std::fs::File::create(path)?;
            emit(&mut f, true, &doc)
        }
        None if uses_stdio => emit(&mut io::stderr(), a.game.json, &doc),
        None => emit(&mut io::stdout(), a.game.json, &doc),
    }
}

fn cmd_semi(a: &SemiArgs) -> Result<()> {
    let table = semi_solve(a.m, a.q, a.node_cap, a.opt_cap)?;
    let file = SemiCacheFile::from_table(&table);
    if let Some(path) = &a.cache {
        std::fs::write(path, file.to_json()?)?;
    }
    let result = json!({
        "ratio_star": table.ratio_star.to_string(),
        "sweeps": table.sweeps,
        "scenarios": table.scenarios.len(),
    });
    emit(&mut io::stdout(), a.json, &envelope("semi", json!({ "m": a.m, "q": a.q }), result))
}

fn cmd_verify(a: &VerifyArgs) -> Result<bool> {
    let cfg = game_config(&a.game)?;
    let sol = solve(&cfg, solve_opts(&a.game))?;
    let report = run_verify(&sol, a.seed, a.fuzz, a.game.cache.as_deref().filter(|p| Path::exists(p)))?;
    let doc = envelope(
        "verify",
        json!({ "eps": cfg.eps, "m": cfg.m, "seed": a.seed, "fuzz": a.fuzz }),
        serde_json::to_value(&report)?,
    );
    let mut out = io::stdout();
    if a.game.json {
        emit(&mut out, true, &doc)?;
    } else {
        for c in &report.checks {
            writeln!(out, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
    }
    Ok(report.passed)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Enumerate(a) => cmd_enumerate(&a).map(|_| true),
        Command::Solve(a) => cmd_solve(&a).map(|_| true),
        Command::Match(a) => cmd_match(&a).map(|_| true),
        Command::Semi(a) => cmd_semi(&a).map(|_| true),
        Command::Verify(a) => cmd_verify(&a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(4),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
