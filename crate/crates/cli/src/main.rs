mod games;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use seqnash::bnb::{solve, SolveStatus, SolverOptions};
use seqnash::game::{generate_kuhn, generate_random_sfg, kuhn3_pins, prune_pins, write_efg};
use seqnash::ncp::{assemble_ncp_with, NcpConfig};
use seqnash::sequence::{embed_strategic_form, StrategyProfile};
use seqnash::verifier;
use seqnash::zero_sum::solve_zero_sum;

use games::{load, prepare, PinMode};

#[derive(Parser)]
#[command(name = "seqnash", version, about = "Nash equilibria of multiplayer extensive-form games")]
struct Cli {
    /// More log output (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated game (.efg text, or JSON for strategic form).
    Gen {
        #[arg(value_enum)]
        kind: GenKind,
        #[arg(long, default_value_t = 3)]
        players: usize,
        #[arg(long, default_value_t = 2)]
        strategies: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print tree, sequence-form and (with --ncp) system statistics.
    Inspect {
        game: String,
        #[arg(long, value_enum, default_value_t = PinMode::Constraints)]
        pins: PinMode,
        #[arg(long)]
        ncp: bool,
        /// Also print the full system listing.
        #[arg(long, requires = "ncp")]
        dump: bool,
    },
    /// Compute an equilibrium and write the profile as JSON.
    Solve {
        game: String,
        #[arg(long, value_enum, default_value_t = PinMode::Constraints)]
        pins: PinMode,
        #[arg(long, value_enum, default_value_t = Method::Bnb)]
        method: Method,
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
        /// Seconds.
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long)]
        node_limit: Option<u64>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Disable the local polish heuristic.
        #[arg(long)]
        no_heuristic: bool,
        #[arg(long, default_value_t = 1.0)]
        m_scale: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a profile: payoffs, best responses and epsilon.
    Verify {
        game: String,
        profile: PathBuf,
        #[arg(long, value_enum, default_value_t = PinMode::Constraints)]
        pins: PinMode,
        /// Exit with status 2 when epsilon exceeds this bound.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Solve a batch of random games and print CSV.
    Bench {
        #[command(subcommand)]
        kind: BenchKind,
    },
}

#[derive(Subcommand)]
enum BenchKind {
    /// Random strategic-form games with payoffs uniform in [0, 1).
    Sfg {
        #[arg(long)]
        players: usize,
        #[arg(long)]
        strategies: usize,
        #[arg(long, default_value_t = 10)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
        /// Seconds per game.
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        no_heuristic: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenKind {
    Kuhn2,
    Kuhn3,
    #[value(name = "kuhn3-reduced")]
    Kuhn3Reduced,
    /// Kuhn poker with --players players.
    Kuhn,
    Sfg,
    Pennies,
    Rps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Bnb,
    /// Sequence-form LPs; two-player zero-sum games only.
    Zslp,
}

fn write_output(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn seconds(s: Option<f64>) -> Result<Option<Duration>> {
    s.map(|v| Duration::try_from_secs_f64(v).context("invalid time limit")).transpose()
}

fn gen(kind: GenKind, players: usize, strategies: usize, seed: u64, out: Option<PathBuf>) -> Result<()> {
    let text = match kind {
        GenKind::Kuhn2 => write_efg(&generate_kuhn(2)),
        GenKind::Kuhn3 => write_efg(&generate_kuhn(3)),
        GenKind::Kuhn3Reduced => {
            let g = generate_kuhn(3);
            write_efg(&prune_pins(&g, &kuhn3_pins(&g))?)
        }
        GenKind::Kuhn => {
            if !(2..=4).contains(&players) {
                bail!("Kuhn poker needs 2 to 4 players");
            }
            write_efg(&generate_kuhn(players))
        }
        GenKind::Sfg => {
            if players < 2 || strategies < 1 {
                bail!("need at least 2 players and 1 strategy");
            }
            generate_random_sfg(players, strategies, seed).to_json() + "\n"
        }
        GenKind::Pennies => games::pennies().to_json() + "\n",
        GenKind::Rps => games::rps().to_json() + "\n",
    };
    write_output(out.as_ref(), &text)
}

fn inspect(game: &str, pins: PinMode, ncp: bool, dump: bool) -> Result<()> {
    let p = prepare(load(game)?, pins)?;
    let stats = p.game.stats();
    let mut out = String::new();
    let _ = writeln!(out, "game: {}", p.game.title());
    let _ = writeln!(out, "form: {}", if p.strategic { "strategic" } else { "extensive" });
    let _ = writeln!(out, "players: {}", p.game.num_players());
    let _ = writeln!(out, "nodes: {}", stats.total);
    let _ = writeln!(out, "decision: {}", stats.decision);
    let _ = writeln!(out, "terminal: {}", stats.terminal);
    let _ = writeln!(out, "chance: {}", stats.chance);
    let _ = writeln!(out, "infosets: {}", stats.infosets);
    let dims: Vec<String> = p.sf.dims().iter().map(|d| d.to_string()).collect();
    let rows: Vec<String> = p.sf.players().iter().map(|ps| ps.num_rows().to_string()).collect();
    let _ = writeln!(out, "sequences: {}", dims.join(" "));
    let _ = writeln!(out, "flow_rows: {}", rows.join(" "));
    let _ = writeln!(out, "pinned_sequences: {}", p.sf.num_pin_rows());
    let _ = writeln!(out, "payoff_entries: {}", p.sf.entries().len());
    if ncp {
        let system = assemble_ncp_with(&p.sf, &NcpConfig::default());
        let s = system.stats();
        let _ = writeln!(out, "variables: {}", s.variables);
        let _ = writeln!(out, "realization: {}", s.realization);
        let _ = writeln!(out, "multipliers: {}", s.multipliers);
        let _ = writeln!(out, "slacks: {}", s.slacks);
        let _ = writeln!(out, "auxiliary: {}", s.auxiliary);
        let _ = writeln!(out, "linear_rows: {}", s.linear_rows);
        let _ = writeln!(out, "pin_rows: {}", s.pin_rows);
        let _ = writeln!(out, "stationarity_rows: {}", s.stationarity_rows);
        let _ = writeln!(out, "complementarity_pairs: {}", s.complementarity_pairs);
        let _ = writeln!(out, "product_rows: {}", s.product_rows);
        let _ = writeln!(out, "quadratic_rows: {}", s.quadratic_rows);
        if dump {
            out.push_str(&system.dump());
        }
    }
    print!("{out}");
    Ok(())
}

struct SolveArgs {
    pins: PinMode,
    method: Method,
    epsilon: f64,
    time_limit: Option<f64>,
    node_limit: Option<u64>,
    workers: usize,
    seed: u64,
    no_heuristic: bool,
    m_scale: f64,
    out: Option<PathBuf>,
}

fn solve_cmd(game: &str, a: SolveArgs) -> Result<ExitCode> {
    let p = prepare(load(game)?, a.pins)?;
    let start = Instant::now();
    let (profile, ok, stats) = match a.method {
        Method::Zslp => {
            let sol = solve_zero_sum(&p.sf)?;
            let mut profile = StrategyProfile::from_realization(&p.sf, &[sol.x, sol.y])?;
            let eps = verifier::epsilon(&p.game, &profile.behavioral)?;
            profile.verified_epsilon = Some(eps);
            let stats = format!(
                "{{\"status\":\"{}\",\"epsilon\":{eps:e},\"value\":{:e},\"wall_ms\":{}}}",
                if eps <= a.epsilon { "EquilibriumFound" } else { "LimitReached" },
                sol.value,
                start.elapsed().as_millis()
            );
            (Some(profile), eps <= a.epsilon, stats)
        }
        Method::Bnb => {
            let system = assemble_ncp_with(&p.sf, &NcpConfig { m_scale: a.m_scale });
            let opts = SolverOptions {
                epsilon_target: a.epsilon,
                time_limit: seconds(a.time_limit)?,
                node_limit: a.node_limit,
                workers: a.workers,
                seed: a.seed,
                heuristic: !a.no_heuristic,
                ..SolverOptions::default()
            };
            let result = solve(&system, &p.sf, &p.game, &opts)?;
            if let Some(d) = &result.diagnostic {
                log::warn!("{d}");
            }
            let ok = result.status == SolveStatus::EquilibriumFound;
            (result.profile.clone(), ok, result.stats_json())
        }
    };
    println!("{stats}");
    match &profile {
        Some(profile) => {
            let json = profile.to_json(&p.sf) + "\n";
            match &a.out {
                Some(path) => write_output(Some(path), &json)?,
                None if ok => print!("{json}"),
                None => {}
            }
        }
        None => log::warn!("no candidate profile to save"),
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn verify_cmd(game: &str, profile: &PathBuf, pins: PinMode, bound: Option<f64>) -> Result<ExitCode> {
    let p = prepare(load(game)?, pins)?;
    let text = std::fs::read_to_string(profile).with_context(|| format!("reading {}", profile.display()))?;
    let prof = StrategyProfile::from_json(&p.sf, &text)?;
    let eval = verifier::evaluate(&p.game, &prof.behavioral)?;
    println!("player,expected,best_response,regret");
    for q in 0..p.game.num_players() {
        println!("{},{:e},{:e},{:e}", q + 1, eval.expected[q], eval.best_response[q], eval.regret(q));
    }
    println!("epsilon: {:e}", eval.epsilon);
    Ok(match bound {
        Some(b) if eval.epsilon > b => ExitCode::from(2),
        _ => ExitCode::SUCCESS,
    })
}

struct BenchArgs {
    players: usize,
    strategies: usize,
    count: u64,
    seed: u64,
    epsilon: f64,
    time_limit: Option<f64>,
    workers: usize,
    no_heuristic: bool,
    out: Option<PathBuf>,
}

fn bench_sfg(a: BenchArgs) -> Result<()> {
    let sink: Box<dyn std::io::Write> = match &a.out {
        Some(path) => Box::new(std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?),
        None => Box::new(std::io::stdout()),
    };
    let mut csv = csv::Writer::from_writer(sink);
    csv.write_record(["seed", "n", "m", "status", "nodes", "lp_solves", "wall_ms", "epsilon"])?;
    let opts = SolverOptions {
        epsilon_target: a.epsilon,
        time_limit: seconds(a.time_limit)?,
        workers: a.workers,
        heuristic: !a.no_heuristic,
        log_every: 0,
        ..SolverOptions::default()
    };
    for seed in a.seed..a.seed + a.count {
        let g = generate_random_sfg(a.players, a.strategies, seed);
        let sf = embed_strategic_form(&g);
        let system = assemble_ncp_with(&sf, &NcpConfig::default());
        let r = solve(&system, &sf, &g.to_extensive(), &SolverOptions { seed, ..opts.clone() })?;
        csv.write_record([
            seed.to_string(),
            a.players.to_string(),
            a.strategies.to_string(),
            format!("{:?}", r.status),
            r.stats.nodes.to_string(),
            r.stats.lp_solves.to_string(),
            r.stats.wall_ms.to_string(),
            r.epsilon().map_or("nan".into(), |e| format!("{e:e}")),
        ])?;
        csv.flush()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen {
            kind,
            players,
            strategies,
            seed,
            out,
        } => gen(kind, players, strategies, seed, out).map(|_| ExitCode::SUCCESS),
        Command::Inspect { game, pins, ncp, dump } => inspect(&game, pins, ncp, dump).map(|_| ExitCode::SUCCESS),
        Command::Solve {
            game,
            pins,
            method,
            epsilon,
            time_limit,
            node_limit,
            workers,
            seed,
            no_heuristic,
            m_scale,
            out,
        } => solve_cmd(
            &game,
            SolveArgs {
                pins,
                method,
                epsilon,
                time_limit,
                node_limit,
                workers,
                seed,
                no_heuristic,
                m_scale,
                out,
            },
        ),
        Command::Verify {
            game,
            profile,
            pins,
            epsilon,
        } => verify_cmd(&game, &profile, pins, epsilon),
        Command::Bench {
            kind:
                BenchKind::Sfg {
                    players,
                    strategies,
                    count,
                    seed,
                    epsilon,
                    time_limit,
                    workers,
                    no_heuristic,
                    out,
                },
        } => bench_sfg(BenchArgs {
            players,
            strategies,
            count,
            seed,
            epsilon,
            time_limit,
            workers,
            no_heuristic,
            out,
        })
        .map(|_| ExitCode::SUCCESS),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
