//! Command-line front end: solve, bracket, evaluate, best-response,
//! simulate, validate, and the built-in example generator.
//!
//! Exit codes: 0 success, 1 domain error (parse/solve failures, with a
//! located message on stderr), 2 usage error. Structured output (`--json`)
//! is a single top-level object and is byte-identical for identical
//! arguments and seed.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::catalog;
use crate::finite::{backward_induction, backward_induction_exact, best_response_exact};
use crate::format::{parse_game, parse_strategy, serialize_strategy};
use crate::game::{BehavioralStrategy, GameKind, GameSpec, Player};
use crate::limit::{
    gdelta_value_bracket, open_value_bracket, open_value_bracket_exact, union_value_limit,
    BracketTrace,
};
use crate::rational::{format_q, q_to_f64};
use crate::sim::simulate;

#[derive(Parser, Debug)]
#[command(
    name = "blackwell",
    version,
    about = "Solve, bracket and simulate simultaneous-move zero-sum games"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve a matrix or finite game exactly by backward induction.
    Solve {
        game: PathBuf,
        /// Certificate tolerance for the floating-point solve.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Solve in exact rational arithmetic.
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        json: bool,
    },
    /// Per-depth value brackets for open, union and recurrence objectives.
    Bracket {
        game: PathBuf,
        #[arg(long, default_value_t = 10)]
        depth: usize,
        /// Cap on the counting construction for recurrence objectives.
        #[arg(long = "k-max", default_value_t = 8)]
        k_max: usize,
        /// Convergence tolerance.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        json: bool,
    },
    /// Exact expected payoff of a strategy pair.
    Evaluate {
        game: PathBuf,
        #[arg(long)]
        sigma: PathBuf,
        #[arg(long)]
        tau: PathBuf,
        /// Truncation depth for sup-payoff games (ignored for finite kinds).
        #[arg(long, default_value_t = 10)]
        depth: usize,
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        json: bool,
    },
    /// Best pure counterstrategy against a fixed strategy.
    BestResponse {
        game: PathBuf,
        #[arg(long)]
        fixed: PathBuf,
        /// Truncation depth for sup-payoff games (ignored for finite kinds).
        #[arg(long, default_value_t = 10)]
        depth: usize,
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        json: bool,
    },
    /// Seeded Monte Carlo estimate of the expected payoff.
    Simulate {
        game: PathBuf,
        #[arg(long)]
        sigma: PathBuf,
        #[arg(long)]
        tau: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        rollouts: usize,
        #[arg(long, default_value_t = 10)]
        depth: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Parse and validate a game (.bwg) or strategy (.bws) document.
    Validate {
        file: PathBuf,
        /// Game the strategy belongs to (required for .bws files).
        #[arg(long)]
        game: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Print a built-in example game document.
    Example { name: String },
}

/// Run with the given arguments, writing reports to `out` and errors to
/// `err`. Returns the process exit code.
pub fn run<W: Write, E: Write>(args: &[String], out: &mut W, err: &mut E) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    2
                }
            };
        }
    };
    match dispatch(cli, out) {
        Ok(()) => 0,
        Err(message) => {
            let _ = writeln!(err, "error: {message}");
            1
        }
    }
}

/// Entry point for the binary: real stdin/stdout, exit code returned.
pub fn run_main() -> i32 {
    let args: Vec<String> = std::env::args().collect();
    let mut out = std::io::stdout();
    let mut err = std::io::stderr();
    run(&args, &mut out, &mut err)
}

fn read_file(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_game(path: &Path) -> Result<GameSpec, String> {
    let text = read_file(path)?;
    parse_game(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_strategy(
    path: &Path,
    spec: &GameSpec,
    expect: Option<Player>,
) -> Result<BehavioralStrategy, String> {
    let text = read_file(path)?;
    let strategy =
        parse_strategy(&text, &spec.alphabets).map_err(|e| format!("{}: {e}", path.display()))?;
    if let Some(owner) = expect {
        if strategy.owner != owner {
            return Err(format!(
                "{}: expected a strategy for player {owner}, found player {}",
                path.display(),
                strategy.owner
            ));
        }
    }
    Ok(strategy)
}

fn emit_json<W: Write>(out: &mut W, value: &Value) -> Result<(), String> {
    let text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    writeln!(out, "{text}").map_err(|e| e.to_string())
}

fn trace_json(trace: &BracketTrace) -> Value {
    let rows: Vec<Value> = trace
        .brackets
        .iter()
        .map(|b| {
            json!({
                "depth": b.depth,
                "lower": b.lower,
                "upper": b.upper,
                "converged": b.converged,
            })
        })
        .collect();
    let mut object = BTreeMap::new();
    object.insert("entries".to_string(), Value::Array(rows));
    object.insert("verdict".to_string(), json!(trace.verdict.to_string()));
    if let Some(exact) = &trace.exact {
        let rows: Vec<Value> = exact
            .iter()
            .map(|(lo, hi)| json!([format_q(lo), format_q(hi)]))
            .collect();
        object.insert("exact".to_string(), Value::Array(rows));
    }
    if let Some(est) = &trace.upper_estimates {
        object.insert("upper_estimates".to_string(), json!(est));
    }
    if let Some(k) = trace.k_max {
        object.insert("k_max".to_string(), json!(k));
    }
    json!(object)
}

fn print_trace<W: Write>(out: &mut W, trace: &BracketTrace) -> Result<(), String> {
    writeln!(
        out,
        "{:>5}  {:>14}  {:>14}  converged",
        "depth", "lower", "upper"
    )
    .map_err(|e| e.to_string())?;
    for b in &trace.brackets {
        writeln!(
            out,
            "{:>5}  {:>14.9}  {:>14.9}  {}",
            b.depth,
            b.lower,
            b.upper,
            if b.converged { "yes" } else { "no" }
        )
        .map_err(|e| e.to_string())?;
    }
    if let Some(exact) = &trace.exact {
        writeln!(out, "exact lower/upper:").map_err(|e| e.to_string())?;
        for (d, (lo, hi)) in exact.iter().enumerate() {
            writeln!(out, "{d:>5}  {}  {}", format_q(lo), format_q(hi))
                .map_err(|e| e.to_string())?;
        }
    }
    if let Some(est) = &trace.upper_estimates {
        let rendered: Vec<String> = est.iter().map(|v| format!("{v:.9}")).collect();
        writeln!(
            out,
            "upper estimates (not certified): {}",
            rendered.join(" ")
        )
        .map_err(|e| e.to_string())?;
    }
    writeln!(out, "verdict: {}", trace.verdict).map_err(|e| e.to_string())
}

fn dispatch<W: Write>(cli: Cli, out: &mut W) -> Result<(), String> {
    match cli.command {
        Command::Solve {
            game,
            tol,
            exact,
            json,
        } => {
            if !(tol > 0.0) {
                return Err("tol must be positive".into());
            }
            let spec = load_game(&game)?;
            match spec.kind {
                GameKind::Matrix | GameKind::Finite(_) => {}
                _ => {
                    return Err(format!(
                        "kind '{}' has no exact finite solve; use 'bracket'",
                        spec.kind.token()
                    ))
                }
            }
            let (value, value_exact, strategy_i, strategy_ii, horizon) = if exact {
                let report = backward_induction_exact(&spec).map_err(|e| e.to_string())?;
                (
                    q_to_f64(&report.value),
                    Some(format_q(&report.value)),
                    report.strategy_i,
                    report.strategy_ii,
                    report.horizon,
                )
            } else {
                let report = backward_induction(&spec).map_err(|e| e.to_string())?;
                (
                    report.value,
                    None,
                    report.strategy_i,
                    report.strategy_ii,
                    report.horizon,
                )
            };
            let doc_i = serialize_strategy(&strategy_i, &spec.alphabets);
            let doc_ii = serialize_strategy(&strategy_ii, &spec.alphabets);
            if json {
                let mut object = BTreeMap::new();
                object.insert("command".to_string(), json!("solve"));
                object.insert(
                    "inputs".to_string(),
                    json!({"game": game.display().to_string()}),
                );
                object.insert("value".to_string(), json!(value));
                if let Some(v) = &value_exact {
                    object.insert("value_exact".to_string(), json!(v));
                }
                object.insert("strategies".to_string(), json!({"I": doc_i, "II": doc_ii}));
                object.insert(
                    "diagnostics".to_string(),
                    json!({"kind": spec.kind.token(), "horizon": horizon, "tol": tol}),
                );
                emit_json(out, &json!(object))
            } else {
                writeln!(out, "game: {} ({})", spec.name, spec.kind.token())
                    .map_err(|e| e.to_string())?;
                match &value_exact {
                    Some(v) => writeln!(out, "value: {v} ({value:.9})"),
                    None => writeln!(out, "value: {value:.9}"),
                }
                .map_err(|e| e.to_string())?;
                writeln!(out, "\n{doc_i}\n{doc_ii}").map_err(|e| e.to_string())?;
                Ok(())
            }
        }
        Command::Bracket {
            game,
            depth,
            k_max,
            tol,
            exact,
            json,
        } => {
            if !(tol > 0.0) {
                return Err("tol must be positive".into());
            }
            let spec = load_game(&game)?;
            let trace = match spec.kind {
                GameKind::GeneralizedOpen | GameKind::OpenSet => if exact {
                    open_value_bracket_exact(&spec, depth, tol)
                } else {
                    open_value_bracket(&spec, depth, tol)
                }
                .map_err(|e| e.to_string())?,
                GameKind::UnionOfOpen => {
                    let automata = spec.union_automata().expect("union spec");
                    let components: Vec<GameSpec> = automata
                        .iter()
                        .map(|aut| {
                            GameSpec::new(
                                spec.name.clone(),
                                spec.alphabets.clone(),
                                GameKind::OpenSet,
                                crate::game::PayoffDescriptor::Automaton(aut.clone()),
                                spec.bounds.clone(),
                                spec.start_position.clone(),
                            )
                            .map_err(|e| e.to_string())
                        })
                        .collect::<Result<_, _>>()?;
                    let traces =
                        union_value_limit(&components, components.len(), depth, tol, exact)
                            .map_err(|e| e.to_string())?;
                    let estimates: Vec<f64> =
                        traces.iter().map(BracketTrace::final_lower).collect();
                    writeln!(
                        out,
                        "union prefix estimates at depth {depth}: {}",
                        estimates
                            .iter()
                            .map(|v| format!("{v:.9}"))
                            .collect::<Vec<_>>()
                            .join(" ")
                    )
                    .map_err(|e| e.to_string())?;
                    traces.into_iter().last().expect("nonempty union")
                }
                GameKind::GDelta => gdelta_value_bracket(&spec, k_max, depth, tol, exact)
                    .map_err(|e| e.to_string())?,
                GameKind::Matrix | GameKind::Finite(_) => {
                    return Err(format!(
                        "kind '{}' is solved exactly; use 'solve'",
                        spec.kind.token()
                    ))
                }
            };
            if json {
                let mut object = BTreeMap::new();
                object.insert("command".to_string(), json!("bracket"));
                object.insert(
                    "inputs".to_string(),
                    json!({"game": game.display().to_string()}),
                );
                object.insert("bracket_trace".to_string(), trace_json(&trace));
                object.insert(
                    "diagnostics".to_string(),
                    json!({"kind": spec.kind.token(), "depth": depth, "k_max": k_max, "tol": tol}),
                );
                emit_json(out, &json!(object))
            } else {
                writeln!(out, "game: {} ({})", spec.name, spec.kind.token())
                    .map_err(|e| e.to_string())?;
                print_trace(out, &trace)
            }
        }
        Command::Evaluate {
            game,
            sigma,
            tau,
            depth,
            exact,
            json,
        } => {
            let spec = load_game(&game)?;
            let s = load_strategy(&sigma, &spec, Some(Player::I))?;
            let t = load_strategy(&tau, &spec, Some(Player::II))?;
            let target = evaluation_spec(&spec, depth)?;
            let (value, value_exact) = if exact {
                let v = crate::finite::expected_payoff_exact(&target, &s, &t)
                    .map_err(|e| e.to_string())?;
                (q_to_f64(&v), Some(format_q(&v)))
            } else {
                (
                    crate::finite::expected_payoff(&target, &s, &t).map_err(|e| e.to_string())?,
                    None,
                )
            };
            if json {
                let mut object = BTreeMap::new();
                object.insert("command".to_string(), json!("evaluate"));
                object.insert(
                    "inputs".to_string(),
                    json!({
                        "game": game.display().to_string(),
                        "sigma": sigma.display().to_string(),
                        "tau": tau.display().to_string(),
                    }),
                );
                object.insert("value".to_string(), json!(value));
                if let Some(v) = &value_exact {
                    object.insert("value_exact".to_string(), json!(v));
                }
                object.insert(
                    "diagnostics".to_string(),
                    json!({"kind": spec.kind.token(), "depth": depth}),
                );
                emit_json(out, &json!(object))
            } else {
                match &value_exact {
                    Some(v) => writeln!(out, "expected payoff: {v} ({value:.9})"),
                    None => writeln!(out, "expected payoff: {value:.9}"),
                }
                .map_err(|e| e.to_string())
            }
        }
        Command::BestResponse {
            game,
            fixed,
            depth,
            exact,
            json,
        } => {
            let spec = load_game(&game)?;
            let f = load_strategy(&fixed, &spec, None)?;
            let target = evaluation_spec(&spec, depth)?;
            let (value, value_exact, strategy, responder) = if exact {
                let br = best_response_exact(&target, &f).map_err(|e| e.to_string())?;
                (
                    q_to_f64(&br.value),
                    Some(format_q(&br.value)),
                    br.strategy,
                    br.responder,
                )
            } else {
                let br = crate::finite::best_response(&target, &f).map_err(|e| e.to_string())?;
                (br.value, None, br.strategy, br.responder)
            };
            let doc = serialize_strategy(&strategy, &spec.alphabets);
            if json {
                let mut object = BTreeMap::new();
                object.insert("command".to_string(), json!("best-response"));
                object.insert(
                    "inputs".to_string(),
                    json!({
                        "game": game.display().to_string(),
                        "fixed": fixed.display().to_string(),
                    }),
                );
                object.insert("responder".to_string(), json!(responder.to_string()));
                object.insert("value".to_string(), json!(value));
                if let Some(v) = &value_exact {
                    object.insert("value_exact".to_string(), json!(v));
                }
                object.insert("strategies".to_string(), json!({ "response": doc }));
                object.insert(
                    "diagnostics".to_string(),
                    json!({"kind": spec.kind.token(), "depth": depth}),
                );
                emit_json(out, &json!(object))
            } else {
                writeln!(out, "responder: player {responder}").map_err(|e| e.to_string())?;
                match &value_exact {
                    Some(v) => writeln!(out, "value: {v} ({value:.9})"),
                    None => writeln!(out, "value: {value:.9}"),
                }
                .map_err(|e| e.to_string())?;
                writeln!(out, "\n{doc}").map_err(|e| e.to_string())
            }
        }
        Command::Simulate {
            game,
            sigma,
            tau,
            rollouts,
            depth,
            seed,
            json,
        } => {
            if rollouts == 0 {
                return Err("rollouts must be at least 1".into());
            }
            let spec = load_game(&game)?;
            let s = load_strategy(&sigma, &spec, Some(Player::I))?;
            let t = load_strategy(&tau, &spec, Some(Player::II))?;
            let report =
                simulate(&spec, &s, &t, rollouts, depth, seed).map_err(|e| e.to_string())?;
            if json {
                let mut object = BTreeMap::new();
                object.insert("command".to_string(), json!("simulate"));
                object.insert(
                    "inputs".to_string(),
                    json!({
                        "game": game.display().to_string(),
                        "sigma": sigma.display().to_string(),
                        "tau": tau.display().to_string(),
                    }),
                );
                object.insert("mean".to_string(), json!(report.mean));
                object.insert("std_error".to_string(), json!(report.std_error));
                object.insert(
                    "diagnostics".to_string(),
                    json!({
                        "rollouts": report.rollouts,
                        "depth": report.depth,
                        "seed": report.seed,
                    }),
                );
                emit_json(out, &json!(object))
            } else {
                writeln!(
                    out,
                    "mean: {:.9}  std error: {:.9}  (rollouts {}, depth {}, seed {})",
                    report.mean, report.std_error, report.rollouts, report.depth, report.seed
                )
                .map_err(|e| e.to_string())
            }
        }
        Command::Validate { file, game, json } => {
            let extension = file
                .extension()
                .and_then(|e| e.to_str())
                .unwrap_or_default()
                .to_string();
            let detail = match extension.as_str() {
                "bwg" => {
                    let spec = load_game(&file)?;
                    format!(
                        "game '{}' ({}, {} x {} moves)",
                        spec.name,
                        spec.kind.token(),
                        spec.alphabets.x_len(),
                        spec.alphabets.y_len()
                    )
                }
                "bws" => {
                    let game_path = game.ok_or_else(|| {
                        "validating a strategy needs --game <file.bwg> for the alphabets"
                            .to_string()
                    })?;
                    let spec = load_game(&game_path)?;
                    let strategy = load_strategy(&file, &spec, None)?;
                    format!(
                        "strategy for player {} ('{}')",
                        strategy.owner, strategy.name
                    )
                }
                other => {
                    return Err(format!(
                        "unknown file extension '.{other}': expected .bwg or .bws"
                    ))
                }
            };
            if json {
                let mut object = BTreeMap::new();
                object.insert("command".to_string(), json!("validate"));
                object.insert(
                    "inputs".to_string(),
                    json!({"file": file.display().to_string()}),
                );
                object.insert("ok".to_string(), json!(true));
                object.insert("detail".to_string(), json!(detail));
                emit_json(out, &json!(object))
            } else {
                writeln!(out, "ok: {detail}").map_err(|e| e.to_string())
            }
        }
        Command::Example { name } => match catalog::example_document(&name) {
            Some(doc) => write!(out, "{doc}").map_err(|e| e.to_string()),
            None => Err(format!(
                "unknown example '{name}'; available: {}",
                catalog::EXAMPLE_NAMES.join(", ")
            )),
        },
    }
}

/// Finite stand-in used by evaluate and best-response: finite kinds run
/// to their own horizon, sup-payoff kinds are truncated at `depth`.
fn evaluation_spec(spec: &GameSpec, depth: usize) -> Result<GameSpec, String> {
    match spec.kind {
        GameKind::Matrix | GameKind::Finite(_) => Ok(spec.clone()),
        GameKind::GeneralizedOpen | GameKind::OpenSet | GameKind::UnionOfOpen => {
            crate::limit::finite_truncation(spec, depth).map_err(|e| e.to_string())
        }
        GameKind::GDelta => Err(format!(
            "kind '{}' has no finite payoff truncation; use 'bracket'",
            spec.kind.token()
        )),
    }
}
