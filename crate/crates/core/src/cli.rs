//! Command-line front end. Every command prints one JSON object on standard output.
//!
//! Exit codes: 0 yes, 1 no, 2 usage or data error, 3 unsupported combination.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::game::{self, GameError, GameFile, ReachabilityGame, Vertex};
use crate::oracle::{self, Concept, OracleError, SmallWitness, Verdict};
use crate::penalty::{Penalty, Thresholds};
use crate::players::{Player, PlayerSet};
use crate::search::ne::{penalties, validate_ne};
use crate::search::spe::validate_spe;
use crate::search::{solve_ne, solve_spe, SearchStats, SolveError, SolveOptions};
use crate::witness::dot::{forest_dot, tree_dot};
use crate::witness::forest::ForestFile;
use crate::witness::tree::TreeFile;
use crate::witness::{
    ne_machine_unchecked, spe_machine_unchecked, SymbolicForest, SymbolicTree, WinMode,
    WitnessError,
};
use crate::zero_sum::winning_region;

#[derive(Parser, Debug)]
#[command(
    name = "permissive",
    version,
    about = "Permissive equilibria of multiplayer reachability games"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a game file and list every broken invariant.
    Validate { game: PathBuf },
    /// Vertices from which each player can force a visit to its targets.
    WinningRegion {
        game: PathBuf,
        #[arg(long)]
        player: Option<Player>,
    },
    /// Decide whether a permissive equilibrium meeting the bounds exists.
    Solve {
        concept: ConceptArg,
        game: PathBuf,
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long)]
        witness_out: Option<PathBuf>,
        #[arg(long)]
        dot: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Search only witnesses up to this height; a NO below the bound is not conclusive.
        #[arg(long)]
        height_cap: Option<usize>,
        /// Give up after exploring this many search nodes.
        #[arg(long)]
        node_limit: Option<u64>,
    },
    /// Check a witness file against the bounds.
    CheckWitness {
        concept: ConceptArg,
        game: PathBuf,
        witness: PathBuf,
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Brute-force checks for small games.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Subcommand, Debug)]
enum OracleCommand {
    /// Look for a consistent profile of the witness's machine that is not an equilibrium.
    Check {
        concept: ConceptArg,
        game: PathBuf,
        witness: PathBuf,
        #[arg(long, default_value_t = oracle::DEFAULT_STATE_CAP)]
        cap: u64,
    },
    /// Exhaustively search witnesses up to a height.
    Enumerate {
        concept: ConceptArg,
        game: PathBuf,
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long)]
        height_cap: usize,
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
        #[arg(long)]
        witness_out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ConceptArg {
    Ne,
    Spe,
}

impl From<ConceptArg> for Concept {
    fn from(c: ConceptArg) -> Self {
        match c {
            ConceptArg::Ne => Concept::Nash,
            ConceptArg::Spe => Concept::Subgame,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct QueryArgs {
    /// Main penalty bounds, e.g. `1=inf,2=11`. Missing players are unbounded.
    #[arg(long, value_parser = parse_bounds)]
    main: Option<Bounds>,
    /// Retaliation penalty bounds, same syntax as --main.
    #[arg(long, value_parser = parse_bounds)]
    retaliation: Option<Bounds>,
    /// Some consistent outcome must win for all these players.
    #[arg(long, value_parser = parse_players, conflicts_with = "strong")]
    weak: Option<Players>,
    /// Every consistent outcome must win for all these players.
    #[arg(long, value_parser = parse_players)]
    strong: Option<Players>,
}

#[derive(Clone, Debug)]
struct Bounds(Vec<(Player, Penalty)>);

#[derive(Clone, Debug)]
struct Players(Vec<Player>);

fn parse_player(s: &str) -> Result<Player, String> {
    match s.trim().parse::<Player>() {
        Ok(i) if i >= 1 => Ok(i),
        _ => Err(format!("`{s}` is not a player number")),
    }
}

fn parse_bounds(s: &str) -> Result<Bounds, String> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (i, k) = p
                .split_once('=')
                .ok_or_else(|| format!("`{p}` is not of the form player=bound"))?;
            Ok((
                parse_player(i)?,
                k.parse::<Penalty>().map_err(|e| e.to_string())?,
            ))
        })
        .collect::<Result<_, String>>()
        .map(Bounds)
}

fn parse_players(s: &str) -> Result<Players, String> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(parse_player)
        .collect::<Result<_, _>>()
        .map(Players)
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed witness file: {0}")]
    WitnessJson(serde_json::Error),
    #[error(transparent)]
    Witness(#[from] WitnessError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Solve(SolveError::UnsupportedFiniteRetaliation) => 3,
            _ => 2,
        }
    }
}

impl QueryArgs {
    fn thresholds(&self, game: &ReachabilityGame) -> Result<Thresholds, CliError> {
        let n = game.player_count();
        let mut t = Thresholds::unbounded(n);
        for (bounds, slot) in [
            (&self.main, &mut t.main),
            (&self.retaliation, &mut t.retaliation),
        ] {
            for &(i, k) in bounds.iter().flat_map(|b| b.0.iter()) {
                check_player(i, n)?;
                slot[i - 1] = k;
            }
        }
        Ok(t)
    }

    fn mode(&self, game: &ReachabilityGame) -> Result<WinMode, CliError> {
        let set = |p: &Players| -> Result<PlayerSet, CliError> {
            p.0.iter()
                .map(|&i| check_player(i, game.player_count()).map(|_| i))
                .collect()
        };
        Ok(match (&self.weak, &self.strong) {
            (Some(w), _) => WinMode::Weak(set(w)?),
            (None, Some(s)) => WinMode::Strong(set(s)?),
            (None, None) => WinMode::Unconstrained,
        })
    }
}

fn check_player(i: Player, n: usize) -> Result<(), CliError> {
    if i == 0 || i > n {
        return Err(CliError::Usage(format!(
            "player {i} does not exist; the game has {n} players"
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct PenaltyReport {
    main: BTreeMap<Player, Penalty>,
    retaliation: Option<BTreeMap<Player, Penalty>>,
}

#[derive(Serialize)]
struct HeightReport {
    bound: usize,
    used: usize,
    /// False when a cap below the bound was used: a NO is then not conclusive.
    complete: bool,
}

#[derive(Serialize)]
struct Report {
    answer: &'static str,
    penalties: Option<PenaltyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    height: Option<HeightReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    violations: Vec<String>,
    stats: SearchStats,
}

fn by_player(v: &[Penalty]) -> BTreeMap<Player, Penalty> {
    v.iter().enumerate().map(|(k, &p)| (k + 1, p)).collect()
}

fn answer(yes: bool) -> &'static str {
    if yes {
        "yes"
    } else {
        "no"
    }
}

/// Runs the CLI on the process arguments.
pub fn main() -> i32 {
    run(
        std::env::args_os(),
        &mut std::io::stdout(),
        &mut std::io::stderr(),
    )
}

/// Runs the CLI on `args` (program name first), writing the report to `out` and diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn load_game(path: &Path) -> Result<ReachabilityGame, CliError> {
    Ok(ReachabilityGame::load(path)?)
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(out: &mut dyn Write, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    writeln!(out, "{text}").map_err(|source| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

enum Witness {
    Tree(SymbolicTree),
    Forest(SymbolicForest),
}

impl Witness {
    fn load(game: &ReachabilityGame, concept: ConceptArg, path: &Path) -> Result<Self, CliError> {
        let text = read(path)?;
        Ok(match concept {
            ConceptArg::Ne => {
                let file: TreeFile = serde_json::from_str(&text).map_err(CliError::WitnessJson)?;
                Witness::Tree(SymbolicTree::from_file(game, &file)?)
            }
            ConceptArg::Spe => {
                let file: ForestFile =
                    serde_json::from_str(&text).map_err(CliError::WitnessJson)?;
                Witness::Forest(SymbolicForest::from_file(game, &file)?)
            }
        })
    }

    fn save(&self, game: &ReachabilityGame, path: &Path) -> Result<(), CliError> {
        let text = match self {
            Witness::Tree(t) => serde_json::to_string_pretty(&t.to_file(game)),
            Witness::Forest(f) => serde_json::to_string_pretty(&f.to_file(game)),
        }
        .expect("witness files serialize");
        write_file(path, &(text + "\n"))
    }

    fn dot(&self, game: &ReachabilityGame, path: &Path) -> Result<(), CliError> {
        let text = match self {
            Witness::Tree(t) => tree_dot(game, t, game.initial_winners(), "main")?,
            Witness::Forest(f) => forest_dot(game, f)?,
        };
        write_file(path, &text)
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<i32, CliError> {
    match command {
        Command::Validate { game } => validate_cmd(&game, out),
        Command::WinningRegion { game, player } => {
            let g = load_game(&game)?;
            let players: Vec<Player> = match player {
                Some(i) => {
                    check_player(i, g.player_count())?;
                    vec![i]
                }
                None => g.player_ids().collect(),
            };
            let regions: BTreeMap<Player, Vec<&str>> = players
                .into_iter()
                .map(|i| {
                    let r = winning_region(&g, i);
                    (
                        i,
                        g.vertices().filter(|&v| r[v]).map(|v| g.name(v)).collect(),
                    )
                })
                .collect();
            emit(out, &regions)?;
            Ok(0)
        }
        Command::Solve {
            concept,
            game,
            query,
            witness_out,
            dot,
            jobs,
            height_cap,
            node_limit,
        } => {
            let g = load_game(&game)?;
            let thresholds = query.thresholds(&g)?;
            let mode = query.mode(&g)?;
            let options = SolveOptions {
                jobs: jobs.max(1),
                height_cap,
                node_limit,
            };
            let (witness, pens, height, stats) = match concept {
                ConceptArg::Ne => {
                    let o = solve_ne(&g, &thresholds, mode, &options)?;
                    let pens = o.witness.as_ref().map(|t| PenaltyReport {
                        main: by_player(&penalties(&g, t)),
                        retaliation: None,
                    });
                    let h = HeightReport {
                        bound: o.height_bound,
                        used: o.height_used,
                        complete: o.complete,
                    };
                    (o.witness.map(Witness::Tree), pens, h, o.stats)
                }
                ConceptArg::Spe => {
                    let o = solve_spe(&g, &thresholds, mode, &options)?;
                    let pens = o.report.as_ref().map(|r| PenaltyReport {
                        main: by_player(&r.main_penalties),
                        retaliation: Some(by_player(&r.retaliation_penalties)),
                    });
                    let h = HeightReport {
                        bound: o.height_bound,
                        used: o.height_used,
                        complete: o.complete,
                    };
                    (o.witness.map(Witness::Forest), pens, h, o.stats)
                }
            };
            let mut witness_path = None;
            if let Some(w) = &witness {
                if let Some(p) = &witness_out {
                    w.save(&g, p)?;
                    witness_path = Some(p.display().to_string());
                }
                if let Some(p) = &dot {
                    w.dot(&g, p)?;
                }
            }
            let yes = witness.is_some();
            emit(
                out,
                &Report {
                    answer: answer(yes),
                    penalties: pens,
                    witness_path,
                    height: Some(height),
                    violations: Vec::new(),
                    stats,
                },
            )?;
            Ok(if yes { 0 } else { 1 })
        }
        Command::CheckWitness {
            concept,
            game,
            witness,
            query,
            dot,
        } => {
            let start = Instant::now();
            let g = load_game(&game)?;
            let thresholds = query.thresholds(&g)?;
            let mode = query.mode(&g)?;
            let w = Witness::load(&g, concept, &witness)?;
            if let Some(p) = &dot {
                w.dot(&g, p)?;
            }
            let (pens, violations) = match &w {
                Witness::Tree(t) => {
                    if thresholds.retaliation.iter().any(|r| r.is_finite()) {
                        return Err(SolveError::UnsupportedFiniteRetaliation.into());
                    }
                    let pens = PenaltyReport {
                        main: by_player(&penalties(&g, t)),
                        retaliation: None,
                    };
                    let v = match validate_ne(&g, t, &thresholds, mode, usize::MAX) {
                        Ok(()) => Vec::new(),
                        Err(SolveError::SelfValidation(m)) => vec![m],
                        Err(e) => return Err(e.into()),
                    };
                    (pens, v)
                }
                Witness::Forest(f) => {
                    let report = crate::witness::check_good_forest(&g, f, &thresholds, mode)?;
                    let pens = PenaltyReport {
                        main: by_player(&report.main_penalties),
                        retaliation: Some(by_player(&report.retaliation_penalties)),
                    };
                    let v = match validate_spe(&g, f, &thresholds, mode, usize::MAX) {
                        Ok(_) => Vec::new(),
                        Err(SolveError::SelfValidation(m)) => vec![m],
                        Err(e) => return Err(e.into()),
                    };
                    (pens, v)
                }
            };
            let yes = violations.is_empty();
            emit(
                out,
                &Report {
                    answer: answer(yes),
                    penalties: Some(pens),
                    witness_path: Some(witness.display().to_string()),
                    height: None,
                    violations,
                    stats: SearchStats {
                        nodes_explored: 0,
                        elapsed_ms: start.elapsed().as_millis(),
                    },
                },
            )?;
            Ok(if yes { 0 } else { 1 })
        }
        Command::Oracle(OracleCommand::Check {
            concept,
            game,
            witness,
            cap,
        }) => {
            let g = load_game(&game)?;
            let machine = match Witness::load(&g, concept, &witness)? {
                Witness::Tree(t) => ne_machine_unchecked(&g, &t),
                Witness::Forest(f) => spe_machine_unchecked(&g, &f)?,
            };
            let names = |p: &[Vertex]| p.iter().map(|&v| g.name(v).to_string()).collect::<Vec<_>>();
            match oracle::oracle_permissive_check(&g, &machine, concept.into(), cap)? {
                Verdict::NoCounterexample => {
                    emit(
                        out,
                        &json!({ "verdict": "no-counterexample", "machine_states": machine.state_count() }),
                    )?;
                    Ok(0)
                }
                Verdict::Refuted(c) => {
                    emit(
                        out,
                        &json!({
                            "verdict": "refuted",
                            "machine_states": machine.state_count(),
                            "counterexample": {
                                "player": c.player,
                                "history": names(&c.history),
                                "outcome": names(&c.outcome),
                                "deviation": names(&c.deviation),
                            }
                        }),
                    )?;
                    Ok(1)
                }
            }
        }
        Command::Oracle(OracleCommand::Enumerate {
            concept,
            game,
            query,
            height_cap,
            budget,
            witness_out,
        }) => {
            let start = Instant::now();
            let g = load_game(&game)?;
            let thresholds = query.thresholds(&g)?;
            let mode = query.mode(&g)?;
            if matches!(concept, ConceptArg::Ne)
                && thresholds.retaliation.iter().any(|r| r.is_finite())
            {
                return Err(SolveError::UnsupportedFiniteRetaliation.into());
            }
            let found = oracle::enumerate_small_witnesses(
                &g,
                height_cap,
                &thresholds,
                mode,
                concept.into(),
                budget,
            )?;
            let witness = found.map(|w| match w {
                SmallWitness::Tree(t) => Witness::Tree(t),
                SmallWitness::Forest(f) => Witness::Forest(f),
            });
            let pens = witness.as_ref().map(|w| match w {
                Witness::Tree(t) => PenaltyReport {
                    main: by_player(&penalties(&g, t)),
                    retaliation: None,
                },
                Witness::Forest(f) => {
                    let r = crate::witness::check_good_forest(&g, f, &thresholds, mode)
                        .expect("enumerated forests are complete");
                    PenaltyReport {
                        main: by_player(&r.main_penalties),
                        retaliation: Some(by_player(&r.retaliation_penalties)),
                    }
                }
            });
            let mut witness_path = None;
            if let (Some(w), Some(p)) = (&witness, &witness_out) {
                w.save(&g, p)?;
                witness_path = Some(p.display().to_string());
            }
            let yes = witness.is_some();
            emit(
                out,
                &Report {
                    answer: answer(yes),
                    penalties: pens,
                    witness_path,
                    height: None,
                    violations: Vec::new(),
                    stats: SearchStats {
                        nodes_explored: 0,
                        elapsed_ms: start.elapsed().as_millis(),
                    },
                },
            )?;
            Ok(if yes { 0 } else { 1 })
        }
    }
}

fn validate_cmd(path: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let text = read(path)?;
    let file: GameFile = serde_json::from_str(&text).map_err(GameError::Json)?;
    let violations: Vec<String> = game::validate(&file)
        .iter()
        .map(ToString::to_string)
        .collect();
    let ok = violations.is_empty();
    emit(
        out,
        &json!({
            "valid": ok,
            "players": file.players,
            "vertices": file.vertices.len(),
            "edges": file.edges.len(),
            "violations": violations,
        }),
    )?;
    Ok(if ok { 0 } else { 1 })
}
