//! Acceptance run: each test prints one verdict line for its criterion, then asserts it.
//!
//! Lines are written straight to stdout so they show up even when output capture is on.

mod common;

use std::fmt::Display;
use std::io::Write;
use std::sync::OnceLock;

use permissive::fixtures;
use permissive::oracle::{
    brute_force_tree_penalty, decide_ne_fixpoint, decide_ne_symbolic, enumerate_small_witnesses,
    for_each_tree, oracle_permissive_check, Concept, OracleError, SmallWitness, Verdict,
    DEFAULT_STATE_CAP,
};
use permissive::search::{
    finite_bounds, height_bound, solve_ne, solve_spe, NeOutcome, SolveError, SolveOptions,
    SpeOutcome,
};
use permissive::witness::{
    check_good_forest, check_good_tree, extract_multistrategy_ne, extract_multistrategy_spe,
    ne_machine_unchecked, tree_penalty, SymbolicTree, TreeAnalysis, WinMode,
};
use permissive::Penalty::{self, Finite, Infinite};
use permissive::{PlayerSet, ReachabilityGame, Thresholds, Vertex};

const CORPUS_SEED: u64 = 7;
const CORPUS_SIZE: usize = 200;
const MAX_VERTICES: usize = 4;
/// Trees checked per game when enumerating up to height 5.
const TREES_PER_GAME: u64 = 20_000;
/// Trees tried per query when comparing with enumeration of short trees.
const ENUM_BUDGET: u64 = 20_000;
/// Node budget of one SPE search on the random corpus.
const SPE_NODE_LIMIT: u64 = 50_000_000;

fn report(criterion: u8, pass: bool, detail: impl Display) {
    print_line(criterion, if pass { "PASS" } else { "FAIL" }, &detail);
    assert!(pass, "criterion {criterion} failed: {detail}");
}

/// For a criterion whose expected value is contradicted by a checked counterexample. What does
/// hold is asserted by the caller; the line records that the literal target is not met.
fn report_unattained(criterion: u8, detail: impl Display) {
    print_line(criterion, "UNATTAINED", &detail);
}

fn print_line(criterion: u8, verdict: &str, detail: &dyn Display) {
    let line = format!("criterion {criterion:>2}: {verdict}  {detail}\n");
    let _ = std::io::stdout().write_all(line.as_bytes());
}

fn main_bounds(m: &[Penalty]) -> Thresholds {
    Thresholds::unbounded(m.len()).with_main(m)
}

fn bounds(m: &[Penalty], r: &[Penalty]) -> Thresholds {
    Thresholds::unbounded(m.len())
        .with_main(m)
        .with_retaliation(r)
}

fn ne(g: &ReachabilityGame, t: &Thresholds, mode: WinMode) -> NeOutcome {
    solve_ne(g, t, mode, &SolveOptions::default()).expect("solver runs")
}

fn spe(g: &ReachabilityGame, t: &Thresholds, mode: WinMode) -> SpeOutcome {
    solve_spe(g, t, mode, &SolveOptions::default()).expect("solver runs")
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "YES"
    } else {
        "NO"
    }
}

fn penalties(g: &ReachabilityGame, t: &SymbolicTree) -> Vec<Penalty> {
    g.player_ids().map(|i| tree_penalty(g, t, i)).collect()
}

fn show(p: &[Penalty]) -> String {
    let parts: Vec<String> = p.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(", "))
}

#[test]
fn criterion_01_nash_example_penalties() {
    let g = fixtures::g2();
    let p = penalties(&g, &fixtures::drawn_ne_tree());
    let out = ne(
        &g,
        &main_bounds(&[Finite(2), Finite(0)]),
        WinMode::Unconstrained,
    );
    let pass = p == [Finite(2), Finite(0)] && out.witness.is_some();
    report(
        1,
        pass,
        format!(
            "drawn NE tree penalties {}, solve_ne(m=(2,0)) = {}",
            show(&p),
            yes_no(out.witness.is_some())
        ),
    );
}

#[test]
fn criterion_02_improved_nash() {
    let g = fixtures::g2();
    let out = ne(
        &g,
        &main_bounds(&[Finite(1), Infinite]),
        WinMode::Unconstrained,
    );
    let p1 = out.witness.as_ref().map(|t| tree_penalty(&g, t, 1));
    let drawn = fixtures::improved_ne_tree();
    let drawn_ok = check_good_tree(&g, &drawn) == Ok(true);
    let drawn_p = penalties(&g, &drawn);
    assert!(p1.is_some_and(|p| p <= Finite(1)) && drawn_ok && drawn_p[0] == Finite(1));
    if p1 == Some(Finite(1)) {
        report(
            2,
            true,
            "solve_ne(m=(1,inf)) = YES with penalty of player 1 = 1",
        );
        return;
    }
    // The solver found a cheaper equilibrium; confirm it independently.
    let zero = ne(
        &g,
        &main_bounds(&[Finite(0), Infinite]),
        WinMode::Unconstrained,
    );
    let tree = zero
        .witness
        .expect("an equilibrium without blocking exists");
    let m = extract_multistrategy_ne(&g, &tree).expect("witness is good");
    let confirmed = oracle_permissive_check(&g, &m, Concept::Nash, DEFAULT_STATE_CAP)
        == Ok(Verdict::NoCounterexample);
    assert!(confirmed && tree_penalty(&g, &tree, 1) == Finite(0));
    report_unattained(
        2,
        format!(
            "solve_ne(m=(1,inf)) = YES but its witness gives player 1 penalty {}: player 1 can \
             allow every move while player 2 pays to leave v5 for v6 (m=(0,inf) = YES, oracle \
             finds no counterexample), so penalty exactly 1 is not forced; the drawn improved \
             tree is good with penalties {}",
            p1.map_or("-".into(), |p| p.to_string()),
            show(&drawn_p)
        ),
    );
}

#[test]
fn criterion_03_nash_tree_is_not_subgame_perfect() {
    let g = fixtures::g2();
    let rep = check_good_forest(
        &g,
        &fixtures::drawn_ne_forest(),
        &Thresholds::unbounded(2),
        WinMode::Unconstrained,
    )
    .expect("forest is well formed");
    let v5 = rep
        .violations
        .iter()
        .find(|v| v.contains("player 2") && v.contains("(v5)"));
    let pass = !rep.good && v5.is_some();
    report(
        3,
        pass,
        format!(
            "forest around the NE tree good = {}; {}",
            rep.good,
            v5.map_or("no player 2 violation at v5", |s| s.as_str())
        ),
    );
}

#[test]
fn criterion_04_subgame_perfect_example_bounds() {
    let g = fixtures::g2();
    let out = spe(
        &g,
        &bounds(&[Infinite, Finite(11)], &[Finite(1), Infinite]),
        WinMode::Unconstrained,
    );
    let rep = out.report.as_ref();
    let main2 = rep.map(|r| r.main_penalties[1]);
    let ret1 = rep.map(|r| r.retaliation_penalties[0]);
    let pass = rep.is_some_and(|r| r.good)
        && main2.is_some_and(|p| p <= Finite(11))
        && ret1.is_some_and(|p| p <= Finite(1));
    report(
        4,
        pass,
        format!(
            "solve_spe(m=(inf,11), r=(1,inf)) = {}, main penalty of player 2 = {}, retaliation of player 1 = {}",
            yes_no(out.witness.is_some()),
            main2.map_or("-".into(), |p| p.to_string()),
            ret1.map_or("-".into(), |p| p.to_string()),
        ),
    );
}

#[test]
fn criterion_05_strong_winning_threshold() {
    let g = fixtures::g2();
    let both = WinMode::Strong(PlayerSet::all(2));
    let free = [Infinite, Infinite];
    let one = spe(&g, &bounds(&[Finite(1), Infinite], &free), both);
    let two = spe(&g, &bounds(&[Finite(2), Infinite], &free), both);
    let pass = one.witness.is_none() && one.complete && two.witness.is_some();
    report(
        5,
        pass,
        format!(
            "strongly winning for both: m=(1,inf) {}, m=(2,inf) {}",
            yes_no(one.witness.is_some()),
            yes_no(two.witness.is_some())
        ),
    );
}

#[test]
fn criterion_06_zero_retaliation() {
    let g = fixtures::g2();
    let out = spe(
        &g,
        &bounds(&[Infinite, Infinite], &[Finite(0), Infinite]),
        WinMode::Unconstrained,
    );
    let ret1 = out.report.as_ref().map(|r| r.retaliation_penalties[0]);
    let pass = out.witness.is_some() && ret1 == Some(Finite(0));
    report(
        6,
        pass,
        format!(
            "solve_spe(r=(0,inf)) = {}, retaliation of player 1 = {}",
            yes_no(out.witness.is_some()),
            ret1.map_or("-".into(), |p| p.to_string())
        ),
    );
}

#[test]
fn criterion_07_single_player_frontier() {
    let g = fixtures::g1();
    let free = [Infinite];
    let zero = spe(&g, &bounds(&[Finite(0)], &free), WinMode::Unconstrained);
    let one = spe(&g, &bounds(&[Finite(1)], &free), WinMode::Unconstrained);
    let short = SolveOptions {
        height_cap: Some(fixtures::leave_at_once_tree().height()),
        ..SolveOptions::default()
    };
    let capped = solve_spe(
        &g,
        &bounds(&[Finite(1)], &free),
        WinMode::Unconstrained,
        &short,
    )
    .expect("solver runs");
    let leave_at_once = capped
        .witness
        .as_ref()
        .is_some_and(|f| f.main == fixtures::leave_at_once_tree());
    // With no budget the single player blocks nothing, so allowing every move everywhere is the
    // only candidate; the oracle refutes it.
    let everything: Vec<Vec<Vertex>> = g.vertices().map(|v| g.successors(v).to_vec()).collect();
    let full = permissive::witness::MultiStrategyMachine::memoryless(everything);
    let refuted = matches!(
        oracle_permissive_check(&g, &full, Concept::Subgame, DEFAULT_STATE_CAP),
        Ok(Verdict::Refuted(_))
    );
    let confirmed = capped.witness.as_ref().is_some_and(|f| {
        let m = extract_multistrategy_spe(&g, f).expect("witness is good");
        matches!(
            oracle_permissive_check(&g, &m, Concept::Subgame, DEFAULT_STATE_CAP),
            Ok(Verdict::NoCounterexample)
        )
    });
    let enumerated = matches!(
        enumerate_small_witnesses(
            &g,
            4,
            &main_bounds(&[Finite(1)]),
            WinMode::Unconstrained,
            Concept::Subgame,
            1_000_000
        ),
        Ok(Some(SmallWitness::Forest(f))) if f.main == fixtures::leave_at_once_tree()
    );
    let pass = zero.witness.is_none()
        && zero.complete
        && one.witness.is_some()
        && leave_at_once
        && refuted
        && confirmed
        && enumerated;
    report(
        7,
        pass,
        format!(
            "m=0 {} (full permission refuted by oracle: {refuted}), m=1 {}; capped witness is the \
             leave-at-once tree: {leave_at_once}, oracle finds no counterexample: {confirmed}, \
             enumeration finds it first: {enumerated}",
            yes_no(zero.witness.is_some()),
            yes_no(one.witness.is_some()),
        ),
    );
}

#[test]
fn criterion_08_good_trees_are_permissive_equilibria() {
    let games = common::corpus(CORPUS_SEED, CORPUS_SIZE, MAX_VERTICES);
    let (mut trees, mut good, mut mismatches, mut exhaustive) = (0u64, 0u64, 0u64, 0usize);
    let mut first = None;
    for (k, g) in games.iter().enumerate() {
        let mut budget = TREES_PER_GAME;
        let mut complete = true;
        for h in 1..=5 {
            let run = for_each_tree(g, g.init(), h, &mut budget, &mut |t| {
                trees += 1;
                let is_good = check_good_tree(g, t).expect("enumerated trees are well formed");
                good += u64::from(is_good);
                let m = ne_machine_unchecked(g, t);
                let verdict = oracle_permissive_check(g, &m, Concept::Nash, DEFAULT_STATE_CAP)
                    .expect("product fits the cap");
                if is_good != (verdict == Verdict::NoCounterexample) {
                    mismatches += 1;
                    first.get_or_insert(k);
                }
                true
            });
            if let Err(OracleError::CombinatorialCap) = run {
                complete = false;
                break;
            }
        }
        exhaustive += usize::from(complete);
    }
    report(
        8,
        mismatches == 0,
        format!(
            "{trees} trees of height <= 5 ({good} good), {mismatches} disagreements; \
             {exhaustive}/{} games enumerated exhaustively, the rest up to {TREES_PER_GAME} trees{}",
            games.len(),
            first.map_or(String::new(), |k| format!(", first in game {k}"))
        ),
    );
}

/// Solver runs over the random corpus, shared by the criteria that inspect them.
struct CorpusRuns {
    games: Vec<ReachabilityGame>,
    ne: Vec<(usize, Thresholds, WinMode, NeOutcome)>,
    spe: Vec<(usize, Thresholds, WinMode, Result<SpeOutcome, SolveError>)>,
}

fn corpus_runs() -> &'static CorpusRuns {
    static RUNS: OnceLock<CorpusRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let games = common::corpus(CORPUS_SEED, CORPUS_SIZE, MAX_VERTICES);
        let values = common::bound_values();
        let mut ne_runs = Vec::new();
        let mut spe_runs = Vec::new();
        let limited = SolveOptions {
            node_limit: Some(SPE_NODE_LIMIT),
            ..SolveOptions::default()
        };
        for (k, g) in games.iter().enumerate() {
            for mode in common::modes() {
                for a in values {
                    for b in values {
                        let t = main_bounds(&[a, b]);
                        ne_runs.push((k, t.clone(), mode, ne(g, &t, mode)));
                        let t = bounds(&[a, Infinite], &[b, Infinite]);
                        let out = solve_spe(g, &t, mode, &limited);
                        spe_runs.push((k, t, mode, out));
                    }
                }
            }
        }
        CorpusRuns {
            games,
            ne: ne_runs,
            spe: spe_runs,
        }
    })
}

#[test]
fn criterion_09_solver_matches_reference_decisions() {
    let runs = corpus_runs();
    let (mut checked, mut mismatches, mut undecided) = (0usize, 0usize, 0usize);
    let (mut semantic_only, mut unsound) = (0usize, 0usize);
    let (mut enum_checked, mut enum_mismatches) = (0usize, 0usize);
    const SMALL: usize = 3;
    for (k, t, mode, out) in &runs.ne {
        let g = &runs.games[*k];
        let yes = out.witness.is_some();
        checked += 1;
        match decide_ne_symbolic(g, t, *mode, 200_000) {
            Ok(r) if r == yes => {}
            Ok(_) => mismatches += 1,
            Err(_) => undecided += 1,
        }
        let semantic = decide_ne_fixpoint(g, t, *mode);
        if yes && !semantic {
            unsound += 1;
        }
        if semantic && !yes {
            semantic_only += 1;
        }
        if *mode == WinMode::Unconstrained {
            let small = enumerate_small_witnesses(g, SMALL, t, *mode, Concept::Nash, ENUM_BUDGET);
            if let Ok(found) = small {
                enum_checked += 1;
                let short = out.witness.as_ref().is_some_and(|w| w.height() <= SMALL);
                if found.is_some() && !yes || short && found.is_none() {
                    enum_mismatches += 1;
                }
            }
        }
    }
    let pass = mismatches == 0 && undecided == 0 && unsound == 0 && enum_mismatches == 0;
    report(
        9,
        pass,
        format!(
            "{checked} NE queries: {mismatches} disagreements with the exact finite-tree decision \
             ({undecided} undecided); {enum_mismatches} disagreements with enumeration up to \
             height {SMALL} on {enum_checked} queries; {unsound} solver YES without an \
             equilibrium; {semantic_only} equilibria with no finite tree (enumeration at the full \
             height bound is out of reach)"
        ),
    );
}

#[test]
fn criterion_10_penalty_calculus() {
    let g1 = fixtures::g1();
    let g2 = fixtures::g2();
    let mut cases: Vec<(ReachabilityGame, SymbolicTree)> = vec![
        (g2.clone(), fixtures::drawn_ne_tree()),
        (g2.clone(), fixtures::improved_ne_tree()),
        (g2.clone(), fixtures::drawn_spe_main_tree()),
        (g1.clone(), fixtures::leave_at_once_tree()),
    ];
    for f in [
        fixtures::drawn_ne_forest(),
        fixtures::drawn_spe_forest(false),
        fixtures::drawn_spe_forest(true),
    ] {
        cases.extend(f.trees.values().map(|t| (g2.clone(), t.clone())));
    }
    let fixture_count = cases.len();
    let games = common::corpus(CORPUS_SEED, CORPUS_SIZE, MAX_VERTICES);
    let mut rng = common::rng(11);
    let mut random = 0;
    let mut k = 0;
    while random < 500 {
        let g = &games[k % games.len()];
        k += 1;
        if let Some(t) = common::random_tree(g, &mut rng, 4) {
            cases.push((g.clone(), t));
            random += 1;
        }
    }
    let (mut mismatches, mut infinite) = (0, 0);
    for (g, t) in &cases {
        for i in g.player_ids() {
            let fast = tree_penalty(g, t, i);
            if fast != brute_force_tree_penalty(g, t, i) {
                mismatches += 1;
            }
            if fast == Infinite {
                infinite += 1;
            }
        }
    }
    report(
        10,
        mismatches == 0 && infinite > 0,
        format!(
            "{fixture_count} fixture trees and {random} random trees, both players: \
             {mismatches} disagreements, {infinite} unbounded penalties"
        ),
    );
}

#[test]
fn criterion_11_solver_witnesses_validate() {
    let runs = corpus_runs();
    let (mut ne_yes, mut spe_yes, mut spe_no, mut aborted) = (0, 0, 0, 0);
    let mut failures: Vec<String> = Vec::new();
    for (k, t, mode, out) in &runs.ne {
        let g = &runs.games[*k];
        let Some(tree) = &out.witness else { continue };
        ne_yes += 1;
        let good = check_good_tree(g, tree) == Ok(true);
        let within = g
            .player_ids()
            .all(|i| tree_penalty(g, tree, i) <= t.main_of(i));
        let wins = TreeAnalysis::new(g, tree, g.initial_winners()).check_mode(*mode);
        let oracle = extract_multistrategy_ne(g, tree).is_ok_and(|m| {
            oracle_permissive_check(g, &m, Concept::Nash, DEFAULT_STATE_CAP)
                == Ok(Verdict::NoCounterexample)
        });
        if !(good && within && wins && oracle) {
            failures.push(format!("NE game {k} {mode:?}"));
        }
    }
    for (k, t, mode, out) in &runs.spe {
        let g = &runs.games[*k];
        let out = match out {
            Ok(o) => o,
            Err(SolveError::Aborted(_)) => {
                aborted += 1;
                continue;
            }
            Err(e) => {
                failures.push(format!("SPE game {k} {mode:?}: {e}"));
                continue;
            }
        };
        let Some(forest) = &out.witness else {
            spe_no += 1;
            continue;
        };
        spe_yes += 1;
        let ok = check_good_forest(g, forest, t, *mode).is_ok_and(|r| {
            r.good
                && r.winning
                && g.player_ids().all(|i| {
                    r.main_penalties[i - 1] <= t.main_of(i)
                        && r.retaliation_penalties[i - 1] <= t.retaliation_of(i)
                })
        });
        let oracle = extract_multistrategy_spe(g, forest).is_ok_and(|m| {
            oracle_permissive_check(g, &m, Concept::Subgame, DEFAULT_STATE_CAP)
                == Ok(Verdict::NoCounterexample)
        });
        if !(ok && oracle) {
            failures.push(format!("SPE game {k} {mode:?}"));
        }
    }
    report(
        11,
        failures.is_empty(),
        format!(
            "{ne_yes} NE and {spe_yes} SPE witnesses re-checked (goodness, bounds, winning, \
             oracle): {} failures{}; {spe_no} SPE NO, {aborted} SPE searches stopped by the \
             node budget",
            failures.len(),
            failures
                .first()
                .map_or(String::new(), |f| format!(", first {f}"))
        ),
    );
}

#[test]
fn criterion_12_witness_heights_within_bound() {
    let runs = corpus_runs();
    let (mut witnesses, mut over) = (0, 0);
    for (_, _, _, out) in &runs.ne {
        if let Some(t) = &out.witness {
            witnesses += 1;
            over += usize::from(t.height() > out.height_bound);
        }
    }
    for (k, t, _, out) in &runs.spe {
        let g = &runs.games[*k];
        let Ok(out) = out else { continue };
        let Some(forest) = &out.witness else { continue };
        witnesses += 1 + forest.trees.len();
        over += usize::from(forest.main.height() > out.height_bound);
        let ret = finite_bounds(&t.retaliation);
        for (x, tree) in &forest.trees {
            let deviators = g.all_players().difference(x.winners);
            let mode = WinMode::Weak(PlayerSet::singleton(x.player));
            over += usize::from(tree.height() > height_bound(g, deviators, &ret, mode));
        }
    }
    report(
        12,
        over == 0,
        format!("{witnesses} emitted trees, {over} taller than their height bound"),
    );
}
