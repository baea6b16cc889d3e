//! Permissive Nash equilibria: one tree, deviations answered by the coalition.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use super::engine::{with_big_stack, Counter, Engine, Problem};
use super::{finite_bounds, SearchStats, SolveError, SolveOptions};
use crate::game::ReachabilityGame;
use crate::penalty::{Penalty, Thresholds};
use crate::players::PlayerSet;
use crate::witness::analysis::{check_good_tree, tree_penalty, TreeAnalysis, WinMode};
use crate::witness::tree::SymbolicTree;
use crate::zero_sum::gamma_game;

/// Height that suffices for a witness whenever one exists:
/// `|V| * |D| * 2|D| * sum of tracked bounds`, doubled, or tripled for weak winning.
/// Empty `D` and a zero sum are counted as 1.
pub fn height_bound(
    game: &ReachabilityGame,
    deviators: PlayerSet,
    tracked: &[(usize, u64)],
    mode: WinMode,
) -> usize {
    let d = deviators.len().max(1) as u64;
    let sum: u64 = tracked.iter().map(|&(_, b)| b).sum::<u64>().max(1);
    let base = game.vertex_count() as u64 * d * (2 * d) * sum;
    let factor = if matches!(mode, WinMode::Weak(_)) {
        3
    } else {
        2
    };
    usize::try_from(base * factor).unwrap_or(usize::MAX)
}

/// Root choice index, its search result and the nodes it explored.
type ChoiceResult = (usize, Result<Option<SymbolicTree>, SolveError>, u64);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeOutcome {
    pub witness: Option<SymbolicTree>,
    pub height_bound: usize,
    pub height_used: usize,
    /// False when a height cap below the bound was used, so a missing witness proves nothing.
    pub complete: bool,
    pub stats: SearchStats,
}

pub(crate) fn check_query(
    game: &ReachabilityGame,
    thresholds: &Thresholds,
    mode: WinMode,
) -> Result<(), SolveError> {
    let n = game.player_count();
    if thresholds.main.len() != n || thresholds.retaliation.len() != n {
        return Err(SolveError::InvalidGame(format!(
            "thresholds must list {n} players"
        )));
    }
    if let Some((w, _)) = mode.required() {
        if !w.is_subset(game.all_players()) {
            return Err(SolveError::InvalidGame(format!(
                "winning set {w} names unknown players"
            )));
        }
    }
    Ok(())
}

pub(crate) fn root_constraints(mode: WinMode) -> (PlayerSet, Option<PlayerSet>) {
    match mode {
        WinMode::Unconstrained => (PlayerSet::EMPTY, None),
        WinMode::Strong(w) => (w, None),
        WinMode::Weak(w) => (PlayerSet::EMPTY, Some(w)),
    }
}

/// Searches for a good tree from the initial vertex within the main penalty bounds.
pub fn solve_ne(
    game: &ReachabilityGame,
    thresholds: &Thresholds,
    mode: WinMode,
    options: &SolveOptions,
) -> Result<NeOutcome, SolveError> {
    check_query(game, thresholds, mode)?;
    if thresholds.retaliation.iter().any(|r| r.is_finite()) {
        return Err(SolveError::UnsupportedFiniteRetaliation);
    }
    let start = Instant::now();
    let pre = game.initial_winners();
    let tracked = finite_bounds(&thresholds.main);
    let bound = height_bound(game, game.all_players().difference(pre), &tracked, mode);
    let height = options.height_cap.map_or(bound, |c| c.min(bound));
    let (root_all, weak) = root_constraints(mode);
    let problem = Problem {
        root: game.init(),
        pre_winners: pre,
        tracked,
        root_all,
        root_none: PlayerSet::EMPTY,
        weak,
        height,
        root_check: false,
    };
    let (witness, explored) = if options.jobs <= 1 {
        with_big_stack(|| {
            let counter = Counter::new(options.node_limit);
            let mut gamma = gamma_game(game);
            let r = Engine::new(game, problem.clone(), &mut gamma, &counter).run();
            r.map(|t| (t, counter.explored()))
        })?
    } else {
        parallel(game, &problem, options)?
    };
    if let Some(t) = &witness {
        validate_ne(game, t, thresholds, mode, height)?;
    }
    Ok(NeOutcome {
        witness,
        height_bound: bound,
        height_used: height,
        complete: height >= bound,
        stats: SearchStats {
            nodes_explored: explored,
            elapsed_ms: start.elapsed().as_millis(),
        },
    })
}

/// Root choices are split among workers; the witness of the first successful choice wins, so
/// the answer does not depend on scheduling.
fn parallel(
    game: &ReachabilityGame,
    problem: &Problem,
    options: &SolveOptions,
) -> Result<(Option<SymbolicTree>, u64), SolveError> {
    let count = with_big_stack(|| {
        let counter = Counter::new(None);
        let mut gamma = gamma_game(game);
        Engine::new(game, problem.clone(), &mut gamma, &counter).root_choice_count()
    })?;
    let next = AtomicUsize::new(0);
    let best = AtomicUsize::new(usize::MAX);
    let results: Mutex<Vec<ChoiceResult>> = Mutex::new(Vec::new());
    std::thread::scope(|s| {
        for _ in 0..options.jobs.min(count.max(1)) {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                if k >= count || k > best.load(Ordering::SeqCst) {
                    break;
                }
                let (r, explored) = with_big_stack(|| {
                    let counter = Counter::new(options.node_limit);
                    let mut gamma = gamma_game(game);
                    let mut e = Engine::new(game, problem.clone(), &mut gamma, &counter);
                    e.restrict_root(k);
                    (e.run().map_err(SolveError::from), counter.explored())
                });
                if matches!(r, Ok(Some(_))) {
                    best.fetch_min(k, Ordering::SeqCst);
                }
                results.lock().expect("results lock").push((k, r, explored));
            });
        }
    });
    let mut results = results.into_inner().expect("results lock");
    results.sort_by_key(|r| r.0);
    let explored = results.iter().map(|r| r.2).sum();
    for (_, r, _) in results {
        match r {
            Ok(Some(t)) => return Ok((Some(t), explored)),
            Ok(None) => {}
            Err(e) => return Err(e),
        }
    }
    Ok((None, explored))
}

/// Every witness must be good, within its bounds, winning as asked and no taller than allowed.
pub fn validate_ne(
    game: &ReachabilityGame,
    tree: &SymbolicTree,
    thresholds: &Thresholds,
    mode: WinMode,
    height: usize,
) -> Result<(), SolveError> {
    let fail = |m: String| Err(SolveError::SelfValidation(m));
    match check_good_tree(game, tree) {
        Ok(true) => {}
        Ok(false) => return fail("tree is not good".into()),
        Err(e) => return fail(e.to_string()),
    }
    for i in game.player_ids() {
        let p = tree_penalty(game, tree, i);
        if p > thresholds.main_of(i) {
            return fail(format!(
                "penalty {p} of player {i} exceeds {}",
                thresholds.main_of(i)
            ));
        }
    }
    if !TreeAnalysis::new(game, tree, game.initial_winners()).check_mode(mode) {
        return fail("winning requirement not met".into());
    }
    if tree.height() > height {
        return fail(format!("height {} exceeds {height}", tree.height()));
    }
    Ok(())
}

/// Main penalties of a tree, one per player.
pub fn penalties(game: &ReachabilityGame, tree: &SymbolicTree) -> Vec<Penalty> {
    game.player_ids()
        .map(|i| tree_penalty(game, tree, i))
        .collect()
}
