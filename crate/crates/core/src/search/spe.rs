//! Permissive subgame perfect equilibria: a main tree plus one tree per deviation index.
//!
//! Gains of deviations are guessed when first needed and each guess is confirmed by searching
//! the tree of its index. A guess of 0 (the deviator cannot win) is tried first since it
//! constrains the tree that deviates least. While an index's own tree is being searched its
//! guess is trusted, so self-references terminate. Guesses made inside a refuted search are
//! undone with it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::Instant;

use super::engine::{with_big_stack, Abort, Counter, Engine, GammaOracle, Problem};
use super::ne::{check_query, height_bound, root_constraints};
use super::{finite_bounds, SearchStats, SolveError, SolveOptions};
use crate::game::{ReachabilityGame, Vertex};
use crate::penalty::Thresholds;
use crate::players::{Player, PlayerSet};
use crate::witness::analysis::{TreeAnalysis, Unfolding, WinMode};
use crate::witness::forest::{
    check_good_forest, compute_out_set, index_of_move, ForestReport, SymbolicForest, TreeIndex,
};
use crate::witness::tree::SymbolicTree;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpeOutcome {
    pub witness: Option<SymbolicForest>,
    pub report: Option<ForestReport>,
    pub height_bound: usize,
    pub height_used: usize,
    pub complete: bool,
    pub stats: SearchStats,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Guess {
    /// None once neither gain could be confirmed: the index has no tree in this context.
    value: Option<bool>,
    verified: bool,
}

struct Forester<'a> {
    game: &'a ReachabilityGame,
    counter: &'a Counter,
    retaliation: Vec<(Player, u64)>,
    height_cap: Option<usize>,
    table: HashMap<TreeIndex, Guess>,
    trees: HashMap<TreeIndex, SymbolicTree>,
    /// Indices in the order they entered the table, for undoing refuted searches.
    log: Vec<TreeIndex>,
    main: Option<SymbolicTree>,
}

impl<'a> Forester<'a> {
    fn rollback(&mut self, mark: usize) {
        for x in self.log.drain(mark..) {
            self.table.remove(&x);
            self.trees.remove(&x);
        }
    }

    fn record(&mut self, x: TreeIndex, g: Guess) {
        if self.table.insert(x, g).is_none() {
            self.log.push(x);
        }
    }

    /// Searches the tree of `x`; `value` fixes whether its player must be able to win.
    fn search(&mut self, x: TreeIndex, value: Option<bool>) -> Result<Option<SymbolicTree>, Abort> {
        let j = x.player;
        let (root_none, weak, mode) = match value {
            Some(true) => (
                PlayerSet::EMPTY,
                Some(PlayerSet::singleton(j)),
                WinMode::Weak(PlayerSet::singleton(j)),
            ),
            Some(false) => (PlayerSet::singleton(j), None, WinMode::Unconstrained),
            None => (PlayerSet::EMPTY, None, WinMode::Unconstrained),
        };
        let deviators = self.game.all_players().difference(x.winners);
        let bound = height_bound(self.game, deviators, &self.retaliation, mode);
        let problem = Problem {
            root: x.vertex,
            pre_winners: x.winners,
            tracked: self.retaliation.clone(),
            root_all: PlayerSet::EMPTY,
            root_none,
            weak,
            height: self.height_cap.map_or(bound, |c| c.min(bound)),
            root_check: false,
        };
        let (game, counter) = (self.game, self.counter);
        Engine::new(game, problem, self, counter).run()
    }

    /// Gives `x` some tree with no requirement on its player's gain, recording the gain it has.
    fn settle(&mut self, x: TreeIndex) -> Result<bool, Abort> {
        if self.trees.contains_key(&x) {
            return Ok(true);
        }
        if matches!(self.table.get(&x), Some(g) if g.value.is_none()) {
            return Ok(false);
        }
        let mark = self.log.len();
        self.record(
            x,
            Guess {
                value: Some(true),
                verified: false,
            },
        );
        match self.search(x, None)? {
            Some(t) => {
                let wins =
                    TreeAnalysis::new(self.game, &t, x.winners).wins_some_from(t.root(), x.player);
                self.table.insert(
                    x,
                    Guess {
                        value: Some(wins),
                        verified: true,
                    },
                );
                self.trees.insert(x, t);
                Ok(true)
            }
            None => {
                self.rollback(mark);
                Ok(false)
            }
        }
    }

    /// Indices entered by blocked moves of `tree`, whose plays start with `pre` winners.
    fn jump_targets(&self, tree: &SymbolicTree, pre: PlayerSet) -> BTreeSet<TreeIndex> {
        let unf = Unfolding::new(self.game, tree, pre);
        let mut out = BTreeSet::new();
        for s in 0..unf.len() {
            let (n, w) = unf.state(s);
            for u in tree.blocked_set(self.game, n) {
                out.insert(index_of_move(self.game, tree.vertex(n), u, w));
            }
        }
        out
    }

    /// Trees a forest around `main` must contain: every index a blocked move can jump to and,
    /// when retaliation is bounded, every index of a history that left `main`.
    fn needed(&mut self, main: &SymbolicTree) -> Result<Option<BTreeSet<TreeIndex>>, Abort> {
        let mut need = if self.retaliation.is_empty() {
            BTreeSet::new()
        } else {
            compute_out_set(self.game, main)
        };
        need.extend(self.jump_targets(main, self.game.initial_winners()));
        let mut queue: Vec<TreeIndex> = need.iter().copied().collect();
        let mut done = BTreeSet::new();
        while let Some(x) = queue.pop() {
            if !done.insert(x) {
                continue;
            }
            if !self.settle(x)? {
                return Ok(None);
            }
            let t = self.trees[&x].clone();
            for y in self.jump_targets(&t, x.winners) {
                if need.insert(y) {
                    queue.push(y);
                }
            }
        }
        Ok(Some(need))
    }
}

impl GammaOracle for Forester<'_> {
    fn gamma(&mut self, i: Player, u: Vertex, winners: PlayerSet) -> Result<Option<bool>, Abort> {
        if winners.contains(i) {
            return Ok(Some(true));
        }
        let x = TreeIndex {
            player: i,
            vertex: u,
            winners,
        };
        if let Some(g) = self.table.get(&x) {
            return Ok(g.value);
        }
        for value in [false, true] {
            let mark = self.log.len();
            self.record(
                x,
                Guess {
                    value: Some(value),
                    verified: false,
                },
            );
            match self.search(x, Some(value))? {
                Some(t) => {
                    self.table.insert(
                        x,
                        Guess {
                            value: Some(value),
                            verified: true,
                        },
                    );
                    self.trees.insert(x, t);
                    return Ok(Some(value));
                }
                None => self.rollback(mark),
            }
        }
        // Remembered until a guess it relied on is undone.
        self.record(
            x,
            Guess {
                value: None,
                verified: true,
            },
        );
        Ok(None)
    }

    fn accept_root(&mut self, tree: &SymbolicTree) -> Result<bool, Abort> {
        let mark = self.log.len();
        if self.needed(tree)?.is_none() {
            self.rollback(mark);
            return Ok(false);
        }
        self.main = Some(tree.clone());
        Ok(true)
    }
}

/// Searches for a good forest whose main tree meets the main bounds and the winning mode and
/// whose deviation trees meet the retaliation bounds.
pub fn solve_spe(
    game: &ReachabilityGame,
    thresholds: &Thresholds,
    mode: WinMode,
    options: &SolveOptions,
) -> Result<SpeOutcome, SolveError> {
    check_query(game, thresholds, mode)?;
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
        root_check: true,
    };
    let (forest, explored) = with_big_stack(|| -> Result<_, Abort> {
        let counter = Counter::new(options.node_limit);
        let mut f = Forester {
            game,
            counter: &counter,
            retaliation: finite_bounds(&thresholds.retaliation),
            height_cap: options.height_cap,
            table: HashMap::new(),
            trees: HashMap::new(),
            log: Vec::new(),
            main: None,
        };
        let found = Engine::new(game, problem, &mut f, &counter).run()?;
        let forest = match found {
            None => None,
            Some(main) => {
                debug_assert_eq!(f.main.as_ref(), Some(&main));
                let need = f
                    .needed(&main)?
                    .expect("accepted main trees have complete forests");
                let trees: BTreeMap<TreeIndex, SymbolicTree> =
                    need.into_iter().map(|x| (x, f.trees[&x].clone())).collect();
                Some(SymbolicForest { main, trees })
            }
        };
        Ok((forest, counter.explored()))
    })?;
    let report = match &forest {
        Some(forest) => Some(validate_spe(game, forest, thresholds, mode, height)?),
        None => None,
    };
    Ok(SpeOutcome {
        witness: forest,
        report,
        height_bound: bound,
        height_used: height,
        complete: height >= bound,
        stats: SearchStats {
            nodes_explored: explored,
            elapsed_ms: start.elapsed().as_millis(),
        },
    })
}

/// A forest must be good for the query; every tree must respect the height it was searched with.
pub fn validate_spe(
    game: &ReachabilityGame,
    forest: &SymbolicForest,
    thresholds: &Thresholds,
    mode: WinMode,
    height: usize,
) -> Result<ForestReport, SolveError> {
    let report = check_good_forest(game, forest, thresholds, mode)
        .map_err(|e| SolveError::SelfValidation(e.to_string()))?;
    if !report.good {
        return Err(SolveError::SelfValidation(report.violations.join("; ")));
    }
    if forest.main.height() > height {
        return Err(SolveError::SelfValidation(format!(
            "main tree taller than {height}"
        )));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::penalty::Penalty::{self, Finite, Infinite};

    fn th(main: &[Penalty], ret: &[Penalty]) -> Thresholds {
        Thresholds::unbounded(main.len())
            .with_main(main)
            .with_retaliation(ret)
    }

    fn yes(g: &ReachabilityGame, t: &Thresholds, mode: WinMode) -> bool {
        solve_spe(g, t, mode, &SolveOptions::default())
            .unwrap()
            .witness
            .is_some()
    }

    #[test]
    fn spe_example_bounds() {
        let g = fixtures::g2();
        let out = solve_spe(
            &g,
            &th(&[Infinite, Finite(11)], &[Finite(1), Infinite]),
            WinMode::Unconstrained,
            &SolveOptions::default(),
        )
        .unwrap();
        let rep = out.report.unwrap();
        assert!(rep.main_penalties[1] <= Finite(11));
        assert!(rep.retaliation_penalties[0] <= Finite(1));
    }

    #[test]
    fn strong_winning_needs_two_units() {
        let g = fixtures::g2();
        let both = WinMode::Strong(PlayerSet::all(2));
        assert!(!yes(
            &g,
            &th(&[Finite(1), Infinite], &[Infinite, Infinite]),
            both
        ));
        assert!(yes(
            &g,
            &th(&[Finite(2), Infinite], &[Infinite, Infinite]),
            both
        ));
    }

    #[test]
    fn zero_retaliation() {
        let g = fixtures::g2();
        assert!(yes(
            &g,
            &th(&[Infinite, Infinite], &[Finite(0), Infinite]),
            WinMode::Unconstrained
        ));
    }

    #[test]
    fn g1_frontier() {
        let g = fixtures::g1();
        assert!(!yes(
            &g,
            &th(&[Finite(0)], &[Infinite]),
            WinMode::Unconstrained
        ));
        let out = solve_spe(
            &g,
            &th(&[Finite(1)], &[Infinite]),
            WinMode::Unconstrained,
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(out.report.unwrap().main_penalties, vec![Finite(1)]);
        let short = SolveOptions {
            height_cap: Some(fixtures::leave_at_once_tree().height()),
            ..SolveOptions::default()
        };
        let out = solve_spe(
            &g,
            &th(&[Finite(1)], &[Infinite]),
            WinMode::Unconstrained,
            &short,
        )
        .unwrap();
        assert!(!out.complete);
        assert_eq!(out.witness.unwrap().main, fixtures::leave_at_once_tree());
    }
}
