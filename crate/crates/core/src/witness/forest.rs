//! Forests of trees indexed by deviations, and the checks that make them characterize SPEs.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::analysis::{tree_penalty, GammaSource, TreeAnalysis, WinMode};
use super::tree::{NodeId, SymbolicTree, TreeFile};
use super::WitnessError;
use crate::game::{ReachabilityGame, Vertex};
use crate::penalty::{Penalty, Thresholds};
use crate::players::{Player, PlayerSet};

/// Identifies the subgame entered when `player` moves to `vertex`, with `winners` the players
/// that have visited their targets so far (the ones winning at the start included).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TreeIndex {
    pub player: Player,
    pub vertex: Vertex,
    pub winners: PlayerSet,
}

impl fmt::Display for TreeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(player {}, vertex #{}, winners {})",
            self.player, self.vertex, self.winners
        )
    }
}

/// A main tree plus one tree per deviation index. Only indices some check needs must be present.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolicForest {
    pub main: SymbolicTree,
    pub trees: BTreeMap<TreeIndex, SymbolicTree>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestFile {
    pub main: TreeFile,
    #[serde(default)]
    pub trees: Vec<ForestEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestEntry {
    pub player: Player,
    pub vertex: String,
    pub winners: Vec<Player>,
    pub tree: TreeFile,
}

impl SymbolicForest {
    pub fn new(main: SymbolicTree) -> Self {
        SymbolicForest {
            main,
            trees: BTreeMap::new(),
        }
    }

    pub fn tree(&self, x: &TreeIndex) -> Option<&SymbolicTree> {
        self.trees.get(x)
    }

    pub fn to_file(&self, game: &ReachabilityGame) -> ForestFile {
        ForestFile {
            main: self.main.to_file(game),
            trees: self
                .trees
                .iter()
                .map(|(x, t)| ForestEntry {
                    player: x.player,
                    vertex: game.name(x.vertex).to_string(),
                    winners: x.winners.iter().collect(),
                    tree: t.to_file(game),
                })
                .collect(),
        }
    }

    pub fn from_file(game: &ReachabilityGame, file: &ForestFile) -> Result<Self, WitnessError> {
        let mut forest = SymbolicForest::new(SymbolicTree::from_file(game, &file.main)?);
        for e in &file.trees {
            let vertex = game
                .vertex(&e.vertex)
                .map_err(|_| WitnessError::Malformed(format!("unknown vertex `{}`", e.vertex)))?;
            if e.player == 0
                || e.player > game.player_count()
                || e.winners.iter().any(|&i| i == 0 || i > game.player_count())
            {
                return Err(WitnessError::Malformed(format!(
                    "index at `{}` names an unknown player",
                    e.vertex
                )));
            }
            let x = TreeIndex {
                player: e.player,
                vertex,
                winners: e.winners.iter().copied().collect(),
            };
            let t = SymbolicTree::from_file(game, &e.tree)?;
            if forest.trees.insert(x, t).is_some() {
                return Err(WitnessError::Malformed(format!("index {x} appears twice")));
            }
        }
        Ok(forest)
    }

    /// Structural checks: valid trees, roots where their indices say, indices that can occur.
    pub fn validate(&self, game: &ReachabilityGame) -> Result<(), WitnessError> {
        self.main.validate(game)?;
        if self.main.root_vertex() != game.init() {
            return Err(WitnessError::WrongRoot);
        }
        let all = index_set(game);
        for (x, t) in &self.trees {
            t.validate(game)?;
            if t.root_vertex() != x.vertex {
                return Err(WitnessError::Malformed(format!(
                    "tree {x} is rooted elsewhere"
                )));
            }
            if !all.contains(x) {
                return Err(WitnessError::Malformed(format!(
                    "{x} is not reachable by any history"
                )));
            }
        }
        Ok(())
    }
}

/// The index obtained when the owner of `from` moves to `to` with winners `winners` so far.
pub fn index_of_move(
    game: &ReachabilityGame,
    from: Vertex,
    to: Vertex,
    winners: PlayerSet,
) -> TreeIndex {
    TreeIndex {
        player: game.owner(from),
        vertex: to,
        winners: winners.union(game.targets_at(to)),
    }
}

/// Pairs (vertex, winners) reachable from the initial vertex by arbitrary histories.
pub fn reachable_positions(game: &ReachabilityGame) -> HashSet<(Vertex, PlayerSet)> {
    let start = (game.init(), game.initial_winners());
    let mut seen = HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some((v, w)) = queue.pop_front() {
        for &u in game.successors(v) {
            let next = (u, w.union(game.targets_at(u)));
            if seen.insert(next) {
                queue.push_back(next);
            }
        }
    }
    seen
}

/// Every index that some history of the game produces.
pub fn index_set(game: &ReachabilityGame) -> BTreeSet<TreeIndex> {
    reachable_positions(game)
        .into_iter()
        .flat_map(|(v, w)| {
            game.successors(v)
                .iter()
                .map(move |&u| index_of_move(game, v, u, w))
        })
        .collect()
}

/// Indices of moves made by histories that have left the main tree, the leaving move included.
pub fn compute_out_set(game: &ReachabilityGame, main: &SymbolicTree) -> BTreeSet<TreeIndex> {
    // Position None means the history has escaped the main tree.
    let start = (game.init(), game.initial_winners(), Some(main.root()));
    let mut seen = HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    let mut out = BTreeSet::new();
    while let Some((v, w, pos)) = queue.pop_front() {
        for &u in game.successors(v) {
            let w2 = w.union(game.targets_at(u));
            let next_pos = pos.and_then(|n| {
                main.unfolding_successors(n)
                    .iter()
                    .copied()
                    .find(|&m| main.vertex(m) == u)
            });
            if next_pos.is_none() {
                out.insert(index_of_move(game, v, u, w));
            }
            let next = (u, w2, next_pos);
            if seen.insert(next) {
                queue.push_back(next);
            }
        }
    }
    out
}

/// Deviation gains read off the forest: a deviation wins if its index player has already won or
/// some play of the index tree lets it win.
pub struct ForestGamma<'f> {
    game: &'f ReachabilityGame,
    forest: &'f SymbolicForest,
    cache: RefCell<HashMap<TreeIndex, bool>>,
}

impl<'f> ForestGamma<'f> {
    pub fn new(game: &'f ReachabilityGame, forest: &'f SymbolicForest) -> Self {
        ForestGamma {
            game,
            forest,
            cache: RefCell::new(HashMap::new()),
        }
    }
}

impl GammaSource for ForestGamma<'_> {
    fn gamma(&self, i: Player, u: Vertex, winners: PlayerSet) -> Result<bool, WitnessError> {
        if winners.contains(i) {
            return Ok(true);
        }
        let x = TreeIndex {
            player: i,
            vertex: u,
            winners,
        };
        if let Some(&b) = self.cache.borrow().get(&x) {
            return Ok(b);
        }
        let t = self.forest.tree(&x).ok_or(WitnessError::MissingTree(x))?;
        let b = TreeAnalysis::new(self.game, t, winners).wins_some_from(t.root(), i);
        self.cache.borrow_mut().insert(x, b);
        Ok(b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ForestReport {
    pub good: bool,
    pub main_penalties: Vec<Penalty>,
    pub retaliation_penalties: Vec<Penalty>,
    pub winning: bool,
    pub violations: Vec<String>,
}

fn describe(
    game: &ReachabilityGame,
    tree_name: &str,
    f: &super::ResistanceFailure,
    tree: &SymbolicTree,
) -> String {
    use super::ResistanceFailure::*;
    match *f {
        Internal { node, player } => format!(
            "{tree_name}: player {player} gets different gains below node {node} at {}",
            game.name(tree.vertex(node))
        ),
        External {
            node,
            player,
            blocked,
        } => format!(
            "{tree_name}: player {player} profits from deviating to {} at node {node} ({})",
            game.name(blocked),
            game.name(tree.vertex(node))
        ),
    }
}

fn tree_violation(
    game: &ReachabilityGame,
    gamma: &ForestGamma,
    name: &str,
    tree: &SymbolicTree,
    pre: PlayerSet,
) -> Result<Option<String>, WitnessError> {
    let a = TreeAnalysis::new(game, tree, pre);
    let deviators = game.all_players().difference(pre);
    if let Some(f) = a.internal_failure(deviators) {
        return Ok(Some(describe(game, name, &f, tree)));
    }
    Ok(a.gamma_failure(gamma, deviators)?
        .map(|f| describe(game, name, &f, tree)))
}

/// Goodness of a forest, its penalties and the winning requirement on its main tree.
///
/// Retaliation of a player is its worst penalty over the trees entered after leaving the main
/// tree, whoever deviated.
pub fn check_good_forest(
    game: &ReachabilityGame,
    forest: &SymbolicForest,
    thresholds: &Thresholds,
    mode: WinMode,
) -> Result<ForestReport, WitnessError> {
    forest.validate(game)?;
    let gamma = ForestGamma::new(game, forest);
    let mut violations = Vec::new();
    let pre = game.initial_winners();
    violations.extend(tree_violation(
        game,
        &gamma,
        "main tree",
        &forest.main,
        pre,
    )?);
    for (x, t) in &forest.trees {
        let name = format!("tree {}", display_index(game, x));
        violations.extend(tree_violation(game, &gamma, &name, t, x.winners)?);
    }

    let main_penalties: Vec<Penalty> = game
        .player_ids()
        .map(|i| tree_penalty(game, &forest.main, i))
        .collect();
    for i in game.player_ids() {
        if main_penalties[i - 1] > thresholds.main_of(i) {
            violations.push(format!(
                "main penalty of player {i} is {} above {}",
                main_penalties[i - 1],
                thresholds.main_of(i)
            ));
        }
    }

    let bounded = game
        .player_ids()
        .any(|i| thresholds.retaliation_of(i).is_finite());
    let mut retaliation_penalties = vec![Penalty::ZERO; game.player_count()];
    for x in compute_out_set(game, &forest.main) {
        let Some(t) = forest.tree(&x) else {
            if bounded {
                return Err(WitnessError::MissingTree(x));
            }
            continue;
        };
        for i in game.player_ids() {
            retaliation_penalties[i - 1] =
                retaliation_penalties[i - 1].max(tree_penalty(game, t, i));
        }
    }
    for i in game.player_ids() {
        if retaliation_penalties[i - 1] > thresholds.retaliation_of(i) {
            violations.push(format!(
                "retaliation penalty of player {i} is {} above {}",
                retaliation_penalties[i - 1],
                thresholds.retaliation_of(i)
            ));
        }
    }

    let winning = TreeAnalysis::new(game, &forest.main, pre).check_mode(mode);
    if !winning {
        violations.push("main tree misses the winning requirement".into());
    }
    Ok(ForestReport {
        good: violations.is_empty(),
        main_penalties,
        retaliation_penalties,
        winning,
        violations,
    })
}

pub fn display_index(game: &ReachabilityGame, x: &TreeIndex) -> String {
    format!("({}, {}, {})", x.player, game.name(x.vertex), x.winners)
}

/// Node of `tree` reached from `n` by moving to vertex `u`, if the tree keeps that move.
pub fn step(tree: &SymbolicTree, n: NodeId, u: Vertex) -> Option<NodeId> {
    tree.unfolding_successors(n)
        .iter()
        .copied()
        .find(|&m| tree.vertex(m) == u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::penalty::Penalty::{Finite, Infinite};

    fn idx(g: &ReachabilityGame, player: Player, v: &str, w: &[Player]) -> TreeIndex {
        TreeIndex {
            player,
            vertex: g.vertex(v).unwrap(),
            winners: w.iter().copied().collect(),
        }
    }

    fn r1(bound: Penalty) -> Thresholds {
        Thresholds::unbounded(2).with_retaliation(&[bound, Infinite])
    }

    #[test]
    fn spe_example_forest_is_good_with_retaliation_one() {
        let g = fixtures::g2();
        let f = fixtures::drawn_spe_forest(false);
        let rep = check_good_forest(
            &g,
            &f,
            &r1(Finite(1)),
            WinMode::Strong(PlayerSet::singleton(1)),
        )
        .unwrap();
        assert!(rep.good, "{:?}", rep.violations);
        assert_eq!(rep.retaliation_penalties[0], Finite(1));
        assert_eq!(rep.main_penalties[1], Finite(11));
        let rep = check_good_forest(&g, &f, &r1(Finite(0)), WinMode::Unconstrained).unwrap();
        assert!(!rep.good);
    }

    #[test]
    fn allowing_v9_brings_retaliation_to_zero() {
        let g = fixtures::g2();
        let rep = check_good_forest(
            &g,
            &fixtures::drawn_spe_forest(true),
            &r1(Finite(0)),
            WinMode::Unconstrained,
        )
        .unwrap();
        assert!(rep.good, "{:?}", rep.violations);
        assert_eq!(rep.retaliation_penalties[0], Finite(0));
    }

    #[test]
    fn nash_profile_is_not_subgame_perfect() {
        let g = fixtures::g2();
        let rep = check_good_forest(
            &g,
            &fixtures::drawn_ne_forest(),
            &Thresholds::unbounded(2),
            WinMode::Unconstrained,
        )
        .unwrap();
        assert!(!rep.good);
        assert!(
            rep.violations
                .iter()
                .any(|m| m.contains("player 2 profits from deviating to v6")),
            "{:?}",
            rep.violations
        );
    }

    #[test]
    fn out_set_of_the_spe_example() {
        let g = fixtures::g2();
        let out = compute_out_set(&g, &fixtures::drawn_spe_main_tree());
        assert!(out.contains(&idx(&g, 2, "v7", &[])));
        assert!(out.contains(&idx(&g, 2, "v5", &[])));
        assert!(out.contains(&idx(&g, 1, "v9", &[1])));
        assert!(!out.contains(&idx(&g, 1, "v1", &[])));
        let all = index_set(&g);
        assert!(out.is_subset(&all));
    }

    #[test]
    fn leaf_that_only_loops_blocks_its_exit() {
        let g = fixtures::g1();
        let (v0, v1) = (g.vertex("v0").unwrap(), g.vertex("v1").unwrap());
        let mut t = SymbolicTree::new(v0);
        let a = t.add_child(0, v0);
        let b = t.add_child(0, v1);
        t.set_links(a, vec![0]);
        let c = t.add_child(b, v1);
        t.set_links(c, vec![b]);
        // The v0 leaf can only move back to the root, so its move to v1 escapes.
        assert_eq!(
            compute_out_set(&g, &t).into_iter().collect::<Vec<_>>(),
            [idx(&g, 1, "v1", &[1])]
        );
    }

    #[test]
    fn blocked_self_loop_of_g1_leaves_the_tree() {
        let g = fixtures::g1();
        let out = compute_out_set(&g, &fixtures::leave_at_once_tree());
        assert!(out.contains(&idx(&g, 1, "v0", &[])));
    }

    #[test]
    fn missing_lookup_tree_is_an_error() {
        let g = fixtures::g2();
        let mut f = fixtures::drawn_spe_forest(false);
        let x = idx(&g, 2, "v7", &[]);
        f.trees.remove(&x);
        assert_eq!(
            check_good_forest(&g, &f, &r1(Finite(1)), WinMode::Unconstrained),
            Err(WitnessError::MissingTree(x))
        );
        assert!(
            check_good_forest(&g, &f, &Thresholds::unbounded(2), WinMode::Unconstrained).is_ok()
        );
    }

    #[test]
    fn forest_file_round_trip() {
        let g = fixtures::g2();
        let f = fixtures::drawn_spe_forest(false);
        let text = serde_json::to_string(&f.to_file(&g)).unwrap();
        let back: ForestFile = serde_json::from_str(&text).unwrap();
        assert_eq!(SymbolicForest::from_file(&g, &back).unwrap(), f);
    }
}
