//! Exhaustive enumeration of small symbolic trees and forests, independent of the solvers.

use std::collections::{BTreeMap, BTreeSet};

use super::profiles::Concept;
use super::OracleError;
use crate::game::{ReachabilityGame, Vertex};
use crate::penalty::Thresholds;
use crate::players::PlayerSet;
use crate::witness::forest::index_of_move;
use crate::witness::{
    check_good_forest, check_good_tree, compute_labels, compute_out_set, tree_penalty, NodeId,
    SymbolicForest, SymbolicTree, TreeAnalysis, TreeIndex, Unfolding, WinMode,
};

/// Calls `f` on every symbolic tree rooted at `root` whose height is exactly `height`, until `f`
/// returns false. Gives up with an error after `budget` trees.
pub fn for_each_tree(
    game: &ReachabilityGame,
    root: Vertex,
    height: usize,
    budget: &mut u64,
    f: &mut dyn FnMut(&SymbolicTree) -> bool,
) -> Result<bool, OracleError> {
    let tree = SymbolicTree::new(root);
    let mut builder = Builder {
        game,
        height,
        budget,
        f,
    };
    builder.expand(tree, vec![0])
}

struct Builder<'a, 'f> {
    game: &'a ReachabilityGame,
    height: usize,
    budget: &'a mut u64,
    f: &'f mut dyn FnMut(&SymbolicTree) -> bool,
}

impl Builder<'_, '_> {
    /// Expands pending nodes one at a time; returns false once the callback asked to stop.
    fn expand(
        &mut self,
        tree: SymbolicTree,
        mut pending: Vec<NodeId>,
    ) -> Result<bool, OracleError> {
        let Some(n) = pending.pop() else {
            if tree.height() != self.height {
                return Ok(true);
            }
            if *self.budget == 0 {
                return Err(OracleError::CombinatorialCap);
            }
            *self.budget -= 1;
            return Ok((self.f)(&tree));
        };
        let v = tree.vertex(n);
        let succ = self.game.successors(v);
        let depth = tree.depth(n);
        for mask in 1..1u64 << succ.len() {
            let kept: Vec<Vertex> = succ
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, &u)| u)
                .collect();
            if depth < self.height {
                let mut t = tree.clone();
                let mut next = pending.clone();
                for &u in &kept {
                    next.push(t.add_child(n, u));
                }
                if !self.expand(t, next)? {
                    return Ok(false);
                }
            }
            if n == tree.root() {
                continue;
            }
            // A leaf picks, for each kept vertex, one proper ancestor on it.
            let ancestors = proper_ancestors(&tree, n);
            let options: Vec<Vec<NodeId>> = kept
                .iter()
                .map(|&u| {
                    ancestors
                        .iter()
                        .copied()
                        .filter(|&a| tree.vertex(a) == u)
                        .collect()
                })
                .collect();
            if options.iter().any(Vec::is_empty) {
                continue;
            }
            let total: usize = options.iter().map(Vec::len).product();
            for mut k in 0..total {
                let links = options
                    .iter()
                    .map(|o| {
                        let a = o[k % o.len()];
                        k /= o.len();
                        a
                    })
                    .collect();
                let mut t = tree.clone();
                t.set_links(n, links);
                if !self.expand(t, pending.clone())? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

fn proper_ancestors(tree: &SymbolicTree, n: NodeId) -> Vec<NodeId> {
    let mut out = Vec::new();
    let mut cur = tree.node(n).parent;
    while let Some(p) = cur {
        out.push(p);
        cur = tree.node(p).parent;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SmallWitness {
    Tree(SymbolicTree),
    Forest(SymbolicForest),
}

/// First witness of height at most `height_cap` found by brute force, trees of smaller height first.
pub fn enumerate_small_witnesses(
    game: &ReachabilityGame,
    height_cap: usize,
    thresholds: &Thresholds,
    mode: WinMode,
    concept: Concept,
    budget: u64,
) -> Result<Option<SmallWitness>, OracleError> {
    let mut tree_budget = budget;
    let mut forest_budget = budget;
    let mut found = None;
    for h in 1..=height_cap {
        let mut error = None;
        let mut f = |t: &SymbolicTree| {
            let outcome = match concept {
                Concept::Nash => Ok(
                    ne_witness(game, t, thresholds, mode).then(|| SmallWitness::Tree(t.clone()))
                ),
                Concept::Subgame => {
                    forest_around(game, t, height_cap, thresholds, mode, &mut forest_budget)
                        .map(|f| f.map(SmallWitness::Forest))
                }
            };
            match outcome {
                Ok(Some(w)) => {
                    found = Some(w);
                    false
                }
                Ok(None) => true,
                Err(e) => {
                    error = Some(e);
                    false
                }
            }
        };
        for_each_tree(game, game.init(), h, &mut tree_budget, &mut f)?;
        if let Some(e) = error {
            return Err(e);
        }
        if found.is_some() {
            return Ok(found);
        }
    }
    Ok(None)
}

/// A good tree meeting the main bounds and the winning mode, links agreeing on bounded penalties.
pub fn ne_witness(
    game: &ReachabilityGame,
    t: &SymbolicTree,
    thresholds: &Thresholds,
    mode: WinMode,
) -> bool {
    let tracked: PlayerSet = game
        .player_ids()
        .filter(|&i| thresholds.main_of(i).is_finite())
        .collect();
    if compute_labels(game, t, game.initial_winners(), tracked).is_err() {
        return false;
    }
    if !game
        .player_ids()
        .all(|i| tree_penalty(game, t, i) <= thresholds.main_of(i))
    {
        return false;
    }
    if !TreeAnalysis::new(game, t, game.initial_winners()).check_mode(mode) {
        return false;
    }
    check_good_tree(game, t).unwrap_or(false)
}

/// Completes `main` into a good forest by trying every assignment of small trees to the indices
/// it needs.
fn forest_around(
    game: &ReachabilityGame,
    main: &SymbolicTree,
    height_cap: usize,
    thresholds: &Thresholds,
    mode: WinMode,
    budget: &mut u64,
) -> Result<Option<SymbolicForest>, OracleError> {
    let main_tracked: PlayerSet = game
        .player_ids()
        .filter(|&i| thresholds.main_of(i).is_finite())
        .collect();
    if compute_labels(game, main, game.initial_winners(), main_tracked).is_err()
        || !game
            .player_ids()
            .all(|i| tree_penalty(game, main, i) <= thresholds.main_of(i))
        || !TreeAnalysis::new(game, main, game.initial_winners()).check_mode(mode)
    {
        return Ok(None);
    }
    let bounded = game
        .player_ids()
        .any(|i| thresholds.retaliation_of(i).is_finite());
    let mut need: BTreeSet<TreeIndex> = if bounded {
        compute_out_set(game, main)
    } else {
        BTreeSet::new()
    };
    need.extend(jumps(game, main, game.initial_winners()));
    let mut forest = SymbolicForest::new(main.clone());
    let mut search = ForestSearch {
        game,
        height_cap,
        thresholds,
        mode,
        budget,
        candidates: BTreeMap::new(),
    };
    if search.assign(&mut forest, need)? {
        Ok(Some(forest))
    } else {
        Ok(None)
    }
}

fn jumps(game: &ReachabilityGame, tree: &SymbolicTree, pre: PlayerSet) -> BTreeSet<TreeIndex> {
    let unf = Unfolding::new(game, tree, pre);
    let mut out = BTreeSet::new();
    for s in 0..unf.len() {
        let (n, w) = unf.state(s);
        for u in tree.blocked_set(game, n) {
            out.insert(index_of_move(game, tree.vertex(n), u, w));
        }
    }
    out
}

struct ForestSearch<'a> {
    game: &'a ReachabilityGame,
    height_cap: usize,
    thresholds: &'a Thresholds,
    mode: WinMode,
    budget: &'a mut u64,
    candidates: BTreeMap<TreeIndex, Vec<SymbolicTree>>,
}

impl ForestSearch<'_> {
    fn candidates(&mut self, x: TreeIndex) -> Result<Vec<SymbolicTree>, OracleError> {
        if let Some(c) = self.candidates.get(&x) {
            return Ok(c.clone());
        }
        let tracked: PlayerSet = self
            .game
            .player_ids()
            .filter(|&i| self.thresholds.retaliation_of(i).is_finite())
            .collect();
        let mut out = Vec::new();
        for h in 1..=self.height_cap {
            for_each_tree(self.game, x.vertex, h, self.budget, &mut |t| {
                if compute_labels(self.game, t, x.winners, tracked).is_ok() {
                    out.push(t.clone());
                }
                true
            })?;
        }
        self.candidates.insert(x, out.clone());
        Ok(out)
    }

    fn assign(
        &mut self,
        forest: &mut SymbolicForest,
        mut need: BTreeSet<TreeIndex>,
    ) -> Result<bool, OracleError> {
        need.retain(|x| !forest.trees.contains_key(x));
        let Some(&x) = need.iter().next() else {
            let report = match check_good_forest(self.game, forest, self.thresholds, self.mode) {
                Ok(r) => r,
                Err(_) => return Ok(false),
            };
            return Ok(report.good);
        };
        for t in self.candidates(x)? {
            if *self.budget == 0 {
                return Err(OracleError::CombinatorialCap);
            }
            *self.budget -= 1;
            let mut more = need.clone();
            more.extend(jumps(self.game, &t, x.winners));
            forest.trees.insert(x, t);
            if self.assign(forest, more)? {
                return Ok(true);
            }
            forest.trees.remove(&x);
        }
        Ok(false)
    }
}
