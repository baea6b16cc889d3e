//! Finite-memory multi-strategy profiles realizing witnesses.

use std::collections::HashMap;

use super::analysis::{check_good_tree, Unfolding};
use super::forest::{check_good_forest, index_of_move, SymbolicForest, TreeIndex};
use super::tree::SymbolicTree;
use super::{WinMode, WitnessError};
use crate::game::{ReachabilityGame, Vertex};
use crate::penalty::Thresholds;
use crate::players::Player;
use crate::zero_sum::Punishments;

pub type MachineState = usize;

/// Memory states with a choice of successors per (state, current vertex) and an update per
/// (state, next vertex). The state is read before moving and updated with the vertex moved to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiStrategyMachine {
    pub initial: MachineState,
    pub state_names: Vec<String>,
    choose: Vec<Vec<Vec<Vertex>>>,
    update: Vec<Vec<MachineState>>,
}

impl MultiStrategyMachine {
    pub fn new(
        initial: MachineState,
        state_names: Vec<String>,
        choose: Vec<Vec<Vec<Vertex>>>,
        update: Vec<Vec<MachineState>>,
    ) -> Self {
        MultiStrategyMachine {
            initial,
            state_names,
            choose,
            update,
        }
    }

    /// True when every choice is a single successor, i.e. the machine is a strategy profile.
    pub fn is_deterministic(&self) -> bool {
        self.choose.iter().flatten().all(|c| c.len() == 1)
    }

    pub fn state_count(&self) -> usize {
        self.choose.len()
    }

    pub fn choose(&self, s: MachineState, v: Vertex) -> &[Vertex] {
        &self.choose[s][v]
    }

    pub fn update(&self, s: MachineState, u: Vertex) -> MachineState {
        self.update[s][u]
    }

    /// One state allowing the given sets everywhere.
    pub fn memoryless(choice: Vec<Vec<Vertex>>) -> Self {
        let n = choice.len();
        MultiStrategyMachine {
            initial: 0,
            state_names: vec!["s0".into()],
            choose: vec![choice],
            update: vec![vec![0; n]],
        }
    }

    /// Checks that every choice is a non-empty set of successors and every update is a state.
    pub fn validate(&self, game: &ReachabilityGame) -> Result<(), String> {
        for s in 0..self.state_count() {
            for v in game.vertices() {
                let c = &self.choose[s][v];
                if c.is_empty() || c.iter().any(|&u| !game.has_edge(v, u)) {
                    return Err(format!("state {s}: bad choice at vertex {}", game.name(v)));
                }
                if self.update[s][v] >= self.state_count() {
                    return Err(format!(
                        "state {s}: update on {} leaves the machine",
                        game.name(v)
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Machine for a tree without checking that the tree is good: tree nodes, then one punishment
/// state per player.
pub fn ne_machine_unchecked(game: &ReachabilityGame, tree: &SymbolicTree) -> MultiStrategyMachine {
    let nodes = tree.len();
    let punish = |i: Player| nodes + i - 1;
    let pun = Punishments::new(game);
    let mut choose = Vec::with_capacity(nodes + game.player_count());
    let mut update = Vec::with_capacity(nodes + game.player_count());
    let mut names = Vec::new();
    for n in tree.node_ids() {
        let here = tree.vertex(n);
        let kept: Vec<Vertex> = tree
            .unfolding_successors(n)
            .iter()
            .map(|&m| tree.vertex(m))
            .collect();
        choose.push(
            game.vertices()
                .map(|v| {
                    if v == here {
                        kept.clone()
                    } else {
                        game.successors(v).to_vec()
                    }
                })
                .collect(),
        );
        update.push(
            game.vertices()
                .map(|u| {
                    tree.unfolding_successors(n)
                        .iter()
                        .copied()
                        .find(|&m| tree.vertex(m) == u)
                        .unwrap_or_else(|| punish(game.owner(here)))
                })
                .collect(),
        );
        names.push(format!("node {n}"));
    }
    for i in game.player_ids() {
        choose.push(
            game.vertices()
                .map(|v| match pun.safety[i - 1].get(&v) {
                    Some(&u) if game.owner(v) != i => vec![u],
                    _ => game.successors(v).to_vec(),
                })
                .collect(),
        );
        update.push(vec![punish(i); game.vertex_count()]);
        names.push(format!("punish {i}"));
    }
    MultiStrategyMachine {
        initial: tree.root(),
        state_names: names,
        choose,
        update,
    }
}

/// Follows the tree while play agrees with it; after a blocked move by player `i` the others
/// keep `i` out of its winning region.
pub fn extract_multistrategy_ne(
    game: &ReachabilityGame,
    tree: &SymbolicTree,
) -> Result<MultiStrategyMachine, WitnessError> {
    if !check_good_tree(game, tree)? {
        return Err(WitnessError::NotGood("tree is not good".into()));
    }
    Ok(ne_machine_unchecked(game, tree))
}

/// Machine for a forest without checking goodness. States are unfolding states of each tree;
/// a blocked move jumps to the root of the tree indexed by that move.
pub fn spe_machine_unchecked(
    game: &ReachabilityGame,
    forest: &SymbolicForest,
) -> Result<MultiStrategyMachine, WitnessError> {
    let keys: Vec<Option<TreeIndex>> = std::iter::once(None)
        .chain(forest.trees.keys().copied().map(Some))
        .collect();
    let tree_of = |k: &Option<TreeIndex>| match k {
        None => &forest.main,
        Some(x) => &forest.trees[x],
    };
    let unfoldings: Vec<Unfolding> = keys
        .iter()
        .map(|k| {
            let pre = k.map_or(game.initial_winners(), |x| x.winners);
            Unfolding::new(game, tree_of(k), pre)
        })
        .collect();
    let mut offset = Vec::with_capacity(keys.len());
    let mut total = 0;
    for u in &unfoldings {
        offset.push(total);
        total += u.len();
    }
    let root_state: HashMap<TreeIndex, usize> = keys
        .iter()
        .enumerate()
        .filter_map(|(k, x)| x.map(|x| (x, offset[k])))
        .collect();

    let mut choose = Vec::with_capacity(total);
    let mut update = Vec::with_capacity(total);
    let mut names = Vec::with_capacity(total);
    for (k, key) in keys.iter().enumerate() {
        let tree = tree_of(key);
        let unf = &unfoldings[k];
        for s in 0..unf.len() {
            let (n, w) = unf.state(s);
            let here = tree.vertex(n);
            let kept: Vec<Vertex> = tree
                .unfolding_successors(n)
                .iter()
                .map(|&m| tree.vertex(m))
                .collect();
            choose.push(
                game.vertices()
                    .map(|v| {
                        if v == here {
                            kept.clone()
                        } else {
                            game.successors(v).to_vec()
                        }
                    })
                    .collect(),
            );
            let mut row = Vec::with_capacity(game.vertex_count());
            for u in game.vertices() {
                let inside = tree
                    .unfolding_successors(n)
                    .iter()
                    .copied()
                    .find(|&m| tree.vertex(m) == u);
                let target = match inside {
                    Some(m) => {
                        offset[k]
                            + unf
                                .find(m, w.union(game.targets_at(u)))
                                .expect("successor state exists")
                    }
                    None if game.has_edge(here, u) => {
                        let x = index_of_move(game, here, u, w);
                        *root_state.get(&x).ok_or(WitnessError::MissingTree(x))?
                    }
                    // Not a move of the game from here; never taken.
                    None => offset[k] + s,
                };
                row.push(target);
            }
            update.push(row);
            names.push(match key {
                None => format!("main node {n}"),
                Some(x) => format!("tree {x} node {n}"),
            });
        }
    }
    Ok(MultiStrategyMachine {
        initial: 0,
        state_names: names,
        choose,
        update,
    })
}

pub fn extract_multistrategy_spe(
    game: &ReachabilityGame,
    forest: &SymbolicForest,
) -> Result<MultiStrategyMachine, WitnessError> {
    let rep = check_good_forest(
        game,
        forest,
        &Thresholds::unbounded(game.player_count()),
        WinMode::Unconstrained,
    )?;
    if !rep.good {
        return Err(WitnessError::NotGood(rep.violations.join("; ")));
    }
    spe_machine_unchecked(game, forest)
}
