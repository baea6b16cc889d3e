//! Two-player zero-sum reachability: one player against the coalition of all others.

use std::collections::{BTreeMap, VecDeque};

use crate::game::{ReachabilityGame, Vertex};
use crate::players::{Player, PlayerSet};

/// Vertices from which player `i` can force a visit to its target set.
pub fn winning_region(game: &ReachabilityGame, i: Player) -> Vec<bool> {
    let n = game.vertex_count();
    let mut preds: Vec<Vec<Vertex>> = vec![Vec::new(); n];
    for v in game.vertices() {
        for &u in game.successors(v) {
            preds[u].push(v);
        }
    }
    let mut remaining: Vec<usize> = game.vertices().map(|v| game.successors(v).len()).collect();
    let mut won = vec![false; n];
    let mut queue = VecDeque::new();
    for v in game.vertices() {
        if game.is_target(i, v) {
            won[v] = true;
            queue.push_back(v);
        }
    }
    while let Some(u) = queue.pop_front() {
        for &v in &preds[u] {
            if won[v] {
                continue;
            }
            remaining[v] -= 1;
            if game.owner(v) == i || remaining[v] == 0 {
                won[v] = true;
                queue.push_back(v);
            }
        }
    }
    won
}

/// For every coalition vertex outside the region of `i`, a successor that stays outside it.
pub fn coalition_safety_strategy(game: &ReachabilityGame, i: Player) -> BTreeMap<Vertex, Vertex> {
    let won = winning_region(game, i);
    safety_map(game, i, &won)
}

fn safety_map(game: &ReachabilityGame, i: Player, won: &[bool]) -> BTreeMap<Vertex, Vertex> {
    game.vertices()
        .filter(|&v| game.owner(v) != i && !won[v])
        .map(|v| {
            let stay = game
                .successors(v)
                .iter()
                .copied()
                .find(|&u| !won[u])
                .expect("the complement of an attractor is a trap for the attracting player");
            (v, stay)
        })
        .collect()
}

/// Winning regions of every player, used for deviation lookups in the whole-game setting.
#[derive(Clone, Debug)]
pub struct GammaTable {
    regions: Vec<Vec<bool>>,
}

impl GammaTable {
    pub fn lookup(&self, i: Player, u: Vertex, winners: PlayerSet) -> bool {
        winners.contains(i) || self.regions[i - 1][u]
    }

    pub fn region(&self, i: Player) -> &[bool] {
        &self.regions[i - 1]
    }
}

pub fn gamma_game(game: &ReachabilityGame) -> GammaTable {
    GammaTable {
        regions: game.player_ids().map(|i| winning_region(game, i)).collect(),
    }
}

/// Coalition punishment maps and regions for all players.
#[derive(Clone, Debug)]
pub struct Punishments {
    pub gamma: GammaTable,
    pub safety: Vec<BTreeMap<Vertex, Vertex>>,
}

impl Punishments {
    pub fn new(game: &ReachabilityGame) -> Self {
        let gamma = gamma_game(game);
        let safety = game
            .player_ids()
            .map(|i| safety_map(game, i, gamma.region(i)))
            .collect();
        Punishments { gamma, safety }
    }
}
