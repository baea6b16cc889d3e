//! Reference decision for the Nash problems by a fixpoint on a finite game of node labels.
//!
//! A position is what a tree node has to know about its future: vertex, winners so far, players
//! whose every continuation must still win, players none of whose continuations may win,
//! penalties of bounded players and whether this branch must still make the required
//! players win. The builder picks the kept successors (and which child carries that last duty);
//! an adversary picks the branch. The builder wins when every branch eventually has no
//! pending duty, a Büchi condition solved by the usual nested fixpoint. No height bound is
//! involved.

use std::collections::{BTreeSet, HashMap};

use super::OracleError;

use crate::game::{ReachabilityGame, Vertex};
use crate::penalty::Thresholds;
use crate::players::{Player, PlayerSet};
use crate::witness::WinMode;
use crate::zero_sum::{gamma_game, GammaTable};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Position {
    vertex: Vertex,
    winners: PlayerSet,
    all: PlayerSet,
    none: PlayerSet,
    penalty: Vec<u64>,
    flag: bool,
}

struct LabelGame {
    gamma: GammaTable,
    bounds: Vec<(Player, u64)>,
    required: PlayerSet,
    root: Position,
}

impl LabelGame {
    fn new(game: &ReachabilityGame, thresholds: &Thresholds, mode: WinMode) -> Self {
        let bounds: Vec<(Player, u64)> = game
            .player_ids()
            .filter_map(|i| thresholds.main_of(i).finite().map(|m| (i, m)))
            .collect();
        let gamma = gamma_game(game);
        let (required, strong, weak) = match mode {
            WinMode::Unconstrained => (PlayerSet::EMPTY, false, false),
            WinMode::Weak(w) => (w, false, true),
            WinMode::Strong(w) => (w, true, false),
        };
        let w0 = game.initial_winners();
        let root = Position {
            vertex: game.init(),
            winners: w0,
            all: if strong {
                required.difference(w0)
            } else {
                PlayerSet::EMPTY
            },
            none: PlayerSet::EMPTY,
            penalty: vec![0; bounds.len()],
            flag: weak && !required.is_subset(w0),
        };
        LabelGame {
            gamma,
            bounds,
            required,
            root,
        }
    }

    fn moves(&self, game: &ReachabilityGame, x: &Position) -> Vec<Vec<Position>> {
        successors(game, &self.gamma, &self.bounds, self.required, x)
    }
}

/// Whether some tree, finite or not, meets the Nash requirements: the semantic question.
pub fn decide_ne_fixpoint(game: &ReachabilityGame, thresholds: &Thresholds, mode: WinMode) -> bool {
    let lg = LabelGame::new(game, thresholds, mode);
    let root = lg.root.clone();
    let mut index: HashMap<Position, usize> = HashMap::from([(root.clone(), 0)]);
    let mut positions = vec![root];
    let mut moves: Vec<Vec<Vec<usize>>> = Vec::new();
    let mut k = 0;
    while k < positions.len() {
        let x = positions[k].clone();
        k += 1;
        let mut here = Vec::new();
        for children in lg.moves(game, &x) {
            let ids = children
                .into_iter()
                .map(|c| {
                    *index.entry(c.clone()).or_insert_with(|| {
                        positions.push(c);
                        positions.len() - 1
                    })
                })
                .collect();
            here.push(ids);
        }
        moves.push(here);
    }

    let good: Vec<bool> = positions
        .iter()
        .map(|x| x.all.is_empty() && !x.flag)
        .collect();
    let n = positions.len();
    let mut outer = vec![true; n];
    loop {
        let mut inner = vec![false; n];
        loop {
            let next: Vec<bool> = (0..n)
                .map(|x| {
                    moves[x]
                        .iter()
                        .any(|m| m.iter().all(|&c| (good[x] && outer[c]) || inner[c]))
                })
                .collect();
            if next == inner {
                break;
            }
            inner = next;
        }
        if inner == outer {
            break;
        }
        outer = inner;
    }
    outer[0]
}

/// Whether a finite symbolic tree meets the Nash requirements, with no bound on its height.
///
/// Positions pair a label with the labels of the proper ancestors of the node that could
/// still be linked to. A node may first bar more players from winning, then become a leaf when
/// every successor it keeps would carry an ancestor's label and no duty is pending there. Only finite trees count, so this is a least fixpoint over the reachable
/// positions; `cap` bounds how many positions are built.
pub fn decide_ne_symbolic(
    game: &ReachabilityGame,
    thresholds: &Thresholds,
    mode: WinMode,
    cap: usize,
) -> Result<bool, OracleError> {
    let lg = LabelGame::new(game, thresholds, mode);
    type Node = (Position, BTreeSet<Position>);
    let root: Node = (lg.root.clone(), BTreeSet::new());
    let mut index: HashMap<Node, usize> = HashMap::from([(root.clone(), 0)]);
    let mut nodes = vec![root];
    // Per position: for each move, whether it may end the branch here, and the children.
    let mut moves: Vec<Vec<(bool, Vec<usize>)>> = Vec::new();
    let mut k = 0;
    while k < nodes.len() {
        let (label, above) = nodes[k].clone();
        let is_root = k == 0;
        k += 1;
        let mut here = Vec::new();
        for (label, children) in strengthenings(game, &label)
            .into_iter()
            .flat_map(|s| lg.moves(game, &s).into_iter().map(move |m| (s.clone(), m)))
        {
            // Only labels without pending duties can be linked to.
            let mut below = above.clone();
            if label.all.is_empty() && !label.flag {
                below.insert(label.clone());
            }
            let closes = !is_root
                && children
                    .iter()
                    .all(|c| c.all.is_empty() && !c.flag && above.contains(c));
            let mut ids = Vec::with_capacity(children.len());
            for c in children {
                // Winners, none-sets and penalties never decrease along a branch, so only
                // ancestors agreeing with the child on them can ever be linked to from below it.
                let kept: BTreeSet<Position> = below
                    .iter()
                    .filter(|a| same_level(a, &c))
                    .cloned()
                    .collect();
                let key = (c, kept);
                let id = match index.get(&key) {
                    Some(&id) => id,
                    None => {
                        if nodes.len() >= cap {
                            return Err(OracleError::CombinatorialCap);
                        }
                        nodes.push(key.clone());
                        index.insert(key, nodes.len() - 1);
                        nodes.len() - 1
                    }
                };
                ids.push(id);
            }
            here.push((closes, ids));
        }
        moves.push(here);
    }
    let mut win = vec![false; nodes.len()];
    loop {
        let mut changed = false;
        for x in (0..nodes.len()).rev() {
            if !win[x]
                && moves[x]
                    .iter()
                    .any(|(closes, ids)| *closes || ids.iter().all(|&c| win[c]))
            {
                win[x] = true;
                changed = true;
            }
        }
        if !changed {
            return Ok(win[0]);
        }
    }
}

/// The label, then the label with more players that have not won barred from winning.
fn strengthenings(game: &ReachabilityGame, x: &Position) -> Vec<Position> {
    let open: Vec<Player> = game
        .all_players()
        .difference(x.winners)
        .difference(x.all)
        .difference(x.none)
        .iter()
        .collect();
    (0..1u32 << open.len())
        .map(|mask| {
            let mut none = x.none;
            for (k, &i) in open.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    none = none.with(i);
                }
            }
            Position { none, ..x.clone() }
        })
        .collect()
}

fn same_level(a: &Position, b: &Position) -> bool {
    a.winners == b.winners && a.none == b.none && a.penalty == b.penalty
}

fn successors(
    game: &ReachabilityGame,
    gamma: &GammaTable,
    bounds: &[(Player, u64)],
    required: PlayerSet,
    x: &Position,
) -> Vec<Vec<Position>> {
    let v = x.vertex;
    let i = game.owner(v);
    let succ = game.successors(v);
    let mut out = Vec::new();
    for mask in 1..1u64 << succ.len() {
        let kept: Vec<Vertex> = succ
            .iter()
            .enumerate()
            .filter(|(k, _)| mask >> k & 1 == 1)
            .map(|(_, &u)| u)
            .collect();
        let blocked: Vec<Vertex> = succ.iter().copied().filter(|u| !kept.contains(u)).collect();
        let mut penalty = x.penalty.clone();
        let mut over = false;
        for (slot, &(j, m)) in bounds.iter().enumerate() {
            if j == i {
                penalty[slot] += blocked
                    .iter()
                    .map(|&u| game.weight(v, u).expect("successor"))
                    .sum::<u64>();
                over |= penalty[slot] > m;
            }
        }
        if over {
            continue;
        }
        let mut variants = vec![(x.all, x.none)];
        if !x.winners.contains(i) {
            let forced = blocked
                .iter()
                .any(|&u| gamma.lookup(i, u, x.winners.union(game.targets_at(u))));
            if forced {
                if x.none.contains(i) {
                    continue;
                }
                variants = vec![(x.all.with(i), x.none)];
            } else if kept.len() >= 2 && !x.all.contains(i) && !x.none.contains(i) {
                variants = vec![(x.all.with(i), x.none), (x.all, x.none.with(i))];
            }
        }
        for (all, none) in variants {
            if kept
                .iter()
                .any(|&u| !game.targets_at(u).intersection(none).is_empty())
            {
                continue;
            }
            let carriers: Vec<Option<Vertex>> = if x.flag {
                kept.iter().map(|&u| Some(u)).collect()
            } else {
                vec![None]
            };
            for carrier in carriers {
                let children = kept
                    .iter()
                    .map(|&u| {
                        let winners = x.winners.union(game.targets_at(u));
                        Position {
                            vertex: u,
                            winners,
                            all: all.difference(winners),
                            none,
                            penalty: penalty.clone(),
                            flag: carrier == Some(u) && !required.is_subset(winners),
                        }
                    })
                    .collect();
                out.push(children);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::penalty::Penalty::{self, Finite, Infinite};

    fn th(m: &[Penalty]) -> Thresholds {
        Thresholds::unbounded(m.len()).with_main(m)
    }

    #[test]
    fn weighted_example_decisions() {
        let g = fixtures::g2();
        let free = WinMode::Unconstrained;
        assert!(decide_ne_fixpoint(&g, &th(&[Finite(2), Finite(0)]), free));
        assert!(decide_ne_fixpoint(&g, &th(&[Finite(1), Infinite]), free));
        assert!(decide_ne_fixpoint(&g, &th(&[Finite(0), Infinite]), free));
    }

    #[test]
    fn symbolic_agrees_on_the_examples() {
        let g = fixtures::g2();
        let free = WinMode::Unconstrained;
        for m in [
            [Finite(2), Finite(0)],
            [Finite(1), Infinite],
            [Finite(0), Infinite],
        ] {
            assert!(decide_ne_symbolic(&g, &th(&m), free, 1_000_000).unwrap());
        }
        let g1 = fixtures::g1();
        assert!(!decide_ne_symbolic(&g1, &th(&[Finite(0)]), free, 1_000_000).unwrap());
        assert!(decide_ne_symbolic(&g1, &th(&[Finite(1)]), free, 1_000_000).unwrap());
    }

    #[test]
    fn infinite_full_permission_has_no_symbolic_tree() {
        // v0 may loop or go to v2 and v2 may loop or go back; nothing can be blocked. On the
        // branch that loops on v0 forever no node has an ancestor on v2 to link to.
        let g = ReachabilityGame::from_json(
            r#"{"players": 2,
                "vertices": [{"id": "v0", "owner": 1}, {"id": "v2", "owner": 2}],
                "edges": [{"from": "v0", "to": "v0"}, {"from": "v0", "to": "v2"},
                          {"from": "v2", "to": "v0"}, {"from": "v2", "to": "v2"}],
                "targets": {"2": ["v0"]},
                "init": "v0"}"#,
        )
        .unwrap();
        let m = th(&[Finite(0), Finite(0)]);
        assert!(decide_ne_fixpoint(&g, &m, WinMode::Unconstrained));
        assert!(!decide_ne_symbolic(&g, &m, WinMode::Unconstrained, 1_000_000).unwrap());
    }

    #[test]
    fn single_player_decisions() {
        let g = fixtures::g1();
        assert!(!decide_ne_fixpoint(
            &g,
            &th(&[Finite(0)]),
            WinMode::Unconstrained
        ));
        assert!(decide_ne_fixpoint(
            &g,
            &th(&[Finite(1)]),
            WinMode::Unconstrained
        ));
        assert!(decide_ne_fixpoint(
            &g,
            &th(&[Finite(1)]),
            WinMode::Strong(PlayerSet::singleton(1))
        ));
    }
}
