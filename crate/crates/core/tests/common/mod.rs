//! Random small games and trees shared by the integration suites.
#![allow(dead_code)]

use std::collections::BTreeMap;

use permissive::game::{EdgeEntry, GameFile, VertexEntry};
use permissive::witness::{NodeId, SymbolicTree, WinMode};
use permissive::{Penalty, PlayerSet, ReachabilityGame};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A game on at most `max_vertices` vertices with two players and weights in {1, 2}.
pub fn random_game(rng: &mut impl Rng, max_vertices: usize) -> ReachabilityGame {
    let n = rng.gen_range(1..=max_vertices);
    let name = |v: usize| format!("v{v}");
    let vertices = (0..n)
        .map(|v| VertexEntry {
            id: name(v),
            owner: Some(rng.gen_range(1..=2)),
        })
        .collect();
    let mut edges = Vec::new();
    for v in 0..n {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(rng);
        let degree = rng.gen_range(1..=n.min(3));
        for &u in &all[..degree] {
            edges.push(EdgeEntry {
                from: name(v),
                to: name(u),
                weight: Some(rng.gen_range(1..=2)),
            });
        }
    }
    let mut targets = BTreeMap::new();
    for i in 1..=2 {
        let t: Vec<String> = (0..n).filter(|_| rng.gen_bool(0.3)).map(name).collect();
        targets.insert(i.to_string(), t);
    }
    let file = GameFile {
        players: 2,
        vertices,
        edges,
        targets,
        init: name(0),
    };
    ReachabilityGame::from_file(&file).expect("generated games are valid")
}

pub fn corpus(seed: u64, count: usize, max_vertices: usize) -> Vec<ReachabilityGame> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| random_game(&mut r, max_vertices))
        .collect()
}

/// A random symbolic tree of height at most `max_height`, or None when the attempt could not
/// close every branch.
pub fn random_tree(
    game: &ReachabilityGame,
    rng: &mut impl Rng,
    max_height: usize,
) -> Option<SymbolicTree> {
    let mut t = SymbolicTree::new(game.init());
    let mut pending: Vec<NodeId> = vec![t.root()];
    while let Some(n) = pending.pop() {
        let v = t.vertex(n);
        let mut succ = game.successors(v).to_vec();
        succ.shuffle(rng);
        let keep = rng.gen_range(1..=succ.len());
        let kept = &succ[..keep];
        let ancestors = ancestors(&t, n);
        let links: Option<Vec<NodeId>> = kept
            .iter()
            .map(|&u| {
                let on: Vec<NodeId> = ancestors
                    .iter()
                    .copied()
                    .filter(|&a| t.vertex(a) == u)
                    .collect();
                on.choose(rng).copied()
            })
            .collect();
        let depth = t.depth(n);
        match links {
            Some(l) if n != t.root() && (depth >= max_height || rng.gen_bool(0.5)) => {
                t.set_links(n, l)
            }
            _ if depth < max_height => {
                for &u in kept {
                    pending.push(t.add_child(n, u));
                }
            }
            _ => return None,
        }
    }
    Some(t)
}

fn ancestors(t: &SymbolicTree, n: NodeId) -> Vec<NodeId> {
    let mut out = Vec::new();
    let mut cur = t.node(n).parent;
    while let Some(p) = cur {
        out.push(p);
        cur = t.node(p).parent;
    }
    out
}

/// Every winning requirement over two players.
pub fn modes() -> Vec<WinMode> {
    let sets = [
        PlayerSet::singleton(1),
        PlayerSet::singleton(2),
        PlayerSet::all(2),
    ];
    std::iter::once(WinMode::Unconstrained)
        .chain(sets.iter().map(|&w| WinMode::Weak(w)))
        .chain(sets.iter().map(|&w| WinMode::Strong(w)))
        .collect()
}

/// Bounds 0, 1, 2 and unbounded.
pub fn bound_values() -> [Penalty; 4] {
    [
        Penalty::Finite(0),
        Penalty::Finite(1),
        Penalty::Finite(2),
        Penalty::Infinite,
    ]
}
