//! The two example games and hand-built witnesses over them, shared by tests.

use std::collections::BTreeMap;

use crate::game::{GameFile, ReachabilityGame, Vertex};
use crate::players::PlayerSet;
use crate::witness::forest::{compute_out_set, SymbolicForest, TreeIndex};
use crate::witness::tree::{NodeId, SymbolicTree};

pub const G1_JSON: &str = include_str!("../fixtures/g1.json");
pub const G2_JSON: &str = include_str!("../fixtures/g2.json");

pub fn g1_file() -> GameFile {
    serde_json::from_str(G1_JSON).expect("bundled fixture parses")
}

pub fn g2_file() -> GameFile {
    serde_json::from_str(G2_JSON).expect("bundled fixture parses")
}

pub fn g1() -> ReachabilityGame {
    ReachabilityGame::from_file(&g1_file()).expect("bundled fixture is valid")
}

pub fn g2() -> ReachabilityGame {
    ReachabilityGame::from_file(&g2_file()).expect("bundled fixture is valid")
}

fn v(game: &ReachabilityGame, name: &str) -> Vertex {
    game.vertex(name).expect("fixture vertex")
}

/// Builds a tree from a nested description: `(vertex, children)` where a childless entry at
/// depth > 0 becomes a leaf linking to the nearest ancestor on the successor vertex.
fn build(game: &ReachabilityGame, shape: &Shape) -> SymbolicTree {
    let mut t = SymbolicTree::new(v(game, shape.0));
    fn go(game: &ReachabilityGame, t: &mut SymbolicTree, at: NodeId, kids: &[Shape]) {
        for k in kids {
            let c = t.add_child(at, v(game, k.0));
            if k.1.is_empty() {
                let links = k.2.iter().map(|name| nearest(game, t, c, name)).collect();
                t.set_links(c, links);
            } else {
                go(game, t, c, &k.1);
            }
        }
    }
    go(game, &mut t, 0, &shape.1);
    t
}

fn nearest(game: &ReachabilityGame, t: &SymbolicTree, n: NodeId, name: &str) -> NodeId {
    let want = v(game, name);
    let mut cur = t.node(n).parent;
    while let Some(p) = cur {
        if t.vertex(p) == want {
            return p;
        }
        cur = t.node(p).parent;
    }
    panic!("no ancestor at {name}")
}

/// (vertex, children, link vertices for leaves)
struct Shape(&'static str, Vec<Shape>, Vec<&'static str>);

fn leaf(at: &'static str, to: &[&'static str]) -> Shape {
    Shape(at, vec![], to.to_vec())
}

fn node(at: &'static str, kids: Vec<Shape>) -> Shape {
    Shape(at, kids, vec![])
}

fn v3_loop() -> Shape {
    node("v3", vec![leaf("v3", &["v3"])])
}

/// The permissive NE drawn for the weighted example: player 1 blocks (v0,v5) and (v1,v4).
pub fn drawn_ne_tree() -> SymbolicTree {
    let g = g2();
    build(
        &g,
        &node(
            "v0",
            vec![node("v1", vec![v3_loop()]), node("v2", vec![v3_loop()])],
        ),
    )
}

/// The same NE with (v1,v4) allowed, so player 1 only pays for (v0,v5).
pub fn improved_ne_tree() -> SymbolicTree {
    let g = g2();
    build(
        &g,
        &node(
            "v0",
            vec![
                node("v1", vec![v3_loop(), node("v4", vec![v3_loop()])]),
                node("v2", vec![v3_loop()]),
            ],
        ),
    )
}

/// After both players have won, player 1 steers away from v5 for good. Returning to v5 would put
/// one of player 2's blocked edges on a cycle and make its penalty infinite.
fn settled_v0() -> Shape {
    node(
        "v0",
        vec![
            node("v1", vec![v3_loop(), node("v4", vec![v3_loop()])]),
            node("v2", vec![v3_loop()]),
        ],
    )
}

/// Main tree of the permissive SPE: player 2 keeps only (v5,v6) until both players have won.
pub fn drawn_spe_main_tree() -> SymbolicTree {
    let g = g2();
    build(
        &g,
        &node(
            "v0",
            vec![
                node("v1", vec![v3_loop(), node("v4", vec![v3_loop()])]),
                node("v2", vec![v3_loop()]),
                node("v5", vec![node("v6", vec![settled_v0()])]),
            ],
        ),
    )
}

/// Tree over G1 that leaves v0 at once; player 1 pays 1 for the blocked self-loop.
pub fn leave_at_once_tree() -> SymbolicTree {
    let g = g1();
    build(&g, &node("v0", vec![node("v1", vec![leaf("v1", &["v1"])])]))
}

/// Unrolls a choice function depending on the vertex and the winners so far. A node becomes a
/// leaf once every chosen successor sits on a proper ancestor with the same winners.
pub fn unroll(
    game: &ReachabilityGame,
    root: Vertex,
    pre_winners: PlayerSet,
    choose: &dyn Fn(Vertex, PlayerSet) -> Vec<Vertex>,
) -> SymbolicTree {
    let mut t = SymbolicTree::new(root);
    let mut winners = vec![pre_winners.union(game.targets_at(root))];
    let mut stack = vec![0];
    while let Some(n) = stack.pop() {
        assert!(t.depth(n) < 64, "choice function does not close");
        let w = winners[n];
        let succ = choose(t.vertex(n), w);
        let links: Option<Vec<NodeId>> = succ
            .iter()
            .map(|&u| {
                let mut cur = t.node(n).parent;
                while let Some(p) = cur {
                    if t.vertex(p) == u && winners[p] == w {
                        return Some(p);
                    }
                    cur = t.node(p).parent;
                }
                None
            })
            .collect();
        match links {
            Some(l) if n != 0 => t.set_links(n, l),
            _ => {
                for u in succ {
                    let c = t.add_child(n, u);
                    winners.push(w.union(game.targets_at(u)));
                    stack.push(c);
                }
            }
        }
    }
    t
}

/// The memoryless profile of the SPE example. `keep_v9` decides whether player 1 also allows
/// (v7,v9) before it has won.
pub fn drawn_spe_choice(
    game: &ReachabilityGame,
    keep_v9: bool,
) -> impl Fn(Vertex, PlayerSet) -> Vec<Vertex> + '_ {
    move |x, w| match game.name(x) {
        "v5" => vec![v(game, "v6")],
        "v7" if !keep_v9 && w != game.all_players() => vec![v(game, "v8")],
        _ => game.successors(x).to_vec(),
    }
}

/// Main tree of the SPE example plus a tree for every deviation index.
pub fn drawn_spe_forest(keep_v9: bool) -> SymbolicForest {
    let g = g2();
    let main = drawn_spe_main_tree();
    let choose = drawn_spe_choice(&g, keep_v9);
    let trees: BTreeMap<TreeIndex, SymbolicTree> = compute_out_set(&g, &main)
        .into_iter()
        .map(|x| {
            let t = unroll(&g, x.vertex, x.winners, &choose);
            (x, t)
        })
        .collect();
    SymbolicForest { main, trees }
}

/// The NE outcome as a main tree, with the coalition punishment trees of its profile.
pub fn drawn_ne_forest() -> SymbolicForest {
    let g = g2();
    let main = drawn_ne_tree();
    let punish = |x: Vertex, _: PlayerSet| match g.name(x) {
        "v5" => vec![x],
        "v0" => vec![v(&g, "v1"), v(&g, "v2")],
        "v1" => vec![v(&g, "v3")],
        _ => g.successors(x).to_vec(),
    };
    let trees = compute_out_set(&g, &main)
        .into_iter()
        .map(|x| {
            let t = unroll(&g, x.vertex, x.winners, &punish);
            (x, t)
        })
        .collect();
    SymbolicForest { main, trees }
}
