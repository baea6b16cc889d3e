//! Graphviz rendering of witnesses.

use std::fmt::Write;

use super::forest::{display_index, SymbolicForest};
use super::labels::path_labels;
use super::tree::SymbolicTree;
use super::WitnessError;
use crate::game::ReachabilityGame;
use crate::players::PlayerSet;

/// One digraph: solid edges to children, dashed edges for leaf links, captions "vertex | I | p".
pub fn tree_dot(
    game: &ReachabilityGame,
    tree: &SymbolicTree,
    pre_winners: PlayerSet,
    name: &str,
) -> Result<String, WitnessError> {
    if tree.is_empty() {
        return Err(WitnessError::EmptyWitness);
    }
    let labels = path_labels(game, tree, pre_winners);
    let mut out = String::new();
    writeln!(out, "digraph \"{}\" {{", name.replace('"', "'")).unwrap();
    writeln!(out, "  node [shape=box];").unwrap();
    for n in tree.node_ids() {
        let p: Vec<String> = labels[n].penalty.iter().map(u64::to_string).collect();
        writeln!(
            out,
            "  n{n} [label=\"{} | {} | ({})\"];",
            game.name(tree.vertex(n)),
            labels[n].winners,
            p.join(",")
        )
        .unwrap();
    }
    for n in tree.node_ids() {
        for &c in &tree.node(n).children {
            writeln!(out, "  n{n} -> n{c};").unwrap();
        }
        for &t in &tree.node(n).leaf_links {
            writeln!(out, "  n{n} -> n{t} [style=dashed];").unwrap();
        }
    }
    out.push_str("}\n");
    Ok(out)
}

/// The main tree followed by every indexed tree, in index order.
pub fn forest_dot(
    game: &ReachabilityGame,
    forest: &SymbolicForest,
) -> Result<String, WitnessError> {
    let mut out = tree_dot(game, &forest.main, game.initial_winners(), "main")?;
    for (x, t) in &forest.trees {
        out.push_str(&tree_dot(game, t, x.winners, &display_index(game, x))?);
    }
    Ok(out)
}
