//! Winner sets and accumulated penalties along tree paths.

use super::tree::{NodeId, SymbolicTree};
use super::WitnessError;
use crate::game::ReachabilityGame;
use crate::players::PlayerSet;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeLabel {
    /// Players that have won on the path to this node, pre-tree winners included.
    pub winners: PlayerSet,
    /// Accumulated blocked weight per player (index 0 is player 1), excluding this node's own moves.
    pub penalty: Vec<u64>,
}

/// Labels obtained by walking down the tree, with no consistency check on leaf links.
pub fn path_labels(
    game: &ReachabilityGame,
    tree: &SymbolicTree,
    pre_winners: PlayerSet,
) -> Vec<NodeLabel> {
    let mut labels: Vec<Option<NodeLabel>> = vec![None; tree.len()];
    for n in tree.preorder() {
        let node = tree.node(n);
        let label = match node.parent {
            None => NodeLabel {
                winners: pre_winners.union(game.targets_at(node.vertex)),
                penalty: vec![0; game.player_count()],
            },
            Some(p) => {
                let parent = labels[p].as_ref().expect("preorder visits parents first");
                let mut penalty = parent.penalty.clone();
                let owner = game.owner(tree.vertex(p));
                penalty[owner - 1] += tree.blocked_weight(game, p);
                NodeLabel {
                    winners: parent.winners.union(game.targets_at(node.vertex)),
                    penalty,
                }
            }
        };
        labels[n] = Some(label);
    }
    labels
        .into_iter()
        .map(|l| l.expect("every node is reachable"))
        .collect()
}

/// Path labels, plus the requirement that every leaf link joins nodes with equal winners and
/// equal penalties of the `tracked` players.
pub fn compute_labels(
    game: &ReachabilityGame,
    tree: &SymbolicTree,
    pre_winners: PlayerSet,
    tracked: PlayerSet,
) -> Result<Vec<NodeLabel>, WitnessError> {
    let labels = path_labels(game, tree, pre_winners);
    for leaf in tree.node_ids().filter(|&n| tree.is_leaf(n)) {
        for &t in &tree.node(leaf).leaf_links {
            if !links_agree(&labels, leaf, t, tracked) {
                return Err(WitnessError::InconsistentLink { leaf, target: t });
            }
        }
    }
    Ok(labels)
}

fn links_agree(labels: &[NodeLabel], leaf: NodeId, target: NodeId, tracked: PlayerSet) -> bool {
    let (a, b) = (&labels[leaf], &labels[target]);
    a.winners == b.winners && tracked.iter().all(|i| a.penalty[i - 1] == b.penalty[i - 1])
}
