use crate::game::ReachabilityGame;
use crate::penalty::Penalty;
use crate::players::Player;
use crate::witness::{NodeId, SymbolicTree};

/// Tree penalty by walking every unfolding path of up to `2·|nodes| + 1` nodes. A path coming
/// back to a node with a strictly larger penalty than on its earlier visit means the penalty is
/// unbounded.
pub fn brute_force_tree_penalty(
    game: &ReachabilityGame,
    tree: &SymbolicTree,
    i: Player,
) -> Penalty {
    let mut walk = Walk {
        game,
        tree,
        player: i,
        limit: 2 * tree.len() + 1,
        seen_with: vec![None; tree.len()],
        worst: 0,
    };
    if walk.from(tree.root(), 0, 1) {
        Penalty::Infinite
    } else {
        Penalty::Finite(walk.worst)
    }
}

struct Walk<'a> {
    game: &'a ReachabilityGame,
    tree: &'a SymbolicTree,
    player: Player,
    limit: usize,
    /// Penalty on the first visit of each node along the current path.
    seen_with: Vec<Option<u64>>,
    worst: u64,
}

impl Walk<'_> {
    /// Returns true once some path shows unbounded growth.
    fn from(&mut self, n: NodeId, before: u64, len: usize) -> bool {
        let saved = self.seen_with[n];
        match saved {
            Some(p) if before > p => return true,
            Some(_) => {}
            None => self.seen_with[n] = Some(before),
        }
        let charge = if self.game.owner(self.tree.vertex(n)) == self.player {
            self.tree.blocked_weight(self.game, n)
        } else {
            0
        };
        let after = before + charge;
        self.worst = self.worst.max(after);
        let mut unbounded = false;
        if len < self.limit {
            for &m in self.tree.unfolding_successors(n) {
                if self.from(m, after, len + 1) {
                    unbounded = true;
                    break;
                }
            }
        }
        self.seen_with[n] = saved;
        unbounded
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::witness::tree_penalty;

    #[test]
    fn fixture_trees() {
        let g = fixtures::g2();
        assert_eq!(
            brute_force_tree_penalty(&g, &fixtures::drawn_ne_tree(), 1),
            Penalty::Finite(2)
        );
        assert_eq!(
            brute_force_tree_penalty(&g, &fixtures::drawn_spe_main_tree(), 2),
            Penalty::Finite(11)
        );
        for t in [
            fixtures::drawn_ne_tree(),
            fixtures::improved_ne_tree(),
            fixtures::drawn_spe_main_tree(),
        ] {
            for i in g.player_ids() {
                assert_eq!(brute_force_tree_penalty(&g, &t, i), tree_penalty(&g, &t, i));
            }
        }
    }

    #[test]
    fn charging_loop_is_unbounded() {
        let g = fixtures::g1();
        let v0 = g.vertex("v0").unwrap();
        let mut t = SymbolicTree::new(v0);
        let leaf = t.add_child(0, v0);
        t.set_links(leaf, vec![0]);
        assert_eq!(brute_force_tree_penalty(&g, &t, 1), Penalty::Infinite);
        assert_eq!(tree_penalty(&g, &t, 1), Penalty::Infinite);
    }
}
