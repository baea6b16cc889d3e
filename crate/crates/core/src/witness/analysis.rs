//! Semantic checks on the unfolding of a symbolic tree.
//!
//! Plays of the unfolding are paths of the finite graph whose edges are children and leaf links.
//! Pairing each node with the winners accumulated so far gives a finite graph whose paths carry
//! exact gains, so all checks below run there.

use std::collections::{HashMap, VecDeque};

use super::labels::{path_labels, NodeLabel};
use super::tree::{NodeId, SymbolicTree};
use super::WitnessError;
use crate::game::{ReachabilityGame, Vertex};
use crate::penalty::Penalty;
use crate::players::{Player, PlayerSet};
use crate::zero_sum::GammaTable;

/// Strength of a winning requirement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strength {
    Weak,
    Strong,
}

/// Winning requirement attached to a query: none, or weak/strong winning for a set of players.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WinMode {
    Unconstrained,
    Weak(PlayerSet),
    Strong(PlayerSet),
}

impl WinMode {
    pub fn required(self) -> Option<(PlayerSet, Strength)> {
        match self {
            WinMode::Unconstrained => None,
            WinMode::Weak(w) => Some((w, Strength::Weak)),
            WinMode::Strong(w) => Some((w, Strength::Strong)),
        }
    }
}

/// Deviation gains consulted by external-resistance checks.
pub trait GammaSource {
    fn gamma(&self, i: Player, u: Vertex, winners: PlayerSet) -> Result<bool, WitnessError>;
}

impl GammaSource for GammaTable {
    fn gamma(&self, i: Player, u: Vertex, winners: PlayerSet) -> Result<bool, WitnessError> {
        Ok(self.lookup(i, u, winners))
    }
}

/// Which node/player pair broke a resistance condition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ResistanceFailure {
    Internal {
        node: NodeId,
        player: Player,
    },
    External {
        node: NodeId,
        player: Player,
        blocked: Vertex,
    },
}

/// The unfolding graph of a tree paired with accumulated winners.
#[derive(Clone, Debug)]
pub struct Unfolding {
    states: Vec<(NodeId, PlayerSet)>,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
    lookup: HashMap<(NodeId, PlayerSet), usize>,
}

impl Unfolding {
    pub fn new(game: &ReachabilityGame, tree: &SymbolicTree, pre_winners: PlayerSet) -> Self {
        let root_winners = pre_winners.union(game.targets_at(tree.root_vertex()));
        let mut u = Unfolding {
            states: vec![(tree.root(), root_winners)],
            succ: vec![Vec::new()],
            pred: vec![Vec::new()],
            lookup: HashMap::from([((tree.root(), root_winners), 0)]),
        };
        let mut queue = VecDeque::from([0usize]);
        while let Some(s) = queue.pop_front() {
            let (n, w) = u.states[s];
            for &m in tree.unfolding_successors(n) {
                let key = (m, w.union(game.targets_at(tree.vertex(m))));
                let t = match u.lookup.get(&key) {
                    Some(&t) => t,
                    None => {
                        let t = u.states.len();
                        u.states.push(key);
                        u.succ.push(Vec::new());
                        u.pred.push(Vec::new());
                        u.lookup.insert(key, t);
                        queue.push_back(t);
                        t
                    }
                };
                u.succ[s].push(t);
                u.pred[t].push(s);
            }
        }
        u
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, s: usize) -> (NodeId, PlayerSet) {
        self.states[s]
    }

    pub fn find(&self, node: NodeId, winners: PlayerSet) -> Option<usize> {
        self.lookup.get(&(node, winners)).copied()
    }

    /// States from which some reachable state satisfies `goal`.
    pub fn can_reach(&self, goal: impl Fn(PlayerSet) -> bool) -> Vec<bool> {
        let mut hit = vec![false; self.len()];
        let mut queue: VecDeque<usize> = (0..self.len())
            .filter(|&s| goal(self.states[s].1))
            .collect();
        for &s in &queue {
            hit[s] = true;
        }
        while let Some(s) = queue.pop_front() {
            for &p in &self.pred[s] {
                if !hit[p] {
                    hit[p] = true;
                    queue.push_back(p);
                }
            }
        }
        hit
    }

    /// States from which every path eventually leaves the region `stay`.
    pub fn must_leave(&self, stay: impl Fn(PlayerSet) -> bool) -> Vec<bool> {
        let inside: Vec<bool> = self.states.iter().map(|&(_, w)| stay(w)).collect();
        let mut out_deg: Vec<usize> = (0..self.len())
            .map(|s| self.succ[s].iter().filter(|&&t| inside[t]).count())
            .collect();
        let mut leaves = vec![false; self.len()];
        let mut queue = VecDeque::new();
        for s in 0..self.len() {
            if !inside[s] || out_deg[s] == 0 {
                leaves[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(s) = queue.pop_front() {
            if !inside[s] {
                continue;
            }
            for &p in &self.pred[s] {
                if inside[p] && !leaves[p] {
                    out_deg[p] -= 1;
                    if out_deg[p] == 0 {
                        leaves[p] = true;
                        queue.push_back(p);
                    }
                }
            }
        }
        // A state outside the region has trivially left it; inside states need every path to exit.
        (0..self.len()).map(|s| !inside[s] || leaves[s]).collect()
    }

    /// `wins_some[s]`: some continuation from `s` wins for `i`.
    pub fn wins_some(&self, i: Player) -> Vec<bool> {
        self.can_reach(|w| w.contains(i))
    }

    /// `wins_all[s]`: every continuation from `s` wins for `i`.
    pub fn wins_all(&self, i: Player) -> Vec<bool> {
        self.must_leave(|w| !w.contains(i))
    }
}

/// Every check about one tree, with its labels and unfolding computed once.
pub struct TreeAnalysis<'a> {
    pub game: &'a ReachabilityGame,
    pub tree: &'a SymbolicTree,
    pub labels: Vec<NodeLabel>,
    pub unfolding: Unfolding,
    wins_some: Vec<Vec<bool>>,
    wins_all: Vec<Vec<bool>>,
}

impl<'a> TreeAnalysis<'a> {
    pub fn new(game: &'a ReachabilityGame, tree: &'a SymbolicTree, pre_winners: PlayerSet) -> Self {
        let unfolding = Unfolding::new(game, tree, pre_winners);
        let wins_some = game.player_ids().map(|i| unfolding.wins_some(i)).collect();
        let wins_all = game.player_ids().map(|i| unfolding.wins_all(i)).collect();
        TreeAnalysis {
            game,
            tree,
            labels: path_labels(game, tree, pre_winners),
            unfolding,
            wins_some,
            wins_all,
        }
    }

    fn node_state(&self, node: NodeId) -> usize {
        self.unfolding
            .find(node, self.labels[node].winners)
            .expect("the tree path of a node is a path of the unfolding")
    }

    pub fn wins_some_from(&self, node: NodeId, i: Player) -> bool {
        self.wins_some[i - 1][self.node_state(node)]
    }

    pub fn wins_all_from(&self, node: NodeId, i: Player) -> bool {
        self.wins_all[i - 1][self.node_state(node)]
    }

    /// Every reachable unfolding state where a player in `deviators` owns a branching node and has
    /// not won must see all or none of its continuations winning.
    pub fn internal_failure(&self, deviators: PlayerSet) -> Option<ResistanceFailure> {
        (0..self.unfolding.len()).find_map(|s| {
            let (n, w) = self.unfolding.state(s);
            let i = self.game.owner(self.tree.vertex(n));
            let branching = self.tree.unfolding_successors(n).len() >= 2;
            let constrained = branching && deviators.contains(i) && !w.contains(i);
            (constrained && !self.wins_all[i - 1][s] && self.wins_some[i - 1][s])
                .then_some(ResistanceFailure::Internal { node: n, player: i })
        })
    }

    pub fn check_internal_resistance(&self, deviators: PlayerSet) -> bool {
        self.internal_failure(deviators).is_none()
    }

    /// A blocked successor that the owner could win from forces all continuations to win.
    /// Gains are only consulted where continuations do not all win already.
    pub fn gamma_failure(
        &self,
        gamma: &dyn GammaSource,
        deviators: PlayerSet,
    ) -> Result<Option<ResistanceFailure>, WitnessError> {
        for s in 0..self.unfolding.len() {
            let (n, w) = self.unfolding.state(s);
            let i = self.game.owner(self.tree.vertex(n));
            if !deviators.contains(i) || w.contains(i) || self.wins_all[i - 1][s] {
                continue;
            }
            for u in self.tree.blocked_set(self.game, n) {
                if gamma.gamma(i, u, w.union(self.game.targets_at(u)))? {
                    return Ok(Some(ResistanceFailure::External {
                        node: n,
                        player: i,
                        blocked: u,
                    }));
                }
            }
        }
        Ok(None)
    }

    pub fn check_gamma_resistance(
        &self,
        gamma: &dyn GammaSource,
        deviators: PlayerSet,
    ) -> Result<bool, WitnessError> {
        Ok(self.gamma_failure(gamma, deviators)?.is_none())
    }

    /// Weak: some play wins for all of `w`. Strong: every play does.
    pub fn check_winning(&self, w: PlayerSet, strength: Strength) -> bool {
        match strength {
            Strength::Weak => self.unfolding.can_reach(|x| w.is_subset(x))[0],
            Strength::Strong => self.unfolding.must_leave(|x| !w.is_subset(x))[0],
        }
    }

    pub fn check_mode(&self, mode: WinMode) -> bool {
        mode.required()
            .is_none_or(|(w, s)| self.check_winning(w, s))
    }

    pub fn penalty(&self, i: Player) -> Penalty {
        tree_penalty(self.game, self.tree, i)
    }
}

/// Nodes lying on some cycle of the unfolding graph.
pub fn cycle_nodes(tree: &SymbolicTree) -> Vec<bool> {
    let mut on = vec![false; tree.len()];
    for leaf in tree.node_ids().filter(|&n| tree.is_leaf(n)) {
        for &target in &tree.node(leaf).leaf_links {
            let mut cur = leaf;
            loop {
                on[cur] = true;
                if cur == target {
                    break;
                }
                cur = tree.node(cur).parent.expect("link targets are ancestors");
            }
        }
    }
    on
}

/// Worst penalty of player `i` over the plays of the unfolding; infinite when some cycle keeps
/// charging `i`.
pub fn tree_penalty(game: &ReachabilityGame, tree: &SymbolicTree, i: Player) -> Penalty {
    let on_cycle = cycle_nodes(tree);
    let charge = |n: NodeId| {
        if game.owner(tree.vertex(n)) == i {
            tree.blocked_weight(game, n)
        } else {
            0
        }
    };
    if tree.node_ids().any(|n| on_cycle[n] && charge(n) > 0) {
        return Penalty::Infinite;
    }
    let labels = path_labels(game, tree, PlayerSet::EMPTY);
    let worst = tree
        .node_ids()
        .map(|n| labels[n].penalty[i - 1] + charge(n))
        .max()
        .unwrap_or(0);
    Penalty::Finite(worst)
}

/// Internal resistance for all players plus external resistance against the whole-game gains.
pub fn check_good_tree(game: &ReachabilityGame, tree: &SymbolicTree) -> Result<bool, WitnessError> {
    tree.validate(game)?;
    if tree.root_vertex() != game.init() {
        return Err(WitnessError::WrongRoot);
    }
    let gamma = crate::zero_sum::gamma_game(game);
    let a = TreeAnalysis::new(game, tree, game.initial_winners());
    let all = game.all_players();
    Ok(a.check_internal_resistance(all) && a.check_gamma_resistance(&gamma, all)?)
}
