//! Equilibrium checks of finite-memory profiles on the product of the game with the machine.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use serde::Serialize;

use super::OracleError;
use crate::game::{ReachabilityGame, Vertex};
use crate::players::{Player, PlayerSet};
use crate::witness::{MachineState, MultiStrategyMachine};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProductState {
    pub vertex: Vertex,
    pub winners: PlayerSet,
    pub memory: MachineState,
}

impl ProductState {
    pub fn initial(game: &ReachabilityGame, m: &MultiStrategyMachine) -> Self {
        ProductState {
            vertex: game.init(),
            winners: game.initial_winners(),
            memory: m.initial,
        }
    }

    pub fn step(self, game: &ReachabilityGame, m: &MultiStrategyMachine, u: Vertex) -> Self {
        ProductState {
            vertex: u,
            winners: self.winners.union(game.targets_at(u)),
            memory: m.update(self.memory, u),
        }
    }
}

/// All single-state machines: every vertex gets every non-empty set of successors.
pub fn enumerate_memoryless_multiprofiles(
    game: &ReachabilityGame,
) -> impl Iterator<Item = MultiStrategyMachine> + '_ {
    let options: Vec<Vec<Vec<Vertex>>> = game
        .vertices()
        .map(|v| {
            let succ = game.successors(v);
            (1..1u64 << succ.len())
                .map(|mask| {
                    succ.iter()
                        .enumerate()
                        .filter(|(k, _)| mask >> k & 1 == 1)
                        .map(|(_, &u)| u)
                        .collect()
                })
                .collect()
        })
        .collect();
    let total: usize = options.iter().map(Vec::len).product();
    (0..total).map(move |mut k| {
        let choice = options
            .iter()
            .map(|opts| {
                let c = opts[k % opts.len()].clone();
                k /= opts.len();
                c
            })
            .collect();
        MultiStrategyMachine::memoryless(choice)
    })
}

/// Whether `i` can reach its targets from `start` moving freely while the others stay within
/// their choices. With singleton choices this is `i`'s best response to the others' strategies.
pub fn best_response(
    game: &ReachabilityGame,
    m: &MultiStrategyMachine,
    i: Player,
    start: ProductState,
) -> bool {
    reach_win(game, m, i, start, |x| {
        if game.owner(x.vertex) == i {
            game.successors(x.vertex).to_vec()
        } else {
            m.choose(x.memory, x.vertex).to_vec()
        }
    })
    .is_some()
}

/// Breadth-first search for a state where `i` has won; returns the vertices along the way.
fn reach_win(
    game: &ReachabilityGame,
    m: &MultiStrategyMachine,
    i: Player,
    start: ProductState,
    moves: impl Fn(ProductState) -> Vec<Vertex>,
) -> Option<Vec<Vertex>> {
    let mut parent: HashMap<ProductState, Option<ProductState>> = HashMap::from([(start, None)]);
    let mut queue = VecDeque::from([start]);
    while let Some(x) = queue.pop_front() {
        if x.winners.contains(i) {
            let mut path = vec![x.vertex];
            let mut cur = x;
            while let Some(Some(p)) = parent.get(&cur) {
                path.push(p.vertex);
                cur = *p;
            }
            path.reverse();
            return Some(path);
        }
        for u in moves(x) {
            let y = x.step(game, m, u);
            if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(y) {
                e.insert(Some(x));
                queue.push_back(y);
            }
        }
    }
    None
}

fn require_deterministic(m: &MultiStrategyMachine) -> Result<(), OracleError> {
    if m.is_deterministic() {
        Ok(())
    } else {
        Err(OracleError::NonSingleton)
    }
}

/// Winners at the end of the unique play of a strategy profile from `x`.
fn final_winners(
    game: &ReachabilityGame,
    m: &MultiStrategyMachine,
    mut x: ProductState,
) -> PlayerSet {
    let mut seen = HashSet::new();
    while seen.insert(x) {
        x = x.step(game, m, m.choose(x.memory, x.vertex)[0]);
    }
    x.winners
}

pub fn is_nash(game: &ReachabilityGame, m: &MultiStrategyMachine) -> Result<bool, OracleError> {
    require_deterministic(m)?;
    let start = ProductState::initial(game, m);
    let won = final_winners(game, m, start);
    Ok(game
        .player_ids()
        .all(|i| won.contains(i) || !best_response(game, m, i, start)))
}

/// Product states reachable when every player may move anywhere.
fn all_histories(game: &ReachabilityGame, m: &MultiStrategyMachine) -> Vec<ProductState> {
    let start = ProductState::initial(game, m);
    let mut seen = HashSet::from([start]);
    let mut order = vec![start];
    let mut k = 0;
    while k < order.len() {
        let x = order[k];
        k += 1;
        for &u in game.successors(x.vertex) {
            let y = x.step(game, m, u);
            if seen.insert(y) {
                order.push(y);
            }
        }
    }
    order
}

/// No one-shot deviation after any history is profitable.
pub fn is_very_weak_spe(
    game: &ReachabilityGame,
    m: &MultiStrategyMachine,
) -> Result<bool, OracleError> {
    require_deterministic(m)?;
    let mut gains: HashMap<ProductState, PlayerSet> = HashMap::new();
    let mut won = |x: ProductState| *gains.entry(x).or_insert_with(|| final_winners(game, m, x));
    for x in all_histories(game, m) {
        let i = game.owner(x.vertex);
        if won(x).contains(i) {
            continue;
        }
        let chosen = m.choose(x.memory, x.vertex)[0];
        for &u in game.successors(x.vertex) {
            if u != chosen && won(x.step(game, m, u)).contains(i) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Concept {
    Nash,
    Subgame,
}

/// A refinement of the machine and a profitable deviation from it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub player: Player,
    /// History after which the deviation happens, its last vertex being where it starts.
    pub history: Vec<Vertex>,
    /// The losing play of the refinement from there, cut where it starts repeating.
    pub outcome: Vec<Vertex>,
    /// The deviating play reaching the player's targets.
    pub deviation: Vec<Vertex>,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "player {} loses on {:?} after {:?} but wins by {:?}",
            self.player, self.outcome, self.history, self.deviation
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Refuted(Counterexample),
    NoCounterexample,
}

pub const DEFAULT_STATE_CAP: u64 = 1_000_000;

/// Looks for a strategy profile consistent with the machine that is not an equilibrium of the
/// given kind.
///
/// Consistent strategies may depend on the whole history. Along one play every history occurs
/// once, so any path of the product using allowed moves is the outcome of some consistent
/// profile, and once two plays part their histories never meet again. A refutation is thus a
/// state where the owner has an allowed move continuing into a play it loses and another move
/// from which it can still win. For Nash equilibria the state is reached by an allowed play the
/// owner has not won yet and the owner may play freely after deviating; for subgame perfection
/// any history counts and the deviation is a single move.
pub fn oracle_permissive_check(
    game: &ReachabilityGame,
    m: &MultiStrategyMachine,
    concept: Concept,
    cap: u64,
) -> Result<Verdict, OracleError> {
    let p = Product::build(game, m, cap)?;
    for i in game.player_ids() {
        let losing = p.can_avoid_forever(i);
        let winning = p.can_reach_win(i, concept == Concept::Nash);
        let (candidates, parent) = match concept {
            Concept::Nash => p.reachable(|x, allowed| allowed && !x.winners.contains(i)),
            Concept::Subgame => p.reachable(|_, _| true),
        };
        for x in candidates {
            let here = p.states[x];
            if game.owner(here.vertex) != i || here.winners.contains(i) {
                continue;
            }
            let row = &p.succ[x];
            let pair = row
                .iter()
                .filter(|&&(_, y, allowed)| allowed && losing[y])
                .find_map(|&(u, y, _)| {
                    row.iter()
                        .find(|&&(w, z, _)| w != u && winning[z])
                        .map(|&(_, z, _)| (y, z))
                });
            let Some((y, z)) = pair else { continue };
            return Ok(Verdict::Refuted(Counterexample {
                player: i,
                history: p.history(&parent, x),
                outcome: [here.vertex]
                    .into_iter()
                    .chain(p.losing_lasso(y, &losing))
                    .collect(),
                deviation: [here.vertex]
                    .into_iter()
                    .chain(p.path_to_win(i, z, concept == Concept::Nash))
                    .collect(),
            }));
        }
    }
    Ok(Verdict::NoCounterexample)
}

/// Product states reachable from the start by any moves, with every move labelled by whether
/// the machine allows it.
struct Product<'a> {
    game: &'a ReachabilityGame,
    states: Vec<ProductState>,
    succ: Vec<Vec<(Vertex, usize, bool)>>,
}

impl<'a> Product<'a> {
    fn build(
        game: &'a ReachabilityGame,
        m: &MultiStrategyMachine,
        cap: u64,
    ) -> Result<Self, OracleError> {
        let start = ProductState::initial(game, m);
        let mut index = HashMap::from([(start, 0)]);
        let mut states = vec![start];
        let mut succ = Vec::new();
        let mut k = 0;
        while k < states.len() {
            let x = states[k];
            let allowed = m.choose(x.memory, x.vertex);
            let mut row = Vec::with_capacity(game.successors(x.vertex).len());
            for &u in game.successors(x.vertex) {
                let y = x.step(game, m, u);
                let next = states.len();
                let j = *index.entry(y).or_insert(next);
                if j == next {
                    if states.len() as u64 >= cap {
                        return Err(OracleError::StateCap(cap));
                    }
                    states.push(y);
                }
                row.push((u, j, allowed.contains(&u)));
            }
            succ.push(row);
            k += 1;
        }
        Ok(Product { game, states, succ })
    }

    /// States from which some allowed play never visits a target of `i`.
    fn can_avoid_forever(&self, i: Player) -> Vec<bool> {
        let mut keep: Vec<bool> = self.states.iter().map(|x| !x.winners.contains(i)).collect();
        loop {
            let mut changed = false;
            for x in 0..self.states.len() {
                if keep[x] && !self.succ[x].iter().any(|&(_, y, a)| a && keep[y]) {
                    keep[x] = false;
                    changed = true;
                }
            }
            if !changed {
                return keep;
            }
        }
    }

    /// Allowed moves, plus every move of `i` itself when it plays `free`ly.
    fn usable(&self, i: Player, x: usize, allowed: bool, free: bool) -> bool {
        allowed || (free && self.game.owner(self.states[x].vertex) == i)
    }

    /// States from which some play reaches a target of `i`.
    fn can_reach_win(&self, i: Player, free: bool) -> Vec<bool> {
        let mut win: Vec<bool> = self.states.iter().map(|x| x.winners.contains(i)).collect();
        loop {
            let mut changed = false;
            for x in 0..self.states.len() {
                if !win[x]
                    && self.succ[x]
                        .iter()
                        .any(|&(_, y, a)| win[y] && self.usable(i, x, a, free))
                {
                    win[x] = true;
                    changed = true;
                }
            }
            if !changed {
                return win;
            }
        }
    }

    /// Breadth-first order of the states reachable from the start through moves passing `ok`
    /// (given the state moved from and whether the move is allowed), with the parent of each.
    fn reachable(
        &self,
        ok: impl Fn(ProductState, bool) -> bool,
    ) -> (Vec<usize>, Vec<Option<usize>>) {
        let mut parent = vec![None; self.states.len()];
        let mut seen = vec![false; self.states.len()];
        seen[0] = true;
        let mut order = vec![0];
        let mut k = 0;
        while k < order.len() {
            let x = order[k];
            k += 1;
            for &(_, y, a) in &self.succ[x] {
                if !seen[y] && ok(self.states[x], a) {
                    seen[y] = true;
                    parent[y] = Some(x);
                    order.push(y);
                }
            }
        }
        (order, parent)
    }

    fn history(&self, parent: &[Option<usize>], x: usize) -> Vec<Vertex> {
        let mut path = vec![self.states[x].vertex];
        let mut cur = x;
        while let Some(p) = parent[cur] {
            path.push(self.states[p].vertex);
            cur = p;
        }
        path.reverse();
        path
    }

    /// An allowed play from `y` staying in `losing`, cut once it repeats a state.
    fn losing_lasso(&self, y: usize, losing: &[bool]) -> Vec<Vertex> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let mut cur = y;
        while seen.insert(cur) {
            out.push(self.states[cur].vertex);
            cur = self.succ[cur]
                .iter()
                .find(|&&(_, z, a)| a && losing[z])
                .map(|&(_, z, _)| z)
                .expect("losing states keep an allowed losing move");
        }
        out.push(self.states[cur].vertex);
        out
    }

    /// A shortest play from `z` to a target of `i`.
    fn path_to_win(&self, i: Player, z: usize, free: bool) -> Vec<Vertex> {
        let mut parent: HashMap<usize, usize> = HashMap::new();
        let mut queue = VecDeque::from([z]);
        let mut seen = HashSet::from([z]);
        while let Some(x) = queue.pop_front() {
            if self.states[x].winners.contains(i) {
                let mut path = vec![self.states[x].vertex];
                let mut cur = x;
                while let Some(&p) = parent.get(&cur) {
                    path.push(self.states[p].vertex);
                    cur = p;
                }
                path.reverse();
                return path;
            }
            for &(_, y, a) in &self.succ[x] {
                if self.usable(i, x, a, free) && seen.insert(y) {
                    parent.insert(y, x);
                    queue.push_back(y);
                }
            }
        }
        unreachable!("called only where a target is reachable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::witness::{
        extract_multistrategy_ne, extract_multistrategy_spe, ne_machine_unchecked,
    };

    fn profile(g: &ReachabilityGame, picks: &[(&str, &str)]) -> MultiStrategyMachine {
        let mut choice: Vec<Vec<Vertex>> = g.vertices().map(|v| vec![g.successors(v)[0]]).collect();
        for (a, b) in picks {
            choice[g.vertex(a).unwrap()] = vec![g.vertex(b).unwrap()];
        }
        MultiStrategyMachine::memoryless(choice)
    }

    #[test]
    fn memoryless_counts() {
        let g1 = fixtures::g1();
        assert_eq!(enumerate_memoryless_multiprofiles(&g1).count(), 3);
        let g2 = fixtures::g2();
        let expected: usize = g2
            .vertices()
            .map(|v| (1usize << g2.successors(v).len()) - 1)
            .product();
        assert_eq!(enumerate_memoryless_multiprofiles(&g2).count(), expected);
    }

    #[test]
    fn nash_checks() {
        let g = fixtures::g2();
        let good = profile(
            &g,
            &[("v0", "v1"), ("v1", "v3"), ("v5", "v5"), ("v4", "v3")],
        );
        assert!(is_nash(&g, &good).unwrap());
        let start = ProductState::initial(&g, &good);
        assert!(best_response(&g, &good, 1, start));
        let bad = profile(&g, &[("v0", "v5"), ("v5", "v5")]);
        assert!(!is_nash(&g, &bad).unwrap());
        let g1 = fixtures::g1();
        assert!(is_nash(&g1, &profile(&g1, &[("v0", "v1")])).unwrap());
        let multi = MultiStrategyMachine::memoryless(
            g1.vertices().map(|v| g1.successors(v).to_vec()).collect(),
        );
        assert_eq!(is_nash(&g1, &multi), Err(OracleError::NonSingleton));
    }

    #[test]
    fn subgame_checks() {
        let g = fixtures::g2();
        let stays = profile(&g, &[("v0", "v1"), ("v1", "v3"), ("v5", "v5")]);
        assert!(!is_very_weak_spe(&g, &stays).unwrap());
        let g1 = fixtures::g1();
        assert!(is_very_weak_spe(&g1, &profile(&g1, &[("v0", "v1"), ("v1", "v1")])).unwrap());
    }

    #[test]
    fn permissive_checks_of_the_examples() {
        let g = fixtures::g2();
        let ne = extract_multistrategy_ne(&g, &fixtures::drawn_ne_tree()).unwrap();
        assert_eq!(
            oracle_permissive_check(&g, &ne, Concept::Nash, DEFAULT_STATE_CAP).unwrap(),
            Verdict::NoCounterexample
        );
        match oracle_permissive_check(&g, &ne, Concept::Subgame, DEFAULT_STATE_CAP).unwrap() {
            Verdict::Refuted(c) => assert_eq!(c.player, 2),
            v => panic!("expected a refutation, got {v:?}"),
        }
        let spe = extract_multistrategy_spe(&g, &fixtures::drawn_spe_forest(false)).unwrap();
        assert_eq!(
            oracle_permissive_check(&g, &spe, Concept::Subgame, DEFAULT_STATE_CAP).unwrap(),
            Verdict::NoCounterexample
        );
        let g1 = fixtures::g1();
        let machine = ne_machine_unchecked(&g1, &fixtures::leave_at_once_tree());
        assert_eq!(
            oracle_permissive_check(&g1, &machine, Concept::Nash, DEFAULT_STATE_CAP).unwrap(),
            Verdict::NoCounterexample
        );
    }

    #[test]
    fn wholesale_permission_at_v5_is_refuted() {
        let g = fixtures::g2();
        let all = MultiStrategyMachine::memoryless(
            g.vertices().map(|v| g.successors(v).to_vec()).collect(),
        );
        match oracle_permissive_check(&g, &all, Concept::Subgame, DEFAULT_STATE_CAP).unwrap() {
            Verdict::Refuted(_) => {}
            v => panic!("expected a refutation, got {v:?}"),
        }
    }

    #[test]
    fn cap_is_enforced() {
        let g = fixtures::g2();
        let all = MultiStrategyMachine::memoryless(
            g.vertices().map(|v| g.successors(v).to_vec()).collect(),
        );
        assert_eq!(
            oracle_permissive_check(&g, &all, Concept::Nash, 3),
            Err(OracleError::StateCap(3))
        );
    }
}
