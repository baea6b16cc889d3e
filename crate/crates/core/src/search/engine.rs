//! Depth-first AND-OR search for one symbolic tree.
//!
//! Each node carries a label: its vertex, the players that have won, the players whose every
//! continuation must win (`all`) or must lose (`none`), and the penalties paid so far by the
//! players with a finite bound. Choosing a successor set is existential, children are universal.
//! A node may become a leaf when each successor it keeps has the label of some proper ancestor,
//! which then serves as the link target.

use std::cell::Cell;
use std::collections::HashMap;
use std::rc::Rc;

use thiserror::Error;

use crate::game::{ReachabilityGame, Vertex};
use crate::players::{Player, PlayerSet};
use crate::witness::tree::{NodeId, SymbolicTree};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum Abort {
    #[error("search budget of {0} nodes exhausted")]
    Budget(u64),
}

/// Gains of deviations consulted while choosing successor sets.
pub trait GammaOracle {
    /// Whether player `i` can win after deviating to `u`; `None` when no acceptable
    /// continuation exists there at all, which rules out blocking `u`.
    fn gamma(&mut self, i: Player, u: Vertex, winners: PlayerSet) -> Result<Option<bool>, Abort>;

    /// Last word on a complete tree found for a problem with `root_check` set.
    fn accept_root(&mut self, _tree: &SymbolicTree) -> Result<bool, Abort> {
        Ok(true)
    }
}

impl GammaOracle for crate::zero_sum::GammaTable {
    fn gamma(&mut self, i: Player, u: Vertex, winners: PlayerSet) -> Result<Option<bool>, Abort> {
        Ok(Some(self.lookup(i, u, winners)))
    }
}

/// Nodes explored across all searches of one solve, with an optional ceiling.
#[derive(Debug, Default)]
pub struct Counter {
    explored: Cell<u64>,
    limit: Option<u64>,
}

impl Counter {
    pub fn new(limit: Option<u64>) -> Self {
        Counter {
            explored: Cell::new(0),
            limit,
        }
    }

    pub fn explored(&self) -> u64 {
        self.explored.get()
    }

    fn tick(&self) -> Result<(), Abort> {
        let n = self.explored.get() + 1;
        self.explored.set(n);
        match self.limit {
            Some(l) if n > l => Err(Abort::Budget(l)),
            _ => Ok(()),
        }
    }
}

/// What tree to look for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Problem {
    pub root: Vertex,
    pub pre_winners: PlayerSet,
    /// Players whose penalty is bounded, with their bounds.
    pub tracked: Vec<(Player, u64)>,
    /// Players all of whose plays must win from the root on.
    pub root_all: PlayerSet,
    /// Players none of whose plays may win.
    pub root_none: PlayerSet,
    /// Some play must make all these players win.
    pub weak: Option<PlayerSet>,
    /// Largest node depth allowed.
    pub height: usize,
    /// Ask the oracle to accept each complete tree before returning it.
    pub root_check: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Label {
    vertex: Vertex,
    winners: PlayerSet,
    all: PlayerSet,
    none: PlayerSet,
    pen: Vec<u64>,
}

type LabelId = u32;
type SetId = u32;
type TemplateId = u32;
type Key = (LabelId, bool, SetId);

/// A successor choice: the labels of the kept successors.
struct Choice {
    children: Vec<LabelId>,
}

enum Template {
    Leaf {
        label: LabelId,
        links: Vec<LabelId>,
    },
    Node {
        label: LabelId,
        children: Vec<TemplateId>,
    },
}

enum Res {
    Found(TemplateId, usize),
    /// Failure, with the shallowest stack depth whose presence pruned part of the search.
    Failed(usize),
}

const FREE: usize = usize::MAX;

pub struct Engine<'a> {
    game: &'a ReachabilityGame,
    problem: Problem,
    gamma: &'a mut dyn GammaOracle,
    counter: &'a Counter,
    labels: Vec<Label>,
    label_ids: HashMap<Label, LabelId>,
    choices: HashMap<LabelId, Rc<Vec<Choice>>>,
    gamma_memo: HashMap<(Player, Vertex, PlayerSet), Option<bool>>,
    sets: Vec<Vec<LabelId>>,
    set_ids: HashMap<Vec<LabelId>, SetId>,
    set_add: HashMap<(SetId, LabelId), SetId>,
    failed: HashMap<Key, usize>,
    found: HashMap<Key, (TemplateId, usize)>,
    on_stack: HashMap<Key, usize>,
    templates: Vec<Template>,
    root_only: Option<usize>,
    reachable_win: HashMap<(Vertex, PlayerSet, PlayerSet), bool>,
}

impl<'a> Engine<'a> {
    pub fn new(
        game: &'a ReachabilityGame,
        problem: Problem,
        gamma: &'a mut dyn GammaOracle,
        counter: &'a Counter,
    ) -> Self {
        let mut e = Engine {
            game,
            problem,
            gamma,
            counter,
            labels: Vec::new(),
            label_ids: HashMap::new(),
            choices: HashMap::new(),
            gamma_memo: HashMap::new(),
            sets: Vec::new(),
            set_ids: HashMap::new(),
            set_add: HashMap::new(),
            failed: HashMap::new(),
            found: HashMap::new(),
            on_stack: HashMap::new(),
            templates: Vec::new(),
            root_only: None,
            reachable_win: HashMap::new(),
        };
        e.intern_set(Vec::new());
        e
    }

    /// Runs the search; `None` when no tree within the height bound exists.
    pub fn run(mut self) -> Result<Option<SymbolicTree>, Abort> {
        let root = self.root_label();
        let Some(root) = root else { return Ok(None) };
        let flag = self.flag_after(true, root);
        match self.solve(root, flag, 0, 0)? {
            Res::Found(t, _) => Ok(Some(self.materialize(t))),
            Res::Failed(_) => Ok(None),
        }
    }

    /// Number of successor choices at the root, for splitting the search.
    pub fn root_choice_count(&mut self) -> Result<usize, Abort> {
        match self.root_label() {
            Some(root) => Ok(self.choices(root)?.len()),
            None => Ok(0),
        }
    }

    /// Only the `k`-th root choice will be tried.
    pub fn restrict_root(&mut self, k: usize) {
        self.root_only = Some(k);
    }

    fn root_label(&mut self) -> Option<LabelId> {
        let p = &self.problem;
        let winners = p.pre_winners.union(self.game.targets_at(p.root));
        if !p.root_none.intersection(winners).is_empty() {
            return None;
        }
        let label = Label {
            vertex: p.root,
            winners,
            all: p.root_all.difference(winners),
            none: p.root_none,
            pen: vec![0; p.tracked.len()],
        };
        Some(self.intern_label(label))
    }

    fn intern_label(&mut self, l: Label) -> LabelId {
        if let Some(&id) = self.label_ids.get(&l) {
            return id;
        }
        let id = self.labels.len() as LabelId;
        self.labels.push(l.clone());
        self.label_ids.insert(l, id);
        id
    }

    fn intern_set(&mut self, s: Vec<LabelId>) -> SetId {
        if let Some(&id) = self.set_ids.get(&s) {
            return id;
        }
        let id = self.sets.len() as SetId;
        self.sets.push(s.clone());
        self.set_ids.insert(s, id);
        id
    }

    fn set_with(&mut self, set: SetId, l: LabelId) -> SetId {
        if let Some(&id) = self.set_add.get(&(set, l)) {
            return id;
        }
        let mut v = self.sets[set as usize].clone();
        if let Err(pos) = v.binary_search(&l) {
            v.insert(pos, l);
        }
        let id = self.intern_set(v);
        self.set_add.insert((set, l), id);
        id
    }

    /// Whether a node still carries the duty of leading to a play where the weak set wins.
    fn flag_after(&self, carried: bool, l: LabelId) -> bool {
        match self.problem.weak {
            Some(w) if carried => !w.is_subset(self.labels[l as usize].winners),
            _ => false,
        }
    }

    fn gamma(&mut self, i: Player, u: Vertex, winners: PlayerSet) -> Result<Option<bool>, Abort> {
        if let Some(&b) = self.gamma_memo.get(&(i, u, winners)) {
            return Ok(b);
        }
        let b = self.gamma.gamma(i, u, winners)?;
        self.gamma_memo.insert((i, u, winners), b);
        Ok(b)
    }

    /// All admissible successor choices at a label, larger sets first.
    fn choices(&mut self, l: LabelId) -> Result<Rc<Vec<Choice>>, Abort> {
        if let Some(c) = self.choices.get(&l) {
            return Ok(c.clone());
        }
        let label = self.labels[l as usize].clone();
        let game = self.game;
        let x = label.vertex;
        let i = game.owner(x);
        let succ = game.successors(x);
        let d = succ.len();
        let mut masks: Vec<u32> = (1..(1u32 << d)).collect();
        masks.sort_by_key(|m| (std::cmp::Reverse(m.count_ones()), *m));
        let tracked_slot = self.problem.tracked.iter().position(|&(j, _)| j == i);
        let mut out = Vec::new();
        for mask in masks {
            let kept: Vec<Vertex> = (0..d)
                .filter(|k| mask >> k & 1 == 1)
                .map(|k| succ[k])
                .collect();
            let blocked: Vec<Vertex> = (0..d)
                .filter(|k| mask >> k & 1 == 0)
                .map(|k| succ[k])
                .collect();
            // Players that must not win may not be led to their targets.
            if kept
                .iter()
                .any(|&u| !game.targets_at(u).intersection(label.none).is_empty())
            {
                continue;
            }
            let mut pen = label.pen.clone();
            if let Some(s) = tracked_slot {
                let cost: u64 = blocked
                    .iter()
                    .map(|&u| game.weight(x, u).expect("successor"))
                    .sum();
                pen[s] += cost;
                if pen[s] > self.problem.tracked[s].1 {
                    continue;
                }
            }
            // Constraint on the owner: forced to win everywhere when a blocked move would let it
            // win, guessed when it keeps several moves.
            let variants: Vec<(PlayerSet, PlayerSet)> =
                if label.winners.contains(i) || label.all.contains(i) {
                    vec![(label.all, label.none)]
                } else {
                    let mut forced = false;
                    let mut impossible = false;
                    for &u in &blocked {
                        match self.gamma(i, u, label.winners.union(game.targets_at(u)))? {
                            Some(true) => forced = true,
                            Some(false) => {}
                            None => impossible = true,
                        }
                    }
                    if impossible {
                        continue;
                    }
                    let all_i = (label.all.with(i), label.none);
                    let none_i = (label.all, label.none.with(i));
                    match (forced, label.none.contains(i)) {
                        (true, true) => vec![],
                        (true, false) => vec![all_i],
                        (false, true) => vec![(label.all, label.none)],
                        (false, false) if kept.len() >= 2 => vec![all_i, none_i],
                        (false, false) => vec![(label.all, label.none)],
                    }
                };
            for (all, none) in variants {
                if kept
                    .iter()
                    .any(|&u| !game.targets_at(u).intersection(none).is_empty())
                {
                    continue;
                }
                let children = kept
                    .iter()
                    .map(|&u| {
                        let winners = label.winners.union(game.targets_at(u));
                        self.intern_label(Label {
                            vertex: u,
                            winners,
                            all: all.difference(winners),
                            none,
                            pen: pen.clone(),
                        })
                    })
                    .collect();
                out.push(Choice { children });
            }
        }
        let out = Rc::new(out);
        self.choices.insert(l, out.clone());
        Ok(out)
    }

    /// The label itself, then the label with more players barred from winning. A node whose
    /// plays happen to avoid some targets can then match the labels of its descendants that are
    /// required to avoid them.
    fn strengthenings(&mut self, l: LabelId) -> Vec<LabelId> {
        let label = self.labels[l as usize].clone();
        let deviators = self.game.all_players().difference(self.problem.pre_winners);
        let open: Vec<Player> = deviators
            .difference(label.winners)
            .difference(label.all)
            .difference(label.none)
            .iter()
            .collect();
        let mut out = vec![l];
        for mask in 1..1u32 << open.len() {
            let mut none = label.none;
            for (k, &i) in open.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    none = none.with(i);
                }
            }
            out.push(self.intern_label(Label {
                none,
                ..label.clone()
            }));
        }
        out
    }

    fn solve(&mut self, l: LabelId, flag: bool, anc: SetId, depth: usize) -> Result<Res, Abort> {
        let mut dep = FREE;
        for s in self.strengthenings(l) {
            match self.solve_at(s, flag, anc, depth)? {
                Res::Found(t, h) => return Ok(Res::Found(t, h)),
                Res::Failed(d) => dep = dep.min(d),
            }
        }
        Ok(Res::Failed(dep))
    }

    /// Whether some path of the game from the label makes the weak set win without visiting
    /// targets of players barred from winning. Without one a flagged node cannot succeed.
    fn weak_reachable(&mut self, l: LabelId) -> bool {
        let Some(w) = self.problem.weak else {
            return true;
        };
        let label = &self.labels[l as usize];
        let key = (label.vertex, label.winners, label.none);
        if let Some(&b) = self.reachable_win.get(&key) {
            return b;
        }
        let game = self.game;
        let none = label.none;
        let mut seen = std::collections::HashSet::from([(label.vertex, label.winners)]);
        let mut stack = vec![(label.vertex, label.winners)];
        let mut found = false;
        while let Some((v, won)) = stack.pop() {
            if w.is_subset(won) {
                found = true;
                break;
            }
            for &u in game.successors(v) {
                let t = game.targets_at(u);
                if !t.intersection(none).is_empty() {
                    continue;
                }
                let next = (u, won.union(t));
                if seen.insert(next) {
                    stack.push(next);
                }
            }
        }
        self.reachable_win.insert(key, found);
        found
    }

    fn solve_at(&mut self, l: LabelId, flag: bool, anc: SetId, depth: usize) -> Result<Res, Abort> {
        self.counter.tick()?;
        if flag && !self.weak_reachable(l) {
            return Ok(Res::Failed(FREE));
        }
        let remaining = self.problem.height - depth;
        let key = (l, flag, anc);
        if let Some(&(t, h)) = self.found.get(&key) {
            if h <= remaining {
                return Ok(Res::Found(t, h));
            }
        }
        if self.failed.get(&key).is_some_and(|&h| h >= remaining) {
            return Ok(Res::Failed(FREE));
        }
        if let Some(&d) = self.on_stack.get(&key) {
            // A solution here would also solve the shallower copy with less height.
            return Ok(Res::Failed(d));
        }
        let choices = self.choices(l)?;
        if depth > 0 && !flag {
            let ancestors = &self.sets[anc as usize];
            for c in choices.iter() {
                let closes = c.children.iter().all(|&k| {
                    ancestors.binary_search(&k).is_ok() && self.labels[k as usize].all.is_empty()
                });
                if closes {
                    let t = self.push_template(Template::Leaf {
                        label: l,
                        links: c.children.clone(),
                    });
                    self.found.insert(key, (t, 0));
                    return Ok(Res::Found(t, 0));
                }
            }
        }
        if remaining == 0 {
            self.failed.insert(key, 0);
            return Ok(Res::Failed(FREE));
        }
        self.on_stack.insert(key, depth);
        let below = self.set_with(anc, l);
        let mut dep = FREE;
        let mut result = None;
        'choices: for (ci, c) in choices.iter().enumerate() {
            if depth == 0 && self.root_only.is_some_and(|k| k != ci) {
                continue;
            }
            let carriers: Vec<Option<usize>> = if flag {
                (0..c.children.len()).map(Some).collect()
            } else {
                vec![None]
            };
            for carrier in carriers {
                let mut kids = Vec::with_capacity(c.children.len());
                let mut height = 0;
                let mut ok = true;
                for (k, &child) in c.children.iter().enumerate() {
                    let child_flag = self.flag_after(carrier == Some(k), child);
                    match self.solve(child, child_flag, below, depth + 1)? {
                        Res::Found(t, h) => {
                            kids.push(t);
                            height = height.max(h + 1);
                        }
                        Res::Failed(d) => {
                            dep = dep.min(d);
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    if depth == 0 && self.problem.root_check {
                        let t = self.push_template(Template::Node {
                            label: l,
                            children: kids.clone(),
                        });
                        let tree = self.materialize(t);
                        if !self.gamma.accept_root(&tree)? {
                            continue;
                        }
                    }
                    result = Some((kids, height));
                    break 'choices;
                }
            }
        }
        self.on_stack.remove(&key);
        match result {
            Some((children, height)) => {
                let t = self.push_template(Template::Node { label: l, children });
                self.found.insert(key, (t, height));
                Ok(Res::Found(t, height))
            }
            None => {
                if dep >= depth {
                    let e = self.failed.entry(key).or_insert(0);
                    *e = (*e).max(remaining);
                    Ok(Res::Failed(FREE))
                } else {
                    Ok(Res::Failed(dep))
                }
            }
        }
    }

    fn push_template(&mut self, t: Template) -> TemplateId {
        self.templates.push(t);
        (self.templates.len() - 1) as TemplateId
    }

    fn materialize(&self, root: TemplateId) -> SymbolicTree {
        let label_of = |t: TemplateId| match &self.templates[t as usize] {
            Template::Leaf { label, .. } | Template::Node { label, .. } => *label,
        };
        let mut tree = SymbolicTree::new(self.labels[label_of(root) as usize].vertex);
        let mut path: Vec<(LabelId, NodeId)> = Vec::new();
        self.build(&mut tree, root, 0, &mut path);
        tree
    }

    fn build(
        &self,
        tree: &mut SymbolicTree,
        t: TemplateId,
        at: NodeId,
        path: &mut Vec<(LabelId, NodeId)>,
    ) {
        match &self.templates[t as usize] {
            Template::Leaf { links, .. } => {
                let targets = links
                    .iter()
                    .map(|l| {
                        path.iter()
                            .rev()
                            .find(|(pl, _)| pl == l)
                            .map(|&(_, n)| n)
                            .expect("link labels occur among ancestors")
                    })
                    .collect();
                tree.set_links(at, targets);
            }
            Template::Node { label, children } => {
                path.push((*label, at));
                for &c in children {
                    let cl = match &self.templates[c as usize] {
                        Template::Leaf { label, .. } | Template::Node { label, .. } => *label,
                    };
                    let node = tree.add_child(at, self.labels[cl as usize].vertex);
                    self.build(tree, c, node, path);
                }
                path.pop();
            }
        }
    }
}

/// Runs `f` on a thread with a large stack; searches recurse once per tree level.
pub fn with_big_stack<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(1 << 30)
            .spawn_scoped(s, f)
            .expect("spawn search thread")
            .join()
            .expect("search thread panicked")
    })
}
