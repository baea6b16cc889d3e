//! Weighted multiplayer reachability games: file format, validation, plays and gains.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::players::{Player, PlayerSet, MAX_PLAYERS};

/// Dense vertex index into a [`ReachabilityGame`].
pub type Vertex = usize;

/// On-disk game description.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub players: usize,
    pub vertices: Vec<VertexEntry>,
    pub edges: Vec<EdgeEntry>,
    #[serde(default)]
    pub targets: BTreeMap<String, Vec<String>>,
    pub init: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexEntry {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owner: Option<Player>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeEntry {
    pub from: String,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<u64>,
}

/// A broken game invariant, reported as data by [`validate`].
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("player count {0} outside 1..={max}", max = MAX_PLAYERS)]
    PlayerCount(usize),
    #[error("duplicate vertex `{0}`")]
    DuplicateVertex(String),
    #[error("owner not total: vertex `{0}` has no owner")]
    MissingOwner(String),
    #[error("vertex `{vertex}` owned by unknown player {owner}")]
    OwnerOutOfRange { vertex: String, owner: Player },
    #[error("edge `{from}` -> `{to}` mentions an unknown vertex")]
    UnknownEndpoint { from: String, to: String },
    #[error("duplicate edge `{from}` -> `{to}`")]
    DuplicateEdge { from: String, to: String },
    #[error("deadlock at `{0}`: no outgoing edge")]
    Deadlock(String),
    #[error("target key `{0}` is not a player number")]
    UnknownTargetPlayer(String),
    #[error("target of player {player} mentions unknown vertex `{vertex}`")]
    UnknownTargetVertex { player: String, vertex: String },
    #[error("initial vertex `{0}` is unknown")]
    UnknownInit(String),
}

#[derive(Debug, Error)]
pub enum GameError {
    #[error("cannot read game file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed game file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid game: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Every violated invariant of a game description; empty iff the description is a valid game.
pub fn validate(file: &GameFile) -> Vec<Violation> {
    let mut out = Vec::new();
    if file.players == 0 || file.players > MAX_PLAYERS {
        out.push(Violation::PlayerCount(file.players));
    }
    let mut ids = HashSet::new();
    for v in &file.vertices {
        if !ids.insert(v.id.as_str()) {
            out.push(Violation::DuplicateVertex(v.id.clone()));
        }
        match v.owner {
            None => out.push(Violation::MissingOwner(v.id.clone())),
            Some(o) if o == 0 || o > file.players => out.push(Violation::OwnerOutOfRange {
                vertex: v.id.clone(),
                owner: o,
            }),
            Some(_) => {}
        }
    }
    let mut seen = HashSet::new();
    let mut has_out = HashSet::new();
    for e in &file.edges {
        if !ids.contains(e.from.as_str()) || !ids.contains(e.to.as_str()) {
            out.push(Violation::UnknownEndpoint {
                from: e.from.clone(),
                to: e.to.clone(),
            });
            continue;
        }
        if !seen.insert((e.from.as_str(), e.to.as_str())) {
            out.push(Violation::DuplicateEdge {
                from: e.from.clone(),
                to: e.to.clone(),
            });
        }
        has_out.insert(e.from.as_str());
    }
    let mut reported = HashSet::new();
    for v in &file.vertices {
        if !has_out.contains(v.id.as_str()) && reported.insert(v.id.as_str()) {
            out.push(Violation::Deadlock(v.id.clone()));
        }
    }
    for (key, members) in &file.targets {
        match key.parse::<Player>() {
            Ok(p) if p >= 1 && p <= file.players => {}
            _ => out.push(Violation::UnknownTargetPlayer(key.clone())),
        }
        for m in members {
            if !ids.contains(m.as_str()) {
                out.push(Violation::UnknownTargetVertex {
                    player: key.clone(),
                    vertex: m.clone(),
                });
            }
        }
    }
    if !ids.contains(file.init.as_str()) {
        out.push(Violation::UnknownInit(file.init.clone()));
    }
    out
}

/// A validated game with dense vertex indices. Immutable after construction.
#[derive(Clone, Debug)]
pub struct ReachabilityGame {
    players: usize,
    names: Vec<String>,
    index: HashMap<String, Vertex>,
    owner: Vec<Player>,
    succ: Vec<Vec<Vertex>>,
    weight: Vec<Vec<u64>>,
    target_of: Vec<PlayerSet>,
    init: Vertex,
}

impl ReachabilityGame {
    pub fn from_file(file: &GameFile) -> Result<Self, GameError> {
        let violations = validate(file);
        if !violations.is_empty() {
            return Err(GameError::Invalid(violations));
        }
        let names: Vec<String> = file.vertices.iter().map(|v| v.id.clone()).collect();
        let index: HashMap<String, Vertex> = names
            .iter()
            .enumerate()
            .map(|(k, n)| (n.clone(), k))
            .collect();
        let owner = file.vertices.iter().map(|v| v.owner.unwrap_or(1)).collect();
        let mut adj: Vec<Vec<(Vertex, u64)>> = vec![Vec::new(); names.len()];
        for e in &file.edges {
            adj[index[&e.from]].push((index[&e.to], e.weight.unwrap_or(1)));
        }
        let mut succ = Vec::with_capacity(adj.len());
        let mut weight = Vec::with_capacity(adj.len());
        for mut list in adj {
            list.sort_unstable();
            succ.push(list.iter().map(|&(v, _)| v).collect());
            weight.push(list.iter().map(|&(_, w)| w).collect());
        }
        let mut target_of = vec![PlayerSet::EMPTY; names.len()];
        for (key, members) in &file.targets {
            let p: Player = key.parse().expect("validated");
            for m in members {
                target_of[index[m]].insert(p);
            }
        }
        Ok(ReachabilityGame {
            players: file.players,
            init: index[&file.init],
            names,
            index,
            owner,
            succ,
            weight,
            target_of,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, GameError> {
        let file: GameFile = serde_json::from_str(text)?;
        Self::from_file(&file)
    }

    pub fn load(path: &Path) -> Result<Self, GameError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// The description this game was built from, with explicit weights.
    pub fn to_file(&self) -> GameFile {
        let mut targets = BTreeMap::new();
        for i in self.player_ids() {
            let members: Vec<String> = self
                .vertices()
                .filter(|&v| self.target_of[v].contains(i))
                .map(|v| self.names[v].clone())
                .collect();
            targets.insert(i.to_string(), members);
        }
        GameFile {
            players: self.players,
            vertices: self
                .vertices()
                .map(|v| VertexEntry {
                    id: self.names[v].clone(),
                    owner: Some(self.owner[v]),
                })
                .collect(),
            edges: self
                .vertices()
                .flat_map(|v| {
                    self.edges_from(v).map(move |(u, w)| EdgeEntry {
                        from: self.names[v].clone(),
                        to: self.names[u].clone(),
                        weight: Some(w),
                    })
                })
                .collect(),
            targets,
            init: self.names[self.init].clone(),
        }
    }

    pub fn player_count(&self) -> usize {
        self.players
    }

    pub fn player_ids(&self) -> impl Iterator<Item = Player> {
        1..=self.players
    }

    pub fn all_players(&self) -> PlayerSet {
        PlayerSet::all(self.players)
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn vertices(&self) -> std::ops::Range<Vertex> {
        0..self.names.len()
    }

    pub fn name(&self, v: Vertex) -> &str {
        &self.names[v]
    }

    pub fn vertex(&self, name: &str) -> Result<Vertex, GameError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| GameError::UnknownVertex(name.to_string()))
    }

    pub fn owner(&self, v: Vertex) -> Player {
        self.owner[v]
    }

    pub fn init(&self) -> Vertex {
        self.init
    }

    /// Successors of `v` in increasing index order.
    pub fn successors(&self, v: Vertex) -> &[Vertex] {
        &self.succ[v]
    }

    pub fn edges_from(&self, v: Vertex) -> impl Iterator<Item = (Vertex, u64)> + '_ {
        self.succ[v]
            .iter()
            .copied()
            .zip(self.weight[v].iter().copied())
    }

    pub fn has_edge(&self, v: Vertex, u: Vertex) -> bool {
        self.succ[v].binary_search(&u).is_ok()
    }

    pub fn weight(&self, v: Vertex, u: Vertex) -> Option<u64> {
        self.succ[v]
            .binary_search(&u)
            .ok()
            .map(|k| self.weight[v][k])
    }

    /// Players whose target set contains `v`.
    pub fn targets_at(&self, v: Vertex) -> PlayerSet {
        self.target_of[v]
    }

    pub fn is_target(&self, i: Player, v: Vertex) -> bool {
        self.target_of[v].contains(i)
    }

    /// Players already winning at the initial vertex.
    pub fn initial_winners(&self) -> PlayerSet {
        self.target_of[self.init]
    }

    /// Players visiting their target at some position ≥ 1 of `h` (the first vertex is skipped).
    pub fn visit_set(&self, h: &History) -> PlayerSet {
        h.0.iter()
            .skip(1)
            .fold(PlayerSet::EMPTY, |acc, &v| acc.union(self.target_of[v]))
    }

    /// 1 iff some vertex of the play, the first included, lies in the target of `i`.
    pub fn gain_on_lasso(&self, play: &Lasso, i: Player) -> u8 {
        let hit = play
            .prefix
            .iter()
            .chain(play.cycle.iter())
            .any(|&v| self.is_target(i, v));
        u8::from(hit)
    }

    pub fn with_init(&self, v: Vertex) -> Self {
        let mut g = self.clone();
        g.init = v;
        g
    }
}

/// A non-empty vertex sequence following edges.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct History(pub Vec<Vertex>);

impl History {
    pub fn new(game: &ReachabilityGame, vertices: Vec<Vertex>) -> Result<Self, PlayError> {
        if vertices.is_empty() {
            return Err(PlayError::Empty);
        }
        check_edges(game, &vertices)?;
        Ok(History(vertices))
    }

    pub fn last(&self) -> Vertex {
        *self.0.last().expect("histories are non-empty")
    }
}

/// An ultimately periodic play `prefix · cycle^ω`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Lasso {
    pub prefix: Vec<Vertex>,
    pub cycle: Vec<Vertex>,
}

impl Lasso {
    pub fn new(
        game: &ReachabilityGame,
        prefix: Vec<Vertex>,
        cycle: Vec<Vertex>,
    ) -> Result<Self, PlayError> {
        if cycle.is_empty() {
            return Err(PlayError::Empty);
        }
        let seq: Vec<Vertex> = prefix.iter().chain(cycle.iter()).copied().collect();
        check_edges(game, &seq)?;
        let (a, b) = (*cycle.last().unwrap(), cycle[0]);
        if !game.has_edge(a, b) {
            return Err(PlayError::NotAnEdge(a, b));
        }
        Ok(Lasso { prefix, cycle })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlayError {
    #[error("empty vertex sequence")]
    Empty,
    #[error("({0}, {1}) is not an edge")]
    NotAnEdge(Vertex, Vertex),
}

fn check_edges(game: &ReachabilityGame, seq: &[Vertex]) -> Result<(), PlayError> {
    for w in seq.windows(2) {
        if !game.has_edge(w[0], w[1]) {
            return Err(PlayError::NotAnEdge(w[0], w[1]));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn names(g: &ReachabilityGame, vs: &[Vertex]) -> Vec<String> {
        vs.iter().map(|&v| g.name(v).to_string()).collect()
    }

    fn ids(g: &ReachabilityGame, ns: &[&str]) -> Vec<Vertex> {
        ns.iter().map(|n| g.vertex(n).unwrap()).collect()
    }

    #[test]
    fn fixtures_validate() {
        assert!(validate(&fixtures::g2_file()).is_empty());
        assert!(validate(&fixtures::g1_file()).is_empty());
    }

    #[test]
    fn removing_the_only_edge_is_a_deadlock() {
        let mut f = fixtures::g2_file();
        f.edges.retain(|e| !(e.from == "v3" && e.to == "v3"));
        assert_eq!(validate(&f), vec![Violation::Deadlock("v3".into())]);
    }

    #[test]
    fn missing_owner_is_reported() {
        let mut f = fixtures::g2_file();
        f.vertices.iter_mut().find(|v| v.id == "v4").unwrap().owner = None;
        assert_eq!(validate(&f), vec![Violation::MissingOwner("v4".into())]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"players":1,"vertices":[{"id":"a","owner":1}],"edges":[{"from":"a","to":"a"}],"targets":{},"init":"a","extra":0}"#;
        assert!(matches!(
            ReachabilityGame::from_json(text),
            Err(GameError::Json(_))
        ));
    }

    #[test]
    fn weights_default_to_one() {
        let g = fixtures::g2();
        let (v5, v6) = (g.vertex("v5").unwrap(), g.vertex("v6").unwrap());
        assert_eq!(g.weight(v5, v5), Some(10));
        assert_eq!(g.weight(v5, v6), Some(1));
    }

    #[test]
    fn successor_examples() {
        let g2 = fixtures::g2();
        assert_eq!(
            names(&g2, g2.successors(g2.vertex("v0").unwrap())),
            ["v1", "v2", "v5"]
        );
        assert_eq!(names(&g2, g2.successors(g2.vertex("v3").unwrap())), ["v3"]);
        let g1 = fixtures::g1();
        assert_eq!(
            names(&g1, g1.successors(g1.vertex("v0").unwrap())),
            ["v0", "v1"]
        );
        assert!(g1.vertex("nope").is_err());
    }

    #[test]
    fn visit_set_skips_position_zero() {
        let g = fixtures::g2();
        let h = |ns: &[&str]| History::new(&g, ids(&g, ns)).unwrap();
        assert_eq!(
            g.visit_set(&h(&["v0", "v1", "v4"])),
            PlayerSet::singleton(2)
        );
        assert_eq!(g.visit_set(&h(&["v0", "v5", "v6"])), PlayerSet::all(2));
        assert_eq!(g.visit_set(&h(&["v6", "v0"])), PlayerSet::EMPTY);
    }

    #[test]
    fn initial_winner_examples() {
        assert_eq!(fixtures::g2().initial_winners(), PlayerSet::EMPTY);
        assert_eq!(fixtures::g1().initial_winners(), PlayerSet::EMPTY);
        let g = fixtures::g2();
        let at_v6 = g.with_init(g.vertex("v6").unwrap());
        assert_eq!(at_v6.initial_winners(), PlayerSet::all(2));
    }

    #[test]
    fn gain_examples() {
        let g = fixtures::g2();
        let play = Lasso::new(&g, ids(&g, &["v0", "v1", "v4"]), ids(&g, &["v3"])).unwrap();
        assert_eq!(g.gain_on_lasso(&play, 1), 1);
        assert_eq!(g.gain_on_lasso(&play, 2), 1);
        let stuck = Lasso::new(&g, ids(&g, &["v0"]), ids(&g, &["v5"])).unwrap();
        assert_eq!(g.gain_on_lasso(&stuck, 1), 0);
        assert!(Lasso::new(&g, vec![], ids(&g, &["v0", "v1"])).is_err());
    }

    #[test]
    fn file_round_trip() {
        let g = fixtures::g2();
        let again = ReachabilityGame::from_file(&g.to_file()).unwrap();
        assert_eq!(again.to_file(), g.to_file());
    }
}
