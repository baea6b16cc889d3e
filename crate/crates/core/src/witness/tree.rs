//! Symbolic trees: finite trees whose leaves link back to ancestors.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::WitnessError;
use crate::game::{ReachabilityGame, Vertex};

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TreeNode {
    pub vertex: Vertex,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub leaf_links: Vec<NodeId>,
}

/// A finite tree over game vertices plus a map sending each leaf to some of its proper ancestors.
/// Node ids are dense indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymbolicTree {
    root: NodeId,
    nodes: Vec<TreeNode>,
}

impl SymbolicTree {
    pub fn new(root_vertex: Vertex) -> Self {
        SymbolicTree {
            root: 0,
            nodes: vec![TreeNode {
                vertex: root_vertex,
                parent: None,
                children: Vec::new(),
                leaf_links: Vec::new(),
            }],
        }
    }

    pub fn add_child(&mut self, parent: NodeId, vertex: Vertex) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            vertex,
            parent: Some(parent),
            children: Vec::new(),
            leaf_links: Vec::new(),
        });
        self.nodes[parent].children.push(id);
        id
    }

    pub fn set_links(&mut self, leaf: NodeId, targets: Vec<NodeId>) {
        self.nodes[leaf].leaf_links = targets;
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn root_vertex(&self) -> Vertex {
        self.nodes[self.root].vertex
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, n: NodeId) -> &TreeNode {
        &self.nodes[n]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node_ids(&self) -> std::ops::Range<NodeId> {
        0..self.nodes.len()
    }

    pub fn vertex(&self, n: NodeId) -> Vertex {
        self.nodes[n].vertex
    }

    pub fn is_leaf(&self, n: NodeId) -> bool {
        self.nodes[n].children.is_empty()
    }

    /// Children of an internal node, link targets of a leaf: the edges of the unfolding graph.
    pub fn unfolding_successors(&self, n: NodeId) -> &[NodeId] {
        let node = &self.nodes[n];
        if node.children.is_empty() {
            &node.leaf_links
        } else {
            &node.children
        }
    }

    /// Successors of the node's vertex that the tree does not keep.
    pub fn blocked_set(&self, game: &ReachabilityGame, n: NodeId) -> Vec<Vertex> {
        let kept: Vec<Vertex> = self
            .unfolding_successors(n)
            .iter()
            .map(|&s| self.vertex(s))
            .collect();
        game.successors(self.vertex(n))
            .iter()
            .copied()
            .filter(|u| !kept.contains(u))
            .collect()
    }

    pub fn blocked_weight(&self, game: &ReachabilityGame, n: NodeId) -> u64 {
        let v = self.vertex(n);
        self.blocked_set(game, n)
            .into_iter()
            .map(|u| game.weight(v, u).expect("blocked vertices are successors"))
            .sum()
    }

    pub fn depth(&self, n: NodeId) -> usize {
        let mut d = 0;
        let mut cur = n;
        while let Some(p) = self.nodes[cur].parent {
            d += 1;
            cur = p;
        }
        d
    }

    /// Largest node depth; the root alone has height 0.
    pub fn height(&self) -> usize {
        let mut depth = vec![0usize; self.nodes.len()];
        let mut best = 0;
        for n in self.preorder() {
            if let Some(p) = self.nodes[n].parent {
                depth[n] = depth[p] + 1;
                best = best.max(depth[n]);
            }
        }
        best
    }

    /// Nodes in depth-first order from the root, children in stored order.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.nodes[n].children.iter().rev());
        }
        out
    }

    pub fn is_ancestor(&self, a: NodeId, n: NodeId) -> bool {
        let mut cur = self.nodes[n].parent;
        while let Some(p) = cur {
            if p == a {
                return true;
            }
            cur = self.nodes[p].parent;
        }
        false
    }

    /// Structural validity against the game.
    pub fn validate(&self, game: &ReachabilityGame) -> Result<(), WitnessError> {
        if self.nodes.is_empty() {
            return Err(WitnessError::EmptyWitness);
        }
        if self.nodes[self.root].parent.is_some() {
            return Err(WitnessError::Malformed("root has a parent".into()));
        }
        for (id, node) in self.nodes.iter().enumerate() {
            if node.vertex >= game.vertex_count() {
                return Err(WitnessError::Malformed(format!(
                    "node {id} has an unknown vertex"
                )));
            }
            for &c in &node.children {
                if c >= self.nodes.len() || self.nodes[c].parent != Some(id) {
                    return Err(WitnessError::Malformed(format!(
                        "node {id}: child {c} does not point back"
                    )));
                }
            }
            if let Some(p) = node.parent {
                if p >= self.nodes.len() || !self.nodes[p].children.contains(&id) {
                    return Err(WitnessError::Malformed(format!(
                        "node {id}: parent {p} does not list it"
                    )));
                }
            } else if id != self.root {
                return Err(WitnessError::Malformed(format!(
                    "node {id} is a second root"
                )));
            }
        }
        if self.preorder().len() != self.nodes.len() {
            return Err(WitnessError::Malformed(
                "some nodes are unreachable from the root".into(),
            ));
        }
        for (id, node) in self.nodes.iter().enumerate() {
            let v = node.vertex;
            if node.children.is_empty() {
                if node.leaf_links.is_empty() {
                    return Err(WitnessError::Malformed(format!(
                        "leaf {id} has no leaf links"
                    )));
                }
                let mut seen = HashSet::new();
                for &t in &node.leaf_links {
                    if t >= self.nodes.len() || !self.is_ancestor(t, id) {
                        return Err(WitnessError::Malformed(format!(
                            "leaf {id} links to {t}, which is not a proper ancestor"
                        )));
                    }
                    if !game.has_edge(v, self.nodes[t].vertex) {
                        return Err(WitnessError::Malformed(format!(
                            "leaf {id} links along a non-edge"
                        )));
                    }
                    if !seen.insert(self.nodes[t].vertex) {
                        return Err(WitnessError::Malformed(format!(
                            "leaf {id} links to two nodes on the same vertex"
                        )));
                    }
                }
            } else {
                if !node.leaf_links.is_empty() {
                    return Err(WitnessError::Malformed(format!(
                        "internal node {id} has leaf links"
                    )));
                }
                let mut seen = HashSet::new();
                for &c in &node.children {
                    let u = self.nodes[c].vertex;
                    if !game.has_edge(v, u) {
                        return Err(WitnessError::Malformed(format!(
                            "node {id}: child {c} is not a successor"
                        )));
                    }
                    if !seen.insert(u) {
                        return Err(WitnessError::Malformed(format!(
                            "node {id} repeats a child vertex"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_file(&self, game: &ReachabilityGame) -> TreeFile {
        TreeFile {
            root: self.root,
            nodes: self
                .nodes
                .iter()
                .enumerate()
                .map(|(id, n)| NodeEntry {
                    id,
                    vertex: game.name(n.vertex).to_string(),
                    children: n.children.clone(),
                    leaf_links: n.leaf_links.clone(),
                })
                .collect(),
        }
    }

    /// Builds a tree from its file form; ids may be arbitrary and are renumbered densely.
    pub fn from_file(game: &ReachabilityGame, file: &TreeFile) -> Result<Self, WitnessError> {
        if file.nodes.is_empty() {
            return Err(WitnessError::EmptyWitness);
        }
        let mut dense = HashMap::new();
        for (k, n) in file.nodes.iter().enumerate() {
            if dense.insert(n.id, k).is_some() {
                return Err(WitnessError::Malformed(format!(
                    "duplicate node id {}",
                    n.id
                )));
            }
        }
        let map = |id: &usize| {
            dense
                .get(id)
                .copied()
                .ok_or_else(|| WitnessError::Malformed(format!("unknown node id {id}")))
        };
        let mut nodes = Vec::with_capacity(file.nodes.len());
        for n in &file.nodes {
            let vertex = game
                .vertex(&n.vertex)
                .map_err(|_| WitnessError::Malformed(format!("unknown vertex `{}`", n.vertex)))?;
            nodes.push(TreeNode {
                vertex,
                parent: None,
                children: n.children.iter().map(map).collect::<Result<_, _>>()?,
                leaf_links: n.leaf_links.iter().map(map).collect::<Result<_, _>>()?,
            });
        }
        for k in 0..nodes.len() {
            for c in nodes[k].children.clone() {
                if nodes[c].parent.is_some() {
                    return Err(WitnessError::Malformed(format!(
                        "node {} has two parents",
                        file.nodes[c].id
                    )));
                }
                nodes[c].parent = Some(k);
            }
        }
        let tree = SymbolicTree {
            root: map(&file.root)?,
            nodes,
        };
        tree.validate(game)?;
        Ok(tree)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeFile {
    pub root: usize,
    pub nodes: Vec<NodeEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub id: usize,
    pub vertex: String,
    #[serde(default)]
    pub children: Vec<usize>,
    #[serde(default)]
    pub leaf_links: Vec<usize>,
}
