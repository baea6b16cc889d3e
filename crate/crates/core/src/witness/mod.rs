//! Finite witnesses for permissive equilibria and their semantics.

pub mod analysis;
pub mod dot;
pub mod forest;
pub mod labels;
pub mod machine;
pub mod tree;

use thiserror::Error;

pub use analysis::{
    check_good_tree, tree_penalty, GammaSource, ResistanceFailure, Strength, TreeAnalysis,
    Unfolding, WinMode,
};
pub use forest::{check_good_forest, compute_out_set, ForestReport, SymbolicForest, TreeIndex};
pub use labels::{compute_labels, NodeLabel};
pub use machine::{
    extract_multistrategy_ne, extract_multistrategy_spe, ne_machine_unchecked,
    spe_machine_unchecked, MachineState, MultiStrategyMachine,
};
pub use tree::{NodeId, SymbolicTree};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum WitnessError {
    #[error("empty witness")]
    EmptyWitness,
    #[error("malformed witness: {0}")]
    Malformed(String),
    #[error("leaf {leaf} links to node {target} with a different label")]
    InconsistentLink { leaf: NodeId, target: NodeId },
    #[error("tree is not rooted at the initial vertex")]
    WrongRoot,
    #[error("forest has no tree for index {0}")]
    MissingTree(TreeIndex),
    #[error("witness is not good: {0}")]
    NotGood(String),
}
