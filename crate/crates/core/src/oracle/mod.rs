//! Brute-force ground truth for small games.

pub mod enumerate;
pub mod fixpoint;
pub mod penalty;
pub mod profiles;

use thiserror::Error;

pub use enumerate::{enumerate_small_witnesses, for_each_tree, ne_witness, SmallWitness};
pub use fixpoint::{decide_ne_fixpoint, decide_ne_symbolic};
pub use penalty::brute_force_tree_penalty;
pub use profiles::{
    best_response, enumerate_memoryless_multiprofiles, is_nash, is_very_weak_spe,
    oracle_permissive_check, Concept, Counterexample, ProductState, Verdict, DEFAULT_STATE_CAP,
};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("profile allows more than one successor somewhere")]
    NonSingleton,
    #[error("more than {0} product states explored")]
    StateCap(u64),
    #[error("enumeration budget exhausted")]
    CombinatorialCap,
}
