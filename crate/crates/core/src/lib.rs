//! Permissive Nash and subgame perfect equilibria in multiplayer reachability games.
//!
//! Games are finite weighted graphs where each player wants to visit its target set. A
//! multi-strategy lets a player keep several successors; blocking an edge costs its weight. The
//! crate decides whether equilibria exist under penalty bounds and winning requirements, emits
//! finite tree witnesses, turns them into finite-memory profiles and cross-checks everything
//! against brute-force oracles.

pub mod cli;
pub mod fixtures;
pub mod game;
pub mod oracle;
pub mod penalty;
pub mod players;
pub mod search;
pub mod witness;
pub mod zero_sum;

pub use game::{ReachabilityGame, Vertex};
pub use penalty::{Penalty, Thresholds};
pub use players::{Player, PlayerSet};
