//! Congested clique distance algorithms.
//!
//! A deterministic round-synchronous simulator of the congested clique model
//! plus the library built on top of it: output-sensitive sparse semiring
//! matrix multiplication, filtered multiplication, distance tools (k-nearest,
//! source detection, distance-through-sets), hopsets, and the end-user
//! shortest-path algorithms (MSSP, approximate APSP, exact SSSP, diameter).
//! Every algorithm is accounted round by round and checked against
//! sequential oracles.

pub mod error;
pub mod gen;
pub mod graph;
pub mod matrix;
pub mod matmul;
pub mod oracle;
pub mod partition;
pub mod semiring;
pub mod sim;

pub use error::{Error, Result};
pub use graph::Graph;
pub use semiring::{AugMinPlus, AugWeight, Boolean, MinPlus, Semiring, INF};
pub use sim::{Clique, Message, NodeId, RoundLedger, SimConfig, Word};
