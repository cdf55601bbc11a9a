//! Download-time optimal placement of network-coded data over fog and cloud
//! storage nodes.
//!
//! * [`model`]: node parameters, M/M/1 service delay and download times.
//! * [`allocator`]: equal, rate-proportional and optimal (water-filling) splits,
//!   with an optimality certificate and a brute-force grid oracle.
//! * [`rlnc`]: random linear network coding over GF(2), GF(16) and GF(256).
//! * [`scenario`]: seeded snapshot generation and parameter sweeps.
//! * [`stats`]: box-plot summaries and linear trend fits.
//! * [`cli`]: the `fogstore` command line.

pub mod allocator;
pub mod cli;
pub mod model;
pub mod rlnc;
pub mod scenario;
pub mod stats;

pub use allocator::{alloc_equal, alloc_opt, alloc_rate, kkt_residuals, oracle_opt, AllocConstraints, OptSolution};
pub use model::{Allocation, DerivedNode, NodeSpec, NodeTier, Snapshot, Strategy};
pub use scenario::{sample_snapshot, single_best_node, ScenarioConfig};
