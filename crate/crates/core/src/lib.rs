//! Deterministic discrete-time simulator for mobile ad-hoc network
//! clustering.
//!
//! Four cluster-head election schemes are provided: Lowest-ID (LID),
//! Highest-Degree (HD), a simplified Weighted Clustering Algorithm
//! (WCA-lite) and Lowest-ID with Adaptive ID Reassignment (LIDAR). LIDAR
//! periodically permutes node IDs inside each cluster so that nodes with
//! more battery and less mobility receive the lowest IDs, and adapts the
//! Hello period of each cluster to its measured mobility.
//!
//! [`engine::run`] executes one [`model::SimConfig`] and returns a
//! [`metrics::MetricsReport`]; the same configuration always produces the
//! same report.

pub mod cli;
pub mod clustering;
pub mod energy;
pub mod engine;
pub mod metrics;
pub mod mobility;
pub mod model;
pub mod radio;
pub mod rng;

pub use engine::{run, Simulation};
pub use metrics::MetricsReport;
pub use model::{validate_config, Algorithm, ClusterView, HostId, NodeId, NodeState, Role, SimConfig};
