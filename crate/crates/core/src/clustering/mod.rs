//! Cluster-head election algorithms and the LIDAR maintenance computations.

pub mod election;
pub mod lidar;
pub mod rounds;

pub use election::{
    attachments, hd_elect, heads, lid_elect, roles, wca_lite_elect, wca_lite_maintain, wca_weight, WcaInputs,
    WcaParams,
};
pub use lidar::{
    adapt_hp, compute_weight, mobility_rate, reassign_ids, tht_distance, IdAssignment, ReassignError, WeightEntry,
};
