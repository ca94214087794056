//! LIDAR-specific computations: topology-history mobility estimate, node
//! weight, per-cluster ID reassignment and Hello-period adaptation.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{ClusterView, NodeId, TopologyHistory};

/// Cardinality of the symmetric difference of two neighbor sets.
pub fn tht_distance<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> usize {
    a.symmetric_difference(b).count()
}

/// Mean distance between consecutive rows (newest first) over the
/// `min(p, rows - 1)` most recent pairs. Zero with fewer than two rows.
pub fn mobility_rate_rows<T: Ord>(rows: &[&BTreeSet<T>], p: usize) -> f64 {
    if rows.len() < 2 || p == 0 {
        return 0.0;
    }
    let pairs = p.min(rows.len() - 1);
    let sum: usize = rows.windows(2).take(pairs).map(|w| tht_distance(w[0], w[1])).sum();
    sum as f64 / pairs as f64
}

/// Mobility rate `M_v,p` of a node from its topology history.
pub fn mobility_rate(tht: &TopologyHistory, p: usize) -> f64 {
    let rows: Vec<_> = tht.rows().collect();
    mobility_rate_rows(&rows, p)
}

/// `W_v = w1 * B_v - w2 * M_v,p`.
pub fn compute_weight(battery: f64, mobility: f64, w1: f64, w2: f64) -> f64 {
    w1 * battery - w2 * mobility
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightEntry {
    pub node: NodeId,
    pub w: f64,
    pub battery: f64,
    pub mobility: f64,
}

impl WeightEntry {
    pub fn new(node: NodeId, battery: f64, mobility: f64, w1: f64, w2: f64) -> Self {
        WeightEntry {
            node,
            w: compute_weight(battery, mobility, w1, w2),
            battery,
            mobility,
        }
    }
}

/// Old ID to new ID within one cluster; a permutation of the cluster's pool.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IdAssignment {
    map: BTreeMap<NodeId, NodeId>,
}

impl IdAssignment {
    pub fn new_id(&self, old: NodeId) -> Option<NodeId> {
        self.map.get(&old).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.map.iter().map(|(a, b)| (*a, *b))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().all(|(a, b)| a == b)
    }

    pub fn is_bijection(&self) -> bool {
        let old: BTreeSet<_> = self.map.keys().collect();
        let new: BTreeSet<_> = self.map.values().collect();
        new.len() == self.map.len() && old == new
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReassignError {
    #[error("no weight reported for cluster node {0}")]
    MissingWeight(NodeId),
    #[error("weight reported for {0}, which is not in the cluster")]
    UnexpectedWeight(NodeId),
    #[error("duplicate weight entry for {0}")]
    DuplicateWeight(NodeId),
}

/// Permutes the cluster's own IDs so that the heaviest node gets the smallest
/// ID. Equal weights keep their current relative ID order.
pub fn reassign_ids(cluster: &ClusterView, weights: &[WeightEntry]) -> Result<IdAssignment, ReassignError> {
    let expected: BTreeSet<NodeId> = cluster.closed_members().collect();
    let mut seen = BTreeSet::new();
    for e in weights {
        if !expected.contains(&e.node) {
            return Err(ReassignError::UnexpectedWeight(e.node));
        }
        if !seen.insert(e.node) {
            return Err(ReassignError::DuplicateWeight(e.node));
        }
    }
    if let Some(missing) = expected.difference(&seen).next() {
        return Err(ReassignError::MissingWeight(*missing));
    }

    let mut order: Vec<&WeightEntry> = weights.iter().collect();
    order.sort_by(|a, b| b.w.total_cmp(&a.w).then(a.node.cmp(&b.node)));
    // `expected` iterates in ascending ID order: that is the pool
    let map = order.iter().zip(expected.iter()).map(|(e, &id)| (e.node, id)).collect();
    Ok(IdAssignment { map })
}

/// Hello period for a cluster with mean mobility `m_c`: `hp_max` when static,
/// falling linearly to `hp_min` at `m_sat`, rounded to the nearest tick.
pub fn adapt_hp(m_c: f64, hp_min: u32, hp_max: u32, m_sat: f64) -> u32 {
    let frac = if m_c.is_nan() { 0.0 } else { (m_c / m_sat).clamp(0.0, 1.0) };
    let hp = f64::from(hp_max) - f64::from(hp_max - hp_min) * frac;
    (hp.round() as u32).clamp(hp_min, hp_max)
}
