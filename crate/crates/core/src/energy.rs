//! Role-dependent linear battery drain.

use serde::{Deserialize, Serialize};

use crate::model::{ClusterView, HostId, NodeState, Role};

/// Drain rates in energy units per tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyParams {
    /// Ordinary and gateway nodes.
    pub e_ord: f64,
    /// Cluster head, independent of load.
    pub e_ch_base: f64,
    /// Cluster head, per attached member.
    pub e_ch_per_member: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        EnergyParams {
            e_ord: 0.05,
            e_ch_base: 0.05,
            e_ch_per_member: 0.02,
        }
    }
}

impl EnergyParams {
    pub fn check(&self) -> Result<(), String> {
        if !(self.e_ord >= 0.0 && self.e_ch_base >= 0.0 && self.e_ch_per_member >= 0.0) {
            return Err("all rates must be non-negative".into());
        }
        if self.e_ch_base < self.e_ord {
            return Err("e_ch_base must be >= e_ord".into());
        }
        Ok(())
    }

    /// Drain per tick for a node in `role` heading `members` members.
    pub fn rate(&self, role: Role, members: usize) -> f64 {
        match role {
            Role::ClusterHead => self.e_ch_base + self.e_ch_per_member * members as f64,
            Role::Gateway | Role::Ordinary => self.e_ord,
        }
    }
}

/// Drains every live node for `dt` ticks and returns the hosts that died.
///
/// A dead head leaves its members unattached; they are picked up by the next
/// maintenance round.
pub fn step_energy(
    nodes: &mut [NodeState],
    clusters: &[ClusterView],
    params: &EnergyParams,
    dt: u64,
) -> Vec<HostId> {
    let mut died = Vec::new();
    for node in nodes.iter_mut().filter(|n| n.is_alive()) {
        let members = match node.role {
            Role::ClusterHead => clusters
                .iter()
                .find(|c| c.head == node.id)
                .map_or(0, |c| c.members.len()),
            _ => 0,
        };
        let drain = params.rate(node.role, members) * dt as f64;
        node.battery = (node.battery - drain).max(0.0);
        if !node.is_alive() {
            died.push(node.host);
        }
    }

    for host in &died {
        let dead = &nodes[host.index()];
        if dead.role == Role::ClusterHead {
            let head = dead.id;
            for n in nodes.iter_mut().filter(|n| n.cluster_of == Some(head)) {
                n.cluster_of = None;
                if n.role != Role::ClusterHead {
                    n.role = Role::Ordinary;
                }
            }
        }
        let dead = &mut nodes[host.index()];
        dead.cluster_of = None;
        dead.role = Role::Ordinary;
    }
    died
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{NodeId, Vec2};

    fn node(i: u32, battery: f64, role: Role) -> NodeState {
        let mut n = NodeState::new(HostId(i), NodeId(i), Vec2::ZERO, battery, 3, 5);
        n.role = role;
        n
    }

    #[test]
    fn ordinary_drains_linearly() {
        let params = EnergyParams {
            e_ord: 1.0,
            e_ch_base: 1.0,
            e_ch_per_member: 0.5,
        };
        let mut nodes = vec![node(1, 10.0, Role::Ordinary)];
        step_energy(&mut nodes, &[], &params, 3);
        assert_eq!(nodes[0].battery, 7.0);
    }

    #[test]
    fn head_drain_scales_with_members() {
        let params = EnergyParams {
            e_ord: 1.0,
            e_ch_base: 1.0,
            e_ch_per_member: 0.5,
        };
        let mut nodes: Vec<_> = (1..=5).map(|i| node(i, 50.0, Role::Ordinary)).collect();
        nodes[0].role = Role::ClusterHead;
        let cluster = ClusterView {
            head: NodeId(1),
            members: (2..=5).map(NodeId).collect(),
            gateways: Default::default(),
        };
        step_energy(&mut nodes, &[cluster], &params, 2);
        assert_eq!(50.0 - nodes[0].battery, 6.0);
        assert_eq!(50.0 - nodes[1].battery, 2.0);
    }

    #[test]
    fn floors_at_zero_and_detaches_members() {
        let params = EnergyParams {
            e_ord: 1.0,
            e_ch_base: 1.0,
            e_ch_per_member: 0.0,
        };
        let mut nodes = vec![node(1, 0.5, Role::ClusterHead), node(2, 10.0, Role::Ordinary)];
        nodes[0].cluster_of = Some(NodeId(1));
        nodes[1].cluster_of = Some(NodeId(1));
        let cluster = ClusterView {
            head: NodeId(1),
            members: [NodeId(2)].into_iter().collect(),
            gateways: Default::default(),
        };
        let died = step_energy(&mut nodes, &[cluster], &params, 1);
        assert_eq!(died, vec![HostId(1)]);
        assert_eq!(nodes[0].battery, 0.0);
        assert!(!nodes[0].is_alive());
        assert_eq!(nodes[1].cluster_of, None);
    }

    #[test]
    fn dead_nodes_stay_at_zero() {
        let params = EnergyParams::default();
        let mut nodes = vec![node(1, 0.0, Role::Ordinary)];
        assert!(step_energy(&mut nodes, &[], &params, 10).is_empty());
        assert_eq!(nodes[0].battery, 0.0);
    }
}
