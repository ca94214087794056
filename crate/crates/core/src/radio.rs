//! Disk-model neighborhoods, instantaneous message delivery and per-kind
//! traffic accounting.
//!
//! A transmission is counted once, whatever the number of receivers and
//! whether or not a unicast reaches its destination.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{NodeId, NodeState};

/// Neighbor sets keyed by logical ID. Symmetric by construction when built
/// from positions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Snapshot {
    adj: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

impl Snapshot {
    /// Neighborhoods of every live node.
    pub fn from_nodes(nodes: &[NodeState], range: f64) -> Self {
        let live: Vec<&NodeState> = nodes.iter().filter(|n| n.is_alive()).collect();
        let mut adj: BTreeMap<NodeId, BTreeSet<NodeId>> =
            live.iter().map(|n| (n.id, BTreeSet::new())).collect();
        for (i, a) in live.iter().enumerate() {
            for b in &live[i + 1..] {
                if a.pos.distance(b.pos) <= range {
                    adj.get_mut(&a.id).unwrap().insert(b.id);
                    adj.get_mut(&b.id).unwrap().insert(a.id);
                }
            }
        }
        Snapshot { adj }
    }

    /// Builds a snapshot from an explicit node list and undirected edges.
    pub fn from_edges<I, E>(nodes: I, edges: E) -> Self
    where
        I: IntoIterator<Item = u32>,
        E: IntoIterator<Item = (u32, u32)>,
    {
        let mut adj: BTreeMap<NodeId, BTreeSet<NodeId>> =
            nodes.into_iter().map(|n| (NodeId(n), BTreeSet::new())).collect();
        for (a, b) in edges {
            assert_ne!(a, b, "self loop");
            adj.entry(NodeId(a)).or_default().insert(NodeId(b));
            adj.entry(NodeId(b)).or_default().insert(NodeId(a));
        }
        Snapshot { adj }
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.adj.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.adj.contains_key(&id)
    }

    /// Neighbors of `id` (empty for unknown IDs).
    pub fn neighbors(&self, id: NodeId) -> &BTreeSet<NodeId> {
        static EMPTY: BTreeSet<NodeId> = BTreeSet::new();
        self.adj.get(&id).unwrap_or(&EMPTY)
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.neighbors(id).len()
    }

    pub fn are_neighbors(&self, a: NodeId, b: NodeId) -> bool {
        self.neighbors(a).contains(&b)
    }

    pub fn is_symmetric(&self) -> bool {
        self.adj
            .iter()
            .all(|(v, ns)| ns.iter().all(|u| u != v && self.are_neighbors(*u, *v)))
    }

    /// Applies an ID relabeling to every entry.
    pub fn relabel(&self, map: impl Fn(NodeId) -> NodeId) -> Snapshot {
        Snapshot {
            adj: self
                .adj
                .iter()
                .map(|(v, ns)| (map(*v), ns.iter().map(|u| map(*u)).collect()))
                .collect(),
        }
    }
}

/// IDs of every live node other than `node` within `range` of it. A distance
/// exactly equal to `range` counts as in range.
pub fn neighborhood(node: &NodeState, all: &[NodeState], range: f64) -> BTreeSet<NodeId> {
    all.iter()
        .filter(|u| u.is_alive() && u.host != node.host && u.pos.distance(node.pos) <= range)
        .map(|u| u.id)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MessageKind {
    Hello,
    WeightReport,
    NewIdAssign,
    HpAdapt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Destination {
    Broadcast,
    Unicast(NodeId),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Hello,
    WeightReport { weight: f64, battery: f64, mobility: f64 },
    NewIdAssign { new_id: NodeId },
    HpAdapt { hp: u32 },
}

/// One accounted unit of signaling. Constructors fix the destination shape:
/// Hello and HpAdapt broadcast, the LIDAR reports and assignments unicast.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlMessage {
    src: NodeId,
    dst: Destination,
    payload: Payload,
}

impl ControlMessage {
    pub fn hello(src: NodeId) -> Self {
        ControlMessage {
            src,
            dst: Destination::Broadcast,
            payload: Payload::Hello,
        }
    }

    pub fn weight_report(src: NodeId, head: NodeId, weight: f64, battery: f64, mobility: f64) -> Self {
        ControlMessage {
            src,
            dst: Destination::Unicast(head),
            payload: Payload::WeightReport {
                weight,
                battery,
                mobility,
            },
        }
    }

    pub fn new_id(src: NodeId, dst: NodeId, new_id: NodeId) -> Self {
        ControlMessage {
            src,
            dst: Destination::Unicast(dst),
            payload: Payload::NewIdAssign { new_id },
        }
    }

    pub fn hp_adapt(src: NodeId, hp: u32) -> Self {
        ControlMessage {
            src,
            dst: Destination::Broadcast,
            payload: Payload::HpAdapt { hp },
        }
    }

    pub fn kind(&self) -> MessageKind {
        match self.payload {
            Payload::Hello => MessageKind::Hello,
            Payload::WeightReport { .. } => MessageKind::WeightReport,
            Payload::NewIdAssign { .. } => MessageKind::NewIdAssign,
            Payload::HpAdapt { .. } => MessageKind::HpAdapt,
        }
    }

    pub fn src(&self) -> NodeId {
        self.src
    }

    pub fn dst(&self) -> Destination {
        self.dst
    }

    pub fn payload(&self) -> &Payload {
        &self.payload
    }
}

/// Message counts by kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct KindCounts {
    pub hello: u64,
    pub weight_report: u64,
    pub new_id_assign: u64,
    pub hp_adapt: u64,
}

impl KindCounts {
    pub fn total(&self) -> u64 {
        self.hello + self.weight_report + self.new_id_assign + self.hp_adapt
    }

    pub fn get(&self, kind: MessageKind) -> u64 {
        match kind {
            MessageKind::Hello => self.hello,
            MessageKind::WeightReport => self.weight_report,
            MessageKind::NewIdAssign => self.new_id_assign,
            MessageKind::HpAdapt => self.hp_adapt,
        }
    }

    fn bump(&mut self, kind: MessageKind) {
        match kind {
            MessageKind::Hello => self.hello += 1,
            MessageKind::WeightReport => self.weight_report += 1,
            MessageKind::NewIdAssign => self.new_id_assign += 1,
            MessageKind::HpAdapt => self.hp_adapt += 1,
        }
    }

    pub fn add(&mut self, other: &KindCounts) {
        self.hello += other.hello;
        self.weight_report += other.weight_report;
        self.new_id_assign += other.new_id_assign;
        self.hp_adapt += other.hp_adapt;
    }
}

/// Running totals plus the per-tick series of transmissions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrafficLedger {
    totals: KindCounts,
    current: KindCounts,
    series: Vec<KindCounts>,
}

impl TrafficLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, kind: MessageKind) {
        self.totals.bump(kind);
        self.current.bump(kind);
    }

    /// Closes the current tick and returns its counts.
    pub fn end_tick(&mut self) -> KindCounts {
        let done = std::mem::take(&mut self.current);
        self.series.push(done);
        done
    }

    pub fn totals(&self) -> &KindCounts {
        &self.totals
    }

    pub fn series(&self) -> &[KindCounts] {
        &self.series
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Delivery {
    /// Receivers of a broadcast, or the single unicast destination.
    Delivered(BTreeSet<NodeId>),
    /// Unicast destination out of range (or gone). Airtime was still spent.
    Failed,
}

impl Delivery {
    pub fn is_delivered(&self) -> bool {
        matches!(self, Delivery::Delivered(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RadioError {
    #[error("sender {0} is not a live node")]
    DeadSender(NodeId),
}

/// Transmits `msg` over the current topology and records it in `ledger`.
pub fn deliver(
    msg: &ControlMessage,
    nodes: &[NodeState],
    range: f64,
    ledger: &mut TrafficLedger,
) -> Result<Delivery, RadioError> {
    let src = nodes
        .iter()
        .find(|n| n.id == msg.src && n.is_alive())
        .ok_or(RadioError::DeadSender(msg.src))?;
    ledger.record(msg.kind());
    let heard = neighborhood(src, nodes, range);
    Ok(match msg.dst {
        Destination::Broadcast => Delivery::Delivered(heard),
        Destination::Unicast(dst) if heard.contains(&dst) => {
            Delivery::Delivered([dst].into_iter().collect())
        }
        Destination::Unicast(_) => Delivery::Failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{HostId, Vec2};

    fn at(i: u32, x: f64, y: f64) -> NodeState {
        NodeState::new(HostId(i), NodeId(i), Vec2::new(x, y), 50.0, 3, 5)
    }

    fn ids(v: &[u32]) -> BTreeSet<NodeId> {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    #[test]
    fn within_and_beyond_range() {
        let near = [at(1, 0.0, 0.0), at(2, 50.0, 0.0)];
        assert_eq!(neighborhood(&near[0], &near, 100.0), ids(&[2]));
        assert_eq!(neighborhood(&near[1], &near, 100.0), ids(&[1]));
        let far = [at(1, 0.0, 0.0), at(2, 150.0, 0.0)];
        assert!(neighborhood(&far[0], &far, 100.0).is_empty());
        assert!(neighborhood(&far[1], &far, 100.0).is_empty());
    }

    #[test]
    fn boundary_distance_counts() {
        let nodes = [at(1, 0.0, 0.0), at(2, 100.0, 0.0), at(3, 200.0, 0.0)];
        assert_eq!(neighborhood(&nodes[1], &nodes, 100.0), ids(&[1, 3]));
        assert_eq!(neighborhood(&nodes[0], &nodes, 100.0), ids(&[2]));
        assert_eq!(neighborhood(&nodes[2], &nodes, 100.0), ids(&[2]));
        let snap = Snapshot::from_nodes(&nodes, 100.0);
        assert!(snap.is_symmetric());
        assert_eq!(snap.neighbors(NodeId(2)), &ids(&[1, 3]));
    }

    #[test]
    fn dead_nodes_are_invisible() {
        let mut nodes = [at(1, 0.0, 0.0), at(2, 10.0, 0.0)];
        nodes[1].battery = 0.0;
        assert!(neighborhood(&nodes[0], &nodes, 100.0).is_empty());
        let snap = Snapshot::from_nodes(&nodes, 100.0);
        assert!(!snap.contains(NodeId(2)));
    }

    #[test]
    fn isolated_hello_still_counts() {
        let nodes = [at(1, 0.0, 0.0)];
        let mut ledger = TrafficLedger::new();
        let d = deliver(&ControlMessage::hello(NodeId(1)), &nodes, 100.0, &mut ledger).unwrap();
        assert_eq!(d, Delivery::Delivered(BTreeSet::new()));
        assert_eq!(ledger.totals().hello, 1);
    }

    #[test]
    fn unicast_in_and_out_of_range() {
        let mut nodes = vec![at(1, 0.0, 0.0), at(2, 50.0, 0.0)];
        let mut ledger = TrafficLedger::new();
        let report = ControlMessage::weight_report(NodeId(2), NodeId(1), 1.0, 2.0, 3.0);
        assert!(deliver(&report, &nodes, 100.0, &mut ledger).unwrap().is_delivered());
        assert_eq!(ledger.totals().weight_report, 1);

        nodes[0].pos = Vec2::new(500.0, 0.0);
        let d = deliver(&report, &nodes, 100.0, &mut ledger).unwrap();
        assert_eq!(d, Delivery::Failed);
        assert_eq!(ledger.totals().weight_report, 2);
    }

    #[test]
    fn broadcast_counts_once() {
        let nodes: Vec<_> = (1..=5).map(|i| at(i, i as f64, 0.0)).collect();
        let mut ledger = TrafficLedger::new();
        let d = deliver(&ControlMessage::hp_adapt(NodeId(1), 20), &nodes, 100.0, &mut ledger).unwrap();
        assert_eq!(d, Delivery::Delivered(ids(&[2, 3, 4, 5])));
        assert_eq!(ledger.totals().total(), 1);
    }

    #[test]
    fn dead_sender_rejected() {
        let mut nodes = vec![at(1, 0.0, 0.0)];
        nodes[0].battery = 0.0;
        let mut ledger = TrafficLedger::new();
        assert!(deliver(&ControlMessage::hello(NodeId(1)), &nodes, 100.0, &mut ledger).is_err());
        assert_eq!(ledger.totals().total(), 0);
    }

    #[test]
    fn series_sums_to_totals() {
        let nodes = [at(1, 0.0, 0.0), at(2, 1.0, 0.0)];
        let mut ledger = TrafficLedger::new();
        for t in 0..10u32 {
            for _ in 0..t % 3 {
                deliver(&ControlMessage::hello(NodeId(1)), &nodes, 10.0, &mut ledger).unwrap();
            }
            deliver(&ControlMessage::new_id(NodeId(1), NodeId(2), NodeId(2)), &nodes, 10.0, &mut ledger)
                .unwrap();
            ledger.end_tick();
        }
        let mut sum = KindCounts::default();
        ledger.series().iter().for_each(|c| sum.add(c));
        assert_eq!(&sum, ledger.totals());
    }
}
