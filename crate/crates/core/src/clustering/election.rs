//! Lowest-ID, highest-degree and simplified WCA cluster-head election.
//!
//! All three share one two-pass procedure parameterized by a node priority
//! (smaller is better):
//!
//! 1. a node whose priority beats every neighbor declares itself head;
//! 2. remaining nodes are visited in priority order and a node that hears no
//!    head so far declares itself head too.
//!
//! Every non-head then attaches to the best head it hears, and a non-head
//! hearing two or more heads is a gateway. Visiting pass-2 nodes in priority
//! order keeps the head set independent: no two heads are ever neighbors.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet};

use crate::model::{ClusterView, NodeId, Role};
use crate::radio::Snapshot;

/// `f64` with a total order, for use inside election priorities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score(pub f64);

impl Eq for Score {}

impl PartialOrd for Score {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Score {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Runs the two-pass election with the given priority function.
pub fn elect_by_priority<K, F>(snap: &Snapshot, priority: F) -> Vec<ClusterView>
where
    K: Ord,
    F: Fn(NodeId) -> K,
{
    let key: BTreeMap<NodeId, K> = snap.nodes().map(|v| (v, priority(v))).collect();
    complete_election(snap, &local_best(snap, &key), &key)
}

/// Pass 1: nodes whose priority beats every neighbor.
pub fn local_best<K: Ord>(snap: &Snapshot, key: &BTreeMap<NodeId, K>) -> BTreeSet<NodeId> {
    snap.nodes()
        .filter(|v| snap.neighbors(*v).iter().all(|u| key[v] < key[u]))
        .collect()
}

/// Pass 2 and affiliation, starting from the heads already `declared`.
pub fn complete_election<K: Ord>(
    snap: &Snapshot,
    declared: &BTreeSet<NodeId>,
    key: &BTreeMap<NodeId, K>,
) -> Vec<ClusterView> {
    let mut heads = declared.clone();
    let mut rest: Vec<NodeId> = snap.nodes().filter(|v| !heads.contains(v)).collect();
    rest.sort_by(|a, b| key[a].cmp(&key[b]));
    for v in rest {
        if snap.neighbors(v).iter().all(|u| !heads.contains(u)) {
            heads.insert(v);
        }
    }
    attach_to_heads(snap, &heads, |a, b| key[&a].cmp(&key[&b]))
}

/// Builds cluster views for a fixed head set: each non-head joins the best
/// audible head under `better`. Nodes hearing no head are left out.
pub fn attach_to_heads<F>(snap: &Snapshot, heads: &BTreeSet<NodeId>, better: F) -> Vec<ClusterView>
where
    F: Fn(NodeId, NodeId) -> Ordering,
{
    let mut clusters: BTreeMap<NodeId, ClusterView> =
        heads.iter().map(|&h| (h, ClusterView::singleton(h))).collect();
    for v in snap.nodes().filter(|v| !heads.contains(v)) {
        let audible: Vec<NodeId> = snap.neighbors(v).iter().copied().filter(|u| heads.contains(u)).collect();
        let Some(&best) = audible.iter().min_by(|a, b| better(**a, **b)) else {
            continue;
        };
        let c = clusters.get_mut(&best).unwrap();
        c.members.insert(v);
        if audible.len() >= 2 {
            c.gateways.insert(v);
        }
    }
    clusters.into_values().collect()
}

/// Lowest-ID election.
pub fn lid_elect(snap: &Snapshot) -> Vec<ClusterView> {
    elect_by_priority(snap, |v| v)
}

/// Highest-degree election, ties broken by the lower ID.
pub fn hd_elect(snap: &Snapshot) -> Vec<ClusterView> {
    elect_by_priority(snap, |v| (Reverse(snap.degree(v)), v))
}

/// Coefficients of the simplified WCA combined weight
/// `I = c1 |deg - ideal| + c2 serving_time + c3 speed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WcaParams {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub ideal_degree: f64,
}

impl WcaParams {
    pub fn new(c1: f64, c2: f64, c3: f64, ideal_degree: f64) -> Self {
        WcaParams {
            c1,
            c2,
            c3,
            ideal_degree,
        }
    }
}

/// Per-node inputs to the WCA weight.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WcaInputs {
    /// Meters per second.
    pub speed: f64,
    /// Ticks served as head since the last promotion.
    pub serving_time: f64,
}

pub fn wca_weight(degree: usize, inputs: WcaInputs, params: &WcaParams) -> f64 {
    params.c1 * (degree as f64 - params.ideal_degree).abs()
        + params.c2 * inputs.serving_time
        + params.c3 * inputs.speed
}

fn wca_priority<'a>(
    snap: &'a Snapshot,
    inputs: &'a BTreeMap<NodeId, WcaInputs>,
    params: &'a WcaParams,
) -> impl Fn(NodeId) -> (Score, NodeId) + 'a {
    move |v| {
        let i = inputs.get(&v).copied().unwrap_or_default();
        (Score(wca_weight(snap.degree(v), i, params)), v)
    }
}

/// Simplified WCA election: local minima of the combined weight become heads,
/// ties broken by the lower ID. Missing inputs count as a fresh, static node.
pub fn wca_lite_elect(
    snap: &Snapshot,
    inputs: &BTreeMap<NodeId, WcaInputs>,
    params: &WcaParams,
) -> Vec<ClusterView> {
    elect_by_priority(snap, wca_priority(snap, inputs, params))
}

/// WCA maintenance without re-election. Heads keep their role; members whose
/// head is gone or out of range move to the best audible head. Returns `None`
/// when some node hears no head at all, which is the re-election trigger.
pub fn wca_lite_maintain(
    snap: &Snapshot,
    heads: &BTreeSet<NodeId>,
    current: &BTreeMap<NodeId, NodeId>,
    inputs: &BTreeMap<NodeId, WcaInputs>,
    params: &WcaParams,
) -> Option<Vec<ClusterView>> {
    let heads: BTreeSet<NodeId> = heads.iter().copied().filter(|h| snap.contains(*h)).collect();
    let priority = wca_priority(snap, inputs, params);
    let mut clusters: BTreeMap<NodeId, ClusterView> =
        heads.iter().map(|&h| (h, ClusterView::singleton(h))).collect();
    for v in snap.nodes().filter(|v| !heads.contains(v)) {
        let audible: Vec<NodeId> = snap.neighbors(v).iter().copied().filter(|u| heads.contains(u)).collect();
        if audible.is_empty() {
            return None;
        }
        let head = match current.get(&v) {
            Some(h) if audible.contains(h) => *h,
            _ => *audible.iter().min_by_key(|&&h| priority(h)).unwrap(),
        };
        let c = clusters.get_mut(&head).unwrap();
        c.members.insert(v);
        if audible.len() >= 2 {
            c.gateways.insert(v);
        }
    }
    Some(clusters.into_values().collect())
}

/// Node to head map; heads map to themselves.
pub fn attachments(clusters: &[ClusterView]) -> BTreeMap<NodeId, NodeId> {
    clusters
        .iter()
        .flat_map(|c| c.closed_members().map(move |m| (m, c.head)))
        .collect()
}

/// Role of each clustered node.
pub fn roles(clusters: &[ClusterView]) -> BTreeMap<NodeId, Role> {
    let mut out = BTreeMap::new();
    for c in clusters {
        out.insert(c.head, Role::ClusterHead);
        for m in &c.members {
            let role = if c.gateways.contains(m) {
                Role::Gateway
            } else {
                Role::Ordinary
            };
            out.insert(*m, role);
        }
    }
    out
}

pub fn heads(clusters: &[ClusterView]) -> BTreeSet<NodeId> {
    clusters.iter().map(|c| c.head).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[u32]) -> BTreeSet<NodeId> {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    fn clique(ids: &[u32]) -> Snapshot {
        let edges: Vec<_> = ids
            .iter()
            .enumerate()
            .flat_map(|(i, &a)| ids[i + 1..].iter().map(move |&b| (a, b)))
            .collect();
        Snapshot::from_edges(ids.iter().copied(), edges)
    }

    #[test]
    fn lid_single_node() {
        let c = lid_elect(&Snapshot::from_edges([1], []));
        assert_eq!(c, vec![ClusterView::singleton(NodeId(1))]);
    }

    #[test]
    fn lid_chain() {
        let snap = Snapshot::from_edges([1, 2, 3], [(1, 2), (2, 3)]);
        let c = lid_elect(&snap);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].head, NodeId(1));
        assert_eq!(c[0].members, set(&[2]));
        assert_eq!(c[1], ClusterView::singleton(NodeId(3)));
    }

    #[test]
    fn lid_clique() {
        let c = lid_elect(&clique(&[3, 7, 9]));
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].head, NodeId(3));
        assert_eq!(c[0].members, set(&[7, 9]));
    }

    #[test]
    fn lid_gateway_attaches_to_lowest() {
        // 1 - 2 - 3, with 2 hearing both heads
        let snap = Snapshot::from_edges([1, 2, 3], [(1, 2), (3, 2)]);
        // 3 is not a local minimum (2 < 3) but hears no head in pass 1
        let c = lid_elect(&snap);
        assert_eq!(heads(&c), set(&[1, 3]));
        let snap = Snapshot::from_edges([1, 3, 5], [(1, 5), (3, 5)]);
        let c = lid_elect(&snap);
        assert_eq!(heads(&c), set(&[1, 3]));
        let r = roles(&c);
        assert_eq!(r[&NodeId(5)], Role::Gateway);
        assert_eq!(attachments(&c)[&NodeId(5)], NodeId(1));
    }

    #[test]
    fn lid_pass_two_keeps_heads_apart() {
        // 1 - 2 - 3 - 4: 3 and 4 both miss pass 1, only 3 may self-elect
        let snap = Snapshot::from_edges([1, 2, 3, 4], [(1, 2), (2, 3), (3, 4)]);
        let c = lid_elect(&snap);
        assert_eq!(heads(&c), set(&[1, 3]));
        assert_eq!(attachments(&c)[&NodeId(4)], NodeId(3));
    }

    #[test]
    fn hd_star_prefers_center() {
        let snap = Snapshot::from_edges([1, 2, 3, 5], [(5, 1), (5, 2), (5, 3)]);
        let c = hd_elect(&snap);
        assert_eq!(heads(&c), set(&[5]));
        assert_eq!(heads(&lid_elect(&snap)), set(&[1, 2, 3]));
    }

    #[test]
    fn hd_ties_break_by_id() {
        assert_eq!(heads(&hd_elect(&clique(&[1, 2, 3]))), set(&[1]));
        assert_eq!(heads(&hd_elect(&Snapshot::from_edges([4], []))), set(&[4]));
    }

    fn wca_params() -> WcaParams {
        WcaParams::new(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0)
    }

    #[test]
    fn wca_identical_weights_pick_lowest_id() {
        let snap = clique(&[4, 2, 6]);
        let c = wca_lite_elect(&snap, &BTreeMap::new(), &wca_params());
        assert_eq!(heads(&c), set(&[2]));
    }

    #[test]
    fn wca_serving_time_penalizes_incumbent() {
        let snap = clique(&[1, 2]);
        let inputs: BTreeMap<_, _> = [(
            NodeId(1),
            WcaInputs {
                speed: 0.0,
                serving_time: 100.0,
            },
        )]
        .into_iter()
        .collect();
        let p = wca_params();
        let fresh = wca_weight(1, WcaInputs::default(), &p);
        let old = wca_weight(1, inputs[&NodeId(1)], &p);
        assert!(fresh < old);
        assert_eq!(heads(&wca_lite_elect(&snap, &inputs, &p)), set(&[2]));
    }

    #[test]
    fn wca_static_topology_is_not_reelected() {
        let snap = Snapshot::from_edges([1, 2, 3, 4], [(1, 2), (2, 3), (3, 4)]);
        let p = wca_params();
        let first = wca_lite_elect(&snap, &BTreeMap::new(), &p);
        // serving time grows for the heads, but nobody is uncovered
        let inputs: BTreeMap<_, _> = heads(&first)
            .into_iter()
            .map(|h| {
                (
                    h,
                    WcaInputs {
                        speed: 0.0,
                        serving_time: 500.0,
                    },
                )
            })
            .collect();
        let second =
            wca_lite_maintain(&snap, &heads(&first), &attachments(&first), &inputs, &p).expect("covered");
        assert_eq!(heads(&first), heads(&second));
        assert_eq!(first, second);
    }

    #[test]
    fn wca_uncovered_node_triggers() {
        let snap = Snapshot::from_edges([1, 2, 3], [(1, 2)]);
        let p = wca_params();
        let r = wca_lite_maintain(&snap, &set(&[1]), &BTreeMap::new(), &BTreeMap::new(), &p);
        assert!(r.is_none());
    }

    #[test]
    fn wca_member_migrates_without_reelection() {
        // 2 was attached to 1, but only hears 3 now
        let snap = Snapshot::from_edges([1, 2, 3], [(2, 3)]);
        let p = wca_params();
        let current: BTreeMap<_, _> = [(NodeId(2), NodeId(1))].into_iter().collect();
        let c = wca_lite_maintain(&snap, &set(&[1, 3]), &current, &BTreeMap::new(), &p).unwrap();
        assert_eq!(attachments(&c)[&NodeId(2)], NodeId(3));
        assert_eq!(heads(&c), set(&[1, 3]));
    }
}
