//! Cold-start emulation of election latency in Hello rounds.
//!
//! Every node starts knowing nothing about its neighbors. Each Hello round
//! carries the sender's ID plus whatever it learned in earlier rounds (its
//! degree, its declared status), so a node's priority comparison becomes
//! possible only once the inputs have propagated one hop:
//!
//! - LID compares IDs, known after round 1; heads are declared in round 2.
//! - HD compares degrees, which neighbors can only advertise in round 2;
//!   heads are declared in round 3.
//!
//! In the declaration round, nodes that hear a declared head join it and the
//! uncovered ones resolve pass 2. Every later round re-runs the same local
//! rules on the information gathered, which must leave the structure intact.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};

use crate::model::{ClusterView, NodeId};
use crate::radio::Snapshot;

use super::election::{attachments, complete_election, heads};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Undecided,
    Head,
    Member(NodeId),
}

pub type RoundState = BTreeMap<NodeId, Status>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Heuristic {
    LowestId,
    HighestDegree,
}

/// What one node has heard so far.
#[derive(Debug, Clone, Default)]
struct LocalView {
    neighbor_ids: Option<BTreeSet<NodeId>>,
    neighbor_degrees: Option<BTreeMap<NodeId, usize>>,
}

fn state_of(snap: &Snapshot, clusters: &[ClusterView]) -> RoundState {
    let att = attachments(clusters);
    snap.nodes()
        .map(|v| {
            let s = match att.get(&v) {
                Some(&h) if h == v => Status::Head,
                Some(&h) => Status::Member(h),
                None => Status::Undecided,
            };
            (v, s)
        })
        .collect()
}

/// States at the end of rounds `1..=rounds` on a static snapshot.
pub fn hello_rounds(snap: &Snapshot, heuristic: Heuristic, rounds: usize) -> Vec<RoundState> {
    let key = |v: NodeId| (Reverse(if heuristic == Heuristic::HighestDegree { snap.degree(v) } else { 0 }), v);
    let keys: BTreeMap<NodeId, _> = snap.nodes().map(|v| (v, key(v))).collect();

    let mut views: BTreeMap<NodeId, LocalView> = snap.nodes().map(|v| (v, LocalView::default())).collect();
    let mut status: RoundState = snap.nodes().map(|v| (v, Status::Undecided)).collect();
    let mut out = Vec::with_capacity(rounds);

    for _ in 0..rounds {
        // Hello exchange: each node advertises what it knew after the last round.
        let advertised: BTreeMap<NodeId, Option<usize>> = snap
            .nodes()
            .map(|v| (v, views[&v].neighbor_ids.as_ref().map(|n| n.len())))
            .collect();
        for v in snap.nodes() {
            let view = views.get_mut(&v).unwrap();
            let ns = snap.neighbors(v);
            let degrees: Option<BTreeMap<NodeId, usize>> =
                ns.iter().map(|u| advertised[u].map(|d| (*u, d))).collect();
            if view.neighbor_degrees.is_none() {
                view.neighbor_degrees = degrees;
            }
            view.neighbor_ids = Some(ns.clone());
        }

        let can_compare = |v: NodeId| match heuristic {
            Heuristic::LowestId => views[&v].neighbor_ids.is_some(),
            Heuristic::HighestDegree => views[&v].neighbor_degrees.is_some(),
        };
        let beats_neighbors = |v: NodeId| {
            let view = &views[&v];
            let own = key(v);
            view.neighbor_ids.as_ref().unwrap().iter().all(|u| {
                let theirs = match heuristic {
                    Heuristic::LowestId => (Reverse(0), *u),
                    Heuristic::HighestDegree => (Reverse(view.neighbor_degrees.as_ref().unwrap()[u]), *u),
                };
                own < theirs
            })
        };

        // heads declared last round are heard in this round's Hello
        let declared = head_set(&status);
        status = if !declared.is_empty() {
            // declared heads are now known one hop out: finish the election
            let clusters = complete_election(snap, &declared, &keys);
            state_of(snap, &clusters)
        } else {
            snap.nodes()
                .map(|v| {
                    let s = if can_compare(v) && beats_neighbors(v) {
                        Status::Head
                    } else {
                        Status::Undecided
                    };
                    (v, s)
                })
                .collect()
        };
        out.push(status.clone());
    }
    out
}

/// First round after which the state is fully decided and never changes for
/// the rest of `states`. `None` if that never happens.
pub fn settled_after(states: &[RoundState]) -> Option<usize> {
    let last = states.last()?;
    if last.values().any(|s| *s == Status::Undecided) {
        return None;
    }
    let mut r = states.len();
    while r > 1 && states[r - 2] == *last {
        r -= 1;
    }
    Some(r)
}

/// Head set of a round state.
pub fn head_set(state: &RoundState) -> BTreeSet<NodeId> {
    state.iter().filter(|(_, s)| **s == Status::Head).map(|(v, _)| *v).collect()
}

/// Round state equivalent to a finished election.
pub fn final_state(snap: &Snapshot, clusters: &[ClusterView]) -> RoundState {
    debug_assert!(heads(clusters).iter().all(|h| snap.contains(*h)));
    state_of(snap, clusters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::election::{hd_elect, lid_elect};

    #[test]
    fn lid_needs_two_rounds_hd_three() {
        let snap = Snapshot::from_edges(1..=6, [(1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (2, 5)]);
        let lid = hello_rounds(&snap, Heuristic::LowestId, 6);
        assert_eq!(settled_after(&lid), Some(2));
        assert_eq!(lid[1], final_state(&snap, &lid_elect(&snap)));

        let hd = hello_rounds(&snap, Heuristic::HighestDegree, 6);
        assert_eq!(settled_after(&hd), Some(3));
        assert!(hd[0].values().all(|s| *s == Status::Undecided));
        assert_eq!(hd[2], final_state(&snap, &hd_elect(&snap)));
    }

    #[test]
    fn single_node_settles_in_one_lid_round() {
        let snap = Snapshot::from_edges([4], []);
        let lid = hello_rounds(&snap, Heuristic::LowestId, 3);
        assert_eq!(lid[0][&NodeId(4)], Status::Head);
        assert_eq!(settled_after(&lid), Some(1));
    }
}
