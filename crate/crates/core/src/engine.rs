//! Deterministic tick loop.
//!
//! Within a tick: mobility, energy, Hello broadcasts for nodes whose Hello
//! period ends, maintenance re-election, the LIDAR weight/reassignment steps
//! for clusters whose `P_LIDAR` ends, then the metrics snapshot.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use rand::Rng;

use crate::clustering::{
    adapt_hp, attachments, hd_elect, heads, lid_elect, mobility_rate, reassign_ids, wca_lite_elect,
    wca_lite_maintain, WcaInputs, WcaParams, WeightEntry,
};
use crate::energy::step_energy;
use crate::metrics::{energy_variance, reaffiliation_count, MessageTotals, MetricsReport, RunMeta, SeriesRow};
use crate::mobility::{Mobility, MobilityParams};
use crate::model::{validate_config, Algorithm, ClusterView, ConfigErrors, HostId, NodeId, NodeState, Role, SimConfig, Vec2};
use crate::radio::{deliver, ControlMessage, KindCounts, Snapshot, TrafficLedger};
use crate::rng::{self, Concern};

/// Runs `cfg` to completion.
pub fn run(cfg: &SimConfig) -> Result<MetricsReport, ConfigErrors> {
    let cfg = validate_config(cfg.clone())?;
    let mut sim = Simulation::new(cfg);
    sim.run_to_end();
    Ok(sim.into_report())
}

/// Per-node timers. Members carry a copy of their head's timers.
#[derive(Debug, Clone, Copy)]
struct Timers {
    next_hello: u64,
    next_lidar: u64,
    head_since: Option<u64>,
}

#[derive(Debug, Default)]
struct Interval {
    counts: KindCounts,
    reaffiliations: u64,
}

pub struct Simulation {
    cfg: SimConfig,
    nodes: Vec<NodeState>,
    timers: Vec<Timers>,
    clusters: Vec<ClusterView>,
    ledger: TrafficLedger,
    mobility: Mobility,
    wca: WcaParams,
    tick: u64,
    prev_attachment: BTreeMap<HostId, HostId>,
    initial_ids: Vec<NodeId>,
    tenure: Vec<u64>,
    death: Vec<Option<u64>>,
    series: Vec<SeriesRow>,
    interval: Interval,
    lidar_rounds: u64,
    wca_invocations: u64,
}

impl Simulation {
    /// Random placement, batteries and IDs, then initial clustering.
    /// `cfg` must already be validated.
    pub fn new(cfg: SimConfig) -> Self {
        let n = cfg.n_nodes;
        let mut place = rng::stream(cfg.seed, Concern::Placement, 0);
        let mut batt = rng::stream(cfg.seed, Concern::Battery, 0);
        let mut ids = rng::stream(cfg.seed, Concern::Ids, 0);

        let pool = cfg.id_pool() as usize;
        let mut id_values: Vec<u32> = index::sample(&mut ids, pool, n).into_iter().map(|i| i as u32 + 1).collect();
        id_values.sort_unstable();
        let perm = index::sample(&mut ids, n, n).into_vec();

        let [lo, hi] = cfg.battery_init;
        let nodes: Vec<NodeState> = (0..n)
            .map(|i| {
                let pos = Vec2::new(
                    place.random_range(0.0..=cfg.terrain.width),
                    place.random_range(0.0..=cfg.terrain.height),
                );
                let battery = batt.random_range(lo..=hi);
                NodeState::new(HostId::from_index(i), NodeId(id_values[perm[i]]), pos, battery, cfg.p, cfg.hp_min)
            })
            .collect();

        let mobility = Mobility::new(MobilityParams::from_config(&cfg), cfg.seed, n);
        let wca = WcaParams::new(cfg.wca.c1, cfg.wca.c2, cfg.wca.c3, cfg.ideal_degree());
        let timers = vec![
            Timers {
                next_hello: u64::from(cfg.hp_min),
                next_lidar: cfg.lidar_period(cfg.hp_min),
                head_since: None,
            };
            n
        ];

        let mut sim = Simulation {
            initial_ids: nodes.iter().map(|n| n.id).collect(),
            tenure: vec![0; n],
            death: vec![None; n],
            cfg,
            nodes,
            timers,
            clusters: Vec::new(),
            ledger: TrafficLedger::new(),
            mobility,
            wca,
            tick: 0,
            prev_attachment: BTreeMap::new(),
            series: Vec::new(),
            interval: Interval::default(),
            lidar_rounds: 0,
            wca_invocations: 0,
        };
        sim.mobility.initialize(&mut sim.nodes);
        let snap = sim.snapshot();
        let initial = sim.elect(&snap);
        sim.apply(initial);
        sim.prev_attachment = sim.host_attachment();
        sim
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn clusters(&self) -> &[ClusterView] {
        &self.clusters
    }

    pub fn ledger(&self) -> &TrafficLedger {
        &self.ledger
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn run_to_end(&mut self) {
        while self.tick < self.cfg.duration {
            self.step();
        }
    }

    pub fn step(&mut self) {
        self.tick += 1;
        let t = self.tick;

        self.mobility.step(&mut self.nodes, 1);

        let died = step_energy(&mut self.nodes, &self.clusters, &self.cfg.energy, 1);
        if !died.is_empty() {
            for h in &died {
                self.death[h.index()] = Some(t);
                self.timers[h.index()].head_since = None;
            }
            self.prune_dead();
        }

        if self.hello_exchange(t) {
            self.maintain();
        }

        if self.cfg.algorithm == Algorithm::Lidar {
            self.lidar_steps(t);
        }

        self.record(t);
    }

    pub fn into_report(self) -> MetricsReport {
        let final_energy_variance = self.series.last().map_or(0.0, |r| r.energy_var);
        MetricsReport {
            meta: RunMeta {
                algorithm: self.cfg.algorithm,
                seed: self.cfg.seed,
                n_nodes: self.cfg.n_nodes,
                duration: self.cfg.duration,
                tick_seconds: self.cfg.tick_seconds,
                snapshot_every: self.cfg.snapshot_every,
                message_accounting: "once-per-transmission".into(),
                reclustering_after_reassignment: "current-snapshot".into(),
                lidar_rounds: self.lidar_rounds,
                wca_invocations: self.wca_invocations,
            },
            series: self.series,
            totals: MessageTotals::from(self.ledger.totals()),
            final_energy_variance,
            initial_ids: self.initial_ids,
            ch_tenure: self.tenure,
            death_tick: self.death,
        }
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot::from_nodes(&self.nodes, self.cfg.range)
    }

    fn index_by_id(&self) -> BTreeMap<NodeId, usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.is_alive())
            .map(|(i, n)| (n.id, i))
            .collect()
    }

    fn neighbor_hosts(&self, i: usize) -> BTreeSet<HostId> {
        let me = &self.nodes[i];
        self.nodes
            .iter()
            .filter(|u| u.is_alive() && u.host != me.host && u.pos.distance(me.pos) <= self.cfg.range)
            .map(|u| u.host)
            .collect()
    }

    fn wca_inputs(&self) -> BTreeMap<NodeId, WcaInputs> {
        self.nodes
            .iter()
            .zip(&self.timers)
            .filter(|(n, _)| n.is_alive())
            .map(|(n, t)| {
                let serving_time = t.head_since.map_or(0.0, |s| (self.tick - s) as f64);
                (
                    n.id,
                    WcaInputs {
                        speed: n.vel.length(),
                        serving_time,
                    },
                )
            })
            .collect()
    }

    fn elect(&self, snap: &Snapshot) -> Vec<ClusterView> {
        match self.cfg.algorithm {
            Algorithm::Lid | Algorithm::Lidar => lid_elect(snap),
            Algorithm::Hd => hd_elect(snap),
            Algorithm::Wca => wca_lite_elect(snap, &self.wca_inputs(), &self.wca),
        }
    }

    /// Installs a new cluster structure: roles, attachments, head timers, and
    /// members adopting their head's Hello period and phase.
    fn apply(&mut self, clusters: Vec<ClusterView>) {
        let by_id = self.index_by_id();
        let mut role = vec![(Role::Ordinary, None); self.nodes.len()];
        for c in &clusters {
            let h = by_id[&c.head];
            role[h] = (Role::ClusterHead, Some(c.head));
            for m in &c.members {
                let r = if c.gateways.contains(m) { Role::Gateway } else { Role::Ordinary };
                role[by_id[m]] = (r, Some(c.head));
            }
        }
        for (i, (r, of)) in role.into_iter().enumerate() {
            if !self.nodes[i].is_alive() {
                continue;
            }
            let was_head = self.nodes[i].role == Role::ClusterHead;
            self.nodes[i].role = r;
            self.nodes[i].cluster_of = of;
            self.timers[i].head_since = match (r, was_head) {
                (Role::ClusterHead, true) => self.timers[i].head_since.or(Some(self.tick)),
                (Role::ClusterHead, false) => Some(self.tick),
                _ => None,
            };
        }
        for c in &clusters {
            let h = by_id[&c.head];
            let (hp, timers) = (self.nodes[h].hp_local, self.timers[h]);
            for m in &c.members {
                let i = by_id[m];
                self.nodes[i].hp_local = hp;
                self.timers[i].next_hello = timers.next_hello;
                self.timers[i].next_lidar = timers.next_lidar;
            }
        }
        self.clusters = clusters;
    }

    /// Drops dead nodes from the cluster views; a dead head dissolves its
    /// cluster and leaves the members unattached until the next maintenance.
    fn prune_dead(&mut self) {
        let live: BTreeSet<NodeId> = self.nodes.iter().filter(|n| n.is_alive()).map(|n| n.id).collect();
        self.clusters.retain(|c| live.contains(&c.head));
        for c in &mut self.clusters {
            c.members.retain(|m| live.contains(m));
            c.gateways.retain(|m| live.contains(m));
        }
    }

    /// Hello broadcasts and topology-history rows for every node whose Hello
    /// period ends now. Returns whether anyone broadcast.
    fn hello_exchange(&mut self, t: u64) -> bool {
        let due: Vec<usize> = (0..self.nodes.len())
            .filter(|&i| self.nodes[i].is_alive() && self.timers[i].next_hello <= t)
            .collect();
        for &i in &due {
            let msg = ControlMessage::hello(self.nodes[i].id);
            deliver(&msg, &self.nodes, self.cfg.range, &mut self.ledger).expect("live sender");
            let row = self.neighbor_hosts(i);
            self.nodes[i].tht.push(row);
            self.timers[i].next_hello = t + u64::from(self.nodes[i].hp_local);
        }
        !due.is_empty()
    }

    fn maintain(&mut self) {
        let snap = self.snapshot();
        let next = match self.cfg.algorithm {
            Algorithm::Lid | Algorithm::Lidar | Algorithm::Hd => self.elect(&snap),
            Algorithm::Wca => {
                let current = attachments(&self.clusters);
                let inputs = self.wca_inputs();
                match wca_lite_maintain(&snap, &heads(&self.clusters), &current, &inputs, &self.wca) {
                    Some(clusters) => clusters,
                    None => {
                        // every node advertises its combined weight before re-electing
                        self.wca_invocations += 1;
                        for id in snap.nodes() {
                            let msg = ControlMessage::hello(id);
                            deliver(&msg, &self.nodes, self.cfg.range, &mut self.ledger).expect("live sender");
                        }
                        wca_lite_elect(&snap, &inputs, &self.wca)
                    }
                }
            }
        };
        self.apply(next);
    }

    /// Weight reports, ID reassignment and HP adaptation for every cluster
    /// whose `P_LIDAR` has elapsed, followed by immediate re-clustering.
    fn lidar_steps(&mut self, t: u64) {
        let by_id = self.index_by_id();
        let due: Vec<ClusterView> = self
            .clusters
            .iter()
            .filter(|c| self.timers[by_id[&c.head]].next_lidar <= t)
            .cloned()
            .collect();
        if due.is_empty() {
            return;
        }
        self.lidar_rounds += 1;

        let (w1, w2, p) = (self.cfg.w1, self.cfg.w2, self.cfg.p);
        let mut renames: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        let mut processed = BTreeSet::new();
        for c in &due {
            let h = by_id[&c.head];
            let own_m = mobility_rate(&self.nodes[h].tht, p);
            let mut weights = vec![WeightEntry::new(c.head, self.nodes[h].battery, own_m, w1, w2)];
            let mut reporters = BTreeSet::new();
            let mut mobility_sum = 0.0;
            for m in &c.members {
                let node = &self.nodes[by_id[m]];
                let entry = WeightEntry::new(*m, node.battery, mobility_rate(&node.tht, p), w1, w2);
                let msg = ControlMessage::weight_report(*m, c.head, entry.w, entry.battery, entry.mobility);
                if deliver(&msg, &self.nodes, self.cfg.range, &mut self.ledger)
                    .expect("live sender")
                    .is_delivered()
                {
                    mobility_sum += entry.mobility;
                    reporters.insert(*m);
                    weights.push(entry);
                }
            }
            let reporting = ClusterView {
                head: c.head,
                gateways: c.gateways.intersection(&reporters).copied().collect(),
                members: reporters.clone(),
            };
            let assignment = reassign_ids(&reporting, &weights).expect("weights cover the reporting cluster");
            for m in &reporters {
                let msg = ControlMessage::new_id(c.head, *m, assignment.new_id(*m).unwrap());
                deliver(&msg, &self.nodes, self.cfg.range, &mut self.ledger).expect("live sender");
            }
            renames.extend(assignment.iter());

            let m_c = if reporters.is_empty() {
                own_m
            } else {
                mobility_sum / reporters.len() as f64
            };
            let hp = adapt_hp(m_c, self.cfg.hp_min, self.cfg.hp_max, self.cfg.m_sat());
            if hp != self.nodes[h].hp_local {
                let msg = ControlMessage::hp_adapt(c.head, hp);
                deliver(&msg, &self.nodes, self.cfg.range, &mut self.ledger).expect("live sender");
            }
            let next_lidar = t + self.cfg.lidar_period(hp);
            for i in c.closed_members().map(|id| by_id[&id]) {
                self.nodes[i].hp_local = hp;
                self.timers[i].next_lidar = next_lidar;
                processed.insert(i);
            }
        }

        // unattached nodes keep their own clock running
        for i in 0..self.nodes.len() {
            if !processed.contains(&i) && self.timers[i].next_lidar <= t {
                self.timers[i].next_lidar = t + self.cfg.lidar_period(self.nodes[i].hp_local);
            }
        }

        for node in self.nodes.iter_mut().filter(|n| n.is_alive()) {
            if let Some(&new) = renames.get(&node.id) {
                node.id = new;
            }
        }
        debug_assert_eq!(
            self.index_by_id().len(),
            self.nodes.iter().filter(|n| n.is_alive()).count(),
            "IDs must stay unique"
        );

        let snap = self.snapshot();
        let next = lid_elect(&snap);
        self.apply(next);
    }

    fn host_attachment(&self) -> BTreeMap<HostId, HostId> {
        let by_id = self.index_by_id();
        self.nodes
            .iter()
            .filter(|n| n.is_alive())
            .filter_map(|n| n.cluster_of.map(|h| (n.host, self.nodes[by_id[&h]].host)))
            .collect()
    }

    fn record(&mut self, t: u64) {
        self.interval.counts.add(&self.ledger.end_tick());
        let att = self.host_attachment();
        self.interval.reaffiliations += reaffiliation_count(&self.prev_attachment, &att) as u64;
        self.prev_attachment = att;

        for (i, n) in self.nodes.iter().enumerate() {
            if n.is_alive() && n.role == Role::ClusterHead {
                self.tenure[i] += 1;
            }
        }

        if t.is_multiple_of(self.cfg.snapshot_every) || t == self.cfg.duration {
            let batteries: Vec<f64> = self.nodes.iter().map(|n| n.battery).collect();
            let head_hps: Vec<f64> = self
                .nodes
                .iter()
                .filter(|n| n.is_alive() && n.role == Role::ClusterHead)
                .map(|n| f64::from(n.hp_local))
                .collect();
            let mean_hp = if head_hps.is_empty() {
                0.0
            } else {
                head_hps.iter().sum::<f64>() / head_hps.len() as f64
            };
            let iv = std::mem::take(&mut self.interval);
            self.series.push(SeriesRow {
                tick: t,
                msgs_hello: iv.counts.hello,
                msgs_weight: iv.counts.weight_report,
                msgs_newid: iv.counts.new_id_assign,
                msgs_hpadapt: iv.counts.hp_adapt,
                energy_var: energy_variance(&batteries).expect("at least one node"),
                n_clusters: self.clusters.len(),
                reaffiliations: iv.reaffiliations,
                mean_hp,
            });
        }
    }
}
