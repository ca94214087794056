//! Domain types shared by the simulator: identifiers, node state, cluster
//! views and the experiment configuration.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::energy::EnergyParams;

/// Logical node identifier. Positive, unique network-wide at any instant, and
/// subject to reassignment under LIDAR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Permanent identity of a physical host (think MAC address). Never changes
/// during a run; equals the host's 1-based creation index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HostId(pub u32);

impl HostId {
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn from_index(i: usize) -> Self {
        HostId(i as u32 + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn length(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).length()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    #[serde(rename = "CH")]
    ClusterHead,
    Gateway,
    Ordinary,
}

/// Recent neighbor sets of one node, newest first.
///
/// `depth` is the number of consecutive row pairs the mobility estimate looks
/// at, so `depth + 1` rows are retained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyHistory {
    owner: HostId,
    depth: usize,
    rows: VecDeque<BTreeSet<HostId>>,
}

impl TopologyHistory {
    pub fn new(owner: HostId, depth: usize) -> Self {
        assert!(depth >= 1, "THT depth must be at least 1");
        TopologyHistory {
            owner,
            depth,
            rows: VecDeque::with_capacity(depth + 1),
        }
    }

    /// Builds a history from rows given newest first. Extra rows beyond the
    /// capacity are dropped from the old end.
    pub fn from_rows<I>(owner: HostId, depth: usize, rows: I) -> Self
    where
        I: IntoIterator<Item = BTreeSet<HostId>>,
    {
        let mut tht = TopologyHistory::new(owner, depth);
        let rows: Vec<_> = rows.into_iter().collect();
        for row in rows.into_iter().rev() {
            tht.push(row);
        }
        tht
    }

    /// Appends the neighbor set observed at the end of a Hello period.
    pub fn push(&mut self, mut row: BTreeSet<HostId>) {
        row.remove(&self.owner);
        self.rows.push_front(row);
        self.rows.truncate(self.depth + 1);
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn capacity(&self) -> usize {
        self.depth + 1
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows, newest first.
    pub fn rows(&self) -> impl Iterator<Item = &BTreeSet<HostId>> {
        self.rows.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    pub host: HostId,
    pub id: NodeId,
    pub pos: Vec2,
    /// Meters per second.
    pub vel: Vec2,
    pub battery: f64,
    pub role: Role,
    pub tht: TopologyHistory,
    pub cluster_of: Option<NodeId>,
    /// Hello period of the node's cluster, in ticks.
    pub hp_local: u32,
}

impl NodeState {
    pub fn new(host: HostId, id: NodeId, pos: Vec2, battery: f64, depth: usize, hp: u32) -> Self {
        NodeState {
            host,
            id,
            pos,
            vel: Vec2::ZERO,
            battery,
            role: Role::Ordinary,
            tht: TopologyHistory::new(host, depth),
            cluster_of: None,
            hp_local: hp,
        }
    }

    pub fn is_alive(&self) -> bool {
        self.battery > 0.0
    }
}

/// One cluster: its head, the attached members and the members that hear
/// more than one head.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterView {
    pub head: NodeId,
    pub members: BTreeSet<NodeId>,
    pub gateways: BTreeSet<NodeId>,
}

impl ClusterView {
    pub fn singleton(head: NodeId) -> Self {
        ClusterView {
            head,
            members: BTreeSet::new(),
            gateways: BTreeSet::new(),
        }
    }

    /// Head plus members.
    pub fn closed_members(&self) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::once(self.head).chain(self.members.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.members.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "LID")]
    Lid,
    #[serde(rename = "HD")]
    Hd,
    #[serde(rename = "WCA")]
    Wca,
    #[serde(rename = "LIDAR")]
    Lidar,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Lid, Algorithm::Hd, Algorithm::Wca, Algorithm::Lidar];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Lid => "LID",
            Algorithm::Hd => "HD",
            Algorithm::Wca => "WCA",
            Algorithm::Lidar => "LIDAR",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "LID" => Ok(Algorithm::Lid),
            "HD" => Ok(Algorithm::Hd),
            "WCA" | "WCA-LITE" => Ok(Algorithm::Wca),
            "LIDAR" => Ok(Algorithm::Lidar),
            other => Err(format!("unknown algorithm `{other}` (expected LID, HD, WCA or LIDAR)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Terrain {
    pub width: f64,
    pub height: f64,
}

impl Terrain {
    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn contains(&self, p: Vec2) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }
}

/// Coefficients of the simplified WCA combined weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WcaConfig {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Target degree; `None` derives it from the expected geometric density.
    pub ideal_degree: Option<f64>,
}

impl Default for WcaConfig {
    fn default() -> Self {
        WcaConfig {
            c1: 1.0 / 3.0,
            c2: 1.0 / 3.0,
            c3: 1.0 / 3.0,
            ideal_degree: None,
        }
    }
}

/// Full parameterization of one simulation run.
///
/// Defaults reproduce the reference scenario: 50 hosts on a 600 m square,
/// speeds up to 15 m/s, a 5-tick Hello period, batteries in [20, 100],
/// `P_LIDAR = 5 HP`, `w1 = 0.7`, `w2 = 0.3`. One tick is one second, so the
/// default 180-tick duration is three simulated minutes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub n_nodes: usize,
    pub terrain: Terrain,
    /// Transmission radius in meters.
    pub range: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    /// Ticks a host keeps its heading; `None` means one `hp_min`.
    pub direction_hold: Option<u32>,
    pub hp_min: u32,
    pub hp_max: u32,
    /// `P_LIDAR = k * HP`.
    pub k: u32,
    /// Topology-history depth (number of compared row pairs).
    pub p: usize,
    pub w1: f64,
    pub w2: f64,
    /// Cluster mobility at which the Hello period bottoms out; `None` means `2 * p`.
    pub m_sat: Option<f64>,
    pub battery_init: [f64; 2],
    pub energy: EnergyParams,
    pub wca: WcaConfig,
    /// Size of the ID pool `1..=id_pool`; `None` means `n_nodes`.
    pub id_pool: Option<u32>,
    pub duration: u64,
    pub seed: u64,
    pub algorithm: Algorithm,
    /// Record one series row every this many ticks.
    pub snapshot_every: u64,
    /// Wall-clock length of one tick in seconds (scales velocity to displacement).
    pub tick_seconds: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_nodes: 50,
            terrain: Terrain {
                width: 600.0,
                height: 600.0,
            },
            range: 150.0,
            speed_min: 0.0,
            speed_max: 15.0,
            direction_hold: None,
            hp_min: 5,
            hp_max: 25,
            k: 5,
            p: 5,
            w1: 0.7,
            w2: 0.3,
            m_sat: None,
            battery_init: [20.0, 100.0],
            energy: EnergyParams::default(),
            wca: WcaConfig::default(),
            id_pool: None,
            duration: 180,
            seed: 1,
            algorithm: Algorithm::Lidar,
            snapshot_every: 1,
            tick_seconds: 1.0,
        }
    }
}

impl SimConfig {
    pub fn direction_hold(&self) -> u32 {
        self.direction_hold.unwrap_or(self.hp_min)
    }

    pub fn m_sat(&self) -> f64 {
        self.m_sat.unwrap_or(2.0 * self.p as f64)
    }

    pub fn id_pool(&self) -> u32 {
        self.id_pool.unwrap_or(self.n_nodes as u32)
    }

    pub fn ideal_degree(&self) -> f64 {
        self.wca.ideal_degree.unwrap_or_else(|| {
            self.n_nodes as f64 * std::f64::consts::PI * self.range * self.range / self.terrain.area()
        })
    }

    /// `P_LIDAR` in ticks for a given Hello period.
    pub fn lidar_period(&self, hp: u32) -> u64 {
        u64::from(self.k) * u64::from(hp)
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// One violated configuration constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub value: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} (got {})", self.field, self.message, self.value)
    }
}

/// Every violation found in a configuration, in field order.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid configuration: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ConfigErrors(pub Vec<Violation>);

impl ConfigErrors {
    pub fn fields(&self) -> Vec<&'static str> {
        self.0.iter().map(|v| v.field).collect()
    }
}

const SUM_TOLERANCE: f64 = 1e-9;

/// Checks every configuration invariant and returns the config unchanged, or
/// the complete list of violations.
pub fn validate_config(cfg: SimConfig) -> Result<SimConfig, ConfigErrors> {
    let mut errs = Vec::new();
    let mut fail = |field: &'static str, value: String, message: &str| {
        errs.push(Violation {
            field,
            value,
            message: message.to_string(),
        })
    };

    if cfg.n_nodes == 0 {
        fail("n_nodes", cfg.n_nodes.to_string(), "at least one node required");
    }
    if !(cfg.terrain.width > 0.0 && cfg.terrain.height > 0.0) {
        fail(
            "terrain",
            format!("{}x{}", cfg.terrain.width, cfg.terrain.height),
            "width and height must be positive",
        );
    }
    if !(cfg.range > 0.0) {
        fail("range", cfg.range.to_string(), "must be positive");
    }
    if !(cfg.speed_min >= 0.0 && cfg.speed_min <= cfg.speed_max) {
        fail(
            "speed_max",
            format!("speed_min={} speed_max={}", cfg.speed_min, cfg.speed_max),
            "need 0 <= speed_min <= speed_max",
        );
    }
    if cfg.direction_hold == Some(0) {
        fail("direction_hold", "0".into(), "must be at least 1 tick");
    }
    if cfg.hp_min == 0 {
        fail("hp_min", "0".into(), "must be at least 1 tick");
    }
    if cfg.hp_min > cfg.hp_max {
        fail(
            "hp_min",
            format!("hp_min={} hp_max={}", cfg.hp_min, cfg.hp_max),
            "hp_min > hp_max",
        );
    }
    if cfg.k < 1 {
        fail("k", cfg.k.to_string(), "must be >= 1");
    }
    if cfg.p < 1 {
        fail("p", cfg.p.to_string(), "must be >= 1");
    }
    for (field, w) in [("w1", cfg.w1), ("w2", cfg.w2)] {
        if !(0.0..=1.0).contains(&w) {
            fail(field, w.to_string(), "must lie in [0, 1]");
        }
    }
    if !((cfg.w1 + cfg.w2) - 1.0).abs().le(&SUM_TOLERANCE) {
        fail(
            "w1",
            format!("w1={} w2={}", cfg.w1, cfg.w2),
            "w1+w2 ≠ 1",
        );
    }
    if let Some(m) = cfg.m_sat {
        if !(m > 0.0) {
            fail("m_sat", m.to_string(), "must be positive");
        }
    }
    let [lo, hi] = cfg.battery_init;
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        fail(
            "battery_init",
            format!("[{lo}, {hi}]"),
            "need 0 < lo <= hi",
        );
    }
    if let Err(msg) = cfg.energy.check() {
        fail("energy", format!("{:?}", cfg.energy), &msg);
    }
    let c = cfg.wca;
    if c.c1 < 0.0 || c.c2 < 0.0 || c.c3 < 0.0 || ((c.c1 + c.c2 + c.c3) - 1.0).abs() > SUM_TOLERANCE {
        fail(
            "wca",
            format!("c1={} c2={} c3={}", c.c1, c.c2, c.c3),
            "coefficients must be non-negative and sum to 1",
        );
    }
    if let Some(d) = c.ideal_degree {
        if !(d >= 0.0) {
            fail("wca", d.to_string(), "ideal_degree must be non-negative");
        }
    }
    if let Some(pool) = cfg.id_pool {
        if (pool as usize) < cfg.n_nodes {
            fail("id_pool", pool.to_string(), "pool must hold at least n_nodes IDs");
        }
    }
    if cfg.snapshot_every == 0 {
        fail("snapshot_every", "0".into(), "must be at least 1");
    }
    if !(cfg.tick_seconds > 0.0) {
        fail("tick_seconds", cfg.tick_seconds.to_string(), "must be positive");
    }

    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(errs))
    }
}
