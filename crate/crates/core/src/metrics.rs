//! Run report and the statistics computed over node populations.

use std::collections::BTreeMap;
use std::io;

use serde::{Deserialize, Serialize};

use crate::model::{Algorithm, NodeId};
use crate::radio::KindCounts;

/// One recorded interval. Message and re-affiliation counts are summed over
/// the interval; the remaining columns are sampled at its last tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub tick: u64,
    pub msgs_hello: u64,
    pub msgs_weight: u64,
    pub msgs_newid: u64,
    pub msgs_hpadapt: u64,
    pub energy_var: f64,
    pub n_clusters: usize,
    pub reaffiliations: u64,
    pub mean_hp: f64,
}

impl SeriesRow {
    pub fn messages(&self) -> u64 {
        self.msgs_hello + self.msgs_weight + self.msgs_newid + self.msgs_hpadapt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MessageTotals {
    pub hello: u64,
    pub weight_report: u64,
    pub new_id_assign: u64,
    pub hp_adapt: u64,
    pub total: u64,
}

impl From<&KindCounts> for MessageTotals {
    fn from(c: &KindCounts) -> Self {
        MessageTotals {
            hello: c.hello,
            weight_report: c.weight_report,
            new_id_assign: c.new_id_assign,
            hp_adapt: c.hp_adapt,
            total: c.total(),
        }
    }
}

/// Conventions the numbers depend on, carried alongside them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub n_nodes: usize,
    pub duration: u64,
    pub tick_seconds: f64,
    pub snapshot_every: u64,
    /// `"once-per-transmission"`: a broadcast counts once, not per receiver.
    pub message_accounting: String,
    /// `"current-snapshot"`: re-clustering after ID reassignment reuses the
    /// topology of the same tick.
    pub reclustering_after_reassignment: String,
    /// Ticks on which the weight/reassignment steps ran.
    pub lidar_rounds: u64,
    /// WCA re-elections triggered by uncovered nodes.
    pub wca_invocations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub meta: RunMeta,
    pub series: Vec<SeriesRow>,
    pub totals: MessageTotals,
    pub final_energy_variance: f64,
    /// Logical ID each host started with, indexed by host.
    pub initial_ids: Vec<NodeId>,
    /// Ticks spent as cluster head, indexed by host.
    pub ch_tenure: Vec<u64>,
    /// Tick at which each host's battery ran out.
    pub death_tick: Vec<Option<u64>>,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        write_series_csv(&self.series, out)
    }

    /// Host whose initial ID was the smallest.
    pub fn initial_lowest_id_host(&self) -> Option<usize> {
        self.initial_ids.iter().enumerate().min_by_key(|(_, id)| **id).map(|(i, _)| i)
    }

    pub fn max_tenure(&self) -> u64 {
        self.ch_tenure.iter().copied().max().unwrap_or(0)
    }
}

pub fn write_series_csv<W: io::Write>(rows: &[SeriesRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "tick",
            "msgs_hello",
            "msgs_weight",
            "msgs_newid",
            "msgs_hpadapt",
            "energy_var",
            "n_clusters",
            "reaffiliations",
            "mean_hp",
        ])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("variance of an empty population")]
    Empty,
}

/// Population variance of battery levels; dead nodes count as zero.
pub fn energy_variance(batteries: &[f64]) -> Result<f64, StatsError> {
    if batteries.is_empty() {
        return Err(StatsError::Empty);
    }
    let n = batteries.len() as f64;
    let levels = batteries.iter().map(|b| b.max(0.0));
    let mean = levels.clone().sum::<f64>() / n;
    Ok(levels.map(|b| (b - mean) * (b - mean)).sum::<f64>() / n)
}

/// Nodes that are non-heads in both snapshots but attached to a different
/// head. Maps are node to head, heads mapping to themselves; nodes missing
/// from either map are skipped.
pub fn reaffiliation_count<K: Ord + Copy>(prev: &BTreeMap<K, K>, next: &BTreeMap<K, K>) -> usize {
    prev.iter()
        .filter(|(v, h)| *v != *h)
        .filter(|(v, h)| matches!(next.get(v), Some(h2) if h2 != *v && h2 != *h))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variance_examples() {
        assert_eq!(energy_variance(&[5.0, 5.0, 5.0]).unwrap(), 0.0);
        assert_eq!(energy_variance(&[0.0, 2.0]).unwrap(), 1.0);
        assert_eq!(energy_variance(&[3.0, 3.0, 3.0, 7.0]).unwrap(), 3.0);
        assert_eq!(energy_variance(&[]), Err(StatsError::Empty));
    }

    fn map(pairs: &[(u32, u32)]) -> BTreeMap<u32, u32> {
        pairs.iter().copied().collect()
    }

    #[test]
    fn reaffiliation_examples() {
        let a = map(&[(1, 1), (2, 1), (3, 3), (4, 3)]);
        assert_eq!(reaffiliation_count(&a, &a), 0);
        let switched = map(&[(1, 1), (2, 3), (3, 3), (4, 3)]);
        assert_eq!(reaffiliation_count(&a, &switched), 1);
        let promoted = map(&[(1, 1), (2, 2), (3, 3), (4, 3)]);
        assert_eq!(reaffiliation_count(&a, &promoted), 0);
    }

    #[test]
    fn empty_series_csv_has_header() {
        let mut buf = Vec::new();
        write_series_csv(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().trim(),
            "tick,msgs_hello,msgs_weight,msgs_newid,msgs_hpadapt,energy_var,n_clusters,reaffiliations,mean_hp"
        );
    }
}
