//! Per-day records and their aggregates.

use serde::{Deserialize, Serialize};

use crate::energy::{Energy, EnergyLedger};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Anchor,
    Tag,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Anchor => "anchor",
            Role::Tag => "tag",
        }
    }
}

impl std::str::FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "anchor" => Ok(Role::Anchor),
            "tag" => Ok(Role::Tag),
            other => Err(format!("unknown role {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeInfo {
    pub id: String,
    pub role: Role,
}

/// One node's activity over one simulated day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DailyRecord {
    pub day: u32,
    pub node: usize,
    /// Successful active localizations (tags).
    pub active: u64,
    /// Passive localizations (tags).
    pub passive: u64,
    /// Anchor responses: given (anchors) or received in own exchanges (tags).
    pub responses: u64,
    /// State of charge at the end of the day.
    pub soc: f64,
}

impl DailyRecord {
    /// The per-day count reported in summaries: localizations for tags,
    /// responses for anchors.
    pub fn localizations(&self, role: Role) -> u64 {
        match role {
            Role::Tag => self.active + self.passive,
            Role::Anchor => self.responses,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourlyRecord {
    pub hour: u32,
    pub node: usize,
    pub soc: f64,
    /// Active attempts started this hour (tags).
    pub attempts: u32,
    pub active: u32,
    pub passive: u32,
}

/// Run-wide tallies, kept independently of the per-node counters so the two
/// can be cross-checked.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunTotals {
    pub attempts: u64,
    pub successes: u64,
    pub failures: u64,
    /// Scheduled attempts dropped because the tag could not afford them.
    pub skipped: u64,
    /// Listener qualifications summed over successful exchanges.
    pub passive_observed: u64,
    pub anchor_responses: u64,
}

/// Energy taken by each kind of load over the run, per node.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadBreakdown {
    pub events: Energy,
    pub sleep: Energy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverRecord {
    pub minute: u64,
    pub node: usize,
    pub solver: SolverKind,
    pub error_m: f64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Lm,
    Larsson,
    Tdoa,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Lm => "lm",
            SolverKind::Larsson => "larsson",
            SolverKind::Tdoa => "tdoa",
        }
    }
}

/// Everything a run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct SimStats {
    pub nodes: Vec<NodeInfo>,
    pub days: u32,
    pub daily: Vec<DailyRecord>,
    pub hourly: Vec<HourlyRecord>,
    pub ledgers: Vec<EnergyLedger>,
    pub final_stored: Vec<Energy>,
    pub loads: Vec<LoadBreakdown>,
    pub totals: RunTotals,
    pub solver_records: Vec<SolverRecord>,
}

/// Mean, median, population standard deviation and range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub avg: f64,
    pub md: f64,
    pub sigma: f64,
    pub min: f64,
    pub max: f64,
}

impl Aggregate {
    /// `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let avg = values.iter().sum::<f64>() / n;
        let sigma = (values.iter().map(|v| (v - avg).powi(2)).sum::<f64>() / n).sqrt();
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let md = if sorted.len() % 2 == 1 {
            sorted[mid]
        } else {
            (sorted[mid - 1] + sorted[mid]) / 2.0
        };
        Some(Self {
            avg,
            md,
            sigma,
            min: sorted[0],
            max: sorted[sorted.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSummary {
    pub node_id: String,
    pub role: Role,
    #[serde(flatten)]
    pub daily: Aggregate,
    pub final_soc: f64,
}

impl SimStats {
    pub fn role(&self, node: usize) -> Role {
        self.nodes[node].role
    }

    pub fn tag_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].role == Role::Tag)
    }

    /// Per-day localization counts of one node.
    pub fn daily_series(&self, node: usize) -> Vec<f64> {
        let role = self.role(node);
        self.daily
            .iter()
            .filter(|r| r.node == node)
            .map(|r| r.localizations(role) as f64)
            .collect()
    }

    pub fn final_soc(&self, node: usize) -> f64 {
        self.daily
            .iter()
            .rev()
            .find(|r| r.node == node)
            .map_or(0.0, |r| r.soc)
    }

    /// One row per node, in node order.
    pub fn summary(&self) -> Vec<NodeSummary> {
        summarize(&self.nodes, &self.daily)
    }

    /// Pooled per-day aggregates of all nodes with the given role.
    pub fn role_aggregate(&self, role: Role) -> Option<Aggregate> {
        role_aggregate(&self.nodes, &self.daily, role)
    }

    /// Mean over tags of total (active + passive) localizations.
    pub fn mean_localizations_per_tag(&self) -> f64 {
        let tags: Vec<usize> = self.tag_indices().collect();
        if tags.is_empty() {
            return 0.0;
        }
        let total: u64 = self
            .daily
            .iter()
            .filter(|r| self.nodes[r.node].role == Role::Tag)
            .map(|r| r.active + r.passive)
            .sum();
        total as f64 / tags.len() as f64
    }

    /// Mean localizations per tag per day.
    pub fn mean_daily_localizations_per_tag(&self) -> f64 {
        self.mean_localizations_per_tag() / f64::from(self.days)
    }

    pub fn min_final_tag_soc(&self) -> f64 {
        self.tag_indices()
            .map(|i| self.final_soc(i))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Node summaries recomputed from daily records.
pub fn summarize(nodes: &[NodeInfo], daily: &[DailyRecord]) -> Vec<NodeSummary> {
    let mut series: Vec<Vec<f64>> = vec![Vec::new(); nodes.len()];
    let mut last_soc = vec![0.0; nodes.len()];
    let mut last_day = vec![None; nodes.len()];
    for r in daily {
        series[r.node].push(r.localizations(nodes[r.node].role) as f64);
        if last_day[r.node].is_none_or(|d| r.day >= d) {
            last_day[r.node] = Some(r.day);
            last_soc[r.node] = r.soc;
        }
    }
    nodes
        .iter()
        .enumerate()
        .filter_map(|(i, n)| {
            Aggregate::of(&series[i]).map(|daily| NodeSummary {
                node_id: n.id.clone(),
                role: n.role,
                daily,
                final_soc: last_soc[i],
            })
        })
        .collect()
}

pub fn role_aggregate(nodes: &[NodeInfo], daily: &[DailyRecord], role: Role) -> Option<Aggregate> {
    let values: Vec<f64> = daily
        .iter()
        .filter(|r| nodes[r.node].role == role)
        .map(|r| r.localizations(role) as f64)
        .collect();
    Aggregate::of(&values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_hand_computed() {
        // mean 4, deviations -3 -1 0 1 3 -> variance 20/5 = 4
        let a = Aggregate::of(&[1.0, 3.0, 4.0, 5.0, 7.0]).unwrap();
        assert_eq!(a.avg, 4.0);
        assert_eq!(a.md, 4.0);
        assert_eq!(a.sigma, 2.0);
        assert_eq!((a.min, a.max), (1.0, 7.0));
        let even = Aggregate::of(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(even.md, 2.5);
        assert!(Aggregate::of(&[]).is_none());
    }

    #[test]
    fn summary_uses_role_specific_counts() {
        let nodes = vec![
            NodeInfo {
                id: "A01".into(),
                role: Role::Anchor,
            },
            NodeInfo {
                id: "T001".into(),
                role: Role::Tag,
            },
        ];
        let rec = |day, node, active, passive, responses, soc| DailyRecord {
            day,
            node,
            active,
            passive,
            responses,
            soc,
        };
        let daily = vec![
            rec(0, 0, 0, 0, 10, 0.1),
            rec(0, 1, 2, 3, 12, 0.2),
            rec(1, 0, 0, 0, 20, 0.3),
            rec(1, 1, 1, 1, 6, 0.4),
        ];
        let s = summarize(&nodes, &daily);
        assert_eq!(s[0].daily.avg, 15.0);
        assert_eq!(s[0].final_soc, 0.3);
        assert_eq!(s[1].daily.avg, 3.5);
        assert_eq!(s[1].final_soc, 0.4);
        let tags = role_aggregate(&nodes, &daily, Role::Tag).unwrap();
        assert_eq!((tags.min, tags.max), (2.0, 5.0));
    }
}
