//! Aggregates of a finished run, recomputed from its daily CSV.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::sim::output::{fmt_soc, fmt_stat, write_summary, DAILY_CSV, DAILY_HEADER, SUMMARY_CSV};
use crate::sim::stats::{role_aggregate, summarize, DailyRecord, NodeInfo, Role};

pub const ROLES_CSV: &str = "report_roles.csv";
pub const NODES_CSV: &str = "report_nodes.csv";
pub const DAILY_LONG_CSV: &str = "report_daily_long.csv";
pub const SOC_MEAN_CSV: &str = "report_soc_mean.csv";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{0} is not a directory")]
    NotADirectory(PathBuf),
    #[error("{0} not found")]
    Missing(PathBuf),
    #[error("{0} has no data rows")]
    Empty(PathBuf),
    #[error("{path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("{0} does not list the same nodes as the daily records")]
    Mismatch(PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Reads `stats_daily.csv` from `stats_dir` and writes per-role and per-node
/// aggregates plus long-format tables into `out`.
pub fn report(stats_dir: &Path, out: &Path) -> Result<Vec<PathBuf>, ReportError> {
    if !stats_dir.is_dir() {
        return Err(ReportError::NotADirectory(stats_dir.to_path_buf()));
    }
    let daily_path = stats_dir.join(DAILY_CSV);
    if !daily_path.is_file() {
        return Err(ReportError::Missing(daily_path));
    }
    let (nodes, daily) = read_daily(&daily_path)?;
    if daily.is_empty() {
        return Err(ReportError::Empty(daily_path));
    }
    let summary_path = stats_dir.join(SUMMARY_CSV);
    if summary_path.is_file() {
        check_summary_nodes(&summary_path, &nodes)?;
    }

    std::fs::create_dir_all(out)?;
    let malformed = |path: &Path, e: csv::Error| ReportError::Malformed {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut written = Vec::new();

    let path = out.join(ROLES_CSV);
    let mut w = csv::Writer::from_path(&path).map_err(|e| malformed(&path, e))?;
    w.write_record(["role", "avg", "md", "sigma", "min", "max"]).map_err(|e| malformed(&path, e))?;
    for role in [Role::Tag, Role::Anchor] {
        if let Some(a) = role_aggregate(&nodes, &daily, role) {
            w.write_record([
                role.as_str().to_string(),
                fmt_stat(a.avg),
                fmt_stat(a.md),
                fmt_stat(a.sigma),
                fmt_stat(a.min),
                fmt_stat(a.max),
            ])
            .map_err(|e| malformed(&path, e))?;
        }
    }
    w.flush()?;
    written.push(path);

    let path = out.join(NODES_CSV);
    let mut w = csv::Writer::from_path(&path).map_err(|e| malformed(&path, e))?;
    write_summary(&summarize(&nodes, &daily), &mut w).map_err(|e| malformed(&path, e))?;
    w.flush()?;
    written.push(path);

    let path = out.join(DAILY_LONG_CSV);
    let mut w = csv::Writer::from_path(&path).map_err(|e| malformed(&path, e))?;
    w.write_record(["day", "node_id", "role", "metric", "value"]).map_err(|e| malformed(&path, e))?;
    for r in &daily {
        let n = &nodes[r.node];
        for (metric, value) in [
            ("active", r.active.to_string()),
            ("passive", r.passive.to_string()),
            ("responses", r.responses.to_string()),
            ("soc", fmt_soc(r.soc)),
        ] {
            w.write_record([r.day.to_string(), n.id.clone(), n.role.as_str().into(), metric.into(), value])
                .map_err(|e| malformed(&path, e))?;
        }
    }
    w.flush()?;
    written.push(path);

    let path = out.join(SOC_MEAN_CSV);
    let mut means: BTreeMap<(u32, Role), (f64, usize)> = BTreeMap::new();
    for r in &daily {
        let e = means.entry((r.day, nodes[r.node].role)).or_default();
        e.0 += r.soc;
        e.1 += 1;
    }
    let mut w = csv::Writer::from_path(&path).map_err(|e| malformed(&path, e))?;
    w.write_record(["day", "role", "mean_soc"]).map_err(|e| malformed(&path, e))?;
    for ((day, role), (sum, n)) in means {
        w.write_record([day.to_string(), role.as_str().into(), fmt_soc(sum / n as f64)])
            .map_err(|e| malformed(&path, e))?;
    }
    w.flush()?;
    written.push(path);
    Ok(written)
}

/// Parses a daily CSV into node infos (in order of first appearance) and
/// records.
pub fn read_daily(path: &Path) -> Result<(Vec<NodeInfo>, Vec<DailyRecord>), ReportError> {
    let malformed = |message: String| ReportError::Malformed {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| malformed(e.to_string()))?;
    let headers = reader.headers().map_err(|e| malformed(e.to_string()))?;
    if headers.iter().ne(DAILY_HEADER) {
        return Err(malformed(format!("expected header {}", DAILY_HEADER.join(","))));
    }
    let mut nodes: Vec<NodeInfo> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut daily = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| malformed(e.to_string()))?;
        let line = i + 2;
        let field = |k: usize| record.get(k).unwrap_or("");
        let bad = |what: &str| malformed(format!("line {line}: invalid {what}"));
        let role: Role = field(2).parse().map_err(|_| bad("role"))?;
        let id = field(1).to_string();
        let node = match index.get(&id) {
            Some(&n) => {
                if nodes[n].role != role {
                    return Err(bad("role"));
                }
                n
            }
            None => {
                nodes.push(NodeInfo { id: id.clone(), role });
                index.insert(id, nodes.len() - 1);
                nodes.len() - 1
            }
        };
        daily.push(DailyRecord {
            day: field(0).parse().map_err(|_| bad("day"))?,
            node,
            active: field(3).parse().map_err(|_| bad("active"))?,
            passive: field(4).parse().map_err(|_| bad("passive"))?,
            responses: field(5).parse().map_err(|_| bad("responses"))?,
            soc: field(6).parse().map_err(|_| bad("soc"))?,
        });
    }
    Ok((nodes, daily))
}

fn check_summary_nodes(path: &Path, nodes: &[NodeInfo]) -> Result<(), ReportError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| ReportError::Malformed {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut ids = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| ReportError::Malformed {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        ids.push(record.get(0).unwrap_or("").to_string());
    }
    if ids.iter().ne(nodes.iter().map(|n| &n.id)) {
        return Err(ReportError::Mismatch(path.to_path_buf()));
    }
    Ok(())
}
