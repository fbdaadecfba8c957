//! CSV outputs of a run.

use std::io::Write;
use std::path::{Path, PathBuf};

use super::stats::{NodeSummary, SimStats};

pub const DAILY_CSV: &str = "stats_daily.csv";
pub const SUMMARY_CSV: &str = "stats_summary.csv";
pub const SOC_TIMELINE_CSV: &str = "soc_timeline.csv";
pub const LOCALIZATIONS_TIMELINE_CSV: &str = "localizations_timeline.csv";
pub const SOLVER_ERRORS_CSV: &str = "solver_errors.csv";

pub const DAILY_HEADER: [&str; 7] = ["day", "node_id", "role", "active", "passive", "responses", "soc"];
pub const SUMMARY_HEADER: [&str; 8] = ["node_id", "role", "avg", "md", "sigma", "min", "max", "final_soc"];

/// Writes every output file of `stats` into `dir` and returns the paths in
/// the order written.
pub fn write_outputs(stats: &SimStats, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut file = |name: &str, f: &dyn Fn(&mut csv::Writer<std::fs::File>) -> csv::Result<()>| {
        let path = dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        f(&mut w)?;
        w.flush()?;
        written.push(path);
        Ok::<_, std::io::Error>(())
    };

    file(DAILY_CSV, &|w| write_daily(stats, w))?;
    file(SUMMARY_CSV, &|w| write_summary(&stats.summary(), w))?;
    file(SOC_TIMELINE_CSV, &|w| {
        w.write_record(["hour", "node_id", "soc"])?;
        for r in &stats.hourly {
            w.write_record([r.hour.to_string(), stats.nodes[r.node].id.clone(), fmt_soc(r.soc)])?;
        }
        Ok(())
    })?;
    file(LOCALIZATIONS_TIMELINE_CSV, &|w| {
        w.write_record(["hour", "node_id", "attempts", "active", "passive"])?;
        for r in stats.hourly.iter().filter(|r| stats.nodes[r.node].role == super::Role::Tag) {
            w.write_record([
                r.hour.to_string(),
                stats.nodes[r.node].id.clone(),
                r.attempts.to_string(),
                r.active.to_string(),
                r.passive.to_string(),
            ])?;
        }
        Ok(())
    })?;
    if !stats.solver_records.is_empty() {
        file(SOLVER_ERRORS_CSV, &|w| {
            w.write_record(["minute", "node_id", "solver", "error_m", "converged", "iterations"])?;
            for r in &stats.solver_records {
                w.write_record([
                    r.minute.to_string(),
                    stats.nodes[r.node].id.clone(),
                    r.solver.as_str().to_string(),
                    format!("{:.6}", r.error_m),
                    r.converged.to_string(),
                    r.iterations.to_string(),
                ])?;
            }
            Ok(())
        })?;
    }
    Ok(written)
}

fn write_daily<W: Write>(stats: &SimStats, w: &mut csv::Writer<W>) -> csv::Result<()> {
    w.write_record(DAILY_HEADER)?;
    for r in &stats.daily {
        let node = &stats.nodes[r.node];
        w.write_record([
            r.day.to_string(),
            node.id.clone(),
            node.role.as_str().to_string(),
            r.active.to_string(),
            r.passive.to_string(),
            r.responses.to_string(),
            fmt_soc(r.soc),
        ])?;
    }
    Ok(())
}

pub fn write_summary<W: Write>(rows: &[NodeSummary], w: &mut csv::Writer<W>) -> csv::Result<()> {
    w.write_record(SUMMARY_HEADER)?;
    for s in rows {
        let a = &s.daily;
        w.write_record([
            s.node_id.clone(),
            s.role.as_str().to_string(),
            fmt_stat(a.avg),
            fmt_stat(a.md),
            fmt_stat(a.sigma),
            fmt_stat(a.min),
            fmt_stat(a.max),
            fmt_soc(s.final_soc),
        ])?;
    }
    Ok(())
}

/// Nine decimals resolve a few microjoules on the default battery.
pub fn fmt_soc(soc: f64) -> String {
    format!("{soc:.9}")
}

pub fn fmt_stat(v: f64) -> String {
    format!("{v:.6}")
}
