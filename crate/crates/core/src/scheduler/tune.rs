//! Offline grid search over the AIMD thresholds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::AimdParams;
use crate::sim::{SimConfig, Simulation};

/// Every battery starts at this state of charge, and every tag must end at
/// or above it for a grid point to be feasible.
pub const TUNE_SOC: f64 = 0.1;

/// Candidate values per threshold. The penalty term `1/soc - 1` maps a
/// threshold `beta` to a state of charge of about `1 / (1 - beta)`, so the
/// default thresholds span roughly 5% to 20%.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchGrid {
    pub beta1: Vec<f64>,
    pub beta2: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl Default for SearchGrid {
    fn default() -> Self {
        Self {
            beta1: vec![-19.0, -9.0, -7.0, -6.0],
            beta2: vec![-9.0, -7.0, -6.0, -5.0, -4.0],
            gamma: vec![0.5, 0.7, 0.9],
        }
    }
}

impl SearchGrid {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let grid: SearchGrid = toml::from_str(text).map_err(|e| e.to_string())?;
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<(), String> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !(finite(&self.beta1) && finite(&self.beta2)) {
            return Err("grid thresholds must be finite".into());
        }
        if self.gamma.iter().any(|g| !(*g > 0.0 && *g <= 1.0)) {
            return Err("grid gamma values must be in (0, 1]".into());
        }
        if self.points().is_empty() {
            return Err("grid has no point with beta1 <= beta2".into());
        }
        Ok(())
    }

    /// Grid points in lexicographic (beta1, beta2, gamma) order, skipping
    /// `beta1 > beta2`.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut points = Vec::new();
        for &beta1 in &self.beta1 {
            for &beta2 in &self.beta2 {
                if beta1 > beta2 {
                    continue;
                }
                for &gamma in &self.gamma {
                    points.push(GridPoint { beta1, beta2, gamma });
                }
            }
        }
        points
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub beta1: f64,
    pub beta2: f64,
    pub gamma: f64,
}

impl GridPoint {
    pub fn apply(&self, params: AimdParams) -> AimdParams {
        AimdParams {
            beta1: self.beta1,
            beta2: self.beta2,
            gamma: self.gamma,
            ..params
        }
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuneRow {
    pub point: GridPoint,
    pub feasible: bool,
    pub mean_localizations_per_tag: f64,
    pub min_final_soc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneOutcome {
    /// In grid order.
    pub rows: Vec<TuneRow>,
    pub best: AimdParams,
    pub objective: f64,
}

impl TuneOutcome {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        write_rows(&self.rows, out)
    }
}

pub const REPORT_HEADER: [&str; 6] = [
    "beta1",
    "beta2",
    "gamma",
    "feasible",
    "mean_localizations_per_tag",
    "min_final_soc",
];

pub fn write_rows<W: std::io::Write>(rows: &[TuneRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for r in rows {
        w.write_record([
            r.point.beta1.to_string(),
            r.point.beta2.to_string(),
            r.point.gamma.to_string(),
            r.feasible.to_string(),
            format!("{:.6}", r.mean_localizations_per_tag),
            format!("{:.9}", r.min_final_soc),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Error)]
pub enum TuneError {
    #[error("no feasible point: every grid point leaves some tag below {:.0}% charge", TUNE_SOC * 100.0)]
    NoFeasiblePoint(Vec<TuneRow>),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("invalid scenario: {0}")]
    Scenario(String),
}

/// Simulates `scenario` once per grid point with all batteries at 10% and
/// returns the feasible point with the most localizations per tag. Ties go
/// to the earlier point. Points run in parallel; the result does not depend
/// on thread count.
pub fn tune(grid: &SearchGrid, scenario: &SimConfig) -> Result<TuneOutcome, TuneError> {
    grid.validate().map_err(TuneError::Grid)?;
    let mut base = scenario.clone();
    base.initial_soc = TUNE_SOC;
    base.validate().map_err(|e| TuneError::Scenario(e.join("; ")))?;
    // Traces and profiles resolve the same for every point.
    Simulation::new(&base).map_err(TuneError::Scenario)?;

    let rows: Vec<TuneRow> = grid
        .points()
        .into_par_iter()
        .map(|point| {
            let mut config = base.clone();
            config.scheduler = point.apply(config.scheduler);
            let stats = Simulation::new(&config).expect("scenario checked").run();
            let min_final_soc = stats.min_final_tag_soc();
            TuneRow {
                point,
                feasible: min_final_soc >= TUNE_SOC,
                mean_localizations_per_tag: stats.mean_localizations_per_tag(),
                min_final_soc,
            }
        })
        .collect();

    let mut best: Option<TuneRow> = None;
    for row in rows.iter().filter(|r| r.feasible) {
        if best.is_none_or(|b| row.mean_localizations_per_tag > b.mean_localizations_per_tag) {
            best = Some(*row);
        }
    }
    match best {
        Some(b) => Ok(TuneOutcome {
            best: b.point.apply(scenario.scheduler),
            objective: b.mean_localizations_per_tag,
            rows,
        }),
        None => Err(TuneError::NoFeasiblePoint(rows)),
    }
}
