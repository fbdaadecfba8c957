//! Batch solving of measurement CSVs.

use std::collections::HashMap;

use clap::ValueEnum;
use thiserror::Error;

use crate::solvers::{
    larsson_multilaterate, lm_multilaterate, lm_tdoa, MultilaterationProblem, SolverConfig,
    SolverResult, TdoaProblem,
};
use crate::Position;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverChoice {
    Larsson,
    Lm,
    Tdoa,
}

impl SolverChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverChoice::Larsson => "larsson",
            SolverChoice::Lm => "lm",
            SolverChoice::Tdoa => "tdoa",
        }
    }

    fn kind(self) -> &'static str {
        match self {
            SolverChoice::Tdoa => "tdoa",
            _ => "twr",
        }
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid tolerance {0}: must be positive and finite")]
    Tolerance(f64),
    #[error("missing column {0:?}")]
    MissingColumn(&'static str),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
}

/// One output row. A failed problem has no result and an error message.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveRow {
    pub problem_id: String,
    pub solver: SolverChoice,
    pub result: Option<SolverResult>,
    pub error: Option<String>,
}

const REQUIRED: [&str; 6] = ["problem_id", "kind", "anchor_x", "anchor_y", "anchor_z", "value_m"];
const INITIATOR: [&str; 3] = ["initiator_x", "initiator_y", "initiator_z"];

pub const OUTPUT_HEADER: [&str; 9] = [
    "problem_id",
    "solver",
    "x",
    "y",
    "z",
    "converged",
    "iterations",
    "residual",
    "error",
];

#[derive(Default)]
struct Pending {
    kind: Option<String>,
    anchors: Vec<Position>,
    values: Vec<f64>,
    initiator: Option<Position>,
    error: Option<String>,
}

impl Pending {
    fn fail(&mut self, message: String) {
        self.error.get_or_insert(message);
    }
}

/// Solves every problem in `text`, one output row per problem in order of
/// first appearance. Rows of a problem need not be contiguous. Columns
/// other than the known ones are ignored.
pub fn solve_csv(text: &str, solver: SolverChoice, tolerance: f64) -> Result<Vec<SolveRow>, SolveError> {
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(SolveError::Tolerance(tolerance));
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let column = |name: &'static str| headers.iter().position(|h| h == name);
    let mut required = [0; 6];
    for (slot, name) in required.iter_mut().zip(REQUIRED) {
        *slot = column(name).ok_or(SolveError::MissingColumn(name))?;
    }
    let initiator_cols: Option<Vec<usize>> = INITIATOR.iter().map(|n| column(n)).collect();

    let mut order: Vec<String> = Vec::new();
    let mut problems: HashMap<String, Pending> = HashMap::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let line = line + 2;
        let id = record.get(required[0]).unwrap_or("").to_string();
        let p = problems.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            Pending::default()
        });
        let num = |i: usize| -> Result<f64, String> {
            let field = record.get(i).unwrap_or("");
            field
                .parse::<f64>()
                .map_err(|_| format!("line {line}: {:?} is not a number", field))
        };
        let kind = match record.get(required[1]).unwrap_or("") {
            // Older files spell two-way ranging rows as "range".
            "range" => "twr".to_string(),
            k => k.to_string(),
        };
        match &p.kind {
            None => p.kind = Some(kind.clone()),
            Some(k) if *k != kind => p.fail(format!("line {line}: mixed kinds {k:?} and {kind:?}")),
            _ => {}
        }
        match (num(required[2]), num(required[3]), num(required[4]), num(required[5])) {
            (Ok(x), Ok(y), Ok(z), Ok(v)) => {
                p.anchors.push(Position::new(x, y, z));
                p.values.push(v);
            }
            (a, b, c, d) => {
                let e = [a, b, c, d].into_iter().find_map(Result::err).unwrap_or_default();
                p.fail(e);
            }
        }
        if kind == "tdoa" {
            let parsed = initiator_cols
                .as_ref()
                .ok_or_else(|| format!("line {line}: tdoa rows need initiator_x, initiator_y, initiator_z"))
                .and_then(|cols| Ok(Position::new(num(cols[0])?, num(cols[1])?, num(cols[2])?)));
            match parsed {
                Ok(q) => match p.initiator {
                    None => p.initiator = Some(q),
                    Some(prev) if prev != q => p.fail(format!("line {line}: initiator changes within the problem")),
                    _ => {}
                },
                Err(e) => p.fail(e),
            }
        }
    }

    let config = SolverConfig::default().with_tolerance(tolerance);
    Ok(order
        .into_iter()
        .map(|id| {
            let p = problems.remove(&id).expect("every id was inserted");
            let outcome = solve_one(p, solver, &config);
            let (result, error) = match outcome {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e)),
            };
            SolveRow {
                problem_id: id,
                solver,
                result,
                error,
            }
        })
        .collect())
}

fn solve_one(p: Pending, solver: SolverChoice, config: &SolverConfig) -> Result<SolverResult, String> {
    if let Some(e) = p.error {
        return Err(e);
    }
    let kind = p.kind.unwrap_or_default();
    if kind != "twr" && kind != "tdoa" {
        return Err(format!("unknown kind {kind:?}; expected twr or tdoa"));
    }
    if kind != solver.kind() {
        return Err(format!("{kind} problem cannot be solved with {}", solver.as_str()));
    }
    let result = match solver {
        SolverChoice::Lm => {
            let problem = MultilaterationProblem::new(p.anchors, p.values);
            let start = problem.centroid();
            lm_multilaterate(&problem, start, config)
        }
        SolverChoice::Larsson => larsson_multilaterate(&MultilaterationProblem::new(p.anchors, p.values), config),
        SolverChoice::Tdoa => {
            let problem = TdoaProblem::new(p.initiator.unwrap_or_default(), p.anchors, p.values);
            let start = problem.default_start();
            lm_tdoa(&problem, start, config)
        }
    };
    result.map_err(|e| e.to_string())
}

pub fn write_rows<W: std::io::Write>(rows: &[SolveRow], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(OUTPUT_HEADER)?;
    for r in rows {
        let fields: [String; 9] = match (&r.result, &r.error) {
            (Some(res), _) => [
                r.problem_id.clone(),
                r.solver.as_str().into(),
                format!("{:.9}", res.position.x),
                format!("{:.9}", res.position.y),
                format!("{:.9}", res.position.z),
                res.converged.to_string(),
                res.iterations.to_string(),
                format!("{:.6e}", res.residual_norm),
                String::new(),
            ],
            (None, e) => [
                r.problem_id.clone(),
                r.solver.as_str().into(),
                String::new(),
                String::new(),
                String::new(),
                "false".into(),
                "0".into(),
                String::new(),
                e.clone().unwrap_or_default(),
            ],
        };
        w.write_record(&fields)?;
    }
    w.flush()
}
