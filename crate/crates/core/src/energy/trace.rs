use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use thiserror::Error;

use super::{HarvestProfile, LuxPowerModel};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("trace file is empty")]
    Empty,
    #[error("unrecognised header {0:?}; expected timestamp,lux or timestamp,watts")]
    Header(String),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: timestamp goes backwards")]
    NonMonotone { line: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Column {
    Lux,
    Watts,
}

/// A resampled trace plus any warnings raised while building it.
#[derive(Debug, Clone)]
pub struct IngestedTrace {
    pub profile: HarvestProfile,
    /// Minutes with no samples, filled with 0 W.
    pub gap_minutes: Vec<usize>,
}

/// Reads a `timestamp,lux` or `timestamp,watts` CSV and resamples it to
/// one-minute means. The header selects the interpretation; lux samples are
/// converted to power before averaging. Timestamps are ISO 8601, with or
/// without an offset. Minutes without samples are filled with 0 W and
/// reported as gaps.
pub fn ingest_trace(path: &Path, model: &LuxPowerModel) -> Result<IngestedTrace, TraceError> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| TraceError::Io {
            path: path.display().to_string(),
            source,
        })?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trace".into());
    parse_trace(&text, &label, model)
}

pub(crate) fn parse_trace(
    text: &str,
    label: &str,
    model: &LuxPowerModel,
) -> Result<IngestedTrace, TraceError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| TraceError::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(TraceError::Empty);
    }
    let column = match (headers.get(0), headers.get(1), headers.len()) {
        (Some(t), Some(v), 2) if t.starts_with("timestamp") => match v {
            "lux" => Column::Lux,
            "watts" => Column::Watts,
            _ => return Err(TraceError::Header(headers.iter().collect::<Vec<_>>().join(","))),
        },
        _ => return Err(TraceError::Header(headers.iter().collect::<Vec<_>>().join(","))),
    };

    let mut samples: Vec<(i64, f64)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| TraceError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let parse_err = |message: String| TraceError::Parse { line, message };
        let millis = parse_timestamp(&record[0]).ok_or_else(|| {
            parse_err(format!("invalid timestamp {:?}", &record[0]))
        })?;
        let value: f64 = record[1]
            .parse()
            .map_err(|_| parse_err(format!("invalid number {:?}", &record[1])))?;
        if !(value.is_finite() && value >= 0.0) {
            return Err(parse_err(format!("value must be non-negative, got {value}")));
        }
        if samples.last().is_some_and(|&(prev, _)| millis < prev) {
            return Err(TraceError::NonMonotone { line });
        }
        let watts = match column {
            Column::Lux => model.power(value),
            Column::Watts => value,
        };
        samples.push((millis, watts));
    }
    let (first, _) = *samples.first().ok_or(TraceError::Empty)?;
    let (last, _) = *samples.last().ok_or(TraceError::Empty)?;

    let start = first.div_euclid(60_000) * 60_000;
    let minutes = ((last - start) / 60_000 + 1) as usize;
    let mut sums = vec![0.0; minutes];
    let mut counts = vec![0u32; minutes];
    for (t, w) in samples {
        let m = ((t - start) / 60_000) as usize;
        sums[m] += w;
        counts[m] += 1;
    }
    let gap_minutes: Vec<usize> = (0..minutes).filter(|&m| counts[m] == 0).collect();
    if !gap_minutes.is_empty() {
        log::warn!(
            "trace '{label}': {} minute(s) without samples filled with 0 W, first at minute {}",
            gap_minutes.len(),
            gap_minutes[0]
        );
    }
    let means = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c == 0 { 0.0 } else { s / f64::from(c) })
        .collect();
    let profile = HarvestProfile::new(label, means).map_err(|message| TraceError::Parse {
        line: 0,
        message,
    })?;
    Ok(IngestedTrace {
        profile,
        gap_minutes,
    })
}

/// Milliseconds since the epoch. Timestamps without an offset are taken as
/// UTC.
fn parse_timestamp(s: &str) -> Option<i64> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.timestamp_millis());
    }
    ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(s, fmt).ok())
        .map(|t| t.and_utc().timestamp_millis())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> LuxPowerModel {
        LuxPowerModel::default()
    }

    #[test]
    fn constant_lux_hour_at_one_hertz() {
        let mut text = String::from("timestamp,lux\n");
        for s in 0..3600 {
            text.push_str(&format!("2024-03-01T08:{:02}:{:02}Z,500\n", s / 60, s % 60));
        }
        let t = parse_trace(&text, "office", &model()).unwrap();
        assert_eq!(t.profile.samples.len(), 60);
        let expected = lux_to_power_default(500.0);
        assert!(t
            .profile
            .samples
            .iter()
            .all(|&w| (w / expected - 1.0).abs() < 1e-12));
        assert!(t.gap_minutes.is_empty());
    }

    fn lux_to_power_default(lux: f64) -> f64 {
        model().power(lux)
    }

    #[test]
    fn watts_header_is_taken_verbatim() {
        let text = "timestamp,watts\n2024-03-01 00:00:00,1e-5\n2024-03-01 00:00:30,3e-5\n";
        let t = parse_trace(text, "w", &model()).unwrap();
        assert_eq!(t.profile.samples, vec![2e-5]);
    }

    #[test]
    fn gaps_are_zero_filled() {
        let text = "timestamp,watts\n\
                    2024-03-01T00:00:00Z,1e-5\n\
                    2024-03-01T00:03:00Z,1e-5\n";
        let t = parse_trace(text, "g", &model()).unwrap();
        assert_eq!(t.profile.samples, vec![1e-5, 0.0, 0.0, 1e-5]);
        assert_eq!(t.gap_minutes, vec![1, 2]);
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_trace("", "e", &model()), Err(TraceError::Empty)));
        assert!(matches!(
            parse_trace("timestamp,lux\n", "e", &model()),
            Err(TraceError::Empty)
        ));
        assert!(matches!(
            parse_trace("time,volts\n", "e", &model()),
            Err(TraceError::Header(_))
        ));
        let bad = "timestamp,lux\n2024-03-01T00:00:00Z,5\n2024-03-01T00:01:00Z,five\n";
        match parse_trace(bad, "e", &model()) {
            Err(TraceError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let back = "timestamp,lux\n2024-03-01T00:05:00Z,5\n2024-03-01T00:01:00Z,5\n";
        assert!(matches!(
            parse_trace(back, "e", &model()),
            Err(TraceError::NonMonotone { line: 3 })
        ));
    }
}
