//! Human-scale units for config files: energies in microjoules, powers in
//! microwatts, durations in microseconds.

use std::time::Duration;

use serde::{de::Error, Deserialize, Deserializer, Serializer};

use crate::energy::{Energy, Power};

fn non_negative<'de, D: Deserializer<'de>>(d: D, unit: &str) -> Result<f64, D::Error> {
    let v = f64::deserialize(d)?;
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(D::Error::custom(format!("expected a non-negative {unit} value, got {v}")))
    }
}

pub mod microjoules {
    use super::*;

    pub fn serialize<S: Serializer>(e: &Energy, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(e.microjoules())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Energy, D::Error> {
        non_negative(d, "microjoule").map(Energy::from_microjoules)
    }
}

pub mod microwatts {
    use super::*;

    pub fn serialize<S: Serializer>(p: &Power, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(p.microwatts())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Power, D::Error> {
        non_negative(d, "microwatt").map(Power::from_microwatts)
    }
}

pub mod microseconds {
    use super::*;

    pub fn serialize<S: Serializer>(t: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(t.as_nanos() as f64 / 1e3)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        non_negative(d, "microsecond").map(|us| Duration::from_nanos((us * 1e3).round() as u64))
    }
}
