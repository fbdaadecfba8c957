//! The wake-up ranging exchange: one wake-up call and poll from the active
//! tag, one delayed response per woken anchor, and a final broadcast, for
//! `N_A + 1` messages in total. Anchors answer in slots so that responses
//! from up to `n_hat_a` anchors never overlap.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::energy::{Energy, Power};
use crate::serde_units::{microjoules, microseconds, microwatts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolParams {
    #[serde(rename = "delta_t_fix_us", with = "microseconds")]
    pub delta_t_fix: Duration,
    /// Spacing between consecutive response slots.
    #[serde(rename = "delta_t_us", with = "microseconds")]
    pub delta_t: Duration,
    /// Number of distinct response slots.
    pub n_hat_a: u32,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            delta_t_fix: Duration::from_millis(2),
            delta_t: Duration::from_micros(290),
            n_hat_a: 10,
        }
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut errors = Vec::new();
        if self.delta_t.is_zero() {
            errors.push("protocol.delta_t_us must be positive".to_string());
        }
        if self.n_hat_a == 0 {
            errors.push("protocol.n_hat_a must be at least 1".to_string());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    /// Zero-based slot of a 1-based anchor index.
    pub fn slot(&self, slot_index: u32) -> u32 {
        assert!(slot_index >= 1, "anchor slot indices start at 1");
        (slot_index - 1) % self.n_hat_a
    }
}

/// Per-event energies and durations of the node firmware.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyCostModel {
    #[serde(rename = "active_tag_energy_uj", with = "microjoules")]
    pub active_tag_energy: Energy,
    #[serde(rename = "active_tag_duration_us", with = "microseconds")]
    pub active_tag_duration: Duration,
    #[serde(rename = "passive_tag_energy_uj", with = "microjoules")]
    pub passive_tag_energy: Energy,
    #[serde(rename = "passive_tag_duration_us", with = "microseconds")]
    pub passive_tag_duration: Duration,
    #[serde(rename = "anchor_base_energy_uj", with = "microjoules")]
    pub anchor_base_energy: Energy,
    #[serde(rename = "anchor_slot_energy_uj", with = "microjoules")]
    pub anchor_slot_energy: Energy,
    #[serde(rename = "anchor_base_duration_us", with = "microseconds")]
    pub anchor_base_duration: Duration,
    #[serde(rename = "anchor_slot_duration_us", with = "microseconds")]
    pub anchor_slot_duration: Duration,
    #[serde(rename = "sleep_power_uw", with = "microwatts")]
    pub sleep_power: Power,
}

impl Default for EnergyCostModel {
    fn default() -> Self {
        Self {
            active_tag_energy: Energy::from_picojoules(3_220_000_000),
            active_tag_duration: Duration::from_micros(84_520),
            passive_tag_energy: Energy::from_picojoules(951_160_000),
            passive_tag_duration: Duration::from_micros(34_180),
            anchor_base_energy: Energy::from_picojoules(338_300_000),
            anchor_slot_energy: Energy::from_picojoules(15_280_000),
            anchor_base_duration: Duration::from_micros(30_550),
            anchor_slot_duration: Duration::from_micros(290),
            sleep_power: Power::from_picowatts(7_840_000),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TagRole {
    Active,
    Passive,
}

/// Delay between poll reception and response for the anchor with 1-based
/// index `slot_index`.
pub fn anchor_reply_delay(slot_index: u32, params: &ProtocolParams) -> Duration {
    params.delta_t_fix + params.delta_t * params.slot(slot_index)
}

/// Messages in one exchange with `n_anchors` responders.
pub fn message_count(n_anchors: usize) -> usize {
    n_anchors + 1
}

/// Energy and on-time of one anchor response.
pub fn anchor_event_cost(
    slot_index: u32,
    model: &EnergyCostModel,
    params: &ProtocolParams,
) -> (Energy, Duration) {
    let slot = params.slot(slot_index);
    (
        model.anchor_base_energy + model.anchor_slot_energy * u64::from(slot),
        model.anchor_base_duration + model.anchor_slot_duration * slot,
    )
}

pub fn tag_event_cost(role: TagRole, model: &EnergyCostModel) -> (Energy, Duration) {
    match role {
        TagRole::Active => (model.active_tag_energy, model.active_tag_duration),
        TagRole::Passive => (model.passive_tag_energy, model.passive_tag_duration),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reply_delay_examples() {
        let p = ProtocolParams::default();
        assert_eq!(anchor_reply_delay(1, &p), p.delta_t_fix);
        assert_eq!(anchor_reply_delay(11, &p), p.delta_t_fix);
        let p = ProtocolParams {
            delta_t_fix: Duration::from_millis(2),
            delta_t: Duration::from_millis(1),
            n_hat_a: 10,
        };
        assert_eq!(anchor_reply_delay(3, &p), Duration::from_millis(4));
    }

    #[test]
    fn message_counts() {
        assert_eq!(message_count(5), 6);
        assert_eq!(message_count(1), 2);
        assert_eq!(message_count(89), 90);
    }

    #[test]
    fn anchor_costs() {
        let m = EnergyCostModel::default();
        let p = ProtocolParams::default();
        assert_eq!(
            anchor_event_cost(1, &m, &p),
            (Energy::from_microjoules(338.30), Duration::from_micros(30_550))
        );
        assert_eq!(
            anchor_event_cost(5, &m, &p),
            (Energy::from_microjoules(399.42), Duration::from_micros(31_710))
        );
        assert_eq!(anchor_event_cost(11, &m, &p), anchor_event_cost(1, &m, &p));
    }

    #[test]
    fn tag_costs() {
        let m = EnergyCostModel::default();
        assert_eq!(
            tag_event_cost(TagRole::Active, &m),
            (Energy::from_microjoules(3220.0), Duration::from_micros(84_520))
        );
        assert_eq!(
            tag_event_cost(TagRole::Passive, &m),
            (Energy::from_microjoules(951.16), Duration::from_micros(34_180))
        );
        let rate = 1.0 / m.active_tag_duration.as_secs_f64();
        assert!((rate - 11.8).abs() < 0.05);
    }

    #[test]
    fn config_round_trip() {
        let m = EnergyCostModel::default();
        let text = toml::to_string(&m).unwrap();
        assert!(text.contains("anchor_base_energy_uj = 338.3"));
        let back: EnergyCostModel = toml::from_str(&text).unwrap();
        assert_eq!(back, m);
        let p: ProtocolParams = toml::from_str("n_hat_a = 8").unwrap();
        assert_eq!(p.n_hat_a, 8);
        assert_eq!(p.delta_t, Duration::from_micros(290));
    }
}
