//! Battery store with self-discharge, the illuminance-to-power harvest model,
//! bundled synthetic light profiles and trace ingestion.

mod battery;
mod harvest;
mod trace;
mod units;

pub use battery::{BatteryState, EnergyLedger};
pub use harvest::{lux_to_power, HarvestProfile, LuxPowerModel, SyntheticDay, BUNDLED_PROFILES};
pub use trace::{ingest_trace, IngestedTrace, TraceError};
pub use units::{Energy, Power};

use serde::{Deserialize, Serialize};

/// Battery and leakage parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatteryModel {
    pub capacity_mah: f64,
    pub voltage: f64,
    /// Leakage current at full charge.
    pub leak_full_ua: f64,
    /// Leakage current at and below `leak_knee_soc`.
    pub leak_knee_ua: f64,
    pub leak_knee_soc: f64,
}

impl Default for BatteryModel {
    fn default() -> Self {
        Self {
            capacity_mah: 35.0,
            voltage: 3.7,
            leak_full_ua: 4.0,
            leak_knee_ua: 1.0,
            leak_knee_soc: 0.30,
        }
    }
}

impl BatteryModel {
    /// 35 mAh at 3.7 V is 466.2 J.
    pub fn capacity(&self) -> Energy {
        Energy::from_joules(self.capacity_mah * 3.6 * self.voltage)
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if !(self.capacity_mah.is_finite() && self.capacity_mah > 0.0) {
            errors.push("battery.capacity_mah must be positive".into());
        }
        if !(self.voltage.is_finite() && self.voltage > 0.0) {
            errors.push("battery.voltage must be positive".into());
        }
        if !(self.leak_full_ua.is_finite() && self.leak_full_ua >= 0.0) {
            errors.push("battery.leak_full_ua must be non-negative".into());
        }
        if !(self.leak_knee_ua.is_finite() && self.leak_knee_ua >= 0.0) {
            errors.push("battery.leak_knee_ua must be non-negative".into());
        }
        if !(self.leak_knee_soc >= 0.0 && self.leak_knee_soc < 1.0) {
            errors.push("battery.leak_knee_soc must be in [0, 1)".into());
        }
        errors
    }

    /// Leakage current in amperes: linear between the knee and full charge,
    /// held at the knee value below it.
    pub fn self_discharge_current(&self, soc: f64) -> f64 {
        let soc = soc.clamp(0.0, 1.0);
        let ua = if soc <= self.leak_knee_soc {
            self.leak_knee_ua
        } else {
            let t = (soc - self.leak_knee_soc) / (1.0 - self.leak_knee_soc);
            self.leak_knee_ua + t * (self.leak_full_ua - self.leak_knee_ua)
        };
        ua * 1e-6
    }

    /// Energy lost to self-discharge over one minute at the given charge.
    pub fn leak_per_minute(&self, soc: f64) -> Energy {
        Energy::from_joules(self.self_discharge_current(soc) * self.voltage * 60.0)
    }
}

/// Leakage current in amperes for the default battery.
pub fn self_discharge_current(soc: f64) -> f64 {
    BatteryModel::default().self_discharge_current(soc)
}
