use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub const MINUTES_PER_DAY: usize = 1440;

/// Harvested power as a function of illuminance.
///
/// `log10(P / 1 W)` is modelled as three polynomials in `log10(lux)`, blended
/// by logistic weights centred on the two region boundaries. The output is
/// zero below `min_lux`, and inputs above `max_lux` are clamped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LuxPowerModel {
    /// Coefficients in ascending powers, one set per region (low, mid, high).
    pub segments: [Vec<f64>; 3],
    /// Region boundaries in lux.
    pub boundaries_lux: [f64; 2],
    /// Logistic blend width, in decades of illuminance.
    pub blend_width: f64,
    pub min_lux: f64,
    pub max_lux: f64,
}

impl Default for LuxPowerModel {
    /// Fitted to the indoor harvester's reference points (about 1 uW at
    /// 15 lux, 10 uW at 100 lux, 170 uW at 1500 lux, 1.1 mW at 10 klux).
    fn default() -> Self {
        Self {
            segments: [
                vec![-7.4, 1.19038],
                vec![-7.62446, 1.47974, -0.0837539],
                vec![-6.89566, 0.984264],
            ],
            boundaries_lux: [15.0, 1500.0],
            blend_width: 0.1,
            min_lux: 0.2,
            max_lux: 10_000.0,
        }
    }
}

impl LuxPowerModel {
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        for (i, seg) in self.segments.iter().enumerate() {
            if seg.is_empty() || !seg.iter().all(|c| c.is_finite()) {
                errors.push(format!("lux_model.segments[{i}] must be non-empty and finite"));
            }
        }
        let [b1, b2] = self.boundaries_lux;
        if !(b1 > 0.0 && b1 < b2 && b2.is_finite()) {
            errors.push("lux_model.boundaries_lux must be increasing and positive".into());
        }
        if !(self.blend_width.is_finite() && self.blend_width > 0.0) {
            errors.push("lux_model.blend_width must be positive".into());
        }
        if !(self.min_lux > 0.0 && self.min_lux < self.max_lux && self.max_lux.is_finite()) {
            errors.push("lux_model requires 0 < min_lux < max_lux".into());
        }
        errors
    }

    pub fn power(&self, lux: f64) -> f64 {
        if !(lux >= self.min_lux) {
            return 0.0;
        }
        let x = lux.min(self.max_lux).log10();
        let w1 = logistic((x - self.boundaries_lux[0].log10()) / self.blend_width);
        let w2 = logistic((x - self.boundaries_lux[1].log10()) / self.blend_width);
        let [low, mid, high] = &self.segments;
        let upper = (1.0 - w2) * horner(mid, x) + w2 * horner(high, x);
        let log_p = (1.0 - w1) * horner(low, x) + w1 * upper;
        10f64.powf(log_p)
    }
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Harvested power in watts for an illuminance in lux.
pub fn lux_to_power(lux: f64, model: &LuxPowerModel) -> f64 {
    model.power(lux)
}

/// Harvestable power at one-minute resolution.
///
/// Lookups past the end wrap around, so a one-day profile repeats daily.
#[derive(Debug, Clone, PartialEq)]
pub struct HarvestProfile {
    pub label: String,
    /// Watts, one sample per minute.
    pub samples: Vec<f64>,
}

impl HarvestProfile {
    pub fn new(label: impl Into<String>, samples: Vec<f64>) -> Result<Self, String> {
        let label = label.into();
        if samples.is_empty() {
            return Err(format!("harvest profile '{label}' has no samples"));
        }
        if let Some(i) = samples.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(format!(
                "harvest profile '{label}' has an invalid sample {} at minute {i}",
                samples[i]
            ));
        }
        Ok(Self { label, samples })
    }

    /// One day at a constant power.
    pub fn constant(label: impl Into<String>, watts: f64) -> Result<Self, String> {
        Self::new(label, vec![watts; MINUTES_PER_DAY])
    }

    /// A bundled synthetic profile by name (`dim`, `typical`, `bright`).
    pub fn bundled(name: &str, model: &LuxPowerModel) -> Option<Self> {
        BUNDLED_PROFILES
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(n, day)| day.profile(n, model))
    }

    pub fn power_at(&self, minute: u64) -> f64 {
        self.samples[(minute % self.samples.len() as u64) as usize]
    }

    pub fn mean_power(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Average harvested energy per day in joules.
    pub fn daily_energy(&self) -> f64 {
        self.mean_power() * 86_400.0
    }
}

/// A smoothed day/night light pattern: `lux` between `on_minute` and
/// `off_minute` with raised-cosine ramps of `ramp_minutes` at both ends,
/// dark otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDay {
    pub lux: f64,
    pub on_minute: u32,
    pub off_minute: u32,
    pub ramp_minutes: u32,
}

impl SyntheticDay {
    pub fn lux_at(&self, minute_of_day: usize) -> f64 {
        let t = minute_of_day as f64 + 0.5;
        let ramp = f64::from(self.ramp_minutes.max(1));
        let rise = ((t - f64::from(self.on_minute)) / ramp).clamp(0.0, 1.0);
        let fall = ((f64::from(self.off_minute) - t) / ramp).clamp(0.0, 1.0);
        let w = 0.5 * (1.0 - (PI * rise).cos()) * 0.5 * (1.0 - (PI * fall).cos());
        self.lux * w
    }

    pub fn profile(&self, label: &str, model: &LuxPowerModel) -> HarvestProfile {
        HarvestProfile {
            label: label.to_string(),
            samples: (0..MINUTES_PER_DAY)
                .map(|m| model.power(self.lux_at(m)))
                .collect(),
        }
    }
}

/// Bundled light conditions. With the default lux model they harvest about
/// 0.31 J, 1.81 J and 18.51 J per day.
pub const BUNDLED_PROFILES: [(&str, SyntheticDay); 3] = [
    (
        "dim",
        SyntheticDay {
            lux: 107.0,
            on_minute: 8 * 60,
            off_minute: 17 * 60,
            ramp_minutes: 60,
        },
    ),
    (
        "typical",
        SyntheticDay {
            lux: 463.0,
            on_minute: 7 * 60 + 30,
            off_minute: 18 * 60,
            ramp_minutes: 60,
        },
    ),
    (
        "bright",
        SyntheticDay {
            lux: 3541.0,
            on_minute: 6 * 60,
            off_minute: 20 * 60,
            ramp_minutes: 60,
        },
    ),
];
