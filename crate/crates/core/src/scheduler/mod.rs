//! Hourly rate control for active localizations.
//!
//! Each hour a tag scores its battery trend with a metric that rewards
//! charging, penalises a low state of charge, and is `+inf` once the charge
//! reaches `gamma`. The score selects one of three states: halve the hourly
//! rate `k`, hold it, or add one.

mod schedule;
pub mod tune;

pub use schedule::{schedule_hour, schedule_hour_with, MINUTES_PER_HOUR};
pub use tune::{tune, write_rows, GridPoint, SearchGrid, TuneError, TuneOutcome, TuneRow, TUNE_SOC};

use serde::{Deserialize, Serialize};

/// Floor applied to the state of charge before the low-battery penalty
/// divides by it.
pub const MIN_SOC: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Aimd,
    BoundedAimd,
    ConstantRate,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Aimd => "aimd",
            Variant::BoundedAimd => "bounded_aimd",
            Variant::ConstantRate => "constant_rate",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "aimd" => Ok(Variant::Aimd),
            "bounded_aimd" | "bounded" => Ok(Variant::BoundedAimd),
            "constant_rate" | "constant" => Ok(Variant::ConstantRate),
            other => Err(format!(
                "unknown scheduler {other:?}; expected aimd, bounded_aimd or constant_rate"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AimdParams {
    pub beta1: f64,
    pub beta2: f64,
    pub gamma: f64,
    /// Rate ceiling of the bounded variant.
    pub k_max: u32,
    pub variant: Variant,
    pub constant_rate_k: u32,
    /// Weight `B` of the charge-trend term. `None` uses the battery capacity
    /// in joules.
    pub metric_scale: Option<f64>,
}

impl Default for AimdParams {
    fn default() -> Self {
        Self {
            beta1: -99.0,
            beta2: -49.0,
            gamma: 0.9,
            k_max: 6,
            variant: Variant::Aimd,
            constant_rate_k: 1,
            metric_scale: None,
        }
    }
}

impl AimdParams {
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if self.beta1.is_nan() || self.beta2.is_nan() || self.beta1 > self.beta2 {
            errors.push(format!(
                "scheduler.beta1 ({}) must not exceed scheduler.beta2 ({})",
                self.beta1, self.beta2
            ));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            errors.push(format!("scheduler.gamma must be in (0, 1], got {}", self.gamma));
        }
        if self.k_max == 0 {
            errors.push("scheduler.k_max must be at least 1".into());
        }
        if self.constant_rate_k > MINUTES_PER_HOUR {
            errors.push(format!(
                "scheduler.constant_rate_k must be at most {MINUTES_PER_HOUR}"
            ));
        }
        if let Some(b) = self.metric_scale {
            if !(b.is_finite() && b >= 0.0) {
                errors.push("scheduler.metric_scale must be non-negative".into());
            }
        }
        errors
    }

    /// Highest rate the increase state can reach.
    pub fn ceiling(&self) -> u32 {
        match self.variant {
            Variant::BoundedAimd => self.k_max.min(MINUTES_PER_HOUR),
            _ => MINUTES_PER_HOUR,
        }
    }
}

/// Battery score for one hour:
/// `B * (soc_now - soc_prev) - (1 / soc_now - 1)`, or `+inf` once
/// `soc_now >= gamma`. `soc_now` is floored at [`MIN_SOC`].
pub fn metric(soc_now: f64, soc_prev: f64, scale_b: f64, gamma: f64) -> f64 {
    if soc_now >= gamma {
        return f64::INFINITY;
    }
    let soc = soc_now.max(MIN_SOC);
    scale_b * (soc_now - soc_prev) - (1.0 / soc - 1.0)
}

/// Caps the metric at the midpoint of the hold band once `k` is at its
/// ceiling, so a bounded tag holds instead of increasing.
pub fn metric_bounded(m: f64, k: u32, params: &AimdParams) -> f64 {
    if k < params.k_max {
        m
    } else {
        m.min((params.beta1 + params.beta2) / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FsmState {
    Halve,
    Hold,
    Increase,
}

impl FsmState {
    /// State selected by a metric value. Ties at either threshold hold.
    pub fn select(m: f64, beta1: f64, beta2: f64) -> FsmState {
        if m < beta1 {
            FsmState::Halve
        } else if m > beta2 {
            FsmState::Increase
        } else {
            FsmState::Hold
        }
    }
}

/// Per-tag controller state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AimdController {
    pub k: u32,
    pub state: FsmState,
    pub last_soc: f64,
    pub params: AimdParams,
}

impl AimdController {
    pub fn new(params: AimdParams, initial_soc: f64) -> Self {
        let k = match params.variant {
            Variant::ConstantRate => params.constant_rate_k,
            _ => 0,
        };
        Self {
            k,
            state: FsmState::Hold,
            last_soc: initial_soc,
            params,
        }
    }

    /// The hourly update: scores the charge change since the last update and
    /// steps the state machine. `capacity_j` is used as `B` unless the
    /// parameters override it.
    pub fn update(&mut self, soc_now: f64, capacity_j: f64) -> FsmState {
        if self.params.variant == Variant::ConstantRate {
            self.last_soc = soc_now;
            self.k = self.params.constant_rate_k;
            return self.state;
        }
        let b = self.params.metric_scale.unwrap_or(capacity_j);
        let mut m = metric(soc_now, self.last_soc, b, self.params.gamma);
        if self.params.variant == Variant::BoundedAimd {
            m = metric_bounded(m, self.k, &self.params);
        }
        self.last_soc = soc_now;
        *self = fsm_step(*self, m);
        self.state
    }
}

/// One transition: select the state from `m`, then apply it to `k`.
pub fn fsm_step(controller: AimdController, m: f64) -> AimdController {
    let p = &controller.params;
    let state = FsmState::select(m, p.beta1, p.beta2);
    let k = match state {
        FsmState::Halve => controller.k / 2,
        FsmState::Hold => controller.k,
        FsmState::Increase => (controller.k + 1).min(p.ceiling()),
    };
    AimdController {
        k,
        state,
        ..controller
    }
}
