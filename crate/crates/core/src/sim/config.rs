//! Simulation configuration, read from TOML.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::world::{two_rooms, RadioRange, Region, Wall, Waypoint};
use crate::energy::{BatteryModel, LuxPowerModel, BUNDLED_PROFILES};
use crate::protocol::{EnergyCostModel, ProtocolParams};
use crate::scheduler::AimdParams;
use crate::solvers::SolverConfig;
use crate::Position;

/// The config shipped with the crate: the two-hall floor plan, 20 randomly
/// placed tags and the `typical` light profile everywhere.
pub const BUNDLED_CONFIG: &str = include_str!("../../data/bundled.toml");

/// Prefix of a constant-power profile label, followed by microwatts.
pub const CONSTANT_PROFILE_PREFIX: &str = "const:";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub days: u32,
    /// State of charge of every battery at minute 0.
    pub initial_soc: f64,
    pub world: WorldConfig,
    pub protocol: ProtocolParams,
    pub costs: EnergyCostModel,
    pub battery: BatteryModel,
    pub lux_model: LuxPowerModel,
    pub scheduler: AimdParams,
    pub solver: SolverConfig,
    pub measurements: MeasurementConfig,
    pub harvest: HarvestConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            days: 365,
            initial_soc: 0.0,
            world: WorldConfig::default(),
            protocol: ProtocolParams::default(),
            costs: EnergyCostModel::default(),
            battery: BatteryModel::default(),
            lux_model: LuxPowerModel::default(),
            scheduler: AimdParams::default(),
            solver: SolverConfig::default(),
            measurements: MeasurementConfig::default(),
            harvest: HarvestConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// Only the anchors and walls listed in the config.
    Empty,
    /// The bundled two-hall plan, plus anything listed in the config.
    TwoRooms,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub layout: Layout,
    pub los_range_m: f64,
    pub nlos_range_m: f64,
    pub min_anchor_responses: usize,
    /// Harvest profile of layout-generated anchors.
    pub anchor_profile: String,
    pub anchors: Vec<AnchorSpec>,
    pub walls: Vec<Wall>,
    pub tags: Vec<TagSpec>,
    pub random_tags: RandomTags,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            layout: Layout::TwoRooms,
            los_range_m: 20.0,
            nlos_range_m: 5.0,
            min_anchor_responses: 5,
            anchor_profile: "typical".into(),
            anchors: Vec::new(),
            walls: Vec::new(),
            tags: Vec::new(),
            random_tags: RandomTags::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorSpec {
    pub id: String,
    pub position: [f64; 3],
    /// 1-based response slot index.
    pub slot_index: u32,
    #[serde(default = "default_profile")]
    pub profile: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TagSpec {
    pub id: String,
    #[serde(default)]
    pub position: Option<[f64; 3]>,
    #[serde(default)]
    pub waypoints: Vec<Waypoint>,
    #[serde(default = "default_profile")]
    pub profile: String,
}

fn default_profile() -> String {
    "typical".into()
}

/// Tags placed uniformly at random over the floor area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomTags {
    pub count: usize,
    pub height_m: f64,
    pub profile: String,
    /// Placement area; defaults to the layout's floor, or the anchors'
    /// bounding box for an empty layout.
    pub regions: Vec<Region>,
}

impl Default for RandomTags {
    fn default() -> Self {
        Self {
            count: 20,
            height_m: 1.0,
            profile: default_profile(),
            regions: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasurementConfig {
    pub noise_sigma_m: f64,
    /// Run the position solvers on every exchange and record their errors.
    pub with_solvers: bool,
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        Self {
            noise_sigma_m: 0.10,
            with_solvers: false,
        }
    }
}

/// Additional harvest profiles from trace files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarvestConfig {
    pub traces: Vec<TraceSource>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSource {
    pub label: String,
    /// Relative paths are resolved against the config file's directory.
    pub path: PathBuf,
}

impl SimConfig {
    pub fn bundled() -> Self {
        Self::from_toml(BUNDLED_CONFIG).expect("bundled config is valid")
    }

    /// Parses and validates.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: SimConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate().map_err(ConfigError::Invalid)?;
        Ok(config)
    }

    /// Reads and validates a config file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let config = Self::read(path)?;
        config.validate().map_err(ConfigError::Invalid)?;
        Ok(config)
    }

    /// Reads a config file without validating it, resolving trace paths
    /// relative to the file.
    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut config: SimConfig =
            toml::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        if let Some(dir) = path.parent() {
            for t in &mut config.harvest.traces {
                if t.path.is_relative() {
                    t.path = dir.join(&t.path);
                }
            }
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn radio_range(&self) -> RadioRange {
        RadioRange {
            los_range_m: self.world.los_range_m,
            nlos_range_m: self.world.nlos_range_m,
        }
    }

    /// Checks every field and reports all violations at once.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut errors = Vec::new();
        let w = &self.world;
        if self.days == 0 {
            errors.push("days must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.initial_soc) {
            errors.push(format!("initial_soc must be in [0, 1], got {}", self.initial_soc));
        }
        if !(w.los_range_m.is_finite() && w.los_range_m > 0.0) {
            errors.push("world.los_range_m must be positive".into());
        }
        if !(w.nlos_range_m.is_finite() && w.nlos_range_m > 0.0) {
            errors.push("world.nlos_range_m must be positive".into());
        }
        if w.min_anchor_responses < 4 {
            errors.push("world.min_anchor_responses must be at least 4".into());
        }
        let labels = self.profile_labels();
        let check_profile = |field: String, label: &str, errors: &mut Vec<String>| {
            if !labels.contains(label) && parse_constant_profile(label).is_none() {
                errors.push(format!("{field}: unknown harvest profile {label:?}"));
            }
        };
        let layout_anchors = match w.layout {
            Layout::TwoRooms => {
                check_profile("world.anchor_profile".into(), &w.anchor_profile, &mut errors);
                two_rooms::anchors().len()
            }
            Layout::Empty => 0,
        };
        if layout_anchors + w.anchors.len() < 4 {
            errors.push("world needs at least 4 anchors".into());
        }
        let mut ids = BTreeSet::new();
        for i in 0..layout_anchors {
            ids.insert(layout_anchor_id(i));
        }
        for (i, a) in w.anchors.iter().enumerate() {
            if !ids.insert(a.id.clone()) {
                errors.push(format!("world.anchors[{i}].id {:?} is not unique", a.id));
            }
            if !a.position.iter().all(|c| c.is_finite()) {
                errors.push(format!("world.anchors[{i}].position must be finite"));
            }
            if a.slot_index == 0 {
                errors.push(format!("world.anchors[{i}].slot_index must be at least 1"));
            }
            check_profile(format!("world.anchors[{i}].profile"), &a.profile, &mut errors);
        }
        for (i, wall) in w.walls.iter().enumerate() {
            if !wall.from.iter().chain(&wall.to).all(|c| c.is_finite()) {
                errors.push(format!("world.walls[{i}] must be finite"));
            }
        }
        let mut tag_ids = BTreeSet::new();
        for (i, t) in w.tags.iter().enumerate() {
            if !tag_ids.insert(t.id.clone()) || ids.contains(&t.id) {
                errors.push(format!("world.tags[{i}].id {:?} is not unique", t.id));
            }
            match (t.position, t.waypoints.is_empty()) {
                (Some(p), true) => {
                    if !p.iter().all(|c| c.is_finite()) {
                        errors.push(format!("world.tags[{i}].position must be finite"));
                    }
                }
                (None, false) => {
                    if !t.waypoints.windows(2).all(|w| w[0].minute < w[1].minute) {
                        errors.push(format!(
                            "world.tags[{i}].waypoints must have increasing minutes"
                        ));
                    }
                    if !t.waypoints.iter().all(|w| w.position.iter().all(|c| c.is_finite())) {
                        errors.push(format!("world.tags[{i}].waypoints must be finite"));
                    }
                }
                _ => errors.push(format!(
                    "world.tags[{i}] needs exactly one of position or waypoints"
                )),
            }
            check_profile(format!("world.tags[{i}].profile"), &t.profile, &mut errors);
        }
        let rt = &w.random_tags;
        if rt.count > 0 {
            check_profile("world.random_tags.profile".into(), &rt.profile, &mut errors);
            if !rt.height_m.is_finite() {
                errors.push("world.random_tags.height_m must be finite".into());
            }
            for (i, r) in rt.regions.iter().enumerate() {
                if !(r.area() > 0.0 && r.area().is_finite()) {
                    errors.push(format!("world.random_tags.regions[{i}] must have positive area"));
                }
            }
            if rt.regions.is_empty() && w.layout == Layout::Empty && w.anchors.is_empty() {
                errors.push("world.random_tags needs regions when there are no anchors".into());
            }
        }
        if w.tags.len() + rt.count == 0 {
            errors.push("world needs at least one tag".into());
        }
        if let Err(e) = self.protocol.validate() {
            errors.extend(e);
        }
        errors.extend(self.battery.validate());
        errors.extend(self.lux_model.validate());
        errors.extend(self.scheduler.validate());
        if let Err(e) = self.solver.validate() {
            errors.push(format!("solver: {e}"));
        }
        if !(self.measurements.noise_sigma_m.is_finite() && self.measurements.noise_sigma_m >= 0.0) {
            errors.push("measurements.noise_sigma_m must be non-negative".into());
        }
        let mut trace_labels = BTreeSet::new();
        for (i, t) in self.harvest.traces.iter().enumerate() {
            if !trace_labels.insert(t.label.as_str())
                || BUNDLED_PROFILES.iter().any(|(n, _)| *n == t.label)
            {
                errors.push(format!("harvest.traces[{i}].label {:?} is not unique", t.label));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    fn profile_labels(&self) -> BTreeSet<&str> {
        BUNDLED_PROFILES
            .iter()
            .map(|(n, _)| *n)
            .chain(self.harvest.traces.iter().map(|t| t.label.as_str()))
            .collect()
    }

    /// Placement regions for random tags.
    pub fn tag_regions(&self) -> Vec<Region> {
        let rt = &self.world.random_tags;
        if !rt.regions.is_empty() {
            return rt.regions.clone();
        }
        match self.world.layout {
            Layout::TwoRooms => two_rooms::regions(),
            Layout::Empty => {
                let pts: Vec<Position> = self.world.anchors.iter().map(|a| a.position.into()).collect();
                let min_x = pts.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
                let min_y = pts.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
                let max_x = pts.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
                let max_y = pts.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
                vec![Region::new(min_x, min_y, max_x, max_y)]
            }
        }
    }
}

pub(crate) fn layout_anchor_id(i: usize) -> String {
    format!("A{:02}", i + 1)
}

/// Microwatts of a `const:<uW>` profile label.
pub fn parse_constant_profile(label: &str) -> Option<f64> {
    label
        .strip_prefix(CONSTANT_PROFILE_PREFIX)
        .and_then(|v| v.trim().parse::<f64>().ok())
        .filter(|v| v.is_finite() && *v >= 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_config_is_valid() {
        let c = SimConfig::bundled();
        assert_eq!(c.world.layout, Layout::TwoRooms);
        assert_eq!(c.world.random_tags.count, 20);
        assert_eq!(c.scheduler.k_max, 6);
    }

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(SimConfig::from_toml("").unwrap(), SimConfig::default());
    }

    #[test]
    fn every_violation_is_reported() {
        let text = r#"
            days = 0
            initial_soc = 2.0
            [world]
            los_range_m = -1.0
            min_anchor_responses = 3
            [scheduler]
            beta1 = 1.0
            beta2 = 0.0
            gamma = 0.0
        "#;
        match SimConfig::from_toml(text) {
            Err(ConfigError::Invalid(errors)) => {
                let joined = errors.join("\n");
                for field in ["days", "initial_soc", "los_range_m", "min_anchor_responses", "beta1", "gamma"] {
                    assert!(joined.contains(field), "{field} missing from {joined}");
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(matches!(
            SimConfig::from_toml("sed = 3"),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn constant_profiles() {
        assert_eq!(parse_constant_profile("const:3.59"), Some(3.59));
        assert_eq!(parse_constant_profile("const:-1"), None);
        assert_eq!(parse_constant_profile("typical"), None);
        let c = SimConfig::from_toml("[world.random_tags]\nprofile = \"const:3.59\"").unwrap();
        assert_eq!(c.world.random_tags.profile, "const:3.59");
        assert!(SimConfig::from_toml("[world.random_tags]\nprofile = \"moon\"").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let c = SimConfig::bundled();
        assert_eq!(SimConfig::from_toml(&c.to_toml()).unwrap(), c);
    }
}
