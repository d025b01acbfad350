//! TOML run configuration.
//!
//! ```toml
//! seed = 42
//!
//! [driver]
//! kind = "model"
//! preset = "driver1"
//! params = { reaction_delay = 1.2 }
//!
//! [[segment]]
//! label = "ctg_coached"
//! objective = { kind = "constant_time_gap", tau_star = 2.25 }
//! feedback = "coached"
//! duration = 360
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::codec::{load_catalog, Catalog};
use crate::director::{Schedule, SegmentConfig};
use crate::driver::{self, DriverParams};
use crate::fusion::{DEFAULT_TOLERANCE, DEFAULT_WINDOW};
use crate::sim::{CanPathConfig, DriverKind, LeadProfile, Sensing, SimConfig, DEFAULT_DT};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    seed: Option<u64>,
    dt: Option<f64>,
    duration: Option<f64>,
    ghost_speed: Option<f64>,
    #[serde(default)]
    tolerate_low_speed: bool,
    #[serde(default)]
    initial: Initial,
    lead: Option<LeadProfile>,
    #[serde(default)]
    driver: DriverSection,
    #[serde(default)]
    sensing: SensingSection,
    #[serde(default)]
    segment: Vec<SegmentConfig>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Initial {
    speed: Option<f64>,
    gap: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
enum DriverKindName {
    #[default]
    Model,
    Acc,
    Human,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DriverSection {
    #[serde(default)]
    kind: DriverKindName,
    preset: Option<String>,
    params: Option<toml::Table>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SensingKindName {
    #[default]
    Truth,
    Can,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SensingSection {
    #[serde(default)]
    kind: SensingKindName,
    catalog: Option<PathBuf>,
    dist_noise_std: Option<f64>,
    vel_noise_std: Option<f64>,
    distractors: Option<u8>,
    tolerance: Option<f64>,
    window: Option<f64>,
}

/// Preset (or defaults) with the overrides in `table` applied on top.
fn driver_params(section: &DriverSection, problems: &mut Vec<String>) -> DriverParams {
    let base = match &section.preset {
        Some(name) => match driver::preset(name) {
            Ok(p) => p,
            Err(e) => {
                problems.push(e.to_string());
                DriverParams::default()
            }
        },
        None => DriverParams::default(),
    };
    let Some(overrides) = &section.params else {
        return base;
    };
    let mut table = match toml::Table::try_from(&base) {
        Ok(t) => t,
        Err(e) => {
            problems.push(format!("driver params: {e}"));
            return base;
        }
    };
    for (k, v) in overrides {
        if !table.contains_key(k) {
            problems.push(format!("unknown driver parameter {k:?}"));
            continue;
        }
        // integers are accepted where floats are expected
        let v = match (&table[k], v) {
            (toml::Value::Float(_), toml::Value::Integer(i)) => toml::Value::Float(*i as f64),
            _ => v.clone(),
        };
        table.insert(k.clone(), v);
    }
    match table.try_into::<DriverParams>() {
        Ok(p) => p,
        Err(e) => {
            problems.push(format!("driver params: {e}"));
            base
        }
    }
}

/// Parse a configuration document. Relative catalog paths resolve against
/// `base_dir`.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<SimConfig, ConfigError> {
    let doc: Document = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let mut problems = Vec::new();

    if doc.segment.is_empty() {
        problems.push("no [[segment]] entries".to_owned());
    }
    let schedule = match Schedule::build(&doc.segment) {
        Ok(s) => Some(s),
        Err(e) => {
            if !doc.segment.is_empty() {
                problems.push(e.to_string());
            }
            None
        }
    };

    let driver = match doc.driver.kind {
        DriverKindName::Model => DriverKind::Model(driver_params(&doc.driver, &mut problems)),
        DriverKindName::Acc => DriverKind::Acc,
        DriverKindName::Human => DriverKind::HumanInput,
    };
    if !matches!(doc.driver.kind, DriverKindName::Model) && (doc.driver.preset.is_some() || doc.driver.params.is_some()) {
        problems.push("driver preset/params only apply to kind = \"model\"".into());
    }

    let sensing = match doc.sensing.kind {
        SensingKindName::Truth => Sensing::Truth,
        SensingKindName::Can => {
            let s = &doc.sensing;
            let catalog = match &s.catalog {
                None => Catalog::builtin(),
                Some(p) => {
                    let path = base_dir.join(p);
                    match std::fs::read_to_string(&path) {
                        Ok(text) => load_catalog(&text).unwrap_or_else(|e| {
                            problems.push(format!("catalog {}: {e}", path.display()));
                            Catalog::builtin()
                        }),
                        Err(e) => {
                            problems.push(format!("catalog {}: {e}", path.display()));
                            Catalog::builtin()
                        }
                    }
                }
            };
            let defaults = CanPathConfig::default();
            Sensing::CanPath(CanPathConfig {
                catalog,
                dist_noise_std: s.dist_noise_std.unwrap_or(defaults.dist_noise_std),
                vel_noise_std: s.vel_noise_std.unwrap_or(defaults.vel_noise_std),
                distractors: s.distractors.unwrap_or(defaults.distractors),
                tolerance: s.tolerance.unwrap_or(DEFAULT_TOLERANCE),
                window: s.window.unwrap_or(DEFAULT_WINDOW),
            })
        }
    };

    let Some(schedule) = schedule else {
        return Err(ConfigError::Invalid(problems));
    };
    let mut cfg = SimConfig::new(schedule, driver);
    cfg.dt = doc.dt.unwrap_or(DEFAULT_DT);
    if let Some(d) = doc.duration {
        cfg.duration = d;
    }
    if let Some(v) = doc.ghost_speed {
        cfg.ghost_speed = v;
    }
    if let Some(v) = doc.initial.speed {
        cfg.initial_speed = v;
    }
    if let Some(v) = doc.initial.gap {
        cfg.initial_gap = v;
    }
    if let Some(lead) = doc.lead {
        cfg.lead_profile = lead;
    }
    if let Some(seed) = doc.seed {
        cfg.seed = seed;
    }
    cfg.sensing = sensing;
    cfg.tolerate_low_speed = doc.tolerate_low_speed;

    if let Err(crate::sim::SimError::Config(more)) = cfg.validate() {
        problems.extend(more);
    }
    if problems.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Invalid(problems))
    }
}

pub fn load_config(path: &Path) -> Result<SimConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_config(&text, path.parent().unwrap_or(Path::new(".")))
}

/// The full study schedule shipped with the crate.
pub const STUDY_SCHEDULE: &str = include_str!("../configs/study_schedule.toml");
