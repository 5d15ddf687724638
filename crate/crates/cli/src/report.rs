use std::collections::BTreeMap;

use serde::Serialize;

use crate::config::{Axis, ScenarioConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridReport {
    pub axis: &'static str,
    pub start: f64,
    pub stop: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub n_samples: usize,
    pub seed: u64,
    pub batch_size: usize,
}

/// Summary written next to the CSV output as `<stem>.report.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub version: String,
    /// Parameters in internal units (rad/s, seconds).
    pub params: BTreeMap<String, f64>,
    pub grid: GridReport,
    pub mc: Option<McReport>,
    pub derived: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
}

impl RunReport {
    pub(crate) fn skeleton(c: &ScenarioConfig) -> Self {
        Self {
            scenario: c.scenario.name().to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            params: c.params.clone(),
            grid: GridReport {
                axis: match c.grid.axis {
                    Axis::Time => "time_s",
                    Axis::Detuning => "detuning_rad_s",
                },
                start: c.grid.start,
                stop: c.grid.stop,
                n_points: c.grid.n_points,
            },
            mc: c.mc.map(|m| McReport {
                n_samples: m.n_samples(),
                seed: m.seed(),
                batch_size: m.batch_size(),
            }),
            derived: BTreeMap::new(),
            notes: Vec::new(),
            outputs: Vec::new(),
            wall_time_s: 0.0,
        }
    }

    pub fn derived(&self, key: &str) -> Option<f64> {
        self.derived.get(key).copied()
    }
}
