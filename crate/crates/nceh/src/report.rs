//! Machine-readable verification report.

use crate::config::RunConfig;
use serde::Serialize;

pub const REPORT_VERSION: &str = "1";

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub id: String,
    pub anchor: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(id: &str, anchor: &str, residual: f64, tolerance: f64) -> Self {
        Check {
            id: id.to_string(),
            anchor: anchor.to_string(),
            residual,
            tolerance,
            pass: residual.is_finite() && residual <= tolerance,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub version: &'static str,
    pub timestamp: String,
    pub run_config: RunConfig,
    pub checks: Vec<Check>,
    pub summary: Summary,
}

impl Report {
    pub fn new(config: RunConfig, checks: Vec<Check>) -> Self {
        let passed = checks.iter().filter(|c| c.pass).count();
        let summary = Summary { total: checks.len(), passed, failed: checks.len() - passed };
        Report {
            version: REPORT_VERSION,
            timestamp: now_utc(),
            run_config: config,
            checks,
            summary,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// JSON with the timestamp blanked; two runs with identical configuration
    /// agree byte-for-byte on this form.
    pub fn to_json_without_timestamp(&self) -> String {
        let mut clone = self.clone();
        clone.timestamp = String::new();
        let mut s = serde_json::to_string_pretty(&clone).expect("report serializes");
        s.push('\n');
        s
    }
}

fn now_utc() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("unix:{secs}")
}
