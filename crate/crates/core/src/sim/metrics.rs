use serde::{Deserialize, Serialize};

use crate::fsm::Mode;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeHistogram {
    pub normal: u64,
    pub warning: u64,
    pub failure: u64,
}

impl ModeHistogram {
    pub fn add(&mut self, mode: Mode) {
        match mode {
            Mode::Normal => self.normal += 1,
            Mode::Warning => self.warning += 1,
            Mode::Failure => self.failure += 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub arrivals: u64,
    pub admitted: u64,
    pub blocked: u64,
    pub completed: u64,
    pub dropped: u64,
    pub still_active: u64,
    pub negotiations: u64,
    pub grants: u64,
    pub refusals: u64,
    pub handovers: u64,
    pub failed_handovers: u64,
    pub replans: u64,
    pub interference_steps: u64,
    pub mode_histogram: ModeHistogram,
    pub empirical_blocking: f64,
    pub empirical_noncompletion: f64,
}

impl Metrics {
    pub fn refresh_rates(&mut self) {
        self.empirical_blocking = ratio(self.blocked, self.arrivals);
        self.empirical_noncompletion = ratio(self.dropped, self.admitted);
    }

    /// Session and negotiation bookkeeping identities.
    pub fn check_conservation(&self) -> Result<(), String> {
        if self.admitted + self.blocked != self.arrivals {
            return Err(format!(
                "admitted {} + blocked {} != arrivals {}",
                self.admitted, self.blocked, self.arrivals
            ));
        }
        if self.completed + self.dropped + self.still_active != self.admitted {
            return Err(format!(
                "completed {} + dropped {} + active {} != admitted {}",
                self.completed, self.dropped, self.still_active, self.admitted
            ));
        }
        if self.grants + self.refusals != self.negotiations {
            return Err(format!(
                "grants {} + refusals {} != negotiations {}",
                self.grants, self.refusals, self.negotiations
            ));
        }
        Ok(())
    }

    /// Every numeric field, flattened, for aggregation across replications.
    pub fn fields(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("arrivals", self.arrivals as f64),
            ("admitted", self.admitted as f64),
            ("blocked", self.blocked as f64),
            ("completed", self.completed as f64),
            ("dropped", self.dropped as f64),
            ("still_active", self.still_active as f64),
            ("negotiations", self.negotiations as f64),
            ("grants", self.grants as f64),
            ("refusals", self.refusals as f64),
            ("handovers", self.handovers as f64),
            ("failed_handovers", self.failed_handovers as f64),
            ("replans", self.replans as f64),
            ("interference_steps", self.interference_steps as f64),
            ("mode_normal", self.mode_histogram.normal as f64),
            ("mode_warning", self.mode_histogram.warning as f64),
            ("mode_failure", self.mode_histogram.failure as f64),
            ("empirical_blocking", self.empirical_blocking),
            ("empirical_noncompletion", self.empirical_noncompletion),
        ]
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Mean and sample standard deviation of each metric over replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSummary {
    pub mean: serde_json::Map<String, serde_json::Value>,
    pub stddev: serde_json::Map<String, serde_json::Value>,
}

pub fn summarize(runs: &[Metrics]) -> MetricSummary {
    let mut mean = serde_json::Map::new();
    let mut stddev = serde_json::Map::new();
    if runs.is_empty() {
        return MetricSummary { mean, stddev };
    }
    let columns: Vec<Vec<(&str, f64)>> = runs.iter().map(Metrics::fields).collect();
    let n = runs.len() as f64;
    for (i, (name, _)) in columns[0].iter().enumerate() {
        let values: Vec<f64> = columns.iter().map(|c| c[i].1).collect();
        let m = values.iter().sum::<f64>() / n;
        let var = if runs.len() > 1 {
            values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        mean.insert((*name).into(), m.into());
        stddev.insert((*name).into(), var.sqrt().into());
    }
    MetricSummary { mean, stddev }
}
