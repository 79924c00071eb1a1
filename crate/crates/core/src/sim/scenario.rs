//! Scenario documents: bands, session arrivals and protocol settings.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result, ValidationErrors};
use crate::markov::{Distribution, OccupancyChain};
use crate::negotiation::{PuDisposition, Willingness};
use crate::qos::{self, TrafficType};
use crate::spectrum::{BandId, SpectrumBand};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub bands: Vec<BandSpec>,
    #[serde(default)]
    pub sessions: Vec<SessionSpec>,
    #[serde(default)]
    pub negotiation: NegotiationSettings,
    #[serde(default)]
    pub handover: HandoverSettings,
    pub horizon: u64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandSpec {
    pub id: BandId,
    pub capacity: u32,
    pub p: f64,
    pub q: f64,
    #[serde(default)]
    pub initial_occupancy: u32,
    #[serde(default)]
    pub disposition: DispositionSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispositionSpec {
    #[serde(default = "default_willingness")]
    pub initial: Willingness,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default = "one")]
    pub beta: f64,
}

impl Default for DispositionSpec {
    fn default() -> Self {
        DispositionSpec {
            initial: Willingness::Cooperative,
            alpha: 0.0,
            beta: 1.0,
        }
    }
}

fn default_willingness() -> Willingness {
    Willingness::Cooperative
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionSpec {
    pub traffic: TrafficType,
    pub arrival: u64,
    /// Per-step completion probability (geometric length).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completion_prob: Option<f64>,
    /// Fixed length in transmitting steps; replaces `completion_prob`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_length: Option<u64>,
    /// Overrides the traffic type's channel demand.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand: Option<u32>,
    /// Restricts admission to one band.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<BandId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repeat: Option<Repeat>,
}

impl SessionSpec {
    pub fn demand(&self) -> u32 {
        self.demand.unwrap_or_else(|| qos::channel_demand(self.traffic))
    }

    pub fn length(&self) -> SessionLength {
        match (self.fixed_length, self.completion_prob) {
            (Some(steps), _) => SessionLength::Fixed(steps),
            (None, Some(c)) => SessionLength::Geometric(c),
            (None, None) => SessionLength::Geometric(f64::NAN),
        }
    }

    /// Arrival steps of every copy of this entry.
    pub fn arrivals(&self) -> impl Iterator<Item = u64> + '_ {
        let (count, interval) = self.repeat.map_or((1, 0), |r| (r.count, r.interval));
        (0..count).map(move |i| self.arrival + i * interval)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Repeat {
    pub count: u64,
    pub interval: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SessionLength {
    Geometric(f64),
    Fixed(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NegotiationSettings {
    /// Channels asked of the PU per negotiation.
    #[serde(default = "one_u32")]
    pub channels: u32,
    #[serde(default = "one_u32")]
    pub latency: u32,
}

impl Default for NegotiationSettings {
    fn default() -> Self {
        NegotiationSettings {
            channels: 1,
            latency: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandoverSettings {
    #[serde(default = "one_u32")]
    pub latency: u32,
    #[serde(default = "three")]
    pub max_replans: u32,
    #[serde(default = "ten")]
    pub scan_interval: u64,
}

impl Default for HandoverSettings {
    fn default() -> Self {
        HandoverSettings {
            latency: 1,
            max_replans: 3,
            scan_interval: 10,
        }
    }
}

fn one_u32() -> u32 {
    1
}

fn three() -> u32 {
    3
}

fn ten() -> u64 {
    10
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let scenario: Scenario = serde_json::from_str(text).map_err(|e| {
            let mut errs = ValidationErrors::default();
            errs.push("<document>", e.to_string());
            Error::Validation(errs)
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            let mut errs = ValidationErrors::default();
            errs.push(path.display().to_string(), e.to_string());
            Error::Validation(errs)
        })?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Validation(mut errs) => {
                for v in errs.0.iter_mut() {
                    v.path = format!("{}: {}", path.display(), v.path);
                }
                Error::Validation(errs)
            }
            other => other,
        })
    }

    /// One 8-channel band, video-conferencing sessions (demand 4) arriving
    /// every 100 steps after a warm-up, zero protocol latency and a
    /// memoryless PU that cooperates 60% of the time.
    pub fn canonical() -> Self {
        Scenario {
            bands: vec![BandSpec {
                id: 0,
                capacity: 8,
                p: 0.2,
                q: 0.2,
                initial_occupancy: 0,
                disposition: DispositionSpec {
                    initial: Willingness::Cooperative,
                    alpha: 0.4,
                    beta: 0.6,
                },
            }],
            sessions: vec![SessionSpec {
                traffic: TrafficType::VideoConferencing,
                arrival: 200,
                completion_prob: Some(0.1),
                fixed_length: None,
                demand: None,
                band: None,
                repeat: Some(Repeat {
                    count: 10_000,
                    interval: 100,
                }),
            }],
            negotiation: NegotiationSettings {
                channels: 1,
                latency: 0,
            },
            handover: HandoverSettings {
                latency: 0,
                max_replans: 3,
                scan_interval: 10,
            },
            horizon: 200 + 100 * 10_000,
            seed: 42,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "canonical" => Some(Self::canonical()),
            _ => None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("scenario serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = ValidationErrors::default();
        if self.horizon < 1 {
            errs.push("horizon", "must be at least 1");
        }
        if self.bands.is_empty() {
            errs.push("bands", "at least one band is required");
        }
        let mut ids = BTreeSet::new();
        for (i, b) in self.bands.iter().enumerate() {
            let at = |f: &str| format!("bands[{i}].{f}");
            if !ids.insert(b.id) {
                errs.push(at("id"), format!("duplicate band id {}", b.id));
            }
            if b.capacity < 1 {
                errs.push(at("capacity"), "must be at least 1");
            }
            for (name, v) in [("p", b.p), ("q", b.q)] {
                if !(0.0..=1.0).contains(&v) {
                    errs.push(at(name), format!("{v} is outside [0, 1]"));
                }
            }
            if b.p + b.q > 1.0 + 1e-12 {
                errs.push(at("q"), format!("p + q = {} exceeds 1", b.p + b.q));
            }
            if b.initial_occupancy > b.capacity {
                errs.push(
                    at("initial_occupancy"),
                    format!("{} exceeds capacity {}", b.initial_occupancy, b.capacity),
                );
            }
            for (name, v) in [("alpha", b.disposition.alpha), ("beta", b.disposition.beta)] {
                if !(0.0..=1.0).contains(&v) {
                    errs.push(at(&format!("disposition.{name}")), format!("{v} is outside [0, 1]"));
                }
            }
        }
        for (i, s) in self.sessions.iter().enumerate() {
            let at = |f: &str| format!("sessions[{i}].{f}");
            match (s.completion_prob, s.fixed_length) {
                (Some(_), Some(_)) => errs.push(at("fixed_length"), "set either completion_prob or fixed_length, not both"),
                (None, None) => errs.push(at("completion_prob"), "required unless fixed_length is set"),
                (Some(c), None) if !(c > 0.0 && c <= 1.0) => {
                    errs.push(at("completion_prob"), format!("{c} is outside (0, 1]"))
                }
                (None, Some(0)) => errs.push(at("fixed_length"), "must be at least 1"),
                _ => {}
            }
            if let Some(b) = s.band {
                if !ids.contains(&b) {
                    errs.push(at("band"), format!("unknown band id {b}"));
                }
            }
            if let Some(r) = s.repeat {
                if r.count < 1 {
                    errs.push(at("repeat.count"), "must be at least 1");
                }
                if r.interval < 1 && r.count > 1 {
                    errs.push(at("repeat.interval"), "must be at least 1");
                }
            }
        }
        if self.negotiation.channels < 1 {
            errs.push("negotiation.channels", "must be at least 1");
        }
        if self.handover.scan_interval < 1 {
            errs.push("handover.scan_interval", "must be at least 1");
        }
        errs.into_result()
    }

    pub fn build_bands(&self) -> Result<Vec<SpectrumBand>> {
        let mut bands = self
            .bands
            .iter()
            .map(|b| {
                let d = &b.disposition;
                SpectrumBand::new(
                    b.id,
                    OccupancyChain::new(b.capacity, b.p, b.q)?,
                    b.initial_occupancy,
                    PuDisposition::new(d.initial, d.alpha, d.beta),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        bands.sort_by_key(|b| b.id);
        Ok(bands)
    }
}

impl BandSpec {
    pub fn chain(&self) -> Result<OccupancyChain> {
        OccupancyChain::new(self.capacity, self.p, self.q)
    }

    /// Long-run occupancy law; a frozen band stays at its initial occupancy.
    pub fn long_run_occupancy(&self) -> Result<Distribution> {
        let chain = self.chain()?;
        if chain.is_frozen() {
            Ok(Distribution::point_mass(chain.states(), self.initial_occupancy as usize))
        } else {
            chain.stationary()
        }
    }

    pub fn disposition(&self) -> PuDisposition {
        PuDisposition::new(self.disposition.initial, self.disposition.alpha, self.disposition.beta)
    }
}
