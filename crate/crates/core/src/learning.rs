//! Knowledge base of per-band negotiation and sensing history.
//!
//! Estimates are add-one smoothed so a band nobody has tried yet scores
//! 0.25 rather than 0 and still gets picked sometimes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ValidationErrors};
use crate::negotiation::NegotiationOutcome;
use crate::spectrum::{BandId, SensingReport};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandKnowledge {
    pub attempts: u64,
    pub grants: u64,
    pub sensed: u64,
    pub available: u64,
}

impl BandKnowledge {
    pub fn coop_estimate(&self) -> f64 {
        (self.grants as f64 + 1.0) / (self.attempts as f64 + 2.0)
    }

    pub fn availability_estimate(&self) -> f64 {
        (self.available as f64 + 1.0) / (self.sensed as f64 + 2.0)
    }

    pub fn score(&self) -> f64 {
        self.coop_estimate() * self.availability_estimate()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KnowledgeBase {
    bands: BTreeMap<BandId, BandKnowledge>,
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn band(&self, id: BandId) -> BandKnowledge {
        self.bands.get(&id).copied().unwrap_or_default()
    }

    pub fn bands(&self) -> impl Iterator<Item = (BandId, &BandKnowledge)> {
        self.bands.iter().map(|(&id, k)| (id, k))
    }

    pub fn record_negotiation(&mut self, band: BandId, outcome: &NegotiationOutcome) {
        let entry = self.bands.entry(band).or_default();
        entry.attempts += 1;
        if outcome.is_granted() {
            entry.grants += 1;
        }
    }

    pub fn record_sense(&mut self, band: BandId, report: &SensingReport, demand: u32) {
        let entry = self.bands.entry(band).or_default();
        entry.sensed += 1;
        if report.free >= demand {
            entry.available += 1;
        }
    }

    pub fn coop_estimate(&self, band: BandId) -> f64 {
        self.band(band).coop_estimate()
    }

    pub fn availability_estimate(&self, band: BandId) -> f64 {
        self.band(band).availability_estimate()
    }

    /// Demand is already folded into the availability counts at record time.
    pub fn score(&self, band: BandId, _demand: u32) -> f64 {
        self.band(band).score()
    }

    /// Highest-scoring band among `candidates`, lowest id on ties.
    pub fn best_band<I>(&self, candidates: I, demand: u32) -> Option<BandId>
    where
        I: IntoIterator<Item = BandId>,
    {
        candidates
            .into_iter()
            .map(|id| (id, self.score(id, demand)))
            .fold(None, |best: Option<(BandId, f64)>, (id, s)| match best {
                Some((bid, bs)) if bs > s || (bs == s && bid < id) => Some((bid, bs)),
                _ => Some((id, s)),
            })
            .map(|(id, _)| id)
    }

    /// Checks counter consistency of a loaded snapshot.
    pub fn validate(&self) -> Result<()> {
        let mut errs = ValidationErrors::default();
        for (id, k) in &self.bands {
            if k.grants > k.attempts {
                errs.push(format!("{id}.grants"), "exceeds attempts");
            }
            if k.available > k.sensed {
                errs.push(format!("{id}.available"), "exceeds sensed");
            }
        }
        errs.into_result()
    }
}
