//! PU willingness to yield channels, and the SU <-> PU negotiation.

use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::spectrum::{BandId, SpectrumBand};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Willingness {
    Cooperative,
    NonCooperative,
}

/// Two-state Markov chain over the PU's willingness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PuDisposition {
    pub state: Willingness,
    /// Per-step probability Cooperative -> NonCooperative.
    pub alpha: f64,
    /// Per-step probability NonCooperative -> Cooperative.
    pub beta: f64,
}

impl PuDisposition {
    pub fn new(state: Willingness, alpha: f64, beta: f64) -> Self {
        PuDisposition { state, alpha, beta }
    }

    /// A PU that always cooperates.
    pub fn always_cooperative() -> Self {
        Self::new(Willingness::Cooperative, 0.0, 1.0)
    }

    /// Long-run fraction of steps spent cooperative, `beta / (alpha + beta)`.
    /// A chain that never switches stays where it starts.
    pub fn stationary_cooperation(&self) -> f64 {
        let total = self.alpha + self.beta;
        if total == 0.0 {
            match self.state {
                Willingness::Cooperative => 1.0,
                Willingness::NonCooperative => 0.0,
            }
        } else {
            self.beta / total
        }
    }

    /// True when successive states are independent draws, i.e.
    /// `alpha + beta == 1`.
    pub fn is_memoryless(&self) -> bool {
        (self.alpha + self.beta - 1.0).abs() < 1e-12
    }

    pub fn is_cooperative(&self) -> bool {
        self.state == Willingness::Cooperative
    }

    /// One step of the willingness chain. Consumes exactly one draw.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let u: f64 = rng.gen();
        self.state = match self.state {
            Willingness::Cooperative if u < self.alpha => Willingness::NonCooperative,
            Willingness::NonCooperative if u < self.beta => Willingness::Cooperative,
            s => s,
        };
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegotiationRequest {
    pub band_id: BandId,
    pub channels_requested: u32,
}

impl NegotiationRequest {
    /// `channels` is raised to the one-channel floor.
    pub fn new(band_id: BandId, channels: u32) -> Self {
        NegotiationRequest {
            band_id,
            channels_requested: channels.max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "outcome", content = "channels")]
pub enum NegotiationOutcome {
    Granted(u32),
    Refused,
}

impl NegotiationOutcome {
    pub fn is_granted(&self) -> bool {
        matches!(self, NegotiationOutcome::Granted(_))
    }
}

/// Resolves a request against the band's current disposition. A
/// cooperative PU yields `min(requested, pu_used)` channels; an
/// uncooperative one refuses and the band is untouched.
pub fn negotiate(band: &mut SpectrumBand, request: NegotiationRequest) -> NegotiationOutcome {
    if !band.disposition.is_cooperative() {
        return NegotiationOutcome::Refused;
    }
    if band.pu_used() == 0 {
        warn!(
            "band {}: negotiation with an idle cooperative PU; nothing to yield",
            band.id
        );
        return NegotiationOutcome::Refused;
    }
    let g = request.channels_requested.max(1).min(band.pu_used());
    band.grant_channels(g)
        .expect("grant clamped to current occupancy");
    NegotiationOutcome::Granted(g)
}
