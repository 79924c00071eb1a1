//! Secondary-user session lifecycle and the Normal / Warning / Failure
//! decision table.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learning::KnowledgeBase;
use crate::negotiation::NegotiationOutcome;
use crate::qos::{self, TrafficType};
use crate::spectrum::{BandId, SensingReport};

pub type SessionId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Demand fits with room to spare.
    Normal,
    /// Demand fits exactly; any PU growth would collide.
    Warning,
    /// Demand no longer fits.
    Failure,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Normal, Mode::Warning, Mode::Failure];

    pub fn key(self) -> &'static str {
        match self {
            Mode::Normal => "normal",
            Mode::Warning => "warning",
            Mode::Failure => "failure",
        }
    }
}

/// Compares `pu_used + demand` against `capacity`.
pub fn classify_mode(pu_used: u32, demand: u32, capacity: u32) -> Result<Mode> {
    if demand > capacity {
        return Err(Error::DemandExceedsCapacity { demand, capacity });
    }
    if pu_used > capacity {
        return Err(Error::InvalidParameter {
            name: "pu_used",
            reason: format!("{pu_used} exceeds capacity {capacity}"),
        });
    }
    Ok(match (pu_used + demand).cmp(&capacity) {
        Ordering::Less => Mode::Normal,
        Ordering::Equal => Mode::Warning,
        Ordering::Greater => Mode::Failure,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "state")]
pub enum SessionState {
    Idle,
    Active {
        mode: Mode,
        band: BandId,
    },
    Negotiating {
        band: BandId,
        steps_remaining: u32,
    },
    HandingOver {
        target: Option<BandId>,
        steps_remaining: u32,
        replans: u32,
    },
    Completed,
    Dropped,
}

impl SessionState {
    pub fn name(&self) -> &'static str {
        match self {
            SessionState::Idle => "idle",
            SessionState::Active { .. } => "active",
            SessionState::Negotiating { .. } => "negotiating",
            SessionState::HandingOver { .. } => "handing_over",
            SessionState::Completed => "completed",
            SessionState::Dropped => "dropped",
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, SessionState::Completed | SessionState::Dropped)
    }

    /// Band the session holds or is moving to.
    pub fn band(&self) -> Option<BandId> {
        match *self {
            SessionState::Active { band, .. } | SessionState::Negotiating { band, .. } => Some(band),
            SessionState::HandingOver { target, .. } => target,
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuSession {
    pub id: SessionId,
    pub traffic: TrafficType,
    pub demand: u32,
    pub state: SessionState,
    pub started_at: Option<u64>,
    pub ended_at: Option<u64>,
}

impl SuSession {
    pub fn new(id: SessionId, traffic: TrafficType) -> Self {
        Self::with_demand(id, traffic, qos::channel_demand(traffic))
    }

    pub fn with_demand(id: SessionId, traffic: TrafficType, demand: u32) -> Self {
        SuSession {
            id,
            traffic,
            demand,
            state: SessionState::Idle,
            started_at: None,
            ended_at: None,
        }
    }

    pub fn activate(&self, band: BandId, mode: Mode, now: u64) -> SuSession {
        SuSession {
            state: SessionState::Active { mode, band },
            started_at: self.started_at.or(Some(now)),
            ..self.clone()
        }
    }

    pub fn finish(&self, state: SessionState, now: u64) -> SuSession {
        debug_assert!(state.is_terminal());
        SuSession {
            state,
            ended_at: Some(now),
            ..self.clone()
        }
    }

    fn terminal_error(&self) -> Error {
        Error::TerminalSession {
            session: self.id,
            state: self.state.name(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    ContinueTransmit,
    StartNegotiation,
    StartHandover,
    Drop,
}

pub fn decide(session: &SuSession, mode: Mode) -> Result<Action> {
    match session.state {
        SessionState::Active { .. } => Ok(match mode {
            Mode::Normal => Action::ContinueTransmit,
            Mode::Warning => Action::StartNegotiation,
            Mode::Failure => Action::StartHandover,
        }),
        s if s.is_terminal() => Err(session.terminal_error()),
        s => Err(Error::WrongState {
            session: session.id,
            state: s.name(),
            expected: "active",
        }),
    }
}

/// Puts an active session into negotiation on its band.
pub fn start_negotiation(session: &SuSession, latency: u32) -> Result<SuSession> {
    match session.state {
        SessionState::Active { band, .. } => Ok(SuSession {
            state: SessionState::Negotiating {
                band,
                steps_remaining: latency,
            },
            ..session.clone()
        }),
        s if s.is_terminal() => Err(session.terminal_error()),
        s => Err(Error::WrongState {
            session: session.id,
            state: s.name(),
            expected: "active",
        }),
    }
}

/// A grant returns the session to Normal on the same band; a refusal sends
/// it to handover with no target chosen yet.
pub fn apply_outcome(session: &SuSession, outcome: NegotiationOutcome) -> Result<SuSession> {
    match session.state {
        SessionState::Negotiating { band, .. } => {
            let state = match outcome {
                NegotiationOutcome::Granted(_) => SessionState::Active {
                    mode: Mode::Normal,
                    band,
                },
                NegotiationOutcome::Refused => SessionState::HandingOver {
                    target: None,
                    steps_remaining: 0,
                    replans: 0,
                },
            };
            Ok(SuSession {
                state,
                ..session.clone()
            })
        }
        s if s.is_terminal() => Err(session.terminal_error()),
        s => Err(Error::WrongState {
            session: session.id,
            state: s.name(),
            expected: "negotiating",
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Admission {
    Admitted(BandId),
    Blocked,
}

/// Picks the best-scoring band with `free >= demand`, lowest id on ties.
/// `bands` should only list bands with no other SU on them.
pub fn admit(demand: u32, bands: &[SensingReport], kb: &KnowledgeBase) -> Admission {
    let candidates = bands.iter().filter(|r| r.free >= demand).map(|r| r.band_id);
    match kb.best_band(candidates, demand) {
        Some(id) => Admission::Admitted(id),
        None => Admission::Blocked,
    }
}

/// An arrival waiting for admission.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingRequest {
    pub session: SessionId,
    pub traffic: TrafficType,
}

impl Ord for PendingRequest {
    // Max-heap: higher priority first, then earlier traffic type, then lower id.
    fn cmp(&self, other: &Self) -> Ordering {
        qos::priority(self.traffic)
            .cmp(&qos::priority(other.traffic))
            .then_with(|| other.traffic.index().cmp(&self.traffic.index()))
            .then_with(|| other.session.cmp(&self.session))
    }
}

impl PartialOrd for PendingRequest {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Arrivals of one step, drained in admission order.
#[derive(Debug, Default)]
pub struct ArrivalQueue(BinaryHeap<PendingRequest>);

impl ArrivalQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, session: SessionId, traffic: TrafficType) {
        self.0.push(PendingRequest { session, traffic });
    }

    pub fn pop(&mut self) -> Option<PendingRequest> {
        self.0.pop()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}
