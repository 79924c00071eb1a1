//! Event trace: newline-delimited JSON records and a running SHA-256 over
//! them. Payloads carry only integers and enums so the hash is identical
//! across platforms.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::fsm::{Mode, SessionId};
use crate::negotiation::NegotiationOutcome;
use crate::qos::TrafficType;
use crate::spectrum::BandId;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "event")]
pub enum Event {
    Arrival { session: SessionId, traffic: TrafficType, demand: u32 },
    Admitted { session: SessionId, band: BandId, mode: Mode },
    Blocked { session: SessionId },
    ModeChange { session: SessionId, band: BandId, mode: Mode },
    Interference { session: SessionId, band: BandId, pu_used: u32 },
    NegotiationStarted { session: SessionId, band: BandId },
    NegotiationResolved { session: SessionId, band: BandId, result: NegotiationOutcome },
    HandoverStarted { session: SessionId, source: BandId, target: Option<BandId> },
    HandoverReplanned { session: SessionId, failed_target: BandId, replans: u32 },
    HandoverCompleted { session: SessionId, source: BandId, target: BandId, mode: Mode },
    Completed { session: SessionId, band: BandId },
    Dropped { session: SessionId },
}

impl Event {
    pub fn is_negotiation(&self) -> bool {
        matches!(self, Event::NegotiationStarted { .. } | Event::NegotiationResolved { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub step: u64,
    #[serde(flatten)]
    pub event: Event,
}

impl TraceRecord {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("trace record serializes")
    }
}

/// Hashes every record; keeps them only when asked to.
#[derive(Debug, Clone)]
pub struct TraceRecorder {
    hasher: Sha256,
    records: Option<Vec<TraceRecord>>,
    len: u64,
}

impl TraceRecorder {
    pub fn new(keep_records: bool) -> Self {
        TraceRecorder {
            hasher: Sha256::new(),
            records: keep_records.then(Vec::new),
            len: 0,
        }
    }

    pub fn push(&mut self, step: u64, event: Event) {
        let record = TraceRecord { step, event };
        self.hasher.update(record.to_line().as_bytes());
        self.hasher.update(b"\n");
        self.len += 1;
        if let Some(records) = self.records.as_mut() {
            records.push(record);
        }
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn records(&self) -> &[TraceRecord] {
        self.records.as_deref().unwrap_or(&[])
    }

    pub fn hash(&self) -> String {
        hex::encode(self.hasher.clone().finalize())
    }

    pub fn finish(self) -> EventTrace {
        EventTrace {
            hash: self.hash(),
            len: self.len,
            records: self.records.unwrap_or_default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventTrace {
    pub records: Vec<TraceRecord>,
    pub len: u64,
    pub hash: String,
}

impl EventTrace {
    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&r.to_line());
            out.push('\n');
        }
        out
    }
}
