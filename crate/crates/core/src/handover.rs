//! Spectral handover: move a session to another band that still fits its
//! demand, or drop it when none does.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fsm::{classify_mode, SessionId, SessionState, SuSession};
use crate::learning::KnowledgeBase;
use crate::spectrum::{BandId, SensingReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HandoverPlan {
    pub session_id: SessionId,
    pub source: BandId,
    pub target: Option<BandId>,
    pub latency: u32,
}

/// Best-scoring band other than `current` with `free >= demand`.
/// Order of `bands` does not matter.
pub fn select_target(
    bands: &[SensingReport],
    current: BandId,
    demand: u32,
    kb: &KnowledgeBase,
) -> Option<BandId> {
    let candidates = bands
        .iter()
        .filter(|r| r.band_id != current && r.free >= demand)
        .map(|r| r.band_id);
    kb.best_band(candidates, demand)
}

pub fn plan_handover(
    session: &SuSession,
    source: BandId,
    bands: &[SensingReport],
    kb: &KnowledgeBase,
    latency: u32,
) -> HandoverPlan {
    HandoverPlan {
        session_id: session.id,
        source,
        target: select_target(bands, source, session.demand, kb),
        latency,
    }
}

/// Puts the session in transit according to `plan`. `replans` carries the
/// number of earlier failed arrivals for this handover.
pub fn begin_handover(session: &SuSession, plan: &HandoverPlan, replans: u32) -> Result<SuSession> {
    if session.state.is_terminal() {
        return Err(Error::TerminalSession {
            session: session.id,
            state: session.state.name(),
        });
    }
    Ok(SuSession {
        state: SessionState::HandingOver {
            target: plan.target,
            steps_remaining: plan.latency,
            replans,
        },
        ..session.clone()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum HandoverProgress {
    /// Still waiting out the latency.
    InTransit(SuSession),
    /// Active on the target.
    Arrived(SuSession),
    /// The target filled up while in transit; pick another.
    Replan(SuSession),
    Dropped(SuSession),
}

/// Advances a session in `HandingOver` by one step. `target_report` is a
/// fresh sensing of the target, consulted only on arrival.
pub fn execute_handover(
    session: &SuSession,
    target_report: Option<&SensingReport>,
    now: u64,
) -> Result<HandoverProgress> {
    let SessionState::HandingOver {
        target,
        steps_remaining,
        replans,
    } = session.state
    else {
        return Err(Error::WrongState {
            session: session.id,
            state: session.state.name(),
            expected: "handing_over",
        });
    };
    let Some(target) = target else {
        return Ok(HandoverProgress::Dropped(
            session.finish(SessionState::Dropped, now),
        ));
    };
    if steps_remaining > 0 {
        return Ok(HandoverProgress::InTransit(SuSession {
            state: SessionState::HandingOver {
                target: Some(target),
                steps_remaining: steps_remaining - 1,
                replans,
            },
            ..session.clone()
        }));
    }
    let report = target_report.ok_or(Error::InvalidParameter {
        name: "target_report",
        reason: format!("no sensing report for target band {target}"),
    })?;
    if report.free >= session.demand {
        let mode = classify_mode(report.pu_used, session.demand, report.capacity)?;
        Ok(HandoverProgress::Arrived(session.activate(target, mode, now)))
    } else {
        Ok(HandoverProgress::Replan(SuSession {
            state: SessionState::HandingOver {
                target: Some(target),
                steps_remaining: 0,
                replans: replans + 1,
            },
            ..session.clone()
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fsm::Mode;
    use crate::negotiation::NegotiationOutcome;
    use crate::qos::TrafficType;
    use proptest::prelude::*;

    fn report(id: BandId, free: u32) -> SensingReport {
        SensingReport {
            band_id: id,
            capacity: 8,
            pu_used: 8 - free,
            free,
            step: 0,
        }
    }

    fn session() -> SuSession {
        SuSession::new(9, TrafficType::VideoConferencing).activate(0, Mode::Failure, 0)
    }

    #[test]
    fn sole_candidate() {
        let kb = KnowledgeBase::new();
        assert_eq!(select_target(&[report(0, 2), report(1, 6)], 0, 4, &kb), Some(1));
        assert_eq!(select_target(&[report(0, 8), report(1, 3)], 0, 4, &kb), None);
    }

    #[test]
    fn prefers_learned_band() {
        let mut kb = KnowledgeBase::new();
        for _ in 0..8 {
            kb.record_negotiation(5, &NegotiationOutcome::Granted(1));
            kb.record_sense(5, &report(5, 8), 4);
        }
        assert!((kb.score(5, 4) - 0.81).abs() < 1e-12);
        assert_eq!(kb.score(2, 4), 0.25);
        let bands = [report(0, 0), report(2, 6), report(5, 6)];
        assert_eq!(select_target(&bands, 0, 4, &kb), Some(5));
    }

    #[test]
    fn latency_bookkeeping() {
        let kb = KnowledgeBase::new();
        let s = session();
        let plan = plan_handover(&s, 0, &[report(0, 0), report(1, 6)], &kb, 1);
        assert_eq!(plan.target, Some(1));
        let moving = begin_handover(&s, &plan, 0).unwrap();
        // Step t: still in transit.
        let HandoverProgress::InTransit(moving) = execute_handover(&moving, None, 10).unwrap() else {
            panic!("expected transit");
        };
        // Step t + 1: arrives.
        let HandoverProgress::Arrived(done) = execute_handover(&moving, Some(&report(1, 6)), 11).unwrap() else {
            panic!("expected arrival");
        };
        assert_eq!(done.state, SessionState::Active { mode: Mode::Normal, band: 1 });
    }

    #[test]
    fn no_target_drops() {
        let kb = KnowledgeBase::new();
        let s = session();
        let plan = plan_handover(&s, 0, &[report(0, 0)], &kb, 3);
        let moving = begin_handover(&s, &plan, 0).unwrap();
        let HandoverProgress::Dropped(d) = execute_handover(&moving, None, 4).unwrap() else {
            panic!("expected drop");
        };
        assert_eq!(d.state, SessionState::Dropped);
        assert_eq!(d.ended_at, Some(4));
    }

    #[test]
    fn filled_target_replans() {
        let kb = KnowledgeBase::new();
        let s = session();
        let plan = plan_handover(&s, 0, &[report(1, 4)], &kb, 0);
        let moving = begin_handover(&s, &plan, 0).unwrap();
        let HandoverProgress::Replan(r) = execute_handover(&moving, Some(&report(1, 3)), 2).unwrap() else {
            panic!("expected replan");
        };
        assert!(matches!(r.state, SessionState::HandingOver { replans: 1, .. }));
    }

    #[test]
    fn only_from_handing_over() {
        assert!(execute_handover(&session(), None, 0).is_err());
    }

    proptest! {
        #[test]
        fn target_order_independent(frees in proptest::collection::vec(0u32..=8, 1..8),
                                    grants in proptest::collection::vec(0u64..5, 8),
                                    current in 0u32..8, rot in 0usize..8) {
            let mut kb = KnowledgeBase::new();
            for (i, &g) in grants.iter().enumerate() {
                for _ in 0..g {
                    kb.record_negotiation(i as BandId, &NegotiationOutcome::Granted(1));
                }
                kb.record_negotiation(i as BandId, &NegotiationOutcome::Refused);
            }
            let bands: Vec<_> = frees.iter().enumerate().map(|(i, &f)| report(i as BandId, f)).collect();
            let pick = select_target(&bands, current, 4, &kb);
            prop_assert_ne!(pick, Some(current));
            let mut rotated = bands.clone();
            rotated.rotate_left(rot % bands.len());
            rotated.reverse();
            prop_assert_eq!(select_target(&rotated, current, 4, &kb), pick);
        }
    }
}
