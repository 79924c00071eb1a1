//! The discrete-time world and its fixed per-step pipeline.
//!
//! Each step runs, in order:
//! 1. every band's PU occupancy evolves (ascending band id, one draw each);
//! 2. every band's PU disposition evolves (ascending band id, one draw each);
//! 3. arrivals are admitted in priority order;
//! 4. each active session senses its band, and every band on scan steps;
//! 5. the session's mode is classified;
//! 6. the session decides and acts (transmit / negotiate / hand over);
//! 7. transmitting sessions draw completion (ascending session id);
//! 8. knowledge-base updates from this step are applied;
//! 9. metrics and trace are updated.
//!
//! A session admitted in step 3 transmits right away and is first
//! classified on the following step.

use std::collections::{BTreeMap, BTreeSet};

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fsm::{self, Action, Admission, ArrivalQueue, Mode, SessionId, SessionState, SuSession};
use crate::handover::{self, HandoverProgress};
use crate::learning::KnowledgeBase;
use crate::negotiation::{negotiate, NegotiationOutcome, NegotiationRequest};
use crate::qos::TrafficType;
use crate::spectrum::{BandId, SensingReport, SpectrumBand};

use super::metrics::Metrics;
use super::scenario::{HandoverSettings, NegotiationSettings, Scenario, SessionLength};
use super::trace::{Event, EventTrace, TraceRecorder};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Keep trace records in memory (the hash is always computed).
    pub record_trace: bool,
    pub timeseries: bool,
    /// Starting knowledge base; empty when absent.
    pub knowledge: Option<KnowledgeBase>,
}

#[derive(Debug, Clone)]
struct Planned {
    arrival: u64,
    traffic: TrafficType,
    demand: u32,
    length: SessionLength,
    band: Option<BandId>,
}

#[derive(Debug, Clone)]
struct Live {
    session: SuSession,
    length: SessionLength,
    transmitted: u64,
    last_mode: Option<Mode>,
    handover_source: BandId,
}

enum KbUpdate {
    Sense(SensingReport, u32),
    Negotiation(BandId, NegotiationOutcome),
}

/// Per-step counters for the time-series output.
#[derive(Debug, Clone, PartialEq)]
pub struct Timeseries {
    pub band_ids: Vec<BandId>,
    pub rows: Vec<TimeseriesRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeseriesRow {
    pub step: u64,
    pub active: u64,
    pub arrivals: u64,
    pub blocked: u64,
    pub completed: u64,
    pub dropped: u64,
    pub negotiations: u64,
    pub handovers: u64,
    pub interference_steps: u64,
    pub occupancy: Vec<u32>,
}

impl Timeseries {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "step,active,arrivals,blocked,completed,dropped,negotiations,handovers,interference_steps",
        );
        for id in &self.band_ids {
            out.push_str(&format!(",band_{id}_pu_used"));
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}",
                r.step,
                r.active,
                r.arrivals,
                r.blocked,
                r.completed,
                r.dropped,
                r.negotiations,
                r.handovers,
                r.interference_steps
            ));
            for k in &r.occupancy {
                out.push_str(&format!(",{k}"));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: Metrics,
    pub trace: EventTrace,
    pub knowledge: KnowledgeBase,
    pub timeseries: Option<Timeseries>,
    /// Steps spent at each PU occupancy, per band.
    pub occupancy: BTreeMap<BandId, Vec<u64>>,
}

pub struct World {
    negotiation: NegotiationSettings,
    handover: HandoverSettings,
    horizon: u64,
    step: u64,
    bands: Vec<SpectrumBand>,
    rng: ChaCha8Rng,
    kb: KnowledgeBase,
    planned: Vec<Planned>,
    next_arrival: usize,
    live: BTreeMap<SessionId, Live>,
    metrics: Metrics,
    trace: TraceRecorder,
    timeseries: Option<Timeseries>,
    occupancy: Vec<Vec<u64>>,
    kb_updates: Vec<KbUpdate>,
}

impl World {
    pub fn new(scenario: &Scenario, options: RunOptions) -> Result<Self> {
        scenario.validate()?;
        let bands = scenario.build_bands()?;
        let mut arrivals: Vec<(u64, usize, u64)> = Vec::new();
        for (entry, spec) in scenario.sessions.iter().enumerate() {
            for (copy, at) in spec.arrivals().enumerate() {
                if at < scenario.horizon {
                    arrivals.push((at, entry, copy as u64));
                }
            }
        }
        arrivals.sort_unstable();
        let planned = arrivals
            .into_iter()
            .map(|(at, entry, _)| {
                let spec = &scenario.sessions[entry];
                Planned {
                    arrival: at,
                    traffic: spec.traffic,
                    demand: spec.demand(),
                    length: spec.length(),
                    band: spec.band,
                }
            })
            .collect();
        let timeseries = options.timeseries.then(|| Timeseries {
            band_ids: bands.iter().map(|b| b.id).collect(),
            rows: Vec::new(),
        });
        let occupancy = bands.iter().map(|b| vec![0; b.capacity() as usize + 1]).collect();
        Ok(World {
            negotiation: scenario.negotiation,
            handover: scenario.handover,
            horizon: scenario.horizon,
            step: 0,
            bands,
            rng: ChaCha8Rng::seed_from_u64(scenario.seed),
            kb: options.knowledge.unwrap_or_default(),
            planned,
            next_arrival: 0,
            live: BTreeMap::new(),
            metrics: Metrics::default(),
            trace: TraceRecorder::new(options.record_trace),
            timeseries,
            occupancy,
            kb_updates: Vec::new(),
        })
    }

    pub fn current_step(&self) -> u64 {
        self.step
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.horizon
    }

    pub fn metrics(&self) -> &Metrics {
        &self.metrics
    }

    pub fn bands(&self) -> &[SpectrumBand] {
        &self.bands
    }

    pub fn knowledge(&self) -> &KnowledgeBase {
        &self.kb
    }

    pub fn trace(&self) -> &TraceRecorder {
        &self.trace
    }

    pub fn session(&self, id: SessionId) -> Option<&SuSession> {
        self.live.get(&id).map(|l| &l.session)
    }

    pub fn active_sessions(&self) -> impl Iterator<Item = &SuSession> {
        self.live.values().map(|l| &l.session)
    }

    fn band_index(&self, id: BandId) -> usize {
        self.bands
            .binary_search_by_key(&id, |b| b.id)
            .expect("band ids come from the scenario")
    }

    /// Fresh reports for every band no session currently holds or is
    /// moving to.
    fn unclaimed_reports(&self, now: u64) -> Vec<SensingReport> {
        let claimed: BTreeSet<BandId> = self.live.values().filter_map(|l| l.session.state.band()).collect();
        self.bands
            .iter()
            .filter(|b| !claimed.contains(&b.id))
            .map(|b| b.sense(now))
            .collect()
    }

    fn emit(&mut self, event: Event) {
        self.trace.push(self.step, event);
    }

    pub fn step(&mut self) {
        let now = self.step;
        for band in &mut self.bands {
            band.step(&mut self.rng);
        }
        for band in &mut self.bands {
            band.disposition.step(&mut self.rng);
        }
        let fresh = self.admit_arrivals(now);

        let ids: Vec<SessionId> = self.live.keys().copied().collect();
        let mut transmitting = Vec::new();
        for id in ids {
            let mut live = self.live.remove(&id).expect("listed above");
            let tx = fresh.contains(&id) || self.act(now, &mut live);
            if live.session.state.is_terminal() {
                continue;
            }
            if tx {
                transmitting.push(id);
            }
            self.live.insert(id, live);
        }

        for id in transmitting {
            let live = self.live.get_mut(&id).expect("still live");
            live.transmitted += 1;
            let done = match live.length {
                SessionLength::Geometric(c) => self.rng.gen::<f64>() < c,
                SessionLength::Fixed(steps) => live.transmitted >= steps,
            };
            if done {
                let live = self.live.remove(&id).expect("still live");
                let band = live.session.state.band().expect("transmitting on a band");
                self.metrics.completed += 1;
                self.emit(Event::Completed { session: id, band });
            }
        }

        for update in std::mem::take(&mut self.kb_updates) {
            match update {
                KbUpdate::Sense(report, demand) => self.kb.record_sense(report.band_id, &report, demand),
                KbUpdate::Negotiation(band, outcome) => self.kb.record_negotiation(band, &outcome),
            }
        }

        self.metrics.still_active = self.live.len() as u64;
        self.metrics.refresh_rates();
        debug_assert_eq!(self.metrics.check_conservation(), Ok(()));
        for (hist, band) in self.occupancy.iter_mut().zip(&self.bands) {
            hist[band.pu_used() as usize] += 1;
        }
        if let Some(ts) = self.timeseries.as_mut() {
            let m = &self.metrics;
            ts.rows.push(TimeseriesRow {
                step: now,
                active: m.still_active,
                arrivals: m.arrivals,
                blocked: m.blocked,
                completed: m.completed,
                dropped: m.dropped,
                negotiations: m.negotiations,
                handovers: m.handovers,
                interference_steps: m.interference_steps,
                occupancy: self.bands.iter().map(|b| b.pu_used()).collect(),
            });
        }
        self.step += 1;
    }

    fn admit_arrivals(&mut self, now: u64) -> BTreeSet<SessionId> {
        let mut queue = ArrivalQueue::new();
        while let Some(p) = self.planned.get(self.next_arrival) {
            if p.arrival != now {
                break;
            }
            queue.push(self.next_arrival as SessionId, p.traffic);
            self.next_arrival += 1;
        }
        let mut admitted = BTreeSet::new();
        while let Some(request) = queue.pop() {
            let id = request.session;
            let plan = self.planned[id as usize].clone();
            self.metrics.arrivals += 1;
            self.emit(Event::Arrival {
                session: id,
                traffic: plan.traffic,
                demand: plan.demand,
            });
            let mut reports = self.unclaimed_reports(now);
            if let Some(pin) = plan.band {
                reports.retain(|r| r.band_id == pin);
            }
            match fsm::admit(plan.demand, &reports, &self.kb) {
                Admission::Admitted(band) => {
                    let report = reports.iter().find(|r| r.band_id == band).expect("admitted from reports");
                    let mode = fsm::classify_mode(report.pu_used, plan.demand, report.capacity)
                        .expect("admission requires free >= demand");
                    let session = SuSession::with_demand(id, plan.traffic, plan.demand).activate(band, mode, now);
                    self.live.insert(
                        id,
                        Live {
                            session,
                            length: plan.length,
                            transmitted: 0,
                            last_mode: Some(mode),
                            handover_source: band,
                        },
                    );
                    self.metrics.admitted += 1;
                    self.emit(Event::Admitted { session: id, band, mode });
                    admitted.insert(id);
                }
                Admission::Blocked => {
                    self.metrics.blocked += 1;
                    self.emit(Event::Blocked { session: id });
                }
            }
        }
        admitted
    }

    /// Runs sub-steps 4 to 6 for one session. Returns whether it transmits
    /// this step.
    fn act(&mut self, now: u64, live: &mut Live) -> bool {
        match live.session.state {
            SessionState::Active { band, .. } => {
                let demand = live.session.demand;
                let report = self.bands[self.band_index(band)].sense(now);
                self.kb_updates.push(KbUpdate::Sense(report, demand));
                if now.is_multiple_of(self.handover.scan_interval) {
                    for other in self.bands.iter().filter(|b| b.id != band) {
                        self.kb_updates.push(KbUpdate::Sense(other.sense(now), demand));
                    }
                }
                let mode = fsm::classify_mode(report.pu_used, demand, report.capacity)
                    .expect("session demand fits its band");
                self.metrics.mode_histogram.add(mode);
                self.note_mode(live, band, mode);
                if mode == Mode::Failure {
                    self.metrics.interference_steps += 1;
                    self.emit(Event::Interference {
                        session: live.session.id,
                        band,
                        pu_used: report.pu_used,
                    });
                }
                let action = fsm::decide(&live.session, mode).expect("session is active");
                match action {
                    Action::ContinueTransmit => {
                        live.session.state = SessionState::Active { mode, band };
                        true
                    }
                    Action::StartNegotiation => {
                        live.session = fsm::start_negotiation(&live.session, self.negotiation.latency)
                            .expect("session is active");
                        self.emit(Event::NegotiationStarted {
                            session: live.session.id,
                            band,
                        });
                        self.advance_negotiation(now, live)
                    }
                    Action::StartHandover => self.start_handover(now, live, band),
                    Action::Drop => {
                        self.drop_session(now, live, false);
                        false
                    }
                }
            }
            SessionState::Negotiating { .. } => self.advance_negotiation(now, live),
            SessionState::HandingOver { .. } => self.advance_handover(now, live),
            SessionState::Idle | SessionState::Completed | SessionState::Dropped => false,
        }
    }

    fn note_mode(&mut self, live: &mut Live, band: BandId, mode: Mode) {
        if live.last_mode != Some(mode) {
            live.last_mode = Some(mode);
            self.emit(Event::ModeChange {
                session: live.session.id,
                band,
                mode,
            });
        }
    }

    fn advance_negotiation(&mut self, now: u64, live: &mut Live) -> bool {
        let SessionState::Negotiating { band, steps_remaining } = live.session.state else {
            unreachable!("advance_negotiation on {}", live.session.state.name());
        };
        if steps_remaining > 0 {
            live.session.state = SessionState::Negotiating {
                band,
                steps_remaining: steps_remaining - 1,
            };
            return false;
        }
        let idx = self.band_index(band);
        let outcome = negotiate(
            &mut self.bands[idx],
            NegotiationRequest::new(band, self.negotiation.channels),
        );
        self.metrics.negotiations += 1;
        match outcome {
            NegotiationOutcome::Granted(_) => self.metrics.grants += 1,
            NegotiationOutcome::Refused => self.metrics.refusals += 1,
        }
        self.kb_updates.push(KbUpdate::Negotiation(band, outcome));
        self.emit(Event::NegotiationResolved {
            session: live.session.id,
            band,
            result: outcome,
        });
        live.session = fsm::apply_outcome(&live.session, outcome).expect("session is negotiating");
        match outcome {
            NegotiationOutcome::Granted(_) => {
                self.note_mode(live, band, Mode::Normal);
                true
            }
            NegotiationOutcome::Refused => self.start_handover(now, live, band),
        }
    }

    fn start_handover(&mut self, now: u64, live: &mut Live, source: BandId) -> bool {
        self.metrics.handovers += 1;
        let reports = self.unclaimed_reports(now);
        let plan = handover::plan_handover(&live.session, source, &reports, &self.kb, self.handover.latency);
        debug!("step {now}: session {} hands over {source} -> {:?}", live.session.id, plan.target);
        self.emit(Event::HandoverStarted {
            session: live.session.id,
            source,
            target: plan.target,
        });
        live.handover_source = source;
        live.last_mode = None;
        live.session = handover::begin_handover(&live.session, &plan, 0).expect("session is not terminal");
        self.advance_handover(now, live)
    }

    fn advance_handover(&mut self, now: u64, live: &mut Live) -> bool {
        loop {
            let SessionState::HandingOver { target, .. } = live.session.state else {
                unreachable!("advance_handover on {}", live.session.state.name());
            };
            let report = target.map(|b| self.bands[self.band_index(b)].sense(now));
            let progress =
                handover::execute_handover(&live.session, report.as_ref(), now).expect("session is handing over");
            match progress {
                HandoverProgress::InTransit(s) => {
                    live.session = s;
                    return false;
                }
                HandoverProgress::Arrived(s) => {
                    let SessionState::Active { mode, band } = s.state else {
                        unreachable!("arrival yields an active session");
                    };
                    live.session = s;
                    live.last_mode = Some(mode);
                    self.emit(Event::HandoverCompleted {
                        session: live.session.id,
                        source: live.handover_source,
                        target: band,
                        mode,
                    });
                    return true;
                }
                HandoverProgress::Replan(s) => {
                    let SessionState::HandingOver {
                        target: Some(failed),
                        replans,
                        ..
                    } = s.state
                    else {
                        unreachable!("replan keeps the failed target");
                    };
                    self.metrics.replans += 1;
                    self.emit(Event::HandoverReplanned {
                        session: s.id,
                        failed_target: failed,
                        replans,
                    });
                    live.session = s;
                    if replans > self.handover.max_replans {
                        self.drop_session(now, live, true);
                        return false;
                    }
                    // Planning from the failed target excludes it.
                    let reports = self.unclaimed_reports(now);
                    let plan =
                        handover::plan_handover(&live.session, failed, &reports, &self.kb, self.handover.latency);
                    live.session =
                        handover::begin_handover(&live.session, &plan, replans).expect("session is not terminal");
                }
                HandoverProgress::Dropped(s) => {
                    live.session = s;
                    self.metrics.dropped += 1;
                    self.metrics.failed_handovers += 1;
                    self.emit(Event::Dropped {
                        session: live.session.id,
                    });
                    return false;
                }
            }
        }
    }

    fn drop_session(&mut self, now: u64, live: &mut Live, during_handover: bool) {
        live.session = live.session.finish(SessionState::Dropped, now);
        self.metrics.dropped += 1;
        if during_handover {
            self.metrics.failed_handovers += 1;
        }
        self.emit(Event::Dropped {
            session: live.session.id,
        });
    }

    pub fn run_to_end(&mut self) {
        while !self.is_finished() {
            self.step();
        }
    }

    pub fn finish(self) -> RunOutput {
        let mut metrics = self.metrics;
        metrics.refresh_rates();
        RunOutput {
            metrics,
            trace: self.trace.finish(),
            knowledge: self.kb,
            timeseries: self.timeseries,
            occupancy: self
                .bands
                .iter()
                .map(|b| b.id)
                .zip(self.occupancy)
                .collect(),
        }
    }
}

pub fn run(scenario: &Scenario) -> Result<RunOutput> {
    run_with(scenario, RunOptions::default())
}

pub fn run_with(scenario: &Scenario, options: RunOptions) -> Result<RunOutput> {
    let mut world = World::new(scenario, options)?;
    world.run_to_end();
    Ok(world.finish())
}
