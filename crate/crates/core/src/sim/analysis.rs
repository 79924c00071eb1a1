//! Closed-form figures for a scenario, and their comparison against a
//! simulation run.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::markov::Distribution;

use super::engine::{run, RunOutput};
use super::scenario::{Scenario, SessionLength};

#[derive(Debug, Clone, Serialize)]
pub struct BandAnalysis {
    pub id: u32,
    pub capacity: u32,
    pub p: f64,
    pub q: f64,
    /// Chain never moves; the law is a point mass at the initial occupancy.
    pub frozen: bool,
    pub stationary: Vec<f64>,
    pub cooperation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockingFigure {
    pub demand: u32,
    pub probability: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NoncompletionFigure {
    pub band: u32,
    pub demand: u32,
    pub completion_prob: f64,
    pub gamma: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Analysis {
    pub bands: Vec<BandAnalysis>,
    pub blocking: Vec<BlockingFigure>,
    pub noncompletion: Vec<NoncompletionFigure>,
}

struct BandLaw {
    capacity: u32,
    law: Distribution,
}

impl BandLaw {
    /// Probability that fewer than `demand` channels are free.
    fn short_of(&self, demand: u32) -> f64 {
        if demand > self.capacity {
            1.0
        } else {
            self.law.mass_above(self.capacity - demand)
        }
    }
}

fn laws(scenario: &Scenario) -> Result<Vec<(u32, BandLaw)>> {
    scenario
        .bands
        .iter()
        .map(|b| {
            Ok((
                b.id,
                BandLaw {
                    capacity: b.capacity,
                    law: b.long_run_occupancy()?,
                },
            ))
        })
        .collect()
}

fn blocking_over(laws: &[(u32, BandLaw)], demand: u32, pin: Option<u32>) -> Result<f64> {
    let mut any = false;
    let mut blocked = 1.0;
    for (id, law) in laws {
        if pin.is_some_and(|p| p != *id) {
            continue;
        }
        any = true;
        blocked *= law.short_of(demand);
    }
    if any {
        Ok(blocked)
    } else {
        Err(Error::NoSpectrum)
    }
}

/// Stationary laws, blocking per demand class and single-band
/// non-completion per (band, demand, c) class.
pub fn analyze(scenario: &Scenario) -> Result<Analysis> {
    scenario.validate()?;
    let laws = laws(scenario)?;
    let bands = scenario
        .bands
        .iter()
        .zip(&laws)
        .map(|(b, (_, law))| BandAnalysis {
            id: b.id,
            capacity: b.capacity,
            p: b.p,
            q: b.q,
            frozen: b.p == 0.0 && b.q == 0.0,
            stationary: law.law.probabilities().to_vec(),
            cooperation: b.disposition().stationary_cooperation(),
        })
        .collect();
    let demands: BTreeSet<u32> = scenario.sessions.iter().map(|s| s.demand()).collect();
    let blocking = demands
        .iter()
        .map(|&d| {
            Ok(BlockingFigure {
                demand: d,
                probability: blocking_over(&laws, d, None)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut classes: Vec<(u32, f64)> = Vec::new();
    for s in &scenario.sessions {
        if let SessionLength::Geometric(c) = s.length() {
            if !classes.contains(&(s.demand(), c)) {
                classes.push((s.demand(), c));
            }
        }
    }
    let mut noncompletion = Vec::new();
    for (spec, (_, law)) in scenario.bands.iter().zip(&laws) {
        let chain = spec.chain()?;
        let gamma = spec.disposition().stationary_cooperation();
        for &(d, c) in &classes {
            if d > spec.capacity || law.short_of(d) == 1.0 {
                continue;
            }
            noncompletion.push(NoncompletionFigure {
                band: spec.id,
                demand: d,
                completion_prob: c,
                gamma,
                probability: chain.noncompletion_from(&law.law, d, c, gamma)?,
            });
        }
    }
    Ok(Analysis {
        bands,
        blocking,
        noncompletion,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub metric: String,
    pub analytic: f64,
    pub simulated: f64,
    pub abs_diff: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub seed: u64,
    pub arrivals: u64,
    pub admitted: u64,
    pub rows: Vec<ComparisonRow>,
    pub notes: Vec<String>,
}

impl ComparisonReport {
    pub fn row(&self, metric: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.metric == metric)
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("{:<16} {:>12} {:>12} {:>12}\n", "metric", "analytic", "simulated", "abs_diff");
        for r in &self.rows {
            out.push_str(&format!(
                "{:<16} {:>12.6} {:>12.6} {:>12.6}\n",
                r.metric, r.analytic, r.simulated, r.abs_diff
            ));
        }
        for n in &self.notes {
            out.push_str(&format!("# {n}\n"));
        }
        out
    }
}

fn assumption(msg: &str) -> Error {
    Error::Assumption(msg.to_string())
}

/// Inputs of the single-band non-completion solve, after checking the
/// scenario fits it.
struct NoncompletionCase {
    demand: u32,
    completion: f64,
    gamma: f64,
}

fn noncompletion_case(scenario: &Scenario) -> Result<Option<NoncompletionCase>> {
    if scenario.bands.len() != 1 {
        return Ok(None);
    }
    if scenario.handover.latency != 0 {
        return Err(assumption("non-completion analytic assumes zero latency (handover.latency)"));
    }
    if scenario.negotiation.latency != 0 {
        return Err(assumption("non-completion analytic assumes zero latency (negotiation.latency)"));
    }
    if scenario.negotiation.channels != 1 {
        return Err(assumption(
            "non-completion analytic assumes a one-channel grant (negotiation.channels = 1)",
        ));
    }
    let disposition = scenario.bands[0].disposition();
    if !disposition.is_memoryless() {
        return Err(assumption(
            "non-completion analytic assumes independent negotiation outcomes (alpha + beta = 1)",
        ));
    }
    let mut class = None;
    for s in &scenario.sessions {
        let SessionLength::Geometric(c) = s.length() else {
            unreachable!("fixed lengths rejected earlier");
        };
        match class {
            None => class = Some((s.demand(), c)),
            Some(k) if k == (s.demand(), c) => {}
            Some(_) => {
                return Err(assumption(
                    "non-completion analytic assumes one session class (same demand and completion_prob)",
                ))
            }
        }
    }
    Ok(class.map(|(demand, completion)| NoncompletionCase {
        demand,
        completion,
        gamma: disposition.beta,
    }))
}

/// Runs the scenario and sets the empirical blocking and non-completion
/// rates beside their analytic values.
pub fn compare(scenario: &Scenario) -> Result<ComparisonReport> {
    scenario.validate()?;
    if scenario
        .sessions
        .iter()
        .any(|s| matches!(s.length(), SessionLength::Fixed(_)))
    {
        return Err(assumption("compare requires geometric session lengths (completion_prob)"));
    }
    let nc_case = noncompletion_case(scenario)?;
    let laws = laws(scenario)?;

    let RunOutput { metrics, .. } = run(scenario)?;

    let mut expected_blocked = 0.0;
    let mut arrivals = 0u64;
    for s in &scenario.sessions {
        let b = blocking_over(&laws, s.demand(), s.band)?;
        let n = s.arrivals().filter(|&t| t < scenario.horizon).count() as u64;
        expected_blocked += b * n as f64;
        arrivals += n;
    }
    let analytic_blocking = if arrivals == 0 {
        0.0
    } else {
        expected_blocked / arrivals as f64
    };
    let mut rows = vec![ComparisonRow {
        metric: "blocking".into(),
        analytic: analytic_blocking,
        simulated: metrics.empirical_blocking,
        abs_diff: (analytic_blocking - metrics.empirical_blocking).abs(),
    }];
    let mut notes = Vec::new();
    match nc_case {
        Some(case) => {
            let (_, law) = &laws[0];
            let analytic = if law.short_of(case.demand) == 1.0 {
                0.0
            } else {
                scenario.bands[0]
                    .chain()?
                    .noncompletion_from(&law.law, case.demand, case.completion, case.gamma)?
            };
            rows.push(ComparisonRow {
                metric: "noncompletion".into(),
                analytic,
                simulated: metrics.empirical_noncompletion,
                abs_diff: (analytic - metrics.empirical_noncompletion).abs(),
            });
        }
        None if scenario.bands.len() != 1 => {
            notes.push("non-completion skipped: the analytic solve covers a single band with no handover target".into())
        }
        None => notes.push("non-completion skipped: no sessions".into()),
    }
    Ok(ComparisonReport {
        seed: scenario.seed,
        arrivals: metrics.arrivals,
        admitted: metrics.admitted,
        rows,
        notes,
    })
}
