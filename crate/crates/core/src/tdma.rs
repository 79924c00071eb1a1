//! Layer-2 bootstrap over a slotted TDMA schedule.
//!
//! Time is split into rounds, rounds into frames and frames into `N`
//! timeslots; node `i` owns slot `i` of every frame. Phase 1 rounds have
//! `M` frames, frame `m` bound to channel `m`, and each node beacons on
//! every channel it supports so neighbours learn their common channels.
//! Phase 2 rounds have one frame; nodes flood their candidate channel set
//! and intersect what they hear, converging on the channels common to all
//! nodes after as many rounds as the graph diameter.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ValidationErrors};

pub type NodeId = usize;
pub type Channel = u32;
pub type ChannelSet = BTreeSet<Channel>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotOrder {
    /// Node `i` transmits in slot `i`.
    #[default]
    NodeIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TdmaConfig {
    pub node_count: usize,
    pub channel_count: u32,
    pub diameter_bound: u32,
    pub slot_order: SlotOrder,
}

impl TdmaConfig {
    pub fn new(node_count: usize, channel_count: u32, diameter_bound: u32) -> Result<Self> {
        for (name, v) in [
            ("node_count", node_count as u64),
            ("channel_count", u64::from(channel_count)),
            ("diameter_bound", u64::from(diameter_bound)),
        ] {
            if v == 0 {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "must be at least 1".into(),
                });
            }
        }
        Ok(TdmaConfig {
            node_count,
            channel_count,
            diameter_bound,
            slot_order: SlotOrder::NodeIndex,
        })
    }

    pub fn transmit_slot(&self, node: NodeId) -> Result<usize> {
        if node >= self.node_count {
            return Err(Error::NodeOutOfRange {
                node,
                nodes: self.node_count,
            });
        }
        match self.slot_order {
            SlotOrder::NodeIndex => Ok(node),
        }
    }

    pub fn frames_per_round(&self, phase: u32) -> Result<usize> {
        match phase {
            1 => Ok(self.channel_count as usize),
            2 => Ok(1),
            other => Err(Error::InvalidPhase(other)),
        }
    }

    /// Slots in one round of `phase`.
    pub fn round_length(&self, phase: u32) -> Result<usize> {
        Ok(self.frames_per_round(phase)? * self.node_count)
    }

    fn slot_owner(&self, slot: usize) -> NodeId {
        match self.slot_order {
            SlotOrder::NodeIndex => slot,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeProfile {
    pub id: NodeId,
    pub channels: ChannelSet,
}

/// One over-the-air transmission in the schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Transmission {
    pub phase: u32,
    pub round: u32,
    pub frame: usize,
    pub slot: usize,
    pub transmitter: NodeId,
    pub channel: Channel,
}

/// Number of `(phase, round, frame, slot)` cells with more than one
/// distinct transmitter.
pub fn count_collisions(log: &[Transmission]) -> usize {
    let mut cells: HashMap<(u32, u32, usize, usize), BTreeSet<NodeId>> = HashMap::new();
    for t in log {
        cells
            .entry((t.phase, t.round, t.frame, t.slot))
            .or_default()
            .insert(t.transmitter);
    }
    cells.values().filter(|tx| tx.len() > 1).count()
}

/// Per node: neighbour id -> channels both can use.
pub type NeighborTables = Vec<BTreeMap<NodeId, ChannelSet>>;

/// Undirected adjacency lists.
pub type Adjacency = Vec<BTreeSet<NodeId>>;

pub fn adjacency(node_count: usize, edges: &[(NodeId, NodeId)]) -> Adjacency {
    let mut adj = vec![BTreeSet::new(); node_count];
    for &(a, b) in edges {
        if a != b {
            adj[a].insert(b);
            adj[b].insert(a);
        }
    }
    adj
}

/// Phase 1: one round of `M` frames. Returns the neighbour tables and the
/// transmissions made.
pub fn run_phase1(
    config: &TdmaConfig,
    profiles: &[NodeProfile],
    adj: &Adjacency,
) -> (NeighborTables, Vec<Transmission>) {
    let mut tables: NeighborTables = adj
        .iter()
        .map(|ns| ns.iter().map(|&j| (j, ChannelSet::new())).collect())
        .collect();
    let mut log = Vec::new();
    for frame in 0..config.channel_count as usize {
        let channel = frame as Channel;
        for slot in 0..config.node_count {
            let tx = config.slot_owner(slot);
            if !profiles[tx].channels.contains(&channel) {
                continue;
            }
            log.push(Transmission {
                phase: 1,
                round: 0,
                frame,
                slot,
                transmitter: tx,
                channel,
            });
            for &rx in &adj[tx] {
                if profiles[rx].channels.contains(&channel) {
                    tables[rx].entry(tx).or_default().insert(channel);
                }
            }
        }
    }
    (tables, log)
}

/// Phase 2: `rounds` single-frame rounds of candidate flooding.
pub fn run_phase2(
    config: &TdmaConfig,
    tables: &NeighborTables,
    profiles: &[NodeProfile],
    rounds: u32,
) -> (Vec<ChannelSet>, Vec<Transmission>) {
    let mut candidates: Vec<ChannelSet> = profiles.iter().map(|p| p.channels.clone()).collect();
    let mut log = Vec::new();
    for round in 0..rounds {
        for slot in 0..config.node_count {
            let tx = config.slot_owner(slot);
            let payload = candidates[tx].clone();
            for (&rx, common) in &tables[tx] {
                let Some(&channel) = common.first() else {
                    continue;
                };
                log.push(Transmission {
                    phase: 2,
                    round,
                    frame: 0,
                    slot,
                    transmitter: tx,
                    channel,
                });
                candidates[rx].retain(|c| payload.contains(c));
            }
        }
    }
    (candidates, log)
}

/// Largest shortest-path distance within any connected component of the
/// graph restricted to pairs sharing a channel, and whether that graph is
/// connected.
pub fn restricted_diameter(tables: &NeighborTables) -> (u32, bool) {
    let n = tables.len();
    let mut diameter = 0;
    let mut connected = true;
    for start in 0..n {
        let mut dist = vec![u32::MAX; n];
        dist[start] = 0;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for (&v, common) in &tables[u] {
                if !common.is_empty() && dist[v] == u32::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        for &d in &dist {
            if d == u32::MAX {
                connected = false;
            } else {
                diameter = diameter.max(d);
            }
        }
    }
    (diameter, connected)
}

/// JSON topology document: nodes with channel sets plus an edge list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topology {
    pub channels: u32,
    #[serde(default)]
    pub diameter_bound: Option<u32>,
    pub nodes: Vec<NodeProfile>,
    #[serde(default)]
    pub edges: Vec<(NodeId, NodeId)>,
}

impl Topology {
    pub fn validate(&self) -> Result<()> {
        let mut errs = ValidationErrors::default();
        if self.channels == 0 {
            errs.push("channels", "must be at least 1");
        }
        if self.nodes.is_empty() {
            errs.push("nodes", "at least one node is required");
        }
        if self.diameter_bound == Some(0) {
            errs.push("diameter_bound", "must be at least 1");
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if node.id != i {
                errs.push(format!("nodes[{i}].id"), format!("expected {i}, got {}", node.id));
            }
            if node.channels.is_empty() {
                errs.push(format!("nodes[{i}].channels"), "must be nonempty");
            }
            if let Some(&c) = node.channels.iter().find(|&&c| c >= self.channels) {
                errs.push(
                    format!("nodes[{i}].channels"),
                    format!("channel {c} outside 0..{}", self.channels),
                );
            }
        }
        for (k, &(a, b)) in self.edges.iter().enumerate() {
            if a >= self.nodes.len() || b >= self.nodes.len() {
                errs.push(format!("edges[{k}]"), format!("({a}, {b}) references a missing node"));
            }
        }
        errs.into_result()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscoveryResult {
    pub config: TdmaConfig,
    pub neighbor_tables: NeighborTables,
    pub candidates: Vec<ChannelSet>,
    /// Set when every node converged on the same candidate.
    pub global_common: Option<ChannelSet>,
    pub connected: bool,
    pub restricted_diameter: u32,
    pub phase1_round_slots: usize,
    pub phase2_round_slots: usize,
    pub transmissions: usize,
    pub collisions: usize,
}

/// Runs both phases. Without an explicit bound, phase 2 runs for the
/// restricted graph's diameter (at least one round).
pub fn discover(topology: &Topology) -> Result<DiscoveryResult> {
    topology.validate()?;
    let n = topology.nodes.len();
    let adj = adjacency(n, &topology.edges);
    let probe = TdmaConfig::new(n, topology.channels, 1)?;
    let (tables, mut log) = run_phase1(&probe, &topology.nodes, &adj);
    let (diameter, connected) = restricted_diameter(&tables);
    let rounds = topology.diameter_bound.unwrap_or(diameter.max(1));
    let config = TdmaConfig::new(n, topology.channels, rounds)?;
    let (candidates, log2) = run_phase2(&config, &tables, &topology.nodes, rounds);
    log.extend(log2);
    let global_common = candidates
        .windows(2)
        .all(|w| w[0] == w[1])
        .then(|| candidates[0].clone());
    Ok(DiscoveryResult {
        config,
        phase1_round_slots: config.round_length(1)?,
        phase2_round_slots: config.round_length(2)?,
        neighbor_tables: tables,
        candidates,
        global_common,
        connected,
        restricted_diameter: diameter,
        transmissions: log.len(),
        collisions: count_collisions(&log),
    })
}
