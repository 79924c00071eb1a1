//! Traffic classes and their network sensitivities.
//!
//! Sensitivities use a five-level scale (very low = 1 .. very high = 5).
//! A traffic type's channel demand is its bandwidth sensitivity, so video
//! conferencing (bandwidth 4) asks for 4 channels out of an 8-channel band.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficType {
    Voice,
    ECommerce,
    Transactions,
    Email,
    Telnet,
    CasualBrowsing,
    SeriousBrowsing,
    FileTransfers,
    VideoConferencing,
    Multicasting,
}

impl TrafficType {
    /// Table order.
    pub const ALL: [TrafficType; 10] = [
        TrafficType::Voice,
        TrafficType::ECommerce,
        TrafficType::Transactions,
        TrafficType::Email,
        TrafficType::Telnet,
        TrafficType::CasualBrowsing,
        TrafficType::SeriousBrowsing,
        TrafficType::FileTransfers,
        TrafficType::VideoConferencing,
        TrafficType::Multicasting,
    ];

    /// Human-readable row label.
    pub fn label(self) -> &'static str {
        match self {
            TrafficType::Voice => "Voice",
            TrafficType::ECommerce => "E-Commerce",
            TrafficType::Transactions => "Transactions",
            TrafficType::Email => "E-mail",
            TrafficType::Telnet => "Telnet",
            TrafficType::CasualBrowsing => "Casual browsing",
            TrafficType::SeriousBrowsing => "Serious browsing",
            TrafficType::FileTransfers => "File transfers",
            TrafficType::VideoConferencing => "Video conferencing",
            TrafficType::Multicasting => "Multicasting",
        }
    }

    /// Stable identifier used in scenario files.
    pub fn key(self) -> &'static str {
        match self {
            TrafficType::Voice => "voice",
            TrafficType::ECommerce => "e_commerce",
            TrafficType::Transactions => "transactions",
            TrafficType::Email => "email",
            TrafficType::Telnet => "telnet",
            TrafficType::CasualBrowsing => "casual_browsing",
            TrafficType::SeriousBrowsing => "serious_browsing",
            TrafficType::FileTransfers => "file_transfers",
            TrafficType::VideoConferencing => "video_conferencing",
            TrafficType::Multicasting => "multicasting",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for TrafficType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for TrafficType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TrafficType::ALL
            .into_iter()
            .find(|t| t.key() == s || t.label() == s)
            .ok_or_else(|| format!("unknown traffic type `{s}`"))
    }
}

/// A sensitivity level in 1..=5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Sensitivity(u8);

impl Sensitivity {
    pub const MIN: u8 = 1;
    pub const MAX: u8 = 5;

    pub fn new(level: u8) -> Option<Self> {
        (Self::MIN..=Self::MAX).contains(&level).then_some(Sensitivity(level))
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct QosProfile {
    pub bandwidth: Sensitivity,
    pub delay: Sensitivity,
    pub loss: Sensitivity,
    pub jitter: Sensitivity,
}

const fn row(bandwidth: u8, delay: u8, loss: u8, jitter: u8) -> QosProfile {
    QosProfile {
        bandwidth: Sensitivity(bandwidth),
        delay: Sensitivity(delay),
        loss: Sensitivity(loss),
        jitter: Sensitivity(jitter),
    }
}

// bandwidth, delay, loss, jitter
const TABLE: [QosProfile; 10] = [
    row(1, 4, 3, 4),
    row(2, 4, 4, 2),
    row(2, 4, 4, 2),
    row(2, 2, 4, 2),
    row(2, 3, 4, 2),
    row(2, 3, 3, 2),
    row(3, 4, 4, 2),
    row(4, 2, 3, 2),
    row(4, 4, 3, 4),
    row(4, 4, 4, 4),
];

pub fn qos_profile(t: TrafficType) -> QosProfile {
    TABLE[t.index()]
}

/// Number of channels a session of this type allocates.
pub fn channel_demand(t: TrafficType) -> u32 {
    u32::from(qos_profile(t).bandwidth.get())
}

/// Admission priority: sum of the four sensitivities. Higher goes first.
pub fn priority(t: TrafficType) -> u32 {
    let p = qos_profile(t);
    [p.bandwidth, p.delay, p.loss, p.jitter]
        .iter()
        .map(|s| u32::from(s.get()))
        .sum()
}

/// The sensitivity table as CSV, one row per traffic type in table order.
pub fn table_csv() -> String {
    let mut out = String::from("type,bandwidth,delay,loss,jitter\n");
    for t in TrafficType::ALL {
        let p = qos_profile(t);
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            t.label(),
            p.bandwidth.get(),
            p.delay.get(),
            p.loss.get(),
            p.jitter.get()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn levels(p: QosProfile) -> [u8; 4] {
        [p.bandwidth.get(), p.delay.get(), p.loss.get(), p.jitter.get()]
    }

    #[test]
    fn profile_rows() {
        assert_eq!(levels(qos_profile(TrafficType::VideoConferencing)), [4, 4, 3, 4]);
        assert_eq!(levels(qos_profile(TrafficType::Voice)), [1, 4, 3, 4]);
        assert_eq!(levels(qos_profile(TrafficType::Multicasting)), [4, 4, 4, 4]);
    }

    #[test]
    fn demand_is_bandwidth() {
        assert_eq!(channel_demand(TrafficType::VideoConferencing), 4);
        assert_eq!(channel_demand(TrafficType::Voice), 1);
        assert_eq!(channel_demand(TrafficType::Email), 2);
        for t in TrafficType::ALL {
            assert_eq!(channel_demand(t), u32::from(qos_profile(t).bandwidth.get()));
        }
    }

    #[test]
    fn priority_sums() {
        assert_eq!(priority(TrafficType::Multicasting), 16);
        assert_eq!(priority(TrafficType::Voice), 12);
        assert_eq!(priority(TrafficType::Email), 10);
        assert!(priority(TrafficType::VideoConferencing) >= priority(TrafficType::Email));
    }

    #[test]
    fn levels_in_scale() {
        for t in TrafficType::ALL {
            for s in levels(qos_profile(t)) {
                assert!(Sensitivity::new(s).is_some());
            }
        }
        assert!(Sensitivity::new(0).is_none());
        assert!(Sensitivity::new(6).is_none());
    }

    #[test]
    fn names_round_trip() {
        for t in TrafficType::ALL {
            assert_eq!(t.key().parse::<TrafficType>().unwrap(), t);
            let json = serde_json::to_string(&t).unwrap();
            assert_eq!(json, format!("\"{}\"", t.key()));
        }
        assert!("fax".parse::<TrafficType>().is_err());
    }
}
