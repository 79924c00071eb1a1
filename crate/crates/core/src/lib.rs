//! Spectrum sharing between a licensed primary user (PU) and a cognitive
//! secondary user (SU).
//!
//! The SU watches how many of a band's channels the PU occupies and reacts
//! in one of three modes: keep transmitting (Normal), negotiate for a
//! channel back (Warning), or hand over to another band (Failure). The
//! [`sim`] engine plays this out over time; [`markov`] computes the
//! blocking and non-completion probabilities the simulation should
//! reproduce. [`tdma`] is a standalone layer-2 bootstrap tool.

pub mod cli;
pub mod error;
pub mod fsm;
pub mod handover;
pub mod learning;
pub mod markov;
pub mod negotiation;
pub mod qos;
pub mod sim;
pub mod spectrum;
pub mod tdma;

pub use error::{Error, Result};
