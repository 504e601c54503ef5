//! Synthesis, simulation and characterization of acoustic-resonator ladder
//! filters built from MBVD resonator models.

pub mod mbvd;
pub mod network;
pub mod sweep;
pub mod ladder;
pub mod metrics;
pub mod optim;
pub mod fitting;
pub mod touchstone;
