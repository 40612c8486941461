//! Uplink analysis and optimization for user-centric cell-free massive MIMO
//! with mixed-resolution ADCs.
//!
//! The crate is organised bottom-up:
//!
//! * [`channel`]: network drops, three-slope path loss, pilots, MMSE gains.
//! * [`association`]: user-centric AP/user association and selection masks.
//! * [`adc_energy`]: ADC impairment factors, selection tensors, energy model.
//! * [`rate`]: closed-form rates under MRC and its Monte Carlo check.
//! * [`power`]: geometric-programming power control by successive convex
//!   approximation.
//! * [`antenna`]: binary particle swarm and exhaustive antenna selection.
//! * [`experiments`]: schemes, sweeps and the studies behind the CLI.

pub mod adc_energy;
pub mod antenna;
pub mod association;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod power;
pub mod rate;
pub mod rng;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/association.md")]
    mod association {}
    #[doc = include_str!("../../../book/src/adc-energy.md")]
    mod adc_energy {}
    #[doc = include_str!("../../../book/src/rates.md")]
    mod rates {}
    #[doc = include_str!("../../../book/src/power-control.md")]
    mod power_control {}
    #[doc = include_str!("../../../book/src/antenna-selection.md")]
    mod antenna_selection {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
