//! Wireless resource-allocation scenarios solved with two-sided matching:
//! cognitive-radio channel access, uplink small-cell association with
//! backhaul congestion, and device-to-device spectrum sharing.

pub mod cr;
pub mod cr_dynamic;
pub mod d2d;
pub mod error;
pub mod hetnet;
pub mod radio;
pub mod seed;

pub use error::{Result, ScenarioError};
