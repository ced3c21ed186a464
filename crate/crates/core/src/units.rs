//! Nats ↔ bits.

use std::f64::consts::LN_2;

/// log₂(e).
pub const LOG2_E: f64 = std::f64::consts::LOG2_E;

pub fn nats_to_bits(x: f64) -> f64 {
    x * LOG2_E
}

pub fn bits_to_nats(x: f64) -> f64 {
    x * LN_2
}

/// Converts a variance in nats² to bits².
pub fn nats2_to_bits2(v: f64) -> f64 {
    v * LOG2_E * LOG2_E
}
