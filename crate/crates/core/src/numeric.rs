//! Small numeric helpers shared across the crate.

use std::f64::consts::TAU;

/// Pairwise (cascade) summation. Deterministic for a fixed slice order and
/// accurate to O(log n) rounding, independent of chunking or thread count.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n if n <= 16 => {
            let mut acc = 0.0;
            for v in values {
                acc += v;
            }
            acc
        }
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Map an angle into [0, 2π).
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can return exactly TAU when x is a tiny negative number.
    if r >= TAU {
        r - TAU
    } else {
        r
    }
}

/// Signed distance θ₁ → θ₂ along the shorter arc, in (−π, π].
pub fn wrap_delta(from: f64, to: f64) -> f64 {
    let mut d = (to - from).rem_euclid(TAU);
    if d > std::f64::consts::PI {
        d -= TAU;
    }
    d
}

/// 5-point Gauss-Legendre nodes and weights on [0, 1].
pub const GAUSS5: [(f64, f64); 5] = [
    (0.046910077030668074, 0.11846344252809454),
    (0.23076534494715845, 0.23931433524968324),
    (0.5, 0.28444444444444444),
    (0.7692346550528415, 0.23931433524968324),
    (0.9530899229693319, 0.11846344252809454),
];

/// Relative difference |a − b| / max(|a|, |b|, floor).
pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs()).max(1e-300);
    (a - b).abs() / scale
}
