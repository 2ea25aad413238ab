//! Concurrence thresholds above which each average fidelity beats the
//! classical value 2/3.
//!
//! Every fidelity here can be written as `2/3 + κ·(c14 − threshold)` with
//! `κ > 0`, so the sign of `c14 − threshold` decides quantum behaviour.

use serde::{Deserialize, Serialize};

use crate::channels::{x_concurrence, XState};
use crate::error::{Error, Result};

/// Half-width of the band around a threshold reported as [`Verdict::Boundary`].
pub const BOUNDARY_BAND: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Quantum,
    Classical,
    Boundary,
}

impl Verdict {
    /// Compares `value` against `threshold` with the boundary band.
    pub fn classify(value: f64, threshold: f64) -> Self {
        let d = value - threshold;
        if d.abs() <= BOUNDARY_BAND {
            Verdict::Boundary
        } else if d > 0.0 {
            Verdict::Quantum
        } else {
            Verdict::Classical
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::Quantum => "true",
            Verdict::Classical => "false",
            Verdict::Boundary => "boundary",
        }
    }

    pub fn is_quantum(self) -> bool {
        self == Verdict::Quantum
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub c14: f64,
    /// Plain teleportation: `(√r22 − √r33)²`.
    pub c_x_th: f64,
    /// Total fidelity with extraction.
    pub c_x_use_th: f64,
    /// Fidelity of the filtered (extracted) outcomes.
    pub c_x_use_0_th: f64,
    pub quantum_plain: Verdict,
    pub quantum_use_total: Verdict,
    pub quantum_use_filtered: Verdict,
}

/// `(√r22 − √r33)²`; defined for every X-state.
pub fn plain_threshold(x: &XState) -> f64 {
    let d = x.r22().sqrt() - x.r33().sqrt();
    d * d
}

pub fn compute_thresholds(x: &XState) -> Result<ThresholdReport> {
    if x.r11() <= 0.0 {
        return Err(Error::ExtractionImpossible);
    }
    let (r11, r22, r33, r44) = (x.r11(), x.r22(), x.r33(), x.r44());
    let c14 = x_concurrence(x).c14;
    let c_x_th = plain_threshold(x);
    let c_x_use_th = c_x_th + ((r44 / r11).sqrt() - 1.0) * (r22 + r33);
    let d = (r11 * r22).sqrt() - (r33 * r44).sqrt();
    let c_x_use_0_th = d * d / (r11 * r44).sqrt();
    Ok(ThresholdReport {
        c14,
        c_x_th,
        c_x_use_th,
        c_x_use_0_th,
        quantum_plain: Verdict::classify(c14, c_x_th),
        quantum_use_total: Verdict::classify(c14, c_x_use_th),
        quantum_use_filtered: Verdict::classify(c14, c_x_use_0_th),
    })
}

/// Whether filtering after extraction needs less entanglement than plain
/// teleportation: `r33 < r22·√(r11/r44)`.
pub fn threshold_inversion_region(x: &XState) -> bool {
    x.r33() < x.r22() * x.ratio()
}
