//! Unambiguous state extraction on the receiver side.
//!
//! After the Bell-measurement correction, the receiver couples qubit `B` to
//! an auxiliary qubit `b` prepared in `|0⟩`, applies a controlled unitary
//! built from the channel's amplitude ratio, and measures `b` in the `σz`
//! basis. Outcome `0_b` is the success (extraction) outcome, `1_b` the
//! failure. The ratio comes from the channel only, never from the input
//! state: the receiver does not know `|ψ⟩`.
//!
//! On both branches success means `b` is found in `|0⟩`. For the Ψ branch
//! this is the outcome whose state is the quasi-extracted `|ψ⟩`, even though
//! the rotation there acts when `B` is `|0⟩`.

use serde::Serialize;

use crate::channels::{PureChannel, XState};
use crate::error::{Error, Result};
use crate::qmath::{
    self, basis_projector, identity2, sigma_x, tensor, Matrix, PureState2, NULL_PROBABILITY,
};
use crate::teleport::Branch;

/// Tolerance on the ratio upper bound and on unitarity.
pub const UNITARY_TOL: f64 = 1e-12;

/// Controlled unitary on `B ⊗ b`.
#[derive(Debug, Clone, PartialEq)]
pub struct UseUnitary {
    pub matrix: Matrix,
    pub ratio: f64,
    pub branch: Branch,
}

/// `U_b|0⟩ = r|0⟩ − √(1−r²)|1⟩`, `U_b|1⟩ = √(1−r²)|0⟩ + r|1⟩`.
fn rotation(ratio: f64) -> Matrix {
    let s = (1.0 - ratio * ratio).max(0.0).sqrt();
    Matrix::from_real_rows([[ratio, s], [-s, ratio]]).expect("qubit")
}

/// Builds `Ū = |0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ U_b` and `Ü = (σx ⊗ I)·Ū·(σx ⊗ I)`.
pub fn build_use_unitaries(ratio: f64) -> Result<(UseUnitary, UseUnitary)> {
    if ratio.is_nan() || ratio <= 0.0 {
        return Err(Error::ExtractionImpossible);
    }
    if ratio > 1.0 + UNITARY_TOL {
        return Err(Error::RatioAboveOne { ratio });
    }
    let ratio = ratio.min(1.0);
    let u_bar = &tensor(&basis_projector(0), &identity2())?
        + &tensor(&basis_projector(1), &rotation(ratio))?;
    let flip = tensor(&sigma_x(), &identity2())?;
    let u_ddot = &(&flip * &u_bar) * &flip;
    Ok((
        UseUnitary {
            matrix: u_bar,
            ratio,
            branch: Branch::Bar,
        },
        UseUnitary {
            matrix: u_ddot,
            ratio,
            branch: Branch::Ddot,
        },
    ))
}

/// Pick the unitary for `branch` from a pair returned by [`build_use_unitaries`].
pub fn for_branch<'a>(pair: &'a (UseUnitary, UseUnitary), branch: Branch) -> &'a UseUnitary {
    match branch {
        Branch::Bar => &pair.0,
        Branch::Ddot => &pair.1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UseResult {
    pub success_prob: f64,
    pub success_state: Option<Matrix>,
    pub failure_prob: f64,
    pub failure_state: Option<Matrix>,
    pub branch: Branch,
}

impl UseResult {
    fn from_unnormalized(success: Matrix, failure: Matrix, total: f64, branch: Branch) -> Self {
        let split = |m: Matrix| {
            let p = m.trace().re / total;
            if p < NULL_PROBABILITY {
                (0.0, None)
            } else {
                (p, Some(m.scale_real(1.0 / (p * total))))
            }
        };
        let (success_prob, success_state) = split(success);
        let (failure_prob, failure_state) = split(failure);
        Self {
            success_prob,
            success_state,
            failure_prob,
            failure_state,
            branch,
        }
    }
}

/// Total extraction probability for a pure channel, `2α² = 1 − √(1−C²)`.
pub fn extraction_probability(ch: &PureChannel) -> f64 {
    2.0 * ch.alpha() * ch.alpha()
}

/// Total quasi-extraction probability for an X-state,
/// `2·r11 + r33 + r11·r22/r44`.
pub fn quasi_extraction_probability(x: &XState) -> Result<f64> {
    if x.r11() <= 0.0 {
        return Err(Error::ExtractionImpossible);
    }
    Ok(2.0 * x.r11() + x.r33() + x.r11() * x.r22() / x.r44())
}

/// Extraction on a pure-channel branch. Success returns `|ψ⟩` exactly with
/// conditional probability `α²/p̄` (or `α²/p̈`).
pub fn use_pure(psi: &PureState2, ch: &PureChannel, branch: Branch) -> Result<UseResult> {
    if ch.alpha() <= 0.0 {
        return Err(Error::ExtractionImpossible);
    }
    let a2 = ch.alpha() * ch.alpha();
    let b2 = ch.beta() * ch.beta();
    let (p, failure) = match branch {
        Branch::Bar => (a2 * psi.p0() + b2 * psi.p1(), basis_projector(1)),
        Branch::Ddot => (b2 * psi.p0() + a2 * psi.p1(), basis_projector(0)),
    };
    let success_prob = (a2 / p).min(1.0);
    let failure_prob = 1.0 - success_prob;
    let failure_state = (failure_prob >= NULL_PROBABILITY).then_some(failure);
    Ok(UseResult {
        success_prob,
        success_state: Some(psi.density()),
        failure_prob: if failure_state.is_some() { failure_prob } else { 0.0 },
        failure_state,
        branch,
    })
}

/// Closed-form quasi-extraction on an X-state branch.
pub fn use_x_closed(psi: &PureState2, x: &XState, branch: Branch) -> Result<UseResult> {
    if x.r11() <= 0.0 || x.r44() <= 0.0 {
        return Err(Error::ExtractionImpossible);
    }
    let (t0, t1) = (psi.p0(), psi.p1());
    let (r11, r22, r33, r44) = (x.r11(), x.r22(), x.r33(), x.r44());
    let k = r11 / r44;
    let s = k.sqrt();
    let coh = psi.coherence();
    let off = (coh * x.r14() + coh.conj() * x.r23()) * s;

    // Unnormalized branch weights p̄ and p̈ times the success/failure parts.
    let (total, diag, failure) = match branch {
        Branch::Bar => {
            let p_bar = (r11 + r22) * t0 + (r33 + r44) * t1;
            let diag = [r11 * t0 + r33 * t1, k * r22 * t0 + r11 * t1];
            (p_bar, diag, basis_projector(1))
        }
        Branch::Ddot => {
            let p_ddot = (r44 + r33) * t0 + (r22 + r11) * t1;
            let diag = [r11 * t0 + k * r22 * t1, r33 * t0 + r11 * t1];
            (p_ddot, diag, basis_projector(0))
        }
    };
    if total < NULL_PROBABILITY {
        return Ok(UseResult {
            success_prob: 0.0,
            success_state: None,
            failure_prob: 0.0,
            failure_state: None,
            branch,
        });
    }
    let mut success = Matrix::diag(&diag)?;
    success[(0, 1)] = off;
    success[(1, 0)] = off.conj();
    let failure = failure.scale_real(total - diag[0] - diag[1]);
    Ok(UseResult::from_unnormalized(success, failure, total, branch))
}

/// Simulates extraction on any single-qubit branch state: prepares
/// `ρ ⊗ |0⟩⟨0|`, applies `u`, measures `b` and traces it out.
pub fn use_bruteforce(branch_state: &Matrix, u: &UseUnitary) -> Result<UseResult> {
    if branch_state.dim() != 2 {
        return Err(Error::DimensionMismatch {
            left: 2,
            right: branch_state.dim(),
        });
    }
    let joint = tensor(branch_state, &basis_projector(0))?.conjugate_by(&u.matrix)?;
    let keep_b = |k: usize| -> Result<(f64, Option<Matrix>)> {
        let proj = qmath::project_unchecked(&joint, &tensor(&identity2(), &basis_projector(k))?);
        let state = proj
            .post
            .map(|post| qmath::partial_trace(&post, &[0]))
            .transpose()?;
        Ok((proj.probability, state))
    };
    let (success_prob, success_state) = keep_b(0)?;
    let (failure_prob, failure_state) = keep_b(1)?;
    Ok(UseResult {
        success_prob,
        success_state,
        failure_prob,
        failure_state,
        branch: u.branch,
    })
}
