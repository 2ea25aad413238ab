//! Bell-measurement stage of teleportation.
//!
//! Two independent routes produce the receiver's corrected states: closed
//! forms for the pure and X-state channels, and a full simulation that
//! projects the three-qubit state `|ψ⟩⟨ψ|_a ⊗ ρ_AB` onto each Bell state of
//! `aA` and traces out the sender's qubits.

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::channels::{PureChannel, XState};
use crate::error::{Error, Result};
use crate::qmath::{
    self, identity2, re, sigma_x, sigma_z, tensor, Matrix, PureState2, NULL_PROBABILITY,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellOutcome {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellOutcome {
    pub const ALL: [BellOutcome; 4] = [
        BellOutcome::PhiPlus,
        BellOutcome::PhiMinus,
        BellOutcome::PsiPlus,
        BellOutcome::PsiMinus,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Φ outcomes feed the "bar" branch, Ψ outcomes the "ddot" branch.
    pub fn branch(self) -> Branch {
        match self {
            BellOutcome::PhiPlus | BellOutcome::PhiMinus => Branch::Bar,
            BellOutcome::PsiPlus | BellOutcome::PsiMinus => Branch::Ddot,
        }
    }

    pub fn ket(self) -> [qmath::C64; 4] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (z, p, m) = (re(0.0), re(h), re(-h));
        match self {
            BellOutcome::PhiPlus => [p, z, z, p],
            BellOutcome::PhiMinus => [p, z, z, m],
            BellOutcome::PsiPlus => [z, p, p, z],
            BellOutcome::PsiMinus => [z, p, m, z],
        }
    }

    pub fn projector(self) -> Matrix {
        Matrix::outer(&self.ket()).expect("two-qubit ket")
    }

    pub fn correction(self) -> Correction {
        match self {
            BellOutcome::PhiPlus => Correction::Identity,
            BellOutcome::PhiMinus => Correction::Z,
            BellOutcome::PsiPlus => Correction::X,
            BellOutcome::PsiMinus => Correction::XZ,
        }
    }
}

impl fmt::Display for BellOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BellOutcome::PhiPlus => "phi+",
            BellOutcome::PhiMinus => "phi-",
            BellOutcome::PsiPlus => "psi+",
            BellOutcome::PsiMinus => "psi-",
        })
    }
}

/// Unitary the receiver's qubit carries after a given Bell outcome. The
/// receiver undoes it by applying its adjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Correction {
    Identity,
    Z,
    X,
    /// `σx·σz`
    XZ,
}

impl Correction {
    pub fn unitary(self) -> Matrix {
        match self {
            Correction::Identity => identity2(),
            Correction::Z => sigma_z(),
            Correction::X => sigma_x(),
            Correction::XZ => &sigma_x() * &sigma_z(),
        }
    }

    /// `U†·ρ·U`.
    pub fn undo(self, rho: &Matrix) -> Result<Matrix> {
        rho.conjugate_by(&self.unitary().dagger())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    Bar,
    Ddot,
}

/// The four Bell projectors on `aA`.
#[derive(Debug, Clone)]
pub struct BellBasis {
    pub projectors: [Matrix; 4],
}

impl BellBasis {
    pub fn new() -> Self {
        Self {
            projectors: BellOutcome::ALL.map(BellOutcome::projector),
        }
    }

    /// Largest deviation from `Σ P_k = I` and `P_j P_k = δ_jk P_k`.
    pub fn completeness_error(&self) -> f64 {
        let mut sum = Matrix::zeros(4).unwrap();
        let mut worst = 0.0f64;
        for (j, pj) in self.projectors.iter().enumerate() {
            sum = &sum + pj;
            for (k, pk) in self.projectors.iter().enumerate() {
                let prod = pj * pk;
                let expected = if j == k { pj.clone() } else { Matrix::zeros(4).unwrap() };
                worst = worst.max(prod.max_abs_diff(&expected).unwrap());
            }
        }
        worst.max(sum.max_abs_diff(&Matrix::identity(4).unwrap()).unwrap())
    }
}

impl Default for BellBasis {
    fn default() -> Self {
        Self::new()
    }
}

/// One branch of the simulated protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct TeleportOutcome {
    pub bell: BellOutcome,
    pub probability: f64,
    /// Receiver state after the correction; `None` for a null outcome.
    pub corrected_state: Option<Matrix>,
    pub correction: Correction,
}

/// Receiver states after the correction, grouped by branch.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchPair {
    pub p_bar: f64,
    pub rho_bar: Option<Matrix>,
    pub p_ddot: f64,
    pub rho_ddot: Option<Matrix>,
}

impl BranchPair {
    pub fn get(&self, branch: Branch) -> (f64, Option<&Matrix>) {
        match branch {
            Branch::Bar => (self.p_bar, self.rho_bar.as_ref()),
            Branch::Ddot => (self.p_ddot, self.rho_ddot.as_ref()),
        }
    }

    fn from_unnormalized(bar: Matrix, ddot: Matrix) -> Self {
        let (p_bar, rho_bar) = normalize(bar);
        let (p_ddot, rho_ddot) = normalize(ddot);
        Self {
            p_bar,
            rho_bar,
            p_ddot,
            rho_ddot,
        }
    }
}

fn normalize(m: Matrix) -> (f64, Option<Matrix>) {
    let p = m.trace().re;
    if p < NULL_PROBABILITY {
        (0.0, None)
    } else {
        (p, Some(m.scale_real(1.0 / p)))
    }
}

/// Closed-form outcomes for a pure channel:
/// `|ψ̄⟩ ∝ α⟨0|ψ⟩|0⟩ + β⟨1|ψ⟩|1⟩` and `|ψ̈⟩ ∝ β⟨0|ψ⟩|0⟩ + α⟨1|ψ⟩|1⟩`.
pub fn teleport_pure_closed(psi: &PureState2, ch: &PureChannel) -> BranchPair {
    let (a, b) = (ch.alpha(), ch.beta());
    let bar = Matrix::outer(&[psi.a0() * a, psi.a1() * b]).expect("qubit");
    let ddot = Matrix::outer(&[psi.a0() * b, psi.a1() * a]).expect("qubit");
    BranchPair::from_unnormalized(bar, ddot)
}

/// Closed-form corrected states for an X-state channel.
pub fn teleport_x_closed(psi: &PureState2, x: &XState) -> BranchPair {
    let (t0, t1) = (psi.p0(), psi.p1());
    let coh = psi.coherence();
    let (r11, r22, r33, r44, r14, r23) = (x.r11(), x.r22(), x.r33(), x.r44(), x.r14(), x.r23());

    // ⟨0|·|1⟩ entry shared by both branches: ρ14·⟨0|ψ⟩⟨ψ|1⟩ + ρ23·⟨1|ψ⟩⟨ψ|0⟩.
    let off = coh * r14 + coh.conj() * r23;

    let mut bar = Matrix::diag(&[r11 * t0 + r33 * t1, r22 * t0 + r44 * t1]).expect("qubit");
    bar[(0, 1)] = off;
    bar[(1, 0)] = off.conj();

    let mut ddot = Matrix::diag(&[r44 * t0 + r22 * t1, r33 * t0 + r11 * t1]).expect("qubit");
    ddot[(0, 1)] = off;
    ddot[(1, 0)] = off.conj();

    BranchPair::from_unnormalized(bar, ddot)
}

fn measurement_operators() -> &'static [Matrix; 4] {
    static OPS: OnceLock<[Matrix; 4]> = OnceLock::new();
    OPS.get_or_init(|| {
        BellOutcome::ALL.map(|b| tensor(&b.projector(), &identity2()).expect("dim 8"))
    })
}

/// Full three-qubit simulation of the Bell measurement for any two-qubit
/// channel `rho_ab`. Outcomes are listed in [`BellOutcome::ALL`] order.
pub fn teleport_bruteforce(psi: &PureState2, rho_ab: &Matrix) -> Result<Vec<TeleportOutcome>> {
    if rho_ab.dim() != 4 {
        return Err(Error::DimensionMismatch {
            left: 4,
            right: rho_ab.dim(),
        });
    }
    let joint = tensor(&psi.density(), rho_ab)?;
    BellOutcome::ALL
        .iter()
        .zip(measurement_operators())
        .map(|(&bell, op)| {
            let proj = qmath::project_unchecked(&joint, op);
            let corrected_state = match proj.post {
                Some(post) => {
                    let rho_b = qmath::partial_trace(&post, &[2])?;
                    Some(bell.correction().undo(&rho_b)?)
                }
                None => None,
            };
            Ok(TeleportOutcome {
                bell,
                probability: proj.probability,
                corrected_state,
                correction: bell.correction(),
            })
        })
        .collect()
}
