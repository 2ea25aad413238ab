//! End-to-end protocols that feed [`crate::fidelity::average_fidelity`].

use serde::{Deserialize, Serialize};

use crate::channels::{PureChannel, XState};
use crate::error::Result;
use crate::fidelity::{OutcomeKind, Protocol, ProtocolOutcome};
use crate::qmath::{basis_projector, Matrix, PureState2};
use crate::teleport::{
    teleport_bruteforce, teleport_pure_closed, teleport_x_closed, Branch, BranchPair,
};
use crate::use_extract::{
    build_use_unitaries, for_branch, use_bruteforce, use_pure, use_x_closed, UseResult,
    UseUnitary,
};

/// Measure `σz`, send one bit, prepare the matching basis state.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeasurePrepare;

impl Protocol for MeasurePrepare {
    fn outcomes(&self, psi: &PureState2) -> Result<Vec<ProtocolOutcome>> {
        Ok([(psi.p0(), 0), (psi.p1(), 1)]
            .into_iter()
            .filter(|(p, _)| *p > 0.0)
            .map(|(probability, k)| ProtocolOutcome {
                probability,
                state: basis_projector(k),
                kind: OutcomeKind::Delivered,
                branch: None,
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Channel {
    Pure(PureChannel),
    X(XState),
}

impl Channel {
    pub fn density(&self) -> Matrix {
        match self {
            Channel::Pure(ch) => ch.density(),
            Channel::X(x) => x.as_matrix(),
        }
    }

    pub fn ratio(&self) -> f64 {
        match self {
            Channel::Pure(ch) => ch.ratio(),
            Channel::X(x) => x.ratio(),
        }
    }

    pub fn as_x_state(&self) -> XState {
        match self {
            Channel::Pure(ch) => ch.to_x_state(),
            Channel::X(x) => *x,
        }
    }
}

/// How outcome states are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Route {
    /// Closed-form branch and extraction states.
    Closed,
    /// Three-qubit Bell-measurement simulation followed by the two-qubit
    /// extraction simulation.
    Simulated,
}

/// Teleportation over a channel, optionally followed by extraction.
#[derive(Debug, Clone)]
pub struct Teleportation {
    channel: Channel,
    route: Route,
    extraction: Option<(UseUnitary, UseUnitary)>,
    density: Matrix,
}

impl Teleportation {
    pub fn plain(channel: Channel, route: Route) -> Self {
        Self {
            density: channel.density(),
            channel,
            route,
            extraction: None,
        }
    }

    /// Fails when the channel admits no extraction (`α = 0` or `r11 = 0`).
    pub fn with_extraction(channel: Channel, route: Route) -> Result<Self> {
        let unitaries = build_use_unitaries(channel.ratio())?;
        Ok(Self {
            density: channel.density(),
            channel,
            route,
            extraction: Some(unitaries),
        })
    }

    pub fn channel(&self) -> &Channel {
        &self.channel
    }

    fn closed_branches(&self, psi: &PureState2) -> BranchPair {
        match &self.channel {
            Channel::Pure(ch) => teleport_pure_closed(psi, ch),
            Channel::X(x) => teleport_x_closed(psi, x),
        }
    }

    fn closed_extraction(&self, psi: &PureState2, branch: Branch) -> Result<UseResult> {
        match &self.channel {
            Channel::Pure(ch) => use_pure(psi, ch, branch),
            Channel::X(x) => use_x_closed(psi, x, branch),
        }
    }
}

fn delivered(probability: f64, state: Matrix, branch: Branch) -> ProtocolOutcome {
    ProtocolOutcome {
        probability,
        state,
        kind: OutcomeKind::Delivered,
        branch: Some(branch),
    }
}

fn split_extraction(weight: f64, r: UseResult, out: &mut Vec<ProtocolOutcome>) {
    let branch = Some(r.branch);
    if let Some(state) = r.success_state {
        out.push(ProtocolOutcome {
            probability: weight * r.success_prob,
            state,
            kind: OutcomeKind::Extracted,
            branch,
        });
    }
    if let Some(state) = r.failure_state {
        out.push(ProtocolOutcome {
            probability: weight * r.failure_prob,
            state,
            kind: OutcomeKind::Rejected,
            branch,
        });
    }
}

impl Protocol for Teleportation {
    fn outcomes(&self, psi: &PureState2) -> Result<Vec<ProtocolOutcome>> {
        let mut out = Vec::with_capacity(8);
        match self.route {
            Route::Closed => {
                let pair = self.closed_branches(psi);
                for branch in [Branch::Bar, Branch::Ddot] {
                    let (p, rho) = pair.get(branch);
                    let Some(rho) = rho else { continue };
                    if self.extraction.is_some() {
                        split_extraction(p, self.closed_extraction(psi, branch)?, &mut out);
                    } else {
                        out.push(delivered(p, rho.clone(), branch));
                    }
                }
            }
            Route::Simulated => {
                for o in teleport_bruteforce(psi, &self.density)? {
                    let Some(rho) = o.corrected_state else { continue };
                    let branch = o.bell.branch();
                    match &self.extraction {
                        Some(us) => {
                            let r = use_bruteforce(&rho, for_branch(us, branch))?;
                            split_extraction(o.probability, r, &mut out);
                        }
                        None => out.push(delivered(o.probability, rho, branch)),
                    }
                }
            }
        }
        Ok(out)
    }
}
