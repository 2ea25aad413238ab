//! Single-qubit teleportation over pure and X-state channels, unambiguous
//! state extraction (USE) on the receiver side, and the average fidelities
//! and concurrence thresholds that decide when the protocol beats the
//! classical value 2/3.
//!
//! Closed forms live next to brute-force density-matrix simulations so the
//! two can be checked against each other; see [`cli::validate`].

pub mod channels;
pub mod cli;
pub mod error;
pub mod fidelity;
pub mod pipelines;
pub mod qmath;
pub mod teleport;
pub mod thresholds;
pub mod use_extract;

pub use channels::{
    general_concurrence, make_pure_channel, make_x_state, x_concurrence, PureChannel, XParams,
    XState,
};
pub use error::{Error, Result};
pub use fidelity::{average_fidelity, Averaging, ClosedForms, FidelityEstimate, Method, Selection};
pub use pipelines::{Channel, MeasurePrepare, Route, Teleportation};
pub use qmath::{Matrix, PureState2, C64};
pub use teleport::{BellOutcome, Branch};
pub use thresholds::{compute_thresholds, ThresholdReport, Verdict};
pub use use_extract::{build_use_unitaries, UseResult, UseUnitary};
