//! Fidelity of teleported states and its average over uniformly
//! distributed input states.
//!
//! Averages are taken over the unitarily invariant measure on qubit pure
//! states, parameterized by `t = |⟨0|ψ⟩|²` (uniform on `[0, 1]`) and two
//! phases. Two estimators are provided: a product Gauss–Legendre ×
//! trapezoid rule, exact for the low-degree integrands that occur here, and
//! counter-seeded Monte Carlo.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{pure_concurrence, x_concurrence, PureChannel, XState};
use crate::error::{Error, Result};
use crate::qmath::{Matrix, PureState2};
use crate::teleport::Branch;
use crate::use_extract::quasi_extraction_probability;

/// The best average fidelity reachable by measure-and-prepare.
pub const CLASSICAL_FIDELITY: f64 = 2.0 / 3.0;

/// Allowed deviation of a protocol's total outcome probability from one.
pub const PROBABILITY_TOL: f64 = 1e-9;

/// Fidelity between two qubit density matrices,
/// `F = Tr(ρσ) + 2·√(det ρ · det σ)`.
pub fn fidelity_qubit(rho: &Matrix, sigma: &Matrix) -> Result<f64> {
    for m in [rho, sigma] {
        if m.dim() != 2 {
            return Err(Error::DimensionMismatch {
                left: 2,
                right: m.dim(),
            });
        }
        m.validate_density()?;
    }
    let overlap = (rho * sigma).trace().re;
    let det = |m: &Matrix| (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re.max(0.0);
    let f = overlap + 2.0 * (det(rho) * det(sigma)).sqrt();
    Ok(f.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityEstimate {
    pub value: f64,
    pub method: Method,
    /// Zero for deterministic methods.
    pub std_error: f64,
    pub n_samples: usize,
}

impl FidelityEstimate {
    pub fn closed(value: f64) -> Self {
        Self {
            value,
            method: Method::ClosedForm,
            std_error: 0.0,
            n_samples: 0,
        }
    }

    /// `|value − reference| ≤ k·std_error`.
    pub fn within_sigmas(&self, reference: f64, k: f64) -> bool {
        (self.value - reference).abs() <= k * self.std_error
    }
}

/// Counter-based Haar sampler: sample `i` depends only on `(seed, i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HaarSampler {
    pub seed: u64,
    pub counter: u64,
}

impl HaarSampler {
    pub fn new(seed: u64) -> Self {
        Self { seed, counter: 0 }
    }

    /// The `index`-th state of the stream, independent of any other draw.
    pub fn sample_at(&self, index: u64) -> PureState2 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        let t: f64 = rng.gen();
        let theta0 = rng.gen::<f64>() * TAU;
        let theta1 = rng.gen::<f64>() * TAU;
        PureState2::from_angles(t, theta0, theta1).expect("t lies in [0, 1)")
    }
}

impl Iterator for HaarSampler {
    type Item = PureState2;

    fn next(&mut self) -> Option<PureState2> {
        Some(sample_haar(self))
    }
}

pub fn sample_haar(sampler: &mut HaarSampler) -> PureState2 {
    let psi = sampler.sample_at(sampler.counter);
    sampler.counter += 1;
    psi
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Product rule over `t ∈ [0, 1]` (Gauss–Legendre) and the relative phase
/// `φ ∈ [0, 2π)` (equispaced). The global phase is fixed to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub t_nodes: usize,
    pub phi_nodes: usize,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self {
            t_nodes: 12,
            phi_nodes: 16,
        }
    }
}

impl QuadratureRule {
    /// States and weights; the weights sum to one.
    pub fn points(&self) -> Result<Vec<(PureState2, f64)>> {
        if self.t_nodes == 0 || self.phi_nodes == 0 {
            return Err(Error::InvalidArgument("quadrature needs at least one node".into()));
        }
        let (x, w) = gauss_legendre(self.t_nodes);
        let mut out = Vec::with_capacity(self.t_nodes * self.phi_nodes);
        for (xi, wi) in x.iter().zip(&w) {
            let t = 0.5 * (xi + 1.0);
            for k in 0..self.phi_nodes {
                let phi = TAU * k as f64 / self.phi_nodes as f64;
                let psi = PureState2::from_angles(t, 0.0, phi)?;
                out.push((psi, 0.5 * wi / self.phi_nodes as f64));
            }
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.t_nodes * self.phi_nodes
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Role of an outcome state in a protocol, used to condition averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutcomeKind {
    /// Receiver state without an extraction stage.
    Delivered,
    /// Extraction succeeded (`b` found in `|0⟩`).
    Extracted,
    /// Extraction failed (`b` found in `|1⟩`).
    Rejected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolOutcome {
    pub probability: f64,
    pub state: Matrix,
    pub kind: OutcomeKind,
    pub branch: Option<Branch>,
}

/// Maps an input state to its outcome distribution. Null outcomes are
/// omitted; the listed probabilities must sum to one.
pub trait Protocol: Sync {
    fn outcomes(&self, psi: &PureState2) -> Result<Vec<ProtocolOutcome>>;
}

impl<F> Protocol for F
where
    F: Fn(&PureState2) -> Result<Vec<ProtocolOutcome>> + Sync,
{
    fn outcomes(&self, psi: &PureState2) -> Result<Vec<ProtocolOutcome>> {
        self(psi)
    }
}

/// Which outcomes enter an average. The value is normalized by their total
/// probability, so a partial selection yields a conditional fidelity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Selection {
    pub kind: Option<OutcomeKind>,
    pub branch: Option<Branch>,
}

impl Selection {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn kind(kind: OutcomeKind) -> Self {
        Self {
            kind: Some(kind),
            branch: None,
        }
    }

    pub fn branch(branch: Branch) -> Self {
        Self {
            kind: None,
            branch: Some(branch),
        }
    }

    pub fn matches(&self, o: &ProtocolOutcome) -> bool {
        self.kind.map_or(true, |k| k == o.kind) && self.branch.map_or(true, |b| Some(b) == o.branch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Averaging {
    Quadrature(QuadratureRule),
    MonteCarlo { samples: usize, seed: u64 },
}

impl Averaging {
    pub fn quadrature() -> Self {
        Averaging::Quadrature(QuadratureRule::default())
    }
}

/// For one input state: `(Σ_sel p_k·F_k, Σ_sel p_k)`.
fn weighted_fidelity<P: Protocol + ?Sized>(
    protocol: &P,
    psi: &PureState2,
    selection: Selection,
) -> Result<(f64, f64)> {
    let outcomes = protocol.outcomes(psi)?;
    let total: f64 = outcomes.iter().map(|o| o.probability).sum();
    if (total - 1.0).abs() > PROBABILITY_TOL {
        return Err(Error::ProbabilityLeak { total });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for o in outcomes.iter().filter(|o| selection.matches(o)) {
        num += o.probability * psi.overlap_with(&o.state)?;
        den += o.probability;
    }
    Ok((num, den))
}

/// Average fidelity `∫ Σ_k p_k(ψ)·⟨ψ|ρ_k(ψ)|ψ⟩ dψ`, restricted to and
/// normalized by the selected outcomes.
///
/// Monte Carlo uses a ratio estimator with a delta-method standard error,
/// which reduces to the plain sample standard error when every outcome is
/// selected. Results are bit-identical for a given seed regardless of the
/// number of worker threads.
pub fn average_fidelity<P: Protocol + ?Sized>(
    protocol: &P,
    averaging: &Averaging,
    selection: Selection,
) -> Result<FidelityEstimate> {
    match *averaging {
        Averaging::Quadrature(rule) => {
            let points = rule.points()?;
            let mut num = 0.0;
            let mut den = 0.0;
            for (psi, w) in &points {
                let (y, x) = weighted_fidelity(protocol, psi, selection)?;
                num += w * y;
                den += w * x;
            }
            if den <= 0.0 {
                return Err(Error::InvalidArgument("selected outcomes never occur".into()));
            }
            Ok(FidelityEstimate {
                value: num / den,
                method: Method::Quadrature,
                std_error: 0.0,
                n_samples: points.len(),
            })
        }
        Averaging::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return Err(Error::InvalidArgument("Monte Carlo needs at least 2 samples".into()));
            }
            let sampler = HaarSampler::new(seed);
            let pairs: Vec<(f64, f64)> = (0..samples as u64)
                .into_par_iter()
                .map(|i| weighted_fidelity(protocol, &sampler.sample_at(i), selection))
                .collect::<Result<_>>()?;
            let n = samples as f64;
            let (sy, sx) = pairs
                .iter()
                .fold((0.0, 0.0), |(a, b), (y, x)| (a + y, b + x));
            if sx <= 0.0 {
                return Err(Error::InvalidArgument("selected outcomes never occur".into()));
            }
            let ratio = sy / sx;
            let mean_x = sx / n;
            let resid: f64 = pairs
                .iter()
                .map(|(y, x)| {
                    let r = y - ratio * x;
                    r * r
                })
                .sum();
            let std_error = (resid / (n * (n - 1.0))).sqrt() / mean_x;
            Ok(FidelityEstimate {
                value: ratio,
                method: Method::MonteCarlo,
                std_error,
                n_samples: samples,
            })
        }
    }
}

/// `2/3 + C/3`.
pub fn closed_f_p(ch: &PureChannel) -> f64 {
    CLASSICAL_FIDELITY + pure_concurrence(ch) / 3.0
}

/// `1 − √(1 − C²)/3`.
pub fn closed_f_p_use(ch: &PureChannel) -> f64 {
    let c = pure_concurrence(ch);
    1.0 - (1.0 - c * c).max(0.0).sqrt() / 3.0
}

/// `2/3 + (2·r14 − r22 − r33)/3`.
pub fn closed_f_x(x: &XState) -> f64 {
    CLASSICAL_FIDELITY + (2.0 * x.r14() - (x.r22() + x.r33())) / 3.0
}

/// `(2/3)·[1 + r14·√(r11/r44) − (r22 + r33)/2]`; requires `r11 > 0`.
pub fn closed_f_x_use(x: &XState) -> Result<f64> {
    if x.r11() <= 0.0 {
        return Err(Error::ExtractionImpossible);
    }
    Ok(CLASSICAL_FIDELITY * (1.0 + x.r14() * x.ratio() - 0.5 * (x.r22() + x.r33())))
}

/// Fidelity conditioned on one extraction outcome, with that outcome's
/// total probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionedFidelity {
    /// `None` when the outcome has zero probability.
    pub fidelity: Option<f64>,
    pub weight: f64,
}

/// Normalized fidelity of the quasi-extracted outcomes and their total
/// probability `2·r11 + r33 + r11·r22/r44`.
pub fn closed_f_x_use_success(x: &XState) -> Result<ConditionedFidelity> {
    let weight = quasi_extraction_probability(x)?;
    let k = x.r11() / x.r44();
    let gain = 2.0 * x.ratio() * x.r14() - (x.r33() + k * x.r22());
    Ok(ConditionedFidelity {
        fidelity: Some(CLASSICAL_FIDELITY + gain / (3.0 * weight)),
        weight,
    })
}

/// Normalized fidelity of the failed-extraction outcomes and their total
/// probability `1 − p_qext = (r44 − r11)·(1 + r22/r44)`.
///
/// Written as `(r22 + 2·r44) / (3·(r22 + r44))`, which equals
/// `2/3 − r22·(1 − r11/r44) / (3·(1 − p_qext))` without the cancellation.
pub fn closed_f_x_use_failure(x: &XState) -> Result<ConditionedFidelity> {
    if x.r11() <= 0.0 {
        return Err(Error::ExtractionImpossible);
    }
    let weight = (x.r44() - x.r11()) * (1.0 + x.r22() / x.r44());
    let fidelity = (weight > 0.0).then(|| (x.r22() + 2.0 * x.r44()) / (3.0 * (x.r22() + x.r44())));
    Ok(ConditionedFidelity { fidelity, weight })
}

/// Convenience: every closed-form quantity for one X-state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForms {
    pub c14: f64,
    pub f_x: f64,
    pub f_x_use: Option<f64>,
    pub f_x_use_0: Option<f64>,
    pub f_x_use_1: Option<f64>,
    pub p_qext: Option<f64>,
}

impl ClosedForms {
    pub fn evaluate(x: &XState) -> Self {
        let success = closed_f_x_use_success(x).ok();
        Self {
            c14: x_concurrence(x).c14,
            f_x: closed_f_x(x),
            f_x_use: closed_f_x_use(x).ok(),
            f_x_use_0: success.and_then(|s| s.fidelity),
            f_x_use_1: closed_f_x_use_failure(x).ok().and_then(|f| f.fidelity),
            p_qext: success.map(|s| s.weight),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{make_pure_channel, make_x_state};
    use crate::qmath::{basis_projector, identity2};
    use approx::assert_abs_diff_eq;

    fn reference() -> XState {
        make_x_state(0.3, 0.15, 0.05, 0.5, 0.35, 0.0).unwrap()
    }

    fn measure_prepare(psi: &PureState2) -> Result<Vec<ProtocolOutcome>> {
        Ok(vec![
            ProtocolOutcome {
                probability: psi.p0(),
                state: basis_projector(0),
                kind: OutcomeKind::Delivered,
                branch: None,
            },
            ProtocolOutcome {
                probability: psi.p1(),
                state: basis_projector(1),
                kind: OutcomeKind::Delivered,
                branch: None,
            },
        ])
    }

    #[test]
    fn fidelity_examples() {
        let p0 = basis_projector(0);
        let p1 = basis_projector(1);
        let half = identity2().scale_real(0.5);
        assert_abs_diff_eq!(fidelity_qubit(&p0, &p0).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fidelity_qubit(&p0, &p1).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fidelity_qubit(&p0, &half).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(fidelity_qubit(&half, &half).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn fidelity_reduces_to_overlap_for_pure_argument() {
        let psi = PureState2::from_angles(0.3, 0.1, 1.2).unwrap();
        let rho = Matrix::from_rows([
            [crate::qmath::re(0.7), crate::qmath::c(0.1, 0.15)],
            [crate::qmath::c(0.1, -0.15), crate::qmath::re(0.3)],
        ])
        .unwrap();
        let f = fidelity_qubit(&psi.density(), &rho).unwrap();
        assert_abs_diff_eq!(f, psi.overlap_with(&rho).unwrap(), epsilon = 1e-12);
        assert_abs_diff_eq!(f, fidelity_qubit(&rho, &psi.density()).unwrap(), epsilon = 1e-15);
    }

    #[test]
    fn fidelity_rejects_invalid_states() {
        let bad = Matrix::diag(&[1.2, -0.2]).unwrap();
        assert!(fidelity_qubit(&bad, &basis_projector(0)).is_err());
        assert!(fidelity_qubit(&Matrix::identity(4).unwrap(), &basis_projector(0)).is_err());
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(12);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
        // ∫_{-1}^{1} x^22 dx = 2/23, the highest exact degree is 23.
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(22)).sum();
        assert_abs_diff_eq!(integral, 2.0 / 23.0, epsilon = 1e-14);
        let (x1, w1) = gauss_legendre(1);
        assert_abs_diff_eq!(x1[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w1[0], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn quadrature_weights_sum_to_one() {
        let pts = QuadratureRule::default().points().unwrap();
        assert_eq!(pts.len(), 192);
        assert_abs_diff_eq!(pts.iter().map(|p| p.1).sum::<f64>(), 1.0, epsilon = 1e-14);
        assert!(QuadratureRule { t_nodes: 0, phi_nodes: 4 }.points().is_err());
    }

    #[test]
    fn sampler_is_counter_based() {
        let mut a = HaarSampler::new(9);
        let first: Vec<_> = (&mut a).take(5).collect();
        assert_eq!(a.counter, 5);
        let b = HaarSampler::new(9);
        assert_eq!(b.sample_at(3), first[3]);
        assert_ne!(HaarSampler::new(10).sample_at(3), first[3]);
    }

    #[test]
    fn classical_baseline_by_quadrature() {
        let est = average_fidelity(&measure_prepare, &Averaging::quadrature(), Selection::all())
            .unwrap();
        assert_abs_diff_eq!(est.value, CLASSICAL_FIDELITY, epsilon = 1e-12);
        assert_eq!(est.method, Method::Quadrature);
    }

    #[test]
    fn leaking_protocol_is_rejected() {
        let leaky = |psi: &PureState2| -> Result<Vec<ProtocolOutcome>> {
            let mut v = measure_prepare(psi)?;
            v.pop();
            Ok(v)
        };
        let err = average_fidelity(&leaky, &Averaging::quadrature(), Selection::all());
        assert!(matches!(err, Err(Error::ProbabilityLeak { .. })));
    }

    #[test]
    fn monte_carlo_standard_error() {
        let est = average_fidelity(
            &measure_prepare,
            &Averaging::MonteCarlo {
                samples: 20_000,
                seed: 1,
            },
            Selection::all(),
        )
        .unwrap();
        // F = t² + (1−t)² with t uniform: E[F²] = 7/15, so Var F = 1/45.
        let sigma = (1.0f64 / 45.0).sqrt() / (20_000f64).sqrt();
        assert!((est.std_error / sigma - 1.0).abs() < 0.05, "{}", est.std_error);
        assert!(est.within_sigmas(CLASSICAL_FIDELITY, 4.0));
        assert!(average_fidelity(
            &measure_prepare,
            &Averaging::MonteCarlo { samples: 1, seed: 1 },
            Selection::all()
        )
        .is_err());
    }

    #[test]
    fn pure_closed_forms() {
        let bell = make_pure_channel(std::f64::consts::FRAC_1_SQRT_2).unwrap();
        let product = make_pure_channel(0.0).unwrap();
        let partial = make_pure_channel(0.2f64.sqrt()).unwrap();
        assert_abs_diff_eq!(closed_f_p(&bell), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(closed_f_p(&product), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(closed_f_p(&partial), 2.8 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(closed_f_p_use(&bell), 1.0, epsilon = 1e-7);
        assert_abs_diff_eq!(closed_f_p_use(&product), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(closed_f_p_use(&partial), 0.8, epsilon = 1e-15);
    }

    #[test]
    fn x_closed_forms_reference_values() {
        let x = reference();
        assert_abs_diff_eq!(closed_f_x(&x), 2.0 / 3.0 + 0.5 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(closed_f_x_use(&x).unwrap(), 0.780739, epsilon = 1e-6);
        let s = closed_f_x_use_success(&x).unwrap();
        assert_abs_diff_eq!(s.fidelity.unwrap(), 0.847845, epsilon = 1e-6);
        assert_abs_diff_eq!(s.weight, 0.74, epsilon = 1e-15);
        let f = closed_f_x_use_failure(&x).unwrap();
        assert_abs_diff_eq!(f.fidelity.unwrap(), 0.589744, epsilon = 1e-6);
        assert_abs_diff_eq!(f.weight, 0.26, epsilon = 1e-15);
    }

    #[test]
    fn x_closed_forms_reduce_to_pure() {
        for alpha in [0.1, 0.3, 0.5, 0.7] {
            let ch = make_pure_channel(alpha).unwrap();
            let x = ch.to_x_state();
            assert_abs_diff_eq!(closed_f_x(&x), closed_f_p(&ch), epsilon = 1e-14);
            assert_abs_diff_eq!(closed_f_x_use(&x).unwrap(), closed_f_p_use(&ch), epsilon = 1e-14);
            let s = closed_f_x_use_success(&x).unwrap();
            assert_abs_diff_eq!(s.fidelity.unwrap(), 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(s.weight, 2.0 * alpha * alpha, epsilon = 1e-14);
        }
    }

    #[test]
    fn maximally_mixed_closed_forms() {
        let x = make_x_state(0.25, 0.25, 0.25, 0.25, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(closed_f_x(&x), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(closed_f_x_use(&x).unwrap(), 0.5, epsilon = 1e-15);
        let s = closed_f_x_use_success(&x).unwrap();
        assert_abs_diff_eq!(s.weight, 1.0, epsilon = 1e-15);
        // r11 = r44: extraction never fails, so the failure fidelity is undefined.
        let f = closed_f_x_use_failure(&x).unwrap();
        assert_eq!(f.weight, 0.0);
        assert!(f.fidelity.is_none());
    }

    #[test]
    fn failure_form_matches_unsimplified_expression() {
        let x = reference();
        let k = x.r11() / x.r44();
        let denom = x.r22() + x.r44() - x.r11() - k * x.r22();
        let literal = 2.0 / 3.0 - x.r22() * (1.0 - k) / (3.0 * denom);
        let f = closed_f_x_use_failure(&x).unwrap();
        assert_abs_diff_eq!(f.fidelity.unwrap(), literal, epsilon = 1e-14);
        assert_abs_diff_eq!(f.weight, denom, epsilon = 1e-15);
    }

    #[test]
    fn extraction_forms_need_r11() {
        let x = make_x_state(0.0, 0.2, 0.3, 0.5, 0.0, 0.1).unwrap();
        assert!(closed_f_x_use(&x).is_err());
        assert!(closed_f_x_use_success(&x).is_err());
        assert!(closed_f_x_use_failure(&x).is_err());
        let all = ClosedForms::evaluate(&x);
        assert!(all.f_x_use.is_none() && all.p_qext.is_none());
    }
}
