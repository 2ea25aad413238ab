use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use xtele::channels::{general_concurrence, make_pure_channel, pure_concurrence, x_concurrence, XParams};
use xtele::fidelity::{
    closed_f_p, closed_f_p_use, closed_f_x, closed_f_x_use, closed_f_x_use_failure,
    closed_f_x_use_success, fidelity_qubit, ClosedForms, HaarSampler, CLASSICAL_FIDELITY,
};
use xtele::qmath::{c, hermitian_eigenvalues, hermitian_map, partial_trace, tensor, Matrix, PureState2};
use xtele::teleport::{teleport_bruteforce, teleport_x_closed, Branch};
use xtele::thresholds::{compute_thresholds, threshold_inversion_region, Verdict};
use xtele::use_extract::{build_use_unitaries, for_branch, use_bruteforce, use_x_closed};
use xtele::XState;

fn qubit_state() -> impl Strategy<Value = PureState2> {
    (0.0..=1.0f64, 0.0..std::f64::consts::TAU, 0.0..std::f64::consts::TAU)
        .prop_map(|(t, a, b)| PureState2::from_angles(t, a, b).unwrap())
}

/// Canonical X-states: normalized positive populations with `r11 ≤ r44` and
/// coherences at a uniform fraction of their PSD bounds.
fn x_state() -> impl Strategy<Value = XState> {
    (
        prop::array::uniform4(1e-3..1.0f64),
        0.0..=1.0f64,
        0.0..=1.0f64,
    )
        .prop_map(|(w, u, v)| {
            let total: f64 = w.iter().sum();
            let (mut r11, r22, r33, mut r44) = (w[0] / total, w[1] / total, w[2] / total, w[3] / total);
            if r11 > r44 {
                std::mem::swap(&mut r11, &mut r44);
            }
            let r44 = 1.0 - r11 - r22 - r33;
            let p = XParams {
                r11,
                r22,
                r33,
                r44,
                r14: u * (r11 * r44).sqrt(),
                r23: v * (r22 * r33).sqrt(),
            };
            XState::new(p, false).unwrap()
        })
}

/// Random 2×2 density matrix `a·|ψ⟩⟨ψ| + (1 − a)·I/2`.
fn qubit_density() -> impl Strategy<Value = Matrix> {
    (qubit_state(), 0.0..=1.0f64).prop_map(|(psi, a)| {
        let mixed = Matrix::identity(2).unwrap().scale_real(0.5 * (1.0 - a));
        &psi.density().scale_real(a) + &mixed
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn partial_trace_of_product(a in qubit_density(), b in qubit_density(), d in qubit_density()) {
        let ab = tensor(&a, &b).unwrap();
        let abd = tensor(&ab, &d).unwrap();
        prop_assert!(partial_trace(&ab, &[0]).unwrap().max_abs_diff(&a).unwrap() < 1e-14);
        prop_assert!(partial_trace(&ab, &[1]).unwrap().max_abs_diff(&b).unwrap() < 1e-14);
        prop_assert!(partial_trace(&abd, &[0, 2]).unwrap().max_abs_diff(&tensor(&a, &d).unwrap()).unwrap() < 1e-14);
        prop_assert!((abd.trace().re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigenvalues_reconstruct_trace_and_purity(x in x_state(), psi in qubit_state()) {
        let rho = x.as_matrix();
        let ev = hermitian_eigenvalues(&rho).unwrap();
        prop_assert!(ev.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!((ev.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!((ev.iter().map(|e| e * e).sum::<f64>() - rho.purity()).abs() < 1e-12);
        // √ρ·√ρ = ρ
        let root = hermitian_map(&psi.density(), |v| v.max(0.0).sqrt()).unwrap();
        prop_assert!((&root * &root).max_abs_diff(&psi.density()).unwrap() < 1e-12);
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded(a in qubit_density(), b in qubit_density()) {
        let f = fidelity_qubit(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((f - fidelity_qubit(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!((fidelity_qubit(&a, &a).unwrap() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn concurrence_matches_wootters_in_principal_subspace(x in x_state()) {
        let report = x_concurrence(&x);
        let wootters = general_concurrence(&x.as_matrix()).unwrap();
        let expected = if x.satisfies_principal_subspace() {
            report.concurrence
        } else {
            report.concurrence.max(report.c23)
        };
        prop_assert!((expected - wootters).abs() < 1e-9, "{} vs {}", expected, wootters);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&wootters));
    }

    #[test]
    fn teleport_outcomes_are_normalized_states(x in x_state(), psi in qubit_state()) {
        let outcomes = teleport_bruteforce(&psi, &x.as_matrix()).unwrap();
        let total: f64 = outcomes.iter().map(|o| o.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        let pair = teleport_x_closed(&psi, &x);
        prop_assert!((pair.p_bar + pair.p_ddot - 1.0).abs() < 1e-12);
        for o in &outcomes {
            if let Some(rho) = &o.corrected_state {
                prop_assert!(rho.validate_density().is_ok());
                let (p, closed) = pair.get(o.bell.branch());
                prop_assert!((o.probability - p / 2.0).abs() < 1e-12);
                prop_assert!(rho.max_abs_diff(closed.unwrap()).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn extraction_matches_simulation(x in x_state(), psi in qubit_state()) {
        prop_assume!(x.r11() > 1e-6);
        let us = build_use_unitaries(x.ratio()).unwrap();
        prop_assert!(us.0.matrix.is_unitary(1e-12) && us.1.matrix.is_unitary(1e-12));
        let pair = teleport_x_closed(&psi, &x);
        for branch in [Branch::Bar, Branch::Ddot] {
            let (_, Some(rho)) = pair.get(branch) else { continue };
            let sim = use_bruteforce(rho, for_branch(&us, branch)).unwrap();
            let closed = use_x_closed(&psi, &x, branch).unwrap();
            prop_assert!((sim.success_prob + sim.failure_prob - 1.0).abs() < 1e-12);
            prop_assert!((sim.success_prob - closed.success_prob).abs() < 1e-10);
            if let (Some(a), Some(b)) = (&sim.success_state, &closed.success_state) {
                prop_assert!(a.max_abs_diff(b).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn closed_form_orderings_and_decomposition(x in x_state()) {
        prop_assume!(x.r11() > 0.0);
        let f_x = closed_f_x(&x);
        let f_use = closed_f_x_use(&x).unwrap();
        let s = closed_f_x_use_success(&x).unwrap();
        let fail = closed_f_x_use_failure(&x).unwrap();
        prop_assert!(f_use <= f_x + 1e-12);
        prop_assert!((s.weight + fail.weight - 1.0).abs() < 1e-12);
        let f1 = fail.fidelity.unwrap_or(0.0);
        prop_assert!(f1 <= CLASSICAL_FIDELITY + 1e-12);
        prop_assert!((s.weight * s.fidelity.unwrap() + fail.weight * f1 - f_use).abs() < 1e-12);
    }

    #[test]
    fn threshold_flags_agree_with_fidelities(x in x_state()) {
        prop_assume!(x.r11() > 1e-9);
        let t = compute_thresholds(&x).unwrap();
        let closed = ClosedForms::evaluate(&x);
        let pairs = [
            (t.quantum_plain, closed.f_x),
            (t.quantum_use_total, closed.f_x_use.unwrap()),
            (t.quantum_use_filtered, closed.f_x_use_0.unwrap()),
        ];
        for (verdict, f) in pairs {
            match verdict {
                Verdict::Quantum => prop_assert!(f > CLASSICAL_FIDELITY - 1e-12),
                Verdict::Classical => prop_assert!(f < CLASSICAL_FIDELITY + 1e-12),
                Verdict::Boundary => prop_assert!((f - CLASSICAL_FIDELITY).abs() < 1e-9),
            }
        }
        prop_assert_eq!(threshold_inversion_region(&x), t.c_x_use_0_th < t.c_x_th);
    }

    #[test]
    fn pure_channel_laws(alpha in 0.0..=std::f64::consts::FRAC_1_SQRT_2) {
        let ch = make_pure_channel(alpha).unwrap();
        let x = ch.to_x_state();
        let cc = pure_concurrence(&ch);
        assert_abs_diff_eq!(closed_f_p(&ch), closed_f_x(&x), epsilon = 1e-12);
        assert_abs_diff_eq!(x_concurrence(&x).c14, cc, epsilon = 1e-12);
        if alpha > 0.0 {
            assert_abs_diff_eq!(closed_f_p_use(&ch), closed_f_x_use(&x).unwrap(), epsilon = 1e-12);
            assert_abs_diff_eq!(closed_f_x_use_success(&x).unwrap().fidelity.unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn haar_sampler_is_counter_based(seed in any::<u64>(), i in 0u64..1000) {
        let mut it = HaarSampler::new(seed);
        let direct = it.sample_at(i);
        let walked = it.nth(i as usize).unwrap();
        prop_assert_eq!(direct, walked);
        prop_assert!((direct.p0() + direct.p1() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn number_format_keeps_nine_digits(x in -1e9..1e9f64) {
        let s = xtele::cli::format_number(x);
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - x).abs() <= 1e-8 * x.abs().max(1e-300), "{} -> {}", x, s);
    }
}

#[test]
fn tensor_rejects_large_products() {
    let m = Matrix::from_rows([[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]]).unwrap();
    let m8 = tensor(&tensor(&m, &m).unwrap(), &m).unwrap();
    assert!(tensor(&m8, &m).is_err());
}
