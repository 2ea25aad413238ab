//! End-to-end acceptance checks. Runs as a plain binary so that every
//! criterion prints exactly one PASS/FAIL line.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use xtele::channels::{general_concurrence, make_pure_channel, pure_concurrence, random_populations, random_x_state, x_concurrence, XParams};
use xtele::fidelity::{average_fidelity, Averaging, ClosedForms, HaarSampler, OutcomeKind, Protocol, Selection, CLASSICAL_FIDELITY};
use xtele::qmath::Matrix;
use xtele::teleport::{teleport_bruteforce, teleport_x_closed};
use xtele::thresholds::{compute_thresholds, Verdict};
use xtele::use_extract::{build_use_unitaries, for_branch, use_bruteforce, use_x_closed};
use xtele::{Channel, MeasurePrepare, Route, Teleportation, XState};

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, fail: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(fail)
    }
}

fn within_budget(start: Instant, budget: Duration) -> Result<Duration, String> {
    let elapsed = start.elapsed();
    if elapsed <= budget {
        Ok(elapsed)
    } else {
        Err(format!("took {elapsed:.2?}, budget {budget:.0?}"))
    }
}

fn quad(p: &impl Protocol, sel: Selection) -> f64 {
    average_fidelity(p, &Averaging::quadrature(), sel).unwrap().value
}

fn random_channels(seed: u64, n: usize) -> Vec<XState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_x_state(&mut rng, false)).collect()
}

fn classical_baseline() -> Outcome {
    let start = Instant::now();
    let f = quad(&MeasurePrepare, Selection::all());
    let t = within_budget(start, Duration::from_secs(1))?;
    let dev = (f - 2.0 / 3.0).abs();
    check(dev <= 1e-12, format!("|f − 2/3| = {dev:.1e} in {t:.2?}"), format!("|f − 2/3| = {dev:.3e}"))
}

fn pure_channel_law() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let sampler = HaarSampler::new(2);
    let (mut worst_plain, mut worst_use, mut worst_ext) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let alpha = rng.gen_range(1e-3..std::f64::consts::FRAC_1_SQRT_2);
        let ch = make_pure_channel(alpha).unwrap();
        let c = pure_concurrence(&ch);
        let plain = Teleportation::plain(Channel::Pure(ch), Route::Simulated);
        let with_use = Teleportation::with_extraction(Channel::Pure(ch), Route::Simulated).unwrap();
        worst_plain = worst_plain.max((quad(&plain, Selection::all()) - (2.0 + c) / 3.0).abs());
        let expected_use = 1.0 - (1.0 - c * c).sqrt() / 3.0;
        worst_use = worst_use.max((quad(&with_use, Selection::all()) - expected_use).abs());
        let p_ext = 1.0 - (1.0 - c * c).sqrt();
        for i in 0..8 {
            let extracted: f64 = with_use
                .outcomes(&sampler.sample_at(i))
                .unwrap()
                .iter()
                .filter(|o| o.kind == OutcomeKind::Extracted)
                .map(|o| o.probability)
                .sum();
            worst_ext = worst_ext.max((extracted - p_ext).abs());
        }
    }
    let t = within_budget(start, Duration::from_secs(10))?;
    let summary = format!("max |Δ| f_p {worst_plain:.1e}, f_p,USE {worst_use:.1e}, p_ext {worst_ext:.1e} in {t:.2?}");
    check(worst_plain <= 1e-10 && worst_use <= 1e-10 && worst_ext <= 1e-12, summary.clone(), summary)
}

struct XStats {
    quadrature: f64,
    states: f64,
    decomposition: f64,
    use_excess: f64,
    failure_excess: f64,
    filtered_below_plain: usize,
}

/// Worst entry-wise gap between simulated and closed-form outcome states.
fn state_gap(x: &XState, sampler: &HaarSampler) -> f64 {
    let rho = x.as_matrix();
    let us = build_use_unitaries(x.ratio()).ok();
    let gap = |a: &Matrix, b: &Matrix| a.max_abs_diff(b).unwrap();
    let mut worst = 0.0f64;
    for i in 0..4 {
        let psi = sampler.sample_at(i);
        let pair = teleport_x_closed(&psi, x);
        for o in teleport_bruteforce(&psi, &rho).unwrap() {
            let (_, closed) = pair.get(o.bell.branch());
            let (Some(sim), Some(closed)) = (o.corrected_state, closed) else { continue };
            worst = worst.max(gap(&sim, closed));
            let Some(us) = &us else { continue };
            let a = use_bruteforce(&sim, for_branch(us, o.bell.branch())).unwrap();
            let b = use_x_closed(&psi, x, o.bell.branch()).unwrap();
            worst = worst.max((a.success_prob - b.success_prob).abs());
            for (s, c) in [(&a.success_state, &b.success_state), (&a.failure_state, &b.failure_state)] {
                if let (Some(s), Some(c)) = (s, c) {
                    worst = worst.max(gap(s, c));
                }
            }
        }
    }
    worst
}

fn x_state_stats(channels: &[XState]) -> XStats {
    let sampler = HaarSampler::new(3);
    let mut s = XStats {
        quadrature: 0.0,
        states: 0.0,
        decomposition: 0.0,
        use_excess: 0.0,
        failure_excess: 0.0,
        filtered_below_plain: 0,
    };
    for x in channels {
        let closed = ClosedForms::evaluate(x);
        let plain = Teleportation::plain(Channel::X(*x), Route::Simulated);
        s.quadrature = s.quadrature.max((quad(&plain, Selection::all()) - closed.f_x).abs());
        if let Ok(with_use) = Teleportation::with_extraction(Channel::X(*x), Route::Simulated) {
            let pairs = [
                (Selection::all(), closed.f_x_use),
                (Selection::kind(OutcomeKind::Extracted), closed.f_x_use_0),
                (Selection::kind(OutcomeKind::Rejected), closed.f_x_use_1),
            ];
            for (sel, expected) in pairs {
                if let Some(expected) = expected {
                    s.quadrature = s.quadrature.max((quad(&with_use, sel) - expected).abs());
                }
            }
        }
        s.states = s.states.max(state_gap(x, &sampler));
        if let (Some(p), Some(total), Some(f0)) = (closed.p_qext, closed.f_x_use, closed.f_x_use_0) {
            let f1 = closed.f_x_use_1.unwrap_or(0.0);
            s.decomposition = s.decomposition.max((p * f0 + (1.0 - p) * f1 - total).abs());
            s.use_excess = s.use_excess.max(total - closed.f_x);
            if f0 <= closed.f_x {
                s.filtered_below_plain += 1;
            }
        }
        if let Some(f1) = closed.f_x_use_1 {
            s.failure_excess = s.failure_excess.max(f1 - CLASSICAL_FIDELITY);
        }
    }
    s
}

fn x_state_law(s: &XStats, elapsed: Duration) -> Outcome {
    if elapsed > Duration::from_secs(60) {
        return Err(format!("took {elapsed:.2?}, budget 60s"));
    }
    let summary = format!(
        "max |Δ| quadrature {:.1e}, states {:.1e} over 1000 channels in {elapsed:.2?}",
        s.quadrature, s.states
    );
    check(s.quadrature <= 1e-10 && s.states <= 1e-10, summary.clone(), summary)
}

fn decomposition(s: &XStats) -> Outcome {
    let d = s.decomposition;
    check(d <= 1e-12, format!("max |p·f0 + (1−p)·f1 − f_use| = {d:.1e}"), format!("deviation {d:.3e}"))
}

fn orderings(s: &XStats) -> Outcome {
    let summary = format!(
        "max excess f_use − f_x {:.1e}, f1 − 2/3 {:.1e}; f0 ≤ f_x on {} channels (informational)",
        s.use_excess.max(0.0),
        s.failure_excess.max(0.0),
        s.filtered_below_plain
    );
    check(s.use_excess <= 1e-12 && s.failure_excess <= 1e-12, summary.clone(), summary)
}

fn threshold_consistency() -> Outcome {
    const GRID: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut mismatches = 0usize;
    let mut misplaced = 0usize;
    let mut crossings = 0usize;
    for _ in 0..20 {
        let [r11, r22, r33, r44] = random_populations(&mut rng);
        let top = (r11 * r44).sqrt();
        let step = top / (GRID - 1) as f64;
        let mut previous: Option<[bool; 3]> = None;
        for i in 0..GRID {
            let r14 = (i as f64 * step).min(top);
            let x = XState::new(XParams { r11, r22, r33, r44, r14, r23: 0.0 }, false).unwrap();
            let t = compute_thresholds(&x).unwrap();
            let c = ClosedForms::evaluate(&x);
            let rows = [
                (t.quantum_plain, c.f_x, t.c_x_th),
                (t.quantum_use_total, c.f_x_use.unwrap(), t.c_x_use_th),
                (t.quantum_use_filtered, c.f_x_use_0.unwrap(), t.c_x_use_0_th),
            ];
            let flags = rows.map(|(v, _, _)| v == Verdict::Quantum);
            for (verdict, f, _) in rows {
                let agrees = match verdict {
                    Verdict::Quantum => f > CLASSICAL_FIDELITY,
                    Verdict::Classical => f < CLASSICAL_FIDELITY,
                    Verdict::Boundary => (f - CLASSICAL_FIDELITY).abs() < 1e-9,
                };
                mismatches += usize::from(!agrees);
            }
            if let Some(prev) = previous {
                for (k, (_, _, th)) in rows.iter().enumerate() {
                    if prev[k] != flags[k] {
                        crossings += 1;
                        // c14 = 2·(r14 − √(r22·r33)) reaches the threshold here.
                        let exact = th / 2.0 + (r22 * r33).sqrt();
                        if (r14 - exact).abs() > step * (1.0 + 1e-9) {
                            misplaced += 1;
                        }
                    }
                }
            }
            previous = Some(flags);
        }
    }
    let summary = format!(
        "{mismatches} flag/fidelity mismatches, {misplaced} of {crossings} crossings off by more than one step"
    );
    check(mismatches == 0 && misplaced == 0 && crossings > 0, summary.clone(), summary)
}

fn threshold_inversion() -> Outcome {
    let x = xtele::make_x_state(0.3, 0.15, 0.05, 0.5, 0.35, 0.0).unwrap();
    let t = compute_thresholds(&x).unwrap();
    let c = ClosedForms::evaluate(&x);
    let f0 = c.f_x_use_0.unwrap();
    let mc = Averaging::MonteCarlo { samples: 1_000_000, seed: 7 };
    let plain = Teleportation::plain(Channel::X(x), Route::Closed);
    let with_use = Teleportation::with_extraction(Channel::X(x), Route::Closed).unwrap();
    let mc_fx = average_fidelity(&plain, &mc, Selection::all()).unwrap();
    let mc_f0 = average_fidelity(&with_use, &mc, Selection::kind(OutcomeKind::Extracted)).unwrap();
    let numbers_ok = (t.c_x_use_0_th - 0.0075343).abs() < 5e-7
        && (t.c_x_th - 0.0267949).abs() < 5e-7
        && (f0 - 0.847845).abs() < 1e-6
        && (c.f_x - 0.833333).abs() < 1e-6;
    let ordering_ok = t.c_x_use_0_th < t.c_x_th && f0 > c.f_x;
    let mc_ok = mc_fx.within_sigmas(c.f_x, 4.0) && mc_f0.within_sigmas(f0, 4.0);
    let summary = format!(
        "c_x_use_0_th {:.7} < c_x_th {:.7}, f0 {:.6} > f_x {:.6}; MC {:.1}σ, {:.1}σ",
        t.c_x_use_0_th,
        t.c_x_th,
        f0,
        c.f_x,
        (mc_fx.value - c.f_x).abs() / mc_fx.std_error,
        (mc_f0.value - f0).abs() / mc_f0.std_error
    );
    check(numbers_ok && ordering_ok && mc_ok, summary.clone(), summary)
}

fn concurrence_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let x = random_x_state(&mut rng, true);
        let d = (x_concurrence(&x).concurrence - general_concurrence(&x.as_matrix()).unwrap()).abs();
        worst = worst.max(d);
    }
    check(worst <= 1e-9, format!("max |Δ| = {worst:.1e} over 10000 channels"), format!("max |Δ| = {worst:.3e}"))
}

fn monte_carlo_soundness() -> Outcome {
    let channels = random_channels(9, 50);
    let mut inside = 0;
    for (i, x) in channels.iter().enumerate() {
        let plain = Teleportation::plain(Channel::X(*x), Route::Closed);
        let mc = Averaging::MonteCarlo { samples: 100_000, seed: 900 + i as u64 };
        let est = average_fidelity(&plain, &mc, Selection::all()).unwrap();
        if est.within_sigmas(ClosedForms::evaluate(x).f_x, 4.0) {
            inside += 1;
        }
    }
    check(inside >= 47, format!("{inside} of 50 within 4σ"), format!("only {inside} of 50 within 4σ"))
}

fn determinism() -> Outcome {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_xtele"))
            .args(["validate", "--seed", "42"])
            .output()
            .expect("binary runs")
    };
    let (a, b) = (run(), run());
    let same = a.stdout == b.stdout && !a.stdout.is_empty();
    let passed = a.status.code() == Some(0) && b.status.code() == Some(0);
    check(
        same && passed,
        format!("{} identical bytes, exit 0", a.stdout.len()),
        format!("identical: {same}, exit codes {:?} {:?}", a.status.code(), b.status.code()),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let channels = random_channels(3, 1000);
    let stats = x_state_stats(&channels);
    let x_elapsed = start.elapsed();

    let results: Vec<(&str, Outcome)> = vec![
        ("classical baseline", classical_baseline()),
        ("pure-channel law", pure_channel_law()),
        ("X-state law", x_state_law(&stats, x_elapsed)),
        ("decomposition identity", decomposition(&stats)),
        ("ordering claims", orderings(&stats)),
        ("threshold consistency", threshold_consistency()),
        ("threshold inversion", threshold_inversion()),
        ("concurrence oracle", concurrence_oracle()),
        ("Monte Carlo soundness", monte_carlo_soundness()),
        ("determinism", determinism()),
    ];
    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
