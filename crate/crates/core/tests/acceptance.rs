//! Acceptance checks. Each test prints one PASS/FAIL line and fails when the
//! criterion does not hold.

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use fstchain::chain::{coupling_times, detuning_times, synthesize, ChainSpec};
use fstchain::circuit::{
    compile_decomposition, decomposition_distance, even_small_angle_asymptote,
    expected_gate_counts, speed_gain, AngleConvention, DECOMPOSITION_CHECK_MAX_SITES,
};
use fstchain::device::optimize::{
    detuning_tracking, optimize_pulse, seed_pulse, OptimizeOptions, PulseShape,
};
use fstchain::device::propagate::step_halving_check;
use fstchain::device::swt::{numeric_coupling, theory_pulse};
use fstchain::device::zz::zz_scan;
use fstchain::device::{ComputationalFrame, DeviceSpec, PropagationOptions};
use fstchain::fermion::{dense_oracle, lift_to_full, single_propagator};
use fstchain::gates::verify_mapping;
use fstchain::protocols::{parity_measure, Parity, ProtocolOptions};
use fstchain::scenario::{run_scenario, EventKind, Scenario};
use fstchain::{StateVector, C64};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(name: &str, passed: bool, detail: String, start: Instant) {
    let verdict = if passed { "PASS" } else { "FAIL" };
    // written to the handle directly so the line survives output capture
    let _ = writeln!(
        std::io::stdout().lock(),
        "{verdict} {name}: {detail} [{:.1}s]",
        start.elapsed().as_secs_f64()
    );
    assert!(passed, "{name}: {detail}");
}

#[test]
fn mapping_theorem() {
    let start = Instant::now();
    let mut worst = (0.0f64, 0, 0.0);
    for n in 2..=8 {
        for frac in [0.1, 0.3, 0.5, 0.8, 1.0] {
            let theta = frac * PI;
            let params = synthesize(&ChainSpec::with_tau(n, theta, 1.0).unwrap()).unwrap();
            let r = verify_mapping(&params, theta, 1e-8).unwrap();
            if r.distance > worst.0 {
                worst = (r.distance, n, frac);
            }
        }
    }
    let detail = format!(
        "max distance {:.2e} (N={}, theta={}pi), tol 1e-8",
        worst.0, worst.1, worst.2
    );
    report(
        "mapping theorem, N=2..8 x 5 angles",
        worst.0 < 1e-8,
        detail,
        start,
    );
}

#[test]
fn free_fermion_lift_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = 2 + (rng.random::<u32>() % 7) as usize;
        let theta = PI * (0.01 + 0.99 * rng.random::<f64>());
        let tau = 0.5 + 1.5 * rng.random::<f64>();
        let t = 2.0 * tau * rng.random::<f64>();
        let params = synthesize(&ChainSpec::with_tau(n, theta, tau).unwrap()).unwrap();
        let lifted = lift_to_full(&single_propagator(&params, t).unwrap()).unwrap();
        let dense = dense_oracle(&params, t).unwrap();
        worst = worst.max(lifted.distance(&dense));
    }
    report(
        "free-fermion lift, 200 random draws",
        worst < 1e-9,
        format!("max distance {worst:.2e}, tol 1e-9"),
        start,
    );
}

#[test]
fn half_turn_transfer_on_fifteen_sites() {
    let start = Instant::now();
    let theta = PI / 2.0;
    let split = run_scenario(&Scenario::new(15, theta, &[1]).unwrap().until(2.0)).unwrap();
    let at_tau = split.populations_at(1.0);
    let at_two = split.populations_at(2.0);
    let flip = Scenario::new(15, theta, &[1, 8])
        .unwrap()
        .with_event(1.0, EventKind::XFlip, Some(8))
        .until(2.0);
    let flipped = run_scenario(&flip).unwrap();
    let back = flipped.populations_at(2.0)[0];
    let errs = [
        (at_tau[0] - 0.5).abs(),
        (at_tau[14] - 0.5).abs(),
        (at_two[14] - 1.0).abs(),
        (back - 1.0).abs(),
    ];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    let detail = format!(
        "p1(tau)={:.9}, p15(tau)={:.9}, p15(2tau)={:.9}, flip p1(2tau)={:.9}",
        at_tau[0], at_tau[14], at_two[14], back
    );
    report(
        "N=15 half-turn transfer and middle flip",
        worst < 1e-6,
        detail,
        start,
    );
}

#[test]
fn decomposition_counts_times_and_equivalence() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for n in 3..=8 {
        for theta in [0.37, PI / 2.0, PI] {
            let c = compile_decomposition(n, theta, 1.0, 1e-8).unwrap();
            let (f, i) = expected_gate_counts(n);
            let total = if n % 2 == 0 {
                n * n / 2 - n + n / 2
            } else {
                (n - 1) * (n - 1) / 2 + (n - 1) / 2
            };
            if c.fswap_count() != f || c.iswap_count() != i || f + i != total {
                failures.push(format!(
                    "N={n} counts {}+{}",
                    c.fswap_count(),
                    c.iswap_count()
                ));
            }
            let expected = if n % 2 == 0 {
                n as f64 * PI / 2.0
            } else {
                (n as f64 + 1.0) * PI / 2.0
            };
            let checked = if n % 2 == 0 { n > 4 } else { n > 3 };
            if checked && (c.total_duration() - expected).abs() > 1e-12 {
                failures.push(format!(
                    "N={n} theta={theta:.3} duration {}",
                    c.total_duration()
                ));
            }
            if n <= DECOMPOSITION_CHECK_MAX_SITES {
                worst = worst
                    .max(decomposition_distance(&c, theta, AngleConvention::HalfAngle).unwrap());
            }
        }
    }
    let ok = failures.is_empty() && worst < 1e-8;
    let detail =
        format!("count/duration mismatches {failures:?}, max Z-layer distance {worst:.2e} (N<=6)");
    report(
        "swap-network counts, durations, equivalence",
        ok,
        detail,
        start,
    );
}

#[test]
fn speed_gains() {
    let start = Instant::now();
    let sqrt3 = 3f64.sqrt();
    let mut failures = Vec::new();
    let mut floor = f64::INFINITY;
    let mut asym_err = 0.0f64;
    for n in 5..=40 {
        let full = speed_gain(n, PI, 1.0).unwrap().ratio;
        if full < 2.0 - 1e-12 {
            failures.push(format!("N={n} ratio(pi)={full}"));
        }
        for k in 0..=40 {
            let theta = if k == 0 { 1e-6 } else { PI * k as f64 / 40.0 };
            floor = floor.min(speed_gain(n, theta, 1.0).unwrap().ratio);
        }
        if n % 2 == 0 {
            let small = speed_gain(n, 1e-6, 1.0).unwrap().ratio;
            asym_err = asym_err.max((small - even_small_angle_asymptote(n)).abs());
        }
    }
    // odd chains approach 2 only for long chains
    let odd_limit = speed_gain(1001, 1e-6, 1.0).unwrap().ratio;
    let ok = failures.is_empty()
        && floor >= sqrt3 - 1e-12
        && asym_err < 1e-6
        && (odd_limit - 2.0).abs() <= 0.01;
    let detail = format!(
        "ratio(pi)>=2 violations {failures:?}; min ratio {floor:.6} vs sqrt3; even asymptote err {asym_err:.1e}; odd small-angle N=1001 {odd_limit:.5}"
    );
    report("speed gains N=5..40", ok, detail, start);
}

#[test]
fn parity_protocol() {
    let start = Instant::now();
    let opts = ProtocolOptions::default();
    let mut wrong = 0;
    let mut total = 0;
    let mut sharpness = 0.0f64;
    let mut duration_err = 0.0f64;
    for n in 1..=6 {
        for x in 0..1usize << n {
            let r = parity_measure(&StateVector::basis(n, x), &opts).unwrap();
            total += 1;
            if r.inferred_parity != Parity::of_weight(x.count_ones()) {
                wrong += 1;
            }
            let p = r.left_ancilla_one_probability;
            sharpness = sharpness.max(p.min(1.0 - p));
            duration_err = duration_err.max((r.duration_in_iswaps - (n as f64 + 2.0) / 2.0).abs());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut linearity = 0.0f64;
    for _ in 0..100 {
        let n = 1 + (rng.random::<u32>() % 6) as usize;
        let amps: Vec<C64> = (0..1usize << n)
            .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let psi = StateVector::new(n, amps).unwrap().normalized().unwrap();
        let r = parity_measure(&psi, &opts).unwrap();
        let dim = 1usize << (n + 2);
        let mut combined = vec![C64::new(0.0, 0.0); dim];
        let mut p_even = 0.0;
        for (x, a) in psi.amplitudes().iter().enumerate() {
            let basis = parity_measure(&StateVector::basis(n, x), &opts).unwrap();
            for (c, b) in combined.iter_mut().zip(basis.post_state.amplitudes()) {
                *c += a * b;
            }
            if x.count_ones() % 2 == 0 {
                p_even += a.norm_sqr();
            }
        }
        let state_err = combined
            .iter()
            .zip(r.post_state.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        linearity = linearity
            .max(state_err)
            .max((r.left_ancilla_one_probability - p_even).abs());
    }
    let ok = wrong == 0 && sharpness < 1e-9 && linearity < 1e-8 && duration_err <= 1.0;
    let detail = format!(
        "{}/{total} basis states correct, max ambiguity {sharpness:.1e}, linearity err {linearity:.1e}, duration within {duration_err:.3} tau_iSWAP of (N+2)/2",
        total - wrong
    );
    report("parity protocol N<=6", ok, detail, start);
}

#[test]
fn synthesis_identities() {
    let start = Instant::now();
    let mut worst_pst = 0.0f64;
    for n in 2..=51 {
        let jt = coupling_times(n, PI).unwrap();
        for (k, j) in jt.iter().enumerate() {
            let m = (k + 1) as f64;
            let expected = PI / 2.0 * (m * (n as f64 - m)).sqrt();
            worst_pst = worst_pst.max((j - expected).abs() / expected);
        }
        let dt = detuning_times(n, PI);
        worst_pst = worst_pst.max(dt.iter().map(|d| (d - dt[0]).abs()).fold(0.0, f64::max));
    }
    let mut worst_three = 0.0f64;
    for k in 1..=50 {
        let theta = PI * k as f64 / 50.0;
        let p = theory_pulse(theta, 1.0).unwrap();
        let jt = coupling_times(3, theta).unwrap();
        let dt = detuning_times(3, theta);
        worst_three = worst_three
            .max((jt[0] - p.tau).abs())
            .max((jt[1] - p.tau).abs())
            .max(((dt[0] - dt[1]) - p.delta * p.tau).abs())
            .max((dt[2] - dt[0]).abs());
    }
    let ok = worst_pst < 1e-10 && worst_three < 1e-10;
    let detail = format!("full-turn profile err {worst_pst:.1e} (N=2..51), three-site pulse err {worst_three:.1e} (50 angles)");
    report("synthesis identities", ok, detail, start);
}

#[test]
fn device_model() {
    let start = Instant::now();
    let spec = DeviceSpec::reference();
    let shape = PulseShape::default();
    let seed = seed_pulse(&spec, PI, &shape).unwrap();
    let frame = ComputationalFrame::new(&spec).unwrap();
    let (_, conv) = step_halving_check(
        &spec,
        &seed.config,
        &frame,
        &PropagationOptions::default(),
        1e-6,
        1e-8,
    )
    .unwrap();
    let swt: Vec<f64> = (0..2)
        .map(|c| numeric_coupling(&spec, c).unwrap().relative_difference)
        .collect();
    let scan = zz_scan(&spec, 0, 0.0, 0.45, 46).unwrap();
    let opt = optimize_pulse(&spec, PI, &seed.config, &OptimizeOptions::default()).unwrap();
    let tracking = detuning_tracking(&spec, &opt.config, PI, seed.coupling).unwrap();
    let ok = conv.passed
        && conv.unitarity_error < 1e-8
        && swt.iter().all(|r| *r < 0.15)
        && !scan.sign_changes.is_empty()
        && opt.metrics.infidelity < 1e-2
        && opt.evaluations <= 200
        && tracking.passed;
    let detail = format!(
        "halving diff {:.1e}, unitarity {:.1e}; SWT rel err {:.3}/{:.3}; ZZ zeros at {:?}; infidelity {:.2e} -> {:.2e} in {} evals (leakage {:.1e}); detuning rel {:.3}/{:.3}",
        conv.difference,
        conv.unitarity_error,
        swt[0],
        swt[1],
        scan.sign_changes.iter().map(|p| (p * 1e4).round() / 1e4).collect::<Vec<_>>(),
        opt.initial_metrics.infidelity,
        opt.metrics.infidelity,
        opt.evaluations,
        opt.metrics.leakage,
        tracking.relative[0],
        tracking.relative[1],
    );
    report("device model", ok, detail, start);
}
