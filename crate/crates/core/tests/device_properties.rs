use std::f64::consts::PI;

use fstchain::device::hamiltonian::FockBasis;
use fstchain::device::metrics::{block_metrics, z_layer};
use fstchain::device::spec::flux_factor;
use fstchain::device::swt::{swt_coupling, swt_effective_params};
use fstchain::device::zz::zz_coupling;
use fstchain::device::{
    build_hamiltonian, flux_to_frequency, propagate, pulse_envelope, ComputationalFrame,
    DeviceSpec, PropagationOptions, PulseConfig, GHZ, NS,
};
use proptest::prelude::*;

fn uncoupled() -> DeviceSpec {
    let mut s = DeviceSpec::reference();
    s.g1c1 = 0.0;
    s.g2c1 = 0.0;
    s.g2c2 = 0.0;
    s.g3c2 = 0.0;
    s.g12 = 0.0;
    s.g23 = 0.0;
    s
}

#[test]
fn flux_response() {
    let s = DeviceSpec::reference();
    for c in 0..2 {
        let wmax = s.coupler_max_frequency(c);
        assert!((flux_to_frequency(&s, c, 0.0) - wmax).abs() < 1e-6);
        let half = s.ac[c] + (wmax - s.ac[c]) * 0.5f64.sqrt();
        assert!((flux_to_frequency(&s, c, 0.5) - half).abs() < 1e-6);
        assert!((flux_to_frequency(&s, c, s.phi_dc[c]) - s.wc[c]).abs() < 1e-6);
    }
    assert_eq!(flux_factor(0.5, 0.0), 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn flux_response_and_couplings_are_periodic(phi in -0.49f64..0.49, c in 0usize..2) {
        let s = DeviceSpec::reference();
        let a = flux_to_frequency(&s, c, phi);
        prop_assert!((flux_to_frequency(&s, c, phi + 1.0) - a).abs() <= 1e-9 * a);
        prop_assert!((flux_to_frequency(&s, c, -phi) - a).abs() <= 1e-9 * a);
        let g = swt_coupling(&s, c, phi);
        prop_assert!((swt_coupling(&s, c, phi + 1.0) - g).abs() <= 1e-9 * g.abs().max(1.0));
    }

    #[test]
    fn envelope_stays_on_branch(t in 0.0f64..1.0, a1 in 0.0f64..0.19, a2 in 0.0f64..0.19) {
        let s = DeviceSpec::reference();
        let cfg = PulseConfig { amplitude: [a1, a2], drive_freq: [0.06 * GHZ, 0.085 * GHZ], rise_time: 2.0 * NS, gate_time: 100.0 * NS, sample_rate: 2.4e9 };
        let phi = pulse_envelope(&s, &cfg, t * cfg.gate_time);
        for c in 0..2 {
            prop_assert!((phi[c] - s.phi_dc[c]).abs() <= cfg.amplitude[c] + 1e-15);
        }
    }
}

#[test]
fn uncoupled_hamiltonian_is_a_duffing_ladder() {
    let s = uncoupled();
    let h = build_hamiltonian(&s, s.phi_dc);
    let b = FockBasis { levels: 3 };
    for q in 0..3 {
        let mut one = [0; 5];
        one[q] = 1;
        assert!((h[(b.index(&one), b.index(&one))] - s.w[q]).abs() < 1e-3);
        one[q] = 2;
        assert!((h[(b.index(&one), b.index(&one))] - (2.0 * s.w[q] + s.a[q])).abs() < 1e-3);
    }
    assert_eq!(
        h.iter()
            .enumerate()
            .filter(|(k, v)| k % 244 != 0 && **v != 0.0)
            .count(),
        0
    );
    let p = swt_effective_params(&s, s.phi_dc);
    assert_eq!(p.w_tilde, s.w);
    // energies are ~1e10 rad/s, so rounding leaves a few micro-rad/s
    assert!(zz_coupling(&s, s.phi_dc, 0).unwrap().abs() < 1e-3);
}

#[test]
fn zz_scales_as_fourth_power_of_coupler_coupling() {
    let base = DeviceSpec::reference();
    let scaled = |k: f64| {
        let mut s = base.clone();
        s.g12 = 0.0;
        s.g23 = 0.0;
        s.g1c1 *= k;
        s.g2c1 *= k;
        s.g2c2 *= k;
        s.g3c2 *= k;
        zz_coupling(&s, s.phi_dc, 0).unwrap().abs()
    };
    let ks = [0.05, 0.1, 0.2];
    let z: Vec<f64> = ks.iter().map(|k| scaled(*k)).collect();
    for i in 0..2 {
        let slope = (z[i + 1] / z[i]).ln() / (ks[i + 1] / ks[i]).ln();
        assert!((slope - 4.0).abs() < 0.15, "slope {slope}, zeta {z:?}");
    }
}

#[test]
fn envelope_edges_and_plateau() {
    let s = DeviceSpec::reference();
    let cfg = PulseConfig {
        amplitude: [0.05, 0.0],
        drive_freq: [0.0, 0.0],
        rise_time: 2.0 * NS,
        gate_time: 212.0 * NS,
        sample_rate: 2.4e9,
    };
    let edge = cfg.envelope_exact(0, 0.0) / 0.05;
    assert!(
        (edge - (1.0 + libm_erf_minus_two()) / 2.0).abs() < 1e-12,
        "{edge}"
    );
    assert!((cfg.envelope_exact(0, 106.0 * NS) - 0.05).abs() < 1e-12);
    let mid = pulse_envelope(&s, &cfg, 106.0 * NS);
    assert!((mid[0] - s.phi_dc[0] - 0.05).abs() < 1e-12);
    assert_eq!(mid[1], s.phi_dc[1]);
    assert!((cfg.effective_duration() - 204.0 * NS).abs() < 1e-18);
}

// erf(-2) to double precision
fn libm_erf_minus_two() -> f64 {
    -0.995_322_265_018_952_7
}

#[test]
fn simulated_block_metrics() {
    let s = DeviceSpec::reference();
    let frame = ComputationalFrame::new(&s).unwrap();
    let cfg = PulseConfig {
        amplitude: [0.08, 0.06],
        drive_freq: [0.0607 * GHZ, 0.0855 * GHZ],
        rise_time: 2.0 * NS,
        gate_time: 30.0 * NS,
        sample_rate: 2.4e9,
    };
    let p = propagate(&s, &cfg, &frame, &PropagationOptions::default()).unwrap();
    assert!(p.unitarity_error < 1e-8);
    let theta = PI / 3.0;
    let m = block_metrics(&p.block, theta).unwrap();
    assert!(m.avg_fidelity <= 1.0 - m.leakage + 1e-12);
    for (k, z) in [[0.3, -1.2, 2.0], [3.0, 0.1, -0.7]].iter().enumerate() {
        let pre = &p.block * z_layer(*z);
        let post = z_layer(*z) * &p.block;
        let a = block_metrics(&pre, theta).unwrap();
        let b = block_metrics(&post, theta).unwrap();
        assert!(
            (a.avg_fidelity - m.avg_fidelity).abs() < 1e-9,
            "{k}: {a:?} vs {m:?}"
        );
        assert!(
            (b.avg_fidelity - m.avg_fidelity).abs() < 1e-9,
            "{k}: {b:?} vs {m:?}"
        );
    }
}

#[test]
fn file_formats_use_gigahertz_and_nanoseconds() {
    let s = DeviceSpec::reference();
    let text = serde_json::to_string(&s).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!((v["w1"].as_f64().unwrap() - 5.05).abs() < 1e-12);
    assert!((v["phi_dc2"].as_f64().unwrap() - 0.3).abs() < 1e-15);
    let back: DeviceSpec = serde_json::from_str(&text).unwrap();
    assert!((back.w[0] - s.w[0]).abs() < 1e-3);
    let cfg: PulseConfig = serde_json::from_str(
        r#"{"phi_a1":0.05,"phi_a2":0.05,"wd1":0.06,"wd2":0.085,"tau_r":2,"tau_final":212}"#,
    )
    .unwrap();
    assert_eq!(cfg.sample_rate, 2.4e9);
    assert!((cfg.gate_time - 212.0 * NS).abs() < 1e-20);
    assert!(serde_json::from_str::<PulseConfig>(
        r#"{"phi_a1":0.05,"phi_a2":0.05,"wd1":0.06,"wd2":0.085,"tau_r":2,"tau_final":8}"#
    )
    .is_err());
    let mut bad = serde_json::to_value(&s).unwrap();
    bad["phi_dc1"] = serde_json::json!(0.6);
    assert!(serde_json::from_value::<DeviceSpec>(bad).is_err());
}
