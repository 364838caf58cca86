use std::f64::consts::PI;

use fstchain::chain::{
    coupling_times, detuning_range, gate_time_bound, solve_gate_time, spectrum_check, synthesize,
    ChainSpec,
};
use fstchain::fermion::single_propagator;
use proptest::prelude::*;

fn angle() -> impl Strategy<Value = f64> {
    (1e-3f64..=1.0).prop_map(|x| x * PI)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn parameters_are_mirror_symmetric(n in 2usize..=60, theta in angle(), tau in 0.1f64..10.0) {
        let p = synthesize(&ChainSpec::with_tau(n, theta, tau).unwrap()).unwrap();
        let j = &p.couplings;
        let d = &p.detunings;
        for k in 0..j.len() {
            prop_assert!((j[k] - j[j.len() - 1 - k]).abs() <= 1e-12 * j[k].abs().max(1.0));
            prop_assert!(j[k] >= 0.0);
        }
        for k in 0..n {
            prop_assert!((d[k] - d[n - 1 - k]).abs() <= 1e-12 * d[k].abs().max(1.0));
        }
        if n % 2 == 0 {
            prop_assert!(d.iter().all(|x| *x == 0.0));
        }
    }

    #[test]
    fn products_do_not_depend_on_tau(n in 2usize..=30, theta in angle(), tau in 0.1f64..10.0) {
        let p = synthesize(&ChainSpec::with_tau(n, theta, tau).unwrap()).unwrap();
        let jt = coupling_times(n, theta).unwrap();
        for (j, expected) in p.couplings.iter().zip(&jt) {
            prop_assert!((j * tau - expected).abs() <= 1e-12 * expected.max(1.0));
        }
    }

    #[test]
    fn spectrum_and_transfer_structure(n in 2usize..=16, theta in angle()) {
        let p = synthesize(&ChainSpec::with_tau(n, theta, 1.0).unwrap()).unwrap();
        spectrum_check(&p, theta, 1e-8).unwrap();
        let u = single_propagator(&p, 1.0).unwrap();
        prop_assert!(u.unitarity_error() < 1e-10);
        prop_assert!(u.transfer_structure_error(theta) < 1e-8);
    }

    #[test]
    fn gate_time_respects_bound_and_grows_with_length(n in 2usize..=60, theta in angle(), j_max in 0.1f64..10.0) {
        let t = solve_gate_time(n, theta, j_max).unwrap();
        prop_assert!(t <= gate_time_bound(n, j_max) * (1.0 + 1e-12));
        let longer = solve_gate_time(n + 2, theta, j_max).unwrap();
        prop_assert!(longer > t);
        let p = synthesize(&ChainSpec::with_j_max(n, theta, j_max).unwrap()).unwrap();
        let largest = p.couplings.iter().cloned().fold(0.0, f64::max);
        prop_assert!((largest - j_max).abs() <= 1e-12 * j_max);
    }

    #[test]
    fn odd_detuning_range_is_twice_the_closed_form(m in 1usize..=30, theta in angle(), tau in 0.1f64..10.0) {
        let n = 2 * m + 1;
        let p = synthesize(&ChainSpec::with_tau(n, theta, tau).unwrap()).unwrap();
        let r = detuning_range(&p, theta);
        prop_assert!((r.direct - 2.0 * r.closed_form).abs() <= 1e-10 * r.direct.abs().max(1e-12));
    }
}

#[test]
fn full_turn_profile() {
    for n in 2..=40 {
        let jt = coupling_times(n, PI).unwrap();
        for (k, j) in jt.iter().enumerate() {
            let m = (k + 1) as f64;
            let expected = PI / 2.0 * (m * (n as f64 - m)).sqrt();
            assert!((j - expected).abs() <= 1e-12 * expected);
        }
    }
}

#[test]
fn nine_site_full_turn_spectrum_is_equally_spaced() {
    let p = synthesize(&ChainSpec::with_tau(9, PI, 1.0).unwrap()).unwrap();
    let r = spectrum_check(&p, PI, 1e-8).unwrap();
    for g in &r.scaled_gaps {
        assert!((g - PI).abs() < 1e-9);
    }
}
