//! Effective qubit-only parameters from eliminating the couplers to second
//! order, the sideband coupling under flux modulation, and the ideal
//! three-qubit pulse parameters.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::device::hamiltonian::{FockBasis, StaticSpectrum};
use crate::device::spec::{flux_to_frequency, DeviceSpec};
use crate::error::{FstError, Result};

/// Dispersive ratio above which the second-order elimination is flagged.
pub const DISPERSIVE_WARN: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwtParams {
    /// Dressed qubit frequencies (rad/s).
    pub w_tilde: [f64; 3],
    pub g12: f64,
    pub g23: f64,
    /// Largest `|g / (w_c - w_q)|` encountered.
    pub dispersive_ratio: f64,
    pub warnings: Vec<String>,
}

fn shift(g: f64, wc: f64, wq: f64) -> f64 {
    g * g / (wc - wq) + g * g / (wc + wq)
}

/// Exchange coupling through one coupler at coupler frequency `wc`.
fn exchange(direct: f64, gl: f64, gr: f64, wc: f64, wl: f64, wr: f64) -> f64 {
    let s: f64 = [wl, wr]
        .iter()
        .map(|w| 1.0 / (wc - w) + 1.0 / (wc + w))
        .sum();
    direct - gl * gr / 2.0 * s
}

pub fn swt_effective_params(spec: &DeviceSpec, phi: [f64; 2]) -> SwtParams {
    let wc = [
        flux_to_frequency(spec, 0, phi[0]),
        flux_to_frequency(spec, 1, phi[1]),
    ];
    let w = spec.w;
    let w_tilde = [
        w[0] - shift(spec.g1c1, wc[0], w[0]),
        w[1] - shift(spec.g2c1, wc[0], w[1]) - shift(spec.g2c2, wc[1], w[1]),
        w[2] - shift(spec.g3c2, wc[1], w[2]),
    ];
    let g12 = exchange(spec.g12, spec.g1c1, spec.g2c1, wc[0], w[0], w[1]);
    let g23 = exchange(spec.g23, spec.g2c2, spec.g3c2, wc[1], w[1], w[2]);
    let ratios = [
        (spec.g1c1 / (wc[0] - w[0])).abs(),
        (spec.g2c1 / (wc[0] - w[1])).abs(),
        (spec.g2c2 / (wc[1] - w[1])).abs(),
        (spec.g3c2 / (wc[1] - w[2])).abs(),
    ];
    let dispersive_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    let mut warnings = Vec::new();
    if dispersive_ratio > DISPERSIVE_WARN {
        warnings.push(format!(
            "dispersive ratio {dispersive_ratio:.3} exceeds {DISPERSIVE_WARN}"
        ));
    }
    SwtParams {
        w_tilde,
        g12,
        g23,
        dispersive_ratio,
        warnings,
    }
}

/// Effective exchange coupling of the bond driven by `coupler` at flux `phi`.
pub fn swt_coupling(spec: &DeviceSpec, coupler: usize, phi: f64) -> f64 {
    let mut fluxes = spec.phi_dc;
    fluxes[coupler] = phi;
    let p = swt_effective_params(spec, fluxes);
    if coupler == 0 {
        p.g12
    } else {
        p.g23
    }
}

/// Points of the periodic trapezoid rule for the Fourier integrals.
pub const FOURIER_POINTS: usize = 256;

/// First Fourier coefficient of `g~(Phi_DC + Phi_A cos x)`.
pub fn sideband_coupling(spec: &DeviceSpec, coupler: usize, phi_a: f64) -> f64 {
    let n = FOURIER_POINTS;
    let dc = spec.phi_dc[coupler];
    (0..n)
        .map(|k| {
            let x = 2.0 * PI * k as f64 / n as f64;
            swt_coupling(spec, coupler, dc + phi_a * x.cos()) * x.cos()
        })
        .sum::<f64>()
        / n as f64
}

/// Flux amplitude whose sideband coupling has magnitude `target`, searched
/// on `(0, phi_max]`.
pub fn amplitude_for_coupling(
    spec: &DeviceSpec,
    coupler: usize,
    target: f64,
    phi_max: f64,
) -> Result<f64> {
    let f = |a: f64| sideband_coupling(spec, coupler, a).abs() - target.abs();
    let grid = 200;
    let mut lo = 0.0;
    for k in 1..=grid {
        let hi = phi_max * k as f64 / grid as f64;
        if f(hi) >= 0.0 {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                if f(m) >= 0.0 {
                    b = m;
                } else {
                    a = m;
                }
            }
            return Ok(0.5 * (a + b));
        }
        lo = hi;
    }
    Err(FstError::Validation(format!(
        "sideband coupling {target:e} rad/s not reachable on coupler {} with amplitude <= {phi_max}",
        coupler + 1
    )))
}

/// Exchange coupling read off the spectrum: the driven qubit of the bond is
/// swept through its partner and half the minimal splitting is returned, with
/// the sign taken from the lower eigenvector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericCoupling {
    pub coupling: f64,
    /// Frequency of the swept qubit at the minimal splitting (rad/s).
    pub crossing_frequency: f64,
    /// SWT coupling of the same modified device.
    pub swt: f64,
    pub relative_difference: f64,
}

pub fn numeric_coupling(spec: &DeviceSpec, coupler: usize) -> Result<NumericCoupling> {
    // bond 1-2 sweeps q1 through q2, bond 2-3 sweeps q3 through q2
    let (swept, partner) = if coupler == 0 { (0, 1) } else { (2, 1) };
    let basis = FockBasis {
        levels: spec.levels,
    };
    let bare = |q: usize| basis.computational(1 << (2 - q));
    let splitting = |w: f64| -> Result<(f64, f64)> {
        let mut s = spec.clone();
        s.w[swept] = w;
        let sp = StaticSpectrum::new(&s, s.phi_dc);
        let vals = &sp.values[1];
        let vecs = &sp.vectors[1];
        let sector = &sp.sectors[1];
        let (ra, rb) = (
            sector.local(bare(swept)).expect("odd"),
            sector.local(bare(partner)).expect("odd"),
        );
        // the two single-excitation levels with most weight on the bond qubits
        let mut weights: Vec<(usize, f64)> = (0..vals.len())
            .map(|k| (k, vecs[(ra, k)].powi(2) + vecs[(rb, k)].powi(2)))
            .collect();
        weights.sort_by(|a, b| b.1.total_cmp(&a.1));
        let (k0, k1) = (
            weights[0].0.min(weights[1].0),
            weights[0].0.max(weights[1].0),
        );
        let sign = if vecs[(ra, k0)] * vecs[(rb, k0)] > 0.0 {
            -1.0
        } else {
            1.0
        };
        Ok((vals[k1] - vals[k0], sign))
    };
    let center = spec.w[partner];
    let (mut a, mut b) = (center - 2.0 * PI * 60e6, center + 2.0 * PI * 60e6);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = splitting(x1)?.0;
    let mut f2 = splitting(x2)?.0;
    for _ in 0..80 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = splitting(x1)?.0;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = splitting(x2)?.0;
        }
        if (b - a).abs() < 1e-9 * center {
            break;
        }
    }
    let w_cross = 0.5 * (a + b);
    let (gap, sign) = splitting(w_cross)?;
    let coupling = sign * gap / 2.0;
    let mut modified = spec.clone();
    modified.w[swept] = w_cross;
    let swt = swt_coupling(&modified, coupler, spec.phi_dc[coupler]);
    Ok(NumericCoupling {
        coupling,
        crossing_frequency: w_cross,
        swt,
        relative_difference: (swt - coupling).abs() / coupling.abs(),
    })
}

/// Detuning and duration that turn `J` into the three-qubit FST gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryPulse {
    pub delta: f64,
    pub tau: f64,
}

pub fn theory_pulse(theta: f64, j: f64) -> Result<TheoryPulse> {
    if !(theta > 0.0 && theta <= PI) {
        return Err(FstError::invalid(format!(
            "theta = {theta} outside (0, pi]"
        )));
    }
    if !(j > 0.0) {
        return Err(FstError::invalid("J must be positive"));
    }
    let root = ((PI - theta / 2.0) * theta).sqrt();
    Ok(TheoryPulse {
        delta: 2.0 * j * (PI - theta) / root,
        tau: root / j,
    })
}

/// Dressed qubit frequencies averaged over one drive period of each coupler
/// (the two couplers are averaged independently).
pub fn cycle_averaged_frequencies(
    spec: &DeviceSpec,
    amplitudes: [f64; 2],
    points: usize,
) -> Result<[f64; 3]> {
    let base = StaticSpectrum::new(spec, spec.phi_dc).qubit_frequencies()?;
    let mut out = base;
    for c in 0..2 {
        if amplitudes[c] == 0.0 {
            continue;
        }
        let mut acc = [0.0; 3];
        for k in 0..points {
            let x = 2.0 * PI * (k as f64 + 0.5) / points as f64;
            let mut phi = spec.phi_dc;
            phi[c] += amplitudes[c] * x.cos();
            let f = StaticSpectrum::new(spec, phi).qubit_frequencies()?;
            for q in 0..3 {
                acc[q] += f[q] / points as f64;
            }
        }
        for q in 0..3 {
            out[q] += acc[q] - base[q];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{coupling_times, detuning_times};
    use crate::device::spec::MHZ;

    #[test]
    fn no_coupler_coupling_reduces_to_bare() {
        let mut s = DeviceSpec::reference();
        s.g1c1 = 0.0;
        s.g2c1 = 0.0;
        s.g2c2 = 0.0;
        s.g3c2 = 0.0;
        let p = swt_effective_params(&s, s.phi_dc);
        assert_eq!(p.w_tilde, s.w);
        assert_eq!((p.g12, p.g23), (s.g12, s.g23));
    }

    #[test]
    fn reference_coupling_scale() {
        let s = DeviceSpec::reference();
        let p = swt_effective_params(&s, s.phi_dc);
        assert!(p.g12 > 2.0 * MHZ && p.g12 < 6.0 * MHZ, "{}", p.g12 / MHZ);
        assert!(p.warnings.is_empty());
        let q = swt_effective_params(&s, [1.3, 1.3]);
        assert!((q.g12 - p.g12).abs() < 1e-6 * p.g12.abs());
    }

    #[test]
    fn sideband_small_amplitude_is_linear() {
        let s = DeviceSpec::reference();
        assert!(
            sideband_coupling(&s, 0, 0.0).abs() < 1e-12 * swt_coupling(&s, 0, s.phi_dc[0]).abs()
        );
        let (h, dc) = (1e-5, s.phi_dc[0]);
        let slope = (swt_coupling(&s, 0, dc + h) - swt_coupling(&s, 0, dc - h)) / (2.0 * h);
        let a = 1e-3;
        let g1 = sideband_coupling(&s, 0, a);
        assert!((g1 - slope * a / 2.0).abs() < 1e-3 * (slope * a / 2.0).abs());
    }

    #[test]
    fn theory_pulse_values() {
        let p = theory_pulse(PI, 1.0).unwrap();
        assert_eq!(p.delta, 0.0);
        assert!((p.tau - PI / 2f64.sqrt()).abs() < 1e-15);
        let q = theory_pulse(PI / 2.0, 1.0).unwrap();
        assert!((q.tau - (3.0 * PI * PI / 8.0).sqrt()).abs() < 1e-15);
        assert!((q.delta - PI / q.tau).abs() < 1e-14);
        let small = theory_pulse(1e-8, 1.0).unwrap();
        assert!((small.delta * small.tau - 2.0 * PI).abs() < 1e-6);
    }

    #[test]
    fn theory_pulse_matches_three_site_synthesis() {
        for k in 1..=20 {
            let theta = PI * k as f64 / 20.0;
            let p = theory_pulse(theta, 1.0).unwrap();
            let jt = coupling_times(3, theta).unwrap();
            let dt = detuning_times(3, theta);
            assert!((jt[0] / p.tau - 1.0).abs() < 1e-12);
            assert!(((dt[0] - dt[1]) / p.tau - p.delta).abs() < 1e-10);
        }
    }
}
