//! Time evolution under the flux-driven device Hamiltonian.
//!
//! Steps follow the envelope samples, so the envelope is constant within a
//! step while the carrier keeps varying. Each step uses the fourth-order
//! commutator-free Magnus scheme with two exponentials at the Gauss points.
//! Each exponential acts on the propagated columns through a Chebyshev
//! expansion of the sparse sector Hamiltonian.

use serde::{Deserialize, Serialize};

use crate::device::hamiltonian::{complex_column, sectors, Sector, StaticSpectrum};
use crate::device::spec::{flux_to_frequency, DeviceSpec, PulseConfig};
use crate::error::{FstError, Result};
use crate::linalg::{max_dist, unitarity_error, CMatrix, C64, ZERO};

/// Bessel functions `J_0(z) .. J_{n-1}(z)` by Miller's backward recurrence,
/// normalised with `J_0 + 2 sum J_{2k} = 1`.
pub fn bessel_j_sequence(z: f64, n: usize) -> Vec<f64> {
    if z == 0.0 {
        let mut out = vec![0.0; n.max(1)];
        out[0] = 1.0;
        out.truncate(n);
        return out;
    }
    let z_abs = z.abs();
    let start = {
        let m = n.max(z_abs as usize + 1)
            + 20
            + (40.0 * (n.max(z_abs as usize + 1)) as f64).sqrt() as usize;
        m + (m % 2)
    };
    let mut j = vec![0.0; start + 2];
    j[start] = 1e-300;
    for k in (1..=start).rev() {
        j[k - 1] = 2.0 * k as f64 / z_abs * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            j.iter_mut().for_each(|v| *v *= 1e-250);
        }
    }
    let norm = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
    let mut out: Vec<f64> = j.iter().take(n).map(|v| v / norm).collect();
    if z < 0.0 {
        for (k, v) in out.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

/// Chebyshev coefficients `J_k(r dt)` up to the point where the tail is below `tol`.
fn chebyshev_coefficients(x: f64, tol: f64) -> Vec<f64> {
    let n = (x + 10.0 * x.cbrt() + 30.0) as usize;
    let mut j = bessel_j_sequence(x, n);
    let mut keep = j.len();
    for k in (0..j.len()).rev() {
        if j[k].abs() > tol || (k as f64) < x {
            keep = k + 1;
            break;
        }
    }
    j.truncate(keep);
    j
}

/// Work buffers for one Chebyshev exponential.
struct ChebWork {
    prev: Vec<C64>,
    cur: Vec<C64>,
    next: Vec<C64>,
    acc: Vec<C64>,
}

impl ChebWork {
    fn new(n: usize) -> Self {
        ChebWork {
            prev: vec![ZERO; n],
            cur: vec![ZERO; n],
            next: vec![ZERO; n],
            acc: vec![ZERO; n],
        }
    }
}

/// `psi <- exp(-i H dt) psi` for `H = diag + off` of one sector.
fn expm_apply(
    sector: &Sector,
    diag: &[f64],
    dt: f64,
    psi: &mut [C64],
    work: &mut ChebWork,
    tol: f64,
) -> usize {
    let (lo, hi) = sector.spectral_bounds(diag);
    let center = 0.5 * (hi + lo);
    let radius = 0.5 * (hi - lo) * (1.0 + 1e-12) + 1e-30;
    let coeffs = chebyshev_coefficients(radius * dt, tol);
    let scaled: Vec<f64> = diag.iter().map(|d| (d - center) / radius).collect();
    let inv_r = 1.0 / radius;
    let n = psi.len();
    // T_0 psi = psi, T_1 psi = H~ psi
    let apply = |x: &[C64], out: &mut [C64]| {
        for r in 0..n {
            let mut a = x[r] * scaled[r];
            for k in sector.off.row_ptr[r]..sector.off.row_ptr[r + 1] {
                a += x[sector.off.cols[k]] * (sector.off.vals[k] * inv_r);
            }
            out[r] = a;
        }
    };
    work.prev.copy_from_slice(psi);
    apply(&work.prev, &mut work.cur);
    // (-i)^k factors cycle 1, -i, -1, i
    let phase = [
        C64::new(1.0, 0.0),
        C64::new(0.0, -1.0),
        C64::new(-1.0, 0.0),
        C64::new(0.0, 1.0),
    ];
    for r in 0..n {
        work.acc[r] = work.prev[r] * coeffs[0];
    }
    if coeffs.len() > 1 {
        let c1 = phase[1] * (2.0 * coeffs[1]);
        for r in 0..n {
            work.acc[r] += work.cur[r] * c1;
        }
    }
    for (k, &ck) in coeffs.iter().enumerate().skip(2) {
        apply(&work.cur, &mut work.next);
        for r in 0..n {
            work.next[r] = work.next[r] * 2.0 - work.prev[r];
        }
        let ck = phase[k % 4] * (2.0 * ck);
        for r in 0..n {
            work.acc[r] += work.next[r] * ck;
        }
        std::mem::swap(&mut work.prev, &mut work.cur);
        std::mem::swap(&mut work.cur, &mut work.next);
    }
    let global = C64::from_polar(1.0, -center * dt);
    for r in 0..n {
        psi[r] = work.acc[r] * global;
    }
    coeffs.len()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagationOptions {
    /// Substeps per envelope sample; `None` picks the smallest count with a
    /// substep no longer than `1 / (20 f_max)`, see [`max_frequency`].
    pub substeps_per_sample: Option<usize>,
    /// Truncation of the Chebyshev series.
    pub chebyshev_tol: f64,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        PropagationOptions {
            substeps_per_sample: None,
            chebyshev_tol: 1e-15,
        }
    }
}

impl PropagationOptions {
    pub fn substeps(&self, spec: &DeviceSpec, cfg: &PulseConfig) -> usize {
        self.substeps_per_sample.unwrap_or_else(|| {
            let dt_max = 1.0 / (20.0 * max_frequency(spec, cfg));
            ((1.0 / cfg.sample_rate) / dt_max).ceil().max(1.0) as usize
        })
    }
}

/// Fastest frequency (Hz) of the driven dynamics: the carriers and the
/// largest qubit-coupler detuning over the flux swing.
pub fn max_frequency(spec: &DeviceSpec, cfg: &PulseConfig) -> f64 {
    let mut w_max = cfg.drive_freq.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    for c in 0..2 {
        let (lo, hi) = (
            spec.phi_dc[c] - cfg.amplitude[c],
            spec.phi_dc[c] + cfg.amplitude[c],
        );
        let mut fluxes = vec![lo, hi];
        if lo < 0.0 && hi > 0.0 {
            fluxes.push(0.0);
        }
        for phi in fluxes {
            let wc = flux_to_frequency(spec, c, phi);
            for wq in spec.w {
                w_max = w_max.max((wc - wq).abs());
            }
        }
    }
    w_max / (2.0 * std::f64::consts::PI)
}

/// Columns being propagated within one sector.
#[derive(Debug, Clone)]
pub struct SectorColumns {
    pub sector: usize,
    pub columns: Vec<Vec<C64>>,
}

// fourth-order commutator-free Magnus coefficients
const SQRT3: f64 = 1.732_050_807_568_877_2;
const GAUSS: [f64; 2] = [0.5 - SQRT3 / 6.0, 0.5 + SQRT3 / 6.0];
const A_EARLY: f64 = (3.0 + 2.0 * SQRT3) / 12.0;
const A_LATE: f64 = (3.0 - 2.0 * SQRT3) / 12.0;

fn coupler_freqs(spec: &DeviceSpec, cfg: &PulseConfig, envelope: [f64; 2], t: f64) -> [f64; 2] {
    [0, 1].map(|c| {
        flux_to_frequency(
            spec,
            c,
            spec.phi_dc[c] + envelope[c] * (cfg.drive_freq[c] * t).cos(),
        )
    })
}

/// Statistics of one propagation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationStats {
    pub steps: usize,
    pub max_chebyshev_terms: usize,
}

/// Evolve sector columns from `t = 0` to the gate time.
pub fn propagate_columns(
    spec: &DeviceSpec,
    cfg: &PulseConfig,
    sectors: &[Sector; 2],
    cols: &mut [SectorColumns],
    opts: &PropagationOptions,
) -> Result<PropagationStats> {
    cfg.validate(spec)?;
    let t_end = cfg.gate_time;
    let sample_dt = 1.0 / cfg.sample_rate;
    let sub = opts.substeps(spec, cfg);
    let n_samples = (t_end * cfg.sample_rate).ceil() as usize;
    let mut works: Vec<ChebWork> = sectors.iter().map(|s| ChebWork::new(s.dim())).collect();
    let mut stats = PropagationStats {
        steps: 0,
        max_chebyshev_terms: 0,
    };
    for k in 0..n_samples {
        let t0 = k as f64 * sample_dt;
        let t1 = ((k + 1) as f64 * sample_dt).min(t_end);
        if t1 <= t0 {
            continue;
        }
        let envelope = [cfg.envelope_sample(0, k), cfg.envelope_sample(1, k)];
        let h = (t1 - t0) / sub as f64;
        for j in 0..sub {
            let ts = t0 + j as f64 * h;
            let wa = coupler_freqs(spec, cfg, envelope, ts + GAUSS[0] * h);
            let wb = coupler_freqs(spec, cfg, envelope, ts + GAUSS[1] * h);
            // first factor weights the earlier Gauss point
            let first = [0, 1].map(|c| 2.0 * (A_EARLY * wa[c] + A_LATE * wb[c]));
            let second = [0, 1].map(|c| 2.0 * (A_LATE * wa[c] + A_EARLY * wb[c]));
            for group in cols.iter_mut() {
                let s = &sectors[group.sector];
                let d1 = s.diagonal(first);
                let d2 = s.diagonal(second);
                let w = &mut works[group.sector];
                for psi in group.columns.iter_mut() {
                    let n1 = expm_apply(s, &d1, h / 2.0, psi, w, opts.chebyshev_tol);
                    let n2 = expm_apply(s, &d2, h / 2.0, psi, w, opts.chebyshev_tol);
                    stats.max_chebyshev_terms = stats.max_chebyshev_terms.max(n1).max(n2);
                }
            }
            stats.steps += 1;
        }
    }
    Ok(stats)
}

/// Simulated gate restricted to the dressed computational inputs.
#[derive(Debug, Clone)]
pub struct Propagation {
    /// `8 x 8` block `<x~| U |y~>` in the frame rotating at the dressed
    /// computational energies, computational order `q1 q2 q3`.
    pub block: CMatrix,
    /// Isometry error of the propagated columns.
    pub unitarity_error: f64,
    pub stats: PropagationStats,
    /// Raw propagated columns in the bare product basis (`dim x 8`).
    pub columns: CMatrix,
}

impl Propagation {
    /// `1 - (1/8) sum_x || P U |x> ||^2`.
    pub fn leakage(&self) -> f64 {
        let kept: f64 = self.block.iter().map(|z| z.norm_sqr()).sum();
        (1.0 - kept / 8.0).max(0.0)
    }
}

/// Dressed computational frame used for the gate block.
#[derive(Debug, Clone)]
pub struct ComputationalFrame {
    pub sectors: [Sector; 2],
    pub states: Vec<crate::device::hamiltonian::DressedState>,
}

impl ComputationalFrame {
    pub fn new(spec: &DeviceSpec) -> Result<Self> {
        let spectrum = StaticSpectrum::new(spec, spec.phi_dc);
        let states = spectrum.computational()?;
        Ok(ComputationalFrame {
            sectors: spectrum.sectors,
            states,
        })
    }
}

/// Propagate the eight dressed computational states and project back.
pub fn propagate(
    spec: &DeviceSpec,
    cfg: &PulseConfig,
    frame: &ComputationalFrame,
    opts: &PropagationOptions,
) -> Result<Propagation> {
    let mut groups: Vec<SectorColumns> = (0..2)
        .map(|s| SectorColumns {
            sector: s,
            columns: Vec::new(),
        })
        .collect();
    let mut slot = Vec::with_capacity(8);
    for d in &frame.states {
        slot.push((d.sector, groups[d.sector].columns.len()));
        groups[d.sector].columns.push(complex_column(&d.vector));
    }
    let stats = propagate_columns(spec, cfg, &frame.sectors, &mut groups, opts)?;
    let t = cfg.gate_time;
    let mut block = CMatrix::zeros(8, 8);
    let dim = frame.sectors[0].dim() + frame.sectors[1].dim();
    let mut columns = CMatrix::zeros(dim, 8);
    for (x, &(sec, k)) in slot.iter().enumerate() {
        let psi = &groups[sec].columns[k];
        for (local, &global) in frame.sectors[sec].states.iter().enumerate() {
            columns[(global, x)] = psi[local];
        }
        for (y, dy) in frame.states.iter().enumerate() {
            if dy.sector != sec {
                continue;
            }
            let amp: C64 = dy.vector.iter().zip(psi).map(|(v, z)| z * *v).sum();
            block[(y, x)] = amp * C64::from_polar(1.0, dy.energy * t);
        }
    }
    let unitarity = unitarity_error(&columns);
    Ok(Propagation {
        block,
        unitarity_error: unitarity,
        stats,
        columns,
    })
}

/// Full unitary over the product basis (every basis column propagated).
pub fn propagate_full(
    spec: &DeviceSpec,
    cfg: &PulseConfig,
    opts: &PropagationOptions,
) -> Result<CMatrix> {
    let secs = sectors(spec);
    let mut groups: Vec<SectorColumns> = (0..2)
        .map(|s| SectorColumns {
            sector: s,
            columns: (0..secs[s].dim())
                .map(|i| {
                    let mut v = vec![ZERO; secs[s].dim()];
                    v[i] = C64::new(1.0, 0.0);
                    v
                })
                .collect(),
        })
        .collect();
    propagate_columns(spec, cfg, &secs, &mut groups, opts)?;
    let dim = secs[0].dim() + secs[1].dim();
    let mut u = CMatrix::zeros(dim, dim);
    for g in &groups {
        let st = &secs[g.sector].states;
        for (c, psi) in g.columns.iter().enumerate() {
            for (r, z) in psi.iter().enumerate() {
                u[(st[r], st[c])] = *z;
            }
        }
    }
    Ok(u)
}

/// Result of repeating a propagation with half the substep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub substeps: usize,
    pub difference: f64,
    pub unitarity_error: f64,
    pub passed: bool,
}

/// Propagate with the configured substep and with half of it; compare the
/// propagated columns in max-norm.
pub fn step_halving_check(
    spec: &DeviceSpec,
    cfg: &PulseConfig,
    frame: &ComputationalFrame,
    opts: &PropagationOptions,
    tol: f64,
    unitarity_tol: f64,
) -> Result<(Propagation, ConvergenceReport)> {
    let coarse = propagate(spec, cfg, frame, opts)?;
    let sub = opts.substeps(spec, cfg);
    let fine_opts = PropagationOptions {
        substeps_per_sample: Some(2 * sub),
        ..*opts
    };
    let fine = propagate(spec, cfg, frame, &fine_opts)?;
    let difference = max_dist(&coarse.columns, &fine.columns);
    let unitarity = coarse.unitarity_error.max(fine.unitarity_error);
    let report = ConvergenceReport {
        substeps: sub,
        difference,
        unitarity_error: unitarity,
        passed: difference < tol && unitarity < unitarity_tol,
    };
    if !report.passed {
        return Err(FstError::Tolerance {
            what: "step-halving difference".into(),
            value: difference.max(unitarity),
            tol,
        });
    }
    Ok((fine, report))
}
