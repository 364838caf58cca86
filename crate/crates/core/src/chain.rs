//! Chain Hamiltonian parameters that realise fractional state transfer (FST).
//!
//! A chain of `N` qubits with nearest-neighbour XY couplings `J_n` and on-site
//! detunings `Delta_n` rotates every mirror pair `(n, N+1-n)` by the transfer
//! angle `theta` after the transfer time `tau`, provided the single-excitation
//! spectrum has the alternating gap structure produced here. All frequencies
//! are angular (rad/s) with hbar = 1.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{FstError, Result};
use crate::linalg::{angle_distance, sorted_symmetric_eigen, wrap_angle};

/// Time scale of a chain: either the transfer time or the coupling ceiling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeScale {
    /// Transfer time in seconds.
    Tau(f64),
    /// Largest admissible coupling in rad/s; `tau` is then solved for.
    JMax(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChainSpecFile", into = "ChainSpecFile")]
pub struct ChainSpec {
    pub n_sites: usize,
    pub theta: f64,
    pub scale: TimeScale,
}

#[derive(Serialize, Deserialize)]
struct ChainSpecFile {
    n_sites: usize,
    theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    j_max: Option<f64>,
}

impl TryFrom<ChainSpecFile> for ChainSpec {
    type Error = FstError;

    fn try_from(f: ChainSpecFile) -> Result<Self> {
        let scale = match (f.tau, f.j_max) {
            (Some(t), None) => TimeScale::Tau(t),
            (None, Some(j)) => TimeScale::JMax(j),
            _ => {
                return Err(FstError::invalid(
                    "exactly one of `tau` and `j_max` must be given",
                ))
            }
        };
        ChainSpec::new(f.n_sites, f.theta, scale)
    }
}

impl From<ChainSpec> for ChainSpecFile {
    fn from(s: ChainSpec) -> Self {
        let (tau, j_max) = match s.scale {
            TimeScale::Tau(t) => (Some(t), None),
            TimeScale::JMax(j) => (None, Some(j)),
        };
        ChainSpecFile {
            n_sites: s.n_sites,
            theta: s.theta,
            tau,
            j_max,
        }
    }
}

impl ChainSpec {
    pub fn new(n_sites: usize, theta: f64, scale: TimeScale) -> Result<Self> {
        let spec = ChainSpec {
            n_sites,
            theta,
            scale,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_tau(n_sites: usize, theta: f64, tau: f64) -> Result<Self> {
        Self::new(n_sites, theta, TimeScale::Tau(tau))
    }

    pub fn with_j_max(n_sites: usize, theta: f64, j_max: f64) -> Result<Self> {
        Self::new(n_sites, theta, TimeScale::JMax(j_max))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(FstError::invalid(format!(
                "n_sites must be >= 2, got {}",
                self.n_sites
            )));
        }
        if !(self.theta > 0.0 && self.theta <= PI) {
            return Err(FstError::invalid(format!(
                "theta must lie in (0, pi], got {}",
                self.theta
            )));
        }
        let s = match self.scale {
            TimeScale::Tau(t) => t,
            TimeScale::JMax(j) => j,
        };
        if !(s > 0.0 && s.is_finite()) {
            return Err(FstError::invalid(format!(
                "time scale must be positive, got {s}"
            )));
        }
        Ok(())
    }

    /// Transfer time, solving for it when only `j_max` is known.
    pub fn tau(&self) -> Result<f64> {
        match self.scale {
            TimeScale::Tau(t) => Ok(t),
            TimeScale::JMax(j) => solve_gate_time(self.n_sites, self.theta, j),
        }
    }
}

/// Couplings and detunings realising FST, together with the transfer time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub couplings: Vec<f64>,
    pub detunings: Vec<f64>,
    pub tau: f64,
}

impl ChainParams {
    pub fn new(couplings: Vec<f64>, detunings: Vec<f64>, tau: f64) -> Result<Self> {
        if detunings.is_empty() || couplings.len() + 1 != detunings.len() {
            return Err(FstError::invalid(format!(
                "need N detunings and N-1 couplings, got {} and {}",
                detunings.len(),
                couplings.len()
            )));
        }
        Ok(ChainParams {
            couplings,
            detunings,
            tau,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.detunings.len()
    }

    pub fn hamiltonian(&self) -> SingleExcitationHamiltonian {
        SingleExcitationHamiltonian::from_params(self)
    }

    /// Largest relative violation of `J_n = J_{N-n}` and `Delta_n = Delta_{N+1-n}`.
    pub fn mirror_asymmetry(&self) -> f64 {
        let scale = self
            .couplings
            .iter()
            .chain(&self.detunings)
            .fold(0.0f64, |a, x| a.max(x.abs()))
            .max(f64::MIN_POSITIVE);
        let j = &self.couplings;
        let d = &self.detunings;
        let jr = j.iter().zip(j.iter().rev()).map(|(a, b)| (a - b).abs());
        let dr = d.iter().zip(d.iter().rev()).map(|(a, b)| (a - b).abs());
        jr.chain(dr).fold(0.0, f64::max) / scale
    }
}

/// The `N x N` single-excitation block of the chain Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleExcitationHamiltonian(pub DMatrix<f64>);

impl SingleExcitationHamiltonian {
    pub fn from_params(p: &ChainParams) -> Self {
        let n = p.n_sites();
        let mut m = DMatrix::zeros(n, n);
        for (i, d) in p.detunings.iter().enumerate() {
            m[(i, i)] = *d;
        }
        for (i, j) in p.couplings.iter().enumerate() {
            m[(i, i + 1)] = *j;
            m[(i + 1, i)] = *j;
        }
        SingleExcitationHamiltonian(m)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// Largest deviation from `M[i][j] = M[N-1-j][N-1-i]` (0-based).
    pub fn persymmetry_error(&self) -> f64 {
        let n = self.0.nrows();
        let mut err: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                err = err.max((self.0[(i, j)] - self.0[(n - 1 - j, n - 1 - i)]).abs());
            }
        }
        err
    }
}

/// `J_n * tau` for `n = 1..N-1`. The products do not depend on `tau`.
pub fn coupling_times(n_sites: usize, theta: f64) -> Result<Vec<f64>> {
    let nn = n_sites as f64;
    let x = theta / PI;
    (1..n_sites)
        .map(|n| {
            let k = n as f64;
            let d = nn - 2.0 * k;
            let radicand = if n_sites % 2 == 0 {
                k * (nn - k) * (d * d - x * x) / ((d - 1.0) * (d + 1.0))
            } else {
                k * (nn - k) * (d * d - (x - 1.0).powi(2)) / (d * d)
            };
            if radicand < 0.0 || !radicand.is_finite() {
                return Err(FstError::Domain {
                    index: n,
                    value: radicand,
                });
            }
            Ok(0.5 * PI * radicand.sqrt())
        })
        .collect()
}

/// `Delta_n * tau` for `n = 1..N`; identically zero on even chains.
pub fn detuning_times(n_sites: usize, theta: f64) -> Vec<f64> {
    if n_sites % 2 == 0 {
        return vec![0.0; n_sites];
    }
    let nn = n_sites as f64;
    let prefactor = 0.5 * PI * (theta / PI - 1.0) * nn / 2.0;
    (1..=n_sites)
        .map(|n| {
            let k = n as f64;
            prefactor * (1.0 / (2.0 * k - nn) - 1.0 / (2.0 * k - 2.0 - nn))
        })
        .collect()
}

pub fn synthesize(spec: &ChainSpec) -> Result<ChainParams> {
    spec.validate()?;
    let tau = spec.tau()?;
    let couplings = coupling_times(spec.n_sites, spec.theta)?
        .into_iter()
        .map(|j| j / tau)
        .collect();
    let detunings = detuning_times(spec.n_sites, spec.theta)
        .into_iter()
        .map(|d| d / tau)
        .collect();
    ChainParams::new(couplings, detunings, tau)
}

/// Shortest transfer time for which no coupling exceeds `j_max`.
pub fn solve_gate_time(n_sites: usize, theta: f64, j_max: f64) -> Result<f64> {
    if !(j_max > 0.0) {
        return Err(FstError::invalid(format!(
            "j_max must be positive, got {j_max}"
        )));
    }
    let largest = coupling_times(n_sites, theta)?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(largest / j_max)
}

/// Upper bound on the FST time valid for every `theta` in `(0, pi]`.
pub fn gate_time_bound(n_sites: usize, j_max: f64) -> f64 {
    let nn = n_sites as f64;
    if n_sites == 2 {
        // the even-chain formula vanishes here; a single bond needs theta / (2 j_max)
        PI / (2.0 * j_max)
    } else if n_sites % 2 == 0 {
        PI * (nn * nn - 4.0).sqrt() / (2.0 * 3f64.sqrt() * j_max)
    } else {
        PI * (nn * nn - 1.0).sqrt() / (4.0 * j_max)
    }
}

/// Spread of the detunings, evaluated directly and from the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetuningRange {
    /// `max_n Delta_n - min_n Delta_n` of the actual parameters.
    pub direct: f64,
    /// `N (pi - theta) / (3 tau)`, zero for even chains.
    pub closed_form: f64,
    pub agrees: bool,
}

pub fn detuning_range(params: &ChainParams, theta: f64) -> DetuningRange {
    let d = &params.detunings;
    let direct = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - d.iter().cloned().fold(f64::INFINITY, f64::min);
    let n = params.n_sites();
    let closed_form = if n % 2 == 0 {
        0.0
    } else {
        n as f64 * (PI - theta) / (3.0 * params.tau)
    };
    let scale = direct.abs().max(closed_form.abs());
    let agrees = scale == 0.0 || (direct - closed_form).abs() <= 1e-9 * scale;
    DetuningRange {
        direct,
        closed_form,
        agrees,
    }
}

/// Outcome of the spectral FST check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Ascending single-excitation eigenvalues (rad/s).
    pub eigenvalues: Vec<f64>,
    /// `gap * tau` for consecutive eigenvalues.
    pub scaled_gaps: Vec<f64>,
    /// Mirror parity of each eigenvector in ascending order (+1 symmetric).
    pub parities: Vec<i8>,
    /// Transfer phase read off the symmetric eigenvalues, in `(-pi, pi]`.
    pub phi: f64,
    pub min_gap: f64,
}

/// Diagonalise the single-excitation block and verify the FST spectrum.
pub fn spectrum_check(params: &ChainParams, theta: f64, tol: f64) -> Result<SpectrumReport> {
    let h = params.hamiltonian();
    let n = params.n_sites();
    let tau = params.tau;
    let (values, vectors) = sorted_symmetric_eigen(h.matrix());
    let norm = h
        .matrix()
        .iter()
        .fold(0.0f64, |a, x| a.max(x.abs()))
        .max(1.0 / tau);

    let gaps: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let min_gap = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
    if n > 1 && min_gap <= 1e-10 * norm {
        return Err(FstError::Validation(format!(
            "degenerate eigenvalues: min gap {min_gap:e}"
        )));
    }

    let scaled_gaps: Vec<f64> = gaps.iter().map(|g| g * tau).collect();
    let pattern = [theta, 2.0 * PI - theta];
    let fits = |start: usize| {
        scaled_gaps
            .iter()
            .enumerate()
            .all(|(k, g)| angle_distance(*g, pattern[(k + start) % 2]) <= tol)
    };
    if !(fits(0) || fits(1)) {
        return Err(FstError::Validation(format!(
            "gap pattern broken: gap*tau = {scaled_gaps:?}, expected alternation of {} and {}",
            pattern[0], pattern[1]
        )));
    }

    let mut parities = Vec::with_capacity(n);
    for k in 0..n {
        let v = vectors.column(k);
        let sym = (0..n)
            .map(|i| (v[i] - v[n - 1 - i]).abs())
            .fold(0.0, f64::max);
        let anti = (0..n)
            .map(|i| (v[i] + v[n - 1 - i]).abs())
            .fold(0.0, f64::max);
        let parity = if sym < 1e-6 {
            1
        } else if anti < 1e-6 {
            -1
        } else {
            return Err(FstError::Validation(format!(
                "eigenvector {k} is neither mirror symmetric nor antisymmetric"
            )));
        };
        parities.push(parity);
    }
    if parities.windows(2).any(|w| w[0] == w[1]) {
        return Err(FstError::Validation(format!(
            "eigenvector parities do not alternate: {parities:?}"
        )));
    }

    let sym_phases: Vec<f64> = values
        .iter()
        .zip(&parities)
        .filter(|(_, p)| **p == 1)
        .map(|(l, _)| wrap_angle(l * tau - theta / 2.0))
        .collect();
    let phi = sym_phases[0];
    if let Some(bad) = sym_phases.iter().find(|p| angle_distance(**p, phi) > tol) {
        return Err(FstError::Validation(format!(
            "inconsistent transfer phase: {phi} vs {bad}"
        )));
    }

    Ok(SpectrumReport {
        eigenvalues: values,
        scaled_gaps,
        parities,
        phi,
        min_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn two_sites() {
        let p = synthesize(&ChainSpec::with_tau(2, 0.7, 3.0).unwrap()).unwrap();
        assert!(rel(p.couplings[0], 0.7 / 6.0) < 1e-14);
        assert_eq!(p.detunings, vec![0.0, 0.0]);
        let r = spectrum_check(&p, 0.7, 1e-8).unwrap();
        assert!(rel(r.eigenvalues[1], 0.7 / 6.0) < 1e-12);
        assert!(r.phi.abs() < 1e-12);
    }

    #[test]
    fn three_sites_quarter_turn() {
        let p = synthesize(&ChainSpec::with_tau(3, PI / 2.0, 1.0).unwrap()).unwrap();
        let j = PI * 6f64.sqrt() / 4.0;
        assert!(rel(p.couplings[0], j) < 1e-14 && rel(p.couplings[1], j) < 1e-14);
        assert!(rel(p.detunings[0], PI / 4.0) < 1e-14);
        assert!(rel(p.detunings[1], -3.0 * PI / 4.0) < 1e-14);
        assert!(rel(p.detunings[2], PI / 4.0) < 1e-14);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(ChainSpec::with_tau(1, 1.0, 1.0).is_err());
        assert!(ChainSpec::with_tau(4, 0.0, 1.0).is_err());
        assert!(ChainSpec::with_tau(4, 3.5, 1.0).is_err());
        assert!(ChainSpec::with_tau(4, 1.0, -1.0).is_err());
        assert!(ChainSpec::with_j_max(4, 1.0, 0.0).is_err());
    }

    #[test]
    fn radicand_out_of_domain() {
        // theta = 3 pi sits outside the physical range; J_2 of the 4-site chain goes imaginary.
        assert!(matches!(
            coupling_times(4, 3.0 * PI),
            Err(FstError::Domain { .. })
        ));
    }

    #[test]
    fn even_detuning_range_is_zero() {
        let p = synthesize(&ChainSpec::with_tau(6, 1.0, 1.0).unwrap()).unwrap();
        let r = detuning_range(&p, 1.0);
        assert_eq!(r.direct, 0.0);
        assert!(r.agrees);
    }

    #[test]
    fn odd_detuning_range_reports_both_values() {
        let p = synthesize(&ChainSpec::with_tau(3, PI / 2.0, 1.0).unwrap()).unwrap();
        let r = detuning_range(&p, PI / 2.0);
        assert!((r.direct - PI).abs() < 1e-12);
        assert!((r.closed_form - PI / 2.0).abs() < 1e-12);
        assert!(!r.agrees);
    }

    #[test]
    fn json_roundtrip_keys() {
        let spec: ChainSpec =
            serde_json::from_str(r#"{"n_sites": 5, "theta": 1.0, "j_max": 2.0}"#).unwrap();
        assert_eq!(spec.scale, TimeScale::JMax(2.0));
        let bad: std::result::Result<ChainSpec, _> =
            serde_json::from_str(r#"{"n_sites": 5, "theta": 1.0, "tau": 1.0, "j_max": 2.0}"#);
        assert!(bad.is_err());
        let p = synthesize(&spec).unwrap();
        let v: serde_json::Value = serde_json::to_value(&p).unwrap();
        assert!(
            v.get("couplings").is_some() && v.get("detunings").is_some() && v.get("tau").is_some()
        );
    }
}
