//! Device parameters, flux-pulse configuration and the coupler flux response.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{FstError, Result};

/// `2 pi * 1e9`: GHz to rad/s.
pub const GHZ: f64 = 2.0 * PI * 1e9;
pub const MHZ: f64 = 2.0 * PI * 1e6;
pub const NS: f64 = 1e-9;

/// Three fixed-frequency transmons joined by two flux-tunable couplers.
/// All frequencies in rad/s; fluxes in units of the flux quantum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DeviceSpecFile", into = "DeviceSpecFile")]
pub struct DeviceSpec {
    pub w: [f64; 3],
    /// Coupler frequencies at their DC bias points.
    pub wc: [f64; 2],
    pub a: [f64; 3],
    pub ac: [f64; 2],
    pub g1c1: f64,
    pub g2c1: f64,
    pub g2c2: f64,
    pub g3c2: f64,
    pub g12: f64,
    pub g23: f64,
    /// Junction asymmetries in `[0, 1]`.
    pub dc: [f64; 2],
    pub phi_dc: [f64; 2],
    /// Levels kept per mode.
    pub levels: usize,
}

/// File form of [`DeviceSpec`]: frequencies in GHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpecFile {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub wc1: f64,
    pub wc2: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub ac1: f64,
    pub ac2: f64,
    pub g1c1: f64,
    pub g2c1: f64,
    pub g2c2: f64,
    pub g3c2: f64,
    pub g12: f64,
    pub g23: f64,
    pub dc1: f64,
    pub dc2: f64,
    pub phi_dc1: f64,
    pub phi_dc2: f64,
    #[serde(default = "default_levels")]
    pub levels: usize,
}

fn default_levels() -> usize {
    3
}

impl TryFrom<DeviceSpecFile> for DeviceSpec {
    type Error = FstError;
    fn try_from(f: DeviceSpecFile) -> Result<Self> {
        let s = DeviceSpec {
            w: [f.w1 * GHZ, f.w2 * GHZ, f.w3 * GHZ],
            wc: [f.wc1 * GHZ, f.wc2 * GHZ],
            a: [f.a1 * GHZ, f.a2 * GHZ, f.a3 * GHZ],
            ac: [f.ac1 * GHZ, f.ac2 * GHZ],
            g1c1: f.g1c1 * GHZ,
            g2c1: f.g2c1 * GHZ,
            g2c2: f.g2c2 * GHZ,
            g3c2: f.g3c2 * GHZ,
            g12: f.g12 * GHZ,
            g23: f.g23 * GHZ,
            dc: [f.dc1, f.dc2],
            phi_dc: [f.phi_dc1, f.phi_dc2],
            levels: f.levels,
        };
        s.validate()?;
        Ok(s)
    }
}

impl From<DeviceSpec> for DeviceSpecFile {
    fn from(s: DeviceSpec) -> Self {
        DeviceSpecFile {
            w1: s.w[0] / GHZ,
            w2: s.w[1] / GHZ,
            w3: s.w[2] / GHZ,
            wc1: s.wc[0] / GHZ,
            wc2: s.wc[1] / GHZ,
            a1: s.a[0] / GHZ,
            a2: s.a[1] / GHZ,
            a3: s.a[2] / GHZ,
            ac1: s.ac[0] / GHZ,
            ac2: s.ac[1] / GHZ,
            g1c1: s.g1c1 / GHZ,
            g2c1: s.g2c1 / GHZ,
            g2c2: s.g2c2 / GHZ,
            g3c2: s.g3c2 / GHZ,
            g12: s.g12 / GHZ,
            g23: s.g23 / GHZ,
            dc1: s.dc[0],
            dc2: s.dc[1],
            phi_dc1: s.phi_dc[0],
            phi_dc2: s.phi_dc[1],
            levels: s.levels,
        }
    }
}

/// `[cos^2(pi phi) + d^2 sin^2(pi phi)]^(1/4)`.
pub fn flux_factor(d: f64, phi: f64) -> f64 {
    let (s, c) = (PI * phi).sin_cos();
    (c * c + d * d * s * s).sqrt().sqrt()
}

impl DeviceSpec {
    /// Parameter set of the reference three-qubit device.
    pub fn reference() -> Self {
        DeviceSpec {
            w: [5.05 * GHZ, 5.00 * GHZ, 5.075 * GHZ],
            wc: [6.086 * GHZ, 6.106 * GHZ],
            a: [-0.300 * GHZ; 3],
            ac: [-0.350 * GHZ; 2],
            g1c1: 0.100 * GHZ,
            g2c1: -0.100 * GHZ,
            g2c2: 0.100 * GHZ,
            g3c2: -0.100 * GHZ,
            g12: -0.0066 * GHZ,
            g23: -0.0066 * GHZ,
            dc: [0.5, 0.5],
            phi_dc: [0.3, 0.3],
            levels: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels < 2 {
            return Err(FstError::invalid("at least two levels per mode are needed"));
        }
        if self.levels.pow(5) > 1 << 14 {
            return Err(FstError::SizeGuard {
                what: "device Hilbert space levels",
                n: self.levels,
                limit: 6,
            });
        }
        for (k, d) in self.dc.iter().enumerate() {
            if !(0.0..=1.0).contains(d) {
                return Err(FstError::invalid(format!(
                    "coupler {} asymmetry {d} outside [0, 1]",
                    k + 1
                )));
            }
        }
        for (k, p) in self.phi_dc.iter().enumerate() {
            if !(p.abs() < 0.5) {
                return Err(FstError::invalid(format!(
                    "coupler {} bias {p} not inside (-0.5, 0.5)",
                    k + 1
                )));
            }
        }
        let all = self.w.iter().chain(&self.wc).chain(&self.a).chain(&self.ac);
        if all
            .chain(
                [
                    self.g1c1, self.g2c1, self.g2c2, self.g3c2, self.g12, self.g23,
                ]
                .iter(),
            )
            .any(|x| !x.is_finite())
        {
            return Err(FstError::invalid("non-finite device parameter"));
        }
        Ok(())
    }

    /// Coupler frequency at zero flux, fixed by the frequency at the bias point.
    pub fn coupler_max_frequency(&self, coupler: usize) -> f64 {
        let c = coupler;
        self.ac[c] + (self.wc[c] - self.ac[c]) / flux_factor(self.dc[c], self.phi_dc[c])
    }

    /// Qubit-coupler couplings `(g_{left,c}, g_{right,c})` of a coupler.
    pub fn coupler_couplings(&self, coupler: usize) -> (f64, f64) {
        if coupler == 0 {
            (self.g1c1, self.g2c1)
        } else {
            (self.g2c2, self.g3c2)
        }
    }

    /// Warnings for dispersive ratios `|g / (w_c - w_q)|` above 0.2 and for
    /// direct couplings that are not small against the coupler couplings.
    pub fn dispersive_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for c in 0..2 {
            let (gl, gr) = self.coupler_couplings(c);
            for (q, g) in [(c, gl), (c + 1, gr)] {
                let ratio = (g / (self.wc[c] - self.w[q])).abs();
                if ratio > 0.2 {
                    out.push(format!(
                        "|g_{},c{}/(w_c{} - w_{})| = {ratio:.3} > 0.2",
                        q + 1,
                        c + 1,
                        c + 1,
                        q + 1
                    ));
                }
            }
        }
        let gmin = [self.g1c1, self.g2c1, self.g2c2, self.g3c2]
            .iter()
            .fold(f64::INFINITY, |m, g| m.min(g.abs()));
        for (name, g) in [("g12", self.g12), ("g23", self.g23)] {
            if g.abs() > 0.2 * gmin {
                out.push(format!(
                    "direct coupling {name} is not small against the coupler couplings"
                ));
            }
        }
        out
    }
}

/// Coupler frequency at flux `phi`.
pub fn flux_to_frequency(spec: &DeviceSpec, coupler: usize, phi: f64) -> f64 {
    let wmax = spec.coupler_max_frequency(coupler);
    spec.ac[coupler] + (wmax - spec.ac[coupler]) * flux_factor(spec.dc[coupler], phi)
}

/// Flattop Gaussian flux pulses on both couplers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PulseConfigFile", into = "PulseConfigFile")]
pub struct PulseConfig {
    /// Flux amplitudes in units of the flux quantum.
    pub amplitude: [f64; 2],
    /// Drive frequencies in rad/s.
    pub drive_freq: [f64; 2],
    pub rise_time: f64,
    pub gate_time: f64,
    /// Envelope sample rate in samples per second.
    pub sample_rate: f64,
}

/// File form of [`PulseConfig`]: GHz, ns and GS/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseConfigFile {
    pub phi_a1: f64,
    pub phi_a2: f64,
    pub wd1: f64,
    pub wd2: f64,
    pub tau_r: f64,
    pub tau_final: f64,
    #[serde(default = "default_rate")]
    pub sample_rate: f64,
}

fn default_rate() -> f64 {
    2.4
}

impl TryFrom<PulseConfigFile> for PulseConfig {
    type Error = FstError;
    fn try_from(f: PulseConfigFile) -> Result<Self> {
        let p = PulseConfig {
            amplitude: [f.phi_a1, f.phi_a2],
            drive_freq: [f.wd1 * GHZ, f.wd2 * GHZ],
            rise_time: f.tau_r * NS,
            gate_time: f.tau_final * NS,
            sample_rate: f.sample_rate * 1e9,
        };
        p.check_shape()?;
        Ok(p)
    }
}

impl From<PulseConfig> for PulseConfigFile {
    fn from(p: PulseConfig) -> Self {
        PulseConfigFile {
            phi_a1: p.amplitude[0],
            phi_a2: p.amplitude[1],
            wd1: p.drive_freq[0] / GHZ,
            wd2: p.drive_freq[1] / GHZ,
            tau_r: p.rise_time / NS,
            tau_final: p.gate_time / NS,
            sample_rate: p.sample_rate / 1e9,
        }
    }
}

impl PulseConfig {
    fn check_shape(&self) -> Result<()> {
        if !(self.rise_time > 0.0) || !(self.sample_rate > 0.0) {
            return Err(FstError::invalid(
                "rise time and sample rate must be positive",
            ));
        }
        if !(self.gate_time >= 0.0) {
            return Err(FstError::invalid("gate time must be non-negative"));
        }
        if self.gate_time > 0.0 && !(self.gate_time > 4.0 * self.rise_time) {
            return Err(FstError::invalid("gate time must exceed four rise times"));
        }
        if self.amplitude.iter().any(|a| !(*a >= 0.0)) {
            return Err(FstError::invalid("flux amplitudes must be non-negative"));
        }
        if self.drive_freq.iter().any(|w| !w.is_finite()) {
            return Err(FstError::invalid("non-finite drive frequency"));
        }
        Ok(())
    }

    /// Shape checks plus the single-flux-branch condition for `spec`.
    pub fn validate(&self, spec: &DeviceSpec) -> Result<()> {
        self.check_shape()?;
        for c in 0..2 {
            let (lo, hi) = (
                spec.phi_dc[c] - self.amplitude[c],
                spec.phi_dc[c] + self.amplitude[c],
            );
            if !(lo > -0.5 && hi < 0.5) {
                return Err(FstError::invalid(format!(
                    "coupler {} flux range [{lo}, {hi}] leaves the (-0.5, 0.5) branch",
                    c + 1
                )));
            }
        }
        Ok(())
    }

    /// Flattop envelope `A(t)` without sampling.
    pub fn envelope_exact(&self, coupler: usize, t: f64) -> f64 {
        let r = self.rise_time;
        let rise = 1.0 + libm::erf(t / r - 2.0);
        let fall = 1.0 + libm::erf((self.gate_time - t) / r - 2.0);
        self.amplitude[coupler] * rise * fall / 4.0
    }

    /// Index of the envelope sample holding at time `t`.
    pub fn sample_index(&self, t: f64) -> usize {
        (t * self.sample_rate).floor().max(0.0) as usize
    }

    /// Envelope held from sample `k`.
    pub fn envelope_sample(&self, coupler: usize, k: usize) -> f64 {
        self.envelope_exact(coupler, k as f64 / self.sample_rate)
    }

    /// Effective flattop duration, the envelope integral over the amplitude.
    pub fn effective_duration(&self) -> f64 {
        self.gate_time - 4.0 * self.rise_time
    }
}

/// Total coupler fluxes `(Phi_c1, Phi_c2)` at time `t`: DC bias plus the
/// sampled-and-held envelope times the continuous carrier.
pub fn pulse_envelope(spec: &DeviceSpec, cfg: &PulseConfig, t: f64) -> [f64; 2] {
    let k = cfg.sample_index(t);
    [0, 1].map(|c| spec.phi_dc[c] + cfg.envelope_sample(c, k) * (cfg.drive_freq[c] * t).cos())
}
