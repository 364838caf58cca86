//! Static ZZ interaction between neighbouring qubits.

use serde::{Deserialize, Serialize};

use crate::device::hamiltonian::StaticSpectrum;
use crate::device::spec::DeviceSpec;
use crate::error::{FstError, Result};

/// `E(11) - E(10) - E(01) + E(00)` for the dressed states of the qubit pair
/// `(pair + 1, pair + 2)`, other qubits empty.
pub fn zz_coupling(spec: &DeviceSpec, phi: [f64; 2], pair: usize) -> Result<f64> {
    if pair > 1 {
        return Err(FstError::invalid(format!("pair index {pair} not in 0..=1")));
    }
    let sp = StaticSpectrum::new(spec, phi);
    let (hi, lo) = if pair == 0 {
        (0b100, 0b010)
    } else {
        (0b010, 0b001)
    };
    let e = |x: usize| sp.energy(sp.basis.computational(x));
    Ok(e(hi | lo)? - e(hi)? - e(lo)? + e(0)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZzScan {
    pub pair: usize,
    /// Flux of the coupler between the pair; the other coupler stays at its bias.
    pub phi: Vec<f64>,
    /// `None` where dressed-state identification was ambiguous.
    pub zeta: Vec<Option<f64>>,
    /// Refined zeros of `zeta`.
    pub sign_changes: Vec<f64>,
    /// Sign changes across a level crossing, where `zeta` jumps instead of
    /// passing through zero; located to the point where identification failed.
    pub crossings: Vec<f64>,
}

impl ZzScan {
    pub fn ambiguous_points(&self) -> usize {
        self.zeta.iter().filter(|z| z.is_none()).count()
    }

    /// CSV with header `phi,zeta,identified`; `zeta` in rad/s.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("phi,zeta,identified\n");
        for (p, z) in self.phi.iter().zip(&self.zeta) {
            let (v, ok) = z.map_or((f64::NAN, 0), |v| (v, 1));
            out.push_str(&format!(
                "{},{},{ok}\n",
                crate::io::fmt_f64(*p),
                crate::io::fmt_f64(v)
            ));
        }
        out
    }
}

fn zz_at(spec: &DeviceSpec, pair: usize, phi: f64) -> Result<f64> {
    let mut fluxes = spec.phi_dc;
    fluxes[pair] = phi;
    zz_coupling(spec, fluxes, pair)
}

/// Sweep the adjacent coupler over `[lo, hi]` and refine every sign change
/// of the ZZ coupling by bisection.
pub fn zz_scan(spec: &DeviceSpec, pair: usize, lo: f64, hi: f64, points: usize) -> Result<ZzScan> {
    spec.validate()?;
    if points < 2 || !(lo < hi) || lo <= -0.5 || hi >= 0.5 {
        return Err(FstError::invalid(
            "scan needs at least two points on one flux branch",
        ));
    }
    let phi: Vec<f64> = (0..points)
        .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
        .collect();
    let mut zeta = Vec::with_capacity(points);
    for &p in &phi {
        zeta.push(match zz_at(spec, pair, p) {
            Ok(z) => Some(z),
            Err(FstError::Degenerate(_)) => None,
            Err(e) => return Err(e),
        });
    }
    let mut sign_changes = Vec::new();
    let mut crossings = Vec::new();
    for k in 0..points - 1 {
        let (Some(za), Some(zb)) = (zeta[k], zeta[k + 1]) else {
            continue;
        };
        if za == 0.0 {
            sign_changes.push(phi[k]);
            continue;
        }
        if za * zb >= 0.0 {
            continue;
        }
        let (mut a, mut b, mut fa) = (phi[k], phi[k + 1], za);
        let mut identified = true;
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            let Ok(fm) = zz_at(spec, pair, m) else {
                identified = false;
                break;
            };
            if fm * fa > 0.0 {
                (a, fa) = (m, fm);
            } else {
                b = m;
            }
        }
        let m = 0.5 * (a + b);
        // a pole keeps |zeta| large all the way down the bracket
        let small = zz_at(spec, pair, m).is_ok_and(|z| z.abs() <= za.abs().min(zb.abs()));
        if identified && small {
            sign_changes.push(m);
        } else {
            crossings.push(m);
        }
    }
    Ok(ZzScan {
        pair,
        phi,
        zeta,
        sign_changes,
        crossings,
    })
}
