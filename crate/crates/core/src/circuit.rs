//! Two-qubit circuits for `K_N` and their timing.
//!
//! The decomposition is a fermionic swap network. Modes move along the chain
//! through FSWAPs. Whenever a mirror pair becomes adjacent for the first time,
//! the rotation `iSWAP(-theta)` is applied to it instead of a swap. The network
//! ends with every mode back on its own site.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::chain::solve_gate_time;
use crate::error::{FstError, Result};
use crate::fermion::FullUnitary;
use crate::gates::{effective_gate, z_layer_distance};
use crate::linalg::{CMatrix, C64, I, ONE, ZERO};
use crate::state::{site_bit, StateVector};
use crate::tolerances::LIFT_MAX_SITES;

/// How the angle of an iSWAP gate is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleConvention {
    /// Block entries `cos(theta/2)`, `i sin(theta/2)`; `iSWAP(pi)` is the full iSWAP.
    #[default]
    HalfAngle,
    /// Block entries `cos(theta)`, `i sin(theta)`.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GateKind {
    Iswap {
        angle: f64,
    },
    Fswap,
    /// `diag(1, e^{i angle})`.
    Rz {
        angle: f64,
    },
    X,
    /// `exp(-i pi/4 X)`.
    HalfX,
    /// `exp(-i pi/4 Y)`.
    HalfY,
}

impl GateKind {
    pub fn arity(&self) -> usize {
        match self {
            GateKind::Iswap { .. } | GateKind::Fswap => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateOp {
    #[serde(flatten)]
    pub kind: GateKind,
    /// 1-based sites; two-qubit gates act on `(targets[0], targets[1])` with
    /// the first target as the more significant qubit.
    pub targets: Vec<usize>,
    pub duration: f64,
}

impl GateOp {
    /// Gate with the duration model: iSWAP(angle) takes `|angle| / (2 J_max)`,
    /// FSWAP `pi / (2 J_max)`, single-qubit gates are instantaneous.
    pub fn new(kind: GateKind, targets: Vec<usize>, j_max: f64) -> Result<Self> {
        if targets.len() != kind.arity() {
            return Err(FstError::invalid(format!(
                "{kind:?} needs {} targets, got {}",
                kind.arity(),
                targets.len()
            )));
        }
        if targets.len() == 2 && targets[0] == targets[1] {
            return Err(FstError::invalid("two-qubit gate on a single site"));
        }
        let duration = match kind {
            GateKind::Iswap { angle } => angle.abs() / (2.0 * j_max),
            GateKind::Fswap => PI / (2.0 * j_max),
            _ => 0.0,
        };
        Ok(GateOp {
            kind,
            targets,
            duration,
        })
    }

    /// Gate matrix in the basis `|t0 t1>` (t0 most significant).
    pub fn matrix(&self, convention: AngleConvention) -> CMatrix {
        match self.kind {
            GateKind::Iswap { angle } => iswap_matrix(angle, convention),
            GateKind::Fswap => fswap_matrix(),
            GateKind::Rz { angle } => {
                CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, C64::from_polar(1.0, angle)])
            }
            GateKind::X => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
            GateKind::HalfX => half_x(),
            GateKind::HalfY => half_y(),
        }
    }

    pub fn apply(&self, psi: &mut StateVector, convention: AngleConvention) -> Result<()> {
        let n = psi.n_sites();
        if let Some(&bad) = self.targets.iter().find(|&&t| t == 0 || t > n) {
            return Err(FstError::invalid(format!(
                "target site {bad} outside 1..={n}"
            )));
        }
        let m = self.matrix(convention);
        if self.targets.len() == 1 {
            psi.apply_single(
                self.targets[0],
                [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]],
            );
        } else {
            apply_two(psi, self.targets[0], self.targets[1], &m);
        }
        Ok(())
    }
}

pub fn iswap_matrix(angle: f64, convention: AngleConvention) -> CMatrix {
    let a = match convention {
        AngleConvention::HalfAngle => angle / 2.0,
        AngleConvention::Literal => angle,
    };
    let (cs, sn) = (C64::new(a.cos(), 0.0), I * a.sin());
    CMatrix::from_row_slice(
        4,
        4,
        &[
            ONE, ZERO, ZERO, ZERO, ZERO, cs, sn, ZERO, ZERO, sn, cs, ZERO, ZERO, ZERO, ZERO, ONE,
        ],
    )
}

pub fn fswap_matrix() -> CMatrix {
    let m1 = -ONE;
    CMatrix::from_row_slice(
        4,
        4,
        &[
            ONE, ZERO, ZERO, ZERO, ZERO, ZERO, ONE, ZERO, ZERO, ONE, ZERO, ZERO, ZERO, ZERO, ZERO,
            m1,
        ],
    )
}

pub fn half_x() -> CMatrix {
    let s = C64::new(0.5f64.sqrt(), 0.0);
    CMatrix::from_row_slice(2, 2, &[s, -I * s, -I * s, s])
}

pub fn half_y() -> CMatrix {
    let s = C64::new(0.5f64.sqrt(), 0.0);
    CMatrix::from_row_slice(2, 2, &[s, -s, s, s])
}

/// Apply a 4x4 gate to sites `(a, b)` of a register.
pub fn apply_two(psi: &mut StateVector, a: usize, b: usize, m: &CMatrix) {
    let n = psi.n_sites();
    let (ba, bb) = (site_bit(n, a), site_bit(n, b));
    let amps = psi.amplitudes_mut();
    for x in 0..amps.len() {
        if x & (ba | bb) != 0 {
            continue;
        }
        let idx = [x, x | bb, x | ba, x | ba | bb];
        let v = idx.map(|i| amps[i]);
        for (r, &i) in idx.iter().enumerate() {
            amps[i] = (0..4).map(|c| m[(r, c)] * v[c]).sum();
        }
    }
}

/// Layered circuit; gates within a layer act on disjoint sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n_sites: usize,
    pub layers: Vec<Vec<GateOp>>,
}

impl Circuit {
    pub fn new(n_sites: usize, layers: Vec<Vec<GateOp>>) -> Result<Self> {
        for (k, layer) in layers.iter().enumerate() {
            let mut used = vec![false; n_sites + 1];
            for g in layer {
                for &t in &g.targets {
                    if t == 0 || t > n_sites {
                        return Err(FstError::invalid(format!(
                            "layer {k}: site {t} outside 1..={n_sites}"
                        )));
                    }
                    if used[t] {
                        return Err(FstError::invalid(format!("layer {k}: site {t} used twice")));
                    }
                    used[t] = true;
                }
            }
        }
        Ok(Circuit { n_sites, layers })
    }

    pub fn total_duration(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.iter().map(|g| g.duration).fold(0.0, f64::max))
            .sum()
    }

    pub fn gates(&self) -> impl Iterator<Item = &GateOp> {
        self.layers.iter().flatten()
    }

    pub fn count(&self, pred: impl Fn(&GateKind) -> bool) -> usize {
        self.gates().filter(|g| pred(&g.kind)).count()
    }

    pub fn fswap_count(&self) -> usize {
        self.count(|k| matches!(k, GateKind::Fswap))
    }

    pub fn iswap_count(&self) -> usize {
        self.count(|k| matches!(k, GateKind::Iswap { .. }))
    }

    pub fn apply(&self, psi: &mut StateVector, convention: AngleConvention) -> Result<()> {
        if psi.n_sites() != self.n_sites {
            return Err(FstError::Dimension {
                expected: self.n_sites,
                got: psi.n_sites(),
            });
        }
        for g in self.gates() {
            g.apply(psi, convention)?;
        }
        Ok(())
    }

    pub fn unitary(&self, convention: AngleConvention) -> Result<FullUnitary> {
        let n = self.n_sites;
        if n > LIFT_MAX_SITES {
            return Err(FstError::SizeGuard {
                what: "circuit unitary",
                n,
                limit: LIFT_MAX_SITES,
            });
        }
        let d = 1usize << n;
        let mut m = CMatrix::zeros(d, d);
        for x in 0..d {
            let mut col = StateVector::basis(n, x);
            self.apply(&mut col, convention)?;
            for (y, z) in col.amplitudes().iter().enumerate() {
                m[(y, x)] = *z;
            }
        }
        Ok(FullUnitary {
            n_sites: n,
            matrix: m,
        })
    }
}

/// Bond layers (0-based bond `b` joins sites `b+1, b+2`) of the swap network.
fn network_layers(n: usize) -> Vec<Vec<usize>> {
    let alternating =
        |count: usize| (0..count).map(move |l| (l % 2..n - 1).step_by(2).collect::<Vec<_>>());
    if n % 2 == 0 {
        alternating(n).collect()
    } else {
        let mut layers = vec![vec![n - 2]];
        layers.extend(alternating(n - 1));
        layers.push((2..n - 1).step_by(2).collect());
        layers
    }
}

/// Swap-network circuit for `K_N(theta)` without the equivalence check.
pub fn build_decomposition(n_sites: usize, theta: f64, j_max: f64) -> Result<Circuit> {
    if n_sites < 3 {
        return Err(FstError::invalid(
            "decomposition needs at least three sites",
        ));
    }
    if !(j_max > 0.0) {
        return Err(FstError::invalid("j_max must be positive"));
    }
    let rot = GateKind::Iswap { angle: -theta };
    if n_sites == 3 {
        let layers = vec![
            vec![GateOp::new(GateKind::Fswap, vec![1, 2], j_max)?],
            vec![GateOp::new(rot, vec![2, 3], j_max)?],
            vec![GateOp::new(GateKind::Fswap, vec![1, 2], j_max)?],
        ];
        return Circuit::new(3, layers);
    }
    let mut arrangement: Vec<usize> = (1..=n_sites).collect();
    let mut done = vec![false; n_sites + 1];
    let mut layers = Vec::new();
    for bonds in network_layers(n_sites) {
        let mut layer = Vec::new();
        for b in bonds {
            let (x, y) = (arrangement[b], arrangement[b + 1]);
            let targets = vec![b + 1, b + 2];
            if x + y == n_sites + 1 && !done[x.min(y)] {
                done[x.min(y)] = true;
                layer.push(GateOp::new(rot, targets, j_max)?);
            } else {
                arrangement.swap(b, b + 1);
                layer.push(GateOp::new(GateKind::Fswap, targets, j_max)?);
            }
        }
        if !layer.is_empty() {
            layers.push(layer);
        }
    }
    debug_assert!(arrangement.iter().enumerate().all(|(i, &m)| m == i + 1));
    debug_assert!(done[1..=n_sites / 2].iter().all(|&d| d));
    Circuit::new(n_sites, layers)
}

/// Largest chain for which [`compile_decomposition`] checks the circuit
/// against `K_N`.
pub const DECOMPOSITION_CHECK_MAX_SITES: usize = 6;

/// Swap-network circuit for `K_N(theta)`; for small chains the circuit is
/// checked against the effective gate up to a Z layer before it is returned.
pub fn compile_decomposition(n_sites: usize, theta: f64, j_max: f64, tol: f64) -> Result<Circuit> {
    let circuit = build_decomposition(n_sites, theta, j_max)?;
    if n_sites <= DECOMPOSITION_CHECK_MAX_SITES {
        let d = decomposition_distance(&circuit, theta, AngleConvention::HalfAngle)?;
        if !(d <= tol) {
            return Err(FstError::Tolerance {
                what: format!("decomposition of K_{n_sites}"),
                value: d,
                tol,
            });
        }
    }
    Ok(circuit)
}

/// Z-layer distance between a circuit and `K_N(theta)`.
pub fn decomposition_distance(
    circuit: &Circuit,
    theta: f64,
    convention: AngleConvention,
) -> Result<f64> {
    let target = effective_gate(circuit.n_sites, theta)?;
    z_layer_distance(&circuit.unitary(convention)?, &target)
}

/// Expected gate counts `(fswaps, iswaps)` for the network.
pub fn expected_gate_counts(n_sites: usize) -> (usize, usize) {
    if n_sites % 2 == 0 {
        (n_sites * n_sites / 2 - n_sites, n_sites / 2)
    } else {
        ((n_sites - 1) * (n_sites - 1) / 2, (n_sites - 1) / 2)
    }
}

/// One row of a speed-gain sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedGain {
    pub n_sites: usize,
    pub theta: f64,
    pub t_fst: f64,
    pub t_decomp: f64,
    pub ratio: f64,
}

/// Decomposition duration over the FST gate time at the same `J_max`.
pub fn speed_gain(n_sites: usize, theta: f64, j_max: f64) -> Result<SpeedGain> {
    let t_decomp = build_decomposition(n_sites, theta, j_max)?.total_duration();
    let t_fst = solve_gate_time(n_sites, theta, j_max)?;
    Ok(SpeedGain {
        n_sites,
        theta,
        t_fst,
        t_decomp,
        ratio: t_decomp / t_fst,
    })
}

/// Small-angle limit of the even-chain speed gain, `sqrt(3) N / sqrt(N^2 - 4)`.
pub fn even_small_angle_asymptote(n_sites: usize) -> f64 {
    let n = n_sites as f64;
    3f64.sqrt() * n / (n * n - 4.0).sqrt()
}
