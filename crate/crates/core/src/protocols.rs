//! Ancilla-assisted parity and correlator measurements built on `K_N(pi)`.
//!
//! The register is padded with one ancilla on each end. A quarter turn about Y
//! on the right ancilla, the PST gate `K_{N+2}(pi)` and a quarter turn about X
//! on the left ancilla leave the left ancilla in `|1>` for even and `|0>` for
//! odd excitation number, with the right ancilla returned to `|0>`.

use std::f64::consts::PI;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{solve_gate_time, synthesize, ChainSpec};
use crate::circuit::{half_x, half_y};
use crate::error::{FstError, Result};
use crate::fermion::{
    extract_transfer_phase, phase_fix_diagonal, single_propagator, FreeFermionOp,
};
use crate::gates::apply_effective_gate;
use crate::linalg::{C64, I, ONE, ZERO};
use crate::state::StateVector;
use crate::tolerances::LIFT_MAX_SITES;

/// How `K_{N+2}(pi)` is applied inside the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMethod {
    /// Determinant lift of the PST propagator followed by the phase fix.
    #[default]
    FstLift,
    /// Product of mirror-pair rotations.
    PairRotations,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolOptions {
    pub method: KernelMethod,
    /// Maximal coupling of the extended chain (rad/s); sets the reported duration.
    pub j_max: f64,
    /// Normalisation tolerance for the input register.
    pub norm_tol: f64,
}

impl Default for ProtocolOptions {
    fn default() -> Self {
        ProtocolOptions {
            method: KernelMethod::FstLift,
            j_max: 1.0,
            norm_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of_weight(k: u32) -> Self {
        if k % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParityProtocolResult {
    pub left_ancilla_one_probability: f64,
    pub inferred_parity: Parity,
    /// Extended register `L, 1..N, R` after the protocol, before readout.
    pub post_state: StateVector,
    /// Duration of `K_{N+2}(pi)` at the configured `J_max`.
    pub protocol_duration: f64,
    /// The same duration in units of `tau_iSWAP = pi / (2 J_max)`.
    pub duration_in_iswaps: f64,
}

impl ParityProtocolResult {
    /// Middle register after reading the left ancilla as the inferred parity
    /// and the right ancilla as 0.
    pub fn middle_register(&self) -> Result<StateVector> {
        let outcome = self.inferred_parity == Parity::Even;
        self.middle_register_for(outcome)
    }

    pub fn middle_register_for(&self, left_one: bool) -> Result<StateVector> {
        let ext = &self.post_state;
        let n = ext.n_sites() - 2;
        let left = if left_one { 1usize << (n + 1) } else { 0 };
        let a: Vec<C64> = (0..1usize << n)
            .map(|x| ext.amplitudes()[left | (x << 1)])
            .collect();
        StateVector::new(n, a)?.normalized()
    }

    /// Number of `1` outcomes of the left ancilla in `shots` seeded draws.
    pub fn sample_shots(&self, shots: usize, seed: u64) -> usize {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..shots)
            .filter(|_| rng.random::<f64>() < self.left_ancilla_one_probability)
            .count()
    }
}

/// Apply `K_M(pi)` to a register of `M` sites.
pub fn apply_pst_gate(psi: &mut StateVector, method: KernelMethod) -> Result<()> {
    let m = psi.n_sites();
    match method {
        KernelMethod::PairRotations => apply_effective_gate(psi, PI),
        KernelMethod::FstLift => {
            if m > LIFT_MAX_SITES {
                return Err(FstError::SizeGuard {
                    what: "determinant lift",
                    n: m,
                    limit: LIFT_MAX_SITES,
                });
            }
            let params = synthesize(&ChainSpec::with_tau(m, PI, 1.0)?)?;
            let u = single_propagator(&params, 1.0)?;
            let phi = extract_transfer_phase(&u, PI)?.phi;
            for (z, p) in psi
                .amplitudes_mut()
                .iter_mut()
                .zip(phase_fix_diagonal(m, phi, PI))
            {
                *z *= p;
            }
            *psi = FreeFermionOp::from(u).apply(psi)?;
        }
    }
    Ok(())
}

fn as_gate(m: nalgebra::DMatrix<C64>) -> [[C64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

pub fn parity_measure(psi: &StateVector, opts: &ProtocolOptions) -> Result<ParityProtocolResult> {
    let n = psi.n_sites();
    if n + 2 > LIFT_MAX_SITES {
        return Err(FstError::SizeGuard {
            what: "parity protocol",
            n: n + 2,
            limit: LIFT_MAX_SITES,
        });
    }
    psi.ensure_normalized(opts.norm_tol)?;
    let mut ext = psi.embed(1, 1);
    ext.apply_single(n + 2, as_gate(half_y()));
    apply_pst_gate(&mut ext, opts.method)?;
    ext.apply_single(1, as_gate(half_x()));
    let p1 = ext.probability_one(1);
    let duration = solve_gate_time(n + 2, PI, opts.j_max)?;
    Ok(ParityProtocolResult {
        left_ancilla_one_probability: p1,
        inferred_parity: if p1 >= 0.5 { Parity::Even } else { Parity::Odd },
        post_state: ext,
        protocol_duration: duration,
        duration_in_iswaps: duration / (PI / (2.0 * opts.j_max)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl std::str::FromStr for Pauli {
    type Err = FstError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "X" | "x" => Ok(Pauli::X),
            "Y" | "y" => Ok(Pauli::Y),
            "Z" | "z" => Ok(Pauli::Z),
            other => Err(FstError::invalid(format!("unknown Pauli '{other}'"))),
        }
    }
}

/// Parse a Pauli string such as `"XYZ"`.
pub fn parse_paulis(s: &str) -> Result<Vec<Pauli>> {
    s.chars().map(|c| c.to_string().parse()).collect()
}

/// Single-qubit rotation taking the eigenbasis of `p` to the Z basis.
fn basis_change(p: Pauli) -> [[C64; 2]; 2] {
    let h = C64::new(0.5f64.sqrt(), 0.0);
    match p {
        Pauli::Z => [[ONE, ZERO], [ZERO, ONE]],
        Pauli::X => [[h, h], [h, -h]],
        // H S^dagger
        Pauli::Y => [[h, -I * h], [h, I * h]],
    }
}

/// `<P_1 ... P_N>` from the parity protocol on the rotated register,
/// `1 - 2 P(odd)`.
pub fn correlator_measure(
    psi: &StateVector,
    paulis: &[Pauli],
    opts: &ProtocolOptions,
) -> Result<f64> {
    if paulis.len() != psi.n_sites() {
        return Err(FstError::Dimension {
            expected: psi.n_sites(),
            got: paulis.len(),
        });
    }
    let mut rotated = psi.clone();
    for (k, p) in paulis.iter().enumerate() {
        rotated.apply_single(k + 1, basis_change(*p));
    }
    let r = parity_measure(&rotated, opts)?;
    let p_odd = 1.0 - r.left_ancilla_one_probability;
    Ok(1.0 - 2.0 * p_odd)
}

/// Direct `<psi| P_1 ... P_N |psi>`.
pub fn pauli_expectation(psi: &StateVector, paulis: &[Pauli]) -> Result<f64> {
    let n = psi.n_sites();
    if paulis.len() != n {
        return Err(FstError::Dimension {
            expected: n,
            got: paulis.len(),
        });
    }
    let mut out = psi.clone();
    for (k, p) in paulis.iter().enumerate() {
        let m = match p {
            Pauli::X => [[ZERO, ONE], [ONE, ZERO]],
            Pauli::Y => [[ZERO, -I], [I, ZERO]],
            Pauli::Z => [[ONE, ZERO], [ZERO, -ONE]],
        };
        out.apply_single(k + 1, m);
    }
    Ok(psi.inner(&out).re)
}

/// Repeat the protocol, each round acting on the middle register left by the
/// previous one. The ancilla outcome of each round is the more probable one,
/// or a seeded draw when `seed` is given.
pub fn repeated_parity(
    psi: &StateVector,
    rounds: usize,
    opts: &ProtocolOptions,
    seed: Option<u64>,
) -> Result<Vec<ParityProtocolResult>> {
    if rounds < 2 {
        return Err(FstError::invalid(
            "repeated parity needs at least two rounds",
        ));
    }
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    let mut current = psi.clone();
    let mut out = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let mut r = parity_measure(&current, opts)?;
        let left_one = match rng.as_mut() {
            Some(g) => g.random::<f64>() < r.left_ancilla_one_probability,
            None => r.left_ancilla_one_probability >= 0.5,
        };
        r.inferred_parity = if left_one { Parity::Even } else { Parity::Odd };
        current = r.middle_register_for(left_one)?;
        out.push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::effective_gate;
    use crate::linalg::c;

    #[test]
    fn vacuum_gives_minus_i_on_left_ancilla() {
        for method in [KernelMethod::FstLift, KernelMethod::PairRotations] {
            let opts = ProtocolOptions {
                method,
                ..Default::default()
            };
            let r = parity_measure(&StateVector::vacuum(3), &opts).unwrap();
            assert!((r.left_ancilla_one_probability - 1.0).abs() < 1e-12);
            // |1>_L |000> |0>_R with amplitude -i
            assert!((r.post_state.amplitudes()[0b10000] - c(0.0, -1.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn single_excitation_reads_odd() {
        let r = parity_measure(&StateVector::basis(2, 0b01), &ProtocolOptions::default()).unwrap();
        assert!(r.left_ancilla_one_probability.abs() < 1e-12);
        assert_eq!(r.inferred_parity, Parity::Odd);
        assert!(r.post_state.probability_one(4) < 1e-12);
    }

    #[test]
    fn middle_register_is_k_pi_up_to_phase() {
        let psi = StateVector::basis(4, 0b0110);
        let r = parity_measure(&psi, &ProtocolOptions::default()).unwrap();
        let mid = r.middle_register().unwrap();
        let k = effective_gate(4, PI).unwrap().apply(&psi).unwrap();
        assert!((mid.inner(&k).norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn even_register_duration_is_whole_iswaps() {
        let r = parity_measure(&StateVector::vacuum(4), &ProtocolOptions::default()).unwrap();
        assert!((r.duration_in_iswaps - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_unnormalised_input() {
        let psi = StateVector::new(1, vec![ONE, ONE]).unwrap();
        assert!(parity_measure(&psi, &ProtocolOptions::default()).is_err());
    }

    #[test]
    fn correlators_on_simple_states() {
        let opts = ProtocolOptions::default();
        let zs = [Pauli::Z; 3];
        assert!(
            (correlator_measure(&StateVector::vacuum(3), &zs, &opts).unwrap() - 1.0).abs() < 1e-12
        );
        let h = C64::new(0.5f64.sqrt(), 0.0);
        let plus = StateVector::product(&[(h, h); 3]);
        assert!((correlator_measure(&plus, &[Pauli::X; 3], &opts).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(
            parse_paulis("XyZ").unwrap(),
            vec![Pauli::X, Pauli::Y, Pauli::Z]
        );
        assert!(parse_paulis("XQ").is_err());
    }

    #[test]
    fn shots_are_seeded() {
        let psi = StateVector::product(&[(C64::new(0.6, 0.0), C64::new(0.8, 0.0))]);
        let r = parity_measure(&psi, &ProtocolOptions::default()).unwrap();
        assert_eq!(r.sample_shots(1000, 7), r.sample_shots(1000, 7));
        let frac = r.sample_shots(20000, 1) as f64 / 20000.0;
        assert!((frac - 0.36).abs() < 0.02);
    }
}
