//! Exact time evolution of the chain.
//!
//! The chain Hamiltonian is quadratic in Jordan-Wigner fermions, so its
//! evolution in every excitation manifold follows from the `N x N`
//! single-excitation propagator: the amplitude from occupation set `S` to `S'`
//! is the minor `det U[S', S]`. [`dense_oracle`] builds the `2^N` Hamiltonian
//! from Pauli ladder operators instead and is kept independent of that route.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::chain::ChainParams;
use crate::error::{FstError, Result};
use crate::linalg::{
    angle_distance, expm_real_symmetric, max_dist, phased_reconstruction, sorted_symmetric_eigen,
    unitarity_error, wrap_angle, CMatrix, C64, ONE, ZERO,
};
use crate::state::{FockState, StateVector};
use crate::tolerances::{DENSE_MAX_SITES, LIFT_MAX_SITES};

/// `N x N` unitary acting on the single-excitation manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct SinglePropagator {
    pub matrix: CMatrix,
    pub time: f64,
}

impl SinglePropagator {
    pub fn n_sites(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn unitarity_error(&self) -> f64 {
        unitarity_error(&self.matrix)
    }

    /// Largest deviation from the mirror-rotation pattern
    /// `|U[n][n]| = cos(theta/2)`, `|U[N+1-n][n]| = sin(theta/2)`, rest zero.
    pub fn transfer_structure_error(&self, theta: f64) -> f64 {
        let n = self.n_sites();
        let (cs, sn) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let mut err: f64 = 0.0;
        for col in 0..n {
            let mirror = n - 1 - col;
            for row in 0..n {
                let a = self.matrix[(row, col)].norm();
                let expected = if col == mirror {
                    if row == col {
                        1.0
                    } else {
                        0.0
                    }
                } else if row == col {
                    cs
                } else if row == mirror {
                    sn
                } else {
                    0.0
                };
                err = err.max((a - expected).abs());
            }
        }
        err
    }
}

pub fn single_propagator(params: &ChainParams, t: f64) -> Result<SinglePropagator> {
    SpectralPropagator::new(params).at(t)
}

/// Eigendecomposition of the single-excitation Hamiltonian, reused for many times.
#[derive(Debug, Clone)]
pub struct SpectralPropagator {
    values: nalgebra::DVector<f64>,
    vectors: DMatrix<f64>,
}

impl SpectralPropagator {
    pub fn new(params: &ChainParams) -> Self {
        let (values, vectors) = sorted_symmetric_eigen(params.hamiltonian().matrix());
        SpectralPropagator {
            values: nalgebra::DVector::from_vec(values),
            vectors,
        }
    }

    pub fn at(&self, t: f64) -> Result<SinglePropagator> {
        if !(t >= 0.0) {
            return Err(FstError::invalid(format!(
                "evolution time must be non-negative, got {t}"
            )));
        }
        Ok(SinglePropagator {
            matrix: phased_reconstruction(&self.vectors, &self.values, t),
            time: t,
        })
    }
}

/// Transfer phase of an FST propagator and the odd-chain middle-site check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferPhase {
    pub phi: f64,
    /// `|arg U[mid][mid] + phi + theta/2|` on the circle, odd chains only.
    pub middle_residual: Option<f64>,
}

pub fn extract_transfer_phase(u: &SinglePropagator, theta: f64) -> Result<TransferPhase> {
    let n = u.n_sites();
    let m = &u.matrix;
    let cs = (theta / 2.0).cos();
    let phi = if cs.abs() >= 1e-6 && (theta - PI).abs() > 1e-12 {
        -(m[(0, 0)] / cs).arg()
    } else {
        let z = crate::linalg::I * m[(n - 1, 0)];
        if z.norm() < 0.5 {
            return Err(FstError::Degenerate(format!(
                "no transfer amplitude to read the phase from: |U[N][1]| = {}",
                m[(n - 1, 0)].norm()
            )));
        }
        -z.arg()
    };
    let phi = wrap_angle(phi);
    let middle_residual = (n % 2 == 1).then(|| {
        let mid = n / 2;
        angle_distance(m[(mid, mid)].arg(), -(phi + theta / 2.0))
    });
    Ok(TransferPhase {
        phi,
        middle_residual,
    })
}

/// Number-conserving free-fermion operator given by its single-particle matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeFermionOp {
    pub single: CMatrix,
}

impl FreeFermionOp {
    pub fn new(single: CMatrix) -> Result<Self> {
        if single.nrows() != single.ncols() {
            return Err(FstError::invalid("single-particle matrix must be square"));
        }
        Ok(FreeFermionOp { single })
    }

    pub fn n_sites(&self) -> usize {
        self.single.nrows()
    }

    /// `<S'| U |S>` for occupation bitmasks of equal weight.
    pub fn amplitude(&self, out_mask: u64, in_mask: u64) -> C64 {
        let n = self.n_sites();
        let rows = mask_sites(n, out_mask);
        let cols = mask_sites(n, in_mask);
        if rows.len() != cols.len() {
            return ZERO;
        }
        minor_determinant(&self.single, &rows, &cols)
    }

    /// Full `2^N x 2^N` matrix.
    pub fn to_full(&self, guard: usize) -> Result<FullUnitary> {
        let n = self.n_sites();
        if n > guard {
            return Err(FstError::SizeGuard {
                what: "determinant lift",
                n,
                limit: guard,
            });
        }
        let dim = 1usize << n;
        let mut m = CMatrix::zeros(dim, dim);
        for k in 0..=n {
            let sector = subsets_of_size(n, k);
            let sites: Vec<Vec<usize>> = sector.iter().map(|&s| mask_sites(n, s)).collect();
            for (cj, cs) in sector.iter().zip(&sites) {
                for (ri, rs) in sector.iter().zip(&sites) {
                    m[(*ri as usize, *cj as usize)] = minor_determinant(&self.single, rs, cs);
                }
            }
        }
        Ok(FullUnitary {
            n_sites: n,
            matrix: m,
        })
    }

    /// Apply to a sparse state sector by sector.
    pub fn apply_fock(&self, psi: &FockState) -> Result<FockState> {
        let n = self.n_sites();
        if psi.n_sites != n {
            return Err(FstError::Dimension {
                expected: n,
                got: psi.n_sites,
            });
        }
        let mut by_weight: BTreeMap<u32, Vec<(Vec<usize>, C64)>> = BTreeMap::new();
        for (&mask, &amp) in &psi.amplitudes {
            if amp != ZERO {
                by_weight
                    .entry(mask.count_ones())
                    .or_default()
                    .push((mask_sites(n, mask), amp));
            }
        }
        let mut out = BTreeMap::new();
        for (k, inputs) in by_weight {
            for s in subsets_of_size(n, k as usize) {
                let rows = mask_sites(n, s);
                let amp: C64 = inputs
                    .iter()
                    .map(|(cols, a)| minor_determinant(&self.single, &rows, cols) * a)
                    .sum();
                if amp.norm_sqr() > 1e-300 {
                    out.insert(s, amp);
                }
            }
        }
        Ok(FockState {
            n_sites: n,
            amplitudes: out,
        })
    }

    /// Apply to a dense register without forming the `2^N` matrix.
    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        let n = self.n_sites();
        if psi.n_sites() != n {
            return Err(FstError::Dimension {
                expected: n,
                got: psi.n_sites(),
            });
        }
        let sparse = FockState {
            n_sites: n,
            amplitudes: psi
                .amplitudes()
                .iter()
                .enumerate()
                .filter(|(_, z)| **z != ZERO)
                .map(|(i, z)| (i as u64, *z))
                .collect(),
        };
        self.apply_fock(&sparse)?.to_dense()
    }
}

impl From<SinglePropagator> for FreeFermionOp {
    fn from(u: SinglePropagator) -> Self {
        FreeFermionOp { single: u.matrix }
    }
}

/// `2^N x 2^N` unitary on the full register.
#[derive(Debug, Clone, PartialEq)]
pub struct FullUnitary {
    pub n_sites: usize,
    pub matrix: CMatrix,
}

impl FullUnitary {
    pub fn unitarity_error(&self) -> f64 {
        unitarity_error(&self.matrix)
    }

    /// Largest entry connecting different excitation numbers.
    pub fn excitation_mixing(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.matrix.ncols() {
            for i in 0..self.matrix.nrows() {
                if (i as u32).count_ones() != (j as u32).count_ones() {
                    worst = worst.max(self.matrix[(i, j)].norm());
                }
            }
        }
        worst
    }

    pub fn distance(&self, other: &FullUnitary) -> f64 {
        max_dist(&self.matrix, &other.matrix)
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        if psi.n_sites() != self.n_sites {
            return Err(FstError::Dimension {
                expected: self.n_sites,
                got: psi.n_sites(),
            });
        }
        let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
        StateVector::new(self.n_sites, (&self.matrix * v).iter().cloned().collect())
    }

    pub fn identity(n_sites: usize) -> Self {
        FullUnitary {
            n_sites,
            matrix: CMatrix::identity(1 << n_sites, 1 << n_sites),
        }
    }
}

pub fn lift_to_full(u: &SinglePropagator) -> Result<FullUnitary> {
    FreeFermionOp {
        single: u.matrix.clone(),
    }
    .to_full(LIFT_MAX_SITES)
}

/// Real `2^N` chain Hamiltonian assembled from `sigma+ / sigma-` on each site.
pub fn dense_hamiltonian(params: &ChainParams) -> Result<DMatrix<f64>> {
    let n = params.n_sites();
    if n > DENSE_MAX_SITES {
        return Err(FstError::SizeGuard {
            what: "dense Hamiltonian",
            n,
            limit: DENSE_MAX_SITES,
        });
    }
    let raise = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
    let lower = raise.transpose();
    let number = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
    let dim = 1usize << n;
    let mut h = DMatrix::zeros(dim, dim);
    for (site, d) in params.detunings.iter().enumerate() {
        h += embed(n, &[(site, &number)]) * *d;
    }
    for (site, j) in params.couplings.iter().enumerate() {
        let hop = embed(n, &[(site, &raise), (site + 1, &lower)]);
        h += (&hop + hop.transpose()) * *j;
    }
    Ok(h)
}

/// `exp(-i H t)` of the full chain by direct diagonalisation.
pub fn dense_oracle(params: &ChainParams, t: f64) -> Result<FullUnitary> {
    let h = dense_hamiltonian(params)?;
    Ok(FullUnitary {
        n_sites: params.n_sites(),
        matrix: expm_real_symmetric(&h, t),
    })
}

fn embed(n: usize, ops: &[(usize, &DMatrix<f64>)]) -> DMatrix<f64> {
    let id = DMatrix::<f64>::identity(2, 2);
    let mut acc = DMatrix::from_element(1, 1, 1.0);
    for site in 0..n {
        let op = ops
            .iter()
            .find(|(s, _)| *s == site)
            .map(|(_, m)| *m)
            .unwrap_or(&id);
        acc = acc.kronecker(op);
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolveMethod {
    Lift,
    Dense,
}

pub fn evolve_state(
    psi: &StateVector,
    params: &ChainParams,
    t: f64,
    method: EvolveMethod,
) -> Result<StateVector> {
    let n = params.n_sites();
    if psi.n_sites() != n {
        return Err(FstError::Dimension {
            expected: n,
            got: psi.n_sites(),
        });
    }
    match method {
        EvolveMethod::Lift => {
            if n > LIFT_MAX_SITES {
                return Err(FstError::SizeGuard {
                    what: "determinant lift",
                    n,
                    limit: LIFT_MAX_SITES,
                });
            }
            FreeFermionOp::from(single_propagator(params, t)?).apply(psi)
        }
        EvolveMethod::Dense => dense_oracle(params, t)?.apply(psi),
    }
}

/// Per-basis-state phases of `exp(i phi H_z)`, with the extra `theta/2` on the
/// middle site of odd chains.
pub fn phase_fix_diagonal(n_sites: usize, phi: f64, theta: f64) -> Vec<C64> {
    let site_phase = single_phase_fix(n_sites, phi, theta);
    (0..1usize << n_sites)
        .map(|idx| {
            (1..=n_sites)
                .filter(|&s| crate::state::is_occupied(n_sites, idx, s))
                .fold(ONE, |acc, s| acc * site_phase[s - 1])
        })
        .collect()
}

/// Single-particle version of the phase fix: one phase per site.
pub fn single_phase_fix(n_sites: usize, phi: f64, theta: f64) -> Vec<C64> {
    (0..n_sites)
        .map(|s| {
            let extra = if n_sites % 2 == 1 && s == n_sites / 2 {
                theta / 2.0
            } else {
                0.0
            };
            C64::from_polar(1.0, phi + extra)
        })
        .collect()
}

/// Sites (0-based) set in `mask`, ascending.
pub fn mask_sites(n: usize, mask: u64) -> Vec<usize> {
    (0..n)
        .filter(|&s| mask & (1u64 << (n - 1 - s)) != 0)
        .collect()
}

/// All `n`-bit masks of weight `k`, ascending.
pub fn subsets_of_size(n: usize, k: usize) -> Vec<u64> {
    if k > n {
        return Vec::new();
    }
    if k == 0 {
        return vec![0];
    }
    let mut out = Vec::new();
    let mut s: u64 = (1u64 << k) - 1;
    let limit = 1u64 << n;
    while s < limit {
        out.push(s);
        let c = s & s.wrapping_neg();
        let r = s + c;
        s = (((r ^ s) >> 2) / c) | r;
    }
    out
}

/// Determinant of `m[rows, cols]` by partial-pivot elimination.
pub fn minor_determinant(m: &CMatrix, rows: &[usize], cols: &[usize]) -> C64 {
    let k = rows.len();
    match k {
        0 => return ONE,
        1 => return m[(rows[0], cols[0])],
        2 => {
            return m[(rows[0], cols[0])] * m[(rows[1], cols[1])]
                - m[(rows[0], cols[1])] * m[(rows[1], cols[0])];
        }
        _ => {}
    }
    let mut a: Vec<C64> = Vec::with_capacity(k * k);
    for &r in rows {
        for &c in cols {
            a.push(m[(r, c)]);
        }
    }
    let mut det = ONE;
    for p in 0..k {
        let (mut piv, mut best) = (p, a[p * k + p].norm());
        for r in p + 1..k {
            let v = a[r * k + p].norm();
            if v > best {
                piv = r;
                best = v;
            }
        }
        if best == 0.0 {
            return ZERO;
        }
        if piv != p {
            for c in 0..k {
                a.swap(p * k + c, piv * k + c);
            }
            det = -det;
        }
        let d = a[p * k + p];
        det *= d;
        for r in p + 1..k {
            let f = a[r * k + p] / d;
            if f != ZERO {
                for c in p + 1..k {
                    let v = a[p * k + c];
                    a[r * k + c] -= f * v;
                }
            }
        }
    }
    det
}
