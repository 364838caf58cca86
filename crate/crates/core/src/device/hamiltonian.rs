//! Duffing-oscillator Hamiltonian of the device and its parity sectors.
//!
//! Modes are ordered `[q1, q2, q3, c1, c2]` with `q1` the most significant
//! digit of the basis index. Couplings `-g (b+_i - b_i)(b+_j - b_j)` keep the
//! total excitation number parity, so the space splits into two sectors.
//! Only the coupler frequencies depend on flux, and they enter the diagonal.

use nalgebra::DMatrix;

use crate::device::spec::{flux_to_frequency, DeviceSpec};
use crate::error::{FstError, Result};
use crate::linalg::{sorted_symmetric_eigen, C64, ZERO};

pub const Q1: usize = 0;
pub const Q2: usize = 1;
pub const Q3: usize = 2;
pub const C1: usize = 3;
pub const C2: usize = 4;
pub const N_MODES: usize = 5;

/// Product basis of five truncated oscillators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockBasis {
    pub levels: usize,
}

impl FockBasis {
    pub fn dim(&self) -> usize {
        self.levels.pow(N_MODES as u32)
    }

    pub fn occupation(&self, mut idx: usize) -> [usize; N_MODES] {
        let mut occ = [0; N_MODES];
        for m in (0..N_MODES).rev() {
            occ[m] = idx % self.levels;
            idx /= self.levels;
        }
        occ
    }

    pub fn index(&self, occ: &[usize; N_MODES]) -> usize {
        occ.iter().fold(0, |acc, &n| acc * self.levels + n)
    }

    /// Bare state for computational index `x` (bits `q1 q2 q3`, `q1` most
    /// significant), couplers empty.
    pub fn computational(&self, x: usize) -> usize {
        self.index(&[(x >> 2) & 1, (x >> 1) & 1, x & 1, 0, 0])
    }

    pub fn parity(&self, idx: usize) -> usize {
        self.occupation(idx).iter().sum::<usize>() % 2
    }
}

/// Static pieces of the Hamiltonian over the full product basis.
#[derive(Debug, Clone)]
pub struct HamiltonianParts {
    pub basis: FockBasis,
    /// Flux-independent diagonal: qubit energies and all anharmonic terms.
    pub diag_static: Vec<f64>,
    /// Coupler occupation numbers.
    pub n_c: [Vec<f64>; 2],
    /// Off-diagonal coupling entries `(row, col, value)`.
    pub off: Vec<(usize, usize, f64)>,
}

impl HamiltonianParts {
    pub fn new(spec: &DeviceSpec) -> Self {
        let basis = FockBasis {
            levels: spec.levels,
        };
        let dim = basis.dim();
        let mut diag_static = vec![0.0; dim];
        let mut n_c = [vec![0.0; dim], vec![0.0; dim]];
        let freqs = [spec.w[0], spec.w[1], spec.w[2]];
        let anh = [spec.a[0], spec.a[1], spec.a[2], spec.ac[0], spec.ac[1]];
        for (idx, d) in diag_static.iter_mut().enumerate() {
            let occ = basis.occupation(idx);
            for m in 0..N_MODES {
                let n = occ[m] as f64;
                if m < 3 {
                    *d += freqs[m] * n;
                }
                *d += anh[m] / 2.0 * n * (n - 1.0);
            }
            n_c[0][idx] = occ[C1] as f64;
            n_c[1][idx] = occ[C2] as f64;
        }
        let bonds = [
            (Q1, C1, spec.g1c1),
            (Q2, C1, spec.g2c1),
            (Q2, C2, spec.g2c2),
            (Q3, C2, spec.g3c2),
            (Q1, Q2, spec.g12),
            (Q2, Q3, spec.g23),
        ];
        let mut off = Vec::new();
        let l = basis.levels;
        for col in 0..dim {
            let occ = basis.occupation(col);
            for &(i, j, g) in &bonds {
                if g == 0.0 {
                    continue;
                }
                // (b+ - b) on each mode: raise with +sqrt(n+1), lower with -sqrt(n)
                for di in [1i32, -1] {
                    for dj in [1i32, -1] {
                        let (ni, nj) = (occ[i] as i32 + di, occ[j] as i32 + dj);
                        if ni < 0 || nj < 0 || ni >= l as i32 || nj >= l as i32 {
                            continue;
                        }
                        let ai = if di > 0 {
                            (ni as f64).sqrt()
                        } else {
                            -(occ[i] as f64).sqrt()
                        };
                        let aj = if dj > 0 {
                            (nj as f64).sqrt()
                        } else {
                            -(occ[j] as f64).sqrt()
                        };
                        let mut target = occ;
                        target[i] = ni as usize;
                        target[j] = nj as usize;
                        off.push((basis.index(&target), col, -g * ai * aj));
                    }
                }
            }
        }
        HamiltonianParts {
            basis,
            diag_static,
            n_c,
            off,
        }
    }

    /// Full diagonal for given coupler frequencies.
    pub fn diagonal(&self, wc: [f64; 2]) -> Vec<f64> {
        (0..self.diag_static.len())
            .map(|i| self.diag_static[i] + wc[0] * self.n_c[0][i] + wc[1] * self.n_c[1][i])
            .collect()
    }
}

/// Real symmetric Hamiltonian over the full space at coupler fluxes `phi`.
pub fn build_hamiltonian(spec: &DeviceSpec, phi: [f64; 2]) -> DMatrix<f64> {
    let parts = HamiltonianParts::new(spec);
    let wc = [
        flux_to_frequency(spec, 0, phi[0]),
        flux_to_frequency(spec, 1, phi[1]),
    ];
    let dim = parts.basis.dim();
    let mut h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(parts.diagonal(wc)));
    for &(r, c, v) in &parts.off {
        h[(r, c)] += v;
    }
    debug_assert_eq!(h.nrows(), dim);
    h
}

/// Compressed sparse rows for the off-diagonal part of one sector.
#[derive(Debug, Clone)]
pub struct Csr {
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        let mut last = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *vals.last_mut().expect("entry exists") += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Csr {
            row_ptr,
            cols,
            vals,
        }
    }

    /// `out = (D + A) x`.
    pub fn apply_with_diag(&self, diag: &[f64], x: &[C64], out: &mut [C64]) {
        for r in 0..diag.len() {
            let mut acc = x[r] * diag[r];
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += x[self.cols[k]] * self.vals[k];
            }
            out[r] = acc;
        }
    }

    pub fn row_abs_sums(&self) -> Vec<f64> {
        (0..self.row_ptr.len() - 1)
            .map(|r| {
                self.vals[self.row_ptr[r]..self.row_ptr[r + 1]]
                    .iter()
                    .map(|v| v.abs())
                    .sum()
            })
            .collect()
    }
}

/// One parity sector of the Hamiltonian.
#[derive(Debug, Clone)]
pub struct Sector {
    pub parity: usize,
    /// Global basis indices of the sector states, ascending.
    pub states: Vec<usize>,
    pub off: Csr,
    pub diag_static: Vec<f64>,
    pub n_c: [Vec<f64>; 2],
    pub row_abs: Vec<f64>,
}

impl Sector {
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn diagonal(&self, wc: [f64; 2]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.diag_static[i] + wc[0] * self.n_c[0][i] + wc[1] * self.n_c[1][i])
            .collect()
    }

    /// Position of a global basis index inside the sector.
    pub fn local(&self, global: usize) -> Option<usize> {
        self.states.binary_search(&global).ok()
    }

    pub fn dense(&self, wc: [f64; 2]) -> DMatrix<f64> {
        let n = self.dim();
        let mut h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.diagonal(wc)));
        for r in 0..n {
            for k in self.off.row_ptr[r]..self.off.row_ptr[r + 1] {
                h[(r, self.off.cols[k])] += self.off.vals[k];
            }
        }
        h
    }

    /// Gershgorin bounds of the spectrum for a given diagonal.
    pub fn spectral_bounds(&self, diag: &[f64]) -> (f64, f64) {
        diag.iter()
            .zip(&self.row_abs)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (d, r)| {
                (lo.min(d - r), hi.max(d + r))
            })
    }
}

/// Both parity sectors, even first.
pub fn sectors(spec: &DeviceSpec) -> [Sector; 2] {
    let parts = HamiltonianParts::new(spec);
    let basis = parts.basis;
    [0usize, 1].map(|parity| {
        let states: Vec<usize> = (0..basis.dim())
            .filter(|&i| basis.parity(i) == parity)
            .collect();
        let local = |g: usize| states.binary_search(&g).expect("coupling preserves parity");
        let triplets: Vec<(usize, usize, f64)> = parts
            .off
            .iter()
            .filter(|(_, c, _)| basis.parity(*c) == parity)
            .map(|&(r, c, v)| (local(r), local(c), v))
            .collect();
        let off = Csr::from_triplets(states.len(), triplets);
        let row_abs = off.row_abs_sums();
        Sector {
            parity,
            diag_static: states.iter().map(|&g| parts.diag_static[g]).collect(),
            n_c: [0, 1].map(|c| states.iter().map(|&g| parts.n_c[c][g]).collect()),
            states,
            off,
            row_abs,
        }
    })
}

/// Eigenstate of the static Hamiltonian identified with a bare state.
#[derive(Debug, Clone)]
pub struct DressedState {
    pub bare: usize,
    pub sector: usize,
    pub energy: f64,
    /// Real amplitudes over the sector basis.
    pub vector: Vec<f64>,
    pub overlap: f64,
}

/// Minimum squared overlap for a dressed state to be identified with a bare one.
pub const DRESSED_OVERLAP_MIN: f64 = 0.5;

/// Eigen-decomposition of both sectors at fixed coupler fluxes.
#[derive(Debug, Clone)]
pub struct StaticSpectrum {
    pub sectors: [Sector; 2],
    pub values: [Vec<f64>; 2],
    pub vectors: [DMatrix<f64>; 2],
    pub basis: FockBasis,
}

impl StaticSpectrum {
    pub fn new(spec: &DeviceSpec, phi: [f64; 2]) -> Self {
        let wc = [
            flux_to_frequency(spec, 0, phi[0]),
            flux_to_frequency(spec, 1, phi[1]),
        ];
        let sectors = sectors(spec);
        let (v0, e0) = sorted_symmetric_eigen(&sectors[0].dense(wc));
        let (v1, e1) = sorted_symmetric_eigen(&sectors[1].dense(wc));
        StaticSpectrum {
            sectors,
            values: [v0, v1],
            vectors: [e0, e1],
            basis: FockBasis {
                levels: spec.levels,
            },
        }
    }

    /// Dressed state with the largest overlap onto a bare basis state.
    pub fn dressed(&self, bare: usize) -> Result<DressedState> {
        let sector = self.basis.parity(bare);
        let s = &self.sectors[sector];
        let row = s
            .local(bare)
            .ok_or_else(|| FstError::invalid("bare state outside its parity sector"))?;
        let vecs = &self.vectors[sector];
        let (best, overlap) = (0..vecs.ncols())
            .map(|k| (k, vecs[(row, k)] * vecs[(row, k)]))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty sector");
        if overlap < DRESSED_OVERLAP_MIN {
            return Err(FstError::Degenerate(format!(
                "bare state {:?} has no dressed partner (best overlap {overlap:.3})",
                self.basis.occupation(bare)
            )));
        }
        let mut vector: Vec<f64> = vecs.column(best).iter().cloned().collect();
        if vector[row] < 0.0 {
            vector.iter_mut().for_each(|v| *v = -*v);
        }
        Ok(DressedState {
            bare,
            sector,
            energy: self.values[sector][best],
            vector,
            overlap,
        })
    }

    /// Dressed energy of a bare state.
    pub fn energy(&self, bare: usize) -> Result<f64> {
        Ok(self.dressed(bare)?.energy)
    }

    /// The eight dressed computational states in computational order.
    pub fn computational(&self) -> Result<Vec<DressedState>> {
        (0..8)
            .map(|x| self.dressed(self.basis.computational(x)))
            .collect()
    }

    /// Dressed qubit frequencies `E(q_i = 1) - E(0)`.
    pub fn qubit_frequencies(&self) -> Result<[f64; 3]> {
        let e0 = self.energy(self.basis.computational(0))?;
        Ok([
            self.energy(self.basis.computational(0b100))? - e0,
            self.energy(self.basis.computational(0b010))? - e0,
            self.energy(self.basis.computational(0b001))? - e0,
        ])
    }
}

/// Complex column embedded from a real sector vector.
pub fn complex_column(v: &[f64]) -> Vec<C64> {
    v.iter().map(|&x| C64::new(x, 0.0)).collect()
}

pub fn zero_column(n: usize) -> Vec<C64> {
    vec![ZERO; n]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::spec::GHZ;

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
    fn basis_round_trip() {
        let b = FockBasis { levels: 3 };
        assert_eq!(b.dim(), 243);
        for i in [0, 17, 242] {
            assert_eq!(b.index(&b.occupation(i)), i);
        }
        assert_eq!(b.occupation(b.computational(0b101)), [1, 0, 1, 0, 0]);
    }

    #[test]
    fn uncoupled_energies() {
        let s = uncoupled();
        let h = build_hamiltonian(&s, s.phi_dc);
        let b = FockBasis { levels: 3 };
        assert!((h[(b.computational(0b010), b.computational(0b010))] - s.w[1]).abs() < 1e-3);
        let two = b.index(&[2, 0, 0, 0, 0]);
        assert!((h[(two, two)] - (2.0 * s.w[0] + s.a[0])).abs() < 1e-3);
        let c = b.index(&[0, 0, 0, 1, 0]);
        assert!((h[(c, c)] - s.wc[0]).abs() < 1e-3);
    }

    #[test]
    fn hamiltonian_symmetric_and_parity_preserving() {
        let s = DeviceSpec::reference();
        let h = build_hamiltonian(&s, [0.31, 0.27]);
        assert!((&h - h.transpose()).abs().max() < 1e-6);
        let b = FockBasis { levels: 3 };
        for r in 0..h.nrows() {
            for c in 0..h.ncols() {
                if h[(r, c)] != 0.0 {
                    assert_eq!(b.parity(r), b.parity(c));
                }
            }
        }
        let [even, odd] = sectors(&s);
        assert_eq!((even.dim(), odd.dim()), (122, 121));
    }

    #[test]
    fn exchange_sign() {
        // -g (b1+ - b1)(b2+ - b2) contains +g (b1+ b2 + h.c.)
        let s = DeviceSpec::reference();
        let h = build_hamiltonian(&s, s.phi_dc);
        let b = FockBasis { levels: 3 };
        assert!((h[(b.computational(0b100), b.computational(0b010))] - s.g12).abs() < 1e-6);
        let q1c1 = b.index(&[1, 0, 0, 1, 0]);
        assert!((h[(q1c1, 0)] + s.g1c1).abs() < 1e-6);
    }

    #[test]
    fn dressed_states_identified_at_bias() {
        let s = DeviceSpec::reference();
        let spec = StaticSpectrum::new(&s, s.phi_dc);
        let comp = spec.computational().unwrap();
        assert!(comp.iter().all(|d| d.overlap > 0.9));
        let f = spec.qubit_frequencies().unwrap();
        assert!((f[0] / GHZ - 5.05).abs() < 0.05);
    }
}
