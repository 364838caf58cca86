//! The effective non-local generator `G_N`, the gate `K_N = exp(-i theta/2 G_N)`
//! and the check that the FST propagator reproduces it up to local phases.
//!
//! `G_N` is a sum of mirror-pair hopping terms `s+_n Z..Z s-_{N+1-n} + h.c.`.
//! The terms commute, and each one squares to the projector onto its
//! single-excitation pair subspace, so `K_N` is a product of pair rotations.

use serde::{Deserialize, Serialize};

use crate::chain::ChainParams;
use crate::error::{FstError, Result};
use crate::fermion::{
    dense_oracle, extract_transfer_phase, phase_fix_diagonal, single_propagator, FullUnitary,
};
use crate::linalg::{worst_entry, CMatrix, C64, I, ONE, ZERO};
use crate::state::{site_bit, StateVector};
use crate::tolerances::{DENSE_MAX_SITES, LIFT_MAX_SITES};

/// Mirror pairs `(n, N+1-n)` with `n < N+1-n`, 1-based.
pub fn mirror_pairs(n_sites: usize) -> Vec<(usize, usize)> {
    (1..=n_sites / 2).map(|n| (n, n_sites + 1 - n)).collect()
}

/// Action of one pair term on a basis index: `None` if it annihilates it,
/// otherwise the target index and the Z-string sign.
fn pair_action(n_sites: usize, pair: (usize, usize), x: usize) -> Option<(usize, f64)> {
    let (a, b) = (site_bit(n_sites, pair.0), site_bit(n_sites, pair.1));
    let (oa, ob) = (x & a != 0, x & b != 0);
    if oa == ob {
        return None;
    }
    let between: usize = (pair.0 + 1..pair.1).map(|s| site_bit(n_sites, s)).sum();
    let sign = if (x & between).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    };
    Some((x ^ a ^ b, sign))
}

/// `G_N` stored as its non-zero entries.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveGenerator {
    pub n_sites: usize,
    /// `(row, col, value)`, column-major order.
    pub entries: Vec<(usize, usize, f64)>,
}

pub fn build_generator(n_sites: usize) -> Result<EffectiveGenerator> {
    if n_sites < 2 {
        return Err(FstError::invalid("generator needs at least two sites"));
    }
    if n_sites > LIFT_MAX_SITES {
        return Err(FstError::SizeGuard {
            what: "effective generator",
            n: n_sites,
            limit: LIFT_MAX_SITES,
        });
    }
    let pairs = mirror_pairs(n_sites);
    let mut entries = Vec::new();
    for x in 0..1usize << n_sites {
        let mut col: Vec<(usize, usize, f64)> = pairs
            .iter()
            .filter_map(|&p| pair_action(n_sites, p, x))
            .map(|(y, s)| (y, x, s))
            .collect();
        col.sort_by_key(|e| e.0);
        entries.extend(col);
    }
    let g = EffectiveGenerator { n_sites, entries };
    if n_sites <= 8 {
        let c = g.pair_commutator_norm();
        if c > 1e-12 {
            return Err(FstError::Tolerance {
                what: "pair-term commutator".into(),
                value: c,
                tol: 1e-12,
            });
        }
    }
    Ok(g)
}

impl EffectiveGenerator {
    pub fn dim(&self) -> usize {
        1 << self.n_sites
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim(), self.dim());
        for &(r, c, v) in &self.entries {
            m[(r, c)] = C64::new(v, 0.0);
        }
        m
    }

    /// Dense matrix of a single mirror-pair term.
    pub fn pair_term(&self, pair: (usize, usize)) -> CMatrix {
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for x in 0..d {
            if let Some((y, s)) = pair_action(self.n_sites, pair, x) {
                m[(y, x)] = C64::new(s, 0.0);
            }
        }
        m
    }

    /// Largest entry of `[P_a, P_b]` over all pairs of pair terms.
    pub fn pair_commutator_norm(&self) -> f64 {
        let terms: Vec<CMatrix> = mirror_pairs(self.n_sites)
            .into_iter()
            .map(|p| self.pair_term(p))
            .collect();
        let mut worst: f64 = 0.0;
        for a in 0..terms.len() {
            for b in a + 1..terms.len() {
                let c = &terms[a] * &terms[b] - &terms[b] * &terms[a];
                worst = worst.max(crate::linalg::max_abs(&c));
            }
        }
        worst
    }

    pub fn hermiticity_error(&self) -> f64 {
        let m = self.to_dense();
        crate::linalg::max_dist(&m, &m.adjoint())
    }

    /// Largest entry connecting different excitation numbers.
    pub fn excitation_mixing(&self) -> f64 {
        self.entries
            .iter()
            .filter(|(r, c, _)| r.count_ones() != c.count_ones())
            .fold(0.0, |acc, (_, _, v)| acc.max(v.abs()))
    }
}

/// Apply `K_N(theta)` to a register in place, one pair rotation at a time.
pub fn apply_effective_gate(psi: &mut StateVector, theta: f64) {
    let n = psi.n_sites();
    let (cs, sn) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    for pair in mirror_pairs(n) {
        let a = psi.amplitudes_mut();
        let ba = site_bit(n, pair.0);
        for x in 0..a.len() {
            // visit each two-state block once, from the member with the left site empty
            if x & ba != 0 {
                continue;
            }
            if let Some((y, s)) = pair_action(n, pair, x) {
                let (ax, ay) = (a[x], a[y]);
                let off = -I * (s * sn);
                a[x] = ax * cs + off * ay;
                a[y] = ay * cs + off * ax;
            }
        }
    }
}

/// `K_N(theta) = exp(-i theta/2 G_N)` as a full matrix.
pub fn effective_gate(n_sites: usize, theta: f64) -> Result<FullUnitary> {
    if n_sites < 2 {
        return Err(FstError::invalid("effective gate needs at least two sites"));
    }
    if n_sites > LIFT_MAX_SITES {
        return Err(FstError::SizeGuard {
            what: "effective gate",
            n: n_sites,
            limit: LIFT_MAX_SITES,
        });
    }
    let d = 1usize << n_sites;
    let mut m = CMatrix::zeros(d, d);
    for x in 0..d {
        let mut col = StateVector::basis(n_sites, x);
        apply_effective_gate(&mut col, theta);
        for (y, z) in col.amplitudes().iter().enumerate() {
            m[(y, x)] = *z;
        }
    }
    Ok(FullUnitary { n_sites, matrix: m })
}

/// Closed-form single-excitation block of `K_N`:
/// `cos(theta/2) delta_{n,m} - i sin(theta/2) delta_{n,N+1-m}`, middle site 1.
pub fn single_excitation_block(n_sites: usize, theta: f64) -> CMatrix {
    let (cs, sn) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    CMatrix::from_fn(n_sites, n_sites, |r, c| {
        let mirror = n_sites - 1 - c;
        if c == mirror {
            if r == c {
                ONE
            } else {
                ZERO
            }
        } else if r == c {
            C64::new(cs, 0.0)
        } else if r == mirror {
            C64::new(0.0, -sn)
        } else {
            ZERO
        }
    })
}

/// Rows and columns of a full unitary restricted to one excitation, site order.
pub fn extract_single_excitation(u: &FullUnitary) -> CMatrix {
    let n = u.n_sites;
    CMatrix::from_fn(n, n, |r, c| {
        u.matrix[(site_bit(n, r + 1), site_bit(n, c + 1))]
    })
}

/// Distance of `a` from `b` modulo a layer of single-qubit Z rotations and a
/// global phase.
///
/// `a b^dagger` must be diagonal with entries `d_x = d_0 prod_{s in x} p_s`.
/// The site phases `p_s` are read off the single-excitation diagonal. Returns
/// the largest violation of either condition.
pub fn z_layer_distance(a: &FullUnitary, b: &FullUnitary) -> Result<f64> {
    if a.n_sites != b.n_sites {
        return Err(FstError::Dimension {
            expected: a.n_sites,
            got: b.n_sites,
        });
    }
    let n = a.n_sites;
    let d = &a.matrix * b.matrix.adjoint();
    let mut worst: f64 = 0.0;
    for c in 0..d.ncols() {
        for r in 0..d.nrows() {
            if r != c {
                worst = worst.max(d[(r, c)].norm());
            }
        }
    }
    let d0 = d[(0, 0)];
    if (d0.norm() - 1.0).abs() > 0.5 {
        return Ok(worst.max((d0.norm() - 1.0).abs()));
    }
    let site_phase: Vec<C64> = (1..=n)
        .map(|s| d[(site_bit(n, s), site_bit(n, s))] / d0)
        .collect();
    for x in 0..d.nrows() {
        let predicted = (1..=n)
            .filter(|&s| x & site_bit(n, s) != 0)
            .fold(d0, |acc, s| acc * site_phase[s - 1]);
        worst = worst.max((d[(x, x)] - predicted).norm());
    }
    Ok(worst)
}

/// Outcome of the stroboscopic mapping check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingReport {
    pub n_sites: usize,
    pub theta: f64,
    pub tau: f64,
    pub phi: f64,
    pub distance: f64,
    /// Row and column (basis indices) of the worst entry.
    pub worst_row: usize,
    pub worst_col: usize,
    pub tolerance: f64,
    pub passed: bool,
}

impl MappingReport {
    pub fn into_result(self) -> Result<Self> {
        if self.passed {
            Ok(self)
        } else {
            Err(FstError::Tolerance {
                what: format!(
                    "mapping distance at entry ({}, {})",
                    self.worst_row, self.worst_col
                ),
                value: self.distance,
                tol: self.tolerance,
            })
        }
    }
}

/// Compare `U(tau) * PhaseFix` against `K_N(theta)`.
pub fn verify_mapping(params: &ChainParams, theta: f64, tol: f64) -> Result<MappingReport> {
    let n = params.n_sites();
    if n > DENSE_MAX_SITES {
        return Err(FstError::SizeGuard {
            what: "mapping check",
            n,
            limit: DENSE_MAX_SITES,
        });
    }
    let phi = extract_transfer_phase(&single_propagator(params, params.tau)?, theta)?.phi;
    let mut d = dense_oracle(params, params.tau)?.matrix;
    let fix = phase_fix_diagonal(n, phi, theta);
    for (c, p) in fix.iter().enumerate() {
        for r in 0..d.nrows() {
            d[(r, c)] *= *p;
        }
    }
    let k = effective_gate(n, theta)?;
    let (worst_row, worst_col, distance) = worst_entry(&d, &k.matrix);
    Ok(MappingReport {
        n_sites: n,
        theta,
        tau: params.tau,
        phi,
        distance,
        worst_row,
        worst_col,
        tolerance: tol,
        passed: distance <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{synthesize, ChainSpec};
    use crate::linalg::{c, max_dist};
    use std::f64::consts::PI;

    #[test]
    fn two_site_generator_is_xy_over_two() {
        let g = build_generator(2).unwrap().to_dense();
        let mut expected = CMatrix::zeros(4, 4);
        expected[(1, 2)] = ONE;
        expected[(2, 1)] = ONE;
        assert!(max_dist(&g, &expected) < 1e-15);
    }

    #[test]
    fn three_site_generator_carries_middle_z() {
        let g = build_generator(3).unwrap().to_dense();
        // |100> <-> |001> with the middle empty: +1; with the middle occupied: -1
        assert_eq!(g[(0b001, 0b100)], ONE);
        assert_eq!(g[(0b011, 0b110)], c(-1.0, 0.0));
        assert_eq!(g[(0b010, 0b010)], ZERO);
    }

    #[test]
    fn five_site_pairs_commute() {
        let g = build_generator(5).unwrap();
        assert!(g.pair_commutator_norm() < 1e-12);
        assert!(g.hermiticity_error() < 1e-15);
        assert_eq!(g.excitation_mixing(), 0.0);
    }

    #[test]
    fn gate_matches_dense_exponential() {
        for n in 2..=6 {
            let g = build_generator(n).unwrap().to_dense();
            for theta in [0.3, 1.7, PI] {
                let k = effective_gate(n, theta).unwrap();
                let direct = crate::linalg::expm_hermitian(&g, theta / 2.0);
                assert!(max_dist(&k.matrix, &direct) < 1e-12, "n={n} theta={theta}");
            }
        }
    }

    #[test]
    fn k3_block_form() {
        let theta = 0.9;
        let k = effective_gate(3, theta).unwrap();
        let (cs, sn) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        // middle empty: iSWAP_13(-theta); middle occupied: iSWAP_13(theta)
        assert!((k.matrix[(0b001, 0b100)] - c(0.0, -sn)).norm() < 1e-15);
        assert!((k.matrix[(0b011, 0b110)] - c(0.0, sn)).norm() < 1e-15);
        assert!((k.matrix[(0b100, 0b100)] - c(cs, 0.0)).norm() < 1e-15);
        assert!((k.matrix[(0b111, 0b111)] - ONE).norm() < 1e-15);
    }

    #[test]
    fn k_pi_squares_to_z_layer() {
        let k = effective_gate(4, PI).unwrap();
        let sq = FullUnitary {
            n_sites: 4,
            matrix: &k.matrix * &k.matrix,
        };
        assert!(z_layer_distance(&sq, &FullUnitary::identity(4)).unwrap() < 1e-12);
        assert!(z_layer_distance(&k, &FullUnitary::identity(4)).unwrap() > 0.5);
    }

    #[test]
    fn single_excitation_block_matches_closed_form() {
        for n in [2, 3, 6, 7] {
            let k = effective_gate(n, 1.2).unwrap();
            assert!(
                max_dist(
                    &extract_single_excitation(&k),
                    &single_excitation_block(n, 1.2)
                ) < 1e-15
            );
        }
    }

    #[test]
    fn mapping_two_and_five_sites() {
        for (n, theta) in [(2, PI / 2.0), (5, PI / 2.0), (8, 0.3 * PI)] {
            let p = synthesize(&ChainSpec::with_tau(n, theta, 1.0).unwrap()).unwrap();
            let r = verify_mapping(&p, theta, 1e-8).unwrap();
            assert!(r.passed, "n={n}: {r:?}");
        }
    }

    #[test]
    fn guards() {
        assert!(build_generator(13).is_err());
        assert!(effective_gate(1, 1.0).is_err());
    }
}
