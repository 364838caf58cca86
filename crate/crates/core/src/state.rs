//! Qubit-register states.
//!
//! Basis convention: site 1 is the most significant bit of the basis index, so
//! the computational string `x_1 x_2 ... x_N` is read as a binary number. The
//! same bitmask labels the Fock state `a+_{i1} ... a+_{ik} |vac>` with
//! `i1 < ... < ik` the occupied sites.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{FstError, Result};
use crate::linalg::{C64, ONE, ZERO};

/// Bit of the basis index that carries site `site` (1-based).
pub fn site_bit(n_sites: usize, site: usize) -> usize {
    debug_assert!(site >= 1 && site <= n_sites);
    1usize << (n_sites - site)
}

pub fn is_occupied(n_sites: usize, index: usize, site: usize) -> bool {
    index & site_bit(n_sites, site) != 0
}

/// Strictly increasing set of occupied sites (1-based).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct OccupationSubset(Vec<usize>);

impl OccupationSubset {
    pub fn new(sites: Vec<usize>) -> Result<Self> {
        if sites.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FstError::invalid(format!(
                "sites must be strictly increasing: {sites:?}"
            )));
        }
        if sites.first() == Some(&0) {
            return Err(FstError::invalid("sites are 1-based"));
        }
        Ok(OccupationSubset(sites))
    }

    pub fn empty() -> Self {
        OccupationSubset(Vec::new())
    }

    pub fn sites(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_index(&self, n_sites: usize) -> Result<usize> {
        if let Some(&last) = self.0.last() {
            if last > n_sites {
                return Err(FstError::invalid(format!(
                    "site {last} outside a chain of {n_sites}"
                )));
            }
        }
        Ok(self.0.iter().map(|&s| site_bit(n_sites, s)).sum())
    }

    pub fn from_index(n_sites: usize, index: usize) -> Self {
        OccupationSubset(
            (1..=n_sites)
                .filter(|&s| is_occupied(n_sites, index, s))
                .collect(),
        )
    }
}

impl TryFrom<Vec<usize>> for OccupationSubset {
    type Error = FstError;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        OccupationSubset::new(v)
    }
}

impl From<OccupationSubset> for Vec<usize> {
    fn from(s: OccupationSubset) -> Self {
        s.0
    }
}

/// Which end of the basis index carries site 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BitOrder {
    #[default]
    SiteOneMsb,
    SiteOneLsb,
}

/// Dense amplitude vector over `2^N` computational basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_sites: usize,
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(n_sites: usize, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != 1usize << n_sites {
            return Err(FstError::Dimension {
                expected: 1 << n_sites,
                got: amplitudes.len(),
            });
        }
        Ok(StateVector {
            n_sites,
            amplitudes,
        })
    }

    /// Import with an explicit bit order; stored internally with site 1 as MSB.
    pub fn with_order(n_sites: usize, amplitudes: Vec<C64>, order: BitOrder) -> Result<Self> {
        let s = Self::new(n_sites, amplitudes)?;
        Ok(match order {
            BitOrder::SiteOneMsb => s,
            BitOrder::SiteOneLsb => s.bit_reversed(),
        })
    }

    pub fn basis(n_sites: usize, index: usize) -> Self {
        let mut a = vec![ZERO; 1 << n_sites];
        a[index] = ONE;
        StateVector {
            n_sites,
            amplitudes: a,
        }
    }

    pub fn vacuum(n_sites: usize) -> Self {
        Self::basis(n_sites, 0)
    }

    /// Normalised state with amplitudes drawn uniformly from the unit square,
    /// reproducible for a given seed.
    pub fn random(n_sites: usize, seed: u64) -> Self {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut a: Vec<C64> = (0..1usize << n_sites)
            .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let norm = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        a.iter_mut().for_each(|z| *z /= norm);
        StateVector {
            n_sites,
            amplitudes: a,
        }
    }

    pub fn from_occupation(n_sites: usize, occ: &OccupationSubset) -> Result<Self> {
        Ok(Self::basis(n_sites, occ.to_index(n_sites)?))
    }

    /// Product state from single-qubit states `(a0, a1)` listed from site 1.
    pub fn product(qubits: &[(C64, C64)]) -> Self {
        let n = qubits.len();
        let amplitudes = (0..1usize << n)
            .map(|idx| {
                qubits.iter().enumerate().fold(ONE, |acc, (k, (a0, a1))| {
                    if is_occupied(n, idx, k + 1) {
                        acc * a1
                    } else {
                        acc * a0
                    }
                })
            })
            .collect();
        StateVector {
            n_sites: n,
            amplitudes,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn amplitudes_in(&self, order: BitOrder) -> Vec<C64> {
        match order {
            BitOrder::SiteOneMsb => self.amplitudes.clone(),
            BitOrder::SiteOneLsb => self.bit_reversed().amplitudes,
        }
    }

    fn bit_reversed(&self) -> Self {
        let n = self.n_sites;
        let rev = |i: usize| (0..n).fold(0, |acc, b| acc | (((i >> b) & 1) << (n - 1 - b)));
        let mut a = vec![ZERO; self.amplitudes.len()];
        for (i, z) in self.amplitudes.iter().enumerate() {
            a[rev(i)] = *z;
        }
        StateVector {
            n_sites: n,
            amplitudes: a,
        }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(FstError::invalid("cannot normalise the zero vector"));
        }
        self.amplitudes.iter_mut().for_each(|z| *z /= n);
        Ok(self)
    }

    pub fn ensure_normalized(&self, tol: f64) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() > tol {
            return Err(FstError::invalid(format!(
                "state is not normalised: |psi| = {n}"
            )));
        }
        Ok(())
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `<n_site>` for every site, in site order.
    pub fn populations(&self) -> Vec<f64> {
        let n = self.n_sites;
        let mut p = vec![0.0; n];
        for (idx, z) in self.amplitudes.iter().enumerate() {
            let w = z.norm_sqr();
            if w == 0.0 {
                continue;
            }
            for (s, ps) in p.iter_mut().enumerate() {
                if is_occupied(n, idx, s + 1) {
                    *ps += w;
                }
            }
        }
        p
    }

    /// Flip the qubit at `site` (instantaneous X gate).
    pub fn flip(&mut self, site: usize) {
        let bit = site_bit(self.n_sites, site);
        for i in 0..self.amplitudes.len() {
            if i & bit == 0 {
                self.amplitudes.swap(i, i | bit);
            }
        }
    }

    /// Apply a 2x2 unitary `[[u00, u01], [u10, u11]]` to `site`.
    pub fn apply_single(&mut self, site: usize, u: [[C64; 2]; 2]) {
        let bit = site_bit(self.n_sites, site);
        for i in 0..self.amplitudes.len() {
            if i & bit == 0 {
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[i | bit];
                self.amplitudes[i] = u[0][0] * a0 + u[0][1] * a1;
                self.amplitudes[i | bit] = u[1][0] * a0 + u[1][1] * a1;
            }
        }
    }

    /// Probability that `site` reads 1.
    pub fn probability_one(&self, site: usize) -> f64 {
        let bit = site_bit(self.n_sites, site);
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, z)| z.norm_sqr())
            .sum()
    }

    /// Project `site` onto `outcome` and renormalise.
    pub fn collapse(&mut self, site: usize, outcome: bool) -> Result<()> {
        let bit = site_bit(self.n_sites, site);
        for (i, z) in self.amplitudes.iter_mut().enumerate() {
            if (i & bit != 0) != outcome {
                *z = ZERO;
            }
        }
        let n = self.norm();
        if n < 1e-300 {
            return Err(FstError::Degenerate(format!(
                "outcome {outcome} at site {site} has zero probability"
            )));
        }
        self.amplitudes.iter_mut().for_each(|z| *z /= n);
        Ok(())
    }

    /// Embed as the middle register of a longer chain with idle edge qubits.
    pub fn embed(&self, left: usize, right: usize) -> StateVector {
        let n = self.n_sites + left + right;
        let mut a = vec![ZERO; 1 << n];
        for (i, z) in self.amplitudes.iter().enumerate() {
            a[i << right] = *z;
        }
        StateVector {
            n_sites: n,
            amplitudes: a,
        }
    }

    /// Serialise as a JSON array of `[re, im]` pairs.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.amplitudes
                .iter()
                .map(|z| serde_json::json!([z.re, z.im]))
                .collect(),
        )
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let pairs: Vec<[f64; 2]> = serde_json::from_value(v.clone())?;
        let len = pairs.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(FstError::invalid(format!(
                "state length {len} is not a power of two"
            )));
        }
        let n = len.trailing_zeros() as usize;
        Self::new(
            n,
            pairs.into_iter().map(|[re, im]| C64::new(re, im)).collect(),
        )
    }
}

/// Sparse state organised by occupation bitmask; handles long chains with few
/// excitations where the dense vector would be too large.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FockState {
    pub n_sites: usize,
    pub amplitudes: BTreeMap<u64, C64>,
}

impl FockState {
    pub fn from_occupation(n_sites: usize, occ: &OccupationSubset) -> Result<Self> {
        if n_sites > 63 {
            return Err(FstError::SizeGuard {
                what: "sparse Fock state",
                n: n_sites,
                limit: 63,
            });
        }
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(occ.to_index(n_sites)? as u64, ONE);
        Ok(FockState {
            n_sites,
            amplitudes,
        })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .values()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn populations(&self) -> Vec<f64> {
        let n = self.n_sites;
        let mut p = vec![0.0; n];
        for (&mask, z) in &self.amplitudes {
            let w = z.norm_sqr();
            for (s, ps) in p.iter_mut().enumerate() {
                if is_occupied(n, mask as usize, s + 1) {
                    *ps += w;
                }
            }
        }
        p
    }

    pub fn flip(&mut self, site: usize) {
        let bit = site_bit(self.n_sites, site) as u64;
        self.amplitudes = self
            .amplitudes
            .iter()
            .map(|(&m, &z)| (m ^ bit, z))
            .collect();
    }

    pub fn probability_one(&self, site: usize) -> f64 {
        let bit = site_bit(self.n_sites, site) as u64;
        self.amplitudes
            .iter()
            .filter(|(m, _)| *m & bit != 0)
            .map(|(_, z)| z.norm_sqr())
            .sum()
    }

    pub fn collapse(&mut self, site: usize, outcome: bool) -> Result<()> {
        let bit = site_bit(self.n_sites, site) as u64;
        self.amplitudes.retain(|m, _| (m & bit != 0) == outcome);
        let n = self.norm();
        if n < 1e-300 {
            return Err(FstError::Degenerate(format!(
                "outcome {outcome} at site {site} has zero probability"
            )));
        }
        self.amplitudes.values_mut().for_each(|z| *z /= n);
        Ok(())
    }

    pub fn to_dense(&self) -> Result<StateVector> {
        if self.n_sites > 24 {
            return Err(FstError::SizeGuard {
                what: "dense state",
                n: self.n_sites,
                limit: 24,
            });
        }
        let mut a = vec![ZERO; 1 << self.n_sites];
        for (&m, &z) in &self.amplitudes {
            a[m as usize] = z;
        }
        StateVector::new(self.n_sites, a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn occupation_index_uses_site_one_as_msb() {
        let occ = OccupationSubset::new(vec![1, 3]).unwrap();
        assert_eq!(occ.to_index(3).unwrap(), 0b101);
        assert_eq!(OccupationSubset::from_index(4, 0b0110).sites(), &[2, 3]);
        assert!(OccupationSubset::new(vec![2, 2]).is_err());
        assert!(OccupationSubset::new(vec![3, 1]).is_err());
    }

    #[test]
    fn embed_places_register_in_the_middle() {
        let s = StateVector::basis(2, 0b01);
        let e = s.embed(1, 1);
        assert_eq!(e.n_sites(), 4);
        assert_eq!(e.amplitudes()[0b0010], ONE);
    }

    #[test]
    fn lsb_import_is_bit_reversed() {
        let mut a = vec![ZERO; 8];
        a[0b001] = ONE; // site 1 occupied in LSB-first order
        let s = StateVector::with_order(3, a, BitOrder::SiteOneLsb).unwrap();
        assert_eq!(s.populations(), vec![1.0, 0.0, 0.0]);
        assert_eq!(s.amplitudes_in(BitOrder::SiteOneLsb)[1], ONE);
    }

    #[test]
    fn json_pairs() {
        let s = StateVector::product(&[(ONE, ZERO), (ZERO, C64::new(0.0, 1.0))]);
        let v = s.to_json();
        assert_eq!(v[1], serde_json::json!([0.0, 1.0]));
        assert_eq!(StateVector::from_json(&v).unwrap(), s);
        assert!(
            StateVector::from_json(&serde_json::json!([[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]]))
                .is_err()
        );
    }

    #[test]
    fn collapse_renormalises() {
        let h = C64::new(0.5f64.sqrt(), 0.0);
        let mut s = StateVector::product(&[(h, h)]);
        assert!((s.probability_one(1) - 0.5).abs() < 1e-15);
        s.collapse(1, true).unwrap();
        assert!((s.amplitudes()[1] - ONE).norm() < 1e-15);
    }
}
