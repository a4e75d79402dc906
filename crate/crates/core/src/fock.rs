//! Exact many-electron engine in a fixed `(M, N_up, N_down)` sector.
//!
//! Spin-orbital (mode) `p` with spin up is mode `p`, spin down is mode `p + M`.
//! A configuration is the bit word with bit `mode` set when occupied, which is
//! also its Jordan–Wigner basis index. Creation and annihilation operators pick
//! up the sign `(-1)^(number of occupied modes below the target)`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::integrals::MolecularIntegrals;
use crate::linalg::{self, C64};

pub const MAX_ORBITALS: usize = 16;
/// Largest sector dimension handled by dense diagonalization.
pub const DENSE_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Sector {
    pub num_orbitals: usize,
    pub num_up: usize,
    pub num_down: usize,
}

impl Sector {
    pub fn new(num_orbitals: usize, num_up: usize, num_down: usize) -> Result<Self> {
        if num_orbitals > MAX_ORBITALS {
            return Err(Error::Domain(format!(
                "{num_orbitals} orbitals exceeds the limit of {MAX_ORBITALS}"
            )));
        }
        if num_up > num_orbitals || num_down > num_orbitals {
            return Err(Error::Domain(format!(
                "electron counts ({num_up}, {num_down}) do not fit in {num_orbitals} orbitals"
            )));
        }
        Ok(Self {
            num_orbitals,
            num_up,
            num_down,
        })
    }

    pub fn of(ints: &MolecularIntegrals) -> Result<Self> {
        Self::new(ints.num_orbitals(), ints.num_up(), ints.num_down())
    }

    /// `C(M, N_up)·C(M, N_down)`
    pub fn dim(&self) -> usize {
        linalg::binomial(self.num_orbitals, self.num_up)
            * linalg::binomial(self.num_orbitals, self.num_down)
    }

    pub fn num_modes(&self) -> usize {
        2 * self.num_orbitals
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    pub occ_up: u32,
    pub occ_down: u32,
}

impl Configuration {
    /// Mode word `occ_down << M | occ_up`; this is the qubit basis index.
    pub fn key(&self, m: usize) -> u64 {
        ((self.occ_down as u64) << m) | self.occ_up as u64
    }

    pub fn from_key(key: u64, m: usize) -> Self {
        let mask = (1u64 << m) - 1;
        Self {
            occ_up: (key & mask) as u32,
            occ_down: (key >> m) as u32,
        }
    }

    /// Lowest `N_up`/`N_down` orbitals occupied.
    pub fn aufbau(num_up: usize, num_down: usize) -> Self {
        Self {
            occ_up: ((1u64 << num_up) - 1) as u32,
            occ_down: ((1u64 << num_down) - 1) as u32,
        }
    }
}

/// All `M`-bit words with `k` bits set, ascending.
fn combinations(m: usize, k: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(linalg::binomial(m, k));
    if k == 0 {
        out.push(0);
        return out;
    }
    let limit = 1u64 << m;
    let mut w: u64 = (1u64 << k) - 1;
    while w < limit {
        out.push(w as u32);
        // next word with the same popcount
        let c = w & w.wrapping_neg();
        let r = w + c;
        w = (((r ^ w) >> 2) / c) | r;
    }
    out
}

pub fn enumerate_configurations(m: usize, num_up: usize, num_down: usize) -> Result<Vec<Configuration>> {
    Sector::new(m, num_up, num_down)?;
    let ups = combinations(m, num_up);
    let downs = combinations(m, num_down);
    let mut out = Vec::with_capacity(ups.len() * downs.len());
    for &d in &downs {
        for &u in &ups {
            out.push(Configuration {
                occ_up: u,
                occ_down: d,
            });
        }
    }
    Ok(out)
}

/// Ordered sector basis with constant-time ranking.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    sector: Sector,
    configs: Vec<Configuration>,
    n_up_words: usize,
    /// `binom[n][k]`
    binom: Vec<Vec<usize>>,
}

impl SectorBasis {
    pub fn new(sector: Sector) -> Self {
        let m = sector.num_orbitals;
        let configs = enumerate_configurations(m, sector.num_up, sector.num_down)
            .expect("sector validated on construction");
        let binom = (0..=m)
            .map(|n| (0..=m).map(|k| linalg::binomial(n, k)).collect())
            .collect();
        Self {
            sector,
            configs,
            n_up_words: linalg::binomial(m, sector.num_up),
            binom,
        }
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn configurations(&self) -> &[Configuration] {
        &self.configs
    }

    fn rank(&self, word: u32) -> usize {
        let mut rank = 0;
        let mut t = 0;
        let mut w = word;
        while w != 0 {
            let pos = w.trailing_zeros() as usize;
            t += 1;
            rank += self.binom[pos][t];
            w &= w - 1;
        }
        rank
    }

    /// Position of `c` in the basis, if it belongs to the sector.
    pub fn index_of(&self, c: Configuration) -> Option<usize> {
        let m = self.sector.num_orbitals;
        let mask = ((1u64 << m) - 1) as u32;
        if c.occ_up & !mask != 0
            || c.occ_down & !mask != 0
            || c.occ_up.count_ones() as usize != self.sector.num_up
            || c.occ_down.count_ones() as usize != self.sector.num_down
        {
            return None;
        }
        Some(self.rank(c.occ_down) * self.n_up_words + self.rank(c.occ_up))
    }

    pub fn index_of_key(&self, key: u64) -> Option<usize> {
        let m = self.sector.num_orbitals;
        if key >> (2 * m) != 0 {
            return None;
        }
        self.index_of(Configuration::from_key(key, m))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    pub sector: Sector,
    pub amplitudes: Vec<C64>,
}

impl FockVector {
    pub fn zeros(sector: Sector) -> Self {
        Self {
            sector,
            amplitudes: vec![linalg::ZERO; sector.dim()],
        }
    }

    pub fn from_amplitudes(sector: Sector, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != sector.dim() {
            return Err(Error::Mismatch(format!(
                "{} amplitudes for a sector of dimension {}",
                amplitudes.len(),
                sector.dim()
            )));
        }
        Ok(Self { sector, amplitudes })
    }

    pub fn basis_state(sector: Sector, index: usize) -> Self {
        let mut v = Self::zeros(sector);
        v.amplitudes[index] = linalg::ONE;
        v
    }

    pub fn from_configuration(basis: &SectorBasis, c: Configuration) -> Result<Self> {
        let idx = basis
            .index_of(c)
            .ok_or_else(|| Error::Mismatch("configuration outside the sector".into()))?;
        Ok(Self::basis_state(basis.sector(), idx))
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amplitudes)
    }

    /// `⟨self|other⟩`
    pub fn dot(&self, other: &FockVector) -> C64 {
        linalg::dot(&self.amplitudes, &other.amplitudes)
    }

    pub fn normalized(mut self) -> Self {
        linalg::normalize(&mut self.amplitudes);
        self
    }
}

fn sign_below(word: u64, mode: usize) -> f64 {
    if (word & ((1u64 << mode) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Applies `a_mode` to a mode word, returning the sign and new word.
pub fn annihilate(word: u64, mode: usize) -> Option<(f64, u64)> {
    if word >> mode & 1 == 0 {
        return None;
    }
    Some((sign_below(word, mode), word ^ (1u64 << mode)))
}

/// Applies `a†_mode` to a mode word, returning the sign and new word.
pub fn create(word: u64, mode: usize) -> Option<(f64, u64)> {
    if word >> mode & 1 == 1 {
        return None;
    }
    Some((sign_below(word, mode), word | (1u64 << mode)))
}

/// Sector Hamiltonian assembled once from Slater–Condon rules and stored
/// sparsely (it is real symmetric for real integrals).
#[derive(Debug, Clone)]
pub struct SectorHamiltonian {
    ints: MolecularIntegrals,
    basis: SectorBasis,
    diag: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SectorHamiltonian {
    pub fn new(ints: &MolecularIntegrals) -> Result<Self> {
        let sector = Sector::of(ints)?;
        let basis = SectorBasis::new(sector);
        let m = sector.num_orbitals;
        let nmodes = 2 * m;
        let spin = |mode: usize| mode / m.max(1);
        let orb = |mode: usize| mode % m.max(1);
        // ⟨pq|rs⟩ in spin orbitals
        let g = |p: usize, q: usize, r: usize, s: usize| {
            if spin(p) == spin(r) && spin(q) == spin(s) {
                ints.eri(orb(p), orb(r), orb(q), orb(s))
            } else {
                0.0
            }
        };
        let h = |p: usize, r: usize| {
            if spin(p) == spin(r) {
                ints.h(orb(p), orb(r))
            } else {
                0.0
            }
        };

        let dim = basis.len();
        let mut diag = Vec::with_capacity(dim);
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        let mut occ = Vec::with_capacity(nmodes);
        let mut virt = Vec::with_capacity(nmodes);
        for c in basis.configurations() {
            let x = c.key(m);
            occ.clear();
            virt.clear();
            for mode in 0..nmodes {
                if x >> mode & 1 == 1 {
                    occ.push(mode);
                } else {
                    virt.push(mode);
                }
            }
            let mut d = ints.e_nuc();
            for (ii, &i) in occ.iter().enumerate() {
                d += h(i, i);
                for &j in &occ[..ii] {
                    d += g(i, j, i, j) - g(i, j, j, i);
                }
            }
            diag.push(d);

            for &i in &occ {
                for &a in &virt {
                    if spin(a) != spin(i) {
                        continue;
                    }
                    let mut v = h(a, i);
                    for &k in &occ {
                        if k != i {
                            v += g(a, k, i, k) - g(a, k, k, i);
                        }
                    }
                    if v == 0.0 {
                        continue;
                    }
                    let (s1, x1) = annihilate(x, i).expect("occupied");
                    let (s2, y) = create(x1, a).expect("empty");
                    let idx = basis.index_of_key(y).expect("single stays in sector");
                    cols.push(idx);
                    vals.push(s1 * s2 * v);
                }
            }
            for (jj, &j) in occ.iter().enumerate() {
                for &i in &occ[..jj] {
                    for (bb, &b) in virt.iter().enumerate() {
                        for &a in &virt[..bb] {
                            let v = g(a, b, i, j) - g(a, b, j, i);
                            if v == 0.0 {
                                continue;
                            }
                            let (s1, x1) = annihilate(x, i).expect("occupied");
                            let (s2, x2) = annihilate(x1, j).expect("occupied");
                            let (s3, x3) = create(x2, b).expect("empty");
                            let (s4, y) = create(x3, a).expect("empty");
                            let Some(idx) = basis.index_of_key(y) else {
                                continue;
                            };
                            cols.push(idx);
                            vals.push(s1 * s2 * s3 * s4 * v);
                        }
                    }
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(Self {
            ints: ints.clone(),
            basis,
            diag,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn integrals(&self) -> &MolecularIntegrals {
        &self.ints
    }

    pub fn basis(&self) -> &SectorBasis {
        &self.basis
    }

    pub fn sector(&self) -> Sector {
        self.basis.sector()
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Slater–Condon diagonal `⟨x|H|x⟩`.
    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn apply_slice(&self, v: &[C64]) -> Vec<C64> {
        let mut out: Vec<C64> = self.diag.iter().zip(v).map(|(d, x)| x * *d).collect();
        for (row, o) in out.iter_mut().enumerate() {
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                *o += v[self.cols[k]] * self.vals[k];
            }
        }
        out
    }

    pub fn apply(&self, v: &FockVector) -> Result<FockVector> {
        if v.sector != self.sector() {
            return Err(Error::Mismatch(format!(
                "vector sector {:?} does not match Hamiltonian sector {:?}",
                v.sector,
                self.sector()
            )));
        }
        Ok(FockVector {
            sector: v.sector,
            amplitudes: self.apply_slice(&v.amplitudes),
        })
    }

    /// `⟨v|H|v⟩ / ⟨v|v⟩`
    pub fn rayleigh_quotient(&self, v: &FockVector) -> Result<f64> {
        let hv = self.apply(v)?;
        Ok(v.dot(&hv).re / v.dot(v).re)
    }

    pub fn dense_matrix(&self) -> Result<DMatrix<f64>> {
        let d = self.dim();
        if d > DENSE_CAP {
            return Err(Error::Capacity(format!(
                "sector dimension {d} exceeds the dense limit {DENSE_CAP}; use lanczos or davidson"
            )));
        }
        let mut h = DMatrix::zeros(d, d);
        for row in 0..d {
            h[(row, row)] = self.diag[row];
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                h[(row, self.cols[k])] += self.vals[k];
            }
        }
        Ok(h)
    }

    /// Lowest `k` eigenpairs from dense diagonalization.
    pub fn eigenpairs(&self, k: usize) -> Result<SpectrumSlice> {
        let d = self.dim();
        if k == 0 || k > d {
            return Err(Error::Domain(format!("requested {k} roots of a {d}-dimensional sector")));
        }
        let (vals, vecs) = linalg::symmetric_eigen(&self.dense_matrix()?);
        let sector = self.sector();
        Ok(SpectrumSlice {
            eigenvalues: vals[..k].to_vec(),
            eigenvectors: (0..k)
                .map(|j| FockVector {
                    sector,
                    amplitudes: vecs.column(j).iter().map(|&x| C64::new(x, 0.0)).collect(),
                })
                .collect(),
        })
    }
}

pub fn apply_hamiltonian(ints: &MolecularIntegrals, v: &FockVector) -> Result<FockVector> {
    SectorHamiltonian::new(ints)?.apply(v)
}

#[derive(Debug, Clone)]
pub struct SpectrumSlice {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<FockVector>,
}

/// Full-CI eigenpairs: the `k` lowest states of the sector Hamiltonian.
pub fn exact_eigenpairs(ints: &MolecularIntegrals, k: usize) -> Result<SpectrumSlice> {
    SectorHamiltonian::new(ints)?.eigenpairs(k)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Time {
    /// `e^{-itH}`
    Real(f64),
    /// `e^{-τH}` followed by normalization.
    Imaginary(f64),
}

/// Propagator built from the full sector spectrum.
#[derive(Debug, Clone)]
pub struct ExactPropagator {
    sector: Sector,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl ExactPropagator {
    pub fn new(ham: &SectorHamiltonian) -> Result<Self> {
        let (eigenvalues, eigenvectors) = linalg::symmetric_eigen(&ham.dense_matrix()?);
        Ok(Self {
            sector: ham.sector(),
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn from_integrals(ints: &MolecularIntegrals) -> Result<Self> {
        Self::new(&SectorHamiltonian::new(ints)?)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvector(&self, k: usize) -> FockVector {
        FockVector {
            sector: self.sector,
            amplitudes: self.eigenvectors.column(k).iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }

    /// Components `⟨Ψ_k|v⟩` in the eigenbasis.
    pub fn to_eigenbasis(&self, v: &[C64]) -> Vec<C64> {
        let d = self.eigenvalues.len();
        (0..d)
            .map(|k| {
                let col = self.eigenvectors.column(k);
                col.iter().zip(v).fold(linalg::ZERO, |acc, (&c, &x)| acc + x * c)
            })
            .collect()
    }

    pub fn from_eigenbasis(&self, c: &[C64]) -> Vec<C64> {
        let d = self.eigenvalues.len();
        let mut out = vec![linalg::ZERO; d];
        for (k, &ck) in c.iter().enumerate() {
            let col = self.eigenvectors.column(k);
            for (o, &u) in out.iter_mut().zip(col.iter()) {
                *o += ck * u;
            }
        }
        out
    }

    /// Evolves `v`; returns the (normalized, for imaginary time) state and the
    /// raw norm `‖e^{-τH}v‖` (equal to `‖v‖` for real time).
    pub fn evolve(&self, v: &FockVector, time: Time) -> Result<(FockVector, f64)> {
        if v.sector != self.sector {
            return Err(Error::Mismatch("vector sector does not match propagator".into()));
        }
        let mut c = self.to_eigenbasis(&v.amplitudes);
        match time {
            Time::Real(t) => {
                for (ck, &e) in c.iter_mut().zip(&self.eigenvalues) {
                    *ck *= linalg::cis(-e * t);
                }
                let out = self.from_eigenbasis(&c);
                let n = linalg::norm(&out);
                Ok((FockVector { sector: self.sector, amplitudes: out }, n))
            }
            Time::Imaginary(tau) => {
                // shift by E₀ to avoid overflow, then restore the raw norm
                let e0 = self.eigenvalues.first().copied().unwrap_or(0.0);
                for (ck, &e) in c.iter_mut().zip(&self.eigenvalues) {
                    *ck *= C64::new((-(e - e0) * tau).exp(), 0.0);
                }
                let mut out = self.from_eigenbasis(&c);
                let shifted = linalg::normalize(&mut out);
                let raw = shifted * (-e0 * tau).exp();
                Ok((FockVector { sector: self.sector, amplitudes: out }, raw))
            }
        }
    }

    /// `log ‖e^{-τH}v‖`, safe against overflow for large `τ`.
    pub fn log_norm_imaginary(&self, v: &FockVector, tau: f64) -> f64 {
        let c = self.to_eigenbasis(&v.amplitudes);
        let e0 = self.eigenvalues.first().copied().unwrap_or(0.0);
        let s: f64 = c
            .iter()
            .zip(&self.eigenvalues)
            .map(|(ck, &e)| ck.norm_sqr() * (-2.0 * (e - e0) * tau).exp())
            .sum();
        0.5 * s.ln() - e0 * tau
    }
}

pub fn evolve_exact(ints: &MolecularIntegrals, v: &FockVector, time: Time) -> Result<(FockVector, f64)> {
    ExactPropagator::from_integrals(ints)?.evolve(v, time)
}
