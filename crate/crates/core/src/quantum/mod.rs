//! Quantum subspace builders. Every builder returns a [`SubspaceProblem`]
//! evaluated with exact expectation values; methods with a measurement
//! recipe can be re-evaluated under shot noise with [`crate::shots`].
//!
//! [`SubspaceProblem`]: crate::geev::SubspaceProblem

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::vec::Vec;

use crate::engine::Statevector;
use crate::error::{Error, Result};
use crate::fock::{self, Configuration, FockVector, Sector, SectorBasis};
use crate::linalg::{self, C64, ZERO};
use crate::qubits::{annihilation, creation, PauliSum};

pub mod krylov;
pub mod qeom;
pub mod qfd;
pub mod qlanczos;
pub mod qse;
pub mod response;

pub use krylov::{chebyshev_krylov_build, gaussian_power_build, gershgorin_bounds, ChebyshevOutput, GaussianPowerOutput};
pub use qeom::{qeom_build, qeom_build_with_pool, EomBlocks, EomResult};
pub use qfd::{epperly_bound, epperly_bound_for_step, epperly_time_step, qfd_build, qfd_recipe, Backend, QfdGrid, QfdOutput};
pub use qlanczos::{qite_step, qlanczos_build, QiteOutcome, QitePool, QlanczosMode, QlanczosOutput, QlanczosRecords};
pub use qse::{qse_build, qse_recipe, QseOutput, DEFAULT_TERM_BUDGET};
pub use response::{fast_forward, response_function, FastForward, ResponsePeak, ResponseSpectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn mode(self, orbital: usize, num_orbitals: usize) -> usize {
        match self {
            Spin::Up => orbital,
            Spin::Down => orbital + num_orbitals,
        }
    }
}

/// Number-conserving excitation `Ô` acting on spin orbitals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExcitationOperator {
    Identity,
    /// `a†_{aσ} a_{iσ}`
    Single { a: usize, i: usize, spin: Spin },
    /// `a†_{aσ} a†_{bτ} a_{jτ} a_{iσ}`
    Double {
        a: usize,
        b: usize,
        i: usize,
        j: usize,
        sigma: Spin,
        tau: Spin,
    },
}

impl ExcitationOperator {
    /// Ladder operators left to right as `(is_creation, mode)`.
    fn ladder(&self, m: usize) -> Vec<(bool, usize)> {
        match *self {
            ExcitationOperator::Identity => Vec::new(),
            ExcitationOperator::Single { a, i, spin } => alloc::vec![(true, spin.mode(a, m)), (false, spin.mode(i, m))],
            ExcitationOperator::Double { a, b, i, j, sigma, tau } => alloc::vec![
                (true, sigma.mode(a, m)),
                (true, tau.mode(b, m)),
                (false, tau.mode(j, m)),
                (false, sigma.mode(i, m)),
            ],
        }
    }

    pub fn adjoint(&self) -> Self {
        match *self {
            ExcitationOperator::Identity => ExcitationOperator::Identity,
            ExcitationOperator::Single { a, i, spin } => ExcitationOperator::Single { a: i, i: a, spin },
            ExcitationOperator::Double { a, b, i, j, sigma, tau } => ExcitationOperator::Double {
                a: i,
                b: j,
                i: a,
                j: b,
                sigma,
                tau,
            },
        }
    }

    /// Action on a mode word.
    pub fn apply_word(&self, word: u64, m: usize) -> Option<(f64, u64)> {
        let mut w = word;
        let mut sign = 1.0;
        for (dagger, mode) in self.ladder(m).into_iter().rev() {
            let (s, next) = if dagger { fock::create(w, mode)? } else { fock::annihilate(w, mode)? };
            sign *= s;
            w = next;
        }
        Some((sign, w))
    }

    /// `Ô v` within the sector of `v`.
    pub fn apply(&self, v: &FockVector, basis: &SectorBasis) -> FockVector {
        let m = v.sector.num_orbitals;
        let mut out = FockVector::zeros(v.sector);
        for (c, amp) in basis.configurations().iter().zip(&v.amplitudes) {
            if *amp == ZERO {
                continue;
            }
            if let Some((s, w)) = self.apply_word(c.key(m), m) {
                if let Some(k) = basis.index_of_key(w) {
                    out.amplitudes[k] += *amp * s;
                }
            }
        }
        out
    }

    /// Jordan–Wigner image on `2M` qubits.
    pub fn to_pauli(&self, m: usize) -> Result<PauliSum> {
        let nq = 2 * m;
        let mut acc = PauliSum::identity(nq, C64::new(1.0, 0.0));
        for (dagger, mode) in self.ladder(m) {
            let op = if dagger { creation(mode, nq) } else { annihilation(mode, nq) };
            acc = acc.mul(&op)?;
        }
        Ok(acc)
    }

    pub fn label(&self) -> alloc::string::String {
        let s = |x: Spin| if x == Spin::Up { "a" } else { "b" };
        match *self {
            ExcitationOperator::Identity => "1".into(),
            ExcitationOperator::Single { a, i, spin } => format!("{a}{0}<-{i}{0}", s(spin)),
            ExcitationOperator::Double { a, b, i, j, sigma, tau } => {
                format!("{a}{}{b}{}<-{i}{}{j}{}", s(sigma), s(tau), s(sigma), s(tau))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExcitationLevel {
    Singles,
    SinglesDoubles,
}

fn occupied(mask: u32, m: usize) -> (Vec<usize>, Vec<usize>) {
    (0..m).partition(|&p| mask >> p & 1 == 1)
}

/// Spin-conserving singles (and doubles) from the occupied to the virtual
/// orbitals of the sector's aufbau determinant, canonically ordered
/// (`a < b`, `i < j` within one spin; mixed-spin pairs listed once with the
/// up electron first).
pub fn excitation_pool(sector: Sector, level: ExcitationLevel) -> Vec<ExcitationOperator> {
    let m = sector.num_orbitals;
    let hf = Configuration::aufbau(sector.num_up, sector.num_down);
    let (occ_up, vir_up) = occupied(hf.occ_up, m);
    let (occ_dn, vir_dn) = occupied(hf.occ_down, m);
    let spaces = [(Spin::Up, &occ_up, &vir_up), (Spin::Down, &occ_dn, &vir_dn)];
    let mut pool = Vec::new();
    for (spin, occ, vir) in spaces {
        for &i in occ.iter() {
            for &a in vir.iter() {
                pool.push(ExcitationOperator::Single { a, i, spin });
            }
        }
    }
    if level == ExcitationLevel::SinglesDoubles {
        for (spin, occ, vir) in spaces {
            for (x, &i) in occ.iter().enumerate() {
                for &j in &occ[x + 1..] {
                    for (y, &a) in vir.iter().enumerate() {
                        for &b in &vir[y + 1..] {
                            pool.push(ExcitationOperator::Double {
                                a,
                                b,
                                i,
                                j,
                                sigma: spin,
                                tau: spin,
                            });
                        }
                    }
                }
            }
        }
        for &i in &occ_up {
            for &j in &occ_dn {
                for &a in &vir_up {
                    for &b in &vir_dn {
                        pool.push(ExcitationOperator::Double {
                            a,
                            b,
                            i,
                            j,
                            sigma: Spin::Up,
                            tau: Spin::Down,
                        });
                    }
                }
            }
        }
    }
    pool
}

/// Restricts a register state to `sector`, rejecting leakage above `1e-10`.
pub fn sector_state(state: &Statevector, sector: Sector) -> Result<FockVector> {
    let v = state.to_fock(&SectorBasis::new(sector))?;
    let inside = linalg::norm_sqr(&v.amplitudes);
    let total = state.norm().powi(2);
    if (total - inside).abs() > 1e-10 * total.max(1.0) {
        return Err(Error::Domain(format!(
            "state has weight {:.3e} outside the ({}, {}) sector",
            total - inside,
            sector.num_up,
            sector.num_down
        )));
    }
    Ok(v)
}

pub fn to_statevectors(basis: &[FockVector]) -> Result<Vec<Statevector>> {
    basis.iter().map(Statevector::from_fock).collect()
}
