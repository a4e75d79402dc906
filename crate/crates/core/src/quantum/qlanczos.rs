//! Quantum imaginary-time evolution and QLanczos.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::engine::{pauli_rotation_in_place, Statevector};
use crate::error::{Error, Result};
use crate::fock::{ExactPropagator, FockVector, SectorHamiltonian, Time};
use crate::geev::{Provenance, SubspaceProblem};
use crate::integrals::MolecularIntegrals;
use crate::linalg::{self, C64, I, ONE};
use crate::qubits::{annihilation, creation, jordan_wigner, PauliString, PauliSum};

pub const TIKHONOV: f64 = 1e-8;
pub const ENERGY_RISE_TOL: f64 = 1e-8;
/// Largest register for [`QitePool::complete`].
pub const MAX_COMPLETE_POOL_QUBITS: usize = 6;

/// Hermitian generators `G_m`, each a real combination of mutually
/// commuting Pauli strings so that `e^{iθG}` factorizes exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct QitePool {
    generators: Vec<PauliSum>,
}

fn commuting(g: &PauliSum) -> bool {
    let t = g.terms();
    t.iter()
        .enumerate()
        .all(|(k, (_, p))| t[k + 1..].iter().all(|(_, q)| p.commutes_with(q)))
}

impl QitePool {
    pub fn new(generators: Vec<PauliSum>) -> Result<Self> {
        let nq = generators.first().map(|g| g.num_qubits());
        for g in &generators {
            if Some(g.num_qubits()) != nq {
                return Err(Error::Mismatch("pool generators act on different registers".into()));
            }
            if !g.is_hermitian(1e-12) || g.terms().iter().any(|(c, _)| c.im.abs() > 1e-12) {
                return Err(Error::Data("pool generator must be Hermitian with real coefficients".into()));
            }
            if !commuting(g) {
                return Err(Error::Data("pool generator terms must commute".into()));
            }
        }
        Ok(Self { generators })
    }

    /// `i(E − E†)` for every spin-conserving one-body `E = a†_p a_q` and
    /// two-body `E = a†_p a†_q a_r a_s` on `num_orbitals` spatial orbitals.
    pub fn fermionic(num_orbitals: usize) -> Result<Self> {
        let nq = 2 * num_orbitals;
        let spin = |p: usize| p / num_orbitals;
        let mut gens = Vec::new();
        let mut push = |e: PauliSum| -> Result<()> {
            let g = e.sub(&e.adjoint())?.scale(I);
            if !g.is_empty() {
                gens.push(g);
            }
            Ok(())
        };
        for p in 0..nq {
            for q in 0..p {
                if spin(p) == spin(q) {
                    push(creation(p, nq).mul(&annihilation(q, nq))?)?;
                }
            }
        }
        let pairs: Vec<(usize, usize)> = (0..nq).flat_map(|p| (0..p).map(move |q| (p, q))).collect();
        for (x, &(p, q)) in pairs.iter().enumerate() {
            for &(r, s) in &pairs[..x] {
                if spin(p) + spin(q) != spin(r) + spin(s) {
                    continue;
                }
                let e = creation(p, nq)
                    .mul(&creation(q, nq))?
                    .mul(&annihilation(r, nq))?
                    .mul(&annihilation(s, nq))?;
                push(e)?;
            }
        }
        Self::new(gens)
    }

    /// One generator per Pauli string.
    pub fn pauli(strings: &[PauliString]) -> Result<Self> {
        Self::new(strings.iter().map(|&p| PauliSum::from_string(ONE, p)).collect())
    }

    /// Every non-identity Pauli string on `num_qubits` qubits.
    pub fn complete(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_COMPLETE_POOL_QUBITS {
            return Err(Error::Capacity(format!(
                "complete pool supports 1..={MAX_COMPLETE_POOL_QUBITS} qubits, got {num_qubits}"
            )));
        }
        let full = 1u64 << num_qubits;
        let mut strings = Vec::new();
        for x in 0..full {
            for z in 0..full {
                if x | z != 0 {
                    strings.push(PauliString::from_masks(num_qubits, x, z)?);
                }
            }
        }
        Self::pauli(&strings)
    }

    pub fn generators(&self) -> &[PauliSum] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct QiteOutcome {
    /// `U(θ)|Φ⟩`, normalized.
    pub state: Statevector,
    pub energy_before: f64,
    pub energy: f64,
    /// Step actually taken (halved once after a rejected step).
    pub dtau: f64,
    /// Estimate of `ln ‖e^{−ΔτH}Φ‖` from the first two cumulants, `−ΔτE + Δτ²σ²`.
    pub log_norm: f64,
    pub theta: Vec<f64>,
}

fn energy(state: &Statevector, h: &PauliSum) -> Result<(f64, Statevector)> {
    let hphi = state.apply_pauli_sum(h)?;
    Ok((state.dot(&hphi).re, hphi))
}

fn attempt(phi: &Statevector, hphi: &Statevector, dtau: f64, images: &[Statevector], pool: &QitePool) -> Result<(Vec<f64>, Statevector)> {
    let p = images.len();
    let a = DMatrix::from_fn(p, p, |m, n| 2.0 * images[m].dot(&images[n]).re);
    let b: Vec<f64> = images.iter().map(|g| -2.0 * dtau * g.dot(hphi).im).collect();
    let (vals, vecs) = linalg::symmetric_eigen(&a);
    let mut theta = alloc::vec![0.0; p];
    for (k, &lam) in vals.iter().enumerate() {
        let u = vecs.column(k);
        let proj: f64 = u.iter().zip(&b).map(|(x, y)| x * y).sum();
        let w = lam / (lam * lam + TIKHONOV * TIKHONOV) * proj;
        for (t, x) in theta.iter_mut().zip(u.iter()) {
            *t += w * x;
        }
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::Step("QITE linear system could not be solved".into()));
    }
    let mut out = phi.clone();
    for (g, &t) in pool.generators.iter().zip(&theta) {
        if t == 0.0 {
            continue;
        }
        for (c, s) in g.terms() {
            pauli_rotation_in_place(s, -2.0 * t * c.re, &mut out);
        }
    }
    Ok((theta, out))
}

/// One first-order QITE step `|Φ⟩ → U(θ)|Φ⟩ ≈ e^{−ΔτH}|Φ⟩/‖·‖` with
/// `A_mn = ⟨Φ|{G_m,G_n}|Φ⟩`, `b_m = −iΔτ⟨Φ|[H,G_m]|Φ⟩`.
pub fn qite_step(state: &Statevector, h: &PauliSum, dtau: f64, pool: &QitePool) -> Result<QiteOutcome> {
    if !(dtau > 0.0) || !dtau.is_finite() {
        return Err(Error::Domain(format!("imaginary time step {dtau} must be positive")));
    }
    if h.num_qubits() != state.num_qubits() || pool.generators.iter().any(|g| g.num_qubits() != state.num_qubits()) {
        return Err(Error::Mismatch("Hamiltonian, pool and state registers differ".into()));
    }
    let mut phi = state.clone();
    if linalg::normalize(phi.amplitudes_mut()) == 0.0 {
        return Err(Error::Domain("zero state".into()));
    }
    let (e0, hphi) = energy(&phi, h)?;
    let var = (hphi.norm().powi(2) - e0 * e0).max(0.0);
    let images: Vec<Statevector> = pool.generators.iter().map(|g| phi.apply_pauli_sum(g)).collect::<Result<_>>()?;
    let mut dt = dtau;
    for _ in 0..2 {
        let (theta, mut next) = attempt(&phi, &hphi, dt, &images, pool)?;
        linalg::normalize(next.amplitudes_mut());
        let (e1, _) = energy(&next, h)?;
        if e1 <= e0 + ENERGY_RISE_TOL {
            return Ok(QiteOutcome {
                state: next,
                energy_before: e0,
                energy: e1,
                dtau: dt,
                log_norm: -dt * e0 + dt * dt * var,
                theta,
            });
        }
        dt *= 0.5;
    }
    Err(Error::Step(format!("QITE energy rose above {e0} even after halving the step to {dt}")))
}

#[derive(Debug, Clone)]
pub enum QlanczosMode {
    Exact,
    /// `substeps` QITE steps per half record interval `Δτ/2`.
    Qite { pool: QitePool, substeps: usize },
}

/// Norms and energies at `τ_k = kΔτ/2`, `k = 0..=2(n−1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QlanczosRecords {
    pub taus: Vec<f64>,
    /// `ln ‖e^{−τ_k H} v₀‖` for normalized `v₀`.
    pub log_norms: Vec<f64>,
    /// `⟨H⟩` in the normalized snapshot at `τ_k`.
    pub energies: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct QlanczosOutput {
    pub problem: SubspaceProblem,
    pub records: QlanczosRecords,
}

fn exact_records(v0: &FockVector, ham: &SectorHamiltonian, taus: &[f64]) -> Result<QlanczosRecords> {
    let prop = ExactPropagator::new(ham)?;
    let mut log_norms = Vec::with_capacity(taus.len());
    let mut energies = Vec::with_capacity(taus.len());
    for &t in taus {
        let (v, _) = prop.evolve(v0, Time::Imaginary(t))?;
        log_norms.push(prop.log_norm_imaginary(v0, t));
        energies.push(ham.rayleigh_quotient(&v)?);
    }
    Ok(QlanczosRecords {
        taus: taus.to_vec(),
        log_norms,
        energies,
    })
}

fn qite_records(v0: &FockVector, ints: &MolecularIntegrals, taus: &[f64], pool: &QitePool, substeps: usize) -> Result<QlanczosRecords> {
    if substeps == 0 {
        return Err(Error::Domain("QITE needs at least one substep".into()));
    }
    let h = jordan_wigner(ints)?;
    let mut state = Statevector::from_fock(v0)?;
    let mut ln = 0.0;
    let mut log_norms = alloc::vec![0.0];
    let mut energies = alloc::vec![energy(&state, &h)?.0];
    for w in taus.windows(2) {
        let mut remaining = w[1] - w[0];
        let sub = remaining / substeps as f64;
        while remaining > 1e-15 {
            let out = qite_step(&state, &h, sub.min(remaining), pool)?;
            ln += out.log_norm;
            remaining -= out.dtau;
            state = out.state;
        }
        log_norms.push(ln);
        energies.push(energy(&state, &h)?.0);
    }
    Ok(QlanczosRecords {
        taus: taus.to_vec(),
        log_norms,
        energies,
    })
}

/// Subspace over `v_α ∝ e^{−αΔτH} v₀`, `α = 0..n`, assembled from norms and
/// energies only: `S_αβ = n²_{α+β}/(n_{2α} n_{2β})`, `H_αβ = S_αβ h_{α+β}`
/// with `n_k`, `h_k` the half-step records.
pub fn qlanczos_build(v0: &FockVector, ints: &MolecularIntegrals, dtau: f64, n: usize, mode: &QlanczosMode) -> Result<QlanczosOutput> {
    if !(dtau > 0.0) || !dtau.is_finite() || n == 0 {
        return Err(Error::Domain(format!("QLanczos needs Δτ > 0 and n ≥ 1 (got {dtau}, {n})")));
    }
    let ham = SectorHamiltonian::new(ints)?;
    if v0.sector != ham.sector() {
        return Err(Error::Mismatch("start vector sector differs from the integrals".into()));
    }
    if v0.norm() == 0.0 {
        return Err(Error::Domain("zero start vector".into()));
    }
    let v0 = v0.clone().normalized();
    let taus: Vec<f64> = (0..=2 * (n - 1)).map(|k| k as f64 * 0.5 * dtau).collect();
    let records = match mode {
        QlanczosMode::Exact => exact_records(&v0, &ham, &taus)?,
        QlanczosMode::Qite { pool, substeps } => qite_records(&v0, ints, &taus, pool, *substeps)?,
    };
    let ln = &records.log_norms;
    let s = DMatrix::from_fn(n, n, |a, b| C64::new((2.0 * ln[a + b] - ln[2 * a] - ln[2 * b]).exp(), 0.0));
    let h = DMatrix::from_fn(n, n, |a, b| s[(a, b)] * records.energies[a + b]);
    let tag = match mode {
        QlanczosMode::Exact => 0.0,
        QlanczosMode::Qite { .. } => 1.0,
    };
    let prov = Provenance::new("qlanczos").with("dtau", dtau).with("n", n as f64).with("qite", tag);
    Ok(QlanczosOutput {
        problem: SubspaceProblem::new(h, s, prov)?,
        records,
    })
}
