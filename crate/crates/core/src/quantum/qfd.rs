//! Quantum filter diagonalization over real-time-evolved states.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::engine::{LowRankTrotter, Statevector};
use crate::error::{Error, Result};
use crate::fock::{ExactPropagator, FockVector, SectorHamiltonian, Time};
use crate::geev::{Provenance, SubspaceProblem};
use crate::integrals::MolecularIntegrals;
use crate::qubits::jordan_wigner;
use crate::shots::{MeasurementRecipe, RecipeBuilder};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend {
    Exact,
    /// Low-rank first-order Trotter with `substeps` steps per `Δt` and
    /// Cholesky tolerance `tol`.
    Trotter { substeps: usize, tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfdGrid {
    pub dt: f64,
    pub n: usize,
    /// Centre the grid on `t = 0` instead of starting there.
    pub symmetric: bool,
    pub backend: Backend,
}

impl QfdGrid {
    pub fn new(dt: f64, n: usize) -> Result<Self> {
        let g = Self {
            dt,
            n,
            symmetric: false,
            backend: Backend::Exact,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Domain(alloc::format!("time step {} must be positive", self.dt)));
        }
        if self.n == 0 {
            return Err(Error::Domain("QFD needs at least one time".into()));
        }
        if let Backend::Trotter { substeps: 0, .. } = self.backend {
            return Err(Error::Domain("Trotter backend needs at least one substep".into()));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        let offset = if self.symmetric { (self.n - 1) as f64 / 2.0 } else { 0.0 };
        (0..self.n).map(|a| (a as f64 - offset) * self.dt).collect()
    }
}

#[derive(Debug, Clone)]
pub struct QfdOutput {
    pub problem: SubspaceProblem,
    pub basis: Vec<FockVector>,
    pub times: Vec<f64>,
}

/// `Δt = π/ΔE_L` with `ΔE_L = E_L − E₀` from an ascending spectrum.
pub fn epperly_time_step(eigenvalues: &[f64], l: usize) -> Result<f64> {
    if l == 0 || l >= eigenvalues.len() {
        return Err(Error::Domain(alloc::format!("level {l} outside 1..{}", eigenvalues.len())));
    }
    let gap = eigenvalues[l] - eigenvalues[0];
    if !(gap > 0.0) {
        return Err(Error::Domain("zero energy window".into()));
    }
    Ok(core::f64::consts::PI / gap)
}

/// Right-hand side of the ground-energy error bound for a `dim`-vector QFD
/// space with `Δt = π/ΔE_L`. The exponent is `dim − 1`, the number of time
/// steps spanned by the grid.
pub fn epperly_bound(eigenvalues: &[f64], weights: &[f64], dim: usize, l: usize) -> f64 {
    let d = eigenvalues.len();
    if l == 0 || l >= d || weights.len() != d || weights[0] <= 0.0 {
        return f64::INFINITY;
    }
    let de = |mu: usize| eigenvalues[mu] - eigenvalues[0];
    let decay = (1.0 + core::f64::consts::PI * de(1) / de(l)).powi(-(dim.saturating_sub(1) as i32));
    let low: f64 = (1..=l).map(|mu| de(mu) * weights[mu] / weights[0]).sum();
    let high: f64 = (l + 1..d).map(|mu| de(mu) * weights[mu] / weights[0]).sum();
    decay * 8.0 * low + 2.0 * high
}

/// [`epperly_bound`] for an arbitrary step: the energy window is `π/Δt` and
/// levels above it count as the high part.
pub fn epperly_bound_for_step(eigenvalues: &[f64], weights: &[f64], dim: usize, dt: f64) -> f64 {
    let d = eigenvalues.len();
    if d < 2 || weights.len() != d || weights[0] <= 0.0 || !(dt > 0.0) {
        return f64::INFINITY;
    }
    let window = core::f64::consts::PI / dt;
    let de = |mu: usize| eigenvalues[mu] - eigenvalues[0];
    let decay = (1.0 + core::f64::consts::PI * de(1) / window).powi(-(dim.saturating_sub(1) as i32));
    let (mut low, mut high) = (0.0, 0.0);
    for mu in 1..d {
        let term = de(mu) * weights[mu] / weights[0];
        if de(mu) <= window {
            low += term;
        } else {
            high += term;
        }
    }
    decay * 8.0 * low + 2.0 * high
}

fn evolve(
    v0: &FockVector,
    t: f64,
    grid: &QfdGrid,
    exact: Option<&ExactPropagator>,
    trotter: Option<&LowRankTrotter>,
) -> Result<FockVector> {
    match (grid.backend, exact, trotter) {
        (Backend::Exact, Some(p), _) => Ok(p.evolve(v0, Time::Real(t))?.0),
        (Backend::Trotter { substeps, .. }, _, Some(tr)) => {
            let steps = ((t.abs() / grid.dt).round() as usize).max(1) * substeps;
            let s = tr.evolve(t, steps, &Statevector::from_fock(v0)?)?;
            s.to_fock(&crate::fock::SectorBasis::new(v0.sector))
        }
        _ => Err(Error::Domain("evolution backend unavailable".into())),
    }
}

/// `S_αβ = ⟨v₀|e^{it_αH}e^{−it_βH}|v₀⟩`, `H_αβ = ⟨v₀|e^{it_αH} H e^{−it_βH}|v₀⟩`.
pub fn qfd_build(v0: &FockVector, ints: &MolecularIntegrals, grid: &QfdGrid) -> Result<QfdOutput> {
    grid.validate()?;
    let ham = SectorHamiltonian::new(ints)?;
    if v0.sector != ham.sector() {
        return Err(Error::Mismatch("start vector sector differs from the integrals".into()));
    }
    let v0 = v0.clone().normalized();
    let exact = match grid.backend {
        Backend::Exact => Some(ExactPropagator::new(&ham)?),
        Backend::Trotter { .. } => None,
    };
    let trotter = match grid.backend {
        Backend::Trotter { tol, .. } => Some(LowRankTrotter::new(ints, tol)?),
        Backend::Exact => None,
    };
    let times = grid.times();
    let basis: Vec<FockVector> = times
        .iter()
        .map(|&t| evolve(&v0, t, grid, exact.as_ref(), trotter.as_ref()))
        .collect::<Result<_>>()?;
    let images: Vec<FockVector> = basis.iter().map(|b| ham.apply(b)).collect::<Result<_>>()?;
    let n = basis.len();
    let h = DMatrix::from_fn(n, n, |a, b| basis[a].dot(&images[b]));
    let s = DMatrix::from_fn(n, n, |a, b| basis[a].dot(&basis[b]));
    let mut prov = Provenance::new("qfd").with("dt", grid.dt).with("n", n as f64);
    if let Backend::Trotter { substeps, .. } = grid.backend {
        prov = prov.with("trotter_substeps", substeps as f64);
    }
    Ok(QfdOutput {
        problem: SubspaceProblem::new(h, s, prov)?,
        basis,
        times,
    })
}

/// Hadamard-test recipe for a QFD basis: each entry is read from the real
/// and imaginary ancilla expectations of `⟨v_α|P|v_β⟩`.
pub fn qfd_recipe(basis: &[FockVector], ints: &MolecularIntegrals, dt: f64) -> Result<MeasurementRecipe> {
    let h = jordan_wigner(ints)?;
    let states: Vec<Statevector> = basis.iter().map(Statevector::from_fock).collect::<Result<_>>()?;
    let nq = h.num_qubits();
    let id = crate::qubits::PauliSum::identity(nq, crate::linalg::ONE);
    let n = basis.len();
    let mut rb = RecipeBuilder::new(n, states);
    for a in 0..n {
        for b in a..n {
            let th = rb.transition_terms(a, b, &h);
            let ts = rb.transition_terms(a, b, &id);
            rb.push_h(a, b, th);
            rb.push_s(a, b, ts);
        }
    }
    Ok(rb.finish(Provenance::new("qfd").with("dt", dt).with("n", n as f64)))
}
