//! Quantum subspace expansion over `{Ô_α|Φ⟩}` (MRCISD flavour).

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use super::{excitation_pool, sector_state, ExcitationLevel, ExcitationOperator};
use crate::engine::Statevector;
use crate::error::{Error, Result};
use crate::fock::{FockVector, Sector, SectorHamiltonian};
use crate::geev::{Provenance, SubspaceProblem};
use crate::integrals::MolecularIntegrals;
use crate::qubits::jordan_wigner;
use crate::shots::{MeasurementRecipe, RecipeBuilder};

/// Upper limit on `pool² × Pauli terms` for measurement recipes.
pub const DEFAULT_TERM_BUDGET: usize = 20_000_000;

#[derive(Debug, Clone)]
pub struct QseOutput {
    pub problem: SubspaceProblem,
    /// Identity first, then the excitations.
    pub pool: Vec<ExcitationOperator>,
    pub basis: Vec<FockVector>,
}

fn full_pool(sector: Sector, level: ExcitationLevel) -> Vec<ExcitationOperator> {
    let mut pool = alloc::vec![ExcitationOperator::Identity];
    pool.extend(excitation_pool(sector, level));
    pool
}

fn level_tag(level: ExcitationLevel) -> f64 {
    match level {
        ExcitationLevel::Singles => 1.0,
        ExcitationLevel::SinglesDoubles => 2.0,
    }
}

/// `S_αβ = ⟨Φ|Ô†_αÔ_β|Φ⟩`, `H_αβ = ⟨Φ|Ô†_α Ĥ Ô_β|Φ⟩` evaluated exactly.
pub fn qse_build(state: &Statevector, ints: &MolecularIntegrals, level: ExcitationLevel) -> Result<QseOutput> {
    let ham = SectorHamiltonian::new(ints)?;
    let phi = sector_state(state, ham.sector())?;
    let pool = full_pool(ham.sector(), level);
    let basis: Vec<FockVector> = pool.iter().map(|o| o.apply(&phi, ham.basis())).collect();
    let images: Vec<FockVector> = basis.iter().map(|b| ham.apply(b)).collect::<Result<_>>()?;
    let n = pool.len();
    let h = DMatrix::from_fn(n, n, |a, b| basis[a].dot(&images[b]));
    let s = DMatrix::from_fn(n, n, |a, b| basis[a].dot(&basis[b]));
    let problem = SubspaceProblem::new(
        h,
        s,
        Provenance::new("qse").with("level", level_tag(level)).with("pool", n as f64),
    )?;
    Ok(QseOutput { problem, pool, basis })
}

/// Entries as Pauli expectations `⟨Φ|JW(Ô†_α Ĥ Ô_β)|Φ⟩` and `⟨Φ|JW(Ô†_αÔ_β)|Φ⟩`
/// for `α ≤ β`.
pub fn qse_recipe(
    state: &Statevector,
    ints: &MolecularIntegrals,
    level: ExcitationLevel,
    term_budget: usize,
) -> Result<MeasurementRecipe> {
    let sector = Sector::of(ints)?;
    sector_state(state, sector)?;
    let m = sector.num_orbitals;
    let h = jordan_wigner(ints)?;
    let pool = full_pool(sector, level);
    let n = pool.len();
    let cost = n.saturating_mul(n).saturating_mul(h.len());
    if cost > term_budget {
        return Err(Error::Capacity(format!(
            "QSE recipe needs about {cost} Pauli terms, budget is {term_budget}"
        )));
    }
    let ops: Vec<_> = pool.iter().map(|o| o.to_pauli(m)).collect::<Result<_>>()?;
    let adj: Vec<_> = ops.iter().map(|o| o.adjoint()).collect();
    let h_ops: Vec<_> = ops.iter().map(|o| h.mul(o)).collect::<Result<_>>()?;
    let mut rb = RecipeBuilder::new(n, alloc::vec![state.clone()]);
    for a in 0..n {
        for b in a..n {
            let sh = adj[a].mul(&h_ops[b])?;
            let ss = adj[a].mul(&ops[b])?;
            let th = rb.expectation_terms(0, &sh);
            let ts = rb.expectation_terms(0, &ss);
            rb.push_h(a, b, th);
            rb.push_s(a, b, ts);
        }
    }
    Ok(rb.finish(Provenance::new("qse").with("level", level_tag(level)).with("pool", n as f64)))
}

/// Rayleigh quotient `⟨Φ|H|Φ⟩/⟨Φ|Φ⟩` of a register state in the sector of `ints`.
pub fn reference_energy(state: &Statevector, ints: &MolecularIntegrals) -> Result<f64> {
    let ham = SectorHamiltonian::new(ints)?;
    let phi = sector_state(state, ham.sector())?;
    ham.rayleigh_quotient(&phi)
}
