//! Lehmann-representation response functions and subspace fast-forwarding.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::engine::Statevector;
use crate::error::{Error, Result};
use crate::geev::GeevSolution;
use crate::linalg::{self, C64, ZERO};
use crate::qubits::PauliSum;

/// Projection weight below which [`FastForward::warning`] is set.
pub const FAST_FORWARD_WARNING: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponsePeak {
    /// `ΔẼ_μ = Ẽ_μ − Ẽ₀`
    pub omega: f64,
    /// `⟨Ψ₀|A|Ψ_μ⟩⟨Ψ_μ|B|Ψ₀⟩`
    pub weight: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponseSpectrum {
    pub ground_energy: f64,
    pub peaks: Vec<ResponsePeak>,
    pub omegas: Vec<f64>,
    pub values: Vec<C64>,
    pub eta: f64,
}

impl ResponseSpectrum {
    pub fn total_weight(&self) -> C64 {
        self.peaks.iter().fold(ZERO, |a, p| a + p.weight)
    }
}

/// Normalized Lorentzian `(η/π)/(x² + η²)`.
pub fn lorentzian(x: f64, eta: f64) -> f64 {
    eta / core::f64::consts::PI / (x * x + eta * eta)
}

/// Subspace eigenvectors `Ψ_μ = Σ_α C_αμ v_α` as statevectors.
pub fn eigenstates(sol: &GeevSolution, basis: &[Statevector]) -> Result<Vec<Statevector>> {
    let c = &sol.coefficients;
    if basis.len() != c.nrows() || basis.is_empty() {
        return Err(Error::Mismatch(format!(
            "{} basis states for a {}-dimensional solution",
            basis.len(),
            c.nrows()
        )));
    }
    let nq = basis[0].num_qubits();
    if basis.iter().any(|b| b.num_qubits() != nq) {
        return Err(Error::Mismatch("basis states act on different registers".into()));
    }
    (0..c.ncols())
        .map(|mu| {
            let mut amps = alloc::vec![ZERO; 1usize << nq];
            for (a, b) in basis.iter().enumerate() {
                linalg::axpy(c[(a, mu)], b.amplitudes(), &mut amps);
            }
            Statevector::from_amplitudes(nq, amps)
        })
        .collect()
}

/// `C_AB(ω) = Σ_μ L_η(ω − ΔẼ_μ)⟨Ψ₀|A|Ψ_μ⟩⟨Ψ_μ|B|Ψ₀⟩` over the subspace eigenpairs.
pub fn response_function(
    sol: &GeevSolution,
    basis: &[Statevector],
    a: &PauliSum,
    b: &PauliSum,
    omegas: &[f64],
    eta: f64,
) -> Result<ResponseSpectrum> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::Domain(format!("Lorentzian width {eta} must be positive")));
    }
    let states = eigenstates(sol, basis)?;
    let psi0 = &states[0];
    let a_dag_psi0 = psi0.apply_pauli_sum(&a.adjoint())?;
    let b_psi0 = psi0.apply_pauli_sum(b)?;
    let e0 = sol.eigenvalues[0];
    let peaks: Vec<ResponsePeak> = states
        .iter()
        .zip(&sol.eigenvalues)
        .map(|(s, &e)| ResponsePeak {
            omega: e - e0,
            weight: a_dag_psi0.dot(s) * s.dot(&b_psi0),
        })
        .collect();
    let values = omegas
        .iter()
        .map(|&w| peaks.iter().fold(ZERO, |acc, p| acc + p.weight * lorentzian(w - p.omega, eta)))
        .collect();
    Ok(ResponseSpectrum {
        ground_energy: e0,
        peaks,
        omegas: omegas.to_vec(),
        values,
        eta,
    })
}

#[derive(Debug, Clone)]
pub struct FastForward {
    pub state: Statevector,
    /// `Σ_μ |⟨Ψ_μ|ψ⟩|² / ‖ψ‖²`
    pub weight: f64,
    pub warning: bool,
}

/// `Σ_μ e^{−iẼ_μ t} |Ψ_μ⟩⟨Ψ_μ|ψ⟩`.
pub fn fast_forward(sol: &GeevSolution, basis: &[Statevector], state: &Statevector, t: f64) -> Result<FastForward> {
    let states = eigenstates(sol, basis)?;
    if state.num_qubits() != states[0].num_qubits() {
        return Err(Error::Mismatch("state and subspace registers differ".into()));
    }
    let total = state.norm().powi(2);
    if total == 0.0 {
        return Err(Error::Domain("zero state".into()));
    }
    let nq = state.num_qubits();
    let mut amps = alloc::vec![ZERO; 1usize << nq];
    let mut captured = 0.0;
    for (s, &e) in states.iter().zip(&sol.eigenvalues) {
        let c = s.dot(state);
        captured += c.norm_sqr();
        linalg::axpy(c * linalg::cis(-e * t), s.amplitudes(), &mut amps);
    }
    let weight = captured / total;
    Ok(FastForward {
        state: Statevector::from_amplitudes(nq, amps)?,
        weight,
        warning: weight < FAST_FORWARD_WARNING,
    })
}
