//! Dense statevector simulation, orbital-rotation networks and low-rank
//! first-order Trotter steps.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fock::{Configuration, FockVector, SectorBasis};
use crate::integrals::{cholesky_decompose_eri, CholeskyFactors, MolecularIntegrals};
use crate::linalg::{self, C64};
use crate::qubits::{PauliString, PauliSum};

pub const MAX_QUBITS: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    num_qubits: usize,
    amps: Vec<C64>,
}

impl Statevector {
    /// Computational basis state `|index⟩`.
    pub fn basis(num_qubits: usize, index: u64) -> Result<Self> {
        if num_qubits > MAX_QUBITS {
            return Err(Error::Capacity(format!("{num_qubits} qubits exceeds {MAX_QUBITS}")));
        }
        if index >> num_qubits != 0 {
            return Err(Error::Domain(format!("basis index {index} outside {num_qubits} qubits")));
        }
        let mut amps = vec![linalg::ZERO; 1usize << num_qubits];
        amps[index as usize] = linalg::ONE;
        Ok(Self { num_qubits, amps })
    }

    pub fn from_amplitudes(num_qubits: usize, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != 1usize << num_qubits {
            return Err(Error::Mismatch(format!(
                "{} amplitudes for {num_qubits} qubits",
                amps.len()
            )));
        }
        Ok(Self { num_qubits, amps })
    }

    /// Embeds a sector vector into the `2M`-qubit register.
    pub fn from_fock(v: &FockVector) -> Result<Self> {
        let basis = SectorBasis::new(v.sector);
        let m = v.sector.num_orbitals;
        let mut s = Self::basis(2 * m, 0)?;
        s.amps[0] = linalg::ZERO;
        for (c, a) in basis.configurations().iter().zip(&v.amplitudes) {
            s.amps[c.key(m) as usize] = *a;
        }
        Ok(s)
    }

    /// Restricts to the sector of `basis`, dropping amplitude outside it.
    pub fn to_fock(&self, basis: &SectorBasis) -> Result<FockVector> {
        let m = basis.sector().num_orbitals;
        if self.num_qubits != 2 * m {
            return Err(Error::Mismatch(format!(
                "{} qubits cannot hold a {m}-orbital sector",
                self.num_qubits
            )));
        }
        let amps = basis
            .configurations()
            .iter()
            .map(|c| self.amps[c.key(m) as usize])
            .collect();
        FockVector::from_amplitudes(basis.sector(), amps)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amps)
    }

    /// `⟨self|other⟩`
    pub fn dot(&self, other: &Statevector) -> C64 {
        linalg::dot(&self.amps, &other.amps)
    }

    /// Global-phase-insensitive distance `1 − |⟨s|t⟩|`.
    pub fn distance(&self, other: &Statevector) -> f64 {
        1.0 - linalg::cabs(self.dot(other))
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// In-place `s ← P s`.
    pub fn apply_pauli(&mut self, p: &PauliString) {
        let x = p.x_mask() as usize;
        if x == 0 {
            for (b, a) in self.amps.iter_mut().enumerate() {
                *a *= p.phase_on(b as u64);
            }
            return;
        }
        let hi = 1usize << (63 - (x as u64).leading_zeros());
        for b in 0..self.amps.len() {
            if b & hi != 0 {
                continue;
            }
            let b2 = b ^ x;
            let (a1, a2) = (self.amps[b], self.amps[b2]);
            self.amps[b2] = a1 * p.phase_on(b as u64);
            self.amps[b] = a2 * p.phase_on(b2 as u64);
        }
    }

    /// `H s` for a Pauli sum (not normalized).
    pub fn apply_pauli_sum(&self, h: &PauliSum) -> Result<Statevector> {
        check_size(h.num_qubits(), self.num_qubits)?;
        let mut out = vec![linalg::ZERO; self.amps.len()];
        for (c, p) in h.terms() {
            let x = p.x_mask() as usize;
            for (b, a) in self.amps.iter().enumerate() {
                if *a == linalg::ZERO {
                    continue;
                }
                out[b ^ x] += c * p.phase_on(b as u64) * a;
            }
        }
        Ok(Statevector {
            num_qubits: self.num_qubits,
            amps: out,
        })
    }

    /// `⟨s|P|s⟩` for a single string.
    pub fn pauli_expectation(&self, p: &PauliString) -> C64 {
        let x = p.x_mask() as usize;
        let mut acc = linalg::ZERO;
        for (b, a) in self.amps.iter().enumerate() {
            if *a == linalg::ZERO {
                continue;
            }
            acc += self.amps[b ^ x].conj() * p.phase_on(b as u64) * a;
        }
        acc
    }
}

fn check_size(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Mismatch(format!("operator on {a} qubits, state on {b}")));
    }
    Ok(())
}

/// JW image of a configuration: bit `p` (up) / `p + M` (down) set when occupied.
pub fn prepare_configuration(c: Configuration, num_orbitals: usize) -> Result<Statevector> {
    Statevector::basis(2 * num_orbitals, c.key(num_orbitals))
}

/// `⟨s|H|s⟩`
pub fn expectation(h: &PauliSum, s: &Statevector) -> Result<C64> {
    check_size(h.num_qubits(), s.num_qubits)?;
    Ok(h.terms()
        .iter()
        .fold(linalg::ZERO, |acc, (c, p)| acc + c * s.pauli_expectation(p)))
}

/// `⟨s|H|t⟩`
pub fn transition(h: &PauliSum, s: &Statevector, t: &Statevector) -> Result<C64> {
    check_size(s.num_qubits, t.num_qubits)?;
    Ok(s.dot(&t.apply_pauli_sum(h)?))
}

/// `R_P(θ) = cos(θ/2) I − i sin(θ/2) P`
pub fn apply_pauli_exponential(p: &PauliString, theta: f64, s: &Statevector) -> Result<Statevector> {
    check_size(p.num_qubits(), s.num_qubits)?;
    let mut out = s.clone();
    pauli_rotation_in_place(p, theta, &mut out);
    Ok(out)
}

pub fn pauli_rotation_in_place(p: &PauliString, theta: f64, s: &mut Statevector) {
    let mut ps = s.clone();
    ps.apply_pauli(p);
    let c = C64::new((0.5 * theta).cos(), 0.0);
    let ms = C64::new(0.0, -(0.5 * theta).sin());
    for (a, b) in s.amps.iter_mut().zip(&ps.amps) {
        *a = c * *a + ms * b;
    }
}

/// Two-mode rotation acting on orbitals `(mode, mode + 1)` in both spin
/// blocks with orbital-space matrix
/// `[[cos θ, −e^{iβ} sin θ], [e^{−iβ} sin θ, cos θ]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GivensElement {
    pub mode: usize,
    pub theta: f64,
    pub beta: f64,
}

impl GivensElement {
    pub fn matrix(&self) -> [[C64; 2]; 2] {
        let (c, s) = (self.theta.cos(), self.theta.sin());
        let e = linalg::cis(self.beta);
        [
            [C64::new(c, 0.0), -e * s],
            [e.conj() * s, C64::new(c, 0.0)],
        ]
    }

    pub fn inverse(&self) -> Self {
        Self {
            theta: -self.theta,
            ..*self
        }
    }
}

/// Orbital rotation `Û(U)` with `Û a†_p Û† = Σ_q U_qp a†_q` (same `U` for
/// both spins), realized as phases followed by adjacent Givens elements.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationNetwork {
    num_orbitals: usize,
    /// Elements in application order.
    elements: Vec<GivensElement>,
    /// Element indices grouped into layers of disjoint mode pairs.
    layers: Vec<Vec<usize>>,
    /// Phase angle per qubit, applied before the Givens elements.
    phases: Vec<f64>,
}

impl RotationNetwork {
    pub fn identity(num_orbitals: usize) -> Self {
        Self::from_unitary(&DMatrix::identity(num_orbitals, num_orbitals))
    }

    /// Synthesizes the network for a unitary `U`.
    pub fn from_unitary(u: &DMatrix<C64>) -> Self {
        let m = u.nrows();
        let mut w = u.clone();
        let mut recorded = Vec::new();
        for j in 0..m.saturating_sub(1) {
            for i in (j + 1..m).rev() {
                let a = w[(i - 1, j)];
                let b = w[(i, j)];
                let (ra, rb) = (linalg::cabs(a), linalg::cabs(b));
                let (theta, beta) = if rb == 0.0 {
                    (0.0, 0.0)
                } else if ra == 0.0 {
                    (core::f64::consts::FRAC_PI_2, -b.im.atan2(b.re))
                } else {
                    (rb.atan2(ra), a.im.atan2(a.re) - b.im.atan2(b.re))
                };
                let el = GivensElement { mode: i - 1, theta, beta };
                // rows ← R rows with R = g†
                let g = el.matrix();
                for col in 0..m {
                    let (x, y) = (w[(i - 1, col)], w[(i, col)]);
                    w[(i - 1, col)] = g[0][0].conj() * x + g[1][0].conj() * y;
                    w[(i, col)] = g[0][1].conj() * x + g[1][1].conj() * y;
                }
                recorded.push(el);
            }
        }
        let mut phases = vec![0.0; 2 * m];
        for p in 0..m {
            let d = w[(p, p)];
            let phi = d.im.atan2(d.re);
            phases[p] = phi;
            phases[p + m] = phi;
        }
        recorded.reverse();
        let layers = layer_elements(m, &recorded);
        Self {
            num_orbitals: m,
            elements: recorded,
            layers,
            phases,
        }
    }

    /// Network for `e^{K̂}` with `K` real antisymmetric.
    pub fn from_generator(k: &DMatrix<f64>) -> Result<Self> {
        let m = k.nrows();
        if k.ncols() != m {
            return Err(Error::Domain("generator is not square".into()));
        }
        let defect = (k + k.transpose()).amax();
        if defect > 1e-10 {
            return Err(Error::Domain(format!("generator is not antisymmetric (defect {defect:e})")));
        }
        // e^K = V e^{-iλ} V† with iK = V λ V†
        let ik = linalg::real_to_complex(k).map(|z| z * linalg::I);
        let (lam, v) = linalg::hermitian_eigen(&ik);
        let phases = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                linalg::cis(-lam[i])
            } else {
                linalg::ZERO
            }
        });
        let u = &v * phases * v.adjoint();
        Ok(Self::from_unitary(&u))
    }

    /// For a symmetric one-body matrix `h = V diag(η) Vᵀ`, returns `W = Û(Vᵀ)`
    /// and `η` so that `Σ h_pq E_pq = W† (Σ_p η_p n_p) W`.
    pub fn diagonalizing(h: &DMatrix<f64>) -> Result<(Self, Vec<f64>)> {
        let m = h.nrows();
        if h.ncols() != m {
            return Err(Error::Domain("one-body matrix is not square".into()));
        }
        let defect = (h - h.transpose()).amax();
        if defect > 1e-10 {
            return Err(Error::Domain(format!("one-body matrix is not symmetric (defect {defect:e})")));
        }
        let (eta, v) = linalg::symmetric_eigen(h);
        let u = linalg::real_to_complex(&v.transpose());
        Ok((Self::from_unitary(&u), eta))
    }

    pub fn num_orbitals(&self) -> usize {
        self.num_orbitals
    }

    pub fn elements(&self) -> &[GivensElement] {
        &self.elements
    }

    pub fn layers(&self) -> &[Vec<usize>] {
        &self.layers
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Number of two-mode elements counted over both spin blocks.
    pub fn two_mode_count(&self) -> usize {
        2 * self.elements.len()
    }

    fn check(&self, s: &Statevector) -> Result<()> {
        check_size(2 * self.num_orbitals, s.num_qubits)
    }

    fn apply_phases(&self, s: &mut Statevector, sign: f64) {
        for (b, a) in s.amps.iter_mut().enumerate() {
            let mut phi = 0.0;
            for (q, ph) in self.phases.iter().enumerate() {
                if b >> q & 1 == 1 {
                    phi += ph;
                }
            }
            if phi != 0.0 {
                *a *= linalg::cis(sign * phi);
            }
        }
    }

    fn apply_element(&self, el: &GivensElement, s: &mut Statevector) {
        let g = el.matrix();
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        let m = self.num_orbitals;
        for block in 0..2 {
            let q1 = el.mode + block * m;
            let (b1, b2) = (1usize << q1, 1usize << (q1 + 1));
            for b in 0..s.amps.len() {
                match (b & b1 != 0, b & b2 != 0) {
                    (true, false) => {
                        let other = b ^ b1 ^ b2;
                        let (u, w) = (s.amps[b], s.amps[other]);
                        s.amps[b] = g[0][0] * u + g[0][1] * w;
                        s.amps[other] = g[1][0] * u + g[1][1] * w;
                    }
                    (true, true) => s.amps[b] *= det,
                    _ => {}
                }
            }
        }
    }

    /// `s ← Û s`
    pub fn apply(&self, s: &mut Statevector) -> Result<()> {
        self.check(s)?;
        self.apply_phases(s, 1.0);
        for el in &self.elements {
            self.apply_element(el, s);
        }
        Ok(())
    }

    /// `s ← Û† s`
    pub fn apply_inverse(&self, s: &mut Statevector) -> Result<()> {
        self.check(s)?;
        for el in self.elements.iter().rev() {
            self.apply_element(&el.inverse(), s);
        }
        self.apply_phases(s, -1.0);
        Ok(())
    }
}

fn layer_elements(m: usize, elements: &[GivensElement]) -> Vec<Vec<usize>> {
    let mut depth = vec![0usize; m];
    let mut layers: Vec<Vec<usize>> = Vec::new();
    for (idx, el) in elements.iter().enumerate() {
        let l = depth[el.mode].max(depth[el.mode + 1]);
        if layers.len() <= l {
            layers.push(Vec::new());
        }
        layers[l].push(idx);
        depth[el.mode] = l + 1;
        depth[el.mode + 1] = l + 1;
    }
    layers
}

/// Multiplies each basis amplitude by `e^{-i dt f(occupations)}` where the
/// occupation of orbital `p` is `n_p↑ + n_p↓`.
fn diagonal_phase<F: Fn(&[f64]) -> f64>(s: &mut Statevector, m: usize, dt: f64, f: F) {
    let mut occ = vec![0.0; m];
    for (b, a) in s.amps.iter_mut().enumerate() {
        for (p, o) in occ.iter_mut().enumerate() {
            *o = ((b >> p) & 1) as f64 + ((b >> (p + m)) & 1) as f64;
        }
        *a *= linalg::cis(-dt * f(&occ));
    }
}

/// Factorized Hamiltonian `E_nuc + W₀†(Σ ζ n)W₀ + Σ_γ (W_γ†(Σ λ^γ n)W_γ)²`.
#[derive(Debug, Clone)]
pub struct LowRankTrotter {
    num_orbitals: usize,
    e_nuc: f64,
    one_body: (RotationNetwork, Vec<f64>),
    two_body: Vec<(RotationNetwork, Vec<f64>)>,
}

impl LowRankTrotter {
    pub fn new(ints: &MolecularIntegrals, tol: f64) -> Result<Self> {
        let chol = cholesky_decompose_eri(ints, tol)?;
        Self::from_factors(ints, &chol)
    }

    /// Uses `J₁ = h − Σ_γ L^γ L^γ` as the effective one-body term.
    pub fn from_factors(ints: &MolecularIntegrals, chol: &CholeskyFactors) -> Result<Self> {
        let mut j1 = ints.one_body().clone();
        for l in &chol.factors {
            j1 -= l * l;
        }
        let one_body = RotationNetwork::diagonalizing(&j1)?;
        let two_body = chol
            .factors
            .iter()
            .map(RotationNetwork::diagonalizing)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            num_orbitals: ints.num_orbitals(),
            e_nuc: ints.e_nuc(),
            one_body,
            two_body,
        })
    }

    pub fn num_factors(&self) -> usize {
        self.two_body.len()
    }

    /// One first-order step of length `dt`, in place.
    pub fn step(&self, dt: f64, s: &mut Statevector) -> Result<()> {
        let m = self.num_orbitals;
        let (w0, zeta) = &self.one_body;
        w0.apply(s)?;
        diagonal_phase(s, m, dt, |n| n.iter().zip(zeta).map(|(a, b)| a * b).sum());
        w0.apply_inverse(s)?;
        for (w, lam) in &self.two_body {
            w.apply(s)?;
            diagonal_phase(s, m, dt, |n| {
                let v: f64 = n.iter().zip(lam).map(|(a, b)| a * b).sum();
                v * v
            });
            w.apply_inverse(s)?;
        }
        let g = linalg::cis(-dt * self.e_nuc);
        for a in s.amps.iter_mut() {
            *a *= g;
        }
        Ok(())
    }

    /// `steps` consecutive steps of `t / steps`.
    pub fn evolve(&self, t: f64, steps: usize, s: &Statevector) -> Result<Statevector> {
        let mut out = s.clone();
        let steps = steps.max(1);
        for _ in 0..steps {
            self.step(t / steps as f64, &mut out)?;
        }
        Ok(out)
    }
}

pub fn trotter_step(trotter: &LowRankTrotter, dt: f64, s: &Statevector) -> Result<Statevector> {
    let mut out = s.clone();
    trotter.step(dt, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubits::Letter;

    #[test]
    fn configuration_index() {
        let c = Configuration { occ_up: 0b01, occ_down: 0b10 };
        let s = prepare_configuration(c, 2).unwrap();
        assert_eq!(s.amplitudes()[9], linalg::ONE);
        let vac = prepare_configuration(Configuration { occ_up: 0, occ_down: 0 }, 2).unwrap();
        assert_eq!(vac.amplitudes()[0], linalg::ONE);
    }

    #[test]
    fn z_expectation() {
        let s = Statevector::basis(1, 1).unwrap();
        let z = PauliSum::from_string(linalg::ONE, PauliString::single(1, 0, Letter::Z));
        assert_eq!(expectation(&z, &s).unwrap(), C64::new(-1.0, 0.0));
        let c = PauliSum::identity(1, C64::new(0.3, 0.0));
        assert_eq!(expectation(&c, &s).unwrap(), C64::new(0.3, 0.0));
    }

    #[test]
    fn exponential_periodicity() {
        let s = Statevector::from_amplitudes(
            2,
            vec![C64::new(0.5, 0.0), C64::new(0.0, 0.5), C64::new(-0.5, 0.0), C64::new(0.5, 0.0)],
        )
        .unwrap();
        let p = PauliString::from_letters("XY").unwrap();
        assert_eq!(apply_pauli_exponential(&p, 0.0, &s).unwrap(), s);
        let r = apply_pauli_exponential(&p, 2.0 * core::f64::consts::PI, &s).unwrap();
        for (a, b) in r.amplitudes().iter().zip(s.amplitudes()) {
            assert!(linalg::cabs(a + b) < 1e-15);
        }
    }

    #[test]
    fn zero_generator_is_identity() {
        let net = RotationNetwork::from_generator(&DMatrix::zeros(3, 3)).unwrap();
        assert!(net.elements().iter().all(|e| e.theta == 0.0));
        assert!(net.phases().iter().all(|&p| p == 0.0));
        assert_eq!(net.elements().len(), 3);
    }

    #[test]
    fn rejects_non_antisymmetric() {
        let k = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(RotationNetwork::from_generator(&k).is_err());
    }
}
