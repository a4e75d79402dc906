//! Classical Krylov baselines: moment-based power Krylov, Lanczos, Davidson
//! and the Kaniel–Paige/Saad convergence bounds.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fock::{FockVector, Sector, SectorHamiltonian, SpectrumSlice};
use crate::geev::{Provenance, SubspaceProblem};
use crate::linalg::{self, C64, ZERO};

pub const MAX_POWER_KRYLOV_DIM: usize = 12;
pub const BREAKDOWN_TOL: f64 = 1e-12;
const PRECONDITIONER_FLOOR: f64 = 1e-6;

/// Hermitian linear map on `ℂᴰ` given by its action.
pub trait HermitianOperator {
    fn dim(&self) -> usize;
    fn apply(&self, v: &[C64]) -> Vec<C64>;
    fn diagonal(&self) -> Vec<f64>;
}

impl HermitianOperator for SectorHamiltonian {
    fn dim(&self) -> usize {
        SectorHamiltonian::dim(self)
    }

    fn apply(&self, v: &[C64]) -> Vec<C64> {
        self.apply_slice(v)
    }

    fn diagonal(&self) -> Vec<f64> {
        SectorHamiltonian::diagonal(self).to_vec()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    matrix: DMatrix<C64>,
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Mismatch("operator matrix is not square".into()));
        }
        Ok(Self {
            matrix: linalg::hermitize(&matrix),
        })
    }

    pub fn from_real(matrix: &DMatrix<f64>) -> Result<Self> {
        Self::new(linalg::real_to_complex(matrix))
    }

    pub fn diagonal_of(values: &[f64]) -> Self {
        let n = values.len();
        Self {
            matrix: DMatrix::from_fn(n, n, |i, j| if i == j { C64::new(values[i], 0.0) } else { ZERO }),
        }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }
}

impl HermitianOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, v: &[C64]) -> Vec<C64> {
        let n = self.matrix.nrows();
        (0..n)
            .map(|i| (0..n).fold(ZERO, |acc, j| acc + self.matrix[(i, j)] * v[j]))
            .collect()
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.matrix.nrows()).map(|i| self.matrix[(i, i)].re).collect()
    }
}

fn check_dim(op: &impl HermitianOperator, v: &[C64]) -> Result<()> {
    if v.len() != op.dim() {
        return Err(Error::Mismatch(format!(
            "vector has length {} but the operator acts on dimension {}",
            v.len(),
            op.dim()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrylovMoments {
    /// `f_ℓ = ⟨v₀|Hˡ|v₀⟩`, `ℓ = 0 … 2n−1`.
    pub moments: Vec<f64>,
}

impl KrylovMoments {
    pub fn dim(&self) -> usize {
        self.moments.len() / 2
    }

    /// `S_αβ = f_{α+β}`.
    pub fn overlap(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |a, b| self.moments[a + b])
    }

    /// `H_αβ = f_{α+β+1}`.
    pub fn hamiltonian(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |a, b| self.moments[a + b + 1])
    }
}

/// Moments up to order `2n−1` from `n` applications of `H`.
pub fn krylov_moments(op: &impl HermitianOperator, v0: &[C64], n: usize) -> Result<KrylovMoments> {
    check_dim(op, v0)?;
    let mut moments = vec![0.0; 2 * n];
    let mut cur = v0.to_vec();
    for k in 0..n {
        let next = op.apply(&cur);
        moments[2 * k] = linalg::norm_sqr(&cur);
        moments[2 * k + 1] = linalg::dot(&cur, &next).re;
        cur = next;
    }
    Ok(KrylovMoments { moments })
}

/// Power Krylov pair `S = (f_{α+β})`, `H = (f_{α+β+1})`.
pub fn power_krylov(op: &impl HermitianOperator, v0: &[C64], n: usize) -> Result<SubspaceProblem> {
    if n == 0 || n > MAX_POWER_KRYLOV_DIM {
        return Err(Error::Domain(format!(
            "power Krylov dimension {n} outside 1..={MAX_POWER_KRYLOV_DIM}"
        )));
    }
    let m = krylov_moments(op, v0, n)?;
    SubspaceProblem::new(
        linalg::real_to_complex(&m.hamiltonian()),
        linalg::real_to_complex(&m.overlap()),
        Provenance::power_krylov("power-krylov").with("n", n as f64),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalForm {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub basis: Vec<Vec<C64>>,
}

impl TridiagonalForm {
    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut t = DMatrix::zeros(n, n);
        for k in 0..n {
            t[(k, k)] = self.alpha[k];
            if k + 1 < n {
                t[(k, k + 1)] = self.beta[k];
                t[(k + 1, k)] = self.beta[k];
            }
        }
        t
    }

    pub fn ritz_values(&self) -> Vec<f64> {
        linalg::symmetric_eigen(&self.matrix()).0
    }

    /// `max |⟨q_i|q_j⟩|` over `i ≠ j`.
    pub fn orthogonality_loss(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.basis.len() {
            for j in 0..i {
                worst = worst.max(linalg::cabs(linalg::dot(&self.basis[i], &self.basis[j])));
            }
        }
        worst
    }
}

/// `n`-step Lanczos; stops early when `β < 1e-12`.
pub fn lanczos(
    op: &impl HermitianOperator,
    v0: &[C64],
    n: usize,
    reorthogonalize: bool,
) -> Result<(TridiagonalForm, SubspaceProblem)> {
    check_dim(op, v0)?;
    if n == 0 || n > op.dim() {
        return Err(Error::Domain(format!("Lanczos dimension {n} outside 1..={}", op.dim())));
    }
    let mut q = v0.to_vec();
    if linalg::normalize(&mut q) == 0.0 {
        return Err(Error::Domain("zero start vector".into()));
    }
    let mut alpha = Vec::with_capacity(n);
    let mut beta: Vec<f64> = Vec::with_capacity(n);
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(n);
    loop {
        let mut w = op.apply(&q);
        let a = linalg::dot(&q, &w).re;
        linalg::axpy(C64::new(-a, 0.0), &q, &mut w);
        if let (Some(prev), Some(&b)) = (basis.last(), beta.last()) {
            linalg::axpy(C64::new(-b, 0.0), prev, &mut w);
        }
        alpha.push(a);
        basis.push(q);
        if reorthogonalize {
            for _ in 0..2 {
                for u in &basis {
                    let c = linalg::dot(u, &w);
                    linalg::axpy(-c, u, &mut w);
                }
            }
        }
        if alpha.len() == n {
            break;
        }
        let b = linalg::norm(&w);
        if b < BREAKDOWN_TOL {
            break;
        }
        beta.push(b);
        linalg::scale(&mut w, C64::new(1.0 / b, 0.0));
        q = w;
    }
    let form = TridiagonalForm { alpha, beta, basis };
    let k = form.dim();
    let prob = SubspaceProblem::new(
        linalg::real_to_complex(&form.matrix()),
        DMatrix::identity(k, k),
        Provenance::new("lanczos").with("n", k as f64),
    )?;
    Ok((form, prob))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub energy: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DavidsonOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Start vectors; unit vectors on the lowest diagonal entries otherwise.
    pub initial_guess: Option<Vec<Vec<C64>>>,
}

impl Default for DavidsonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            initial_guess: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DavidsonResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<C64>>,
    pub residuals: Vec<f64>,
    /// Number of subspace expansions performed.
    pub iterations: usize,
    /// Lowest Ritz value and largest residual per iteration.
    pub trace: Vec<TraceRow>,
}

impl DavidsonResult {
    pub fn to_spectrum(&self, sector: Sector) -> Result<SpectrumSlice> {
        let eigenvectors = self
            .eigenvectors
            .iter()
            .map(|v| FockVector::from_amplitudes(sector, v.clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(SpectrumSlice {
            eigenvalues: self.eigenvalues.clone(),
            eigenvectors,
        })
    }
}

/// Orthogonalizes `w` against `basis` twice and appends it if anything is left.
fn push_orthonormal(basis: &mut Vec<Vec<C64>>, mut w: Vec<C64>) -> bool {
    let before = linalg::norm(&w);
    if before == 0.0 {
        return false;
    }
    for _ in 0..2 {
        for u in basis.iter() {
            let c = linalg::dot(u, &w);
            linalg::axpy(-c, u, &mut w);
        }
    }
    let after = linalg::normalize(&mut w);
    if after <= 1e-10 * before {
        return false;
    }
    basis.push(w);
    true
}

/// Lowest `k` eigenpairs by Davidson with a Jacobi preconditioner.
pub fn davidson(op: &impl HermitianOperator, k: usize, opts: &DavidsonOptions) -> Result<DavidsonResult> {
    let d = op.dim();
    if k == 0 || k > d {
        return Err(Error::Domain(format!("requested {k} roots of a dimension-{d} operator")));
    }
    let diag = op.diagonal();
    let mut basis: Vec<Vec<C64>> = Vec::new();
    match &opts.initial_guess {
        Some(guess) => {
            for g in guess {
                check_dim(op, g)?;
                push_orthonormal(&mut basis, g.clone());
            }
        }
        None => {}
    }
    if basis.len() < k {
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]).then(a.cmp(&b)));
        for &i in &order {
            if basis.len() == k {
                break;
            }
            let mut e = vec![ZERO; d];
            e[i] = C64::new(1.0, 0.0);
            push_orthonormal(&mut basis, e);
        }
    }
    let mut images: Vec<Vec<C64>> = basis.iter().map(|v| op.apply(v)).collect();
    let mut trace = Vec::new();
    let max_dim = (8 * k).max(k + 1).min(d);
    let mut iteration = 0;
    loop {
        let m = basis.len();
        let g = DMatrix::from_fn(m, m, |i, j| linalg::dot(&basis[i], &images[j]));
        let (theta, y) = linalg::hermitian_eigen(&linalg::hermitize(&g));
        let mut ritz = Vec::with_capacity(k);
        let mut ritz_images = Vec::with_capacity(k);
        let mut residuals = Vec::with_capacity(k);
        let mut res_vecs = Vec::with_capacity(k);
        for r in 0..k {
            let mut x = vec![ZERO; d];
            let mut ax = vec![ZERO; d];
            for j in 0..m {
                linalg::axpy(y[(j, r)], &basis[j], &mut x);
                linalg::axpy(y[(j, r)], &images[j], &mut ax);
            }
            let mut res = ax.clone();
            linalg::axpy(C64::new(-theta[r], 0.0), &x, &mut res);
            residuals.push(linalg::norm(&res));
            ritz.push(x);
            ritz_images.push(ax);
            res_vecs.push(res);
        }
        let worst = residuals.iter().fold(0.0f64, |a, &r| a.max(r));
        trace.push(TraceRow {
            iteration,
            energy: theta[0],
            residual: worst,
        });
        if worst <= opts.tol {
            return Ok(DavidsonResult {
                eigenvalues: theta[..k].to_vec(),
                eigenvectors: ritz,
                residuals,
                iterations: iteration,
                trace,
            });
        }
        let fail = || Error::NotConverged {
            iterations: iteration,
            residual: worst,
            best: theta[..k].to_vec(),
        };
        if iteration == opts.max_iter {
            return Err(fail());
        }
        let unconverged: Vec<usize> = (0..k).filter(|&r| residuals[r] > opts.tol).collect();
        if m + unconverged.len() > max_dim {
            basis = ritz.clone();
            images = ritz_images;
        }
        let mut added = 0;
        for &r in &unconverged {
            let t: Vec<C64> = res_vecs[r]
                .iter()
                .zip(&diag)
                .map(|(&ri, &dl)| {
                    let mut den = theta[r] - dl;
                    if den.abs() < PRECONDITIONER_FLOOR {
                        den = if den < 0.0 { -PRECONDITIONER_FLOOR } else { PRECONDITIONER_FLOOR };
                    }
                    ri / C64::new(den, 0.0)
                })
                .collect();
            if push_orthonormal(&mut basis, t) {
                images.push(op.apply(basis.last().unwrap()));
                added += 1;
            }
        }
        if added == 0 {
            for &r in &unconverged {
                if push_orthonormal(&mut basis, res_vecs[r].clone()) {
                    images.push(op.apply(basis.last().unwrap()));
                    added += 1;
                }
            }
        }
        if added == 0 {
            return Err(fail());
        }
        iteration += 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrylovBound {
    pub state: usize,
    pub dim: usize,
    pub tan_theta: f64,
    pub gamma: f64,
    pub chebyshev: f64,
    /// `L_μ⁽ⁿ⁾`; 1 for the ground state.
    pub l_factor: f64,
    pub bound: f64,
    /// `Ẽ_μ⁽ⁿ⁾ − E_μ` from `n`-step Lanczos.
    pub measured: f64,
    pub applicable: bool,
    pub satisfied: bool,
}

/// Kaniel–Paige (`μ = 0`) or Saad (`μ > 0`) bound for an `n`-dimensional
/// Krylov space, evaluated in the eigenbasis.
///
/// `overlaps[k] = ⟨Ψ_k|v₀⟩` with `eigenvalues` ascending.
pub fn kaniel_paige_saad(eigenvalues: &[f64], overlaps: &[C64], n: usize, mu: usize) -> Result<KrylovBound> {
    let d = eigenvalues.len();
    if overlaps.len() != d {
        return Err(Error::Mismatch("overlap count differs from spectrum size".into()));
    }
    if d < 2 || mu + 1 >= d || n == 0 || n > d {
        return Err(Error::Domain(format!("state {mu}, dimension {n} invalid for a {d}-level spectrum")));
    }
    let v0_norm = linalg::norm(overlaps);
    if v0_norm == 0.0 {
        return Err(Error::Domain("zero start vector".into()));
    }
    let top = eigenvalues[d - 1];
    let e_mu = eigenvalues[mu];
    let c = linalg::cabs(overlaps[mu]) / v0_norm;
    let mut out = KrylovBound {
        state: mu,
        dim: n,
        tan_theta: f64::INFINITY,
        gamma: f64::NAN,
        chebyshev: f64::NAN,
        l_factor: f64::NAN,
        bound: f64::INFINITY,
        measured: f64::NAN,
        applicable: false,
        satisfied: false,
    };
    if c <= 1e-14 || n < mu + 1 {
        return Ok(out);
    }
    let op = DenseOperator::diagonal_of(eigenvalues);
    let (form, _) = lanczos(&op, overlaps, n, true)?;
    let ritz = form.ritz_values();
    if ritz.len() <= mu {
        return Ok(out);
    }
    out.measured = ritz[mu] - e_mu;
    out.tan_theta = (1.0 - c * c).max(0.0).sqrt() / c;
    let next = eigenvalues[mu + 1];
    out.gamma = if mu == 0 {
        1.0 + 2.0 * (next - e_mu) / (top - next)
    } else {
        1.0 + (next - e_mu) / (top - next)
    };
    if !out.gamma.is_finite() {
        // E_{μ+1} = E_{D−1}: the space beyond μ is one level
        out.gamma = f64::INFINITY;
    }
    out.chebyshev = linalg::chebyshev_t(n - 1 - mu, out.gamma);
    out.l_factor = (0..mu)
        .map(|nu| ((top - ritz[nu]) / (e_mu - ritz[nu])).abs())
        .product();
    let ratio = if out.tan_theta == 0.0 {
        0.0
    } else {
        out.l_factor * out.tan_theta / out.chebyshev
    };
    out.bound = (top - e_mu) * ratio * ratio;
    out.applicable = out.bound.is_finite();
    let slack = 1e-10 * (top - eigenvalues[0]).abs().max(1.0);
    out.satisfied = out.applicable && out.measured >= -slack && out.measured <= out.bound + slack;
    Ok(out)
}

/// Convenience: overlaps of a sector vector with the exact eigenbasis of `ham`.
pub fn eigenbasis_overlaps(ham: &SectorHamiltonian, v0: &FockVector) -> Result<(Vec<f64>, Vec<C64>)> {
    let prop = crate::fock::ExactPropagator::new(ham)?;
    let c = prop.to_eigenbasis(&v0.amplitudes);
    Ok((prop.eigenvalues().to_vec(), c))
}
