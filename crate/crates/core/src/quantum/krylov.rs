//! Chebyshev and Gaussian-power Krylov bases.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::classical::HermitianOperator;
use crate::error::{Error, Result};
use crate::fock::{ExactPropagator, FockVector, SectorHamiltonian};
use crate::geev::{BasisKind, Provenance, SubspaceProblem};
use crate::linalg::{self, C64};

pub const RESCALING_TOL: f64 = 1e-8;

/// Gershgorin interval `[a, b]` containing the spectrum of `ham`.
pub fn gershgorin_bounds(ham: &SectorHamiltonian) -> Result<(f64, f64)> {
    let m = ham.dense_matrix()?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..m.nrows() {
        let r: f64 = (0..m.ncols()).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
        lo = lo.min(m[(i, i)] - r);
        hi = hi.max(m[(i, i)] + r);
    }
    if lo == hi {
        hi = lo + 1.0;
    }
    Ok((lo, hi))
}

#[derive(Debug, Clone)]
pub struct ChebyshevOutput {
    /// Problem in hartree.
    pub problem: SubspaceProblem,
    /// `H̄` block before undoing the rescaling.
    pub rescaled: DMatrix<C64>,
    /// `f_k = ⟨v₀|T_k(H̄)|v₀⟩`, `k = 0..2n`.
    pub moments: Vec<f64>,
    pub bounds: (f64, f64),
}

/// Krylov space spanned by `T_α(H̄)v₀`, `α = 0..n`, with
/// `H̄ = (2H − (a+b))/(b − a)`.
pub fn chebyshev_krylov_build(op: &impl HermitianOperator, v0: &[C64], n: usize, bounds: (f64, f64)) -> Result<ChebyshevOutput> {
    let (a, b) = bounds;
    if !(b > a) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!("spectral bounds [{a}, {b}] are not an interval")));
    }
    if n == 0 || v0.len() != op.dim() {
        return Err(Error::Domain(format!("need n ≥ 1 and a start vector of length {}", op.dim())));
    }
    let mut w0 = v0.to_vec();
    if linalg::normalize(&mut w0) == 0.0 {
        return Err(Error::Domain("zero start vector".into()));
    }
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let hbar = |v: &[C64]| -> Vec<C64> {
        op.apply(v)
            .into_iter()
            .zip(v)
            .map(|(hv, x)| (hv - *x * mid) / half)
            .collect()
    };
    let w1 = hbar(&w0);
    let f0 = 1.0;
    let f1 = linalg::dot(&w0, &w1).re;
    let mut f = alloc::vec![0.0; 2 * n];
    f[0] = f0;
    f[1] = f1;
    let mut prev = w0;
    let mut cur = w1;
    for k in 1..n {
        let mut next = hbar(&cur);
        for (x, p) in next.iter_mut().zip(&prev) {
            *x = *x * 2.0 - p;
        }
        f[2 * k] = 2.0 * linalg::norm_sqr(&cur) - f0;
        f[2 * k + 1] = 2.0 * linalg::dot(&cur, &next).re - f1;
        prev = core::mem::replace(&mut cur, next);
    }
    if let Some(k) = (0..f.len()).find(|&k| f[k].abs() > 1.0 + RESCALING_TOL) {
        return Err(Error::Domain(format!(
            "moment f_{k} = {:.6} escapes [-1, 1]: spectrum not inside [{a}, {b}]",
            f[k]
        )));
    }
    let fk = |k: usize| f[k];
    let s_at = |x: usize, y: usize| 0.5 * (fk(x + y) + fk(x.abs_diff(y)));
    let s = DMatrix::from_fn(n, n, |x, y| s_at(x, y));
    let hb = DMatrix::from_fn(n, n, |x, y| {
        if y == 0 {
            s_at(x, 1)
        } else {
            0.5 * (s_at(x, y + 1) + s_at(x, y - 1))
        }
    });
    let h = hb.map(|x| x * half) + s.map(|x| x * mid);
    let rescaled = linalg::real_to_complex(&hb);
    let prov = Provenance::new("chebyshev-krylov").with("a", a).with("b", b).with("n", n as f64);
    Ok(ChebyshevOutput {
        problem: SubspaceProblem::new(linalg::real_to_complex(&h), linalg::real_to_complex(&s), prov)?,
        rescaled,
        moments: f,
        bounds,
    })
}

#[derive(Debug, Clone)]
pub struct GaussianPowerOutput {
    pub problem: SubspaceProblem,
    pub shift: f64,
    pub basis: Vec<FockVector>,
    /// `‖v_α‖` for normalized `v₀`.
    pub norms: Vec<f64>,
    /// `(α/(eτ²))^{α/2}`, the maximum of `|x|^α e^{−x²τ²/2}`.
    pub norm_bounds: Vec<f64>,
}

/// `v_α = (H − E₀)^α e^{−(H−E₀)²τ²/2} v₀` built in the eigenbasis of `prop`.
/// `shift = None` uses the Rayleigh quotient of `v₀`.
pub fn gaussian_power_build(prop: &ExactPropagator, v0: &FockVector, n: usize, tau: f64, shift: Option<f64>) -> Result<GaussianPowerOutput> {
    if n == 0 || !tau.is_finite() || tau < 0.0 {
        return Err(Error::Domain(format!("need n ≥ 1 and τ ≥ 0 (got {n}, {tau})")));
    }
    let evals = prop.eigenvalues();
    if v0.amplitudes.len() != evals.len() {
        return Err(Error::Mismatch("start vector and propagator dimensions differ".into()));
    }
    let v0 = v0.clone().normalized();
    let c = prop.to_eigenbasis(&v0.amplitudes);
    let e_shift = match shift {
        Some(e) => e,
        None => c.iter().zip(evals).map(|(x, e)| x.norm_sqr() * e).sum(),
    };
    let mut basis = Vec::with_capacity(n);
    let mut norms = Vec::with_capacity(n);
    let mut norm_bounds = Vec::with_capacity(n);
    for alpha in 0..n {
        let ca: Vec<C64> = c
            .iter()
            .zip(evals)
            .map(|(x, e)| {
                let d = e - e_shift;
                *x * (d.powi(alpha as i32) * (-0.5 * d * d * tau * tau).exp())
            })
            .collect();
        norms.push(linalg::norm(&ca));
        norm_bounds.push(if alpha == 0 {
            1.0
        } else {
            (alpha as f64 / (core::f64::consts::E * tau * tau)).powf(0.5 * alpha as f64)
        });
        basis.push(FockVector {
            sector: v0.sector,
            amplitudes: prop.from_eigenbasis(&ca),
        });
    }
    let coeffs: Vec<Vec<C64>> = basis.iter().map(|b| prop.to_eigenbasis(&b.amplitudes)).collect();
    let s = DMatrix::from_fn(n, n, |a, b| linalg::dot(&coeffs[a], &coeffs[b]));
    let h = DMatrix::from_fn(n, n, |a, b| {
        coeffs[a]
            .iter()
            .zip(&coeffs[b])
            .zip(evals)
            .fold(linalg::ZERO, |acc, ((x, y), e)| acc + x.conj() * *y * *e)
    });
    let mut prov = Provenance::new("gaussian-power").with("tau", tau).with("shift", e_shift).with("n", n as f64);
    if tau == 0.0 {
        prov.kind = BasisKind::PowerKrylov;
    }
    Ok(GaussianPowerOutput {
        problem: SubspaceProblem::new(h, s, prov)?,
        shift: e_shift,
        basis,
        norms,
        norm_bounds,
    })
}
