//! Thresholded solver for `H C = S C Ẽ` plus conditioning and perturbation
//! diagnostics.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, C64};

pub const DEFAULT_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    Generic,
    /// Monomial Krylov basis `{Hᵅ v₀}`; enables the Beckermann–Townsend check.
    PowerKrylov,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub method: String,
    pub kind: BasisKind,
    pub params: Vec<(String, f64)>,
}

impl Provenance {
    pub fn new(method: &str) -> Self {
        Self {
            method: method.into(),
            kind: BasisKind::Generic,
            params: Vec::new(),
        }
    }

    pub fn power_krylov(method: &str) -> Self {
        Self {
            kind: BasisKind::PowerKrylov,
            ..Self::new(method)
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.push((key.into(), value));
        self
    }
}

/// Per-entry standard deviations of sampled matrix elements.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseStd {
    pub h: DMatrix<f64>,
    pub s: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceProblem {
    pub hmat: DMatrix<C64>,
    pub smat: DMatrix<C64>,
    pub provenance: Provenance,
    pub noise: Option<NoiseStd>,
}

impl SubspaceProblem {
    /// Validates and symmetrizes `(H, S)`.
    pub fn new(hmat: DMatrix<C64>, smat: DMatrix<C64>, provenance: Provenance) -> Result<Self> {
        let n = hmat.nrows();
        if hmat.ncols() != n || smat.nrows() != n || smat.ncols() != n {
            return Err(Error::Mismatch(format!(
                "H is {}×{} and S is {}×{}",
                hmat.nrows(),
                hmat.ncols(),
                smat.nrows(),
                smat.ncols()
            )));
        }
        if !linalg::all_finite(&hmat) || !linalg::all_finite(&smat) {
            return Err(Error::Data("subspace matrices contain NaN or Inf".into()));
        }
        Ok(Self {
            hmat: linalg::hermitize(&hmat),
            smat: linalg::hermitize(&smat),
            provenance,
            noise: None,
        })
    }

    pub fn with_noise(mut self, noise: NoiseStd) -> Result<Self> {
        let n = self.dim();
        if noise.h.shape() != (n, n) || noise.s.shape() != (n, n) {
            return Err(Error::Mismatch("noise matrices do not match the problem size".into()));
        }
        self.noise = Some(noise);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.hmat.nrows()
    }

    /// Problem restricted to the first `k` basis vectors.
    pub fn leading(&self, k: usize) -> SubspaceProblem {
        let k = k.min(self.dim());
        SubspaceProblem {
            hmat: self.hmat.view((0, 0), (k, k)).into_owned(),
            smat: self.smat.view((0, 0), (k, k)).into_owned(),
            provenance: self.provenance.clone(),
            noise: self.noise.as_ref().map(|n| NoiseStd {
                h: n.h.view((0, 0), (k, k)).into_owned(),
                s: n.s.view((0, 0), (k, k)).into_owned(),
            }),
        }
    }

    /// Smallest eigenvalue of `S`.
    pub fn min_overlap_eigenvalue(&self) -> f64 {
        linalg::hermitian_eigen(&self.smat).0.first().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeevSolution {
    pub threshold: f64,
    pub retained_dim: usize,
    pub eigenvalues: Vec<f64>,
    /// `n × n_ε`, columns are `S`-orthonormal eigenvectors in the original basis.
    pub coefficients: DMatrix<C64>,
    pub overlap_eigenvalues: Vec<f64>,
    pub cond_before: f64,
    pub cond_after: f64,
}

impl GeevSolution {
    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }
}

fn condition_from_eigenvalues(vals: &[f64]) -> f64 {
    let max = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = vals.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if vals.is_empty() {
        1.0
    } else if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Projects onto eigenvectors of `S` with eigenvalue above `eps`, whitens,
/// and solves the reduced Hermitian eigenproblem.
pub fn solve(prob: &SubspaceProblem, eps: f64) -> Result<GeevSolution> {
    if !(eps >= 0.0) {
        return Err(Error::Domain(format!("threshold {eps} must be non-negative")));
    }
    let n = prob.dim();
    let (lam, v) = linalg::hermitian_eigen(&prob.smat);
    let keep: Vec<usize> = (0..n).filter(|&k| lam[k] > eps).collect();
    let largest = lam.last().copied().unwrap_or(0.0);
    if keep.is_empty() {
        return Err(Error::EmptySubspace { threshold: eps, largest });
    }
    let ne = keep.len();
    let t = DMatrix::from_fn(n, ne, |i, j| v[(i, keep[j])] / C64::new(lam[keep[j]].sqrt(), 0.0));
    let reduced = t.adjoint() * &prob.hmat * &t;
    let (vals, y) = linalg::hermitian_eigen(&reduced);
    let coefficients = &t * y;
    let retained: Vec<f64> = keep.iter().map(|&k| lam[k]).collect();
    Ok(GeevSolution {
        threshold: eps,
        retained_dim: ne,
        eigenvalues: vals,
        coefficients,
        overlap_eigenvalues: lam.clone(),
        cond_before: condition_from_eigenvalues(&lam),
        cond_after: condition_from_eigenvalues(&retained),
    })
}

/// `max(1e-12, 2·median(σ)·√n)` when per-entry noise is known, else `1e-12`.
pub fn default_threshold(prob: &SubspaceProblem) -> f64 {
    match &prob.noise {
        None => DEFAULT_THRESHOLD,
        Some(noise) => {
            let mut all: Vec<f64> = noise.h.iter().chain(noise.s.iter()).copied().collect();
            if all.is_empty() {
                return DEFAULT_THRESHOLD;
            }
            all.sort_by(|a, b| a.total_cmp(b));
            let k = all.len();
            let median = if k % 2 == 1 {
                all[k / 2]
            } else {
                0.5 * (all[k / 2 - 1] + all[k / 2])
            };
            DEFAULT_THRESHOLD.max(2.0 * median * (prob.dim() as f64).sqrt())
        }
    }
}

/// Beckermann–Townsend lower bound on `σ₀(S)/σ_{2k}(S)` for a real positive
/// Hankel `S` of size `n`, with `k = ⌊(n−1)/2⌋`.
pub fn beckermann_townsend_bound(n: usize) -> f64 {
    if n < 2 {
        return 1.0;
    }
    let parity = (n % 2) as f64;
    let k = ((n - 1) / 2) as f64;
    let base = (core::f64::consts::PI.powi(2)
        / (4.0 * (4.0 * (n as f64 - parity) / core::f64::consts::PI).ln()))
    .exp();
    0.25 * base.powf(k - parity)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditioningReport {
    pub cond: f64,
    /// Descending.
    pub singular_values: Vec<f64>,
    pub bt_bound: Option<f64>,
    pub bt_satisfied: Option<bool>,
}

pub fn conditioning_report(prob: &SubspaceProblem) -> ConditioningReport {
    let sv = linalg::hermitian_singular_values(&prob.smat);
    let cond = match (sv.first(), sv.last()) {
        (Some(&a), Some(&b)) if b > 0.0 => a / b,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    };
    let (bt_bound, bt_satisfied) = match prob.provenance.kind {
        BasisKind::PowerKrylov => {
            let b = beckermann_townsend_bound(prob.dim());
            (Some(b), Some(cond >= b))
        }
        BasisKind::Generic => (None, None),
    };
    ConditioningReport {
        cond,
        singular_values: sv,
        bt_bound,
        bt_satisfied,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChiSource {
    NoiseStd,
    Eta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationBound {
    pub retained_dim: usize,
    /// Smallest retained overlap eigenvalue.
    pub lambda_eps: f64,
    pub d0: f64,
    pub chi: f64,
    pub chi_source: ChiSource,
    /// Implied constant used for the big-O relations (always 1).
    pub constant: f64,
    /// Bound on `|atan Ẽ̃₀ − atan Ẽ₀|`.
    pub bound: f64,
    pub applicable: bool,
    /// Lowest eigenvalue of the thresholded pair.
    pub ground_energy: f64,
}

/// Mathias–Li bound for the thresholded pair `(A, B) = (V_ε†HV_ε, V_ε†SV_ε)`.
///
/// `χ` is `sqrt(Σσ_H² + Σσ_S²)` when the problem carries per-entry noise,
/// otherwise `η^{1/(1+α)}/n`.
pub fn perturbation_bound(prob: &SubspaceProblem, eps: f64, eta: f64, alpha: f64) -> Result<PerturbationBound> {
    if !(0.0..=0.5).contains(&alpha) {
        return Err(Error::Domain(format!("exponent α = {alpha} outside [0, 1/2]")));
    }
    let n = prob.dim();
    let (lam, v) = linalg::hermitian_eigen(&prob.smat);
    let keep: Vec<usize> = (0..n).filter(|&k| lam[k] > eps).collect();
    if keep.is_empty() {
        return Err(Error::EmptySubspace {
            threshold: eps,
            largest: lam.last().copied().unwrap_or(0.0),
        });
    }
    let ne = keep.len();
    let ve = DMatrix::from_fn(n, ne, |i, j| v[(i, keep[j])]);
    let a = linalg::hermitize(&(ve.adjoint() * &prob.hmat * &ve));
    let bdiag: Vec<f64> = keep.iter().map(|&k| lam[k]).collect();
    let lambda_eps = bdiag.iter().fold(f64::INFINITY, |m, &x| m.min(x));
    // whitened eigenproblem gives the pair's eigenvectors
    let w = DMatrix::from_fn(ne, ne, |i, j| {
        a[(i, j)] / C64::new((bdiag[i] * bdiag[j]).sqrt(), 0.0)
    });
    let (vals, y) = linalg::hermitian_eigen(&w);
    let mut x0: Vec<C64> = (0..ne).map(|i| y[(i, 0)] / C64::new(bdiag[i].sqrt(), 0.0)).collect();
    linalg::normalize(&mut x0);
    let xa: C64 = (0..ne)
        .flat_map(|i| (0..ne).map(move |j| (i, j)))
        .fold(linalg::ZERO, |acc, (i, j)| acc + x0[i].conj() * a[(i, j)] * x0[j]);
    let xb: f64 = (0..ne).map(|i| x0[i].norm_sqr() * bdiag[i]).sum();
    let d0 = xa.re.hypot(xb);

    let (chi, chi_source) = match &prob.noise {
        Some(noise) => {
            let s2: f64 = noise.h.iter().chain(noise.s.iter()).map(|s| s * s).sum();
            (s2.sqrt(), ChiSource::NoiseStd)
        }
        None => (eta.max(0.0).powf(1.0 / (1.0 + alpha)) / n as f64, ChiSource::Eta),
    };
    let nef = ne as f64;
    let mut applicable = 2.0 * nef * nef * chi * chi <= lambda_eps * lambda_eps;
    if applicable && ne > 1 && chi > 0.0 {
        let gap = (vals[1].atan() - vals[0].atan()).abs();
        applicable = gap >= (nef * chi / lambda_eps).min(1.0).asin();
    }
    let ratio = core::f64::consts::SQRT_2 * nef * chi / d0;
    let bound = if ratio >= 1.0 {
        applicable = false;
        core::f64::consts::FRAC_PI_2
    } else {
        ratio.asin()
    };
    Ok(PerturbationBound {
        retained_dim: ne,
        lambda_eps,
        d0,
        chi,
        chi_source,
        constant: 1.0,
        bound,
        applicable,
        ground_energy: vals[0],
    })
}
