//! Quantum equation-of-motion excitation energies.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use nalgebra::{DMatrix, Schur};

use super::{excitation_pool, sector_state, ExcitationLevel, ExcitationOperator};
use crate::engine::Statevector;
use crate::error::{Error, Result};
use crate::fock::{FockVector, SectorHamiltonian};
use crate::geev::{self, Provenance, SubspaceProblem};
use crate::integrals::MolecularIntegrals;
use crate::linalg::{self, C64, ZERO};

/// Pool operators with `‖F Φ‖` and `‖F† Φ‖` both below this are dropped.
pub const NULL_OPERATOR_TOL: f64 = 1e-12;
pub const DEFAULT_METRIC_THRESHOLD: f64 = 1e-10;

/// `M`, `Q`, `V`, `W` with double commutators in the symmetrized form
/// `[A, H, B] = ½([A,[H,B]] + [[A,H],B])`.
#[derive(Debug, Clone, PartialEq)]
pub struct EomBlocks {
    pub m: DMatrix<C64>,
    pub q: DMatrix<C64>,
    pub v: DMatrix<C64>,
    pub w: DMatrix<C64>,
}

impl EomBlocks {
    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// `[[M, Q], [Q*, M*]]` and `[[V, W], [−W*, −V*]]`.
    pub fn super_matrices(&self) -> (DMatrix<C64>, DMatrix<C64>) {
        let p = self.dim();
        let mut a = DMatrix::from_element(2 * p, 2 * p, ZERO);
        let mut b = DMatrix::from_element(2 * p, 2 * p, ZERO);
        for i in 0..p {
            for j in 0..p {
                a[(i, j)] = self.m[(i, j)];
                a[(i, j + p)] = self.q[(i, j)];
                a[(i + p, j)] = self.q[(i, j)].conj();
                a[(i + p, j + p)] = self.m[(i, j)].conj();
                b[(i, j)] = self.v[(i, j)];
                b[(i, j + p)] = self.w[(i, j)];
                b[(i + p, j)] = -self.w[(i, j)].conj();
                b[(i + p, j + p)] = -self.v[(i, j)].conj();
            }
        }
        (a, b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EomResult {
    pub blocks: EomBlocks,
    /// Operators kept after dropping those that annihilate `Φ` from both sides.
    pub pool: Vec<ExcitationOperator>,
    pub dropped: usize,
    pub tda: bool,
    /// All eigenvalues of the pencil, ascending (`±` pairs for the full problem).
    pub eigenvalues: Vec<f64>,
    /// Excitation energies `ΔẼ_μ`, ascending.
    pub excitations: Vec<f64>,
    /// Largest `|ω_k + ω_{2P−1−k}|` over the sorted full spectrum.
    pub pairing_defect: f64,
    pub max_imaginary: f64,
    /// Metric directions removed by thresholding; the TDA is the suggested
    /// fallback when this is non-zero.
    pub metric_dropped: usize,
}

struct Images {
    x: Vec<FockVector>,
    y: Vec<FockVector>,
    hx: Vec<FockVector>,
    hy: Vec<FockVector>,
    u: Vec<FockVector>,
    z: Vec<FockVector>,
}

fn blocks(ham: &SectorHamiltonian, phi: &FockVector, pool: &[ExcitationOperator]) -> Result<EomBlocks> {
    let basis = ham.basis();
    let hphi = ham.apply(phi)?;
    let mut im = Images {
        x: Vec::new(),
        y: Vec::new(),
        hx: Vec::new(),
        hy: Vec::new(),
        u: Vec::new(),
        z: Vec::new(),
    };
    for f in pool {
        let fd = f.adjoint();
        let x = f.apply(phi, basis);
        let y = fd.apply(phi, basis);
        im.hx.push(ham.apply(&x)?);
        im.hy.push(ham.apply(&y)?);
        im.u.push(f.apply(&hphi, basis));
        im.z.push(fd.apply(&hphi, basis));
        im.x.push(x);
        im.y.push(y);
    }
    let p = pool.len();
    let d = |a: &FockVector, b: &FockVector| a.dot(b);
    let half = C64::new(0.5, 0.0);
    let m = DMatrix::from_fn(p, p, |i, j| {
        d(&im.x[i], &im.hx[j]) + d(&im.y[j], &im.hy[i])
            - half * (d(&im.x[i], &im.u[j]) + d(&im.z[j], &im.y[i]) + d(&im.u[i], &im.x[j]) + d(&im.y[j], &im.z[i]))
    });
    let q = DMatrix::from_fn(p, p, |i, j| {
        -(d(&im.x[i], &im.hy[j]) + d(&im.x[j], &im.hy[i])
            - half * (d(&im.x[i], &im.z[j]) + d(&im.u[j], &im.y[i]) + d(&im.u[i], &im.y[j]) + d(&im.x[j], &im.z[i])))
    });
    let v = DMatrix::from_fn(p, p, |i, j| d(&im.x[i], &im.x[j]) - d(&im.y[j], &im.y[i]));
    let w = DMatrix::from_fn(p, p, |i, j| -(d(&im.x[i], &im.y[j]) - d(&im.x[j], &im.y[i])));
    Ok(EomBlocks {
        m: linalg::hermitize(&m),
        q,
        v: linalg::hermitize(&v),
        w,
    })
}

/// qEOM over the aufbau-relative singles (and doubles) pool.
pub fn qeom_build(state: &Statevector, ints: &MolecularIntegrals, level: ExcitationLevel, tda: bool) -> Result<EomResult> {
    let pool = excitation_pool(crate::fock::Sector::of(ints)?, level);
    qeom_build_with_pool(state, ints, &pool, tda, DEFAULT_METRIC_THRESHOLD)
}

pub fn qeom_build_with_pool(
    state: &Statevector,
    ints: &MolecularIntegrals,
    pool: &[ExcitationOperator],
    tda: bool,
    eps: f64,
) -> Result<EomResult> {
    let ham = SectorHamiltonian::new(ints)?;
    let mut phi = sector_state(state, ham.sector())?;
    if linalg::normalize(&mut phi.amplitudes) == 0.0 {
        return Err(Error::Domain("zero reference state".into()));
    }
    let kept: Vec<ExcitationOperator> = pool
        .iter()
        .copied()
        .filter(|f| {
            f.apply(&phi, ham.basis()).norm() >= NULL_OPERATOR_TOL
                || f.adjoint().apply(&phi, ham.basis()).norm() >= NULL_OPERATOR_TOL
        })
        .collect();
    let dropped = pool.len() - kept.len();
    if kept.is_empty() {
        return Err(Error::EmptySubspace { threshold: NULL_OPERATOR_TOL, largest: 0.0 });
    }
    let blocks = blocks(&ham, &phi, &kept)?;
    if tda {
        let prob = SubspaceProblem::new(blocks.m.clone(), blocks.v.clone(), Provenance::new("qeom-tda"))?;
        let sol = geev::solve(&prob, eps)?;
        let metric_dropped = kept.len() - sol.retained_dim;
        return Ok(EomResult {
            pool: kept,
            dropped,
            tda,
            excitations: sol.eigenvalues.clone(),
            eigenvalues: sol.eigenvalues,
            pairing_defect: 0.0,
            max_imaginary: 0.0,
            metric_dropped,
            blocks,
        });
    }
    let (a, b) = blocks.super_matrices();
    let (bvals, bvecs) = linalg::hermitian_eigen(&linalg::hermitize(&b));
    let keep: Vec<usize> = (0..bvals.len()).filter(|&k| bvals[k].abs() > eps).collect();
    if keep.is_empty() {
        return Err(Error::EmptySubspace {
            threshold: eps,
            largest: bvals.iter().fold(0.0f64, |x, v| x.max(v.abs())),
        });
    }
    let r = keep.len();
    let t = DMatrix::from_fn(2 * kept.len(), r, |i, j| {
        bvecs[(i, keep[j])] / C64::new(bvals[keep[j]].abs().sqrt(), 0.0)
    });
    let k = t.adjoint() * linalg::hermitize(&a) * &t;
    // J K with J the metric signature
    let jk = DMatrix::from_fn(r, r, |i, j| k[(i, j)] * bvals[keep[i]].signum());
    let schur = Schur::try_new(jk, 1e-14, 10_000)
        .ok_or_else(|| Error::Decomposition("qEOM eigenvalue iteration did not converge".into()))?;
    let (_, tri) = schur.unpack();
    let mut eigenvalues: Vec<f64> = (0..r).map(|i| tri[(i, i)].re).collect();
    let max_imaginary = (0..r).fold(0.0f64, |a, i| a.max(tri[(i, i)].im.abs()));
    eigenvalues.sort_by(|x, y| x.total_cmp(y));
    let pairing_defect = (0..r).fold(0.0f64, |a, i| a.max((eigenvalues[i] + eigenvalues[r - 1 - i]).abs()));
    let excitations = eigenvalues[r / 2..].to_vec();
    Ok(EomResult {
        pool: kept,
        dropped,
        tda,
        eigenvalues,
        excitations,
        pairing_defect,
        max_imaginary,
        metric_dropped: 2 * blocks.dim() - r,
        blocks,
    })
}
