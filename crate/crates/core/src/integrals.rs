//! Spin-free molecular integrals: `E_nuc`, `h_pr` and chemists'-notation
//! `(pr|qs)`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;

fn pair(p: usize, r: usize) -> usize {
    if p >= r {
        p * (p + 1) / 2 + r
    } else {
        r * (r + 1) / 2 + p
    }
}

fn folded_index(p: usize, r: usize, q: usize, s: usize) -> usize {
    pair(pair(p, r), pair(q, s))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MolecularIntegrals {
    num_orbitals: usize,
    num_up: usize,
    num_down: usize,
    e_nuc: f64,
    one_body: DMatrix<f64>,
    /// Unique values under the 8-fold permutational symmetry.
    two_body: Vec<f64>,
}

impl MolecularIntegrals {
    /// All-zero integrals for `m` orbitals.
    pub fn zeros(m: usize, num_up: usize, num_down: usize) -> Result<Self> {
        if num_up > m || num_down > m {
            return Err(Error::Domain(format!(
                "electron counts ({num_up}, {num_down}) exceed {m} orbitals"
            )));
        }
        let npair = m * (m + 1) / 2;
        Ok(Self {
            num_orbitals: m,
            num_up,
            num_down,
            e_nuc: 0.0,
            one_body: DMatrix::zeros(m, m),
            two_body: vec![0.0; npair * (npair + 1) / 2],
        })
    }

    /// Builds integrals from a dense one-body matrix and a dense `M⁴` ERI array
    /// indexed `[((p*M + r)*M + q)*M + s] = (pr|qs)`, validating symmetries.
    pub fn from_dense(
        num_up: usize,
        num_down: usize,
        e_nuc: f64,
        one_body: DMatrix<f64>,
        eri: &[f64],
    ) -> Result<Self> {
        let m = one_body.nrows();
        if one_body.ncols() != m {
            return Err(Error::Mismatch("one-body matrix is not square".into()));
        }
        if eri.len() != m * m * m * m {
            return Err(Error::Mismatch(format!(
                "two-body array has {} entries, expected {}",
                eri.len(),
                m * m * m * m
            )));
        }
        let h_scale = one_body.amax().max(1.0);
        for p in 0..m {
            for r in 0..m {
                if (one_body[(p, r)] - one_body[(r, p)]).abs() > SYMMETRY_TOL * h_scale {
                    return Err(Error::Data(format!("one-body matrix not symmetric at ({p}, {r})")));
                }
            }
        }
        let at = |p: usize, r: usize, q: usize, s: usize| eri[((p * m + r) * m + q) * m + s];
        let v_scale = eri.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let mut out = Self::zeros(m, num_up, num_down)?;
        out.e_nuc = e_nuc;
        out.one_body = one_body;
        for p in 0..m {
            for r in 0..m {
                for q in 0..m {
                    for s in 0..m {
                        let v = at(p, r, q, s);
                        let images = [
                            at(r, p, q, s),
                            at(p, r, s, q),
                            at(r, p, s, q),
                            at(q, s, p, r),
                            at(s, q, p, r),
                            at(q, s, r, p),
                            at(s, q, r, p),
                        ];
                        if images.iter().any(|w| (w - v).abs() > SYMMETRY_TOL * v_scale) {
                            return Err(Error::Data(format!(
                                "two-body tensor breaks 8-fold symmetry at ({p}{r}|{q}{s})"
                            )));
                        }
                        out.two_body[folded_index(p, r, q, s)] = v;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn num_orbitals(&self) -> usize {
        self.num_orbitals
    }

    pub fn num_up(&self) -> usize {
        self.num_up
    }

    pub fn num_down(&self) -> usize {
        self.num_down
    }

    pub fn e_nuc(&self) -> f64 {
        self.e_nuc
    }

    pub fn one_body(&self) -> &DMatrix<f64> {
        &self.one_body
    }

    pub fn h(&self, p: usize, r: usize) -> f64 {
        self.one_body[(p, r)]
    }

    /// `(pr|qs)`
    pub fn eri(&self, p: usize, r: usize, q: usize, s: usize) -> f64 {
        self.two_body[folded_index(p, r, q, s)]
    }

    pub fn set_e_nuc(&mut self, e: f64) {
        self.e_nuc = e;
    }

    /// Sets `h_pr` and `h_rp`.
    pub fn set_h(&mut self, p: usize, r: usize, v: f64) {
        self.one_body[(p, r)] = v;
        self.one_body[(r, p)] = v;
    }

    /// Sets `(pr|qs)` together with all of its symmetric images.
    pub fn set_eri(&mut self, p: usize, r: usize, q: usize, s: usize, v: f64) {
        self.two_body[folded_index(p, r, q, s)] = v;
    }

    pub fn with_electrons(mut self, num_up: usize, num_down: usize) -> Result<Self> {
        if num_up > self.num_orbitals || num_down > self.num_orbitals {
            return Err(Error::Domain(format!(
                "electron counts ({num_up}, {num_down}) exceed {} orbitals",
                self.num_orbitals
            )));
        }
        self.num_up = num_up;
        self.num_down = num_down;
        Ok(self)
    }

    /// Returns a copy with `c` added to the nuclear repulsion, i.e. `H + c·I`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.e_nuc += c;
        out
    }

    /// Canonical unique ERI entries `(p, r, q, s, value)` with `p ≥ r`,
    /// `q ≥ s` and `pair(p,r) ≥ pair(q,s)`.
    pub fn unique_eri(&self) -> Vec<(usize, usize, usize, usize, f64)> {
        let m = self.num_orbitals;
        let mut out = Vec::new();
        for p in 0..m {
            for r in 0..=p {
                for q in 0..m {
                    for s in 0..=q {
                        if pair(q, s) > pair(p, r) {
                            continue;
                        }
                        out.push((p, r, q, s, self.eri(p, r, q, s)));
                    }
                }
            }
        }
        out
    }

    /// Dense `M⁴` copy of the two-body tensor in `[p][r][q][s]` order.
    pub fn eri_dense(&self) -> Vec<f64> {
        let m = self.num_orbitals;
        let mut out = vec![0.0; m * m * m * m];
        for p in 0..m {
            for r in 0..m {
                for q in 0..m {
                    for s in 0..m {
                        out[((p * m + r) * m + q) * m + s] = self.eri(p, r, q, s);
                    }
                }
            }
        }
        out
    }
}

/// Frozen-core restriction onto `active` orbitals with `core` orbitals doubly
/// occupied and folded into the core energy and an effective one-body term.
pub fn restrict_active_space(
    ints: &MolecularIntegrals,
    core: &[usize],
    active: &[usize],
) -> Result<MolecularIntegrals> {
    let m = ints.num_orbitals();
    let mut seen = vec![false; m];
    for &o in core.iter().chain(active) {
        if o >= m {
            return Err(Error::Domain(format!("orbital {o} outside [0, {m})")));
        }
        if seen[o] {
            return Err(Error::Domain(format!("orbital {o} listed twice in core/active sets")));
        }
        seen[o] = true;
    }
    let nc = core.len();
    if nc > ints.num_up() || nc > ints.num_down() {
        return Err(Error::Domain(format!(
            "{nc} core orbitals leave a negative electron count"
        )));
    }
    let nu = ints.num_up() - nc;
    let nd = ints.num_down() - nc;
    let ma = active.len();
    if nu > ma || nd > ma {
        return Err(Error::Domain(format!(
            "({nu}, {nd}) active electrons do not fit in {ma} active orbitals"
        )));
    }

    let mut e_core = ints.e_nuc();
    for &i in core {
        e_core += 2.0 * ints.h(i, i);
        for &j in core {
            e_core += 2.0 * ints.eri(i, i, j, j) - ints.eri(i, j, j, i);
        }
    }
    let mut out = MolecularIntegrals::zeros(ma, nu, nd)?;
    out.set_e_nuc(e_core);
    for (t, &ot) in active.iter().enumerate() {
        for (u, &ou) in active.iter().enumerate() {
            let mut v = ints.h(ot, ou);
            for &i in core {
                v += 2.0 * ints.eri(ot, ou, i, i) - ints.eri(ot, i, i, ou);
            }
            out.one_body[(t, u)] = v;
        }
    }
    for (t, &ot) in active.iter().enumerate() {
        for (u, &ou) in active.iter().enumerate() {
            for (v, &ov) in active.iter().enumerate() {
                for (w, &ow) in active.iter().enumerate() {
                    out.set_eri(t, u, v, w, ints.eri(ot, ou, ov, ow));
                }
            }
        }
    }
    Ok(out)
}

/// Low-rank factors with `Σ_γ L^γ_pr L^γ_qs ≈ (pr|qs)/2`.
#[derive(Debug, Clone)]
pub struct CholeskyFactors {
    pub factors: Vec<DMatrix<f64>>,
    pub residual_tol: f64,
    /// Max-norm of `(pr|qs)/2 − Σ_γ L^γ_pr L^γ_qs` after termination.
    pub residual: f64,
}

impl CholeskyFactors {
    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    /// `Σ_γ L^γ_pr L^γ_qs`
    pub fn reconstruct(&self, p: usize, r: usize, q: usize, s: usize) -> f64 {
        self.factors.iter().map(|l| l[(p, r)] * l[(q, s)]).sum()
    }
}

/// Pivoted Cholesky of `V_(pr),(qs) = (pr|qs)/2`, terminated once the largest
/// remaining diagonal is at most `tol`.
pub fn cholesky_decompose_eri(ints: &MolecularIntegrals, tol: f64) -> Result<CholeskyFactors> {
    let m = ints.num_orbitals();
    let n = m * m;
    let mut resid = DMatrix::from_fn(n, n, |a, b| {
        0.5 * ints.eri(a / m, a % m, b / m, b % m)
    });
    let mut factors = Vec::new();
    loop {
        let (mut piv, mut dmax, mut dmin) = (0usize, f64::NEG_INFINITY, f64::INFINITY);
        for a in 0..n {
            let d = resid[(a, a)];
            if d > dmax {
                dmax = d;
                piv = a;
            }
            dmin = dmin.min(d);
        }
        if dmin < -tol {
            return Err(Error::Decomposition(format!(
                "negative pivot {dmin:e} below -{tol:e}: ERI matrix is not positive semidefinite"
            )));
        }
        if n == 0 || dmax <= tol || factors.len() >= n {
            break;
        }
        let root = dmax.sqrt();
        let col: Vec<f64> = (0..n).map(|a| resid[(piv, a)] / root).collect();
        for a in 0..n {
            for b in 0..n {
                resid[(a, b)] -= col[a] * col[b];
            }
        }
        let l = DMatrix::from_fn(m, m, |p, r| 0.5 * (col[p * m + r] + col[r * m + p]));
        factors.push(l);
    }
    let residual = resid.amax();
    if residual > tol.max(0.0) * (1.0 + 1e-9) + f64::EPSILON {
        // A PSD residual is bounded entry-wise by its diagonal, so a large
        // off-diagonal remainder means the input had negative curvature.
        return Err(Error::Decomposition(format!(
            "residual entry {residual:e} exceeds tolerance {tol:e}: ERI matrix is not positive semidefinite"
        )));
    }
    Ok(CholeskyFactors {
        factors,
        residual_tol: tol,
        residual,
    })
}
