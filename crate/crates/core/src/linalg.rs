//! Small dense helpers on top of nalgebra.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix};

pub type C64 = Complex<f64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// `⟨a|b⟩`, antilinear in the first argument.
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(ZERO, |acc, (x, y)| acc + x.conj() * y)
}

/// `|z|`
pub fn cabs(z: C64) -> f64 {
    z.re.hypot(z.im)
}

pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    norm_sqr(a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(v: &mut [C64], alpha: C64) {
    for x in v.iter_mut() {
        *x *= alpha;
    }
}

/// Normalizes in place and returns the previous norm.
pub fn normalize(v: &mut [C64]) -> f64 {
    let n = norm(v);
    if n > 0.0 {
        scale(v, C64::new(1.0 / n, 0.0));
    }
    n
}

/// `e^{iφ}`
pub fn cis(phi: f64) -> C64 {
    C64::new(phi.cos(), phi.sin())
}

/// `(M + M†)/2`
pub fn hermitize(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).scale(0.5)
}

/// Largest entry-wise deviation from Hermiticity.
pub fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max(cabs(m[(i, j)] - m[(j, i)].conj()));
        }
    }
    worst
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues ascending and
/// eigenvectors in the matching columns.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let eig = hermitize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Same as [`hermitian_eigen`] for real symmetric input.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let sym = (m + m.transpose()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Singular values of a Hermitian matrix (absolute eigenvalues), descending.
pub fn hermitian_singular_values(m: &DMatrix<C64>) -> Vec<f64> {
    let (vals, _) = hermitian_eigen(m);
    let mut sv: Vec<f64> = vals.iter().map(|v| v.abs()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Spectral norm of a Hermitian matrix.
pub fn hermitian_norm(m: &DMatrix<C64>) -> f64 {
    hermitian_singular_values(m).first().copied().unwrap_or(0.0)
}

/// Spectral norm of a general complex matrix via the Hermitian `M†M`.
pub fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    let g = m.adjoint() * m;
    hermitian_norm(&g).sqrt()
}

pub fn real_to_complex(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|x| C64::new(x, 0.0))
}

/// Largest entry modulus.
pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(cabs(*z)))
}

pub fn all_finite(m: &DMatrix<C64>) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Chebyshev polynomial of the first kind evaluated at `x`, stable for
/// `|x| > 1` where it grows like `cosh`.
pub fn chebyshev_t(k: usize, x: f64) -> f64 {
    if x.abs() <= 1.0 {
        (k as f64 * x.acos()).cos()
    } else if x > 1.0 {
        (k as f64 * x.acosh()).cosh()
    } else {
        let v = (k as f64 * (-x).acosh()).cosh();
        if k % 2 == 0 {
            v
        } else {
            -v
        }
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chebyshev_matches_recurrence() {
        for &x in &[-1.7, -0.3, 0.0, 0.8, 1.0, 2.5] {
            let (mut t0, mut t1) = (1.0, x);
            assert!((chebyshev_t(0, x) - 1.0).abs() < 1e-12);
            for k in 1..10 {
                let rel = (chebyshev_t(k, x) - t1).abs() / t1.abs().max(1.0);
                assert!(rel < 1e-10, "k={k} x={x}");
                let t2 = 2.0 * x * t1 - t0;
                t0 = t1;
                t1 = t2;
            }
        }
    }

    #[test]
    fn eigen_sorted_and_orthonormal() {
        let m = DMatrix::from_fn(4, 4, |i, j| {
            C64::new((i * j) as f64 + 1.0, i as f64 - j as f64)
        });
        let m = hermitize(&m);
        let (vals, vecs) = hermitian_eigen(&m);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let ortho = vecs.adjoint() * &vecs;
        assert!((ortho - DMatrix::identity(4, 4)).norm() < 1e-12);
        let recon = &vecs * DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            4,
            vals.iter().map(|&v| C64::new(v, 0.0)),
        )) * vecs.adjoint();
        assert!((recon - m).norm() < 1e-12);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(16, 8), 12870);
        assert_eq!(binomial(3, 4), 0);
    }
}
