//! Small deterministic Hamiltonians used by tests, examples and the CLI.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::integrals::MolecularIntegrals;
use crate::linalg::C64;

/// H₂-like minimal-basis integrals near equilibrium (molecular-orbital basis).
pub fn h2_sto3g() -> MolecularIntegrals {
    let mut ints = MolecularIntegrals::zeros(2, 1, 1).expect("valid counts");
    ints.set_e_nuc(0.7137539936876182);
    ints.set_h(0, 0, -1.2524635735648981);
    ints.set_h(1, 1, -0.4759487063420656);
    ints.set_eri(0, 0, 0, 0, 0.6744887663568382);
    ints.set_eri(1, 1, 1, 1, 0.6973979494693556);
    ints.set_eri(0, 0, 1, 1, 0.6634424628483161);
    ints.set_eri(0, 1, 0, 1, 0.1812790537622811);
    ints
}

/// Random real integrals with a positive semidefinite two-body tensor
/// `(pr|qs) = Σ_γ B^γ_pr B^γ_qs` and a one-body matrix whose diagonal
/// increases with the orbital index, so low orbitals look "occupied".
pub fn random_integrals(m: usize, num_up: usize, num_down: usize, seed: u64) -> MolecularIntegrals {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut ints = MolecularIntegrals::zeros(m, num_up, num_down).expect("valid counts");
    ints.set_e_nuc(rng.random_range(0.2..1.0));
    for p in 0..m {
        ints.set_h(p, p, -1.5 + 0.6 * p as f64 + rng.random_range(-0.1..0.1));
        for r in 0..p {
            ints.set_h(p, r, rng.random_range(-0.15..0.15));
        }
    }
    let rank = m + 1;
    let factors: Vec<DMatrix<f64>> = (0..rank)
        .map(|_| {
            let mut b = DMatrix::zeros(m, m);
            for p in 0..m {
                b[(p, p)] = rng.random_range(0.2..0.6);
                for r in 0..p {
                    let v = rng.random_range(-0.1..0.1);
                    b[(p, r)] = v;
                    b[(r, p)] = v;
                }
            }
            b
        })
        .collect();
    for p in 0..m {
        for r in 0..=p {
            for q in 0..m {
                for s in 0..=q {
                    let v: f64 = factors.iter().map(|b| b[(p, r)] * b[(q, s)]).sum();
                    ints.set_eri(p, r, q, s, v);
                }
            }
        }
    }
    ints
}

/// Integrals with only one-body terms (plus `e_nuc`).
pub fn random_one_body(m: usize, num_up: usize, num_down: usize, seed: u64) -> MolecularIntegrals {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut ints = MolecularIntegrals::zeros(m, num_up, num_down).expect("valid counts");
    ints.set_e_nuc(rng.random_range(0.0..1.0));
    for p in 0..m {
        for r in 0..=p {
            ints.set_h(p, r, rng.random_range(-1.0..1.0));
        }
    }
    ints
}

/// Random Hermitian `n × n` matrix with entries of order one.
pub fn random_hermitian(n: usize, seed: u64) -> DMatrix<C64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut m = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for i in 0..n {
        m[(i, i)] = C64::new(rng.random_range(-1.0..1.0), 0.0);
        for j in 0..i {
            let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

/// Random complex vector with unit norm.
pub fn random_unit_vector(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut v: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let nrm = crate::linalg::norm(&v);
    for x in v.iter_mut() {
        *x /= C64::new(nrm, 0.0);
    }
    v
}

/// Random real vector with unit norm.
pub fn random_real_unit_vector(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nrm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
    raw.iter().map(|&x| C64::new(x / nrm, 0.0)).collect()
}

/// The named fixture set used by the oracle-consistency checks.
pub fn standard_set() -> Vec<(&'static str, MolecularIntegrals)> {
    vec![
        ("h2-sto3g", h2_sto3g()),
        ("m1-closed", random_integrals(1, 1, 1, 11)),
        ("m2-open", random_integrals(2, 1, 0, 12)),
        ("m2-closed", random_integrals(2, 1, 1, 13)),
        ("m3-triplet", random_integrals(3, 2, 0, 14)),
        ("m3-closed", random_integrals(3, 1, 1, 15)),
        ("m3-doublet", random_integrals(3, 2, 1, 16)),
    ]
}
