use nalgebra::DMatrix;
use proptest::prelude::*;
use qsubspace_core::fixtures;
use qsubspace_core::fock::{
    enumerate_configurations, exact_eigenpairs, ExactPropagator, FockVector, Sector,
    SectorHamiltonian, Time,
};
use qsubspace_core::integrals::{restrict_active_space, MolecularIntegrals};
use qsubspace_core::linalg::{self, C64};

/// Brute-force second-quantized operator algebra on mode words.
fn apply_string(word: u64, ops: &[(bool, usize)]) -> Option<(f64, u64)> {
    // ops listed left to right; the rightmost acts first
    let mut w = word;
    let mut sign = 1.0;
    for &(dagger, mode) in ops.iter().rev() {
        let occupied = w >> mode & 1 == 1;
        if dagger == occupied {
            return None;
        }
        let below = (w & ((1u64 << mode) - 1)).count_ones();
        if below % 2 == 1 {
            sign = -sign;
        }
        w ^= 1u64 << mode;
    }
    Some((sign, w))
}

fn dense_oracle(ints: &MolecularIntegrals) -> DMatrix<f64> {
    let m = ints.num_orbitals();
    let configs = enumerate_configurations(m, ints.num_up(), ints.num_down()).unwrap();
    let keys: Vec<u64> = configs.iter().map(|c| c.key(m)).collect();
    let d = keys.len();
    let pos = |w: u64| keys.iter().position(|&k| k == w);
    let mut h = DMatrix::zeros(d, d);
    for (col, &x) in keys.iter().enumerate() {
        h[(col, col)] += ints.e_nuc();
        for s in 0..2 {
            for p in 0..m {
                for r in 0..m {
                    if let Some((sg, y)) = apply_string(x, &[(true, p + s * m), (false, r + s * m)]) {
                        h[(pos(y).unwrap(), col)] += sg * ints.h(p, r);
                    }
                }
            }
        }
        for s in 0..2 {
            for t in 0..2 {
                for p in 0..m {
                    for r in 0..m {
                        for q in 0..m {
                            for u in 0..m {
                                let ops = [
                                    (true, p + s * m),
                                    (true, q + t * m),
                                    (false, u + t * m),
                                    (false, r + s * m),
                                ];
                                if let Some((sg, y)) = apply_string(x, &ops) {
                                    h[(pos(y).unwrap(), col)] += 0.5 * sg * ints.eri(p, r, q, u);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    h
}

fn spectral_radius(ham: &SectorHamiltonian) -> f64 {
    linalg::symmetric_eigen(&ham.dense_matrix().unwrap())
        .0
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()))
}

#[test]
fn slater_condon_matches_operator_algebra() {
    for (name, ints) in fixtures::standard_set() {
        let ham = SectorHamiltonian::new(&ints).unwrap();
        let err = (ham.dense_matrix().unwrap() - dense_oracle(&ints)).amax();
        assert!(err < 1e-12, "{name}: {err:e}");
    }
    let ints = fixtures::random_integrals(4, 2, 1, 77);
    let ham = SectorHamiltonian::new(&ints).unwrap();
    assert!((ham.dense_matrix().unwrap() - dense_oracle(&ints)).amax() < 1e-12);
}

#[test]
fn eigen_residual_and_trace() {
    let ints = fixtures::random_integrals(3, 2, 1, 5);
    let ham = SectorHamiltonian::new(&ints).unwrap();
    let d = ham.dim();
    let spec = ham.eigenpairs(d).unwrap();
    let hnorm = spectral_radius(&ham);
    for (e, v) in spec.eigenvalues.iter().zip(&spec.eigenvectors) {
        let hv = ham.apply(v).unwrap();
        let r: Vec<C64> = hv.amplitudes.iter().zip(&v.amplitudes).map(|(a, b)| a - b * *e).collect();
        assert!(linalg::norm(&r) <= 1e-10 * hnorm);
    }
    assert!(spec.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    let trace: f64 = spec.eigenvalues.iter().sum();
    let diag: f64 = ham.diagonal().iter().sum();
    assert!((trace - diag).abs() < 1e-9);
}

#[test]
fn dense_assembly_matches_apply() {
    let ints = fixtures::random_integrals(2, 1, 1, 9);
    let ham = SectorHamiltonian::new(&ints).unwrap();
    let d = ham.dim();
    let assembled = DMatrix::from_fn(d, d, |i, j| {
        ham.apply(&FockVector::basis_state(ham.sector(), j)).unwrap().amplitudes[i].re
    });
    let a = linalg::symmetric_eigen(&assembled).0;
    let b = exact_eigenpairs(&ints, d).unwrap().eigenvalues;
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn frozen_core_matches_restricted_fci() {
    let two = fixtures::random_integrals(2, 1, 1, 21);
    let three = fixtures::random_integrals(3, 2, 2, 22);
    for full in [two, three] {
        let m = full.num_orbitals();
        let active: Vec<usize> = (1..m).collect();
        let reduced = restrict_active_space(&full, &[0], &active).unwrap();
        let e_red = exact_eigenpairs(&reduced, 1).unwrap().eigenvalues[0];
        // full-space FCI over determinants with orbital 0 doubly occupied
        let ham = SectorHamiltonian::new(&full).unwrap();
        let dense = ham.dense_matrix().unwrap();
        let keep: Vec<usize> = ham
            .basis()
            .configurations()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.occ_up & 1 == 1 && c.occ_down & 1 == 1)
            .map(|(i, _)| i)
            .collect();
        let sub = DMatrix::from_fn(keep.len(), keep.len(), |i, j| dense[(keep[i], keep[j])]);
        let e_sub = linalg::symmetric_eigen(&sub).0[0];
        assert!((e_red - e_sub).abs() < 1e-10, "{e_red} vs {e_sub}");
    }
}

#[test]
fn imaginary_time_converges_to_ground_state() {
    let ints = fixtures::random_integrals(3, 1, 1, 31);
    let prop = ExactPropagator::from_integrals(&ints).unwrap();
    let e = prop.eigenvalues();
    let sector = Sector::of(&ints).unwrap();
    let v = FockVector::from_amplitudes(sector, fixtures::random_real_unit_vector(sector.dim(), 4)).unwrap();
    let tau = 40.0 / (e[1] - e[0]);
    let (out, raw) = prop.evolve(&v, Time::Imaginary(tau)).unwrap();
    let ov = linalg::cabs(prop.eigenvector(0).dot(&out));
    assert!(ov >= 1.0 - 1e-8);
    assert!((raw.ln() - prop.log_norm_imaginary(&v, tau)).abs() < 1e-10);
}

#[test]
fn real_time_identity_at_zero() {
    let ints = fixtures::h2_sto3g();
    let sector = Sector::of(&ints).unwrap();
    let v = FockVector::from_amplitudes(sector, fixtures::random_unit_vector(4, 2)).unwrap();
    let (out, _) = qsubspace_core::fock::evolve_exact(&ints, &v, Time::Real(0.0)).unwrap();
    for (a, b) in out.amplitudes.iter().zip(&v.amplitudes) {
        assert!(linalg::cabs(a - b) < 1e-14);
    }
}

fn random_vec(sector: Sector, seed: u64) -> FockVector {
    FockVector::from_amplitudes(sector, fixtures::random_unit_vector(sector.dim(), seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hermitian_consistency(seed in 0u64..10_000) {
        let ints = fixtures::random_integrals(3, 2, 1, seed);
        let ham = SectorHamiltonian::new(&ints).unwrap();
        let sector = ham.sector();
        let (u, v) = (random_vec(sector, seed + 1), random_vec(sector, seed + 2));
        let hu = ham.apply(&u).unwrap();
        let hv = ham.apply(&v).unwrap();
        let lhs = u.dot(&hv);
        let rhs = v.dot(&hu).conj();
        prop_assert!(linalg::cabs(lhs - rhs) <= 1e-10 * spectral_radius(&ham));
    }

    #[test]
    fn unitarity_and_composition(seed in 0u64..10_000, t1 in -3.0f64..3.0, t2 in -3.0f64..3.0) {
        let ints = fixtures::random_integrals(2, 1, 1, seed);
        let prop = ExactPropagator::from_integrals(&ints).unwrap();
        let v = random_vec(Sector::of(&ints).unwrap(), seed);
        let (a, n) = prop.evolve(&v, Time::Real(t1)).unwrap();
        prop_assert!((n - 1.0).abs() < 1e-12);
        let (ab, _) = prop.evolve(&a, Time::Real(t2)).unwrap();
        let (c, _) = prop.evolve(&v, Time::Real(t1 + t2)).unwrap();
        let diff: Vec<C64> = ab.amplitudes.iter().zip(&c.amplitudes).map(|(x, y)| x - y).collect();
        prop_assert!(linalg::norm(&diff) < 1e-10);
    }

    #[test]
    fn imaginary_time_energy_nonincreasing(seed in 0u64..10_000) {
        let ints = fixtures::random_integrals(3, 1, 1, seed);
        let ham = SectorHamiltonian::new(&ints).unwrap();
        let prop = ExactPropagator::new(&ham).unwrap();
        let v = random_vec(ham.sector(), seed);
        let mut last = f64::INFINITY;
        for k in 0..12 {
            let (s, _) = prop.evolve(&v, Time::Imaginary(0.25 * k as f64)).unwrap();
            let e = ham.rayleigh_quotient(&s).unwrap();
            prop_assert!(e <= last + 1e-12);
            last = e;
        }
    }
}
