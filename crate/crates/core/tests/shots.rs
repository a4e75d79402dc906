use qsubspace_core::engine::Statevector;
use qsubspace_core::fixtures;
use qsubspace_core::fock::{FockVector, SectorHamiltonian};
use qsubspace_core::geev::{self, SubspaceProblem};
use qsubspace_core::linalg::{self, C64};
use qsubspace_core::quantum::{qse_recipe, ExcitationLevel, DEFAULT_TERM_BUDGET};
use qsubspace_core::qubits::{GroupingMode, PauliString};
use qsubspace_core::shots::*;

fn correlated_h2_state() -> Statevector {
    let ints = fixtures::h2_sto3g();
    let ham = SectorHamiltonian::new(&ints).unwrap();
    let gs = &ham.eigenpairs(1).unwrap().eigenvectors[0];
    let mut amps = gs.amplitudes.clone();
    amps[1] += C64::new(0.2, 0.0);
    amps[2] += C64::new(-0.1, 0.0);
    Statevector::from_fock(&FockVector::from_amplitudes(gs.sector, amps).unwrap().normalized()).unwrap()
}

fn strings(list: &[&str]) -> Vec<PauliString> {
    list.iter().map(|s| PauliString::from_letters(s).unwrap()).collect()
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (mx, _) = mean_var(&lx);
    let (my, _) = mean_var(&ly);
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    num / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>()
}

#[test]
fn estimators_are_unbiased_over_many_seeds() {
    let state = Statevector::from_amplitudes(3, fixtures::random_unit_vector(8, 5)).unwrap();
    for (mode, group) in [
        (GroupingMode::Qubitwise, strings(&["ZZI", "ZIZ", "IZZ"])),
        (GroupingMode::Qubitwise, strings(&["XIX", "XYI", "IYX"])),
        (GroupingMode::Full, strings(&["XXI", "YYI", "ZZI"])),
    ] {
        let exact: Vec<f64> = group.iter().map(|p| state.pauli_expectation(p).re).collect();
        let runs: Vec<Vec<SampledEstimate>> = (0..1000)
            .map(|seed| sample_group(&state, &group, mode, 200, seed, 0).unwrap())
            .collect();
        for (k, e) in exact.iter().enumerate() {
            let means: Vec<f64> = runs.iter().map(|r| r[k].mean).collect();
            let pooled = (runs.iter().map(|r| r[k].std_error.powi(2)).sum::<f64>() / 1000.0).sqrt() / 1000f64.sqrt();
            let grand = means.iter().sum::<f64>() / 1000.0;
            assert!((grand - e).abs() <= 5.0 * pooled, "{mode:?} {k}: {grand} vs {e} (±{pooled})");
        }
    }
}

#[test]
fn variance_of_mean_scales_inversely_with_shots() {
    let state = Statevector::from_amplitudes(2, fixtures::random_unit_vector(4, 9)).unwrap();
    let group = strings(&["XX"]);
    let ns = [1e2, 1e3, 1e4, 1e5];
    let vars: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let means: Vec<f64> = (0..200)
                .map(|seed| sample_group(&state, &group, GroupingMode::Qubitwise, n as u64, seed, 3).unwrap()[0].mean)
                .collect();
            mean_var(&means).1
        })
        .collect();
    let s = slope(&ns, &vars);
    assert!((s + 1.0).abs() <= 0.1, "slope {s}: {vars:?}");
}

#[test]
fn reported_std_error_is_calibrated() {
    let state = Statevector::from_amplitudes(2, fixtures::random_unit_vector(4, 19)).unwrap();
    let group = strings(&["ZI", "IZ", "ZZ"]);
    let runs: Vec<Vec<SampledEstimate>> = (0..400)
        .map(|seed| sample_group(&state, &group, GroupingMode::Qubitwise, 500, seed, 1).unwrap())
        .collect();
    for k in 0..3 {
        let means: Vec<f64> = runs.iter().map(|r| r[k].mean).collect();
        let empirical = mean_var(&means).1.sqrt();
        let reported = runs.iter().map(|r| r[k].std_error).sum::<f64>() / runs.len() as f64;
        let ratio = reported / empirical;
        assert!((0.8..=1.2).contains(&ratio), "string {k}: ratio {ratio}");
    }
}

#[test]
fn identical_seeds_give_identical_estimates() {
    let recipe = qse_recipe(&correlated_h2_state(), &fixtures::h2_sto3g(), ExcitationLevel::Singles, DEFAULT_TERM_BUDGET).unwrap();
    let plan = ShotPlan::uniform(recipe.groups(GroupingMode::Qubitwise).len(), 1000, 42, GroupingMode::Qubitwise);
    let a = noisy_subspace(&recipe, &plan).unwrap();
    let b = noisy_subspace(&recipe, &plan).unwrap();
    assert_eq!(a.hmat, b.hmat);
    assert_eq!(a.smat, b.smat);
    let c = noisy_subspace(&recipe, &ShotPlan { seed: 43, ..plan }).unwrap();
    assert_ne!(a.hmat, c.hmat);
}

#[test]
fn huge_shot_counts_approach_exact_problem() {
    let recipe = qse_recipe(&correlated_h2_state(), &fixtures::h2_sto3g(), ExcitationLevel::SinglesDoubles, DEFAULT_TERM_BUDGET).unwrap();
    let exact = recipe.exact_problem().unwrap();
    let plan = ShotPlan::uniform(recipe.groups(GroupingMode::Full).len(), 10_000_000_000, 1, GroupingMode::Full);
    let noisy = noisy_subspace(&recipe, &plan).unwrap();
    assert!(linalg::max_abs(&(&noisy.hmat - &exact.hmat)) < 1e-3);
    assert!(linalg::max_abs(&(&noisy.smat - &exact.smat)) < 1e-3);
}

#[test]
fn allocation_meets_target_precision() {
    let recipe = qse_recipe(&correlated_h2_state(), &fixtures::h2_sto3g(), ExcitationLevel::Singles, DEFAULT_TERM_BUDGET).unwrap();
    let mode = GroupingMode::Qubitwise;
    let eps = 2e-2;
    let pilot = pilot_variances(&recipe, mode, DEFAULT_PILOT_SHOTS, 5).unwrap();
    let plan = allocate_shots(&pilot, eps, 0, mode).unwrap();
    let exact = exact_variances(&recipe, mode).unwrap();
    let runs: Vec<Vec<(C64, f64, f64)>> = (0..100)
        .map(|seed| sample_entries(&recipe, &ShotPlan { seed, ..plan.clone() }).unwrap())
        .collect();
    for d in 0..runs[0].len() {
        let predicted: f64 = exact[d].iter().zip(&plan.shots).map(|(v, m)| v / *m as f64).sum();
        let re: Vec<f64> = runs.iter().map(|r| r[d].0.re).collect();
        let im: Vec<f64> = runs.iter().map(|r| r[d].0.im).collect();
        let realized = mean_var(&re).1 + mean_var(&im).1;
        assert!(realized <= 2.0 * eps * eps, "entry {d}: {realized} (predicted {predicted})");
    }
}

fn propagated_std(prob: &SubspaceProblem, exact: &SubspaceProblem) -> (f64, f64) {
    let sol = geev::solve(exact, 1e-10).unwrap();
    let c = sol.coefficients.column(0);
    let e = sol.ground_energy();
    let noise = prob.noise.as_ref().unwrap();
    let n = prob.dim();
    let mut var = 0.0;
    for i in 0..n {
        for j in i..n {
            let w = (c[i].norm_sqr() * c[j].norm_sqr()) * if i == j { 1.0 } else { 4.0 };
            var += w * (noise.h[(i, j)].powi(2) + e * e * noise.s[(i, j)].powi(2));
        }
    }
    (e, var.sqrt())
}

#[test]
fn noisy_qse_ground_energy_coverage() {
    let recipe = qse_recipe(&correlated_h2_state(), &fixtures::h2_sto3g(), ExcitationLevel::SinglesDoubles, DEFAULT_TERM_BUDGET).unwrap();
    let exact = recipe.exact_problem().unwrap();
    let mode = GroupingMode::Qubitwise;
    let groups = recipe.groups(mode).len();
    let mut covered = 0;
    for seed in 0..100 {
        let noisy = noisy_subspace(&recipe, &ShotPlan::uniform(groups, 100_000, seed, mode)).unwrap();
        let (e_exact, std) = propagated_std(&noisy, &exact);
        let e = geev::solve(&noisy, geev::default_threshold(&noisy)).unwrap().ground_energy();
        if (e - e_exact).abs() <= 5.0 * std {
            covered += 1;
        }
    }
    assert!(covered >= 95, "{covered}/100");
}

#[test]
fn sampled_entries_lie_within_five_sigma() {
    let recipe = qse_recipe(&correlated_h2_state(), &fixtures::h2_sto3g(), ExcitationLevel::SinglesDoubles, DEFAULT_TERM_BUDGET).unwrap();
    let exact = recipe.exact_problem().unwrap();
    let mode = GroupingMode::Full;
    let groups = recipe.groups(mode).len();
    let (mut inside, mut total) = (0, 0);
    for seed in 0..20 {
        let noisy = noisy_subspace(&recipe, &ShotPlan::uniform(groups, 20_000, seed, mode)).unwrap();
        let noise = noisy.noise.as_ref().unwrap();
        for (m, e, std) in [(&noisy.hmat, &exact.hmat, &noise.h), (&noisy.smat, &exact.smat, &noise.s)] {
            for i in 0..noisy.dim() {
                for j in 0..noisy.dim() {
                    total += 1;
                    if linalg::cabs(m[(i, j)] - e[(i, j)]) <= 5.0 * std[(i, j)] + 1e-12 {
                        inside += 1;
                    }
                }
            }
        }
    }
    assert!(inside as f64 >= 0.99 * total as f64, "{inside}/{total}");
}

#[test]
fn noise_stds_are_symmetric_and_nonnegative() {
    let recipe = qse_recipe(&correlated_h2_state(), &fixtures::h2_sto3g(), ExcitationLevel::Singles, DEFAULT_TERM_BUDGET).unwrap();
    let plan = ShotPlan::uniform(recipe.groups(GroupingMode::Qubitwise).len(), 300, 9, GroupingMode::Qubitwise);
    let p = noisy_subspace(&recipe, &plan).unwrap();
    let noise = p.noise.as_ref().unwrap();
    assert_eq!(noise.h, noise.h.transpose());
    assert!(noise.s.iter().all(|x| *x >= 0.0));
    assert!(linalg::hermiticity_defect(&p.hmat) < 1e-14);
    assert_eq!(p.provenance.params.iter().find(|(k, _)| k == "total_shots").map(|x| x.1), Some(plan.total_shots() as f64));
}

#[test]
fn full_grouping_needs_fewer_groups() {
    let recipe = qse_recipe(&correlated_h2_state(), &fixtures::h2_sto3g(), ExcitationLevel::SinglesDoubles, DEFAULT_TERM_BUDGET).unwrap();
    assert!(recipe.groups(GroupingMode::Full).len() <= recipe.groups(GroupingMode::Qubitwise).len());
}

#[test]
fn hadamard_free_overlap_matches_statevector_oracle() {
    for seed in 0..20 {
        let vac = fixtures::random_unit_vector(8, 100 + seed);
        let v0 = fixtures::random_unit_vector(8, 200 + seed);
        let probe = fixtures::random_unit_vector(8, 300 + seed);
        let sup: Vec<C64> = vac.iter().zip(&v0).map(|(a, b)| (a + b) * 0.5).collect();
        let a = linalg::dot(&probe, &vac);
        let b = linalg::dot(&probe, &v0);
        let f2 = linalg::dot(&probe, &sup).norm_sqr();
        let est = hadamard_free_overlap(a.norm_sqr(), b.norm_sqr(), f2, arg(a), 1e-6).unwrap();
        let direct = (arg(b) - arg(a)).cos();
        assert!(est.in_range);
        assert!((est.cos - direct).abs() < 1e-10, "{} vs {direct}", est.cos);
        let hit = [est.theta1.0, est.theta1.1]
            .iter()
            .any(|t| (t - arg(b)).sin().abs() < 1e-6 && (t - arg(b)).cos() > 0.0);
        assert!(hit);
    }
}

fn arg(z: C64) -> f64 {
    z.im.atan2(z.re)
}
