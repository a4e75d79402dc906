//! Executes a resolved [`RunConfig`] and writes its reports.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use qsubspace_core::classical::{davidson, kaniel_paige_saad, lanczos, power_krylov, DavidsonOptions, TraceRow};
use qsubspace_core::engine::Statevector;
use qsubspace_core::fixtures::random_unit_vector;
use qsubspace_core::fock::{Configuration, ExactPropagator, FockVector, SectorBasis, SectorHamiltonian, Time};
use qsubspace_core::geev::{self, GeevSolution, SubspaceProblem};
use qsubspace_core::integrals::MolecularIntegrals;
use qsubspace_core::quantum::*;
use qsubspace_core::qubits::{GroupingMode, PauliSum};
use qsubspace_core::shots::{allocate_shots, noisy_subspace, pilot_variances, MeasurementRecipe, ShotPlan, GENERATOR};
use qsubspace_core::{linalg, C64};

use crate::config::{BackendKind, Grouping, Level, Method, RunConfig, SpectrumBasis, Start};
use crate::report::{self, num, nums, SweepRow};
use crate::schema::{self, RESULT_SCHEMA_VERSION};
use crate::{dumps, fcidump, integrals_json, CliError};

/// Largest sector for which the FCI reference is computed alongside a run.
pub const REFERENCE_CAP: usize = 1024;
pub const DEFAULT_N: usize = 6;
pub const DEFAULT_DTAU: f64 = 0.5;
pub const DEFAULT_TAU: f64 = 0.5;
pub const DEFAULT_ETA: f64 = 0.05;
pub const DEFAULT_TIME: f64 = 10.0;
pub const DEFAULT_QITE_SUBSTEPS: usize = 10;
pub const TROTTER_TOL: f64 = 1e-12;

/// Exact sector spectrum used for errors and bound evaluation.
#[derive(Debug, Clone)]
pub struct Reference {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<FockVector>,
}

impl Reference {
    fn weights(&self, v: &FockVector) -> Vec<f64> {
        let v = v.clone().normalized();
        self.eigenvectors.iter().map(|e| e.dot(&v).norm_sqr()).collect()
    }
}

/// Integrals from an FCIDUMP file, or from the JSON dump when the file ends in `.json`.
pub fn load_integrals(path: &Path) -> Result<MolecularIntegrals, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        integrals_json::from_json(&text)
    } else {
        fcidump::parse_fcidump(&text)
    };
    parsed.map_err(|source| CliError::Input { path: path.into(), source })
}

/// Everything one configuration point produces.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub report: Value,
    pub row: SweepRow,
    pub spectrum: Option<(Vec<f64>, Vec<C64>)>,
    pub trace: Option<Vec<TraceRow>>,
    pub amplitudes: Option<String>,
}

#[derive(Default)]
struct Solved {
    problem: Option<SubspaceProblem>,
    sol: Option<GeevSolution>,
    eigenvalues: Vec<f64>,
    ground: Option<f64>,
    params: Map<String, Value>,
    bounds: Map<String, Value>,
    diagnostics: Map<String, Value>,
    /// Bound reported in the sweep table.
    row_bound: Option<f64>,
    excitations: Option<Vec<f64>>,
    shots: Option<Value>,
    spectrum: Option<(Vec<f64>, Vec<C64>, Value)>,
    trace: Option<Vec<TraceRow>>,
    amplitudes: Option<String>,
}

impl Solved {
    fn from_problem(problem: SubspaceProblem, eps: f64) -> Result<Self, CliError> {
        let sol = geev::solve(&problem, eps)?;
        let mut s = Solved {
            eigenvalues: sol.eigenvalues.clone(),
            ground: Some(sol.ground_energy()),
            ..Default::default()
        };
        for (k, v) in &problem.provenance.params {
            s.params.insert(k.clone(), num(*v));
        }
        s.problem = Some(problem);
        s.sol = Some(sol);
        Ok(s)
    }
}

struct Context<'a> {
    cfg: &'a RunConfig,
    ints: &'a MolecularIntegrals,
    ham: &'a SectorHamiltonian,
    reference: Option<&'a Reference>,
}

impl Context<'_> {
    fn start_vector(&self, default: Start) -> Result<FockVector, CliError> {
        let sector = self.ham.sector();
        match self.cfg.params.start.unwrap_or(default) {
            Start::Hf => {
                let basis = SectorBasis::new(sector);
                Ok(FockVector::from_configuration(&basis, Configuration::aufbau(sector.num_up, sector.num_down))?)
            }
            Start::Random => Ok(FockVector::from_amplitudes(sector, random_unit_vector(sector.dim(), self.cfg.seed))?),
            Start::Ground => match self.reference {
                Some(r) => Ok(r.eigenvectors[0].clone()),
                None => Ok(self.ham.eigenpairs(1)?.eigenvectors.swap_remove(0)),
            },
        }
    }

    fn n(&self) -> usize {
        self.cfg.params.n.unwrap_or(DEFAULT_N.min(self.ham.dim()))
    }

    fn eps(&self, prob: &SubspaceProblem) -> f64 {
        self.cfg.params.eps.unwrap_or_else(|| geev::default_threshold(prob))
    }

    /// `Δt` from the config, or the Epperly step for the full spectrum.
    fn dt(&self, params: &mut Map<String, Value>) -> Result<f64, CliError> {
        if let Some(dt) = self.cfg.params.dt {
            params.insert("dt_source".into(), "config".into());
            return Ok(dt);
        }
        let r = self.reference.ok_or_else(|| {
            CliError::usage("params.dt", "no default: the sector is too large for the Epperly prescription")
        })?;
        let d = r.eigenvalues.len();
        if d < 2 {
            return Err(CliError::usage("params.dt", "one-dimensional sector has no Epperly step"));
        }
        params.insert("dt_source".into(), "epperly".into());
        Ok(epperly_time_step(&r.eigenvalues, d - 1)?)
    }

    fn grouping(&self) -> GroupingMode {
        match self.cfg.shots.grouping {
            Grouping::Qubitwise => GroupingMode::Qubitwise,
            Grouping::Full => GroupingMode::Full,
        }
    }

    /// Replaces the exact matrices by sampled ones when shots are enabled.
    fn sample(&self, recipe: &MeasurementRecipe) -> Result<(SubspaceProblem, Value), CliError> {
        let s = &self.cfg.shots;
        let mode = self.grouping();
        let groups = recipe.groups(mode).len();
        let plan = match (s.shots_per_group, s.eps_target) {
            (Some(m), _) => ShotPlan::uniform(groups, m, self.cfg.seed, mode),
            (None, Some(e)) => {
                let pilot = pilot_variances(recipe, mode, s.pilot_shots, self.cfg.seed)?;
                let mut plan = allocate_shots(&pilot, e, self.cfg.seed, mode)?;
                for m in &mut plan.shots {
                    *m = (*m).max(s.pilot_shots);
                }
                plan
            }
            (None, None) => return Err(CliError::usage("shots", "no shot budget")),
        };
        let noisy = noisy_subspace(recipe, &plan)?;
        let info = json!({
            "grouping": match s.grouping { Grouping::Qubitwise => "qubitwise", Grouping::Full => "full" },
            "groups": groups,
            "total_shots": plan.total_shots(),
            "shots_per_group": s.shots_per_group,
            "eps_target": s.eps_target,
            "pilot_shots": s.eps_target.map(|_| s.pilot_shots),
        });
        Ok((noisy, info))
    }

    fn solve_sampled(&self, noisy: SubspaceProblem, info: Value) -> Result<Solved, CliError> {
        let eps = self.eps(&noisy);
        let pb = geev::perturbation_bound(&noisy, eps, 0.0, 0.0)?;
        let mut s = Solved::from_problem(noisy, eps)?;
        s.bounds.insert("atan_shift_bound".into(), num(pb.bound));
        s.bounds.insert("atan_shift_applicable".into(), pb.applicable.into());
        s.bounds.insert("chi".into(), num(pb.chi));
        s.bounds.insert("lambda_eps".into(), num(pb.lambda_eps));
        s.bounds.insert("constant".into(), num(pb.constant));
        s.shots = Some(info);
        Ok(s)
    }

    fn level(&self) -> ExcitationLevel {
        match self.cfg.params.level.unwrap_or(Level::Sd) {
            Level::Singles => ExcitationLevel::Singles,
            Level::Sd => ExcitationLevel::SinglesDoubles,
        }
    }

    fn qfd_grid(&self, params: &mut Map<String, Value>) -> Result<QfdGrid, CliError> {
        let p = &self.cfg.params;
        let mut grid = QfdGrid::new(self.dt(params)?, self.n())?;
        grid.symmetric = p.symmetric.unwrap_or(false);
        if p.backend == Some(BackendKind::Trotter) {
            grid.backend = Backend::Trotter {
                substeps: p.trotter_substeps.unwrap_or(1),
                tol: TROTTER_TOL,
            };
        }
        grid.validate()?;
        Ok(grid)
    }
}

fn fci(ctx: &Context) -> Result<Solved, CliError> {
    let k = ctx.cfg.params.roots.unwrap_or(ctx.ham.dim()).min(ctx.ham.dim());
    let slice = ctx.ham.eigenpairs(k)?;
    let mut s = Solved {
        ground: Some(slice.eigenvalues[0]),
        eigenvalues: slice.eigenvalues,
        ..Default::default()
    };
    s.params.insert("roots".into(), k.into());
    Ok(s)
}

fn lanczos_method(ctx: &Context) -> Result<Solved, CliError> {
    let v0 = ctx.start_vector(Start::Hf)?;
    let n = ctx.n();
    let (form, prob) = lanczos(ctx.ham, &v0.amplitudes, n, true)?;
    let eps = ctx.eps(&prob);
    let mut s = Solved::from_problem(prob, eps)?;
    s.diagnostics.insert("steps".into(), form.dim().into());
    s.diagnostics.insert("orthogonality_loss".into(), num(form.orthogonality_loss()));
    if let Some(r) = ctx.reference {
        let overlaps: Vec<C64> = r.eigenvectors.iter().map(|e| e.dot(&v0)).collect();
        if r.eigenvalues.len() >= 2 {
            let b = kaniel_paige_saad(&r.eigenvalues, &overlaps, form.dim(), 0)?;
            s.bounds.insert("kaniel_paige".into(), num(b.bound));
            s.bounds.insert("kaniel_paige_satisfied".into(), b.satisfied.into());
            s.row_bound = Some(b.bound);
        }
    }
    Ok(s)
}

fn davidson_method(ctx: &Context) -> Result<Solved, CliError> {
    let p = &ctx.cfg.params;
    let defaults = DavidsonOptions::default();
    let opts = DavidsonOptions {
        tol: p.tol.unwrap_or(defaults.tol),
        max_iter: p.max_iter.unwrap_or(defaults.max_iter),
        initial_guess: None,
    };
    let k = p.roots.unwrap_or(1).min(ctx.ham.dim());
    let res = davidson(ctx.ham, k, &opts)?;
    let mut s = Solved {
        ground: Some(res.eigenvalues[0]),
        eigenvalues: res.eigenvalues.clone(),
        ..Default::default()
    };
    s.params.insert("roots".into(), k.into());
    s.params.insert("tol".into(), num(opts.tol));
    s.params.insert("max_iter".into(), opts.max_iter.into());
    s.diagnostics.insert("iterations".into(), res.iterations.into());
    s.diagnostics.insert("residuals".into(), nums(&res.residuals));
    s.trace = Some(res.trace);
    Ok(s)
}

fn add_bt(s: &mut Solved) {
    if let Some(prob) = &s.problem {
        let r = geev::conditioning_report(prob);
        if let (Some(b), Some(ok)) = (r.bt_bound, r.bt_satisfied) {
            s.bounds.insert("beckermann_townsend".into(), num(b));
            s.bounds.insert("beckermann_townsend_satisfied".into(), ok.into());
            s.row_bound = Some(b);
        }
    }
}

fn power_krylov_method(ctx: &Context) -> Result<Solved, CliError> {
    let v0 = ctx.start_vector(Start::Hf)?;
    let prob = power_krylov(ctx.ham, &v0.amplitudes, ctx.n())?;
    let eps = ctx.eps(&prob);
    let mut s = Solved::from_problem(prob, eps)?;
    add_bt(&mut s);
    Ok(s)
}

fn chebyshev_method(ctx: &Context) -> Result<Solved, CliError> {
    let v0 = ctx.start_vector(Start::Hf)?;
    let bounds = gershgorin_bounds(ctx.ham)?;
    let out = chebyshev_krylov_build(ctx.ham, &v0.amplitudes, ctx.n(), bounds)?;
    let eps = ctx.eps(&out.problem);
    let mut s = Solved::from_problem(out.problem, eps)?;
    s.diagnostics.insert("moments".into(), nums(&out.moments));
    Ok(s)
}

fn gaussian_power_method(ctx: &Context) -> Result<Solved, CliError> {
    let v0 = ctx.start_vector(Start::Hf)?;
    let prop = ExactPropagator::new(ctx.ham)?;
    let tau = ctx.cfg.params.tau.unwrap_or(DEFAULT_TAU);
    let out = gaussian_power_build(&prop, &v0, ctx.n(), tau, ctx.cfg.params.shift)?;
    let eps = ctx.eps(&out.problem);
    let mut s = Solved::from_problem(out.problem, eps)?;
    s.diagnostics.insert("norms".into(), nums(&out.norms));
    s.diagnostics.insert("norm_bounds".into(), nums(&out.norm_bounds));
    add_bt(&mut s);
    Ok(s)
}

fn qse_method(ctx: &Context) -> Result<Solved, CliError> {
    let state = Statevector::from_fock(&ctx.start_vector(Start::Hf)?)?;
    let level = ctx.level();
    let mut s = if ctx.cfg.shots.enabled {
        let recipe = qse_recipe(&state, ctx.ints, level, DEFAULT_TERM_BUDGET)?;
        let (noisy, info) = ctx.sample(&recipe)?;
        ctx.solve_sampled(noisy, info)?
    } else {
        let out = qse_build(&state, ctx.ints, level)?;
        let eps = ctx.eps(&out.problem);
        let mut s = Solved::from_problem(out.problem, eps)?;
        s.diagnostics.insert("pool_size".into(), out.pool.len().into());
        s
    };
    s.diagnostics.insert("reference_energy".into(), num(qse::reference_energy(&state, ctx.ints)?));
    Ok(s)
}

fn qeom_method(ctx: &Context) -> Result<Solved, CliError> {
    let state = Statevector::from_fock(&ctx.start_vector(Start::Ground)?)?;
    let tda = ctx.cfg.params.tda.unwrap_or(false);
    let r = qeom_build(&state, ctx.ints, ctx.level(), tda)?;
    let mut s = Solved {
        eigenvalues: r.eigenvalues.clone(),
        ground: Some(qse::reference_energy(&state, ctx.ints)?),
        excitations: Some(r.excitations.clone()),
        ..Default::default()
    };
    s.params.insert("tda".into(), tda.into());
    s.diagnostics.insert("pool_size".into(), r.pool.len().into());
    s.diagnostics.insert("dropped_operators".into(), r.dropped.into());
    s.diagnostics.insert("pairing_defect".into(), num(r.pairing_defect));
    s.diagnostics.insert("max_imaginary".into(), num(r.max_imaginary));
    s.diagnostics.insert("metric_dropped".into(), r.metric_dropped.into());
    if let Some(rf) = ctx.reference {
        let gaps: Vec<f64> = r
            .excitations
            .iter()
            .map(|e| {
                rf.eigenvalues[1..]
                    .iter()
                    .map(|ev| (e - (ev - rf.eigenvalues[0])).abs())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        s.diagnostics.insert("nearest_gap_distance".into(), nums(&gaps));
    }
    Ok(s)
}

fn qfd_method(ctx: &Context) -> Result<Solved, CliError> {
    let v0 = ctx.start_vector(Start::Hf)?;
    let mut params = Map::new();
    let grid = ctx.qfd_grid(&mut params)?;
    let out = qfd_build(&v0, ctx.ints, &grid)?;
    let mut s = if ctx.cfg.shots.enabled {
        let recipe = qfd_recipe(&out.basis, ctx.ints, grid.dt)?;
        let (noisy, info) = ctx.sample(&recipe)?;
        ctx.solve_sampled(noisy, info)?
    } else {
        let eps = ctx.eps(&out.problem);
        Solved::from_problem(out.problem, eps)?
    };
    s.params.extend(params);
    s.params.insert("dt".into(), num(grid.dt));
    s.params.insert("symmetric".into(), grid.symmetric.into());
    if let Some(r) = ctx.reference {
        let b = epperly_bound_for_step(&r.eigenvalues, &r.weights(&v0), grid.n, grid.dt);
        s.bounds.insert("epperly".into(), num(b));
        s.row_bound = Some(b);
    }
    Ok(s)
}

fn qlanczos_method(ctx: &Context) -> Result<Solved, CliError> {
    let p = &ctx.cfg.params;
    let v0 = ctx.start_vector(Start::Hf)?;
    let dtau = p.dtau.unwrap_or(DEFAULT_DTAU);
    let n = p.n.unwrap_or(4);
    let mode = if p.qite.unwrap_or(false) {
        QlanczosMode::Qite {
            pool: QitePool::fermionic(ctx.ints.num_orbitals())?,
            substeps: p.qite_substeps.unwrap_or(DEFAULT_QITE_SUBSTEPS),
        }
    } else {
        QlanczosMode::Exact
    };
    let out = qlanczos_build(&v0, ctx.ints, dtau, n, &mode)?;
    let eps = ctx.eps(&out.problem);
    let mut s = Solved::from_problem(out.problem, eps)?;
    s.params.insert("qite".into(), matches!(mode, QlanczosMode::Qite { .. }).into());
    s.diagnostics.insert("record_taus".into(), nums(&out.records.taus));
    s.diagnostics.insert("record_energies".into(), nums(&out.records.energies));
    Ok(s)
}

/// Subspace basis for `spectrum` and `fastforward`.
fn response_basis(ctx: &Context, complete: bool, v0: &FockVector) -> Result<(Solved, Vec<Statevector>), CliError> {
    if complete {
        let d = ctx.ham.dim();
        let basis: Vec<FockVector> = (0..d).map(|k| FockVector::basis_state(ctx.ham.sector(), k)).collect();
        let h = linalg::real_to_complex(&ctx.ham.dense_matrix()?);
        let prob = SubspaceProblem::new(h, nalgebra::DMatrix::identity(d, d), geev::Provenance::new("complete"))?;
        let eps = ctx.eps(&prob);
        Ok((Solved::from_problem(prob, eps)?, to_statevectors(&basis)?))
    } else {
        let mut params = Map::new();
        let grid = ctx.qfd_grid(&mut params)?;
        let out = qfd_build(v0, ctx.ints, &grid)?;
        let eps = ctx.eps(&out.problem);
        let mut s = Solved::from_problem(out.problem, eps)?;
        s.params.extend(params);
        Ok((s, to_statevectors(&out.basis)?))
    }
}

/// `Σ_σ (a†_{to,σ} a_{from,σ} + h.c.)`.
fn excitation_operator(m: usize, from: usize, to: usize) -> Result<PauliSum, CliError> {
    let mut b = PauliSum::zero(2 * m);
    for spin in [Spin::Up, Spin::Down] {
        let e = ExcitationOperator::Single { a: to, i: from, spin }.to_pauli(m)?;
        b = b.add(&e)?.add(&e.adjoint())?;
    }
    Ok(b)
}

fn spectrum_method(ctx: &Context) -> Result<Solved, CliError> {
    let p = &ctx.cfg.params;
    let m = ctx.ints.num_orbitals();
    let homo = ctx.ints.num_up().max(ctx.ints.num_down());
    let from = match p.excite_from {
        Some(i) => i,
        None if homo > 0 => homo - 1,
        None => return Err(CliError::usage("params.excite_from", "no occupied orbital")),
    };
    let to = p.excite_to.unwrap_or(from + 1);
    if from >= m || to >= m || from == to {
        return Err(CliError::usage("params.excite_to", format!("orbitals {from} -> {to} invalid for {m} orbitals")));
    }
    let v0 = ctx.start_vector(Start::Hf)?;
    let complete = p.basis.unwrap_or(SpectrumBasis::Complete) == SpectrumBasis::Complete;
    let (mut s, states) = response_basis(ctx, complete, &v0)?;
    let sol = s.sol.as_ref().expect("solved");
    let b = excitation_operator(m, from, to)?;
    let eta = p.eta.unwrap_or(DEFAULT_ETA);
    let omegas: Vec<f64> = match p.omega {
        Some(g) => (0..g.points).map(|k| g.min + (g.max - g.min) * k as f64 / (g.points - 1) as f64).collect(),
        None => {
            let span = sol.eigenvalues.last().unwrap() - sol.eigenvalues[0];
            let top = 1.2 * span + 10.0 * eta;
            (0..1001).map(|k| -10.0 * eta + (top + 10.0 * eta) * k as f64 / 1000.0).collect()
        }
    };
    let r = response_function(sol, &states, &b.adjoint(), &b, &omegas, eta)?;
    let psi0 = &qsubspace_core::quantum::response::eigenstates(sol, &states)?[0];
    let b_psi0 = psi0.apply_pauli_sum(&b)?;
    let expected = b_psi0.dot(&b_psi0).re;
    let total = r.total_weight();
    s.diagnostics.insert("total_weight".into(), num(total.re));
    s.diagnostics.insert("sum_rule_expected".into(), num(expected));
    s.diagnostics.insert("sum_rule_error".into(), num(linalg::cabs(total - C64::new(expected, 0.0))));
    s.params.insert("eta".into(), num(eta));
    s.params.insert("excite_from".into(), from.into());
    s.params.insert("excite_to".into(), to.into());
    s.params.insert("basis".into(), if complete { "complete" } else { "qfd" }.into());
    let peaks: Vec<Value> = r
        .peaks
        .iter()
        .map(|pk| json!({ "omega": num(pk.omega), "weight_re": num(pk.weight.re), "weight_im": num(pk.weight.im) }))
        .collect();
    let meta = json!({ "eta": num(eta), "omega_points": omegas.len(), "peaks": peaks });
    s.spectrum = Some((omegas, r.values, meta));
    Ok(s)
}

fn fastforward_method(ctx: &Context) -> Result<Solved, CliError> {
    let v0 = ctx.start_vector(Start::Hf)?;
    let (mut s, states) = response_basis(ctx, false, &v0)?;
    let t = ctx.cfg.params.time.unwrap_or(DEFAULT_TIME);
    let psi = Statevector::from_fock(&v0)?;
    let ff = fast_forward(s.sol.as_ref().expect("solved"), &states, &psi, t)?;
    let prop = ExactPropagator::new(ctx.ham)?;
    let exact = Statevector::from_fock(&prop.evolve(&v0.clone().normalized(), Time::Real(t))?.0)?;
    s.params.insert("time".into(), num(t));
    s.diagnostics.insert("projection_weight".into(), num(ff.weight));
    s.diagnostics.insert("warning".into(), ff.warning.into());
    s.diagnostics.insert("fidelity".into(), num(exact.dot(&ff.state).norm_sqr()));
    if ctx.cfg.output.dumps {
        s.amplitudes = Some(dumps::amplitude_text(&ff.state));
    }
    Ok(s)
}

/// Runs one configuration point (no sweep).
pub fn execute(cfg: &RunConfig, ints: &MolecularIntegrals, ham: &SectorHamiltonian, reference: Option<&Reference>) -> Result<PointResult, CliError> {
    let method = cfg.method()?;
    let ctx = Context { cfg, ints, ham, reference };
    let s = match method {
        Method::Fci => fci(&ctx),
        Method::Lanczos => lanczos_method(&ctx),
        Method::Davidson => davidson_method(&ctx),
        Method::PowerKrylov => power_krylov_method(&ctx),
        Method::Chebyshev => chebyshev_method(&ctx),
        Method::GaussianPower => gaussian_power_method(&ctx),
        Method::Qse => qse_method(&ctx),
        Method::Qeom => qeom_method(&ctx),
        Method::Qfd => qfd_method(&ctx),
        Method::Qlanczos => qlanczos_method(&ctx),
        Method::Spectrum => spectrum_method(&ctx),
        Method::Fastforward => fastforward_method(&ctx),
    }?;

    let fci_ground = reference.map(|r| r.eigenvalues[0]);
    let error = match (s.ground, fci_ground) {
        (Some(g), Some(e)) if method != Method::Qeom => Some(g - e),
        _ => None,
    };
    let cond = s.problem.as_ref().map(|p| geev::conditioning_report(p).cond);
    let row = SweepRow {
        value: f64::NAN,
        ground_energy: s.ground,
        error,
        cond,
        n_eps: s.sol.as_ref().map(|x| x.retained_dim),
        bound: s.row_bound,
    };
    let geev_report = match (&s.problem, &s.sol) {
        (Some(p), Some(sol)) => {
            let mut bounds = s.bounds.clone();
            bounds.insert("cond".into(), cond.map_or(Value::Null, num));
            json!({
                "n": p.dim(),
                "eps": num(sol.threshold),
                "n_eps": sol.retained_dim,
                "eigenvalues": nums(&sol.eigenvalues),
                "overlap_eigenvalues": nums(&sol.overlap_eigenvalues),
                "cond_before": num(sol.cond_before),
                "cond_after": num(sol.cond_after),
                "bounds": bounds,
            })
        }
        _ => Value::Null,
    };
    let reference_json = match reference {
        Some(r) => json!({
            "fci_ground": num(r.eigenvalues[0]),
            "error": report::opt(error),
            "fci_eigenvalues": nums(&r.eigenvalues[..r.eigenvalues.len().min(16)]),
        }),
        None => Value::Null,
    };
    let mut diagnostics = s.diagnostics;
    if s.problem.is_none() {
        for (k, v) in s.bounds {
            diagnostics.insert(k, v);
        }
    }
    let matrices = match (&s.problem, cfg.output.matrices) {
        (Some(p), true) => report::matrices(&p.hmat, &p.smat),
        _ => Value::Null,
    };
    let sector = ham.sector();
    let report = json!({
        "schema": "qsubspace-result",
        "schema_version": RESULT_SCHEMA_VERSION,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "method": method.name(),
        "generator": GENERATOR,
        "seed": cfg.seed,
        "config": serde_json::to_value(cfg).expect("config serializes"),
        "system": {
            "input": cfg.input.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            "num_orbitals": ints.num_orbitals(),
            "num_up": ints.num_up(),
            "num_down": ints.num_down(),
            "sector_dim": sector.dim(),
            "num_qubits": 2 * ints.num_orbitals(),
            "e_nuc": num(ints.e_nuc()),
        },
        "parameters": s.params,
        "energies": { "ground": report::opt(s.ground), "eigenvalues": nums(&s.eigenvalues) },
        "reference": reference_json,
        "geev": geev_report,
        "diagnostics": diagnostics,
        "shots": s.shots,
        "excitations": s.excitations.as_deref().map(nums),
        "spectrum": s.spectrum.as_ref().map(|x| x.2.clone()),
        "matrices": matrices,
        "sweep": Value::Null,
    });
    Ok(PointResult {
        report,
        row,
        spectrum: s.spectrum.map(|(o, v, _)| (o, v)),
        trace: s.trace,
        amplitudes: s.amplitudes,
    })
}

/// Files written by [`run`].
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub report: Value,
    pub rows: Vec<SweepRow>,
    pub files: Vec<PathBuf>,
}

fn write(path: PathBuf, bytes: &[u8], files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    fs::write(&path, bytes).map_err(|source| CliError::Io { path: path.clone(), source })?;
    files.push(path);
    Ok(())
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("in-memory CSV");
    buf
}

/// Loads the input, runs every configuration point and writes the reports.
pub fn run(cfg: &RunConfig) -> Result<RunArtifacts, CliError> {
    cfg.validate()?;
    let input = cfg.input.as_ref().expect("validated");
    let ints = load_integrals(input)?;
    let ham = SectorHamiltonian::new(&ints)?;
    let reference = if ham.dim() <= REFERENCE_CAP {
        let s = ham.eigenpairs(ham.dim())?;
        Some(Reference {
            eigenvalues: s.eigenvalues,
            eigenvectors: s.eigenvectors,
        })
    } else {
        None
    };

    let (mut point, rows) = match &cfg.sweep {
        None => {
            let p = execute(cfg, &ints, &ham, reference.as_ref())?;
            (p, Vec::new())
        }
        Some(sw) => {
            let points = || -> Result<Vec<PointResult>, CliError> {
                sw.values
                    .par_iter()
                    .map(|&v| {
                        let mut p = execute(&cfg.at_point(sw.axis, v), &ints, &ham, reference.as_ref())?;
                        p.row.value = v;
                        Ok(p)
                    })
                    .collect()
            };
            let results = match cfg.jobs {
                Some(j) => rayon::ThreadPoolBuilder::new()
                    .num_threads(j)
                    .build()
                    .map_err(|e| CliError::usage("jobs", e.to_string()))?
                    .install(points)?,
                None => points()?,
            };
            let rows: Vec<SweepRow> = results.iter().map(|p| p.row).collect();
            let mut last = results.into_iter().last().expect("non-empty sweep");
            last.report["config"] = serde_json::to_value(cfg).expect("config serializes");
            last.report["sweep"] = json!({
                "axis": sw.axis.name(),
                "rows": rows.iter().map(SweepRow::to_json).collect::<Vec<_>>(),
            });
            (last, rows)
        }
    };

    let violations = schema::validate(&schema::result_schema(), &point.report);
    if !violations.is_empty() {
        return Err(CliError::Schema(violations.join("; ")));
    }

    let dir = &cfg.output.dir;
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
    let mut files = Vec::new();
    let text = serde_json::to_string_pretty(&point.report).expect("report serializes");
    write(dir.join("result.json"), text.as_bytes(), &mut files)?;
    if let Some(sw) = &cfg.sweep {
        write(dir.join("sweep.csv"), &csv_bytes(|b| report::write_sweep_csv(b, sw.axis.name(), &rows)), &mut files)?;
    }
    if let Some((omegas, values)) = point.spectrum.take() {
        write(dir.join("spectrum.csv"), &csv_bytes(|b| report::write_spectrum_csv(b, &omegas, &values)), &mut files)?;
    }
    if let Some(trace) = point.trace.take() {
        write(dir.join("trace.csv"), &csv_bytes(|b| report::write_trace_csv(b, &trace)), &mut files)?;
    }
    if let Some(amps) = point.amplitudes.take() {
        write(dir.join("amplitudes.txt"), amps.as_bytes(), &mut files)?;
    }
    if cfg.output.dumps {
        write(dir.join("hamiltonian.bin"), &dumps::hamiltonian_bytes(&ham).map_err(|source| CliError::Input { path: input.clone(), source })?, &mut files)?;
    }
    Ok(RunArtifacts {
        report: point.report,
        rows,
        files,
    })
}
