//! Finite-sampling measurement model.
//!
//! Each commuting group is measured jointly: outcome counts are drawn from
//! the exact outcome distribution of the prepared state, and every string in
//! the group is estimated from the same samples. Streams are ChaCha20 with
//! stream id = group index, so `(seed, group)` fixes the samples.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};

use crate::engine::Statevector;
use crate::error::{Error, Result};
use crate::geev::{NoiseStd, Provenance, SubspaceProblem};
use crate::linalg::{self, C64, ZERO};
use crate::qubits::{group_commuting, GroupingMode, Letter, PauliString, PauliSum};

/// Name recorded in every report next to the seed.
pub const GENERATOR: &str = "chacha20";
pub const DEFAULT_PILOT_SHOTS: u64 = 100;
/// Largest register measured in a dense joint eigenbasis.
pub const MAX_DENSE_GROUP_QUBITS: usize = 10;
const PILOT_STREAM_OFFSET: u64 = 1 << 32;

pub fn stream(seed: u64, group: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(group);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledEstimate {
    pub mean: f64,
    /// Sample standard deviation over `√N_s`.
    pub std_error: f64,
    pub shots: u64,
}

/// Outcome counts of one joint measurement together with the value every
/// measured observable takes on each outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSample {
    pub shots: u64,
    pub counts: Vec<u64>,
    /// `values[outcome][k]`
    pub values: Vec<Vec<f64>>,
}

impl GroupSample {
    pub fn estimate(&self, k: usize) -> SampledEstimate {
        let (mean, var) = self.moments(|v| v[k]);
        SampledEstimate {
            mean,
            std_error: var.sqrt(),
            shots: self.shots,
        }
    }

    /// Mean and variance of the mean of a per-shot real statistic.
    fn moments(&self, f: impl Fn(&[f64]) -> f64) -> (f64, f64) {
        let n = self.shots as f64;
        let mean = self
            .counts
            .iter()
            .zip(&self.values)
            .map(|(&c, v)| c as f64 * f(v))
            .sum::<f64>()
            / n;
        if self.shots < 2 {
            return (mean, 0.0);
        }
        let ss: f64 = self
            .counts
            .iter()
            .zip(&self.values)
            .map(|(&c, v)| c as f64 * (f(v) - mean).powi(2))
            .sum();
        (mean, ss / (n - 1.0) / n)
    }

    /// Mean of `Σ c_k v_k` with the variances of its real and imaginary parts.
    pub fn combination(&self, coeffs: &[(C64, usize)]) -> (C64, f64, f64) {
        let (re, var_re) = self.moments(|v| coeffs.iter().map(|(c, k)| c.re * v[*k]).sum());
        let (im, var_im) = self.moments(|v| coeffs.iter().map(|(c, k)| c.im * v[*k]).sum());
        (C64::new(re, im), var_re, var_im)
    }
}

/// Exact outcome distribution of a joint measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    pub probabilities: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl JointDistribution {
    pub fn sample(&self, shots: u64, rng: &mut ChaCha20Rng) -> Result<GroupSample> {
        if shots == 0 {
            return Err(Error::Domain("a measured group needs at least one shot".into()));
        }
        Ok(GroupSample {
            shots,
            counts: multinomial(&self.probabilities, shots, rng),
            values: self.values.clone(),
        })
    }

    /// Single-shot variance of `Σ c_k v_k` (real plus imaginary part).
    pub fn variance(&self, coeffs: &[(C64, usize)]) -> f64 {
        let stat = |v: &[f64]| coeffs.iter().fold(ZERO, |a, (c, k)| a + c * v[*k]);
        let mean = self
            .probabilities
            .iter()
            .zip(&self.values)
            .fold(ZERO, |a, (&p, v)| a + stat(v) * p);
        self.probabilities
            .iter()
            .zip(&self.values)
            .map(|(&p, v)| p * (stat(v) - mean).norm_sqr())
            .sum()
    }
}

/// Counts by conditional binomials, outcome by outcome.
fn multinomial(probs: &[f64], shots: u64, rng: &mut ChaCha20Rng) -> Vec<u64> {
    let total: f64 = probs.iter().sum();
    let mut remaining_shots = shots;
    let mut remaining_mass = total;
    let mut counts = vec![0u64; probs.len()];
    for (i, &p) in probs.iter().enumerate() {
        if remaining_shots == 0 {
            break;
        }
        if i + 1 == probs.len() || remaining_mass <= 0.0 {
            counts[i] = remaining_shots;
            break;
        }
        let q = (p / remaining_mass).clamp(0.0, 1.0);
        let k = if q >= 1.0 {
            remaining_shots
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(remaining_shots, q).map(|b| b.sample(rng)).unwrap_or(0)
        };
        counts[i] = k;
        remaining_shots -= k;
        remaining_mass -= p;
    }
    counts
}

fn apply_one_qubit(s: &mut Statevector, q: usize, u: [[C64; 2]; 2]) {
    let bit = 1usize << q;
    let amps = s.amplitudes_mut();
    for b in 0..amps.len() {
        if b & bit != 0 {
            continue;
        }
        let (a0, a1) = (amps[b], amps[b | bit]);
        amps[b] = u[0][0] * a0 + u[0][1] * a1;
        amps[b | bit] = u[1][0] * a0 + u[1][1] * a1;
    }
}

fn check_group(strings: &[PauliString], mode: GroupingMode) -> Result<()> {
    for (i, a) in strings.iter().enumerate() {
        for b in &strings[..i] {
            if !mode.compatible(a, b) {
                return Err(Error::Domain(format!(
                    "{a} and {b} are not {} compatible",
                    mode.name()
                )));
            }
        }
    }
    Ok(())
}

/// Outcome distribution for measuring `strings` jointly on `state`.
pub fn joint_distribution(state: &Statevector, strings: &[PauliString], mode: GroupingMode) -> Result<JointDistribution> {
    check_group(strings, mode)?;
    let nq = state.num_qubits();
    if let Some(p) = strings.iter().find(|p| p.num_qubits() != nq) {
        return Err(Error::Mismatch(format!("{}-qubit string on a {nq}-qubit state", p.num_qubits())));
    }
    let qubitwise = strings
        .iter()
        .enumerate()
        .all(|(i, a)| strings[..i].iter().all(|b| a.qubitwise_commutes_with(b)));
    if qubitwise {
        let mut rotated = state.clone();
        let h = C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
        for q in 0..nq {
            let letter = strings
                .iter()
                .map(|p| p.letter(q))
                .find(|l| *l != Letter::I)
                .unwrap_or(Letter::I);
            match letter {
                Letter::X => apply_one_qubit(&mut rotated, q, [[h, h], [h, -h]]),
                // H S†
                Letter::Y => apply_one_qubit(&mut rotated, q, [[h, -h * linalg::I], [h, h * linalg::I]]),
                _ => {}
            }
        }
        let probabilities = rotated.probabilities();
        let values = (0..probabilities.len() as u64)
            .map(|b| {
                strings
                    .iter()
                    .map(|p| if (b & p.support()).count_ones() % 2 == 0 { 1.0 } else { -1.0 })
                    .collect()
            })
            .collect();
        return Ok(JointDistribution { probabilities, values });
    }
    if nq > MAX_DENSE_GROUP_QUBITS {
        return Err(Error::Capacity(format!(
            "dense joint measurement limited to {MAX_DENSE_GROUP_QUBITS} qubits"
        )));
    }
    let dense: Vec<DMatrix<C64>> = strings.iter().map(|p| p.to_dense()).collect();
    for attempt in 0..4 {
        let mut mix = DMatrix::from_element(1 << nq, 1 << nq, ZERO);
        for (k, d) in dense.iter().enumerate() {
            let w = (2.0 + k as f64 + 0.37 * attempt as f64).sqrt().fract() + 0.1 * k as f64;
            mix += d * C64::new(w, 0.0);
        }
        let (_, vecs) = linalg::hermitian_eigen(&mix);
        let mut values = Vec::with_capacity(1 << nq);
        let mut ok = true;
        for col in 0..(1 << nq) {
            let e = vecs.column(col);
            let row: Vec<f64> = dense
                .iter()
                .map(|d| (e.adjoint() * d * e)[(0, 0)].re)
                .collect();
            ok &= row.iter().all(|v| (v.abs() - 1.0).abs() < 1e-8);
            values.push(row.iter().map(|v| v.signum()).collect());
        }
        if ok {
            let amps = nalgebra::DVector::from_column_slice(state.amplitudes());
            let proj = vecs.adjoint() * amps;
            let probabilities = proj.iter().map(|a| a.norm_sqr()).collect();
            return Ok(JointDistribution { probabilities, values });
        }
    }
    Err(Error::Decomposition("could not resolve a joint eigenbasis".into()))
}

/// Samples a commuting group `N_s` times; all strings share the samples.
pub fn sample_group(
    state: &Statevector,
    strings: &[PauliString],
    mode: GroupingMode,
    shots: u64,
    seed: u64,
    group: u64,
) -> Result<Vec<SampledEstimate>> {
    let sample = joint_distribution(state, strings, mode)?.sample(shots, &mut stream(seed, group))?;
    Ok((0..strings.len()).map(|k| sample.estimate(k)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    /// `⟨ψ|P|ψ⟩` on `states[state]`.
    Pauli { state: usize, string: PauliString },
    /// Real or imaginary part of `⟨ψ_bra|P|ψ_ket⟩`, read as a `±1` ancilla
    /// outcome of a Hadamard test.
    Hadamard {
        bra: usize,
        ket: usize,
        string: PauliString,
        imaginary: bool,
    },
}

/// One matrix entry as `Σ c_k ⟨observable_k⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryRecipe {
    pub row: usize,
    pub col: usize,
    pub terms: Vec<(C64, usize)>,
}

/// Every `H`/`S` entry of a subspace problem expressed through measurable
/// observables on preparable states.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecipe {
    pub dim: usize,
    pub states: Vec<Statevector>,
    pub observables: Vec<Observable>,
    pub h_entries: Vec<EntryRecipe>,
    pub s_entries: Vec<EntryRecipe>,
    pub provenance: Provenance,
}

/// Deduplicating recipe assembly.
#[derive(Debug, Clone)]
pub struct RecipeBuilder {
    dim: usize,
    states: Vec<Statevector>,
    observables: Vec<Observable>,
    index: BTreeMap<(usize, usize, bool, PauliString), usize>,
    h_entries: Vec<EntryRecipe>,
    s_entries: Vec<EntryRecipe>,
}

impl RecipeBuilder {
    pub fn new(dim: usize, states: Vec<Statevector>) -> Self {
        Self {
            dim,
            states,
            observables: Vec::new(),
            index: BTreeMap::new(),
            h_entries: Vec::new(),
            s_entries: Vec::new(),
        }
    }

    fn intern(&mut self, key: (usize, usize, bool, PauliString), obs: Observable) -> usize {
        if let Some(&k) = self.index.get(&key) {
            return k;
        }
        self.observables.push(obs);
        self.index.insert(key, self.observables.len() - 1);
        self.observables.len() - 1
    }

    /// `Σ_k c_k ⟨ψ|P_k|ψ⟩` on state `state`.
    pub fn expectation_terms(&mut self, state: usize, op: &PauliSum) -> Vec<(C64, usize)> {
        op.terms()
            .iter()
            .map(|(c, p)| {
                let k = self.intern(
                    (state, state, false, *p),
                    Observable::Pauli { state, string: *p },
                );
                (*c, k)
            })
            .collect()
    }

    /// `Σ_k c_k ⟨ψ_bra|P_k|ψ_ket⟩` through Hadamard tests.
    pub fn transition_terms(&mut self, bra: usize, ket: usize, op: &PauliSum) -> Vec<(C64, usize)> {
        let mut out = Vec::with_capacity(2 * op.len());
        for (c, p) in op.terms() {
            for imaginary in [false, true] {
                let k = self.intern(
                    (bra, ket, imaginary, *p),
                    Observable::Hadamard {
                        bra,
                        ket,
                        string: *p,
                        imaginary,
                    },
                );
                out.push((if imaginary { c * linalg::I } else { *c }, k));
            }
        }
        out
    }

    pub fn push_h(&mut self, row: usize, col: usize, terms: Vec<(C64, usize)>) {
        self.h_entries.push(EntryRecipe { row, col, terms });
    }

    pub fn push_s(&mut self, row: usize, col: usize, terms: Vec<(C64, usize)>) {
        self.s_entries.push(EntryRecipe { row, col, terms });
    }

    pub fn finish(self, provenance: Provenance) -> MeasurementRecipe {
        MeasurementRecipe {
            dim: self.dim,
            states: self.states,
            observables: self.observables,
            h_entries: self.h_entries,
            s_entries: self.s_entries,
            provenance,
        }
    }
}

/// Observables measured together: commuting Pauli strings on one state, or
/// a single Hadamard test.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementGroup {
    pub observables: Vec<usize>,
}

impl MeasurementRecipe {
    pub fn exact_value(&self, k: usize) -> f64 {
        match &self.observables[k] {
            Observable::Pauli { state, string } => self.states[*state].pauli_expectation(string).re,
            Observable::Hadamard {
                bra,
                ket,
                string,
                imaginary,
            } => {
                let mut t = self.states[*ket].clone();
                t.apply_pauli(string);
                let z = self.states[*bra].dot(&t);
                if *imaginary {
                    z.im
                } else {
                    z.re
                }
            }
        }
    }

    pub fn exact_values(&self) -> Vec<f64> {
        (0..self.observables.len()).map(|k| self.exact_value(k)).collect()
    }

    /// Problem with every observable replaced by its exact value.
    pub fn exact_problem(&self) -> Result<SubspaceProblem> {
        let vals = self.exact_values();
        let eval = |list: &[EntryRecipe]| -> Vec<(C64, f64, f64)> {
            list.iter()
                .map(|e| (e.terms.iter().fold(ZERO, |a, (c, k)| a + c * vals[*k]), 0.0, 0.0))
                .collect()
        };
        let h = assemble(self.dim, &self.h_entries, &eval(&self.h_entries)).0;
        let s = assemble(self.dim, &self.s_entries, &eval(&self.s_entries)).0;
        SubspaceProblem::new(h, s, self.provenance.clone())
    }

    pub fn groups(&self, mode: GroupingMode) -> Vec<MeasurementGroup> {
        let mut weight = vec![0.0f64; self.observables.len()];
        for e in self.h_entries.iter().chain(&self.s_entries) {
            for (c, k) in &e.terms {
                weight[*k] += linalg::cabs(*c);
            }
        }
        let mut per_state: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut out = Vec::new();
        for (k, o) in self.observables.iter().enumerate() {
            match o {
                Observable::Pauli { state, .. } => per_state.entry(*state).or_default().push(k),
                Observable::Hadamard { .. } => out.push(MeasurementGroup { observables: vec![k] }),
            }
        }
        let mut pauli_groups = Vec::new();
        for (_, members) in per_state {
            let nq = self.states[0].num_qubits();
            let by_string: BTreeMap<PauliString, usize> = members
                .iter()
                .map(|&k| match &self.observables[k] {
                    Observable::Pauli { string, .. } => (*string, k),
                    Observable::Hadamard { .. } => unreachable!(),
                })
                .collect();
            let sum = PauliSum::from_terms(
                nq,
                by_string.iter().map(|(p, &k)| (C64::new(weight[k].max(1e-300), 0.0), *p)),
            );
            let grouping = group_commuting(&sum, mode);
            for g in grouping.groups {
                pauli_groups.push(MeasurementGroup {
                    observables: g.iter().map(|&t| by_string[&sum.terms()[t].1]).collect(),
                });
            }
        }
        pauli_groups.extend(out);
        pauli_groups
    }

    fn distribution(&self, group: &MeasurementGroup, mode: GroupingMode) -> Result<JointDistribution> {
        match &self.observables[group.observables[0]] {
            Observable::Pauli { state, .. } => {
                let strings: Vec<PauliString> = group
                    .observables
                    .iter()
                    .map(|&k| match &self.observables[k] {
                        Observable::Pauli { string, .. } => *string,
                        Observable::Hadamard { .. } => unreachable!(),
                    })
                    .collect();
                joint_distribution(&self.states[*state], &strings, mode)
            }
            Observable::Hadamard { .. } => {
                let x = self.exact_value(group.observables[0]).clamp(-1.0, 1.0);
                Ok(JointDistribution {
                    probabilities: vec![0.5 * (1.0 + x), 0.5 * (1.0 - x)],
                    values: vec![vec![1.0], vec![-1.0]],
                })
            }
        }
    }

    /// `H` entries followed by `S` entries.
    fn entries(&self) -> impl Iterator<Item = &EntryRecipe> {
        self.h_entries.iter().chain(&self.s_entries)
    }
}

fn assemble(
    dim: usize,
    entries: &[EntryRecipe],
    values: &[(C64, f64, f64)],
) -> (DMatrix<C64>, DMatrix<f64>) {
    let mut sum = DMatrix::from_element(dim, dim, ZERO);
    let mut var = DMatrix::from_element(dim, dim, 0.0);
    let mut seen = DMatrix::from_element(dim, dim, 0u32);
    for (e, &(z, vr, vi)) in entries.iter().zip(values) {
        sum[(e.row, e.col)] += z;
        var[(e.row, e.col)] += if e.row == e.col { vr } else { vr + vi };
        seen[(e.row, e.col)] += 1;
    }
    // average repeated entries, mirror missing ones, combine stds in quadrature
    let mut value_out = DMatrix::from_element(dim, dim, ZERO);
    let mut std_out = DMatrix::from_element(dim, dim, 0.0);
    for i in 0..dim {
        for j in 0..dim {
            let direct = (seen[(i, j)] > 0).then(|| (sum[(i, j)] / seen[(i, j)] as f64, var[(i, j)] / (seen[(i, j)] as f64).powi(2)));
            let mirror = (seen[(j, i)] > 0).then(|| (sum[(j, i)].conj() / seen[(j, i)] as f64, var[(j, i)] / (seen[(j, i)] as f64).powi(2)));
            let (z, v) = match (direct, mirror) {
                (Some(a), Some(b)) if i != j => ((a.0 + b.0) * 0.5, 0.25 * (a.1 + b.1)),
                (Some(a), _) => a,
                (None, Some(b)) => b,
                (None, None) => (ZERO, 0.0),
            };
            value_out[(i, j)] = if i == j { C64::new(z.re, 0.0) } else { z };
            std_out[(i, j)] = v.sqrt();
        }
    }
    (value_out, std_out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShotPlan {
    pub seed: u64,
    pub mode: GroupingMode,
    /// Shots per measurement group, in [`MeasurementRecipe::groups`] order.
    pub shots: Vec<u64>,
    pub eps_target: Option<f64>,
}

impl ShotPlan {
    pub fn uniform(num_groups: usize, shots_per_group: u64, seed: u64, mode: GroupingMode) -> Self {
        Self {
            seed,
            mode,
            shots: vec![shots_per_group.max(1); num_groups],
            eps_target: None,
        }
    }

    pub fn total_shots(&self) -> u64 {
        self.shots.iter().sum()
    }
}

/// Shot counts `M_f` with `Σ_f Var_{d,f}/M_f ≤ ε²` for every target `d`.
///
/// `variances[d][f]` is the single-shot variance that group `f` contributes
/// to target `d`. Groups are weighted by `w_f = max_d Var_{d,f}` and receive
/// `M_f = ⌈√w_f · Σ_g √w_g / ε²⌉` shots (at least one), which reduces to
/// `M = Var/ε²` for a single group.
pub fn allocate_shots(variances: &[Vec<f64>], eps_target: f64, seed: u64, mode: GroupingMode) -> Result<ShotPlan> {
    if !(eps_target > 0.0) || !eps_target.is_finite() {
        return Err(Error::Domain(format!("target precision {eps_target} must be positive")));
    }
    let nf = variances.first().map_or(0, |v| v.len());
    if variances.iter().any(|v| v.len() != nf) {
        return Err(Error::Mismatch("ragged variance table".into()));
    }
    let w: Vec<f64> = (0..nf)
        .map(|f| variances.iter().fold(0.0f64, |a, v| a.max(v[f])))
        .collect();
    let total: f64 = w.iter().map(|x| x.sqrt()).sum();
    let shots = w
        .iter()
        .map(|x| {
            let m = (x.sqrt() * total / (eps_target * eps_target) * (1.0 - 1e-12)).ceil();
            if m < 1.0 {
                1
            } else if m > u64::MAX as f64 {
                u64::MAX
            } else {
                m as u64
            }
        })
        .collect();
    Ok(ShotPlan {
        seed,
        mode,
        shots,
        eps_target: Some(eps_target),
    })
}

fn entry_terms_by_group(recipe: &MeasurementRecipe, groups: &[MeasurementGroup]) -> Vec<Vec<Vec<(C64, usize)>>> {
    // position of each observable inside its group
    let mut locate = vec![(0usize, 0usize); recipe.observables.len()];
    for (f, g) in groups.iter().enumerate() {
        for (slot, &k) in g.observables.iter().enumerate() {
            locate[k] = (f, slot);
        }
    }
    recipe
        .entries()
        .map(|e| {
            let mut per = vec![Vec::new(); groups.len()];
            for (c, k) in &e.terms {
                let (f, slot) = locate[*k];
                per[f].push((*c, slot));
            }
            per
        })
        .collect()
}

/// Single-shot variances `[entry][group]` from a pilot round (entries are
/// the `H` entries followed by the `S` entries of the recipe).
pub fn pilot_variances(recipe: &MeasurementRecipe, mode: GroupingMode, pilot_shots: u64, seed: u64) -> Result<Vec<Vec<f64>>> {
    let groups = recipe.groups(mode);
    let by_group = entry_terms_by_group(recipe, &groups);
    let mut out = vec![vec![0.0; groups.len()]; by_group.len()];
    for (f, g) in groups.iter().enumerate() {
        let dist = recipe.distribution(g, mode)?;
        let sample = dist.sample(pilot_shots.max(2), &mut stream(seed, PILOT_STREAM_OFFSET + f as u64))?;
        for (d, per) in by_group.iter().enumerate() {
            if per[f].is_empty() {
                continue;
            }
            let (_, vr, vi) = sample.combination(&per[f]);
            out[d][f] = (vr + vi) * sample.shots as f64;
        }
    }
    Ok(out)
}

/// Exact single-shot variances `[entry][group]`.
pub fn exact_variances(recipe: &MeasurementRecipe, mode: GroupingMode) -> Result<Vec<Vec<f64>>> {
    let groups = recipe.groups(mode);
    let by_group = entry_terms_by_group(recipe, &groups);
    let mut out = vec![vec![0.0; groups.len()]; by_group.len()];
    for (f, g) in groups.iter().enumerate() {
        let dist = recipe.distribution(g, mode)?;
        for (d, per) in by_group.iter().enumerate() {
            if !per[f].is_empty() {
                out[d][f] = dist.variance(&per[f]);
            }
        }
    }
    Ok(out)
}

/// Sampled entry means and variances `(value, var_re, var_im)`, `H` entries
/// first.
pub fn sample_entries(recipe: &MeasurementRecipe, plan: &ShotPlan) -> Result<Vec<(C64, f64, f64)>> {
    let groups = recipe.groups(plan.mode);
    if plan.shots.len() != groups.len() {
        return Err(Error::Mismatch(format!(
            "plan covers {} groups, recipe has {}",
            plan.shots.len(),
            groups.len()
        )));
    }
    let by_group = entry_terms_by_group(recipe, &groups);
    let mut acc = vec![(ZERO, 0.0, 0.0); by_group.len()];
    for (f, g) in groups.iter().enumerate() {
        let dist = recipe.distribution(g, plan.mode)?;
        let sample = dist.sample(plan.shots[f], &mut stream(plan.seed, f as u64))?;
        for (d, per) in by_group.iter().enumerate() {
            if per[f].is_empty() {
                continue;
            }
            let (z, vr, vi) = sample.combination(&per[f]);
            acc[d].0 += z;
            acc[d].1 += vr;
            acc[d].2 += vi;
        }
    }
    Ok(acc)
}

/// Shot-sampled problem with propagated per-entry standard deviations.
pub fn noisy_subspace(recipe: &MeasurementRecipe, plan: &ShotPlan) -> Result<SubspaceProblem> {
    let sampled = sample_entries(recipe, plan)?;
    let (hs, ss) = sampled.split_at(recipe.h_entries.len());
    let (h, hstd) = assemble(recipe.dim, &recipe.h_entries, hs);
    let (s, sstd) = assemble(recipe.dim, &recipe.s_entries, ss);
    let provenance = recipe
        .provenance
        .clone()
        .with("seed", plan.seed as f64)
        .with("total_shots", plan.total_shots() as f64);
    SubspaceProblem::new(h, s, provenance)?.with_noise(NoiseStd { h: hstd, s: sstd })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseEstimate {
    /// `cos(θ₁ − θ₀)` clamped to `[−1, 1]`.
    pub cos: f64,
    pub raw: f64,
    pub in_range: bool,
    /// The two phases compatible with `θ₀` and the recovered cosine.
    pub theta1: (f64, f64),
}

/// Recovers `cos(θ₁ − θ₀)` from `4f₂ = f₁ + f₀ + 2√(f₀f₁) cos(θ₁ − θ₀)`.
pub fn hadamard_free_overlap(f0: f64, f1: f64, f2: f64, theta0: f64, tol: f64) -> Result<PhaseEstimate> {
    if f0 < 0.0 || f1 < 0.0 || f2 < 0.0 {
        return Err(Error::Domain("probabilities must be non-negative".into()));
    }
    let denom = 2.0 * (f0 * f1).sqrt();
    if denom == 0.0 {
        return Err(Error::Domain("phase indeterminate when f₀f₁ = 0".into()));
    }
    let raw = (4.0 * f2 - f1 - f0) / denom;
    let cos = raw.clamp(-1.0, 1.0);
    let d = cos.acos();
    Ok(PhaseEstimate {
        cos,
        raw,
        in_range: raw >= -1.0 - tol && raw <= 1.0 + tol,
        theta1: (theta0 + d, theta0 - d),
    })
}

/// Uniform draw used by tests and the CLI to derive sub-seeds.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    stream(seed, index).random()
}
