//! Pauli strings, Pauli sums, the Jordan–Wigner mapping and commuting-group
//! partitioning.
//!
//! Qubit `ℓ` carries weight `2^ℓ` in basis indices. Letters are printed with
//! qubit `N_q − 1` leftmost.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::integrals::MolecularIntegrals;
use crate::linalg::{self, C64};

pub const PRUNE_TOL: f64 = 1e-14;
pub const MAX_QUBITS: usize = 32;
/// Largest orbital count accepted by [`jordan_wigner`].
pub const MAX_JW_ORBITALS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    fn code(self) -> u64 {
        match self {
            Letter::I => 0,
            Letter::X => 1,
            Letter::Y => 2,
            Letter::Z => 3,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }
}

/// `P = i^{|x∧z|} X^x Z^z`, so a qubit with both bits set carries `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    num_qubits: usize,
    x: u64,
    z: u64,
}

impl PauliString {
    pub fn identity(num_qubits: usize) -> Self {
        Self { num_qubits, x: 0, z: 0 }
    }

    pub fn from_masks(num_qubits: usize, x: u64, z: u64) -> Result<Self> {
        if num_qubits > MAX_QUBITS {
            return Err(Error::Capacity(format!("{num_qubits} qubits exceeds {MAX_QUBITS}")));
        }
        let mask = if num_qubits == 64 { u64::MAX } else { (1u64 << num_qubits) - 1 };
        if (x | z) & !mask != 0 {
            return Err(Error::Domain("Pauli masks extend past the register".into()));
        }
        Ok(Self { num_qubits, x, z })
    }

    pub fn single(num_qubits: usize, qubit: usize, letter: Letter) -> Self {
        let mut s = Self::identity(num_qubits);
        s.set(qubit, letter);
        s
    }

    /// Parses letters written with qubit `N_q − 1` first.
    pub fn from_letters(text: &str) -> Result<Self> {
        let chars: Vec<char> = text.chars().collect();
        let n = chars.len();
        if n > MAX_QUBITS {
            return Err(Error::Capacity(format!("{n} qubits exceeds {MAX_QUBITS}")));
        }
        let mut s = Self::identity(n);
        for (pos, c) in chars.iter().enumerate() {
            let q = n - 1 - pos;
            let letter = match c {
                'I' => Letter::I,
                'X' => Letter::X,
                'Y' => Letter::Y,
                'Z' => Letter::Z,
                other => return Err(Error::Data(format!("invalid Pauli letter '{other}'"))),
            };
            s.set(q, letter);
        }
        Ok(s)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    /// Qubits acted on non-trivially.
    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    pub fn weight(&self) -> usize {
        self.support().count_ones() as usize
    }

    pub fn is_identity(&self) -> bool {
        self.support() == 0
    }

    /// Only `I` and `Z` letters.
    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    pub fn letter(&self, q: usize) -> Letter {
        match (self.x >> q & 1, self.z >> q & 1) {
            (0, 0) => Letter::I,
            (1, 0) => Letter::X,
            (1, 1) => Letter::Y,
            _ => Letter::Z,
        }
    }

    pub fn set(&mut self, q: usize, letter: Letter) {
        let bit = 1u64 << q;
        self.x &= !bit;
        self.z &= !bit;
        match letter {
            Letter::I => {}
            Letter::X => self.x |= bit,
            Letter::Y => {
                self.x |= bit;
                self.z |= bit;
            }
            Letter::Z => self.z |= bit,
        }
    }

    /// Number of `Y` letters.
    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    fn sort_key(&self) -> (u128, usize) {
        let mut key: u128 = 0;
        for q in (0..self.num_qubits).rev() {
            key = key * 4 + self.letter(q).code() as u128;
        }
        (key, self.num_qubits)
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z) ^ (self.z & other.x)).count_ones() % 2 == 0
    }

    /// Letter-wise commutation: on every qubit the letters agree or one is `I`.
    pub fn qubitwise_commutes_with(&self, other: &PauliString) -> bool {
        let both = self.support() & other.support();
        let differ = (self.x ^ other.x) | (self.z ^ other.z);
        both & differ == 0
    }

    /// `⟨b'|P|b⟩` is non-zero only for `b' = b ^ x`; returns that phase.
    pub fn phase_on(&self, basis: u64) -> C64 {
        let k = (self.y_count() + 2 * (self.z & basis).count_ones()) % 4;
        I_POWERS[k as usize]
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let dim = 1usize << self.num_qubits;
        let mut m = DMatrix::from_element(dim, dim, linalg::ZERO);
        for b in 0..dim as u64 {
            m[((b ^ self.x) as usize, b as usize)] = self.phase_on(b);
        }
        m
    }
}

const I_POWERS: [C64; 4] = [
    C64 { re: 1.0, im: 0.0 },
    C64 { re: 0.0, im: 1.0 },
    C64 { re: -1.0, im: 0.0 },
    C64 { re: 0.0, im: -1.0 },
];

impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in (0..self.num_qubits).rev() {
            write!(f, "{}", self.letter(q).to_char())?;
        }
        Ok(())
    }
}

/// `a·b = phase · c` with `phase ∈ {±1, ±i}`.
pub fn pauli_product(a: &PauliString, b: &PauliString) -> Result<(C64, PauliString)> {
    if a.num_qubits != b.num_qubits {
        return Err(Error::Mismatch(format!(
            "Pauli strings on {} and {} qubits",
            a.num_qubits, b.num_qubits
        )));
    }
    Ok(product_unchecked(a, b))
}

fn product_unchecked(a: &PauliString, b: &PauliString) -> (C64, PauliString) {
    let r = PauliString {
        num_qubits: a.num_qubits,
        x: a.x ^ b.x,
        z: a.z ^ b.z,
    };
    let e = (a.y_count() + b.y_count() + 4 - r.y_count() % 4 + 2 * (a.z & b.x).count_ones()) % 4;
    (I_POWERS[e as usize], r)
}

/// Canonical linear combination of Pauli strings.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    num_qubits: usize,
    terms: Vec<(C64, PauliString)>,
}

/// Accumulates terms before canonicalization.
#[derive(Debug, Clone, Default)]
struct Accumulator {
    map: BTreeMap<(u64, u64), C64>,
}

impl Accumulator {
    fn add(&mut self, c: C64, p: &PauliString) {
        *self.map.entry((p.x, p.z)).or_insert(linalg::ZERO) += c;
    }

    fn finish(self, num_qubits: usize) -> PauliSum {
        let mut terms: Vec<(C64, PauliString)> = self
            .map
            .into_iter()
            .filter(|(_, c)| linalg::cabs(*c) >= PRUNE_TOL)
            .map(|((x, z), c)| (c, PauliString { num_qubits, x, z }))
            .collect();
        terms.sort_by(|a, b| a.1.cmp(&b.1));
        PauliSum { num_qubits, terms }
    }
}

impl PauliSum {
    pub fn zero(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            terms: Vec::new(),
        }
    }

    pub fn identity(num_qubits: usize, c: C64) -> Self {
        Self::from_terms(num_qubits, [(c, PauliString::identity(num_qubits))])
    }

    pub fn from_string(c: C64, p: PauliString) -> Self {
        Self::from_terms(p.num_qubits, [(c, p)])
    }

    pub fn from_terms<I: IntoIterator<Item = (C64, PauliString)>>(num_qubits: usize, terms: I) -> Self {
        let mut acc = Accumulator::default();
        for (c, p) in terms {
            debug_assert_eq!(p.num_qubits, num_qubits);
            acc.add(c, &p);
        }
        acc.finish(num_qubits)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn terms(&self) -> &[(C64, PauliString)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, p: &PauliString) -> C64 {
        self.terms
            .binary_search_by(|(_, q)| q.cmp(p))
            .map(|i| self.terms[i].0)
            .unwrap_or(linalg::ZERO)
    }

    fn check(&self, other: &PauliSum) -> Result<()> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::Mismatch(format!(
                "Pauli sums on {} and {} qubits",
                self.num_qubits, other.num_qubits
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check(other)?;
        Ok(Self::from_terms(
            self.num_qubits,
            self.terms.iter().chain(&other.terms).copied(),
        ))
    }

    pub fn sub(&self, other: &PauliSum) -> Result<PauliSum> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> PauliSum {
        Self::from_terms(self.num_qubits, self.terms.iter().map(|&(d, p)| (c * d, p)))
    }

    pub fn mul(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check(other)?;
        let mut acc = Accumulator::default();
        for (ca, pa) in &self.terms {
            for (cb, pb) in &other.terms {
                let (ph, p) = product_unchecked(pa, pb);
                acc.add(ca * cb * ph, &p);
            }
        }
        Ok(acc.finish(self.num_qubits))
    }

    /// `[A, B] = AB − BA`
    pub fn commutator(&self, other: &PauliSum) -> Result<PauliSum> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    /// `{A, B} = AB + BA`
    pub fn anticommutator(&self, other: &PauliSum) -> Result<PauliSum> {
        self.mul(other)?.add(&other.mul(self)?)
    }

    pub fn adjoint(&self) -> PauliSum {
        PauliSum {
            num_qubits: self.num_qubits,
            terms: self.terms.iter().map(|&(c, p)| (c.conj(), p)).collect(),
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.iter().all(|(c, _)| c.im.abs() <= tol)
    }

    /// Sum of coefficient magnitudes.
    pub fn one_norm(&self) -> f64 {
        self.terms.iter().map(|(c, _)| linalg::cabs(*c)).sum()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let dim = 1usize << self.num_qubits;
        let mut m = DMatrix::from_element(dim, dim, linalg::ZERO);
        for (c, p) in &self.terms {
            for b in 0..dim as u64 {
                m[((b ^ p.x) as usize, b as usize)] += c * p.phase_on(b);
            }
        }
        m
    }

    /// One line per term: `re im LETTERS`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (c, p) in &self.terms {
            out.push_str(&format!("{:.17e} {:.17e} {}\n", c.re, c.im, p));
        }
        out
    }
}

/// `a†_mode` on `num_qubits` qubits: `Z_{<mode} ⊗ (X − iY)/2`.
pub fn creation(mode: usize, num_qubits: usize) -> PauliSum {
    ladder(mode, num_qubits, -1.0)
}

/// `a_mode`: `Z_{<mode} ⊗ (X + iY)/2`.
pub fn annihilation(mode: usize, num_qubits: usize) -> PauliSum {
    ladder(mode, num_qubits, 1.0)
}

fn ladder(mode: usize, num_qubits: usize, y_sign: f64) -> PauliSum {
    let tail = (1u64 << mode) - 1;
    let bit = 1u64 << mode;
    let x = PauliString { num_qubits, x: bit, z: tail };
    let y = PauliString { num_qubits, x: bit, z: tail | bit };
    PauliSum::from_terms(
        num_qubits,
        [(C64::new(0.5, 0.0), x), (C64::new(0.0, 0.5 * y_sign), y)],
    )
}

/// Cached `a†_p a_q` images for all mode pairs.
#[derive(Debug, Clone)]
pub struct ExcitationTable {
    num_qubits: usize,
    table: Vec<PauliSum>,
}

impl ExcitationTable {
    pub fn new(num_qubits: usize) -> Self {
        let cr: Vec<PauliSum> = (0..num_qubits).map(|p| creation(p, num_qubits)).collect();
        let an: Vec<PauliSum> = (0..num_qubits).map(|p| annihilation(p, num_qubits)).collect();
        let mut table = Vec::with_capacity(num_qubits * num_qubits);
        for c in &cr {
            for a in &an {
                table.push(c.mul(a).expect("same register"));
            }
        }
        Self { num_qubits, table }
    }

    /// `a†_p a_q`
    pub fn get(&self, p: usize, q: usize) -> &PauliSum {
        &self.table[p * self.num_qubits + q]
    }
}

/// Particle-number operator `Σ_p n_p` over `modes`.
pub fn number_operator(modes: core::ops::Range<usize>, num_qubits: usize) -> PauliSum {
    let mut terms = Vec::new();
    for p in modes {
        terms.push((C64::new(0.5, 0.0), PauliString::identity(num_qubits)));
        terms.push((C64::new(-0.5, 0.0), PauliString::single(num_qubits, p, Letter::Z)));
    }
    PauliSum::from_terms(num_qubits, terms)
}

/// Jordan–Wigner image of the full second-quantized Hamiltonian on `2M`
/// qubits (up orbital `p` → qubit `p`, down → `p + M`).
pub fn jordan_wigner(ints: &MolecularIntegrals) -> Result<PauliSum> {
    let m = ints.num_orbitals();
    if m > MAX_JW_ORBITALS {
        return Err(Error::Capacity(format!(
            "{m} orbitals exceeds the Jordan–Wigner limit of {MAX_JW_ORBITALS}"
        )));
    }
    let nq = 2 * m;
    let ex = ExcitationTable::new(nq);
    let mut acc = Accumulator::default();
    acc.add(C64::new(ints.e_nuc(), 0.0), &PauliString::identity(nq));
    let push = |acc: &mut Accumulator, c: f64, s: &PauliSum| {
        for (d, p) in s.terms() {
            acc.add(d * c, p);
        }
    };
    for sigma in 0..2 {
        let o = sigma * m;
        for p in 0..m {
            for r in 0..m {
                let h = ints.h(p, r);
                if h != 0.0 {
                    push(&mut acc, h, ex.get(p + o, r + o));
                }
            }
        }
    }
    // ½ Σ (pr|qs) a†_pσ a†_qτ a_sτ a_rσ = ½ Σ (pr|qs) (E_pσ,rσ E_qτ,sτ − δ_rq δ_στ E_pσ,sτ)
    for sigma in 0..2 {
        for tau in 0..2 {
            let (os, ot) = (sigma * m, tau * m);
            for p in 0..m {
                for r in 0..m {
                    for q in 0..m {
                        for s in 0..m {
                            let v = ints.eri(p, r, q, s);
                            if v == 0.0 {
                                continue;
                            }
                            let prod = ex.get(p + os, r + os).mul(ex.get(q + ot, s + ot))?;
                            push(&mut acc, 0.5 * v, &prod);
                            if r == q && sigma == tau {
                                push(&mut acc, -0.5 * v, ex.get(p + os, s + ot));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(acc.finish(nq))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupingMode {
    Qubitwise,
    Full,
}

impl GroupingMode {
    pub fn compatible(self, a: &PauliString, b: &PauliString) -> bool {
        match self {
            GroupingMode::Qubitwise => a.qubitwise_commutes_with(b),
            GroupingMode::Full => a.commutes_with(b),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GroupingMode::Qubitwise => "qubitwise",
            GroupingMode::Full => "full",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommutingGroups {
    /// Term indices into the grouped sum.
    pub groups: Vec<Vec<usize>>,
    pub mode: GroupingMode,
}

/// Greedy sorted-insertion grouping: terms are visited by descending
/// coefficient magnitude and placed in the first compatible group.
pub fn group_commuting(h: &PauliSum, mode: GroupingMode) -> CommutingGroups {
    let mut order: Vec<usize> = (0..h.len()).collect();
    order.sort_by(|&a, &b| {
        linalg::cabs(h.terms[b].0)
            .total_cmp(&linalg::cabs(h.terms[a].0))
            .then(a.cmp(&b))
    });
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in order {
        let p = &h.terms[i].1;
        match groups
            .iter_mut()
            .find(|g| g.iter().all(|&j| mode.compatible(p, &h.terms[j].1)))
        {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    CommutingGroups { groups, mode }
}
