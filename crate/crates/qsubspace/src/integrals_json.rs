//! Canonical JSON dump of integrals.

use qsubspace_core::integrals::MolecularIntegrals;
use serde::{Deserialize, Serialize};

use crate::FormatError;

pub const INTEGRALS_FORMAT: &str = "qsubspace-integrals";
pub const INTEGRALS_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EriEntry {
    pub p: usize,
    pub r: usize,
    pub q: usize,
    pub s: usize,
    pub value: f64,
}

/// Zero-based indices; two-body entries are the canonical unique set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegralsDump {
    pub format: String,
    pub version: u32,
    pub num_orbitals: usize,
    pub num_up: usize,
    pub num_down: usize,
    pub e_nuc: f64,
    /// Row-major.
    pub one_body: Vec<Vec<f64>>,
    pub two_body: Vec<EriEntry>,
}

impl IntegralsDump {
    pub fn from_integrals(ints: &MolecularIntegrals) -> Self {
        let m = ints.num_orbitals();
        Self {
            format: INTEGRALS_FORMAT.into(),
            version: INTEGRALS_VERSION,
            num_orbitals: m,
            num_up: ints.num_up(),
            num_down: ints.num_down(),
            e_nuc: ints.e_nuc(),
            one_body: (0..m).map(|p| (0..m).map(|r| ints.h(p, r)).collect()).collect(),
            two_body: ints
                .unique_eri()
                .into_iter()
                .map(|(p, r, q, s, value)| EriEntry { p, r, q, s, value })
                .collect(),
        }
    }

    pub fn to_integrals(&self) -> Result<MolecularIntegrals, FormatError> {
        if self.format != INTEGRALS_FORMAT || self.version != INTEGRALS_VERSION {
            return Err(FormatError::Invalid(format!(
                "expected {INTEGRALS_FORMAT} v{INTEGRALS_VERSION}, found {} v{}",
                self.format, self.version
            )));
        }
        let m = self.num_orbitals;
        if self.one_body.len() != m || self.one_body.iter().any(|row| row.len() != m) {
            return Err(FormatError::Invalid(format!("one_body must be {m}×{m}")));
        }
        let scale = self.one_body.iter().flatten().fold(1.0f64, |a, v| a.max(v.abs()));
        let mut ints = MolecularIntegrals::zeros(m, self.num_up, self.num_down)?;
        ints.set_e_nuc(self.e_nuc);
        for p in 0..m {
            for r in 0..=p {
                if (self.one_body[p][r] - self.one_body[r][p]).abs() > 1e-12 * scale {
                    return Err(FormatError::Invalid(format!("one_body not symmetric at ({p}, {r})")));
                }
                ints.set_h(p, r, self.one_body[p][r]);
            }
        }
        for e in &self.two_body {
            if [e.p, e.r, e.q, e.s].iter().any(|&i| i >= m) {
                return Err(FormatError::Invalid(format!("two-body index out of range in ({}{}|{}{})", e.p, e.r, e.q, e.s)));
            }
            ints.set_eri(e.p, e.r, e.q, e.s, e.value);
        }
        Ok(ints)
    }
}

pub fn to_json(ints: &MolecularIntegrals) -> String {
    serde_json::to_string_pretty(&IntegralsDump::from_integrals(ints)).expect("integrals serialize")
}

pub fn from_json(text: &str) -> Result<MolecularIntegrals, FormatError> {
    let dump: IntegralsDump = serde_json::from_str(text).map_err(|e| FormatError::Parse {
        line: e.line(),
        msg: e.to_string(),
    })?;
    dump.to_integrals()
}
