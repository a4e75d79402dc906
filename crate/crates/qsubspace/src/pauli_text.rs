//! `PauliSum` text format: one term per line, `re im LETTERS`, letters
//! written from qubit `N_q − 1` down to qubit 0. Blank lines and lines
//! starting with `#` are skipped.

use qsubspace_core::qubits::{PauliString, PauliSum};
use qsubspace_core::C64;

use crate::FormatError;

pub fn write_pauli_sum(h: &PauliSum) -> String {
    h.to_text()
}

pub fn parse_pauli_sum(text: &str) -> Result<PauliSum, FormatError> {
    let mut terms = Vec::new();
    let mut nq = None;
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: String| FormatError::Parse { line: k + 1, msg };
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(bad(format!("expected 're im LETTERS', found {} fields", toks.len())));
        }
        let re: f64 = toks[0].parse().map_err(|_| bad(format!("non-numeric value '{}'", toks[0])))?;
        let im: f64 = toks[1].parse().map_err(|_| bad(format!("non-numeric value '{}'", toks[1])))?;
        let p = PauliString::from_letters(toks[2]).map_err(|e| bad(e.to_string()))?;
        match nq {
            None => nq = Some(p.num_qubits()),
            Some(n) if n != p.num_qubits() => {
                return Err(bad(format!("{} letters after {n}-qubit terms", p.num_qubits())));
            }
            Some(_) => {}
        }
        terms.push((C64::new(re, im), p));
    }
    let nq = nq.ok_or(FormatError::Invalid("no Pauli terms".into()))?;
    Ok(PauliSum::from_terms(nq, terms))
}
