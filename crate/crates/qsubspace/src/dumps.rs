//! Raw dumps for cross-implementation diffing.

use std::fmt::Write as _;

use qsubspace_core::engine::Statevector;
use qsubspace_core::fock::SectorHamiltonian;
use qsubspace_core::C64;

use crate::FormatError;

/// Sector Hamiltonian as row-major little-endian complex doubles `(re, im)`.
pub fn hamiltonian_bytes(ham: &SectorHamiltonian) -> Result<Vec<u8>, FormatError> {
    let m = ham.dense_matrix()?;
    let d = m.nrows();
    let mut out = Vec::with_capacity(16 * d * d);
    for i in 0..d {
        for j in 0..d {
            out.extend_from_slice(&m[(i, j)].to_le_bytes());
            out.extend_from_slice(&0.0f64.to_le_bytes());
        }
    }
    Ok(out)
}

/// Inverse of [`hamiltonian_bytes`]: returns the dimension and row-major entries.
pub fn read_hamiltonian_bytes(bytes: &[u8]) -> Result<(usize, Vec<C64>), FormatError> {
    if bytes.len() % 16 != 0 {
        return Err(FormatError::Invalid(format!("{} bytes is not a whole number of complex doubles", bytes.len())));
    }
    let count = bytes.len() / 16;
    let d = (count as f64).sqrt().round() as usize;
    if d * d != count {
        return Err(FormatError::Invalid(format!("{count} entries do not form a square matrix")));
    }
    let f = |k: usize| f64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().expect("8 bytes"));
    Ok((d, (0..count).map(|k| C64::new(f(2 * k), f(2 * k + 1))).collect()))
}

/// One line per amplitude: `index re im`.
pub fn amplitude_text(s: &Statevector) -> String {
    let mut out = String::new();
    for (k, a) in s.amplitudes().iter().enumerate() {
        let _ = writeln!(out, "{k} {:.17e} {:.17e}", a.re, a.im);
    }
    out
}

pub fn parse_amplitude_text(text: &str) -> Result<Vec<C64>, FormatError> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: &str| FormatError::Parse { line: k + 1, msg: msg.into() };
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(bad("expected 'index re im'"));
        }
        let idx: usize = toks[0].parse().map_err(|_| bad("index is not an integer"))?;
        if idx != out.len() {
            return Err(bad("indices must run 0, 1, 2, ..."));
        }
        let re: f64 = toks[1].parse().map_err(|_| bad("non-numeric real part"))?;
        let im: f64 = toks[2].parse().map_err(|_| bad("non-numeric imaginary part"))?;
        out.push(C64::new(re, im));
    }
    Ok(out)
}
