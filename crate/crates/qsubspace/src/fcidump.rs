//! FCIDUMP reader and writer.
//!
//! Indices are 1-based. A record `v p r q s` is a two-electron integral
//! `(pr|qs)` when all indices are positive, a one-electron integral `h_pr`
//! when `q = s = 0`, the nuclear repulsion when all four are zero, and an
//! orbital energy (ignored) when only `p` is set.

use std::fmt::Write as _;

use qsubspace_core::integrals::MolecularIntegrals;

use crate::FormatError;

#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub norb: usize,
    pub nelec: usize,
    pub ms2: i64,
    /// Read but not used.
    pub orbsym: Vec<i64>,
    pub isym: Option<i64>,
}

fn err(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Parse { line, msg: msg.into() }
}

fn parse_value(tok: &str, line: usize) -> Result<f64, FormatError> {
    tok.replace(['D', 'd'], "e")
        .parse::<f64>()
        .map_err(|_| err(line, format!("non-numeric value '{tok}'")))
}

/// Splits the namelist body into `KEY=v1,v2,...` assignments.
fn parse_namelist(body: &str, line: usize) -> Result<Header, FormatError> {
    let mut joined = String::with_capacity(body.len());
    let mut after_eq = false;
    for c in body.chars() {
        if c == '=' {
            joined.truncate(joined.trim_end().len());
            after_eq = true;
        } else if after_eq && c.is_whitespace() {
            continue;
        } else {
            after_eq = false;
        }
        joined.push(c);
    }
    let mut fields: Vec<(String, Vec<String>)> = Vec::new();
    for tok in joined.split([',', ' ', '\t', '\n', '\r']).filter(|t| !t.is_empty()) {
        if let Some((k, v)) = tok.split_once('=') {
            let mut vals = Vec::new();
            if !v.is_empty() {
                vals.push(v.to_string());
            }
            fields.push((k.trim().to_ascii_uppercase(), vals));
        } else if let Some(last) = fields.last_mut() {
            last.1.push(tok.to_string());
        } else {
            return Err(err(line, format!("unexpected token '{tok}' in header")));
        }
    }
    let int = |key: &str| -> Result<Option<i64>, FormatError> {
        match fields.iter().find(|(k, _)| k == key) {
            None => Ok(None),
            Some((_, v)) if v.len() == 1 => v[0]
                .parse::<i64>()
                .map(Some)
                .map_err(|_| err(line, format!("{key} is not an integer"))),
            Some(_) => Err(err(line, format!("{key} needs exactly one value"))),
        }
    };
    let norb = int("NORB")?.ok_or_else(|| err(line, "header lacks NORB"))?;
    let nelec = int("NELEC")?.ok_or_else(|| err(line, "header lacks NELEC"))?;
    let ms2 = int("MS2")?.unwrap_or(0);
    if norb < 1 || nelec < 0 {
        return Err(err(line, "NORB must be positive and NELEC non-negative"));
    }
    let orbsym = match fields.iter().find(|(k, _)| k == "ORBSYM") {
        Some((_, v)) => v
            .iter()
            .map(|x| x.parse::<i64>().map_err(|_| err(line, "ORBSYM entries must be integers")))
            .collect::<Result<_, _>>()?,
        None => Vec::new(),
    };
    Ok(Header {
        norb: norb as usize,
        nelec: nelec as usize,
        ms2,
        orbsym,
        isym: int("ISYM")?,
    })
}

pub fn parse_fcidump(text: &str) -> Result<MolecularIntegrals, FormatError> {
    let lines: Vec<&str> = text.lines().collect();
    let start = lines
        .iter()
        .position(|l| !l.trim().is_empty())
        .ok_or_else(|| err(1, "empty input"))?;
    if !lines[start].trim_start().to_ascii_uppercase().starts_with("&FCI") {
        return Err(err(start + 1, "header must start with &FCI"));
    }
    let mut body = String::new();
    let mut end = None;
    for (k, l) in lines.iter().enumerate().skip(start) {
        let mut s = l.trim();
        if k == start {
            s = s[4..].trim_start();
        }
        let upper = s.to_ascii_uppercase();
        let stop = upper.find("&END").or_else(|| upper.find('/'));
        match stop {
            Some(pos) => {
                body.push_str(&s[..pos]);
                end = Some(k);
                break;
            }
            None => {
                body.push_str(s);
                body.push(' ');
            }
        }
    }
    let end = end.ok_or_else(|| err(start + 1, "header is not terminated by &END or /"))?;
    let header = parse_namelist(&body, start + 1)?;
    let m = header.norb;
    let two_ms = header.ms2;
    let nelec = header.nelec as i64;
    if (nelec + two_ms) % 2 != 0 || two_ms.abs() > nelec {
        return Err(err(start + 1, format!("NELEC={nelec} and MS2={two_ms} are inconsistent")));
    }
    let num_up = ((nelec + two_ms) / 2) as usize;
    let num_down = ((nelec - two_ms) / 2) as usize;
    let mut ints = MolecularIntegrals::zeros(m, num_up, num_down).map_err(|e| err(start + 1, e.to_string()))?;

    for (k, l) in lines.iter().enumerate().skip(end + 1) {
        let lineno = k + 1;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 5 {
            return Err(err(lineno, format!("expected 5 fields, found {}", toks.len())));
        }
        let v = parse_value(toks[0], lineno)?;
        let mut idx = [0usize; 4];
        for (slot, t) in idx.iter_mut().zip(&toks[1..]) {
            let i: i64 = t.parse().map_err(|_| err(lineno, format!("index '{t}' is not an integer")))?;
            if i < 0 || i as usize > m {
                return Err(err(lineno, format!("index {i} outside [0, {m}]")));
            }
            *slot = i as usize;
        }
        match idx {
            [0, 0, 0, 0] => ints.set_e_nuc(v),
            [p, r, 0, 0] if p > 0 && r > 0 => ints.set_h(p - 1, r - 1, v),
            [p, 0, 0, 0] if p > 0 => {}
            [p, r, q, s] if p > 0 && r > 0 && q > 0 && s > 0 => ints.set_eri(p - 1, r - 1, q - 1, s - 1, v),
            _ => return Err(err(lineno, format!("index pattern {idx:?} is not an FCIDUMP record"))),
        }
    }
    Ok(ints)
}

/// Canonical FCIDUMP: unique nonzero `(pr|qs)`, then the lower triangle of
/// `h`, then `E_nuc`. Values are written with 17 significant digits.
pub fn write_fcidump(ints: &MolecularIntegrals) -> String {
    let m = ints.num_orbitals();
    let nelec = ints.num_up() + ints.num_down();
    let ms2 = ints.num_up() as i64 - ints.num_down() as i64;
    let mut out = String::new();
    let orbsym = vec!["1"; m].join(",");
    let _ = writeln!(out, "&FCI NORB={m},NELEC={nelec},MS2={ms2},");
    let _ = writeln!(out, " ORBSYM={orbsym},");
    let _ = writeln!(out, " ISYM=1,");
    let _ = writeln!(out, "&END");
    for (p, r, q, s, v) in ints.unique_eri() {
        if v != 0.0 {
            let _ = writeln!(out, "{v:>25.16e} {:>3} {:>3} {:>3} {:>3}", p + 1, r + 1, q + 1, s + 1);
        }
    }
    for p in 0..m {
        for r in 0..=p {
            let v = ints.h(p, r);
            if v != 0.0 {
                let _ = writeln!(out, "{v:>25.16e} {:>3} {:>3} {:>3} {:>3}", p + 1, r + 1, 0, 0);
            }
        }
    }
    let _ = writeln!(out, "{:>25.16e} {:>3} {:>3} {:>3} {:>3}", ints.e_nuc(), 0, 0, 0, 0);
    out
}
