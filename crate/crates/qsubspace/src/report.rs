//! Report pieces and CSV tables.

use std::io::Write;

use nalgebra::DMatrix;
use qsubspace_core::classical::TraceRow;
use qsubspace_core::C64;
use serde::Serialize;
use serde_json::Value;

/// JSON number, or `null` when not finite.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

fn rows(m: &DMatrix<C64>, f: impl Fn(C64) -> f64) -> Value {
    Value::Array((0..m.nrows()).map(|i| nums(&(0..m.ncols()).map(|j| f(m[(i, j)])).collect::<Vec<_>>())).collect())
}

pub fn matrices(h: &DMatrix<C64>, s: &DMatrix<C64>) -> Value {
    serde_json::json!({
        "h_re": rows(h, |z| z.re),
        "h_im": rows(h, |z| z.im),
        "s_re": rows(s, |z| z.re),
        "s_im": rows(s, |z| z.im),
    })
}

/// One row of `sweep.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub ground_energy: Option<f64>,
    /// Ground energy minus the FCI ground energy.
    pub error: Option<f64>,
    pub cond: Option<f64>,
    pub n_eps: Option<usize>,
    /// Method-specific bound on `error` (Kaniel–Paige, Epperly) or on
    /// `cond` (Beckermann–Townsend).
    pub bound: Option<f64>,
}

impl SweepRow {
    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "value": num(self.value),
            "ground_energy": opt(self.ground_energy),
            "error": opt(self.error),
            "cond": opt(self.cond.filter(|c| c.is_finite())),
            "n_eps": self.n_eps,
            "bound": opt(self.bound.filter(|b| b.is_finite())),
        })
    }
}

fn cell(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v:.17e}"),
        Some(v) => format!("{v}"),
        None => String::new(),
    }
}

pub fn write_sweep_csv<W: Write>(out: W, axis: &str, rows: &[SweepRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([axis, "ground_energy", "error", "cond", "n_eps", "bound"])?;
    for r in rows {
        w.write_record([
            cell(Some(r.value)),
            cell(r.ground_energy),
            cell(r.error),
            cell(r.cond),
            r.n_eps.map(|n| n.to_string()).unwrap_or_default(),
            cell(r.bound),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `(ω, Re C, Im C)` rows.
pub fn write_spectrum_csv<W: Write>(out: W, omegas: &[f64], values: &[C64]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["omega", "re", "im"])?;
    for (o, v) in omegas.iter().zip(values) {
        w.write_record([cell(Some(*o)), cell(Some(v.re)), cell(Some(v.im))])?;
    }
    w.flush()?;
    Ok(())
}

/// Davidson convergence trace `(iteration, energy, residual)`.
pub fn write_trace_csv<W: Write>(out: W, trace: &[TraceRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "energy", "residual"])?;
    for r in trace {
        w.write_record([r.iteration.to_string(), cell(Some(r.energy)), cell(Some(r.residual))])?;
    }
    w.flush()?;
    Ok(())
}
