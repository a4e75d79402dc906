//! Run configuration: a TOML file merged with command-line flags (flags win).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Parser;
use serde::{Deserialize, Serialize};

use crate::{exit, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Fci,
    Lanczos,
    Davidson,
    PowerKrylov,
    Chebyshev,
    GaussianPower,
    Qse,
    Qeom,
    Qfd,
    Qlanczos,
    Spectrum,
    Fastforward,
}

impl Method {
    pub const ALL: [Method; 12] = [
        Method::Fci,
        Method::Lanczos,
        Method::Davidson,
        Method::PowerKrylov,
        Method::Chebyshev,
        Method::GaussianPower,
        Method::Qse,
        Method::Qeom,
        Method::Qfd,
        Method::Qlanczos,
        Method::Spectrum,
        Method::Fastforward,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Fci => "fci",
            Method::Lanczos => "lanczos",
            Method::Davidson => "davidson",
            Method::PowerKrylov => "power-krylov",
            Method::Chebyshev => "chebyshev",
            Method::GaussianPower => "gaussian-power",
            Method::Qse => "qse",
            Method::Qeom => "qeom",
            Method::Qfd => "qfd",
            Method::Qlanczos => "qlanczos",
            Method::Spectrum => "spectrum",
            Method::Fastforward => "fastforward",
        }
    }

    /// Parameters (keys of `[params]`) the method reads.
    pub fn parameters(self) -> &'static [&'static str] {
        match self {
            Method::Fci => &["roots"],
            Method::Lanczos => &["n", "eps", "start"],
            Method::Davidson => &["roots", "tol", "max_iter"],
            Method::PowerKrylov | Method::Chebyshev => &["n", "eps", "start"],
            Method::GaussianPower => &["n", "eps", "tau", "shift", "start"],
            Method::Qse => &["level", "eps", "start"],
            Method::Qeom => &["level", "tda", "start"],
            Method::Qfd => &["n", "dt", "eps", "symmetric", "backend", "trotter_substeps", "start"],
            Method::Qlanczos => &["n", "dtau", "eps", "qite", "qite_substeps", "start"],
            Method::Spectrum => &["basis", "n", "dt", "eps", "eta", "omega", "excite_from", "excite_to", "start"],
            Method::Fastforward => &["n", "dt", "eps", "time", "start"],
        }
    }

    pub fn supports_shots(self) -> bool {
        matches!(self, Method::Qse | Method::Qfd)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
            CliError::usage("method", format!("unknown method '{s}' (expected one of {})", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Level {
    Singles,
    Sd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Start {
    /// Aufbau determinant.
    Hf,
    /// Seeded random sector vector.
    Random,
    /// Exact ground state.
    Ground,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Exact,
    Trotter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumBasis {
    Complete,
    Qfd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grouping {
    Qubitwise,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub n: Option<usize>,
    pub dt: Option<f64>,
    pub dtau: Option<f64>,
    pub eps: Option<f64>,
    pub level: Option<Level>,
    pub tda: Option<bool>,
    pub tau: Option<f64>,
    pub shift: Option<f64>,
    pub roots: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub start: Option<Start>,
    pub symmetric: Option<bool>,
    pub backend: Option<BackendKind>,
    pub trotter_substeps: Option<usize>,
    pub qite: Option<bool>,
    pub qite_substeps: Option<usize>,
    pub time: Option<f64>,
    pub eta: Option<f64>,
    pub omega: Option<OmegaGrid>,
    pub excite_from: Option<usize>,
    pub excite_to: Option<usize>,
    pub basis: Option<SpectrumBasis>,
}

impl Params {
    /// Names of the parameters that are set.
    pub fn set_keys(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        macro_rules! check {
            ($($f:ident),*) => { $( if self.$f.is_some() { keys.push(stringify!($f)); } )* };
        }
        check!(
            n, dt, dtau, eps, level, tda, tau, shift, roots, tol, max_iter, start, symmetric, backend,
            trotter_substeps, qite, qite_substeps, time, eta, omega, excite_from, excite_to, basis
        );
        keys
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShotsConfig {
    #[serde(default)]
    pub enabled: bool,
    pub shots_per_group: Option<u64>,
    pub eps_target: Option<f64>,
    #[serde(default = "default_grouping")]
    pub grouping: Grouping,
    #[serde(default = "default_pilot")]
    pub pilot_shots: u64,
}

fn default_grouping() -> Grouping {
    Grouping::Qubitwise
}

fn default_pilot() -> u64 {
    qsubspace_core::shots::DEFAULT_PILOT_SHOTS
}

impl Default for ShotsConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            shots_per_group: None,
            eps_target: None,
            grouping: default_grouping(),
            pilot_shots: default_pilot(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
    /// Include `H` and `S` in `result.json`.
    #[serde(default)]
    pub matrices: bool,
    /// Write `amplitudes.txt` (fastforward) and `hamiltonian.bin`.
    #[serde(default)]
    pub dumps: bool,
}

fn default_out() -> PathBuf {
    PathBuf::from("qsubspace-out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_out(),
            matrices: false,
            dumps: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    N,
    Dt,
    Shots,
    Eps,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::N => "n",
            Axis::Dt => "dt",
            Axis::Shots => "shots",
            Axis::Eps => "eps",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: Axis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub method: Option<Method>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub shots: ShotsConfig,
    #[serde(default)]
    pub output: OutputConfig,
    pub sweep: Option<SweepConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            method: None,
            seed: 0,
            jobs: None,
            params: Params::default(),
            shots: ShotsConfig::default(),
            output: OutputConfig::default(),
            sweep: None,
        }
    }
}

/// Field named by a TOML error, e.g. `params.level` or `method`.
fn toml_field(e: &toml::de::Error) -> String {
    let msg = e.message();
    if let Some(rest) = msg.strip_prefix("unknown field `") {
        return rest.split('`').next().unwrap_or("config").to_string();
    }
    if msg.contains("unknown variant") && msg.contains("`fastforward`") {
        return "method".into();
    }
    "config".into()
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| {
            let field = toml_field(&e);
            CliError::usage(field, e.message().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
        Self::from_toml(&text)
    }

    pub fn method(&self) -> Result<Method, CliError> {
        self.method.ok_or_else(|| CliError::usage("method", "no method given"))
    }

    /// Rejects parameter/method combinations before anything runs.
    pub fn validate(&self) -> Result<(), CliError> {
        let method = self.method()?;
        if self.input.is_none() {
            return Err(CliError::usage("input", "no input FCIDUMP given"));
        }
        let allowed = method.parameters();
        for key in self.params.set_keys() {
            if !allowed.contains(&key) {
                return Err(CliError::usage(
                    format!("params.{key}"),
                    format!("not a parameter of {method} (accepted: {})", allowed.join(", ")),
                ));
            }
        }
        let p = &self.params;
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0) || !x.is_finite() => Err(CliError::usage(format!("params.{name}"), format!("{x} must be positive"))),
            _ => Ok(()),
        };
        positive("dt", p.dt)?;
        positive("dtau", p.dtau)?;
        positive("eta", p.eta)?;
        positive("tol", p.tol)?;
        if let Some(t) = p.tau {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(CliError::usage("params.tau", format!("{t} must be non-negative")));
            }
        }
        if let Some(e) = p.eps {
            if !(e >= 0.0) || !e.is_finite() {
                return Err(CliError::usage("params.eps", format!("{e} must be non-negative")));
            }
        }
        for (name, v) in [("n", p.n), ("roots", p.roots), ("trotter_substeps", p.trotter_substeps), ("qite_substeps", p.qite_substeps), ("max_iter", p.max_iter)] {
            if v == Some(0) {
                return Err(CliError::usage(format!("params.{name}"), "must be at least 1"));
            }
        }
        if let Some(g) = p.omega {
            if g.points < 2 || !(g.max > g.min) {
                return Err(CliError::usage("params.omega", "need max > min and at least 2 points"));
            }
        }
        if p.trotter_substeps.is_some() && p.backend != Some(BackendKind::Trotter) {
            return Err(CliError::usage("params.trotter_substeps", "only meaningful with backend = \"trotter\""));
        }
        if p.qite_substeps.is_some() && p.qite != Some(true) {
            return Err(CliError::usage("params.qite_substeps", "only meaningful with qite = true"));
        }
        let s = &self.shots;
        if s.enabled {
            if !method.supports_shots() {
                return Err(CliError::usage("shots.enabled", format!("{method} has no measurement recipe (use qse or qfd)")));
            }
            match (s.shots_per_group, s.eps_target) {
                (Some(_), Some(_)) => {
                    return Err(CliError::usage("shots", "give either shots_per_group or eps_target, not both"));
                }
                (None, None) => {
                    return Err(CliError::usage("shots", "enabled sampling needs shots_per_group or eps_target"));
                }
                (Some(0), _) => return Err(CliError::usage("shots.shots_per_group", "must be at least 1")),
                (_, Some(e)) if !(e > 0.0) => return Err(CliError::usage("shots.eps_target", "must be positive")),
                _ => {}
            }
            if p.backend == Some(BackendKind::Trotter) {
                return Err(CliError::usage("params.backend", "sampled QFD uses the exact backend"));
            }
        }
        if let Some(sw) = &self.sweep {
            if sw.values.is_empty() {
                return Err(CliError::usage("sweep.values", "empty sweep"));
            }
            let ok = match sw.axis {
                Axis::N => allowed.contains(&"n"),
                Axis::Dt => allowed.contains(&"dt"),
                Axis::Eps => allowed.contains(&"eps"),
                Axis::Shots => s.enabled && s.eps_target.is_none(),
            };
            if !ok && sw.axis == Axis::Shots {
                return Err(CliError::usage("sweep.axis", "a shots sweep needs sampling enabled with shots_per_group, not eps_target"));
            }
            if !ok {
                return Err(CliError::usage("sweep.axis", format!("axis {} does not apply to {method} with this configuration", sw.axis.name())));
            }
            for &v in &sw.values {
                let valid = match sw.axis {
                    Axis::N | Axis::Shots => v >= 1.0 && v.fract() == 0.0,
                    Axis::Dt => v > 0.0 && v.is_finite(),
                    Axis::Eps => v >= 0.0 && v.is_finite(),
                };
                if !valid {
                    return Err(CliError::usage("sweep.values", format!("{v} is not a valid {} value", sw.axis.name())));
                }
            }
        }
        if self.jobs == Some(0) {
            return Err(CliError::usage("jobs", "must be at least 1"));
        }
        Ok(())
    }

    /// Copy with one sweep coordinate applied.
    pub fn at_point(&self, axis: Axis, value: f64) -> RunConfig {
        let mut c = self.clone();
        c.sweep = None;
        match axis {
            Axis::N => c.params.n = Some(value as usize),
            Axis::Dt => c.params.dt = Some(value),
            Axis::Eps => c.params.eps = Some(value),
            Axis::Shots => c.shots.shots_per_group = Some(value as u64),
        }
        c
    }
}

fn parse_sweep(text: &str) -> Result<SweepConfig, CliError> {
    let (axis, values) = text
        .split_once('=')
        .ok_or_else(|| CliError::usage("sweep", "expected AXIS=v1,v2,... or AXIS=a:b"))?;
    let axis = match axis.trim() {
        "n" => Axis::N,
        "dt" => Axis::Dt,
        "shots" => Axis::Shots,
        "eps" => Axis::Eps,
        other => return Err(CliError::usage("sweep", format!("unknown axis '{other}' (n, dt, shots, eps)"))),
    };
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| CliError::usage("sweep", format!("'{s}' is not a number")));
    let values = if let Some((a, b)) = values.split_once(':') {
        let (a, b) = (num(a)?, num(b)?);
        if a.fract() != 0.0 || b.fract() != 0.0 || b < a {
            return Err(CliError::usage("sweep", "ranges a:b need integers with a ≤ b"));
        }
        (a as i64..=b as i64).map(|v| v as f64).collect()
    } else {
        values.split(',').map(num).collect::<Result<_, _>>()?
    };
    Ok(SweepConfig { axis, values })
}

#[derive(Debug, Clone, Parser)]
#[command(
    name = "qsubspace",
    version,
    about = "Classical and quantum subspace eigensolvers for FCIDUMP Hamiltonians",
    after_help = exit::HELP
)]
pub struct Cli {
    /// fci | lanczos | davidson | power-krylov | chebyshev | gaussian-power | qse | qeom | qfd | qlanczos | spectrum | fastforward
    pub method: Option<String>,
    /// FCIDUMP file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub dtau: Option<f64>,
    /// Overlap threshold ε.
    #[arg(long)]
    pub eps: Option<f64>,
    /// singles | sd
    #[arg(long)]
    pub level: Option<String>,
    #[arg(long)]
    pub tda: bool,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub time: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub roots: Option<usize>,
    /// hf | random | ground
    #[arg(long)]
    pub start: Option<String>,
    /// Shots per measurement group; enables sampling.
    #[arg(long)]
    pub shots: Option<u64>,
    /// Target precision for shot allocation; enables sampling.
    #[arg(long)]
    pub eps_target: Option<f64>,
    /// qubitwise | full
    #[arg(long)]
    pub grouping: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Concurrent sweep points.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Sweep axis and values: `n=1:6`, `dt=0.1,0.2`, `shots=100,1000`, `eps=1e-8,1e-6`.
    #[arg(long)]
    pub sweep: Option<String>,
    /// Include H and S in result.json.
    #[arg(long)]
    pub matrices: bool,
    /// Write hamiltonian.bin and amplitude dumps.
    #[arg(long)]
    pub dumps: bool,
}

fn parse_enum<T: serde::de::DeserializeOwned>(field: &str, value: &str) -> Result<T, CliError> {
    T::deserialize(serde::de::value::StrDeserializer::<serde::de::value::Error>::new(value))
        .map_err(|e| CliError::usage(field, e.to_string()))
}

impl Cli {
    /// Loads `--config` (if any) and applies every flag on top of it.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(m) = &self.method {
            c.method = Some(m.parse()?);
        }
        if let Some(p) = &self.input {
            c.input = Some(p.clone());
        }
        let p = &mut c.params;
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { p.$f = Some(v); } )* };
        }
        set!(n, dt, dtau, eps, tau, time, eta, roots);
        if self.tda {
            p.tda = Some(true);
        }
        if let Some(l) = &self.level {
            p.level = Some(parse_enum("params.level", l)?);
        }
        if let Some(s) = &self.start {
            p.start = Some(parse_enum("params.start", s)?);
        }
        if let Some(n) = self.shots {
            c.shots.enabled = true;
            c.shots.shots_per_group = Some(n);
            c.shots.eps_target = None;
        }
        if let Some(e) = self.eps_target {
            c.shots.enabled = true;
            c.shots.eps_target = Some(e);
            c.shots.shots_per_group = None;
        }
        if let Some(g) = &self.grouping {
            c.shots.grouping = parse_enum("shots.grouping", g)?;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(o) = &self.out {
            c.output.dir = o.clone();
        }
        if let Some(j) = self.jobs {
            c.jobs = Some(j);
        }
        if let Some(s) = &self.sweep {
            let sw = parse_sweep(s)?;
            if sw.axis == Axis::Shots {
                c.shots.enabled = true;
                c.shots.eps_target = None;
                c.shots.shots_per_group = sw.values.first().map(|&v| v as u64);
            }
            c.sweep = Some(sw);
        }
        if self.matrices {
            c.output.matrices = true;
        }
        if self.dumps {
            c.output.dumps = true;
        }
        c.validate()?;
        Ok(c)
    }
}
