//! Experiment configuration: the `key = value` file format, command-line
//! overrides and the per-experiment defaults.
//!
//! A configuration file is a sequence of lines. Blank lines and lines whose
//! first non-blank character is `#` or `;` are ignored. `[section]` opens a
//! section; every other line is `key = value` and must belong to a section.
//! Recognised keys, by section:
//!
//! | section   | keys                                          |
//! |-----------|-----------------------------------------------|
//! | `run`     | `experiment`, `seed`                          |
//! | `battery` | `r`, `delta_e`, `modes`, `charger`, `tau`, `tau2` |
//! | `grid`    | `points`                                      |
//! | `oracle`  | `cutoff`, `tol`                               |
//! | `output`  | `dir`, `format`                               |
//!
//! A key may appear only once. Command-line flags take precedence over the
//! file.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use cvbattery::ChargerKind;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExperimentId {
    #[serde(rename = "fig2a")]
    Fig2a,
    #[serde(rename = "fig2b")]
    Fig2b,
    #[serde(rename = "fig2c")]
    Fig2c,
    #[serde(rename = "fig2d")]
    Fig2d,
    #[serde(rename = "fig3a")]
    Fig3a,
    #[serde(rename = "fig3b")]
    Fig3b,
    #[serde(rename = "fig3c")]
    Fig3c,
    #[serde(rename = "fig3d")]
    Fig3d,
    #[serde(rename = "fig4a")]
    Fig4a,
    #[serde(rename = "fig4b")]
    Fig4b,
    #[serde(rename = "fig4c")]
    Fig4c,
    #[serde(rename = "fig4d")]
    Fig4d,
    #[serde(rename = "oracle-check")]
    OracleCheck,
    #[serde(rename = "appendixC")]
    AppendixC,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 14] = [
        ExperimentId::Fig2a,
        ExperimentId::Fig2b,
        ExperimentId::Fig2c,
        ExperimentId::Fig2d,
        ExperimentId::Fig3a,
        ExperimentId::Fig3b,
        ExperimentId::Fig3c,
        ExperimentId::Fig3d,
        ExperimentId::Fig4a,
        ExperimentId::Fig4b,
        ExperimentId::Fig4c,
        ExperimentId::Fig4d,
        ExperimentId::OracleCheck,
        ExperimentId::AppendixC,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentId::Fig2a => "fig2a",
            ExperimentId::Fig2b => "fig2b",
            ExperimentId::Fig2c => "fig2c",
            ExperimentId::Fig2d => "fig2d",
            ExperimentId::Fig3a => "fig3a",
            ExperimentId::Fig3b => "fig3b",
            ExperimentId::Fig3c => "fig3c",
            ExperimentId::Fig3d => "fig3d",
            ExperimentId::Fig4a => "fig4a",
            ExperimentId::Fig4b => "fig4b",
            ExperimentId::Fig4c => "fig4c",
            ExperimentId::Fig4d => "fig4d",
            ExperimentId::OracleCheck => "oracle-check",
            ExperimentId::AppendixC => "appendixC",
        }
    }

    /// The figure panel layout, if this is a figure experiment.
    pub fn panel(&self) -> Option<Panel> {
        use cvbattery::optimize::Target::{DeltaSigma, WorkFluctuation};
        use ChargerKind::{LocalDisplace, LocalSqueeze};
        let (family, charger, target) = match self {
            ExperimentId::Fig2a => (Family::TwoMode, LocalSqueeze, DeltaSigma),
            ExperimentId::Fig2b => (Family::TwoMode, LocalDisplace, DeltaSigma),
            ExperimentId::Fig2c => (Family::ThreeMode, LocalSqueeze, DeltaSigma),
            ExperimentId::Fig2d => (Family::ThreeMode, LocalDisplace, DeltaSigma),
            ExperimentId::Fig3a => (Family::TwoMode, LocalSqueeze, WorkFluctuation),
            ExperimentId::Fig3b => (Family::TwoMode, LocalDisplace, WorkFluctuation),
            ExperimentId::Fig3c => (Family::ThreeMode, LocalSqueeze, WorkFluctuation),
            ExperimentId::Fig3d => (Family::ThreeMode, LocalDisplace, WorkFluctuation),
            ExperimentId::Fig4a => (Family::Separable, LocalSqueeze, DeltaSigma),
            ExperimentId::Fig4b => (Family::Separable, LocalSqueeze, WorkFluctuation),
            ExperimentId::Fig4c => (Family::Separable, LocalDisplace, DeltaSigma),
            ExperimentId::Fig4d => (Family::Separable, LocalDisplace, WorkFluctuation),
            ExperimentId::OracleCheck | ExperimentId::AppendixC => return None,
        };
        Some(Panel {
            family,
            charger,
            target,
        })
    }

    /// `(r, ΔE)` pairs plotted in the published figure.
    pub fn default_curves(&self) -> Vec<Curve> {
        let pairs: &[(f64, f64)] = match self {
            ExperimentId::Fig2a
            | ExperimentId::Fig2b
            | ExperimentId::Fig3a
            | ExperimentId::Fig3b => &[(1.0, 10.0), (0.5, 20.0)],
            ExperimentId::Fig2c
            | ExperimentId::Fig2d
            | ExperimentId::Fig3c
            | ExperimentId::Fig3d => &[(0.5, 15.0), (1.0, 24.0)],
            ExperimentId::Fig4a | ExperimentId::Fig4b => &[(1.0, 5.0), (1.0, 10.0)],
            ExperimentId::Fig4c | ExperimentId::Fig4d => &[(1.0, 5.0), (0.5, 10.0)],
            ExperimentId::OracleCheck => &[],
            ExperimentId::AppendixC => return appendix_grid(&APPENDIX_R, &APPENDIX_DE),
        };
        pairs
            .iter()
            .map(|&(r, delta_e)| Curve { r, delta_e })
            .collect()
    }

    pub fn default_grid(&self) -> usize {
        match self.panel().map(|p| p.family) {
            Some(Family::TwoMode) => 21,
            Some(Family::ThreeMode) => 11,
            _ => 5,
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ExperimentId::ALL
            .iter()
            .find(|e| e.as_str().eq_ignore_ascii_case(s))
            .copied()
            .ok_or_else(|| {
                let names: Vec<&str> = ExperimentId::ALL.iter().map(|e| e.as_str()).collect();
                format!(
                    "unknown experiment `{s}` (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Separable,
    TwoMode,
    ThreeMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Panel {
    pub family: Family,
    pub charger: ChargerKind,
    pub target: cvbattery::optimize::Target,
}

/// One `(r, ΔE)` parameter pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub r: f64,
    pub delta_e: f64,
}

pub const APPENDIX_R: [f64; 5] = [0.25, 0.5, 0.75, 1.0, 1.25];
pub const APPENDIX_DE: [f64; 5] = [2.0, 5.0, 10.0, 15.0, 20.0];

pub const DEFAULT_MODES: [usize; 14] = [2, 3, 4, 5, 6, 8, 10, 13, 16, 20, 25, 32, 40, 50];

fn appendix_grid(rs: &[f64], des: &[f64]) -> Vec<Curve> {
    rs.iter()
        .flat_map(|&r| des.iter().map(move |&delta_e| Curve { r, delta_e }))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub experiment: ExperimentId,
    pub curves: Vec<Curve>,
    /// Mode numbers of the scaling experiments.
    pub modes: Vec<usize>,
    pub charger: Option<ChargerKind>,
    /// Fixes `τ` (or `τ₁`) instead of sweeping it.
    pub tau: Option<f64>,
    /// Fixes `τ₂` of the three-mode family.
    pub tau2: Option<f64>,
    /// Points per transmittivity axis.
    pub grid: usize,
    pub out: PathBuf,
    pub format: Format,
    /// Upper bound on Fock cutoffs; the per-mode-count default when absent.
    pub cutoff: Option<usize>,
    pub seed: u64,
    /// Relative tolerance of engine/oracle comparisons.
    pub tol: f64,
}

pub const DEFAULT_SEED: u64 = 0x5eed;
pub const DEFAULT_TOL: f64 = 1e-6;

impl ExperimentSpec {
    /// The experiment with every parameter at its default.
    pub fn defaults(experiment: ExperimentId) -> Self {
        ExperimentSpec {
            experiment,
            curves: experiment.default_curves(),
            modes: DEFAULT_MODES.to_vec(),
            charger: None,
            tau: None,
            tau2: None,
            grid: experiment.default_grid(),
            out: PathBuf::from("out").join(experiment.as_str()),
            format: Format::Csv,
            cutoff: None,
            seed: DEFAULT_SEED,
            tol: DEFAULT_TOL,
        }
    }

    /// Transmittivity samples `0, 1/(g−1), …, 1`.
    pub fn tau_axis(&self, fixed: Option<f64>) -> Vec<f64> {
        match fixed {
            Some(t) => vec![t],
            None if self.grid == 1 => vec![0.0],
            None => (0..self.grid)
                .map(|i| i as f64 / (self.grid - 1) as f64)
                .collect(),
        }
    }
}

/// Settings gathered from a file or the command line, before defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawSettings {
    pub experiment: Option<ExperimentId>,
    pub r: Option<Vec<f64>>,
    pub delta_e: Option<Vec<f64>>,
    pub modes: Option<Vec<usize>>,
    pub charger: Option<ChargerKind>,
    pub tau: Option<f64>,
    pub tau2: Option<f64>,
    pub grid: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub cutoff: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

/// Section each key belongs to in a configuration file.
const KEYS: [(&str, &str); 13] = [
    ("run", "experiment"),
    ("run", "seed"),
    ("battery", "r"),
    ("battery", "delta_e"),
    ("battery", "modes"),
    ("battery", "charger"),
    ("battery", "tau"),
    ("battery", "tau2"),
    ("grid", "points"),
    ("oracle", "cutoff"),
    ("oracle", "tol"),
    ("output", "dir"),
    ("output", "format"),
];

impl RawSettings {
    /// Parses one value. `key` is the configuration-file key name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        match key {
            "experiment" => self.experiment = Some(v.parse()?),
            "seed" => self.seed = Some(parse_seed(v)?),
            "r" => self.r = Some(parse_list(v)?),
            "delta_e" => self.delta_e = Some(parse_list(v)?),
            "modes" => self.modes = Some(parse_modes(v)?),
            "charger" => self.charger = Some(v.parse()?),
            "tau" => self.tau = Some(parse_num(v)?),
            "tau2" => self.tau2 = Some(parse_num(v)?),
            "points" => self.grid = Some(parse_count(v)?),
            "cutoff" => self.cutoff = Some(parse_count(v)?),
            "tol" => self.tol = Some(parse_num(v)?),
            "dir" => {
                if v.is_empty() {
                    return Err("empty output directory".into());
                }
                self.out = Some(PathBuf::from(v))
            }
            "format" => self.format = Some(v.parse()?),
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Values of `over` replace those of `self`.
    pub fn merge(self, over: RawSettings) -> RawSettings {
        RawSettings {
            experiment: over.experiment.or(self.experiment),
            r: over.r.or(self.r),
            delta_e: over.delta_e.or(self.delta_e),
            modes: over.modes.or(self.modes),
            charger: over.charger.or(self.charger),
            tau: over.tau.or(self.tau),
            tau2: over.tau2.or(self.tau2),
            grid: over.grid.or(self.grid),
            out: over.out.or(self.out),
            format: over.format.or(self.format),
            cutoff: over.cutoff.or(self.cutoff),
            seed: over.seed.or(self.seed),
            tol: over.tol.or(self.tol),
        }
    }

    /// Applies the experiment defaults and checks every value.
    pub fn resolve(self) -> LabResult<ExperimentSpec> {
        let usage = |m: String| LabError::Usage(m);
        let experiment = self.experiment.ok_or_else(|| {
            usage("no experiment given (use --experiment or `experiment` under [run])".into())
        })?;
        let mut spec = ExperimentSpec::defaults(experiment);
        spec.curves = resolve_curves(experiment, self.r, self.delta_e).map_err(usage)?;
        if let Some(m) = self.modes {
            spec.modes = m;
        }
        spec.charger = self.charger;
        spec.tau = self.tau;
        spec.tau2 = self.tau2;
        if let Some(g) = self.grid {
            spec.grid = g;
        }
        if let Some(o) = self.out {
            spec.out = o;
        }
        if let Some(f) = self.format {
            spec.format = f;
        }
        spec.cutoff = self.cutoff;
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        if let Some(t) = self.tol {
            spec.tol = t;
        }
        validate(&spec).map_err(usage)?;
        Ok(spec)
    }
}

fn resolve_curves(
    id: ExperimentId,
    r: Option<Vec<f64>>,
    de: Option<Vec<f64>>,
) -> Result<Vec<Curve>, String> {
    let defaults = id.default_curves();
    if id == ExperimentId::AppendixC {
        let rs = r.unwrap_or_else(|| APPENDIX_R.to_vec());
        let des = de.unwrap_or_else(|| APPENDIX_DE.to_vec());
        return Ok(appendix_grid(&rs, &des));
    }
    let (rs, des) = match (r, de) {
        (None, None) => return Ok(defaults),
        (Some(rs), None) => {
            let des = defaults
                .iter()
                .map(|c| c.delta_e)
                .take(rs.len())
                .collect::<Vec<_>>();
            (rs, des)
        }
        (None, Some(des)) => {
            let rs = defaults
                .iter()
                .map(|c| c.r)
                .take(des.len())
                .collect::<Vec<_>>();
            (rs, des)
        }
        (Some(rs), Some(des)) => (rs, des),
    };
    let n = rs.len().max(des.len());
    let pick = |v: &[f64], i: usize| {
        if v.len() == 1 {
            Some(v[0])
        } else {
            v.get(i).copied()
        }
    };
    (0..n)
        .map(|i| match (pick(&rs, i), pick(&des, i)) {
            (Some(r), Some(delta_e)) => Ok(Curve { r, delta_e }),
            _ => Err(format!(
                "r has {} value(s) and delta_e {}; give equal counts or a single value",
                rs.len(),
                des.len()
            )),
        })
        .collect()
}

fn validate(spec: &ExperimentSpec) -> Result<(), String> {
    for c in &spec.curves {
        if !(c.r >= 0.0 && c.r.is_finite()) {
            return Err(format!("r = {} must be finite and non-negative", c.r));
        }
        if !(c.delta_e > 0.0 && c.delta_e.is_finite()) {
            return Err(format!(
                "delta_e = {} must be finite and positive",
                c.delta_e
            ));
        }
    }
    if spec.curves.is_empty() && spec.experiment != ExperimentId::OracleCheck {
        return Err("no (r, delta_e) pairs to run".into());
    }
    if spec.modes.is_empty() || spec.modes.contains(&0) {
        return Err("modes must be a non-empty list of positive integers".into());
    }
    for (name, t) in [("tau", spec.tau), ("tau2", spec.tau2)] {
        if let Some(t) = t {
            if !(0.0..=1.0).contains(&t) {
                return Err(format!("{name} = {t} outside [0, 1]"));
            }
        }
    }
    if spec.grid == 0 {
        return Err("grid must have at least one point".into());
    }
    if !(spec.tol > 0.0 && spec.tol.is_finite()) {
        return Err(format!("tol = {} must be positive", spec.tol));
    }
    if let Some(c) = spec.cutoff {
        if c < cvbattery::fock::MIN_CUTOFF {
            return Err(format!(
                "cutoff {c} below the minimum of {}",
                cvbattery::fock::MIN_CUTOFF
            ));
        }
    }
    if let Some(kind) = spec.charger {
        let two_mode = spec.experiment.panel().map(|p| p.family) == Some(Family::TwoMode)
            || spec.experiment == ExperimentId::AppendixC;
        if !kind.is_local() && !two_mode {
            return Err(format!(
                "charger `{}` needs a two-mode battery",
                kind.name()
            ));
        }
    }
    Ok(())
}

/// Parses a configuration file.
pub fn parse_config(text: &str) -> LabResult<RawSettings> {
    let mut raw = RawSettings::default();
    let mut section: Option<String> = None;
    let mut seen: Vec<&str> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let err = |msg: String| LabError::Config { line: lineno, msg };
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with(';') {
            continue;
        }
        if let Some(rest) = t.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(format!("unterminated section header `{t}`")))?
                .trim();
            if !KEYS.iter().any(|(s, _)| *s == name) {
                return Err(err(format!("unknown section `[{name}]`")));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = t
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, found `{t}`")))?;
        let key = key.trim();
        let sec = section
            .as_deref()
            .ok_or_else(|| err(format!("key `{key}` appears before any [section]")))?;
        let (_, k) = KEYS
            .iter()
            .find(|(s, k)| *s == sec && *k == key)
            .ok_or_else(|| err(format!("unknown key `{key}` in [{sec}]")))?;
        if seen.contains(k) {
            return Err(err(format!("duplicate key `{key}`")));
        }
        seen.push(k);
        raw.set(key, value).map_err(err)?;
    }
    Ok(raw)
}

fn parse_num(s: &str) -> Result<f64, String> {
    s.parse::<f64>()
        .map_err(|_| format!("`{s}` is not a number"))
}

fn parse_count(s: &str) -> Result<usize, String> {
    s.parse::<usize>()
        .map_err(|_| format!("`{s}` is not a non-negative integer"))
}

fn parse_seed(s: &str) -> Result<u64, String> {
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse::<u64>(),
    }
    .map_err(|_| format!("`{s}` is not a valid seed"))
}

/// Comma-separated numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    let v = s
        .split(',')
        .map(|p| parse_num(p.trim()))
        .collect::<Result<Vec<f64>, String>>()?;
    if v.is_empty() {
        return Err("empty list".into());
    }
    Ok(v)
}

/// Comma-separated mode numbers; `a..b` expands to every integer from `a`
/// to `b` inclusive.
pub fn parse_modes(s: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (parse_count(a.trim())?, parse_count(b.trim())?);
                if a > b {
                    return Err(format!("empty range `{part}`"));
                }
                out.extend(a..=b);
            }
            None => out.push(parse_count(part)?),
        }
    }
    Ok(out)
}
