//! Experiment configuration: a `key = value` text file plus flag overrides.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::classical::LyapunovSettings;
use crate::error::{Error, Result};
use crate::spin::SpinQuantumNumber;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Flooding,
    KappaSweep,
    PhaseMap,
    Spectral,
    OverlapMap,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::Flooding,
        ExperimentKind::KappaSweep,
        ExperimentKind::PhaseMap,
        ExperimentKind::Spectral,
        ExperimentKind::OverlapMap,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Flooding => "flooding",
            ExperimentKind::KappaSweep => "kappa_sweep",
            ExperimentKind::PhaseMap => "phase_map",
            ExperimentKind::Spectral => "spectral",
            ExperimentKind::OverlapMap => "overlap_map",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| Error::config(None, format!("unknown experiment '{s}'")))
    }
}

/// `n_theta x n_phi`, written as e.g. `32x64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSize {
    pub n_theta: usize,
    pub n_phi: usize,
}

impl GridSize {
    pub const fn new(n_theta: usize, n_phi: usize) -> Self {
        Self { n_theta, n_phi }
    }
}

impl FromStr for GridSize {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (a, b) = s
            .trim()
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("grid '{s}' is not of the form NxM"))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("grid '{s}' is not of the form NxM"))
        };
        Ok(Self::new(parse(a)?, parse(b)?))
    }
}

impl fmt::Display for GridSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.n_theta, self.n_phi)
    }
}

/// Everything an experiment run depends on. Serialized verbatim into the
/// run manifest, from which a run can be reproduced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub j: f64,
    pub alpha: f64,
    pub kappa: f64,
    pub kappa_grid: Vec<f64>,
    pub theta: f64,
    pub phi: f64,
    pub n_kicks: usize,
    pub snapshot_times: Vec<usize>,
    /// Phase-space grid: classification / phase map / overlap map.
    pub grid: GridSize,
    pub husimi_grid: GridSize,
    pub lyapunov_iter: usize,
    pub lyapunov_transient: usize,
    pub lyapunov_threshold: f64,
    /// Spectral runs: also compute the overlap-entropy map on `grid`.
    pub overlap_map: bool,
    pub seed: u64,
    pub output_dir: String,
}

impl ExperimentConfig {
    /// Documented defaults for each experiment.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let lyap = LyapunovSettings::default();
        let base = Self {
            experiment: kind,
            j: 10.0,
            alpha: TAU * 0.95,
            kappa: 5.0,
            kappa_grid: (1..=12).map(|k| 0.5 * k as f64).collect(),
            theta: 1.7416,
            phi: 2.8728,
            n_kicks: 350,
            snapshot_times: vec![1, 5, 25, 34, 86],
            grid: GridSize::new(32, 64),
            husimi_grid: GridSize::new(128, 256),
            lyapunov_iter: lyap.n_iter,
            lyapunov_transient: lyap.transient,
            lyapunov_threshold: lyap.threshold,
            overlap_map: false,
            seed: 0,
            output_dir: format!("runs/{kind}"),
        };
        match kind {
            ExperimentKind::Flooding => Self {
                n_kicks: 86,
                grid: GridSize::new(64, 128),
                ..base
            },
            ExperimentKind::KappaSweep => Self {
                alpha: PI / 2.0,
                theta: 2.25,
                phi: 1.05,
                ..base
            },
            ExperimentKind::PhaseMap => base,
            ExperimentKind::Spectral => Self {
                j: 40.0,
                alpha: PI / 2.0,
                kappa: 10.0,
                grid: GridSize::new(16, 32),
                ..base
            },
            ExperimentKind::OverlapMap => Self {
                overlap_map: true,
                ..base
            },
        }
    }

    pub fn spin(&self) -> Result<SpinQuantumNumber> {
        SpinQuantumNumber::from_f64(self.j).map_err(|e| Error::config(None, e.to_string()))
    }

    pub fn lyapunov(&self) -> LyapunovSettings {
        LyapunovSettings {
            n_iter: self.lyapunov_iter,
            transient: self.lyapunov_transient,
            threshold: self.lyapunov_threshold,
            seed: self.seed,
        }
    }

    /// Largest snapshot time, which is also the flooding run length.
    pub fn max_time(&self) -> usize {
        self.snapshot_times.iter().copied().max().unwrap_or(0).max(self.n_kicks)
    }

    /// Range and consistency checks. `lines` maps keys to source lines.
    pub fn validate(&self) -> Result<()> {
        self.validate_with(&|_| None)
    }

    fn validate_with(&self, line_of: &dyn Fn(&str) -> Option<usize>) -> Result<()> {
        let fail = |key: &str, msg: String| Err(Error::config(line_of(key), format!("{key}: {msg}")));
        if SpinQuantumNumber::from_f64(self.j).is_err() {
            return fail("j", format!("{} is not a positive half-integer", self.j));
        }
        for (key, v) in [
            ("alpha", self.alpha),
            ("kappa", self.kappa),
            ("theta", self.theta),
            ("phi", self.phi),
            ("lyapunov_threshold", self.lyapunov_threshold),
        ] {
            if !v.is_finite() {
                return fail(key, format!("{v} is not finite"));
            }
        }
        if !(0.0..=PI).contains(&self.theta) {
            return fail("theta", format!("{} outside [0, pi]", self.theta));
        }
        if self.kappa_grid.is_empty() {
            return fail("kappa_grid", "must not be empty".into());
        }
        if self.kappa_grid.iter().any(|k| !k.is_finite()) {
            return fail("kappa_grid", "values must be finite".into());
        }
        if self.kappa_grid.windows(2).any(|w| w[1] <= w[0]) {
            return fail("kappa_grid", "values must be strictly increasing".into());
        }
        if self.n_kicks == 0 {
            return fail("n_kicks", "must be at least 1".into());
        }
        if self.lyapunov_iter < 100 {
            return fail("lyapunov_iter", format!("{} < 100", self.lyapunov_iter));
        }
        if self.lyapunov_threshold < 0.0 {
            return fail("lyapunov_threshold", "must be non-negative".into());
        }
        let min_grid = if self.experiment == ExperimentKind::PhaseMap {
            16
        } else {
            2
        };
        if self.grid.n_theta < min_grid || self.grid.n_phi < min_grid {
            return fail("grid", format!("{} is smaller than {min_grid}x{min_grid}", self.grid));
        }
        if self.husimi_grid.n_theta < 8 || self.husimi_grid.n_phi < 8 {
            return fail("husimi_grid", format!("{} is smaller than 8x8", self.husimi_grid));
        }
        if self.experiment == ExperimentKind::Flooding && self.snapshot_times.is_empty() {
            return fail("snapshot_times", "must not be empty".into());
        }
        let twice_j = (2.0 * self.j).round() as u32;
        if matches!(self.experiment, ExperimentKind::KappaSweep | ExperimentKind::PhaseMap) && twice_j < 2 {
            return fail("j", "entanglement experiments need j >= 1".into());
        }
        if self.experiment == ExperimentKind::Spectral && twice_j < 3 {
            return fail("j", "spacing statistics need 2j + 1 >= 4".into());
        }
        Ok(())
    }
}

const KNOWN_KEYS: [&str; 17] = [
    "experiment",
    "j",
    "alpha",
    "kappa",
    "kappa_grid",
    "theta",
    "phi",
    "n_kicks",
    "snapshot_times",
    "grid",
    "husimi_grid",
    "lyapunov_iter",
    "lyapunov_transient",
    "lyapunov_threshold",
    "overlap_map",
    "seed",
    "output_dir",
];

/// Command-line overrides; `None` leaves the file/default value alone.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub experiment: Option<ExperimentKind>,
    pub j: Option<f64>,
    pub alpha: Option<f64>,
    pub kappa: Option<f64>,
    pub kappa_grid: Option<Vec<f64>>,
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    pub n_kicks: Option<usize>,
    pub grid: Option<GridSize>,
    pub seed: Option<u64>,
    pub output_dir: Option<String>,
}

/// Read a config file from disk and apply overrides.
pub fn load_config(path: Option<&Path>, overrides: &Overrides) -> Result<ExperimentConfig> {
    let text = match path {
        Some(p) => {
            std::fs::read_to_string(p).map_err(|e| Error::config(None, format!("cannot read {}: {e}", p.display())))?
        }
        None => String::new(),
    };
    parse_config(&text, overrides)
}

/// Parse `key = value` text (TOML syntax) and apply overrides. The
/// experiment named in the file wins over `overrides.experiment`, which
/// only fills in when the file has none. Unknown keys and bad
/// values are errors that name the offending line.
pub fn parse_config(text: &str, overrides: &Overrides) -> Result<ExperimentConfig> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        let line = e.span().map(|s| line_at(text, s.start));
        Error::config(line, e.message().to_string())
    })?;
    let line_of = |key: &str| key_line(text, key);

    for key in table.keys() {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::config(line_of(key), format!("unknown key '{key}'")));
        }
    }

    let file_kind = match table.get("experiment") {
        Some(v) => Some(
            v.as_str()
                .ok_or_else(|| Error::config(line_of("experiment"), "experiment must be a string"))?
                .parse::<ExperimentKind>()
                .map_err(|e| Error::config(line_of("experiment"), e.to_string()))?,
        ),
        None => None,
    };
    let kind = file_kind
        .or(overrides.experiment)
        .ok_or_else(|| Error::config(None, "no experiment given"))?;
    let mut cfg = ExperimentConfig::defaults(kind);

    let get = |key: &str| table.get(key).map(|v| (v, line_of(key)));
    if let Some((v, l)) = get("j") {
        cfg.j = as_f64(v, "j", l)?;
    }
    if let Some((v, l)) = get("alpha") {
        cfg.alpha = as_f64(v, "alpha", l)?;
    }
    if let Some((v, l)) = get("kappa") {
        cfg.kappa = as_f64(v, "kappa", l)?;
    }
    if let Some((v, l)) = get("kappa_grid") {
        cfg.kappa_grid = as_f64_list(v, "kappa_grid", l)?;
    }
    if let Some((v, l)) = get("theta") {
        cfg.theta = as_f64(v, "theta", l)?;
    }
    if let Some((v, l)) = get("phi") {
        cfg.phi = as_f64(v, "phi", l)?;
    }
    if let Some((v, l)) = get("n_kicks") {
        cfg.n_kicks = as_usize(v, "n_kicks", l)?;
    }
    if let Some((v, l)) = get("snapshot_times") {
        cfg.snapshot_times = as_f64_list(v, "snapshot_times", l)?
            .into_iter()
            .map(|t| {
                if t >= 0.0 && t.fract() == 0.0 {
                    Ok(t as usize)
                } else {
                    Err(Error::config(l, format!("snapshot_times: {t} is not a kick count")))
                }
            })
            .collect::<Result<_>>()?;
    }
    if let Some((v, l)) = get("grid") {
        cfg.grid = as_grid(v, "grid", l)?;
    }
    if let Some((v, l)) = get("husimi_grid") {
        cfg.husimi_grid = as_grid(v, "husimi_grid", l)?;
    }
    if let Some((v, l)) = get("lyapunov_iter") {
        cfg.lyapunov_iter = as_usize(v, "lyapunov_iter", l)?;
    }
    if let Some((v, l)) = get("lyapunov_transient") {
        cfg.lyapunov_transient = as_usize(v, "lyapunov_transient", l)?;
    }
    if let Some((v, l)) = get("lyapunov_threshold") {
        cfg.lyapunov_threshold = as_f64(v, "lyapunov_threshold", l)?;
    }
    if let Some((v, l)) = get("overlap_map") {
        cfg.overlap_map = v
            .as_bool()
            .ok_or_else(|| Error::config(l, "overlap_map must be true or false"))?;
    }
    if let Some((v, l)) = get("seed") {
        cfg.seed = as_usize(v, "seed", l)? as u64;
    }
    if let Some((v, l)) = get("output_dir") {
        cfg.output_dir = v
            .as_str()
            .ok_or_else(|| Error::config(l, "output_dir must be a string"))?
            .to_string();
    }

    apply_overrides(&mut cfg, overrides);
    cfg.validate_with(&|key| line_of(key))?;
    Ok(cfg)
}

pub fn apply_overrides(cfg: &mut ExperimentConfig, o: &Overrides) {
    macro_rules! set {
        ($field:ident) => {
            if let Some(v) = o.$field.clone() {
                cfg.$field = v;
            }
        };
    }
    set!(j);
    set!(alpha);
    set!(kappa);
    set!(kappa_grid);
    set!(theta);
    set!(phi);
    set!(n_kicks);
    set!(grid);
    set!(seed);
    set!(output_dir);
}

fn line_at(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn key_line(text: &str, key: &str) -> Option<usize> {
    text.lines()
        .position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|i| i + 1)
}

fn as_f64(v: &toml::Value, key: &str, line: Option<usize>) -> Result<f64> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        toml::Value::String(s) => parse_number(s).map_err(|m| Error::config(line, format!("{key}: {m}"))),
        _ => Err(Error::config(line, format!("{key} must be a number"))),
    }
}

fn as_usize(v: &toml::Value, key: &str, line: Option<usize>) -> Result<usize> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(Error::config(line, format!("{key} must be a non-negative integer"))),
    }
}

/// Lists are accepted as TOML arrays or comma-separated strings.
fn as_f64_list(v: &toml::Value, key: &str, line: Option<usize>) -> Result<Vec<f64>> {
    match v {
        toml::Value::Array(items) => items.iter().map(|x| as_f64(x, key, line)).collect(),
        toml::Value::String(s) => s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| parse_number(t).map_err(|m| Error::config(line, format!("{key}: {m}"))))
            .collect(),
        _ => Err(Error::config(line, format!("{key} must be a list of numbers"))),
    }
}

fn as_grid(v: &toml::Value, key: &str, line: Option<usize>) -> Result<GridSize> {
    v.as_str()
        .ok_or_else(|| Error::config(line, format!("{key} must be a string like \"32x64\"")))?
        .parse()
        .map_err(|m| Error::config(line, format!("{key}: {m}")))
}

/// A number, optionally a product with `pi` factors such as `2*pi*0.95`.
pub fn parse_number(s: &str) -> std::result::Result<f64, String> {
    let mut value = 1.0;
    for factor in s.split('*') {
        let f = factor.trim();
        value *= match f {
            "pi" => PI,
            "tau" => TAU,
            _ => f
                .parse::<f64>()
                .map_err(|_| format!("'{}' is not a number", s.trim()))?,
        };
    }
    Ok(value)
}
