//! Experiment configuration: a flat `key = value` file plus overrides.
//!
//! Keys match the long CLI flags: `problem`, `mode`, `alpha`, `gamma`,
//! `grading`, `num-steps`, `num-elements`, `seed`, `sigma`, `half-width`,
//! `final-time`, `norm`, `out`. List-valued keys take comma-separated values.
//! Blank lines and lines starting with `#` are ignored.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemId {
    Manufactured,
    Application,
    Random,
    /// `u0 = sin x` on `(0, π)` with `F ≡ 0`, `g ≡ 0`.
    Decay,
}

impl FromStr for ProblemId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "manufactured" => Ok(Self::Manufactured),
            "application" => Ok(Self::Application),
            "random" => Ok(Self::Random),
            "decay" => Ok(Self::Decay),
            other => Err(Error::Config(format!("unknown problem '{other}'"))),
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Manufactured => "manufactured",
            Self::Application => "application",
            Self::Random => "random",
            Self::Decay => "decay",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Fix `P`, sweep `N`.
    Time,
    /// Fix `N`, sweep `P`.
    Space,
    Moment,
    RateCurve,
    Stability,
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "time" => Ok(Self::Time),
            "space" => Ok(Self::Space),
            "moment" => Ok(Self::Moment),
            "rate-curve" => Ok(Self::RateCurve),
            "stability" => Ok(Self::Stability),
            other => Err(Error::Config(format!("unknown mode '{other}'"))),
        }
    }
}

/// How the grading exponent of each run is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grading {
    /// Use the `gamma` list as given.
    Explicit,
    /// `γ = 1/α` for every α.
    InverseAlpha,
}

impl FromStr for Grading {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "explicit" => Ok(Self::Explicit),
            "inverse-alpha" => Ok(Self::InverseAlpha),
            other => Err(Error::Config(format!("unknown grading '{other}'"))),
        }
    }
}

/// Quadrature for the spatial `L2` norm in `E_{N,h}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormRule {
    /// One Gauss rule over the whole interval.
    Global { points: usize },
    /// A Gauss rule on every element.
    Elementwise { points: usize },
}

impl Default for NormRule {
    fn default() -> Self {
        NormRule::Global { points: 10 }
    }
}

impl FromStr for NormRule {
    type Err = Error;
    /// `global:10`, `elementwise:3`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, n) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("norm rule '{s}' should look like global:10")))?;
        let points: usize = n
            .parse()
            .map_err(|_| Error::Config(format!("bad point count in norm rule '{s}'")))?;
        if points == 0 {
            return Err(Error::Config("norm rule needs at least one point".into()));
        }
        match kind {
            "global" => Ok(NormRule::Global { points }),
            "elementwise" => Ok(NormRule::Elementwise { points }),
            other => Err(Error::Config(format!("unknown norm rule '{other}'"))),
        }
    }
}

impl fmt::Display for NormRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormRule::Global { points } => write!(f, "global:{points}"),
            NormRule::Elementwise { points } => write!(f, "elementwise:{points}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemId,
    pub mode: Mode,
    pub alphas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub grading: Grading,
    pub steps: Vec<usize>,
    pub elements: Vec<usize>,
    pub seeds: Vec<u64>,
    pub sigma: f64,
    /// `L` for problems on `(-L, L)`.
    pub half_width: f64,
    /// Final time; `None` uses the problem's default.
    pub final_time: Option<f64>,
    pub norm: NormRule,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemId::Manufactured,
            mode: Mode::Time,
            alphas: vec![0.625],
            gammas: vec![1.0],
            grading: Grading::Explicit,
            steps: vec![80, 160, 320, 640],
            elements: vec![5120],
            seeds: vec![1],
            sigma: 0.5,
            half_width: 9.0,
            final_time: None,
            norm: NormRule::default(),
            out: None,
        }
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| Error::Config(format!("bad value '{s}' for '{key}'")))
        })
        .collect()
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| Error::Config(format!("bad value '{value}' for '{key}'")))
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.trim() {
            "problem" => self.problem = value.parse()?,
            "mode" => self.mode = value.parse()?,
            "alpha" => self.alphas = parse_list(key, value)?,
            "gamma" => self.gammas = parse_list(key, value)?,
            "grading" => self.grading = value.parse()?,
            "num-steps" => self.steps = parse_list(key, value)?,
            "num-elements" => self.elements = parse_list(key, value)?,
            "seed" => self.seeds = parse_list(key, value)?,
            "sigma" => self.sigma = parse_one(key, value)?,
            "half-width" => self.half_width = parse_one(key, value)?,
            "final-time" => self.final_time = Some(parse_one(key, value)?),
            "norm" => self.norm = value.parse()?,
            "out" => self.out = Some(PathBuf::from(value.trim())),
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    pub fn parse_str(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            self.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.parse_str(&std::fs::read_to_string(path)?)?;
        Ok(cfg)
    }

    /// Named configurations for the standard experiments: `time-graded`,
    /// `time-uniform`, `space`, `rate-curve`, `moment-desk`, `moment-full`,
    /// `random`.
    pub fn preset(name: &str) -> Result<Self> {
        let base = Self::default();
        let cfg = match name {
            "time-graded" => Self {
                gammas: vec![1.0, 1.6, 2.0],
                ..base
            },
            "time-uniform" => Self {
                alphas: vec![0.25, 0.5, 0.75],
                ..base
            },
            "space" => Self {
                mode: Mode::Space,
                alphas: vec![0.25, 0.5, 0.75],
                grading: Grading::InverseAlpha,
                steps: vec![10000],
                elements: vec![4, 8, 16, 32, 64],
                ..base
            },
            "rate-curve" => Self {
                mode: Mode::RateCurve,
                alphas: (1..=9).map(|k| k as f64 / 10.0).collect(),
                steps: vec![160, 320],
                ..base
            },
            "moment-desk" => Self {
                problem: ProblemId::Application,
                mode: Mode::Moment,
                alphas: vec![0.75],
                grading: Grading::InverseAlpha,
                steps: vec![400],
                elements: vec![1152],
                half_width: 12.0,
                final_time: Some(20.0),
                ..base
            },
            "moment-full" => Self {
                problem: ProblemId::Application,
                mode: Mode::Moment,
                alphas: vec![0.75],
                grading: Grading::InverseAlpha,
                steps: vec![1400],
                elements: vec![56000],
                half_width: 20.0,
                final_time: Some(70.0),
                ..base
            },
            "random" => Self {
                problem: ProblemId::Random,
                mode: Mode::Stability,
                alphas: vec![0.75],
                grading: Grading::InverseAlpha,
                steps: vec![400],
                elements: vec![1000],
                seeds: vec![1, 2, 3],
                final_time: Some(40.0),
                ..base
            },
            other => return Err(Error::Config(format!("unknown preset '{other}'"))),
        };
        Ok(cfg)
    }

    /// Grading exponents used for a given α.
    pub fn gammas_for(&self, alpha: f64) -> Vec<f64> {
        match self.grading {
            Grading::Explicit => self.gammas.clone(),
            Grading::InverseAlpha => vec![1.0 / alpha],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |name: &str, len: usize| {
            if len == 0 {
                Err(Error::Config(format!("'{name}' list is empty")))
            } else {
                Ok(())
            }
        };
        empty("alpha", self.alphas.len())?;
        empty("gamma", self.gammas.len())?;
        empty("num-steps", self.steps.len())?;
        empty("num-elements", self.elements.len())?;
        empty("seed", self.seeds.len())?;
        if let Some(&n) = self.steps.iter().find(|&&n| n < 1) {
            return Err(Error::Config(format!("num-steps must be >= 1, got {n}")));
        }
        if let Some(&p) = self.elements.iter().find(|&&p| p < 2) {
            return Err(Error::Config(format!("num-elements must be >= 2, got {p}")));
        }
        if let Some(&a) = self.alphas.iter().find(|&&a| !(a > 0.0 && a < 1.0)) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {a}")));
        }
        if self.grading == Grading::Explicit {
            if let Some(&g) = self.gammas.iter().find(|&&g| !(g >= 1.0)) {
                return Err(Error::Config(format!("gamma must be >= 1, got {g}")));
            }
        }
        Ok(())
    }
}
