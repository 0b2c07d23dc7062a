//! Experiment configuration: a JSON file, a named example, or both, with
//! command line overrides on top.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use relax_core::problems::parse_spacing;

use crate::error::CliError;

/// Keys accepted in a config file. Everything except `experiment` is an
/// override of the example defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: Option<String>,
    #[serde(default)]
    pub dx: Option<Spacing>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default, rename = "K", alias = "k")]
    pub k: Option<usize>,
    #[serde(default)]
    pub gs_sweeps: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_outer: Option<usize>,
    #[serde(default)]
    pub splitting_a: Option<f64>,
    #[serde(default)]
    pub bc: Option<BcSpec>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub init: Option<String>,
    /// Interval `[a, b]` of a custom problem.
    #[serde(default)]
    pub domain: Option<[f64; 2]>,
    /// Nonconvex integrand of a custom problem.
    #[serde(default)]
    pub w: Option<WSpec>,
    /// Lower-order potential of a custom problem.
    #[serde(default)]
    pub v: Option<VSpec>,
}

/// `0.0078125` or `"2^-7"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Spacing {
    Number(f64),
    Text(String),
}

impl Spacing {
    pub fn value(&self) -> Result<f64, CliError> {
        match self {
            Spacing::Number(x) if *x > 0.0 && x.is_finite() => Ok(*x),
            Spacing::Number(x) => Err(CliError::config(format!("dx must be positive, got {x}"))),
            Spacing::Text(s) => parse_spacing(s).map_err(|e| CliError::config(format!("dx: {e}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BcSpec {
    Dirichlet { left: f64, right: f64 },
    Natural,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WSpec {
    /// One of `double_well`, `one_sided_well`, `triple_well`, sampled on `range`.
    Builtin {
        name: String,
        range: [f64; 2],
        #[serde(default)]
        samples: Option<usize>,
    },
    Tabulated {
        nodes: Vec<f64>,
        values: Vec<f64>,
    },
    /// Uniform random values on 64 equispaced nodes, drawn from `seed`.
    Random {
        range: [f64; 2],
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum VSpec {
    Zero,
    QuadraticTracking { g: Target },
    DoubleWell,
    TrackingWell { g: Target },
}

/// `g(x)`: a constant, a named profile, or a table interpolated linearly.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Target {
    Constant(f64),
    Named(String),
    Table { x: Vec<f64>, y: Vec<f64> },
}

/// Initial guess for the outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Zero,
    Plus,
    Minus,
    File(PathBuf),
}

impl Init {
    pub fn parse(s: &str) -> Self {
        match s {
            "zero" => Init::Zero,
            "plus" => Init::Plus,
            "minus" => Init::Minus,
            path => Init::File(PathBuf::from(path)),
        }
    }
}

impl ExperimentConfig {
    /// `target` is either an experiment name or the path of a JSON config.
    pub fn load(target: &str) -> Result<Self, CliError> {
        if is_known_name(target) {
            return Ok(Self {
                experiment: Some(target.to_string()),
                ..Self::default()
            });
        }
        let path = Path::new(target);
        if !path.exists() {
            return Err(CliError::config(format!(
                "`{target}` is neither an experiment name (example1..example6) nor an existing config file"
            )));
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("{target}: {e}")))?;
        let cfg: Self =
            serde_json::from_str(&text).map_err(|e| CliError::config(format!("{target}: {e}")))?;
        match cfg.experiment.as_deref() {
            Some(name) if is_known_name(name) || name == "custom" => Ok(cfg),
            Some(name) => Err(CliError::config(format!("unknown experiment `{name}`"))),
            None => Err(CliError::config(format!(
                "{target}: missing key `experiment`"
            ))),
        }
    }

    pub fn name(&self) -> &str {
        self.experiment.as_deref().unwrap_or("custom")
    }
}

fn is_known_name(s: &str) -> bool {
    matches!(
        s,
        "example1" | "example2" | "example3" | "example4" | "example5" | "example6"
    )
}
