//! Scenario files: flat `name.key = value` lines, `#` comments.
//!
//! ```text
//! sparse.lambda_b_per_area = 10
//! sparse.lambda_u_per_area = 100
//! sparse.target_rate_mbps  = 15
//! ```
//!
//! Each scenario needs both densities and exactly one of `bandwidth_mhz` or
//! `target_rate_mbps`; the other is derived. Unknown keys are errors.

use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;
use trs_core::coverage::{user_rate, LoadModel, NetworkConfig};
use trs_core::trs::{
    required_spectrum, Demand, OperatingPoint, SolverLimits, StepPolicy, DEFAULT_ANTENNA_CAP, DEFAULT_MAX_DENSITY_RATIO,
};

/// The sparse and dense operating points shipped with the tool.
pub const BUNDLED: &str = include_str!("../../../scenarios/bundled.scn");

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("scenario `{scenario}`: {message}")]
    Invalid { scenario: String, message: String },
    #[error("scenario `{scenario}`: {message}")]
    Numeric { scenario: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no scenario named `{0}`")]
    Missing(String),
}

const KEYS: &[&str] = &[
    "lambda_b_per_area",
    "lambda_u_per_area",
    "antennas",
    "bandwidth_mhz",
    "target_rate_mbps",
    "usage_multiplier",
    "alpha",
    "noise_power",
    "tx_power",
    "load_model",
    "solver.antenna_cap",
    "solver.max_density_ratio",
    "solver.density_step",
    "output.path",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    /// Bandwidth is always filled in, derived from the target when absent.
    pub network: NetworkConfig,
    pub target_rate_mbps: f64,
    /// Factor already applied to `network.lambda_u`.
    pub usage_multiplier: f64,
    pub limits: SolverLimits,
    pub density_step: StepPolicy,
    pub output_path: Option<PathBuf>,
}

impl Scenario {
    pub fn demand(&self) -> Demand {
        Demand::new(self.target_rate_mbps, self.network.lambda_u)
            .with_alpha(self.network.alpha)
            .with_load_model(self.network.load_model)
    }

    pub fn operating_point(&self) -> OperatingPoint {
        OperatingPoint {
            config: self.network,
            target_rate: self.target_rate_mbps,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub scenarios: Vec<Scenario>,
}

impl ScenarioFile {
    pub fn get(&self, name: &str) -> Result<&Scenario, ScenarioError> {
        self.scenarios
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| ScenarioError::Missing(name.to_string()))
    }

    /// The named scenario, or the only one when `name` is `None`.
    pub fn select(&self, name: Option<&str>) -> Result<&Scenario, ScenarioError> {
        match (name, self.scenarios.as_slice()) {
            (Some(n), _) => self.get(n),
            (None, [only]) => Ok(only),
            (None, _) => Err(ScenarioError::Missing(
                "(several scenarios in file; pick one with --name)".into(),
            )),
        }
    }
}

pub fn load(path: &Path) -> Result<ScenarioFile, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse(&text)
}

pub fn bundled(name: &str) -> Result<Scenario, ScenarioError> {
    parse(BUNDLED)?.get(name).cloned()
}

pub fn parse_load_model(text: &str) -> Option<LoadModel> {
    match text {
        "mean-load" => Some(LoadModel::MeanLoad),
        "no-sharing" => Some(LoadModel::NoSharing),
        _ => None,
    }
}

/// `forward:STEP` or `implicit:REL_STEP`.
pub fn parse_step_policy(text: &str) -> Option<StepPolicy> {
    let (kind, value) = text.split_once(':')?;
    let value: f64 = value.trim().parse().ok()?;
    match kind.trim() {
        "forward" => Some(StepPolicy::ForwardStep { step: value }),
        "implicit" => Some(StepPolicy::ImplicitCentral { rel_step: value }),
        _ => None,
    }
}

type Entries = Vec<(String, String, usize)>;

pub fn parse(text: &str) -> Result<ScenarioFile, ScenarioError> {
    let mut order: Vec<String> = Vec::new();
    let mut entries: Vec<Entries> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| ScenarioError::Parse { line: line_no, message };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `name.key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let (name, field) = key
            .split_once('.')
            .ok_or_else(|| err(format!("key `{key}` has no scenario prefix")))?;
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(err(format!("bad scenario name `{name}`")));
        }
        if !KEYS.contains(&field) {
            return Err(err(format!("unknown key `{field}`")));
        }
        let slot = match order.iter().position(|n| n == name) {
            Some(i) => i,
            None => {
                order.push(name.to_string());
                entries.push(Vec::new());
                order.len() - 1
            }
        };
        if entries[slot].iter().any(|(k, _, _)| k == field) {
            return Err(err(format!("duplicate key `{key}`")));
        }
        entries[slot].push((field.to_string(), value.to_string(), line_no));
    }
    let scenarios = order
        .into_iter()
        .zip(entries)
        .map(|(name, e)| build(name, &e))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ScenarioFile { scenarios })
}

fn build(name: String, entries: &Entries) -> Result<Scenario, ScenarioError> {
    let get = |key: &str| entries.iter().find(|(k, _, _)| k == key);
    let invalid = |message: String| ScenarioError::Invalid {
        scenario: name.clone(),
        message,
    };
    let number = |key: &str| -> Result<Option<f64>, ScenarioError> {
        match get(key) {
            None => Ok(None),
            Some((_, v, line)) => v.parse::<f64>().map(Some).map_err(|_| ScenarioError::Parse {
                line: *line,
                message: format!("`{key}` must be a number, got `{v}`"),
            }),
        }
    };
    let integer = |key: &str| -> Result<Option<usize>, ScenarioError> {
        match get(key) {
            None => Ok(None),
            Some((_, v, line)) => v.parse::<usize>().map(Some).map_err(|_| ScenarioError::Parse {
                line: *line,
                message: format!("`{key}` must be a non-negative integer, got `{v}`"),
            }),
        }
    };

    let lambda_b = number("lambda_b_per_area")?.ok_or_else(|| invalid("missing lambda_b_per_area".into()))?;
    let lambda_u = number("lambda_u_per_area")?.ok_or_else(|| invalid("missing lambda_u_per_area".into()))?;
    let usage_multiplier = number("usage_multiplier")?.unwrap_or(1.0);
    if !(usage_multiplier > 0.0 && usage_multiplier.is_finite()) {
        return Err(invalid(format!("usage_multiplier must be > 0, got {usage_multiplier}")));
    }
    let mut network = NetworkConfig::new(
        lambda_b,
        lambda_u * usage_multiplier,
        integer("antennas")?.unwrap_or(1),
        0.0,
    );
    if let Some(alpha) = number("alpha")? {
        network.alpha = alpha;
    }
    if let Some(noise) = number("noise_power")? {
        network.noise_power = noise;
    }
    if let Some(tx) = number("tx_power")? {
        network.tx_power = tx;
    }
    if let Some((_, v, line)) = get("load_model") {
        network.load_model = parse_load_model(v).ok_or_else(|| ScenarioError::Parse {
            line: *line,
            message: format!("load_model must be `mean-load` or `no-sharing`, got `{v}`"),
        })?;
    }
    let limits = SolverLimits {
        antenna_cap: integer("solver.antenna_cap")?.unwrap_or(DEFAULT_ANTENNA_CAP),
        max_density_ratio: number("solver.max_density_ratio")?.unwrap_or(DEFAULT_MAX_DENSITY_RATIO),
    };
    if limits.antenna_cap == 0 || !(limits.max_density_ratio > 0.0) {
        return Err(invalid("solver limits must be positive".into()));
    }
    let density_step = match get("solver.density_step") {
        None => StepPolicy::UNIT_FORWARD,
        Some((_, v, line)) => parse_step_policy(v).ok_or_else(|| ScenarioError::Parse {
            line: *line,
            message: format!("density_step must be `forward:STEP` or `implicit:REL_STEP`, got `{v}`"),
        })?,
    };
    let output_path = get("output.path").map(|(_, v, _)| PathBuf::from(v));

    let bandwidth = number("bandwidth_mhz")?;
    let target = number("target_rate_mbps")?;
    let numeric = |message: String| ScenarioError::Numeric {
        scenario: name.clone(),
        message,
    };
    let (bandwidth, target) = match (bandwidth, target) {
        (Some(_), Some(_)) => {
            return Err(invalid("set bandwidth_mhz or target_rate_mbps, not both".into()));
        }
        (None, None) => return Err(invalid("one of bandwidth_mhz or target_rate_mbps is required".into())),
        (Some(w), None) => {
            network.bandwidth_mhz = w;
            network.validate().map_err(|e| invalid(e.to_string()))?;
            (w, user_rate(&network).map_err(|e| numeric(e.to_string()))?)
        }
        (None, Some(r)) => {
            network.validate().map_err(|e| invalid(e.to_string()))?;
            if !(r >= 0.0 && r.is_finite()) {
                return Err(invalid(format!("target_rate_mbps must be >= 0, got {r}")));
            }
            let demand = Demand::new(r, network.lambda_u)
                .with_alpha(network.alpha)
                .with_load_model(network.load_model);
            let w =
                required_spectrum(&demand, network.lambda_b, network.antennas).map_err(|e| numeric(e.to_string()))?;
            (w, r)
        }
    };
    network.bandwidth_mhz = bandwidth;
    network.validate().map_err(|e| invalid(e.to_string()))?;
    Ok(Scenario {
        name,
        network,
        target_rate_mbps: target,
        usage_multiplier,
        limits,
        density_step,
        output_path,
    })
}
