use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;
use trs_core::coverage::{outage_probability, spectral_efficiency, user_rate, CoverageError, LoadModel, NetworkConfig};
use trs_core::montecarlo::{simulate_outage, ActivityModel, McConfig, McError, DEFAULT_WINDOW_SCALE};
use trs_core::trs::{
    indifference_curve_with, log_grid, scaling_scenario_with, trs_spectrum_antennas, trs_spectrum_density,
    HeldResources, Lever, LeverOutcome, OperatingPoint, ResourcePair, SweepAxis, TrsError, TrsMagnitude, UpgradeMode,
};

use crate::output::{fmt_f64, OutputFormat, Table};
use crate::scenario::{self, parse_load_model, parse_step_policy, Scenario, ScenarioError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<CoverageError> for CliError {
    fn from(e: CoverageError) -> Self {
        match e {
            CoverageError::InvalidConfig(_) | CoverageError::NoiseUnsupported(_) => CliError::Config(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<TrsError> for CliError {
    fn from(e: TrsError) -> Self {
        match e {
            TrsError::Coverage(c) => c.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<McError> for CliError {
    fn from(e: McError) -> Self {
        match e {
            McError::Coverage(c) => c.into(),
            McError::UnboundedSinr { .. } => CliError::Numeric(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Numeric { .. } => CliError::Numeric(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "trs-planner",
    version,
    about = "Spectrum, densification and antenna trade-offs for PPP cellular networks"
)]
pub struct Cli {
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub output: Option<OutputFormat>,
    /// Write to PATH instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Master seed for Monte-Carlo work.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-user rate at one operating point.
    Rate(RateArgs),
    /// Indifference curve between spectrum and antennas or BS density.
    Curve(CurveArgs),
    /// Technical rate of substitution at listed points.
    Trs(TrsArgs),
    /// Monte-Carlo check of the analytic outage model.
    Validate(ValidateArgs),
    /// Resources needed to double (or scale) rate or usage with one lever.
    Scenario(ScenarioArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Source {
    /// Bundled scenario: `sparse` or `dense`.
    #[arg(long, conflicts_with = "file")]
    pub scenario: Option<String>,
    /// Scenario file.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Entry to use from a multi-scenario file.
    #[arg(long, requires = "file")]
    pub name: Option<String>,
}

impl Source {
    fn load(&self) -> Result<Scenario, CliError> {
        match (&self.scenario, &self.file) {
            (Some(name), None) => Ok(scenario::bundled(name)?),
            (None, Some(path)) => Ok(scenario::load(path)?.select(self.name.as_deref())?.clone()),
            _ => Err(CliError::Config("give --scenario NAME or --file PATH".into())),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Overrides {
    #[arg(long)]
    pub lambda_b: Option<f64>,
    #[arg(long)]
    pub lambda_u: Option<f64>,
    #[arg(long)]
    pub antennas: Option<usize>,
    #[arg(long)]
    pub bandwidth_mhz: Option<f64>,
    /// Target per-user rate; the operating bandwidth is re-derived from it.
    #[arg(long)]
    pub rate_mbps: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// `mean-load` or `no-sharing`.
    #[arg(long)]
    pub load_model: Option<String>,
}

impl Overrides {
    fn network(&self, base: &NetworkConfig) -> Result<NetworkConfig, CliError> {
        let mut cfg = *base;
        if let Some(v) = self.lambda_b {
            cfg.lambda_b = v;
        }
        if let Some(v) = self.lambda_u {
            cfg.lambda_u = v;
        }
        if let Some(v) = self.antennas {
            cfg.antennas = v;
        }
        if let Some(v) = self.bandwidth_mhz {
            cfg.bandwidth_mhz = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = &self.load_model {
            cfg.load_model = parse_load_model(v)
                .ok_or_else(|| CliError::Config(format!("load model must be mean-load or no-sharing, got `{v}`")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Operating point after overrides. An explicit bandwidth fixes the rate;
    /// otherwise the bandwidth is derived from the (possibly overridden) target.
    fn point(&self, sc: &Scenario) -> Result<OperatingPoint, CliError> {
        if self.bandwidth_mhz.is_some() && self.rate_mbps.is_some() {
            return Err(CliError::Config("give --bandwidth-mhz or --rate-mbps, not both".into()));
        }
        let cfg = self.network(&sc.network)?;
        if self.bandwidth_mhz.is_some() {
            return Ok(OperatingPoint::from_config(cfg)?);
        }
        let mut demand = sc.demand();
        demand.rate_mbps = self.rate_mbps.unwrap_or(sc.target_rate_mbps);
        demand.lambda_u = cfg.lambda_u;
        demand.alpha = cfg.alpha;
        demand.load_model = cfg.load_model;
        let mut point = OperatingPoint::calibrated(demand, cfg.lambda_b, cfg.antennas)?;
        point.config.noise_power = cfg.noise_power;
        point.config.tx_power = cfg.tx_power;
        Ok(point)
    }
}

#[derive(Debug, Clone, Args)]
pub struct RateArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PairArg {
    /// Spectrum against antennas per BS.
    #[value(name = "w-m")]
    WM,
    /// Spectrum against BS density.
    WDensity,
}

impl PairArg {
    fn pair(self) -> ResourcePair {
        match self {
            PairArg::WM => ResourcePair::SpectrumAntennas,
            PairArg::WDensity => ResourcePair::SpectrumDensity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepArg {
    Infrastructure,
    Spectrum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurveMode {
    Basic,
    DoubleRate,
    DoubleUsage,
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub overrides: Overrides,
    #[arg(long, value_enum)]
    pub pair: PairArg,
    /// Which axis carries the grid.
    #[arg(long, value_enum, default_value_t = SweepArg::Infrastructure)]
    pub sweep: SweepArg,
    /// Demand variant: the scenario's, twice the rate, or twice the users.
    #[arg(long, value_enum, default_value_t = CurveMode::Basic)]
    pub mode: CurveMode,
    /// Growth factor for the double-* modes.
    #[arg(long, default_value_t = 2.0)]
    pub factor: f64,
    /// Explicit comma-separated grid.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["grid_min", "grid_max", "grid_points"])]
    pub grid: Option<Vec<f64>>,
    #[arg(long)]
    pub grid_min: Option<f64>,
    #[arg(long)]
    pub grid_max: Option<f64>,
    /// Log-spaced grid size (antenna grids are rounded and de-duplicated).
    #[arg(long)]
    pub grid_points: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct TrsArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub overrides: Overrides,
    #[arg(long, value_enum)]
    pub pair: PairArg,
    /// Antenna counts (w-m) or BS densities (w-density) to evaluate at.
    #[arg(long, value_delimiter = ',')]
    pub at: Option<Vec<f64>>,
    /// Density step: `forward:STEP` or `implicit:REL_STEP`.
    #[arg(long)]
    pub step: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.1,1,10")]
    pub rho: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    pub antennas: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,1,10")]
    pub thresholds: Vec<f64>,
    #[arg(long, default_value_t = 4.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 5000)]
    pub drops: usize,
    #[arg(long, default_value_t = 20)]
    pub fading: usize,
    /// Window radius in units of 1/sqrt(lambda_b).
    #[arg(long, default_value_t = DEFAULT_WINDOW_SCALE)]
    pub window_scale: f64,
    /// Compare against the analytic model at this path-loss exponent instead
    /// (negative control).
    #[arg(long, hide = true)]
    pub analytic_alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    DoubleRate,
    DoubleUsage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LeverArg {
    Spectrum,
    Density,
    Antennas,
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub overrides: Overrides,
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    #[arg(long, value_enum)]
    pub lever: LeverArg,
    #[arg(long, default_value_t = 2.0)]
    pub factor: f64,
}

/// Rendered command output plus the exit status it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub body: String,
    pub status: u8,
    /// Default destination from the scenario file, used when `--out` is absent.
    pub default_out: Option<PathBuf>,
}

impl Outcome {
    fn ok(body: String) -> Self {
        Self {
            body,
            status: 0,
            default_out: None,
        }
    }
}

fn json_string(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("plain data serialises") + "\n"
}

/// JSON number, or the string `"inf"` where JSON has none.
fn json_f64(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(fmt_f64(x))
    }
}

fn load_model_name(m: LoadModel) -> &'static str {
    match m {
        LoadModel::MeanLoad => "mean-load",
        LoadModel::NoSharing => "no-sharing",
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let with_default_out = |mut o: Outcome, sc: &Scenario| {
        o.default_out = sc.output_path.clone();
        o
    };
    match &cli.command {
        Command::Rate(a) => {
            let sc = a.source.load()?;
            Ok(with_default_out(
                rate(a, &sc, cli.output.unwrap_or(OutputFormat::Text))?,
                &sc,
            ))
        }
        Command::Curve(a) => {
            let sc = a.source.load()?;
            Ok(with_default_out(
                curve(a, &sc, cli.output.unwrap_or(OutputFormat::Csv))?,
                &sc,
            ))
        }
        Command::Trs(a) => {
            let sc = a.source.load()?;
            Ok(with_default_out(
                trs(a, &sc, cli.output.unwrap_or(OutputFormat::Csv))?,
                &sc,
            ))
        }
        Command::Validate(a) => validate(a, cli.seed, cli.output.unwrap_or(OutputFormat::Text)),
        Command::Scenario(a) => {
            let sc = a.source.load()?;
            Ok(with_default_out(
                upgrade(a, &sc, cli.output.unwrap_or(OutputFormat::Json))?,
                &sc,
            ))
        }
    }
}

#[derive(Debug, Serialize)]
struct RateReport {
    scenario: String,
    lambda_b: f64,
    lambda_u: f64,
    antennas: usize,
    bandwidth_mhz: f64,
    alpha: f64,
    load_model: &'static str,
    active_probability: f64,
    spectral_efficiency_bits: f64,
    load_share: f64,
    rate_mbps: f64,
}

fn rate(a: &RateArgs, sc: &Scenario, format: OutputFormat) -> Result<Outcome, CliError> {
    if a.overrides.rate_mbps.is_some() {
        return Err(CliError::Config("rate takes a bandwidth, not --rate-mbps".into()));
    }
    let cfg = a.overrides.network(&sc.network)?;
    let p_a = cfg.active_probability()?;
    let report = RateReport {
        scenario: sc.name.clone(),
        lambda_b: cfg.lambda_b,
        lambda_u: cfg.lambda_u,
        antennas: cfg.antennas,
        bandwidth_mhz: cfg.bandwidth_mhz,
        alpha: cfg.alpha,
        load_model: load_model_name(cfg.load_model),
        active_probability: p_a,
        spectral_efficiency_bits: spectral_efficiency(p_a, cfg.antennas, cfg.alpha)?,
        load_share: cfg.load_share()?,
        rate_mbps: user_rate(&cfg)?,
    };
    let body = match format {
        OutputFormat::Json => json_string(&report),
        OutputFormat::Csv | OutputFormat::Text => {
            let mut t = Table::new(&[
                "scenario",
                "lambda_b",
                "lambda_u",
                "antennas",
                "bandwidth_mhz",
                "alpha",
                "load_model",
                "active_probability",
                "spectral_efficiency_bits",
                "load_share",
                "rate_mbps",
            ]);
            t.push(vec![
                report.scenario.clone(),
                fmt_f64(report.lambda_b),
                fmt_f64(report.lambda_u),
                report.antennas.to_string(),
                fmt_f64(report.bandwidth_mhz),
                fmt_f64(report.alpha),
                report.load_model.to_string(),
                fmt_f64(report.active_probability),
                fmt_f64(report.spectral_efficiency_bits),
                fmt_f64(report.load_share),
                fmt_f64(report.rate_mbps),
            ]);
            if format == OutputFormat::Csv {
                t.to_csv()
            } else {
                format!(
                    "{}: {} Mbps per user ({} bits/s/Hz x {} MHz x share {})\n",
                    report.scenario,
                    fmt_f64(report.rate_mbps),
                    fmt_f64(report.spectral_efficiency_bits),
                    fmt_f64(report.bandwidth_mhz),
                    fmt_f64(report.load_share)
                )
            }
        }
    };
    Ok(Outcome::ok(body))
}

fn curve_grid(
    a: &CurveArgs,
    point: &OperatingPoint,
    pair: ResourcePair,
    sweep: SweepAxis,
) -> Result<Vec<f64>, CliError> {
    if let Some(g) = &a.grid {
        return Ok(g.clone());
    }
    let integer_axis = pair == ResourcePair::SpectrumAntennas && sweep == SweepAxis::Infrastructure;
    let centre = match (pair, sweep) {
        (_, SweepAxis::Spectrum) => point.config.bandwidth_mhz,
        (ResourcePair::SpectrumDensity, SweepAxis::Infrastructure) => point.config.lambda_b,
        (ResourcePair::SpectrumAntennas, SweepAxis::Infrastructure) => point.config.antennas as f64,
    };
    let (lo, hi) = if integer_axis {
        (a.grid_min.unwrap_or(1.0), a.grid_max.unwrap_or(64.0))
    } else {
        (a.grid_min.unwrap_or(centre / 10.0), a.grid_max.unwrap_or(centre * 10.0))
    };
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(CliError::Config(format!("bad grid range [{lo}, {hi}]")));
    }
    if integer_axis {
        let (lo, hi) = (lo.ceil() as usize, hi.floor() as usize);
        let mut grid: Vec<f64> = match a.grid_points {
            None => (lo..=hi).map(|m| m as f64).collect(),
            Some(n) => log_grid(lo as f64, hi as f64, n).iter().map(|m| m.round()).collect(),
        };
        grid.dedup();
        Ok(grid)
    } else {
        Ok(log_grid(lo, hi, a.grid_points.unwrap_or(64)))
    }
}

fn curve(a: &CurveArgs, sc: &Scenario, format: OutputFormat) -> Result<Outcome, CliError> {
    let point = a.overrides.point(sc)?;
    let mut demand = point.demand();
    if !(a.factor > 0.0 && a.factor.is_finite()) {
        return Err(CliError::Config(format!("factor must be > 0, got {}", a.factor)));
    }
    match a.mode {
        CurveMode::Basic => {}
        CurveMode::DoubleRate => demand.rate_mbps *= a.factor,
        CurveMode::DoubleUsage => demand.lambda_u *= a.factor,
    }
    let pair = a.pair.pair();
    let sweep = match a.sweep {
        SweepArg::Infrastructure => SweepAxis::Infrastructure,
        SweepArg::Spectrum => SweepAxis::Spectrum,
    };
    let grid = curve_grid(a, &point, pair, sweep)?;
    let held = HeldResources {
        lambda_b: point.config.lambda_b,
        antennas: point.config.antennas,
    };
    let curve = indifference_curve_with(demand, pair, sweep, held, &grid, sc.limits)?;
    let (name1, name2) = curve.axis_names();
    let body = match format {
        OutputFormat::Csv => {
            let mut t = Table::new(&["axis1", "axis2", "feasible"]);
            for s in &curve.samples {
                t.push(vec![
                    fmt_f64(s.axis1),
                    s.axis2.map(fmt_f64).unwrap_or_default(),
                    s.feasible().to_string(),
                ]);
            }
            t.to_csv()
        }
        OutputFormat::Text => {
            let mut t = Table::new(&[name1, name2, "feasible"]);
            for s in &curve.samples {
                t.push(vec![
                    fmt_f64(s.axis1),
                    s.axis2.map(fmt_f64).unwrap_or_else(|| "-".into()),
                    s.feasible().to_string(),
                ]);
            }
            t.to_text()
        }
        OutputFormat::Json => json_string(&json!({
            "scenario": sc.name,
            "axis1": name1,
            "axis2": name2,
            "curve": curve,
        })),
    };
    Ok(Outcome::ok(body))
}

fn trs(a: &TrsArgs, sc: &Scenario, format: OutputFormat) -> Result<Outcome, CliError> {
    let base = a.overrides.point(sc)?;
    let pair = a.pair.pair();
    let step = match &a.step {
        None => sc.density_step,
        Some(s) => parse_step_policy(s).ok_or_else(|| CliError::Config(format!("bad step policy `{s}`")))?,
    };
    let at = match (&a.at, pair) {
        (Some(v), _) => v.clone(),
        (None, ResourcePair::SpectrumAntennas) => vec![1.0, 4.0, 8.0, 16.0],
        (None, ResourcePair::SpectrumDensity) => vec![base.config.lambda_b],
    };
    let mut rows = Vec::with_capacity(at.len());
    for &x in &at {
        let mut point = base;
        let value = match pair {
            ResourcePair::SpectrumAntennas => {
                if !(x >= 1.0 && x.fract() == 0.0) {
                    return Err(CliError::Config(format!(
                        "antenna counts must be integers >= 1, got {x}"
                    )));
                }
                if a.overrides.bandwidth_mhz.is_none() {
                    point = OperatingPoint::calibrated(base.demand(), base.config.lambda_b, x as usize)?;
                } else {
                    point.config.antennas = x as usize;
                }
                trs_spectrum_antennas(&point)?
            }
            ResourcePair::SpectrumDensity => {
                if a.overrides.bandwidth_mhz.is_none() {
                    point = OperatingPoint::calibrated(base.demand(), x, base.config.antennas)?;
                } else {
                    point.config.lambda_b = x;
                }
                trs_spectrum_density(&point, step)?
            }
        };
        rows.push(value);
    }

    let note = |m: &TrsMagnitude| match m {
        TrsMagnitude::Finite(_) => String::new(),
        TrsMagnitude::Infinite => "no spectrum saved per unit of the other resource".to_string(),
    };
    let body = match format {
        OutputFormat::Csv | OutputFormat::Text => {
            let mut t = Table::new(&[
                "pair",
                "lambda_b",
                "antennas",
                "bandwidth_mhz",
                "target_rate_mbps",
                "trs",
                "units",
                "step_policy",
                "note",
            ]);
            for v in &rows {
                t.push(vec![
                    pair_name(pair).into(),
                    fmt_f64(v.point.config.lambda_b),
                    v.point.config.antennas.to_string(),
                    fmt_f64(v.point.config.bandwidth_mhz),
                    fmt_f64(v.point.target_rate),
                    fmt_f64(v.magnitude.value()),
                    v.units().into(),
                    v.step.describe(),
                    note(&v.magnitude),
                ]);
            }
            if format == OutputFormat::Csv {
                t.to_csv()
            } else {
                t.to_text()
            }
        }
        OutputFormat::Json => {
            let items: Vec<Value> = rows
                .iter()
                .map(|v| {
                    json!({
                        "pair": pair_name(pair),
                        "lambda_b": v.point.config.lambda_b,
                        "antennas": v.point.config.antennas,
                        "bandwidth_mhz": v.point.config.bandwidth_mhz,
                        "target_rate_mbps": v.point.target_rate,
                        "trs": json_f64(v.magnitude.value()),
                        "units": v.units(),
                        "step_policy": v.step.describe(),
                        "note": note(&v.magnitude),
                    })
                })
                .collect();
            json_string(&json!({ "scenario": sc.name, "values": items }))
        }
    };
    Ok(Outcome::ok(body))
}

fn pair_name(p: ResourcePair) -> &'static str {
    match p {
        ResourcePair::SpectrumAntennas => "w-m",
        ResourcePair::SpectrumDensity => "w-density",
    }
}

#[derive(Debug, Serialize)]
struct ValidationCell {
    rho: f64,
    antennas: usize,
    threshold: f64,
    analytic: f64,
    mc_mean: f64,
    std_error: f64,
    tolerance: f64,
    pass: bool,
    warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
struct ValidationReport {
    seed: u64,
    alpha: f64,
    analytic_alpha: f64,
    n_drops: usize,
    n_fading_per_drop: usize,
    window_scale: f64,
    cells: Vec<ValidationCell>,
    passed: usize,
    failed: usize,
}

/// Each grid cell uses seed `seed + cell index`, cells in (ρ, M, T) order.
fn validate(a: &ValidateArgs, seed: u64, format: OutputFormat) -> Result<Outcome, CliError> {
    if a.rho.is_empty() || a.antennas.is_empty() || a.thresholds.is_empty() {
        return Err(CliError::Config("validation grid is empty".into()));
    }
    if !(a.window_scale > 0.0) {
        return Err(CliError::Config(format!(
            "window scale must be > 0, got {}",
            a.window_scale
        )));
    }
    let analytic_alpha = a.analytic_alpha.unwrap_or(a.alpha);
    let mut cells = Vec::new();
    let mut index = 0u64;
    for &rho in &a.rho {
        for &m in &a.antennas {
            for &t in &a.thresholds {
                let net = NetworkConfig::new(1.0, 1.0 / rho, m, 1.0).with_alpha(a.alpha);
                net.validate()?;
                let p_a = net.active_probability()?;
                let cfg = McConfig::new(net, ActivityModel::IndependentThinning { p_active: p_a })
                    .with_samples(a.drops, a.fading)
                    .with_window_radius(a.window_scale / net.lambda_b.sqrt())
                    .with_seed(seed.wrapping_add(index));
                index += 1;
                let est = simulate_outage(&cfg, t)?;
                let analytic = outage_probability(t, p_a, m, analytic_alpha)?.p_out;
                let tolerance = (3.0 * est.std_error).max(0.01);
                cells.push(ValidationCell {
                    rho,
                    antennas: m,
                    threshold: t,
                    analytic,
                    mc_mean: est.mean,
                    std_error: est.std_error,
                    tolerance,
                    pass: (est.mean - analytic).abs() <= tolerance,
                    warnings: est.warnings,
                });
            }
        }
    }
    let failed = cells.iter().filter(|c| !c.pass).count();
    let report = ValidationReport {
        seed,
        alpha: a.alpha,
        analytic_alpha,
        n_drops: a.drops,
        n_fading_per_drop: a.fading,
        window_scale: a.window_scale,
        passed: cells.len() - failed,
        failed,
        cells,
    };
    let table = || {
        let mut t = Table::new(&[
            "rho",
            "antennas",
            "threshold",
            "analytic",
            "mc_mean",
            "std_error",
            "tolerance",
            "pass",
        ]);
        for c in &report.cells {
            t.push(vec![
                fmt_f64(c.rho),
                c.antennas.to_string(),
                fmt_f64(c.threshold),
                fmt_f64(c.analytic),
                fmt_f64(c.mc_mean),
                fmt_f64(c.std_error),
                fmt_f64(c.tolerance),
                c.pass.to_string(),
            ]);
        }
        t
    };
    let body = match format {
        OutputFormat::Json => json_string(&report),
        OutputFormat::Csv => table().to_csv(),
        OutputFormat::Text => format!(
            "{}{} of {} cells pass (seed {}, {} drops x {} fading samples)\n",
            table().to_text(),
            report.passed,
            report.cells.len(),
            seed,
            a.drops,
            a.fading
        ),
    };
    Ok(Outcome {
        body,
        status: u8::from(failed > 0),
        default_out: None,
    })
}

fn upgrade(a: &ScenarioArgs, sc: &Scenario, format: OutputFormat) -> Result<Outcome, CliError> {
    let point = a.overrides.point(sc)?;
    let mode = match a.mode {
        ModeArg::DoubleRate => UpgradeMode::DoubleRate,
        ModeArg::DoubleUsage => UpgradeMode::DoubleUsage,
    };
    let lever = match a.lever {
        LeverArg::Spectrum => Lever::Spectrum,
        LeverArg::Density => Lever::Density,
        LeverArg::Antennas => Lever::Antennas,
    };
    let report = scaling_scenario_with(&point, mode, lever, a.factor, sc.limits)?;
    let body = match format {
        OutputFormat::Json => json_string(&json!({ "scenario": sc.name, "report": report })),
        OutputFormat::Csv | OutputFormat::Text => {
            let (feasible, value, ratio, detail) = match &report.outcome {
                LeverOutcome::Feasible { value, ratio } => ("true", fmt_f64(*value), fmt_f64(*ratio), String::new()),
                LeverOutcome::Infeasible { reason, .. } => ("false", String::new(), String::new(), reason.clone()),
            };
            let mut t = Table::new(&[
                "scenario",
                "mode",
                "lever",
                "factor",
                "base_value",
                "target_rate_mbps",
                "target_lambda_u",
                "feasible",
                "value",
                "ratio",
                "detail",
            ]);
            t.push(vec![
                sc.name.clone(),
                a.mode.to_possible_value().expect("named").get_name().to_string(),
                a.lever.to_possible_value().expect("named").get_name().to_string(),
                fmt_f64(a.factor),
                fmt_f64(report.base_value),
                fmt_f64(report.target_rate),
                fmt_f64(report.target_lambda_u),
                feasible.into(),
                value,
                ratio,
                detail,
            ]);
            if format == OutputFormat::Csv {
                t.to_csv()
            } else {
                t.to_text()
            }
        }
    };
    Ok(Outcome::ok(body))
}
