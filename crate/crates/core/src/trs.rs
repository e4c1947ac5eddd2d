//! Resource substitution: invert the rate model along one resource, trace
//! indifference curves, and measure technical rates of substitution (TRS)
//! between spectrum and BS density or antenna count.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::coverage::{rate_per_mhz, user_rate, CoverageError, LoadModel, NetworkConfig};

/// Default cap for [`required_antennas`].
pub const DEFAULT_ANTENNA_CAP: usize = 1024;

/// Default upper limit of the density search, as a multiple of `λ_u`.
pub const DEFAULT_MAX_DENSITY_RATIO: f64 = 1e3;

/// Lower limit of the density search, as a multiple of `λ_u`.
const MIN_DENSITY_RATIO: f64 = 1e-9;

const DENSITY_REL_TOL: f64 = 1e-8;

// A configuration calibrated to deliver exactly the target must count as
// meeting it despite rounding in the rate evaluation.
const RATE_SLACK: f64 = 1e-12;
const BISECTION_LIMIT: usize = 400;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrsError {
    #[error(transparent)]
    Coverage(#[from] CoverageError),
    #[error("invalid input: {0}")]
    Domain(String),
    #[error(
        "infeasible demand: {target} Mbps cannot be reached by varying {lever}; best is {best} Mbps at {lever} = {at}"
    )]
    Infeasible {
        lever: &'static str,
        target: f64,
        best: f64,
        at: f64,
    },
}

impl TrsError {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, TrsError::Infeasible { .. })
    }
}

/// What must be delivered: a per-user rate to a user population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Demand {
    /// Target per-user rate in Mbps.
    pub rate_mbps: f64,
    /// Active-user density.
    pub lambda_u: f64,
    pub alpha: f64,
    pub load_model: LoadModel,
}

impl Demand {
    pub fn new(rate_mbps: f64, lambda_u: f64) -> Self {
        Self {
            rate_mbps,
            lambda_u,
            alpha: 4.0,
            load_model: LoadModel::MeanLoad,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_load_model(mut self, load_model: LoadModel) -> Self {
        self.load_model = load_model;
        self
    }

    fn config(&self, lambda_b: f64, antennas: usize, bandwidth_mhz: f64) -> NetworkConfig {
        NetworkConfig::new(lambda_b, self.lambda_u, antennas, bandwidth_mhz)
            .with_alpha(self.alpha)
            .with_load_model(self.load_model)
    }

    fn check(&self) -> Result<(), TrsError> {
        if !(self.rate_mbps >= 0.0 && self.rate_mbps.is_finite()) {
            return Err(TrsError::Domain(format!(
                "target rate must be finite and >= 0, got {}",
                self.rate_mbps
            )));
        }
        Ok(())
    }
}

/// A network configuration together with the rate it is meant to deliver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatingPoint {
    pub config: NetworkConfig,
    pub target_rate: f64,
}

impl OperatingPoint {
    /// Operating point whose bandwidth is exactly what `demand` needs at
    /// `(λ_b, M)`.
    pub fn calibrated(demand: Demand, lambda_b: f64, antennas: usize) -> Result<Self, TrsError> {
        let bandwidth = required_spectrum(&demand, lambda_b, antennas)?;
        Ok(Self {
            config: demand.config(lambda_b, antennas, bandwidth),
            target_rate: demand.rate_mbps,
        })
    }

    /// Wraps an existing configuration; `target_rate` is its delivered rate.
    pub fn from_config(config: NetworkConfig) -> Result<Self, TrsError> {
        Ok(Self {
            target_rate: user_rate(&config)?,
            config,
        })
    }

    pub fn demand(&self) -> Demand {
        Demand {
            rate_mbps: self.target_rate,
            lambda_u: self.config.lambda_u,
            alpha: self.config.alpha,
            load_model: self.config.load_model,
        }
    }
}

/// Bandwidth (MHz) needed for `demand` at `(λ_b, M)`. The rate is linear in
/// bandwidth, so this is an exact division.
pub fn required_spectrum(demand: &Demand, lambda_b: f64, antennas: usize) -> Result<f64, TrsError> {
    demand.check()?;
    let per_mhz = rate_per_mhz(&demand.config(lambda_b, antennas, 0.0))?;
    if !(per_mhz > 0.0) || !per_mhz.is_finite() {
        return Err(TrsError::Domain(format!(
            "rate per MHz is {per_mhz} at lambda_b = {lambda_b}, M = {antennas}"
        )));
    }
    Ok(demand.rate_mbps / per_mhz)
}

/// Search limits for [`required_density`]. Without an explicit bracket the
/// search runs over `[1e-9·λ_u, max_ratio·λ_u]`, expanding outwards from `λ_u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensitySearch {
    pub bracket: Option<(f64, f64)>,
    pub max_ratio: f64,
}

impl Default for DensitySearch {
    fn default() -> Self {
        Self {
            bracket: None,
            max_ratio: DEFAULT_MAX_DENSITY_RATIO,
        }
    }
}

/// BS density that delivers `demand` with bandwidth `W` and `M` antennas.
///
/// Bisection in `ln λ_b` on the monotone map `λ_b ↦ rate`, to a relative
/// bracket width of `1e-8`.
pub fn required_density(
    demand: &Demand,
    bandwidth_mhz: f64,
    antennas: usize,
    search: &DensitySearch,
) -> Result<f64, TrsError> {
    demand.check()?;
    if !(bandwidth_mhz > 0.0) {
        return Err(TrsError::Domain(format!(
            "bandwidth must be > 0 to solve for density, got {bandwidth_mhz}"
        )));
    }
    let target = demand.rate_mbps;
    if target == 0.0 {
        return Err(TrsError::Domain("a zero rate is met by any density".into()));
    }
    let rate =
        |lambda_b: f64| -> Result<f64, TrsError> { Ok(user_rate(&demand.config(lambda_b, antennas, bandwidth_mhz))?) };

    let (floor, ceiling) = match search.bracket {
        Some((lo, hi)) if lo > 0.0 && hi > lo => (lo, hi),
        Some((lo, hi)) => {
            return Err(TrsError::Domain(format!("bad density bracket [{lo}, {hi}]")));
        }
        None => (MIN_DENSITY_RATIO * demand.lambda_u, search.max_ratio * demand.lambda_u),
    };

    // Expand geometrically from the middle of the allowed range so typical
    // queries never touch the extreme (expensive) densities.
    let start = demand.lambda_u.clamp(floor, ceiling);
    let mut lo = start;
    let mut hi = start;
    let mut r_lo = rate(lo)?;
    let mut r_hi = r_lo;
    while r_lo > target {
        if lo <= floor {
            return Err(TrsError::Domain(format!(
                "target {target} Mbps is met even at the density floor {floor}"
            )));
        }
        hi = lo;
        r_hi = r_lo;
        lo = (lo / 10.0).max(floor);
        r_lo = rate(lo)?;
    }
    while r_hi < target {
        if hi >= ceiling {
            return Err(TrsError::Infeasible {
                lever: "lambda_b",
                target,
                best: r_hi,
                at: hi,
            });
        }
        lo = hi;
        hi = (hi * 10.0).min(ceiling);
        r_hi = rate(hi)?;
    }

    let mut iterations = 0;
    while hi / lo - 1.0 > DENSITY_REL_TOL {
        let mid = (lo * hi).sqrt();
        if rate(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
        if iterations > BISECTION_LIMIT {
            break;
        }
    }
    Ok((lo * hi).sqrt())
}

/// Smallest antenna count `M ≤ cap` with `rate ≥ demand.rate_mbps`.
pub fn required_antennas(demand: &Demand, bandwidth_mhz: f64, lambda_b: f64, cap: usize) -> Result<usize, TrsError> {
    demand.check()?;
    if cap == 0 {
        return Err(TrsError::Domain("antenna cap must be >= 1".into()));
    }
    let target = demand.rate_mbps;
    let rate = |m: usize| -> Result<f64, TrsError> { Ok(user_rate(&demand.config(lambda_b, m, bandwidth_mhz))?) };
    let meets = |r: f64| r >= target * (1.0 - RATE_SLACK);
    if meets(rate(1)?) {
        return Ok(1);
    }
    // Rate is increasing in M: double until the target is passed, then bisect.
    let mut below = 1;
    let mut above = None;
    let mut m = 1;
    while above.is_none() {
        if m == cap {
            return Err(TrsError::Infeasible {
                lever: "antennas",
                target,
                best: rate(cap)?,
                at: cap as f64,
            });
        }
        m = (m * 2).min(cap);
        if meets(rate(m)?) {
            above = Some(m);
        } else {
            below = m;
        }
    }
    let mut above = above.unwrap_or(cap);
    while above - below > 1 {
        let mid = below + (above - below) / 2;
        if meets(rate(mid)?) {
            above = mid;
        } else {
            below = mid;
        }
    }
    Ok(above)
}

/// The two resources traded along an indifference curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResourcePair {
    /// Bandwidth against antennas per BS.
    SpectrumAntennas,
    /// Bandwidth against BS density.
    SpectrumDensity,
}

impl ResourcePair {
    /// Units of `|Δ(other)/ΔW|`.
    pub fn trs_units(&self) -> &'static str {
        match self {
            ResourcePair::SpectrumAntennas => "antennas/MHz",
            ResourcePair::SpectrumDensity => "BS-per-area/MHz",
        }
    }
}

/// Which axis holds the grid when tracing a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// Grid over `M` or `λ_b`; bandwidth is solved exactly.
    #[default]
    Infrastructure,
    /// Grid over bandwidth; `M` or `λ_b` is solved by search.
    Spectrum,
}

/// The resource held fixed while the other two trade off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeldResources {
    pub lambda_b: f64,
    pub antennas: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveSample {
    /// Grid value.
    pub axis1: f64,
    /// Solved value, `None` where the demand is infeasible.
    pub axis2: Option<f64>,
}

impl CurveSample {
    pub fn feasible(&self) -> bool {
        self.axis2.is_some()
    }
}

/// Resource pairs that all deliver the same demand.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndifferenceCurve {
    pub demand: Demand,
    pub pair: ResourcePair,
    pub sweep: SweepAxis,
    pub held: HeldResources,
    pub samples: Vec<CurveSample>,
}

impl IndifferenceCurve {
    /// Name of the grid axis and of the solved axis.
    pub fn axis_names(&self) -> (&'static str, &'static str) {
        let other = match self.pair {
            ResourcePair::SpectrumAntennas => "antennas",
            ResourcePair::SpectrumDensity => "lambda_b",
        };
        match self.sweep {
            SweepAxis::Infrastructure => (other, "bandwidth_mhz"),
            SweepAxis::Spectrum => ("bandwidth_mhz", other),
        }
    }
}

/// Search limits shared by the curve and upgrade solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverLimits {
    pub antenna_cap: usize,
    /// Upper end of the density search as a multiple of `λ_u`.
    pub max_density_ratio: f64,
}

impl Default for SolverLimits {
    fn default() -> Self {
        Self {
            antenna_cap: DEFAULT_ANTENNA_CAP,
            max_density_ratio: DEFAULT_MAX_DENSITY_RATIO,
        }
    }
}

impl SolverLimits {
    fn density_search(&self) -> DensitySearch {
        DensitySearch {
            bracket: None,
            max_ratio: self.max_density_ratio,
        }
    }
}

/// `n` points spaced evenly in log between `lo` and `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        hi
                    } else {
                        (a + (b - a) * i as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// Traces an indifference curve over `grid`.
///
/// Grid points are solved in parallel; the output order is the grid order and
/// each sample is computed independently, so results do not depend on the
/// thread count.
pub fn indifference_curve(
    demand: Demand,
    pair: ResourcePair,
    sweep: SweepAxis,
    held: HeldResources,
    grid: &[f64],
) -> Result<IndifferenceCurve, TrsError> {
    indifference_curve_with(demand, pair, sweep, held, grid, SolverLimits::default())
}

/// [`indifference_curve`] with explicit search limits.
pub fn indifference_curve_with(
    demand: Demand,
    pair: ResourcePair,
    sweep: SweepAxis,
    held: HeldResources,
    grid: &[f64],
    limits: SolverLimits,
) -> Result<IndifferenceCurve, TrsError> {
    if grid.is_empty() {
        return Err(TrsError::Domain("curve grid is empty".into()));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) || grid.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
        return Err(TrsError::Domain(
            "curve grid must be positive, finite and strictly increasing".into(),
        ));
    }
    if pair == ResourcePair::SpectrumAntennas
        && sweep == SweepAxis::Infrastructure
        && grid.iter().any(|m| m.fract() != 0.0)
    {
        return Err(TrsError::Domain("antenna grid values must be integers".into()));
    }

    let solve = |x: f64| -> Result<Option<f64>, TrsError> {
        let solved = match (pair, sweep) {
            (ResourcePair::SpectrumAntennas, SweepAxis::Infrastructure) => {
                required_spectrum(&demand, held.lambda_b, x as usize)
            }
            (ResourcePair::SpectrumDensity, SweepAxis::Infrastructure) => required_spectrum(&demand, x, held.antennas),
            (ResourcePair::SpectrumAntennas, SweepAxis::Spectrum) => {
                required_antennas(&demand, x, held.lambda_b, limits.antenna_cap).map(|m| m as f64)
            }
            (ResourcePair::SpectrumDensity, SweepAxis::Spectrum) => {
                required_density(&demand, x, held.antennas, &limits.density_search())
            }
        };
        match solved {
            Ok(v) => Ok(Some(v)),
            Err(e) if e.is_infeasible() => Ok(None),
            Err(e) => Err(e),
        }
    };

    let samples = grid
        .par_iter()
        .map(|&x| solve(x).map(|axis2| CurveSample { axis1: x, axis2 }))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(IndifferenceCurve {
        demand,
        pair,
        sweep,
        held,
        samples,
    })
}

/// Difference scheme used to measure a TRS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum StepPolicy {
    /// Secant to the point one step further along the resource:
    /// `step / (W(x) − W(x + step))`.
    ForwardStep { step: f64 },
    /// Implicit-function ratio `(∂R/∂W) / (∂R/∂λ_b)` with `∂R/∂W = R/W` and a
    /// central difference of relative width `rel_step` for `∂R/∂λ_b`.
    ImplicitCentral { rel_step: f64 },
}

impl StepPolicy {
    /// Unit forward step, the default for both resources.
    pub const UNIT_FORWARD: StepPolicy = StepPolicy::ForwardStep { step: 1.0 };

    pub fn describe(&self) -> String {
        match self {
            StepPolicy::ForwardStep { step } => format!("forward-step:{step}"),
            StepPolicy::ImplicitCentral { rel_step } => format!("implicit-central:{rel_step}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrsMagnitude {
    Finite(f64),
    /// Extra spectrum saves nothing per unit of the other resource lost, or the
    /// other resource has no effect on the rate.
    Infinite,
}

impl TrsMagnitude {
    pub fn value(&self) -> f64 {
        match self {
            TrsMagnitude::Finite(v) => *v,
            TrsMagnitude::Infinite => f64::INFINITY,
        }
    }

    fn from_ratio(num: f64, den: f64) -> Self {
        if den > 0.0 && (num / den).is_finite() {
            TrsMagnitude::Finite((num / den).abs())
        } else {
            TrsMagnitude::Infinite
        }
    }
}

/// `|Δ(other)/ΔW|` measured at an operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrsValue {
    pub pair: ResourcePair,
    pub point: OperatingPoint,
    pub magnitude: TrsMagnitude,
    pub step: StepPolicy,
}

impl TrsValue {
    pub fn units(&self) -> &'static str {
        self.pair.trs_units()
    }
}

fn check_point(point: &OperatingPoint) -> Result<(), TrsError> {
    point.config.validate()?;
    if !(point.config.bandwidth_mhz > 0.0) {
        return Err(TrsError::Domain(format!(
            "TRS needs a positive bandwidth, got {}",
            point.config.bandwidth_mhz
        )));
    }
    if !(point.target_rate > 0.0) {
        return Err(TrsError::Domain(format!(
            "TRS needs a positive target rate, got {}",
            point.target_rate
        )));
    }
    Ok(())
}

/// TRS of spectrum with respect to BS density (`Δλ_b / ΔMHz`).
///
/// The bandwidth of `point` is taken as given; its target rate fixes the curve.
pub fn trs_spectrum_density(point: &OperatingPoint, step: StepPolicy) -> Result<TrsValue, TrsError> {
    check_point(point)?;
    let demand = point.demand();
    let cfg = point.config;
    let magnitude = match step {
        StepPolicy::ForwardStep { step: h } => {
            if !(h > 0.0) {
                return Err(TrsError::Domain(format!("step must be > 0, got {h}")));
            }
            let here = required_spectrum(&demand, cfg.lambda_b, cfg.antennas)?;
            let there = required_spectrum(&demand, cfg.lambda_b + h, cfg.antennas)?;
            TrsMagnitude::from_ratio(h, here - there)
        }
        StepPolicy::ImplicitCentral { rel_step } => {
            if !(rel_step > 0.0 && rel_step < 1.0) {
                return Err(TrsError::Domain(format!(
                    "relative step must be in (0, 1), got {rel_step}"
                )));
            }
            let h = rel_step * cfg.lambda_b;
            let rate_at = |lambda_b: f64| -> Result<f64, TrsError> {
                let mut c = cfg;
                c.lambda_b = lambda_b;
                Ok(user_rate(&c)?)
            };
            let d_rate_d_density = (rate_at(cfg.lambda_b + h)? - rate_at(cfg.lambda_b - h)?) / (2.0 * h);
            let d_rate_d_bandwidth = user_rate(&cfg)? / cfg.bandwidth_mhz;
            TrsMagnitude::from_ratio(d_rate_d_bandwidth, d_rate_d_density)
        }
    };
    Ok(TrsValue {
        pair: ResourcePair::SpectrumDensity,
        point: *point,
        magnitude,
        step,
    })
}

/// TRS of spectrum with respect to antennas (`ΔM / ΔMHz`) with a unit forward
/// step: `1 / (W(M) − W(M + 1))`.
pub fn trs_spectrum_antennas(point: &OperatingPoint) -> Result<TrsValue, TrsError> {
    check_point(point)?;
    let demand = point.demand();
    let cfg = point.config;
    let here = required_spectrum(&demand, cfg.lambda_b, cfg.antennas)?;
    let there = required_spectrum(&demand, cfg.lambda_b, cfg.antennas + 1)?;
    Ok(TrsValue {
        pair: ResourcePair::SpectrumAntennas,
        point: *point,
        magnitude: TrsMagnitude::from_ratio(1.0, here - there),
        step: StepPolicy::UNIT_FORWARD,
    })
}

/// How demand grows in a capacity upgrade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpgradeMode {
    /// Same users, higher per-user rate.
    DoubleRate,
    /// More users at the same per-user rate.
    DoubleUsage,
}

/// The single resource allowed to change in an upgrade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lever {
    Spectrum,
    Density,
    Antennas,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "status")]
pub enum LeverOutcome {
    Feasible {
        value: f64,
        ratio: f64,
    },
    Infeasible {
        reason: String,
        /// Best rate reachable within the search limits, Mbps.
        best_rate: f64,
        /// Lever value at which `best_rate` is reached.
        at: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpgradeReport {
    pub mode: UpgradeMode,
    pub lever: Lever,
    pub factor: f64,
    pub base: OperatingPoint,
    pub target_rate: f64,
    pub target_lambda_u: f64,
    pub base_value: f64,
    pub outcome: LeverOutcome,
}

impl UpgradeReport {
    pub fn ratio(&self) -> Option<f64> {
        match self.outcome {
            LeverOutcome::Feasible { ratio, .. } => Some(ratio),
            LeverOutcome::Infeasible { .. } => None,
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self.outcome {
            LeverOutcome::Feasible { value, .. } => Some(value),
            LeverOutcome::Infeasible { .. } => None,
        }
    }
}

/// Resource needed to serve twice the rate, or twice the users, by moving a
/// single lever from `base`.
pub fn doubling_scenario(base: &OperatingPoint, mode: UpgradeMode, lever: Lever) -> Result<UpgradeReport, TrsError> {
    scaling_scenario(base, mode, lever, 2.0)
}

/// [`doubling_scenario`] with an arbitrary growth factor.
pub fn scaling_scenario(
    base: &OperatingPoint,
    mode: UpgradeMode,
    lever: Lever,
    factor: f64,
) -> Result<UpgradeReport, TrsError> {
    scaling_scenario_with(base, mode, lever, factor, SolverLimits::default())
}

/// [`scaling_scenario`] with explicit search limits.
pub fn scaling_scenario_with(
    base: &OperatingPoint,
    mode: UpgradeMode,
    lever: Lever,
    factor: f64,
    limits: SolverLimits,
) -> Result<UpgradeReport, TrsError> {
    base.config.validate()?;
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(TrsError::Domain(format!("growth factor must be > 0, got {factor}")));
    }
    let mut demand = base.demand();
    match mode {
        UpgradeMode::DoubleRate => demand.rate_mbps *= factor,
        UpgradeMode::DoubleUsage => demand.lambda_u *= factor,
    }
    let cfg = base.config;
    let (base_value, solved) = match lever {
        Lever::Spectrum => (
            cfg.bandwidth_mhz,
            required_spectrum(&demand, cfg.lambda_b, cfg.antennas),
        ),
        Lever::Density => (
            cfg.lambda_b,
            required_density(&demand, cfg.bandwidth_mhz, cfg.antennas, &limits.density_search()),
        ),
        Lever::Antennas => (
            cfg.antennas as f64,
            required_antennas(&demand, cfg.bandwidth_mhz, cfg.lambda_b, limits.antenna_cap).map(|m| m as f64),
        ),
    };
    let outcome = match solved {
        Ok(value) => LeverOutcome::Feasible {
            value,
            ratio: value / base_value,
        },
        Err(TrsError::Infeasible { best, at, .. }) => LeverOutcome::Infeasible {
            reason: format!(
                "{} Mbps for lambda_u = {} is out of reach by {lever:?} alone",
                demand.rate_mbps, demand.lambda_u
            ),
            best_rate: best,
            at,
        },
        Err(e) => return Err(e),
    };
    Ok(UpgradeReport {
        mode,
        lever,
        factor,
        base: *base,
        target_rate: demand.rate_mbps,
        target_lambda_u: demand.lambda_u,
        base_value,
        outcome,
    })
}
