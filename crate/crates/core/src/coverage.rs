//! Analytic downlink model: BS activity, outage through the lower-triangular
//! Toeplitz system, ergodic spectral efficiency and per-user rate.
//!
//! BSs form a PPP of density `λ_b`; the typical user attaches to the nearest
//! one and sees interference from a thinned PPP of density `p_a·λ_b`. The
//! serving link carries an MRT gain `Gamma(M, 1)`, interferers `Exp(1)`.
//! Noise is ignored, so the analytic path requires `noise_power == 0`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypergeom::{CoefficientTable, HypergeomError};
use crate::quadrature::{integrate, IntegrationError, QuadratureOptions};

/// Shape parameter of the Voronoi cell-area approximation behind the activity law.
pub const CELL_AREA_SHAPE: f64 = 3.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoverageError {
    #[error("invalid network configuration: {0}")]
    InvalidConfig(String),
    #[error("the analytic model is interference-limited; noise power must be 0, got {0}")]
    NoiseUnsupported(f64),
    #[error(transparent)]
    Hypergeom(#[from] HypergeomError),
    #[error(
        "spectral-efficiency quadrature did not converge: error estimate {achieved:e} after {evaluations} evaluations"
    )]
    Quadrature { achieved: f64, evaluations: usize },
    #[error("Toeplitz system diagonal {0} is not positive")]
    Singular(f64),
}

/// How the bandwidth of a BS is shared among the users it serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoadModel {
    /// Round-robin share equal to the reciprocal of the mean number of users
    /// per active BS: `min(1, p_a·λ_b/λ_u)`.
    #[default]
    MeanLoad,
    /// Every user gets the full band.
    NoSharing,
}

/// One network operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// BS density (per unit area).
    pub lambda_b: f64,
    /// Active-user density (per unit area).
    pub lambda_u: f64,
    /// Antennas per BS.
    pub antennas: usize,
    /// System bandwidth in MHz.
    pub bandwidth_mhz: f64,
    /// Path-loss exponent.
    pub alpha: f64,
    /// Additive noise power, linear.
    pub noise_power: f64,
    /// BS transmit power, linear.
    pub tx_power: f64,
    pub load_model: LoadModel,
}

impl NetworkConfig {
    /// `α = 4`, no noise, unit transmit power, mean-load sharing.
    pub fn new(lambda_b: f64, lambda_u: f64, antennas: usize, bandwidth_mhz: f64) -> Self {
        Self {
            lambda_b,
            lambda_u,
            antennas,
            bandwidth_mhz,
            alpha: 4.0,
            noise_power: 0.0,
            tx_power: 1.0,
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

    pub fn with_bandwidth(mut self, bandwidth_mhz: f64) -> Self {
        self.bandwidth_mhz = bandwidth_mhz;
        self
    }

    pub fn validate(&self) -> Result<(), CoverageError> {
        let bad = |what: &str, v: f64| Err(CoverageError::InvalidConfig(format!("{what} = {v}")));
        if !(self.lambda_b > 0.0 && self.lambda_b.is_finite()) {
            return bad("lambda_b must be finite and > 0, got lambda_b", self.lambda_b);
        }
        if !(self.lambda_u > 0.0 && self.lambda_u.is_finite()) {
            return bad("lambda_u must be finite and > 0, got lambda_u", self.lambda_u);
        }
        if self.antennas == 0 {
            return bad("antennas must be >= 1, got antennas", 0.0);
        }
        if !(self.bandwidth_mhz >= 0.0 && self.bandwidth_mhz.is_finite()) {
            return bad(
                "bandwidth must be finite and >= 0, got bandwidth_mhz",
                self.bandwidth_mhz,
            );
        }
        check_alpha(self.alpha)?;
        if !(self.noise_power >= 0.0 && self.noise_power.is_finite()) {
            return bad("noise power must be finite and >= 0, got noise_power", self.noise_power);
        }
        if !(self.tx_power > 0.0 && self.tx_power.is_finite()) {
            return bad("transmit power must be finite and > 0, got tx_power", self.tx_power);
        }
        Ok(())
    }

    /// BS-to-user density ratio `ρ = λ_b / λ_u`.
    pub fn density_ratio(&self) -> f64 {
        self.lambda_b / self.lambda_u
    }

    pub fn active_probability(&self) -> Result<f64, CoverageError> {
        active_probability(self.density_ratio())
    }

    /// Fraction of the band a user receives under the configured load model.
    pub fn load_share(&self) -> Result<f64, CoverageError> {
        load_share(self.load_model, self.density_ratio())
    }
}

fn check_alpha(alpha: f64) -> Result<(), CoverageError> {
    if alpha > 2.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(CoverageError::InvalidConfig(format!(
            "path-loss exponent must be finite and > 2, got {alpha}"
        )))
    }
}

/// Probability that a BS has at least one user in its cell,
/// `1 − (1 + 1/(3.5ρ))^(−3.5)`.
///
/// ```
/// use trs_core::coverage::active_probability;
///
/// assert!((active_probability(10.0).unwrap() - 0.0939).abs() < 1e-4);
/// ```
pub fn active_probability(rho: f64) -> Result<f64, CoverageError> {
    if !(rho > 0.0) || rho.is_nan() {
        return Err(CoverageError::InvalidConfig(format!(
            "density ratio must be > 0, got {rho}"
        )));
    }
    if rho.is_infinite() {
        return Ok(0.0);
    }
    let k = CELL_AREA_SHAPE;
    Ok(-(-k * (1.0 / (k * rho)).ln_1p()).exp_m1())
}

/// Bandwidth share of a user for density ratio `rho`.
pub fn load_share(model: LoadModel, rho: f64) -> Result<f64, CoverageError> {
    match model {
        LoadModel::MeanLoad => Ok((active_probability(rho)? * rho).min(1.0)),
        LoadModel::NoSharing => {
            active_probability(rho)?;
            Ok(1.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutageResult {
    pub p_out: f64,
    pub threshold: f64,
    pub active_probability: f64,
    pub antennas: usize,
    pub alpha: f64,
}

impl OutageResult {
    pub fn coverage(&self) -> f64 {
        1.0 - self.p_out
    }
}

/// First column of `(d·I − Q_M)^(−1)` where `Q_M` is strictly lower-triangular
/// Toeplitz with sub-diagonals `k_1, k_2, …`:
/// `b_0 = 1/d`, `b_n = (1/d) Σ_{m=1..n} k_m b_{n−m}`.
///
/// The inverse is itself lower-triangular Toeplitz with non-negative entries,
/// so its induced 1-norm is the sum of this column.
pub fn toeplitz_inverse_column(coefficients: &[f64], diagonal: f64) -> Vec<f64> {
    let mut column = Vec::with_capacity(coefficients.len());
    if coefficients.is_empty() {
        return column;
    }
    let inv = 1.0 / diagonal;
    column.push(inv);
    for n in 1..coefficients.len() {
        let acc: f64 = (1..=n).map(|m| coefficients[m] * column[n - m]).sum();
        column.push(acc * inv);
    }
    column
}

/// `1 − p_out` from a coefficient table.
fn coverage_from_table(table: &CoefficientTable, p_a: f64) -> Result<f64, CoverageError> {
    let k = table.values();
    let diagonal = k[0] + 1.0 / p_a;
    if !(diagonal > 0.0) || !diagonal.is_finite() {
        return Err(CoverageError::Singular(diagonal));
    }
    let norm: f64 = toeplitz_inverse_column(k, diagonal).iter().sum();
    Ok((norm / p_a).clamp(0.0, 1.0))
}

fn check_outage_inputs(p_a: f64, antennas: usize, alpha: f64) -> Result<(), CoverageError> {
    if !(p_a > 0.0 && p_a <= 1.0) {
        return Err(CoverageError::InvalidConfig(format!(
            "active probability must lie in (0, 1], got {p_a}"
        )));
    }
    if antennas == 0 {
        return Err(CoverageError::InvalidConfig("antennas must be >= 1".into()));
    }
    check_alpha(alpha)
}

/// Outage probability `P[SINR < T]`:
/// `1 − (1/p_a) ‖[(k_0 + 1/p_a) I − Q_M]^(−1)‖₁`.
///
/// ```
/// use trs_core::coverage::outage_probability;
///
/// // One antenna, every BS active: 1 − 1/(1 + π/4)
/// let out = outage_probability(1.0, 1.0, 1, 4.0).unwrap();
/// assert!((out.p_out - 0.439900846488).abs() < 1e-11);
/// ```
pub fn outage_probability(
    threshold: f64,
    p_a: f64,
    antennas: usize,
    alpha: f64,
) -> Result<OutageResult, CoverageError> {
    check_outage_inputs(p_a, antennas, alpha)?;
    if !(threshold >= 0.0) || threshold.is_infinite() {
        return Err(CoverageError::InvalidConfig(format!(
            "SINR threshold must be finite and >= 0, got {threshold}"
        )));
    }
    let w = threshold / (1.0 + threshold);
    let w_complement = 1.0 / (1.0 + threshold);
    let table = CoefficientTable::from_unit_argument(antennas, w, w_complement, alpha)?;
    let coverage = coverage_from_table(&table, p_a)?;
    Ok(OutageResult {
        p_out: 1.0 - coverage,
        threshold,
        active_probability: p_a,
        antennas,
        alpha,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralEfficiency {
    /// `E[log₂(1 + SINR)]`.
    pub bits_per_hz: f64,
    /// `E[ln(1 + SINR)]`, the raw value of the quadrature.
    pub nats_per_hz: f64,
    /// Quadrature error estimate, in bits/s/Hz.
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Ergodic spectral efficiency in bits/s/Hz with default quadrature settings.
pub fn spectral_efficiency(p_a: f64, antennas: usize, alpha: f64) -> Result<f64, CoverageError> {
    spectral_efficiency_with(p_a, antennas, alpha, &QuadratureOptions::default()).map(|s| s.bits_per_hz)
}

/// `(1/ln 2) ∫₀^∞ (1 − p_out(T)) / (1 + T) dT`.
///
/// The half-line is mapped onto `[0, 1)` by `T = (u/(1 − u))^(α/2)`; coverage
/// decays like `T^(−2/α)`, so this exponent leaves a bounded integrand at both
/// ends. Diverges as `p_a → 0` (no interference, no noise), hence `p_a > 0`.
pub fn spectral_efficiency_with(
    p_a: f64,
    antennas: usize,
    alpha: f64,
    options: &QuadratureOptions,
) -> Result<SpectralEfficiency, CoverageError> {
    check_outage_inputs(p_a, antennas, alpha)?;
    let q = alpha / 2.0;
    let integrand = |u: f64| -> Result<f64, CoverageError> {
        let uc = 1.0 - u;
        let t = u / uc;
        let threshold = t.powf(q);
        let w_complement = 1.0 / (1.0 + threshold);
        let w = threshold * w_complement;
        let jacobian = q * t.powf(q - 1.0) / (uc * uc);
        let table = CoefficientTable::from_unit_argument(antennas, w, w_complement, alpha)?;
        Ok(coverage_from_table(&table, p_a)? * w_complement * jacobian)
    };
    let result = integrate(integrand, 0.0, 1.0, options).map_err(|e| match e {
        IntegrationError::Integrand(e) => e,
        IntegrationError::NonFinite { .. } => CoverageError::Quadrature {
            achieved: f64::INFINITY,
            evaluations: 0,
        },
        IntegrationError::NotConverged {
            achieved, evaluations, ..
        } => CoverageError::Quadrature { achieved, evaluations },
    })?;
    let ln2 = std::f64::consts::LN_2;
    Ok(SpectralEfficiency {
        bits_per_hz: result.value / ln2,
        nats_per_hz: result.value,
        error_estimate: result.error_estimate / ln2,
        evaluations: result.evaluations,
    })
}

/// Average per-user rate in Mbps (bandwidth in MHz × bits/s/Hz × share).
///
/// ```
/// use trs_core::coverage::{user_rate, NetworkConfig};
///
/// let sparse = NetworkConfig::new(10.0, 100.0, 1, 70.0);
/// let r1 = user_rate(&sparse).unwrap();
/// let r2 = user_rate(&sparse.with_bandwidth(140.0)).unwrap();
/// assert!((r2 - 2.0 * r1).abs() < 1e-9 * r2);
/// ```
pub fn user_rate(config: &NetworkConfig) -> Result<f64, CoverageError> {
    Ok(config.bandwidth_mhz * rate_per_mhz(config)?)
}

/// Per-user rate per MHz of bandwidth: `SE · share`.
pub fn rate_per_mhz(config: &NetworkConfig) -> Result<f64, CoverageError> {
    config.validate()?;
    if config.noise_power != 0.0 {
        return Err(CoverageError::NoiseUnsupported(config.noise_power));
    }
    let p_a = config.active_probability()?;
    let share = config.load_share()?;
    Ok(spectral_efficiency(p_a, config.antennas, config.alpha)? * share)
}
