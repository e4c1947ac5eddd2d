//! Gauss hypergeometric function on the non-positive real axis, and the
//! interference coefficients `k_0 … k_{M-1}` built from it.
//!
//! # Evaluation strategy
//!
//! The coverage model only ever needs `₂F₁(a, b; c; z)` at `z = −T` with `T`
//! spanning many decades, so the raw power series in `z` is useless for
//! `T > 1`. Every evaluation is first moved onto the unit interval with the
//! Pfaff transformation
//!
//! ```text
//! ₂F₁(a, b; c; z) = (1 − z)^(−a) ₂F₁(a, c − b; c; w),   w = z / (z − 1) ∈ [0, 1)
//! ```
//!
//! For the coefficient families `c − b = 1`, so the transformed series has a
//! unit numerator parameter. The series in `w` is then summed directly while
//! `w ≤ 0.9`. Above that the series in `w` converges like `wⁿ`, so when
//! `c − a − b` is not an integer and `(1 − w)` times the parameter scale is small
//! the `w ↦ 1 − w` connection formula is used instead; it turns the slow tail
//! into two rapidly convergent series in `1 − w` and stays accurate as
//! `z → −∞`. Otherwise the series in `w` is summed with the normal budget, or
//! with [`EXTENDED_SERIES_BUDGET`] once `w > 0.99`.
//!
//! Summation stops when a term drops below `1e−16 ×` the partial sum for three
//! consecutive terms.

use thiserror::Error;

/// Term budget for an ordinary series evaluation.
pub const SERIES_BUDGET: usize = 100_000;

/// Term budget used when the transformed argument exceeds [`NEAR_UNIT_ARGUMENT`]
/// and no connection formula applies.
pub const EXTENDED_SERIES_BUDGET: usize = 10_000_000;

/// Transformed arguments above this are treated as "near unit".
pub const NEAR_UNIT_ARGUMENT: f64 = 0.99;

const DIRECT_SERIES_LIMIT: f64 = 0.9;
const CONNECTION_SCALE_LIMIT: f64 = 0.5;
const TERM_TOLERANCE: f64 = 1e-16;
const SMALL_TERMS_TO_STOP: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HypergeomError {
    #[error("2F1({a}, {b}; {c}; {z}) did not converge within {terms} terms")]
    NonConvergence {
        a: f64,
        b: f64,
        c: f64,
        z: f64,
        terms: usize,
    },
    #[error("2F1({a}, {b}; {c}; {z}) is outside the supported domain: {reason}")]
    Domain {
        a: f64,
        b: f64,
        c: f64,
        z: f64,
        reason: &'static str,
    },
    #[error("invalid coefficient input: {0}")]
    InvalidInput(String),
}

fn is_non_positive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

fn near_integer(x: f64) -> bool {
    (x - x.round()).abs() < 1e-9
}

/// Evaluates `₂F₁(a, b; c; z)` for `z ≤ 0`.
///
/// ```
/// use trs_core::hypergeom::gauss_2f1;
///
/// // ₂F₁(1, ½; 3/2; −x²) = arctan(x) / x
/// let v = gauss_2f1(1.0, 0.5, 1.5, -1.0).unwrap();
/// assert!((v - std::f64::consts::FRAC_PI_4).abs() < 1e-14);
/// ```
pub fn gauss_2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64, HypergeomError> {
    let domain = |reason| HypergeomError::Domain { a, b, c, z, reason };
    if !(a.is_finite() && b.is_finite() && c.is_finite() && z.is_finite()) {
        return Err(domain("non-finite parameter or argument"));
    }
    if z > 0.0 {
        return Err(domain("only z <= 0 is supported"));
    }
    if is_non_positive_integer(c) {
        return Err(domain("c must not be a non-positive integer"));
    }
    if z == 0.0 {
        return Ok(1.0);
    }

    let t = -z;
    let w = t / (1.0 + t);
    let w_complement = 1.0 / (1.0 + t);

    // Pfaff is symmetric in (a, b); pick the ordering whose transformed series
    // is cheapest.
    let (lead, other) = pfaff_ordering(a, b, c);
    let series = unit_interval(lead, c - other, c, w, w_complement)
        .map_err(|terms| HypergeomError::NonConvergence { a, b, c, z, terms })?;
    Ok(series * w_complement.powf(lead))
}

fn pfaff_ordering(a: f64, b: f64, c: f64) -> (f64, f64) {
    let score = |lead: f64, other: f64| {
        let q = c - other;
        if is_non_positive_integer(q) || is_non_positive_integer(lead) {
            0.0
        } else if q == 1.0 {
            1.0
        } else {
            2.0 + lead.abs() + q.abs()
        }
    };
    if score(b, a) < score(a, b) {
        (b, a)
    } else {
        (a, b)
    }
}

/// `₂F₁(a, b; c; w)` for `w ∈ [0, 1)`; `w_complement` must equal `1 − w`
/// (passed separately so callers can keep it exact near `w = 1`).
///
/// On failure returns the number of terms spent.
pub(crate) fn unit_interval(a: f64, b: f64, c: f64, w: f64, w_complement: f64) -> Result<f64, usize> {
    if w == 0.0 {
        return Ok(1.0);
    }
    if w <= DIRECT_SERIES_LIMIT {
        return power_series(a, b, c, w, SERIES_BUDGET);
    }
    let gap = c - a - b;
    let scale = [1.0, a.abs(), b.abs(), (c - a).abs(), (c - b).abs()]
        .into_iter()
        .fold(0.0, f64::max);
    if !near_integer(gap) && w_complement * scale <= CONNECTION_SCALE_LIMIT {
        if let Some(v) = connection(a, b, c, w_complement)? {
            return Ok(v);
        }
    }
    let budget = if w > NEAR_UNIT_ARGUMENT {
        EXTENDED_SERIES_BUDGET
    } else {
        SERIES_BUDGET
    };
    power_series(a, b, c, w, budget)
}

fn power_series(a: f64, b: f64, c: f64, x: f64, budget: usize) -> Result<f64, usize> {
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut small = 0;
    for n in 0..budget {
        let n = n as f64;
        term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * x;
        if term == 0.0 {
            return Ok(sum);
        }
        sum += term;
        if !sum.is_finite() {
            return Err(n as usize + 1);
        }
        if term.abs() < TERM_TOLERANCE * sum.abs() {
            small += 1;
            if small >= SMALL_TERMS_TO_STOP {
                return Ok(sum);
            }
        } else {
            small = 0;
        }
    }
    Err(budget)
}

/// `w ↦ 1 − w` connection formula. `Ok(None)` means a gamma factor was not
/// representable and the caller should fall back to the direct series.
fn connection(a: f64, b: f64, c: f64, y: f64) -> Result<Option<f64>, usize> {
    let gap = c - a - b;
    let left = gamma_ratio(&[c, gap], &[c - a, c - b]);
    let right = gamma_ratio(&[c, -gap], &[a, b]);
    let (Some(left), Some(right)) = (left, right) else {
        return Ok(None);
    };
    let mut value = 0.0;
    if left != 0.0 {
        value += left * power_series(a, b, 1.0 - gap, y, SERIES_BUDGET)?;
    }
    if right != 0.0 {
        value += right * y.powf(gap) * power_series(c - a, c - b, 1.0 + gap, y, SERIES_BUDGET)?;
    }
    Ok(value.is_finite().then_some(value))
}

/// `Π Γ(numerator) / Π Γ(denominator)` via signed log-gamma. A pole in the
/// denominator gives an exact zero; a pole in the numerator gives `None`.
fn gamma_ratio(numerator: &[f64], denominator: &[f64]) -> Option<f64> {
    let mut log = 0.0;
    let mut sign = 1;
    for &x in numerator {
        if is_non_positive_integer(x) {
            return None;
        }
        let (lg, s) = libm::lgamma_r(x);
        log += lg;
        sign *= s;
    }
    for &x in denominator {
        if is_non_positive_integer(x) {
            return Some(0.0);
        }
        let (lg, s) = libm::lgamma_r(x);
        log -= lg;
        sign *= s;
    }
    let v = f64::from(sign) * log.exp();
    v.is_finite().then_some(v)
}

fn check_coefficient_inputs(threshold: f64, alpha: f64) -> Result<(), HypergeomError> {
    if !(threshold >= 0.0) || threshold.is_infinite() {
        return Err(HypergeomError::InvalidInput(format!(
            "threshold must be finite and >= 0, got {threshold}"
        )));
    }
    if !(alpha > 2.0) || alpha.is_infinite() {
        return Err(HypergeomError::InvalidInput(format!(
            "path-loss exponent must be finite and > 2, got {alpha}"
        )));
    }
    Ok(())
}

/// Coefficient `k_i(T, α)` in terms of `w = T / (1 + T)`.
///
/// `k_0 = (δT / (1 − δ)) ₂F₁(1, 1 − δ; 2 − δ; −T)` and, for `i ≥ 1`,
/// `k_i = (δTⁱ / (i − δ)) ₂F₁(i + 1, i − δ; i + 1 − δ; −T)` with `δ = 2/α`.
/// After the Pfaff step `Tⁱ(1 + T)^(−i−1) = wⁱ(1 − w)` so nothing overflows for
/// large `i`.
pub(crate) fn coefficient_at(i: usize, w: f64, w_complement: f64, alpha: f64) -> Result<f64, HypergeomError> {
    if w == 0.0 {
        return Ok(0.0);
    }
    let delta = 2.0 / alpha;
    let n = i as f64;
    // Report the parameters as printed, before the Pfaff step.
    let (a, b, c) = if i == 0 {
        (1.0, 1.0 - delta, 2.0 - delta)
    } else {
        (n + 1.0, n - delta, n + 1.0 - delta)
    };
    let to_error = |terms| HypergeomError::NonConvergence {
        a,
        b,
        c,
        z: -w / w_complement,
        terms,
    };
    if i == 0 {
        let f = unit_interval(1.0, 1.0, 2.0 - delta, w, w_complement).map_err(to_error)?;
        return Ok(delta / (1.0 - delta) * w * f);
    }
    let weight = w.powi(i as i32) * w_complement;
    if weight == 0.0 {
        return Ok(0.0);
    }
    let f = unit_interval(n + 1.0, 1.0, n + 1.0 - delta, w, w_complement).map_err(to_error)?;
    Ok(delta / (n - delta) * weight * f)
}

/// Coefficient `k_i(T, α)`; `i = 0` uses the dedicated `k_0` formula.
///
/// ```
/// use trs_core::hypergeom::coeff_k;
///
/// // For α = 4, k₀(T) = √T · arctan(√T).
/// let k0 = coeff_k(0, 1.0, 4.0).unwrap();
/// assert!((k0 - std::f64::consts::FRAC_PI_4).abs() < 1e-14);
/// ```
pub fn coeff_k(i: usize, threshold: f64, alpha: f64) -> Result<f64, HypergeomError> {
    check_coefficient_inputs(threshold, alpha)?;
    let w = threshold / (1.0 + threshold);
    let w_complement = 1.0 / (1.0 + threshold);
    coefficient_at(i, w, w_complement, alpha)
}

/// Cached `k_0 … k_{M−1}` for one `(T, α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    threshold: f64,
    alpha: f64,
    values: Vec<f64>,
}

impl CoefficientTable {
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Builds the table from `w = T/(1+T)` and `1 − w`.
    ///
    /// `k_0` and `k_{M−1}` are evaluated directly; the entries in between come
    /// from the downward recurrence
    /// `k_n = ((n + 1) k_{n+1} + δ wⁿ (1 − w)) / (n − δ)`,
    /// which adds positive terms only and so is stable in relative error.
    pub(crate) fn from_unit_argument(
        antennas: usize,
        w: f64,
        w_complement: f64,
        alpha: f64,
    ) -> Result<Self, HypergeomError> {
        let threshold = if w_complement > 0.0 {
            w / w_complement
        } else {
            f64::INFINITY
        };
        let mut values = vec![0.0; antennas];
        values[0] = coefficient_at(0, w, w_complement, alpha)?;
        if antennas > 1 && w > 0.0 {
            let delta = 2.0 / alpha;
            let top = antennas - 1;
            values[top] = coefficient_at(top, w, w_complement, alpha)?;
            for n in (1..top).rev() {
                let nf = n as f64;
                let source = delta * w.powi(n as i32) * w_complement;
                values[n] = ((nf + 1.0) * values[n + 1] + source) / (nf - delta);
            }
        }
        Ok(Self {
            threshold,
            alpha,
            values,
        })
    }
}

/// `k_0 … k_{M−1}` at `(T, α)`.
pub fn coefficient_table(antennas: usize, threshold: f64, alpha: f64) -> Result<CoefficientTable, HypergeomError> {
    if antennas == 0 {
        return Err(HypergeomError::InvalidInput("antenna count must be >= 1".to_string()));
    }
    check_coefficient_inputs(threshold, alpha)?;
    let w = threshold / (1.0 + threshold);
    let w_complement = 1.0 / (1.0 + threshold);
    let mut table = CoefficientTable::from_unit_argument(antennas, w, w_complement, alpha)?;
    table.threshold = threshold;
    Ok(table)
}
