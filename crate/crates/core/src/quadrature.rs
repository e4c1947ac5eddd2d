//! Globally adaptive 15-point Gauss–Kronrod quadrature on a finite interval.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

// Kronrod abscissae on [0, 1] (symmetric); odd indices are the Gauss nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_evaluations: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 1e-12,
            max_evaluations: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError<E> {
    #[error(transparent)]
    Integrand(E),
    #[error("integrand is not finite at {at}")]
    NonFinite { at: f64 },
    #[error(
        "quadrature stopped after {evaluations} evaluations with error estimate {achieved:e} (requested {requested:e})"
    )]
    NotConverged {
        achieved: f64,
        requested: f64,
        evaluations: usize,
    },
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    // Largest error first; ties broken by position so the order is total.
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.lo.total_cmp(&self.lo))
    }
}

fn kronrod<E, F>(f: &mut F, lo: f64, hi: f64) -> Result<Segment, IntegrationError<E>>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut eval = |x: f64| -> Result<f64, IntegrationError<E>> {
        let v = f(x).map_err(IntegrationError::Integrand)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(IntegrationError::NonFinite { at: x })
        }
    };
    let fc = eval(center)?;
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = eval(center - dx)? + eval(center + dx)?;
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Ok(Segment {
        lo,
        hi,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    })
}

/// Integrates `f` over `[lo, hi]`, bisecting the worst segment until the summed
/// error estimate meets `max(abs_tol, rel_tol · |value|)`.
pub fn integrate<E, F>(
    mut f: F,
    lo: f64,
    hi: f64,
    options: &QuadratureOptions,
) -> Result<Quadrature, IntegrationError<E>>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    const POINTS: usize = 15;
    let mut heap = BinaryHeap::new();
    let first = kronrod(&mut f, lo, hi)?;
    let mut evaluations = POINTS;
    let mut value = first.value;
    let mut error = first.error;
    heap.push(first);

    loop {
        let requested = options.abs_tol.max(options.rel_tol * value.abs());
        if error <= requested {
            break;
        }
        if evaluations + 2 * POINTS > options.max_evaluations {
            return Err(IntegrationError::NotConverged {
                achieved: error,
                requested,
                evaluations,
            });
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.lo + worst.hi);
        let left = kronrod(&mut f, worst.lo, mid)?;
        let right = kronrod(&mut f, mid, worst.hi)?;
        evaluations += 2 * POINTS;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // Re-sum occasionally so drift in the running totals cannot stall the loop.
        if heap.len() % 64 == 0 {
            value = heap.iter().map(|s| s.value).sum();
            error = heap.iter().map(|s| s.error).sum();
        }
    }
    // Final totals summed in heap-independent (position) order.
    let mut segments = heap.into_vec();
    segments.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    Ok(Quadrature {
        value: segments.iter().map(|s| s.value).sum(),
        error_estimate: segments.iter().map(|s| s.error).sum(),
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn ok(f: impl Fn(f64) -> f64) -> impl FnMut(f64) -> Result<f64, Infallible> {
        move |x| Ok(f(x))
    }

    #[test]
    fn polynomial_is_exact() {
        let q = integrate(ok(|x| 3.0 * x * x), 0.0, 2.0, &QuadratureOptions::default()).unwrap();
        assert!((q.value - 8.0).abs() < 1e-14);
        assert_eq!(q.evaluations, 15);
    }

    #[test]
    fn endpoint_singularity() {
        // ∫₀¹ (1 − u)^(−1/2) du = 2
        let opts = QuadratureOptions {
            abs_tol: 1e-6,
            ..QuadratureOptions::default()
        };
        let q = integrate(ok(|u| (1.0 - u).powf(-0.5)), 0.0, 1.0, &opts).unwrap();
        assert!((q.value - 2.0).abs() < 1e-5, "{}", q.value);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let opts = QuadratureOptions {
            abs_tol: 1e-15,
            rel_tol: 0.0,
            max_evaluations: 100,
        };
        let err = integrate(ok(|u| (1.0 - u).powf(-0.9)), 0.0, 1.0, &opts).unwrap_err();
        assert!(matches!(err, IntegrationError::NotConverged { evaluations, .. } if evaluations <= 100));
    }

    #[test]
    fn integrand_errors_propagate() {
        let err = integrate(
            |x: f64| if x > 0.5 { Err("boom") } else { Ok(x) },
            0.0,
            1.0,
            &QuadratureOptions::default(),
        )
        .unwrap_err();
        assert_eq!(err, IntegrationError::Integrand("boom"));
    }
}
