//! Test-only oracles: exact-rational fixed-point series for ₂F₁ and a plain
//! composite-Simpson incomplete beta.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

/// Decimal digits carried by the fixed-point oracle.
pub const DIGITS: u32 = 60;

/// A rational `num / den` with `den > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Q(pub i64, pub i64);

impl Q {
    pub fn int(n: i64) -> Self {
        Q(n, 1)
    }

    pub fn f64(self) -> f64 {
        self.0 as f64 / self.1 as f64
    }

    pub fn sub(self, o: Q) -> Q {
        Q(self.0 * o.1 - o.0 * self.1, self.1 * o.1)
    }

    pub fn add(self, o: Q) -> Q {
        Q(self.0 * o.1 + o.0 * self.1, self.1 * o.1)
    }
}

fn scale() -> BigInt {
    BigInt::from(10u32).pow(DIGITS)
}

/// Fixed-point value (scaled by 10^DIGITS) to the nearest f64.
pub fn to_f64(x: &BigInt) -> f64 {
    let digits = x.abs().to_string();
    let width = DIGITS as usize + 1;
    let padded = format!("{digits:0>width$}");
    let (int, frac) = padded.split_at(padded.len() - DIGITS as usize);
    let v: f64 = format!("{int}.{frac}").parse().unwrap();
    if x.is_negative() {
        -v
    } else {
        v
    }
}

/// Σ (a)_n (b)_n / ((c)_n n!) wⁿ in fixed point, for rational parameters and
/// `0 ≤ w < 1`. Stops once three consecutive terms fall below 10^-(DIGITS-2)
/// or the series terminates.
pub fn series(a: Q, b: Q, c: Q, w: Q) -> BigInt {
    let one = scale();
    let mut term = one.clone();
    let mut sum = one;
    let mut small = 0;
    let tiny = BigInt::from(100);
    for n in 0..5_000_000i64 {
        let num = BigInt::from(a.0 + n * a.1) * BigInt::from(b.0 + n * b.1) * BigInt::from(c.1) * BigInt::from(w.0);
        let den = BigInt::from(a.1)
            * BigInt::from(b.1)
            * BigInt::from(c.0 + n * c.1)
            * BigInt::from(n + 1)
            * BigInt::from(w.1);
        term = term * num / den;
        if term.is_zero() && (a.0 + n * a.1 == 0 || b.0 + n * b.1 == 0) {
            return sum;
        }
        sum += &term;
        if term.abs() < tiny {
            small += 1;
            if small >= 3 {
                return sum;
            }
        } else {
            small = 0;
        }
    }
    panic!("oracle series did not converge for a={a:?} b={b:?} c={c:?} w={w:?}");
}

/// ₂F₁(a, b; c; −T) for integer `a ≥ 1` via the Pfaff transform
/// (1+T)^{-a} ₂F₁(a, c−b; c; T/(1+T)), returned as the fixed-point series and
/// the exact prefactor `(num, den)` so callers can apply further rational
/// factors before the single rounding division.
fn pfaff_parts(a: i64, b: Q, c: Q, t: Q) -> (BigInt, BigInt, BigInt) {
    assert!(a >= 1 && t.0 >= 0);
    let w = Q(t.0, t.0 + t.1);
    let s = series(Q::int(a), c.sub(b), c, w);
    (
        s,
        BigInt::from(t.1).pow(a as u32),
        BigInt::from(t.0 + t.1).pow(a as u32),
    )
}

pub fn f21_negative(a: i64, b: Q, c: Q, t: Q) -> BigInt {
    let (s, num, den) = pfaff_parts(a, b, c, t);
    s * num / den
}

/// ₂F₁(a, b; c; −T) summed directly; only for `T < 1`.
pub fn f21_direct(a: Q, b: Q, c: Q, t: Q) -> BigInt {
    assert!(t.0 < t.1);
    series(a, b, c, Q(-t.0, t.1))
}

pub fn f21(a: i64, b: Q, c: Q, t: Q) -> f64 {
    to_f64(&f21_negative(a, b, c, t))
}

/// δ = 2/α as a rational for rational α.
pub fn delta(alpha: Q) -> Q {
    Q(2 * alpha.1, alpha.0)
}

/// kᵢ(T, α) exactly as printed: k₀ = δT/(1−δ)·₂F₁(1, 1−δ; 2−δ; −T) and
/// kᵢ = δTⁱ/(i−δ)·₂F₁(i+1, i−δ; i+1−δ; −T).
pub fn coeff(i: i64, t: Q, alpha: Q) -> f64 {
    let d = delta(alpha);
    let one = Q::int(1);
    let (parts, denom, power) = if i == 0 {
        (pfaff_parts(1, one.sub(d), Q::int(2).sub(d), t), one.sub(d), 1)
    } else {
        (
            pfaff_parts(i + 1, Q::int(i).sub(d), Q::int(i + 1).sub(d), t),
            Q::int(i).sub(d),
            i,
        )
    };
    let (s, num, den) = parts;
    let num = num * BigInt::from(d.0 * denom.1) * BigInt::from(t.0).pow(power as u32);
    let den = den * BigInt::from(d.1 * denom.0) * BigInt::from(t.1).pow(power as u32);
    to_f64(&(s * num / den))
}

/// Composite Simpson on `[lo, hi]` with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for k in 1..n {
        let x = lo + k as f64 * h;
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

/// kₙ = δ T^δ B(w; n−δ, 1+δ) for n ≥ 1. With t = w·s^k the incomplete beta
/// becomes k·w^p ∫₀¹ s^{kp−1} (1 − w s^k)^δ ds, smooth enough for Simpson
/// once kp ≥ 5.
pub fn coeff_by_beta(n: usize, threshold: f64, alpha: f64) -> f64 {
    assert!(n >= 1);
    let d = 2.0 / alpha;
    let w = threshold / (1.0 + threshold);
    let p = n as f64 - d;
    let k = (5.0 / p).ceil().max(1.0);
    let integral = simpson(
        |s| s.powf(k * p - 1.0) * (1.0 - w * s.powf(k)).powf(d),
        0.0,
        1.0,
        20_000,
    );
    d * threshold.powf(d) * k * w.powf(p) * integral
}
