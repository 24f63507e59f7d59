//! Special-function kernel: integer gamma, modified multivariate gamma,
//! digamma at integer arguments, the exponential integral E1, and the upper
//! incomplete gamma function at non-positive integer orders.
//!
//! E1 anchors everything: the incomplete gammas come from it by downward
//! recurrence, and the exact ergodic-rate formula is built on those. E1 is
//! evaluated by power series for `x <= 1` and by continued fraction above,
//! targeting relative error 1e-12.

use crate::error::{Error, Result};

/// `psi(1)`, the negated Euler-Mascheroni constant.
pub const PSI_ONE: f64 = -0.577_215_664_901_532_86;

/// Largest argument accepted by [`gamma_int`].
pub const GAMMA_INT_MAX: u32 = 35;

/// `Gamma(k) = (k-1)!` for integer `1 <= k <= 35`.
pub fn gamma_int(k: u32) -> Result<f64> {
    if !(1..=GAMMA_INT_MAX).contains(&k) {
        return Err(Error::OutOfRange(format!(
            "gamma_int argument {k} outside 1..={GAMMA_INT_MAX}"
        )));
    }
    let mut acc = 1.0;
    for q in 2..k {
        acc *= q as f64;
    }
    Ok(acc)
}

/// Modified multivariate gamma: `prod_{p=1}^{t} Gamma(k - p + 1)`.
/// Requires `k >= t` so every factor has a positive argument.
pub fn multivariate_gamma(t: u32, k: u32) -> Result<f64> {
    if t < 1 {
        return Err(Error::OutOfRange(format!("t must be >= 1, got {t}")));
    }
    if k < t {
        return Err(Error::OutOfRange(format!(
            "multivariate gamma needs k >= t, got t={t}, k={k}"
        )));
    }
    let mut acc = 1.0;
    for p in 1..=t {
        acc *= gamma_int(k - p + 1)?;
    }
    Ok(acc)
}

/// `ln Gamma(k)` for integer `k >= 1`, by direct log accumulation.
pub(crate) fn ln_gamma_int(k: u32) -> f64 {
    let mut acc = 0.0;
    for q in 2..k {
        acc += (q as f64).ln();
    }
    acc
}

/// Harmonic number `H_r = sum_{q=1}^r 1/q`, accumulated as an exact
/// rational while the u128 arithmetic holds (comfortably past r = 64),
/// with a plain summation fallback beyond that.
pub(crate) fn harmonic(r: u32) -> f64 {
    let mut num: u128 = 0;
    let mut den: u128 = 1;
    for q in 1..=(r as u128) {
        let step = num
            .checked_mul(q)
            .and_then(|nq| nq.checked_add(den))
            .zip(den.checked_mul(q));
        let (new_num, new_den) = match step {
            Some(pair) => pair,
            None => {
                // rational overflow: finish in floating point
                let mut acc = num as f64 / den as f64;
                for t in q..=(r as u128) {
                    acc += 1.0 / t as f64;
                }
                return acc;
            }
        };
        let g = gcd(new_num, new_den);
        num = new_num / g;
        den = new_den / g;
    }
    num as f64 / den as f64
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.max(1)
}

/// Digamma at a positive integer: `psi(r) = psi(1) + H_{r-1}`.
pub fn digamma_int(r: u32) -> Result<f64> {
    if r < 1 {
        return Err(Error::OutOfRange(format!(
            "digamma_int needs r >= 1, got {r}"
        )));
    }
    Ok(PSI_ONE + harmonic(r - 1))
}

/// Exponential integral `E1(x) = integral_x^inf exp(-t)/t dt`, `x > 0`.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::OutOfRange(format!("E1 needs x > 0, got {x}")));
    }
    if x <= 1.0 {
        Ok(e1_series(x))
    } else {
        Ok((-x).exp() * e1_scaled_cf(x))
    }
}

/// Overflow-safe scaled form `exp(x) * E1(x)`.
pub fn exp_integral_e1_scaled(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::OutOfRange(format!("E1 needs x > 0, got {x}")));
    }
    if x <= 1.0 {
        Ok(x.exp() * e1_series(x))
    } else {
        Ok(e1_scaled_cf(x))
    }
}

/// Power series `E1(x) = psi(1) - ln x + sum (-1)^{k+1} x^k / (k k!)`
/// (`psi(1)` is the negated Euler-Mascheroni constant), accurate for x <= 1.
fn e1_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        term *= x / k as f64;
        let contrib = if k % 2 == 1 {
            term / k as f64
        } else {
            -term / k as f64
        };
        sum += contrib;
        if contrib.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    PSI_ONE - x.ln() + sum
}

/// Modified Lentz continued fraction for `exp(x) * Gamma(0, x)`, x > 1.
fn e1_scaled_cf(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..400 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = a * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

fn check_nonpos_order(order: i32, x: f64) -> Result<()> {
    if order > 0 {
        return Err(Error::OutOfRange(format!(
            "incomplete gamma order must be <= 0, got {order}"
        )));
    }
    if !(x > 0.0) {
        return Err(Error::OutOfRange(format!(
            "incomplete gamma needs x > 0, got {x}"
        )));
    }
    Ok(())
}

/// Below this `x`, negative orders return the leading term `x^a / |a|`
/// directly; the downward recurrence would difference enormous quantities.
const TINY_X_CUTOFF: f64 = 1e-8;

/// Upper incomplete gamma `Gamma(order, x)` at integer `order <= 0`, `x > 0`.
///
/// `Gamma(0, x) = E1(x)`; negative orders follow the downward recurrence
/// `Gamma(a, x) = (Gamma(a+1, x) - x^a exp(-x)) / a`.
pub fn upper_gamma_nonpos(order: i32, x: f64) -> Result<f64> {
    check_nonpos_order(order, x)?;
    if order < 0 && x < TINY_X_CUTOFF {
        return Ok(x.powi(order) / (-order) as f64);
    }
    Ok(upper_gamma_nonpos_scaled(order, x)? * (-x).exp())
}

/// Overflow-safe scaled form `exp(x) * Gamma(order, x)`. The recurrence runs
/// directly on the scaled quantity, so `exp(x)` is never formed.
pub fn upper_gamma_nonpos_scaled(order: i32, x: f64) -> Result<f64> {
    check_nonpos_order(order, x)?;
    if order < 0 && x < TINY_X_CUTOFF {
        return Ok(x.powi(order) / (-order) as f64);
    }
    let mut value = exp_integral_e1_scaled(x)?;
    for a in 1..=(-order) {
        let a = -(a as f64);
        // scaled recurrence: S(a) = (S(a+1) - x^a) / a
        value = (value - x.powf(a)) / a;
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_rel(got: f64, want: f64, rel: f64, label: &str) {
        let denom = want.abs().max(f64::MIN_POSITIVE);
        assert!(
            ((got - want) / denom).abs() < rel,
            "{label}: got {got:e}, want {want:e}"
        );
    }

    #[test]
    fn gamma_int_values() {
        assert_eq!(gamma_int(1).unwrap(), 1.0);
        assert_eq!(gamma_int(5).unwrap(), 24.0);
        assert_eq!(gamma_int(15).unwrap(), 87_178_291_200.0);
        assert!(gamma_int(0).is_err());
        assert!(gamma_int(36).is_err());
    }

    #[test]
    fn multivariate_gamma_values() {
        assert_eq!(multivariate_gamma(1, 3).unwrap(), 2.0);
        assert_eq!(multivariate_gamma(2, 2).unwrap(), 1.0);
        assert_eq!(multivariate_gamma(2, 3).unwrap(), 2.0);
        assert!(multivariate_gamma(3, 2).is_err());
        for t in 1..=8 {
            for k in t..=12 {
                assert!(multivariate_gamma(t, k).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn digamma_values() {
        assert_rel(
            digamma_int(1).unwrap(),
            -0.577_215_664_901_532_9,
            1e-15,
            "psi(1)",
        );
        assert_rel(
            digamma_int(2).unwrap(),
            0.422_784_335_098_467_1,
            1e-14,
            "psi(2)",
        );
        assert_rel(
            digamma_int(4).unwrap(),
            1.256_117_668_431_800_5,
            1e-14,
            "psi(4)",
        );
    }

    #[test]
    fn digamma_recurrence_steps() {
        // harmonic differences are exact at the rational layer; after the
        // final rounding to f64 the digamma difference may be off by one ulp
        for r in 1..80u32 {
            let diff = digamma_int(r + 1).unwrap() - digamma_int(r).unwrap();
            let expect = 1.0 / r as f64;
            assert!(
                (diff - expect).abs() <= 2.0 * f64::EPSILON * (1.0 + digamma_int(r).unwrap().abs()),
                "r={r}: diff {diff:e} vs {expect:e}"
            );
        }
    }

    #[test]
    fn harmonic_rational_is_exact() {
        // H_4 = 25/12, H_6 = 49/20
        assert_eq!(harmonic(4), 25.0 / 12.0);
        assert_eq!(harmonic(6), 49.0 / 20.0);
        assert_eq!(harmonic(0), 0.0);
    }

    #[test]
    fn e1_frozen_values() {
        // quadrature oracle values
        assert_rel(
            exp_integral_e1(1.0).unwrap(),
            0.219_383_934_395_520_27,
            1e-12,
            "E1(1)",
        );
        assert_rel(
            exp_integral_e1(0.1).unwrap(),
            1.822_923_958_419_390_6,
            1e-12,
            "E1(0.1)",
        );
        assert_rel(
            exp_integral_e1(0.01).unwrap(),
            4.037_929_576_538_113_8,
            1e-12,
            "E1(0.01)",
        );
        assert_rel(
            exp_integral_e1(3.0).unwrap(),
            0.013_048_381_094_197_037,
            1e-12,
            "E1(3)",
        );
        let e1_10 = exp_integral_e1(10.0).unwrap();
        assert!(
            (e1_10 - 4.156_968_929_685_324e-6).abs() < 1e-11,
            "E1(10) = {e1_10:e}"
        );
    }

    #[test]
    fn e1_scaled_frozen_values() {
        assert_rel(
            exp_integral_e1_scaled(1.0).unwrap(),
            0.596_347_362_323_194_07,
            1e-12,
            "e*E1(1)",
        );
        assert_rel(
            exp_integral_e1_scaled(0.1).unwrap(),
            2.014_642_544_708_451_7,
            1e-12,
            "e^0.1 E1(0.1)",
        );
        assert_rel(
            exp_integral_e1_scaled(30.0).unwrap(),
            0.032_289_738_758_980_125,
            1e-12,
            "e^30 E1(30)",
        );
        assert_rel(
            exp_integral_e1_scaled(300.0).unwrap(),
            0.003_322_295_565_270_707_1,
            1e-12,
            "e^300 E1(300)",
        );
        // asymptotic oracle: e^x E1(x) ~ 1/x - 1/x^2 + 2/x^3 for large x
        assert_rel(
            exp_integral_e1_scaled(1000.0).unwrap(),
            9.990_019_940_238_807e-4,
            1e-10,
            "e^1000 E1(1000)",
        );
    }

    #[test]
    fn e1_rejects_nonpositive() {
        assert!(exp_integral_e1(0.0).is_err());
        assert!(exp_integral_e1(-1.0).is_err());
        assert!(exp_integral_e1_scaled(-0.5).is_err());
    }

    #[test]
    fn series_cf_agree_at_switchover() {
        // both branches should agree near x = 1
        let s = e1_series(1.0);
        let cf = (-1.0_f64).exp() * e1_scaled_cf(1.0 + 1e-12);
        assert_rel(cf, s, 1e-10, "switchover");
    }

    #[test]
    fn upper_gamma_frozen_values() {
        assert_rel(
            upper_gamma_nonpos(0, 1.0).unwrap(),
            0.219_383_934_395_520_27,
            1e-12,
            "Gamma(0,1)",
        );
        // quadrature oracle of integral_1^inf t^-2 e^-t dt
        assert_rel(
            upper_gamma_nonpos(-1, 1.0).unwrap(),
            0.148_495_506_775_922_05,
            1e-12,
            "Gamma(-1,1)",
        );
        // quadrature oracle of integral_2^inf t^-3 e^-t dt
        assert_rel(
            upper_gamma_nonpos(-2, 2.0).unwrap(),
            0.007_533_344_949_453_973_3,
            1e-11,
            "Gamma(-2,2)",
        );
    }

    #[test]
    fn upper_gamma_scaled_frozen_values() {
        assert_rel(
            upper_gamma_nonpos_scaled(0, 1.0).unwrap(),
            0.596_347_362_323_194_07,
            1e-12,
            "e Gamma(0,1)",
        );
        assert_rel(
            upper_gamma_nonpos_scaled(0, 1000.0).unwrap(),
            9.990_019_940_238_807e-4,
            1e-10,
            "e^1000 Gamma(0,1000)",
        );
        // quadrature oracle: e^0.5 * Gamma(-1, 0.5)
        assert_rel(
            upper_gamma_nonpos_scaled(-1, 0.5).unwrap(),
            1.077_089_367_516_269_5,
            1e-12,
            "e^0.5 Gamma(-1,0.5)",
        );
    }

    #[test]
    fn upper_gamma_rejects_bad_args() {
        assert!(upper_gamma_nonpos(1, 1.0).is_err());
        assert!(upper_gamma_nonpos(0, 0.0).is_err());
        assert!(upper_gamma_nonpos(-2, -1.0).is_err());
    }

    #[test]
    fn recurrence_consistency() {
        // a * Gamma(a,x) + x^a exp(-x) = Gamma(a+1,x), relative 1e-10
        for &x in &[1e-4, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0] {
            for order in -10..0i32 {
                let lhs = order as f64 * upper_gamma_nonpos(order, x).unwrap()
                    + x.powi(order) * (-x).exp();
                let rhs = upper_gamma_nonpos(order + 1, x).unwrap();
                assert_rel(lhs, rhs, 1e-10, &format!("recurrence a={order} x={x}"));
            }
        }
    }

    #[test]
    fn scaled_matches_unscaled() {
        for &x in &[1e-4, 0.05, 0.7, 1.3, 8.0, 40.0, 200.0] {
            for order in -8..=0i32 {
                let scaled = upper_gamma_nonpos_scaled(order, x).unwrap();
                let unscaled = upper_gamma_nonpos(order, x).unwrap();
                assert_rel(
                    scaled * (-x).exp(),
                    unscaled,
                    1e-10,
                    &format!("a={order} x={x}"),
                );
            }
        }
    }

    #[test]
    fn tiny_x_leading_term() {
        let v = upper_gamma_nonpos(-3, 1e-9).unwrap();
        assert_rel(v, 1e27 / 3.0, 1e-7, "leading term at tiny x");
    }
}
