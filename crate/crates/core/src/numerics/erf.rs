use std::f64::consts::PI;

use crate::error::{ensure_finite, Result};

const SERIES_MAX: f64 = 3.0;

/// Error function. Odd, saturating at ±1.
pub fn erf(x: f64) -> Result<f64> {
    ensure_finite("x", x)?;
    Ok(erf_unchecked(x))
}

pub(crate) fn erf_unchecked(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax < SERIES_MAX {
        erf_series(ax)
    } else {
        1.0 - erfc_continued_fraction(ax)
    };
    v.copysign(x)
}

/// Complementary error function, accurate in the far tail.
pub fn erfc(x: f64) -> Result<f64> {
    ensure_finite("x", x)?;
    if x >= SERIES_MAX {
        Ok(erfc_continued_fraction(x))
    } else {
        Ok(1.0 - erf_unchecked(x))
    }
}

// erf(x) = 2x/sqrt(pi) exp(-x^2) sum (2x^2)^n / (1*3*...*(2n+1)); all terms positive.
fn erf_series(x: f64) -> f64 {
    let two_x2 = 2.0 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= two_x2 / (2.0 * n + 1.0);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    2.0 * x / PI.sqrt() * (-x * x).exp() * sum
}

// erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))),
// evaluated with the modified Lentz method.
fn erfc_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for n in 1..500 {
        let a = n as f64 * 0.5;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (PI.sqrt() * f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erf_basic_values() {
        assert_eq!(erf(0.0).unwrap(), 0.0);
        assert!((erf(6.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((erf(1.0).unwrap() - 0.8427007929497149).abs() < 1e-15);
        assert_eq!(erf(-0.7).unwrap(), -erf(0.7).unwrap());
    }

    #[test]
    fn erf_continuous_at_switch() {
        let lo = erf(SERIES_MAX - 1e-12).unwrap();
        let hi = erf(SERIES_MAX + 1e-12).unwrap();
        assert!((lo - hi).abs() < 1e-14);
    }

    #[test]
    fn erfc_tail() {
        // erfc(5) = 1.5374597944280349e-12
        let v = erfc(5.0).unwrap();
        assert!((v / 1.537_459_794_428_035e-12 - 1.0).abs() < 1e-12);
    }
}
