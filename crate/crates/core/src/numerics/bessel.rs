//! Bessel functions of order zero.
//!
//! `J0` uses the power series near the origin, Miller's backward recurrence
//! (normalized with `J0 + 2 sum J_2k = 1`) for moderate arguments and the
//! Hankel asymptotic expansion beyond that. `I0` uses the positive-term power
//! series, switching to the asymptotic expansion for large arguments.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{ensure_finite, Error, Result};

const J0_SERIES_MAX: f64 = 8.0;
const J0_ASYMPTOTIC_MIN: f64 = 20.0;
const I0_ASYMPTOTIC_MIN: f64 = 30.0;
const I0_OVERFLOW: f64 = 700.0;

/// Zeroth-order Bessel function of the first kind.
pub fn bessel_j0(x: f64) -> Result<f64> {
    ensure_finite("x", x)?;
    Ok(j0_unchecked(x))
}

/// `J0` without the finiteness check, for hot loops whose arguments are
/// finite by construction.
pub fn j0_unchecked(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= J0_SERIES_MAX {
        j0_series(ax)
    } else if ax < J0_ASYMPTOTIC_MIN {
        j0_miller(ax)
    } else {
        j0_asymptotic(ax)
    }
}

fn j0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= -q / (k * k);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-3) {
            break;
        }
        k += 1.0;
    }
    sum
}

fn j0_miller(x: f64) -> f64 {
    let start = 2 * ((x + 20.0 + (40.0 * x).sqrt()) as usize / 2 + 1);
    let mut next = 0.0; // J_{n+1}
    let mut cur = 1e-30; // J_n
    let mut norm = 0.0;
    let mut n = start;
    while n > 0 {
        let prev = (2.0 * n as f64 / x) * cur - next;
        next = cur;
        cur = prev;
        n -= 1;
        if n % 2 == 0 && n > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
        }
    }
    cur / (norm + cur)
}

fn j0_asymptotic(x: f64) -> f64 {
    // P and Q of the Hankel expansion; a_k = prod_{i<=k} (2i-1)^2 / (k! 8^k x^k)
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut k = 1;
    let mut prev_abs = f64::INFINITY;
    loop {
        let m = (2 * k - 1) as f64;
        term *= m * m / (k as f64 * 8.0 * x);
        if term >= prev_abs || term < 1e-17 {
            break;
        }
        prev_abs = term;
        match k % 4 {
            1 => q -= term,
            2 => p -= term,
            3 => q += term,
            _ => p += term,
        }
        k += 1;
    }
    let (s, c) = x.sin_cos();
    // cos(x - pi/4) and sin(x - pi/4) without reducing x - pi/4 directly.
    let cos_chi = (c + s) * FRAC_1_SQRT_2;
    let sin_chi = (s - c) * FRAC_1_SQRT_2;
    (2.0 / (PI * x)).sqrt() * (p * cos_chi - q * sin_chi)
}

/// Zeroth-order modified Bessel function of the first kind.
pub fn bessel_i0(x: f64) -> Result<f64> {
    ensure_finite("x", x)?;
    let ax = x.abs();
    if ax > I0_OVERFLOW {
        return Err(Error::Range(format!("I0 overflows for |x| = {ax} > {I0_OVERFLOW}")));
    }
    if ax < I0_ASYMPTOTIC_MIN {
        Ok(i0_series(ax))
    } else {
        Ok(ax.exp() * i0e_asymptotic(ax))
    }
}

/// Exponentially scaled `I0`: `exp(-|x|) I0(x)`. Defined for every finite `x`.
pub fn bessel_i0e(x: f64) -> Result<f64> {
    ensure_finite("x", x)?;
    Ok(i0e_unchecked(x))
}

pub(crate) fn i0e_unchecked(x: f64) -> f64 {
    let ax = x.abs();
    if ax < I0_ASYMPTOTIC_MIN {
        (-ax).exp() * i0_series(ax)
    } else {
        i0e_asymptotic(ax)
    }
}

fn i0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
        k += 1.0;
    }
    sum
}

fn i0e_asymptotic(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let mut k = 1;
    loop {
        let m = (2 * k - 1) as f64;
        let next = term * m * m / (k as f64 * 8.0 * x);
        if next >= term || next < 1e-17 * sum {
            break;
        }
        term = next;
        sum += term;
        k += 1;
    }
    sum / (2.0 * PI * x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j0_at_origin_and_symmetry() {
        assert_eq!(bessel_j0(0.0).unwrap(), 1.0);
        for &x in &[0.3, 5.0, 9.7, 17.2, 33.0, 812.5] {
            assert_eq!(bessel_j0(x).unwrap(), bessel_j0(-x).unwrap());
        }
    }

    #[test]
    fn j0_first_root() {
        assert!(bessel_j0(2.404825557695773).unwrap().abs() < 1e-10);
    }

    #[test]
    fn j0_continuous_across_branch_switches() {
        let x = J0_SERIES_MAX;
        assert!((j0_series(x) - j0_miller(x)).abs() < 1e-13);
        let x = J0_ASYMPTOTIC_MIN;
        assert!((j0_miller(x) - j0_asymptotic(x)).abs() < 1e-13);
    }

    #[test]
    fn j0_rejects_nan() {
        assert!(matches!(bessel_j0(f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn i0_known_values() {
        assert_eq!(bessel_i0(0.0).unwrap(), 1.0);
        let v = bessel_i0(1.0).unwrap();
        assert!((v - 1.2660658777520082).abs() < 1e-15);
        assert_eq!(bessel_i0(-3.3).unwrap(), bessel_i0(3.3).unwrap());
    }

    #[test]
    fn i0_overflow_guard() {
        assert!(matches!(bessel_i0(701.0), Err(Error::Range(_))));
        assert!(bessel_i0(699.0).unwrap().is_finite());
        assert!(bessel_i0e(5000.0).unwrap() > 0.0);
    }

    #[test]
    fn i0e_matches_scaled_i0_across_switch() {
        for &x in &[29.0, 30.0, 31.0, 100.0] {
            let a = bessel_i0e(x).unwrap();
            let b = bessel_i0(x).unwrap() * (-x).exp();
            assert!(((a - b) / a).abs() < 1e-12, "{x}");
        }
    }
}
