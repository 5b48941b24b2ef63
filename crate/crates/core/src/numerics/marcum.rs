//! First-order Marcum Q function.
//!
//! `Q1(a, b)` is the survival function of a noncentral chi-square variable
//! with two degrees of freedom and noncentrality `a^2`, evaluated at `b^2`.
//! Writing that law as a Poisson(`a^2/2`) mixture of central chi-square laws
//! gives a sum of nonnegative terms:
//!
//! `Q1(a, b) = sum_j Pois(j; a^2/2) * P[Pois(b^2/2) <= j]`
//!
//! The complement is summed the same way with the upper Poisson tail, so
//! `1 - Q1` keeps full relative precision when it is tiny.

use crate::error::{Error, Result};

fn check(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite()) || a < 0.0 || b < 0.0 {
        return Err(Error::Domain(format!(
            "Marcum Q needs finite nonnegative arguments, got a = {a}, b = {b}"
        )));
    }
    Ok(())
}

/// `Q1(a, b)`, in `[0, 1]`.
pub fn marcum_q1(a: f64, b: f64) -> Result<f64> {
    check(a, b)?;
    if b == 0.0 {
        return Ok(1.0);
    }
    let y = 0.5 * b * b;
    let v = poisson_mixture(a, |_, cdf, _| cdf, y);
    Ok(v.clamp(0.0, 1.0))
}

/// `1 - Q1(a, b)`: the probability that a Ricean envelope with these
/// normalized parameters stays below `b`.
pub fn marcum_q1_complement(a: f64, b: f64) -> Result<f64> {
    check(a, b)?;
    if b == 0.0 {
        return Ok(0.0);
    }
    let y = 0.5 * b * b;
    let v = poisson_mixture(a, |j, cdf, pmf_next| {
        if y < j as f64 + 1.0 {
            upper_tail_series(j, y, pmf_next)
        } else {
            1.0 - cdf
        }
    }, y);
    Ok(v.clamp(0.0, 1.0))
}

/// Sums `sum_j Pois(j; a^2/2) g(j, cdf_j(y), pmf_{j+1}(y))`.
fn poisson_mixture(a: f64, mut g: impl FnMut(usize, f64, f64) -> f64, y: f64) -> f64 {
    let lambda = 0.5 * a * a;
    let ln_lambda = lambda.ln();
    let ln_y = y.ln();
    let max_j = (lambda + 12.0 * lambda.sqrt() + 60.0) as usize;

    let mut ln_fact = 0.0; // ln j!
    let mut pmf_y = (-y).exp(); // Pois(j; y)
    let mut ln_pmf_y = -y;
    let mut cdf_y = pmf_y;
    let mut sum = 0.0;

    for j in 0..=max_j {
        if j > 0 {
            ln_fact += (j as f64).ln();
            ln_pmf_y += ln_y - (j as f64).ln();
            pmf_y = ln_pmf_y.exp();
            cdf_y += pmf_y;
        }
        let weight = if lambda == 0.0 {
            if j == 0 { 1.0 } else { 0.0 }
        } else {
            (-lambda + j as f64 * ln_lambda - ln_fact).exp()
        };
        let ln_pmf_next = ln_pmf_y + ln_y - ((j + 1) as f64).ln();
        sum += weight * g(j, cdf_y.min(1.0), ln_pmf_next.exp());
        if j as f64 > lambda && weight < 1e-20 {
            break;
        }
    }
    sum
}

// P[Pois(y) > j] = pmf_{j+1} (1 + y/(j+2) + y^2/((j+2)(j+3)) + ...), valid for y < j + 2.
fn upper_tail_series(j: usize, y: f64, pmf_next: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut i = j + 2;
    while term > 1e-17 * sum {
        term *= y / i as f64;
        sum += term;
        i += 1;
    }
    pmf_next * sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_threshold_is_certain() {
        for &a in &[0.0, 0.5, 2.7, 9.0] {
            assert_eq!(marcum_q1(a, 0.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn rayleigh_tail_when_a_is_zero() {
        for &b in &[0.1, 1.0, 2.5, 6.0] {
            let q = marcum_q1(0.0, b).unwrap();
            assert!((q - (-0.5 * b * b).exp()).abs() < 1e-14, "b = {b}");
        }
    }

    #[test]
    fn complement_sums_to_one() {
        for &(a, b) in &[(0.3, 0.2), (2.75, 1.4), (1.0, 1.0), (5.0, 7.0), (0.0, 3.0)] {
            let q = marcum_q1(a, b).unwrap();
            let c = marcum_q1_complement(a, b).unwrap();
            assert!((q + c - 1.0).abs() < 1e-13, "({a}, {b})");
        }
    }

    #[test]
    fn complement_keeps_relative_precision_near_zero() {
        // Rayleigh: 1 - exp(-b^2/2) ~ b^2/2 for tiny b.
        let b: f64 = 1e-5;
        let c = marcum_q1_complement(0.0, b).unwrap();
        assert!((c / (-(-0.5 * b * b).exp_m1()) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn negative_input_rejected() {
        assert!(marcum_q1(-1.0, 1.0).is_err());
        assert!(marcum_q1(1.0, -1.0).is_err());
    }
}
