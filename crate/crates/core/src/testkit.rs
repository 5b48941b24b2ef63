//! Slow, independent oracles for validating the main code paths.
//!
//! Nothing here calls the routines it is meant to check: geometry is done in
//! explicit Cartesian coordinates, special functions by plain series or
//! trapezoid sums, integrals by Monte Carlo.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{ElementOffsets, PathLengths, RayAngles, Region, ScenarioConfig};
use crate::vmf::{vmf_sample, VmfParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tolerance {
    Absolute,
    Relative,
}

/// Outcome of comparing a main-path value with an oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub quantity: String,
    pub oracle: f64,
    pub main: f64,
    pub tolerance: f64,
    pub kind: Tolerance,
    pub pass: bool,
    /// Sample size or grid description.
    pub meta: String,
}

impl OracleReport {
    pub fn check(quantity: &str, oracle: f64, main: f64, tolerance: f64, kind: Tolerance, meta: &str) -> Self {
        assert!(tolerance > 0.0, "tolerance must be positive");
        let err = match kind {
            Tolerance::Absolute => (main - oracle).abs(),
            Tolerance::Relative => (main - oracle).abs() / oracle.abs(),
        };
        Self {
            quantity: quantity.to_string(),
            oracle,
            main,
            tolerance,
            kind,
            pass: err <= tolerance,
            meta: meta.to_string(),
        }
    }

    pub fn csv_header() -> &'static str {
        "quantity,oracle,main,tolerance,kind,pass,meta"
    }

    pub fn csv_row(&self) -> String {
        let kind = match self.kind {
            Tolerance::Absolute => "abs",
            Tolerance::Relative => "rel",
        };
        format!(
            "{},{:.16e},{:.16e},{:.3e},{kind},{},{}",
            self.quantity, self.oracle, self.main, self.tolerance, self.pass, self.meta
        )
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: main {:.6e} oracle {:.6e} tol {:.1e} [{}]",
            if self.pass { "PASS" } else { "FAIL" },
            self.quantity,
            self.main,
            self.oracle,
            self.tolerance,
            self.meta
        )
    }
}

type V3 = [f64; 3];

fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: V3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn direction(alpha: f64, beta: f64) -> V3 {
    [beta.cos() * alpha.cos(), beta.cos() * alpha.sin(), beta.sin()]
}

fn along(origin: V3, dir: V3, len: f64) -> V3 {
    [origin[0] + len * dir[0], origin[1] + len * dir[1], origin[2] + len * dir[2]]
}

/// Horizontal distance from the Rx to the ellipse along azimuth `alpha`,
/// from the positive root of the ray/ellipse quadratic.
fn ellipse_range(alpha: f64, cfg: &ScenarioConfig) -> f64 {
    let (a, f) = (cfg.a, cfg.d / 2.0);
    let b2 = a * a - f * f;
    let (c, s) = (alpha.cos(), alpha.sin());
    // ellipse centered at (f, 0); Rx focus at (2f, 0), i.e. x' = f + rho c
    let qa = c * c / (a * a) + s * s / b2;
    let qb = 2.0 * f * c / (a * a);
    let qc = f * f / (a * a) - 1.0;
    (-qb + (qb * qb - 4.0 * qa * qc).sqrt()) / (2.0 * qa)
}

/// Exact Euclidean path lengths for Tx element `p` and Rx element `q`.
///
/// Only the `eps_*` fields are filled. The scatterer is placed from the
/// free angle pair of the region: the departure pair for the Tx sphere,
/// the arrival pair for the Rx sphere and the cylinder, and both pairs for
/// double-bounce rays.
pub fn cartesian_geometry_oracle(
    ray: &RayAngles,
    region: Region,
    p: usize,
    q: usize,
    cfg: &ScenarioConfig,
) -> crate::Result<PathLengths> {
    let off = ElementOffsets::for_elements(p, q, cfg)?;
    let tx_center = [0.0, 0.0, 0.0];
    let rx_center = [cfg.d, 0.0, 0.0];
    let tx = along(tx_center, direction(cfg.theta_t, cfg.phi_t), off.s_t);
    let rx = along(rx_center, direction(cfg.theta_r, cfg.phi_r), off.s_r);
    let flat = |b: f64| if cfg.mode_2d { 0.0 } else { b };
    let mut pl = PathLengths { eps_pq: norm(sub(rx, tx)), ..PathLengths::default() };
    match region {
        Region::Sb1 => {
            let s = along(tx_center, direction(ray.alpha_t, flat(ray.beta_t)), cfg.r_t);
            pl.eps_pn = norm(sub(s, tx));
            pl.eps_nq = norm(sub(rx, s));
        }
        Region::Sb2 => {
            let s = along(rx_center, direction(ray.alpha_r, flat(ray.beta_r)), cfg.r_r);
            pl.eps_pn = norm(sub(s, tx));
            pl.eps_nq = norm(sub(rx, s));
        }
        Region::Sb3 => {
            let rho = ellipse_range(ray.alpha_r, cfg);
            let s = [
                cfg.d + rho * ray.alpha_r.cos(),
                rho * ray.alpha_r.sin(),
                rho * flat(ray.beta_r).tan(),
            ];
            pl.eps_pn = norm(sub(s, tx));
            pl.eps_nq = norm(sub(rx, s));
        }
        Region::Db => {
            let s1 = along(tx_center, direction(ray.alpha_t, flat(ray.beta_t)), cfg.r_t);
            let s2 = along(rx_center, direction(ray.alpha_r, flat(ray.beta_r)), cfg.r_r);
            pl.eps_pn = norm(sub(s1, tx));
            pl.eps_n1n2 = norm(sub(s2, s1));
            pl.eps_nq = norm(sub(rx, s2));
        }
    }
    Ok(pl)
}

/// Monte Carlo mean of `g` under the VMF law, with its standard error.
pub fn mc_integral_oracle<F: FnMut(f64, f64) -> Complex64>(
    mut g: F,
    p: &VmfParams,
    n_samples: usize,
    seed: u64,
) -> (Complex64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut sum_sq = 0.0;
    for _ in 0..n_samples {
        let (a, b) = vmf_sample(p, &mut rng);
        let v = g(a, b);
        sum += v;
        sum_sq += v.norm_sqr();
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = ((sum_sq / n - mean.norm_sqr()) * n / (n - 1.0)).max(0.0);
    (mean, (var / n).sqrt())
}

/// Up-crossings of `level` and time below it, counted sample by sample
/// (each sample holds its value for one step).
pub fn crossing_counter_oracle(envelope: &[f64], step: f64, level: f64) -> (usize, f64) {
    let mut count = 0;
    let mut below = 0usize;
    for (i, &e) in envelope.iter().enumerate() {
        if e < level {
            below += 1;
        } else if i > 0 && envelope[i - 1] < level {
            count += 1;
        }
    }
    (count, below as f64 * step)
}

/// `J0(x) = (1/pi) int_0^pi cos(x sin t) dt` by the trapezoid rule, which
/// converges geometrically for this periodic integrand.
pub fn j0_trapezoid(x: f64) -> f64 {
    let n = 64 + 2 * x.abs().ceil() as usize;
    let h = PI / n as f64;
    let f = |t: f64| (x * t.sin()).cos();
    let inner: f64 = (1..n).map(|i| f(i as f64 * h)).sum();
    (inner + 0.5 * (f(0.0) + f(PI))) * h / PI
}

/// `I0(x) = (1/pi) int_0^pi exp(x cos t) dt` by the trapezoid rule.
pub fn i0_trapezoid(x: f64) -> f64 {
    let n = 64 + 2 * x.abs().ceil() as usize;
    let h = PI / n as f64;
    let f = |t: f64| (x * t.cos()).exp();
    let inner: f64 = (1..n).map(|i| f(i as f64 * h)).sum();
    (inner + 0.5 * (f(0.0) + f(PI))) * h / PI
}

/// Maclaurin series of erf; accurate for `|x| <= 3`.
pub fn erf_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let x2 = x * x;
    let mut n = 0.0;
    while term.abs() > 1e-17 * sum.abs() {
        n += 1.0;
        term *= -x2 / n;
        sum += term / (2.0 * n + 1.0);
    }
    2.0 / PI.sqrt() * sum
}

/// Marcum Q1 as a Poisson mixture of central chi-square tails:
/// `Q1(a, b) = sum_n e^{-a^2/2} (a^2/2)^n / n! * Q(n + 1, b^2/2)`,
/// with `Q` the regularized upper incomplete gamma function.
pub fn marcum_q1_series(a: f64, b: f64) -> f64 {
    let lam = a * a / 2.0;
    let x = b * b / 2.0;
    // Q(n + 1, x) = e^{-x} sum_{j <= n} x^j / j!
    let mut tail_term = (-x).exp();
    let mut q = tail_term;
    let mut weight = (-lam).exp();
    let mut sum = weight * q;
    let mut n = 0.0;
    let mut mass = weight;
    while 1.0 - mass > 1e-16 || n < lam {
        n += 1.0;
        weight *= lam / n;
        tail_term *= x / n;
        q += tail_term;
        sum += weight * q.min(1.0);
        mass += weight;
        if n > 10_000.0 {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn special_function_spot_values() {
        assert!((j0_trapezoid(2.404825557695773)).abs() < 1e-14);
        assert!((i0_trapezoid(1.0) - 1.2660658777520084).abs() < 1e-14);
        assert!((erf_series(1.0) - 0.8427007929497149).abs() < 1e-15);
        assert!((marcum_q1_series(0.0, 1.5) - (-1.125f64).exp()).abs() < 1e-15);
        assert_eq!(marcum_q1_series(2.0, 0.0), 1.0);
    }

    #[test]
    fn collinear_double_bounce() {
        let cfg = ScenarioConfig { delta_t: 0.0, delta_r: 0.0, ..ScenarioConfig::low_vtd() };
        let ray = RayAngles { alpha_t: 0.0, beta_t: 0.0, alpha_r: PI, beta_r: 0.0 };
        let pl = cartesian_geometry_oracle(&ray, Region::Db, 1, 1, &cfg).unwrap();
        assert!((pl.eps_n1n2 - (cfg.d - cfg.r_t - cfg.r_r)).abs() < 1e-9);
    }

    #[test]
    fn ellipse_scatterer_focal_sum() {
        let cfg = ScenarioConfig::low_vtd();
        for i in 0..24 {
            let alpha = -PI + i as f64 * PI / 12.0;
            let rho = ellipse_range(alpha, &cfg);
            let s = [cfg.d + rho * alpha.cos(), rho * alpha.sin(), 0.0];
            assert!((norm(s) + rho - 2.0 * cfg.a).abs() < 1e-9);
        }
    }

    #[test]
    fn crossing_counter_ramp() {
        let ramp: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(crossing_counter_oracle(&ramp, 1.0, 41.5), (1, 42.0));
    }

    #[test]
    fn mc_constant_integrand() {
        let p = VmfParams::from_degrees(10.0, 5.0, 3.0);
        let (m, se) = mc_integral_oracle(|_, _| Complex64::new(1.0, 0.0), &p, 1000, 1);
        assert_eq!(m, Complex64::new(1.0, 0.0));
        assert_eq!(se, 0.0);
    }

    #[test]
    fn report_pass_flag() {
        assert!(OracleReport::check("x", 1.0, 1.05, 0.1, Tolerance::Relative, "").pass);
        assert!(!OracleReport::check("x", 1.0, 1.2, 0.1, Tolerance::Absolute, "").pass);
    }
}
