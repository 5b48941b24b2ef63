//! Von Mises–Fisher scatterer distribution over azimuth and elevation.
//!
//! The density is taken with respect to `d(alpha) d(beta)`, so it carries the
//! `cos(beta)` area factor of the sphere and elevations are restricted to
//! `[-pi/2, pi/2]`. Marginal CDFs are tabulated once per parameter set on a
//! 2048-cell grid and interpolated with monotone cubic Hermite splines.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;
use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::wrap_angle;
use crate::numerics::{gauss_legendre_nodes, i0e_unchecked};

const TABLE_CELLS: usize = 2048;
const ICDF_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VmfParams {
    /// Mean azimuth.
    pub alpha0: f64,
    /// Mean elevation.
    pub beta0: f64,
    /// Concentration.
    pub k: f64,
}

impl VmfParams {
    pub fn new(alpha0: f64, beta0: f64, k: f64) -> Result<Self> {
        let p = Self { alpha0, beta0, k };
        p.validate()?;
        Ok(p)
    }

    pub fn from_degrees(alpha0: f64, beta0: f64, k: f64) -> Self {
        Self { alpha0: alpha0.to_radians(), beta0: beta0.to_radians(), k }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k.is_finite() && self.k >= 0.0) {
            return Err(Error::Domain(format!("concentration k must be finite and >= 0, got {}", self.k)));
        }
        if !(self.alpha0.is_finite() && (-PI..PI).contains(&self.alpha0)) {
            return Err(Error::Domain(format!("mean azimuth must lie in [-pi, pi), got {}", self.alpha0)));
        }
        if !(self.beta0.is_finite() && self.beta0.abs() <= FRAC_PI_2) {
            return Err(Error::Domain(format!(
                "mean elevation must lie in [-pi/2, pi/2], got {}",
                self.beta0
            )));
        }
        Ok(())
    }

    /// Mean direction as a unit vector.
    pub fn mean_direction(&self) -> [f64; 3] {
        let (sb, cb) = self.beta0.sin_cos();
        let (sa, ca) = self.alpha0.sin_cos();
        [cb * ca, cb * sa, sb]
    }

    /// The planar (elevation-free) counterpart used by the 2D model.
    pub fn planar(&self) -> Self {
        Self { beta0: 0.0, ..*self }
    }
}

/// `k / (2 sinh k) * e^{-k}`, with its `k -> 0` limit of 1/2.
fn scaled_norm(k: f64) -> f64 {
    if k == 0.0 {
        0.5
    } else {
        k / (-(-2.0 * k).exp_m1())
    }
}

/// Joint density of `(alpha, beta)`.
pub fn vmf_pdf(alpha: f64, beta: f64, p: &VmfParams) -> Result<f64> {
    if !(beta.abs() <= FRAC_PI_2) || !alpha.is_finite() {
        return Err(Error::Domain(format!("elevation {beta} outside [-pi/2, pi/2]")));
    }
    Ok(pdf_unchecked(alpha, beta, p))
}

pub(crate) fn pdf_unchecked(alpha: f64, beta: f64, p: &VmfParams) -> f64 {
    let (sb, cb) = beta.sin_cos();
    let (sb0, cb0) = p.beta0.sin_cos();
    let c = cb0 * cb * (alpha - p.alpha0).cos() + sb0 * sb;
    scaled_norm(p.k) * cb * (p.k * (c - 1.0)).exp() / (2.0 * PI)
}

/// Von Mises density of the azimuth on the `beta = 0` plane.
pub fn von_mises_pdf(alpha: f64, p: &VmfParams) -> f64 {
    (p.k * ((alpha - p.alpha0).cos() - 1.0)).exp() / (2.0 * PI * i0e_unchecked(p.k))
}

/// Closed-form elevation marginal.
fn elevation_pdf(beta: f64, p: &VmfParams) -> f64 {
    if beta.abs() > FRAC_PI_2 {
        return 0.0;
    }
    let cb = beta.cos().max(0.0);
    let x = p.k * p.beta0.cos() * cb;
    scaled_norm(p.k) * cb * i0e_unchecked(x) * (p.k * ((beta - p.beta0).cos() - 1.0)).exp()
}

/// Azimuth marginal by Gauss–Legendre integration over elevation.
fn azimuth_pdf(alpha: f64, p: &VmfParams) -> f64 {
    let rule = gauss_legendre_nodes(64);
    let mut s = 0.0;
    for (x, w) in rule.0.iter().zip(&rule.1) {
        s += w * pdf_unchecked(alpha, x * FRAC_PI_2, p);
    }
    s * FRAC_PI_2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Marginal {
    Azimuth,
    Elevation,
    /// Azimuth of the planar von Mises reduction.
    PlanarAzimuth,
}

impl Marginal {
    fn density(&self, x: f64, p: &VmfParams) -> f64 {
        match self {
            Marginal::Azimuth => azimuth_pdf(x, p),
            Marginal::Elevation => elevation_pdf(x, p),
            Marginal::PlanarAzimuth => von_mises_pdf(x, p),
        }
    }

    /// Domain of the marginal. Azimuths are recentered on the mean.
    pub fn domain(&self, p: &VmfParams) -> (f64, f64) {
        match self {
            Marginal::Elevation => (-FRAC_PI_2, FRAC_PI_2),
            _ => (p.alpha0 - PI, p.alpha0 + PI),
        }
    }

    fn to_domain(self, x: f64, p: &VmfParams) -> f64 {
        match self {
            Marginal::Elevation => x.clamp(-FRAC_PI_2, FRAC_PI_2),
            _ => {
                // Keep the upper domain end instead of wrapping it back to the start.
                if x == p.alpha0 + PI {
                    x
                } else {
                    p.alpha0 + wrap_angle(x - p.alpha0)
                }
            }
        }
    }
}

/// Tabulated marginal CDF.
#[derive(Debug)]
pub struct MarginalTable {
    lo: f64,
    h: f64,
    cdf: Vec<f64>,
    slope: Vec<f64>,
}

impl MarginalTable {
    fn build(which: Marginal, p: &VmfParams) -> Self {
        let (lo, hi) = which.domain(p);
        let h = (hi - lo) / TABLE_CELLS as f64;
        let rule = gauss_legendre_nodes(10);
        let dens = |x: f64| which.density(x, p);
        let mut cdf = Vec::with_capacity(TABLE_CELLS + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for i in 0..TABLE_CELLS {
            let c = lo + (i as f64 + 0.5) * h;
            let mut s = 0.0;
            for (x, w) in rule.0.iter().zip(&rule.1) {
                s += w * dens(c + 0.5 * h * x);
            }
            acc += 0.5 * h * s;
            cdf.push(acc);
        }
        let total = acc;
        cdf.iter_mut().for_each(|v| *v /= total);
        *cdf.last_mut().unwrap() = 1.0;
        let mut slope: Vec<f64> = (0..=TABLE_CELLS).map(|i| dens(lo + i as f64 * h) / total).collect();
        // Fritsch–Carlson limiter keeps each cell monotone.
        for i in 0..TABLE_CELLS {
            let secant = (cdf[i + 1] - cdf[i]) / h;
            if secant <= 0.0 {
                slope[i] = 0.0;
                slope[i + 1] = 0.0;
                continue;
            }
            let a = slope[i] / secant;
            let b = slope[i + 1] / secant;
            let r = a * a + b * b;
            if r > 9.0 {
                let t = 3.0 / r.sqrt();
                slope[i] = t * a * secant;
                slope[i + 1] = t * b * secant;
            }
        }
        Self { lo, h, cdf, slope }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let t = (x - self.lo) / self.h;
        if t <= 0.0 {
            return 0.0;
        }
        if t >= TABLE_CELLS as f64 {
            return 1.0;
        }
        let i = (t as usize).min(TABLE_CELLS - 1);
        let s = t - i as f64;
        let (y0, y1) = (self.cdf[i], self.cdf[i + 1]);
        let (m0, m1) = (self.slope[i] * self.h, self.slope[i + 1] * self.h);
        let s2 = s * s;
        let s3 = s2 * s;
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * m1;
        v.clamp(y0.min(y1), y0.max(y1))
    }

    pub fn icdf(&self, u: f64) -> f64 {
        // Locate the cell, then bisect the interpolant inside it.
        let i = match self.cdf.partition_point(|&c| c < u) {
            0 => 0,
            j => (j - 1).min(TABLE_CELLS - 1),
        };
        let mut a = self.lo + i as f64 * self.h;
        let mut b = a + self.h;
        while b - a > ICDF_TOL {
            let m = 0.5 * (a + b);
            if self.cdf(m) < u {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }
}

type TableKey = (Marginal, u64, u64, u64);

static TABLES: Lazy<Mutex<HashMap<TableKey, Arc<MarginalTable>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Shared, lazily built CDF table for one marginal of one parameter set.
pub fn marginal_table(which: Marginal, p: &VmfParams) -> Arc<MarginalTable> {
    let key = (which, p.alpha0.to_bits(), p.beta0.to_bits(), p.k.to_bits());
    if let Some(t) = TABLES.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
        return t.clone();
    }
    // Build outside the lock; a concurrent duplicate build yields an identical table.
    let table = Arc::new(MarginalTable::build(which, p));
    TABLES
        .lock()
        .unwrap_or_else(|e| e.into_inner())
        .entry(key)
        .or_insert(table)
        .clone()
}

/// Marginal CDF. Azimuths are evaluated on the circle recentered on the mean,
/// `[alpha0 - pi, alpha0 + pi)`.
pub fn vmf_marginal_cdf(which: Marginal, x: f64, p: &VmfParams) -> Result<f64> {
    p.validate()?;
    if !x.is_finite() {
        return Err(Error::Domain(format!("angle must be finite, got {x}")));
    }
    let (lo, hi) = which.domain(p);
    let x = which.to_domain(x, p);
    if p.k == 0.0 {
        return Ok(match which {
            Marginal::Elevation => 0.5 * (1.0 + x.sin()),
            _ => (x - lo) / (hi - lo),
        });
    }
    Ok(marginal_table(which, p).cdf(x))
}

/// Inverse marginal CDF. Azimuths are returned on the recentered circle.
pub fn vmf_marginal_icdf(which: Marginal, u: f64, p: &VmfParams) -> Result<f64> {
    p.validate()?;
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!("quantile level must lie in (0, 1), got {u}")));
    }
    let (lo, hi) = which.domain(p);
    if p.k == 0.0 {
        return Ok(match which {
            Marginal::Elevation => (2.0 * u - 1.0).asin(),
            _ => lo + u * (hi - lo),
        });
    }
    Ok(marginal_table(which, p).icdf(u))
}

/// Draws one `(alpha, beta)` pair by exact inverse-transform sampling of the
/// cosine to the mean direction (no rejection step).
pub fn vmf_sample<R: Rng + ?Sized>(p: &VmfParams, rng: &mut R) -> (f64, f64) {
    let u: f64 = rng.random();
    let phi = 2.0 * PI * rng.random::<f64>();
    let w = if p.k < 1e-8 {
        2.0 * u - 1.0
    } else {
        (1.0 + (u + (1.0 - u) * (-2.0 * p.k).exp()).ln() / p.k).clamp(-1.0, 1.0)
    };
    let s = (1.0 - w * w).max(0.0).sqrt();
    // Orthonormal frame around the mean direction.
    let mu = p.mean_direction();
    let (sa, ca) = p.alpha0.sin_cos();
    let (sb, cb) = p.beta0.sin_cos();
    let e1 = [-sa, ca, 0.0];
    let e2 = [-sb * ca, -sb * sa, cb];
    let (sp, cp) = phi.sin_cos();
    let v: Vec<f64> = (0..3).map(|i| w * mu[i] + s * (cp * e1[i] + sp * e2[i])).collect();
    let beta = v[2].clamp(-1.0, 1.0).asin();
    let alpha = wrap_angle(v[1].atan2(v[0]));
    (alpha, beta)
}

/// Draws a planar von Mises azimuth (Best–Fisher rejection sampler).
pub fn von_mises_sample<R: Rng + ?Sized>(p: &VmfParams, rng: &mut R) -> f64 {
    if p.k < 1e-8 {
        return wrap_angle(p.alpha0 + 2.0 * PI * rng.random::<f64>() - PI);
    }
    let k = p.k;
    let tau = 1.0 + (1.0 + 4.0 * k * k).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * k);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = k * (r - f);
        let u2: f64 = rng.random();
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let u3: f64 = rng.random();
            let theta = if u3 > 0.5 { f.clamp(-1.0, 1.0).acos() } else { -f.clamp(-1.0, 1.0).acos() };
            return wrap_angle(p.alpha0 + theta);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn isotropic_limit() {
        let p = VmfParams::new(0.0, 0.0, 0.0).unwrap();
        assert!((vmf_pdf(0.3, 0.0, &p).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-16);
    }

    #[test]
    fn density_at_mean_direction() {
        let p = VmfParams::from_degrees(0.0, 31.6, 3.6);
        let want = 3.6 * p.beta0.cos() * 3.6f64.exp() / (4.0 * PI * 3.6f64.sinh());
        let got = vmf_pdf(p.alpha0, p.beta0, &p).unwrap();
        assert!((got - want).abs() < 1e-14 * want);
    }

    #[test]
    fn rejects_elevation_beyond_pole() {
        let p = VmfParams::new(0.0, 0.0, 1.0).unwrap();
        assert!(matches!(vmf_pdf(0.0, 2.0, &p), Err(Error::Domain(_))));
        assert!(VmfParams::new(0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn elevation_marginal_matches_quadrature() {
        let p = VmfParams::from_degrees(21.7, 6.7, 9.6);
        let rule = gauss_legendre_nodes(200);
        for &b in &[-1.0, -0.2, 0.0, 0.1, 0.5, 1.4] {
            let s: f64 = rule.0.iter().zip(&rule.1).map(|(x, w)| w * pdf_unchecked(PI * x, b, &p)).sum::<f64>() * PI;
            assert!((s - elevation_pdf(b, &p)).abs() < 1e-12, "beta = {b}");
        }
    }

    #[test]
    fn marginal_symmetry_points() {
        let p = VmfParams::from_degrees(40.0, 0.0, 9.6);
        assert!((vmf_marginal_cdf(Marginal::Azimuth, p.alpha0, &p).unwrap() - 0.5).abs() < 1e-12);
        assert!((vmf_marginal_cdf(Marginal::Elevation, 0.0, &p).unwrap() - 0.5).abs() < 1e-12);
        assert!((vmf_marginal_icdf(Marginal::Azimuth, 0.5, &p).unwrap() - p.alpha0).abs() < 1e-9);
    }

    #[test]
    fn uniform_azimuth_for_k_zero() {
        let p = VmfParams::new(0.0, 0.0, 0.0).unwrap();
        assert!((vmf_marginal_icdf(Marginal::Azimuth, 0.75, &p).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((vmf_marginal_cdf(Marginal::Azimuth, 1.0, &p).unwrap() - (1.0 + PI) / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn icdf_inverts_cdf() {
        let p = VmfParams::from_degrees(171.6, 31.6, 11.5);
        for which in [Marginal::Azimuth, Marginal::Elevation, Marginal::PlanarAzimuth] {
            for i in 1..40 {
                let u = (i as f64 - 0.25) / 40.0;
                let x = vmf_marginal_icdf(which, u, &p).unwrap();
                let back = vmf_marginal_cdf(which, x, &p).unwrap();
                assert!((back - u).abs() < 1e-8, "{which:?} u = {u}: {back}");
            }
        }
    }

    #[test]
    fn cdf_ends() {
        let p = VmfParams::from_degrees(-170.0, -20.0, 3.6);
        for which in [Marginal::Azimuth, Marginal::Elevation] {
            let (lo, hi) = which.domain(&p);
            assert!(vmf_marginal_cdf(which, lo, &p).unwrap().abs() < 1e-8);
            assert!((vmf_marginal_cdf(which, hi, &p).unwrap() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn invalid_quantile() {
        let p = VmfParams::new(0.0, 0.0, 1.0).unwrap();
        assert!(vmf_marginal_icdf(Marginal::Azimuth, 1.0, &p).is_err());
        assert!(vmf_marginal_icdf(Marginal::Azimuth, 0.0, &p).is_err());
    }

    #[test]
    fn planar_sampler_mean() {
        let p = VmfParams::from_degrees(150.0, 0.0, 3.6);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (mut c, mut s) = (0.0, 0.0);
        for _ in 0..20000 {
            let a = von_mises_sample(&p, &mut rng);
            c += a.cos();
            s += a.sin();
        }
        assert!((s.atan2(c) - p.alpha0).abs() < 0.02);
    }
}
