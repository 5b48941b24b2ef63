//! Statistics of the infinite-scatterer reference model.
//!
//! Correlations are taken between element pair (1, 1) and element pair
//! (2, 2) of two-element arrays with spacings `delta_t`, `delta_r`, as
//! `E[h_11(t) h_22*(t - tau)]`. Component functions return the raw sums
//! (LoS weighted by `K`, diffuse parts by their `eta`); [`stcf_total`]
//! divides by `K + 1`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::curve::{ModelTag, StatCurve};
use crate::error::{Error, Result};
use crate::geometry::{
    array_projection, couple, eps_los, path_lengths_at, wrap_angle, ElementOffsets, RayAngles,
    Region, ScenarioConfig,
};
use crate::numerics::{
    erf_unchecked, fft_psd, gauss_legendre_nodes, i0e_unchecked, integrate_1d, integrate_2d,
    marcum_q1_complement, QuadratureSpec, Rect, Taper, UniformGrid,
};
use crate::vmf::{pdf_unchecked, von_mises_pdf, VmfParams};

/// Ricean envelope parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiceanParams {
    pub k: f64,
    /// LoS amplitude `sqrt(K / (K + 1))`.
    pub k0: f64,
    /// Per-quadrature diffuse variance `1 / (2 (K + 1))`.
    pub sigma0_sq: f64,
    /// LoS phase.
    pub theta_k: f64,
}

impl RiceanParams {
    pub fn new(k: f64, theta_k: f64) -> Result<Self> {
        if !(k.is_finite() && k >= 0.0) {
            return Err(Error::Domain(format!("Ricean factor must be finite and >= 0, got {k}")));
        }
        Ok(Self {
            k,
            k0: (k / (k + 1.0)).sqrt(),
            sigma0_sq: 0.5 / (k + 1.0),
            theta_k: wrap_angle(theta_k),
        })
    }

    /// Parameters of element pair (1, 1) at `t = 0`.
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        let off = ElementOffsets::for_elements(1, 1, cfg)?;
        let (eps, _) = eps_los(off, cfg);
        Self::new(cfg.k_factor, -2.0 * PI * (eps / cfg.lambda()).fract())
    }
}

/// Ricean amplitude density.
pub fn amplitude_pdf(z: f64, rp: &RiceanParams) -> Result<f64> {
    if !(z >= 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("amplitude must be finite and >= 0, got {z}")));
    }
    let s2 = rp.sigma0_sq;
    let d = z - rp.k0;
    Ok(z / s2 * (-d * d / (2.0 * s2)).exp() * i0e_unchecked(z * rp.k0 / s2))
}

/// Phase density of the Ricean process.
pub fn phase_pdf(theta: f64, rp: &RiceanParams) -> f64 {
    let s2 = rp.sigma0_sq;
    let s = s2.sqrt();
    let (sd, cd) = (theta - rp.theta_k).sin_cos();
    let base = (-rp.k0 * rp.k0 / (2.0 * s2)).exp();
    let lobe = rp.k0 / s * (PI / 2.0).sqrt() * cd * (-rp.k0 * rp.k0 * sd * sd / (2.0 * s2)).exp()
        * (1.0 + erf_unchecked(rp.k0 * cd / (s * 2f64.sqrt())));
    (base + lobe) / (2.0 * PI)
}

/// Probability that the envelope lies below `r`.
pub fn ricean_cdf(r: f64, k: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("level must be >= 0, got {r}")));
    }
    marcum_q1_complement((2.0 * k).sqrt(), (2.0 * (k + 1.0)).sqrt() * r)
}

/// Offsets of element pairs (1, 1) and (2, 2) for the given spacings.
pub(crate) fn element_pair(delta_t: f64, delta_r: f64) -> (ElementOffsets, ElementOffsets) {
    (
        ElementOffsets { s_t: 0.5 * delta_t, s_r: 0.5 * delta_r },
        ElementOffsets { s_t: -0.5 * delta_t, s_r: -0.5 * delta_r },
    )
}

/// Path-length difference `eps_22 - eps_11` of the direct path.
pub fn los_phase_difference(delta_t: f64, delta_r: f64, cfg: &ScenarioConfig) -> f64 {
    let (o1, o2) = element_pair(delta_t, delta_r);
    eps_los(o2, cfg).0 - eps_los(o1, cfg).0
}

/// Doppler shift of the direct path.
pub fn los_doppler(cfg: &ScenarioConfig) -> f64 {
    cfg.f_t_max * cfg.gamma_t.cos() - cfg.f_r_max * cfg.gamma_r.cos()
}

/// Doppler shift of a ray.
pub fn ray_doppler(ray: &RayAngles, cfg: &ScenarioConfig) -> f64 {
    cfg.f_t_max * (ray.alpha_t - cfg.gamma_t).cos() * ray.beta_t.cos()
        + cfg.f_r_max * (ray.alpha_r - cfg.gamma_r).cos() * ray.beta_r.cos()
}

/// Path-length difference and Doppler shift of a single-bounce ray given by
/// its free angle pair.
pub fn single_bounce_terms(
    region: Region,
    alpha: f64,
    beta: f64,
    delta_t: f64,
    delta_r: f64,
    cfg: &ScenarioConfig,
) -> Result<(f64, f64)> {
    let c = couple(region, alpha, beta, cfg)?;
    let (o1, o2) = element_pair(delta_t, delta_r);
    let p1 = path_lengths_at(&c.angles, region, o1, cfg)?;
    let p2 = path_lengths_at(&c.angles, region, o2, cfg)?;
    let a = (p2.eps_pn + p2.eps_nq) - (p1.eps_pn + p1.eps_nq);
    Ok((a, ray_doppler(&c.angles, cfg)))
}

/// Tx-side path-length difference and Doppler of a double-bounce departure.
pub fn db_tx_terms(alpha: f64, beta: f64, delta_t: f64, cfg: &ScenarioConfig) -> (f64, f64) {
    (
        delta_t * array_projection(alpha, beta, cfg.theta_t, cfg.phi_t),
        cfg.f_t_max * (alpha - cfg.gamma_t).cos() * beta.cos(),
    )
}

/// Rx-side path-length difference and Doppler of a double-bounce arrival.
pub fn db_rx_terms(alpha: f64, beta: f64, delta_r: f64, cfg: &ScenarioConfig) -> (f64, f64) {
    (
        delta_r * array_projection(alpha, beta, cfg.theta_r, cfg.phi_r),
        cfg.f_r_max * (alpha - cfg.gamma_r).cos() * beta.cos(),
    )
}

/// `e^{j (2 pi / lambda) a + j 2 pi tau nu}`.
pub(crate) fn cf_phasor(a: f64, nu: f64, tau: f64, lambda: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * (a / lambda + tau * nu))
}

/// LoS part of the ST CF; its magnitude is exactly `K`.
pub fn stcf_los(delta_t: f64, delta_r: f64, tau: f64, cfg: &ScenarioConfig) -> Complex64 {
    cfg.k_factor * cf_phasor(los_phase_difference(delta_t, delta_r, cfg), los_doppler(cfg), tau, cfg.lambda())
}

/// Azimuths where the principal arcsin branch of the cylinder coupling folds
/// over, leaving a kink in every integrand of that region.
fn coupling_kinks(region: Region, cfg: &ScenarioConfig) -> Vec<f64> {
    if region != Region::Sb3 {
        return Vec::new();
    }
    let (a, f) = (cfg.a, cfg.f_ell());
    let x = (-2.0 * a * f / (a * a + f * f)).acos();
    vec![x, -x]
}

/// Splits `[alpha0 - pi, alpha0 + pi]` at the given azimuths (taken modulo 2 pi).
fn azimuth_panels(p: &VmfParams, kinks: &[f64]) -> Vec<(f64, f64)> {
    let lo = p.alpha0 - PI;
    let mut cuts: Vec<f64> = kinks
        .iter()
        .map(|k| lo + (k - lo).rem_euclid(2.0 * PI))
        .filter(|c| *c - lo > 1e-9 && lo + 2.0 * PI - *c > 1e-9)
        .collect();
    cuts.sort_by(f64::total_cmp);
    let mut edges = vec![lo];
    edges.extend(cuts);
    edges.push(lo + 2.0 * PI);
    edges.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Integrates `g(alpha, beta) * pdf` over the distribution `p`, reducing to
/// a planar von Mises integral in 2D mode.
fn vmf_expectation<G>(
    p: &VmfParams,
    planar: bool,
    kinks: &[f64],
    spec: &QuadratureSpec,
    mut g: G,
) -> Result<Complex64>
where
    G: FnMut(f64, f64) -> Complex64,
{
    let mut total = Complex64::new(0.0, 0.0);
    for (lo, hi) in azimuth_panels(p, kinks) {
        total += if planar {
            integrate_1d(|a| g(a, 0.0) * von_mises_pdf(a, p), lo, hi, spec)?.value
        } else {
            let rect = Rect::new(lo, hi, -FRAC_PI_2, FRAC_PI_2);
            integrate_2d(|a, b| g(a, b) * pdf_unchecked(a, b, p), rect, spec)?.value
        };
    }
    Ok(total)
}

fn single_index(i: usize) -> Result<Region> {
    match i {
        1 => Ok(Region::Sb1),
        2 => Ok(Region::Sb2),
        3 => Ok(Region::Sb3),
        _ => Err(Error::Domain(format!("single-bounce component index must be 1, 2 or 3, got {i}"))),
    }
}

/// Single-bounce component `i` of the ST CF.
pub fn stcf_sb(i: usize, delta_t: f64, delta_r: f64, tau: f64, cfg: &ScenarioConfig) -> Result<Complex64> {
    stcf_sb_with(i, delta_t, delta_r, tau, cfg, &QuadratureSpec::default())
}

pub fn stcf_sb_with(
    i: usize,
    delta_t: f64,
    delta_r: f64,
    tau: f64,
    cfg: &ScenarioConfig,
    spec: &QuadratureSpec,
) -> Result<Complex64> {
    let region = single_index(i)?;
    let lambda = cfg.lambda();
    let kinks = coupling_kinks(region, cfg);
    let v = vmf_expectation(&cfg.vmf(region), cfg.mode_2d, &kinks, spec, |a, b| {
        match single_bounce_terms(region, a, b, delta_t, delta_r, cfg) {
            Ok((ph, nu)) => cf_phasor(ph, nu, tau, lambda),
            // Only reachable at the cylinder poles, where the density vanishes.
            Err(_) => Complex64::new(0.0, 0.0),
        }
    })?;
    Ok(cfg.eta(region) * v)
}

/// Tx and Rx factors of the double-bounce ST CF, each normalized to 1 at zero.
pub fn stcf_db_factors(
    delta_t: f64,
    delta_r: f64,
    tau: f64,
    cfg: &ScenarioConfig,
    spec: &QuadratureSpec,
) -> Result<(Complex64, Complex64)> {
    let lambda = cfg.lambda();
    let rho_t = vmf_expectation(&cfg.vmf_tx_sphere, cfg.mode_2d, &[], spec, |a, b| {
        let (ph, nu) = db_tx_terms(a, b, delta_t, cfg);
        cf_phasor(ph, nu, tau, lambda)
    })?;
    let rho_r = vmf_expectation(&cfg.vmf_rx_sphere, cfg.mode_2d, &[], spec, |a, b| {
        let (ph, nu) = db_rx_terms(a, b, delta_r, cfg);
        cf_phasor(ph, nu, tau, lambda)
    })?;
    Ok((rho_t, rho_r))
}

/// Double-bounce component of the ST CF.
pub fn stcf_db(delta_t: f64, delta_r: f64, tau: f64, cfg: &ScenarioConfig) -> Result<Complex64> {
    let (t, r) = stcf_db_factors(delta_t, delta_r, tau, cfg, &QuadratureSpec::default())?;
    Ok(cfg.eta_db * t * r)
}

/// Raw ST CF components at one `(delta_t, delta_r, tau)` point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StcfComponents {
    pub los: Complex64,
    pub sb: [Complex64; 3],
    pub db: Complex64,
    pub k_factor: f64,
}

impl StcfComponents {
    pub fn raw_sum(&self) -> Complex64 {
        self.los + self.sb.iter().sum::<Complex64>() + self.db
    }

    /// Normalized ST CF, equal to 1 at the origin.
    pub fn total(&self) -> Complex64 {
        self.raw_sum() / (self.k_factor + 1.0)
    }
}

pub fn stcf_components(
    delta_t: f64,
    delta_r: f64,
    tau: f64,
    cfg: &ScenarioConfig,
    spec: &QuadratureSpec,
) -> Result<StcfComponents> {
    let mut sb = [Complex64::new(0.0, 0.0); 3];
    for (i, slot) in sb.iter_mut().enumerate() {
        if cfg.eta(Region::SINGLE[i]) != 0.0 {
            *slot = stcf_sb_with(i + 1, delta_t, delta_r, tau, cfg, spec)?;
        }
    }
    let db = if cfg.eta_db != 0.0 {
        let (t, r) = stcf_db_factors(delta_t, delta_r, tau, cfg, spec)?;
        cfg.eta_db * t * r
    } else {
        Complex64::new(0.0, 0.0)
    };
    Ok(StcfComponents {
        los: stcf_los(delta_t, delta_r, tau, cfg),
        sb,
        db,
        k_factor: cfg.k_factor,
    })
}

/// Normalized ST CF of the reference model.
pub fn stcf_total(delta_t: f64, delta_r: f64, tau: f64, cfg: &ScenarioConfig) -> Result<Complex64> {
    Ok(stcf_components(delta_t, delta_r, tau, cfg, &QuadratureSpec::default())?.total())
}

/// Weighted Gauss–Legendre discretization of one angle distribution:
/// `(weight * pdf, alpha, beta)` triples. Azimuth panels split at `kinks`
/// share the `n_alpha` nodes in proportion to their width.
fn vmf_nodes(p: &VmfParams, planar: bool, kinks: &[f64], n_alpha: usize, n_beta: usize) -> Vec<(f64, f64, f64)> {
    let gb = gauss_legendre_nodes(n_beta);
    let mut out = Vec::new();
    for (lo, hi) in azimuth_panels(p, kinks) {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let n = ((n_alpha as f64 * half / PI).ceil() as usize).max(16);
        let ga = gauss_legendre_nodes(n);
        for (x, w) in ga.0.iter().zip(&ga.1) {
            let a = mid + half * x;
            if planar {
                out.push((half * w * von_mises_pdf(a, p), a, 0.0));
                continue;
            }
            for (y, v) in gb.0.iter().zip(&gb.1) {
                let b = FRAC_PI_2 * y;
                let wt = half * FRAC_PI_2 * w * v * pdf_unchecked(a, b, p);
                if wt > 1e-300 {
                    out.push((wt, a, b));
                }
            }
        }
    }
    out
}

/// A set of weighted plane waves `(weight, path difference, Doppler)`.
#[derive(Debug, Clone, Default)]
pub struct RaySpectrum {
    pub rays: Vec<(f64, f64, f64)>,
}

impl RaySpectrum {
    pub fn eval(&self, tau: f64, lambda: f64) -> Complex64 {
        self.rays.iter().map(|&(w, a, nu)| w * cf_phasor(a, nu, tau, lambda)).sum()
    }

    /// Evaluates at `start + i * step` for `i < count` by phasor rotation,
    /// re-anchoring every 256 lags.
    pub fn eval_grid(&self, start: f64, step: f64, count: usize, lambda: f64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); count];
        for &(w, a, nu) in &self.rays {
            let rot = Complex64::from_polar(1.0, 2.0 * PI * nu * step);
            let mut z = Complex64::new(0.0, 0.0);
            for (i, slot) in out.iter_mut().enumerate() {
                if i % 256 == 0 {
                    z = w * cf_phasor(a, nu, start + i as f64 * step, lambda);
                }
                *slot += z;
                z *= rot;
            }
        }
        out
    }

    /// Product spectrum of two independent factors.
    pub fn product(&self, other: &RaySpectrum) -> RaySpectrum {
        let mut rays = Vec::with_capacity(self.rays.len() * other.rays.len());
        for &(w1, a1, n1) in &self.rays {
            for &(w2, a2, n2) in &other.rays {
                rays.push((w1 * w2, a1 + a2, n1 + n2));
            }
        }
        RaySpectrum { rays }
    }
}

/// Plane-wave expansion of every ST CF component at one pair of antenna
/// spacings. For the reference model the waves are Gauss–Legendre nodes of
/// the angle integrals; for the simulation model they are the discrete rays.
/// Used for long lag grids, where adaptive integration per lag is wasteful.
#[derive(Debug, Clone)]
pub struct RayDiscretization {
    pub sb: [RaySpectrum; 3],
    pub db_tx: RaySpectrum,
    pub db_rx: RaySpectrum,
    pub los: (f64, f64),
    k_factor: f64,
    etas: [f64; 4],
    lambda: f64,
}

impl RayDiscretization {
    /// `n_alpha` Gauss–Legendre nodes in azimuth, half as many in elevation.
    pub fn new(cfg: &ScenarioConfig, delta_t: f64, delta_r: f64, n_alpha: usize) -> Result<Self> {
        let n_beta = (n_alpha / 2).max(16);
        let mut sb: [RaySpectrum; 3] = Default::default();
        for (i, region) in Region::SINGLE.iter().enumerate() {
            let kinks = coupling_kinks(*region, cfg);
            for (w, a, b) in vmf_nodes(&cfg.vmf(*region), cfg.mode_2d, &kinks, n_alpha, n_beta) {
                if let Ok((ph, nu)) = single_bounce_terms(*region, a, b, delta_t, delta_r, cfg) {
                    sb[i].rays.push((w, ph, nu));
                }
            }
        }
        let db_tx = RaySpectrum {
            rays: vmf_nodes(&cfg.vmf_tx_sphere, cfg.mode_2d, &[], n_alpha, n_beta)
                .into_iter()
                .map(|(w, a, b)| {
                    let (ph, nu) = db_tx_terms(a, b, delta_t, cfg);
                    (w, ph, nu)
                })
                .collect(),
        };
        let db_rx = RaySpectrum {
            rays: vmf_nodes(&cfg.vmf_rx_sphere, cfg.mode_2d, &[], n_alpha, n_beta)
                .into_iter()
                .map(|(w, a, b)| {
                    let (ph, nu) = db_rx_terms(a, b, delta_r, cfg);
                    (w, ph, nu)
                })
                .collect(),
        };
        Ok(Self::assemble(cfg, delta_t, delta_r, sb, db_tx, db_rx))
    }

    pub(crate) fn assemble(
        cfg: &ScenarioConfig,
        delta_t: f64,
        delta_r: f64,
        sb: [RaySpectrum; 3],
        db_tx: RaySpectrum,
        db_rx: RaySpectrum,
    ) -> Self {
        Self {
            sb,
            db_tx,
            db_rx,
            los: (los_phase_difference(delta_t, delta_r, cfg), los_doppler(cfg)),
            k_factor: cfg.k_factor,
            etas: [cfg.eta_sb1, cfg.eta_sb2, cfg.eta_sb3, cfg.eta_db],
            lambda: cfg.lambda(),
        }
    }

    /// Node count that resolves lags up to `tau_max`.
    pub fn nodes_for(cfg: &ScenarioConfig, tau_max: f64) -> usize {
        let z = 2.0 * PI * tau_max * (cfg.f_t_max + cfg.f_r_max);
        (192 + (1.2 * z).ceil() as usize).min(2048)
    }

    /// Normalized ST CF on a uniform lag grid.
    pub fn stcf_grid(&self, start: f64, step: f64, count: usize) -> Vec<Complex64> {
        let los = self.k_factor / (self.k_factor + 1.0);
        let mut out = self.diffuse_grid(start, step, count);
        for (i, o) in out.iter_mut().enumerate() {
            *o += los * cf_phasor(self.los.0, self.los.1, start + i as f64 * step, self.lambda);
        }
        out
    }

    /// Scattered part of the normalized ST CF, without the LoS term.
    pub fn diffuse_grid(&self, start: f64, step: f64, count: usize) -> Vec<Complex64> {
        let l = self.lambda;
        let mut out = vec![Complex64::new(0.0, 0.0); count];
        for (i, s) in self.sb.iter().enumerate() {
            if self.etas[i] != 0.0 {
                for (o, v) in out.iter_mut().zip(s.eval_grid(start, step, count, l)) {
                    *o += self.etas[i] * v;
                }
            }
        }
        if self.etas[3] != 0.0 {
            let t = self.db_tx.eval_grid(start, step, count, l);
            let r = self.db_rx.eval_grid(start, step, count, l);
            for ((o, a), b) in out.iter_mut().zip(t).zip(r) {
                *o += self.etas[3] * a * b;
            }
        }
        let norm = 1.0 / (self.k_factor + 1.0);
        out.iter_mut().for_each(|v| *v *= norm);
        out
    }
}

/// Normalized temporal ACF (`delta = 0`) on arbitrary lags.
pub fn temporal_acf(cfg: &ScenarioConfig, taus: &[f64]) -> Result<Vec<Complex64>> {
    taus.iter().map(|&t| stcf_total(0.0, 0.0, t, cfg)).collect()
}

/// Normalized spatial CCF (`tau = 0`) over Rx spacings.
pub fn spatial_ccf(cfg: &ScenarioConfig, delta_t: f64, delta_rs: &[f64]) -> Result<Vec<Complex64>> {
    delta_rs.iter().map(|&d| stcf_total(delta_t, d, 0.0, cfg)).collect()
}

/// Default symmetric lag grid for Doppler spectra: 4 samples per total
/// Doppler bandwidth, spanning `+-40 / f_max`.
pub fn default_psd_grid(cfg: &ScenarioConfig) -> Result<UniformGrid> {
    let band = cfg.f_t_max + cfg.f_r_max;
    if band <= 0.0 {
        return Err(Error::Contract("Doppler spectrum needs a nonzero maximum Doppler".into()));
    }
    let fmin = cfg.f_t_max.min(cfg.f_r_max).max(band / 2.0 * 1e-3);
    let step = 1.0 / (4.0 * band);
    let half = ((40.0 / fmin) / step).ceil() as usize;
    UniformGrid::symmetric(half, step)
}

/// Doppler PSD from the Fourier transform of the temporal ACF.
pub fn doppler_psd(cfg: &ScenarioConfig, grid: &UniformGrid) -> Result<StatCurve> {
    if !grid.is_symmetric() {
        return Err(Error::Contract("lag grid must be symmetric about zero".into()));
    }
    let disc = RayDiscretization::new(cfg, 0.0, 0.0, RayDiscretization::nodes_for(cfg, grid.end()))?;
    psd_from(&disc, grid, ModelTag::Reference, &cfg.name)
}

pub(crate) fn psd_from(
    disc: &RayDiscretization,
    grid: &UniformGrid,
    model: ModelTag,
    scenario_id: &str,
) -> Result<StatCurve> {
    if !grid.is_symmetric() {
        return Err(Error::Contract("lag grid must be symmetric about zero".into()));
    }
    // The LoS tone is a spectral line; transforming it through the taper
    // would only smear it into (partly negative) sidelobes.
    let pos = disc.diffuse_grid(0.0, grid.step, grid.count / 2 + 1);
    let acf = symmetric_from_positive(&pos);
    let mut s = fft_psd(&acf, grid, Taper::default(), false)?;
    if disc.k_factor > 0.0 {
        let df = s.df();
        let bin = ((disc.los.1 - s.freqs[0]) / df).round();
        if bin >= 0.0 && (bin as usize) < s.density.len() {
            s.density[bin as usize] += disc.k_factor / (disc.k_factor + 1.0) / df;
        }
    }
    let mut c = StatCurve::real("psd", model, scenario_id, s.freqs, s.density);
    c.notes.push(format!("imaginary residual {:.3e}", s.imag_residual));
    Ok(c)
}

/// Extends nonnegative-lag values to a Hermitian sequence on the symmetric grid.
pub(crate) fn symmetric_from_positive(pos: &[Complex64]) -> Vec<Complex64> {
    let half = pos.len() - 1;
    let mut acf = Vec::with_capacity(2 * half + 1);
    for i in (1..=half).rev() {
        acf.push(pos[i].conj());
    }
    acf.extend_from_slice(pos);
    acf
}

/// Envelope derivative moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BParams {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
}

impl BParams {
    /// `b0 b2 - b1^2`, clamped at zero against rounding.
    pub fn spread(&self) -> f64 {
        (self.b0 * self.b2 - self.b1 * self.b1).max(0.0)
    }
}

/// How the first and second b-parameters are assembled from ray Dopplers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BParamConvention {
    /// Spectral moments `(2 pi)^m E[(nu - nu_LoS)^m]` of the diffuse Doppler
    /// spectrum, with `nu = f_T B + f_R C`.
    #[default]
    DopplerMoments,
    /// The product forms `E[(f_T B)^m (f_R C)^m]` and `E[(f_T B)^m] E[(f_R C)^m]`
    /// as written for the closed-form expressions. Diagnostic only.
    AsPrinted,
}

/// `(E[nu], E[nu^2])` of the Doppler of one single-bounce component.
fn sb_doppler_moments(region: Region, cfg: &ScenarioConfig, spec: &QuadratureSpec, printed: bool) -> Result<(f64, f64)> {
    let nu0 = los_doppler(cfg);
    let kinks = coupling_kinks(region, cfg);
    let m = vmf_expectation(&cfg.vmf(region), cfg.mode_2d, &kinks, spec, |a, b| {
        let Ok(c) = couple(region, a, b, cfg) else {
            return Complex64::new(0.0, 0.0);
        };
        let r = c.angles;
        let x = if printed {
            cfg.f_t_max * (r.alpha_t - cfg.gamma_t).cos() * r.beta_t.cos()
                * cfg.f_r_max * (r.alpha_r - cfg.gamma_r).cos() * r.beta_r.cos()
        } else {
            ray_doppler(&r, cfg) - nu0
        };
        Complex64::new(x, x * x)
    })?;
    Ok((m.re, m.im))
}

fn side_moments<F: Fn(f64, f64) -> f64>(p: &VmfParams, planar: bool, spec: &QuadratureSpec, nu: F) -> Result<(f64, f64)> {
    let m = vmf_expectation(p, planar, &[], spec, |a, b| {
        let x = nu(a, b);
        Complex64::new(x, x * x)
    })?;
    Ok((m.re, m.im))
}

/// b-parameters of the reference model.
pub fn b_params(cfg: &ScenarioConfig) -> Result<BParams> {
    b_params_with(cfg, BParamConvention::default(), &QuadratureSpec::default())
}

pub fn b_params_with(cfg: &ScenarioConfig, conv: BParamConvention, spec: &QuadratureSpec) -> Result<BParams> {
    let scale = 1.0 / (2.0 * (cfg.k_factor + 1.0));
    let two_pi = 2.0 * PI;
    let printed = conv == BParamConvention::AsPrinted;
    let (mut b1, mut b2) = (0.0, 0.0);
    for region in Region::SINGLE {
        let eta = cfg.eta(region);
        if eta == 0.0 {
            continue;
        }
        let (m1, m2) = sb_doppler_moments(region, cfg, spec, printed)?;
        b1 += eta * scale * two_pi * m1;
        b2 += eta * scale * two_pi * two_pi * m2;
    }
    if cfg.eta_db != 0.0 {
        let nu0 = los_doppler(cfg);
        let (t1, t2) = side_moments(&cfg.vmf_tx_sphere, cfg.mode_2d, spec, |a, b| db_tx_terms(a, b, 0.0, cfg).1)?;
        let (r1, r2) = side_moments(&cfg.vmf_rx_sphere, cfg.mode_2d, spec, |a, b| db_rx_terms(a, b, 0.0, cfg).1)?;
        let eta = cfg.eta_db * scale;
        if printed {
            b1 += eta * two_pi * t1 * r1;
            b2 += eta * two_pi * two_pi * t2 * r2;
        } else {
            // Independent Tx and Rx Dopplers: expand (nu_T + nu_R - nu0)^m.
            let m1 = t1 + r1 - nu0;
            let m2 = t2 + r2 + nu0 * nu0 + 2.0 * t1 * r1 - 2.0 * nu0 * (t1 + r1);
            b1 += eta * two_pi * m1;
            b2 += eta * two_pi * two_pi * m2;
        }
    }
    Ok(BParams { b0: scale, b1, b2 })
}

/// Level crossing rate for Ricean factor `k` and b-parameters `b`.
pub fn lcr_from_b(r: f64, k: f64, b: &BParams) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("level must be finite and > 0, got {r}")));
    }
    let spread = b.spread();
    // sqrt(b2/b0 - b1^2/b0^2) and chi times it; the latter stays finite as chi -> inf.
    let g = spread.sqrt() / b.b0;
    let w = k.sqrt() * b.b1.abs() / b.b0;
    let chi = if spread > 0.0 { (k * b.b1 * b.b1 / spread).sqrt() } else { f64::INFINITY };
    let c = 2.0 * (k * (k + 1.0)).sqrt() * r;
    let e0 = -k - (k + 1.0) * r * r;
    let rule = gauss_legendre_nodes(64);
    let mut acc = 0.0;
    for (x, wt) in rule.0.iter().zip(&rule.1) {
        let th = FRAC_PI_2 * 0.5 * (x + 1.0);
        let (s, co) = th.sin_cos();
        let cosh = 0.5 * ((c * co + e0).exp() + (-c * co + e0).exp());
        let bracket = if chi.is_finite() {
            let cs = chi * s;
            g * (-cs * cs).exp() + PI.sqrt() * w * s * erf_unchecked(cs)
        } else {
            PI.sqrt() * w * s
        };
        acc += wt * cosh * bracket;
    }
    acc *= FRAC_PI_2 * 0.5;
    Ok(2.0 * r * (k + 1.0).sqrt() / PI.powf(1.5) * acc)
}

/// Average fade duration; `INFINITY` when the crossing rate underflows.
pub fn afd_from_b(r: f64, k: f64, b: &BParams) -> Result<f64> {
    let l = lcr_from_b(r, k, b)?;
    let below = ricean_cdf(r, k)?;
    Ok(if l > 0.0 { below / l } else { f64::INFINITY })
}

pub fn lcr(r: f64, cfg: &ScenarioConfig) -> Result<f64> {
    lcr_from_b(r, cfg.k_factor, &b_params(cfg)?)
}

pub fn afd(r: f64, cfg: &ScenarioConfig) -> Result<f64> {
    afd_from_b(r, cfg.k_factor, &b_params(cfg)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::bessel_j0;

    fn isotropic_2d() -> ScenarioConfig {
        let mut c = ScenarioConfig::low_vtd().to_2d();
        c.vmf_tx_sphere.k = 0.0;
        c.vmf_rx_sphere.k = 0.0;
        c.vmf_cylinder.k = 0.0;
        c
    }

    #[test]
    fn ricean_params_budget() {
        let rp = RiceanParams::new(3.786, 0.0).unwrap();
        assert!((rp.k0 * rp.k0 + 2.0 * rp.sigma0_sq - 1.0).abs() < 1e-12);
        assert!((rp.k0 * rp.k0 - 3.786 / 4.786).abs() < 1e-15);
    }

    #[test]
    fn rayleigh_amplitude() {
        let rp = RiceanParams::new(0.0, 0.0).unwrap();
        for &z in &[0.1f64, 0.5, 1.0, 2.0] {
            let want = 2.0 * z * (-z * z).exp();
            assert!((amplitude_pdf(z, &rp).unwrap() - want).abs() < 1e-14);
        }
        assert!(amplitude_pdf(-0.1, &rp).is_err());
    }

    #[test]
    fn uniform_phase_without_los() {
        let rp = RiceanParams::new(0.0, 0.0).unwrap();
        assert!((phase_pdf(1.0, &rp) - 1.0 / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn phase_density_normalized_and_peaked() {
        let rp = RiceanParams::new(3.786, 0.4).unwrap();
        let spec = QuadratureSpec::default();
        let total = integrate_1d(|t| phase_pdf(t, &rp), -PI, PI, &spec).unwrap().value;
        assert!((total - 1.0).abs() < 1e-8);
        assert!(phase_pdf(0.4, &rp) > phase_pdf(0.5, &rp));
        assert!((phase_pdf(0.4 + 0.3, &rp) - phase_pdf(0.4 - 0.3, &rp)).abs() < 1e-14);
    }

    #[test]
    fn los_magnitude_is_k() {
        let c = ScenarioConfig::low_vtd();
        for &t in &[0.0, 1e-3, 0.7] {
            assert!((stcf_los(0.02, 0.05, t, &c).norm() - 3.786).abs() < 1e-12);
        }
        let z = stcf_los(0.0, 0.0, 0.0, &c);
        assert!((z - Complex64::new(3.786, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn power_budget_at_origin() {
        for c in [ScenarioConfig::low_vtd(), ScenarioConfig::high_vtd()] {
            let comps = stcf_components(0.0, 0.0, 0.0, &c, &QuadratureSpec::default()).unwrap();
            assert!((comps.total() - 1.0).norm() < 1e-6);
            for (i, r) in Region::SINGLE.iter().enumerate() {
                assert!((comps.sb[i] - c.eta(*r)).norm() < 1e-6);
            }
            assert!((comps.db - c.eta_db).norm() < 1e-6);
        }
    }

    #[test]
    fn isotropic_db_is_bessel_product() {
        let c = isotropic_2d();
        for &t in &[1e-4, 7e-4, 2e-3] {
            let got = stcf_db(0.0, 0.0, t, &c).unwrap();
            let want = c.eta_db * bessel_j0(2.0 * PI * 570.0 * t).unwrap().powi(2);
            assert!((got - want).norm() < 1e-6, "tau = {t}: {got} vs {want}");
        }
    }

    #[test]
    fn discretization_matches_adaptive() {
        let c = ScenarioConfig::low_vtd();
        let d = RayDiscretization::new(&c, 0.0, 0.0, 256).unwrap();
        let grid = d.stcf_grid(0.0, 2e-4, 11);
        for (i, v) in grid.iter().enumerate() {
            let want = stcf_total(0.0, 0.0, i as f64 * 2e-4, &c).unwrap();
            assert!((v - want).norm() < 1e-6, "lag {i}: {v} vs {want}");
        }
    }

    #[test]
    fn b0_is_exact_and_spread_nonnegative() {
        for c in [ScenarioConfig::low_vtd(), ScenarioConfig::high_vtd()] {
            let b = b_params(&c).unwrap();
            assert_eq!(b.b0, 1.0 / (2.0 * (c.k_factor + 1.0)));
            assert!(b.b0 * b.b2 >= b.b1 * b.b1);
        }
        let mut c = ScenarioConfig::high_vtd();
        c.k_factor = 0.0;
        assert_eq!(b_params(&c).unwrap().b0, 0.5);
    }

    #[test]
    fn rayleigh_lcr_collapse() {
        let b = BParams { b0: 0.5, b1: 0.3, b2: 2.0e6 };
        for &r in &[0.2, 1.0, 1.7] {
            let want = 2.0 * r / PI.powf(1.5) * (b.b2 / b.b0 - b.b1 * b.b1 / (b.b0 * b.b0)).sqrt()
                * (-r * r).exp() * FRAC_PI_2;
            let got = lcr_from_b(r, 0.0, &b).unwrap();
            assert!((got - want).abs() < 1e-12 * want);
        }
    }

    #[test]
    fn afd_numerator_without_los() {
        let b = BParams { b0: 0.5, b1: 0.0, b2: 1e6 };
        let t = afd_from_b(1.0, 0.0, &b).unwrap();
        let l = lcr_from_b(1.0, 0.0, &b).unwrap();
        assert!((t * l - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn singular_chi_branch_is_continuous() {
        let b = BParams { b0: 0.2, b1: 100.0, b2: 50000.0 };
        let near = BParams { b2: 50000.0 * (1.0 + 1e-9), ..b };
        let a = lcr_from_b(0.8, 2.0, &b).unwrap();
        let z = lcr_from_b(0.8, 2.0, &near).unwrap();
        assert!((a - z).abs() < 1e-3 * a);
    }
}
