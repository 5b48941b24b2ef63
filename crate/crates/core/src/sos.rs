//! Sum-of-sinusoids simulation model: parameters, channel generation and
//! the closed-form statistics of the finite-ray model.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::curve::{ModelTag, StatCurve};
use crate::error::{Error, Result};
use crate::geometry::{path_lengths_at, ElementOffsets, RayAngles, Region, ScenarioConfig};
use crate::mev::{coupled_angle_sets, CoupledAngleSets};
use crate::numerics::{integrate_1d, j0_unchecked, QuadratureSpec, UniformGrid};
use crate::reference::{
    afd_from_b, db_rx_terms, db_tx_terms, lcr_from_b, los_doppler, psd_from,
    ray_doppler, single_bounce_terms, stcf_los, BParamConvention, BParams, RayDiscretization,
    RaySpectrum, RiceanParams, StcfComponents,
};

/// Samples between phasor re-anchors; chunk boundaries sit at fixed absolute
/// indices so results do not depend on how work is split.
const CHUNK: usize = 1024;
const LANES: usize = 8;

/// Complete parameter set of one simulator instance.
#[derive(Debug, Clone)]
pub struct SosParameterization {
    pub angle_sets: CoupledAngleSets,
    /// Random phases of the single-bounce rays, per region.
    pub sb_phases: [Vec<f64>; 3],
    /// Random phases of the double-bounce rays, `n1` major.
    pub db_phases: Vec<f64>,
    /// `G_SB1`, `G_SB2`, `G_SB3`, `G_DB`.
    pub gains: [f64; 4],
    pub rp: RiceanParams,
    pub seed: u64,
    pub scenario_id: String,
}

impl SosParameterization {
    pub fn phase_count(&self) -> usize {
        self.sb_phases.iter().map(Vec::len).sum::<usize>() + self.db_phases.len()
    }

    /// Ray counts `N1`, `N2`, `N3`, `N1 N2`.
    pub fn counts(&self) -> [usize; 4] {
        [
            self.sb_phases[0].len(),
            self.sb_phases[1].len(),
            self.sb_phases[2].len(),
            self.db_phases.len(),
        ]
    }

    /// `(gain, ray count)` of each component with nonzero power.
    fn gain_factors(&self) -> Vec<(f64, usize)> {
        self.gains.iter().zip(self.counts()).filter(|(g, _)| **g > 0.0).map(|(g, n)| (*g, n)).collect()
    }
}

fn region_stream(region: Region) -> u64 {
    match region {
        Region::Sb1 => 1,
        Region::Sb2 => 2,
        Region::Sb3 => 3,
        Region::Db => 4,
    }
}

/// Uniform phase in `[-pi, pi)` for ray `index` of `region`, drawn from its
/// own counter position so it does not depend on draw order.
pub fn ray_phase(seed: u64, region: Region, index: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(region_stream(region));
    rng.set_word_pos(2 * index as u128);
    2.0 * PI * rng.random::<f64>() - PI
}

/// Derives the simulator parameters. Angles do not depend on the seed.
pub fn parameterize(cfg: &ScenarioConfig, seed: u64) -> Result<SosParameterization> {
    cfg.validate()?;
    let angle_sets = coupled_angle_sets(cfg)?;
    let phases = |region: Region, n: usize| (0..n).map(|i| ray_phase(seed, region, i)).collect::<Vec<_>>();
    let kp1 = cfg.k_factor + 1.0;
    let (n1, n2, n3) = (cfg.n1 as f64, cfg.n2 as f64, cfg.n3 as f64);
    Ok(SosParameterization {
        sb_phases: [phases(Region::Sb1, cfg.n1), phases(Region::Sb2, cfg.n2), phases(Region::Sb3, cfg.n3)],
        db_phases: phases(Region::Db, cfg.n1 * cfg.n2),
        gains: [
            (cfg.eta_sb1 / (n1 * kp1)).sqrt(),
            (cfg.eta_sb2 / (n2 * kp1)).sqrt(),
            (cfg.eta_sb3 / (n3 * kp1)).sqrt(),
            (cfg.eta_db / (n1 * n2 * kp1)).sqrt(),
        ],
        rp: RiceanParams::from_config(cfg)?,
        angle_sets,
        seed,
        scenario_id: cfg.name.clone(),
    })
}

/// Channel coefficients of one or more element pairs on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// One row per element pair.
    pub samples: Vec<Vec<Complex64>>,
    /// 1-based `(p, q)` of each row.
    pub pairs: Vec<(usize, usize)>,
    pub time_grid: UniformGrid,
    pub seed: u64,
    pub scenario_id: String,
}

/// One complex sinusoid `amp e^{j(phase + 2 pi freq t)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wave {
    pub amp: f64,
    pub phase: f64,
    pub freq: f64,
}

fn carrier_phase(eps: f64, lambda: f64) -> f64 {
    -2.0 * PI * (eps / lambda).fract()
}

/// All sinusoids of element pair `(p, q)`, LoS first.
pub fn pair_waves(params: &SosParameterization, cfg: &ScenarioConfig, p: usize, q: usize) -> Result<Vec<Wave>> {
    let off = ElementOffsets::for_elements(p, q, cfg)?;
    let lambda = cfg.lambda();
    let sets = &params.angle_sets;
    let mut waves = Vec::with_capacity(params.phase_count() + 1);
    let los = path_lengths_at(&RayAngles::default(), Region::Sb1, off, cfg)?;
    waves.push(Wave { amp: params.rp.k0, phase: carrier_phase(los.eps_pq, lambda), freq: los_doppler(cfg) });
    for (i, region) in Region::SINGLE.iter().enumerate() {
        let g = params.gains[i];
        if g == 0.0 {
            continue;
        }
        for (ray, psi) in sets.single(*region).iter().zip(&params.sb_phases[i]) {
            let pl = path_lengths_at(&ray.angles, *region, off, cfg)?;
            waves.push(Wave {
                amp: g,
                phase: psi + carrier_phase(pl.eps_pn + pl.eps_nq, lambda),
                freq: ray_doppler(&ray.angles, cfg),
            });
        }
    }
    let g = params.gains[3];
    if g > 0.0 {
        for (ray, psi) in sets.db_rays().iter().zip(&params.db_phases) {
            let pl = path_lengths_at(ray, Region::Db, off, cfg)?;
            waves.push(Wave {
                amp: g,
                phase: psi + carrier_phase(pl.eps_pn + pl.eps_n1n2 + pl.eps_nq, lambda),
                freq: ray_doppler(ray, cfg),
            });
        }
    }
    Ok(waves)
}

/// Minimum sampling rate accepted by [`generate`].
pub fn min_sample_rate(cfg: &ScenarioConfig) -> f64 {
    8.0 * (cfg.f_t_max + cfg.f_r_max)
}

/// Sums the waves on `grid` into `out`.
pub fn synthesize(waves: &[Wave], grid: &UniformGrid, out: &mut [Complex64]) {
    let padded = waves.len().div_ceil(LANES) * LANES;
    let mut wr = vec![1.0; padded];
    let mut wi = vec![0.0; padded];
    for (k, w) in waves.iter().enumerate() {
        let (s, c) = (2.0 * PI * w.freq * grid.step).sin_cos();
        wr[k] = c;
        wi[k] = s;
    }
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(ci, block)| {
        let t0 = grid.start + (ci * CHUNK) as f64 * grid.step;
        let mut zr = vec![0.0; padded];
        let mut zi = vec![0.0; padded];
        for (k, w) in waves.iter().enumerate() {
            let (s, c) = (w.phase + 2.0 * PI * (w.freq * t0).fract()).sin_cos();
            zr[k] = w.amp * c;
            zi[k] = w.amp * s;
        }
        for slot in block.iter_mut() {
            let mut ar = [0.0; LANES];
            let mut ai = [0.0; LANES];
            for (((r8, i8), cr8), ci8) in zr
                .chunks_exact_mut(LANES)
                .zip(zi.chunks_exact_mut(LANES))
                .zip(wr.chunks_exact(LANES))
                .zip(wi.chunks_exact(LANES))
            {
                for l in 0..LANES {
                    ar[l] += r8[l];
                    ai[l] += i8[l];
                    let re = r8[l] * cr8[l] - i8[l] * ci8[l];
                    let im = r8[l] * ci8[l] + i8[l] * cr8[l];
                    r8[l] = re;
                    i8[l] = im;
                }
            }
            *slot = Complex64::new(ar.iter().sum(), ai.iter().sum());
        }
    });
}

/// Generates the channel of several element pairs.
pub fn generate_pairs(
    params: &SosParameterization,
    cfg: &ScenarioConfig,
    grid: &UniformGrid,
    pairs: &[(usize, usize)],
) -> Result<ChannelRealization> {
    let need = min_sample_rate(cfg);
    if 1.0 / grid.step < need * (1.0 - 1e-12) {
        return Err(Error::Contract(format!(
            "sampling rate {} Hz is below 8 (f_Tmax + f_Rmax) = {need} Hz",
            1.0 / grid.step
        )));
    }
    let mut samples = Vec::with_capacity(pairs.len());
    for &(p, q) in pairs {
        let waves = pair_waves(params, cfg, p, q)?;
        let mut row = vec![Complex64::new(0.0, 0.0); grid.count];
        synthesize(&waves, grid, &mut row);
        samples.push(row);
    }
    Ok(ChannelRealization {
        samples,
        pairs: pairs.to_vec(),
        time_grid: *grid,
        seed: params.seed,
        scenario_id: params.scenario_id.clone(),
    })
}

/// Generates the channel of element pair `(p, q)`.
pub fn generate(
    params: &SosParameterization,
    cfg: &ScenarioConfig,
    grid: &UniformGrid,
    p: usize,
    q: usize,
) -> Result<ChannelRealization> {
    generate_pairs(params, cfg, grid, &[(p, q)])
}

/// Finite-ray plane-wave expansion of the simulation model's ST CF.
pub fn sim_discretization(
    params: &SosParameterization,
    cfg: &ScenarioConfig,
    delta_t: f64,
    delta_r: f64,
) -> Result<RayDiscretization> {
    let sets = &params.angle_sets;
    let mut sb: [RaySpectrum; 3] = Default::default();
    for (i, region) in Region::SINGLE.iter().enumerate() {
        let rays = sets.single(*region);
        let w = 1.0 / rays.len() as f64;
        for r in rays {
            let a = r.angles;
            let (alpha, beta) = match region {
                Region::Sb1 => (a.alpha_t, a.beta_t),
                _ => (a.alpha_r, a.beta_r),
            };
            let (ph, nu) = single_bounce_terms(*region, alpha, beta, delta_t, delta_r, cfg)?;
            sb[i].rays.push((w, ph, nu));
        }
    }
    let side = |pairs: &[(f64, f64)], f: &dyn Fn(f64, f64) -> (f64, f64)| RaySpectrum {
        rays: pairs
            .iter()
            .map(|&(a, b)| {
                let (ph, nu) = f(a, b);
                (1.0 / pairs.len() as f64, ph, nu)
            })
            .collect(),
    };
    let db_tx = side(sets.db_tx(), &|a, b| db_tx_terms(a, b, delta_t, cfg));
    let db_rx = side(sets.db_rx(), &|a, b| db_rx_terms(a, b, delta_r, cfg));
    Ok(RayDiscretization::assemble(cfg, delta_t, delta_r, sb, db_tx, db_rx))
}

/// Raw ST CF components of the simulation model.
pub fn sim_stcf_components(
    delta_t: f64,
    delta_r: f64,
    tau: f64,
    params: &SosParameterization,
    cfg: &ScenarioConfig,
) -> Result<StcfComponents> {
    let d = sim_discretization(params, cfg, delta_t, delta_r)?;
    let l = cfg.lambda();
    let mut sb = [Complex64::new(0.0, 0.0); 3];
    for (i, slot) in sb.iter_mut().enumerate() {
        *slot = cfg.eta(Region::SINGLE[i]) * d.sb[i].eval(tau, l);
    }
    Ok(StcfComponents {
        los: stcf_los(delta_t, delta_r, tau, cfg),
        sb,
        db: cfg.eta_db * d.db_tx.eval(tau, l) * d.db_rx.eval(tau, l),
        k_factor: cfg.k_factor,
    })
}

/// Normalized ST CF of the simulation model.
pub fn sim_stcf(
    delta_t: f64,
    delta_r: f64,
    tau: f64,
    params: &SosParameterization,
    cfg: &ScenarioConfig,
) -> Result<Complex64> {
    Ok(sim_stcf_components(delta_t, delta_r, tau, params, cfg)?.total())
}

/// Doppler PSD of the simulation model from the transform of its ACF.
pub fn sim_doppler_psd(params: &SosParameterization, cfg: &ScenarioConfig, grid: &UniformGrid) -> Result<StatCurve> {
    let d = sim_discretization(params, cfg, 0.0, 0.0)?;
    psd_from(&d, grid, ModelTag::SosAnalytic, &cfg.name)
}

/// b-parameters of the simulation model from the discrete rays.
pub fn sim_b_params(params: &SosParameterization, cfg: &ScenarioConfig, conv: BParamConvention) -> BParams {
    let kp1 = cfg.k_factor + 1.0;
    let scale = 1.0 / (2.0 * kp1);
    let two_pi = 2.0 * PI;
    let nu0 = los_doppler(cfg);
    let printed = conv == BParamConvention::AsPrinted;
    let sets = &params.angle_sets;
    let (mut b1, mut b2) = (0.0, 0.0);
    for region in Region::SINGLE {
        let eta = cfg.eta(region);
        let rays = sets.single(region);
        if eta == 0.0 || rays.is_empty() {
            continue;
        }
        let (mut m1, mut m2) = (0.0, 0.0);
        for r in rays {
            let a = r.angles;
            let x = if printed {
                cfg.f_t_max * (a.alpha_t - cfg.gamma_t).cos() * a.beta_t.cos()
                    * cfg.f_r_max * (a.alpha_r - cfg.gamma_r).cos() * a.beta_r.cos()
            } else {
                ray_doppler(&a, cfg) - nu0
            };
            m1 += x;
            m2 += x * x;
        }
        let n = rays.len() as f64;
        b1 += eta * scale * two_pi * m1 / n;
        b2 += eta * scale * two_pi * two_pi * m2 / n;
    }
    if cfg.eta_db != 0.0 {
        let moments = |pairs: &[(f64, f64)], f: &dyn Fn(f64, f64) -> f64| {
            let n = pairs.len() as f64;
            pairs.iter().fold((0.0, 0.0), |(s1, s2), &(a, b)| {
                let x = f(a, b);
                (s1 + x / n, s2 + x * x / n)
            })
        };
        let (t1, t2) = moments(sets.db_tx(), &|a, b| db_tx_terms(a, b, 0.0, cfg).1);
        let (r1, r2) = moments(sets.db_rx(), &|a, b| db_rx_terms(a, b, 0.0, cfg).1);
        if printed {
            // The closed form for the discrete double-bounce term carries 1/(K+1).
            let eta = cfg.eta_db / kp1;
            b1 += eta * two_pi * t1 * r1;
            b2 += eta * two_pi * two_pi * t2 * r2;
        } else {
            let eta = cfg.eta_db * scale;
            b1 += eta * two_pi * (t1 + r1 - nu0);
            b2 += eta * two_pi * two_pi * (t2 + r2 + nu0 * nu0 + 2.0 * t1 * r1 - 2.0 * nu0 * (t1 + r1));
        }
    }
    BParams { b0: scale, b1, b2 }
}

pub fn sim_lcr(r: f64, params: &SosParameterization, cfg: &ScenarioConfig) -> Result<f64> {
    lcr_from_b(r, cfg.k_factor, &sim_b_params(params, cfg, BParamConvention::default()))
}

pub fn sim_afd(r: f64, params: &SosParameterization, cfg: &ScenarioConfig) -> Result<f64> {
    afd_from_b(r, cfg.k_factor, &sim_b_params(params, cfg, BParamConvention::default()))
}

/// Both b-parameter conventions for the reference and simulation models,
/// with the crossing rates they imply at a probe level.
#[derive(Debug, Clone, PartialEq)]
pub struct BParamDiagnostic {
    pub reference: BParams,
    pub reference_printed: BParams,
    pub sim: BParams,
    pub sim_printed: BParams,
    pub probe_level: f64,
    pub lcr: [f64; 4],
}

impl BParamDiagnostic {
    pub fn lines(&self) -> Vec<String> {
        let names = ["reference (moments)", "reference (printed)", "sos (moments)", "sos (printed)"];
        let bs = [self.reference, self.reference_printed, self.sim, self.sim_printed];
        let mut out = vec![format!(
            "double-bounce prefactor: 1/(2(K+1)) in the reference sum, 1/(K+1) in the discrete sum; LCR probe at r = {}",
            self.probe_level
        )];
        for ((n, b), l) in names.iter().zip(bs).zip(self.lcr) {
            out.push(format!("{n}: b0 = {:.10e}, b1 = {:.10e}, b2 = {:.10e}, L = {l:.6e} 1/s", b.b0, b.b1, b.b2));
        }
        out
    }
}

pub fn b_param_diagnostic(params: &SosParameterization, cfg: &ScenarioConfig, probe_level: f64) -> Result<BParamDiagnostic> {
    let spec = QuadratureSpec::default();
    let reference = crate::reference::b_params_with(cfg, BParamConvention::DopplerMoments, &spec)?;
    let reference_printed = crate::reference::b_params_with(cfg, BParamConvention::AsPrinted, &spec)?;
    let sim = sim_b_params(params, cfg, BParamConvention::DopplerMoments);
    let sim_printed = sim_b_params(params, cfg, BParamConvention::AsPrinted);
    let k = cfg.k_factor;
    let l = |b: &BParams| lcr_from_b(probe_level, k, b);
    Ok(BParamDiagnostic {
        lcr: [l(&reference)?, l(&reference_printed)?, l(&sim)?, l(&sim_printed)?],
        reference,
        reference_printed,
        sim,
        sim_printed,
        probe_level,
    })
}

/// `|J0(y)| <= min(1, sqrt(2 / (pi y)))`.
fn log_j0_envelope(y: f64) -> f64 {
    if y <= 2.0 / PI {
        0.0
    } else {
        0.5 * (2.0 / (PI * y)).ln()
    }
}

/// Product of Bessel factors `prod J0(2 pi g x)^n` of the diffuse rays.
fn ray_product(factors: &[(f64, usize)], x: f64) -> f64 {
    factors
        .iter()
        .map(|&(g, n)| j0_unchecked(2.0 * PI * g * x).powi(n as i32))
        .product()
}

/// Smallest `X` such that `scale * int_X^inf x B(x) dx < tol`, where `B` is
/// the envelope bound of the factors plus the extra unit-power factors with
/// coefficients `extra`.
fn truncation_point(factors: &[(f64, usize)], extra: &[f64], scale: f64, tol: f64) -> Result<f64> {
    let mut x = 0.25;
    while x < 1e6 {
        let mut log_b = 0.0;
        let mut decaying = 0usize;
        for &(g, n) in factors {
            let y = 2.0 * PI * g * x;
            if y > 2.0 / PI {
                decaying += n;
            }
            log_b += n as f64 * log_j0_envelope(y);
        }
        for &c in extra {
            let y = 2.0 * PI * c * x;
            if y > 2.0 / PI {
                decaying += 1;
            }
            log_b += log_j0_envelope(y);
        }
        if decaying > 4 {
            let tail = scale * x * x * log_b.exp() / (decaying as f64 / 2.0 - 2.0);
            if tail < tol {
                return Ok(x);
            }
        }
        x *= 1.1;
    }
    Err(Error::Convergence { estimate: Complex64::new(f64::NAN, 0.0), error_bound: f64::INFINITY })
}

const TAIL_TOL: f64 = 1e-10;

fn hankel_spec() -> QuadratureSpec {
    QuadratureSpec { max_subdivisions: 4000, ..QuadratureSpec::adaptive(1e-11, 1e-9) }
}

/// Amplitude density of the finite-ray model.
pub fn sim_amplitude_pdf(z: f64, params: &SosParameterization) -> Result<f64> {
    if !(z >= 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("amplitude must be finite and >= 0, got {z}")));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    let factors = params.gain_factors();
    let k0 = params.rp.k0;
    let extra: Vec<f64> = [z, k0].into_iter().filter(|c| *c > 0.0).collect();
    let scale = 4.0 * PI * PI * z;
    let x_max = truncation_point(&factors, &extra, scale, TAIL_TOL)?;
    let est = integrate_1d(
        |x| ray_product(&factors, x) * j0_unchecked(2.0 * PI * z * x) * j0_unchecked(2.0 * PI * k0 * x) * x,
        0.0,
        x_max,
        &hankel_spec(),
    )?;
    Ok(scale * est.value)
}

/// Phase density of the finite-ray model. The amplitude integral is cut at
/// `K0 + 8 sigma0`, beyond which the envelope mass is below 1e-13.
pub fn sim_phase_pdf(theta: f64, params: &SosParameterization) -> Result<f64> {
    if !theta.is_finite() {
        return Err(Error::Domain(format!("phase must be finite, got {theta}")));
    }
    let factors = params.gain_factors();
    let rp = &params.rp;
    let z_max = rp.k0 + 8.0 * rp.sigma0_sq.sqrt();
    let scale = 2.0 * PI * z_max * z_max / 2.0;
    let x_max = truncation_point(&factors, &[], scale, TAIL_TOL)?;
    let cd = (theta - rp.theta_k).cos();
    let spec = hankel_spec();
    let mut inner_err = None;
    let est = integrate_1d(
        |z| {
            let rho = (z * z + rp.k0 * rp.k0 - 2.0 * z * rp.k0 * cd).max(0.0).sqrt();
            match integrate_1d(
                |x| ray_product(&factors, x) * j0_unchecked(2.0 * PI * rho * x) * x,
                0.0,
                x_max,
                &spec,
            ) {
                Ok(e) => e.value * z,
                Err(e) => {
                    inner_err.get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        z_max,
        &QuadratureSpec::adaptive(1e-9, 1e-7),
    )?;
    if let Some(e) = inner_err {
        return Err(e);
    }
    Ok(2.0 * PI * est.value)
}

/// Probability mass of `[lo, hi]` under a density, by 8-point Gauss–Legendre.
pub fn bin_mass<F: FnMut(f64) -> Result<f64>>(mut pdf: F, lo: f64, hi: f64) -> Result<f64> {
    let rule = crate::numerics::gauss_legendre_nodes(8);
    let (m, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    let mut s = 0.0;
    for (x, w) in rule.0.iter().zip(&rule.1) {
        s += w * pdf(m + h * x)?;
    }
    Ok(s * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::stcf_total;

    fn small(mut cfg: ScenarioConfig, n: usize) -> ScenarioConfig {
        cfg.n1 = n;
        cfg.n2 = n;
        cfg.n3 = n;
        cfg
    }

    #[test]
    fn phase_and_gain_counts() {
        let cfg = ScenarioConfig::low_vtd();
        let p = parameterize(&cfg, 7).unwrap();
        assert_eq!(p.phase_count(), 40 + 40 + 40 + 1600);
        assert!((p.gains[0].powi(2) * 40.0 - cfg.eta_sb1 / (cfg.k_factor + 1.0)).abs() < 1e-15);
        let power: f64 = p.gains.iter().zip(p.counts()).map(|(g, n)| g * g * n as f64).sum();
        assert!((power + p.rp.k0 * p.rp.k0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_and_seed_dependent() {
        let cfg = small(ScenarioConfig::high_vtd(), 10);
        let a = parameterize(&cfg, 1).unwrap();
        let b = parameterize(&cfg, 1).unwrap();
        let c = parameterize(&cfg, 2).unwrap();
        assert_eq!(a.sb_phases, b.sb_phases);
        assert_eq!(a.db_phases, b.db_phases);
        assert_ne!(a.sb_phases, c.sb_phases);
        assert_eq!(a.angle_sets, c.angle_sets);
        assert!(a.db_phases.iter().all(|p| (-PI..PI).contains(p)));
    }

    #[test]
    fn pure_los_has_constant_envelope() {
        let mut cfg = small(ScenarioConfig::low_vtd(), 4);
        (cfg.eta_sb1, cfg.eta_sb2, cfg.eta_sb3, cfg.eta_db) = (0.0, 0.0, 0.0, 1.0);
        let mut p = parameterize(&cfg, 3).unwrap();
        p.gains = [0.0; 4];
        let grid = UniformGrid::new(0.0, 1.0 / min_sample_rate(&cfg), 3000).unwrap();
        let h = generate(&p, &cfg, &grid, 1, 1).unwrap();
        for v in &h.samples[0] {
            assert!((v.norm() - p.rp.k0).abs() < 1e-12);
        }
    }

    #[test]
    fn undersampling_is_rejected() {
        let cfg = small(ScenarioConfig::low_vtd(), 4);
        let p = parameterize(&cfg, 3).unwrap();
        let grid = UniformGrid::new(0.0, 1.0 / 1000.0, 100).unwrap();
        assert!(matches!(generate(&p, &cfg, &grid, 1, 1), Err(Error::Contract(_))));
    }

    #[test]
    fn synthesis_matches_direct_sum() {
        let cfg = small(ScenarioConfig::high_vtd(), 6);
        let p = parameterize(&cfg, 11).unwrap();
        let grid = UniformGrid::new(0.3, 1.0 / 20000.0, 2500).unwrap();
        let h = generate(&p, &cfg, &grid, 1, 2).unwrap();
        let waves = pair_waves(&p, &cfg, 1, 2).unwrap();
        for &j in &[0usize, 1, 1023, 1024, 2499] {
            let t = grid.value(j);
            let direct: Complex64 =
                waves.iter().map(|w| w.amp * Complex64::from_polar(1.0, w.phase + 2.0 * PI * w.freq * t)).sum();
            assert!((h.samples[0][j] - direct).norm() < 1e-11, "sample {j}");
        }
    }

    #[test]
    fn sim_stcf_normalized() {
        let cfg = ScenarioConfig::low_vtd();
        let p = parameterize(&cfg, 5).unwrap();
        assert!((sim_stcf(0.0, 0.0, 0.0, &p, &cfg).unwrap() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn many_rays_approach_reference() {
        let cfg = small(ScenarioConfig::low_vtd(), 1000);
        let p = parameterize(&small(cfg.clone(), 1000), 5).unwrap();
        for &t in &[2e-4, 1e-3, 3e-3] {
            let s = sim_stcf(0.0, 0.0, t, &p, &cfg).unwrap();
            let r = stcf_total(0.0, 0.0, t, &cfg).unwrap();
            assert!((s - r).norm() < 0.01, "tau = {t}: {s} vs {r}");
        }
    }

    #[test]
    fn b0_hat_is_exact() {
        let cfg = ScenarioConfig::high_vtd();
        let p = parameterize(&cfg, 5).unwrap();
        let b = sim_b_params(&p, &cfg, BParamConvention::default());
        assert_eq!(b.b0, 1.0 / (2.0 * (cfg.k_factor + 1.0)));
    }

    #[test]
    fn amplitude_density_integrates_to_one() {
        let cfg = small(ScenarioConfig::high_vtd(), 10);
        let p = parameterize(&cfg, 5).unwrap();
        let mut total = 0.0;
        let edges: Vec<f64> = (0..=40).map(|i| i as f64 * 0.1).collect();
        for w in edges.windows(2) {
            total += bin_mass(|z| sim_amplitude_pdf(z, &p), w[0], w[1]).unwrap();
        }
        assert!((total - 1.0).abs() < 1e-3, "{total}");
    }

    #[test]
    fn single_ray_does_not_converge() {
        let mut cfg = small(ScenarioConfig::high_vtd(), 1);
        cfg.k_factor = 0.0;
        (cfg.eta_sb1, cfg.eta_sb2, cfg.eta_sb3, cfg.eta_db) = (1.0, 0.0, 0.0, 0.0);
        let p = parameterize(&cfg, 5).unwrap();
        assert!(matches!(sim_amplitude_pdf(0.5, &p), Err(Error::Convergence { .. })));
    }
}
