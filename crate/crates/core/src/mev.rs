//! Method of equal volume: deterministic discrete angle sets.
//!
//! The m-th of `n` rays takes the `(m - 1/4) / n` quantile of the azimuth
//! marginal. The elevations are the same quantiles of the elevation marginal,
//! assigned to the azimuths either by shared index or by matching the
//! conditional elevation law (see [`MevPairing`]).

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{couple, wrap_angle, CoupledRay, RayAngles, Region, ScenarioConfig};
use crate::vmf::{pdf_unchecked, vmf_marginal_icdf, Marginal, VmfParams};

/// How elevation quantiles are paired with azimuth quantiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MevPairing {
    /// Elevation quantiles are handed out in the order of per-azimuth targets
    /// drawn from the conditional elevation law at Hammersley levels, so the
    /// pairs follow the joint density while both marginals stay equal-mass.
    #[default]
    Conditional,
    /// The m-th azimuth quantile goes with the m-th elevation quantile.
    SharedIndex,
}

impl MevPairing {
    pub fn as_str(&self) -> &'static str {
        match self {
            MevPairing::Conditional => "conditional",
            MevPairing::SharedIndex => "shared-index",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "conditional" => Some(MevPairing::Conditional),
            "shared-index" => Some(MevPairing::SharedIndex),
            _ => None,
        }
    }
}

/// Base-2 radical inverse of `m`.
fn van_der_corput(mut m: usize) -> f64 {
    let (mut v, mut scale) = (0.0, 0.5);
    while m > 0 {
        if m & 1 == 1 {
            v += scale;
        }
        m >>= 1;
        scale *= 0.5;
    }
    v
}

/// Conditional elevation quantile at level `v` given azimuth `alpha`, from a
/// fine trapezoid table of the joint density along the meridian.
fn conditional_elevation(alpha: f64, v: f64, p: &VmfParams) -> f64 {
    const CELLS: usize = 2048;
    let h = PI / CELLS as f64;
    let beta = |i: usize| -FRAC_PI_2 + i as f64 * h;
    let dens: Vec<f64> = (0..=CELLS).map(|i| pdf_unchecked(alpha, beta(i), p)).collect();
    let mut cum = vec![0.0; CELLS + 1];
    for i in 0..CELLS {
        cum[i + 1] = cum[i] + 0.5 * h * (dens[i] + dens[i + 1]);
    }
    let target = v * cum[CELLS];
    let i = cum.partition_point(|&c| c < target).clamp(1, CELLS);
    let (c0, c1) = (cum[i - 1], cum[i]);
    let t = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.5 };
    beta(i - 1) + t * h
}

/// Scatterer distribution an angle set was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScattererRegion {
    TxSphere,
    RxSphere,
    Cylinder,
}

impl ScattererRegion {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScattererRegion::TxSphere => "tx_sphere",
            ScattererRegion::RxSphere => "rx_sphere",
            ScattererRegion::Cylinder => "cylinder",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleSet {
    pub region: ScattererRegion,
    pub n: usize,
    /// `(alpha, beta)` pairs in quantile order.
    pub pairs: Vec<(f64, f64)>,
    pub source_params: VmfParams,
}

/// Quantile level of the m-th (1-based) of `n` angles.
pub fn quantile_level(m: usize, n: usize) -> f64 {
    (m as f64 - 0.25) / n as f64
}

fn angle_set(
    region: ScattererRegion,
    p: &VmfParams,
    n: usize,
    planar: bool,
    pairing: MevPairing,
) -> Result<AngleSet> {
    if n == 0 {
        return Err(Error::Domain("angle set size must be at least 1".into()));
    }
    p.validate()?;
    let azimuth = if planar { Marginal::PlanarAzimuth } else { Marginal::Azimuth };
    let levels: Vec<f64> = (1..=n).map(|m| quantile_level(m, n)).collect();
    let alphas = levels
        .iter()
        .map(|&u| vmf_marginal_icdf(azimuth, u, p))
        .collect::<Result<Vec<_>>>()?;
    let mut betas = vec![0.0; n];
    if !planar {
        let quantiles = levels
            .iter()
            .map(|&u| vmf_marginal_icdf(Marginal::Elevation, u, p))
            .collect::<Result<Vec<_>>>()?;
        match pairing {
            MevPairing::SharedIndex => betas = quantiles,
            MevPairing::Conditional => {
                let targets: Vec<f64> = alphas
                    .iter()
                    .enumerate()
                    .map(|(i, &a)| conditional_elevation(a, van_der_corput(i + 1), p))
                    .collect();
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&i, &j| targets[i].total_cmp(&targets[j]).then(i.cmp(&j)));
                for (rank, &i) in order.iter().enumerate() {
                    betas[i] = quantiles[rank];
                }
            }
        }
    }
    let pairs = alphas.iter().zip(betas).map(|(&a, b)| (wrap_angle(a), b)).collect();
    Ok(AngleSet { region, n, pairs, source_params: *p })
}

/// Angle set of `n` rays for one scatterer distribution.
pub fn mev_angles(p: &VmfParams, n: usize) -> Result<AngleSet> {
    mev_angles_with(p, n, MevPairing::default())
}

pub fn mev_angles_with(p: &VmfParams, n: usize, pairing: MevPairing) -> Result<AngleSet> {
    angle_set(ScattererRegion::TxSphere, p, n, false, pairing)
}

/// Angle set for the planar model: von Mises azimuths, zero elevations.
pub fn mev_angles_planar(p: &VmfParams, n: usize) -> Result<AngleSet> {
    angle_set(ScattererRegion::TxSphere, p, n, true, MevPairing::default())
}

fn region_set(region: ScattererRegion, p: &VmfParams, n: usize, cfg: &ScenarioConfig) -> Result<AngleSet> {
    angle_set(region, p, n, cfg.mode_2d, cfg.mev_pairing)
}

/// Angle sets of every propagation component, with coupled companions.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledAngleSets {
    pub tx_sphere: AngleSet,
    pub rx_sphere: AngleSet,
    pub cylinder: AngleSet,
    pub sb1: Vec<CoupledRay>,
    pub sb2: Vec<CoupledRay>,
    pub sb3: Vec<CoupledRay>,
}

impl CoupledAngleSets {
    pub fn single(&self, region: Region) -> &[CoupledRay] {
        match region {
            Region::Sb1 => &self.sb1,
            Region::Sb2 => &self.sb2,
            Region::Sb3 => &self.sb3,
            Region::Db => &[],
        }
    }

    /// Departure pairs of the double-bounce rays (the Tx-sphere set).
    pub fn db_tx(&self) -> &[(f64, f64)] {
        &self.tx_sphere.pairs
    }

    /// Arrival pairs of the double-bounce rays (the Rx-sphere set).
    pub fn db_rx(&self) -> &[(f64, f64)] {
        &self.rx_sphere.pairs
    }

    /// All `N1 * N2` double-bounce rays, `n1` major.
    pub fn db_rays(&self) -> Vec<RayAngles> {
        let mut out = Vec::with_capacity(self.db_tx().len() * self.db_rx().len());
        for &(alpha_t, beta_t) in self.db_tx() {
            for &(alpha_r, beta_r) in self.db_rx() {
                out.push(RayAngles { alpha_t, beta_t, alpha_r, beta_r });
            }
        }
        out
    }

    /// CSV dump with columns
    /// `region,index,alpha_rad,beta_rad,alpha_coupled_rad,beta_coupled_rad`.
    /// Double-bounce sets have no coupled companion and leave those columns empty.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("region,index,alpha_rad,beta_rad,alpha_coupled_rad,beta_coupled_rad\n");
        for (region, rays) in [(Region::Sb1, &self.sb1), (Region::Sb2, &self.sb2), (Region::Sb3, &self.sb3)] {
            for (i, r) in rays.iter().enumerate() {
                let a = r.angles;
                let (free, coupled) = match region {
                    Region::Sb1 => ((a.alpha_t, a.beta_t), (a.alpha_r, a.beta_r)),
                    _ => ((a.alpha_r, a.beta_r), (a.alpha_t, a.beta_t)),
                };
                let _ = writeln!(
                    s,
                    "{},{},{:.16e},{:.16e},{:.16e},{:.16e}",
                    region.as_str(),
                    i + 1,
                    free.0,
                    free.1,
                    coupled.0,
                    coupled.1
                );
            }
        }
        for (name, pairs) in [("db_tx", self.db_tx()), ("db_rx", self.db_rx())] {
            for (i, (a, b)) in pairs.iter().enumerate() {
                let _ = writeln!(s, "{name},{},{a:.16e},{b:.16e},,", i + 1);
            }
        }
        s
    }
}

/// Computes the three angle sets of a scenario and couples the single-bounce
/// rays. The double-bounce component reuses the Tx-sphere departures and the
/// Rx-sphere arrivals, indexed independently.
pub fn coupled_angle_sets(cfg: &ScenarioConfig) -> Result<CoupledAngleSets> {
    let tx = region_set(ScattererRegion::TxSphere, &cfg.vmf_tx_sphere, cfg.n1, cfg)?;
    let rx = region_set(ScattererRegion::RxSphere, &cfg.vmf_rx_sphere, cfg.n2, cfg)?;
    let cyl = region_set(ScattererRegion::Cylinder, &cfg.vmf_cylinder, cfg.n3, cfg)?;
    let coupled = |region: Region, set: &AngleSet| {
        set.pairs.iter().map(|&(a, b)| couple(region, a, b, cfg)).collect::<Result<Vec<_>>>()
    };
    Ok(CoupledAngleSets {
        sb1: coupled(Region::Sb1, &tx)?,
        sb2: coupled(Region::Sb2, &rx)?,
        sb3: coupled(Region::Sb3, &cyl)?,
        tx_sphere: tx,
        rx_sphere: rx,
        cylinder: cyl,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vmf::vmf_marginal_cdf;
    use std::f64::consts::PI;

    #[test]
    fn single_isotropic_ray() {
        let s = mev_angles(&VmfParams::new(0.0, 0.0, 0.0).unwrap(), 1).unwrap();
        assert!((s.pairs[0].0 - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn two_isotropic_rays() {
        let s = mev_angles(&VmfParams::new(0.0, 0.0, 0.0).unwrap(), 2).unwrap();
        assert!((s.pairs[0].0 - (-PI + 0.375 * 2.0 * PI)).abs() < 1e-12);
        assert!((s.pairs[1].0 - (-PI + 0.875 * 2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn zero_rays_rejected() {
        assert!(matches!(mev_angles(&VmfParams::new(0.0, 0.0, 1.0).unwrap(), 0), Err(Error::Domain(_))));
    }

    #[test]
    fn equal_mass() {
        let p = VmfParams::from_degrees(21.7, 6.7, 9.6);
        for pairing in [MevPairing::Conditional, MevPairing::SharedIndex] {
            let s = mev_angles_with(&p, 40, pairing).unwrap();
            let mut betas: Vec<f64> = s.pairs.iter().map(|q| q.1).collect();
            betas.sort_by(f64::total_cmp);
            for (w, b) in s.pairs.windows(2).zip(betas.windows(2)) {
                let da = vmf_marginal_cdf(Marginal::Azimuth, w[1].0, &p).unwrap()
                    - vmf_marginal_cdf(Marginal::Azimuth, w[0].0, &p).unwrap();
                let db = vmf_marginal_cdf(Marginal::Elevation, b[1], &p).unwrap()
                    - vmf_marginal_cdf(Marginal::Elevation, b[0], &p).unwrap();
                assert!((da - 1.0 / 40.0).abs() < 1e-7);
                assert!((db - 1.0 / 40.0).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn sb1_arrivals_hug_the_tx_direction() {
        let cfg = ScenarioConfig::low_vtd();
        let sets = coupled_angle_sets(&cfg).unwrap();
        let bound = cfg.r_t / cfg.d + 1e-12;
        for r in &sets.sb1 {
            assert!(wrap_angle(r.angles.alpha_r - PI).abs() <= bound);
        }
        assert_eq!(sets.db_rays().len(), 1600);
    }

    #[test]
    fn planar_sets_have_no_elevation() {
        let sets = coupled_angle_sets(&ScenarioConfig::high_vtd().to_2d()).unwrap();
        for r in sets.sb1.iter().chain(&sets.sb2).chain(&sets.sb3) {
            assert_eq!((r.angles.beta_t, r.angles.beta_r), (0.0, 0.0));
        }
        assert!(sets.db_tx().iter().chain(sets.db_rx()).all(|p| p.1 == 0.0));
    }

    #[test]
    fn csv_has_one_row_per_ray() {
        let sets = coupled_angle_sets(&ScenarioConfig::low_vtd()).unwrap();
        assert_eq!(sets.to_csv().lines().count(), 1 + 3 * 40 + 2 * 40);
    }
}
