//! Scenario parameters, scatterer geometry and path lengths.
//!
//! The Tx sphere is centered at the origin and the Rx sphere at `(D, 0, 0)`.
//! The elliptic cylinder has its foci at the two sphere centers, so the half
//! focal distance is always `D / 2`. Azimuths are measured in the x-y plane
//! and elevations from it.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mev::MevPairing;
use crate::vmf::VmfParams;

pub const C_LIGHT: f64 = 2.997_924_58e8;

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y >= PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Full parameter set of one propagation scenario. Angles are in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    /// Distance between the Tx and Rx sphere centers.
    pub d: f64,
    pub r_t: f64,
    pub r_r: f64,
    /// Semi-major axis of the elliptic cylinder.
    pub a: f64,
    pub delta_t: f64,
    pub delta_r: f64,
    pub theta_t: f64,
    pub theta_r: f64,
    pub phi_t: f64,
    pub phi_r: f64,
    pub gamma_t: f64,
    pub gamma_r: f64,
    pub f_t_max: f64,
    pub f_r_max: f64,
    pub f_c: f64,
    pub m_t: usize,
    pub m_r: usize,
    /// Ricean factor.
    pub k_factor: f64,
    pub eta_sb1: f64,
    pub eta_sb2: f64,
    pub eta_sb3: f64,
    pub eta_db: f64,
    pub vmf_tx_sphere: VmfParams,
    pub vmf_rx_sphere: VmfParams,
    pub vmf_cylinder: VmfParams,
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    /// Forces every elevation angle to zero.
    pub mode_2d: bool,
    /// Pairing of azimuth and elevation quantiles in the discrete angle sets.
    pub mev_pairing: MevPairing,
}

fn deg(x: f64) -> f64 {
    x.to_radians()
}

impl ScenarioConfig {
    fn street(name: &str) -> Self {
        let f_c = 5.9e9;
        let lambda = C_LIGHT / f_c;
        Self {
            name: name.to_string(),
            d: 300.0,
            r_t: 15.0,
            r_r: 15.0,
            a: 180.0,
            delta_t: 0.5 * lambda,
            delta_r: 0.5 * lambda,
            theta_t: deg(45.0),
            theta_r: deg(45.0),
            phi_t: deg(45.0),
            phi_r: deg(45.0),
            gamma_t: 0.0,
            gamma_r: 0.0,
            f_t_max: 570.0,
            f_r_max: 570.0,
            f_c,
            m_t: 2,
            m_r: 2,
            k_factor: 0.0,
            eta_sb1: 0.0,
            eta_sb2: 0.0,
            eta_sb3: 0.0,
            eta_db: 0.0,
            vmf_tx_sphere: VmfParams::from_degrees(21.7, 6.7, 0.0),
            vmf_rx_sphere: VmfParams::from_degrees(147.8, 17.2, 0.0),
            vmf_cylinder: VmfParams::from_degrees(171.6, 31.6, 0.0),
            n1: 40,
            n2: 40,
            n3: 40,
            mode_2d: false,
            mev_pairing: MevPairing::default(),
        }
    }

    /// Low vehicular traffic density street scenario.
    pub fn low_vtd() -> Self {
        let mut c = Self::street("lowvtd");
        c.k_factor = 3.786;
        (c.eta_sb1, c.eta_sb2, c.eta_sb3, c.eta_db) = (0.335, 0.203, 0.411, 0.051);
        c.vmf_tx_sphere.k = 9.6;
        c.vmf_rx_sphere.k = 3.6;
        c.vmf_cylinder.k = 11.5;
        c
    }

    /// High vehicular traffic density street scenario.
    pub fn high_vtd() -> Self {
        let mut c = Self::street("highvtd");
        c.k_factor = 0.156;
        (c.eta_sb1, c.eta_sb2, c.eta_sb3, c.eta_db) = (0.126, 0.126, 0.063, 0.685);
        c.vmf_tx_sphere.k = 0.6;
        c.vmf_rx_sphere.k = 1.3;
        c.vmf_cylinder.k = 11.5;
        c
    }

    /// Half focal distance of the elliptic cylinder.
    pub fn f_ell(&self) -> f64 {
        0.5 * self.d
    }

    /// Semi-minor axis of the elliptic cylinder.
    pub fn b(&self) -> f64 {
        let f = self.f_ell();
        (self.a * self.a - f * f).sqrt()
    }

    pub fn lambda(&self) -> f64 {
        C_LIGHT / self.f_c
    }

    pub fn eta(&self, region: Region) -> f64 {
        match region {
            Region::Sb1 => self.eta_sb1,
            Region::Sb2 => self.eta_sb2,
            Region::Sb3 => self.eta_sb3,
            Region::Db => self.eta_db,
        }
    }

    /// Scatterer distribution of the free angle pair of a single-bounce region.
    pub fn vmf(&self, region: Region) -> VmfParams {
        match region {
            Region::Sb1 | Region::Db => self.vmf_tx_sphere,
            Region::Sb2 => self.vmf_rx_sphere,
            Region::Sb3 => self.vmf_cylinder,
        }
    }

    /// The same scenario with every elevation forced to zero.
    pub fn to_2d(&self) -> Self {
        let mut c = self.clone();
        c.mode_2d = true;
        c
    }

    /// Checks every scenario invariant. Returns soft warnings on success.
    pub fn validate(&self) -> Result<Vec<String>> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let positive = [
            ("D", self.d),
            ("R_T", self.r_t),
            ("R_R", self.r_r),
            ("a", self.a),
            ("f_c", self.f_c),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        let finite = [
            ("delta_T", self.delta_t),
            ("delta_R", self.delta_r),
            ("theta_T", self.theta_t),
            ("theta_R", self.theta_r),
            ("phi_T", self.phi_t),
            ("phi_R", self.phi_r),
            ("gamma_T", self.gamma_t),
            ("gamma_R", self.gamma_r),
            ("f_Tmax", self.f_t_max),
            ("f_Rmax", self.f_r_max),
            ("K", self.k_factor),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return bad(format!("{name} must be finite, got {v}"));
            }
        }
        if self.delta_t < 0.0 || self.delta_r < 0.0 {
            return bad("antenna spacings must be nonnegative".into());
        }
        if self.f_t_max < 0.0 || self.f_r_max < 0.0 {
            return bad("maximum Doppler frequencies must be nonnegative".into());
        }
        if self.k_factor < 0.0 {
            return bad(format!("Ricean factor K must be >= 0, got {}", self.k_factor));
        }
        let f = self.f_ell();
        if self.a <= f {
            return bad(format!(
                "semi-major axis a = {} must exceed the half focal distance D/2 = {f}",
                self.a
            ));
        }
        let r_max = self.r_t.max(self.r_r);
        if self.d <= r_max {
            return bad(format!("D = {} must exceed max(R_T, R_R) = {r_max}", self.d));
        }
        let clearance = self.r_t.min(self.r_r).min(self.a - f);
        let spacing = self.delta_t.max(self.delta_r);
        if clearance <= spacing {
            return bad(format!(
                "min(R_T, R_R, a - f) = {clearance} must exceed max(delta_T, delta_R) = {spacing}"
            ));
        }
        let etas = [self.eta_sb1, self.eta_sb2, self.eta_sb3, self.eta_db];
        if etas.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return bad(format!("power fractions must lie in [0, 1], got {etas:?}"));
        }
        let sum: f64 = etas.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return bad(format!(
                "power fractions must satisfy eta_SB1 + eta_SB2 + eta_SB3 + eta_DB = 1, got {sum}"
            ));
        }
        for (name, p) in [
            ("vmf_tx_sphere", self.vmf_tx_sphere),
            ("vmf_rx_sphere", self.vmf_rx_sphere),
            ("vmf_cylinder", self.vmf_cylinder),
        ] {
            p.validate().map_err(|e| Error::InvalidConfig(format!("{name}: {e}")))?;
        }
        if self.m_t == 0 || self.m_r == 0 {
            return bad("antenna counts must be at least 1".into());
        }
        if self.n1 == 0 || self.n2 == 0 || self.n3 == 0 {
            return bad("scatterer counts must be at least 1".into());
        }

        let mut warnings = Vec::new();
        if self.d < 10.0 * r_max {
            warnings.push(format!(
                "D = {} is less than 10 max(R_T, R_R); the far-field approximations degrade",
                self.d
            ));
        }
        if clearance < 10.0 * spacing {
            warnings.push(format!(
                "min(R_T, R_R, a - f) / max(delta_T, delta_R) = {:.3} is below 10",
                clearance / spacing
            ));
        }
        Ok(warnings)
    }
}

/// Propagation component a ray belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// Single bounce off the Tx sphere.
    Sb1,
    /// Single bounce off the Rx sphere.
    Sb2,
    /// Single bounce off the elliptic cylinder.
    Sb3,
    /// Double bounce off both spheres.
    Db,
}

impl Region {
    pub const SINGLE: [Region; 3] = [Region::Sb1, Region::Sb2, Region::Sb3];

    pub fn as_str(&self) -> &'static str {
        match self {
            Region::Sb1 => "sb1",
            Region::Sb2 => "sb2",
            Region::Sb3 => "sb3",
            Region::Db => "db",
        }
    }
}

/// Departure and arrival angles of one ray.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RayAngles {
    pub alpha_t: f64,
    pub beta_t: f64,
    pub alpha_r: f64,
    pub beta_r: f64,
}

/// A single-bounce ray with the auxiliary distances of its coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledRay {
    pub angles: RayAngles,
    /// `Q_n1`, `Q_n2` or `Q_n3`.
    pub q: f64,
    /// `xi_n1`, `xi_n2` or `xi_T^(n3)`.
    pub xi: f64,
    /// `xi_R^(n3)`; zero for the sphere regions.
    pub xi_r: f64,
}

/// Signed element offsets along the Tx and Rx arrays.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ElementOffsets {
    pub s_t: f64,
    pub s_r: f64,
}

impl ElementOffsets {
    /// Offsets of Tx element `p` and Rx element `q` (1-based) of uniform
    /// linear arrays centered on the sphere centers: element `u` of `M` sits
    /// at `(M - 2u + 1) * delta / 2`.
    pub fn for_elements(p: usize, q: usize, cfg: &ScenarioConfig) -> Result<Self> {
        if p == 0 || p > cfg.m_t || q == 0 || q > cfg.m_r {
            return Err(Error::Contract(format!(
                "antenna indices ({p}, {q}) outside 1..={} x 1..={}",
                cfg.m_t, cfg.m_r
            )));
        }
        let k = |u: usize, m: usize| (m as f64) - 2.0 * (u as f64) + 1.0;
        Ok(Self {
            s_t: k(p, cfg.m_t) * cfg.delta_t / 2.0,
            s_r: k(q, cfg.m_r) * cfg.delta_r / 2.0,
        })
    }
}

fn flatten(beta: f64, cfg: &ScenarioConfig) -> f64 {
    if cfg.mode_2d {
        0.0
    } else {
        beta
    }
}

/// Couples a Tx-sphere scatterer seen at `(alpha_t, beta_t)` from the Tx to
/// its arrival angles at the Rx.
pub fn couple_sb1(alpha_t: f64, beta_t: f64, cfg: &ScenarioConfig) -> CoupledRay {
    let beta_t = flatten(beta_t, cfg);
    let (sb, cb) = beta_t.sin_cos();
    let q = cfg.d - cfg.r_t * cb * alpha_t.cos();
    let xi = q.hypot(cfg.r_t * sb);
    let alpha_r = wrap_angle(PI - cfg.r_t / cfg.d * alpha_t.sin());
    let beta_r = flatten((q / xi).clamp(-1.0, 1.0).acos().copysign(beta_t), cfg);
    CoupledRay {
        angles: RayAngles { alpha_t: wrap_angle(alpha_t), beta_t, alpha_r, beta_r },
        q,
        xi,
        xi_r: 0.0,
    }
}

/// Couples an Rx-sphere scatterer seen at `(alpha_r, beta_r)` from the Rx to
/// its departure angles at the Tx.
pub fn couple_sb2(alpha_r: f64, beta_r: f64, cfg: &ScenarioConfig) -> CoupledRay {
    let beta_r = flatten(beta_r, cfg);
    let (sb, cb) = beta_r.sin_cos();
    let q = cfg.d + cfg.r_r * cb * alpha_r.cos();
    let xi = q.hypot(cfg.r_r * sb);
    let alpha_t = wrap_angle(cfg.r_r / cfg.d * alpha_r.sin());
    let beta_t = flatten((q / xi).clamp(-1.0, 1.0).acos().copysign(beta_r), cfg);
    CoupledRay {
        angles: RayAngles { alpha_t, beta_t, alpha_r: wrap_angle(alpha_r), beta_r },
        q,
        xi,
        xi_r: 0.0,
    }
}

/// Couples a cylinder scatterer seen at `(alpha_r, beta_r)` from the Rx to
/// its departure angles at the Tx.
pub fn couple_sb3(alpha_r: f64, beta_r: f64, cfg: &ScenarioConfig) -> Result<CoupledRay> {
    let beta_r = flatten(beta_r, cfg);
    let cb = beta_r.cos();
    if cb.abs() < 1e-12 {
        return Err(Error::SingularGeometry(format!(
            "cylinder ray with elevation {beta_r} rad is parallel to the cylinder axis"
        )));
    }
    Ok(couple_sb3_unchecked(alpha_r, beta_r, cfg))
}

pub(crate) fn couple_sb3_unchecked(alpha_r: f64, beta_r: f64, cfg: &ScenarioConfig) -> CoupledRay {
    let beta_r = flatten(beta_r, cfg);
    let (sb, cb) = beta_r.sin_cos();
    let a = cfg.a;
    let f = cfg.f_ell();
    let b = cfg.b();
    let ca = alpha_r.cos();
    let num = a * a + f * f + 2.0 * a * f * ca;
    let q = num / (a + f * ca);
    let xi_r = (2.0 * a - q) / cb;
    let xi_t = q.hypot(xi_r * sb);
    let alpha_t = (b * b * alpha_r.sin() / num).clamp(-1.0, 1.0).asin();
    let beta_t = flatten((q / xi_t).clamp(-1.0, 1.0).acos().copysign(beta_r), cfg);
    CoupledRay {
        angles: RayAngles { alpha_t, beta_t, alpha_r: wrap_angle(alpha_r), beta_r },
        q,
        xi: xi_t,
        xi_r,
    }
}

/// Couples the free angle pair of a single-bounce region.
pub fn couple(region: Region, alpha: f64, beta: f64, cfg: &ScenarioConfig) -> Result<CoupledRay> {
    match region {
        Region::Sb1 => Ok(couple_sb1(alpha, beta, cfg)),
        Region::Sb2 => Ok(couple_sb2(alpha, beta, cfg)),
        Region::Sb3 => couple_sb3(alpha, beta, cfg),
        Region::Db => Err(Error::Contract(
            "double-bounce rays have independent departure and arrival angles".into(),
        )),
    }
}

/// Path lengths of one ray. Fields that do not apply to the ray's region are zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PathLengths {
    pub eps_pq: f64,
    /// Tx element to the (first) scatterer.
    pub eps_pn: f64,
    /// (Last) scatterer to the Rx element.
    pub eps_nq: f64,
    pub eps_n1n2: f64,
    pub xi: f64,
    pub xi_n1: f64,
    pub xi_n2: f64,
    pub xi_t_n3: f64,
    pub xi_r_n3: f64,
    pub q_n1: f64,
    pub q_n2: f64,
    pub q_n3: f64,
}

/// Direct-path length between elements at signed offsets `s_t`, `s_r`.
pub fn eps_los(off: ElementOffsets, cfg: &ScenarioConfig) -> (f64, f64) {
    let xi = cfg.d - off.s_t * cfg.phi_t.cos() * cfg.theta_t.cos();
    let eps = xi
        - off.s_r / xi
            * (off.s_t * cfg.phi_t.sin() * cfg.phi_r.sin() - xi * cfg.phi_r.cos() * cfg.theta_r.cos());
    (eps, xi)
}

/// Projection of a unit direction `(alpha, beta)` onto an array axis with
/// orientation `theta` and elevation `phi`.
pub(crate) fn array_projection(alpha: f64, beta: f64, theta: f64, phi: f64) -> f64 {
    beta.sin() * phi.sin() + beta.cos() * phi.cos() * (theta - alpha).cos()
}

/// Path lengths for the element pair at the given offsets.
///
/// For [`Region::Db`], `ray` carries the Tx-sphere departure pair in
/// `alpha_t`/`beta_t` and the Rx-sphere arrival pair in `alpha_r`/`beta_r`.
pub fn path_lengths_at(
    ray: &RayAngles,
    region: Region,
    off: ElementOffsets,
    cfg: &ScenarioConfig,
) -> Result<PathLengths> {
    let (eps_pq, xi) = eps_los(off, cfg);
    let mut pl = PathLengths { eps_pq, xi, ..PathLengths::default() };
    let (s_t, s_r) = (off.s_t, off.s_r);
    match region {
        Region::Sb1 => {
            let c = couple_sb1(ray.alpha_t, ray.beta_t, cfg);
            let a = c.angles;
            pl.q_n1 = c.q;
            pl.xi_n1 = c.xi;
            pl.eps_pn = cfg.r_t - s_t * array_projection(a.alpha_t, a.beta_t, cfg.theta_t, cfg.phi_t);
            pl.eps_nq = c.xi
                - s_r / c.xi
                    * (cfg.r_t * a.beta_t.sin() * cfg.phi_r.sin()
                        - c.q * cfg.phi_r.cos() * (a.alpha_r - cfg.theta_r).cos());
        }
        Region::Sb2 => {
            let c = couple_sb2(ray.alpha_r, ray.beta_r, cfg);
            let a = c.angles;
            pl.q_n2 = c.q;
            pl.xi_n2 = c.xi;
            pl.eps_pn = c.xi
                - s_t / c.xi
                    * (cfg.r_r * a.beta_r.sin() * cfg.phi_t.sin()
                        + c.q * cfg.phi_t.cos() * (a.alpha_t - cfg.theta_t).cos());
            pl.eps_nq = cfg.r_r - s_r * array_projection(a.alpha_r, a.beta_r, cfg.theta_r, cfg.phi_r);
        }
        Region::Sb3 => {
            let c = couple_sb3(ray.alpha_r, ray.beta_r, cfg)?;
            let a = c.angles;
            pl.q_n3 = c.q;
            pl.xi_t_n3 = c.xi;
            pl.xi_r_n3 = c.xi_r;
            pl.eps_pn = c.xi
                - s_t / c.xi
                    * (c.xi_r * a.beta_r.sin() * cfg.phi_t.sin()
                        + c.q * cfg.phi_t.cos() * (a.alpha_t - cfg.theta_t).cos());
            pl.eps_nq = c.xi_r - s_r * array_projection(a.alpha_r, a.beta_r, cfg.theta_r, cfg.phi_r);
        }
        Region::Db => {
            let c1 = couple_sb1(ray.alpha_t, ray.beta_t, cfg);
            let c2 = couple_sb2(ray.alpha_r, ray.beta_r, cfg);
            let (a1, a2) = (c1.angles, c2.angles);
            pl.q_n1 = c1.q;
            pl.xi_n1 = c1.xi;
            pl.q_n2 = c2.q;
            pl.xi_n2 = c2.xi;
            pl.eps_pn = cfg.r_t - s_t * array_projection(a1.alpha_t, a1.beta_t, cfg.theta_t, cfg.phi_t);
            pl.eps_nq = cfg.r_r - s_r * array_projection(a2.alpha_r, a2.beta_r, cfg.theta_r, cfg.phi_r);
            pl.eps_n1n2 = eps_n1n2(&a1, &a2, cfg);
        }
    }
    Ok(pl)
}

/// Scatterer-to-scatterer distance of a double-bounce ray, from the Tx
/// departure of `n1` and the Rx arrival of `n2`.
pub(crate) fn eps_n1n2(n1: &RayAngles, n2: &RayAngles, cfg: &ScenarioConfig) -> f64 {
    let horizontal = cfg.d - cfg.r_t * n1.alpha_t.cos() - cfg.r_r * (n1.alpha_r - n2.alpha_r).cos();
    let vertical = cfg.r_t * n1.beta_t.cos() - cfg.r_r * n2.beta_r.cos();
    horizontal.hypot(vertical)
}

/// Path lengths for Tx element `p` and Rx element `q` (1-based).
pub fn path_lengths(
    ray: &RayAngles,
    region: Region,
    p: usize,
    q: usize,
    cfg: &ScenarioConfig,
) -> Result<PathLengths> {
    path_lengths_at(ray, region, ElementOffsets::for_elements(p, q, cfg)?, cfg)
}

/// Propagation delays in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseDelays {
    pub tau_pq: f64,
    /// Single-bounce delay; zero for double-bounce rays.
    pub tau_pq_n: f64,
    /// Double-bounce delay; zero for single-bounce rays.
    pub tau_pq_n1n2: f64,
}

pub fn phase_delays(pl: &PathLengths, region: Region) -> PhaseDelays {
    let mut d = PhaseDelays { tau_pq: pl.eps_pq / C_LIGHT, ..PhaseDelays::default() };
    match region {
        Region::Db => d.tau_pq_n1n2 = (pl.eps_pn + pl.eps_n1n2 + pl.eps_nq) / C_LIGHT,
        _ => d.tau_pq_n = (pl.eps_pn + pl.eps_nq) / C_LIGHT,
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ScenarioConfig {
        ScenarioConfig::low_vtd()
    }

    #[test]
    fn presets_validate() {
        assert!(ScenarioConfig::low_vtd().validate().unwrap().is_empty());
        assert!(ScenarioConfig::high_vtd().validate().unwrap().is_empty());
    }

    #[test]
    fn eta_sum_is_enforced() {
        let mut c = cfg();
        c.eta_db = 0.0;
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("eta_SB1 + eta_SB2 + eta_SB3 + eta_DB = 1"), "{err}");
    }

    #[test]
    fn focus_must_lie_inside_cylinder() {
        let mut c = cfg();
        c.a = 150.0;
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn close_spheres_warn() {
        let mut c = cfg();
        c.d = 100.0;
        c.a = 60.0;
        let w = c.validate().unwrap();
        assert!(w.iter().any(|m| m.contains("10 max")));
    }

    #[test]
    fn boresight_sb1() {
        let r = couple_sb1(0.0, 0.0, &cfg());
        assert!((r.angles.alpha_r - (-PI)).abs() < 1e-15 || (r.angles.alpha_r - PI).abs() < 1e-15);
        assert_eq!(r.angles.beta_r, 0.0);
    }

    #[test]
    fn sb1_side_ray() {
        let r = couple_sb1(PI / 2.0, 0.0, &cfg());
        assert!((r.angles.alpha_r - (PI - 0.05)).abs() < 1e-15);
    }

    #[test]
    fn sb2_reductions() {
        let c = cfg();
        let r = couple_sb2(PI, 0.0, &c);
        assert!(r.angles.alpha_t.abs() < 1e-15);
        assert_eq!(r.angles.beta_t, 0.0);
        let r = couple_sb2(PI / 2.0, 0.0, &c);
        assert!((r.angles.alpha_t - 0.05).abs() < 1e-15);
        let r = couple_sb2(0.0, 0.0, &c);
        assert!((r.q - (c.d + c.r_r)).abs() < 1e-12);
    }

    #[test]
    fn sb3_axis_points() {
        let c = cfg();
        let f = c.f_ell();
        let r = couple_sb3(0.0, 0.3, &c).unwrap();
        assert!((r.q - (c.a + f)).abs() < 1e-12);
        assert!((r.xi_r * 0.3f64.cos() - (c.a - f)).abs() < 1e-12);
        let r = couple_sb3(PI - 1e-16, 0.0, &c).unwrap();
        assert!((r.q - (c.a - f)).abs() < 1e-9);
    }

    #[test]
    fn sb3_parallel_ray_is_singular() {
        assert!(matches!(couple_sb3(0.1, PI / 2.0, &cfg()), Err(Error::SingularGeometry(_))));
    }

    #[test]
    fn two_d_mode_flattens_elevations() {
        let c = cfg().to_2d();
        for r in [couple_sb1(0.4, 0.3, &c), couple_sb2(2.0, -0.5, &c), couple_sb3(3.0, 0.5, &c).unwrap()] {
            assert_eq!(r.angles.beta_t, 0.0);
            assert_eq!(r.angles.beta_r, 0.0);
        }
    }

    #[test]
    fn zero_spacing_collapses_eq_pq() {
        let mut c = cfg();
        c.delta_t = 0.0;
        c.delta_r = 0.0;
        let pl = path_lengths(&RayAngles::default(), Region::Sb1, 1, 1, &c).unwrap();
        assert_eq!(pl.eps_pq, c.d);
        assert_eq!(pl.xi, c.d);
        assert_eq!(pl.eps_pn, c.r_t);
    }

    #[test]
    fn element_offsets_are_centered() {
        let mut c = cfg();
        c.m_t = 3;
        let o: Vec<f64> = (1..=3).map(|p| ElementOffsets::for_elements(p, 1, &c).unwrap().s_t).collect();
        assert!((o[0] - c.delta_t).abs() < 1e-18 && o[1] == 0.0 && (o[2] + c.delta_t).abs() < 1e-18);
        assert!(ElementOffsets::for_elements(4, 1, &c).is_err());
    }

    #[test]
    fn delay_of_300m() {
        let pl = PathLengths { eps_pq: 300.0, ..PathLengths::default() };
        let d = phase_delays(&pl, Region::Sb1);
        assert!((d.tau_pq - 1.000_692_285_594_456_3e-6).abs() < 1e-20);
        assert_eq!(phase_delays(&PathLengths::default(), Region::Db).tau_pq_n1n2, 0.0);
    }

    #[test]
    fn sb3_focal_sum_gives_2a_delay() {
        let mut c = cfg();
        c.delta_t = 0.0;
        c.delta_r = 0.0;
        let ray = RayAngles { alpha_r: 0.0, ..RayAngles::default() };
        let pl = path_lengths(&ray, Region::Sb3, 1, 1, &c).unwrap();
        let d = phase_delays(&pl, Region::Sb3);
        assert!((d.tau_pq_n * C_LIGHT - 2.0 * c.a).abs() < 1e-9);
    }

    #[test]
    fn wrap_is_half_open() {
        assert_eq!(wrap_angle(PI), -PI);
        assert_eq!(wrap_angle(-PI), -PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
    }
}
