//! Scenario files: TOML with angles in degrees and antenna spacings in
//! carrier wavelengths.

use std::fmt;
use std::path::Path;

use serde::Deserialize;
use v2v3d_core::geometry::{ScenarioConfig, C_LIGHT};
use v2v3d_core::{MevPairing, VmfParams};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub link: Link,
    pub arrays: Arrays,
    pub motion: Motion,
    pub power: Power,
    pub scatterers: Scatterers,
    #[serde(default)]
    pub sos: SosBlock,
    #[serde(default)]
    pub experiment: Experiment,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Link {
    pub distance_m: f64,
    pub carrier_hz: f64,
    pub tx_radius_m: f64,
    pub rx_radius_m: f64,
    pub ellipse_semi_major_m: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arrays {
    pub tx_elements: usize,
    pub rx_elements: usize,
    pub tx_spacing_wavelengths: f64,
    pub rx_spacing_wavelengths: f64,
    pub tx_orientation_deg: f64,
    pub rx_orientation_deg: f64,
    pub tx_elevation_deg: f64,
    pub rx_elevation_deg: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Motion {
    pub tx_doppler_hz: f64,
    pub rx_doppler_hz: f64,
    pub tx_direction_deg: f64,
    pub rx_direction_deg: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Power {
    pub k_factor: f64,
    pub eta_sb1: f64,
    pub eta_sb2: f64,
    pub eta_sb3: f64,
    pub eta_db: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Vmf {
    pub mean_azimuth_deg: f64,
    pub mean_elevation_deg: f64,
    pub concentration: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scatterers {
    pub tx_sphere: Vmf,
    pub rx_sphere: Vmf,
    pub cylinder: Vmf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SosBlock {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub pairing: String,
    pub mode_2d: bool,
}

impl Default for SosBlock {
    fn default() -> Self {
        Self { n1: 40, n2: 40, n3: 40, pairing: MevPairing::default().as_str().into(), mode_2d: false }
    }
}

/// Experiment settings. Every field is optional; defaults derive from the
/// scenario (see [`crate::run::Plan`]).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub sample_rate_hz: Option<f64>,
    pub max_lag_s: Option<f64>,
    pub ccf_max_spacing_wavelengths: Option<f64>,
    pub ccf_points: Option<usize>,
    pub ccf_samples: Option<usize>,
    pub psd_segments: Option<usize>,
    pub histogram_bins: Option<usize>,
    pub level_min_db: Option<f64>,
    pub level_max_db: Option<f64>,
    pub level_step_db: Option<f64>,
    pub stats: Option<Vec<String>>,
    pub models: Option<Vec<String>>,
    pub out: Option<String>,
}

/// A problem in a scenario file, with the 1-based line it refers to when known.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// A parsed and validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub config: ScenarioConfig,
    pub text: String,
    pub warnings: Vec<String>,
}

/// Line of `key = ...` inside `[table]` (dotted table names allowed).
fn locate(text: &str, table: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(h) = line.strip_prefix('[') {
            current = h.trim_end_matches(']').trim().to_string();
            if key.is_empty() && current == table {
                return Some(i + 1);
            }
            continue;
        }
        if current == table && !key.is_empty() {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

pub fn parse(text: &str) -> Result<ScenarioFile, Vec<Diagnostic>> {
    toml::from_str::<ScenarioFile>(text).map_err(|e| {
        vec![Diagnostic { line: e.span().map(|s| line_of(text, s.start)), message: e.message().to_string() }]
    })
}

impl ScenarioFile {
    pub fn pairing(&self) -> Option<MevPairing> {
        MevPairing::parse(&self.sos.pairing)
    }

    pub fn to_config(&self) -> ScenarioConfig {
        let lambda = C_LIGHT / self.link.carrier_hz;
        let vmf = |v: Vmf| VmfParams::from_degrees(v.mean_azimuth_deg, v.mean_elevation_deg, v.concentration);
        ScenarioConfig {
            name: self.name.clone(),
            d: self.link.distance_m,
            r_t: self.link.tx_radius_m,
            r_r: self.link.rx_radius_m,
            a: self.link.ellipse_semi_major_m,
            delta_t: self.arrays.tx_spacing_wavelengths * lambda,
            delta_r: self.arrays.rx_spacing_wavelengths * lambda,
            theta_t: self.arrays.tx_orientation_deg.to_radians(),
            theta_r: self.arrays.rx_orientation_deg.to_radians(),
            phi_t: self.arrays.tx_elevation_deg.to_radians(),
            phi_r: self.arrays.rx_elevation_deg.to_radians(),
            gamma_t: self.motion.tx_direction_deg.to_radians(),
            gamma_r: self.motion.rx_direction_deg.to_radians(),
            f_t_max: self.motion.tx_doppler_hz,
            f_r_max: self.motion.rx_doppler_hz,
            f_c: self.link.carrier_hz,
            m_t: self.arrays.tx_elements,
            m_r: self.arrays.rx_elements,
            k_factor: self.power.k_factor,
            eta_sb1: self.power.eta_sb1,
            eta_sb2: self.power.eta_sb2,
            eta_sb3: self.power.eta_sb3,
            eta_db: self.power.eta_db,
            vmf_tx_sphere: vmf(self.scatterers.tx_sphere),
            vmf_rx_sphere: vmf(self.scatterers.rx_sphere),
            vmf_cylinder: vmf(self.scatterers.cylinder),
            n1: self.sos.n1,
            n2: self.sos.n2,
            n3: self.sos.n3,
            mode_2d: self.sos.mode_2d,
            mev_pairing: self.pairing().unwrap_or_default(),
        }
    }

    /// Checks that can point at a specific key.
    fn keyed_checks(&self, text: &str) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut push = |table: &str, key: &str, message: String| {
            out.push(Diagnostic { line: locate(text, table, key), message });
        };
        let p = &self.power;
        let etas = [("eta_sb1", p.eta_sb1), ("eta_sb2", p.eta_sb2), ("eta_sb3", p.eta_sb3), ("eta_db", p.eta_db)];
        for (key, v) in etas {
            if !(0.0..=1.0).contains(&v) {
                push("power", key, format!("{key} = {v} must lie in [0, 1]"));
            }
        }
        let sum: f64 = etas.iter().map(|e| e.1).sum();
        if (sum - 1.0).abs() > 1e-9 {
            push(
                "power",
                "",
                format!("power fractions must satisfy eta_sb1 + eta_sb2 + eta_sb3 + eta_db = 1, got {sum}"),
            );
        }
        if p.k_factor < 0.0 {
            push("power", "k_factor", format!("k_factor = {} must be >= 0", p.k_factor));
        }
        let s = &self.scatterers;
        for (name, v) in [("tx_sphere", s.tx_sphere), ("rx_sphere", s.rx_sphere), ("cylinder", s.cylinder)] {
            let table = format!("scatterers.{name}");
            if !(v.concentration >= 0.0) || !v.concentration.is_finite() {
                push(&table, "concentration", format!("{name}: concentration {} must be >= 0", v.concentration));
            }
            if !(-90.0..=90.0).contains(&v.mean_elevation_deg) {
                push(
                    &table,
                    "mean_elevation_deg",
                    format!("{name}: mean elevation {} deg outside [-90, 90]", v.mean_elevation_deg),
                );
            }
            if !v.mean_azimuth_deg.is_finite() {
                push(&table, "mean_azimuth_deg", format!("{name}: mean azimuth must be finite"));
            }
        }
        if self.pairing().is_none() {
            push("sos", "pairing", format!("unknown pairing {:?}; use \"conditional\" or \"shared-index\"", self.sos.pairing));
        }
        let e = &self.experiment;
        for (key, v) in [("samples", e.samples), ("ccf_points", e.ccf_points), ("ccf_samples", e.ccf_samples)] {
            if v == Some(0) {
                push("experiment", key, format!("{key} must be positive"));
            }
        }
        if let Some(b) = e.histogram_bins {
            if b < 8 {
                push("experiment", "histogram_bins", format!("histogram_bins = {b} must be at least 8"));
            }
        }
        if let Some(s) = e.psd_segments {
            if s < 16 {
                push("experiment", "psd_segments", format!("psd_segments = {s} must be at least 16"));
            }
        }
        out
    }
}

/// Parses and validates scenario text.
pub fn load_str(text: &str) -> Result<Scenario, Vec<Diagnostic>> {
    let file = parse(text)?;
    let diags = file.keyed_checks(text);
    if !diags.is_empty() {
        return Err(diags);
    }
    let config = file.to_config();
    match config.validate() {
        Ok(warnings) => Ok(Scenario { file, config, text: text.to_string(), warnings }),
        Err(e) => Err(vec![Diagnostic { line: None, message: e.to_string() }]),
    }
}

pub fn load(path: &Path) -> Result<Scenario, Vec<Diagnostic>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| vec![Diagnostic { line: None, message: format!("cannot read {}: {e}", path.display()) }])?;
    load_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LOW: &str = include_str!("../scenarios/lowvtd.toml");

    #[test]
    fn bundled_low_vtd_matches_builtin() {
        let s = load_str(LOW).unwrap();
        let b = ScenarioConfig::low_vtd();
        let c = &s.config;
        assert_eq!(c.name, b.name);
        for (x, y) in [
            (c.d, b.d),
            (c.k_factor, b.k_factor),
            (c.eta_sb3, b.eta_sb3),
            (c.delta_t, b.delta_t),
            (c.theta_r, b.theta_r),
            (c.vmf_cylinder.alpha0, b.vmf_cylinder.alpha0),
            (c.vmf_rx_sphere.k, b.vmf_rx_sphere.k),
        ] {
            assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn unknown_key_has_line() {
        let text = LOW.replacen("[power]\n", "[power]\nbogus = 1\n", 1);
        let d = load_str(&text).unwrap_err();
        assert_eq!(d[0].line, locate(&text, "power", "bogus"));
        assert!(d[0].message.contains("bogus"));
    }

    #[test]
    fn eta_sum_names_constraint() {
        let text = LOW.replace("eta_db = 0.051", "eta_db = 0.0");
        let d = load_str(&text).unwrap_err();
        assert!(d[0].message.contains("eta_sb1 + eta_sb2 + eta_sb3 + eta_db = 1"));
        assert_eq!(d[0].line, locate(&text, "power", ""));
    }

    #[test]
    fn negative_concentration_points_at_key() {
        let text = LOW.replace("concentration = 3.6", "concentration = -1.0");
        let d = load_str(&text).unwrap_err();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].line, locate(&text, "scatterers.rx_sphere", "concentration"));
    }
}
