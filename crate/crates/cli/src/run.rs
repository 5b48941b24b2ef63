//! Experiment orchestration: one CSV per (statistic, model) plus a manifest.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use v2v3d_core::estimators::{
    empirical_acf, empirical_ccf, empirical_lcr_afd, empirical_pdfs, empirical_psd, EstimatorConfig,
    LevelGrid, Series,
};
use v2v3d_core::reference::{
    afd_from_b, amplitude_pdf, b_params, default_psd_grid, doppler_psd, lcr_from_b, phase_pdf,
    spatial_ccf, RayDiscretization, RiceanParams,
};
use v2v3d_core::sos::{
    generate, generate_pairs, parameterize, sim_amplitude_pdf, sim_b_params, sim_discretization,
    sim_doppler_psd, sim_phase_pdf, sim_stcf,
};
use v2v3d_core::{
    ChannelRealization, ModelTag, ScenarioConfig, SosParameterization, StatCurve, UniformGrid,
};

use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stat {
    Acf,
    Ccf,
    Psd,
    Lcr,
    Afd,
    Pdfs,
}

impl Stat {
    pub const ALL: [Stat; 6] = [Stat::Acf, Stat::Ccf, Stat::Psd, Stat::Lcr, Stat::Afd, Stat::Pdfs];

    pub fn as_str(&self) -> &'static str {
        match self {
            Stat::Acf => "acf",
            Stat::Ccf => "ccf",
            Stat::Psd => "psd",
            Stat::Lcr => "lcr",
            Stat::Afd => "afd",
            Stat::Pdfs => "pdfs",
        }
    }

    pub fn parse_list(items: &[String]) -> anyhow::Result<Vec<Stat>> {
        let mut out = Vec::new();
        for item in items.iter().flat_map(|s| s.split(',')) {
            match item.trim() {
                "all" => out.extend(Stat::ALL),
                s => match Stat::ALL.iter().find(|k| k.as_str() == s) {
                    Some(k) => out.push(*k),
                    None => bail!("unknown statistic {s:?}; expected one of acf, ccf, psd, lcr, afd, pdfs, all"),
                },
            }
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Reference,
    Sos,
    Empirical,
}

impl Model {
    pub const ALL: [Model; 3] = [Model::Reference, Model::Sos, Model::Empirical];

    pub fn as_str(&self) -> &'static str {
        match self {
            Model::Reference => "reference",
            Model::Sos => "sos",
            Model::Empirical => "empirical",
        }
    }

    pub fn parse_list(items: &[String]) -> anyhow::Result<Vec<Model>> {
        let mut out = Vec::new();
        for item in items.iter().flat_map(|s| s.split(',')) {
            match item.trim() {
                "all" => out.extend(Model::ALL),
                s => match Model::ALL.iter().find(|k| k.as_str() == s) {
                    Some(k) => out.push(*k),
                    None => bail!("unknown model {s:?}; expected one of reference, sos, empirical, all"),
                },
            }
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

impl fmt::Display for Stat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Command-line overrides of the scenario's experiment block.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub stats: Option<Vec<String>>,
    pub models: Option<Vec<String>>,
    pub out: Option<PathBuf>,
    pub mode_2d: bool,
}

/// Fully resolved experiment.
#[derive(Debug, Clone)]
pub struct Plan {
    pub config: ScenarioConfig,
    pub seed: u64,
    pub samples: usize,
    pub sample_rate: f64,
    pub max_lag: f64,
    pub ccf_spacings: Vec<f64>,
    pub ccf_samples: usize,
    pub psd_segments: usize,
    pub bins: usize,
    pub levels_db: Vec<f64>,
    pub stats: Vec<Stat>,
    pub models: Vec<Model>,
    pub out: PathBuf,
}

pub const DEFAULT_SAMPLES: usize = 1 << 20;

impl Plan {
    pub fn new(scenario: &Scenario, ov: &Overrides) -> anyhow::Result<Plan> {
        let e = &scenario.file.experiment;
        let mut config = scenario.config.clone();
        if ov.mode_2d {
            config = config.to_2d();
            config.name = format!("{}-2d", config.name);
        }
        let band = config.f_t_max + config.f_r_max;
        let f_max = config.f_t_max.max(config.f_r_max);
        if band <= 0.0 {
            bail!("scenario has no Doppler spread; time-domain statistics are undefined");
        }
        let lambda = config.lambda();
        let max_spacing = e.ccf_max_spacing_wavelengths.unwrap_or(3.0);
        let points = e.ccf_points.unwrap_or(31).max(1);
        let ccf_spacings = (0..points)
            .map(|i| if points == 1 { 0.0 } else { max_spacing * lambda * i as f64 / (points - 1) as f64 })
            .collect();
        let (lo, hi, step) =
            (e.level_min_db.unwrap_or(-20.0), e.level_max_db.unwrap_or(10.0), e.level_step_db.unwrap_or(0.5));
        if !(step > 0.0 && hi >= lo) {
            bail!("level grid needs level_step_db > 0 and level_max_db >= level_min_db");
        }
        let n_levels = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        let levels_db = (0..n_levels).map(|i| lo + step * i as f64).collect();
        let stats = match (&ov.stats, &e.stats) {
            (Some(s), _) | (None, Some(s)) => Stat::parse_list(s)?,
            _ => Stat::ALL.to_vec(),
        };
        let models = match (&ov.models, &e.models) {
            (Some(m), _) | (None, Some(m)) => Model::parse_list(m)?,
            _ => Model::ALL.to_vec(),
        };
        let out = ov
            .out
            .clone()
            .or_else(|| e.out.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out").join(&config.name));
        Ok(Plan {
            seed: ov.seed.or(e.seed).unwrap_or(1),
            samples: ov.samples.or(e.samples).unwrap_or(DEFAULT_SAMPLES),
            sample_rate: e.sample_rate_hz.unwrap_or(16.0 * band),
            max_lag: e.max_lag_s.unwrap_or(2.0 / f_max),
            ccf_spacings,
            ccf_samples: e.ccf_samples.unwrap_or(1 << 16),
            psd_segments: e.psd_segments.unwrap_or(64),
            bins: e.histogram_bins.unwrap_or(32),
            levels_db,
            stats,
            models,
            out,
            config,
        })
    }

    fn time_grid(&self, count: usize) -> v2v3d_core::Result<UniformGrid> {
        UniformGrid::new(0.0, 1.0 / self.sample_rate, count)
    }

    fn lag_count(&self) -> usize {
        (self.max_lag * self.sample_rate + 1e-9).floor() as usize + 1
    }

    fn estimator(&self) -> EstimatorConfig {
        EstimatorConfig {
            max_lag: (self.lag_count() - 1) as f64 / self.sample_rate,
            n_bins: self.bins,
            level_grid: LevelGrid::Db(self.levels_db.clone()),
            segment_count: 32,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub stat: Stat,
    pub model: Model,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub scenario: String,
    pub scenario_sha256: String,
    pub seed: u64,
    pub mode_2d: bool,
    pub samples: usize,
    pub sample_rate_hz: f64,
    pub stats: Vec<Stat>,
    pub models: Vec<Model>,
    pub outputs: BTreeMap<String, String>,
    pub failures: Vec<Failure>,
    pub wall_time_s: f64,
}

struct Job<'a> {
    plan: &'a Plan,
    params: SosParameterization,
    realization: Option<ChannelRealization>,
}

type Files = Vec<(String, String)>;

fn file(name: &str, model: Model, curve: &StatCurve) -> (String, String) {
    (format!("{name}_{}.csv", model.as_str()), curve.to_csv_string())
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

const PDF_POINTS: usize = 121;
const PDF_AMPLITUDE_MAX: f64 = 3.0;

impl Job<'_> {
    fn series(&self) -> anyhow::Result<Series<'_>> {
        let r = self.realization.as_ref().context("no realization was generated")?;
        Ok(Series::of(r, 0)?)
    }

    fn task(&self, stat: Stat, model: Model) -> anyhow::Result<Files> {
        let plan = self.plan;
        let cfg = &plan.config;
        let id = cfg.name.as_str();
        let levels: Vec<f64> = plan.levels_db.iter().map(|d| 10f64.powf(d / 20.0)).collect();
        Ok(match (stat, model) {
            (Stat::Acf, Model::Empirical) => vec![file("acf", model, &empirical_acf(self.series()?, &plan.estimator())?)],
            (Stat::Acf, _) => {
                let step = 1.0 / plan.sample_rate;
                let count = plan.lag_count();
                let tau_max = (count - 1) as f64 * step;
                let (disc, tag) = if model == Model::Reference {
                    (RayDiscretization::new(cfg, 0.0, 0.0, RayDiscretization::nodes_for(cfg, tau_max))?, ModelTag::Reference)
                } else {
                    (sim_discretization(&self.params, cfg, 0.0, 0.0)?, ModelTag::SosAnalytic)
                };
                let taus = (0..count).map(|i| i as f64 * step).collect();
                vec![file("acf", model, &StatCurve::complex("acf", tag, id, taus, disc.stcf_grid(0.0, step, count)))]
            }
            (Stat::Ccf, _) => {
                let lambda = cfg.lambda();
                let x: Vec<f64> = plan.ccf_spacings.iter().map(|d| d / lambda).collect();
                let curve = match model {
                    Model::Reference => StatCurve::complex(
                        "ccf",
                        ModelTag::Reference,
                        id,
                        x,
                        spatial_ccf(cfg, cfg.delta_t, &plan.ccf_spacings)?,
                    ),
                    Model::Sos => {
                        let v = plan
                            .ccf_spacings
                            .iter()
                            .map(|&d| sim_stcf(cfg.delta_t, d, 0.0, &self.params, cfg))
                            .collect::<v2v3d_core::Result<Vec<_>>>()?;
                        StatCurve::complex("ccf", ModelTag::SosAnalytic, id, x, v)
                    }
                    Model::Empirical => self.empirical_ccf(x)?,
                };
                vec![file("ccf", model, &curve)]
            }
            (Stat::Psd, Model::Empirical) => {
                let ec = EstimatorConfig { segment_count: plan.psd_segments, ..plan.estimator() };
                let full = empirical_psd(self.series()?, &ec)?;
                let band = 2.0 * (cfg.f_t_max + cfg.f_r_max);
                let keep: Vec<usize> = (0..full.len()).filter(|&i| full.x[i].abs() <= band).collect();
                let y = full.real_values();
                let se = full.stderr.clone().unwrap_or_default();
                let curve = StatCurve::real(
                    "psd",
                    ModelTag::Empirical,
                    id,
                    keep.iter().map(|&i| full.x[i]).collect(),
                    keep.iter().map(|&i| y[i]).collect(),
                )
                .with_stderr(keep.iter().map(|&i| se[i]).collect());
                vec![file("psd", model, &curve)]
            }
            (Stat::Psd, _) => {
                let grid = default_psd_grid(cfg)?;
                let curve = if model == Model::Reference {
                    doppler_psd(cfg, &grid)?
                } else {
                    sim_doppler_psd(&self.params, cfg, &grid)?
                };
                vec![file("psd", model, &curve)]
            }
            (Stat::Lcr | Stat::Afd, Model::Empirical) => {
                let (lcr, afd) = empirical_lcr_afd(self.series()?, &plan.estimator())?;
                vec![if stat == Stat::Lcr { file("lcr", model, &lcr) } else { file("afd", model, &afd) }]
            }
            (Stat::Lcr | Stat::Afd, _) => {
                let (b, tag) = if model == Model::Reference {
                    (b_params(cfg)?, ModelTag::Reference)
                } else {
                    let conv = Default::default();
                    (sim_b_params(&self.params, cfg, conv), ModelTag::SosAnalytic)
                };
                let k = cfg.k_factor;
                let y = levels
                    .iter()
                    .map(|&r| if stat == Stat::Lcr { lcr_from_b(r, k, &b) } else { afd_from_b(r, k, &b) })
                    .collect::<v2v3d_core::Result<Vec<_>>>()?;
                let name = stat.as_str();
                vec![file(name, model, &StatCurve::real(name, tag, id, plan.levels_db.clone(), y))]
            }
            (Stat::Pdfs, Model::Empirical) => {
                let (amp, phase) = empirical_pdfs(self.series()?, &plan.estimator())?;
                vec![file("amplitude_pdf", model, &amp), file("phase_pdf", model, &phase)]
            }
            (Stat::Pdfs, _) => {
                let zs = linspace(0.0, PDF_AMPLITUDE_MAX, PDF_POINTS);
                let thetas = linspace(-PI, PI, PDF_POINTS);
                let (amp, phase, tag) = if model == Model::Reference {
                    let rp = RiceanParams::from_config(cfg)?;
                    let a = zs.iter().map(|&z| amplitude_pdf(z, &rp)).collect::<v2v3d_core::Result<Vec<_>>>()?;
                    let p = thetas.iter().map(|&t| phase_pdf(t, &rp)).collect();
                    (a, p, ModelTag::Reference)
                } else {
                    let a = zs
                        .par_iter()
                        .map(|&z| sim_amplitude_pdf(z, &self.params))
                        .collect::<v2v3d_core::Result<Vec<_>>>()?;
                    let p = thetas
                        .par_iter()
                        .map(|&t| sim_phase_pdf(t, &self.params))
                        .collect::<v2v3d_core::Result<Vec<_>>>()?;
                    (a, p, ModelTag::SosAnalytic)
                };
                vec![
                    file("amplitude_pdf", model, &StatCurve::real("amplitude_pdf", tag, id, zs, amp)),
                    file("phase_pdf", model, &StatCurve::real("phase_pdf", tag, id, thetas, phase)),
                ]
            }
        })
    }

    /// Generates the `(1, 1)` and `(2, 2)` coefficients at each Rx spacing.
    fn empirical_ccf(&self, x: Vec<f64>) -> anyhow::Result<StatCurve> {
        let plan = self.plan;
        let cfg = &plan.config;
        if cfg.m_t < 2 || cfg.m_r < 2 {
            bail!("the spatial CCF needs at least two elements at each end");
        }
        let grid = plan.time_grid(plan.ccf_samples)?;
        let ec = EstimatorConfig::new(0.0);
        let mut values = Vec::with_capacity(x.len());
        let mut stderr = Vec::with_capacity(x.len());
        for &d in &plan.ccf_spacings {
            let mut c = cfg.clone();
            c.delta_r = d;
            let real = generate_pairs(&self.params, &c, &grid, &[(1, 1), (2, 2)])?;
            let est = empirical_ccf(Series::of(&real, 0)?, Series::of(&real, 1)?, &ec)?;
            values.push(est.value);
            stderr.push(est.stderr);
        }
        Ok(StatCurve::complex("ccf", ModelTag::Empirical, &cfg.name, x, values).with_stderr(stderr))
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn needs_realization(plan: &Plan) -> bool {
    plan.models.contains(&Model::Empirical) && plan.stats.iter().any(|s| *s != Stat::Ccf)
}

/// Runs every requested (statistic, model) task and writes the CSVs and
/// `manifest.json` into the plan's output directory. Failed tasks are
/// recorded in the manifest; the others still produce output.
pub fn execute(scenario: &Scenario, plan: &Plan) -> anyhow::Result<RunManifest> {
    let start = Instant::now();
    let cfg = &plan.config;
    let params = parameterize(cfg, plan.seed)?;
    let realization = if needs_realization(plan) {
        Some(generate(&params, cfg, &plan.time_grid(plan.samples)?, 1, 1)?)
    } else {
        None
    };
    let ctx = Job { plan, params, realization };
    let tasks: Vec<(Stat, Model)> =
        plan.stats.iter().flat_map(|&s| plan.models.iter().map(move |&m| (s, m))).collect();
    let results: Vec<((Stat, Model), anyhow::Result<Files>)> =
        tasks.par_iter().map(|&(s, m)| ((s, m), ctx.task(s, m))).collect();

    std::fs::create_dir_all(&plan.out).with_context(|| format!("creating {}", plan.out.display()))?;
    let mut outputs = BTreeMap::new();
    let mut failures = Vec::new();
    for ((stat, model), res) in results {
        match res {
            Ok(files) => {
                for (name, text) in files {
                    let path = plan.out.join(&name);
                    std::fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
                    outputs.insert(name, sha256_hex(text.as_bytes()));
                }
            }
            Err(e) => failures.push(Failure { stat, model, error: format!("{e:#}") }),
        }
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: cfg.name.clone(),
        scenario_sha256: sha256_hex(scenario.text.as_bytes()),
        seed: plan.seed,
        mode_2d: cfg.mode_2d,
        samples: plan.samples,
        sample_rate_hz: plan.sample_rate,
        stats: plan.stats.clone(),
        models: plan.models.clone(),
        outputs,
        failures,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(plan.out.join("manifest.json"), json + "\n")?;
    Ok(manifest)
}

/// Writes the discrete angle sets of a scenario as CSV.
pub fn write_angles(scenario: &Scenario, out: Option<&Path>) -> anyhow::Result<String> {
    let csv = v2v3d_core::mev::coupled_angle_sets(&scenario.config)?.to_csv();
    if let Some(path) = out {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(csv)
}
