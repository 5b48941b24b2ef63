//! Empirical statistics of generated channel coefficients.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::curve::{ModelTag, StatCurve};
use crate::error::{Error, Result};
use crate::sos::ChannelRealization;

/// Envelope levels for crossing statistics.
#[derive(Debug, Clone, PartialEq)]
pub enum LevelGrid {
    /// Decibels relative to the RMS envelope of the series.
    Db(Vec<f64>),
    /// Absolute envelope values.
    Linear(Vec<f64>),
}

impl LevelGrid {
    /// -20 dB to +10 dB in 0.5 dB steps.
    pub fn default_db() -> Self {
        LevelGrid::Db((0..=60).map(|i| -20.0 + 0.5 * i as f64).collect())
    }

    /// Abscissa values as given and the matching absolute envelope levels.
    fn resolve(&self, rms: f64) -> (Vec<f64>, Vec<f64>) {
        match self {
            LevelGrid::Db(v) => (v.clone(), v.iter().map(|d| rms * 10f64.powf(d / 20.0)).collect()),
            LevelGrid::Linear(v) => (v.clone(), v.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    /// Largest correlation lag in seconds.
    pub max_lag: f64,
    pub n_bins: usize,
    pub level_grid: LevelGrid,
    /// Segments for jackknife errors and Welch averaging.
    pub segment_count: usize,
}

impl EstimatorConfig {
    pub fn new(max_lag: f64) -> Self {
        Self { max_lag, n_bins: 32, level_grid: LevelGrid::default_db(), segment_count: 32 }
    }

    pub fn validate(&self, duration: f64) -> Result<()> {
        if !(self.max_lag >= 0.0 && self.max_lag < duration / 4.0) {
            return Err(Error::Contract(format!(
                "max_lag {} s must be below a quarter of the series duration {duration} s",
                self.max_lag
            )));
        }
        if self.n_bins < 8 {
            return Err(Error::Contract(format!("n_bins {} must be at least 8", self.n_bins)));
        }
        if self.segment_count < 2 {
            return Err(Error::Contract("segment_count must be at least 2".into()));
        }
        Ok(())
    }
}

/// A uniformly sampled complex series.
#[derive(Debug, Clone, Copy)]
pub struct Series<'a> {
    pub samples: &'a [Complex64],
    pub step: f64,
    pub scenario_id: &'a str,
}

impl<'a> Series<'a> {
    pub fn new(samples: &'a [Complex64], step: f64, scenario_id: &'a str) -> Self {
        Self { samples, step, scenario_id }
    }

    /// Row `row` of a realization.
    pub fn of(real: &'a ChannelRealization, row: usize) -> Result<Self> {
        let samples = real
            .samples
            .get(row)
            .ok_or_else(|| Error::Contract(format!("realization has no row {row}")))?;
        Ok(Self { samples, step: real.time_grid.step, scenario_id: &real.scenario_id })
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.step
    }

    fn max_lag_index(&self, ec: &EstimatorConfig) -> usize {
        (ec.max_lag / self.step + 1e-9).floor() as usize
    }
}

fn segment_bounds(n: usize, count: usize) -> Vec<(usize, usize)> {
    (0..count).map(|g| (g * n / count, (g + 1) * n / count)).collect()
}

/// `sum_n x[n + k] conj(x[n])` for `k = 0..=max_lag` within one segment.
fn lag_sums(x: &[Complex64], max_lag: usize) -> Vec<Complex64> {
    let n = x.len();
    if n * (max_lag + 1) <= 1 << 16 {
        return (0..=max_lag)
            .map(|k| (k..n).map(|i| x[i] * x[i - k].conj()).sum())
            .collect();
    }
    let size = (n + max_lag + 1).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    buf[..n].copy_from_slice(x);
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    buf.iter_mut().for_each(|v| *v = Complex64::new(v.norm_sqr(), 0.0));
    planner.plan_fft_inverse(size).process(&mut buf);
    let scale = 1.0 / size as f64;
    buf[..=max_lag].iter().map(|v| v * scale).collect()
}

/// Leave-one-out jackknife standard error of a ratio statistic built from
/// per-segment sums.
fn jackknife<F: Fn(usize) -> Complex64>(count: usize, leave_out: F) -> f64 {
    let g = count as f64;
    let est: Vec<Complex64> = (0..count).map(leave_out).collect();
    let mean: Complex64 = est.iter().sum::<Complex64>() / g;
    ((g - 1.0) / g * est.iter().map(|e| (e - mean).norm_sqr()).sum::<f64>()).sqrt()
}

/// Temporal autocorrelation `E[x(t + tau) x*(t)]`, normalized to 1 at lag 0.
///
/// Each lag is averaged over the products available at that lag. Products
/// are accumulated per segment, which also yields the jackknife errors.
pub fn empirical_acf(x: Series<'_>, ec: &EstimatorConfig) -> Result<StatCurve> {
    ec.validate(x.duration())?;
    let lags = x.max_lag_index(ec);
    let n = x.samples.len();
    if n < 8 * lags.max(1) {
        return Err(Error::Contract(format!("{n} samples are too few for {lags} lags")));
    }
    let segs = segment_bounds(n, ec.segment_count);
    if segs.iter().any(|&(a, b)| b - a <= lags) {
        return Err(Error::Contract("segments are shorter than the largest lag".into()));
    }
    let sums: Vec<Vec<Complex64>> = segs.par_iter().map(|&(a, b)| lag_sums(&x.samples[a..b], lags)).collect();
    let counts: Vec<Vec<f64>> =
        segs.iter().map(|&(a, b)| (0..=lags).map(|k| (b - a - k) as f64).collect()).collect();

    let ratio = |skip: Option<usize>, k: usize| -> Complex64 {
        let (mut s, mut c, mut s0, mut c0) = (Complex64::new(0.0, 0.0), 0.0, 0.0, 0.0);
        for g in 0..sums.len() {
            if Some(g) == skip {
                continue;
            }
            s += sums[g][k];
            c += counts[g][k];
            s0 += sums[g][0].re;
            c0 += counts[g][0];
        }
        if s0 > 0.0 {
            (s / c) / (s0 / c0)
        } else {
            Complex64::new(1.0, 0.0)
        }
    };
    // Per-lag averaging can exceed unit magnitude on nonstationary input;
    // project back onto the unit disc.
    let values: Vec<Complex64> = (0..=lags)
        .map(|k| {
            let v = ratio(None, k);
            if v.norm() > 1.0 {
                v / v.norm()
            } else {
                v
            }
        })
        .collect();
    let stderr: Vec<f64> = (0..=lags).map(|k| jackknife(sums.len(), |g| ratio(Some(g), k))).collect();
    let taus = (0..=lags).map(|k| k as f64 * x.step).collect();
    Ok(StatCurve::complex("acf", ModelTag::Empirical, x.scenario_id, taus, values).with_stderr(stderr))
}

/// Zero-lag cross-correlation with its jackknife standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcfEstimate {
    pub value: Complex64,
    pub stderr: f64,
}

/// `E[x(t) y*(t)] / sqrt(E|x|^2 E|y|^2)`.
pub fn empirical_ccf(x: Series<'_>, y: Series<'_>, ec: &EstimatorConfig) -> Result<CcfEstimate> {
    if x.samples.len() != y.samples.len() || (x.step - y.step).abs() > 1e-12 * x.step.abs() {
        return Err(Error::Contract("cross-correlated series must share a time grid".into()));
    }
    if ec.segment_count < 2 || x.samples.len() < ec.segment_count {
        return Err(Error::Contract("too few samples for the segment count".into()));
    }
    let parts: Vec<(Complex64, f64, f64)> = segment_bounds(x.samples.len(), ec.segment_count)
        .into_iter()
        .map(|(a, b)| {
            x.samples[a..b].iter().zip(&y.samples[a..b]).fold(
                (Complex64::new(0.0, 0.0), 0.0, 0.0),
                |(c, px, py), (u, v)| (c + u * v.conj(), px + u.norm_sqr(), py + v.norm_sqr()),
            )
        })
        .collect();
    let ratio = |skip: Option<usize>| {
        let (mut c, mut px, mut py) = (Complex64::new(0.0, 0.0), 0.0, 0.0);
        for (g, p) in parts.iter().enumerate() {
            if Some(g) != skip {
                c += p.0;
                px += p.1;
                py += p.2;
            }
        }
        let d = (px * py).sqrt();
        if d > 0.0 {
            c / d
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    Ok(CcfEstimate { value: ratio(None), stderr: jackknife(parts.len(), |g| ratio(Some(g))) })
}

/// Welch-averaged two-sided PSD with a Hann window and 50% overlap.
///
/// Uses `segment_count` overlapping segments. The density integrates to the
/// mean power of the series. Standard errors are the spread over segments
/// divided by the square root of their number.
pub fn empirical_psd(x: Series<'_>, ec: &EstimatorConfig) -> Result<StatCurve> {
    let n = x.samples.len();
    let k = ec.segment_count;
    if k < 16 {
        return Err(Error::Contract(format!("Welch averaging needs at least 16 segments, got {k}")));
    }
    let len = 2 * n / (k + 1);
    if len < 16 {
        return Err(Error::Contract(format!("{n} samples are too few for {k} segments")));
    }
    let hop = len / 2;
    let window: Vec<f64> = (0..len).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / len as f64).cos()).collect();
    let wpow: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(len);
    let periodograms: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|s| {
            let start = s * hop;
            let mut buf: Vec<Complex64> =
                x.samples[start..start + len].iter().zip(&window).map(|(v, w)| v * w).collect();
            fft.process(&mut buf);
            buf.iter().map(|v| v.norm_sqr() * x.step / wpow).collect()
        })
        .collect();
    let half = len / 2;
    let df = 1.0 / (len as f64 * x.step);
    let mut freqs = Vec::with_capacity(len);
    let mut mean = Vec::with_capacity(len);
    let mut stderr = Vec::with_capacity(len);
    for i in 0..len {
        let bin = (i + len - half) % len;
        let signed = i as isize - half as isize;
        freqs.push(signed as f64 * df);
        let vals = periodograms.iter().map(|p| p[bin]);
        let m = vals.clone().sum::<f64>() / k as f64;
        let var = vals.map(|v| (v - m) * (v - m)).sum::<f64>() / (k - 1) as f64;
        mean.push(m);
        stderr.push((var / k as f64).sqrt());
    }
    Ok(StatCurve::real("psd", ModelTag::Empirical, x.scenario_id, freqs, mean).with_stderr(stderr))
}

/// Crossings of one envelope level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelCrossings {
    pub level: f64,
    pub up: usize,
    pub down: usize,
    /// Time below the level, with crossing instants linearly interpolated.
    pub below_time: f64,
    pub duration: f64,
}

impl LevelCrossings {
    pub fn lcr(&self) -> f64 {
        self.up as f64 / self.duration
    }

    /// Mean fade duration, NaN when the envelope never drops through the level.
    pub fn afd(&self) -> f64 {
        if self.down == 0 {
            f64::NAN
        } else {
            self.below_time / self.down as f64
        }
    }
}

pub fn level_crossings(envelope: &[f64], step: f64, level: f64) -> LevelCrossings {
    let mut out = LevelCrossings {
        level,
        up: 0,
        down: 0,
        below_time: 0.0,
        duration: envelope.len().saturating_sub(1) as f64 * step,
    };
    for w in envelope.windows(2) {
        let (a, b) = (w[0], w[1]);
        match (a < level, b < level) {
            (true, true) => out.below_time += step,
            (false, false) => {}
            (true, false) => {
                out.up += 1;
                out.below_time += step * (level - a) / (b - a);
            }
            (false, true) => {
                out.down += 1;
                out.below_time += step * (a - level) / (a - b);
            }
        }
    }
    out
}

/// Level crossing rate and average fade duration on the configured levels.
pub fn empirical_lcr_afd(x: Series<'_>, ec: &EstimatorConfig) -> Result<(StatCurve, StatCurve)> {
    if x.samples.len() < 2 {
        return Err(Error::Contract("crossing statistics need at least two samples".into()));
    }
    let env: Vec<f64> = x.samples.iter().map(|v| v.norm()).collect();
    let rms = (env.iter().map(|e| e * e).sum::<f64>() / env.len() as f64).sqrt();
    let (abscissa, levels) = ec.level_grid.resolve(rms);
    let stats: Vec<LevelCrossings> = levels.par_iter().map(|&r| level_crossings(&env, x.step, r)).collect();
    let lcr = StatCurve::real(
        "lcr",
        ModelTag::Empirical,
        x.scenario_id,
        abscissa.clone(),
        stats.iter().map(LevelCrossings::lcr).collect(),
    );
    let afd = StatCurve::real(
        "afd",
        ModelTag::Empirical,
        x.scenario_id,
        abscissa,
        stats.iter().map(LevelCrossings::afd).collect(),
    );
    Ok((lcr, afd))
}

/// Density-normalized histogram of `values` over `[lo, hi)` with Poisson
/// standard errors. Values outside the range are counted in the total but
/// fall in no bin.
pub fn histogram(values: &[f64], lo: f64, hi: f64, n_bins: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    for &v in values {
        if v >= lo && v < hi {
            counts[(((v - lo) / width) as usize).min(n_bins - 1)] += 1;
        }
    }
    let norm = values.len() as f64 * width;
    let centers = (0..n_bins).map(|i| lo + (i as f64 + 0.5) * width).collect();
    let dens = counts.iter().map(|&c| c as f64 / norm).collect();
    let se = counts.iter().map(|&c| (c as f64).sqrt() / norm).collect();
    (centers, dens, se)
}

/// Amplitude histogram on `[0, max |x|]` and phase histogram on `[-pi, pi)`.
pub fn empirical_pdfs(x: Series<'_>, ec: &EstimatorConfig) -> Result<(StatCurve, StatCurve)> {
    if ec.n_bins < 8 {
        return Err(Error::Contract(format!("n_bins {} must be at least 8", ec.n_bins)));
    }
    if x.samples.is_empty() {
        return Err(Error::Contract("empty series".into()));
    }
    let amp: Vec<f64> = x.samples.iter().map(|v| v.norm()).collect();
    let phase: Vec<f64> = x.samples.iter().map(|v| v.arg()).collect();
    let top = amp.iter().cloned().fold(0.0, f64::max);
    let top = if top > 0.0 { top * (1.0 + 1e-12) } else { 1.0 };
    let (ax, ay, ase) = histogram(&amp, 0.0, top, ec.n_bins);
    // arg() returns pi for negative reals; fold it onto -pi
    let phase: Vec<f64> = phase.into_iter().map(|p| if p >= PI { -PI } else { p }).collect();
    let (px, py, pse) = histogram(&phase, -PI, PI, ec.n_bins);
    Ok((
        StatCurve::real("amplitude_pdf", ModelTag::Empirical, x.scenario_id, ax, ay).with_stderr(ase),
        StatCurve::real("phase_pdf", ModelTag::Empirical, x.scenario_id, px, py).with_stderr(pse),
    ))
}

/// Total variation distance between two sets of bin masses.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
