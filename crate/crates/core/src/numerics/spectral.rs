//! Uniform sampling grids and the ACF-to-PSD transform.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// `count` equally spaced points `start + i * step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl UniformGrid {
    pub fn new(start: f64, step: f64, count: usize) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() || !start.is_finite() {
            return Err(Error::Contract(format!("grid step must be positive and finite, got {step}")));
        }
        if count < 2 {
            return Err(Error::Contract(format!("grid needs at least 2 points, got {count}")));
        }
        Ok(Self { start, step, count })
    }

    /// `2 * half + 1` points centered on zero.
    pub fn symmetric(half: usize, step: f64) -> Result<Self> {
        Self::new(-(half as f64) * step, step, 2 * half + 1)
    }

    /// Rebuilds a grid from explicit abscissae, rejecting non-uniform spacing.
    pub fn from_points(points: &[f64]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Contract("grid needs at least 2 points".into()));
        }
        let step = (points[points.len() - 1] - points[0]) / (points.len() - 1) as f64;
        for (i, &x) in points.iter().enumerate() {
            let expected = points[0] + i as f64 * step;
            if (x - expected).abs() > 1e-9 * step.abs().max(f64::MIN_POSITIVE) {
                return Err(Error::Contract(format!(
                    "grid is not uniform: point {i} is {x}, expected {expected}"
                )));
            }
        }
        Self::new(points[0], step, points.len())
    }

    pub fn value(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.value(self.count - 1)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.count % 2 == 1 && (self.start + self.end()).abs() <= 1e-9 * self.step
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Taper {
    Rectangular,
    /// Tukey (tapered cosine) window; the parameter is the tapered fraction.
    Tukey(f64),
}

impl Default for Taper {
    fn default() -> Self {
        Taper::Tukey(0.25)
    }
}

impl Taper {
    /// Window values for `n` points, symmetric about the middle sample.
    pub fn weights(&self, n: usize) -> Vec<f64> {
        match *self {
            Taper::Rectangular => vec![1.0; n],
            Taper::Tukey(alpha) => {
                if n < 2 || alpha <= 0.0 {
                    return vec![1.0; n];
                }
                let alpha = alpha.min(1.0);
                let m = (n - 1) as f64;
                let edge = alpha * m / 2.0;
                (0..n)
                    .map(|i| {
                        let x = (i as f64).min(m - i as f64);
                        if x < edge {
                            0.5 * (1.0 + (std::f64::consts::PI * (x / edge - 1.0)).cos())
                        } else {
                            1.0
                        }
                    })
                    .collect()
            }
        }
    }
}

/// Power spectral density sampled on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub density: Vec<f64>,
    /// Largest imaginary part of the transform relative to the largest real part.
    pub imag_residual: f64,
}

impl Spectrum {
    pub fn df(&self) -> f64 {
        self.freqs[1] - self.freqs[0]
    }

    /// Riemann sum of the density, i.e. the zero-lag value of the ACF.
    pub fn total_power(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.df()
    }
}

/// Transforms an ACF sampled on a symmetric lag grid into a PSD.
///
/// The lag sequence is tapered, shifted so lag zero sits at index 0, and
/// transformed with `exp(-j 2 pi f tau)`. The frequency axis is centered on
/// zero with spacing `1 / (count * step)`. The density is scaled so that its
/// Riemann sum equals the (tapered) ACF at lag zero.
pub fn fft_psd(
    acf: &[Complex64],
    grid: &UniformGrid,
    taper: Taper,
    normalize_peak: bool,
) -> Result<Spectrum> {
    let n = grid.count;
    if acf.len() != n {
        return Err(Error::Contract(format!(
            "ACF has {} samples but the lag grid has {n}",
            acf.len()
        )));
    }
    if !grid.is_symmetric() {
        return Err(Error::Contract(
            "ACF must be sampled on an odd-length grid symmetric about zero lag".into(),
        ));
    }
    let w = taper.weights(n);
    let half = n / 2;
    let mut buf: Vec<Complex64> = (0..n)
        .map(|i| {
            let src = (i + half) % n;
            acf[src] * w[src] * grid.step
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let df = 1.0 / (n as f64 * grid.step);
    let mut freqs = Vec::with_capacity(n);
    let mut density = Vec::with_capacity(n);
    let mut max_re = 0.0f64;
    let mut max_im = 0.0f64;
    for i in 0..n {
        let k = (i + half + 1) % n;
        let v = buf[k];
        let bin = i as isize - half as isize;
        freqs.push(bin as f64 * df);
        density.push(v.re);
        max_re = max_re.max(v.re.abs());
        max_im = max_im.max(v.im.abs());
    }
    if normalize_peak && max_re > 0.0 {
        let peak = density.iter().cloned().fold(f64::MIN, f64::max);
        if peak > 0.0 {
            density.iter_mut().for_each(|d| *d /= peak);
        }
    }
    Ok(Spectrum {
        freqs,
        density,
        imag_residual: if max_re > 0.0 { max_im / max_re } else { max_im },
    })
}
