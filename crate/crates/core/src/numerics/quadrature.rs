//! One- and two-dimensional quadrature.
//!
//! The adaptive rule is a globally adaptive Gauss–Kronrod (7, 15) scheme:
//! the interval with the largest error estimate is bisected until the summed
//! estimate satisfies `error <= max(abs_tol, rel_tol * |result|)`. The 2D
//! integrator nests two 1D integrators. Both are generic over real and
//! complex integrands.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::ops::{Add, Mul, Sub};
use std::sync::atomic::{AtomicBool, Ordering as AtomicOrdering};
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use once_cell::sync::Lazy;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    /// Globally adaptive Gauss–Kronrod (7, 15).
    Adaptive,
    /// Fixed n-point Gauss–Legendre (tensor product in 2D).
    GaussLegendre(usize),
}

/// Cooperative cancellation flag shared between a caller and a long quadrature.
#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, AtomicOrdering::Relaxed);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(AtomicOrdering::Relaxed)
    }
}

#[derive(Debug, Clone)]
pub struct QuadratureSpec {
    pub rule: QuadratureRule,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub cancel: Option<CancelToken>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rule: QuadratureRule::Adaptive,
            abs_tol: 1e-8,
            rel_tol: 1e-6,
            max_subdivisions: 2000,
            cancel: None,
        }
    }
}

impl QuadratureSpec {
    pub fn adaptive(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn gauss_legendre(points: usize) -> Self {
        Self {
            rule: QuadratureRule::GaussLegendre(points),
            ..Self::default()
        }
    }

    pub fn with_cancel(mut self, token: CancelToken) -> Self {
        self.cancel = Some(token);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::Contract(format!(
                "quadrature tolerances must be positive (abs {}, rel {})",
                self.abs_tol, self.rel_tol
            )));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::Contract("max_subdivisions must be at least 1".into()));
        }
        if let QuadratureRule::GaussLegendre(0) = self.rule {
            return Err(Error::Contract("Gauss–Legendre rule needs at least one point".into()));
        }
        Ok(())
    }

    fn check_cancel(&self) -> Result<()> {
        match &self.cancel {
            Some(t) if t.is_cancelled() => Err(Error::Cancelled),
            _ => Ok(()),
        }
    }
}

/// Values a quadrature can accumulate.
pub trait QuadValue:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn magnitude(self) -> f64;
    fn into_complex(self) -> Complex64;
}

impl QuadValue for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
    fn into_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl QuadValue for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
    fn into_complex(self) -> Complex64 {
        self
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

/// Axis-aligned integration box `[x_lo, x_hi] x [y_lo, y_hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl Rect {
    pub fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Self {
        Self { x_lo, x_hi, y_lo, y_hi }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<T: QuadValue>(f: &mut impl FnMut(f64) -> T, a: f64, b: f64) -> (T, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod = kronrod + pair * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + pair * WG[j / 2];
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).magnitude();
    (value, err)
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    err: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn adaptive_1d<T: QuadValue>(
    f: &mut impl FnMut(f64) -> T,
    lo: f64,
    hi: f64,
    spec: &QuadratureSpec,
) -> Result<Estimate<T>> {
    let (value, err) = gk15(f, lo, hi);
    let mut evaluations = 15;
    let mut total = value;
    let mut total_err = err;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a: lo, b: hi, value, err });
    let mut subdivisions = 0;

    loop {
        let tol = spec.abs_tol.max(spec.rel_tol * total.magnitude());
        if total_err <= tol {
            return Ok(Estimate { value: total, error: total_err, evaluations });
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::Convergence {
                estimate: total.into_complex(),
                error_bound: total_err,
            });
        }
        spec.check_cancel()?;
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval cannot be split further in floating point.
            return Err(Error::Convergence {
                estimate: total.into_complex(),
                error_bound: total_err,
            });
        }
        let (lv, le) = gk15(f, worst.a, mid);
        let (rv, re) = gk15(f, mid, worst.b);
        evaluations += 30;
        subdivisions += 1;
        total = total - worst.value + lv + rv;
        total_err += le + re - worst.err;
        heap.push(Segment { a: worst.a, b: mid, value: lv, err: le });
        heap.push(Segment { a: mid, b: worst.b, value: rv, err: re });
        if subdivisions % 64 == 0 {
            // Re-sum to keep the running totals from drifting.
            total = heap.iter().fold(T::default(), |acc, s| acc + s.value);
            total_err = heap.iter().map(|s| s.err).sum();
        }
    }
}

static GL_CACHE: Lazy<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Gauss–Legendre nodes and weights on `[-1, 1]`, computed by Newton
/// iteration on the Legendre recurrence and cached per order.
pub fn gauss_legendre_nodes(n: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    let mut cache = GL_CACHE.lock().unwrap_or_else(|e| e.into_inner());
    cache
        .entry(n)
        .or_insert_with(|| Arc::new(compute_gauss_legendre(n)))
        .clone()
}

fn compute_gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn fixed_1d<T: QuadValue>(f: &mut impl FnMut(f64) -> T, lo: f64, hi: f64, n: usize) -> T {
    let rule = gauss_legendre_nodes(n);
    let (nodes, weights) = (&rule.0, &rule.1);
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let mut acc = T::default();
    for (x, w) in nodes.iter().zip(weights) {
        acc = acc + f(c + h * x) * *w;
    }
    acc * h
}

/// Integrates `f` over `[lo, hi]`.
pub fn integrate_1d<T: QuadValue, F: FnMut(f64) -> T>(
    mut f: F,
    lo: f64,
    hi: f64,
    spec: &QuadratureSpec,
) -> Result<Estimate<T>> {
    spec.validate()?;
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::Domain(format!("integration limits must be finite: [{lo}, {hi}]")));
    }
    if lo == hi {
        return Ok(Estimate { value: T::default(), error: 0.0, evaluations: 0 });
    }
    match spec.rule {
        QuadratureRule::Adaptive => adaptive_1d(&mut f, lo, hi, spec),
        QuadratureRule::GaussLegendre(n) => {
            let value = fixed_1d(&mut f, lo, hi, n);
            let coarse = fixed_1d(&mut f, lo, hi, n.div_ceil(2));
            Ok(Estimate {
                value,
                error: (value - coarse).magnitude(),
                evaluations: n + n.div_ceil(2),
            })
        }
    }
}

/// Integrates `f(x, y)` over a rectangle by nesting the 1D rule: the inner
/// integral over `y` is evaluated for every outer node in `x`.
pub fn integrate_2d<T: QuadValue, F: FnMut(f64, f64) -> T>(
    mut f: F,
    rect: Rect,
    spec: &QuadratureSpec,
) -> Result<Estimate<T>> {
    spec.validate()?;
    let width = (rect.x_hi - rect.x_lo).abs();
    let inner_spec = QuadratureSpec {
        abs_tol: 0.1 * spec.abs_tol / width.max(1e-300),
        rel_tol: 0.1 * spec.rel_tol,
        ..spec.clone()
    };
    let mut evaluations = 0usize;
    let mut inner_err = 0.0f64;
    let mut failure: Option<Error> = None;
    let outer = integrate_1d(
        |x| {
            if failure.is_some() {
                return T::default();
            }
            match integrate_1d(|y| f(x, y), rect.y_lo, rect.y_hi, &inner_spec) {
                Ok(e) => {
                    evaluations += e.evaluations;
                    inner_err = inner_err.max(e.error);
                    e.value
                }
                Err(e) => {
                    failure = Some(e);
                    T::default()
                }
            }
        },
        rect.x_lo,
        rect.x_hi,
        &QuadratureSpec {
            abs_tol: 0.9 * spec.abs_tol,
            ..spec.clone()
        },
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let outer = outer?;
    Ok(Estimate {
        value: outer.value,
        error: outer.error + width * inner_err,
        evaluations,
    })
}
