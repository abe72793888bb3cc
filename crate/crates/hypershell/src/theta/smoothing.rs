//! The ramp `g_{a,b,w}`, its transform factor `h_{a,b,w}`, the taper `χ_{±ε}` and the smoothed
//! count/integral pair.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forms::QuadraticForm;
use crate::rng::uniform_points;

const MC_STREAM: u64 = 0x7a9e;
const MAX_POINTS: f64 = 2e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingParams {
    pub a: f64,
    pub b: f64,
    /// Ramp width.
    pub w: f64,
    pub eps: f64,
    /// Taper order; the transition is `C^{k−1}`.
    pub k: u32,
    /// `true` for `χ_{+ε}` (transition on `[1, 1+ε]`), `false` for `χ_{−ε}` (on `[1−ε, 1]`).
    pub outer: bool,
}

impl SmoothingParams {
    /// `χ_{+ε}` with the default order `K = d + 2`.
    pub fn new(a: f64, b: f64, w: f64, eps: f64, d: usize) -> Self {
        SmoothingParams { a, b, w, eps, k: d as u32 + 2, outer: true }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a <= self.b) {
            return Err(Error::InvalidParameter(format!("need a <= b, got [{}, {}]", self.a, self.b)));
        }
        if !(self.w > 0.0) {
            return Err(Error::InvalidParameter(format!("ramp width must be positive, got {}", self.w)));
        }
        if !(self.eps > 0.0 && self.eps <= 0.25) {
            return Err(Error::InvalidParameter(format!("eps must lie in (0, 1/4], got {}", self.eps)));
        }
        if self.k == 0 || self.k > 30 {
            return Err(Error::InvalidParameter(format!("taper order must be in 1..=30, got {}", self.k)));
        }
        Ok(())
    }

    /// `(min{1, 1±ε}, max{1, 1±ε})`.
    pub fn transition(&self) -> (f64, f64) {
        if self.outer {
            (1.0, 1.0 + self.eps)
        } else {
            (1.0 - self.eps, 1.0)
        }
    }
}

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

/// `g_{a,b,w}(x) = ((b+w−x)₊ − (b−x)₊ − (a−x)₊ + (a−w−x)₊) / w`.
pub fn g_eval(p: &SmoothingParams, x: f64) -> f64 {
    let (a, b, w) = (p.a, p.b, p.w);
    if a <= x && x <= b {
        return 1.0;
    }
    ((pos(b + w - x) - pos(b - x) - pos(a - x) + pos(a - w - x)) / w).clamp(0.0, 1.0)
}

/// `(e^{wz} − 1)/(wz) · (e^{bz} − e^{(a−w)z})`; `h(z)/z` is the two-sided Laplace transform of `g`.
pub fn h_abw(p: &SmoothingParams, z: Complex64) -> Complex64 {
    let x = p.w * z;
    let ramp = if x.norm() < 1e-5 { 1.0 + x / 2.0 + x * x / 6.0 } else { (x.exp() - 1.0) / x };
    ramp * ((p.b * z).exp() - ((p.a - p.w) * z).exp())
}

/// Irwin–Hall distribution function of order `k` (the `k`-fold self-convolution of a unit box).
fn irwin_hall_cdf(k: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let kf = k as f64;
    if x >= kf {
        return 1.0;
    }
    let mut s = 0.0;
    let mut binom = 1.0;
    let mut fact = 1.0;
    for j in 1..=k {
        fact *= j as f64;
    }
    for j in 0..=(x.floor() as u32) {
        if j > 0 {
            binom *= (k - j + 1) as f64 / j as f64;
        }
        let term = binom * (x - j as f64).powi(k as i32);
        s += if j % 2 == 0 { term } else { -term };
    }
    (s / fact).clamp(0.0, 1.0)
}

fn taper_1d(p: &SmoothingParams, s: f64) -> f64 {
    let (s0, s1) = p.transition();
    if s <= s0 {
        return 1.0;
    }
    if s > s1 {
        return 0.0;
    }
    1.0 - irwin_hall_cdf(p.k, p.k as f64 * (s - s0) / (s1 - s0))
}

/// `Π_j τ(|u_j|)`: 1 for `|u|_∞ ≤ min{1, 1±ε}`, 0 for `|u|_∞ > max{1, 1±ε}`, a B-spline
/// smoothstep in between.
pub fn taper(p: &SmoothingParams, u: &[f64]) -> f64 {
    u.iter().map(|x| taper_1d(p, x.abs())).product()
}

/// `χ_{±ε}(u) = exp[2Q₊[u]] · taper(u)`.
pub fn chi(form: &QuadraticForm, p: &SmoothingParams, u: &[f64]) -> f64 {
    let t = taper(p, u);
    if t == 0.0 {
        return 0.0;
    }
    (2.0 * form.plus_value(u)).exp() * t
}

/// `ψ_{r,±ε}(x) = exp[−(2/r²)Q₊[x]] χ_{±ε}(x/r)`, which reduces to `taper(x/r)`.
pub fn psi(p: &SmoothingParams, r: f64, x: &[f64]) -> f64 {
    let u: Vec<f64> = x.iter().map(|xi| xi / r).collect();
    taper(p, &u)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothedCounts {
    pub volz: f64,
    pub volr: f64,
    /// One standard error of the Monte Carlo `volr`.
    pub volr_stderr: f64,
    pub lattice_points: u64,
    pub samples: usize,
}

/// `volz = Σ_x g(Q[x−M]) ψ_r(x)` over the taper's support (exact finite sum) and
/// `volr`, the same integrand over `ℝ^d`, by Monte Carlo on the support box.
pub fn smoothed_counts(form: &QuadraticForm, m: &[f64], r: f64, sp: &SmoothingParams, samples: usize, seed: u64) -> Result<SmoothedCounts> {
    sp.validate()?;
    let d = form.dim();
    if m.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: m.len() });
    }
    if !(r >= 1.0) {
        return Err(Error::InvalidParameter(format!("r must be >= 1, got {r}")));
    }
    if samples < 1000 {
        return Err(Error::BadSampleCount(samples));
    }
    let (_, s1) = sp.transition();
    let half = s1 * r;
    let radius = half.floor() as i64;
    let side = 2 * radius + 1;
    let points = (side as f64).powi(d as i32);
    if points > MAX_POINTS {
        return Err(Error::BudgetExceeded(points));
    }
    let integrand = |x: &[f64]| -> f64 {
        let shifted: Vec<f64> = x.iter().zip(m).map(|(a, b)| a - b).collect();
        let g = g_eval(sp, form.value(&shifted));
        if g == 0.0 {
            0.0
        } else {
            g * psi(sp, r, x)
        }
    };
    let volz: f64 = (0..side)
        .into_par_iter()
        .map(|i0| {
            let mut x = vec![-radius as f64; d];
            x[0] = (i0 - radius) as f64;
            let mut s = 0.0;
            loop {
                s += integrand(&x);
                let mut i = 1;
                while i < d {
                    x[i] += 1.0;
                    if x[i] <= radius as f64 {
                        break;
                    }
                    x[i] = -radius as f64;
                    i += 1;
                }
                if i >= d {
                    break;
                }
            }
            s
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();

    let pts = uniform_points(seed, MC_STREAM, d, samples, -half, half);
    let vals: Vec<f64> = pts.par_chunks(d).map(integrand).collect();
    let n = samples as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let box_vol = (2.0 * half).powi(d as i32);
    Ok(SmoothedCounts { volz, volr: mean * box_vol, volr_stderr: (var / n).sqrt() * box_vol, lattice_points: points as u64, samples })
}
