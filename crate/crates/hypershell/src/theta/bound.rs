//! `|θ(r⁻² + itπ/2)|` against `q₀^{−3d/4} r^{d/2} (M_{1,t} ⋯ M_{d,t})^{−1/2}`.

use num_complex::Complex64;
use rayon::prelude::*;

use super::{theta_sum, ThetaParams};
use crate::error::{Error, Result};
use crate::forms::QuadraticForm;
use crate::minima::{successive_minima, MinimaProblem};

pub const DEFAULT_BOUND_GRID: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaBoundRow {
    pub t: f64,
    pub theta_abs: f64,
    pub product_d: f64,
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaBoundReport {
    pub rows: Vec<ThetaBoundRow>,
    pub max_ratio: f64,
    pub t_argmax: f64,
}

/// Evaluates the ratio on `grid` points uniform on `[2/(πr), 2]`. The theta value is 4-periodic
/// in `t` and `θ(−t) = conj θ(t)` for real `M`, so larger `t` adds nothing.
pub fn theta_bound_check(form: &QuadraticForm, m: &[f64], r: f64, grid: usize) -> Result<ThetaBoundReport> {
    let d = form.dim();
    if d > 5 {
        return Err(Error::InvalidParameter(format!("theta bound check supports d <= 5, got {d}")));
    }
    if grid < 2 {
        return Err(Error::InvalidParameter("grid needs at least two points".into()));
    }
    let q0 = form.spectral()?.q0;
    let lo = 2.0 / (std::f64::consts::PI * r);
    let hi = 2.0;
    if lo >= hi {
        return Err(Error::InvalidParameter(format!("r = {r} leaves an empty t-range")));
    }
    let rows: Vec<ThetaBoundRow> = (0..grid)
        .into_par_iter()
        .map(|i| -> Result<ThetaBoundRow> {
            let t = lo + (hi - lo) * i as f64 / (grid - 1) as f64;
            let z = Complex64::new(1.0 / (r * r), t * std::f64::consts::FRAC_PI_2);
            let th = theta_sum(&ThetaParams::new(form.clone(), r, z).with_m(m.to_vec()))?;
            let mins = successive_minima(&MinimaProblem::new(form.clone(), t, r)?)?;
            let product_d = mins.product_d.ok_or(Error::Underdetermined)?;
            let bound = q0.powf(-0.75 * d as f64) * r.powf(d as f64 / 2.0) / product_d.sqrt();
            let theta_abs = th.value.norm();
            Ok(ThetaBoundRow { t, theta_abs, product_d, bound, ratio: theta_abs / bound })
        })
        .collect::<Result<_>>()?;
    let best = rows.iter().max_by(|a, b| a.ratio.total_cmp(&b.ratio)).expect("grid is nonempty");
    Ok(ThetaBoundReport { max_ratio: best.ratio, t_argmax: best.t, rows })
}
