//! Both sides of the theta transformation formulas, summed to certified tails.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::det_inv_sqrt;
use super::gauss::gaussian_sum;
use crate::error::{Error, Result};
use crate::forms::QuadraticForm;
use crate::rng::uniform_points;

const PI: f64 = std::f64::consts::PI;
const MAX_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonReport {
    pub lhs: Complex64,
    pub rhs: Complex64,
    /// `|lhs − rhs| / max(1, |lhs|)`.
    pub residual: f64,
    /// Combined certified tail of both sides, relative like `residual`.
    pub tail: f64,
}

fn report(lhs: (Complex64, f64), rhs: (Complex64, f64)) -> PoissonReport {
    let scale = lhs.0.norm().max(1.0);
    PoissonReport { lhs: lhs.0, rhs: rhs.0, residual: (lhs.0 - rhs.0).norm() / scale, tail: (lhs.1 + rhs.1) / scale }
}

fn check_dim(d: usize, v: usize) -> Result<()> {
    if v != d {
        return Err(Error::DimensionMismatch { expected: d, got: v });
    }
    if d == 0 || d > MAX_DIM {
        return Err(Error::InvalidParameter(format!("transformation checks support 1 <= d <= {MAX_DIM}, got {d}")));
    }
    Ok(())
}

fn bilinear(a: &DMatrix<Complex64>, x: &[Complex64], y: &[Complex64]) -> Complex64 {
    let d = x.len();
    (0..d).map(|i| (0..d).map(|j| a[(i, j)] * x[i] * y[j]).sum::<Complex64>()).sum()
}

fn mat_vec(a: &DMatrix<Complex64>, x: &[Complex64]) -> Vec<Complex64> {
    (0..x.len()).map(|i| (0..x.len()).map(|j| a[(i, j)] * x[j]).sum()).collect()
}

fn inverse(a: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let inv = a.clone().try_inverse().ok_or(Error::SingularMatrix)?;
    Ok((&inv + inv.transpose()) * Complex64::new(0.5, 0.0))
}

/// `Σ exp[πiΩ[m] + 2πi⟨m,v⟩]` against `det(Ω/i)^{−1/2} exp[−πiΩ⁻¹[v]] Σ exp[−πiΩ⁻¹[n] + 2πi⟨n,Ω⁻¹v⟩]`
/// for `Ω` in the Siegel upper half plane. `terms` caps each side.
pub fn poisson_residual(omega: &DMatrix<Complex64>, v: &[Complex64], terms: u64) -> Result<PoissonReport> {
    let d = omega.nrows();
    check_dim(d, v.len())?;
    let scale = omega.iter().map(|z| z.norm()).fold(1.0, f64::max);
    for i in 0..d {
        for j in 0..i {
            if (omega[(i, j)] - omega[(j, i)]).norm() > 1e-12 * scale {
                return Err(Error::NotSymmetric(i, j));
            }
        }
    }
    let im = omega.map(|z| z.im);
    if SymmetricEigen::new(im).eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::NotInSiegelHalfPlane);
    }
    let pi_i = Complex64::new(0.0, PI);
    let budget = terms as f64;
    let b = omega.map(|z| -pi_i * z);
    let c: Vec<Complex64> = v.iter().map(|x| 2.0 * pi_i * x).collect();
    let lhs = gaussian_sum(&b, &c, 4.0, budget)?;

    let inv = inverse(omega)?;
    let inv_v = mat_vec(&inv, v);
    let b2 = inv.map(|z| pi_i * z);
    let c2: Vec<Complex64> = inv_v.iter().map(|x| 2.0 * pi_i * x).collect();
    let right = gaussian_sum(&b2, &c2, 4.0, budget)?;
    let pre = det_inv_sqrt(&omega.map(|z| z / Complex64::i()))? * (-pi_i * bilinear(&inv, v, v)).exp();
    Ok(report((lhs.value, lhs.tail), (pre * right.value, pre.norm() * right.tail)))
}

/// The real-`z` form: `Σ exp[−zΩ[m] + 2πi⟨m,v⟩]` against
/// `det(zΩ/π)^{−1/2} Σ exp[−(π²/z)Ω⁻¹[n+v]]` for real positive definite `Ω` and `Re z > 0`.
pub fn poisson_residual_real(z: Complex64, omega: &DMatrix<f64>, v: &[Complex64], terms: u64) -> Result<PoissonReport> {
    let d = omega.nrows();
    check_dim(d, v.len())?;
    if !(z.re > 0.0) {
        return Err(Error::InvalidParameter(format!("Re z must be positive, got {}", z.re)));
    }
    let eig = SymmetricEigen::new(omega.clone());
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::InvalidParameter("matrix is not positive definite".into()));
    }
    let budget = terms as f64;
    let b = omega.map(|x| z * x);
    let c: Vec<Complex64> = v.iter().map(|x| 2.0 * PI * Complex64::i() * x).collect();
    let lhs = gaussian_sum(&b, &c, 4.0, budget)?;

    // −B'[n + v] = −B'[v] − B'[n] − 2⟨B'v, n⟩ with B' = (π²/z)Ω⁻¹
    let inv = eig.eigenvectors.clone() * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l)) * eig.eigenvectors.transpose();
    let bp = inv.map(|x| PI * PI / z * x);
    let bpv = mat_vec(&bp, v);
    let c2: Vec<Complex64> = bpv.iter().map(|x| -2.0 * x).collect();
    let right = gaussian_sum(&bp, &c2, 4.0, budget)?;
    let mut pre = (-bilinear(&bp, v, v)).exp();
    for l in eig.eigenvalues.iter() {
        pre /= (z * *l / PI).sqrt();
    }
    Ok(report((lhs.value, lhs.tail), (pre * right.value, pre.norm() * right.tail)))
}

/// The form version at `z = r⁻² + it`: `Σ exp[−(2/r²)Q₊[m] − zQ[m] + 2πi⟨m,v⟩]` against
/// `det(A/π)^{−1/2} exp[−π²A⁻¹[v]] Σ exp[−π²A⁻¹[n] − 2π²⟨A⁻¹n, v⟩]`, `A = (2/r²)Q₊ + zQ`.
pub fn theta_poisson_residual(form: &QuadraticForm, r: f64, t: f64, v: &[Complex64], terms: u64) -> Result<PoissonReport> {
    let d = form.dim();
    check_dim(d, v.len())?;
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("r must be positive, got {r}")));
    }
    let z = Complex64::new(1.0 / (r * r), t);
    let q = form.matrix();
    let qp = form.q_plus();
    let a = DMatrix::from_fn(d, d, |i, j| Complex64::new(2.0 / (r * r) * qp[(i, j)], 0.0) + z * q[(i, j)]);
    let budget = terms as f64;
    let c: Vec<Complex64> = v.iter().map(|x| 2.0 * PI * Complex64::i() * x).collect();
    let lhs = gaussian_sum(&a, &c, 4.0, budget)?;

    let inv = inverse(&a)?;
    let b2 = inv.map(|x| PI * PI * x);
    let c2: Vec<Complex64> = mat_vec(&b2, v).iter().map(|x| -2.0 * x).collect();
    let right = gaussian_sum(&b2, &c2, 4.0, budget)?;
    let pre = det_inv_sqrt(&a.map(|x| x / PI))? * (-bilinear(&b2, v, v)).exp();
    Ok(report((lhs.value, lhs.tail), (pre * right.value, pre.norm() * right.tail)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoissonKind {
    Siegel,
    RealZ,
}

impl std::fmt::Display for PoissonKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PoissonKind::Siegel => "siegel",
            PoissonKind::RealZ => "real_z",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonTrial {
    pub trial: usize,
    pub kind: PoissonKind,
    pub report: PoissonReport,
}

/// Terms per side in [`poisson_trials`].
pub const TRIAL_TERMS: u64 = 5_000_000;

/// Random instances, alternating the Siegel form (even trials) and the real-`z` form (odd
/// trials). Entries are drawn from the counter-based stream `trial` of `seed`, so each trial is
/// reproducible on its own.
pub fn poisson_trials(dim: usize, trials: usize, seed: u64) -> Result<Vec<PoissonTrial>> {
    check_dim(dim, dim)?;
    (0..trials)
        .map(|trial| {
            let u = uniform_points(seed, trial as u64, 1, 3 * dim * dim + 2 * dim + 2, -1.0, 1.0);
            let mut next = u.into_iter();
            let mut draw = move || next.next().expect("enough draws");
            let a = DMatrix::from_fn(dim, dim, |_, _| draw());
            let pd = &a * a.transpose() + DMatrix::identity(dim, dim) * 0.5;
            let x = DMatrix::from_fn(dim, dim, |_, _| draw());
            let x = (&x + x.transpose()) * 0.5;
            let v: Vec<Complex64> = (0..dim).map(|_| Complex64::new(0.5 * draw(), 0.2 * draw())).collect();
            let (kind, report) = if trial % 2 == 0 {
                let omega = DMatrix::from_fn(dim, dim, |i, j| Complex64::new(x[(i, j)], pd[(i, j)]));
                (PoissonKind::Siegel, poisson_residual(&omega, &v, TRIAL_TERMS)?)
            } else {
                let z = Complex64::new(1.15 + 0.85 * draw(), 2.0 * draw());
                (PoissonKind::RealZ, poisson_residual_real(z, &pd, &v, TRIAL_TERMS)?)
            };
            Ok(PoissonTrial { trial, kind, report })
        })
        .collect()
}
