//! Theta sums `θ_v(z)` and integrals `θ_{0,v}(z)` of a form, with Poisson checks and the
//! smoothing functions used to approximate shell counts.
//!
//! Terms are `exp[−(2/r²)Q₊[x] − zQ[x] + i⟨x, v/r − 2 Im(z) QM⟩]`, scaled by `exp[−zQ[M]]`.

mod bound;
mod gauss;
mod poisson;
mod smoothing;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forms::QuadraticForm;

pub use bound::{theta_bound_check, ThetaBoundReport, ThetaBoundRow, DEFAULT_BOUND_GRID};
pub use gauss::GaussSum;
pub use poisson::{poisson_residual, poisson_residual_real, poisson_trials, theta_poisson_residual, PoissonKind, PoissonReport, PoissonTrial, TRIAL_TERMS};
pub use smoothing::{chi, g_eval, h_abw, psi, smoothed_counts, taper, SmoothedCounts, SmoothingParams};

/// Default cutoff multiplier for the Gaussian factor.
pub const DEFAULT_TRUNCATION: f64 = 6.0;
/// Default cap on the number of lattice terms in one sum.
pub const DEFAULT_TERM_BUDGET: f64 = 5e7;

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaParams {
    pub form: QuadraticForm,
    pub m: Vec<f64>,
    pub r: f64,
    pub z: Complex64,
    pub v: Vec<Complex64>,
    pub truncation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaValue {
    pub value: Complex64,
    /// Certified bound on the dropped part, in the same units as `value`.
    pub tail: f64,
    pub terms: u64,
}

impl ThetaParams {
    /// `M = 0`, `v = 0` and the default truncation.
    pub fn new(form: QuadraticForm, r: f64, z: Complex64) -> Self {
        let d = form.dim();
        ThetaParams { form, m: vec![0.0; d], r, z, v: vec![Complex64::new(0.0, 0.0); d], truncation: DEFAULT_TRUNCATION }
    }

    pub fn with_m(mut self, m: Vec<f64>) -> Self {
        self.m = m;
        self
    }

    pub fn with_v(mut self, v: Vec<Complex64>) -> Self {
        self.v = v;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.form.dim();
        for len in [self.m.len(), self.v.len()] {
            if len != d {
                return Err(Error::DimensionMismatch { expected: d, got: len });
            }
        }
        if !(self.r >= 1.0) {
            return Err(Error::InvalidParameter(format!("r must be >= 1, got {}", self.r)));
        }
        if !(self.z.re > 0.0) {
            return Err(Error::InvalidParameter(format!("Re z must be positive, got {}", self.z.re)));
        }
        if !(self.truncation >= 4.0) {
            return Err(Error::InvalidParameter(format!("truncation must be >= 4, got {}", self.truncation)));
        }
        Ok(())
    }

    /// `(2/r²)Q₊ + zQ`.
    pub fn exponent_matrix(&self) -> DMatrix<Complex64> {
        let q = self.form.matrix();
        let qp = self.form.q_plus();
        let s = 2.0 / (self.r * self.r);
        DMatrix::from_fn(q.nrows(), q.ncols(), |i, j| Complex64::new(s * qp[(i, j)], 0.0) + self.z * q[(i, j)])
    }

    /// `v/r − 2 Im(z) QM`, the frequency of the oscillating factor.
    pub fn frequency(&self) -> Vec<Complex64> {
        let q = self.form.matrix();
        let d = self.m.len();
        (0..d)
            .map(|i| {
                let qm: f64 = (0..d).map(|j| q[(i, j)] * self.m[j]).sum();
                self.v[i] / self.r - 2.0 * self.z.im * qm
            })
            .collect()
    }

    /// `exp[−zQ[M]]`.
    pub fn prefactor(&self) -> Complex64 {
        (-self.z * self.form.value(&self.m)).exp()
    }
}

/// `θ_v(z)`, summed over a box large enough that the certified tail is below `10⁻¹⁴` of the
/// retained mass.
pub fn theta_sum(p: &ThetaParams) -> Result<ThetaValue> {
    theta_sum_with(p, DEFAULT_TERM_BUDGET)
}

pub fn theta_sum_with(p: &ThetaParams, budget: f64) -> Result<ThetaValue> {
    p.validate()?;
    let a = p.exponent_matrix();
    let c: Vec<Complex64> = p.frequency().into_iter().map(|w| Complex64::i() * w).collect();
    let s = gauss::gaussian_sum(&a, &c, p.truncation, budget)?;
    let pre = p.prefactor();
    Ok(ThetaValue { value: s.value * pre, tail: s.tail * pre.norm(), terms: s.terms })
}

/// Reduces each `Re v_j` into `[−πr, πr)`; `θ_v` is unchanged because the sum runs over integers.
pub fn reduce_v(v: &[Complex64], r: f64) -> Vec<Complex64> {
    let period = 2.0 * std::f64::consts::PI * r;
    v.iter().map(|x| Complex64::new(x.re - period * ((x.re + 0.5 * period) / period).floor(), x.im)).collect()
}

/// `θ_{0,v}(z)` in closed form, diagonalising `Q` by an orthogonal change of variables.
pub fn theta_integral(p: &ThetaParams) -> Result<Complex64> {
    p.validate()?;
    let d = p.form.dim();
    let eig = SymmetricEigen::new(p.form.matrix().clone());
    let s = 2.0 / (p.r * p.r);
    let w = p.frequency();
    let mut out = Complex64::new(std::f64::consts::PI.powf(d as f64 / 2.0), 0.0);
    let mut expo = Complex64::new(0.0, 0.0);
    for j in 0..d {
        let lambda = eig.eigenvalues[j];
        let alpha = s * lambda.abs() + p.z * lambda;
        if !(alpha.re > 0.0) {
            return Err(Error::Divergent(format!("(2/r^2)Q+ + Re(z)Q is not positive definite (eigen-direction {j})")));
        }
        let u = eig.eigenvectors.column(j);
        let wj: Complex64 = (0..d).map(|i| w[i] * u[i]).sum();
        // ∫ exp(−αy² + i ŵ y) dy = √(π/α) exp(−ŵ²/(4α)); principal root, Re α > 0
        out /= alpha.sqrt();
        expo -= wj * wj / (4.0 * alpha);
    }
    if !out.is_finite() {
        return Err(Error::SingularMatrix);
    }
    Ok(out * expo.exp() * p.prefactor())
}

/// `det(B)^{−1/2}` for complex symmetric `B` with positive definite real part, on the branch
/// continuous from `Im B = 0`.
pub(crate) fn det_inv_sqrt(b: &DMatrix<Complex64>) -> Result<Complex64> {
    let s = b.map(|z| z.re);
    let t = b.map(|z| z.im);
    let eig = SymmetricEigen::new(s);
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::Divergent("real part is not positive definite".into()));
    }
    let half = &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.powf(-0.5))) * eig.eigenvectors.transpose();
    let inner = &half * t * &half;
    let mu = SymmetricEigen::new((&inner + inner.transpose()) * 0.5).eigenvalues;
    let mut out = Complex64::new(eig.eigenvalues.iter().map(|l| l.powf(-0.5)).product(), 0.0);
    for m in mu.iter() {
        out /= Complex64::new(1.0, *m).sqrt();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn one() -> QuadraticForm {
        QuadraticForm::diagonal_str(&["1"]).unwrap()
    }

    #[test]
    fn one_dimensional_sum() {
        let p = ThetaParams::new(one(), 1.0, c(1.0, 0.0));
        let got = theta_sum(&p).unwrap();
        let direct: f64 = (-6..=6).map(|m: i32| (-3.0 * (m * m) as f64).exp()).sum();
        assert!((got.value.re - direct).abs() < 1e-15);
        // 1 + 2e⁻³ + 2e⁻¹² + …
        assert!((got.value.re - 1.099_586_4).abs() < 1e-7);
        assert_eq!(got.value.im, 0.0);
    }

    #[test]
    fn one_dimensional_integral() {
        let p = ThetaParams::new(one(), 1.0, c(1.0, 0.0));
        let got = theta_integral(&p).unwrap();
        assert!((got.re - (std::f64::consts::PI / 3.0).sqrt()).abs() < 1e-15);
        assert!((got.re - 1.023_326_7).abs() < 1e-7);
    }

    #[test]
    fn split_integral() {
        let q = QuadraticForm::diagonal_str(&["1", "-1"]).unwrap();
        let p = ThetaParams::new(q, 1.0, c(1.0, 0.0));
        let got = theta_integral(&p).unwrap();
        let pi = std::f64::consts::PI;
        assert!((got.re - (pi / 3.0).sqrt() * pi.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn periodic_in_v() {
        let q = QuadraticForm::symmetric(vec![vec![2.into(), 1.into()], vec![1.into(), (-3).into()]]).unwrap();
        let r = 2.0;
        let v = vec![c(0.4, 0.1), c(-1.3, 0.0)];
        let base = ThetaParams::new(q, r, c(0.1, 0.7)).with_m(vec![0.3, -0.2]).with_v(v.clone());
        let a = theta_sum(&base).unwrap().value;
        let shifted = base.clone().with_v(vec![v[0] + 2.0 * std::f64::consts::PI * r, v[1]]);
        let b = theta_sum(&shifted).unwrap().value;
        assert!((a - b).norm() < 1e-12 * a.norm());
    }

    #[test]
    fn real_z_positive() {
        let q = QuadraticForm::diagonal_str(&["1", "2", "-1"]).unwrap();
        let got = theta_sum(&ThetaParams::new(q, 3.0, c(0.05, 0.0))).unwrap().value;
        assert!(got.re > 0.0 && got.im == 0.0);
    }

    #[test]
    fn divergent_parameters() {
        // Re z > 2/r² on a negative direction makes the real part indefinite
        let q = QuadraticForm::diagonal_str(&["1", "-1"]).unwrap();
        let p = ThetaParams::new(q, 2.0, c(1.0, 0.0));
        assert!(matches!(theta_sum(&p), Err(Error::Divergent(_))));
        assert!(matches!(theta_integral(&p), Err(Error::Divergent(_))));
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = ThetaParams::new(one(), 1.0, c(0.0, 1.0));
        assert!(matches!(theta_sum(&p), Err(Error::InvalidParameter(_))));
        p.z = c(1.0, 0.0);
        p.truncation = 3.0;
        assert!(matches!(theta_sum(&p), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn det_branch_matches_eigen_product() {
        let b = DMatrix::from_row_slice(2, 2, &[c(2.0, 1.0), c(0.5, -0.3), c(0.5, -0.3), c(1.0, 2.0)]);
        let got = det_inv_sqrt(&b).unwrap();
        let det = b[(0, 0)] * b[(1, 1)] - b[(0, 1)] * b[(1, 0)];
        assert!((got * got * det - 1.0).norm() < 1e-13);
        // continuous from the real matrix: scale the imaginary part to zero
        let real = det_inv_sqrt(&b.map(|z| c(z.re, 0.0))).unwrap();
        assert!(real.im.abs() < 1e-15 && real.re > 0.0);
    }

    #[test]
    fn reduce_v_range() {
        let r = 1.5;
        let pi = std::f64::consts::PI;
        for x in [-20.0, -pi * r, 0.0, 3.0, pi * r, 50.0] {
            let y = reduce_v(&[c(x, 0.2)], r)[0];
            assert!(y.re >= -pi * r - 1e-12 && y.re < pi * r + 1e-12);
            assert_eq!(y.im, 0.2);
            let k = (x - y.re) / (2.0 * pi * r);
            assert!((k - k.round()).abs() < 1e-12);
        }
    }
}
