mod common;

use std::f64::consts::PI;

use common::*;
use hypershell::rng::uniform_points;
use hypershell::theta::{chi, g_eval, poisson_trials, reduce_v, SmoothingParams};
use hypershell::{theta_integral, theta_sum, QuadraticForm, Scalar, ThetaParams};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn periodicity_reduction(form in block_form(1, 1), r in 1.0f64..3.0, zr in 0.05f64..0.2, zi in -1.0f64..1.0, base in prop::collection::vec(-3.0f64..3.0, 2), k in prop::collection::vec(1i32..6, 2), sign in prop::collection::vec(prop::bool::ANY, 2)) {
        // Re z < 2/r² keeps the minus block convergent
        let z = c(zr * 2.0 / (r * r), zi);
        let v: Vec<Complex64> = (0..2).map(|j| {
            let s = if sign[j] { 1.0 } else { -1.0 };
            c(base[j] + s * (PI * r + 2.0 * PI * r * k[j] as f64), 0.1 * base[j])
        }).collect();
        prop_assert!(v.iter().all(|x| x.re.abs() >= PI * r));
        let direct = theta_sum(&ThetaParams::new(form.clone(), r, z).with_v(v.clone())).unwrap();
        let reduced = theta_sum(&ThetaParams::new(form.clone(), r, z).with_v(reduce_v(&v, r))).unwrap();
        // Σ|terms|: the same sum with the phases removed
        let moduli = theta_sum(&ThetaParams::new(form, r, c(z.re, 0.0)).with_v(v.iter().map(|x| c(0.0, x.im)).collect())).unwrap();
        prop_assert!((direct.value - reduced.value).norm() <= 1e-12 * moduli.value.re, "{} vs {} (scale {})", direct.value, reduced.value, moduli.value.re);
    }

    #[test]
    fn integral_factors_over_blocks(form in block_form(2, 2), r in 1.0f64..2.0, zr in 0.05f64..0.9, zi in -2.0f64..2.0, w in prop::collection::vec(-2.0f64..2.0, 8)) {
        let d = form.dim();
        let (dp, _) = form.block().unwrap();
        let z = c(zr * 2.0 / (r * r), zi);
        let v: Vec<Complex64> = (0..d).map(|j| c(w[j], 0.3 * w[4 + j])).collect();
        let whole = theta_integral(&ThetaParams::new(form.clone(), r, z).with_v(v.clone())).unwrap();
        let plus = form.plus_form().unwrap();
        let minus = form.minus_form().unwrap().scale(&Scalar::from(-1)).unwrap();
        let a = theta_integral(&ThetaParams::new(plus, r, z).with_v(v[..dp].to_vec())).unwrap();
        let b = theta_integral(&ThetaParams::new(minus, r, z).with_v(v[dp..].to_vec())).unwrap();
        prop_assert!((whole - a * b).norm() <= 1e-12 * whole.norm());
    }

    #[test]
    fn ramp_is_lipschitz(a in -5.0f64..5.0, len in 0.0f64..4.0, w in 0.01f64..3.0, x in -10.0f64..10.0, y in -10.0f64..10.0) {
        let p = SmoothingParams::new(a, a + len, w, 0.1, 3);
        let (gx, gy) = (g_eval(&p, x), g_eval(&p, y));
        prop_assert!((gx - gy).abs() <= (x - y).abs() / w * (1.0 + 1e-12) + 1e-15);
        prop_assert!((0.0..=1.0).contains(&gx));
    }

    #[test]
    fn taper_plateau_and_support(form in block_form(2, 1), eps in 0.01f64..=0.25, outer in prop::bool::ANY, seed in 0u64..10_000) {
        let d = form.dim();
        let p = SmoothingParams { outer, ..SmoothingParams::new(0.0, 1.0, 0.5, eps, d) };
        let (s0, s1) = p.transition();
        let pts = uniform_points(seed, 5, d, 10_000, -1.4, 1.4);
        for u in pts.chunks(d) {
            let sup = u.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            let x = chi(&form, &p, u);
            if sup <= s0 {
                prop_assert_eq!(x, (2.0 * form.plus_value(u)).exp());
            } else if sup > s1 {
                prop_assert_eq!(x, 0.0);
            } else {
                prop_assert!(x >= 0.0 && x <= (2.0 * form.plus_value(u)).exp());
            }
        }
    }
}

#[test]
fn random_siegel_instances_satisfy_poisson() {
    for (dim, seed) in [(1, 31), (2, 32)] {
        for trial in poisson_trials(dim, 8, seed).unwrap() {
            assert!(trial.report.residual < 1e-10, "d={dim} trial {}: {:?}", trial.trial, trial.report);
        }
    }
}

#[test]
fn integral_of_a_positive_form_is_gaussian() {
    // (2/r² + z)·diag(1, 2): π / ((2/r² + z)·√2)
    let form = QuadraticForm::diagonal_str(&["1", "2"]).unwrap();
    let (r, z) = (2.0, c(0.75, 0.4));
    let got = theta_integral(&ThetaParams::new(form, r, z)).unwrap();
    let s = c(2.0 / (r * r), 0.0) + z;
    let want = PI / (s * 2f64.sqrt());
    assert!((got - want).norm() <= 1e-13);
}
