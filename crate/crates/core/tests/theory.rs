use std::f64::consts::FRAC_PI_4;
use std::sync::Arc;

use hyperbox::beta::{BetaModel, MixtureLaw};
use hyperbox::geometry::overlap_volume;
use hyperbox::quadrature::{integrate_2d, integrate_pieces, Tolerance};
use hyperbox::theory::*;
use proptest::prelude::*;

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
}

fn lattice(d: usize, r: i32) -> Vec<Vec<f64>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|p| (-r..=r).map(move |k| [p.clone(), vec![k as f64]].concat()))
            .collect();
    }
    out
}

#[test]
fn lattice_sums_vanish() {
    for d in 1..=3 {
        let pts = lattice(d, 2);
        // 2d·cov is integer valued, so the scaled sum is exact
        let scaled: f64 = pts.iter().map(|z| 2.0 * d as f64 * cov_integrable(z).unwrap()).sum();
        assert_eq!(scaled, 0.0, "d={d}");
        let sum: f64 = pts.iter().map(|z| cov_integrable(z).unwrap()).sum();
        assert!(sum.abs() <= 1e-15, "d={d}: {sum}");
        let nonzero = pts.iter().filter(|z| cov_integrable(z).unwrap() != 0.0).count();
        assert_eq!(nonzero, 2 * d + 1);
    }
}

#[test]
fn rv_partial_sums_telescope() {
    for a in [0.25, 0.5, 0.75] {
        for m in 0..=50 {
            let s: f64 = (-m..=m).map(|z| cov_rv_1d(z as f64, a).unwrap()).sum();
            let want = ((m + 1) as f64).powf(a) - (m as f64).powf(a);
            close(s, want, 1e-12);
        }
    }
}

#[test]
fn rv_a_one_is_overlap() {
    for k in -3000..=3000 {
        let z = k as f64 * 1e-3;
        close(cov_rv_1d(z, 1.0).unwrap(), overlap_volume(&[z]).unwrap(), 1e-15);
    }
}

/// Covariance computed straight from the density:
/// `n^d ov(z) + ∫ β(t) ∏ (n - |n z_i - t_i|)₊ dt`.
fn direct_cov(model: &BetaModel, n: f64, z: &[f64], reach: f64) -> f64 {
    let t = Tolerance { abs: 1e-11, rel: 1e-10 };
    let ov = n.powi(z.len() as i32) * overlap_volume(z).unwrap();
    let pts = |c: f64| {
        let mut p = vec![c - n, c, c + n, 0.0, -reach, reach];
        // integer kinks of the pyramidal densities
        p.extend((-(reach as i32)..=reach as i32).map(|k| k as f64));
        p.retain(|&x| x >= -reach && x <= reach);
        p
    };
    let tri = |c: f64, t: f64| (n - (c - t).abs()).max(0.0);
    if z.len() == 1 {
        let c = n * z[0];
        ov + integrate_pieces(|s| model.density(&[s]).unwrap() * tri(c, s), &pts(c), t).unwrap()
    } else {
        let (c1, c2) = (n * z[0], n * z[1]);
        ov + integrate_2d(
            |s, u| model.density(&[s, u]).unwrap() * tri(c1, s) * tri(c2, u),
            &pts(c1),
            &pts(c2),
            t,
        )
        .unwrap()
    }
}

#[test]
fn finite_1d_matches_direct_integration() {
    let models = [
        BetaModel::pyramidal(4, 1).unwrap(),
        BetaModel::mixture(MixtureLaw::Explicit(vec![(1, 0.2), (3, 0.5), (8, 0.3)]), 1).unwrap(),
        BetaModel::zero(1).unwrap(),
    ];
    for m in &models {
        for n in [0.7, 3.0, 10.0] {
            for z in [0.0, 0.25, 0.5, 1.0, 1.3, 2.0, -0.6] {
                let (a, b) = (cov_finite_1d(m, n, z).unwrap(), direct_cov(m, n, &[z], 8.0));
                assert!((a - b).abs() <= 1e-9, "{m:?} n={n} z={z}: {a} vs {b}");
            }
            close(var_finite_1d(m, n).unwrap(), direct_cov(m, n, &[0.0], 8.0), 1e-9);
        }
    }
}

#[test]
fn finite_2d_matches_direct_integration() {
    let models = [
        BetaModel::pyramidal(2, 2).unwrap(),
        BetaModel::mixture(MixtureLaw::Explicit(vec![(1, 0.5), (3, 0.5)]), 2).unwrap(),
        BetaModel::zero(2).unwrap(),
    ];
    for m in &models {
        for n in [1.5, 4.0] {
            for z in [[0.0, 0.0], [0.5, 0.0], [1.0, 0.0], [0.3, -0.7], [1.5, 1.5], [-2.0, 0.25]] {
                close(cov_finite_2d(m, n, &z).unwrap(), direct_cov(m, n, &z, 3.0), 1e-8);
            }
            close(var_finite_2d(m, n).unwrap(), direct_cov(m, n, &[0.0, 0.0], 3.0), 1e-8);
        }
    }
}

#[test]
fn poisson_covariance_is_overlap() {
    let zero = BetaModel::zero(2).unwrap();
    for z in [[0.2, 0.4], [1.2, 0.0], [-0.5, 0.5]] {
        close(cov_finite_2d(&zero, 7.0, &z).unwrap(), 49.0 * overlap_volume(&z).unwrap(), 1e-12);
    }
}

#[test]
fn integrable_limit_1d() {
    let p = BetaModel::pyramidal(4, 1).unwrap();
    for z in [0.0, 0.5, 1.0, 1.5, 2.0] {
        close(finite_ratio(&p, 8000.0, &[z]).unwrap(), cov_integrable(&[z]).unwrap(), 0.02);
    }
    for n in [4.0, 5.5, 100.0, 1e6] {
        close(var_finite_1d(&p, n).unwrap(), 4.0 / 3.0, 1e-12);
    }
    let slope = var_slope_integrable(&p).unwrap();
    close(var_finite_1d(&p, 1024.0 * 4.0).unwrap(), slope, 0.01 * slope);
}

fn ols_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn mixture_limit_1d() {
    let a = 0.5;
    let mix = BetaModel::mixture(MixtureLaw::PowerLaw { a }, 1).unwrap();
    let n = 2f64.powi(14);
    for z in [0.5, 1.0, 2.0] {
        close(finite_ratio(&mix, n, &[z]).unwrap(), cov_rv_1d(z, a).unwrap(), 0.03);
    }
    let pts: Vec<(f64, f64)> = (4..=14)
        .map(|k| {
            let n = 2f64.powi(k);
            (n.ln(), var_finite_1d(&mix, n).unwrap().ln())
        })
        .collect();
    close(ols_slope(&pts), a, 0.05);
}

#[test]
fn sine2_variance_is_slowly_varying() {
    let s = BetaModel::sine2();
    let r = |n: f64| var_finite_1d(&s, 2.0 * n).unwrap() / var_finite_1d(&s, n).unwrap();
    let (r3, r4) = (r(1e3), r(1e4));
    assert!(r3 > 1.0 && r4 > 1.0);
    assert!(r4 - 1.0 < r3 - 1.0);
    assert!(r4 - 1.0 < 0.1);
}

#[test]
fn mixture_limit_2d() {
    let mix = BetaModel::mixture(MixtureLaw::PowerLaw { a: 0.5 }, 2).unwrap();
    let n = 2f64.powi(12);
    let params = RV2DParams::fit(&mix, n).unwrap();
    for z in [[1.5, 1.5], [0.5, 0.0], [2.0, 0.0]] {
        close(finite_ratio(&mix, n, &z).unwrap(), cov_rv_2d(&z, &params).unwrap(), 0.02);
    }
    let far = finite_ratio(&mix, 1024.0, &[3.0, 3.0]).unwrap();
    assert!(far.abs() < 0.05);
}

#[test]
fn integrable_limit_2d() {
    let p = BetaModel::pyramidal(2, 2).unwrap();
    let n = 512.0 * 2.0;
    for z in [[0.0, 0.0], [0.5, 0.0], [1.0, 0.0], [0.0, 0.5], [1.0, 1.0], [0.5, 0.3], [2.0, 0.0]] {
        close(finite_ratio(&p, n, &z).unwrap(), cov_integrable(&z).unwrap(), 0.02);
    }
    let slope = var_slope_integrable(&p).unwrap();
    close(slope, 4.0 / 3.0, 1e-15);
    close(var_finite_2d(&p, n).unwrap() / n, slope, 0.02 * slope);
}

fn analytic_params(k_plus: f64) -> RV2DParams {
    // a = 1 with g(θ) = 2^{-1/2} sin 2θ
    let g: AngleFn = Arc::new(|t: f64| 0.5f64.sqrt() * (2.0 * t).sin());
    RV2DParams { a_plus: 1.0, a_minus: 1.0, g_plus: g.clone(), g_minus: g, k_plus }
}

use hyperbox::theory::AngleFn;

#[test]
fn rv_2d_examples() {
    let p = analytic_params(0.0);
    close(cov_rv_2d(&[2.0, 2.0], &p).unwrap(), 0.0, 1e-15);
    close(cov_rv_2d(&[5.0, 1.0], &p).unwrap(), 0.0, 1e-15);
    assert_eq!(cov_rv_2d(&[0.0, 0.0], &analytic_params(0.3)).unwrap(), 1.0);
    assert!(cov_rv_2d(&[1.0], &p).is_err());
    let mut bad = analytic_params(0.0);
    bad.a_plus = 1.5;
    assert!(cov_rv_2d(&[1.0, 1.0], &bad).is_err());
    let mut bad = analytic_params(0.0);
    bad.g_minus = Arc::new(|t: f64| (2.0 * t).sin());
    assert!(bad.validate().is_err());
}

#[test]
fn rv_2d_normalization_is_consistent() {
    // the corner sum at z = 0 reproduces 1 without the short-circuit
    let mix = BetaModel::mixture(MixtureLaw::PowerLaw { a: 0.5 }, 2).unwrap();
    let p = RV2DParams::fit(&mix, 4096.0).unwrap();
    let tiny = cov_rv_2d(&[1e-9, 0.0], &p).unwrap();
    close(tiny, 1.0, 1e-6);
    close((p.g_plus)(FRAC_PI_4), 2f64.powf(-p.a_plus / 2.0), 1e-12);
    assert!(RV2DParams::fit(&BetaModel::pyramidal(2, 1).unwrap(), 10.0).is_err());
}

proptest! {
    #[test]
    fn integrable_symmetries(z1 in -3.0f64..3.0, z2 in -3.0f64..3.0, i in -2i32..=2, j in -2i32..=2) {
        let a = cov_integrable(&[z1, z2]).unwrap();
        prop_assert_eq!(a, cov_integrable(&[-z1, z2]).unwrap());
        prop_assert_eq!(a, cov_integrable(&[z2, z1]).unwrap());
        let (x, y) = (i as f64 * 0.5, j as f64 * 0.5);
        prop_assert_eq!(cov_integrable(&[x, y]).unwrap(), cov_integrable(&[-y, x]).unwrap());
    }

    #[test]
    fn rv_1d_even_and_continuous(z in -5.0f64..5.0, a in 0.01f64..1.0, h in -1e-9f64..1e-9) {
        let v = cov_rv_1d(z, a).unwrap();
        prop_assert!((v - cov_rv_1d(-z, a).unwrap()).abs() <= 1e-15);
        prop_assert!((v - cov_rv_1d(z + h, a).unwrap()).abs() <= 1e-6);
        prop_assert!(v <= 1.0 + 1e-15);
    }

    #[test]
    fn finite_1d_even_and_bounded(z in -4.0f64..4.0, n in 1.0f64..500.0) {
        let p = BetaModel::pyramidal(3, 1).unwrap();
        let c = cov_finite_1d(&p, n, z).unwrap();
        prop_assert!((c - cov_finite_1d(&p, n, -z).unwrap()).abs() <= 1e-10);
        let v = var_finite_1d(&p, n).unwrap();
        prop_assert!(c.abs() <= v * (1.0 + 1e-10));
    }
}
