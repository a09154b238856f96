use hyperbox::limit::{LimitKernel, MAX_GRID};
use hyperbox::*;

#[test]
fn fbm_covariance_examples() {
    assert!((fbm_cov(0.5, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
    assert!((fbm_cov(0.5, 1.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
    let want = 0.5 * (2.0 - 2f64.powf(0.75));
    assert!((fbm_cov(0.375, 1.0, -1.0).unwrap() - want).abs() < 1e-15);
    assert!((want - 0.1591).abs() < 1e-4);
    for h in [0.0, -0.1, 1.01, f64::NAN] {
        assert!(fbm_cov(h, 1.0, 1.0).is_err(), "h={h}");
        assert!(increment_cov(h, 0.0, 1.0).is_err(), "h={h}");
    }
}

#[test]
fn increment_covariance_examples() {
    assert!((increment_cov(0.5, 0.5, 0.0).unwrap() - 0.5).abs() < 1e-14);
    assert!(increment_cov(0.5, 2.0, 0.0).unwrap().abs() < 1e-14);
    let want = 2f64.powf(-0.5) - 1.0;
    assert!((increment_cov(0.25, 1.0, 0.0).unwrap() - want).abs() < 1e-14);
}

#[test]
fn increments_have_the_rv_kernel() {
    for i in 1..=10 {
        let a = i as f64 / 10.0;
        for k in 0..400 {
            let z = -10.0 + k as f64 * 0.05;
            let w = 0.3 - k as f64 * 0.013;
            let lhs = increment_cov(a / 2.0, z, w).unwrap();
            let rhs = cov_rv_1d(z - w, a).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12, "a={a} z={z} w={w}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn mean_square_increments_scale_like_h_to_the_a() {
    for a in [0.25, 0.5, 0.75, 1.0] {
        let ms = |h: f64| 2.0 * (1.0 - cov_rv_1d(h, a).unwrap());
        let (h0, h1) = (1e-3, 1e-1);
        let slope = (ms(h1) / ms(h0)).ln() / (h1 / h0).ln();
        assert!((slope - a).abs() <= 0.05, "a={a} slope={slope}");
    }
}

fn grid_1d(lo: f64, hi: f64, step: f64) -> Vec<Vec<f64>> {
    let k = ((hi - lo) / step).round() as i64;
    (0..=k).map(|i| vec![lo + i as f64 * step]).collect()
}

fn emp_cov(paths: &[Vec<f64>], i: usize, j: usize) -> (f64, f64) {
    // paths are exactly centred; the plug-in covariance uses the known mean
    let r = paths.len() as f64;
    let prod: Vec<f64> = paths.iter().map(|p| p[i] * p[j]).collect();
    let mean = prod.iter().sum::<f64>() / r;
    let var = prod.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

#[test]
fn rv_field_reproduces_kernel() {
    let a = 0.5;
    let grid = grid_1d(-2.0, 2.0, 0.05);
    let k = LimitKernel::Rv1d { a };
    let paths = sample_limit_field(&k, &grid, SeedSpec::new(1), 10_000, Exec::Parallel).unwrap();
    let idx = |z: f64| grid.iter().position(|g| (g[0] - z).abs() < 1e-9).unwrap();
    for lag in [0.0, 0.5, 1.0, 2.0] {
        let (c, _) = emp_cov(&paths, idx(-1.0), idx(-1.0 + lag));
        assert!((c - cov_rv_1d(lag, a).unwrap()).abs() <= 0.02, "lag {lag}: {c}");
    }
    // stationarity: equal lags at different positions agree
    for (p, q, lag) in [(-2.0, 0.0, 1.0), (-1.5, 0.5, 0.5), (-2.0, -0.25, 1.5)] {
        let (c1, s1) = emp_cov(&paths, idx(p), idx(p + lag));
        let (c2, s2) = emp_cov(&paths, idx(q), idx(q + lag));
        assert!((c1 - c2).abs() <= 3.0 * (s1 * s1 + s2 * s2).sqrt(), "lag {lag}: {c1} vs {c2}");
    }
}

#[test]
fn integrable_field_on_the_lattice() {
    let grid = grid_1d(-5.0, 5.0, 1.0);
    let k = LimitKernel::Integrable { d: 1 };
    let paths = sample_limit_field(&k, &grid, SeedSpec::new(2), 10_000, Exec::Parallel).unwrap();
    let (c1, _) = emp_cov(&paths, 5, 6);
    assert!((c1 + 0.5).abs() <= 0.02, "{c1}");
    let (c0, _) = emp_cov(&paths, 5, 5);
    assert!((c0 - 1.0).abs() <= 0.02, "{c0}");
    let (c2, _) = emp_cov(&paths, 5, 7);
    assert!(c2.abs() <= 0.02, "{c2}");
    let off = grid_1d(-1.0, 1.0, 0.5);
    assert!(matches!(sample_limit_field(&k, &off, SeedSpec::new(2), 10, Exec::Parallel), Err(Error::InvalidParameter(_))));
}

#[test]
fn field_2d_marginal_variance() {
    let m = BetaModel::mixture(MixtureLaw::PowerLaw { a: 0.5 }, 2).unwrap();
    let params = RV2DParams::fit(&m, 4096.0).unwrap();
    let k = LimitKernel::Rv2d(params);
    let mut grid = Vec::new();
    for i in -3..=3 {
        for j in -3..=3 {
            grid.push(vec![i as f64 * 0.5, j as f64 * 0.5]);
        }
    }
    let paths = sample_limit_field(&k, &grid, SeedSpec::new(3), 10_000, Exec::Parallel).unwrap();
    let centre = grid.iter().position(|g| g[0] == 0.0 && g[1] == 0.0).unwrap();
    let (v, _) = emp_cov(&paths, centre, centre);
    assert!((v - 1.0).abs() <= 0.02, "{v}");
    let right = grid.iter().position(|g| g[0] == 1.0 && g[1] == 0.0).unwrap();
    let (c, _) = emp_cov(&paths, centre, right);
    assert!((c - k.cov(&[1.0, 0.0]).unwrap()).abs() <= 0.02, "{c}");
}

#[test]
fn fields_are_deterministic_and_thread_independent() {
    let grid = grid_1d(0.0, 3.0, 0.25);
    let k = LimitKernel::Rv1d { a: 0.75 };
    let a = sample_limit_field(&k, &grid, SeedSpec::new(9), 200, Exec::Parallel).unwrap();
    let b = sample_limit_field(&k, &grid, SeedSpec::new(9), 200, Exec::Sequential).unwrap();
    assert_eq!(a, b);
    let c = sample_limit_field(&k, &grid, SeedSpec::new(10), 200, Exec::Parallel).unwrap();
    assert_ne!(a, c);
}

#[test]
fn rejects_oversized_grids_and_indefinite_kernels() {
    let k = LimitKernel::Rv1d { a: 0.5 };
    let big = grid_1d(0.0, (MAX_GRID as f64) * 0.001, 0.001);
    assert!(big.len() > MAX_GRID);
    assert!(sample_limit_field(&k, &big, SeedSpec::new(1), 1, Exec::Parallel).is_err());
    // a 2-D kernel whose angular profile ignores the quadrant structure
    let p = RV2DParams {
        a_plus: 0.0,
        a_minus: 2.0,
        g_plus: std::sync::Arc::new(|_| 1.0),
        g_minus: std::sync::Arc::new(|_| 0.5),
        k_plus: 5.0,
    };
    p.validate().unwrap();
    let grid: Vec<Vec<f64>> = (0..6).flat_map(|i| (0..6).map(move |j| vec![i as f64 * 0.3, j as f64 * 0.3])).collect();
    match sample_limit_field(&LimitKernel::Rv2d(p), &grid, SeedSpec::new(1), 1, Exec::Parallel) {
        Err(Error::NotPsd(l)) => assert!(l < 0.0),
        other => panic!("expected an indefinite Gram matrix, got {:?}", other.map(|_| ())),
    }
}
