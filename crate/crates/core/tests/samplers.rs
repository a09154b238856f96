use hyperbox::exec::{map_indexed, with_threads, Exec};
use hyperbox::rng::{open_unit, site_key_1d, site_key_2d, stream, Purpose, SiteDraws};
use hyperbox::sampler::{sample_counts_detailed, sample_counts_with};
use hyperbox::*;
use proptest::prelude::*;
use rand::Rng;

fn proc(desc: &str) -> ProcessSpec {
    serde_json::from_str::<ProcessDescriptor>(desc).unwrap().build().unwrap()
}

fn origin(d: usize) -> Vec<Vec<f64>> {
    vec![vec![0.0; d]]
}

fn counts_at_origin(p: &ProcessSpec, n: f64, seed: u64, reps: u64) -> Vec<f64> {
    let s = SeedSpec::new(seed);
    map_indexed(Exec::Parallel, reps as usize, |r| {
        sample_counts(p, n, &origin(p.d), s, r as u64).unwrap()[0] as f64
    })
}

struct Moments {
    mean: f64,
    var: f64,
    se_mean: f64,
    se_var: f64,
}

fn moments(x: &[f64]) -> Moments {
    let r = x.len() as f64;
    let mean = x.iter().sum::<f64>() / r;
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / r;
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / r;
    Moments {
        mean,
        var: m2 * r / (r - 1.0),
        se_mean: (m2 / r).sqrt(),
        se_var: ((m4 - m2 * m2) / r).sqrt(),
    }
}

#[test]
fn poisson_mean_and_variance() {
    let p = proc(r#"{"kind":"poisson"}"#);
    let m = moments(&counts_at_origin(&p, 100.0, 11, 100_000));
    assert!((m.mean - 100.0).abs() <= 3.0 * m.se_mean, "mean {} se {}", m.mean, m.se_mean);
    assert!((m.var - 100.0).abs() <= 3.0 * m.se_var, "var {} se {}", m.var, m.se_var);
}

#[test]
fn uniform_m1_counts_are_near_n() {
    let p = proc(r#"{"kind":"perturbed_uniform","m":1}"#);
    for c in counts_at_origin(&p, 50.0, 5, 5000) {
        assert!((48.0..=52.0).contains(&c), "count {c}");
    }
}

#[test]
fn counts_are_deterministic() {
    let shifts: Vec<Vec<f64>> = (-8..=8).map(|k| vec![k as f64 * 0.25]).collect();
    for desc in [
        r#"{"kind":"poisson"}"#,
        r#"{"kind":"perturbed_uniform","m":3}"#,
        r#"{"kind":"perturbed_mixture","a":0.5}"#,
        r#"{"kind":"perturbed_heavy","s":0.5}"#,
    ] {
        let p = proc(desc);
        let a = sample_counts(&p, 64.0, &shifts, SeedSpec::new(9), 17).unwrap();
        let b = sample_counts(&p, 64.0, &shifts, SeedSpec::new(9), 17).unwrap();
        assert_eq!(a, b, "{desc}");
        let c = sample_counts(&p, 64.0, &shifts, SeedSpec::new(9), 18).unwrap();
        assert_ne!(a, c, "{desc}");
    }
}

#[test]
fn rejects_bad_requests() {
    let p = proc(r#"{"kind":"poisson"}"#);
    assert!(sample_counts(&p, 0.0, &origin(1), SeedSpec::new(1), 0).is_err());
    assert!(sample_counts(&p, -3.0, &origin(1), SeedSpec::new(1), 0).is_err());
    assert!(matches!(
        sample_counts(&p, 10.0, &[vec![4.5]], SeedSpec::new(1), 0),
        Err(Error::InvalidShift(_))
    ));
    assert!(sample_counts(&p, 10.0, &[vec![4.0]], SeedSpec::new(1), 0).is_ok());
    assert!(sample_counts(&p, 10.0, &[vec![0.0, 0.0]], SeedSpec::new(1), 0).is_err());
    let huge = Window::new(vec![0.0], vec![2e8]);
    assert!(matches!(sample_points(&p, &huge, SeedSpec::new(1), 0), Err(Error::Sampler(_))));
    let bad = [
        r#"{"kind":"perturbed_heavy","s":1.0}"#,
        r#"{"kind":"perturbed_heavy","s":0.5,"d":2}"#,
        r#"{"kind":"perturbed_uniform","m":0}"#,
        r#"{"kind":"perturbed_mixture","a":0.5,"weights":[[1,1.0]]}"#,
        r#"{"kind":"perturbed_mixture","a":1.0}"#,
    ];
    for desc in bad {
        let parsed = serde_json::from_str::<ProcessDescriptor>(desc).unwrap();
        assert!(parsed.build().is_err(), "{desc}");
    }
    assert!(serde_json::from_str::<ProcessDescriptor>(r#"{"kind":"poisson","m":3}"#).is_err());
}

#[test]
fn poisson_points_match_counts() {
    let p = proc(r#"{"kind":"poisson"}"#);
    let w = Window::new(vec![0.0], vec![10.0]);
    for r in 0..200 {
        let pts = sample_points(&p, &w, SeedSpec::new(3), r).unwrap();
        let c = sample_counts(&p, 10.0, &origin(1), SeedSpec::new(3), r).unwrap();
        assert_eq!(pts.len() as u64, c[0]);
        assert!(pts.iter().all(|x| (0.0..10.0).contains(&x[0])));
    }
}

fn sorted(mut v: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

#[test]
fn uniform_points_match_brute_force_1d() {
    let p = proc(r#"{"kind":"perturbed_uniform","m":2}"#);
    let w = Window::new(vec![0.0], vec![100.0]);
    for r in 0..50 {
        let seed = SeedSpec::new(21);
        let u = open_unit(stream(seed, r, Purpose::Stationarizer).random());
        let mut draws = SiteDraws::new(seed, r);
        let brute: Vec<Vec<f64>> = (-3..=103)
            .map(|k| k as f64 + u + 2.0 * draws.draw(site_key_1d(k))[0])
            .filter(|x| (0.0..100.0).contains(x))
            .map(|x| vec![x])
            .collect();
        let got = sample_points(&p, &w, seed, r).unwrap();
        assert_eq!(sorted(got), sorted(brute));
        let c = sample_counts(&p, 100.0, &origin(1), seed, r).unwrap();
        assert_eq!(c[0] as usize, sample_points(&p, &w, seed, r).unwrap().len());
    }
}

#[test]
fn uniform_points_match_brute_force_2d() {
    let p = proc(r#"{"kind":"perturbed_uniform","m":3,"d":2}"#);
    let w = Window::new(vec![-2.5, 1.0], vec![17.5, 16.0]);
    for r in 0..20 {
        let seed = SeedSpec::new(8);
        let mut st = stream(seed, r, Purpose::Stationarizer);
        let u = [open_unit(st.random()), open_unit(st.random())];
        let mut draws = SiteDraws::new(seed, r);
        let mut brute = Vec::new();
        for i in -7..=19 {
            for j in -3..=17 {
                let x = draws.draw(site_key_2d(i, j));
                let q = vec![i as f64 + u[0] + 3.0 * x[0], j as f64 + u[1] + 3.0 * x[1]];
                if (w.lo[0]..w.hi[0]).contains(&q[0]) && (w.lo[1]..w.hi[1]).contains(&q[1]) {
                    brute.push(q);
                }
            }
        }
        assert_eq!(sorted(sample_points(&p, &w, seed, r).unwrap()), sorted(brute));
    }
}

/// Counts of the boxes `Λ_n(n z)` recomputed from the points of a large window.
fn counts_from_points(p: &ProcessSpec, n: f64, shifts: &[Vec<f64>], seed: SeedSpec, r: u64) -> Vec<u64> {
    let d = p.d;
    let w = Window::new(vec![-5.0 * n; d], vec![6.0 * n; d]);
    let pts = sample_points(p, &w, seed, r).unwrap();
    shifts
        .iter()
        .map(|z| {
            pts.iter()
                .filter(|x| (0..d).all(|k| x[k] >= n * z[k] && x[k] < n * z[k] + n))
                .count() as u64
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lattice_boxes_share_one_realization(
        m in 1u64..6,
        d in 1usize..3,
        n in 6.0f64..40.0,
        zs in prop::collection::vec(prop::collection::vec(-4.0f64..4.0, 2), 1..6),
        r in 0u64..1000,
    ) {
        let p = ProcessSpec::new(ProcessKind::PerturbedUniform { m }, d).unwrap();
        let shifts: Vec<Vec<f64>> = zs.iter().map(|z| z[..d].to_vec()).collect();
        let seed = SeedSpec::new(77);
        let direct = sample_counts(&p, n, &shifts, seed, r).unwrap();
        prop_assert_eq!(direct, counts_from_points(&p, n, &shifts, seed, r));
    }

    #[test]
    fn inclusion_exclusion_1d(
        m in 1u64..8,
        n in 3.0f64..50.0,
        z1 in -3.0f64..3.0,
        dz in -0.99f64..0.99,
        r in 0u64..1000,
    ) {
        let p = ProcessSpec::new(ProcessKind::PerturbedUniform { m }, 1).unwrap();
        let seed = SeedSpec::new(5);
        let opts = SampleOptions { z_max: 1e6, ..Default::default() };
        let z2 = z1 + dz;
        let ab = sample_counts_with(&p, n, &[vec![z1], vec![z2]], seed, r, &opts).unwrap();
        let (lo, hi) = ((n * z1).min(n * z2), (n * z1).max(n * z2));
        let box_at = |start: f64, len: f64| {
            sample_counts_with(&p, len, &[vec![start / len]], seed, r, &opts).unwrap()[0]
        };
        // covering sites are thinned per call, so keep every window wider than m
        prop_assume!(lo + n - hi >= m as f64);
        let union = box_at(lo, hi + n - lo);
        let inter = box_at(hi, lo + n - hi);
        prop_assert_eq!(union + inter, ab[0] + ab[1]);
    }
}

#[test]
fn unit_intensity_for_every_kind() {
    let kinds = [
        r#"{"kind":"poisson"}"#,
        r#"{"kind":"poisson","d":2}"#,
        r#"{"kind":"perturbed_uniform","m":3}"#,
        r#"{"kind":"perturbed_uniform","m":3,"d":2}"#,
        r#"{"kind":"perturbed_uniform","m":500}"#,
        r#"{"kind":"perturbed_mixture","a":0.5}"#,
        r#"{"kind":"perturbed_mixture","a":0.5,"d":2}"#,
        r#"{"kind":"perturbed_mixture","weights":[[1,0.5],[700,0.5]],"d":2}"#,
        r#"{"kind":"perturbed_heavy","s":0.75}"#,
        r#"{"kind":"perturbed_heavy","s":0.25}"#,
    ];
    let n: f64 = 128.0;
    for (i, desc) in kinds.iter().enumerate() {
        let p = proc(desc);
        let vol = n.powi(p.d as i32);
        let x: Vec<f64> = counts_at_origin(&p, n, 1000 + i as u64, 10_000).iter().map(|c| c / vol).collect();
        let m = moments(&x);
        assert!((m.mean - 1.0).abs() <= 4.0 * m.se_mean, "{desc}: mean {} se {}", m.mean, m.se_mean);
    }
}

#[test]
fn heavy_window_count_is_unbiased() {
    let p = proc(r#"{"kind":"perturbed_heavy","s":0.75}"#);
    let w = Window::new(vec![0.0], vec![100.0]);
    let x: Vec<f64> = map_indexed(Exec::Parallel, 10_000, |r| {
        sample_points(&p, &w, SeedSpec::new(4), r as u64).unwrap().len() as f64
    });
    let m = moments(&x);
    assert!((m.mean - 100.0).abs() <= 3.0 * m.se_mean, "mean {} se {}", m.mean, m.se_mean);
}

/// Expected number of points landing in `[0, len)` from heavy-tail sites
/// beyond the direct pad, summed over both sides. The offset `V = U + X`
/// is triangular on `[0, 2]`.
fn far_field_expectation(s: f64, len: f64, pad: f64) -> f64 {
    let tail = |t: f64| 0.5 * (1.0 + t).powf(-s);
    let tail_int = |y: f64| 0.5 * ((1.0 - s) * y.ln_1p()).exp_m1() / (1.0 - s);
    let tri = |g: &dyn Fn(f64) -> f64| {
        let k = 200;
        let h = 2.0 / k as f64;
        (0..=k)
            .map(|i| {
                let v = i as f64 * h;
                let w = if i == 0 || i == k { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                w * (1.0 - (v - 1.0).abs()) * g(v)
            })
            .sum::<f64>()
            * h
            / 3.0
    };
    let d0 = pad + 1.0;
    let cut = 200_000;
    let mut total = 0.0;
    for i in 0..cut {
        let dist = d0 + i as f64;
        total += tri(&|v| tail(dist - v) - tail(dist - v + len));
        total += tri(&|v| tail(dist + v) - tail(dist + v + len));
    }
    // remaining sites: integral of the summand minus half its first term
    let dist = d0 + cut as f64;
    let rest = |sign: f64| {
        tri(&|v| {
            let t = dist + sign * v;
            (tail_int(t + len) - tail_int(t)) - 0.5 * (tail(t) - tail(t + len))
        })
    };
    total + rest(-1.0) + rest(1.0)
}

#[test]
fn heavy_far_field_matches_expectation() {
    let s = 0.75;
    let p = proc(r#"{"kind":"perturbed_heavy","s":0.75}"#);
    let opts = SampleOptions::default();
    let far: Vec<f64> = map_indexed(Exec::Parallel, 10_000, |r| {
        sample_counts_detailed(&p, 100.0, &origin(1), SeedSpec::new(31), r as u64, &opts)
            .unwrap()
            .far_field as f64
    });
    let m = moments(&far);
    let expect = far_field_expectation(s, 100.0, sampler::HEAVY_PAD as f64);
    assert!(expect > 1.0);
    assert!((m.mean - expect).abs() <= 3.0 * m.se_mean, "far {} expected {expect} se {}", m.mean, m.se_mean);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let shifts: Vec<Vec<f64>> = (0..9).map(|k| vec![k as f64 * 0.5 - 2.0]).collect();
    for desc in [r#"{"kind":"perturbed_mixture","a":0.5}"#, r#"{"kind":"perturbed_heavy","s":0.25}"#] {
        let p = proc(desc);
        let run = |threads| {
            with_threads(Some(threads), || {
                map_indexed(Exec::Parallel, 400, |r| {
                    sample_counts(&p, 256.0, &shifts, SeedSpec::new(6), r as u64).unwrap()
                })
            })
        };
        let one = run(1);
        assert_eq!(one, run(8), "{desc}");
        let seq = map_indexed(Exec::Sequential, 400, |r| {
            sample_counts(&p, 256.0, &shifts, SeedSpec::new(6), r as u64).unwrap()
        });
        assert_eq!(one, seq);
    }
}

#[test]
fn mixture_with_wide_component_uses_whole_window() {
    // m = 700 exceeds the window, so covering sites are thinned in aggregate;
    // the points must still agree with the counts of the same window.
    let p = proc(r#"{"kind":"perturbed_mixture","weights":[[700,1.0]],"d":2}"#);
    let w = Window::new(vec![0.0, 0.0], vec![50.0, 50.0]);
    for r in 0..30 {
        let pts = sample_points(&p, &w, SeedSpec::new(12), r).unwrap();
        let c = sample_counts(&p, 50.0, &origin(2), SeedSpec::new(12), r).unwrap();
        assert_eq!(pts.len() as u64, c[0]);
    }
}
