//! Adaptive Simpson quadrature with a refinement cap and error reporting.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Maximum number of bisections before giving up.
pub const MAX_INTERVALS: usize = 1 << 20;

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-12, rel: 1e-10 }
    }
}

struct Segment {
    a: f64,
    b: f64,
    // f at a, a+h/4, a+h/2, a+3h/4, b
    fx: [f64; 5],
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err).is_eq()
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn eval<F: Fn(f64) -> f64>(f: &F, x: f64) -> Result<f64> {
    let v = f(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("integrand is not finite at x = {x}")))
    }
}

fn segment(a: f64, b: f64, fx: [f64; 5]) -> Segment {
    let h = b - a;
    let whole = h / 6.0 * (fx[0] + 4.0 * fx[2] + fx[4]);
    let halves = h / 12.0 * (fx[0] + 4.0 * fx[1] + 2.0 * fx[2] + 4.0 * fx[3] + fx[4]);
    let delta = halves - whole;
    Segment { a, b, fx, value: halves + delta / 15.0, err: delta.abs() / 15.0 }
}

fn make<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> Result<Segment> {
    let h = b - a;
    let q1 = eval(f, a + 0.25 * h)?;
    let q3 = eval(f, a + 0.75 * h)?;
    Ok(segment(a, b, [fa, q1, fm, q3, fb]))
}

/// Globally adaptive Simpson: the segment with the largest error estimate
/// is bisected until the summed estimate meets the tolerance.
fn finite<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: Tolerance, budget: &mut usize) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    const START: usize = 8;
    let h = (b - a) / START as f64;
    let mut heap = BinaryHeap::new();
    let mut left = eval(f, a)?;
    for k in 0..START {
        let lo = a + h * k as f64;
        let hi = if k + 1 == START { b } else { a + h * (k + 1) as f64 };
        let mid = eval(f, 0.5 * (lo + hi))?;
        let right = eval(f, hi)?;
        heap.push(make(f, lo, hi, left, mid, right)?);
        left = right;
    }
    let mut frozen_value = 0.0;
    let mut frozen_err = 0.0;
    loop {
        let value: f64 = frozen_value + heap.iter().map(|s| s.value).sum::<f64>();
        let err: f64 = frozen_err + heap.iter().map(|s| s.err).sum::<f64>();
        let target = tol.abs.max(tol.rel * value.abs());
        if err <= target {
            return Ok(sorted_sum(heap.into_iter().map(|s| s.value).chain([frozen_value])));
        }
        // Bisect the worst segments in one sweep to amortize the sums above.
        let sweep = (heap.len() / 8).max(1);
        for _ in 0..sweep {
            let Some(s) = heap.pop() else { break };
            if *budget == 0 {
                return Err(Error::Quadrature { achieved: err, requested: target });
            }
            *budget -= 1;
            let m = 0.5 * (s.a + s.b);
            if !(s.a < m && m < s.b) || (s.b - s.a) <= 4.0 * f64::EPSILON * s.a.abs().max(s.b.abs()) {
                frozen_value += s.value;
                frozen_err += s.err;
                continue;
            }
            heap.push(make(f, s.a, m, s.fx[0], s.fx[1], s.fx[2])?);
            heap.push(make(f, m, s.b, s.fx[2], s.fx[3], s.fx[4])?);
        }
        if heap.is_empty() {
            let target = tol.abs.max(tol.rel * frozen_value.abs());
            if frozen_err <= target {
                return Ok(frozen_value);
            }
            return Err(Error::Quadrature { achieved: frozen_err, requested: target });
        }
    }
}

fn sorted_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in v {
        let y = x - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Integrates `f` over `[a, b]`, where either end may be infinite.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    let mut budget = MAX_INTERVALS;
    integrate_budget(&f, a, b, tol, &mut budget)
}

fn integrate_budget<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: Tolerance, budget: &mut usize) -> Result<f64> {
    if a.is_nan() || b.is_nan() {
        return Err(Error::InvalidParameter("NaN integration bound".into()));
    }
    if a > b {
        return integrate_budget(f, b, a, tol, budget).map(|v| -v);
    }
    match (a.is_finite(), b.is_finite()) {
        (true, true) => finite(f, a, b, tol, budget),
        (true, false) => {
            // x = a + t / (1 - t)
            let g = |t: f64| {
                if t >= 1.0 {
                    return 0.0;
                }
                let u = 1.0 - t;
                f(a + t / u) / (u * u)
            };
            finite(&g, 0.0, 1.0, tol, budget)
        }
        (false, true) => {
            let g = |t: f64| {
                if t >= 1.0 {
                    return 0.0;
                }
                let u = 1.0 - t;
                f(b - t / u) / (u * u)
            };
            finite(&g, 0.0, 1.0, tol, budget)
        }
        (false, false) => {
            // x = t / (1 - t^2)
            let g = |t: f64| {
                if t.abs() >= 1.0 {
                    return 0.0;
                }
                let u = 1.0 - t * t;
                f(t / u) * (1.0 + t * t) / (u * u)
            };
            finite(&g, -1.0, 1.0, tol, budget)
        }
    }
}

/// Integrates over `[points[0], points[last]]`, splitting at every
/// intermediate point. Points are sorted and deduplicated first.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, points: &[f64], tol: Tolerance) -> Result<f64> {
    let mut p: Vec<f64> = points.to_vec();
    p.sort_by(|x, y| x.total_cmp(y));
    p.dedup();
    let mut budget = MAX_INTERVALS;
    let mut total = 0.0;
    for w in p.windows(2) {
        total += integrate_budget(&f, w[0], w[1], tol, &mut budget)?;
    }
    Ok(total)
}

/// Iterated integral over a product of piecewise ranges. The inner integral
/// runs over `y`.
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(f: F, xs: &[f64], ys: &[f64], tol: Tolerance) -> Result<f64> {
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let inner = |x: f64| {
        if failure.borrow().is_some() {
            return 0.0;
        }
        match integrate_pieces(|y| f(x, y), ys, tol) {
            Ok(v) => v,
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                0.0
            }
        }
    };
    let out = integrate_pieces(inner, xs, tol)?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(out),
    }
}
