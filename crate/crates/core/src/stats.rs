//! Compensated accumulation, block jackknife and k-statistics.

use std::ops::{Add, Sub};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Sum {
    hi: f64,
    lo: f64,
}

impl Sum {
    pub fn push(&mut self, x: f64) {
        let t = self.hi + x;
        if self.hi.abs() >= x.abs() {
            self.lo += (self.hi - t) + x;
        } else {
            self.lo += (x - t) + self.hi;
        }
        self.hi = t;
    }

    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

impl Add for Sum {
    type Output = Sum;
    fn add(mut self, o: Sum) -> Sum {
        self.push( o.hi);
        self.push( o.lo);
        self
    }
}

impl Sub for Sum {
    type Output = Sum;
    fn sub(mut self, o: Sum) -> Sum {
        self.push( -o.hi);
        self.push( -o.lo);
        self
    }
}

/// A vector of compensated sums plus the number of observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Acc {
    pub count: u64,
    sums: Vec<Sum>,
}

impl Acc {
    pub fn new(width: usize) -> Self {
        Acc { count: 0, sums: vec![Sum::default(); width] }
    }

    pub fn add(&mut self, i: usize, x: f64) {
        self.sums[i].push(x);
    }

    pub fn get(&self, i: usize) -> f64 {
        self.sums[i].value()
    }

    pub fn width(&self) -> usize {
        self.sums.len()
    }

    pub fn plus(&self, o: &Acc) -> Acc {
        Acc { count: self.count + o.count, sums: self.sums.iter().zip(&o.sums).map(|(a, b)| *a + *b).collect() }
    }

    pub fn minus(&self, o: &Acc) -> Acc {
        Acc { count: self.count - o.count, sums: self.sums.iter().zip(&o.sums).map(|(a, b)| *a - *b).collect() }
    }
}

/// Sums blocks in index order.
pub fn total(blocks: &[Acc]) -> Acc {
    let mut t = Acc::new(blocks[0].width());
    for b in blocks {
        t = t.plus(b);
    }
    t
}

/// Leave-one-block-out replicates of a vector statistic.
pub fn jackknife_replicates<F>(blocks: &[Acc], all: &Acc, stat: F) -> Vec<Vec<f64>>
where
    F: Fn(&Acc) -> Vec<f64>,
{
    blocks.iter().map(|b| stat(&all.minus(b))).collect()
}

/// Jackknife standard error of component `i` (or of `f` of the replicates).
pub fn jackknife_se<F: Fn(&[f64]) -> f64>(reps: &[Vec<f64>], f: F) -> f64 {
    let b = reps.len() as f64;
    let vals: Vec<f64> = reps.iter().map(|r| f(r)).collect();
    let mean = vals.iter().sum::<f64>() / b;
    let ss: f64 = vals.iter().map(|v| (v - mean).powi(2)).sum();
    ((b - 1.0) / b * ss).sqrt()
}

/// Replica range `[lo, hi)` of block `b` when `r` replicas are split into
/// `blocks` contiguous blocks.
pub fn block_range(r: u64, blocks: u64, b: u64) -> (u64, u64) {
    let at = |k: u64| ((k as u128 * r as u128) / blocks as u128) as u64;
    (at(b), at(b + 1))
}

/// Unbiased cumulant estimates `k1..k4` from power sums `s1..s4` of `n`
/// observations.
pub fn k_statistics(n: f64, s: [f64; 4]) -> [f64; 4] {
    let [s1, s2, s3, s4] = s;
    let k1 = s1 / n;
    let k2 = (n * s2 - s1 * s1) / (n * (n - 1.0));
    let k3 = (2.0 * s1.powi(3) - 3.0 * n * s1 * s2 + n * n * s3) / (n * (n - 1.0) * (n - 2.0));
    let k4 = (-6.0 * s1.powi(4) + 12.0 * n * s1 * s1 * s2 - 3.0 * n * (n - 1.0) * s2 * s2
        - 4.0 * n * (n + 1.0) * s1 * s3
        + n * n * (n + 1.0) * s4)
        / (n * (n - 1.0) * (n - 2.0) * (n - 3.0));
    [k1, k2, k3, k4]
}
