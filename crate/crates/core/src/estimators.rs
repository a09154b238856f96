//! Monte Carlo estimators over independent replicas.
//!
//! Replicas are split into contiguous blocks by index. Each block is
//! accumulated sequentially with compensated sums, blocks run in parallel
//! and are combined in index order, so results do not depend on the thread
//! count. Standard errors are leave-one-block-out jackknife estimates.
//!
//! Every estimator averages over replicas; none averages spatially within
//! one realization, which would be wrong for the non-ergodic mixture.

use std::ops::Range;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{param, Error, Result};
use crate::exec::{map_indexed, Exec};
use crate::rng::SeedSpec;
use crate::sampler::{BoxLayout, ProcessSpec, DEFAULT_Z_MAX};
use crate::stats::{block_range, jackknife_replicates, jackknife_se, k_statistics, total, Acc};
use crate::theory::finite_ratio;

pub const DEFAULT_BLOCKS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub exec: Exec,
    pub z_max: f64,
    pub blocks: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { exec: Exec::default(), z_max: DEFAULT_Z_MAX, blocks: DEFAULT_BLOCKS }
    }
}

impl RunOptions {
    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }
}

fn check_replicas(r: u64, needed: usize) -> Result<()> {
    if r < needed as u64 {
        Err(Error::InsufficientReplicas { needed, got: r as usize })
    } else {
        Ok(())
    }
}

/// Accumulates `fill(acc, counts)` over replicas `offset + [0, r)`.
#[allow(clippy::too_many_arguments)]
fn run_blocks<F>(
    process: &ProcessSpec,
    layout: &BoxLayout,
    seed: SeedSpec,
    r: u64,
    offset: u64,
    opts: &RunOptions,
    width: usize,
    fill: F,
) -> Result<Vec<Acc>>
where
    F: Fn(&mut Acc, &[u64]) + Sync + Send,
{
    let blocks = (opts.blocks.max(1) as u64).min(r);
    map_indexed(opts.exec, blocks as usize, |b| {
        let (lo, hi) = block_range(r, blocks, b as u64);
        let mut acc = Acc::new(width);
        for rep in lo..hi {
            let counts = process.counts(layout, seed, offset + rep)?;
            fill(&mut acc, &counts);
            acc.count += 1;
        }
        Ok(acc)
    })
    .into_iter()
    .collect()
}

fn degenerate(process: &ProcessSpec, n: f64) -> Error {
    Error::DegenerateVariance { process: process.name().to_string(), n }
}

/// Normalized covariance estimates on a grid of shifts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovCurve {
    pub process: String,
    pub d: usize,
    pub n: f64,
    pub replicas: u64,
    pub shifts: Vec<Vec<f64>>,
    pub cov_hat: Vec<f64>,
    pub se: Vec<f64>,
    /// Exact finite-n ratio of the matched model, when one is attached.
    pub cov_theory: Option<Vec<f64>>,
    pub var_hat: f64,
    pub var_se: f64,
    #[serde(skip)]
    replicates: Vec<Vec<f64>>,
}

impl CovCurve {
    /// Jackknife standard error of `cov_hat[i] − cov_hat[j]`.
    pub fn joint_se(&self, i: usize, j: usize) -> f64 {
        jackknife_se(&self.replicates, |r| r[i] - r[j])
    }
}

/// `cov_hat(z)`: sample covariance of `η(Λ_n)` and `η(Λ_n(n z))` over
/// replicas divided by the sample variance of `η(Λ_n)`.
pub fn estimate_cov_curve(
    process: &ProcessSpec,
    n: f64,
    zgrid: &[Vec<f64>],
    replicas: u64,
    seed: SeedSpec,
    opts: &RunOptions,
) -> Result<CovCurve> {
    check_replicas(replicas, 2)?;
    let d = process.d;
    let mut shifts = vec![vec![0.0; d]];
    shifts.extend_from_slice(zgrid);
    let layout = BoxLayout::new(d, n, &shifts, opts.z_max)?;
    let vol = n.powi(d as i32);
    let k = zgrid.len();
    // [Σx0, Σx0², Σx_z..., Σx0 x_z...]
    let blocks = run_blocks(process, &layout, seed, replicas, 0, opts, 2 + 2 * k, |acc, c| {
        let x0 = c[0] as f64 - vol;
        acc.add(0, x0);
        acc.add(1, x0 * x0);
        for i in 0..k {
            let x = c[i + 1] as f64 - vol;
            acc.add(2 + i, x);
            acc.add(2 + k + i, x0 * x);
        }
    })?;
    let is_origin: Vec<bool> = zgrid.iter().map(|z| z.iter().all(|&v| v == 0.0)).collect();
    let stat = |a: &Acc| {
        let r = a.count as f64;
        let ss0 = a.get(1) - a.get(0) * a.get(0) / r;
        let mut out: Vec<f64> = (0..k)
            .map(|i| {
                if is_origin[i] {
                    1.0
                } else {
                    (a.get(2 + k + i) - a.get(0) * a.get(2 + i) / r) / ss0
                }
            })
            .collect();
        out.push(ss0 / (r - 1.0));
        out
    };
    let all = total(&blocks);
    let full = stat(&all);
    if !(full[k] > 0.0) {
        return Err(degenerate(process, n));
    }
    let replicates = if blocks.len() >= 2 { jackknife_replicates(&blocks, &all, stat) } else { vec![full.clone()] };
    let se: Vec<f64> =
        (0..k).map(|i| if is_origin[i] { 0.0 } else { jackknife_se(&replicates, |r| r[i]) }).collect();
    let cov_theory = process
        .beta
        .as_ref()
        .and_then(|b| zgrid.iter().map(|z| finite_ratio(b, n, z)).collect::<Result<Vec<f64>>>().ok());
    Ok(CovCurve {
        process: process.name().to_string(),
        d,
        n,
        replicas,
        shifts: zgrid.to_vec(),
        cov_hat: full[..k].to_vec(),
        se,
        cov_theory,
        var_hat: full[k],
        var_se: jackknife_se(&replicates, |r| r[k]),
        replicates,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceRow {
    pub n: f64,
    pub var_hat: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceTable {
    pub process: String,
    pub d: usize,
    pub replicas: u64,
    pub rows: Vec<VarianceRow>,
}

/// Sample variance of `η(Λ_n)` for each `n`. Grid entry `i` uses replicas
/// `i R .. (i+1) R` so that rows are independent.
pub fn estimate_variance_growth(
    process: &ProcessSpec,
    n_grid: &[f64],
    replicas: u64,
    seed: SeedSpec,
    opts: &RunOptions,
) -> Result<VarianceTable> {
    check_replicas(replicas, 2)?;
    let d = process.d;
    let mut rows = Vec::with_capacity(n_grid.len());
    for (i, &n) in n_grid.iter().enumerate() {
        let layout = BoxLayout::new(d, n, &[vec![0.0; d]], opts.z_max)?;
        let vol = n.powi(d as i32);
        let blocks = run_blocks(process, &layout, seed, replicas, i as u64 * replicas, opts, 2, |acc, c| {
            let x = c[0] as f64 - vol;
            acc.add(0, x);
            acc.add(1, x * x);
        })?;
        let stat = |a: &Acc| {
            let r = a.count as f64;
            vec![(a.get(1) - a.get(0) * a.get(0) / r) / (r - 1.0)]
        };
        let all = total(&blocks);
        let var_hat = stat(&all)[0];
        if !(var_hat > 0.0) {
            return Err(degenerate(process, n));
        }
        let se = if blocks.len() >= 2 {
            jackknife_se(&jackknife_replicates(&blocks, &all, stat), |r| r[0])
        } else {
            0.0
        };
        rows.push(VarianceRow { n, var_hat, se });
    }
    Ok(VarianceTable { process: process.name().to_string(), d, replicas, rows })
}

/// Regular-variation exponent fitted to a variance table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RVFit {
    /// `a` in `Var(η(Λ_n)) ≈ n^{d−1+a}`.
    pub a_hat: f64,
    /// 95% interval for `a_hat`.
    pub interval: (f64, f64),
    pub n_grid: Vec<f64>,
    /// Residuals of `log var` in units of their standard error (or raw,
    /// for an unweighted fit).
    pub residuals: Vec<f64>,
    pub reduced_chi2: f64,
}

pub const MIN_FIT_POINTS: usize = 4;
pub const MIN_FIT_DECADES: f64 = 1.5;

/// Weighted least squares of `log var` on `log n`. Rows with zero standard
/// error throughout are fitted unweighted.
pub fn fit_rv_exponent(table: &VarianceTable) -> Result<RVFit> {
    let rows = &table.rows;
    if rows.len() < MIN_FIT_POINTS {
        return Err(Error::Fit(format!("need at least {MIN_FIT_POINTS} grid points, got {}", rows.len())));
    }
    if rows.windows(2).any(|w| !(w[1].n > w[0].n)) {
        return Err(Error::Fit("n grid must be strictly increasing".into()));
    }
    if let Some(r) = rows.iter().find(|r| !(r.var_hat > 0.0) || !r.var_hat.is_finite()) {
        return Err(Error::Fit(format!("non-positive variance {} at n = {}", r.var_hat, r.n)));
    }
    let span = (rows[rows.len() - 1].n / rows[0].n).log10();
    if span < MIN_FIT_DECADES {
        return Err(Error::Fit(format!("n grid spans {span:.2} decades, need {MIN_FIT_DECADES}")));
    }
    let weighted = rows.iter().any(|r| r.se > 0.0);
    if weighted && rows.iter().any(|r| !(r.se > 0.0)) {
        return Err(Error::Fit("standard errors must be all positive or all zero".into()));
    }
    let x: Vec<f64> = rows.iter().map(|r| r.n.ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.var_hat.ln()).collect();
    let w: Vec<f64> = rows.iter().map(|r| if weighted { (r.var_hat / r.se).powi(2) } else { 1.0 }).collect();
    let sw: f64 = w.iter().sum();
    let xm = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let ym = y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(&w).map(|(a, b)| b * (a - xm).powi(2)).sum();
    let sxy: f64 = (0..x.len()).map(|i| w[i] * (x[i] - xm) * (y[i] - ym)).sum();
    let slope = sxy / sxx;
    let resid: Vec<f64> = (0..x.len()).map(|i| y[i] - ym - slope * (x[i] - xm)).collect();
    let dof = (x.len() - 2) as f64;
    let chi2: f64 = resid.iter().zip(&w).map(|(r, b)| b * r * r).sum::<f64>() / dof;
    let se_slope = if weighted { (chi2.max(1.0) / sxx).sqrt() } else { (chi2 / sxx).sqrt() };
    let t = StudentsT::new(0.0, 1.0, dof).map_err(|e| Error::Fit(e.to_string()))?.inverse_cdf(0.975);
    let a_hat = slope - (table.d as f64 - 1.0);
    Ok(RVFit {
        a_hat,
        interval: (a_hat - t * se_slope, a_hat + t * se_slope),
        n_grid: rows.iter().map(|r| r.n).collect(),
        residuals: resid.iter().zip(&w).map(|(r, b)| r * b.sqrt()).collect(),
        reduced_chi2: chi2,
    })
}

/// `(η(Λ_n(n z)) − n^d) / √var_hat` along `zgrid` for one replica.
pub fn coarse_grained_path(
    process: &ProcessSpec,
    n: f64,
    zgrid: &[Vec<f64>],
    seed: SeedSpec,
    replica: u64,
    var_hat: Option<f64>,
    opts: &RunOptions,
) -> Result<Vec<f64>> {
    Ok(coarse_grained_paths(process, n, zgrid, seed, replica..replica + 1, var_hat, opts)?.remove(0))
}

/// Paths for a range of replicas, in replica order.
pub fn coarse_grained_paths(
    process: &ProcessSpec,
    n: f64,
    zgrid: &[Vec<f64>],
    seed: SeedSpec,
    replicas: Range<u64>,
    var_hat: Option<f64>,
    opts: &RunOptions,
) -> Result<Vec<Vec<f64>>> {
    let var = var_hat.ok_or_else(|| param("coarse-grained path needs a variance reference"))?;
    if !(var > 0.0 && var.is_finite()) {
        return Err(param(format!("variance reference must be positive, got {var}")));
    }
    let layout = BoxLayout::new(process.d, n, zgrid, opts.z_max)?;
    let vol = n.powi(process.d as i32);
    let scale = var.sqrt();
    let start = replicas.start;
    map_indexed(opts.exec, (replicas.end - start) as usize, |i| {
        let c = process.counts(&layout, seed, start + i as u64)?;
        Ok(c.iter().map(|&v| (v as f64 - vol) / scale).collect())
    })
    .into_iter()
    .collect()
}

/// k-statistics of the counts with jackknife standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CumulantReport {
    pub process: String,
    pub n: f64,
    pub replicas: u64,
    /// `k1..k4`.
    pub k: [f64; 4],
    pub se_k: [f64; 4],
    pub skewness: f64,
    pub se_skewness: f64,
    pub excess_kurtosis: f64,
    pub se_excess_kurtosis: f64,
}

pub fn cumulant_report(
    process: &ProcessSpec,
    n: f64,
    replicas: u64,
    seed: SeedSpec,
    opts: &RunOptions,
) -> Result<CumulantReport> {
    check_replicas(replicas, 4)?;
    let d = process.d;
    let layout = BoxLayout::new(d, n, &[vec![0.0; d]], opts.z_max)?;
    let vol = n.powi(d as i32);
    let blocks = run_blocks(process, &layout, seed, replicas, 0, opts, 4, |acc, c| {
        power_sums(acc, c[0] as f64 - vol)
    })?;
    cumulants_from_blocks(process.name(), n, vol, &blocks)
}

/// Same report for externally supplied samples.
pub fn cumulants_from_samples(process: &str, n: f64, samples: &[f64]) -> Result<CumulantReport> {
    check_replicas(samples.len() as u64, 4)?;
    let shift = samples.iter().sum::<f64>() / samples.len() as f64;
    let b = (DEFAULT_BLOCKS as u64).min(samples.len() as u64);
    let blocks: Vec<Acc> = (0..b)
        .map(|k| {
            let (lo, hi) = block_range(samples.len() as u64, b, k);
            let mut acc = Acc::new(4);
            for &x in &samples[lo as usize..hi as usize] {
                power_sums(&mut acc, x - shift);
                acc.count += 1;
            }
            acc
        })
        .collect();
    cumulants_from_blocks(process, n, shift, &blocks)
}

fn power_sums(acc: &mut Acc, x: f64) {
    let x2 = x * x;
    acc.add(0, x);
    acc.add(1, x2);
    acc.add(2, x2 * x);
    acc.add(3, x2 * x2);
}

fn cumulants_from_blocks(process: &str, n: f64, shift: f64, blocks: &[Acc]) -> Result<CumulantReport> {
    let stat = |a: &Acc| {
        let k = k_statistics(a.count as f64, [a.get(0), a.get(1), a.get(2), a.get(3)]);
        vec![k[0] + shift, k[1], k[2], k[3], k[2] / k[1].powf(1.5), k[3] / (k[1] * k[1])]
    };
    let all = total(blocks);
    let full = stat(&all);
    if !(full[1] > 0.0) {
        return Err(Error::DegenerateVariance { process: process.to_string(), n });
    }
    let reps = jackknife_replicates(blocks, &all, stat);
    let se = |i: usize| jackknife_se(&reps, |r| r[i]);
    Ok(CumulantReport {
        process: process.to_string(),
        n,
        replicas: all.count,
        k: [full[0], full[1], full[2], full[3]],
        se_k: [se(0), se(1), se(2), se(3)],
        skewness: full[4],
        se_skewness: se(4),
        excess_kurtosis: full[5],
        se_excess_kurtosis: se(5),
    })
}
