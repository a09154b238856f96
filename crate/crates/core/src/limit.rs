//! Limiting Gaussian fields of the normalized box counts.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{param, Error, Result};
use crate::exec::{map_indexed, Exec};
use crate::rng::{stream, Purpose, SeedSpec};
use crate::theory::{cov_integrable, cov_rv_1d, cov_rv_2d, RV2DParams};

/// Largest grid accepted by the dense sampler.
pub const MAX_GRID: usize = 4096;
/// Most negative Gram eigenvalue tolerated before clipping.
pub const PSD_TOL: f64 = 1e-8;
/// Largest clipped eigenvalue mass, relative to the trace.
pub const CLIP_FRACTION: f64 = 1e-6;

fn check_hurst(h: f64) -> Result<()> {
    if h > 0.0 && h <= 1.0 {
        Ok(())
    } else {
        Err(param(format!("Hurst index must lie in (0, 1], got {h}")))
    }
}

/// Covariance of fractional Brownian motion with Hurst index `h`.
pub fn fbm_cov(h: f64, s: f64, t: f64) -> Result<f64> {
    check_hurst(h)?;
    let p = |x: f64| x.abs().powf(2.0 * h);
    Ok(0.5 * (p(s) + p(t) - p(s - t)))
}

/// Covariance of the unit increments `B(z+1) − B(z)` and `B(w+1) − B(w)`.
pub fn increment_cov(h: f64, z: f64, w: f64) -> Result<f64> {
    Ok(fbm_cov(h, z + 1.0, w + 1.0)? - fbm_cov(h, z + 1.0, w)? - fbm_cov(h, z, w + 1.0)? + fbm_cov(h, z, w)?)
}

#[derive(Debug, Clone)]
pub enum LimitKernel {
    Integrable { d: usize },
    Rv1d { a: f64 },
    Rv2d(RV2DParams),
}

impl LimitKernel {
    pub fn d(&self) -> usize {
        match self {
            LimitKernel::Integrable { d } => *d,
            LimitKernel::Rv1d { .. } => 1,
            LimitKernel::Rv2d(_) => 2,
        }
    }

    pub fn cov(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.d() {
            return Err(Error::InvalidShift(format!("expected a {}-dimensional shift", self.d())));
        }
        match self {
            LimitKernel::Integrable { .. } => cov_integrable(z),
            LimitKernel::Rv1d { a } => cov_rv_1d(z[0], *a),
            LimitKernel::Rv2d(p) => cov_rv_2d(z, p),
        }
    }

    /// Symmetric square root of the Gram matrix on `grid`.
    pub fn gram_root(&self, grid: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        let n = grid.len();
        if n == 0 || n > MAX_GRID {
            return Err(param(format!("grid size must lie in [1, {MAX_GRID}], got {n}")));
        }
        if let LimitKernel::Integrable { .. } = self {
            if grid.iter().flatten().any(|v| v.fract() != 0.0) {
                return Err(param(
                    "the integrable kernel is discontinuous off the lattice; use an integer grid",
                ));
            }
        }
        let mut gram = DMatrix::zeros(n, n);
        let mut diff = vec![0.0; self.d()];
        for i in 0..n {
            for j in 0..=i {
                for (k, dk) in diff.iter_mut().enumerate() {
                    *dk = grid[i][k] - grid[j][k];
                }
                let c = self.cov(&diff)?;
                gram[(i, j)] = c;
                gram[(j, i)] = c;
            }
        }
        let trace = gram.trace();
        let eig = SymmetricEigen::new(gram);
        let min = eig.eigenvalues.min();
        if min < -PSD_TOL {
            return Err(Error::NotPsd(min));
        }
        let clipped: f64 = eig.eigenvalues.iter().filter(|&&l| l < 0.0).map(|l| -l).sum();
        if clipped > CLIP_FRACTION * trace {
            return Err(Error::NotPsd(min));
        }
        let sqrt = DVector::from_iterator(n, eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()));
        let v = &eig.eigenvectors;
        Ok(v * DMatrix::from_diagonal(&sqrt) * v.transpose())
    }
}

/// Exact Gaussian samples of the limit field on `grid`. Path `p` uses its
/// own keyed stream, so paths do not depend on scheduling.
pub fn sample_limit_field(
    kernel: &LimitKernel,
    grid: &[Vec<f64>],
    seed: SeedSpec,
    n_paths: usize,
    exec: Exec,
) -> Result<Vec<Vec<f64>>> {
    let root = kernel.gram_root(grid)?;
    let n = grid.len();
    Ok(map_indexed(exec, n_paths, |p| {
        let mut rng = stream(seed, p as u64, Purpose::Field);
        let xi = DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(&mut rng)));
        (&root * xi).iter().copied().collect()
    }))
}
