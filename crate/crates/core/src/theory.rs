//! Limiting covariance kernels and exact finite-window covariances.

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::sync::Arc;

use crate::beta::{BetaModel, Orientation};
use crate::error::{param, Error, Result};
use crate::geometry::{check_shift, interiors_overlap, overlap_volume, shared_face_measure};

/// Second-difference weights for offsets -1, 0, +1.
const W: [(f64, f64); 3] = [(-1.0, 1.0), (0.0, -2.0), (1.0, 1.0)];

/// Limiting covariance of integrable hyperuniform processes.
pub fn cov_integrable(z: &[f64]) -> Result<f64> {
    check_shift(z)?;
    if z.iter().all(|&v| v == 0.0) {
        return Ok(1.0);
    }
    let m = shared_face_measure(z)? / (2.0 * z.len() as f64);
    Ok(if interiors_overlap(z)? { m } else { -m })
}

/// Limiting covariance for regularly varying `G` with index `a` in d=1.
pub fn cov_rv_1d(z: f64, a: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) {
        return Err(param(format!("exponent a must lie in [0, 1], got {a}")));
    }
    if !z.is_finite() {
        return Err(Error::InvalidShift(format!("non-finite shift {z}")));
    }
    if a == 0.0 {
        let u = z.abs();
        return Ok(if u == 0.0 {
            1.0
        } else if u == 1.0 {
            -0.5
        } else {
            0.0
        });
    }
    Ok(0.5 * (z - 1.0).abs().powf(a) + 0.5 * (z + 1.0).abs().powf(a) - z.abs().powf(a))
}

pub type AngleFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Parameters of a bivariate regularly varying pair `G±`.
#[derive(Clone)]
pub struct RV2DParams {
    pub a_plus: f64,
    pub a_minus: f64,
    /// Angular parts on `[0, π/2]`.
    pub g_plus: AngleFn,
    pub g_minus: AngleFn,
    pub k_plus: f64,
}

impl fmt::Debug for RV2DParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RV2DParams")
            .field("a_plus", &self.a_plus)
            .field("a_minus", &self.a_minus)
            .field("k_plus", &self.k_plus)
            .finish()
    }
}

impl RV2DParams {
    pub const K_MINUS: f64 = -1.0;

    pub fn validate(&self) -> Result<()> {
        for (name, a) in [("a_plus", self.a_plus), ("a_minus", self.a_minus)] {
            if !(0.0..=2.0).contains(&a) {
                return Err(param(format!("{name} must lie in [0, 2], got {a}")));
            }
        }
        if self.a_plus > self.a_minus + 1e-3 {
            return Err(param(format!(
                "a_plus = {} exceeds a_minus = {}",
                self.a_plus, self.a_minus
            )));
        }
        if !self.k_plus.is_finite() {
            return Err(param("K_plus is not finite"));
        }
        for (name, g, a) in [("g_plus", &self.g_plus, self.a_plus), ("g_minus", &self.g_minus, self.a_minus)] {
            let want = 2f64.powf(-a / 2.0);
            let got = g(FRAC_PI_4);
            if !((got - want).abs() <= 1e-9 * want.max(1.0)) {
                return Err(param(format!("{name}(π/4) = {got}, expected 2^(-a/2) = {want}")));
            }
            for k in 0..=16 {
                let v = g(k as f64 * std::f64::consts::FRAC_PI_2 / 16.0);
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(param(format!("{name} is negative or not finite at sample angle {k}/16")));
                }
            }
        }
        Ok(())
    }

    /// Fits exponents, angular parts and `K₊` from `G±` of a 2-D model at
    /// reference scale `n`.
    pub fn fit(model: &BetaModel, n: f64) -> Result<Self> {
        if model.d() != 2 {
            return Err(param("RV2DParams::fit needs a d=2 model"));
        }
        if !(n > 0.0 && n.is_finite()) {
            return Err(param(format!("reference scale must be positive, got {n}")));
        }
        let g = |o, y1, y2| model.cumulative_g(&[y1, y2], o);
        let mut exps = [0.0; 2];
        for (i, o) in [Orientation::Plus, Orientation::Minus].into_iter().enumerate() {
            let (g1, g2) = (g(o, n, n)?, g(o, 2.0 * n, 2.0 * n)?);
            let r = g2 / g1;
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Fit(format!("G ratio {r} is not positive; model is not regularly varying")));
            }
            exps[i] = r.log2();
        }
        let k_plus = g(Orientation::Plus, n, n)? / g(Orientation::Minus, n, n)?;
        let angular = |o: Orientation, a: f64| -> Result<AngleFn> {
            let m = model.clone();
            let c = n * FRAC_PI_4.cos();
            let base = m.cumulative_g(&[c, c], o)?;
            let scale = 2f64.powf(-a / 2.0) / base;
            Ok(Arc::new(move |theta: f64| {
                let (s, c) = theta.sin_cos();
                m.cumulative_g(&[(n * c).max(0.0), (n * s).max(0.0)], o).map(|v| v * scale).unwrap_or(f64::NAN)
            }))
        };
        let params = RV2DParams {
            a_plus: exps[0],
            a_minus: exps[1],
            g_plus: angular(Orientation::Plus, exps[0])?,
            g_minus: angular(Orientation::Minus, exps[1])?,
            k_plus,
        };
        params.validate()?;
        Ok(params)
    }

    fn psi(&self, o: Orientation, x1: f64, x2: f64) -> f64 {
        let r = x1.hypot(x2);
        if r == 0.0 {
            return 0.0;
        }
        let theta = x2.atan2(x1);
        match o {
            Orientation::Plus => r.powf(self.a_plus) * (self.g_plus)(theta),
            Orientation::Minus => r.powf(self.a_minus) * (self.g_minus)(theta),
        }
    }

    /// Limit of `I(n p) / G₋(n𝟙)` without the Lebesgue part.
    fn corner(&self, p1: f64, p2: f64) -> f64 {
        use Orientation::{Minus, Plus};
        match (p1 >= 0.0, p2 >= 0.0) {
            (true, true) => self.k_plus * self.psi(Plus, p1, p2),
            (false, true) => -self.psi(Minus, -p1, p2),
            (true, false) => -self.psi(Minus, -p2, p1),
            (false, false) => {
                let (u, v) = (-p1, -p2);
                -self.k_plus * self.psi(Plus, u, v) - self.psi(Minus, u, v) - self.psi(Minus, v, u)
            }
        }
    }
}

/// Limiting covariance for bivariate regularly varying `G±`.
pub fn cov_rv_2d(z: &[f64], params: &RV2DParams) -> Result<f64> {
    check_shift(z)?;
    if z.len() != 2 {
        return Err(param(format!("cov_rv_2d needs d=2, got d={}", z.len())));
    }
    params.validate()?;
    let (z1, z2) = (z[0].abs(), z[1].abs());
    if z1 == 0.0 && z2 == 0.0 {
        return Ok(1.0);
    }
    let mut sum = 0.0;
    for (j, wj) in W {
        for (k, wk) in W {
            sum += wj * wk * params.corner(z1 + j, z2 + k);
        }
    }
    let v = -0.25 * sum;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Fit("angular function evaluation failed".into()))
    }
}

fn check_n(n: f64) -> Result<()> {
    if !(n >= 0.0 && n.is_finite()) {
        return Err(param(format!("window scale n must be finite and >= 0, got {n}")));
    }
    Ok(())
}

fn need_dim(model: &BetaModel, d: usize) -> Result<()> {
    if model.d() != d {
        return Err(param(format!("operation needs a d={d} model, got d={}", model.d())));
    }
    Ok(())
}

/// Oriented `∫₀^p F` in d=1.
fn oriented_1d(model: &BetaModel, mass: f64, p: f64) -> Result<f64> {
    let g = model.cumulative_g(&[p.abs()], Orientation::Plus)?;
    Ok(if p >= 0.0 { -g } else { -mass * p.abs() - g })
}

/// Exact covariance of counts in `[0, n)` and `[nz, nz + n)`.
pub fn cov_finite_1d(model: &BetaModel, n: f64, z: f64) -> Result<f64> {
    need_dim(model, 1)?;
    check_n(n)?;
    check_shift(&[z])?;
    if n == 0.0 {
        return Ok(0.0);
    }
    let mass = model.mass()?;
    let z = z.abs();
    let mut v = n * (1.0 - z).max(0.0);
    for (j, w) in W {
        // the d=1 kernel carries the opposite sign of the weights
        v -= w * oriented_1d(model, mass, n * (z + j))?;
    }
    Ok(v)
}

/// Exact variance of the count in `[0, n)`.
pub fn var_finite_1d(model: &BetaModel, n: f64) -> Result<f64> {
    need_dim(model, 1)?;
    check_n(n)?;
    if n == 0.0 {
        return Ok(0.0);
    }
    let mass = model.mass()?;
    Ok(n * (1.0 + mass) + 2.0 * model.cumulative_g(&[n], Orientation::Plus)?)
}

fn need_symmetric(model: &BetaModel) -> Result<()> {
    if !(model.reflection_symmetric && model.swap_symmetric) {
        return Err(Error::Unsupported(
            "2-D finite covariances need reflection and swap symmetry".into(),
        ));
    }
    Ok(())
}

/// Oriented `∫₀^{a}∫₀^{b} F` in d=2, reduced to `G±` by symmetry.
fn oriented_2d(model: &BetaModel, mass: f64, a: f64, b: f64) -> Result<f64> {
    use Orientation::{Minus, Plus};
    let g = |o, x: f64, y: f64| model.cumulative_g(&[x, y], o);
    let (u, v) = (a.abs(), b.abs());
    match (a >= 0.0, b >= 0.0) {
        (true, true) => g(Plus, u, v),
        (false, true) => Ok(-g(Minus, u, v)?),
        (true, false) => Ok(-g(Minus, v, u)?),
        (false, false) => Ok(mass * u * v - g(Plus, u, v)? - g(Minus, u, v)? - g(Minus, v, u)?),
    }
}

/// Exact covariance of counts in `[0, n)²` and its translate by `n z`.
pub fn cov_finite_2d(model: &BetaModel, n: f64, z: &[f64]) -> Result<f64> {
    need_dim(model, 2)?;
    need_symmetric(model)?;
    check_n(n)?;
    check_shift(z)?;
    if z.len() != 2 {
        return Err(Error::InvalidShift(format!("expected a 2-D shift, got length {}", z.len())));
    }
    if n == 0.0 {
        return Ok(0.0);
    }
    let mass = model.mass()?;
    let (z1, z2) = (z[0].abs(), z[1].abs());
    let mut v = n * n * overlap_volume(&[z1, z2])?;
    for (j, wj) in W {
        for (k, wk) in W {
            v += wj * wk * oriented_2d(model, mass, n * (z1 + j), n * (z2 + k))?;
        }
    }
    Ok(v)
}

/// Exact variance of the count in `[0, n)²`.
pub fn var_finite_2d(model: &BetaModel, n: f64) -> Result<f64> {
    need_dim(model, 2)?;
    need_symmetric(model)?;
    check_n(n)?;
    if n == 0.0 {
        return Ok(0.0);
    }
    let mass = model.mass()?;
    Ok(n * n * (1.0 + mass) - 4.0 * model.cumulative_g(&[n, n], Orientation::Minus)?)
}

/// Finite covariance for a model of either dimension.
pub fn cov_finite(model: &BetaModel, n: f64, z: &[f64]) -> Result<f64> {
    match model.d() {
        1 => {
            if z.len() != 1 {
                return Err(Error::InvalidShift(format!("expected a 1-D shift, got length {}", z.len())));
            }
            cov_finite_1d(model, n, z[0])
        }
        2 => cov_finite_2d(model, n, z),
        d => Err(Error::Unsupported(format!("finite covariances are implemented for d <= 2, got d={d}"))),
    }
}

pub fn var_finite(model: &BetaModel, n: f64) -> Result<f64> {
    match model.d() {
        1 => var_finite_1d(model, n),
        2 => var_finite_2d(model, n),
        d => Err(Error::Unsupported(format!("finite variances are implemented for d <= 2, got d={d}"))),
    }
}

/// `Cov(n, z) / Var(n)`.
pub fn finite_ratio(model: &BetaModel, n: f64, z: &[f64]) -> Result<f64> {
    let var = var_finite(model, n)?;
    if !(var > 0.0) {
        return Err(param(format!("variance at n = {n} is {var}")));
    }
    Ok(cov_finite(model, n, z)? / var)
}

/// Leading coefficient of `Var(n) ~ c n^{d-1}` for integrable models.
pub fn var_slope_integrable(model: &BetaModel) -> Result<f64> {
    if !model.integrable_first_moment {
        return Err(Error::Unsupported(format!(
            "{} is not flagged as having an integrable first moment",
            model.label()
        )));
    }
    Ok(-(model.d() as f64) * model.first_moment()?)
}
