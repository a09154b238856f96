//! Truncated pair-correlation measures `β` and their tail primitives.
//!
//! `F(x) = β([x, ∞))` in d=1 and `β([x₁,∞)×[x₂,∞))` in d=2. In d=1,
//! `G(y) = −∫₀^y F`; in d=2, `G±(y) = ∫₀^{y₁}∫₀^{y₂} F(±x₁, x₂)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::powersum::PowerTable;
use crate::quadrature::{integrate, integrate_2d, integrate_pieces, Tolerance};
use crate::special::{cin, si_complement};

const F_TOL: Tolerance = Tolerance { abs: 1e-10, rel: 1e-10 };
const G_TOL: Tolerance = Tolerance { abs: 1e-14, rel: 1e-8 };
const MASS_TOL: Tolerance = Tolerance { abs: 1e-10, rel: 1e-8 };

pub type DensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type TailFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Plus,
    Minus,
}

/// Mixing law over pyramid widths `m`.
#[derive(Debug, Clone, PartialEq)]
pub enum MixtureLaw {
    /// `p_m ∝ m^{-(2-a)}` over all `m >= 1`.
    PowerLaw { a: f64 },
    /// Finite list of `(m, p_m)`.
    Explicit(Vec<(u64, f64)>),
}

impl MixtureLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            MixtureLaw::PowerLaw { a } => {
                if !(0.0..1.0).contains(a) {
                    return Err(param(format!("mixture exponent a must lie in [0, 1), got {a}")));
                }
            }
            MixtureLaw::Explicit(w) => {
                if w.is_empty() {
                    return Err(param("mixture weights are empty"));
                }
                let mut total = 0.0;
                for &(m, p) in w {
                    if m == 0 {
                        return Err(param("mixture component m must be >= 1"));
                    }
                    if !(p >= 0.0) || !p.is_finite() {
                        return Err(param(format!("mixture weight for m={m} is {p}")));
                    }
                    total += p;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(param(format!("mixture weights sum to {total}, not 1")));
                }
            }
        }
        Ok(())
    }
}

/// Displacement law `μ` of a heavy-tailed perturbation, described by its
/// symmetric tail `T(x) = μ([x, ∞))`, `x >= 0`.
#[derive(Clone)]
pub enum Displacement {
    /// Density `(s/2σ)(1+|x|/σ)^{-1-s}`.
    Pareto { s: f64, scale: f64 },
    /// User tail; must satisfy `T(0) = 1/2` and decrease to 0.
    Tail(TailFn),
}

impl fmt::Debug for Displacement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Displacement::Pareto { s, scale } => write!(f, "Pareto(s={s}, scale={scale})"),
            Displacement::Tail(_) => write!(f, "Tail(<fn>)"),
        }
    }
}

impl Displacement {
    pub fn tail(&self, x: f64) -> f64 {
        match self {
            Displacement::Pareto { s, scale } => 0.5 * (-s * (x / scale).ln_1p()).exp(),
            Displacement::Tail(t) => t(x),
        }
    }

    fn tail_integral(&self, y: f64) -> Result<f64> {
        match self {
            Displacement::Pareto { s, scale } => {
                Ok(0.5 * scale * ((1.0 - s) * (y / scale).ln_1p()).exp_m1() / (1.0 - s))
            }
            Displacement::Tail(t) => integrate(|x| t(x), 0.0, y, G_TOL),
        }
    }

    fn density(&self, x: f64) -> Result<f64> {
        match self {
            Displacement::Pareto { s, scale } => {
                Ok(0.5 * s / scale * (1.0 + x.abs() / scale).powf(-1.0 - s))
            }
            Displacement::Tail(_) => Err(Error::Unsupported(
                "density of a tail-only displacement law".into(),
            )),
        }
    }
}

#[derive(Debug)]
struct PowerLawWeights {
    norm: f64,
    // index k + 2 holds the table for exponent sigma + k, k = -2..=4
    tables: Vec<PowerTable>,
}

impl PowerLawWeights {
    fn new(a: f64) -> Self {
        let sigma = 2.0 - a;
        let tables: Vec<PowerTable> = (-2..=4).map(|k| PowerTable::new(sigma + k as f64)).collect();
        let norm = tables[2].range(0.0, f64::INFINITY);
        PowerLawWeights { norm, tables }
    }

    /// `Σ_{lo < m <= hi} p_m m^{-k}`.
    fn s(&self, k: i32, lo: f64, hi: f64) -> f64 {
        self.tables[(k + 2) as usize].range(lo, hi) / self.norm
    }
}

#[derive(Debug, Clone)]
enum Weights {
    Explicit(Vec<(f64, f64)>),
    Power(Arc<PowerLawWeights>),
}

/// One-dimensional tail probability of the difference of two independent
/// `Unif[0, m)` variables, `u >= 0`.
fn phi(m: f64, u: f64) -> f64 {
    if u >= m {
        0.0
    } else {
        (m - u) * (m - u) / (2.0 * m * m)
    }
}

/// `∫₀^y phi(m, ·)`, `y >= 0`.
fn gm(m: f64, y: f64) -> f64 {
    if y >= m {
        m / 6.0
    } else {
        y / 2.0 - y * y / (2.0 * m) + y * y * y / (6.0 * m * m)
    }
}

impl Weights {
    fn total(&self) -> f64 {
        match self {
            Weights::Explicit(w) => w.iter().map(|&(_, p)| p).sum(),
            Weights::Power(_) => 1.0,
        }
    }

    /// `Σ p_m phi(m, u)`.
    fn phi_sum(&self, u: f64) -> f64 {
        match self {
            Weights::Explicit(w) => w.iter().map(|&(m, p)| p * phi(m, u)).sum(),
            Weights::Power(pw) => {
                let inf = f64::INFINITY;
                0.5 * (pw.s(0, u, inf) - 2.0 * u * pw.s(1, u, inf) + u * u * pw.s(2, u, inf))
            }
        }
    }

    /// `Σ p_m phi(m, u) phi(m, v)`.
    fn phi2_sum(&self, u: f64, v: f64) -> f64 {
        match self {
            Weights::Explicit(w) => w.iter().map(|&(m, p)| p * phi(m, u) * phi(m, v)).sum(),
            Weights::Power(pw) => {
                let w = u.max(v);
                let inf = f64::INFINITY;
                let s = |k| pw.s(k, w, inf);
                0.25 * (s(0) - 2.0 * (u + v) * s(1) + (u * u + 4.0 * u * v + v * v) * s(2)
                    - 2.0 * u * v * (u + v) * s(3)
                    + u * u * v * v * s(4))
            }
        }
    }

    /// `Σ p_m gm(m, y)`.
    fn g_sum(&self, y: f64) -> f64 {
        match self {
            Weights::Explicit(w) => w.iter().map(|&(m, p)| p * gm(m, y)).sum(),
            Weights::Power(pw) => {
                let inf = f64::INFINITY;
                pw.s(-1, 0.0, y) / 6.0 + 0.5 * y * pw.s(0, y, inf) - 0.5 * y * y * pw.s(1, y, inf)
                    + y * y * y / 6.0 * pw.s(2, y, inf)
            }
        }
    }

    /// `Σ p_m gm(m, a) gm(m, b)`.
    fn gg_sum(&self, a: f64, b: f64) -> f64 {
        match self {
            Weights::Explicit(w) => w.iter().map(|&(m, p)| p * gm(m, a) * gm(m, b)).sum(),
            Weights::Power(pw) => {
                let (a, b) = if a <= b { (a, b) } else { (b, a) };
                let inf = f64::INFINITY;
                let low = pw.s(-2, 0.0, a) / 36.0;
                let mid = (0.5 * a * pw.s(-1, a, b) - 0.5 * a * a * pw.s(0, a, b)
                    + a * a * a / 6.0 * pw.s(1, a, b))
                    / 6.0;
                let c = [
                    a * b / 4.0,
                    -(a * b * b + a * a * b) / 4.0,
                    (a * b * b * b + a * a * a * b) / 12.0 + a * a * b * b / 4.0,
                    -(a * a * b * b * b + a * a * a * b * b) / 12.0,
                    a * a * a * b * b * b / 36.0,
                ];
                let high: f64 = c.iter().enumerate().map(|(k, ck)| ck * pw.s(k as i32, b, inf)).sum();
                low + mid + high
            }
        }
    }

    /// `Σ p_m ∏ (m - |x_i|)₊ / m²`.
    fn density(&self, x: &[f64]) -> Result<f64> {
        match self {
            Weights::Explicit(w) => Ok(w
                .iter()
                .map(|&(m, p)| p * x.iter().map(|xi| (m - xi.abs()).max(0.0) / (m * m)).product::<f64>())
                .sum()),
            Weights::Power(pw) => {
                let inf = f64::INFINITY;
                match x.len() {
                    1 => {
                        let u = x[0].abs();
                        Ok(pw.s(1, u, inf) - u * pw.s(2, u, inf))
                    }
                    2 => {
                        let (u, v) = (x[0].abs(), x[1].abs());
                        let w = u.max(v);
                        Ok(pw.s(2, w, inf) - (u + v) * pw.s(3, w, inf) + u * v * pw.s(4, w, inf))
                    }
                    _ => Err(Error::Unsupported("power-law mixtures are limited to d <= 2".into())),
                }
            }
        }
    }

    /// `Σ p_m ∏ φ̃_m(x_i)` with `φ̃(x) = 1 - phi(-x)` for negative arguments.
    fn tail_product(&self, x: &[f64]) -> Result<f64> {
        match (self, x.len()) {
            (_, 1) => {
                let u = x[0].abs();
                let p = self.phi_sum(u);
                Ok(if x[0] >= 0.0 { p } else { self.total() - p })
            }
            (_, 2) => {
                let (u, v) = (x[0].abs(), x[1].abs());
                let pp = self.phi2_sum(u, v);
                Ok(match (x[0] >= 0.0, x[1] >= 0.0) {
                    (true, true) => pp,
                    (false, true) => self.phi_sum(v) - pp,
                    (true, false) => self.phi_sum(u) - pp,
                    (false, false) => self.total() - self.phi_sum(u) - self.phi_sum(v) + pp,
                })
            }
            (Weights::Explicit(w), _) => Ok(w
                .iter()
                .map(|&(m, p)| {
                    p * x
                        .iter()
                        .map(|&xi| if xi >= 0.0 { phi(m, xi) } else { 1.0 - phi(m, -xi) })
                        .product::<f64>()
                })
                .sum()),
            (Weights::Power(_), _) => {
                Err(Error::Unsupported("power-law mixtures are limited to d <= 2".into()))
            }
        }
    }

    fn first_moment(&self) -> Option<f64> {
        match self {
            Weights::Explicit(w) => Some(w.iter().map(|&(m, p)| p * m).sum()),
            Weights::Power(_) => None,
        }
    }
}

/// User-supplied density of `β` with respect to Lebesgue measure.
#[derive(Clone)]
pub struct UserDensity {
    pub density: DensityFn,
    /// Half-width of a box containing the support; required in d=2.
    pub support: Option<f64>,
    /// Known kinks of the density along each axis, used to split quadrature.
    pub breakpoints: Vec<f64>,
}

#[derive(Clone)]
enum Kind {
    Zero,
    Mixture(Weights),
    Sine2,
    Perturbation(Displacement),
    User(UserDensity),
}

/// Truncated pair-correlation measure together with its symmetry flags.
#[derive(Clone)]
pub struct BetaModel {
    d: usize,
    kind: Kind,
    label: String,
    pub integrable_first_moment: bool,
    pub reflection_symmetric: bool,
    pub swap_symmetric: bool,
}

impl fmt::Debug for BetaModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BetaModel({}, d={})", self.label, self.d)
    }
}

/// Serializable model description, as used in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelDescriptor {
    Zero {
        #[serde(default = "one")]
        d: usize,
    },
    Pyramidal {
        m: u64,
        #[serde(default = "one")]
        d: usize,
    },
    Mixture {
        #[serde(default = "one")]
        d: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<(u64, f64)>>,
    },
    Sine2,
    PerturbationTail {
        s: f64,
        #[serde(default = "unit")]
        scale: f64,
    },
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

impl ModelDescriptor {
    pub fn build(&self) -> Result<BetaModel> {
        match self {
            ModelDescriptor::Zero { d } => BetaModel::zero(*d),
            ModelDescriptor::Pyramidal { m, d } => BetaModel::pyramidal(*m, *d),
            ModelDescriptor::Mixture { d, a, weights } => {
                let law = match (a, weights) {
                    (Some(a), None) => MixtureLaw::PowerLaw { a: *a },
                    (None, Some(w)) => MixtureLaw::Explicit(w.clone()),
                    _ => return Err(param("mixture needs exactly one of `a` or `weights`")),
                };
                BetaModel::mixture(law, *d)
            }
            ModelDescriptor::Sine2 => Ok(BetaModel::sine2()),
            ModelDescriptor::PerturbationTail { s, scale } => {
                BetaModel::perturbation_tail(Displacement::Pareto { s: *s, scale: *scale })
            }
        }
    }
}

/// Builds a model from its descriptor.
pub fn make_model(desc: &ModelDescriptor) -> Result<BetaModel> {
    desc.build()
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        Err(param("dimension must be >= 1"))
    } else {
        Ok(())
    }
}

impl BetaModel {
    /// The zero measure (Poisson process).
    pub fn zero(d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(BetaModel {
            d,
            kind: Kind::Zero,
            label: "zero".into(),
            integrable_first_moment: true,
            reflection_symmetric: true,
            swap_symmetric: true,
        })
    }

    pub fn pyramidal(m: u64, d: usize) -> Result<Self> {
        check_dim(d)?;
        if m == 0 {
            return Err(param("pyramidal m must be >= 1"));
        }
        Ok(BetaModel {
            d,
            kind: Kind::Mixture(Weights::Explicit(vec![(m as f64, 1.0)])),
            label: format!("pyramidal(m={m})"),
            integrable_first_moment: true,
            reflection_symmetric: true,
            swap_symmetric: true,
        })
    }

    pub fn mixture(law: MixtureLaw, d: usize) -> Result<Self> {
        check_dim(d)?;
        law.validate()?;
        let (weights, label, integrable) = match &law {
            MixtureLaw::PowerLaw { a } => {
                if d > 2 {
                    return Err(Error::Unsupported("power-law mixtures are limited to d <= 2".into()));
                }
                (Weights::Power(Arc::new(PowerLawWeights::new(*a))), format!("mixture(a={a})"), false)
            }
            MixtureLaw::Explicit(w) => {
                let mut w: Vec<(f64, f64)> = w.iter().map(|&(m, p)| (m as f64, p)).collect();
                w.sort_by(|x, y| x.0.total_cmp(&y.0));
                (Weights::Explicit(w), format!("mixture(k={})", law_len(&law)), true)
            }
        };
        Ok(BetaModel {
            d,
            kind: Kind::Mixture(weights),
            label,
            integrable_first_moment: integrable,
            reflection_symmetric: true,
            swap_symmetric: true,
        })
    }

    /// `β(dx) = −sin(πx)²/(πx)² dx` on the line.
    pub fn sine2() -> Self {
        BetaModel {
            d: 1,
            kind: Kind::Sine2,
            label: "sine2".into(),
            integrable_first_moment: false,
            reflection_symmetric: true,
            swap_symmetric: true,
        }
    }

    /// Tail-equivalent model of a lattice perturbed by `μ`: `F(x) = −μ([x, ∞))`.
    pub fn perturbation_tail(mu: Displacement) -> Result<Self> {
        let label = match &mu {
            Displacement::Pareto { s, scale } => {
                if !(*s > 0.0 && *s < 1.0) {
                    return Err(param(format!("Pareto tail index s must lie in (0, 1), got {s}")));
                }
                if !(*scale > 0.0 && scale.is_finite()) {
                    return Err(param(format!("Pareto scale must be positive, got {scale}")));
                }
                format!("perturbation_tail(s={s}, scale={scale})")
            }
            Displacement::Tail(t) => {
                let t0 = t(0.0);
                if (t0 - 0.5).abs() > 1e-9 {
                    return Err(param(format!(
                        "displacement tail must satisfy T(0) = 1/2 for a symmetric law, got {t0}"
                    )));
                }
                if !(t(1e12).abs() < 1e-3) {
                    return Err(param("displacement tail does not vanish at infinity"));
                }
                "perturbation_tail(custom)".into()
            }
        };
        Ok(BetaModel {
            d: 1,
            kind: Kind::Perturbation(mu),
            label,
            integrable_first_moment: false,
            reflection_symmetric: true,
            swap_symmetric: true,
        })
    }

    /// Model given by a user density; symmetry and moment flags are taken
    /// on trust.
    pub fn user(d: usize, density: UserDensity) -> Result<Self> {
        check_dim(d)?;
        if d > 2 {
            return Err(Error::Unsupported("user densities are limited to d <= 2".into()));
        }
        if d == 2 && density.support.is_none() {
            return Err(param("user densities in d=2 need a bounded support"));
        }
        if let Some(r) = density.support {
            if !(r > 0.0 && r.is_finite()) {
                return Err(param(format!("support half-width must be positive, got {r}")));
            }
        }
        Ok(BetaModel {
            d,
            kind: Kind::User(density),
            label: "user".into(),
            integrable_first_moment: false,
            reflection_symmetric: true,
            swap_symmetric: true,
        })
    }

    pub fn with_first_moment(mut self, integrable: bool) -> Self {
        self.integrable_first_moment = integrable;
        self
    }

    pub fn with_symmetry(mut self, reflection: bool, swap: bool) -> Self {
        self.reflection_symmetric = reflection;
        self.swap_symmetric = swap;
        self
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d {
            return Err(param(format!("model has d={}, argument has length {}", self.d, x.len())));
        }
        if x.iter().any(|v| v.is_nan()) {
            return Err(param("NaN argument"));
        }
        Ok(())
    }

    fn user_bounds(&self, u: &UserDensity, lo: f64, extra: &[f64]) -> Vec<f64> {
        let hi = u.support.unwrap_or(f64::INFINITY);
        let lo = lo.max(-hi);
        let mut pts = vec![lo, hi];
        for &p in u.breakpoints.iter().chain(extra) {
            if p > lo && p < hi {
                pts.push(p);
            }
        }
        pts
    }

    /// Density of `β` at `x`.
    pub fn density(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        match &self.kind {
            Kind::Zero => Ok(0.0),
            Kind::Mixture(w) => Ok(-w.density(x)?),
            Kind::Sine2 => {
                let t = PI * x[0];
                Ok(if t == 0.0 { -1.0 } else { -(t.sin() / t).powi(2) })
            }
            Kind::Perturbation(mu) => Ok(-mu.density(x[0])?),
            Kind::User(u) => Ok((u.density)(x)),
        }
    }

    /// `F(x)`.
    pub fn tail_f(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        match &self.kind {
            Kind::Zero => Ok(0.0),
            Kind::Mixture(w) => Ok(-w.tail_product(x)?),
            Kind::Sine2 => {
                let u = x[0].abs();
                let t = PI * u;
                let pos = if t == 0.0 {
                    -0.5
                } else {
                    -(t.sin().powi(2) / t + si_complement(2.0 * t)) / PI
                };
                Ok(if x[0] >= 0.0 { pos } else { -1.0 - pos })
            }
            Kind::Perturbation(mu) => {
                let t = mu.tail(x[0].abs());
                Ok(if x[0] >= 0.0 { -t } else { -1.0 + t })
            }
            Kind::User(u) => {
                let f = &u.density;
                if self.d == 1 {
                    let pts = self.user_bounds(u, x[0], &[0.0]);
                    if pts[0] >= pts[1] {
                        return Ok(0.0);
                    }
                    integrate_pieces(|t| f(&[t]), &pts, F_TOL)
                } else {
                    let xs = self.user_bounds(u, x[0], &[0.0]);
                    let ys = self.user_bounds(u, x[1], &[0.0]);
                    if xs[0] >= xs[1] || ys[0] >= ys[1] {
                        return Ok(0.0);
                    }
                    integrate_2d(|s, t| f(&[s, t]), &xs, &ys, F_TOL)
                }
            }
        }
    }

    /// `G(y)` in d=1, `G±(y)` in d=2. `y` must be componentwise nonnegative.
    pub fn cumulative_g(&self, y: &[f64], orientation: Orientation) -> Result<f64> {
        self.check_point(y)?;
        if y.iter().any(|&v| v < 0.0) {
            return Err(param("cumulative_G needs nonnegative arguments"));
        }
        if self.d > 2 {
            return Err(Error::Unsupported("cumulative_G is defined for d <= 2".into()));
        }
        match &self.kind {
            Kind::Zero => Ok(0.0),
            Kind::Mixture(w) => {
                if self.d == 1 {
                    Ok(w.g_sum(y[0]))
                } else {
                    let gg = w.gg_sum(y[0], y[1]);
                    Ok(match orientation {
                        Orientation::Plus => -gg,
                        Orientation::Minus => -(y[0] * w.g_sum(y[1]) - gg),
                    })
                }
            }
            Kind::Sine2 => {
                let u = y[0];
                if u == 0.0 {
                    return Ok(0.0);
                }
                let f = self.tail_f(&[u])?;
                Ok(cin(2.0 * PI * u) / (2.0 * PI * PI) - u * f)
            }
            Kind::Perturbation(mu) => mu.tail_integral(y[0]),
            Kind::User(u) => {
                let f = &u.density;
                if self.d == 1 {
                    let yy = y[0];
                    if yy == 0.0 {
                        return Ok(0.0);
                    }
                    let pts = self.user_bounds(u, 0.0, &[yy]);
                    if pts[0] >= pts[1] {
                        return Ok(0.0);
                    }
                    let v = integrate_pieces(|t| f(&[t]) * t.clamp(0.0, yy), &pts, G_TOL)?;
                    Ok(-v)
                } else {
                    let (y1, y2) = (y[0], y[1]);
                    if y1 == 0.0 || y2 == 0.0 {
                        return Ok(0.0);
                    }
                    let ys = self.user_bounds(u, 0.0, &[y2]);
                    match orientation {
                        Orientation::Plus => {
                            let xs = self.user_bounds(u, 0.0, &[y1]);
                            integrate_2d(
                                |s, t| f(&[s, t]) * s.clamp(0.0, y1) * t.clamp(0.0, y2),
                                &xs,
                                &ys,
                                G_TOL,
                            )
                        }
                        Orientation::Minus => {
                            let xs = self.user_bounds(u, -y1, &[0.0]);
                            integrate_2d(
                                |s, t| f(&[s, t]) * (y1 - (-s).clamp(0.0, y1)) * t.clamp(0.0, y2),
                                &xs,
                                &ys,
                                G_TOL,
                            )
                        }
                    }
                }
            }
        }
    }

    /// Total mass `β(ℝ^d)` and whether `1 + β(ℝ^d) = 0` within 1e-6.
    pub fn hyperuniformity_check(&self) -> Result<(f64, bool)> {
        let mass = self.mass()?;
        Ok((mass, (1.0 + mass).abs() <= 1e-6))
    }

    pub fn mass(&self) -> Result<f64> {
        match &self.kind {
            Kind::Zero => Ok(0.0),
            Kind::Mixture(w) => Ok(-w.total()),
            Kind::Sine2 => Ok(-1.0),
            Kind::Perturbation(mu) => Ok(-2.0 * mu.tail(0.0)),
            Kind::User(u) => {
                let f = &u.density;
                if self.d == 1 {
                    let pts = self.user_bounds(u, f64::NEG_INFINITY, &[0.0]);
                    integrate_pieces(|t| f(&[t]), &pts, MASS_TOL)
                } else {
                    let xs = self.user_bounds(u, f64::NEG_INFINITY, &[0.0]);
                    integrate_2d(|s, t| f(&[s, t]), &xs, &xs, MASS_TOL)
                }
            }
        }
    }

    /// `∫|y₁| β(dy)` when finite.
    pub fn first_moment(&self) -> Result<f64> {
        let none = || Error::Unsupported(format!("{} has no integrable first moment", self.label));
        match &self.kind {
            Kind::Zero => Ok(0.0),
            Kind::Mixture(w) => w.first_moment().map(|m| -m / 3.0).ok_or_else(none),
            Kind::Sine2 | Kind::Perturbation(_) => Err(none()),
            Kind::User(u) => {
                if !self.integrable_first_moment {
                    return Err(none());
                }
                let f = &u.density;
                if self.d == 1 {
                    let pts = self.user_bounds(u, f64::NEG_INFINITY, &[0.0]);
                    integrate_pieces(|t| f(&[t]) * t.abs(), &pts, MASS_TOL)
                } else {
                    let xs = self.user_bounds(u, f64::NEG_INFINITY, &[0.0]);
                    integrate_2d(|s, t| f(&[s, t]) * s.abs(), &xs, &xs, MASS_TOL)
                }
            }
        }
    }
}

fn law_len(law: &MixtureLaw) -> usize {
    match law {
        MixtureLaw::Explicit(w) => w.len(),
        MixtureLaw::PowerLaw { .. } => 0,
    }
}
