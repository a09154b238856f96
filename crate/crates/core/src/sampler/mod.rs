//! Seeded box counts for Poisson, perturbed-lattice and mixture processes.
//!
//! A replica is realized only where it can reach the requested boxes. The
//! union of box edges splits each axis into elementary cells; the sampler
//! fills cell counts and box counts are sums of cells, so all boxes of one
//! call see the same realization.

mod heavy;
mod lattice;
mod poisson;

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::distr::weighted::WeightedIndex;
use rand_distr::{Distribution, Zeta};
use serde::{Deserialize, Serialize};

use crate::beta::{BetaModel, Displacement, MixtureLaw};
use crate::error::{param, Error, Result};
use crate::rng::{stream, open_unit, Purpose, SeedSpec};

pub use heavy::HEAVY_PAD;

pub const DEFAULT_Z_MAX: f64 = 4.0;
pub const DEFAULT_POINT_CAP: f64 = 1e8;

/// Largest pyramid width a mixture label may take.
pub const LABEL_CAP: u64 = 1 << 52;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleOptions {
    pub z_max: f64,
    /// Refuse `sample_points` windows with more expected points than this.
    pub point_cap: f64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions { z_max: DEFAULT_Z_MAX, point_cap: DEFAULT_POINT_CAP }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProcessKind {
    Poisson,
    PerturbedUniform { m: u64 },
    PerturbedMixture(MixtureLaw),
    /// Lattice perturbed by a symmetric Pareto law with tail index `s`.
    PerturbedHeavy { s: f64, scale: f64 },
}

#[derive(Debug, Clone)]
enum LabelLaw {
    Zeta(Zeta<f64>),
    Table(Vec<u64>, WeightedIndex<f64>),
}

impl LabelLaw {
    fn draw(&self, rng: &mut ChaCha8Rng) -> u64 {
        match self {
            LabelLaw::Zeta(z) => {
                let m = z.sample(rng);
                if m >= LABEL_CAP as f64 {
                    LABEL_CAP
                } else {
                    m as u64
                }
            }
            LabelLaw::Table(ms, w) => ms[w.sample(rng)],
        }
    }
}

/// A process together with its dimension and, optionally, the matched
/// truncated pair-correlation model.
#[derive(Debug, Clone)]
pub struct ProcessSpec {
    pub kind: ProcessKind,
    pub d: usize,
    pub beta: Option<Arc<BetaModel>>,
    labels: Option<LabelLaw>,
    name: String,
}

impl ProcessSpec {
    pub fn new(kind: ProcessKind, d: usize) -> Result<Self> {
        if d == 0 || d > 2 {
            return Err(Error::Unsupported(format!("samplers support d = 1 or 2, got {d}")));
        }
        let mut labels = None;
        let name = match &kind {
            ProcessKind::Poisson => "poisson".to_string(),
            ProcessKind::PerturbedUniform { m } => {
                if *m == 0 || *m > LABEL_CAP {
                    return Err(param(format!("perturbed_uniform m must lie in [1, 2^52], got {m}")));
                }
                format!("perturbed_uniform(m={m})")
            }
            ProcessKind::PerturbedMixture(law) => {
                law.validate()?;
                match law {
                    MixtureLaw::PowerLaw { a } => {
                        let z = Zeta::new(2.0 - a).map_err(|e| param(format!("mixture label law: {e}")))?;
                        labels = Some(LabelLaw::Zeta(z));
                        format!("perturbed_mixture(a={a})")
                    }
                    MixtureLaw::Explicit(w) => {
                        if w.iter().any(|&(m, _)| m > LABEL_CAP) {
                            return Err(param("mixture component exceeds 2^52"));
                        }
                        let idx = WeightedIndex::new(w.iter().map(|p| p.1))
                            .map_err(|e| param(format!("mixture weights: {e}")))?;
                        labels = Some(LabelLaw::Table(w.iter().map(|p| p.0).collect(), idx));
                        format!("perturbed_mixture(k={})", w.len())
                    }
                }
            }
            ProcessKind::PerturbedHeavy { s, scale } => {
                if !(*s > 0.0 && *s < 1.0) {
                    return Err(param(format!("heavy tail index s must lie in (0, 1), got {s}")));
                }
                if !(*scale > 0.0 && scale.is_finite()) {
                    return Err(param(format!("heavy scale must be positive, got {scale}")));
                }
                if d != 1 {
                    return Err(Error::Unsupported("perturbed_heavy is implemented for d = 1 only".into()));
                }
                format!("perturbed_heavy(s={s})")
            }
        };
        Ok(ProcessSpec { kind, d, beta: None, labels, name })
    }

    pub fn with_beta(mut self, beta: BetaModel) -> Self {
        self.beta = Some(Arc::new(beta));
        self
    }

    /// Attaches the pair-correlation model that this process realizes.
    pub fn with_matched_beta(self) -> Result<Self> {
        let beta = match &self.kind {
            ProcessKind::Poisson => BetaModel::zero(self.d)?,
            ProcessKind::PerturbedUniform { m } => BetaModel::pyramidal(*m, self.d)?,
            ProcessKind::PerturbedMixture(law) => BetaModel::mixture(law.clone(), self.d)?,
            ProcessKind::PerturbedHeavy { s, scale } => {
                BetaModel::perturbation_tail(Displacement::Pareto { s: *s, scale: *scale })?
            }
        };
        Ok(self.with_beta(beta))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Counts of every box in `layout` for one replica.
    pub fn counts(&self, layout: &BoxLayout, seed: SeedSpec, replica: u64) -> Result<Vec<u64>> {
        Ok(self.counts_detailed(layout, seed, replica)?.counts)
    }

    pub fn counts_detailed(&self, layout: &BoxLayout, seed: SeedSpec, replica: u64) -> Result<CountSample> {
        if layout.d != self.d {
            return Err(Error::InvalidShift(format!(
                "layout is {}-dimensional, process is {}-dimensional",
                layout.d, self.d
            )));
        }
        let mut col = Collector::new(&layout.axes, false);
        self.realize(&mut col, seed, replica)?;
        Ok(CountSample { counts: layout.box_counts(&col.cells), far_field: col.far })
    }

    fn realize(&self, col: &mut Collector, seed: SeedSpec, replica: u64) -> Result<()> {
        match &self.kind {
            ProcessKind::Poisson => poisson::realize(col, seed, replica),
            ProcessKind::PerturbedUniform { m } => lattice::realize(col, *m, seed, replica),
            ProcessKind::PerturbedMixture(_) => {
                let mut rng = stream(seed, replica, Purpose::Label);
                let m = self.labels.as_ref().expect("mixture label law").draw(&mut rng);
                lattice::realize(col, m, seed, replica)
            }
            ProcessKind::PerturbedHeavy { s, scale } => heavy::realize(col, *s, *scale, seed, replica),
        }
    }
}

/// Process description as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProcessDescriptor {
    Poisson {
        #[serde(default = "one")]
        d: usize,
    },
    PerturbedUniform {
        m: u64,
        #[serde(default = "one")]
        d: usize,
    },
    PerturbedMixture {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<(u64, f64)>>,
        #[serde(default = "one")]
        d: usize,
    },
    PerturbedHeavy {
        s: f64,
        #[serde(default = "unit")]
        scale: f64,
        #[serde(default = "one")]
        d: usize,
    },
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

impl ProcessDescriptor {
    /// Builds the process with its matched model attached.
    pub fn build(&self) -> Result<ProcessSpec> {
        let (kind, d) = match self {
            ProcessDescriptor::Poisson { d } => (ProcessKind::Poisson, *d),
            ProcessDescriptor::PerturbedUniform { m, d } => (ProcessKind::PerturbedUniform { m: *m }, *d),
            ProcessDescriptor::PerturbedMixture { a, weights, d } => {
                let law = match (a, weights) {
                    (Some(a), None) => MixtureLaw::PowerLaw { a: *a },
                    (None, Some(w)) => MixtureLaw::Explicit(w.clone()),
                    _ => return Err(param("perturbed_mixture needs exactly one of `a` or `weights`")),
                };
                (ProcessKind::PerturbedMixture(law), *d)
            }
            ProcessDescriptor::PerturbedHeavy { s, scale, d } => {
                (ProcessKind::PerturbedHeavy { s: *s, scale: *scale }, *d)
            }
        };
        ProcessSpec::new(kind, d)?.with_matched_beta()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountSample {
    pub counts: Vec<u64>,
    /// Points contributed by heavy-tail sites beyond the direct pad.
    pub far_field: u64,
}

/// Boxes `Λ_n(n z) = n z + [0, n)^d` reduced to elementary cells.
#[derive(Debug, Clone)]
pub struct BoxLayout {
    d: usize,
    axes: Vec<Vec<f64>>,
    // per box and axis: indices of the lower and upper edge in `axes`
    boxes: Vec<Vec<(usize, usize)>>,
}

impl BoxLayout {
    pub fn new(d: usize, n: f64, shifts: &[Vec<f64>], z_max: f64) -> Result<Self> {
        if !(n > 0.0 && n.is_finite()) {
            return Err(param(format!("box size n must be positive and finite, got {n}")));
        }
        if shifts.is_empty() {
            return Err(Error::InvalidShift("no shifts requested".into()));
        }
        for z in shifts {
            if z.len() != d {
                return Err(Error::InvalidShift(format!("shift {z:?} is not {d}-dimensional")));
            }
            if let Some(v) = z.iter().find(|v| !(v.abs() <= z_max)) {
                return Err(Error::InvalidShift(format!("shift component {v} outside |z| <= {z_max}")));
            }
        }
        let mut axes = Vec::with_capacity(d);
        for k in 0..d {
            let mut b: Vec<f64> = shifts.iter().flat_map(|z| [n * z[k], n * z[k] + n]).collect();
            b.sort_by(f64::total_cmp);
            b.dedup();
            axes.push(b);
        }
        let boxes = shifts
            .iter()
            .map(|z| {
                (0..d)
                    .map(|k| {
                        let find = |x: f64| axes[k].partition_point(|&b| b < x);
                        (find(n * z[k]), find(n * z[k] + n))
                    })
                    .collect()
            })
            .collect();
        Ok(BoxLayout { d, axes, boxes })
    }

    fn window(d: usize, window: &Window) -> Result<Self> {
        if window.lo.len() != d || window.hi.len() != d {
            return Err(param(format!("window must be {d}-dimensional")));
        }
        let mut axes = Vec::with_capacity(d);
        for k in 0..d {
            let (lo, hi) = (window.lo[k], window.hi[k]);
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(param(format!("window axis {k} is [{lo}, {hi}]")));
            }
            axes.push(vec![lo, hi]);
        }
        Ok(BoxLayout { d, axes, boxes: vec![vec![(0, 1); d]] })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    fn box_counts(&self, cells: &[u64]) -> Vec<u64> {
        if self.d == 1 {
            let mut prefix = vec![0u64; cells.len() + 1];
            for (i, c) in cells.iter().enumerate() {
                prefix[i + 1] = prefix[i] + c;
            }
            self.boxes.iter().map(|b| prefix[b[0].1] - prefix[b[0].0]).collect()
        } else {
            let nx = self.axes[0].len() - 1;
            let ny = self.axes[1].len() - 1;
            let mut prefix = vec![0u64; (nx + 1) * (ny + 1)];
            let at = |i: usize, j: usize| i * (ny + 1) + j;
            for i in 0..nx {
                for j in 0..ny {
                    prefix[at(i + 1, j + 1)] =
                        cells[i * ny + j] + prefix[at(i, j + 1)] + prefix[at(i + 1, j)] - prefix[at(i, j)];
                }
            }
            self.boxes
                .iter()
                .map(|b| {
                    let ((x0, x1), (y0, y1)) = (b[0], b[1]);
                    prefix[at(x1, y1)] + prefix[at(x0, y0)] - prefix[at(x0, y1)] - prefix[at(x1, y0)]
                })
                .collect()
        }
    }
}

/// Axis-aligned bounded region `[lo, hi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Window {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Window { lo, hi }
    }
}

/// Receives the points of a realization that land in the cells.
pub(crate) struct Collector<'a> {
    axes: &'a [Vec<f64>],
    cells: Vec<u64>,
    points: Option<Vec<Vec<f64>>>,
    far: u64,
}

impl<'a> Collector<'a> {
    fn new(axes: &'a [Vec<f64>], want_points: bool) -> Self {
        let cells = axes.iter().map(|b| b.len() - 1).product();
        Collector { axes, cells: vec![0; cells], points: want_points.then(Vec::new), far: 0 }
    }

    pub(crate) fn axes(&self) -> &[Vec<f64>] {
        self.axes
    }

    pub(crate) fn want_points(&self) -> bool {
        self.points.is_some()
    }

    fn axis_cell(&self, k: usize, x: f64) -> Option<usize> {
        let b = &self.axes[k];
        if !(x >= b[0] && x < b[b.len() - 1]) {
            return None;
        }
        Some(b.partition_point(|&e| e <= x) - 1)
    }

    pub(crate) fn cell_index(&self, cell: &[usize]) -> usize {
        match cell {
            [i] => *i,
            [i, j] => i * (self.axes[1].len() - 1) + j,
            _ => unreachable!(),
        }
    }

    /// Records a point; returns whether it landed in the window.
    pub(crate) fn add_point(&mut self, x: &[f64]) -> bool {
        let mut idx = 0;
        for (k, &xk) in x.iter().enumerate() {
            match self.axis_cell(k, xk) {
                Some(c) => idx = idx * (self.axes[k].len() - 1) + c,
                None => return false,
            }
        }
        self.cells[idx] += 1;
        if let Some(p) = &mut self.points {
            p.push(x.to_vec());
        }
        true
    }

    pub(crate) fn add_far(&mut self, x: &[f64]) {
        if self.add_point(x) {
            self.far += 1;
        }
    }

    /// Adds points known to lie in `cell`; only valid when positions are
    /// not being collected.
    pub(crate) fn add_bulk(&mut self, cell: usize, count: u64) {
        debug_assert!(self.points.is_none());
        self.cells[cell] += count;
    }
}

/// Binomial draw that stays valid when `n` exceeds the integer range, where
/// the Poisson limit is used.
pub(crate) fn binomial(rng: &mut ChaCha8Rng, n: f64, p: f64) -> u64 {
    if n <= 0.0 || p <= 0.0 {
        return 0;
    }
    if n < (1u64 << 62) as f64 {
        rand_distr::Binomial::new(n as u64, p.min(1.0)).expect("valid binomial").sample(rng)
    } else {
        rand_distr::Poisson::new(n * p).expect("valid poisson").sample(rng) as u64
    }
}

pub(crate) fn uniform_in(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let x = lo + (hi - lo) * open_unit(rng.random());
    x.min(hi.next_down())
}

fn check_n(n: f64) -> Result<()> {
    if n > 0.0 && n.is_finite() {
        Ok(())
    } else {
        Err(param(format!("box size n must be positive and finite, got {n}")))
    }
}

/// Counts `η(Λ_n(n z))` for each shift on one replica.
pub fn sample_counts(
    process: &ProcessSpec,
    n: f64,
    shifts: &[Vec<f64>],
    seed: SeedSpec,
    replica: u64,
) -> Result<Vec<u64>> {
    sample_counts_with(process, n, shifts, seed, replica, &SampleOptions::default())
}

pub fn sample_counts_with(
    process: &ProcessSpec,
    n: f64,
    shifts: &[Vec<f64>],
    seed: SeedSpec,
    replica: u64,
    opts: &SampleOptions,
) -> Result<Vec<u64>> {
    Ok(sample_counts_detailed(process, n, shifts, seed, replica, opts)?.counts)
}

/// Like `sample_counts_with`, also reporting the far-field contribution.
pub fn sample_counts_detailed(
    process: &ProcessSpec,
    n: f64,
    shifts: &[Vec<f64>],
    seed: SeedSpec,
    replica: u64,
    opts: &SampleOptions,
) -> Result<CountSample> {
    check_n(n)?;
    let layout = BoxLayout::new(process.d, n, shifts, opts.z_max)?;
    process.counts_detailed(&layout, seed, replica)
}

/// The points of one replica inside `window`.
pub fn sample_points(process: &ProcessSpec, window: &Window, seed: SeedSpec, replica: u64) -> Result<Vec<Vec<f64>>> {
    sample_points_with(process, window, seed, replica, &SampleOptions::default())
}

pub fn sample_points_with(
    process: &ProcessSpec,
    window: &Window,
    seed: SeedSpec,
    replica: u64,
    opts: &SampleOptions,
) -> Result<Vec<Vec<f64>>> {
    let layout = BoxLayout::window(process.d, window)?;
    let volume: f64 = layout.axes.iter().map(|b| b[1] - b[0]).product();
    if volume > opts.point_cap {
        return Err(Error::Sampler(format!(
            "window holds {volume:e} expected points, above the cap {:e}",
            opts.point_cap
        )));
    }
    let mut col = Collector::new(&layout.axes, true);
    process.realize(&mut col, seed, replica)?;
    Ok(col.points.unwrap_or_default())
}
