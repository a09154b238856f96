//! Lattice in d=1 perturbed by a symmetric Pareto law,
//! `P(|Y| >= y) = (1 + y/σ)^{-s}`.
//!
//! Sites within `HEAVY_PAD` of the window are simulated directly. Beyond
//! that, sites are grouped into bands of doubling distance; within a band
//! every landing probability is below the band's value at its near edge,
//! so candidates are drawn as Bernoulli trials at that bound (by geometric
//! skips) and thinned to the exact per-site probability.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::Collector;
use crate::error::Result;
use crate::rng::{open_unit, site_key_1d, stream, Purpose, SeedSpec, SiteDraws};

/// Directly simulated sites on each side of the window.
pub const HEAVY_PAD: i64 = 64;

/// Bound on the expected number of points missed by stopping the bands.
const RESIDUAL: f64 = 1e-4;

#[derive(Debug, Clone, Copy)]
struct Pareto {
    s: f64,
    scale: f64,
}

impl Pareto {
    /// `P(Y >= t)`, `t >= 0`.
    fn tail(self, t: f64) -> f64 {
        0.5 * (-self.s * (t / self.scale).ln_1p()).exp()
    }

    /// `P(Y ∈ [t, t + len))` and the ratio `1 − T(t+len)/T(t)`.
    fn interval(self, t: f64, len: f64) -> (f64, f64) {
        let ratio = -(-self.s * (len / (self.scale + t)).ln_1p()).exp_m1();
        (self.tail(t) * ratio, ratio)
    }

    /// Inverse CDF of the symmetric law.
    fn quantile(self, v: f64) -> f64 {
        let mag = |w: f64| self.scale * (-w.ln() / self.s).exp_m1();
        if v < 0.5 {
            -mag(2.0 * v)
        } else {
            mag(2.0 * (1.0 - v))
        }
    }

    /// Overshoot `Y − t` given `Y ∈ [t, t + len)`, from a uniform `w`.
    fn overshoot(self, t: f64, ratio: f64, w: f64) -> f64 {
        let ln_r = (-w * ratio).ln_1p();
        (self.scale + t) * (-ln_r / self.s).exp_m1()
    }
}

pub(super) fn realize(col: &mut Collector, s: f64, scale: f64, seed: SeedSpec, replica: u64) -> Result<()> {
    let law = Pareto { s, scale };
    let b = &col.axes()[0];
    let (lo, hi) = (b[0], b[b.len() - 1]);
    let u = open_unit(stream(seed, replica, Purpose::Stationarizer).random());
    let first = lo.floor() as i64 - HEAVY_PAD;
    let last = hi.ceil() as i64 + HEAVY_PAD;
    let mut sites = SiteDraws::new(seed, replica);
    for k in first..=last {
        let x = sites.draw(site_key_1d(k));
        col.add_point(&[k as f64 + u + x[0] + law.quantile(x[1])]);
    }
    let mut far = stream(seed, replica, Purpose::FarField);
    let len = hi - lo;
    far_side(col, &mut far, law, u, lo - (first - 1) as f64, len, true);
    far_side(col, &mut far, law, u, (last + 1) as f64 - hi, len, false);
    Ok(())
}

/// Far sites on one side, at distances `d0 + i`, `i = 0, 1, ...` from the
/// near window edge. A site with offset `V = u + X` lands iff its
/// displacement magnitude lies in `[t, t + len)`, with `t = dist − V` on
/// the left and `t = dist + V` on the right.
fn far_side(col: &mut Collector, rng: &mut ChaCha8Rng, law: Pareto, u: f64, d0: f64, len: f64, left: bool) {
    let b = &col.axes()[0];
    let (lo, hi) = (b[0], b[b.len() - 1]);
    let slack = if left { 2.0 } else { 0.0 };
    let mut start = 0.0f64;
    loop {
        let tmin = d0 + start - slack;
        if (len + 2.0) * law.tail(tmin) < 0.5 * RESIDUAL {
            break;
        }
        let end = if start == 0.0 { HEAVY_PAD as f64 } else { 2.0 * start };
        let (pbar, _) = law.interval(tmin, len);
        let mut i = start + skip(rng, pbar);
        while i < end {
            let dist = d0 + i;
            let v = u + open_unit(rng.random());
            let t = if left { dist - v } else { dist + v };
            let (p, ratio) = law.interval(t, len);
            if open_unit(rng.random()) * pbar < p {
                let o = law.overshoot(t, ratio, open_unit(rng.random()));
                let x = if left { lo + o } else { hi - o };
                col.add_far(&[x]);
            }
            i += 1.0 + skip(rng, pbar);
        }
        start = end;
    }
}

/// Number of failures before the next success of Bernoulli(p) trials.
fn skip(rng: &mut ChaCha8Rng, p: f64) -> f64 {
    if p >= 1.0 {
        return 0.0;
    }
    (open_unit(rng.random()).ln() / (-p).ln_1p()).floor()
}
