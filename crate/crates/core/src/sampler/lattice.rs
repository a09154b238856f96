//! Stationarized lattice with i.i.d. uniform displacements on `[0, m)^d`.
//!
//! Per axis, sites fall into three classes relative to the cell edges:
//! certain (support inside one cell), partial (support straddles an edge)
//! and covering (support contains the whole window, only when `m` exceeds
//! the window). Certain sites are counted without drawing, partial sites use
//! their keyed draws, and covering sites are thinned in aggregate.

use rand::Rng;

use super::{binomial, uniform_in, Collector};
use crate::error::Result;
use crate::rng::{open_unit, site_key_1d, site_key_2d, stream, Purpose, SeedSpec, SiteDraws};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Group {
    Certain(usize, i64, i64),
    Partial(i64, i64),
    Cover(i64, i64),
}

impl Group {
    fn range(self) -> (i64, i64) {
        match self {
            Group::Certain(_, a, b) | Group::Partial(a, b) | Group::Cover(a, b) => (a, b),
        }
    }
}

struct Axis {
    lo: f64,
    hi: f64,
    u: f64,
    groups: Vec<Group>,
}

impl Axis {
    fn plan(b: &[f64], u: f64, m: i64) -> Self {
        let (lo, hi) = (b[0], b[b.len() - 1]);
        let cover = if m as f64 > hi - lo {
            let c = ((hi - u).ceil() as i64 - m, (lo - u).floor() as i64);
            (c.0 <= c.1).then_some(c)
        } else {
            None
        };
        // sites with i + u < e < i + u + m
        let mut straddle: Vec<(i64, i64)> = b
            .iter()
            .map(|&e| ((e - u).floor() as i64 - m + 1, (e - u).ceil() as i64 - 1))
            .filter(|r| r.0 <= r.1)
            .collect();
        straddle.sort_unstable();
        let mut merged: Vec<(i64, i64)> = Vec::new();
        for r in straddle {
            match merged.last_mut() {
                Some(last) if r.0 <= last.1 + 1 => last.1 = last.1.max(r.1),
                _ => merged.push(r),
            }
        }
        let mut groups = Vec::new();
        for w in b.windows(2).enumerate() {
            let (c, e) = w;
            let r = ((e[0] - u).ceil() as i64, (e[1] - u).floor() as i64 - m);
            if r.0 <= r.1 {
                groups.push(Group::Certain(c, r.0, r.1));
            }
        }
        for (a, z) in merged {
            match cover {
                Some((c0, c1)) => {
                    if a <= z.min(c0 - 1) {
                        groups.push(Group::Partial(a, z.min(c0 - 1)));
                    }
                    if a.max(c1 + 1) <= z {
                        groups.push(Group::Partial(a.max(c1 + 1), z));
                    }
                }
                None => groups.push(Group::Partial(a, z)),
            }
        }
        if let Some((c0, c1)) = cover {
            groups.push(Group::Cover(c0, c1));
        }
        Axis { lo, hi, u, groups }
    }

    /// Part of site `i`'s support inside the window.
    fn clip(&self, i: i64, m: f64) -> (f64, f64) {
        let s = i as f64 + self.u;
        (s.max(self.lo), (s + m).min(self.hi))
    }
}

pub(super) fn realize(col: &mut Collector, m: u64, seed: SeedSpec, replica: u64) -> Result<()> {
    let d = col.axes().len();
    let mut st = stream(seed, replica, Purpose::Stationarizer);
    let u: Vec<f64> = (0..d).map(|_| open_unit(st.random())).collect();
    let mi = m as i64;
    let axes: Vec<Axis> = (0..d).map(|k| Axis::plan(&col.axes()[k], u[k], mi)).collect();
    let mut sites = SiteDraws::new(seed, replica);
    let mut agg = stream(seed, replica, Purpose::Aggregate);
    if d == 1 {
        realize_1d(col, &axes[0], m as f64, &mut sites, &mut agg);
    } else {
        realize_2d(col, &axes[0], &axes[1], m as f64, &mut sites, &mut agg);
    }
    Ok(())
}

fn realize_1d(
    col: &mut Collector,
    ax: &Axis,
    m: f64,
    sites: &mut SiteDraws,
    agg: &mut rand_chacha::ChaCha8Rng,
) {
    for &g in &ax.groups {
        match g {
            Group::Certain(c, a, b) if !col.want_points() => col.add_bulk(c, (b - a + 1) as u64),
            Group::Certain(_, a, b) | Group::Partial(a, b) => {
                for i in a..=b {
                    let x = sites.draw(site_key_1d(i));
                    col.add_point(&[i as f64 + ax.u + m * x[0]]);
                }
            }
            Group::Cover(a, b) => {
                let k = binomial(agg, (b - a + 1) as f64, (ax.hi - ax.lo) / m);
                for _ in 0..k {
                    col.add_point(&[uniform_in(agg, ax.lo, ax.hi)]);
                }
            }
        }
    }
}

fn realize_2d(
    col: &mut Collector,
    ax: &Axis,
    ay: &Axis,
    m: f64,
    sites: &mut SiteDraws,
    agg: &mut rand_chacha::ChaCha8Rng,
) {
    let (qx, qy) = ((ax.hi - ax.lo) / m, (ay.hi - ay.lo) / m);
    for &gx in &ax.groups {
        for &gy in &ay.groups {
            match (gx, gy) {
                (Group::Cover(a, b), Group::Cover(c, e)) => {
                    let n = (b - a + 1) as f64 * (e - c + 1) as f64;
                    let k = binomial(agg, n, qx * qy);
                    for _ in 0..k {
                        let x = uniform_in(agg, ax.lo, ax.hi);
                        let y = uniform_in(agg, ay.lo, ay.hi);
                        col.add_point(&[x, y]);
                    }
                }
                (Group::Cover(a, b), g) => {
                    let (c, e) = g.range();
                    for j in c..=e {
                        let (y0, y1) = ay.clip(j, m);
                        if y1 <= y0 {
                            continue;
                        }
                        let k = binomial(agg, (b - a + 1) as f64, qx * (y1 - y0) / m);
                        for _ in 0..k {
                            let x = uniform_in(agg, ax.lo, ax.hi);
                            let y = uniform_in(agg, y0, y1);
                            col.add_point(&[x, y]);
                        }
                    }
                }
                (g, Group::Cover(c, e)) => {
                    let (a, b) = g.range();
                    for i in a..=b {
                        let (x0, x1) = ax.clip(i, m);
                        if x1 <= x0 {
                            continue;
                        }
                        let k = binomial(agg, (e - c + 1) as f64, qy * (x1 - x0) / m);
                        for _ in 0..k {
                            let x = uniform_in(agg, x0, x1);
                            let y = uniform_in(agg, ay.lo, ay.hi);
                            col.add_point(&[x, y]);
                        }
                    }
                }
                (Group::Certain(cx, a, b), Group::Certain(cy, c, e)) if !col.want_points() => {
                    let cell = col.cell_index(&[cx, cy]);
                    col.add_bulk(cell, (b - a + 1) as u64 * (e - c + 1) as u64);
                }
                (g, h) => {
                    let ((a, b), (c, e)) = (g.range(), h.range());
                    for i in a..=b {
                        for j in c..=e {
                            let x = sites.draw(site_key_2d(i, j));
                            let p = [i as f64 + ax.u + m * x[0], j as f64 + ay.u + m * x[1]];
                            col.add_point(&p);
                        }
                    }
                }
            }
        }
    }
}
