use rand_distr::{Distribution, Poisson};

use super::{uniform_in, Collector};
use crate::error::Result;
use crate::rng::{stream, Purpose, SeedSpec};

/// Independent Poisson counts per cell; positions come from a separate
/// stream so that counts do not depend on whether points are requested.
pub(super) fn realize(col: &mut Collector, seed: SeedSpec, replica: u64) -> Result<()> {
    let mut counts = stream(seed, replica, Purpose::Aggregate);
    let mut positions = stream(seed, replica, Purpose::Positions);
    let axes = col.axes().to_vec();
    let d = axes.len();
    let shape: Vec<usize> = axes.iter().map(|b| b.len() - 1).collect();
    let total: usize = shape.iter().product();
    let mut cell = vec![0usize; d];
    for flat in 0..total {
        let mut rem = flat;
        for k in (0..d).rev() {
            cell[k] = rem % shape[k];
            rem /= shape[k];
        }
        let vol: f64 = (0..d).map(|k| axes[k][cell[k] + 1] - axes[k][cell[k]]).product();
        let k = Poisson::new(vol).expect("positive cell volume").sample(&mut counts) as u64;
        if col.want_points() {
            let mut x = vec![0.0; d];
            for _ in 0..k {
                for (a, xa) in x.iter_mut().enumerate() {
                    *xa = uniform_in(&mut positions, axes[a][cell[a]], axes[a][cell[a] + 1]);
                }
                col.add_point(&x);
            }
        } else {
            col.add_bulk(col.cell_index(&cell), k);
        }
    }
    Ok(())
}
