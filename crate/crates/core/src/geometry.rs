//! Overlap geometry of unit boxes `[0,1)^d` and their translates.

use crate::error::{Error, Result};

pub(crate) fn check_shift(z: &[f64]) -> Result<()> {
    if z.is_empty() {
        return Err(Error::InvalidShift("shift has dimension 0".into()));
    }
    if let Some(v) = z.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidShift(format!("non-finite component {v}")));
    }
    Ok(())
}

/// Lebesgue measure of `[0,1)^d ∩ ([0,1)^d + z)`.
pub fn overlap_volume(z: &[f64]) -> Result<f64> {
    check_shift(z)?;
    Ok(z.iter().map(|v| (1.0 - v.abs()).max(0.0)).product())
}

/// `true` iff every `|z_i| < 1`.
pub fn interiors_overlap(z: &[f64]) -> Result<bool> {
    check_shift(z)?;
    Ok(z.iter().all(|v| v.abs() < 1.0))
}

/// (d-1)-dimensional measure of the shared boundary of the two boxes,
/// counted with multiplicity.
///
/// A face contributes along axis `j` when `|z_j| = 1` (the boxes touch) or
/// `z_j = 0` (both faces coincide, counted twice). Comparisons are exact.
pub fn shared_face_measure(z: &[f64]) -> Result<f64> {
    check_shift(z)?;
    let mut total = 0.0;
    for (j, &zj) in z.iter().enumerate() {
        let mult = if zj.abs() == 1.0 {
            1.0
        } else if zj == 0.0 {
            2.0
        } else {
            continue;
        };
        let rest: f64 = z
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != j)
            .map(|(_, v)| (1.0 - v.abs()).max(0.0))
            .product();
        total += mult * rest;
    }
    Ok(total)
}
