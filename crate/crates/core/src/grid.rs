//! Regular-grid index arithmetic shared by pillars, voxels and heatmaps.

use crate::error::{Error, Result};

/// Cell index of `offset` (distance from the grid origin) along one axis.
///
/// Offsets within 1e-9 cells of a boundary snap to that boundary, so values
/// like `25.6 / 0.16` land in the cell they name rather than the one below.
/// The result is clamped to `[0, n)`.
#[inline]
pub fn cell_index(offset: f64, cell: f64, n: usize) -> usize {
    let f = offset / cell;
    let r = f.round();
    let k = if (f - r).abs() < 1e-9 { r } else { f.floor() };
    if k <= 0.0 {
        0
    } else {
        (k as usize).min(n - 1)
    }
}

/// Number of cells covering `extent`; requires an integral ratio within `tol`.
pub fn exact_cells(extent: f64, cell: f64, axis: &str) -> Result<usize> {
    if !(cell > 0.0) {
        return Err(Error::Config(format!("{axis} cell size must be positive, got {cell}")));
    }
    let f = extent / cell;
    let r = f.round();
    if (f - r).abs() > 1e-6 || r < 1.0 {
        return Err(Error::Config(format!(
            "{axis} extent {extent} is not a whole number of {cell} m cells"
        )));
    }
    Ok(r as usize)
}

/// Number of cells covering `extent`, rounding a fractional last cell up.
pub fn ceil_cells(extent: f64, cell: f64, axis: &str) -> Result<usize> {
    if !(cell > 0.0) {
        return Err(Error::Config(format!("{axis} cell size must be positive, got {cell}")));
    }
    let f = extent / cell;
    let r = f.round();
    Ok(if (f - r).abs() <= 1e-6 { r as usize } else { f.ceil() as usize }.max(1))
}
