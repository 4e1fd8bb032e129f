//! Georeferenced raster grids, ESRI ASCII grid I/O, alignment checks, and
//! reclassification onto the 0..10 suitability scale.
//!
//! A [`RasterGrid`] is a row-major matrix of `f64` cell values with the
//! georeferencing of the ESRI ASCII header (lower-left corner, square cells).
//! Row 0 is the northernmost row. A cell equal to the grid's NODATA value
//! carries no reading; NaN is rejected everywhere so NODATA is the only
//! missing-data sentinel.

mod ascii;
mod reclass;

pub use ascii::{format_ascii_grid, parse_ascii_grid, read_ascii_grid, write_ascii_grid};
pub use reclass::{reclassify, Breakpoint, ReclassTable};

use crate::error::{Error, Result};

/// Tolerance used when comparing georeferencing fields of two grids.
pub const ALIGN_TOL: f64 = 1e-9;

/// Upper bound on cells per grid, guarding arithmetic and allocations against
/// absurd headers.
pub const MAX_CELLS: usize = 100_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct RasterGrid {
    ncols: usize,
    nrows: usize,
    xllcorner: f64,
    yllcorner: f64,
    cellsize: f64,
    nodata_value: f64,
    values: Vec<f64>,
}

impl RasterGrid {
    /// Build a grid, validating the invariants: `values.len() == ncols*nrows`,
    /// positive dimensions and cellsize, and no NaN anywhere.
    pub fn new(
        ncols: usize,
        nrows: usize,
        xllcorner: f64,
        yllcorner: f64,
        cellsize: f64,
        nodata_value: f64,
        values: Vec<f64>,
    ) -> Result<Self> {
        if ncols == 0 || nrows == 0 {
            return Err(Error::InvalidGrid(format!(
                "dimensions must be positive, got {ncols}x{nrows}"
            )));
        }
        if !cellsize.is_finite() || cellsize <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "cellsize must be a positive real, got {cellsize}"
            )));
        }
        if !xllcorner.is_finite() || !yllcorner.is_finite() {
            return Err(Error::InvalidGrid("corner coordinates must be finite".into()));
        }
        if nodata_value.is_nan() {
            return Err(Error::InvalidGrid("NODATA value may not be NaN".into()));
        }
        let expected = ncols
            .checked_mul(nrows)
            .filter(|&n| n <= MAX_CELLS)
            .ok_or_else(|| {
                Error::InvalidGrid(format!("grid of {ncols}x{nrows} cells is too large"))
            })?;
        if values.len() != expected {
            return Err(Error::InvalidGrid(format!(
                "cell count mismatch: header says {expected} cells ({ncols}x{nrows}), got {}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::InvalidGrid(format!("NaN cell value at index {pos}")));
        }
        Ok(RasterGrid {
            ncols,
            nrows,
            xllcorner,
            yllcorner,
            cellsize,
            nodata_value,
            values,
        })
    }

    /// Grid with every cell set to `fill`, sharing no georeferencing with anything.
    pub fn filled(
        ncols: usize,
        nrows: usize,
        xllcorner: f64,
        yllcorner: f64,
        cellsize: f64,
        nodata_value: f64,
        fill: f64,
    ) -> Result<Self> {
        RasterGrid::new(
            ncols,
            nrows,
            xllcorner,
            yllcorner,
            cellsize,
            nodata_value,
            vec![fill; ncols * nrows],
        )
    }

    /// New grid with this grid's header and the given cell values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        RasterGrid::new(
            self.ncols,
            self.nrows,
            self.xllcorner,
            self.yllcorner,
            self.cellsize,
            self.nodata_value,
            values,
        )
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn xllcorner(&self) -> f64 {
        self.xllcorner
    }

    pub fn yllcorner(&self) -> f64 {
        self.yllcorner
    }

    pub fn cellsize(&self) -> f64 {
        self.cellsize
    }

    pub fn nodata_value(&self) -> f64 {
        self.nodata_value
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // dimensions are positive by construction
    }

    #[inline]
    pub fn idx(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.nrows && col < self.ncols);
        row * self.ncols + col
    }

    #[inline]
    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[self.idx(row, col)]
    }

    /// Overwrite one cell. NaN is rejected by panic; use the NODATA value to
    /// mark a missing reading.
    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        assert!(!v.is_nan(), "NaN may not be stored in a grid");
        let i = self.idx(row, col);
        self.values[i] = v;
    }

    #[inline]
    pub fn is_nodata(&self, v: f64) -> bool {
        v == self.nodata_value
    }

    #[inline]
    pub fn is_nodata_at(&self, row: usize, col: usize) -> bool {
        self.is_nodata(self.value(row, col))
    }

    /// Map x-coordinate of the center of column `col`.
    #[inline]
    pub fn cell_x(&self, col: usize) -> f64 {
        self.xllcorner + (col as f64 + 0.5) * self.cellsize
    }

    /// Map y-coordinate of the center of row `row` (row 0 is northernmost).
    #[inline]
    pub fn cell_y(&self, row: usize) -> f64 {
        self.yllcorner + (self.nrows as f64 - row as f64 - 0.5) * self.cellsize
    }

    /// Iterate `(row, col, value)` over non-NODATA cells in row-major order.
    pub fn data_cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.values.iter().enumerate().filter_map(move |(i, &v)| {
            if self.is_nodata(v) {
                None
            } else {
                Some((i / self.ncols, i % self.ncols, v))
            }
        })
    }

    pub fn count_data_cells(&self) -> usize {
        self.values.iter().filter(|&&v| !self.is_nodata(v)).count()
    }

    /// Apply `f` to every data cell; `None` becomes NODATA. NODATA cells
    /// propagate untouched. The header is preserved.
    pub fn map_data_cells(&self, f: impl Fn(f64) -> Option<f64>) -> RasterGrid {
        let nd = self.nodata_value;
        let values = self
            .values
            .iter()
            .map(|&v| {
                if self.is_nodata(v) {
                    nd
                } else {
                    f(v).unwrap_or(nd)
                }
            })
            .collect();
        // header unchanged, so this cannot fail unless f produced NaN
        self.with_values(values).expect("mapped grid keeps a valid header")
    }

    /// Name of the first header field on which `other` disagrees with `self`,
    /// or `None` when aligned (1e-9 tolerance on the real-valued fields).
    pub fn misaligned_field(&self, other: &RasterGrid) -> Option<&'static str> {
        if self.ncols != other.ncols {
            return Some("ncols");
        }
        if self.nrows != other.nrows {
            return Some("nrows");
        }
        if (self.xllcorner - other.xllcorner).abs() > ALIGN_TOL {
            return Some("xllcorner");
        }
        if (self.yllcorner - other.yllcorner).abs() > ALIGN_TOL {
            return Some("yllcorner");
        }
        if (self.cellsize - other.cellsize).abs() > ALIGN_TOL {
            return Some("cellsize");
        }
        None
    }
}

/// Check that all grids share one georeferencing (dimensions, corner, cellsize).
/// The first grid is the reference; the error names the first offender.
pub fn check_aligned<'a, I>(grids: I) -> Result<()>
where
    I: IntoIterator<Item = &'a RasterGrid>,
{
    let mut iter = grids.into_iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::InvalidInput("check_aligned: empty grid list".into()))?;
    for (i, g) in iter.enumerate() {
        if let Some(field) = first.misaligned_field(g) {
            return Err(Error::Misaligned { index: i + 1, field });
        }
    }
    Ok(())
}
