//! Terrain derivatives: slope from a DEM and proximity rasters from source masks.

use crate::error::{Error, Result};
use crate::raster::RasterGrid;

const RAD_TO_DEG: f64 = 180.0 / std::f64::consts::PI;

/// Squared-distance sentinel, far beyond any reachable squared cell offset.
const FAR: f64 = 1e20;

/// Slope in degrees by Horn's 3x3 weighted finite differences.
///
/// For the window
/// ```text
/// a b c
/// d e f
/// g h i
/// ```
/// the gradients are `gx = ((c + 2f + i) - (a + 2d + g)) / (8*cellsize)` and
/// `gy = ((g + 2h + i) - (a + 2b + c)) / (8*cellsize)`, and the slope is
/// `atan(sqrt(gx^2 + gy^2))` in degrees. Border cells and any cell whose 3x3
/// window touches NODATA are NODATA: missing terrain is never in-filled.
pub fn slope_degrees(dem: &RasterGrid) -> Result<RasterGrid> {
    if dem.ncols() < 3 || dem.nrows() < 3 {
        return Err(Error::InvalidInput(format!(
            "slope needs at least a 3x3 grid, got {}x{}",
            dem.nrows(),
            dem.ncols()
        )));
    }
    let nd = dem.nodata_value();
    let denom = 8.0 * dem.cellsize();
    let mut out = vec![nd; dem.len()];
    for row in 1..dem.nrows() - 1 {
        for col in 1..dem.ncols() - 1 {
            let mut w = [0.0f64; 9];
            let mut touched_nodata = false;
            'window: for dr in 0..3 {
                for dc in 0..3 {
                    let v = dem.value(row + dr - 1, col + dc - 1);
                    if dem.is_nodata(v) {
                        touched_nodata = true;
                        break 'window;
                    }
                    w[dr * 3 + dc] = v;
                }
            }
            if touched_nodata {
                continue;
            }
            let gx = ((w[2] + 2.0 * w[5] + w[8]) - (w[0] + 2.0 * w[3] + w[6])) / denom;
            let gy = ((w[6] + 2.0 * w[7] + w[8]) - (w[0] + 2.0 * w[1] + w[2])) / denom;
            out[dem.idx(row, col)] = (gx * gx + gy * gy).sqrt().atan() * RAD_TO_DEG;
        }
    }
    dem.with_values(out)
}

/// Exact Euclidean distance (map units, cell center to cell center) from every
/// cell to the nearest source cell of `mask`.
///
/// Mask cells equal to 1 are sources; 0 and NODATA cells are not. The result
/// is computed with the two-pass separable transform: per-column 1-D squared
/// distances followed by a lower-envelope-of-parabolas pass along each row,
/// so it is exact, not a chamfer approximation.
pub fn distance_map(mask: &RasterGrid) -> Result<RasterGrid> {
    let (nrows, ncols) = (mask.nrows(), mask.ncols());
    let is_source = |row: usize, col: usize| {
        let v = mask.value(row, col);
        !mask.is_nodata(v) && v == 1.0
    };

    // pass 1: squared distance to the nearest source within each column
    let mut colsq = vec![FAR; mask.len()];
    let mut any_source = false;
    for col in 0..ncols {
        let mut last: Option<usize> = None;
        for row in 0..nrows {
            if is_source(row, col) {
                last = Some(row);
                any_source = true;
            }
            if let Some(s) = last {
                let d = (row - s) as f64;
                colsq[mask.idx(row, col)] = d * d;
            }
        }
        last = None;
        for row in (0..nrows).rev() {
            if is_source(row, col) {
                last = Some(row);
            }
            if let Some(s) = last {
                let d = (s - row) as f64;
                let i = mask.idx(row, col);
                colsq[i] = colsq[i].min(d * d);
            }
        }
    }
    if !any_source {
        return Err(Error::InvalidInput("distance_map: mask has no source cells".into()));
    }

    // pass 2: exact 1-D transform of the column distances along each row
    let cellsize = mask.cellsize();
    let mut out = vec![0.0f64; mask.len()];
    let mut f = vec![0.0f64; ncols];
    let mut d = vec![0.0f64; ncols];
    let mut hull = vec![0usize; ncols];
    let mut bounds = vec![0.0f64; ncols + 1];
    for row in 0..nrows {
        for col in 0..ncols {
            f[col] = colsq[mask.idx(row, col)];
        }
        dt1d(&f, &mut d, &mut hull, &mut bounds);
        for col in 0..ncols {
            out[mask.idx(row, col)] = d[col].sqrt() * cellsize;
        }
    }
    mask.with_values(out)
}

/// 1-D squared distance transform `d[q] = min_p ((q-p)^2 + f[p])` by the
/// lower envelope of parabolas.
fn dt1d(f: &[f64], d: &mut [f64], hull: &mut [usize], bounds: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    hull[0] = 0;
    bounds[0] = -FAR;
    bounds[1] = FAR;
    for q in 1..n {
        // intersection of the parabola at q with the rightmost hull parabola
        let mut s = intersect(f, q, hull[k]);
        while s <= bounds[k] {
            k -= 1;
            s = intersect(f, q, hull[k]);
        }
        k += 1;
        hull[k] = q;
        bounds[k] = s;
        bounds[k + 1] = FAR;
    }
    k = 0;
    for (q, cell) in d.iter_mut().enumerate().take(n) {
        while bounds[k + 1] < q as f64 {
            k += 1;
        }
        let p = hull[k];
        let dq = q as f64 - p as f64;
        *cell = dq * dq + f[p];
    }
}

#[inline]
fn intersect(f: &[f64], q: usize, p: usize) -> f64 {
    let (qf, pf) = (q as f64, p as f64);
    ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * qf - 2.0 * pf)
}

/// A polyline segment in map coordinates: `((x0, y0), (x1, y1))`.
pub type Segment = ((f64, f64), (f64, f64));

/// Burn segments into a 0/1 mask on the template's grid: a cell becomes 1
/// when its center lies within `cellsize / 2` of any segment.
pub fn rasterize_polyline(segments: &[Segment], template: &RasterGrid) -> RasterGrid {
    let (nrows, ncols) = (template.nrows(), template.ncols());
    let reach = template.cellsize() / 2.0;
    let cellsize = template.cellsize();
    let mut out = vec![0.0f64; template.len()];
    for &((x0, y0), (x1, y1)) in segments {
        // candidate window around the segment, padded one extra cell so
        // boundary-exact centers are never culled
        let pad = reach + cellsize;
        let col_lo = ((x0.min(x1) - pad - template.xllcorner()) / cellsize).floor().max(0.0) as usize;
        let col_hi = (((x0.max(x1) + pad - template.xllcorner()) / cellsize).ceil() as isize)
            .clamp(0, ncols as isize - 1) as usize;
        let row_of = |y: f64| -> isize {
            nrows as isize - 1 - ((y - template.yllcorner()) / cellsize).floor() as isize
        };
        let row_lo = row_of(y0.max(y1) + pad).clamp(0, nrows as isize - 1) as usize;
        let row_hi = row_of(y0.min(y1) - pad).clamp(0, nrows as isize - 1) as usize;
        for row in row_lo..=row_hi {
            for col in col_lo..=col_hi {
                let (cx, cy) = (template.cell_x(col), template.cell_y(row));
                if point_segment_distance(cx, cy, x0, y0, x1, y1) <= reach {
                    out[template.idx(row, col)] = 1.0;
                }
            }
        }
    }
    template
        .with_values(out)
        .expect("mask shares the template header")
}

fn point_segment_distance(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let (dx, dy) = (bx - ax, by - ay);
    let len_sq = dx * dx + dy * dy;
    let t = if len_sq == 0.0 {
        0.0
    } else {
        (((px - ax) * dx + (py - ay) * dy) / len_sq).clamp(0.0, 1.0)
    };
    let (qx, qy) = (ax + t * dx, ay + t * dy);
    ((px - qx) * (px - qx) + (py - qy) * (py - qy)).sqrt()
}

/// Brute-force reference for [`distance_map`]: minimum over all source cells.
/// Quadratic; test and verification use only.
pub fn distance_map_brute_force(mask: &RasterGrid) -> Result<RasterGrid> {
    let mut sources = Vec::new();
    for row in 0..mask.nrows() {
        for col in 0..mask.ncols() {
            let v = mask.value(row, col);
            if !mask.is_nodata(v) && v == 1.0 {
                sources.push((row as f64, col as f64));
            }
        }
    }
    if sources.is_empty() {
        return Err(Error::InvalidInput("distance_map: mask has no source cells".into()));
    }
    let mut out = vec![0.0f64; mask.len()];
    for row in 0..mask.nrows() {
        for col in 0..mask.ncols() {
            let best = sources
                .iter()
                .map(|&(sr, sc)| {
                    let (dr, dc) = (row as f64 - sr, col as f64 - sc);
                    dr * dr + dc * dc
                })
                .fold(f64::INFINITY, f64::min);
            out[mask.idx(row, col)] = best.sqrt() * mask.cellsize();
        }
    }
    mask.with_values(out)
}
