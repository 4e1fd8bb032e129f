//! Weighted-sum overlay of criterion layers, labeling rules, and candidate
//! extraction from the suitability map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{check_aligned, RasterGrid};

/// Tolerance for treating a weight vector as normalized.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerWeight {
    pub name: String,
    pub weight: f64,
}

/// Ordered per-layer weights. Weights are nonnegative; callers that need a
/// convex combination normalize explicitly, since scaling behavior of the
/// overlay is part of its contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector {
    entries: Vec<LayerWeight>,
}

impl WeightVector {
    pub fn new(pairs: impl IntoIterator<Item = (String, f64)>) -> Result<Self> {
        let vector = WeightVector {
            entries: pairs
                .into_iter()
                .map(|(name, weight)| LayerWeight { name, weight })
                .collect(),
        };
        vector.validate()?;
        Ok(vector)
    }

    /// Nonnegative finite weights, not all zero.
    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::InvalidInput("weight vector is empty".into()));
        }
        for e in &self.entries {
            if !e.weight.is_finite() || e.weight < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "weight for layer `{}` must be a nonnegative real, got {}",
                    e.name, e.weight
                )));
            }
        }
        if self.entries.iter().map(|e| e.weight).sum::<f64>() <= 0.0 {
            return Err(Error::InvalidInput("weights must not all be zero".into()));
        }
        Ok(())
    }

    pub fn entries(&self) -> &[LayerWeight] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.name.as_str())
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.weight)
    }

    pub fn sum(&self) -> f64 {
        self.weights().sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.sum() - 1.0).abs() <= WEIGHT_SUM_TOL
    }

    /// Rescale so the weights sum to 1.
    pub fn normalized(&self) -> WeightVector {
        let total = self.sum();
        WeightVector {
            entries: self
                .entries
                .iter()
                .map(|e| LayerWeight {
                    name: e.name.clone(),
                    weight: e.weight / total,
                })
                .collect(),
        }
    }

    /// Max-norm difference against `other`; layer names must match pairwise.
    pub fn max_abs_delta(&self, other: &WeightVector) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::InvalidInput(format!(
                "weight vectors differ in length: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        let mut delta = 0.0f64;
        for (a, b) in self.entries.iter().zip(&other.entries) {
            if a.name != b.name {
                return Err(Error::InvalidInput(format!(
                    "weight vectors differ in layer order: `{}` vs `{}`",
                    a.name, b.name
                )));
            }
            delta = delta.max((a.weight - b.weight).abs());
        }
        Ok(delta)
    }
}

/// Cell-wise weighted sum of aligned layers: `out = sum_k w_k * layer_k`.
/// NODATA in any layer poisons the output cell; there is no partial
/// renormalization over the layers that do have data.
pub fn weighted_sum(layers: &[RasterGrid], weights: &WeightVector) -> Result<RasterGrid> {
    if layers.len() != weights.len() {
        return Err(Error::InvalidInput(format!(
            "layer count {} does not match weight count {}",
            layers.len(),
            weights.len()
        )));
    }
    check_aligned(layers.iter())?;
    let first = &layers[0];
    let nd = first.nodata_value();
    let w: Vec<f64> = weights.weights().collect();
    let mut out = vec![0.0f64; first.len()];
    'cells: for (i, cell) in out.iter_mut().enumerate() {
        let mut acc = 0.0f64;
        for (k, layer) in layers.iter().enumerate() {
            let v = layer.values()[i];
            if layer.is_nodata(v) {
                *cell = nd;
                continue 'cells;
            }
            acc += w[k] * v;
        }
        *cell = acc;
    }
    first.with_values(out)
}

/// Binary labels from a fixed cut: 1 where `value >= tau`, else 0.
/// NODATA propagates.
pub fn threshold_labels(suitability: &RasterGrid, tau: f64) -> RasterGrid {
    suitability.map_data_cells(|v| Some(if v >= tau { 1.0 } else { 0.0 }))
}

/// Binary labels by quantile: the top `q` fraction of data cells (by value,
/// ties broken by row-major position) get label 1, the rest 0. The positive
/// count is `ceil(q * data_cells)` clamped so both classes are non-empty,
/// which keeps downstream training viable for any map.
pub fn quantile_labels(suitability: &RasterGrid, q: f64) -> Result<RasterGrid> {
    if q.is_nan() || q <= 0.0 || q >= 1.0 {
        return Err(Error::InvalidInput(format!(
            "quantile fraction must lie in (0, 1), got {q}"
        )));
    }
    let mut ranked: Vec<(usize, usize, f64)> = suitability.data_cells().collect();
    if ranked.len() < 2 {
        return Err(Error::InvalidInput(
            "quantile labeling needs at least 2 data cells".into(),
        ));
    }
    let n = ranked.len();
    let positives = ((q * n as f64).ceil() as usize).clamp(1, n - 1);
    ranked.sort_by(|a, b| {
        b.2.total_cmp(&a.2)
            .then_with(|| (a.0, a.1).cmp(&(b.0, b.1)))
    });
    let mut out = threshold_labels(suitability, f64::INFINITY); // all zeros, NODATA kept
    for &(row, col, _) in ranked.iter().take(positives) {
        out.set(row, col, 1.0);
    }
    Ok(out)
}

/// How the candidate set is drawn from the suitability map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CandidateModeRaw", into = "CandidateModeRaw")]
pub enum CandidateMode {
    /// Every non-NODATA cell.
    AllCells,
    /// The `ceil(fraction * data_cells)` highest-scoring cells.
    TopFraction { fraction: f64 },
    /// Analyst-supplied `(row, col)` cells, validated against the map.
    Explicit { cells: Vec<(usize, usize)> },
}

#[derive(Serialize, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
struct CandidateModeRaw {
    mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cells: Option<Vec<(usize, usize)>>,
}

impl TryFrom<CandidateModeRaw> for CandidateMode {
    type Error = String;

    fn try_from(raw: CandidateModeRaw) -> std::result::Result<Self, String> {
        match raw.mode.as_str() {
            "all_cells" => {
                if raw.fraction.is_some() || raw.cells.is_some() {
                    return Err("all_cells takes no parameters".into());
                }
                Ok(CandidateMode::AllCells)
            }
            "top_fraction" => {
                if raw.cells.is_some() {
                    return Err("top_fraction does not take `cells`".into());
                }
                let fraction = raw.fraction.ok_or("top_fraction requires `fraction`")?;
                Ok(CandidateMode::TopFraction { fraction })
            }
            "explicit" => {
                if raw.fraction.is_some() {
                    return Err("explicit does not take `fraction`".into());
                }
                let cells = raw.cells.ok_or("explicit requires `cells`")?;
                Ok(CandidateMode::Explicit { cells })
            }
            other => Err(format!(
                "unknown candidate mode `{other}` (expected all_cells, top_fraction, or explicit)"
            )),
        }
    }
}

impl From<CandidateMode> for CandidateModeRaw {
    fn from(mode: CandidateMode) -> Self {
        match mode {
            CandidateMode::AllCells => CandidateModeRaw {
                mode: "all_cells".into(),
                fraction: None,
                cells: None,
            },
            CandidateMode::TopFraction { fraction } => CandidateModeRaw {
                mode: "top_fraction".into(),
                fraction: Some(fraction),
                cells: None,
            },
            CandidateMode::Explicit { cells } => CandidateModeRaw {
                mode: "explicit".into(),
                fraction: None,
                cells: Some(cells),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub id: usize,
    pub row: usize,
    pub col: usize,
    /// Map coordinates of the cell center.
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub candidates: Vec<Candidate>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Draw the candidate set from a suitability map. Ids are assigned 0.. in the
/// order produced: row-major for `AllCells`, score-descending (row-major on
/// ties) for `TopFraction`, input order for `Explicit`.
pub fn extract_candidates(suitability: &RasterGrid, mode: &CandidateMode) -> Result<CandidateSet> {
    let make = |cells: Vec<(usize, usize)>| CandidateSet {
        candidates: cells
            .into_iter()
            .enumerate()
            .map(|(id, (row, col))| Candidate {
                id,
                row,
                col,
                x: suitability.cell_x(col),
                y: suitability.cell_y(row),
            })
            .collect(),
    };

    match mode {
        CandidateMode::AllCells => {
            let cells: Vec<_> = suitability.data_cells().map(|(r, c, _)| (r, c)).collect();
            if cells.is_empty() {
                return Err(Error::Candidate("extraction found no data cells".into()));
            }
            Ok(make(cells))
        }
        CandidateMode::TopFraction { fraction } => {
            if fraction.is_nan() || *fraction <= 0.0 || *fraction > 1.0 {
                return Err(Error::InvalidInput(format!(
                    "top_fraction must lie in (0, 1], got {fraction}"
                )));
            }
            let mut ranked: Vec<(usize, usize, f64)> = suitability.data_cells().collect();
            if ranked.is_empty() {
                return Err(Error::Candidate("extraction found no data cells".into()));
            }
            let take = (fraction * ranked.len() as f64).ceil() as usize;
            ranked.sort_by(|a, b| {
                b.2.total_cmp(&a.2)
                    .then_with(|| (a.0, a.1).cmp(&(b.0, b.1)))
            });
            Ok(make(ranked.into_iter().take(take).map(|(r, c, _)| (r, c)).collect()))
        }
        CandidateMode::Explicit { cells } => {
            for &(row, col) in cells {
                if row >= suitability.nrows() || col >= suitability.ncols() {
                    return Err(Error::Candidate(format!(
                        "({row}, {col}) out of bounds for a {}x{} grid",
                        suitability.nrows(),
                        suitability.ncols()
                    )));
                }
                if suitability.is_nodata_at(row, col) {
                    return Err(Error::Candidate(format!(
                        "({row}, {col}) lies on a NODATA cell of the suitability map"
                    )));
                }
            }
            Ok(make(cells.clone()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(values: Vec<f64>, ncols: usize, nrows: usize) -> RasterGrid {
        RasterGrid::new(ncols, nrows, 0.0, 0.0, 10.0, -9999.0, values).unwrap()
    }

    fn wv(pairs: &[(&str, f64)]) -> WeightVector {
        WeightVector::new(pairs.iter().map(|(n, w)| (n.to_string(), *w))).unwrap()
    }

    #[test]
    fn single_layer_identity() {
        let a = grid(vec![2.0, 4.0, 6.0, 8.0], 2, 2);
        let out = weighted_sum(std::slice::from_ref(&a), &wv(&[("a", 1.0)])).unwrap();
        assert_eq!(out.values(), a.values());
    }

    #[test]
    fn hand_computed_two_layer_mix() {
        let a = grid(vec![2.0, 4.0, 6.0, 8.0], 2, 2);
        let b = grid(vec![0.0, 2.0, 4.0, 6.0], 2, 2);
        let out = weighted_sum(&[a, b], &wv(&[("a", 0.5), ("b", 0.5)])).unwrap();
        assert_eq!(out.values(), &[1.0, 3.0, 5.0, 7.0]);
    }

    #[test]
    fn identical_layers_under_normalized_weights() {
        let a = grid(vec![1.25, 3.5, 7.0, 9.75], 2, 2);
        let layers = vec![a.clone(), a.clone(), a.clone()];
        let out = weighted_sum(&layers, &wv(&[("x", 0.2), ("y", 0.5), ("z", 0.3)])).unwrap();
        for (got, want) in out.values().iter().zip(a.values()) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn nodata_poisons_cell() {
        let a = grid(vec![1.0, -9999.0, 3.0, 4.0], 2, 2);
        let b = grid(vec![1.0, 1.0, 1.0, -9999.0], 2, 2);
        let out = weighted_sum(&[a, b], &wv(&[("a", 0.5), ("b", 0.5)])).unwrap();
        assert!(!out.is_nodata_at(0, 0));
        assert!(out.is_nodata_at(0, 1));
        assert!(out.is_nodata_at(1, 1));
    }

    #[test]
    fn mismatched_lengths_and_alignment_error() {
        let a = grid(vec![0.0; 4], 2, 2);
        assert!(weighted_sum(std::slice::from_ref(&a), &wv(&[("a", 0.5), ("b", 0.5)])).is_err());
        let shifted = RasterGrid::new(2, 2, 5.0, 0.0, 10.0, -9999.0, vec![0.0; 4]).unwrap();
        assert!(weighted_sum(&[a, shifted], &wv(&[("a", 0.5), ("b", 0.5)])).is_err());
    }

    #[test]
    fn pair_permutation_invariance() {
        let a = grid(vec![1.0, 2.0, 3.0, 4.0], 2, 2);
        let b = grid(vec![5.0, 1.0, 0.0, 2.0], 2, 2);
        let fwd = weighted_sum(&[a.clone(), b.clone()], &wv(&[("a", 0.3), ("b", 0.7)])).unwrap();
        let rev = weighted_sum(&[b, a], &wv(&[("b", 0.7), ("a", 0.3)])).unwrap();
        for (x, y) in fwd.values().iter().zip(rev.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn per_cell_monotonicity() {
        let a = grid(vec![1.0, 2.0, 3.0, 4.0], 2, 2);
        let b = grid(vec![5.0, 1.0, 0.0, 2.0], 2, 2);
        let w = wv(&[("a", 0.4), ("b", 0.6)]);
        let base = weighted_sum(&[a.clone(), b.clone()], &w).unwrap();
        let mut bumped = a.clone();
        bumped.set(1, 0, 3.5);
        let out = weighted_sum(&[bumped, b], &w).unwrap();
        assert!(out.value(1, 0) >= base.value(1, 0));
    }

    #[test]
    fn threshold_examples() {
        let m = grid(vec![1.0, 3.0, 5.0, 7.0], 2, 2);
        assert_eq!(threshold_labels(&m, 4.0).values(), &[0.0, 0.0, 1.0, 1.0]);
        assert!(threshold_labels(&m, 0.0).values().iter().all(|&v| v == 1.0));
        assert!(threshold_labels(&m, 10.0 + 1e-9).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn threshold_monotone_in_tau_and_propagates_nodata() {
        let m = grid(vec![1.0, -9999.0, 5.0, 7.0], 2, 2);
        let lo = threshold_labels(&m, 2.0);
        let hi = threshold_labels(&m, 6.0);
        for i in 0..4 {
            if !m.is_nodata(m.values()[i]) {
                assert!(hi.values()[i] <= lo.values()[i]);
            }
        }
        assert!(lo.is_nodata_at(0, 1));
    }

    #[test]
    fn quantile_labels_top_fraction() {
        let m = grid(vec![1.0, 3.0, 5.0, 7.0], 2, 2);
        let labels = quantile_labels(&m, 0.25).unwrap();
        assert_eq!(labels.values(), &[0.0, 0.0, 0.0, 1.0]);
        // both classes always present
        let almost_all = quantile_labels(&m, 0.99).unwrap();
        assert!(almost_all.values().contains(&0.0));
        assert!(almost_all.values().contains(&1.0));
    }

    #[test]
    fn all_cells_candidates() {
        let m = grid(vec![1.0, 3.0, 5.0, 7.0], 2, 2);
        let set = extract_candidates(&m, &CandidateMode::AllCells).unwrap();
        assert_eq!(set.len(), 4);
        assert_eq!(
            set.candidates.iter().map(|c| c.id).collect::<Vec<_>>(),
            vec![0, 1, 2, 3]
        );
        // map coordinates of the first (northwest) cell center
        assert_eq!(set.candidates[0].x, 5.0);
        assert_eq!(set.candidates[0].y, 15.0);
    }

    #[test]
    fn top_quarter_selects_highest_cell() {
        let m = grid(vec![1.0, 3.0, 5.0, 7.0], 2, 2);
        let set = extract_candidates(&m, &CandidateMode::TopFraction { fraction: 0.25 }).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!((set.candidates[0].row, set.candidates[0].col), (1, 1));
    }

    #[test]
    fn top_fraction_tie_break_is_row_major() {
        let m = grid(vec![7.0, 3.0, 7.0, 1.0], 2, 2);
        let set = extract_candidates(&m, &CandidateMode::TopFraction { fraction: 0.25 }).unwrap();
        assert_eq!((set.candidates[0].row, set.candidates[0].col), (0, 0));
    }

    #[test]
    fn explicit_candidates_validated() {
        let m = grid(vec![1.0, -9999.0, 5.0, 7.0], 2, 2);
        let ok = extract_candidates(
            &m,
            &CandidateMode::Explicit { cells: vec![(1, 1), (0, 0)] },
        )
        .unwrap();
        assert_eq!(ok.len(), 2);
        assert_eq!(ok.candidates[0].id, 0);

        let oob = CandidateMode::Explicit { cells: vec![(9, 9)] };
        assert!(matches!(extract_candidates(&m, &oob), Err(Error::Candidate(_))));
        let on_nodata = CandidateMode::Explicit { cells: vec![(0, 1)] };
        assert!(matches!(extract_candidates(&m, &on_nodata), Err(Error::Candidate(_))));
    }

    #[test]
    fn weight_scaling_preserves_candidate_ranking() {
        let a = grid(vec![1.0, 2.0, 3.0, 4.0], 2, 2);
        let b = grid(vec![4.0, 1.0, 2.0, 3.0], 2, 2);
        let w = wv(&[("a", 0.25), ("b", 0.75)]);
        let scaled = wv(&[("a", 0.75), ("b", 2.25)]);
        let base = weighted_sum(&[a.clone(), b.clone()], &w).unwrap();
        let big = weighted_sum(&[a, b], &scaled).unwrap();
        for (x, y) in base.values().iter().zip(big.values()) {
            assert!((y - 3.0 * x).abs() < 1e-12);
        }
        let mode = CandidateMode::TopFraction { fraction: 0.5 };
        assert_eq!(
            extract_candidates(&base, &mode).unwrap(),
            extract_candidates(&big, &mode).unwrap()
        );
    }

    #[test]
    fn weight_vector_normalization() {
        let w = wv(&[("a", 2.0), ("b", 6.0)]);
        assert!(!w.is_normalized());
        let n = w.normalized();
        assert!(n.is_normalized());
        assert_eq!(n.entries()[0].weight, 0.25);
        assert!(WeightVector::new([("a".to_string(), -0.1)]).is_err());
        assert!(WeightVector::new([("a".to_string(), 0.0)]).is_err());
    }

    #[test]
    fn candidate_mode_json_shapes() {
        let tf: CandidateMode = serde_json::from_str(r#"{"mode":"top_fraction","fraction":0.1}"#).unwrap();
        assert_eq!(tf, CandidateMode::TopFraction { fraction: 0.1 });
        assert!(serde_json::from_str::<CandidateMode>(r#"{"mode":"all_cells","fraction":0.1}"#).is_err());
        let back = serde_json::to_string(&CandidateMode::AllCells).unwrap();
        assert_eq!(back, r#"{"mode":"all_cells"}"#);
    }
}
