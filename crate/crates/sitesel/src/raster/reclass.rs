//! Reclassification of raw layer values onto the 0..10 suitability scale.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::RasterGrid;

/// Tolerance for treating a raster cell as an integer class code.
const CODE_TOL: f64 = 1e-9;

/// Mapping from raw layer values to suitability scores in `[0, 10]`.
///
/// Categorical tables map integer class codes to scores; codes missing from
/// the table become NODATA rather than an error, so rare classes in real
/// land-cover files degrade gracefully. Continuous tables are an ascending
/// list of `(upto, score)` intervals: a value takes the score of the first
/// breakpoint whose bound it does not exceed, and the last breakpoint catches
/// everything that remains (`upto` may be `null` in JSON, meaning +infinity).
/// NODATA always propagates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ReclassTableRaw", into = "ReclassTableRaw")]
pub enum ReclassTable {
    Categorical { map: BTreeMap<i64, f64> },
    Continuous { breakpoints: Vec<Breakpoint> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Breakpoint {
    /// Upper bound of the interval; `f64::INFINITY` (JSON `null`) for the catch-all.
    #[serde(with = "upto_inf")]
    pub upto: f64,
    pub score: f64,
}

impl Breakpoint {
    pub fn new(upto: f64, score: f64) -> Self {
        Breakpoint { upto, score }
    }
}

// Strict JSON shape: {"kind": "categorical", "map": {...}} or
// {"kind": "continuous", "breakpoints": [...]}, unknown keys rejected.
#[derive(Serialize, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
struct ReclassTableRaw {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    map: Option<BTreeMap<i64, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    breakpoints: Option<Vec<Breakpoint>>,
}

impl TryFrom<ReclassTableRaw> for ReclassTable {
    type Error = String;

    fn try_from(raw: ReclassTableRaw) -> std::result::Result<Self, String> {
        match raw.kind.as_str() {
            "categorical" => {
                if raw.breakpoints.is_some() {
                    return Err("categorical table may not have `breakpoints`".into());
                }
                let map = raw.map.ok_or("categorical table requires `map`")?;
                Ok(ReclassTable::Categorical { map })
            }
            "continuous" => {
                if raw.map.is_some() {
                    return Err("continuous table may not have `map`".into());
                }
                let breakpoints = raw.breakpoints.ok_or("continuous table requires `breakpoints`")?;
                Ok(ReclassTable::Continuous { breakpoints })
            }
            other => Err(format!("unknown reclass kind `{other}` (expected `categorical` or `continuous`)")),
        }
    }
}

impl From<ReclassTable> for ReclassTableRaw {
    fn from(table: ReclassTable) -> Self {
        match table {
            ReclassTable::Categorical { map } => ReclassTableRaw {
                kind: "categorical".into(),
                map: Some(map),
                breakpoints: None,
            },
            ReclassTable::Continuous { breakpoints } => ReclassTableRaw {
                kind: "continuous".into(),
                map: None,
                breakpoints: Some(breakpoints),
            },
        }
    }
}

mod upto_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, ser: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            ser.serialize_none()
        } else {
            ser.serialize_some(v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(de)?.unwrap_or(f64::INFINITY))
    }
}

impl ReclassTable {
    pub fn categorical(pairs: impl IntoIterator<Item = (i64, f64)>) -> Self {
        ReclassTable::Categorical {
            map: pairs.into_iter().collect(),
        }
    }

    pub fn continuous(breakpoints: impl IntoIterator<Item = (f64, f64)>) -> Self {
        ReclassTable::Continuous {
            breakpoints: breakpoints.into_iter().map(|(u, s)| Breakpoint::new(u, s)).collect(),
        }
    }

    /// Check the table invariants: non-empty, scores in `[0, 10]`, and for
    /// continuous tables strictly ascending upper bounds.
    pub fn validate(&self) -> Result<()> {
        let bad_score = |s: f64| !s.is_finite() || !(0.0..=10.0).contains(&s);
        match self {
            ReclassTable::Categorical { map } => {
                if map.is_empty() {
                    return Err(Error::InvalidTable("categorical map is empty".into()));
                }
                for (&code, &score) in map {
                    if bad_score(score) {
                        return Err(Error::InvalidTable(format!(
                            "score for class {code} must lie in [0, 10], got {score}"
                        )));
                    }
                }
            }
            ReclassTable::Continuous { breakpoints } => {
                if breakpoints.is_empty() {
                    return Err(Error::InvalidTable("breakpoint list is empty".into()));
                }
                for (i, bp) in breakpoints.iter().enumerate() {
                    if bp.upto.is_nan() {
                        return Err(Error::InvalidTable(format!("breakpoint {i} has NaN bound")));
                    }
                    if bad_score(bp.score) {
                        return Err(Error::InvalidTable(format!(
                            "score at breakpoint {i} must lie in [0, 10], got {}",
                            bp.score
                        )));
                    }
                    if i > 0 && bp.upto <= breakpoints[i - 1].upto {
                        return Err(Error::InvalidTable(format!(
                            "breakpoints must be strictly ascending, got {} then {}",
                            breakpoints[i - 1].upto,
                            bp.upto
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Score for a raw value; `None` means NODATA (unknown categorical code
    /// or a non-integral value fed to a categorical table).
    pub fn score_for(&self, v: f64) -> Option<f64> {
        match self {
            ReclassTable::Categorical { map } => {
                let code = v.round();
                if (v - code).abs() > CODE_TOL {
                    return None;
                }
                map.get(&(code as i64)).copied()
            }
            ReclassTable::Continuous { breakpoints } => breakpoints
                .iter()
                .find(|bp| v <= bp.upto)
                .or_else(|| breakpoints.last())
                .map(|bp| bp.score),
        }
    }
}

/// Reclassify every data cell of `grid` through `table`. Output keeps the
/// input header; NODATA propagates and unknown categorical codes become NODATA.
pub fn reclassify(grid: &RasterGrid, table: &ReclassTable) -> Result<RasterGrid> {
    table.validate()?;
    Ok(grid.map_data_cells(|v| table.score_for(v)))
}
