//! The tuple file format: one JSON object.
//!
//! ```json
//! {
//!   "dimension": 2,
//!   "symbols": 2,
//!   "scalar_policy": "exact-rational",
//!   "label": "notmix2",
//!   "matrices": [[["0", "2"], ["1", "0"]], ["0", "1", "2", "0"]]
//! }
//! ```
//!
//! Each matrix is either a list of rows or a flat row-major list. Entries
//! are `"p/q"` strings, integers, or decimals; any decimal forces the
//! double-precision policy. `symbols`, `scalar_policy` and `label` are
//! optional.

use std::path::Path;

use nalgebra::DMatrix;
use num_rational::BigRational;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::rational::{format_rational, parse_rational, ratio_to_f64, QMatrix};
use crate::tuple::{MatrixTuple, ScalarPolicy};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    dimension: usize,
    #[serde(default)]
    symbols: Option<usize>,
    #[serde(default)]
    scalar_policy: Option<ScalarPolicy>,
    #[serde(default)]
    label: Option<String>,
    matrices: Vec<Value>,
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse { line: e.line(), column: e.column(), message: e.to_string() }
}

fn entry(v: &Value, at: &str) -> Result<(BigRational, bool)> {
    let text = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        other => return Err(Error::InvalidTuple(format!("{at}: expected a number or \"p/q\" string, got {other}"))),
    };
    parse_rational(&text).map_err(|m| Error::InvalidTuple(format!("{at}: {m}")))
}

fn matrix_entries(v: &Value, d: usize, k: usize) -> Result<Vec<(BigRational, bool)>> {
    let at = format!("matrix {}", k + 1);
    let Value::Array(items) = v else {
        return Err(Error::InvalidTuple(format!("{at}: expected an array")));
    };
    let nested = items.iter().all(Value::is_array) && !items.is_empty();
    let mut out = Vec::with_capacity(d * d);
    if nested {
        if items.len() != d {
            return Err(Error::InvalidTuple(format!("{at}: has {} rows, expected {d}", items.len())));
        }
        for (r, row) in items.iter().enumerate() {
            let row = row.as_array().unwrap();
            if row.len() != d {
                return Err(Error::InvalidTuple(format!("{at}: row {} has {} entries, expected {d}", r + 1, row.len())));
            }
            for (c, x) in row.iter().enumerate() {
                out.push(entry(x, &format!("{at}, entry ({}, {})", r + 1, c + 1))?);
            }
        }
    } else {
        if items.len() != d * d {
            return Err(Error::InvalidTuple(format!("{at}: has {} entries, expected {}", items.len(), d * d)));
        }
        for (i, x) in items.iter().enumerate() {
            out.push(entry(x, &format!("{at}, entry ({}, {})", i / d + 1, i % d + 1))?);
        }
    }
    Ok(out)
}

/// Parses the text of a tuple file.
pub fn parse_tuple(text: &str) -> Result<MatrixTuple> {
    let raw: RawSpec = serde_json::from_str(text).map_err(parse_error)?;
    let d = raw.dimension;
    if d == 0 {
        return Err(Error::InvalidTuple("dimension must be at least 1".into()));
    }
    if let Some(m) = raw.symbols {
        if m != raw.matrices.len() {
            return Err(Error::InvalidTuple(format!("symbols is {m} but {} matrices are given", raw.matrices.len())));
        }
    }
    let mut mats = Vec::with_capacity(raw.matrices.len());
    let mut any_decimal = false;
    for (k, v) in raw.matrices.iter().enumerate() {
        let entries = matrix_entries(v, d, k)?;
        any_decimal |= entries.iter().any(|(_, dec)| *dec);
        mats.push(entries.into_iter().map(|(x, _)| x).collect::<Vec<_>>());
    }
    let policy = if any_decimal { ScalarPolicy::DoublePrecision } else { raw.scalar_policy.unwrap_or(ScalarPolicy::ExactRational) };
    let tuple = match policy {
        ScalarPolicy::ExactRational => {
            MatrixTuple::from_exact(mats.into_iter().map(|m| QMatrix::from_row_major(d, d, m)).collect())?
        }
        ScalarPolicy::DoublePrecision => MatrixTuple::from_float(
            mats.into_iter().map(|m| DMatrix::from_row_iterator(d, d, m.iter().map(ratio_to_f64))).collect(),
        )?,
    };
    Ok(match raw.label {
        Some(l) => tuple.with_label(l),
        None => tuple,
    })
}

pub fn read_tuple(path: &Path) -> Result<MatrixTuple> {
    parse_tuple(&std::fs::read_to_string(path)?)
}

/// Canonical JSON form of a tuple; exact entries as `"p/q"` strings, float
/// entries as shortest round-trip decimals.
pub fn to_json(tuple: &MatrixTuple) -> Value {
    let d = tuple.dim();
    let matrices: Vec<Value> = match tuple.exacts() {
        Some(qs) => qs
            .iter()
            .map(|q| {
                json!((0..d).map(|r| (0..d).map(|c| format_rational(&q[(r, c)])).collect::<Vec<_>>()).collect::<Vec<_>>())
            })
            .collect(),
        None => tuple
            .floats()
            .iter()
            .map(|m| json!((0..d).map(|r| (0..d).map(|c| format!("{:?}", m[(r, c)])).collect::<Vec<_>>()).collect::<Vec<_>>()))
            .collect(),
    };
    let mut v = json!({
        "dimension": d,
        "symbols": tuple.symbols(),
        "scalar_policy": tuple.policy(),
        "matrices": matrices,
    });
    if let Some(l) = tuple.label() {
        v["label"] = json!(l);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;

    #[test]
    fn round_trip() {
        for t in [builtins::notmix2(), builtins::alpha(crate::rational::rat(3, 5), crate::rational::rat(4, 5))] {
            let text = serde_json::to_string_pretty(&to_json(&t)).unwrap();
            assert_eq!(parse_tuple(&text).unwrap(), t);
        }
    }

    #[test]
    fn flat_and_numbers() {
        let t = parse_tuple(r#"{"dimension": 2, "matrices": [[0, 2, 1, 0], ["0", "1", "2", "0"]]}"#).unwrap();
        assert_eq!(t, builtins::notmix2());
        assert_eq!(t.policy(), ScalarPolicy::ExactRational);
        let t = parse_tuple(r#"{"dimension": 1, "matrices": [[0.5], ["1/3"]]}"#).unwrap();
        assert_eq!(t.policy(), ScalarPolicy::DoublePrecision);
    }

    #[test]
    fn errors() {
        let e = parse_tuple("{\n  \"dimension\": 2,\n  \"matrices\": [,]\n}").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        let e = parse_tuple(r#"{"dimension": 2, "matrices": [[[1, 2]], [[1, 0], [0, 1]]]}"#).unwrap_err();
        assert!(matches!(e, Error::InvalidTuple(_)));
        assert_eq!(e.exit_code(), 2);
        let e = parse_tuple(r#"{"dimension": 1, "matrices": [["1/0"], ["1"]]}"#).unwrap_err();
        assert!(e.to_string().contains("zero denominator"));
        assert!(parse_tuple(r#"{"dimension": 1, "matrices": [["1"]]}"#).is_err());
    }
}
