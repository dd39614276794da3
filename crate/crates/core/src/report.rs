//! JSON serialization helpers: reals are written with 17 significant digits
//! (`{:.16e}`), which round-trips every f64. Non-finite values become `null`.

use serde::ser::{SerializeSeq, Serializer};
use serde::Serialize;
use serde_json::value::RawValue;

fn raw(x: f64) -> Option<Box<RawValue>> {
    x.is_finite().then(|| RawValue::from_string(format!("{x:.16e}")).expect("valid JSON number"))
}

/// `#[serde(serialize_with = "sig17")]` for an `f64` field.
pub fn sig17<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    match raw(*x) {
        Some(r) => r.serialize(s),
        None => s.serialize_none(),
    }
}

pub fn sig17_vec<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for &x in xs {
        seq.serialize_element(&raw(x))?;
    }
    seq.end()
}

pub fn sig17_pairs<S: Serializer>(xs: &[(f64, f64)], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for &(a, b) in xs {
        seq.serialize_element(&[raw(a), raw(b)])?;
    }
    seq.end()
}

pub fn sig17_matrix<S: Serializer>(rows: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(rows.len()))?;
    for row in rows {
        seq.serialize_element(&row.iter().map(|&x| raw(x)).collect::<Vec<_>>())?;
    }
    seq.end()
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> crate::Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}
