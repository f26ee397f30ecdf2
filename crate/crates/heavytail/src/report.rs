//! Shared output formatting.
//!
//! Every float that leaves the library as text goes through [`fmt_f64`],
//! which prints 17 significant digits. That is enough to round-trip any
//! `f64` exactly, so two runs that compute identical numbers produce
//! byte-identical reports.

use serde::Serializer;

/// Render a float with 17 significant digits (`{:.16e}`).
///
/// Non-finite values render as `inf`, `-inf` or `nan`; JSON writers are
/// expected to map those to `null` before calling this.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        }
    } else {
        format!("{:.16e}", x)
    }
}

/// 17-digit raw JSON number token; `None` for non-finite values (callers
/// serialize that as `null`).
pub(crate) fn raw_json_number(x: f64) -> Option<Box<serde_json::value::RawValue>> {
    x.is_finite().then(|| serde_json::value::RawValue::from_string(fmt_f64(x)).ok()).flatten()
}

/// Serialize an `f64` as a raw JSON number token with 17 significant digits.
/// Non-finite values become `null`.
pub fn serde_f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        let raw = serde_json::value::RawValue::from_string(fmt_f64(*x))
            .map_err(serde::ser::Error::custom)?;
        serde::Serialize::serialize(&raw, s)
    } else {
        s.serialize_none()
    }
}

/// Same as [`serde_f64`] for optional fields; `None` becomes `null`.
pub fn serde_opt_f64<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => serde_f64(v, s),
        None => s.serialize_none(),
    }
}

/// Serialize a slice of floats as a JSON array of 17-digit number tokens.
pub fn serde_f64_slice<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        if x.is_finite() {
            let raw = serde_json::value::RawValue::from_string(fmt_f64(*x))
                .map_err(serde::ser::Error::custom)?;
            seq.serialize_element(&raw)?;
        } else {
            seq.serialize_element(&Option::<f64>::None)?;
        }
    }
    seq.end()
}
