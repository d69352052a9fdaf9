//! Fixed-precision number emission shared by the JSON and CSV writers.

use serde::Serializer;

/// `x` with exactly nine fractional digits; negative zero prints as zero.
pub fn fixed9(x: f64) -> String {
    let s = format!("{x:.9}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

/// Rounds to twelve significant digits.
pub(crate) fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

pub(crate) fn ser_fixed9<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    use serde::Serialize;
    let n: serde_json::Number = fixed9(*x)
        .parse()
        .map_err(|_| serde::ser::Error::custom("non-finite value"))?;
    n.serialize(s)
}

pub(crate) fn ser_sig12<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(sig12(*x))
}
