//! Exact JSON forms of states and series.
//!
//! A series is `{points, dim, cap, denominator, terms}` where `cap` is
//! `null` for exact values, `denominator` lists `[localizer, exponent]`
//! and `terms` lists `[exponent vector, coefficient]`.

use std::fmt::Display;

use serde_json::{json, Value};
use vertexkit::series::{LocalizedSeries, Localizer, EXACT};
use vertexkit::Scalar;

pub fn rational<S: Scalar>(c: &S) -> Value {
    Value::String(c.render())
}

pub fn localizer(l: &Localizer) -> String {
    match l {
        Localizer::Point(i) => format!("x{i}"),
        Localizer::Difference(i, j) => format!("x{i}-x{j}"),
        Localizer::Quadratic { i, j: None, .. } => format!("q(x{i})"),
        Localizer::Quadratic { i, j: Some(j), .. } => format!("q(x{i}-x{j})"),
    }
}

/// `[[label, coefficient], ...]`.
pub fn linear<'a, K: Display + 'a, S: Scalar + 'a>(terms: impl Iterator<Item = (&'a K, &'a S)>) -> Value {
    Value::Array(terms.map(|(k, c)| json!([k.to_string(), rational(c)])).collect())
}

pub fn series<S: Scalar, M: vertexkit::linear::Module<S>>(
    s: &LocalizedSeries<S, M>,
    coeff: impl Fn(&M) -> Value,
) -> Value {
    let vars = s.vars();
    json!({
        "points": vars.count,
        "dim": vars.dim,
        "cap": if s.cap() == EXACT { Value::Null } else { json!(s.cap()) },
        "denominator": s.denominator().iter().map(|(l, e)| json!([localizer(l), e])).collect::<Vec<_>>(),
        "terms": s.numerator().iter().map(|(e, m)| json!([e, coeff(m)])).collect::<Vec<_>>(),
    })
}

pub fn scalar_series<S: Scalar>(s: &LocalizedSeries<S, S>) -> Value {
    series(s, rational)
}
