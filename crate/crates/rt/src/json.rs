//! ResultBuffer JSON encoding.
//!
//! A buffer maps to `{"metadata": {..}, "counts": {..}, "children": [..]}`.
//! Complex values become `[re, im]`; every other value kind maps onto the
//! obvious JSON type.

use qcor_core::{HeterogeneousMap, ResultBuffer, Value};
use serde_json::{json, Map, Value as Json};

use crate::backend::WALL_TIME;

/// Encoding switches.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct JsonOptions {
    /// Keep `wall-time` entries. Off by default so equal seeds give
    /// byte-identical documents.
    pub timing: bool,
}

fn real(x: f64) -> Json {
    // serde_json would silently write null for these.
    if x.is_finite() {
        Json::from(x)
    } else {
        Json::String(x.to_string())
    }
}

pub fn value_to_json(value: &Value, opts: JsonOptions) -> Json {
    match value {
        Value::Int(i) => Json::from(*i),
        Value::Real(x) => real(*x),
        Value::Complex(c) => Json::Array(vec![real(c.re), real(c.im)]),
        Value::Bool(b) => Json::Bool(*b),
        Value::Str(s) => Json::String(s.clone()),
        Value::RealList(xs) => Json::Array(xs.iter().copied().map(real).collect()),
        Value::StrList(xs) => Json::Array(xs.iter().cloned().map(Json::String).collect()),
        Value::List(xs) => Json::Array(xs.iter().map(|v| value_to_json(v, opts)).collect()),
        Value::Map(m) => map_to_json(m, opts),
    }
}

pub fn map_to_json(map: &HeterogeneousMap, opts: JsonOptions) -> Json {
    let obj: Map<String, Json> = map
        .iter()
        .filter(|(k, _)| opts.timing || *k != WALL_TIME)
        .map(|(k, v)| (k.to_string(), value_to_json(v, opts)))
        .collect();
    Json::Object(obj)
}

pub fn buffer_to_json(buffer: &ResultBuffer, opts: JsonOptions) -> Json {
    let counts: Map<String, Json> = buffer
        .counts
        .iter()
        .map(|(k, n)| (k.clone(), Json::from(*n)))
        .collect();
    json!({
        "metadata": map_to_json(&buffer.metadata, opts),
        "counts": counts,
        "children": buffer.children.iter().map(|c| buffer_to_json(c, opts)).collect::<Vec<_>>(),
    })
}

/// Pretty-printed document with a trailing newline.
pub fn to_json_string(buffer: &ResultBuffer, opts: JsonOptions) -> String {
    let mut s = serde_json::to_string_pretty(&buffer_to_json(buffer, opts))
        .expect("JSON values always serialize");
    s.push('\n');
    s
}

/// Checks `doc` against the ResultBuffer schema, naming the first offending
/// path on failure.
pub fn validate_result_buffer(doc: &Json) -> Result<(), String> {
    validate_at(doc, "$")
}

fn validate_at(doc: &Json, path: &str) -> Result<(), String> {
    let obj = doc
        .as_object()
        .ok_or_else(|| format!("{path}: expected an object"))?;
    if let Some(k) = obj
        .keys()
        .find(|k| !matches!(k.as_str(), "metadata" | "counts" | "children"))
    {
        return Err(format!("{path}: unexpected key {k:?}"));
    }
    match obj.get("metadata") {
        Some(Json::Object(_)) => {}
        _ => return Err(format!("{path}.metadata: expected an object")),
    }
    let counts = obj
        .get("counts")
        .and_then(Json::as_object)
        .ok_or_else(|| format!("{path}.counts: expected an object"))?;
    let width = counts.keys().next().map(String::len);
    for (bits, n) in counts {
        if bits.is_empty() || !bits.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(format!("{path}.counts: {bits:?} is not a bitstring"));
        }
        if Some(bits.len()) != width {
            return Err(format!("{path}.counts: bitstrings of unequal length"));
        }
        if n.as_u64().is_none() {
            return Err(format!(
                "{path}.counts[{bits:?}]: expected a non-negative integer"
            ));
        }
    }
    let children = obj
        .get("children")
        .and_then(Json::as_array)
        .ok_or_else(|| format!("{path}.children: expected an array"))?;
    for (i, child) in children.iter().enumerate() {
        validate_at(child, &format!("{path}.children[{i}]"))?;
    }
    Ok(())
}
