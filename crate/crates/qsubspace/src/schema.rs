//! Validator for the JSON-Schema subset used by the report schema:
//! `type` (name or list), `enum`, `const`, `minimum`, `minItems`,
//! `properties`, `required`, `additionalProperties` (bool or schema) and
//! `items`.

use serde_json::{Map, Value};

/// Versioned report schema shipped with the crate.
pub const RESULT_SCHEMA: &str = include_str!("../schemas/result.v1.schema.json");
pub const RESULT_SCHEMA_VERSION: u64 = 1;

pub fn result_schema() -> Value {
    serde_json::from_str(RESULT_SCHEMA).expect("bundled schema is valid JSON")
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(n) if n.is_i64() || n.is_u64() => "integer",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

fn type_matches(expected: &str, v: &Value) -> bool {
    let actual = type_name(v);
    actual == expected || (expected == "number" && actual == "integer")
}

/// All violations of `schema` by `value`, as `path: message` strings.
pub fn validate(schema: &Value, value: &Value) -> Vec<String> {
    let mut errors = Vec::new();
    check(schema, value, "$", &mut errors);
    errors
}

fn check(schema: &Value, value: &Value, path: &str, errors: &mut Vec<String>) {
    let Some(s) = schema.as_object() else {
        if schema == &Value::Bool(false) {
            errors.push(format!("{path}: not allowed"));
        }
        return;
    };
    if let Some(t) = s.get("type") {
        let ok = match t {
            Value::String(name) => type_matches(name, value),
            Value::Array(names) => names.iter().filter_map(Value::as_str).any(|n| type_matches(n, value)),
            _ => true,
        };
        if !ok {
            errors.push(format!("{path}: expected type {t}, found {}", type_name(value)));
            return;
        }
    }
    if let Some(Value::Array(options)) = s.get("enum") {
        if !options.contains(value) {
            errors.push(format!("{path}: {value} not in {}", Value::Array(options.clone())));
        }
    }
    if let Some(c) = s.get("const") {
        if c != value {
            errors.push(format!("{path}: expected {c}, found {value}"));
        }
    }
    if let (Some(min), Some(x)) = (s.get("minimum").and_then(Value::as_f64), value.as_f64()) {
        if x < min {
            errors.push(format!("{path}: {x} below minimum {min}"));
        }
    }
    if let Value::Array(items) = value {
        if let Some(min) = s.get("minItems").and_then(Value::as_u64) {
            if (items.len() as u64) < min {
                errors.push(format!("{path}: {} items, need at least {min}", items.len()));
            }
        }
        if let Some(item_schema) = s.get("items") {
            for (k, item) in items.iter().enumerate() {
                check(item_schema, item, &format!("{path}[{k}]"), errors);
            }
        }
    }
    if let Value::Object(obj) = value {
        check_object(s, obj, path, errors);
    }
}

fn check_object(s: &Map<String, Value>, obj: &Map<String, Value>, path: &str, errors: &mut Vec<String>) {
    let empty = Map::new();
    let props = s.get("properties").and_then(Value::as_object).unwrap_or(&empty);
    if let Some(Value::Array(req)) = s.get("required") {
        for key in req.iter().filter_map(Value::as_str) {
            if !obj.contains_key(key) {
                errors.push(format!("{path}: missing required property '{key}'"));
            }
        }
    }
    for (key, v) in obj {
        let child = format!("{path}.{key}");
        match props.get(key) {
            Some(ps) => check(ps, v, &child, errors),
            None => match s.get("additionalProperties") {
                Some(Value::Bool(false)) => errors.push(format!("{child}: unexpected property")),
                Some(extra @ Value::Object(_)) => check(extra, v, &child, errors),
                _ => {}
            },
        }
    }
}
