//! Validator for the JSON Schema subset used by docs/api-schema.json.

use serde_json::Value;

pub fn load_schema() -> Value {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/api-schema.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Validates `value` against `#/$defs/<def>`; returns every violation.
pub fn validate(root: &Value, def: &str, value: &Value) -> Vec<String> {
    let mut errors = Vec::new();
    let schema = &root["$defs"][def];
    assert!(schema.is_object(), "no definition {def}");
    check(root, schema, value, "$", &mut errors);
    errors
}

fn type_matches(t: &str, v: &Value) -> bool {
    match t {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "boolean" => v.is_boolean(),
        "null" => v.is_null(),
        "number" => v.is_number(),
        "integer" => v.is_u64() || v.is_i64(),
        other => panic!("unsupported type {other}"),
    }
}

fn check(root: &Value, schema: &Value, v: &Value, at: &str, errors: &mut Vec<String>) {
    let obj = schema.as_object().expect("schema object");
    for key in obj.keys() {
        assert!(
            matches!(
                key.as_str(),
                "$ref" | "type" | "required" | "properties" | "additionalProperties" | "enum" | "items"
                    | "minItems" | "maxItems" | "minimum" | "maximum" | "exclusiveMinimum" | "pattern"
            ),
            "unsupported keyword {key}"
        );
    }
    if let Some(r) = obj.get("$ref").and_then(Value::as_str) {
        let name = r.strip_prefix("#/$defs/").expect("local ref");
        check(root, &root["$defs"][name], v, at, errors);
    }
    if let Some(t) = obj.get("type") {
        let ok = match t {
            Value::String(s) => type_matches(s, v),
            Value::Array(ts) => ts.iter().any(|t| type_matches(t.as_str().unwrap(), v)),
            _ => panic!("bad type"),
        };
        if !ok {
            errors.push(format!("{at}: expected type {t}, got {v}"));
            return;
        }
    }
    if let Some(options) = obj.get("enum").and_then(Value::as_array) {
        if !options.contains(v) {
            errors.push(format!("{at}: {v} not in {options:?}"));
        }
    }
    if let Some(x) = v.as_f64() {
        if let Some(m) = obj.get("minimum").and_then(Value::as_f64) {
            if x < m {
                errors.push(format!("{at}: {x} < minimum {m}"));
            }
        }
        if let Some(m) = obj.get("maximum").and_then(Value::as_f64) {
            if x > m {
                errors.push(format!("{at}: {x} > maximum {m}"));
            }
        }
        if let Some(m) = obj.get("exclusiveMinimum").and_then(Value::as_f64) {
            if x <= m {
                errors.push(format!("{at}: {x} <= exclusive minimum {m}"));
            }
        }
    }
    if let (Some(p), Some(s)) = (obj.get("pattern").and_then(Value::as_str), v.as_str()) {
        assert_eq!(p, "^[0-9a-f]{32}$", "only the id pattern is supported");
        if s.len() != 32 || !s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b)) {
            errors.push(format!("{at}: {s:?} does not match {p}"));
        }
    }
    if let Some(items) = v.as_array() {
        if let Some(m) = obj.get("minItems").and_then(Value::as_u64) {
            if (items.len() as u64) < m {
                errors.push(format!("{at}: {} items < {m}", items.len()));
            }
        }
        if let Some(m) = obj.get("maxItems").and_then(Value::as_u64) {
            if (items.len() as u64) > m {
                errors.push(format!("{at}: {} items > {m}", items.len()));
            }
        }
        if let Some(item_schema) = obj.get("items") {
            for (i, item) in items.iter().enumerate() {
                check(root, item_schema, item, &format!("{at}[{i}]"), errors);
            }
        }
    }
    if let Some(map) = v.as_object() {
        if let Some(required) = obj.get("required").and_then(Value::as_array) {
            for r in required {
                let r = r.as_str().unwrap();
                if !map.contains_key(r) {
                    errors.push(format!("{at}: missing {r}"));
                }
            }
        }
        let props = obj.get("properties").and_then(Value::as_object);
        for (k, child) in map {
            match props.and_then(|p| p.get(k)) {
                Some(s) => check(root, s, child, &format!("{at}.{k}"), errors),
                None => {
                    if obj.get("additionalProperties") == Some(&Value::Bool(false)) {
                        errors.push(format!("{at}: unexpected property {k}"));
                    }
                }
            }
        }
    }
}
