//! Shared helpers for the integration suites: spawning the CLI binary and
//! a small checker for the JSON-Schema subset the shipped schemas use
//! (type, properties/required/additionalProperties, items, enum, anyOf).

#![allow(dead_code)]

use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gmswitch"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn gmswitch")
}

pub fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no exit code (signal?)")
}

pub fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}):\n--- stdout ---\n{}\n--- stderr ---\n{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

pub fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|e| {
        panic!(
            "stderr is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

pub fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas")
}

pub fn assert_matches_schema(value: &Value, schema_file: &str) {
    let path = schema_dir().join(schema_file);
    let text = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("read {}: {e}", path.display()));
    let schema: Value = serde_json::from_str(&text).expect("schema parses");
    if let Err(e) = check_schema(value, &schema) {
        panic!("{schema_file} violation: {e}\ninstance: {value:#}");
    }
}

fn type_ok(v: &Value, t: &str) -> bool {
    match t {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "integer" => v.is_i64() || v.is_u64(),
        "number" => v.is_number(),
        "boolean" => v.is_boolean(),
        "null" => v.is_null(),
        _ => false,
    }
}

pub fn check_schema(value: &Value, schema: &Value) -> Result<(), String> {
    let obj = schema
        .as_object()
        .ok_or_else(|| "schema node is not an object".to_string())?;
    if let Some(any) = obj.get("anyOf").and_then(|a| a.as_array()) {
        let mut errs = Vec::new();
        for branch in any {
            match check_schema(value, branch) {
                Ok(()) => return Ok(()),
                Err(e) => errs.push(e),
            }
        }
        return Err(format!("no anyOf branch matched ({})", errs.join(" | ")));
    }
    if let Some(t) = obj.get("type") {
        let ok = match t {
            Value::String(s) => type_ok(value, s),
            Value::Array(ts) => ts
                .iter()
                .any(|s| s.as_str().map(|s| type_ok(value, s)).unwrap_or(false)),
            _ => false,
        };
        if !ok {
            return Err(format!("expected type {t}, got {value}"));
        }
    }
    if let Some(en) = obj.get("enum").and_then(|e| e.as_array()) {
        if !en.contains(value) {
            return Err(format!("{value} not in enum {en:?}"));
        }
    }
    if let Some(req) = obj.get("required").and_then(|r| r.as_array()) {
        if let Some(map) = value.as_object() {
            for key in req {
                let key = key.as_str().expect("required entries are strings");
                if !map.contains_key(key) {
                    return Err(format!("missing required key {key:?}"));
                }
            }
        }
    }
    let props = obj.get("properties").and_then(|p| p.as_object());
    if let Some(map) = value.as_object() {
        if let Some(props) = props {
            for (key, sub) in props {
                if let Some(v) = map.get(key) {
                    check_schema(v, sub).map_err(|e| format!("{key}: {e}"))?;
                }
            }
        }
        match obj.get("additionalProperties") {
            Some(Value::Bool(false)) => {
                for key in map.keys() {
                    if props.map(|p| !p.contains_key(key)).unwrap_or(true) {
                        return Err(format!("unexpected key {key:?}"));
                    }
                }
            }
            Some(Value::Bool(true)) | None => {}
            Some(sub) => {
                for (key, v) in map {
                    if props.map(|p| !p.contains_key(key)).unwrap_or(true) {
                        check_schema(v, sub).map_err(|e| format!("{key}: {e}"))?;
                    }
                }
            }
        }
    }
    if let Some(items) = obj.get("items") {
        if let Some(arr) = value.as_array() {
            for (i, v) in arr.iter().enumerate() {
                check_schema(v, items).map_err(|e| format!("[{i}]: {e}"))?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn checker_catches_basic_violations() {
        let schema = json!({
            "type": "object",
            "required": ["a"],
            "properties": {
                "a": {"type": "integer"},
                "b": {"anyOf": [{"type": "string"}, {"type": "null"}]}
            },
            "additionalProperties": false
        });
        assert!(check_schema(&json!({"a": 1, "b": null}), &schema).is_ok());
        assert!(check_schema(&json!({"a": 1, "b": "x"}), &schema).is_ok());
        assert!(check_schema(&json!({"b": "x"}), &schema).is_err());
        assert!(check_schema(&json!({"a": "nope"}), &schema).is_err());
        assert!(check_schema(&json!({"a": 1, "z": 2}), &schema).is_err());
    }

    #[test]
    fn checker_walks_arrays_and_map_schemas() {
        let schema = json!({
            "type": "object",
            "additionalProperties": {"type": "integer"}
        });
        assert!(check_schema(&json!({"x": 1, "y": 2}), &schema).is_ok());
        assert!(check_schema(&json!({"x": "s"}), &schema).is_err());
        let arr = json!({"type": "array", "items": {"type": "integer"}});
        assert!(check_schema(&json!([1, 2, 3]), &arr).is_ok());
        assert!(check_schema(&json!([1, "two"]), &arr).is_err());
    }
}
