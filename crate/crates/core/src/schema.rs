//! Versioned schema tags carried by every emitted JSON artifact.

use serde_json::{Map, Value};

pub const BUILDER_STATE: &str = "lab.builder.state/1";
pub const BUILDER_TRANSCRIPT: &str = "lab.builder.transcript/1";
pub const BUILDER_CHECK: &str = "lab.builder.check/1";
pub const FORCING_PLAY: &str = "lab.forcing.play/1";
pub const FORCING_FUSE: &str = "lab.forcing.fuse/1";
pub const FORCING_VALIDATE: &str = "lab.forcing.validate/1";
pub const TREELAB_QCMP: &str = "lab.treelab.qcmp/1";
pub const TREELAB_SPECIAL: &str = "lab.treelab.special/1";
pub const TOPOLOGY_SEPARATOR: &str = "lab.topology.separator/1";

/// Wraps an object body with its schema tag; non-objects go under "data".
pub fn tagged(schema: &str, body: Value) -> Value {
    let mut m = match body {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("data".into(), other);
            m
        }
    };
    m.insert("schema".into(), Value::String(schema.into()));
    Value::Object(m)
}

/// Checks the tag and that every listed field is present.
pub fn conforms(v: &Value, schema: &str, fields: &[&str]) -> Result<(), String> {
    let m = v.as_object().ok_or("artifact is not a JSON object")?;
    match m.get("schema") {
        Some(Value::String(s)) if s == schema => {}
        other => return Err(format!("schema tag {other:?}, expected {schema:?}")),
    }
    for f in fields {
        if !m.contains_key(*f) {
            return Err(format!("missing field {f:?}"));
        }
    }
    Ok(())
}

/// Required top-level fields of a builder state.
pub const BUILDER_STATE_FIELDS: &[&str] = &["height", "unfold", "oracle", "limits", "e"];

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn tag_and_check() {
        let v = tagged(BUILDER_STATE, json!({"height": 1, "unfold": 2, "oracle": "x", "limits": [], "e": []}));
        assert!(conforms(&v, BUILDER_STATE, BUILDER_STATE_FIELDS).is_ok());
        assert!(conforms(&v, FORCING_PLAY, &[]).is_err());
        assert!(conforms(&tagged(BUILDER_STATE, json!([1])), BUILDER_STATE, &["height"]).is_err());
    }
}
