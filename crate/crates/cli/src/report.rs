use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{io_err, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Wraps a command's report body with `schema_version` and `command`.
pub fn envelope(command: &str, body: &impl Serialize) -> Value {
    let mut map = Map::new();
    map.insert("schema_version".into(), SCHEMA_VERSION.into());
    map.insert("command".into(), command.into());
    match serde_json::to_value(body).expect("report serialises") {
        Value::Object(fields) => map.extend(fields),
        other => {
            map.insert("result".into(), other);
        }
    }
    Value::Object(map)
}

/// Prints the report to stdout and optionally writes it to `path`.
pub fn emit(command: &str, body: &impl Serialize, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(&envelope(command, body)).expect("report serialises");
    println!("{text}");
    if let Some(p) = path {
        std::fs::write(p, text + "\n").map_err(io_err(p))?;
    }
    Ok(())
}
