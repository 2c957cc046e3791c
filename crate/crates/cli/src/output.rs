//! Artifact writing: output-directory resolution and float-stable JSON.

use std::path::{Path, PathBuf};

use hiregame::numfmt::round_sig12;
use serde_json::Value;

use crate::config::{usage, Result, Settings};

pub const OUT_DIR_ENV: &str = "HIREGAME_OUT_DIR";

/// --out-dir flag/config > HIREGAME_OUT_DIR > working directory.
pub fn out_dir(settings: &Settings) -> PathBuf {
    settings
        .get("out-dir")
        .map(PathBuf::from)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Resolves the main artifact path: `out` overrides the default file name.
pub fn artifact_path(settings: &Settings, default_name: &str) -> PathBuf {
    let name = settings.get("out").unwrap_or(default_name);
    out_dir(settings).join(name)
}

pub fn write_text(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| usage(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    std::fs::write(path, content)
        .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

/// Rounds every float in the tree to 12 significant digits; integer-typed
/// numbers pass through untouched.
fn round_floats(v: &mut Value) {
    match v {
        Value::Number(num) => {
            if num.is_f64() {
                let r = round_sig12(num.as_f64().unwrap());
                if let Some(n) = serde_json::Number::from_f64(r) {
                    *num = n;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Pretty JSON with a trailing newline and all floats at 12 significant
/// digits, so identical runs produce byte-identical files.
pub fn to_json_string(mut value: Value) -> String {
    round_floats(&mut value);
    let mut s = serde_json::to_string_pretty(&value).expect("json serialization");
    s.push('\n');
    s
}

pub fn write_json(path: &Path, value: Value) -> Result<()> {
    write_text(path, &to_json_string(value))
}
