use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::Value;

/// Scientific notation with 12 significant digits.
pub fn fmt12(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        "nan".to_string()
    }
}

/// `x` rounded to 12 significant digits, as a JSON number (null if not finite).
pub fn num12(x: f64) -> Value {
    if x.is_finite() {
        let rounded: f64 = format!("{x:.11e}").parse().unwrap();
        serde_json::Number::from_f64(rounded).map(Value::Number).unwrap_or(Value::Null)
    } else {
        Value::Null
    }
}

/// Rounds every float in a JSON tree to 12 significant digits.
pub fn round_tree(v: Value) -> Value {
    match v {
        Value::Number(n) if !n.is_i64() && !n.is_u64() => num12(n.as_f64().unwrap_or(f64::NAN)),
        Value::Array(a) => Value::Array(a.into_iter().map(round_tree).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_tree(v))).collect()),
        other => other,
    }
}

pub struct Table {
    text: String,
    width: usize,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let text = header.iter().map(|h| h.as_ref()).collect::<Vec<_>>().join(",") + "\n";
        Table { text, width: header.len() }
    }

    pub fn row(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.width);
        for (i, &v) in values.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            self.text.push_str(&fmt12(v));
        }
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))
}

pub fn write_json(path: &Path, value: Value) -> Result<()> {
    let text = serde_json::to_string_pretty(&round_tree(value))? + "\n";
    write_atomic(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(fmt12(0.1), "1.00000000000e-1");
        assert_eq!(fmt12(-2.0 / 3.0), "-6.66666666667e-1");
        assert_eq!(num12(2.0 / 3.0), serde_json::json!(0.666666666667));
        assert_eq!(num12(f64::NAN), Value::Null);
    }

    #[test]
    fn rounding_keeps_integers() {
        let v = round_tree(serde_json::json!({"n": 3, "x": [1.0 / 3.0]}));
        assert_eq!(v, serde_json::json!({"n": 3, "x": [0.333333333333]}));
    }
}
