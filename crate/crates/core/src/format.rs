//! Fixed-precision rendering of floating-point output.

use serde_json::Value;

pub const SIGNIFICANT_DIGITS: usize = 12;
/// Bumped whenever a CSV column layout changes.
pub const CSV_FORMAT_VERSION: u32 = 1;

/// First line of every CSV table: `# bilqctrl/<table> v<version>`.
pub fn csv_preamble(table: &str) -> String {
    format!("# bilqctrl/{table} v{CSV_FORMAT_VERSION}\n")
}

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses")
}

/// Shortest decimal rendering of `x` rounded to 12 significant digits.
pub fn sig12(x: f64) -> String {
    let r = round_sig(x);
    if r == 0.0 {
        return "0".into();
    }
    if r.abs() < 1e-5 || r.abs() >= 1e15 {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

/// Rounds every float inside a JSON value in place.
pub fn round_json(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(x) = n.as_f64() {
                    if let Some(r) = serde_json::Number::from_f64(round_sig(x)) {
                        *n = r;
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}
