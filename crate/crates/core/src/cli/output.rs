//! Canonical JSON and CSV rendering.
//!
//! Floats are written as `d.dddddddddddddddde±x`: 17 significant digits,
//! enough to round-trip any `f64`, and a fixed shape so that re-serializing
//! parsed output reproduces it byte for byte. Non-finite values become `null`.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::Value;

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

struct Canonical;

impl Formatter for Canonical {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

/// Serializes `value` to a single line of canonical JSON.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    // going through `Value` maps NaN and ±∞ to null
    let value = serde_json::to_value(value).expect("report values serialize");
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Canonical);
    value.serialize(&mut ser).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

/// Re-serializes JSON text canonically.
pub fn recanonicalize(text: &str) -> serde_json::Result<String> {
    let value: Value = serde_json::from_str(text)?;
    Ok(to_canonical_json(&value))
}

/// Renders rows as CSV with a header line.
pub fn to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory CSV");
    for row in rows {
        w.write_record(row).expect("in-memory CSV");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV")).expect("CSV fields are UTF-8")
}
