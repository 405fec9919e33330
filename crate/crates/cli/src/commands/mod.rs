pub mod bench;
pub mod datagen;
pub mod eval;
pub mod train;

use std::fmt::Write as _;

/// Shortest round-trip float text, empty for NaN.
pub(crate) fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

/// Renders rows as CSV after a `#` preamble.
pub(crate) fn csv(preamble: &str, header: &str, rows: &[Vec<String>]) -> String {
    let mut out = String::from(preamble);
    out.push_str(header);
    out.push('\n');
    for r in rows {
        writeln!(out, "{}", r.join(",")).expect("write to string");
    }
    out
}
