//! Float formatting for serialized artifacts.
//!
//! All floats written to JSON and CSV outputs are rounded to 12 significant
//! digits so that repeated runs with the same inputs produce byte-identical
//! files across platforms.

/// Rounds `x` to 12 significant decimal digits.
pub fn round_sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    // {:.11e} formats with 11 digits after the leading one, i.e. 12 total.
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Formats `x` with at most 12 significant digits, using the shortest
/// decimal representation that round-trips the rounded value.
pub fn sig12(x: f64) -> String {
    format!("{}", round_sig12(x))
}
