//! Number formatting shared by the CSV writers.

/// Shortest round-trip form, switching to exponent notation outside
/// `[1e-4, 1e15)` so that huge or tiny values stay compact.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}
