/// Format a float with 17 significant digits so report files round-trip
/// bit-exactly and determinism is testable by byte comparison.
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for &x in &[0.5, 1.0 / 3.0, 1e-300, 0.1 + 0.2, f64::MIN_POSITIVE] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }
}
