//! Minimal JSON emission with deterministic output.
//!
//! Reports promise byte-identical output for identical inputs, so floats are
//! formatted here with a fixed rule (6 significant digits, trailing zeros
//! trimmed) instead of the shortest-representation formatting of `{}`.

/// Formats with 6 significant digits, positionally, trimming trailing zeros.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return "null".into();
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (5 - exp).clamp(0, 17) as usize;
    let mut s = format!("{:.*}", decimals, x);
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

/// JSON string escaping for the small set of characters our labels use.
pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_f64(72.119999999), "72.12");
        assert_eq!(fmt_f64(0.125), "0.125");
        assert_eq!(fmt_f64(1.0 / 3.0), "0.333333");
        assert_eq!(fmt_f64(-1234.5678), "-1234.57");
        assert_eq!(fmt_f64(100.0), "100");
        assert_eq!(fmt_f64(0.0), "0");
    }

    #[test]
    fn deterministic() {
        for &x in &[1.23456789, 1e-7, 99999.99, 0.1 + 0.2] {
            assert_eq!(fmt_f64(x), fmt_f64(x));
        }
    }

    #[test]
    fn quoting_escapes_specials() {
        assert_eq!(quote("a\"b\\c"), "\"a\\\"b\\\\c\"");
        assert_eq!(quote("plain"), "\"plain\"");
    }
}
