//! Number formatting shared by every report.

/// Significant digits used for printed floats.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// `x` with [`SIGNIFICANT_DIGITS`] significant digits, trailing zeros
/// removed.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    if !(-5..15).contains(&exponent) {
        let s = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
        let (mantissa, exp) = s.split_once('e').expect("exponent form");
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exponent).max(0) as usize;
    let s = format!("{x:.decimals$}");
    let s = trim_zeros(&s);
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `x` rounded to [`SIGNIFICANT_DIGITS`] significant digits, for JSON output.
pub fn round_sig(x: f64) -> f64 {
    fmt_sig(x).parse().unwrap_or(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats() {
        assert_eq!(fmt_sig(8.0), "8");
        assert_eq!(fmt_sig(1.5), "1.5");
        assert_eq!(fmt_sig(-0.25), "-0.25");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(9.516258196404), "9.5162581964");
        assert_eq!(fmt_sig(9.51625819641), "9.51625819641");
        assert_eq!(fmt_sig(123456.789), "123456.789");
        assert_eq!(fmt_sig(1e-9), "1e-9");
        assert_eq!(fmt_sig(2.0 / 3.0 * 1e20), "6.66666666667e19");
        assert_eq!(fmt_sig(-1e-17), "-1e-17");
        assert_eq!(round_sig(0.1 + 0.2), 0.3);
    }
}
