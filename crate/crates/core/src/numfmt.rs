//! Text formatting of floating-point values for the emitted CSV files.
//!
//! All numeric output uses C's `%.17g`: 17 significant digits (enough to
//! round-trip any f64), `%e`-style for extreme exponents, trailing zeros
//! stripped. Formatting is deterministic, which the run registry relies on.

/// Formats `x` like C's `printf("%.17g", x)`.
pub fn g17(x: f64) -> String {
    format_g(x, 17)
}

/// `%.*g` with `sig` significant digits.
pub fn format_g(x: f64, sig: usize) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sig = sig.max(1);
    // %g picks %e when the decimal exponent is < -4 or >= precision.
    let formatted = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = formatted
        .split_once('e')
        .expect("exponential format always contains 'e'");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if exp < -4 || exp >= sig as i32 {
        let mantissa = strip_trailing_zeros(mantissa);
        format!("{}e{}{:02}", mantissa, if exp < 0 { "-" } else { "+" }, exp.abs())
    } else {
        // Fixed notation with `sig - 1 - exp` digits after the point.
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        let fixed = format!("{:.*}", decimals, x);
        strip_trailing_zeros(&fixed).to_string()
    }
}

fn strip_trailing_zeros(s: &str) -> &str {
    if !s.contains('.') {
        return s;
    }
    let s = s.trim_end_matches('0');
    s.trim_end_matches('.')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g17() {
        // Reference strings from C printf("%.17g", x).
        assert_eq!(g17(0.0), "0");
        assert_eq!(g17(1.0), "1");
        assert_eq!(g17(-1.5), "-1.5");
        assert_eq!(g17(0.1), "0.10000000000000001");
        assert_eq!(g17(1e-5), "1.0000000000000001e-05");
        assert_eq!(g17(123456.0), "123456");
        assert_eq!(g17(1e17), "1e+17");
        assert_eq!(g17(3.141592653589793), "3.1415926535897931");
        assert_eq!(g17(2.5e-3), "0.0025000000000000001");
        assert_eq!(g17(f64::INFINITY), "inf");
    }

    #[test]
    fn round_trips() {
        let values = [
            1.0 / 3.0,
            std::f64::consts::PI,
            1e-300,
            -9.87654321e12,
            f64::MIN_POSITIVE,
        ];
        for &v in &values {
            let s = g17(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(v, back, "{s} failed to round-trip");
        }
    }
}
