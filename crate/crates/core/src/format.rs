//! Byte-stable float formatting for config files and CSV artifacts.
//!
//! All machine-written floats carry exactly 9 significant digits. The digits
//! come from one `{:.8e}` rounding pass and are then re-laid-out as fixed
//! point for moderate magnitudes, which keeps the format idempotent:
//! `format(parse(format(x))) == format(x)`.

/// Format `x` with 9 significant digits.
///
/// Output always parses back as a float (a `.` or an exponent is always
/// present). Magnitudes outside `[1e-4, 1e13)` stay in scientific notation.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0.0".to_string();
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-4..13).contains(&exp) {
        return sci;
    }
    let neg = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    debug_assert_eq!(digits.len(), 9);
    let sign = if neg { "-" } else { "" };
    let rendered = if exp < 0 {
        let zeros = "0".repeat((-exp - 1) as usize);
        format!("{sign}0.{zeros}{digits}")
    } else {
        let point = exp as usize + 1;
        if point >= digits.len() {
            format!("{sign}{digits}{}.0", "0".repeat(point - digits.len()))
        } else {
            format!("{sign}{}.{}", &digits[..point], &digits[point..])
        }
    };
    rendered
}

/// Round `x` to the value its 9-significant-digit rendering denotes.
pub fn round_sig9(x: f64) -> f64 {
    format_sig9(x).parse().expect("format_sig9 output parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_nine_significant_digits() {
        assert_eq!(format_sig9(12.8), "12.8000000");
        assert_eq!(format_sig9(0.2), "0.200000000");
        assert_eq!(format_sig9(-0.2), "-0.200000000");
        assert_eq!(format_sig9(0.0), "0.0");
        assert_eq!(format_sig9(1200.0), "1200.00000");
        assert_eq!(format_sig9(0.063265306122448975), "0.0632653061");
        assert_eq!(format_sig9(1e14), "1.00000000e14");
        assert_eq!(format_sig9(2.5e-7), "2.50000000e-7");
    }

    #[test]
    fn nine_digit_integers_keep_a_decimal_point() {
        assert_eq!(format_sig9(123456789.0), "123456789.0");
        assert_eq!(format_sig9(1e12), "1000000000000.0");
    }

    #[test]
    fn formatting_is_idempotent() {
        for &x in &[
            0.1, 1.0 / 3.0, 0.9999999995, 1.00000000049, 12.8, -7.25e-3, 9.999999994e8,
            0.063265306122448975, 2.0f64.sqrt(), 1e-9, 123456789.123,
        ] {
            let once = format_sig9(x);
            let reparsed: f64 = once.parse().unwrap();
            assert_eq!(format_sig9(reparsed), once, "not idempotent for {x}");
        }
    }

    #[test]
    fn round_sig9_is_a_projection() {
        for &x in &[0.1, 1.0 / 3.0, 2.0f64.sqrt(), 123.4567891234] {
            let r = round_sig9(x);
            assert_eq!(round_sig9(r), r);
            assert!(((r - x) / x).abs() < 1e-8);
        }
    }
}
