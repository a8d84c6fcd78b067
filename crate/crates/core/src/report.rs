//! Plain-text CSV helpers shared by the library reports and the CLI.

/// Formats `x` with nine significant digits in positional notation.
pub fn fmt_sig9(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).max(0) as usize;
    let mut s = format!("{x:.decimals$}");
    // log10 can land one short for values just below a power of ten
    let digits = s.chars().filter(|c| c.is_ascii_digit()).count() - leading_zeros(&s);
    if digits > 9 && decimals > 0 {
        s = format!("{x:.prec$}", prec = decimals - 1);
    }
    s
}

fn leading_zeros(s: &str) -> usize {
    s.chars()
        .filter(|c| c.is_ascii_digit())
        .take_while(|&c| c == '0')
        .count()
}

/// Parses the data rows of a CSV produced by this crate: skips `#` lines
/// and the header, returns each row's fields.
pub fn parse_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|f| f.trim().to_string()).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_sig9(0.356_674_943_938_732_45), "0.356674944");
        assert_eq!(fmt_sig9(std::f64::consts::LN_2), "0.693147181");
        assert_eq!(fmt_sig9(1.0), "1.00000000");
        assert_eq!(fmt_sig9(12_345.678_912_3), "12345.6789");
        assert_eq!(fmt_sig9(0.0), "0");
        assert_eq!(fmt_sig9(-0.5), "-0.500000000");
        assert_eq!(fmt_sig9(0.999_999_999_9), "1.00000000");
    }

    proptest! {
        #[test]
        fn reparse_is_stable(x in -1e6f64..1e6) {
            let once: f64 = fmt_sig9(x).parse().unwrap();
            let twice: f64 = fmt_sig9(once).parse().unwrap();
            prop_assert_eq!(once, twice);
            prop_assert!((once - x).abs() <= 1e-8 * x.abs().max(1e-300) + 1e-300);
        }
    }
}
