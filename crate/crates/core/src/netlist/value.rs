//! SI-suffixed scalar literals (`0.7m`, `140u`, `10k`, `1.5meg`).

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValueError {
    #[error("empty value")]
    Empty,
    #[error("malformed number `{0}`")]
    Malformed(String),
    #[error("unknown suffix `{suffix}` in `{token}`")]
    UnknownSuffix { token: String, suffix: String },
    #[error("value `{0}` is not finite")]
    NonFinite(String),
}

/// Multiplier for a scale suffix, matched case-insensitively.
///
/// `meg` has to be tried before `m`, which is why this takes the whole
/// remainder rather than the first character.
pub fn suffix_multiplier(suffix: &str) -> Option<f64> {
    let s = suffix.to_ascii_lowercase();
    Some(match s.as_str() {
        "" => 1.0,
        "f" => 1e-15,
        "p" => 1e-12,
        "n" => 1e-9,
        "u" => 1e-6,
        "m" => 1e-3,
        "k" => 1e3,
        "meg" => 1e6,
        "g" => 1e9,
        _ => return None,
    })
}

/// Length of the leading decimal literal (`[+-]?digits[.digits][e[+-]digits]`).
fn numeric_prefix_len(bytes: &[u8]) -> usize {
    let mut i = 0;
    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
        i += 1;
    }
    let int_start = i;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return 0;
    }
    // Exponent only counts when followed by at least one digit, so `2e`
    // is left for the suffix check to reject.
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        let exp_start = j;
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
        if j > exp_start {
            i = j;
        }
    }
    i
}

/// Parse a scalar literal into base SI units.
pub fn parse_value(token: &str) -> Result<f64, ValueError> {
    let token = token.trim();
    if token.is_empty() {
        return Err(ValueError::Empty);
    }
    let n = numeric_prefix_len(token.as_bytes());
    if n == 0 {
        return Err(ValueError::Malformed(token.to_string()));
    }
    let (number, suffix) = token.split_at(n);
    let base: f64 = number
        .parse()
        .map_err(|_| ValueError::Malformed(token.to_string()))?;
    let mult = suffix_multiplier(suffix).ok_or_else(|| ValueError::UnknownSuffix {
        token: token.to_string(),
        suffix: suffix.to_string(),
    })?;
    let v = base * mult;
    if !v.is_finite() {
        return Err(ValueError::NonFinite(token.to_string()));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn suffix_examples() {
        assert_eq!(parse_value("0.7m").unwrap(), 0.7 * 1e-3);
        assert!((parse_value("0.7m").unwrap() - 7.0e-4).abs() < 1e-18);
        assert!((parse_value("140u").unwrap() - 1.4e-4).abs() < 1e-18);
        assert_eq!(parse_value("10k").unwrap(), 1.0e4);
        assert_eq!(parse_value("9k").unwrap(), 9000.0);
    }

    #[test]
    fn meg_is_not_milli() {
        assert_eq!(parse_value("2meg").unwrap(), 2e6);
        assert_eq!(parse_value("2MEG").unwrap(), 2e6);
        assert_eq!(parse_value("2M").unwrap(), 2e-3);
    }

    #[test]
    fn exponents_and_signs() {
        assert_eq!(parse_value("1e-3").unwrap(), 1e-3);
        assert_eq!(parse_value("-2.5E2").unwrap(), -250.0);
        assert_eq!(parse_value("+.5p").unwrap(), 0.5e-12);
        assert_eq!(parse_value("3.").unwrap(), 3.0);
        assert_eq!(parse_value("1e3k").unwrap(), 1e6);
    }

    #[test]
    fn rejects_bad_tokens() {
        assert!(matches!(parse_value(""), Err(ValueError::Empty)));
        assert!(matches!(parse_value("abc"), Err(ValueError::Malformed(_))));
        assert!(matches!(parse_value("."), Err(ValueError::Malformed(_))));
        assert!(matches!(
            parse_value("9kohm"),
            Err(ValueError::UnknownSuffix { .. })
        ));
        assert!(matches!(
            parse_value("2e"),
            Err(ValueError::UnknownSuffix { .. })
        ));
        assert!(matches!(
            parse_value("1e999"),
            Err(ValueError::NonFinite(_))
        ));
        assert!(matches!(parse_value("nan"), Err(ValueError::Malformed(_))));
    }

    const SUFFIXES: [&str; 9] = ["", "f", "p", "n", "u", "m", "k", "meg", "g"];

    proptest! {
        #[test]
        fn suffix_scales_value(
            mantissa in -1.0e6f64..1.0e6,
            idx in 0usize..9,
            upper in any::<bool>(),
        ) {
            let text = format!("{mantissa}");
            let suffix = if upper {
                SUFFIXES[idx].to_ascii_uppercase()
            } else {
                SUFFIXES[idx].to_string()
            };
            let with = parse_value(&format!("{text}{suffix}")).unwrap();
            let plain = parse_value(&text).unwrap();
            prop_assert_eq!(with, plain * suffix_multiplier(&suffix).unwrap());
        }

        #[test]
        fn never_panics(s in "\\PC{0,12}") {
            let _ = parse_value(&s);
        }
    }
}
