//! Fixed-precision numeric formatting shared by every CSV and JSON writer.

/// Formats like C's `%.12e`: twelve fractional digits and an exponent of at
/// least two digits (`1.875000000000e-01`).
pub fn sci(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("`e` formatting always has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

#[cfg(test)]
mod tests {
    use super::sci;

    #[test]
    fn matches_printf() {
        assert_eq!(sci(0.1875), "1.875000000000e-01");
        assert_eq!(sci(-42.1875), "-4.218750000000e+01");
        assert_eq!(sci(0.0), "0.000000000000e+00");
        assert_eq!(sci(1.5e-300), "1.500000000000e-300");
    }
}
