//! Number formatting shared by every CSV writer.

/// Formats `x` with 12 significant digits, `%.12g` style: fixed notation for
/// moderate exponents, scientific otherwise, trailing zeros removed.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci
        .split_once('e')
        .expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{}", trim_zeros(mantissa), exp)
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::sig12;

    #[test]
    fn formats_like_printf_g() {
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(-0.0), "0");
        assert_eq!(sig12(2.75), "2.75");
        assert_eq!(sig12(-1.25), "-1.25");
        assert_eq!(sig12(100.0), "100");
        assert_eq!(sig12(0.1 + 0.2), "0.3");
        assert_eq!(sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig12(123456789012345.0), "1.23456789012e14");
        assert_eq!(sig12(1.5e-7), "1.5e-7");
        assert_eq!(sig12(0.00012345), "0.00012345");
        assert_eq!(sig12(0.0001), "0.0001");
        assert_eq!(sig12(0.0000267674081538), "2.67674081538e-5");
        assert_eq!(sig12(999999999999.9), "1e12");
    }
}
