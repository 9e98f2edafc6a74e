//! Fixed-precision float text shared by the DSL writer and report output.

/// Formats `x` with exactly 17 significant digits.
///
/// Positional notation is used for decimal exponents in `-7..17`, scientific
/// notation otherwise. The text parses back to the identical `f64`.
pub fn float17(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let x = if x == 0.0 { 0.0 } else { x };
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-7..17).contains(&exp) {
        return sci;
    }
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let body = if exp >= 0 {
        let split = exp as usize + 1;
        let frac = &digits[split..];
        format!("{}.{}", &digits[..split], if frac.is_empty() { "0" } else { frac })
    } else {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    };
    format!("{sign}{body}")
}
