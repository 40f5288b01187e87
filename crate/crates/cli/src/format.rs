//! Number formatting for the output files.

/// `x` to `digits` significant digits, shortest form (like C's `%g`).
pub fn sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let digits = digits.max(1);
    // Rounding to `digits` can bump the exponent, so read it off the rounded form.
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Machine-readable precision: 6 significant digits.
pub fn num(x: f64) -> String {
    sig(x, 6)
}

/// `x` rounded to 6 significant digits, for JSON reports.
pub fn num6(x: f64) -> f64 {
    if x.is_finite() {
        sig(x, 6).parse().expect("formatted number parses")
    } else {
        x
    }
}

/// Human-table precision: 3 decimals, without a sign on zero.
pub fn dec3(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

/// Significance stars for a two-sided p-value.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}
