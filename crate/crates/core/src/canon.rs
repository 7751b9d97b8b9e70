//! Canonical text encoding shared by the trace, model and dataset files.
//!
//! Every record is one compact JSON object per line with keys in sorted order.
//! Floats are written in decimal with exactly 17 significant digits, which is
//! enough for `str::parse::<f64>` to recover the original bits.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;

/// Formats a finite `f64` with 17 significant digits.
///
/// Positional notation is used for decimal exponents in `-20..=20`; outside
/// that range the JSON exponent form `d.dddde±x` is kept.
pub fn format_f64(value: f64) -> String {
    debug_assert!(value.is_finite());
    let sci = format!("{:.16e}", value);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-20..=20).contains(&exp) {
        return sci;
    }
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    debug_assert_eq!(digits.len(), 17);
    let out = if exp < 0 {
        let zeros = "0".repeat((-exp - 1) as usize);
        format!("0.{zeros}{digits}")
    } else {
        let split = exp as usize + 1;
        if split >= digits.len() {
            let zeros = "0".repeat(split - digits.len());
            format!("{digits}{zeros}.0")
        } else {
            format!("{}.{}", &digits[..split], &digits[split..])
        }
    };
    format!("{sign}{out}")
}

/// Compact JSON formatter that writes floats through [`format_f64`]; all
/// other tokens use serde_json's compact defaults.
#[derive(Debug, Default, Clone, Copy)]
pub struct CanonicalFormatter;

impl Formatter for CanonicalFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        writer.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.write_f64(writer, value as f64)
    }
}

/// Serializes `value` as one canonical line (no trailing newline).
///
/// The value goes through `serde_json::Value` first so object keys come out
/// sorted regardless of struct field order. Non-finite floats are rejected.
pub fn to_line<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let tree = serde_json::to_value(value)?;
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, CanonicalFormatter);
    tree.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positional_forms() {
        assert_eq!(format_f64(1.0), "1.0000000000000000");
        assert_eq!(format_f64(0.5), "0.50000000000000000");
        assert_eq!(format_f64(0.95), "0.94999999999999996");
        assert_eq!(format_f64(-123.5), "-123.50000000000000");
        assert_eq!(format_f64(0.0), "0.0000000000000000");
        assert_eq!(format_f64(1e20), "100000000000000000000.0");
    }

    #[test]
    fn exponent_form_outside_window() {
        let s = format_f64(1.5e-30);
        assert_eq!(s, "1.4999999999999999e-30");
        assert_eq!(s.parse::<f64>().unwrap(), 1.5e-30);
    }

    #[test]
    fn parses_back_bit_exact() {
        for v in [0.1, 1.0 / 3.0, 2.0f64.sqrt(), 1e-7, 6.02e19, f64::MIN_POSITIVE, -7.25e-19] {
            let s = format_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
    }

    #[test]
    fn sorted_keys() {
        #[derive(Serialize)]
        struct Rec {
            zeta: u32,
            alpha: f64,
        }
        let line = to_line(&Rec { zeta: 3, alpha: 0.25 }).unwrap();
        assert_eq!(line, r#"{"alpha":0.25000000000000000,"zeta":3}"#);
    }
}
