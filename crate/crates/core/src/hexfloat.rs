//! C99-style hexadecimal float text (`0x1.921fb54442d18p+1`), used to
//! serialize binary64 values without any decimal rounding.

use crate::error::{Error, Result};

fn pow2(k: i32) -> f64 {
    if k >= -1022 {
        f64::from_bits(((k + 1023) as u64) << 52)
    } else {
        f64::from_bits(1u64 << (k + 1074))
    }
}

/// Formats a finite `f64` exactly.
pub fn format(x: f64) -> String {
    assert!(x.is_finite(), "hexfloat encodes finite values only");
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (lead, e) = match (exp, frac) {
        (0, 0) => return format!("{sign}0x0p+0"),
        (0, _) => (0, -1022),
        _ => (1, exp - 1023),
    };
    let mut digits = format!("{frac:013x}");
    while digits.ends_with('0') {
        digits.pop();
    }
    let dot = if digits.is_empty() { String::new() } else { format!(".{digits}") };
    let esign = if e < 0 { '-' } else { '+' };
    format!("{sign}0x{lead}{dot}p{esign}{}", e.abs())
}

/// Parses text produced by [`format`] (or any hexfloat whose mantissa fits in
/// 15 hex digits and whose value is a representable binary64).
pub fn parse(s: &str) -> Result<f64> {
    let bad = || Error::Argument(format!("malformed hexadecimal float {s:?}"));
    let t = s.trim();
    let (neg, t) = match t.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let t = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")).ok_or_else(bad)?;
    let (mant, exp) = t.split_once(['p', 'P']).ok_or_else(bad)?;
    let exp: i32 = exp.parse().map_err(|_| bad())?;
    let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
    if int_part.is_empty() || int_part.len() + frac_part.len() > 15 {
        return Err(bad());
    }
    let mut m: u64 = 0;
    for c in int_part.chars().chain(frac_part.chars()) {
        m = m * 16 + c.to_digit(16).ok_or_else(bad)? as u64;
    }
    if m >= 1u64 << 54 {
        return Err(bad());
    }
    let e = exp - 4 * frac_part.len() as i32;
    let v = if m == 0 {
        0.0
    } else {
        // normalise so the scale factor stays representable
        let lz = m.leading_zeros() as i32 - 11; // bring m into [2^52, 2^53)
        let (m, e) = if lz >= 0 { (m << lz, e - lz) } else { (m >> -lz, e - lz) };
        if e > 1023 - 52 {
            return Err(bad());
        }
        if e < -1074 {
            let shift = (-1074 - e) as u32;
            if shift >= 64 || m & ((1u64 << shift) - 1) != 0 {
                return Err(bad());
            }
            (m >> shift) as f64 * pow2(-1074)
        } else {
            m as f64 * pow2(e)
        }
    };
    Ok(if neg { -v } else { v })
}

/// Serde adapter for `f64` fields.
pub mod serde_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format(*x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let text = String::deserialize(d)?;
        super::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<f64>` fields.
pub mod serde_vec {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(xs.iter().map(|x| super::format(*x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let text = Vec::<String>::deserialize(d)?;
        text.iter()
            .map(|t| super::parse(t).map_err(serde::de::Error::custom))
            .collect()
    }
}
