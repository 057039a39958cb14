//! JSON emission with 17-significant-digit floats, enough to round-trip
//! every finite f64 exactly.

use crate::error::Result;
use serde::Serialize;
use std::io;

struct SigDigits;

impl serde_json::ser::Formatter for SigDigits {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{:.16e}", value)
    }
}

/// Serialize to a JSON string in which every float carries 17 significant
/// digits.
pub fn to_string_17<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigDigits);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        let xs = vec![
            std::f64::consts::PI,
            1.0 / 3.0,
            6.02e23,
            -2.2250738585072014e-308,
            0.1 + 0.2,
        ];
        let s = to_string_17(&xs).unwrap();
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        for (a, b) in xs.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn emission_is_deterministic() {
        #[derive(Serialize)]
        struct Doc {
            a: f64,
            b: Vec<f64>,
        }
        let d = Doc { a: 0.1, b: vec![1.5, 2.5] };
        assert_eq!(to_string_17(&d).unwrap(), to_string_17(&d).unwrap());
    }
}
