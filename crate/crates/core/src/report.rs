//! Deterministic JSON rendering: every float is written with 17 significant
//! digits in a fixed exponent form, independent of value, and non-finite
//! floats become `null`.

use std::io;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};

use crate::error::Result;

/// `{:.16e}` rendering, `null` for NaN and infinities.
pub fn json_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".to_string()
    }
}

struct Fixed<F>(F);

macro_rules! forward {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(
            #[inline]
            fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.0.$name(w $(, $arg)*)
            }
        )*
    };
}

impl<F: Formatter> Formatter for Fixed<F> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(json_float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    forward!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        end_object_key(),
        begin_object_value(),
        end_object_value(),
    );
}

/// Serializes `value` on one line.
pub fn to_json_string<S: Serialize>(value: &S) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed(CompactFormatter));
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json writes utf-8"))
}

/// Serializes `value` with two-space indentation.
pub fn to_json_pretty<S: Serialize>(value: &S) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json writes utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Sample {
        a: f64,
        b: Vec<f64>,
        c: Option<f64>,
        name: &'static str,
    }

    #[test]
    fn floats_have_seventeen_digits() {
        let s = to_json_string(&Sample {
            a: 0.1,
            b: vec![1.0, -2.5e-300],
            c: Some(f64::NAN),
            name: "x",
        })
        .unwrap();
        assert_eq!(
            s,
            r#"{"a":1.0000000000000001e-1,"b":[1.0000000000000000e0,-2.5000000000000000e-300],"c":null,"name":"x"}"#
        );
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["a"].as_f64(), Some(0.1));
    }

    #[test]
    fn round_trip_is_exact() {
        for &x in &[std::f64::consts::PI, 1e-310, 123_456_789.123_456_79, -0.0] {
            let back: f64 = json_float(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
