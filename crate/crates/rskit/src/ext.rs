//! Extended reals: finite values plus a positive-infinity sentinel.
//!
//! Infinite transport costs and worst-case objectives are represented by a
//! dedicated variant rather than a large finite stand-in, so +inf survives
//! arithmetic and comparisons exactly.

use serde::{Deserialize, Serialize};

/// A finite `f64` or positive infinity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExtReal {
    Finite(f64),
    /// Serialized as the string "inf".
    #[serde(with = "inf_repr")]
    PosInf,
}

mod inf_repr {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("inf")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let text = String::deserialize(d)?;
        if text == "inf" {
            Ok(())
        } else {
            Err(de::Error::custom("expected \"inf\""))
        }
    }
}

impl ExtReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtReal::PosInf)
    }

    /// The finite value, or `None` for infinity.
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::PosInf => None,
        }
    }

    /// The finite value; panics on infinity. For contexts that have already
    /// checked finiteness.
    pub fn expect_finite(self) -> f64 {
        match self {
            ExtReal::Finite(v) => v,
            ExtReal::PosInf => panic!("unexpected infinite value"),
        }
    }

    pub fn add(self, rhs: ExtReal) -> ExtReal {
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::PosInf,
        }
    }

    /// Scale by a nonnegative finite factor. `0 * inf` is defined as 0, the
    /// convention the worst-case objective uses when the cost weight vanishes.
    pub fn scale(self, factor: f64) -> ExtReal {
        debug_assert!(factor >= 0.0 && factor.is_finite());
        match self {
            ExtReal::Finite(v) => ExtReal::Finite(factor * v),
            ExtReal::PosInf => {
                if factor == 0.0 {
                    ExtReal::Finite(0.0)
                } else {
                    ExtReal::PosInf
                }
            }
        }
    }

    /// Total order with infinity above every finite value.
    pub fn le(self, rhs: ExtReal) -> bool {
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a <= b,
            (ExtReal::Finite(_), ExtReal::PosInf) => true,
            (ExtReal::PosInf, ExtReal::Finite(_)) => false,
            (ExtReal::PosInf, ExtReal::PosInf) => true,
        }
    }

    /// Rendering used by CSV output: finite values print in full round-trip
    /// precision, infinity prints as "inf".
    pub fn to_field(self) -> String {
        match self {
            ExtReal::Finite(v) => format!("{v}"),
            ExtReal::PosInf => "inf".to_string(),
        }
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        debug_assert!(!v.is_nan());
        if v.is_infinite() {
            ExtReal::PosInf
        } else {
            ExtReal::Finite(v)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_keeps_infinity_absorbing() {
        let inf = ExtReal::PosInf;
        let two = ExtReal::Finite(2.0);
        assert_eq!(two.add(inf), ExtReal::PosInf);
        assert_eq!(inf.scale(3.0), ExtReal::PosInf);
        assert_eq!(two.add(ExtReal::Finite(1.5)), ExtReal::Finite(3.5));
    }

    #[test]
    fn zero_times_infinity_is_zero() {
        assert_eq!(ExtReal::PosInf.scale(0.0), ExtReal::Finite(0.0));
    }

    #[test]
    fn ordering_places_infinity_on_top() {
        assert!(ExtReal::Finite(1e300).le(ExtReal::PosInf));
        assert!(!ExtReal::PosInf.le(ExtReal::Finite(1e300)));
        assert!(ExtReal::PosInf.le(ExtReal::PosInf));
    }

    #[test]
    fn json_round_trip() {
        let fin = serde_json::to_string(&ExtReal::Finite(0.5)).unwrap();
        assert_eq!(fin, "0.5");
        let inf = serde_json::to_string(&ExtReal::PosInf).unwrap();
        assert_eq!(inf, "\"inf\"");
        let back: ExtReal = serde_json::from_str(&inf).unwrap();
        assert_eq!(back, ExtReal::PosInf);
    }

    #[test]
    fn csv_field_rendering() {
        assert_eq!(ExtReal::Finite(0.1).to_field(), "0.1");
        assert_eq!(ExtReal::PosInf.to_field(), "inf");
    }
}
