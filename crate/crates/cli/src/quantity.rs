//! Physical quantities written as `"<number> <unit>"` strings.

use std::f64::consts::PI;
use std::fmt;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    /// Stored as angular frequency, rad/s.
    Frequency,
    Time,
    Mass,
    Length,
    Wavevector,
    Angle,
}

impl Dimension {
    fn units(self) -> &'static [(&'static str, f64)] {
        const TAU: f64 = 2.0 * PI;
        match self {
            Dimension::Frequency => &[("Hz", TAU), ("kHz", TAU * 1e3), ("MHz", TAU * 1e6), ("GHz", TAU * 1e9), ("rad/s", 1.0), ("krad/s", 1e3), ("Mrad/s", 1e6)],
            Dimension::Time => &[("s", 1.0), ("ms", 1e-3), ("us", 1e-6), ("ns", 1e-9)],
            Dimension::Mass => &[("u", trapsim::units::ATOMIC_MASS_UNIT), ("kg", 1.0)],
            Dimension::Length => &[("m", 1.0), ("mm", 1e-3), ("um", 1e-6), ("nm", 1e-9)],
            Dimension::Wavevector => &[("1/m", 1.0), ("rad/m", 1.0), ("1/um", 1e6), ("1/nm", 1e9)],
            Dimension::Angle => &[("rad", 1.0), ("deg", PI / 180.0), ("pi", PI), ("turn", 2.0 * PI)],
        }
    }

    fn name(self) -> &'static str {
        match self {
            Dimension::Frequency => "frequency",
            Dimension::Time => "time",
            Dimension::Mass => "mass",
            Dimension::Length => "length",
            Dimension::Wavevector => "wavevector",
            Dimension::Angle => "angle",
        }
    }
}

/// A number with an explicit unit, kept verbatim until converted.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub unit: String,
}

impl Quantity {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut parts = text.split_whitespace();
        let (Some(number), Some(unit), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(format!("expected \"<number> <unit>\", got {text:?}"));
        };
        let value: f64 = number.parse().map_err(|_| format!("{number:?} is not a number"))?;
        if !value.is_finite() {
            return Err(format!("{text:?} is not finite"));
        }
        Ok(Quantity { value, unit: unit.to_string() })
    }

    /// Value in internal units: SI, with frequencies as rad/s.
    pub fn to(&self, dim: Dimension) -> anyhow::Result<f64> {
        dim.units()
            .iter()
            .find(|(u, _)| *u == self.unit)
            .map(|(_, scale)| self.value * scale)
            .ok_or_else(|| {
                let known: Vec<&str> = dim.units().iter().map(|(u, _)| *u).collect();
                anyhow::anyhow!("{self} is not a {}; use one of {}", dim.name(), known.join(", "))
            })
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.value, self.unit)
    }
}

impl Serialize for Quantity {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Quantity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct Visitor;
        impl de::Visitor<'_> for Visitor {
            type Value = Quantity;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a string \"<number> <unit>\"")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Quantity, E> {
                Quantity::parse(v).map_err(E::custom)
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Quantity, E> {
                Err(E::custom(format!("bare number {v} needs a unit, e.g. \"{v} kHz\"")))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Quantity, E> {
                Err(E::custom(format!("bare number {v} needs a unit, e.g. \"{v} kHz\"")))
            }
        }
        d.deserialize_any(Visitor)
    }
}
