//! Fixed unit catalog for numeric unit conversion.
//!
//! Each unit maps to its dimension's base unit through an affine transform
//! `base = scale * x + offset`; only temperature units have a nonzero
//! offset. Conversion between units of one dimension goes through the base:
//! `y = (scale_src * x + offset_src - offset_tgt) / scale_tgt`.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum UnitError {
    #[error("unknown unit {0:?}")]
    UnknownUnit(String),
    #[error("cannot convert {from_unit} ({from_dimension}) to {to_unit} ({to_dimension})")]
    DimensionMismatch {
        from_unit: Unit,
        from_dimension: Dimension,
        to_unit: Unit,
        to_dimension: Dimension,
    },
}

/// Physical dimension of a unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    Length,
    Mass,
    Time,
    Temperature,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Dimension::Length => "length",
            Dimension::Mass => "mass",
            Dimension::Time => "time",
            Dimension::Temperature => "temperature",
        };
        write!(f, "{name}")
    }
}

/// A supported unit of measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unit {
    // length (base: m)
    Millimeter,
    Centimeter,
    Meter,
    Kilometer,
    Inch,
    Foot,
    Yard,
    Mile,
    // mass (base: kg)
    Gram,
    Kilogram,
    Pound,
    Ounce,
    // time (base: s)
    Second,
    Minute,
    Hour,
    Day,
    // temperature (base: kelvin)
    Celsius,
    Fahrenheit,
    Kelvin,
}

/// All supported units, grouped by dimension.
pub const ALL_UNITS: [Unit; 19] = [
    Unit::Millimeter,
    Unit::Centimeter,
    Unit::Meter,
    Unit::Kilometer,
    Unit::Inch,
    Unit::Foot,
    Unit::Yard,
    Unit::Mile,
    Unit::Gram,
    Unit::Kilogram,
    Unit::Pound,
    Unit::Ounce,
    Unit::Second,
    Unit::Minute,
    Unit::Hour,
    Unit::Day,
    Unit::Celsius,
    Unit::Fahrenheit,
    Unit::Kelvin,
];

impl Unit {
    pub fn dimension(self) -> Dimension {
        use Unit::*;
        match self {
            Millimeter | Centimeter | Meter | Kilometer | Inch | Foot | Yard | Mile => {
                Dimension::Length
            }
            Gram | Kilogram | Pound | Ounce => Dimension::Mass,
            Second | Minute | Hour | Day => Dimension::Time,
            Celsius | Fahrenheit | Kelvin => Dimension::Temperature,
        }
    }

    /// Affine transform (scale, offset) to the dimension's base unit.
    fn to_base(self) -> (f64, f64) {
        use Unit::*;
        match self {
            Millimeter => (0.001, 0.0),
            Centimeter => (0.01, 0.0),
            Meter => (1.0, 0.0),
            Kilometer => (1000.0, 0.0),
            Inch => (0.0254, 0.0),
            Foot => (0.3048, 0.0),
            Yard => (0.9144, 0.0),
            Mile => (1609.344, 0.0),
            Gram => (0.001, 0.0),
            Kilogram => (1.0, 0.0),
            Pound => (0.45359237, 0.0),
            Ounce => (0.028349523125, 0.0),
            Second => (1.0, 0.0),
            Minute => (60.0, 0.0),
            Hour => (3600.0, 0.0),
            Day => (86400.0, 0.0),
            Celsius => (1.0, 273.15),
            Fahrenheit => (5.0 / 9.0, 273.15 - 160.0 / 9.0),
            Kelvin => (1.0, 0.0),
        }
    }

    /// Canonical identifier used in serialized rules.
    pub fn id(self) -> &'static str {
        use Unit::*;
        match self {
            Millimeter => "mm",
            Centimeter => "cm",
            Meter => "m",
            Kilometer => "km",
            Inch => "inch",
            Foot => "foot",
            Yard => "yard",
            Mile => "mile",
            Gram => "g",
            Kilogram => "kg",
            Pound => "lb",
            Ounce => "oz",
            Second => "s",
            Minute => "min",
            Hour => "h",
            Day => "day",
            Celsius => "celsius",
            Fahrenheit => "fahrenheit",
            Kelvin => "kelvin",
        }
    }

    /// Parse a unit identifier. Common long and plural spellings are
    /// accepted; the canonical short identifier is what serialization emits.
    pub fn parse(text: &str) -> Result<Self, UnitError> {
        use Unit::*;
        let unit = match text.trim().to_ascii_lowercase().as_str() {
            "mm" | "millimeter" | "millimeters" | "millimetre" | "millimetres" => Millimeter,
            "cm" | "centimeter" | "centimeters" | "centimetre" | "centimetres" => Centimeter,
            "m" | "meter" | "meters" | "metre" | "metres" => Meter,
            "km" | "kilometer" | "kilometers" | "kilometre" | "kilometres" => Kilometer,
            "inch" | "inches" | "in" => Inch,
            "foot" | "feet" | "ft" => Foot,
            "yard" | "yards" | "yd" => Yard,
            "mile" | "miles" | "mi" => Mile,
            "g" | "gram" | "grams" => Gram,
            "kg" | "kilogram" | "kilograms" => Kilogram,
            "lb" | "lbs" | "pound" | "pounds" => Pound,
            "oz" | "ounce" | "ounces" => Ounce,
            "s" | "sec" | "secs" | "second" | "seconds" => Second,
            "min" | "mins" | "minute" | "minutes" => Minute,
            "h" | "hr" | "hrs" | "hour" | "hours" => Hour,
            "day" | "days" | "d" => Day,
            "celsius" | "c" | "°c" => Celsius,
            "fahrenheit" | "f" | "°f" => Fahrenheit,
            "kelvin" | "k" => Kelvin,
            _ => return Err(UnitError::UnknownUnit(text.to_string())),
        };
        Ok(unit)
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id())
    }
}

/// Convert `x` from `source` to `target`. Units of different dimensions are
/// never interconvertible.
pub fn convert(x: f64, source: Unit, target: Unit) -> Result<f64, UnitError> {
    check_same_dimension(source, target)?;
    let (scale_src, offset_src) = source.to_base();
    let (scale_tgt, offset_tgt) = target.to_base();
    Ok((scale_src * x + offset_src - offset_tgt) / scale_tgt)
}

/// Error unless both units share a dimension.
pub fn check_same_dimension(source: Unit, target: Unit) -> Result<(), UnitError> {
    if source.dimension() != target.dimension() {
        return Err(UnitError::DimensionMismatch {
            from_unit: source,
            from_dimension: source.dimension(),
            to_unit: target,
            to_dimension: target.dimension(),
        });
    }
    Ok(())
}
