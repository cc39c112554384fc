//! Physical quantities with explicit units.
//!
//! Every quantity in a catalog or scenario file is written as `"<number> <unit>"`.
//! A missing unit is an error. Values are normalised to base units: bytes, FLOPs,
//! FLOP/s, Hz, bit/s, metres and seconds. Power stays in dBm because every formula
//! that consumes it starts from dBm.
//!
//! Decimal prefixes are applied by shifting the decimal exponent of the literal
//! before parsing, so `"144.3 KB"` becomes exactly `144300.0` bytes.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantityKind {
    Bytes,
    Flops,
    FlopRate,
    Frequency,
    BitRate,
    /// Transmit power, normalised to dBm.
    Power,
    Distance,
    Decibel,
    /// Noise power spectral density, normalised to dBm/Hz.
    NoiseDensity,
    Seconds,
}

impl fmt::Display for QuantityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            QuantityKind::Bytes => "data size",
            QuantityKind::Flops => "computation",
            QuantityKind::FlopRate => "compute rate",
            QuantityKind::Frequency => "bandwidth",
            QuantityKind::BitRate => "bit rate",
            QuantityKind::Power => "power",
            QuantityKind::Distance => "distance",
            QuantityKind::Decibel => "decibel",
            QuantityKind::NoiseDensity => "noise density",
            QuantityKind::Seconds => "time",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnitError {
    #[error("quantity `{0}` has no unit")]
    MissingUnit(String),
    #[error("`{value}`: unknown {kind} unit `{unit}`")]
    UnknownUnit {
        value: String,
        unit: String,
        kind: QuantityKind,
    },
    #[error("`{0}` is not a number")]
    BadNumber(String),
    #[error("`{0}` is not finite")]
    NotFinite(String),
}

enum Scale {
    /// Multiply by 10^n, applied exactly on the literal.
    Decimal(i32),
    /// Multiply by 2^n after parsing.
    Binary(i32),
    /// Convert watts-based power to dBm: value_dbm = 10 log10(value) + offset.
    LogPower(f64),
    Identity,
}

fn unit_scale(kind: QuantityKind, unit: &str) -> Option<Scale> {
    use QuantityKind::*;
    use Scale::*;
    let s = match (kind, unit) {
        (Bytes, "B") => Decimal(0),
        (Bytes, "KB" | "kB") => Decimal(3),
        (Bytes, "MB") => Decimal(6),
        (Bytes, "GB") => Decimal(9),
        (Bytes, "TB") => Decimal(12),
        (Bytes, "KiB") => Binary(10),
        (Bytes, "MiB") => Binary(20),
        (Bytes, "GiB") => Binary(30),
        (Flops, "FLOPs" | "FLOP") => Decimal(0),
        (Flops, "KFLOPs") => Decimal(3),
        (Flops, "MFLOPs") => Decimal(6),
        (Flops, "GFLOPs") => Decimal(9),
        (Flops, "TFLOPs") => Decimal(12),
        (FlopRate, "FLOPS" | "FLOP/s") => Decimal(0),
        (FlopRate, "MFLOPS") => Decimal(6),
        (FlopRate, "GFLOPS") => Decimal(9),
        (FlopRate, "TFLOPS") => Decimal(12),
        (Frequency, "Hz") => Decimal(0),
        (Frequency, "kHz") => Decimal(3),
        (Frequency, "MHz") => Decimal(6),
        (Frequency, "GHz") => Decimal(9),
        (BitRate, "bps" | "bit/s") => Decimal(0),
        (BitRate, "kbps") => Decimal(3),
        (BitRate, "Mbps") => Decimal(6),
        (BitRate, "Gbps") => Decimal(9),
        (Power, "dBm") => Identity,
        (Power, "W") => LogPower(30.0),
        (Power, "mW") => LogPower(0.0),
        (Distance, "m") => Decimal(0),
        (Distance, "km") => Decimal(3),
        (Decibel, "dB") => Identity,
        (NoiseDensity, "dBm/Hz") => Identity,
        (Seconds, "s") => Decimal(0),
        (Seconds, "ms") => Decimal(-3),
        (Seconds, "us") => Decimal(-6),
        _ => return None,
    };
    Some(s)
}

/// Parses `"<number> <unit>"` into the base unit of `kind`.
pub fn parse_quantity(text: &str, kind: QuantityKind) -> Result<f64, UnitError> {
    let trimmed = text.trim();
    let split = trimmed
        .char_indices()
        .find(|&(i, c)| {
            c.is_ascii_alphabetic() && !((c == 'e' || c == 'E') && is_exponent(trimmed, i))
        })
        .map(|(i, _)| i)
        .ok_or_else(|| UnitError::MissingUnit(text.to_string()))?;
    let (number, unit) = trimmed.split_at(split);
    let number = number.trim();
    let unit = unit.trim();
    if number.is_empty() {
        return Err(UnitError::BadNumber(text.to_string()));
    }
    let scale = unit_scale(kind, unit).ok_or_else(|| UnitError::UnknownUnit {
        value: text.to_string(),
        unit: unit.to_string(),
        kind,
    })?;
    let value = match scale {
        Scale::Decimal(exp) => parse_scaled(number, exp)?,
        Scale::Binary(exp) => parse_scaled(number, 0)? * 2f64.powi(exp),
        Scale::LogPower(offset) => 10.0 * parse_scaled(number, 0)?.log10() + offset,
        Scale::Identity => parse_scaled(number, 0)?,
    };
    if !value.is_finite() {
        return Err(UnitError::NotFinite(text.to_string()));
    }
    Ok(value)
}

// An `e` counts as an exponent marker only when followed by a digit or sign and
// preceded by a digit.
fn is_exponent(s: &str, i: usize) -> bool {
    let bytes = s.as_bytes();
    let prev_digit = i > 0 && bytes[i - 1].is_ascii_digit();
    let next = bytes.get(i + 1).copied();
    prev_digit && matches!(next, Some(b'0'..=b'9' | b'+' | b'-'))
}

fn parse_scaled(number: &str, exp: i32) -> Result<f64, UnitError> {
    let valid = number
        .chars()
        .all(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E'));
    if !valid {
        return Err(UnitError::BadNumber(number.to_string()));
    }
    let literal = if exp == 0 {
        number.to_string()
    } else if number.contains(['e', 'E']) {
        let (mant, e) = number.split_once(['e', 'E']).unwrap_or((number, "0"));
        let e: i32 = e.parse().map_err(|_| UnitError::BadNumber(number.to_string()))?;
        format!("{mant}e{}", e + exp)
    } else {
        format!("{number}e{exp}")
    };
    literal
        .parse::<f64>()
        .map_err(|_| UnitError::BadNumber(number.to_string()))
}

/// Formats a base-unit value so that [`parse_quantity`] returns the same bits.
pub fn format_quantity(value: f64, unit: &str) -> String {
    format!("{value} {unit}")
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}
