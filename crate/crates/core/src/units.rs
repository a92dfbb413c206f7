//! Unit handling. Frequencies are quoted as `ν = ω/2π` with a unit suffix;
//! internally every rate and frequency is angular (rad/s) and every time is
//! in seconds.

use std::f64::consts::TAU;

/// Angular frequency for `nu` in GHz.
pub fn ghz(nu: f64) -> f64 {
    TAU * nu * 1e9
}

pub fn mhz(nu: f64) -> f64 {
    TAU * nu * 1e6
}

pub fn to_ghz(omega: f64) -> f64 {
    omega / TAU / 1e9
}

pub fn to_mhz(omega: f64) -> f64 {
    omega / TAU / 1e6
}

pub fn to_ns(t: f64) -> f64 {
    t * 1e9
}

pub fn us(t: f64) -> f64 {
    t * 1e-6
}

/// Physical dimension of a parsed quantity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dimension {
    Dimensionless,
    /// Stored as angular frequency in rad/s.
    Frequency,
    /// Seconds.
    Time,
    /// Farads.
    Capacitance,
}

impl Dimension {
    pub fn name(self) -> &'static str {
        match self {
            Dimension::Dimensionless => "dimensionless number",
            Dimension::Frequency => "frequency (GHz, MHz, kHz, Hz)",
            Dimension::Time => "time (s, ms, us, ns)",
            Dimension::Capacitance => "capacitance (F, pF, fF)",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub dimension: Dimension,
}

/// Parse `"-0.5 GHz"`, `"2.5us"`, `"1 fF"`, `"8"` or `"inf us"`.
pub fn parse_quantity(text: &str) -> Result<Quantity, String> {
    let text = text.trim();
    let split = text
        .char_indices()
        .find(|&(i, ch)| ch.is_alphabetic() && !is_number_prefix(&text[..i], ch) || ch == 'μ')
        .map_or(text.len(), |(i, _)| i);
    let (num, unit) = text.split_at(split);
    let num = num.trim();
    let value: f64 = num
        .parse()
        .map_err(|_| format!("cannot parse number `{num}` in `{text}`"))?;
    let (scale, dimension) = match unit.trim() {
        "" => (1.0, Dimension::Dimensionless),
        "GHz" => (TAU * 1e9, Dimension::Frequency),
        "MHz" => (TAU * 1e6, Dimension::Frequency),
        "kHz" => (TAU * 1e3, Dimension::Frequency),
        "Hz" => (TAU, Dimension::Frequency),
        "s" => (1.0, Dimension::Time),
        "ms" => (1e-3, Dimension::Time),
        "us" | "μs" | "µs" => (1e-6, Dimension::Time),
        "ns" => (1e-9, Dimension::Time),
        "F" => (1.0, Dimension::Capacitance),
        "pF" => (1e-12, Dimension::Capacitance),
        "fF" => (1e-15, Dimension::Capacitance),
        other => return Err(format!("unknown unit `{other}` in `{text}`")),
    };
    Ok(Quantity {
        value: value * scale,
        dimension,
    })
}

// Letters that belong to the number itself: exponent markers and inf/nan.
fn is_number_prefix(before: &str, ch: char) -> bool {
    let b = before.trim_start_matches(['+', '-']);
    let lower = ch.to_ascii_lowercase();
    if lower == 'e' && !b.is_empty() && b.chars().all(|c| c.is_ascii_digit() || c == '.') {
        return true;
    }
    let word = format!("{}{}", b.to_ascii_lowercase(), lower);
    ["inf", "infinity", "nan"].iter().any(|w| w.starts_with(&word))
}

/// Format like C's `%.{digits}g`: fixed or scientific, trailing zeros trimmed.
pub fn format_sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if exp < -5 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
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
