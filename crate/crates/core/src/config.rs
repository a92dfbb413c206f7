//! Sectioned `key = value` configuration files.
//!
//! ```text
//! # comment
//! [device]
//! delta = -0.5 GHz, -1.0 GHz, -1.5 GHz
//! omega_10 = 6.5 GHz
//! b = 8
//!
//! [decoherence]
//! kappa_inv = 5 us
//!
//! [sweep]
//! b = 4:12:0.5
//! ratios = 0, 0.2
//! ```
//!
//! Lists are comma separated; a single value broadcasts where a per-qubit
//! list is expected. `lo:hi:step` expands to an inclusive range. Unknown
//! sections or keys, repeated keys and values with the wrong unit are errors.

use std::collections::BTreeMap;
use std::path::Path;

use crate::device::{estimate_crosstalk, derive_matched_params, DerivedQuantities, DeviceParams, MatchedDesign, Thresholds};
use crate::dynamics::{IntegratorConfig, Method};
use crate::error::{Error, Result};
use crate::protocol::Basis;
use crate::sweep::{Decoherence, SweepSpec};
use crate::units::{parse_quantity, Dimension};

const SECTIONS: &[(&str, &[&str])] = &[
    (
        "device",
        &[
            "n",
            "qutrit_levels",
            "cavity_levels",
            "delta",
            "omega_10",
            "omega_10_coupler",
            "b",
            "g1",
            "cavity_frequency",
        ],
    ),
    ("crosstalk", &["ratio", "coupling_capacitance", "self_capacitance"]),
    (
        "decoherence",
        &[
            "kappa_inv",
            "gamma10_inv",
            "gamma21_inv",
            "gamma20_inv",
            "gamma_phi1_inv",
            "gamma_phi2_inv",
        ],
    ),
    ("integrator", &["method", "steps_per_period", "max_step", "rel_tol", "abs_tol"]),
    ("sweep", &["b", "ratios", "include_theta", "include_losses", "basis"]),
    ("thresholds", &["dispersive", "cavity_isolation", "lifetime"]),
];

/// How the crosstalk couplings of single-point runs are chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum Crosstalk {
    /// `g_kl = ratio · max_j g_Aj` for every pair.
    Ratio(f64),
    /// Capacitive estimate from per-cavity coupling capacitances and the
    /// coupler self-capacitance (F).
    Capacitance { coupling: Vec<f64>, self_capacitance: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    /// Sweep settings; its `design` and `decoherence` also drive single runs.
    pub spec: SweepSpec,
    /// Operating point for single runs.
    pub b: Option<f64>,
    /// Explicit `g_1` (rad/s), alternative to `b`.
    pub g1: Option<f64>,
    pub crosstalk: Crosstalk,
}

struct Entry {
    line: usize,
    value: String,
}

/// The shipped three-qutrit parameter set (`configs/paper_fig4.cfg`).
pub const SHIPPED_CONFIG: &str = include_str!("../../../configs/paper_fig4.cfg");

impl Config {
    pub fn shipped() -> Self {
        SHIPPED_CONFIG.parse().expect("shipped config parses")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        text.parse()
    }

    /// Matched parameters at `b` (or the configured operating point), with
    /// decoherence and crosstalk applied.
    pub fn params(&self, b: Option<f64>) -> Result<(DeviceParams, DerivedQuantities)> {
        let mut design = self.spec.design.clone();
        design = match (b.or(self.b), self.g1) {
            (Some(b), _) => design.with_normalized_detuning(b)?,
            (None, Some(g1)) => MatchedDesign { g1, ..design },
            (None, None) => {
                return Err(Error::Config {
                    line: 0,
                    message: "no operating point: set [device] b or g1, or pass --b".into(),
                })
            }
        };
        let (mut params, derived) = derive_matched_params(&design)?;
        self.spec.decoherence.apply(&mut params)?;
        match &self.crosstalk {
            Crosstalk::Ratio(r) => {
                let g = r * params.g_coupler.iter().copied().fold(0.0, f64::max);
                params.set_uniform_crosstalk(g);
            }
            Crosstalk::Capacitance {
                coupling,
                self_capacitance,
            } => {
                let c = broadcast(coupling.clone(), params.n, 0, "coupling_capacitance")?;
                params.g_cross = estimate_crosstalk(&c, *self_capacitance, &params.g_coupler)?;
            }
        }
        if let Some(wc) = &self.spec.cavity_frequency {
            params.cavity_frequency = broadcast(wc.clone(), params.n, 0, "cavity_frequency")?;
        }
        params.validate()?;
        Ok((params, derived))
    }
}

impl std::str::FromStr for Config {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, Entry>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap().trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| err(line, "unterminated section header"))?
                    .trim();
                if !SECTIONS.iter().any(|(s, _)| *s == name) {
                    return Err(err(line, format!("unknown section [{name}]")));
                }
                if sections.contains_key(name) {
                    return Err(err(line, format!("section [{name}] appears twice")));
                }
                sections.insert(name.to_string(), BTreeMap::new());
                current = Some(name.to_string());
                continue;
            }
            let section = current
                .as_ref()
                .ok_or_else(|| err(line, "key outside of any section"))?;
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `key = value`, got `{content}`")))?;
            let key = key.trim();
            let allowed = SECTIONS.iter().find(|(s, _)| s == section).unwrap().1;
            if !allowed.contains(&key) {
                return Err(err(line, format!("unknown key `{key}` in [{section}]")));
            }
            let map = sections.get_mut(section).unwrap();
            if map.contains_key(key) {
                return Err(err(line, format!("key `{key}` repeated in [{section}]")));
            }
            map.insert(
                key.to_string(),
                Entry {
                    line,
                    value: value.trim().to_string(),
                },
            );
        }
        let empty = BTreeMap::new();
        let get = |s: &str| sections.get(s).unwrap_or(&empty);
        build(get("device"), get("crosstalk"), get("decoherence"), get("integrator"), get("sweep"), get("thresholds"))
    }
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

type Section = BTreeMap<String, Entry>;

fn quantities(e: &Entry, dim: Dimension, key: &str) -> Result<Vec<f64>> {
    e.value
        .split(',')
        .map(|part| {
            let q = parse_quantity(part).map_err(|m| err(e.line, m))?;
            if q.dimension != dim {
                return Err(err(e.line, format!("`{key}` expects a {}, got `{}`", dim.name(), part.trim())));
            }
            Ok(q.value)
        })
        .collect()
}

fn scalar(e: &Entry, dim: Dimension, key: &str) -> Result<f64> {
    let v = quantities(e, dim, key)?;
    if v.len() != 1 {
        return Err(err(e.line, format!("`{key}` takes a single value")));
    }
    Ok(v[0])
}

fn integer(e: &Entry, key: &str) -> Result<usize> {
    e.value
        .parse()
        .map_err(|_| err(e.line, format!("`{key}` must be a non-negative integer, got `{}`", e.value)))
}

fn boolean(e: &Entry, key: &str) -> Result<bool> {
    match e.value.as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        v => Err(err(e.line, format!("`{key}` must be true or false, got `{v}`"))),
    }
}

/// `lo:hi:step` or a comma list of plain numbers.
pub fn parse_grid(text: &str) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let num = |s: &str| s.parse::<f64>().map_err(|_| format!("cannot parse `{s}` as a number"));
    match parts.as_slice() {
        [lo, hi, step] => {
            let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
            if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
                return Err(format!("bad range `{text}`: need lo <= hi and step > 0"));
            }
            let n = ((hi - lo) / step + 1e-9).floor() as usize;
            // Round away representation noise such as 0.6000000000000001.
            Ok((0..=n)
                .map(|k| crate::units::format_sig(lo + k as f64 * step, 15).parse().unwrap())
                .collect())
        }
        [_] => text.split(',').map(|s| num(s.trim())).collect(),
        _ => Err(format!("bad grid `{text}`: expected lo:hi:step or a list")),
    }
}

fn required<'a>(s: &'a Section, key: &str, section: &str) -> Result<&'a Entry> {
    s.get(key)
        .ok_or_else(|| err(0, format!("missing `{key}` in [{section}]")))
}

fn broadcast(v: Vec<f64>, n: usize, line: usize, key: &str) -> Result<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; n]),
        len if len == n => Ok(v),
        len => Err(err(line, format!("`{key}` has {len} entries, expected 1 or {n}"))),
    }
}

fn build(
    device: &Section,
    crosstalk: &Section,
    decoherence: &Section,
    integrator: &Section,
    sweep: &Section,
    thresholds: &Section,
) -> Result<Config> {
    use Dimension::*;

    let delta_entry = required(device, "delta", "device")?;
    let mut delta = quantities(delta_entry, Frequency, "delta")?;
    let n = match device.get("n") {
        Some(e) => integer(e, "n")?,
        None => delta.len(),
    };
    delta = broadcast(delta, n, delta_entry.line, "delta")?;
    let omega_entry = required(device, "omega_10", "device")?;
    let omega_10 = broadcast(quantities(omega_entry, Frequency, "omega_10")?, n, omega_entry.line, "omega_10")?;
    let omega_10_coupler = match device.get("omega_10_coupler") {
        Some(e) => scalar(e, Frequency, "omega_10_coupler")?,
        None => omega_10[0],
    };
    let qutrit_levels = device.get("qutrit_levels").map(|e| integer(e, "qutrit_levels")).transpose()?.unwrap_or(3);
    let cavity_levels = device.get("cavity_levels").map(|e| integer(e, "cavity_levels")).transpose()?.unwrap_or(3);
    let b = device.get("b").map(|e| scalar(e, Dimensionless, "b")).transpose()?;
    let g1 = device.get("g1").map(|e| scalar(e, Frequency, "g1")).transpose()?;
    if let (Some(_), Some(e)) = (b, device.get("g1")) {
        return Err(err(e.line, "set either `b` or `g1`, not both"));
    }
    let cavity_frequency = device
        .get("cavity_frequency")
        .map(|e| quantities(e, Frequency, "cavity_frequency").and_then(|v| broadcast(v, n, e.line, "cavity_frequency")))
        .transpose()?;

    let crosstalk_mode = match (
        crosstalk.get("ratio"),
        crosstalk.get("coupling_capacitance"),
        crosstalk.get("self_capacitance"),
    ) {
        (Some(r), None, None) => Crosstalk::Ratio(scalar(r, Dimensionless, "ratio")?),
        (None, Some(c), Some(s)) => Crosstalk::Capacitance {
            coupling: quantities(c, Capacitance, "coupling_capacitance")?,
            self_capacitance: scalar(s, Capacitance, "self_capacitance")?,
        },
        (None, None, None) => Crosstalk::Ratio(0.0),
        (Some(r), _, _) => return Err(err(r.line, "set either `ratio` or the capacitances, not both")),
        (None, Some(e), None) | (None, None, Some(e)) => {
            return Err(err(e.line, "`coupling_capacitance` and `self_capacitance` go together"))
        }
    };

    let lifetime = |key: &str| -> Result<f64> {
        decoherence
            .get(key)
            .map(|e| scalar(e, Time, key))
            .transpose()
            .map(|v| v.unwrap_or(f64::INFINITY))
    };
    let decoherence_spec = Decoherence {
        kappa_inv: match decoherence.get("kappa_inv") {
            Some(e) => broadcast(quantities(e, Time, "kappa_inv")?, n, e.line, "kappa_inv")?,
            None => vec![f64::INFINITY],
        },
        gamma10_inv: lifetime("gamma10_inv")?,
        gamma21_inv: lifetime("gamma21_inv")?,
        gamma20_inv: lifetime("gamma20_inv")?,
        gamma_phi1_inv: lifetime("gamma_phi1_inv")?,
        gamma_phi2_inv: lifetime("gamma_phi2_inv")?,
    };

    let mut integ = IntegratorConfig::default();
    if let Some(e) = integrator.get("method") {
        integ.method = match e.value.as_str() {
            "rk4" => Method::FixedRk4,
            "dp5" => Method::AdaptiveDp5,
            v => return Err(err(e.line, format!("unknown method `{v}` (expected rk4 or dp5)"))),
        };
    }
    if let Some(e) = integrator.get("steps_per_period") {
        integ.steps_per_period = scalar(e, Dimensionless, "steps_per_period")?;
    }
    if let Some(e) = integrator.get("max_step") {
        integ.max_step = Some(scalar(e, Time, "max_step")?);
    }
    if let Some(e) = integrator.get("rel_tol") {
        integ.rel_tol = scalar(e, Dimensionless, "rel_tol")?;
    }
    if let Some(e) = integrator.get("abs_tol") {
        integ.abs_tol = scalar(e, Dimensionless, "abs_tol")?;
    }

    let b_grid = match sweep.get("b") {
        Some(e) => parse_grid(&e.value).map_err(|m| err(e.line, m))?,
        None => parse_grid("4:12:0.5").unwrap(),
    };
    let ratios = match sweep.get("ratios") {
        Some(e) => parse_grid(&e.value).map_err(|m| err(e.line, m))?,
        None => vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
    };
    let flag = |key: &str| sweep.get(key).map(|e| boolean(e, key)).transpose().map(|v| v.unwrap_or(true));
    let basis = match sweep.get("basis") {
        Some(e) => e.value.parse::<Basis>().map_err(|m| err(e.line, m))?,
        None => Basis::Sector,
    };

    let mut th = Thresholds::default();
    for (key, slot) in [
        ("dispersive", &mut th.dispersive),
        ("cavity_isolation", &mut th.cavity_isolation),
        ("lifetime", &mut th.lifetime),
    ] {
        if let Some(e) = thresholds.get(key) {
            *slot = scalar(e, Dimensionless, key)?;
        }
    }

    let spec = SweepSpec {
        design: MatchedDesign {
            delta,
            g1: g1.unwrap_or(1.0),
            omega_10,
            omega_10_coupler,
            qutrit_levels,
            cavity_levels,
        },
        cavity_frequency,
        decoherence: decoherence_spec,
        b_grid,
        ratios,
        include_theta: flag("include_theta")?,
        include_losses: flag("include_losses")?,
        basis,
        integrator: integ,
        thresholds: th,
    };
    spec.validate()?;
    Ok(Config {
        spec,
        b,
        g1,
        crosstalk: crosstalk_mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{ghz, to_mhz};

    const MINIMAL: &str = "
[device]
delta = -0.5 GHz, -1.0 GHz, -1.5 GHz
omega_10 = 6.5 GHz
b = 8
";

    #[test]
    fn minimal_config() {
        let c: Config = MINIMAL.parse().unwrap();
        assert_eq!(c.spec.design.delta.len(), 3);
        assert_eq!(c.spec.design.qutrit_levels, 3);
        assert_eq!(c.spec.b_grid.len(), 17);
        assert_eq!(c.spec.ratios, vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]);
        let (p, _) = c.params(None).unwrap();
        assert!((to_mhz(p.g[0]) - 62.5).abs() < 1e-9);
        assert!(p.kappa.iter().all(|&k| k == 0.0));
        let (p, _) = c.params(Some(10.0)).unwrap();
        assert!((to_mhz(p.g[0]) - 50.0).abs() < 1e-9);
    }

    #[test]
    fn full_config() {
        let text = format!(
            "{MINIMAL}
cavity_frequency = 6.0 GHz, 5.5 GHz, 5.0 GHz  # quality factors
[crosstalk]
ratio = 0.2
[decoherence]
kappa_inv = 5 us
gamma10_inv = 10 us
gamma21_inv = 7.5 us
gamma20_inv = 30 us
gamma_phi1_inv = 2.5 μs
gamma_phi2_inv = 2.5 us
[integrator]
steps_per_period = 60
[sweep]
b = 6, 8, 10
ratios = 0:1:0.2
include_theta = false
basis = full
[thresholds]
lifetime = 10
"
        );
        let c: Config = text.parse().unwrap();
        assert_eq!(c.spec.b_grid, vec![6.0, 8.0, 10.0]);
        assert_eq!(c.spec.ratios.len(), 6);
        assert!(!c.spec.include_theta && c.spec.include_losses);
        assert_eq!(c.spec.basis, Basis::Full);
        assert_eq!(c.spec.integrator.steps_per_period, 60.0);
        assert_eq!(c.spec.thresholds.lifetime, 10.0);
        let (p, _) = c.params(None).unwrap();
        assert!((p.kappa[2] - 2e5).abs() < 1e-6);
        assert!((p.rates.gamma_phi1[3] - 4e5).abs() < 1e-6);
        assert!((p.cavity_frequency[1] - ghz(5.5)).abs() < 1e-3);
        let gmax = p.g_coupler[2];
        assert!((p.g_cross[0][1] - 0.2 * gmax).abs() < 1e-6);
    }

    #[test]
    fn capacitance_crosstalk() {
        let text = format!("{MINIMAL}[crosstalk]\ncoupling_capacitance = 1 fF\nself_capacitance = 1 pF\n");
        let c: Config = text.parse().unwrap();
        let (p, _) = c.params(None).unwrap();
        assert!(p.g_cross[0][1] > 0.0 && p.g_cross[0][1] < p.g_coupler[2] * 1e-2);
    }

    #[test]
    fn errors_carry_lines() {
        let bad = |text: &str, line: usize| match text.parse::<Config>() {
            Err(Error::Config { line: l, .. }) => assert_eq!(l, line, "{text}"),
            other => panic!("expected config error, got {other:?}"),
        };
        bad("[device]\ndelta = -1 GHz\nomega_10 = 6 GHz\nwobble = 3\n", 4);
        bad("[nonsense]\n", 1);
        bad("[device]\ndelta = -1 us\n", 2);
        bad("[device]\ndelta = -1 GHz\ndelta = -2 GHz\n", 3);
        bad("delta = 1\n", 1);
        bad("[device]\nomega_10 = 6 GHz\n", 0);
        bad(&format!("{MINIMAL}[sweep]\ninclude_theta = maybe\n"), 7);
        bad(&format!("{MINIMAL}[sweep]\nb = 12:4:0.5\n"), 7);
        bad(&format!("{MINIMAL}g1 = 50 MHz\n"), 6);
    }

    #[test]
    fn shipped_config() {
        let c = Config::shipped();
        assert_eq!(c.b, Some(8.0));
        assert_eq!(c.crosstalk, Crosstalk::Ratio(0.2));
        assert_eq!(c.spec.b_grid.len(), 17);
        let (p, d) = c.params(None).unwrap();
        assert!((d.t_w * 1e9 - 32.0).abs() < 0.5);
        assert!((p.kappa[0] - 2e5).abs() < 1e-6);
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("4:5:0.5").unwrap(), vec![4.0, 4.5, 5.0]);
        assert_eq!(parse_grid("0:1:0.2").unwrap().len(), 6);
        assert_eq!(parse_grid("0, 0.2").unwrap(), vec![0.0, 0.2]);
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("1:2:0").is_err());
    }
}
