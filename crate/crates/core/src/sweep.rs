//! Fidelity sweeps over normalized detuning `b` and crosstalk ratio.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::device::{condition_report, derive_matched_params, DerivedQuantities, DeviceParams, MatchedDesign, QutritRates, Thresholds};
use crate::dynamics::IntegratorConfig;
use crate::error::{Error, Result};
use crate::protocol::{run_protocol, Basis, Model, RunOptions};
use crate::units::format_sig;

/// Largest fidelity change allowed between the two cavity truncations.
pub const TRUNCATION_TOL: f64 = 5e-3;
/// Largest fidelity change allowed when the step is halved.
pub const STEP_TOL: f64 = 1e-6;
pub const CSV_HEADER: &str = "b,ratio,fidelity,t_w_ns,trunc_ok,step_ok,wall_s";
pub const DEFAULT_PRECISION: usize = 12;

/// Lifetimes (s); `inf` switches a channel off.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decoherence {
    /// Per cavity, or a single value for all.
    pub kappa_inv: Vec<f64>,
    pub gamma10_inv: f64,
    pub gamma21_inv: f64,
    pub gamma20_inv: f64,
    pub gamma_phi1_inv: f64,
    pub gamma_phi2_inv: f64,
}

impl Decoherence {
    pub fn none() -> Self {
        Self {
            kappa_inv: vec![f64::INFINITY],
            gamma10_inv: f64::INFINITY,
            gamma21_inv: f64::INFINITY,
            gamma20_inv: f64::INFINITY,
            gamma_phi1_inv: f64::INFINITY,
            gamma_phi2_inv: f64::INFINITY,
        }
    }

    /// Write rates `1/T` into `params`, same values for every qutrit.
    pub fn apply(&self, params: &mut DeviceParams) -> Result<()> {
        let rate = |t: f64| -> Result<f64> {
            if !(t > 0.0) {
                return Err(Error::InvalidArgument(format!("lifetime must be positive, got {t}")));
            }
            Ok(1.0 / t)
        };
        let kappa = self.kappa_inv.iter().map(|&t| rate(t)).collect::<Result<Vec<_>>>()?;
        params.set_kappa(&kappa)?;
        params.rates = QutritRates::uniform(
            params.n,
            rate(self.gamma10_inv)?,
            rate(self.gamma21_inv)?,
            rate(self.gamma20_inv)?,
            rate(self.gamma_phi1_inv)?,
            rate(self.gamma_phi2_inv)?,
        );
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Detunings, qutrit frequencies and truncations; `g1` is replaced by
    /// `|δ_1|/b` at every point.
    pub design: MatchedDesign,
    /// Overrides `ω_10 − δ` for quality factors only.
    pub cavity_frequency: Option<Vec<f64>>,
    pub decoherence: Decoherence,
    pub b_grid: Vec<f64>,
    /// `g_kl / max_j g_Aj`, equal for all pairs.
    pub ratios: Vec<f64>,
    pub include_theta: bool,
    pub include_losses: bool,
    pub basis: Basis,
    pub integrator: IntegratorConfig,
    pub thresholds: Thresholds,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.b_grid.is_empty() || self.ratios.is_empty() {
            return Err(Error::InvalidArgument("sweep grids must be non-empty".into()));
        }
        if let Some(b) = self.b_grid.iter().find(|&&b| !(b > 1.0) || !b.is_finite()) {
            return Err(Error::InvalidArgument(format!("b = {b} must be > 1")));
        }
        if let Some(r) = self.ratios.iter().find(|&&r| !(r >= 0.0) || !r.is_finite()) {
            return Err(Error::InvalidArgument(format!("crosstalk ratio {r} must be >= 0")));
        }
        Ok(())
    }

    /// Device parameters at one grid point.
    pub fn params_at(&self, b: f64, ratio: f64) -> Result<(DeviceParams, DerivedQuantities)> {
        let design = self.design.clone().with_normalized_detuning(b)?;
        let (mut params, derived) = derive_matched_params(&design)?;
        if self.include_losses {
            self.decoherence.apply(&mut params)?;
        }
        let g = ratio * params.g_coupler.iter().copied().fold(0.0, f64::max);
        params.set_uniform_crosstalk(g);
        if let Some(wc) = &self.cavity_frequency {
            params.cavity_frequency = match wc.len() {
                1 => vec![wc[0]; params.n],
                len if len == params.n => wc.clone(),
                len => {
                    return Err(Error::InvalidArgument(format!(
                        "cavity_frequency has {len} entries, expected 1 or {}",
                        params.n
                    )))
                }
            };
        }
        params.validate()?;
        Ok((params, derived))
    }

    fn run_options(&self, integrator: IntegratorConfig) -> RunOptions {
        RunOptions {
            model: Model::Full,
            include_theta: self.include_theta,
            include_losses: self.include_losses,
            basis: self.basis,
            integrator,
        }
    }

    /// SHA-256 of the canonical JSON form of the spec.
    pub fn parameter_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("spec serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// Cavity truncation compared against in the convergence gate.
pub fn reference_truncation(cavity_levels: usize) -> usize {
    if cavity_levels > 2 {
        cavity_levels - 1
    } else {
        cavity_levels + 1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub b: f64,
    pub ratio: f64,
    /// NaN when the point failed.
    pub fidelity: f64,
    pub t_w: f64,
    pub trunc_ok: bool,
    pub step_ok: bool,
    pub wall_s: f64,
    pub fidelity_truncation_reference: Option<f64>,
    pub fidelity_half_step: Option<f64>,
    pub steps: usize,
    pub dim: usize,
    pub failed_conditions: Vec<String>,
    pub error: Option<String>,
}

/// One grid point: main run, truncation gate, step-halving gate.
pub fn run_point(spec: &SweepSpec, b: f64, ratio: f64) -> SweepRow {
    let start = Instant::now();
    let mut row = SweepRow {
        b,
        ratio,
        fidelity: f64::NAN,
        t_w: f64::NAN,
        trunc_ok: false,
        step_ok: false,
        wall_s: 0.0,
        fidelity_truncation_reference: None,
        fidelity_half_step: None,
        steps: 0,
        dim: 0,
        failed_conditions: Vec::new(),
        error: None,
    };
    if let Err(e) = fill_point(spec, &mut row) {
        row.error = Some(e.to_string());
    }
    row.wall_s = start.elapsed().as_secs_f64();
    row
}

fn fill_point(spec: &SweepSpec, row: &mut SweepRow) -> Result<()> {
    let (params, derived) = spec.params_at(row.b, row.ratio)?;
    row.t_w = derived.t_w;
    row.failed_conditions = condition_report(&params, &derived, &spec.thresholds)
        .into_iter()
        .filter(|c| !c.pass)
        .map(|c| c.name)
        .collect();

    let main = run_protocol(&params, derived.t_w, &spec.run_options(spec.integrator.clone()))?;
    row.fidelity = main.final_fidelity();
    row.steps = main.steps;
    row.dim = main.dim;

    let mut coarse = params.clone();
    coarse.cavity_levels = reference_truncation(params.cavity_levels);
    let f_trunc = run_protocol(&coarse, derived.t_w, &spec.run_options(spec.integrator.clone()))?.final_fidelity();
    row.fidelity_truncation_reference = Some(f_trunc);
    row.trunc_ok = (f_trunc - row.fidelity).abs() < TRUNCATION_TOL;

    let f_half = run_protocol(&params, derived.t_w, &spec.run_options(spec.integrator.halved()))?.final_fidelity();
    row.fidelity_half_step = Some(f_half);
    row.step_ok = (f_half - row.fidelity).abs() < STEP_TOL;
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub metadata: SweepMetadata,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub code_version: String,
    pub parameter_hash: String,
    pub spec: SweepSpec,
    pub workers: usize,
    pub cavity_levels: usize,
    pub reference_cavity_levels: usize,
    pub qutrit_levels: usize,
    pub total_wall_s: f64,
}

/// Evaluate every `(b, ratio)` pair, b-major and ratio-minor, on `workers`
/// threads. Per-point failures become rows with `error` set.
pub fn run_sweep(spec: &SweepSpec, workers: usize) -> Result<SweepResult> {
    spec.validate()?;
    let start = Instant::now();
    let points: Vec<(f64, f64)> = spec
        .b_grid
        .iter()
        .flat_map(|&b| spec.ratios.iter().map(move |&r| (b, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| points.par_iter().map(|&(b, r)| run_point(spec, b, r)).collect());
    Ok(SweepResult {
        rows,
        metadata: SweepMetadata {
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            parameter_hash: spec.parameter_hash(),
            spec: spec.clone(),
            workers: workers.max(1),
            cavity_levels: spec.design.cavity_levels,
            reference_cavity_levels: reference_truncation(spec.design.cavity_levels),
            qutrit_levels: spec.design.qutrit_levels,
            total_wall_s: start.elapsed().as_secs_f64(),
        },
    })
}

/// Write the result table. `wall_s` is left empty unless `with_wall_time`,
/// so that tables from different runs compare byte for byte.
pub fn write_csv<W: Write>(mut w: W, rows: &[SweepRow], precision: usize, with_wall_time: bool) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        let wall = if with_wall_time { format_sig(r.wall_s, precision) } else { String::new() };
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            format_sig(r.b, precision),
            format_sig(r.ratio, precision),
            format_sig(r.fidelity, precision),
            format_sig(r.t_w * 1e9, precision),
            r.trunc_ok,
            r.step_ok,
            wall
        )?;
    }
    Ok(())
}

pub fn write_metadata<W: Write>(w: W, result: &SweepResult) -> Result<()> {
    serde_json::to_writer_pretty(w, result).map_err(|e| Error::InvalidArgument(format!("metadata: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::ghz;

    pub(crate) fn lossless_spec() -> SweepSpec {
        SweepSpec {
            design: MatchedDesign {
                delta: vec![ghz(-0.5), ghz(-1.0), ghz(-1.5)],
                g1: 1.0,
                omega_10: vec![ghz(6.5)],
                omega_10_coupler: ghz(6.5),
                qutrit_levels: 2,
                cavity_levels: 2,
            },
            cavity_frequency: None,
            decoherence: Decoherence::none(),
            b_grid: vec![8.0],
            ratios: vec![0.0],
            include_theta: false,
            include_losses: false,
            basis: Basis::Sector,
            integrator: IntegratorConfig::default(),
            thresholds: Thresholds::default(),
        }
    }

    #[test]
    fn truncation_reference() {
        assert_eq!(reference_truncation(3), 2);
        assert_eq!(reference_truncation(2), 3);
        assert_eq!(reference_truncation(5), 4);
    }

    #[test]
    fn crosstalk_ratio_sets_all_pairs() {
        let spec = lossless_spec();
        let (p, _) = spec.params_at(8.0, 0.4).unwrap();
        let gmax = p.g_coupler.iter().copied().fold(0.0, f64::max);
        for k in 0..3 {
            for l in 0..3 {
                let want = if k == l { 0.0 } else { 0.4 * gmax };
                assert_eq!(p.g_cross[k][l], want);
            }
        }
    }

    #[test]
    fn spec_validation() {
        let mut spec = lossless_spec();
        spec.b_grid = vec![0.5];
        assert!(spec.validate().is_err());
        spec.b_grid = vec![];
        assert!(spec.validate().is_err());
        spec.b_grid = vec![4.0];
        spec.ratios = vec![-0.1];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn csv_layout() {
        let row = SweepRow {
            b: 8.0,
            ratio: 0.2,
            fidelity: 0.974861088646594,
            t_w: 3.2e-8,
            trunc_ok: true,
            step_ok: false,
            wall_s: 1.5,
            fidelity_truncation_reference: None,
            fidelity_half_step: None,
            steps: 0,
            dim: 0,
            failed_conditions: vec![],
            error: None,
        };
        let mut buf = Vec::new();
        write_csv(&mut buf, std::slice::from_ref(&row), 12, false).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "b,ratio,fidelity,t_w_ns,trunc_ok,step_ok,wall_s\n8,0.2,0.974861088647,32,true,false,\n"
        );
        let mut buf = Vec::new();
        write_csv(&mut buf, &[row], 4, true).unwrap();
        assert!(String::from_utf8(buf).unwrap().ends_with("8,0.2,0.9749,32,true,false,1.5\n"));
    }

    #[test]
    fn hash_changes_with_spec() {
        let a = lossless_spec();
        let mut b = a.clone();
        b.ratios = vec![0.2];
        assert_ne!(a.parameter_hash(), b.parameter_hash());
        assert_eq!(a.parameter_hash(), a.clone().parameter_hash());
    }
}
