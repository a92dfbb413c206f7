//! Physics invariant suite behind `wnet validate`.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::config::Config;
use crate::device::{derive_matched_params, DeviceParams, MatchedDesign};
use crate::dynamics::{
    analytic_evolution, evolve_master, evolve_schrodinger, lindblad_rhs, CollapseSet, IntegratorConfig,
};
use crate::error::Result;
use crate::hamiltonians::{
    build_full, build_h0, build_h_eff, build_h_int, build_h_tilde_int, conserves_excitations, excitation_operator,
    system_layout, TimeDependentOperator,
};
use crate::hilbert::{embed, local, HilbertLayout, QuantumState, SparseOperator, Subsystem, SubsystemKind};
use crate::protocol::{initial_state, run_protocol, Basis, Model, RunOptions};

pub const TRACE_TOL: f64 = 1e-8;
pub const POSITIVITY_TOL: f64 = -1e-7;
pub const HERMITICITY_TOL: f64 = 1e-12;
pub const FRAME_TOL: f64 = 1e-10;
pub const DECAY_TOL: f64 = 1e-6;
pub const DEPHASING_TOL: f64 = 1e-6;
pub const DISPERSIVE_GRID: [f64; 5] = [4.0, 6.0, 8.0, 10.0, 12.0];

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    /// Worst observed value of the checked quantity.
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    pub detail: String,
}

impl CheckResult {
    fn below(name: &str, value: f64, threshold: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            pass: value < threshold,
            detail,
        }
    }

    fn failed(name: &str, e: crate::Error) -> Self {
        Self {
            name: name.into(),
            value: f64::NAN,
            threshold: f64::NAN,
            pass: false,
            detail: format!("error: {e}"),
        }
    }
}

/// Run every check; errors show up as failed entries.
pub fn run_all() -> Vec<CheckResult> {
    let mut out = Vec::new();
    match trace_and_positivity() {
        Ok(v) => out.extend(v),
        Err(e) => out.push(CheckResult::failed("trace and positivity", e)),
    }
    let single: [(&str, fn() -> Result<CheckResult>); 7] = [
        ("hermiticity", hermiticity),
        ("excitation conservation", excitation_conservation),
        ("frame invariance", frame_invariance),
        ("cavity decay", cavity_decay),
        ("dephasing rate", dephasing_rate),
        ("ideal oracle", ideal_oracle),
        ("dispersive convergence", dispersive_convergence),
    ];
    for (name, f) in single {
        out.push(f().unwrap_or_else(|e| CheckResult::failed(name, e)));
    }
    out
}

/// Shipped parameters at `b` for `n` qutrits (the first `n` detunings).
fn reference_params(n: usize, b: f64, qutrit_levels: usize, cavity_levels: usize) -> Result<DeviceParams> {
    let cfg = Config::shipped();
    let mut design = cfg.spec.design.clone();
    design.delta.truncate(n);
    design.omega_10.truncate(n.max(1));
    design.qutrit_levels = qutrit_levels;
    design.cavity_levels = cavity_levels;
    let mut cfg = cfg;
    cfg.spec.design = design;
    if let Some(wc) = cfg.spec.cavity_frequency.as_mut() {
        wc.truncate(n);
    }
    cfg.spec.decoherence.kappa_inv.truncate(n);
    let (p, _) = cfg.params(Some(b))?;
    Ok(p)
}

/// Lossy master-equation runs: the three-qutrit protocol in its invariant
/// sector and a two-qutrit device on the whole product space.
pub fn trace_and_positivity() -> Result<Vec<CheckResult>> {
    let mut worst_trace: f64 = 0.0;
    let mut worst_eig = f64::INFINITY;
    let mut details = Vec::new();
    for (n, cavity_levels, basis) in [(3, 3, Basis::Sector), (2, 2, Basis::Full)] {
        let p = reference_params(n, 8.0, 3, cavity_levels)?;
        let t_w = p.derived()?.t_w;
        let opts = RunOptions {
            model: Model::Full,
            include_theta: true,
            include_losses: true,
            basis,
            integrator: IntegratorConfig {
                checkpoint_times: (1..=8).map(|k| t_w * k as f64 / 8.0).collect(),
                ..IntegratorConfig::default()
            },
        };
        let run = run_protocol(&p, t_w, &opts)?;
        for c in &run.checkpoints {
            worst_trace = worst_trace.max((c.trace - 1.0).abs());
            worst_eig = worst_eig.min(c.min_eig.unwrap_or(f64::INFINITY));
        }
        details.push(format!("n={n} dim={} F={:.6}", run.dim, run.final_fidelity()));
    }
    let detail = details.join(", ");
    Ok(vec![
        CheckResult::below("trace conservation", worst_trace, TRACE_TOL, detail.clone()),
        CheckResult {
            name: "positivity".into(),
            value: worst_eig,
            threshold: POSITIVITY_TOL,
            pass: worst_eig >= POSITIVITY_TOL,
            detail,
        },
    ])
}

fn relative_antihermitian(op: &SparseOperator) -> f64 {
    let s = op.max_abs();
    if s == 0.0 {
        0.0
    } else {
        op.hermiticity_deviation() / s
    }
}

pub fn hermiticity() -> Result<CheckResult> {
    let mut p = reference_params(3, 8.0, 3, 3)?;
    p.set_uniform_crosstalk(0.2 * p.g_max());
    let l = system_layout(&p)?;
    let qubits = Arc::new(HilbertLayout::qubits_with_coupler(3)?);
    let dynamic: Vec<TimeDependentOperator> = vec![build_full(&p, &l, true)?, build_h_eff(&p, &l)?];
    let times = [0.0, 1.7e-9, 9.1e-9, 2.3e-8, 3.2e-8];
    let mut worst: f64 = 0.0;
    for h in &dynamic {
        for &t in &times {
            worst = worst.max(h.relative_hermiticity_deviation(t)?);
        }
    }
    for op in [build_h0(&p, &qubits)?, build_h_int(&p, &qubits)?, build_h_tilde_int(&p, &qubits)?] {
        worst = worst.max(relative_antihermitian(&op));
    }
    Ok(CheckResult::below(
        "hermiticity",
        worst,
        HERMITICITY_TOL,
        "H_I+Θ_I, H_eff at 5 times; H_0, H_int, H̃_int".into(),
    ))
}

/// `[H_I + Θ_I, N_exc] = 0`: every stored element must connect states of
/// equal excitation number, and the numerical commutator must vanish.
pub fn excitation_conservation() -> Result<CheckResult> {
    let mut p = reference_params(3, 8.0, 3, 3)?;
    p.set_uniform_crosstalk(p.g_max());
    let l = system_layout(&p)?;
    let h = build_full(&p, &l, true)?;
    let n_exc = excitation_operator(&l)?;
    let mut structural = true;
    let mut worst: f64 = 0.0;
    for t in [0.0, 4.4e-9, 1.9e-8] {
        let ht = h.at(t)?;
        structural &= conserves_excitations(&ht);
        worst = worst.max(ht.commutator(&n_exc)?.max_abs());
    }
    Ok(CheckResult {
        name: "excitation conservation".into(),
        value: worst,
        threshold: 0.0,
        pass: structural && worst == 0.0,
        detail: format!("structurally conserving: {structural}"),
    })
}

/// `e^{iH_0 t} H_int e^{−iH_0 t} = H_int` for matched parameters, with the
/// exponentials from a dense matrix exponential.
pub fn frame_invariance() -> Result<CheckResult> {
    let p = reference_params(3, 8.0, 2, 2)?;
    let l = Arc::new(HilbertLayout::qubits_with_coupler(3)?);
    let h0 = build_h0(&p, &l)?.to_dense();
    let hint = build_h_int(&p, &l)?.to_dense();
    let scale = hint.norm();
    let mut worst: f64 = 0.0;
    for t in [1e-9, 1.3e-8, 3.2e-8, 1e-7] {
        let u: DMatrix<C64> = (h0.clone() * C64::new(0.0, t)).exp();
        let rotated = &u * &hint * u.adjoint();
        worst = worst.max((rotated - &hint).norm() / scale);
    }
    Ok(CheckResult::below(
        "frame invariance",
        worst,
        FRAME_TOL,
        "relative Frobenius norm at 4 times".into(),
    ))
}

/// One cavity, `ρ0 = |1⟩⟨1|`: population of `|1⟩` against `e^{−κt}`.
pub fn cavity_decay() -> Result<CheckResult> {
    let kappa = 2e5;
    let l = Arc::new(HilbertLayout::new(vec![Subsystem::new("c1", SubsystemKind::Cavity, 3)])?);
    let mut c = CollapseSet::empty(l.clone());
    c.push("kappa c1", embed(&local::annihilation(3)?, "c1", &l)?, kappa)?;
    let rho0 = QuantumState::basis_ket(l.clone(), 1)?.to_density();
    let times: Vec<f64> = [0.5, 1.0, 2.0].iter().map(|x| x / kappa).collect();
    let cfg = IntegratorConfig {
        max_step: Some(1e-3 / kappa),
        checkpoint_times: times.clone(),
        ..IntegratorConfig::default()
    };
    let h = TimeDependentOperator::zero(l.clone());
    // Track the population through the fidelity with |1⟩.
    let one = QuantumState::basis_ket(l.clone(), 1)?;
    let run = evolve_master(&rho0, &h, None, &c, times[2], &cfg, Some(&one))?;
    let worst = run
        .checkpoints
        .iter()
        .map(|cp| (cp.fidelity.unwrap() - (-kappa * cp.time).exp()).abs())
        .fold(0.0, f64::max);
    Ok(CheckResult::below(
        "cavity decay",
        worst,
        DECAY_TOL,
        "κt = 0.5, 1, 2".into(),
    ))
}

/// Dephasing by the `|1⟩⟨1|` jump operator: the coherence decays at `γ_φ/2`,
/// both in the instantaneous generator and after integration.
pub fn dephasing_rate() -> Result<CheckResult> {
    let gamma = 4e5;
    let l = Arc::new(HilbertLayout::new(vec![Subsystem::new("q1", SubsystemKind::Qutrit, 2)])?);
    let mut c = CollapseSet::empty(l.clone());
    c.push("gamma_phi1 q1", embed(&local::projector(2, 1), "q1", &l)?, gamma)?;
    let plus = QuantumState::ket(l.clone(), nalgebra::dvector![C64::new(0.5f64.sqrt(), 0.0), C64::new(0.5f64.sqrt(), 0.0)])?;
    let rho0 = plus.to_density();
    let h = TimeDependentOperator::zero(l.clone());
    let d = lindblad_rhs(&rho0, 0.0, &h, &c)?;
    let rho01 = rho0.as_density().unwrap()[(0, 1)];
    let instantaneous = -(d[(0, 1)] / rho01).re;
    let t = 1.0 / gamma;
    let cfg = IntegratorConfig {
        max_step: Some(1e-3 / gamma),
        ..IntegratorConfig::default()
    };
    let run = evolve_master(&rho0, &h, None, &c, t, &cfg, None)?;
    let coherence = run.state.as_density().unwrap()[(0, 1)].norm();
    let integrated = -(coherence / rho01.norm()).ln() / t;
    let expected = gamma / 2.0;
    let worst = ((instantaneous - expected).abs()).max((integrated - expected).abs()) / expected;
    Ok(CheckResult::below(
        "dephasing rate",
        worst,
        DEPHASING_TOL,
        format!("generator {instantaneous:.6e}, integrated {integrated:.6e}, γ_φ/2 = {expected:.6e}"),
    ))
}

/// `H_0 + H̃_int` against the closed-form amplitudes at
/// 20 times in `[0, 2 t_W]`.
pub fn ideal_oracle() -> Result<CheckResult> {
    let p = reference_params(3, 8.0, 2, 2)?;
    let derived = p.derived()?;
    let l = Arc::new(HilbertLayout::qubits_with_coupler(3)?);
    let h = TimeDependentOperator::constant(build_h0(&p, &l)?.add(&build_h_tilde_int(&p, &l)?)?)?;
    let times: Vec<f64> = (1..=20).map(|k| 2.0 * derived.t_w * k as f64 / 20.0).collect();
    let cfg = IntegratorConfig {
        checkpoint_times: times.clone(),
        steps_per_period: 400.0,
        ..IntegratorConfig::default()
    };
    let psi0 = initial_state(&l)?;
    let run = evolve_schrodinger(&psi0, &h, times[19], &cfg)?;
    let ground = l.index_with(&[("A", 1)])?;
    let w_indices: Vec<usize> = (1..=3)
        .map(|j| l.index_with(&[(format!("q{j}").as_str(), 1)]))
        .collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for s in &run.samples {
        let a = analytic_evolution(3, derived.chi, derived.lambda, s.time)?;
        let c_ground = s.state[ground];
        let c_w: C64 = w_indices.iter().map(|&i| s.state[i]).sum::<C64>() / 3f64.sqrt();
        worst = worst.max((c_ground - a.c_ground).norm()).max((c_w - a.c_w).norm());
    }
    Ok(CheckResult::below("ideal oracle", worst, 1e-8, "20 times in [0, 2 t_W]".into()))
}

/// Closed-system `H_I` evolution with two-level qubits: the infidelity at
/// `t_W` (the analytic prediction is 1) shrinks monotonically with `b`.
pub fn dispersive_convergence() -> Result<CheckResult> {
    let gaps = dispersive_gaps(&DISPERSIVE_GRID)?;
    let worst_increase = gaps.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    Ok(CheckResult {
        name: "dispersive convergence".into(),
        value: worst_increase,
        threshold: 0.0,
        pass: worst_increase < 0.0,
        detail: format!(
            "1 − F at b = 4..12: {}",
            gaps.iter().map(|g| format!("{g:.5}")).collect::<Vec<_>>().join(", ")
        ),
    })
}

pub fn dispersive_gaps(b_grid: &[f64]) -> Result<Vec<f64>> {
    let cfg = Config::shipped();
    b_grid
        .iter()
        .map(|&b| {
            let design = MatchedDesign {
                qutrit_levels: 2,
                cavity_levels: 2,
                ..cfg.spec.design.clone()
            }
            .with_normalized_detuning(b)?;
            let (p, d) = derive_matched_params(&design)?;
            let opts = RunOptions {
                model: Model::Full,
                include_theta: false,
                include_losses: false,
                basis: Basis::Full,
                integrator: IntegratorConfig::default(),
            };
            let run = run_protocol(&p, d.t_w, &opts)?;
            Ok(1.0 - run.final_fidelity())
        })
        .collect()
}
