//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero on any FAIL.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_complex::Complex64 as C64;

use wnet::config::Config;
use wnet::dynamics::{analytic_evolution, evolve_schrodinger, IntegratorConfig, Method};
use wnet::hamiltonians::{build_h0, build_h_tilde_int, TimeDependentOperator};
use wnet::hilbert::HilbertLayout;
use wnet::protocol::{initial_state, run_protocol, Basis, Model, RunOptions};
use wnet::sweep::{run_point, run_sweep, write_csv, SweepRow, DEFAULT_PRECISION};
use wnet::units::{to_ghz, to_mhz};
use wnet::validate;

const IDEAL_FIDELITY_TOL: f64 = 1e-8;
const AMPLITUDE_TOL: f64 = 1e-8;
const COUPLING_TOL_MHZ: f64 = 0.1;
const DETUNING_ULPS: f64 = 4.0;
const Q_REL_TOL: f64 = 0.05;
const OPERATING_F: f64 = 0.99;
const OPERATING_TOL: f64 = 0.02;
const NEAR_COINCIDENCE: f64 = 0.01;
const GATE_B: [f64; 3] = [6.0, 8.0, 10.0];
const RATIOS: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = fn(&mut Shared) -> Outcome;

/// Sweep rows reused between the ordering and determinism criteria.
#[derive(Default)]
struct Shared {
    gate_rows: Option<Vec<SweepRow>>,
}

fn gate_spec() -> wnet::sweep::SweepSpec {
    let mut spec = Config::shipped().spec;
    spec.b_grid = GATE_B.to_vec();
    spec.ratios = RATIOS.to_vec();
    spec
}

/// The ideal Hamiltonian is static, so the adaptive integrator takes it to
/// its tolerance in a handful of steps.
fn adaptive() -> IntegratorConfig {
    IntegratorConfig {
        method: Method::AdaptiveDp5,
        ..IntegratorConfig::default()
    }
}

fn ideal_exactness(_: &mut Shared) -> Outcome {
    let (p, d) = Config::shipped().params(Some(8.0)).unwrap();
    let opts = RunOptions {
        model: Model::Ideal,
        include_theta: false,
        include_losses: false,
        basis: Basis::Full,
        integrator: adaptive(),
    };
    let f = run_protocol(&p, d.t_w, &opts).unwrap().final_fidelity();

    let l = Arc::new(HilbertLayout::qubits_with_coupler(3).unwrap());
    let h = build_h0(&p, &l).unwrap().add(&build_h_tilde_int(&p, &l).unwrap()).unwrap();
    let h = TimeDependentOperator::constant(h).unwrap();
    let times: Vec<f64> = (1..=20).map(|k| d.t_w * k as f64 / 20.0).collect();
    let cfg = IntegratorConfig {
        checkpoint_times: times,
        ..adaptive()
    };
    let run = evolve_schrodinger(&initial_state(&l).unwrap(), &h, d.t_w, &cfg).unwrap();
    let ground = l.index_with(&[("A", 1)]).unwrap();
    let singles: Vec<usize> = ["q1", "q2", "q3"].iter().map(|q| l.index_with(&[(q, 1)]).unwrap()).collect();
    let mut worst: f64 = 0.0;
    for s in &run.samples {
        let a = analytic_evolution(3, d.chi, d.lambda, s.time).unwrap();
        let c_w = singles.iter().map(|&i| s.state[i]).sum::<C64>() / 3f64.sqrt();
        // The W state is symmetric: each single-excitation amplitude equals c_W/√3.
        let spread = singles.iter().map(|&i| (s.state[i] - c_w / 3f64.sqrt()).norm()).fold(0.0, f64::max);
        worst = worst.max((s.state[ground] - a.c_ground).norm()).max((c_w - a.c_w).norm()).max(spread);
    }
    Outcome {
        pass: f >= 1.0 - IDEAL_FIDELITY_TOL && worst < AMPLITUDE_TOL && run.samples.len() == 20,
        detail: format!("1 − F(t_W) = {:.2e}, max amplitude error {worst:.2e} over 20 times", 1.0 - f),
    }
}

fn parameter_table(_: &mut Shared) -> Outcome {
    let (p, _) = Config::shipped().params(Some(8.0)).unwrap();
    let expected = [62.5, 88.4, 108.3, 36.1, 51.0, 62.5];
    let got: Vec<f64> = p.g.iter().chain(&p.g_coupler).map(|&g| to_mhz(g)).collect();
    let coupling_err = got.iter().zip(expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let detunings = [
        to_ghz(p.cavity_detuning[0][1]),
        to_ghz(p.cavity_detuning[0][2]),
        to_ghz(p.cavity_detuning[1][2]),
    ];
    // Equal up to rounding of the rad/s ↔ GHz conversion.
    let detuning_ok = detunings
        .iter()
        .zip([-0.5, -1.0, -0.5])
        .all(|(a, b): (&f64, f64)| (a - b).abs() <= DETUNING_ULPS * f64::EPSILON * b.abs());
    let q: Vec<f64> = p
        .cavity_frequency
        .iter()
        .zip(&p.kappa)
        .map(|(&wc, &k)| wnet::device::quality_factor(wc, 1.0 / k).unwrap())
        .collect();
    let q_err = q
        .iter()
        .zip([1.9e5, 1.7e5, 1.6e5])
        .map(|(a, b)| (a - b).abs() / b)
        .fold(0.0, f64::max);
    Outcome {
        pass: coupling_err < COUPLING_TOL_MHZ && detuning_ok && q_err < Q_REL_TOL,
        detail: format!(
            "couplings max err {coupling_err:.3} MHz, Δ_kl/2π = {detunings:?} GHz, Q = [{:.3e}, {:.3e}, {:.3e}] (max rel err {q_err:.3})",
            q[0], q[1], q[2]
        ),
    }
}

fn operating_point(_: &mut Shared) -> Outcome {
    let spec = Config::shipped().spec;
    let row = run_point(&spec, 8.0, 0.2);
    Outcome {
        pass: row.error.is_none()
            && row.trunc_ok
            && row.step_ok
            && (row.fidelity - OPERATING_F).abs() <= OPERATING_TOL,
        detail: format!(
            "F = {:.6}, reference truncation F = {:?}, half step F = {:?}, trunc_ok = {}, step_ok = {}",
            row.fidelity, row.fidelity_truncation_reference, row.fidelity_half_step, row.trunc_ok, row.step_ok
        ),
    }
}

fn curve_ordering(shared: &mut Shared) -> Outcome {
    let result = run_sweep(&gate_spec(), 8).unwrap();
    let rows = result.rows;
    let flags_ok = rows.iter().all(|r| r.error.is_none() && r.trunc_ok && r.step_ok);
    let mut monotone = true;
    let mut max_gap: f64 = 0.0;
    for chunk in rows.chunks(RATIOS.len()) {
        monotone &= chunk.windows(2).all(|w| w[1].fidelity <= w[0].fidelity);
        max_gap = max_gap.max((chunk[0].fidelity - chunk[1].fidelity).abs());
    }
    shared.gate_rows = Some(rows);
    Outcome {
        pass: flags_ok && monotone && max_gap < NEAR_COINCIDENCE,
        detail: format!("b ∈ {GATE_B:?}: non-increasing in ratio = {monotone}, max |F(0) − F(0.2)| = {max_gap:.4}, all flags true = {flags_ok}"),
    }
}

fn invariant_suite(_: &mut Shared) -> Outcome {
    let start = Instant::now();
    let results = validate::run_all();
    let elapsed = start.elapsed();
    let failed: Vec<&str> = results.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
    Outcome {
        pass: failed.is_empty() && elapsed < Duration::from_secs(120),
        detail: format!("{} checks, failed {failed:?}, {:.1} s", results.len(), elapsed.as_secs_f64()),
    }
}

fn determinism(shared: &mut Shared) -> Outcome {
    let eight = match shared.gate_rows.take() {
        Some(rows) => rows,
        None => run_sweep(&gate_spec(), 8).unwrap().rows,
    };
    let one = run_sweep(&gate_spec(), 1).unwrap().rows;
    let csv = |rows: &[SweepRow]| {
        let mut buf = Vec::new();
        write_csv(&mut buf, rows, DEFAULT_PRECISION, false).unwrap();
        buf
    };
    let (a, b) = (csv(&one), csv(&eight));
    Outcome {
        pass: a == b,
        detail: format!("{} rows, {} bytes, identical = {}", one.len(), a.len(), a == b),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 6] = [
        ("1 ideal protocol exactness", ideal_exactness),
        ("2 parameter table", parameter_table),
        ("3 lossy operating point b = 8", operating_point),
        ("4 crosstalk curve ordering", curve_ordering),
        ("5 physics invariant suite", invariant_suite),
        ("6 sweep determinism across workers", determinism),
    ];
    let mut shared = Shared::default();
    let mut failures = 0;
    for (name, run) in criteria {
        let out = run(&mut shared);
        if !out.pass {
            failures += 1;
        }
        println!("{} criterion {name}: {}", if out.pass { "PASS" } else { "FAIL" }, out.detail);
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
