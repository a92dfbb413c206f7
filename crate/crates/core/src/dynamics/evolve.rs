//! Schrödinger and Lindblad propagation.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::collapse::CollapseSet;
use super::integrator::{step_count, Dp5, IntegratorConfig, Method, Rk4};
use crate::error::{Error, Result};
use crate::hamiltonians::{CompiledOperator, TimeDependentOperator};
use crate::hilbert::state::min_eigenvalue;
use crate::hilbert::{HilbertLayout, QuantumState, StateData};

/// Largest trace drift tolerated before a master-equation run is aborted.
pub const TRACE_ABORT: f64 = 1e-6;
/// Ket norm drift above which [`KetEvolution::norm_drift`] is worth reporting.
pub const NORM_DRIFT_WARN: f64 = 1e-8;

/// Angular frequency that sets the integration step: the fastest phase
/// factor, or a Gershgorin bound on `‖H‖` when the operator is static.
pub fn frequency_scale(h: &TimeDependentOperator) -> f64 {
    let fastest = h.max_frequency();
    if fastest > 0.0 {
        return fastest;
    }
    let mut rows = vec![0.0; h.layout().dim()];
    for term in h.terms() {
        let a = term.amplitude.norm();
        for (r, c, v) in term.op.triplets() {
            rows[r] += a * v.norm();
            if !term.self_conjugate {
                rows[c] += a * v.norm();
            }
        }
    }
    rows.into_iter().fold(0.0, f64::max)
}

#[derive(Clone, Debug)]
pub struct KetSample {
    pub time: f64,
    pub norm: f64,
    pub state: DVector<C64>,
}

#[derive(Clone, Debug)]
pub struct KetEvolution {
    pub state: QuantumState,
    /// One sample per checkpoint, `t_final` last.
    pub samples: Vec<KetSample>,
    /// `max |‖ψ(t)‖ − ‖ψ0‖|` over the checkpoints; not corrected.
    pub norm_drift: f64,
    pub steps: usize,
}

/// Integrate `i dψ/dt = H(t) ψ` from 0 to `t_final`.
pub fn evolve_schrodinger(
    psi0: &QuantumState,
    h: &TimeDependentOperator,
    t_final: f64,
    cfg: &IntegratorConfig,
) -> Result<KetEvolution> {
    let v0 = psi0
        .as_ket()
        .ok_or_else(|| Error::InvalidArgument("Schrödinger evolution needs a ket".into()))?;
    psi0.check_normalized_ket()?;
    if !HilbertLayout::same_space(psi0.layout(), h.layout()) {
        return Err(Error::LayoutMismatch("state and Hamiltonian act on different layouts".into()));
    }
    let checkpoints = cfg.checkpoints(t_final)?;
    let step = cfg.resolve_step(frequency_scale(h))?;
    let compiled = h.compile();
    let mut vals = vec![C64::new(0.0, 0.0); compiled.nnz()];
    let mut rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
        compiled.values_at(t, &mut vals);
        compiled.mul_vec(&vals, y, dy);
        for x in dy.iter_mut() {
            *x = C64::new(x.im, -x.re);
        }
    };

    let norm0 = v0.norm();
    let mut y: Vec<C64> = v0.iter().copied().collect();
    let mut t = 0.0;
    let mut steps = 0;
    let mut samples = Vec::with_capacity(checkpoints.len());
    let mut rk = Rk4::new(y.len());
    let mut dp = Dp5::new(y.len(), step.min(t_final.max(f64::MIN_POSITIVE)) / 4.0);
    for &tc in &checkpoints {
        match cfg.method {
            Method::FixedRk4 => {
                let n = step_count(tc - t, step);
                let h_step = (tc - t) / n.max(1) as f64;
                for k in 0..n {
                    rk.step(&mut rhs, t + k as f64 * h_step, h_step, &mut y);
                }
                steps += n;
            }
            Method::AdaptiveDp5 => {
                if tc > t {
                    let before = dp.accepted;
                    dp.advance(&mut rhs, t, tc, &mut y, step, cfg.rel_tol, cfg.abs_tol)?;
                    steps += dp.accepted - before;
                }
            }
        }
        t = tc;
        let state = DVector::from_column_slice(&y);
        samples.push(KetSample {
            time: t,
            norm: state.norm(),
            state,
        });
    }
    let norm_drift = samples.iter().map(|s| (s.norm - norm0).abs()).fold(0.0, f64::max);
    let state = QuantumState::ket(psi0.layout().clone(), DVector::from_vec(y))?;
    Ok(KetEvolution {
        state,
        samples,
        norm_drift,
        steps,
    })
}

/// Dense column-major Lindblad generator with precompiled `H_eff` pattern.
pub struct LindbladGenerator {
    dim: usize,
    heff: CompiledOperator,
    heff_vals: Vec<C64>,
    jumps: Vec<ScaledJump>,
    k: Vec<C64>,
    m: Vec<C64>,
}

struct ScaledJump {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl LindbladGenerator {
    pub fn new(h: &TimeDependentOperator, c: &CollapseSet) -> Result<Self> {
        if !HilbertLayout::same_space(h.layout(), c.layout()) {
            return Err(Error::LayoutMismatch("Hamiltonian and collapse set act on different layouts".into()));
        }
        let dim = h.layout().dim();
        let anti = c.anti_hermitian_part()?;
        let heff = CompiledOperator::new(h, Some(&anti));
        let jumps = c
            .entries()
            .iter()
            .map(|e| {
                let s = e.rate.sqrt();
                ScaledJump {
                    row_ptr: e.op.row_ptr().to_vec(),
                    cols: e.op.col_indices().to_vec(),
                    vals: e.op.values().iter().map(|v| v * s).collect(),
                }
            })
            .collect();
        Ok(Self {
            dim,
            heff_vals: vec![C64::new(0.0, 0.0); heff.nnz()],
            heff,
            jumps,
            k: vec![C64::new(0.0, 0.0); dim * dim],
            m: vec![C64::new(0.0, 0.0); dim * dim],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `out = −i(H_eff ρ − ρ H_eff†) + Σ L ρ L†` for column-major `rho`.
    pub fn apply(&mut self, t: f64, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        self.heff.values_at(t, &mut self.heff_vals);
        self.heff.mul_colmajor(&self.heff_vals, rho, &mut self.k);
        // −iK + iK†, element (i, j) at i + j·d.
        for j in 0..d {
            for i in 0..d {
                let a = self.k[i + j * d];
                let b = self.k[j + i * d].conj();
                let diff = a - b;
                out[i + j * d] = C64::new(diff.im, -diff.re);
            }
        }
        for jump in &self.jumps {
            crate::hilbert::sparse::csr_mul_colmajor(&jump.row_ptr, &jump.cols, &jump.vals, rho, &mut self.m);
            // out[:, r] += conj(L[r, c]) · M[:, c]
            for r in 0..d {
                for idx in jump.row_ptr[r]..jump.row_ptr[r + 1] {
                    let c = jump.cols[idx];
                    let w = jump.vals[idx].conj();
                    let (src, dst) = (&self.m[c * d..(c + 1) * d], &mut out[r * d..(r + 1) * d]);
                    for (o, &x) in dst.iter_mut().zip(src) {
                        *o += w * x;
                    }
                }
            }
        }
    }
}

/// `dρ/dt = −i[H(t), ρ] + Σ rate·(LρL† − L†Lρ/2 − ρL†L/2)`.
pub fn lindblad_rhs(rho: &QuantumState, t: f64, h: &TimeDependentOperator, c: &CollapseSet) -> Result<DMatrix<C64>> {
    let m = rho
        .as_density()
        .ok_or_else(|| Error::InvalidArgument("Lindblad generator needs a density matrix".into()))?;
    if !HilbertLayout::same_space(rho.layout(), h.layout()) {
        return Err(Error::LayoutMismatch("state and Hamiltonian act on different layouts".into()));
    }
    let mut generator = LindbladGenerator::new(h, c)?;
    let d = generator.dim();
    let mut out = vec![C64::new(0.0, 0.0); d * d];
    generator.apply(t, m.as_slice(), &mut out);
    Ok(DMatrix::from_vec(d, d, out))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub time: f64,
    pub trace: f64,
    pub min_eig: Option<f64>,
    pub fidelity: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct MasterEvolution {
    pub state: QuantumState,
    pub checkpoints: Vec<Checkpoint>,
    pub steps: usize,
    pub step: f64,
    /// Largest `max|ρ − ρ†|/2` removed by symmetrization over the run.
    pub max_symmetrization: f64,
}

impl MasterEvolution {
    pub fn final_fidelity(&self) -> Option<f64> {
        self.checkpoints.last().and_then(|c| c.fidelity)
    }
}

/// Integrate the Lindblad master equation with fixed-step RK4 under
/// `H + Θ` (Θ optional). Diagnostics, and the fidelity with `target` when
/// given, are recorded at every checkpoint.
pub fn evolve_master(
    rho0: &QuantumState,
    h: &TimeDependentOperator,
    theta: Option<&TimeDependentOperator>,
    c: &CollapseSet,
    t_final: f64,
    cfg: &IntegratorConfig,
    target: Option<&QuantumState>,
) -> Result<MasterEvolution> {
    if cfg.method != Method::FixedRk4 {
        return Err(Error::InvalidArgument("density-matrix runs use fixed-step RK4".into()));
    }
    let layout = rho0.layout().clone();
    let rho0 = rho0.to_density();
    let diag = rho0.density_diagnostics()?;
    if !diag.is_valid() {
        return Err(Error::InvalidArgument(format!(
            "initial state is not a valid density matrix (trace {}, min eigenvalue {:?})",
            diag.trace, diag.min_eigenvalue
        )));
    }
    let total = match theta {
        Some(th) => h.plus(th)?,
        None => h.clone(),
    };
    if !HilbertLayout::same_space(&layout, total.layout()) {
        return Err(Error::LayoutMismatch("state and Hamiltonian act on different layouts".into()));
    }
    let psi = match target {
        Some(tg) => {
            if !HilbertLayout::same_space(&layout, tg.layout()) {
                return Err(Error::LayoutMismatch("target lives on a different layout".into()));
            }
            Some(
                tg.as_ket()
                    .ok_or_else(|| Error::InvalidArgument("fidelity target must be a ket".into()))?
                    .clone(),
            )
        }
        None => None,
    };

    let checkpoints = cfg.checkpoints(t_final)?;
    let omega = frequency_scale(&total).max(c.rate_scale());
    let step = cfg.resolve_step(omega)?;
    let mut generator = LindbladGenerator::new(&total, c)?;
    let d = generator.dim();
    let mut rhs = |t: f64, y: &[C64], dy: &mut [C64]| generator.apply(t, y, dy);

    let mut y: Vec<C64> = rho0.as_density().unwrap().as_slice().to_vec();
    let trace0 = trace(&y, d);
    let mut rk = Rk4::new(y.len());
    let mut t = 0.0;
    let mut steps = 0;
    let mut max_sym: f64 = 0.0;
    let mut records = Vec::with_capacity(checkpoints.len());
    for &tc in &checkpoints {
        let n = step_count(tc - t, step);
        let h_step = (tc - t) / n.max(1) as f64;
        for k in 0..n {
            let tk = t + k as f64 * h_step;
            rk.step(&mut rhs, tk, h_step, &mut y);
            max_sym = max_sym.max(symmetrize(&mut y, d));
            let drift = (trace(&y, d) - trace0).abs();
            if !(drift <= TRACE_ABORT) {
                return Err(Error::TraceDrift {
                    drift,
                    time: tk + h_step,
                    limit: TRACE_ABORT,
                });
            }
        }
        steps += n;
        t = tc;
        let m = DMatrix::from_column_slice(d, d, &y);
        records.push(Checkpoint {
            time: t,
            trace: trace(&y, d),
            min_eig: cfg.check_positivity.then(|| min_eigenvalue(&m)),
            fidelity: psi.as_ref().map(|p| p.dotc(&(&m * p)).re),
        });
    }
    let state = QuantumState::density(layout, DMatrix::from_vec(d, d, y))?;
    Ok(MasterEvolution {
        state,
        checkpoints: records,
        steps,
        step,
        max_symmetrization: max_sym,
    })
}

fn trace(y: &[C64], d: usize) -> f64 {
    (0..d).map(|i| y[i + i * d].re).sum()
}

/// `ρ ← (ρ + ρ†)/2`; returns the largest correction applied.
fn symmetrize(y: &mut [C64], d: usize) -> f64 {
    let mut dev: f64 = 0.0;
    for j in 0..d {
        let jj = j + j * d;
        dev = dev.max(y[jj].im.abs());
        y[jj].im = 0.0;
        for i in j + 1..d {
            let (a, b) = (i + j * d, j + i * d);
            let avg = (y[a] + y[b].conj()) * 0.5;
            dev = dev.max((y[a] - avg).norm());
            y[a] = avg;
            y[b] = avg.conj();
        }
    }
    dev
}

/// Mean excitation number `⟨N_exc⟩` of a ket or density matrix.
pub fn mean_excitations(state: &QuantumState) -> f64 {
    let l: &Arc<HilbertLayout> = state.layout();
    let weight = |i: usize| l.excitation_number(l.full_index(i)) as f64;
    match state.data() {
        StateData::Ket(v) => v.iter().enumerate().map(|(i, a)| a.norm_sqr() * weight(i)).sum(),
        StateData::Density(m) => (0..m.nrows()).map(|i| m[(i, i)].re * weight(i)).sum(),
    }
}
