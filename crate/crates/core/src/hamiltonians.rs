//! Interaction-picture Hamiltonians as sums of static sparse operators with
//! phase factors.
//!
//! A [`TimeDependentOperator`] represents
//! `H(t) = Σ_k (c_k e^{iω_k t} O_k + h.c.)`, where terms flagged
//! self-conjugate contribute `c_k O_k` once (they are Hermitian and static).

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::device::DeviceParams;
use crate::error::{Error, Result};
use crate::hilbert::{embed, local, HilbertLayout, SparseOperator, SubsystemKind, COUPLER_LABEL};

#[derive(Clone, Debug)]
pub struct Term {
    pub op: SparseOperator,
    /// Angular frequency of the phase factor, rad/s.
    pub frequency: f64,
    pub amplitude: C64,
    /// Hermitian static term added once, without its conjugate.
    pub self_conjugate: bool,
}

#[derive(Clone, Debug)]
pub struct TimeDependentOperator {
    layout: Arc<HilbertLayout>,
    terms: Vec<Term>,
}

impl TimeDependentOperator {
    pub fn zero(layout: Arc<HilbertLayout>) -> Self {
        Self {
            layout,
            terms: Vec::new(),
        }
    }

    /// Static Hermitian operator wrapped as a single self-conjugate term.
    pub fn constant(op: SparseOperator) -> Result<Self> {
        let scale = op.max_abs();
        if op.hermiticity_deviation() > 1e-12 * scale {
            return Err(Error::InvalidArgument("static term must be Hermitian".into()));
        }
        let mut h = Self::zero(op.layout().clone());
        h.push_static(op, 1.0);
        Ok(h)
    }

    pub fn layout(&self) -> &Arc<HilbertLayout> {
        &self.layout
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Add `amplitude·e^{i·frequency·t}·op + h.c.`; zero amplitudes are skipped.
    fn push(&mut self, op: SparseOperator, frequency: f64, amplitude: C64) {
        if amplitude != C64::new(0.0, 0.0) && op.nnz() > 0 {
            self.terms.push(Term {
                op,
                frequency,
                amplitude,
                self_conjugate: false,
            });
        }
    }

    /// Add a static Hermitian term `amplitude·op` once.
    fn push_static(&mut self, op: SparseOperator, amplitude: f64) {
        if amplitude != 0.0 && op.nnz() > 0 {
            self.terms.push(Term {
                op,
                frequency: 0.0,
                amplitude: C64::new(amplitude, 0.0),
                self_conjugate: true,
            });
        }
    }

    /// Sum of two operators on the same layout.
    pub fn plus(&self, other: &Self) -> Result<Self> {
        if !HilbertLayout::same_space(&self.layout, &other.layout) {
            return Err(Error::LayoutMismatch("Hamiltonians act on different layouts".into()));
        }
        Ok(Self {
            layout: self.layout.clone(),
            terms: self.terms.iter().chain(&other.terms).cloned().collect(),
        })
    }

    /// Largest `|frequency|` over all terms, rad/s.
    pub fn max_frequency(&self) -> f64 {
        self.terms.iter().map(|t| t.frequency.abs()).fold(0.0, f64::max)
    }

    /// Assemble `H(t)` as a sparse operator.
    pub fn at(&self, t: f64) -> Result<SparseOperator> {
        let mut trip = Vec::new();
        for term in &self.terms {
            if term.self_conjugate {
                trip.extend(term.op.triplets().map(|(r, c, v)| (r, c, term.amplitude * v)));
            } else {
                let coeff = term.amplitude * C64::from_polar(1.0, term.frequency * t);
                for (r, c, v) in term.op.triplets() {
                    let x = coeff * v;
                    trip.push((r, c, x));
                    trip.push((c, r, x.conj()));
                }
            }
        }
        SparseOperator::from_triplets(self.layout.clone(), trip)
    }

    /// `‖H(t) − H(t)†‖_max / ‖H(t)‖_max` (0 for the zero operator).
    pub fn relative_hermiticity_deviation(&self, t: f64) -> Result<f64> {
        let h = self.at(t)?;
        let scale = h.max_abs();
        Ok(if scale == 0.0 { 0.0 } else { h.hermiticity_deviation() / scale })
    }

    /// Same terms restricted to an invariant subspace of the layout.
    pub fn restrict(&self, target: &Arc<HilbertLayout>) -> Result<Self> {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                Ok(Term {
                    op: t.op.restrict(target)?,
                    ..t.clone()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            layout: target.clone(),
            terms,
        })
    }

    pub fn compile(&self) -> CompiledOperator {
        CompiledOperator::new(self, None)
    }
}

/// `H(t)` with its sparsity pattern fixed once; evaluation only rewrites the
/// value array.
#[derive(Clone, Debug)]
pub struct CompiledOperator {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    constant: Vec<C64>,
    terms: Vec<CompiledTerm>,
}

#[derive(Clone, Debug)]
struct CompiledTerm {
    frequency: f64,
    amplitude: C64,
    direct: Vec<(usize, C64)>,
    conj: Vec<(usize, C64)>,
}

impl CompiledOperator {
    /// Compile `h`, optionally adding a constant (possibly non-Hermitian)
    /// operator.
    pub fn new(h: &TimeDependentOperator, constant: Option<&SparseOperator>) -> Self {
        let d = h.layout.dim();
        let mut positions: Vec<(usize, usize)> = Vec::new();
        for t in &h.terms {
            for (r, c, _) in t.op.triplets() {
                positions.push((r, c));
                if !t.self_conjugate {
                    positions.push((c, r));
                }
            }
        }
        if let Some(k) = constant {
            positions.extend(k.triplets().map(|(r, c, _)| (r, c)));
        }
        positions.sort_unstable();
        positions.dedup();
        let mut row_ptr = vec![0; d + 1];
        for &(r, _) in &positions {
            row_ptr[r + 1] += 1;
        }
        for i in 0..d {
            row_ptr[i + 1] += row_ptr[i];
        }
        let cols: Vec<usize> = positions.iter().map(|p| p.1).collect();
        let slot = |r: usize, c: usize| row_ptr[r] + cols[row_ptr[r]..row_ptr[r + 1]].binary_search(&c).unwrap();

        let mut constant_vals = vec![C64::new(0.0, 0.0); cols.len()];
        if let Some(k) = constant {
            for (r, c, v) in k.triplets() {
                constant_vals[slot(r, c)] += v;
            }
        }
        let mut terms = Vec::new();
        for t in &h.terms {
            if t.self_conjugate {
                for (r, c, v) in t.op.triplets() {
                    constant_vals[slot(r, c)] += t.amplitude * v;
                }
            } else {
                terms.push(CompiledTerm {
                    frequency: t.frequency,
                    amplitude: t.amplitude,
                    direct: t.op.triplets().map(|(r, c, v)| (slot(r, c), v)).collect(),
                    conj: t.op.triplets().map(|(r, c, v)| (slot(c, r), v.conj())).collect(),
                });
            }
        }
        Self {
            row_ptr,
            cols,
            constant: constant_vals,
            terms,
        }
    }

    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Write the values of `H(t)` into `out` (length [`nnz`](Self::nnz)).
    pub fn values_at(&self, t: f64, out: &mut [C64]) {
        out.copy_from_slice(&self.constant);
        for term in &self.terms {
            let c = term.amplitude * C64::from_polar(1.0, term.frequency * t);
            let cc = c.conj();
            for &(s, v) in &term.direct {
                out[s] += c * v;
            }
            for &(s, v) in &term.conj {
                out[s] += cc * v;
            }
        }
    }

    pub fn mul_vec(&self, vals: &[C64], x: &[C64], y: &mut [C64]) {
        crate::hilbert::sparse::csr_mul_vec(&self.row_ptr, &self.cols, vals, x, y);
    }

    /// `out = H · m` for column-major `m`.
    pub fn mul_colmajor(&self, vals: &[C64], m: &[C64], out: &mut [C64]) {
        crate::hilbert::sparse::csr_mul_colmajor(&self.row_ptr, &self.cols, vals, m, out);
    }
}

/// Canonical device layout for `params`.
pub fn system_layout(params: &DeviceParams) -> Result<Arc<HilbertLayout>> {
    Ok(Arc::new(HilbertLayout::device(params.n, params.qutrit_levels, params.cavity_levels)?))
}

fn check_device_layout(params: &DeviceParams, layout: &HilbertLayout) -> Result<()> {
    let expected = HilbertLayout::device(params.n, params.qutrit_levels, params.cavity_levels)?;
    if *layout != expected {
        return Err(Error::LayoutMismatch(format!(
            "expected the canonical layout for n = {} with {}-level qutrits and {} Fock levels",
            params.n, params.qutrit_levels, params.cavity_levels
        )));
    }
    Ok(())
}

/// Check that `layout` holds `q1..qn` and `A` as unrestricted qutrits.
fn check_qubit_labels(n: usize, layout: &HilbertLayout) -> Result<()> {
    if layout.is_restricted() {
        return Err(Error::LayoutMismatch("expected an unrestricted layout".into()));
    }
    for label in qubit_labels(n) {
        let s = layout.subsystem(&label)?;
        if s.kind != SubsystemKind::Qutrit || s.dim < 2 {
            return Err(Error::LayoutMismatch(format!("`{label}` must be a qutrit with dim >= 2")));
        }
    }
    Ok(())
}

fn qubit_labels(n: usize) -> impl Iterator<Item = String> {
    (1..=n).map(|j| format!("q{j}")).chain(std::iter::once(COUPLER_LABEL.to_string()))
}

fn on(layout: &Arc<HilbertLayout>, label: &str, f: impl Fn(usize) -> Result<DMatrix<C64>>) -> Result<SparseOperator> {
    let d = layout.subsystem(label)?.dim;
    embed(&f(d)?, label, layout)
}

fn raising(layout: &Arc<HilbertLayout>, label: &str, from: usize) -> Result<SparseOperator> {
    on(layout, label, |d| Ok(local::transition(d, from + 1, from)))
}

fn lowering(layout: &Arc<HilbertLayout>, label: &str, to: usize) -> Result<SparseOperator> {
    on(layout, label, |d| Ok(local::transition(d, to, to + 1)))
}

fn projector(layout: &Arc<HilbertLayout>, label: &str, k: usize) -> Result<SparseOperator> {
    on(layout, label, |d| Ok(local::projector(d, k)))
}

fn annihilation(layout: &Arc<HilbertLayout>, label: &str) -> Result<SparseOperator> {
    on(layout, label, local::annihilation)
}

/// `H_I = Σ_j g_j (e^{iδ_j t} a_j σ_j^+ + h.c.) + Σ_j g_Aj (e^{iδ_Aj t} a_j σ_A^+ + h.c.)`
/// with `σ^+ = |1⟩⟨0|`.
pub fn build_h_i(params: &DeviceParams, layout: &Arc<HilbertLayout>) -> Result<TimeDependentOperator> {
    check_device_layout(params, layout)?;
    let mut h = TimeDependentOperator::zero(layout.clone());
    let sigma_a = raising(layout, COUPLER_LABEL, 0)?;
    for j in 0..params.n {
        let a = annihilation(layout, &format!("c{}", j + 1))?;
        let sigma = raising(layout, &format!("q{}", j + 1), 0)?;
        h.push(a.matmul(&sigma)?, params.delta[j], C64::new(params.g[j], 0.0));
        h.push(a.matmul(&sigma_a)?, params.delta_coupler[j], C64::new(params.g_coupler[j], 0.0));
    }
    Ok(h)
}

/// Unwanted couplings: cavity-induced `|1⟩↔|2⟩` transitions of every qutrit
/// (only for 3-level qutrits) and direct intercavity hopping
/// `g_kl (e^{−iΔ_kl t} a_k a_l† + h.c.)`, one term per unordered pair.
pub fn build_theta_i(params: &DeviceParams, layout: &Arc<HilbertLayout>) -> Result<TimeDependentOperator> {
    check_device_layout(params, layout)?;
    params.validate()?;
    let mut h = TimeDependentOperator::zero(layout.clone());
    let cav: Vec<SparseOperator> = (1..=params.n)
        .map(|j| annihilation(layout, &format!("c{j}")))
        .collect::<Result<_>>()?;
    if params.qutrit_levels >= 3 {
        let sigma21_a = raising(layout, COUPLER_LABEL, 1)?;
        for j in 0..params.n {
            let sigma21 = raising(layout, &format!("q{}", j + 1), 1)?;
            h.push(cav[j].matmul(&sigma21)?, params.delta21[j], C64::new(params.g21[j], 0.0));
            h.push(cav[j].matmul(&sigma21_a)?, params.delta21_coupler[j], C64::new(params.g21_coupler[j], 0.0));
        }
    }
    for k in 0..params.n {
        for l in k + 1..params.n {
            let op = cav[k].matmul(&cav[l].adjoint())?;
            h.push(op, -params.cavity_detuning[k][l], C64::new(params.g_cross[k][l], 0.0));
        }
    }
    Ok(h)
}

/// `h_I = H_I + Θ_I`.
pub fn build_full(params: &DeviceParams, layout: &Arc<HilbertLayout>, include_theta: bool) -> Result<TimeDependentOperator> {
    let h = build_h_i(params, layout)?;
    if include_theta {
        h.plus(&build_theta_i(params, layout)?)
    } else {
        Ok(h)
    }
}

/// Dispersive effective Hamiltonian: photon-number dependent Stark shifts of
/// every qubit plus the cavity-mediated exchange
/// `λ_j (e^{i(δ_j−δ_Aj)t} σ_j^+ σ_A^- + h.c.)`,
/// `λ_j = (g_j g_Aj/2)(1/δ_j + 1/δ_Aj)`.
pub fn build_h_eff(params: &DeviceParams, layout: &Arc<HilbertLayout>) -> Result<TimeDependentOperator> {
    check_device_layout(params, layout)?;
    let mut h = TimeDependentOperator::zero(layout.clone());
    let p0_a = projector(layout, COUPLER_LABEL, 0)?;
    let p1_a = projector(layout, COUPLER_LABEL, 1)?;
    let sigma_a_minus = lowering(layout, COUPLER_LABEL, 0)?;
    let lambda = params.lambda_j();
    for j in 0..params.n {
        let q = format!("q{}", j + 1);
        let a = annihilation(layout, &format!("c{}", j + 1))?;
        let n_op = a.adjoint().matmul(&a)?;
        let a_ad = a.matmul(&a.adjoint())?;
        let stark = |p0: &SparseOperator, p1: &SparseOperator| -> Result<SparseOperator> {
            p0.matmul(&n_op)?.sub(&p1.matmul(&a_ad)?)
        };
        let qj = stark(&projector(layout, &q, 0)?, &projector(layout, &q, 1)?)?;
        h.push_static(qj, -params.g[j] * params.g[j] / params.delta[j]);
        let aj = stark(&p0_a, &p1_a)?;
        h.push_static(aj, -params.g_coupler[j] * params.g_coupler[j] / params.delta_coupler[j]);
        let exch = raising(layout, &q, 0)?.matmul(&sigma_a_minus)?;
        h.push(exch, params.delta[j] - params.delta_coupler[j], C64::new(lambda[j], 0.0));
    }
    Ok(h)
}

/// `H_0 = Σ_j (g_j²/δ_j)|1⟩⟨1|_j + (Σ_j g_Aj²/δ_Aj)|1⟩⟨1|_A` on any layout
/// holding `q1..qn` and `A`. Equals `χ(Σ_j |1⟩⟨1|_j + |1⟩⟨1|_A)` for matched
/// parameters.
pub fn build_h0(params: &DeviceParams, layout: &Arc<HilbertLayout>) -> Result<SparseOperator> {
    check_qubit_labels(params.n, layout)?;
    let mut h = SparseOperator::zeros(layout.clone());
    for j in 0..params.n {
        let p = projector(layout, &format!("q{}", j + 1), 1)?;
        h = h.add(&p.scale(C64::new(params.g[j] * params.g[j] / params.delta[j], 0.0)))?;
    }
    let shift_a: f64 = (0..params.n)
        .map(|j| params.g_coupler[j] * params.g_coupler[j] / params.delta_coupler[j])
        .sum();
    h.add(&projector(layout, COUPLER_LABEL, 1)?.scale(C64::new(shift_a, 0.0)))
}

/// `H_int = Σ_j λ_j (σ_j^+ σ_A^- + σ_j^- σ_A^+)` on any layout holding
/// `q1..qn` and `A`.
pub fn build_h_int(params: &DeviceParams, layout: &Arc<HilbertLayout>) -> Result<SparseOperator> {
    check_qubit_labels(params.n, layout)?;
    let sm_a = lowering(layout, COUPLER_LABEL, 0)?;
    let mut h = SparseOperator::zeros(layout.clone());
    for (j, &lam) in params.lambda_j().iter().enumerate() {
        let term = raising(layout, &format!("q{}", j + 1), 0)?.matmul(&sm_a)?;
        h = h.add(&term.add(&term.adjoint())?.scale(C64::new(lam, 0.0)))?;
    }
    Ok(h)
}

/// Relative spread `max_j |λ_j − λ_1| / |λ_1|` allowed before the collective
/// form is refused.
pub const LAMBDA_SPREAD_TOL: f64 = 1e-9;

/// `λ (J_+ σ_A^- + J_- σ_A^+)` with `J_± = Σ_j σ_j^±`, the collective exchange
/// that rotates `|0…0⟩|1⟩_A` into `|W⟩|0⟩_A`.
pub fn build_h_tilde_int(params: &DeviceParams, layout: &Arc<HilbertLayout>) -> Result<SparseOperator> {
    check_qubit_labels(params.n, layout)?;
    let lam = params.lambda_j();
    let scale = lam.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(SparseOperator::zeros(layout.clone()));
    }
    let spread = lam.iter().map(|&x| (x - lam[0]).abs()).fold(0.0, f64::max) / scale;
    if spread > LAMBDA_SPREAD_TOL {
        return Err(Error::Unmatched(format!("λ_j spread {spread:e} exceeds {LAMBDA_SPREAD_TOL:e}")));
    }
    let sm_a = lowering(layout, COUPLER_LABEL, 0)?;
    let mut j_plus = SparseOperator::zeros(layout.clone());
    for j in 1..=params.n {
        j_plus = j_plus.add(&raising(layout, &format!("q{j}"), 0)?)?;
    }
    let term = j_plus.matmul(&sm_a)?;
    Ok(term.add(&term.adjoint())?.scale(C64::new(lam[0], 0.0)))
}

/// `N_exc = Σ_j a_j†a_j + Σ_q (|1⟩⟨1| + 2|2⟩⟨2|)_q`: the sum of all subsystem
/// levels, diagonal in the product basis.
pub fn excitation_operator(layout: &Arc<HilbertLayout>) -> Result<SparseOperator> {
    let diag: Vec<C64> = (0..layout.dim())
        .map(|i| C64::new(layout.excitation_number(layout.full_index(i)) as f64, 0.0))
        .collect();
    SparseOperator::diagonal(layout.clone(), &diag)
}

/// True when every stored element connects basis states with equal
/// excitation number, i.e. `[op, N_exc] = 0` holds structurally.
pub fn conserves_excitations(op: &SparseOperator) -> bool {
    let l = op.layout();
    op.triplets()
        .all(|(r, c, _)| l.excitation_number(l.full_index(r)) == l.excitation_number(l.full_index(c)))
}

/// True when no stored element raises the excitation number.
pub fn never_raises_excitations(op: &SparseOperator) -> bool {
    let l = op.layout();
    op.triplets()
        .all(|(r, c, _)| l.excitation_number(l.full_index(r)) <= l.excitation_number(l.full_index(c)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{derive_matched_params, MatchedDesign};
    use crate::hilbert::mat_commutator_norm;
    use crate::units::ghz;

    fn params(b: f64, qutrit_levels: usize, cavity_levels: usize) -> DeviceParams {
        let design = MatchedDesign {
            delta: vec![ghz(-0.5), ghz(-1.0), ghz(-1.5)],
            g1: 0.0,
            omega_10: vec![ghz(6.5)],
            omega_10_coupler: ghz(6.5),
            qutrit_levels,
            cavity_levels,
        }
        .with_normalized_detuning(b)
        .unwrap();
        derive_matched_params(&design).unwrap().0
    }

    fn single(delta: f64, g: f64) -> DeviceParams {
        let design = MatchedDesign {
            delta: vec![delta],
            g1: g,
            omega_10: vec![ghz(6.0)],
            omega_10_coupler: ghz(6.0),
            qutrit_levels: 2,
            cavity_levels: 3,
        };
        derive_matched_params(&design).unwrap().0
    }

    const SAMPLE_TIMES: [f64; 4] = [0.0, 1.234_567e-9, 7.389_056e-9, 3.141_592_653e-8];

    #[test]
    fn resonant_single_qubit_is_jaynes_cummings() {
        let mut p = single(ghz(1.0), 1e8);
        p.delta = vec![0.0];
        p.delta_coupler = vec![0.0];
        p.g_coupler = vec![0.0];
        let l = system_layout(&p).unwrap();
        let h = build_h_i(&p, &l).unwrap();
        let a = annihilation(&l, "c1").unwrap();
        let sp = raising(&l, "q1", 0).unwrap();
        let jc = a.matmul(&sp).unwrap();
        let jc = jc.add(&jc.adjoint()).unwrap().scale(C64::new(1e8, 0.0));
        for t in SAMPLE_TIMES {
            assert!(h.at(t).unwrap().max_abs_diff(&jc).unwrap() < 1e-6);
        }
    }

    #[test]
    fn h_i_matrix_element_is_g() {
        let p = params(8.0, 3, 3);
        let l = system_layout(&p).unwrap();
        let h = build_h_i(&p, &l).unwrap().at(0.0).unwrap();
        for j in 1..=3 {
            let q = format!("q{j}");
            let c = format!("c{j}");
            let bra = l.index_with(&[(c.as_str(), 1)]).unwrap();
            let ket = l.index_with(&[(q.as_str(), 1)]).unwrap();
            let v = h.get(bra, ket);
            assert!((v.re - p.g[j - 1]).abs() < 1e-6 && v.im.abs() < 1e-9);
        }
    }

    #[test]
    fn hamiltonians_are_hermitian_and_conserve_excitations() {
        let mut p = params(8.0, 3, 3);
        p.set_uniform_crosstalk(0.6 * p.g_max());
        let l = system_layout(&p).unwrap();
        let n_exc = excitation_operator(&l).unwrap();
        let h = build_full(&p, &l, true).unwrap();
        let heff = build_h_eff(&p, &l).unwrap();
        for t in SAMPLE_TIMES {
            assert!(h.relative_hermiticity_deviation(t).unwrap() < 1e-12);
            assert!(heff.relative_hermiticity_deviation(t).unwrap() < 1e-12);
            let h_t = h.at(t).unwrap();
            assert!(conserves_excitations(&h_t));
            assert!(mat_commutator_norm(&h_t, &n_exc).unwrap() < 1e-14 * h_t.max_abs());
        }
    }

    #[test]
    fn theta_is_zero_without_crosstalk_or_third_level() {
        let p = params(8.0, 2, 2);
        let l = system_layout(&p).unwrap();
        let th = build_theta_i(&p, &l).unwrap();
        assert!(th.terms().is_empty());
        assert_eq!(th.at(1e-9).unwrap().nnz(), 0);
    }

    #[test]
    fn crosstalk_conserves_photon_number() {
        let mut p = params(8.0, 2, 3);
        p.set_uniform_crosstalk(1e7);
        let l = system_layout(&p).unwrap();
        let th = build_theta_i(&p, &l).unwrap();
        let mut photons = SparseOperator::zeros(l.clone());
        for j in 1..=3 {
            let a = annihilation(&l, &format!("c{j}")).unwrap();
            photons = photons.add(&a.adjoint().matmul(&a).unwrap()).unwrap();
        }
        for t in SAMPLE_TIMES {
            let th_t = th.at(t).unwrap();
            assert!(mat_commutator_norm(&th_t, &photons).unwrap() < 1e-14 * th_t.max_abs());
        }
    }

    #[test]
    fn theta_matrix_element_is_g21() {
        let p = params(8.0, 3, 2);
        let l = system_layout(&p).unwrap();
        let th = build_theta_i(&p, &l).unwrap().at(0.0).unwrap();
        let bra = l.index_with(&[("q2", 1), ("c2", 1)]).unwrap();
        let ket = l.index_with(&[("q2", 2)]).unwrap();
        assert!((th.get(bra, ket).re - p.g21[1]).abs() < 1e-6);
    }

    #[test]
    fn theta_rejects_asymmetric_crosstalk() {
        let mut p = params(8.0, 3, 2);
        p.g_cross[0][2] = 5.0;
        let l = system_layout(&p).unwrap();
        assert!(matches!(build_theta_i(&p, &l), Err(Error::CrosstalkAsymmetry { .. })));
    }

    #[test]
    fn layout_mismatch_rejected() {
        let p = params(8.0, 3, 2);
        let wrong = Arc::new(HilbertLayout::device(3, 3, 3).unwrap());
        assert!(matches!(build_h_i(&p, &wrong), Err(Error::LayoutMismatch(_))));
    }

    #[test]
    fn h_eff_vacuum_block_is_h0_plus_h_int() {
        let p = params(8.0, 2, 2);
        let l = system_layout(&p).unwrap();
        let heff = build_h_eff(&p, &l).unwrap().at(0.0).unwrap();
        let qubits = Arc::new(HilbertLayout::qubits_with_coupler(3).unwrap());
        let reference = build_h0(&p, &qubits).unwrap().add(&build_h_int(&p, &qubits).unwrap()).unwrap();
        // Cavities are the least significant digits: vacuum rows sit at
        // multiples of the cavity block size.
        let block = 8;
        for r in 0..16 {
            for c in 0..16 {
                let got = heff.get(r * block, c * block);
                let want = reference.get(r, c);
                assert!((got - want).norm() < 1e-6 * p.g[0], "({r},{c}): {got} vs {want}");
            }
        }
    }

    #[test]
    fn h_eff_lambda_matches_exchange_coupling() {
        let p = params(8.0, 2, 2);
        for (j, lam) in p.lambda_j().into_iter().enumerate() {
            let want = p.g[j] * p.g_coupler[j] / p.delta[j];
            assert!((lam - want).abs() <= 1e-12 * want.abs());
        }
    }

    #[test]
    fn h_eff_stark_shift_sign() {
        let p = params(8.0, 3, 3);
        let l = system_layout(&p).unwrap();
        let heff = build_h_eff(&p, &l).unwrap().at(0.0).unwrap();
        // |0_q1, 0_A, 1_c1⟩: qubit-1 shift −g1²/δ1 plus coupler shift −g_A1²/δ_A1.
        let i = l.index_with(&[("c1", 1)]).unwrap();
        let want = -p.g[0] * p.g[0] / p.delta[0] - p.g_coupler[0] * p.g_coupler[0] / p.delta_coupler[0];
        assert!((heff.get(i, i).re - want).abs() < 1e-6);
        // The register-qubit term alone.
        let q_only = {
            let mut q = p.clone();
            q.g_coupler = vec![0.0; 3];
            build_h_eff(&q, &l).unwrap().at(0.0).unwrap()
        };
        assert!((q_only.get(i, i).re + p.g[0] * p.g[0] / p.delta[0]).abs() < 1e-6);
    }

    #[test]
    fn h_tilde_int_maps_coupler_excitation_to_w() {
        let p = params(8.0, 3, 3);
        let l = Arc::new(HilbertLayout::qubits_with_coupler(3).unwrap());
        let h = build_h_tilde_int(&p, &l).unwrap();
        let lam = p.g[0] * p.g_coupler[0] / p.delta[0];
        let start = l.index_with(&[("A", 1)]).unwrap();
        for j in 1..=3 {
            let q = format!("q{j}");
            let idx = l.index_with(&[(q.as_str(), 1)]).unwrap();
            assert!((h.get(idx, start).re - lam).abs() < 1e-9 * lam.abs());
        }
        assert_eq!(h.triplets().filter(|&(_, c, _)| c == start).count(), 3);
        assert!(conserves_excitations(&h));
    }

    #[test]
    fn h_tilde_int_single_excitation_block() {
        // In the basis {|000,1_A⟩, |W,0_A⟩} the operator is [[0, √3λ], [√3λ, 0]].
        let p = params(8.0, 3, 3);
        let l = Arc::new(HilbertLayout::qubits_with_coupler(3).unwrap());
        let h = build_h_tilde_int(&p, &l).unwrap().to_dense();
        let lam = p.g[0] * p.g_coupler[0] / p.delta[0];
        let g = l.index_with(&[("A", 1)]).unwrap();
        let mut w = nalgebra::DVector::<C64>::zeros(16);
        for j in 1..=3 {
            let q = format!("q{j}");
            w[l.index_with(&[(q.as_str(), 1)]).unwrap()] = C64::new(1.0 / 3f64.sqrt(), 0.0);
        }
        let mut e = nalgebra::DVector::<C64>::zeros(16);
        e[g] = C64::new(1.0, 0.0);
        let off = w.dotc(&(&h * &e));
        assert!((off.re - 3f64.sqrt() * lam).abs() < 1e-9 * lam.abs());
        assert!(e.dotc(&(&h * &e)).norm() == 0.0 && w.dotc(&(&h * &w)).norm() < 1e-9);
        // ±√3λ from this block appear in the spectrum; the two-excitation
        // block |D1,1_A⟩ ↔ |D2,0_A⟩ contributes ±2λ.
        let ev = h.symmetric_eigenvalues();
        for want in [3f64.sqrt() * lam, -3f64.sqrt() * lam, 2.0 * lam, -2.0 * lam] {
            assert!(ev.iter().any(|&e| (e - want).abs() < 1e-9 * lam.abs()));
        }
    }

    #[test]
    fn h_tilde_int_zero_and_unmatched() {
        let mut p = params(8.0, 3, 3);
        let l = Arc::new(HilbertLayout::qubits_with_coupler(3).unwrap());
        p.g[1] *= 1.01;
        assert!(matches!(build_h_tilde_int(&p, &l), Err(Error::Unmatched(_))));
        p.g_coupler = vec![0.0; 3];
        assert_eq!(build_h_tilde_int(&p, &l).unwrap().nnz(), 0);
    }

    #[test]
    fn h0_eigenvalues() {
        let p = params(8.0, 3, 3);
        let l = Arc::new(HilbertLayout::qubits_with_coupler(3).unwrap());
        let h0 = build_h0(&p, &l).unwrap();
        let chi = p.g[0] * p.g[0] / p.delta[0];
        let a = l.index_with(&[("A", 1)]).unwrap();
        assert!((h0.get(a, a).re - chi).abs() < 1e-9 * chi.abs());
        assert_eq!(h0.get(0, 0).re, 0.0);
        for j in 1..=3 {
            let q = format!("q{j}");
            let i = l.index_with(&[(q.as_str(), 1)]).unwrap();
            assert!((h0.get(i, i).re - chi).abs() < 1e-9 * chi.abs());
        }
    }
}
