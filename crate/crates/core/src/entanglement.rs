//! Target states and figures of merit.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::device::DerivedQuantities;
use crate::error::{Error, Result};
use crate::hilbert::{HilbertLayout, QuantumState, StateData, Subsystem, SubsystemKind};

/// Largest imaginary part of `⟨ψ|ρ|ψ⟩` tolerated before fidelity is rejected.
pub const FIDELITY_IMAG_TOL: f64 = 1e-12;

/// Layout of `n` bare register qubits `q1..qn`.
pub fn register_layout(n: usize) -> Result<HilbertLayout> {
    HilbertLayout::new(
        (1..=n)
            .map(|j| Subsystem::new(format!("q{j}"), SubsystemKind::Qutrit, 2))
            .collect(),
    )
}

/// `(1/√n) Σ |0…1…0⟩` on `n` qubits, qubit 1 leftmost.
pub fn w_state(n: usize) -> Result<QuantumState> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("W state needs n >= 2, got {n}")));
    }
    let layout = Arc::new(register_layout(n)?);
    let amp = C64::new(1.0 / (n as f64).sqrt(), 0.0);
    let mut v = DVector::zeros(1 << n);
    for j in 0..n {
        v[1 << (n - 1 - j)] = amp;
    }
    QuantumState::ket(layout, v)
}

/// `|W⟩ ⊗ |0⟩_A ⊗ |0…0⟩_cavities` on any layout holding `q1..qn` and `A`
/// (cavities optional, any truncation). Works for `n = 1` as well, where it is
/// `|1⟩_q1 |0⟩_A`.
pub fn target_state(layout: &Arc<HilbertLayout>, n: usize) -> Result<QuantumState> {
    let full = Arc::new(layout.unrestricted());
    let amp = C64::new(1.0 / (n as f64).sqrt(), 0.0);
    let mut v = DVector::zeros(full.dim());
    for j in 1..=n {
        let label = format!("q{j}");
        v[full.index_with(&[(label.as_str(), 1)])?] = amp;
    }
    let ket = QuantumState::ket(full, v)?;
    if layout.is_restricted() {
        ket.restrict(layout)
    } else {
        Ok(ket)
    }
}

/// `⟨ψ|ρ|ψ⟩`; a ket `ρ` is treated as `|φ⟩⟨φ|`.
pub fn fidelity(rho: &QuantumState, target: &QuantumState) -> Result<f64> {
    if !HilbertLayout::same_space(rho.layout(), target.layout()) {
        return Err(Error::LayoutMismatch("state and target act on different layouts".into()));
    }
    let psi = target
        .as_ket()
        .ok_or_else(|| Error::InvalidArgument("fidelity target must be a ket".into()))?;
    let overlap = match rho.data() {
        StateData::Ket(phi) => C64::new(psi.dotc(phi).norm_sqr(), 0.0),
        StateData::Density(m) => psi.dotc(&(m * psi)),
    };
    if overlap.im.abs() > FIDELITY_IMAG_TOL * overlap.re.abs().max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "fidelity has imaginary residue {:e}; ρ is not Hermitian",
            overlap.im
        )));
    }
    Ok(overlap.re)
}

/// `π/(2√n|λ|)`.
pub fn preparation_time(derived: &DerivedQuantities) -> Result<f64> {
    preparation_time_for(derived.n, derived.lambda)
}

pub fn preparation_time_for(n: usize, lambda: f64) -> Result<f64> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidArgument("preparation time needs a finite non-zero λ".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    Ok(PI / (2.0 * (n as f64).sqrt() * lambda.abs()))
}
