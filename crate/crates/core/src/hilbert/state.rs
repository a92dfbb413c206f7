use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::layout::{HilbertLayout, Subsystem};
use super::sparse::SparseOperator;
use crate::error::{Error, Result};

/// Hermiticity tolerance for density matrices, `‖ρ − ρ†‖_max`.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Allowed `|tr ρ − 1|`.
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue accepted at validation checkpoints.
pub const POSITIVITY_FLOOR: f64 = -1e-7;
/// Allowed `|‖ψ‖ − 1|` for kets.
pub const KET_NORM_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateForm {
    Ket,
    Density,
}

#[derive(Clone, Debug)]
pub enum StateData {
    Ket(DVector<C64>),
    Density(DMatrix<C64>),
}

/// A pure or mixed state tagged with its layout.
#[derive(Clone, Debug)]
pub struct QuantumState {
    layout: Arc<HilbertLayout>,
    data: StateData,
}

/// Result of [`QuantumState::density_diagnostics`].
#[derive(Clone, Copy, Debug)]
pub struct DensityDiagnostics {
    pub trace: f64,
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
}

impl DensityDiagnostics {
    pub fn is_valid(&self) -> bool {
        (self.trace - 1.0).abs() <= TRACE_TOL
            && self.hermiticity <= HERMITICITY_TOL
            && self.min_eigenvalue >= POSITIVITY_FLOOR
    }
}

impl QuantumState {
    pub fn ket(layout: Arc<HilbertLayout>, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.dim(),
                found: amplitudes.len(),
            });
        }
        Ok(Self {
            layout,
            data: StateData::Ket(amplitudes),
        })
    }

    pub fn ket_normalized(layout: Arc<HilbertLayout>, amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidArgument("cannot normalize a zero or non-finite ket".into()));
        }
        Self::ket(layout, amplitudes.unscale(norm))
    }

    /// Product-basis state `|full_index⟩`.
    pub fn basis_ket(layout: Arc<HilbertLayout>, full_index: usize) -> Result<Self> {
        let i = layout.local_index(full_index).ok_or_else(|| {
            Error::InvalidArgument(format!("basis state {full_index} not in layout"))
        })?;
        let mut v = DVector::zeros(layout.dim());
        v[i] = C64::new(1.0, 0.0);
        Self::ket(layout, v)
    }

    pub fn density(layout: Arc<HilbertLayout>, rho: DMatrix<C64>) -> Result<Self> {
        if rho.nrows() != layout.dim() || rho.ncols() != layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.dim(),
                found: rho.nrows(),
            });
        }
        Ok(Self {
            layout,
            data: StateData::Density(rho),
        })
    }

    pub fn maximally_mixed(layout: Arc<HilbertLayout>) -> Self {
        let d = layout.dim();
        let rho = DMatrix::identity(d, d).unscale(d as f64);
        Self {
            layout,
            data: StateData::Density(rho),
        }
    }

    pub fn layout(&self) -> &Arc<HilbertLayout> {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn form(&self) -> StateForm {
        match self.data {
            StateData::Ket(_) => StateForm::Ket,
            StateData::Density(_) => StateForm::Density,
        }
    }

    pub fn data(&self) -> &StateData {
        &self.data
    }

    pub fn as_ket(&self) -> Option<&DVector<C64>> {
        match &self.data {
            StateData::Ket(v) => Some(v),
            StateData::Density(_) => None,
        }
    }

    pub fn as_density(&self) -> Option<&DMatrix<C64>> {
        match &self.data {
            StateData::Density(m) => Some(m),
            StateData::Ket(_) => None,
        }
    }

    pub fn into_data(self) -> StateData {
        self.data
    }

    /// `|ψ⟩⟨ψ|` for kets; densities are returned unchanged.
    pub fn to_density(&self) -> Self {
        match &self.data {
            StateData::Ket(v) => Self {
                layout: self.layout.clone(),
                data: StateData::Density(v * v.adjoint()),
            },
            StateData::Density(_) => self.clone(),
        }
    }

    /// `‖ψ‖₂` for kets, `tr ρ` (real part) for densities.
    pub fn norm(&self) -> f64 {
        match &self.data {
            StateData::Ket(v) => v.norm(),
            StateData::Density(m) => m.trace().re,
        }
    }

    /// Full Hermitian eigendecomposition; O(d³), meant for checkpoints only.
    pub fn density_diagnostics(&self) -> Result<DensityDiagnostics> {
        let m = self
            .as_density()
            .ok_or_else(|| Error::InvalidArgument("diagnostics need a density matrix".into()))?;
        Ok(DensityDiagnostics {
            trace: m.trace().re,
            hermiticity: (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max),
            min_eigenvalue: min_eigenvalue(m),
        })
    }

    pub fn check_normalized_ket(&self) -> Result<()> {
        match &self.data {
            StateData::Ket(v) if (v.norm() - 1.0).abs() <= KET_NORM_TOL => Ok(()),
            StateData::Ket(v) => Err(Error::InvalidArgument(format!("ket norm {} is not 1", v.norm()))),
            StateData::Density(_) => Err(Error::InvalidArgument("expected a ket".into())),
        }
    }

    pub fn check_valid_density(&self) -> Result<DensityDiagnostics> {
        let d = self.density_diagnostics()?;
        if d.is_valid() {
            Ok(d)
        } else {
            Err(Error::InvalidArgument(format!("invalid density matrix: {d:?}")))
        }
    }

    /// Embed a state on a restricted layout back into the parent product space.
    pub fn lift(&self) -> Self {
        let Some(basis) = self.layout.basis() else {
            return self.clone();
        };
        let full = Arc::new(self.layout.unrestricted());
        let d = full.dim();
        let data = match &self.data {
            StateData::Ket(v) => {
                let mut out = DVector::zeros(d);
                for (i, &b) in basis.iter().enumerate() {
                    out[b] = v[i];
                }
                StateData::Ket(out)
            }
            StateData::Density(m) => {
                let mut out = DMatrix::zeros(d, d);
                for (j, &bj) in basis.iter().enumerate() {
                    for (i, &bi) in basis.iter().enumerate() {
                        out[(bi, bj)] = m[(i, j)];
                    }
                }
                StateData::Density(out)
            }
        };
        Self { layout: full, data }
    }

    /// Project onto a restricted layout whose parent is this state's layout.
    /// Weight outside the kept basis is discarded.
    pub fn restrict(&self, target: &Arc<HilbertLayout>) -> Result<Self> {
        if self.layout.is_restricted() || target.unrestricted() != *self.layout {
            return Err(Error::LayoutMismatch(
                "restriction needs a state on the parent product layout".into(),
            ));
        }
        let basis: Vec<usize> = (0..target.dim()).map(|i| target.full_index(i)).collect();
        let data = match &self.data {
            StateData::Ket(v) => StateData::Ket(DVector::from_iterator(basis.len(), basis.iter().map(|&b| v[b]))),
            StateData::Density(m) => StateData::Density(DMatrix::from_fn(basis.len(), basis.len(), |i, j| {
                m[(basis[i], basis[j])]
            })),
        };
        Ok(Self {
            layout: target.clone(),
            data,
        })
    }

    /// Tensor product with subsystems of `other` appended after ours.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        if self.layout.is_restricted() || other.layout.is_restricted() {
            return Err(Error::LayoutMismatch("tensor product of restricted layouts".into()));
        }
        let subs: Vec<Subsystem> = self
            .layout
            .subsystems()
            .iter()
            .chain(other.layout.subsystems())
            .cloned()
            .collect();
        let layout = Arc::new(HilbertLayout::new(subs)?);
        let data = match (&self.data, &other.data) {
            (StateData::Ket(a), StateData::Ket(b)) => StateData::Ket(a.kronecker(b)),
            _ => {
                let a = self.to_density();
                let b = other.to_density();
                StateData::Density(a.as_density().unwrap().kronecker(b.as_density().unwrap()))
            }
        };
        Ok(Self { layout, data })
    }
}

pub(crate) fn min_eigenvalue(m: &DMatrix<C64>) -> f64 {
    let h = (m + m.adjoint()).scale(0.5);
    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// `op·ψ` for kets and `op·ρ·op†` for density matrices.
pub fn apply(op: &SparseOperator, state: &QuantumState) -> Result<QuantumState> {
    if !HilbertLayout::same_space(op.layout(), state.layout()) {
        return Err(Error::LayoutMismatch("operator and state act on different layouts".into()));
    }
    let data = match state.data() {
        StateData::Ket(v) => StateData::Ket(op.mul_vec(v)?),
        StateData::Density(m) => {
            let left = op.mul_dense(m)?;
            // (op · left†)† = left · op†
            StateData::Density(op.mul_dense(&left.adjoint())?.adjoint())
        }
    };
    Ok(QuantumState {
        layout: state.layout().clone(),
        data,
    })
}

/// Reduced density matrix over `keep`, in layout order.
pub fn partial_trace(state: &QuantumState, keep: &[&str]) -> Result<QuantumState> {
    let lifted = state.to_density().lift();
    let layout = lifted.layout().clone();
    let rho = lifted.as_density().unwrap();
    let reduced_layout = Arc::new(layout.select(keep)?);
    let keep_pos: Vec<usize> = (0..layout.subsystems().len())
        .filter(|&p| keep.contains(&layout.subsystems()[p].label.as_str()))
        .collect();
    let dk = reduced_layout.dim();
    let dt = layout.dim() / dk;

    // Group full indices by their traced-out digits.
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::with_capacity(dk); dt];
    for i in 0..layout.dim() {
        let (mut k, mut t) = (0, 0);
        for p in 0..layout.subsystems().len() {
            let d = layout.subsystems()[p].dim;
            let digit = layout.digit(i, p);
            if keep_pos.contains(&p) {
                k = k * d + digit;
            } else {
                t = t * d + digit;
            }
        }
        groups[t].push((k, i));
    }
    let mut out = DMatrix::zeros(dk, dk);
    for g in &groups {
        for &(kc, ic) in g {
            for &(kr, ir) in g {
                out[(kr, kc)] += rho[(ir, ic)];
            }
        }
    }
    QuantumState::density(reduced_layout, out)
}
