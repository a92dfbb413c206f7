//! Exact reduction to the invariant subspace of bounded excitation number.
//!
//! When every Hamiltonian term conserves `N_exc` and every jump operator
//! lowers it by a fixed amount (or leaves it unchanged), the span of product
//! states with `N_exc ≤ m` is invariant under the Lindblad flow. Starting from
//! a state inside it, evolving only that block gives the same ρ(t) as the
//! full space.

use std::sync::Arc;

use super::collapse::CollapseSet;
use crate::error::{Error, Result};
use crate::hamiltonians::{conserves_excitations, TimeDependentOperator};
use crate::hilbert::{HilbertLayout, QuantumState, SparseOperator, StateData};

/// Restricted layout holding the product states with `N_exc ≤ max_excitations`.
pub fn excitation_sector(layout: &HilbertLayout, max_excitations: usize) -> Result<Arc<HilbertLayout>> {
    let full = layout.unrestricted();
    let basis: Vec<usize> = (0..full.dim())
        .filter(|&i| full.excitation_number(i) <= max_excitations)
        .collect();
    Ok(Arc::new(full.restricted(basis)?))
}

/// The fixed change in `N_exc` produced by `op`, if every element shares it.
pub fn excitation_shift(op: &SparseOperator) -> Option<isize> {
    let l = op.layout();
    let mut shift = None;
    for (r, c, _) in op.triplets() {
        let s = l.excitation_number(l.full_index(r)) as isize - l.excitation_number(l.full_index(c)) as isize;
        match shift {
            None => shift = Some(s),
            Some(prev) if prev != s => return None,
            _ => {}
        }
    }
    Some(shift.unwrap_or(0))
}

/// Largest `N_exc` carrying weight in `state`.
pub fn max_excitation(state: &QuantumState) -> usize {
    let l = state.layout();
    let occupied: Vec<usize> = match state.data() {
        StateData::Ket(v) => (0..v.len()).filter(|&i| v[i].norm() > 0.0).collect(),
        StateData::Density(m) => (0..m.nrows()).filter(|&i| m[(i, i)].norm() > 0.0).collect(),
    };
    occupied
        .into_iter()
        .map(|i| l.excitation_number(l.full_index(i)))
        .max()
        .unwrap_or(0)
}

/// A problem moved onto its smallest invariant excitation sector.
#[derive(Clone, Debug)]
pub struct SectorProblem {
    pub layout: Arc<HilbertLayout>,
    pub hamiltonian: TimeDependentOperator,
    pub collapse: CollapseSet,
    pub initial: QuantumState,
    pub target: Option<QuantumState>,
}

/// Check the conservation structure and restrict every ingredient to the
/// sector `N_exc ≤ max N_exc(initial)`. Fails with `InvalidArgument` when the
/// reduction would not be exact.
pub fn reduce_to_sector(
    h: &TimeDependentOperator,
    collapse: &CollapseSet,
    initial: &QuantumState,
    target: Option<&QuantumState>,
) -> Result<SectorProblem> {
    let layout = h.layout();
    if layout.is_restricted() {
        return Err(Error::LayoutMismatch("sector reduction starts from the full layout".into()));
    }
    for (k, term) in h.terms().iter().enumerate() {
        if !conserves_excitations(&term.op) {
            return Err(Error::InvalidArgument(format!("Hamiltonian term {k} changes the excitation number")));
        }
    }
    for e in collapse.entries() {
        match excitation_shift(&e.op) {
            Some(s) if s <= 0 => {}
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "jump operator `{}` does not lower the excitation number uniformly",
                    e.label
                )))
            }
        }
    }
    let m = max_excitation(initial);
    let sector = excitation_sector(layout, m)?;
    let target = match target {
        Some(t) => Some(t.restrict(&sector)?),
        None => None,
    };
    Ok(SectorProblem {
        hamiltonian: h.restrict(&sector)?,
        collapse: collapse.restrict(&sector)?,
        initial: initial.restrict(&sector)?,
        target,
        layout: sector,
    })
}
