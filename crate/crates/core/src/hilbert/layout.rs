//! Ordered tensor-product layouts and basis-index arithmetic.
//!
//! Basis states are numbered row-major over the subsystem list: the first
//! subsystem is the most significant digit. For the canonical device layout
//! `(q1, .., qn, A, c1, .., cn)` a bit string such as `|100⟩` therefore puts
//! qubit 1 in `|1⟩`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical role of a subsystem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubsystemKind {
    /// A d-level artificial atom (qubit for d = 2, qutrit for d = 3).
    Qutrit,
    /// A bosonic cavity mode truncated to `dim` Fock states.
    Cavity,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Subsystem {
    pub label: String,
    pub kind: SubsystemKind,
    pub dim: usize,
}

impl Subsystem {
    pub fn new(label: impl Into<String>, kind: SubsystemKind, dim: usize) -> Self {
        Self {
            label: label.into(),
            kind,
            dim,
        }
    }
}

/// An ordered list of subsystems, optionally restricted to a subset of the
/// product basis.
///
/// The restriction is used for invariant subspaces (for example a fixed
/// excitation sector); operators and states on a restricted layout are
/// indexed by position in [`HilbertLayout::basis`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HilbertLayout {
    subsystems: Vec<Subsystem>,
    strides: Vec<usize>,
    total_dim: usize,
    basis: Option<Vec<usize>>,
}

impl HilbertLayout {
    pub fn new(subsystems: Vec<Subsystem>) -> Result<Self> {
        for (i, s) in subsystems.iter().enumerate() {
            if s.dim == 0 {
                return Err(Error::InvalidArgument(format!("subsystem `{}` has dimension 0", s.label)));
            }
            if subsystems[..i].iter().any(|o| o.label == s.label) {
                return Err(Error::DuplicateLabel(s.label.clone()));
            }
        }
        let mut strides = vec![1; subsystems.len()];
        for i in (0..subsystems.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * subsystems[i + 1].dim;
        }
        // An empty list is the one-dimensional scalar space.
        let total_dim = subsystems.iter().map(|s| s.dim).product();
        Ok(Self {
            subsystems,
            strides,
            total_dim,
            basis: None,
        })
    }

    /// Canonical device layout: `q1..qn` (qutrits), `A` (coupler), `c1..cn`
    /// (cavities).
    pub fn device(n: usize, qutrit_levels: usize, cavity_levels: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("need at least one register qubit".into()));
        }
        let mut subs = Vec::with_capacity(2 * n + 1);
        for j in 1..=n {
            subs.push(Subsystem::new(format!("q{j}"), SubsystemKind::Qutrit, qutrit_levels));
        }
        subs.push(Subsystem::new(COUPLER_LABEL, SubsystemKind::Qutrit, qutrit_levels));
        for j in 1..=n {
            subs.push(Subsystem::new(format!("c{j}"), SubsystemKind::Cavity, cavity_levels));
        }
        Self::new(subs)
    }

    /// `n` register qubits followed by the coupler, all two-level, no cavities.
    pub fn qubits_with_coupler(n: usize) -> Result<Self> {
        let mut subs: Vec<_> = (1..=n)
            .map(|j| Subsystem::new(format!("q{j}"), SubsystemKind::Qutrit, 2))
            .collect();
        subs.push(Subsystem::new(COUPLER_LABEL, SubsystemKind::Qutrit, 2));
        Self::new(subs)
    }

    /// Restrict to the listed product-basis indices (sorted, deduplicated).
    pub fn restricted(&self, mut basis: Vec<usize>) -> Result<Self> {
        if self.basis.is_some() {
            return Err(Error::LayoutMismatch("layout is already restricted".into()));
        }
        basis.sort_unstable();
        basis.dedup();
        if basis.is_empty() {
            return Err(Error::InvalidArgument("restricted basis is empty".into()));
        }
        if let Some(&bad) = basis.iter().find(|&&i| i >= self.total_dim) {
            return Err(Error::DimensionMismatch {
                expected: self.total_dim,
                found: bad,
            });
        }
        Ok(Self {
            basis: Some(basis),
            ..self.clone()
        })
    }

    /// The same subsystem list without any basis restriction.
    pub fn unrestricted(&self) -> Self {
        Self {
            basis: None,
            ..self.clone()
        }
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    /// Product of all subsystem dimensions.
    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    /// Dimension of the space operators and states actually live on.
    pub fn dim(&self) -> usize {
        self.basis.as_ref().map_or(self.total_dim, Vec::len)
    }

    pub fn basis(&self) -> Option<&[usize]> {
        self.basis.as_deref()
    }

    pub fn is_restricted(&self) -> bool {
        self.basis.is_some()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.subsystems
            .iter()
            .position(|s| s.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn subsystem(&self, label: &str) -> Result<&Subsystem> {
        Ok(&self.subsystems[self.position(label)?])
    }

    pub fn stride(&self, pos: usize) -> usize {
        self.strides[pos]
    }

    /// Level of subsystem `pos` in product-basis state `index`.
    pub fn digit(&self, index: usize, pos: usize) -> usize {
        (index / self.strides[pos]) % self.subsystems[pos].dim
    }

    pub fn digits(&self, index: usize) -> Vec<usize> {
        (0..self.subsystems.len()).map(|p| self.digit(index, p)).collect()
    }

    pub fn index_of(&self, levels: &[usize]) -> Result<usize> {
        if levels.len() != self.subsystems.len() {
            return Err(Error::DimensionMismatch {
                expected: self.subsystems.len(),
                found: levels.len(),
            });
        }
        let mut idx = 0;
        for (p, (&lv, s)) in levels.iter().zip(&self.subsystems).enumerate() {
            if lv >= s.dim {
                return Err(Error::InvalidArgument(format!(
                    "level {lv} out of range for `{}` (dim {})",
                    s.label, s.dim
                )));
            }
            idx += lv * self.strides[p];
        }
        Ok(idx)
    }

    /// Product-basis index for the given labelled levels; unnamed subsystems
    /// are in level 0.
    pub fn index_with(&self, excited: &[(&str, usize)]) -> Result<usize> {
        let mut levels = vec![0; self.subsystems.len()];
        for &(label, lv) in excited {
            levels[self.position(label)?] = lv;
        }
        self.index_of(&levels)
    }

    /// Map a product-basis index to the position in this layout's basis.
    pub fn local_index(&self, full_index: usize) -> Option<usize> {
        match &self.basis {
            None => (full_index < self.total_dim).then_some(full_index),
            Some(b) => b.binary_search(&full_index).ok(),
        }
    }

    /// Product-basis index of position `i` in this layout's basis.
    pub fn full_index(&self, i: usize) -> usize {
        self.basis.as_ref().map_or(i, |b| b[i])
    }

    /// Sum of subsystem levels; equals the eigenvalue of
    /// `Σ a†a + Σ (|1⟩⟨1| + 2|2⟩⟨2|)` on the product basis state.
    pub fn excitation_number(&self, full_index: usize) -> usize {
        (0..self.subsystems.len()).map(|p| self.digit(full_index, p)).sum()
    }

    /// Sub-layout holding the given labels in this layout's order.
    pub fn select(&self, keep: &[&str]) -> Result<Self> {
        for l in keep {
            self.position(l)?;
        }
        let subs: Vec<_> = self
            .subsystems
            .iter()
            .filter(|s| keep.contains(&s.label.as_str()))
            .cloned()
            .collect();
        Self::new(subs)
    }

    pub fn same_space(a: &Arc<Self>, b: &Arc<Self>) -> bool {
        Arc::ptr_eq(a, b) || a == b
    }
}

pub const COUPLER_LABEL: &str = "A";
