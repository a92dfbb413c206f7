use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::device::DeviceParams;
use crate::error::{Error, Result};
use crate::hilbert::{embed, local, HilbertLayout, SparseOperator, COUPLER_LABEL};

#[derive(Clone, Debug)]
pub struct CollapseOperator {
    /// Human-readable name such as `kappa c1` or `gamma21 A`.
    pub label: String,
    pub op: SparseOperator,
    /// rad/s.
    pub rate: f64,
}

/// Jump operators and rates of a Lindblad dissipator
/// `Σ rate (L ρ L† − L†L ρ/2 − ρ L†L/2)`.
#[derive(Clone, Debug)]
pub struct CollapseSet {
    layout: Arc<HilbertLayout>,
    entries: Vec<CollapseOperator>,
}

impl CollapseSet {
    pub fn empty(layout: Arc<HilbertLayout>) -> Self {
        Self {
            layout,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, label: impl Into<String>, op: SparseOperator, rate: f64) -> Result<()> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::InvalidArgument(format!("collapse rate must be finite and >= 0, got {rate}")));
        }
        if !HilbertLayout::same_space(&self.layout, op.layout()) {
            return Err(Error::LayoutMismatch("collapse operator on a different layout".into()));
        }
        self.entries.push(CollapseOperator {
            label: label.into(),
            op,
            rate,
        });
        Ok(())
    }

    pub fn layout(&self) -> &Arc<HilbertLayout> {
        &self.layout
    }

    pub fn entries(&self) -> &[CollapseOperator] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Cavity decay `a_j` at `κ_j`, qutrit relaxation `|0⟩⟨1|`, `|1⟩⟨2|`,
    /// `|0⟩⟨2|` and dephasing `|1⟩⟨1|`, `|2⟩⟨2|` for every register qutrit and
    /// the coupler. Zero rates are left out; `|2⟩` channels only exist for
    /// 3-level qutrits.
    pub fn from_params(params: &DeviceParams, layout: &Arc<HilbertLayout>) -> Result<Self> {
        params.validate()?;
        let expected = HilbertLayout::device(params.n, params.qutrit_levels, params.cavity_levels)?;
        if **layout != expected {
            return Err(Error::LayoutMismatch("collapse set needs the canonical device layout".into()));
        }
        let mut set = Self::empty(layout.clone());
        for j in 0..params.n {
            let label = format!("c{}", j + 1);
            let a = embed(&local::annihilation(params.cavity_levels)?, &label, layout)?;
            set.push_nonzero(format!("kappa {label}"), a, params.kappa[j])?;
        }
        let d = params.qutrit_levels;
        let r = &params.rates;
        for q in 0..=params.n {
            let label = if q == params.n { COUPLER_LABEL.to_string() } else { format!("q{}", q + 1) };
            let op = |m| embed(&m, &label, layout);
            set.push_nonzero(format!("gamma10 {label}"), op(local::transition(d, 0, 1))?, r.gamma10[q])?;
            set.push_nonzero(format!("gamma_phi1 {label}"), op(local::projector(d, 1))?, r.gamma_phi1[q])?;
            if d >= 3 {
                set.push_nonzero(format!("gamma21 {label}"), op(local::transition(d, 1, 2))?, r.gamma21[q])?;
                set.push_nonzero(format!("gamma20 {label}"), op(local::transition(d, 0, 2))?, r.gamma20[q])?;
                set.push_nonzero(format!("gamma_phi2 {label}"), op(local::projector(d, 2))?, r.gamma_phi2[q])?;
            }
        }
        Ok(set)
    }

    fn push_nonzero(&mut self, label: String, op: SparseOperator, rate: f64) -> Result<()> {
        if rate > 0.0 {
            self.push(label, op, rate)
        } else if rate == 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("negative rate for {label}")))
        }
    }

    /// `−(i/2) Σ rate L†L`, the anti-Hermitian part of the effective
    /// non-unitary generator.
    pub(crate) fn anti_hermitian_part(&self) -> Result<SparseOperator> {
        let mut sum = SparseOperator::zeros(self.layout.clone());
        for e in &self.entries {
            let ll = e.op.adjoint().matmul(&e.op)?;
            sum = sum.add(&ll.scale(C64::new(0.0, -0.5 * e.rate)))?;
        }
        Ok(sum)
    }

    /// Sum of rates weighted by `‖L‖²_max`, a bound on the dissipative rate.
    pub(crate) fn rate_scale(&self) -> f64 {
        self.entries.iter().map(|e| e.rate * e.op.max_abs().powi(2)).sum()
    }

    pub fn restrict(&self, target: &Arc<HilbertLayout>) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|e| {
                Ok(CollapseOperator {
                    op: e.op.restrict(target)?,
                    ..e.clone()
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            layout: target.clone(),
            entries,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::tests::operating_design;
    use crate::device::{derive_matched_params, QutritRates};

    #[test]
    fn channel_counts() {
        let (mut p, _) = derive_matched_params(&operating_design(8.0)).unwrap();
        let l = Arc::new(HilbertLayout::device(3, 3, 3).unwrap());
        assert!(CollapseSet::from_params(&p, &l).unwrap().is_empty());
        p.kappa = vec![2e5; 3];
        p.rates = QutritRates::uniform(3, 1e5, 1.3e5, 3e4, 4e5, 4e5);
        let c = CollapseSet::from_params(&p, &l).unwrap();
        assert_eq!(c.entries().len(), 3 + 4 * 5);
        let mut q = p.clone();
        q.qutrit_levels = 2;
        let l2 = Arc::new(HilbertLayout::device(3, 2, 3).unwrap());
        assert_eq!(CollapseSet::from_params(&q, &l2).unwrap().entries().len(), 3 + 4 * 2);
        assert!(CollapseSet::from_params(&q, &l).is_err());
    }

    #[test]
    fn rejects_bad_rates() {
        let l = Arc::new(HilbertLayout::device(1, 2, 2).unwrap());
        let mut c = CollapseSet::empty(l.clone());
        let op = SparseOperator::identity(l);
        assert!(c.push("x", op.clone(), -1.0).is_err());
        assert!(c.push("x", op.clone(), f64::NAN).is_err());
        let other = Arc::new(HilbertLayout::device(1, 3, 2).unwrap());
        assert!(c.push("x", SparseOperator::identity(other), 1.0).is_err());
        c.push("x", op, 1.0).unwrap();
    }
}
