//! Complex sparse operators on a [`HilbertLayout`].
//!
//! Storage is compressed sparse rows: entries sorted row-major, duplicates
//! merged and exact zeros dropped, which is the canonical coordinate list in
//! compressed form.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::layout::HilbertLayout;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct SparseOperator {
    layout: Arc<HilbertLayout>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseOperator {
    pub fn from_triplets<I>(layout: Arc<HilbertLayout>, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let dim = layout.dim();
        let mut t: Vec<(usize, usize, C64)> = triplets.into_iter().collect();
        for &(r, c, _) in &t {
            if r >= dim || c >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.max(c),
                });
            }
        }
        t.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(t.len());
        for (r, c, v) in t {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|e| e.2 != C64::new(0.0, 0.0));
        Ok(Self::from_sorted(layout, merged))
    }

    fn from_sorted(layout: Arc<HilbertLayout>, entries: Vec<(usize, usize, C64)>) -> Self {
        let dim = layout.dim();
        let mut row_ptr = vec![0; dim + 1];
        for &(r, _, _) in &entries {
            row_ptr[r + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        let (cols, vals) = entries.into_iter().map(|(_, c, v)| (c, v)).unzip();
        Self {
            layout,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn zeros(layout: Arc<HilbertLayout>) -> Self {
        Self::from_sorted(layout, Vec::new())
    }

    pub fn identity(layout: Arc<HilbertLayout>) -> Self {
        let d = layout.dim();
        Self::from_sorted(layout, (0..d).map(|i| (i, i, C64::new(1.0, 0.0))).collect())
    }

    pub fn diagonal(layout: Arc<HilbertLayout>, diag: &[C64]) -> Result<Self> {
        if diag.len() != layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.dim(),
                found: diag.len(),
            });
        }
        Self::from_triplets(layout, diag.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    pub fn from_dense(layout: Arc<HilbertLayout>, m: &DMatrix<C64>) -> Result<Self> {
        let d = layout.dim();
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: m.nrows(),
            });
        }
        let t = (0..d).flat_map(|r| (0..d).map(move |c| (r, c))).map(|(r, c)| (r, c, m[(r, c)]));
        Self::from_triplets(layout, t)
    }

    pub fn layout(&self) -> &Arc<HilbertLayout> {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.cols
    }

    pub fn values(&self) -> &[C64] {
        &self.vals
    }

    /// Canonical coordinate list, row-major.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim()).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        let span = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.cols[span.clone()].binary_search(&col) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    fn check_layout(&self, other: &Self) -> Result<()> {
        if HilbertLayout::same_space(&self.layout, &other.layout) {
            Ok(())
        } else {
            Err(Error::LayoutMismatch("operators act on different layouts".into()))
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut t: Vec<_> = self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect();
        t.sort_unstable_by_key(|&(r, c, _)| (r, c));
        Self::from_sorted(self.layout.clone(), t)
    }

    pub fn scale(&self, s: C64) -> Self {
        if s == C64::new(0.0, 0.0) {
            return Self::zeros(self.layout.clone());
        }
        Self {
            vals: self.vals.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_layout(other)?;
        Self::from_triplets(self.layout.clone(), self.triplets().chain(other.triplets()))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Sparse-sparse product `self · other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_layout(other)?;
        let d = self.dim();
        let mut acc = vec![C64::new(0.0, 0.0); d];
        let mut mark = vec![usize::MAX; d];
        let mut touched = Vec::new();
        let mut entries = Vec::new();
        for r in 0..d {
            touched.clear();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let (mid, a) = (self.cols[k], self.vals[k]);
                for m in other.row_ptr[mid]..other.row_ptr[mid + 1] {
                    let c = other.cols[m];
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = C64::new(0.0, 0.0);
                        touched.push(c);
                    }
                    acc[c] += a * other.vals[m];
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                if acc[c] != C64::new(0.0, 0.0) {
                    entries.push((r, c, acc[c]));
                }
            }
        }
        Ok(Self::from_sorted(self.layout.clone(), entries))
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    pub fn mul_vec(&self, v: &DVector<C64>) -> Result<DVector<C64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        let mut out = DVector::zeros(self.dim());
        csr_mul_vec(&self.row_ptr, &self.cols, &self.vals, v.as_slice(), out.as_mut_slice());
        Ok(out)
    }

    /// Sparse-dense product `self · m`.
    pub fn mul_dense(&self, m: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        if m.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: m.nrows(),
            });
        }
        let mut out = DMatrix::zeros(self.dim(), m.ncols());
        csr_mul_colmajor(&self.row_ptr, &self.cols, &self.vals, m.as_slice(), out.as_mut_slice());
        Ok(out)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    /// `‖M − M†‖_max`.
    pub fn hermiticity_deviation(&self) -> f64 {
        self.triplets()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Keep only entries whose row and column lie in the restricted basis of
    /// `target`, reindexed to that basis.
    pub fn restrict(&self, target: &Arc<HilbertLayout>) -> Result<Self> {
        if self.layout.is_restricted() || target.unrestricted() != *self.layout {
            return Err(Error::LayoutMismatch(
                "restriction needs an operator on the parent product layout".into(),
            ));
        }
        let t = self.triplets().filter_map(|(r, c, v)| {
            Some((target.local_index(r)?, target.local_index(c)?, v))
        });
        Self::from_triplets(target.clone(), t)
    }
}

/// `‖AB − BA‖_max`.
pub fn mat_commutator_norm(a: &SparseOperator, b: &SparseOperator) -> Result<f64> {
    Ok(a.commutator(b)?.max_abs())
}

pub(crate) fn csr_mul_vec(row_ptr: &[usize], cols: &[usize], vals: &[C64], x: &[C64], y: &mut [C64]) {
    for (r, yr) in y.iter_mut().enumerate() {
        let mut s = C64::new(0.0, 0.0);
        for k in row_ptr[r]..row_ptr[r + 1] {
            s += vals[k] * x[cols[k]];
        }
        *yr = s;
    }
}

/// `out = A · m` for column-major dense `m` with `dim` rows.
pub(crate) fn csr_mul_colmajor(row_ptr: &[usize], cols: &[usize], vals: &[C64], m: &[C64], out: &mut [C64]) {
    let d = row_ptr.len() - 1;
    for (mc, oc) in m.chunks_exact(d).zip(out.chunks_exact_mut(d)) {
        csr_mul_vec(row_ptr, cols, vals, mc, oc);
    }
}

/// Embed a local operator on subsystem `target` into the full layout as
/// `I ⊗ … ⊗ local ⊗ … ⊗ I`.
pub fn embed(local: &DMatrix<C64>, target: &str, layout: &Arc<HilbertLayout>) -> Result<SparseOperator> {
    if layout.is_restricted() {
        return Err(Error::LayoutMismatch("cannot embed into a restricted layout".into()));
    }
    let pos = layout.position(target)?;
    let dt = layout.subsystems()[pos].dim;
    if local.nrows() != dt || local.ncols() != dt {
        return Err(Error::DimensionMismatch {
            expected: dt,
            found: local.nrows(),
        });
    }
    let stride = layout.stride(pos);
    let outer = layout.total_dim() / (dt * stride);
    let local_nz: Vec<(usize, usize, C64)> = (0..dt)
        .flat_map(|a| (0..dt).map(move |b| (a, b)))
        .map(|(a, b)| (a, b, local[(a, b)]))
        .filter(|e| e.2 != C64::new(0.0, 0.0))
        .collect();
    let mut t = Vec::with_capacity(local_nz.len() * outer * stride);
    for hi in 0..outer {
        for lo in 0..stride {
            let base = hi * dt * stride + lo;
            for &(a, b, v) in &local_nz {
                t.push((base + a * stride, base + b * stride, v));
            }
        }
    }
    SparseOperator::from_triplets(layout.clone(), t)
}
