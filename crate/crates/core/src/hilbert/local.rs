//! Dense single-subsystem operators.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub fn identity(dim: usize) -> DMatrix<C64> {
    DMatrix::identity(dim, dim)
}

/// Truncated bosonic lowering operator: `(k−1, k)` entry `√k`.
pub fn annihilation(dim: usize) -> Result<DMatrix<C64>> {
    if dim < 2 {
        return Err(Error::InvalidArgument(format!("annihilation needs dim >= 2, got {dim}")));
    }
    let mut m = DMatrix::zeros(dim, dim);
    for k in 1..dim {
        m[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    Ok(m)
}

/// `|to⟩⟨from|`.
pub fn transition(dim: usize, to: usize, from: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(dim, dim);
    m[(to, from)] = C64::new(1.0, 0.0);
    m
}

/// `|k⟩⟨k|`.
pub fn projector(dim: usize, k: usize) -> DMatrix<C64> {
    transition(dim, k, k)
}

/// `Σ_k k |k⟩⟨k|`.
pub fn number(dim: usize) -> DMatrix<C64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |k, _| C64::new(k as f64, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annihilation_small_dims() {
        let a2 = annihilation(2).unwrap();
        assert_eq!(a2[(0, 1)], C64::new(1.0, 0.0));
        assert_eq!(a2.iter().filter(|v| v.norm() > 0.0).count(), 1);
        let a3 = annihilation(3).unwrap();
        assert_eq!(a3[(0, 1)].re, 1.0);
        assert_eq!(a3[(1, 2)].re, 2f64.sqrt());
        assert!(annihilation(1).is_err());
    }

    #[test]
    fn number_operator_from_ladder() {
        let a = annihilation(3).unwrap();
        let n = a.adjoint() * &a;
        assert!((n[(2, 2)].re - 2.0).abs() < 1e-15);
        assert!((n - number(3)).camax() < 1e-15);
    }
}
