//! Closed-form evolution of `|0…0⟩|1⟩_A` under `H_0 + H̃_int`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticIdealState {
    /// Amplitude of `|0…0⟩|1⟩_A`.
    pub c_ground: C64,
    /// Amplitude of `|W⟩|0⟩_A`.
    pub c_w: C64,
}

impl AnalyticIdealState {
    pub fn norm_sqr(&self) -> f64 {
        self.c_ground.norm_sqr() + self.c_w.norm_sqr()
    }
}

/// `c_ground = e^{−iχt} cos(√n λt)`, `c_W = −i e^{−iχt} sin(√n λt)`.
pub fn analytic_evolution(n: usize, chi: f64, lambda: f64, t: f64) -> Result<AnalyticIdealState> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let phase = C64::from_polar(1.0, -chi * t);
    let theta = (n as f64).sqrt() * lambda * t;
    Ok(AnalyticIdealState {
        c_ground: phase * theta.cos(),
        c_w: phase * C64::new(0.0, -theta.sin()),
    })
}
