//! Fixed-step RK4 and adaptive Dormand–Prince 5(4) on flat complex arrays.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Steps per period of the fastest phase used when no step is given.
pub const DEFAULT_STEPS_PER_PERIOD: f64 = 50.0;
/// Coarsest resolution accepted: one step per 1/25 of the fastest period.
pub const MIN_STEPS_PER_PERIOD: f64 = 25.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    FixedRk4,
    /// Dormand–Prince 5(4); kets only.
    AdaptiveDp5,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Explicit step (s). `None` derives it from `steps_per_period`.
    pub max_step: Option<f64>,
    pub steps_per_period: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Times (s) at which diagnostics are recorded; `t_final` is always added.
    pub checkpoint_times: Vec<f64>,
    /// Compute the minimum eigenvalue of ρ at checkpoints.
    pub check_positivity: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::FixedRk4,
            max_step: None,
            steps_per_period: DEFAULT_STEPS_PER_PERIOD,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            checkpoint_times: Vec::new(),
            check_positivity: true,
        }
    }
}

impl IntegratorConfig {
    /// Step for a problem whose fastest angular frequency is `omega`.
    /// Infinite when `omega == 0` and no explicit step is set.
    pub fn resolve_step(&self, omega: f64) -> Result<f64> {
        if !(self.steps_per_period >= MIN_STEPS_PER_PERIOD) {
            return Err(Error::InvalidArgument(format!(
                "steps_per_period must be at least {MIN_STEPS_PER_PERIOD}, got {}",
                self.steps_per_period
            )));
        }
        let limit = if omega > 0.0 { TAU / (MIN_STEPS_PER_PERIOD * omega) } else { f64::INFINITY };
        match self.max_step {
            Some(h) if !(h > 0.0) => Err(Error::InvalidArgument(format!("max_step must be positive, got {h}"))),
            Some(h) if h > limit => Err(Error::StepTooLarge { requested: h, limit }),
            Some(h) => Ok(h),
            None if omega > 0.0 => Ok(TAU / (self.steps_per_period * omega)),
            None => Ok(f64::INFINITY),
        }
    }

    /// The same configuration at half the step.
    pub fn halved(&self) -> Self {
        Self {
            max_step: self.max_step.map(|h| h / 2.0),
            steps_per_period: self.steps_per_period * 2.0,
            ..self.clone()
        }
    }

    /// Sorted checkpoint list ending at `t_final`.
    pub(crate) fn checkpoints(&self, t_final: f64) -> Result<Vec<f64>> {
        if !(t_final >= 0.0) || !t_final.is_finite() {
            return Err(Error::InvalidArgument(format!("t_final must be finite and >= 0, got {t_final}")));
        }
        let mut ts = self.checkpoint_times.clone();
        if let Some(&bad) = ts.iter().find(|&&t| !(0.0..=t_final).contains(&t)) {
            return Err(Error::InvalidArgument(format!("checkpoint {bad} outside [0, {t_final}]")));
        }
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        if ts.last() != Some(&t_final) {
            ts.push(t_final);
        }
        Ok(ts)
    }
}

/// Number of equal steps covering `span` with steps no longer than `h`.
pub(crate) fn step_count(span: f64, h: f64) -> usize {
    if span <= 0.0 {
        0
    } else if h.is_infinite() {
        1
    } else {
        ((span / h) * (1.0 - 1e-12)).ceil().max(1.0) as usize
    }
}

pub(crate) struct Rk4 {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl Rk4 {
    pub(crate) fn new(len: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); len];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    pub(crate) fn step<F>(&mut self, f: &mut F, t: f64, h: f64, y: &mut [C64])
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let half = h / 2.0;
        f(t, y, &mut self.k1);
        axpy_into(&mut self.tmp, y, half, &self.k1);
        f(t + half, &self.tmp, &mut self.k2);
        axpy_into(&mut self.tmp, y, half, &self.k2);
        f(t + half, &self.tmp, &mut self.k3);
        axpy_into(&mut self.tmp, y, h, &self.k3);
        f(t + h, &self.tmp, &mut self.k4);
        let w = h / 6.0;
        for i in 0..y.len() {
            y[i] += (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]) * w;
        }
    }
}

fn axpy_into(out: &mut [C64], y: &[C64], a: f64, k: &[C64]) {
    for ((o, &yi), &ki) in out.iter_mut().zip(y).zip(k) {
        *o = yi + ki * a;
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

pub(crate) struct Dp5 {
    k: Vec<Vec<C64>>,
    tmp: Vec<C64>,
    /// Last accepted step, reused as the next trial.
    pub(crate) h: f64,
    pub(crate) accepted: usize,
    pub(crate) rejected: usize,
}

impl Dp5 {
    pub(crate) fn new(len: usize, h0: f64) -> Self {
        Self {
            k: vec![vec![C64::new(0.0, 0.0); len]; 7],
            tmp: vec![C64::new(0.0, 0.0); len],
            h: h0,
            accepted: 0,
            rejected: 0,
        }
    }

    /// Advance `y` from `t0` to `t1` exactly, steps capped at `h_max`.
    pub(crate) fn advance<F>(
        &mut self,
        f: &mut F,
        t0: f64,
        t1: f64,
        y: &mut [C64],
        h_max: f64,
        rel_tol: f64,
        abs_tol: f64,
    ) -> Result<()>
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let floor = 1e-13 * t1.abs().max(t1 - t0).max(f64::MIN_POSITIVE);
        let mut t = t0;
        while t < t1 {
            let mut h = self.h.min(h_max).min(t1 - t);
            let last = h >= t1 - t;
            if h < floor && !last {
                return Err(Error::StepSizeFloor { floor, time: t });
            }
            for s in 0..7 {
                for i in 0..y.len() {
                    let mut acc = y[i];
                    for (r, &a) in A[s].iter().enumerate().take(s) {
                        acc += self.k[r][i] * (a * h);
                    }
                    self.tmp[i] = acc;
                }
                let (tmp, k) = (&self.tmp, &mut self.k[s]);
                f(t + C[s] * h, tmp, k);
            }
            // Error estimate against the embedded 4th-order solution.
            let mut err: f64 = 0.0;
            for i in 0..y.len() {
                let mut y5 = y[i];
                let mut e = C64::new(0.0, 0.0);
                for s in 0..7 {
                    y5 += self.k[s][i] * (B5[s] * h);
                    e += self.k[s][i] * ((B5[s] - B4[s]) * h);
                }
                self.tmp[i] = y5;
                let scale = abs_tol + rel_tol * y[i].norm().max(y5.norm());
                err = err.max(e.norm() / scale);
            }
            if err <= 1.0 {
                y.copy_from_slice(&self.tmp);
                t = if last { t1 } else { t + h };
                self.accepted += 1;
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last || grow < 1.0 {
                    self.h = h * grow;
                }
            } else {
                self.rejected += 1;
                h *= if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
                if h < floor {
                    return Err(Error::StepSizeFloor { floor, time: t });
                }
                self.h = h;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // y' = iωy, exact solution e^{iωt}.
    fn rotor(omega: f64) -> impl FnMut(f64, &[C64], &mut [C64]) {
        move |_, y, dy| dy[0] = C64::new(0.0, omega) * y[0]
    }

    #[test]
    fn rk4_is_fourth_order() {
        let err = |n: usize| {
            let mut y = [C64::new(1.0, 0.0)];
            let mut rk = Rk4::new(1);
            let h = 1.0 / n as f64;
            for k in 0..n {
                rk.step(&mut rotor(3.0), k as f64 * h, h, &mut y);
            }
            (y[0] - C64::from_polar(1.0, 3.0)).norm()
        };
        let ratio = err(40) / err(80);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn dp5_meets_tolerance() {
        let mut y = [C64::new(1.0, 0.0)];
        let mut dp = Dp5::new(1, 0.1);
        dp.advance(&mut rotor(10.0), 0.0, 2.0, &mut y, 1.0, 1e-10, 1e-12).unwrap();
        assert!((y[0] - C64::from_polar(1.0, 20.0)).norm() < 1e-8);
        assert!(dp.accepted > 0);
    }

    #[test]
    fn dp5_step_floor() {
        // y' = y²·i blows up quickly; a tiny tolerance forces the floor.
        let mut f = |_: f64, y: &[C64], dy: &mut [C64]| dy[0] = y[0] * y[0] * 1e6;
        let mut y = [C64::new(1.0, 0.0)];
        let mut dp = Dp5::new(1, 1e-3);
        let r = dp.advance(&mut f, 0.0, 1.0, &mut y, 1.0, 1e-12, 1e-14);
        assert!(matches!(r, Err(Error::StepSizeFloor { .. })));
    }

    #[test]
    fn step_resolution() {
        let cfg = IntegratorConfig::default();
        let w = TAU * 1e9;
        assert!((cfg.resolve_step(w).unwrap() - 1e-9 / 50.0).abs() < 1e-24);
        assert!(cfg.resolve_step(0.0).unwrap().is_infinite());
        let explicit = IntegratorConfig {
            max_step: Some(1e-9 / 20.0),
            ..cfg.clone()
        };
        assert!(matches!(explicit.resolve_step(w), Err(Error::StepTooLarge { .. })));
        let coarse = IntegratorConfig {
            steps_per_period: 10.0,
            ..cfg.clone()
        };
        assert!(coarse.resolve_step(w).is_err());
        assert!((cfg.halved().resolve_step(w).unwrap() - 1e-9 / 100.0).abs() < 1e-24);
    }

    #[test]
    fn checkpoint_list() {
        let cfg = IntegratorConfig {
            checkpoint_times: vec![2.0, 1.0, 2.0],
            ..Default::default()
        };
        assert_eq!(cfg.checkpoints(3.0).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(cfg.checkpoints(2.0).unwrap(), vec![1.0, 2.0]);
        assert!(cfg.checkpoints(1.5).is_err());
        assert_eq!(step_count(1.0, 0.1), 10);
        assert_eq!(step_count(1.0, 0.3), 4);
        assert_eq!(step_count(0.0, 0.3), 0);
    }
}
