//! Device parameters, the matched-coupling design, and validity checks.
//!
//! All frequencies, detunings, couplings and rates are angular (rad/s); all
//! times are seconds. Detunings are signed, `δ = ω_qubit − ω_cavity`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fraction of `ω_10` by which the `|1⟩↔|2⟩` transition sits below `|0⟩↔|1⟩`
/// for a phase qutrit.
pub const PHASE_QUTRIT_ANHARMONICITY: f64 = 0.05;

/// Relaxation and dephasing rates (rad/s) for the register qutrits followed by
/// the coupler: every vector has length `n + 1`, index `n` is qutrit A.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QutritRates {
    /// `|1⟩ → |0⟩`.
    pub gamma10: Vec<f64>,
    /// `|2⟩ → |1⟩`.
    pub gamma21: Vec<f64>,
    /// `|2⟩ → |0⟩`.
    pub gamma20: Vec<f64>,
    /// Dephasing of `|1⟩`.
    pub gamma_phi1: Vec<f64>,
    /// Dephasing of `|2⟩`.
    pub gamma_phi2: Vec<f64>,
}

impl QutritRates {
    pub fn zero(n: usize) -> Self {
        let z = vec![0.0; n + 1];
        Self {
            gamma10: z.clone(),
            gamma21: z.clone(),
            gamma20: z.clone(),
            gamma_phi1: z.clone(),
            gamma_phi2: z,
        }
    }

    /// Same rates on every qutrit.
    pub fn uniform(n: usize, gamma10: f64, gamma21: f64, gamma20: f64, gamma_phi1: f64, gamma_phi2: f64) -> Self {
        Self {
            gamma10: vec![gamma10; n + 1],
            gamma21: vec![gamma21; n + 1],
            gamma20: vec![gamma20; n + 1],
            gamma_phi1: vec![gamma_phi1; n + 1],
            gamma_phi2: vec![gamma_phi2; n + 1],
        }
    }

    pub fn all(&self) -> impl Iterator<Item = f64> + '_ {
        self.gamma10
            .iter()
            .chain(&self.gamma21)
            .chain(&self.gamma20)
            .chain(&self.gamma_phi1)
            .chain(&self.gamma_phi2)
            .copied()
    }
}

/// Every physical parameter of one protocol instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    pub n: usize,
    /// 2 (qubits) or 3 (qutrits).
    pub qutrit_levels: usize,
    /// Fock truncation of every cavity.
    pub cavity_levels: usize,
    /// `δ_j`, register qubit j vs cavity j.
    pub delta: Vec<f64>,
    /// `δ_Aj`, coupler vs cavity j.
    pub delta_coupler: Vec<f64>,
    /// `g_j`, `|0⟩↔|1⟩` coupling of qubit j to cavity j.
    pub g: Vec<f64>,
    /// `g_Aj`.
    pub g_coupler: Vec<f64>,
    /// `g̃_j`, `|1⟩↔|2⟩` coupling.
    pub g21: Vec<f64>,
    /// `g̃_Aj`.
    pub g21_coupler: Vec<f64>,
    /// `δ̃_j = ω_21j − ω_cj`.
    pub delta21: Vec<f64>,
    /// `δ̃_Aj`.
    pub delta21_coupler: Vec<f64>,
    /// `Δ_kl = δ_l − δ_k`, the cavity frequency difference `ω_ck − ω_cl`.
    pub cavity_detuning: Vec<Vec<f64>>,
    /// Direct cavity-cavity couplings `g_kl`, symmetric with zero diagonal.
    pub g_cross: Vec<Vec<f64>>,
    /// Photon decay rate of each cavity.
    pub kappa: Vec<f64>,
    pub rates: QutritRates,
    /// `ω_10` of each register qutrit.
    pub omega_10: Vec<f64>,
    pub omega_10_coupler: f64,
    /// Cavity frequencies, used only for quality factors.
    pub cavity_frequency: Vec<f64>,
}

/// Closed-form quantities that follow from matched parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedQuantities {
    pub n: usize,
    /// Common Stark shift `χ = g_j²/δ_j`.
    pub chi: f64,
    /// Effective qubit–coupler exchange `λ = g_j g_Aj/δ_j` (signed).
    pub lambda: f64,
    /// Preparation time `π/(2√n|λ|)`.
    pub t_w: f64,
}

/// Inputs to [`derive_matched_params`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchedDesign {
    /// `δ_1..δ_n`, all of one sign.
    pub delta: Vec<f64>,
    /// Coupling of qubit 1 to cavity 1.
    pub g1: f64,
    /// `ω_10` per register qutrit (length 1 broadcasts).
    pub omega_10: Vec<f64>,
    pub omega_10_coupler: f64,
    pub qutrit_levels: usize,
    pub cavity_levels: usize,
}

impl MatchedDesign {
    /// Design with `g_1 = |δ_1|/b`.
    pub fn with_normalized_detuning(mut self, b: f64) -> Result<Self> {
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::InvalidArgument(format!("normalized detuning b = {b} must be positive")));
        }
        let d1 = *self.delta.first().ok_or_else(|| Error::InvalidArgument("empty detuning list".into()))?;
        self.g1 = d1.abs() / b;
        Ok(self)
    }
}

/// Apply the matching conditions: equal Stark shifts across registers,
/// `g_Aj = g_j/√n`, `δ_Aj = δ_j`, and the phase-qutrit `|1⟩↔|2⟩` values.
pub fn derive_matched_params(design: &MatchedDesign) -> Result<(DeviceParams, DerivedQuantities)> {
    let n = design.delta.len();
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one detuning".into()));
    }
    if let Some(j) = design.delta.iter().position(|&d| d == 0.0) {
        return Err(Error::ZeroDetuning { index: j + 1 });
    }
    if design.delta.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidArgument("detunings must be finite".into()));
    }
    let sign = design.delta[0].signum();
    if design.delta.iter().any(|d| d.signum() != sign) {
        return Err(Error::MixedSignDetunings);
    }
    if !(design.g1 > 0.0) || !design.g1.is_finite() {
        return Err(Error::InvalidArgument(format!("g1 = {} must be positive", design.g1)));
    }
    if !(2..=3).contains(&design.qutrit_levels) {
        return Err(Error::InvalidArgument("qutrit_levels must be 2 or 3".into()));
    }
    if design.cavity_levels < 2 {
        return Err(Error::InvalidArgument("cavity_levels must be at least 2".into()));
    }
    let omega_10 = broadcast(&design.omega_10, n, "omega_10")?;

    let d1 = design.delta[0];
    let root_n = (n as f64).sqrt();
    let g: Vec<f64> = design.delta.iter().map(|&d| design.g1 * (d / d1).sqrt()).collect();
    let g_coupler: Vec<f64> = g.iter().map(|&gj| gj / root_n).collect();
    let delta_coupler = design.delta.clone();
    let g21: Vec<f64> = g.iter().map(|&x| 2f64.sqrt() * x).collect();
    let g21_coupler: Vec<f64> = g_coupler.iter().map(|&x| 2f64.sqrt() * x).collect();
    let delta21: Vec<f64> = design
        .delta
        .iter()
        .zip(&omega_10)
        .map(|(&d, &w)| d - PHASE_QUTRIT_ANHARMONICITY * w)
        .collect();
    let delta21_coupler: Vec<f64> = delta_coupler
        .iter()
        .map(|&d| d - PHASE_QUTRIT_ANHARMONICITY * design.omega_10_coupler)
        .collect();
    let cavity_detuning = (0..n)
        .map(|k| (0..n).map(|l| design.delta[l] - design.delta[k]).collect())
        .collect();
    let cavity_frequency = omega_10.iter().zip(&design.delta).map(|(&w, &d)| w - d).collect();

    let params = DeviceParams {
        n,
        qutrit_levels: design.qutrit_levels,
        cavity_levels: design.cavity_levels,
        delta: design.delta.clone(),
        delta_coupler,
        g,
        g_coupler,
        g21,
        g21_coupler,
        delta21,
        delta21_coupler,
        cavity_detuning,
        g_cross: vec![vec![0.0; n]; n],
        kappa: vec![0.0; n],
        rates: QutritRates::zero(n),
        omega_10,
        omega_10_coupler: design.omega_10_coupler,
        cavity_frequency,
    };
    let derived = params.derived()?;
    Ok((params, derived))
}

fn broadcast(v: &[f64], n: usize, name: &str) -> Result<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; n]),
        len if len == n => Ok(v.to_vec()),
        len => Err(Error::InvalidArgument(format!("{name} has {len} entries, expected 1 or {n}"))),
    }
}

impl DeviceParams {
    /// `χ`, `λ` and `t_W` from qubit 1; meaningful when the parameters are
    /// matched (see [`DeviceParams::matching_residuals`]).
    pub fn derived(&self) -> Result<DerivedQuantities> {
        let chi = self.g[0] * self.g[0] / self.delta[0];
        let lambda = self.g[0] * self.g_coupler[0] / self.delta[0];
        Ok(DerivedQuantities {
            n: self.n,
            chi,
            lambda,
            t_w: crate::entanglement::preparation_time_for(self.n, lambda)?,
        })
    }

    /// Cavity-mediated qubit–coupler couplings
    /// `λ_j = (g_j g_Aj/2)(1/δ_j + 1/δ_Aj)`.
    pub fn lambda_j(&self) -> Vec<f64> {
        (0..self.n)
            .map(|j| 0.5 * self.g[j] * self.g_coupler[j] * (1.0 / self.delta[j] + 1.0 / self.delta_coupler[j]))
            .collect()
    }

    /// Relative deviations from the three matching conditions:
    /// equal register Stark shifts, coupler Stark shift equal to them, and
    /// equal exchange couplings.
    pub fn matching_residuals(&self) -> MatchingResiduals {
        let chi = self.g[0] * self.g[0] / self.delta[0];
        let stark = (0..self.n)
            .map(|j| ((self.g[j] * self.g[j] / self.delta[j] - chi) / chi).abs())
            .fold(0.0, f64::max);
        let coupler_sum: f64 = (0..self.n)
            .map(|j| self.g_coupler[j] * self.g_coupler[j] / self.delta_coupler[j])
            .sum();
        let coupler = ((coupler_sum - chi) / chi).abs();
        let lambda = self.g[0] * self.g_coupler[0] / self.delta[0];
        let exchange = (0..self.n)
            .map(|j| ((self.g[j] * self.g_coupler[j] / self.delta[j] - lambda) / lambda).abs())
            .fold(0.0, f64::max);
        MatchingResiduals {
            stark,
            coupler_stark: coupler,
            exchange,
        }
    }

    /// `max{g_A1, …, g_An}`.
    pub fn g_max(&self) -> f64 {
        self.g_coupler.iter().copied().fold(0.0, f64::max)
    }

    /// Set every `g_kl` (k ≠ l) to `g`.
    pub fn set_uniform_crosstalk(&mut self, g: f64) {
        for k in 0..self.n {
            for l in 0..self.n {
                self.g_cross[k][l] = if k == l { 0.0 } else { g };
            }
        }
    }

    pub fn set_kappa(&mut self, kappa: &[f64]) -> Result<()> {
        self.kappa = broadcast(kappa, self.n, "kappa")?;
        Ok(())
    }

    /// Check vector lengths, symmetry of `g_cross`, and non-negative rates.
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        let per_cavity: [(&str, &Vec<f64>); 10] = [
            ("delta", &self.delta),
            ("delta_coupler", &self.delta_coupler),
            ("g", &self.g),
            ("g_coupler", &self.g_coupler),
            ("g21", &self.g21),
            ("g21_coupler", &self.g21_coupler),
            ("delta21", &self.delta21),
            ("delta21_coupler", &self.delta21_coupler),
            ("kappa", &self.kappa),
            ("cavity_frequency", &self.cavity_frequency),
        ];
        for (name, v) in per_cavity {
            if v.len() != n {
                return Err(Error::InvalidArgument(format!("{name} has {} entries, expected {n}", v.len())));
            }
        }
        let r = &self.rates;
        for v in [&r.gamma10, &r.gamma21, &r.gamma20, &r.gamma_phi1, &r.gamma_phi2] {
            if v.len() != n + 1 {
                return Err(Error::InvalidArgument(format!("qutrit rate list has {} entries, expected {}", v.len(), n + 1)));
            }
        }
        if self.kappa.iter().copied().chain(r.all()).any(|x| x < 0.0 || !x.is_finite()) {
            return Err(Error::InvalidArgument("decoherence rates must be non-negative".into()));
        }
        if self.cavity_detuning.len() != n || self.g_cross.len() != n {
            return Err(Error::InvalidArgument("intercavity matrices must be n × n".into()));
        }
        for k in 0..n {
            if self.cavity_detuning[k].len() != n || self.g_cross[k].len() != n {
                return Err(Error::InvalidArgument("intercavity matrices must be n × n".into()));
            }
            for l in 0..n {
                let (a, b) = (self.g_cross[k][l], self.g_cross[l][k]);
                if a != b {
                    return Err(Error::CrosstalkAsymmetry { k: k + 1, l: l + 1, gkl: a, glk: b });
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchingResiduals {
    pub stark: f64,
    pub coupler_stark: f64,
    pub exchange: f64,
}

impl MatchingResiduals {
    pub fn max(&self) -> f64 {
        self.stark.max(self.coupler_stark).max(self.exchange)
    }
}

/// Thresholds that turn "≫" into a pass/fail decision.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Minimum `|δ|/g` for the dispersive regime.
    pub dispersive: f64,
    /// Minimum ratio for the no-coupler-induced-intercavity-coupling condition.
    pub cavity_isolation: f64,
    /// Required factor between a lifetime and `t_W`.
    pub lifetime: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            dispersive: 5.0,
            cavity_isolation: 5.0,
            lifetime: 5.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionEntry {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl ConditionEntry {
    fn at_least(name: String, value: f64, threshold: f64) -> Self {
        Self {
            name,
            value,
            threshold,
            pass: value >= threshold,
        }
    }
}

/// Evaluate the validity conditions of the protocol. Always returns a full
/// report; failures show up as `pass == false`.
///
/// * `dispersive q{j}` / `dispersive A-c{j}`: `|δ|/g`.
/// * `isolation c{j}-c{j+1}`: `|δ_A(j+1) − δ_Aj| / |(1/δ_Aj + 1/δ_A(j+1)) g_Aj g_A(j+1)|`.
/// * `cavity lifetime`: `T_cav = min_i κ_i⁻¹ / n` (one photon on average)
///   against `lifetime · t_W`.
/// * `qutrit coherence`: shortest `γ⁻¹` against `lifetime · t_W`.
pub fn condition_report(params: &DeviceParams, derived: &DerivedQuantities, th: &Thresholds) -> Vec<ConditionEntry> {
    let n = params.n;
    let mut out = Vec::new();
    for j in 0..n {
        out.push(ConditionEntry::at_least(
            format!("dispersive q{}", j + 1),
            ratio(params.delta[j].abs(), params.g[j]),
            th.dispersive,
        ));
    }
    for j in 0..n {
        out.push(ConditionEntry::at_least(
            format!("dispersive A-c{}", j + 1),
            ratio(params.delta_coupler[j].abs(), params.g_coupler[j]),
            th.dispersive,
        ));
    }
    for j in 0..n.saturating_sub(1) {
        let (da, db) = (params.delta_coupler[j], params.delta_coupler[j + 1]);
        let denom = ((1.0 / da + 1.0 / db) * params.g_coupler[j] * params.g_coupler[j + 1]).abs();
        out.push(ConditionEntry::at_least(
            format!("isolation c{}-c{}", j + 1, j + 2),
            ratio((db - da).abs(), denom),
            th.cavity_isolation,
        ));
    }
    let t_cav = params.kappa.iter().map(|&k| 1.0 / k).fold(f64::INFINITY, f64::min) / n as f64;
    out.push(ConditionEntry::at_least("cavity lifetime".into(), t_cav, th.lifetime * derived.t_w));
    let t_coh = params.rates.all().map(|g| 1.0 / g).fold(f64::INFINITY, f64::min);
    out.push(ConditionEntry::at_least("qutrit coherence".into(), t_coh, th.lifetime * derived.t_w));
    out
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// Capacitive crosstalk estimate `g_kl = max(g_Ak C_l, g_Al C_k) / C_Σ` with
/// `C_Σ = Σ C_j + C_q`. Returns a symmetric matrix with zero diagonal.
pub fn estimate_crosstalk(coupling_capacitance: &[f64], self_capacitance: f64, g_coupler: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = coupling_capacitance.len();
    if g_coupler.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: g_coupler.len(),
        });
    }
    if coupling_capacitance.iter().any(|&c| c < 0.0 || !c.is_finite()) {
        return Err(Error::InvalidArgument("coupling capacitances must be non-negative".into()));
    }
    if !(self_capacitance > 0.0) || !self_capacitance.is_finite() {
        return Err(Error::InvalidArgument("qutrit self-capacitance must be positive".into()));
    }
    let c_sigma: f64 = coupling_capacitance.iter().sum::<f64>() + self_capacitance;
    Ok((0..n)
        .map(|k| {
            (0..n)
                .map(|l| {
                    if k == l {
                        0.0
                    } else {
                        (g_coupler[k] * coupling_capacitance[l]).max(g_coupler[l] * coupling_capacitance[k]) / c_sigma
                    }
                })
                .collect()
        })
        .collect())
}

/// `Q = ω_c · κ⁻¹`.
pub fn quality_factor(omega_c: f64, kappa_inv: f64) -> Result<f64> {
    if !(omega_c > 0.0) || !(kappa_inv > 0.0) {
        return Err(Error::InvalidArgument("quality factor needs positive ω_c and κ⁻¹".into()));
    }
    Ok(omega_c * kappa_inv)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use std::f64::consts::PI;
    use crate::units::{ghz, mhz, to_ghz, to_mhz, us};

    pub(crate) fn operating_design(b: f64) -> MatchedDesign {
        MatchedDesign {
            delta: vec![ghz(-0.5), ghz(-1.0), ghz(-1.5)],
            g1: 0.0,
            omega_10: vec![ghz(6.5)],
            omega_10_coupler: ghz(6.5),
            qutrit_levels: 3,
            cavity_levels: 3,
        }
        .with_normalized_detuning(b)
        .unwrap()
    }

    #[test]
    fn reproduces_coupling_table() {
        let (p, _) = derive_matched_params(&operating_design(8.0)).unwrap();
        let g: Vec<f64> = p.g.iter().map(|&x| to_mhz(x)).collect();
        let ga: Vec<f64> = p.g_coupler.iter().map(|&x| to_mhz(x)).collect();
        for (got, want) in g.iter().chain(&ga).zip([62.5, 88.4, 108.3, 36.1, 51.0, 62.5]) {
            assert!((got - want).abs() < 0.1, "{got} vs {want}");
        }
        assert_eq!(p.delta_coupler, p.delta);
    }

    #[test]
    fn intercavity_detunings() {
        let (p, _) = derive_matched_params(&operating_design(8.0)).unwrap();
        assert!((to_ghz(p.cavity_detuning[0][1]) + 0.5).abs() < 1e-12);
        assert!((to_ghz(p.cavity_detuning[0][2]) + 1.0).abs() < 1e-12);
        assert!((to_ghz(p.cavity_detuning[1][2]) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn lambda_and_preparation_time() {
        // λ = g1 gA1/δ1 with g1 = 62.5 MHz, gA1 = 62.5/√3 MHz, δ1 = −500 MHz
        // → λ/2π = −4.5105 MHz and t_W = 1/(4√3 · 4.5105 MHz) = 32.0 ns.
        let (_, d) = derive_matched_params(&operating_design(8.0)).unwrap();
        assert!((to_mhz(d.lambda) + 4.51).abs() < 0.005);
        assert!((d.t_w * 1e9 - 32.0).abs() < 0.05);
        assert!((d.lambda - d.chi / 3f64.sqrt()).abs() <= 1e-12 * d.lambda.abs());
        assert_eq!(d.chi.signum(), -1.0);
    }

    #[test]
    fn matching_conditions_hold_to_rounding() {
        for b in [4.0, 8.0, 12.5] {
            let (p, _) = derive_matched_params(&operating_design(b)).unwrap();
            assert!(p.matching_residuals().max() < 1e-12);
        }
    }

    #[test]
    fn single_qubit_case() {
        let design = MatchedDesign {
            delta: vec![ghz(0.3)],
            g1: mhz(20.0),
            omega_10: vec![ghz(5.0)],
            omega_10_coupler: ghz(5.0),
            qutrit_levels: 2,
            cavity_levels: 2,
        };
        let (p, d) = derive_matched_params(&design).unwrap();
        assert_eq!(p.g_coupler[0], p.g[0]);
        let (g, delta) = (mhz(20.0), ghz(0.3));
        assert!((d.lambda - g * g / delta).abs() < 1e-9 * d.lambda);
        assert!((d.t_w - PI * delta / (2.0 * g * g)).abs() < 1e-12 * d.t_w);
    }

    #[test]
    fn rejects_bad_detunings() {
        let mut d = operating_design(8.0);
        d.delta[1] = -d.delta[1];
        assert!(matches!(derive_matched_params(&d), Err(Error::MixedSignDetunings)));
        d.delta[1] = 0.0;
        assert!(matches!(derive_matched_params(&d), Err(Error::ZeroDetuning { index: 2 })));
    }

    #[test]
    fn anharmonic_detunings() {
        let (p, _) = derive_matched_params(&operating_design(8.0)).unwrap();
        assert!((to_ghz(p.delta21[0]) - (-0.5 - 0.325)).abs() < 1e-12);
        assert!((to_ghz(p.delta21_coupler[2]) - (-1.5 - 0.325)).abs() < 1e-12);
        assert!((p.g21[1] / p.g[1] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn report_at_operating_point() {
        let (mut p, d) = derive_matched_params(&operating_design(8.0)).unwrap();
        p.set_kappa(&[1.0 / us(5.0)]).unwrap();
        p.rates = QutritRates::uniform(3, 1.0 / us(10.0), 1.0 / us(7.5), 1.0 / us(30.0), 1.0 / us(2.5), 1.0 / us(2.5));
        let r = condition_report(&p, &d, &Thresholds::default());
        assert!(r.iter().all(|e| e.pass), "{r:#?}");
        let disp = r.iter().find(|e| e.name == "dispersive q1").unwrap();
        assert!((disp.value - 8.0).abs() < 1e-12);
        let cav = r.iter().find(|e| e.name == "cavity lifetime").unwrap();
        assert!((cav.value - us(5.0) / 3.0).abs() < 1e-15);
        assert!(cav.value > 50.0 * d.t_w);
    }

    #[test]
    fn report_flags_failures_and_decoupled_limit() {
        let (mut p, d) = derive_matched_params(&operating_design(2.0)).unwrap();
        let r = condition_report(&p, &d, &Thresholds::default());
        assert!(!r.iter().find(|e| e.name == "dispersive q1").unwrap().pass);
        p.g_coupler = vec![0.0; 3];
        let r = condition_report(&p, &d, &Thresholds::default());
        for e in r.iter().filter(|e| e.name.starts_with("isolation")) {
            assert!(e.value.is_infinite() && e.pass);
        }
    }

    #[test]
    fn crosstalk_estimate() {
        let ga = [mhz(36.1), mhz(51.0), mhz(62.5)];
        let c = [1e-15; 3];
        let g = estimate_crosstalk(&c, 97e-15, &ga).unwrap();
        // C_Σ = 100 fF: g_kl = max(g_Ak, g_Al) · 0.01
        assert!((g[0][1] - 0.01 * ga[1]).abs() < 1e-9);
        assert!((g[0][2] - 0.01 * ga[2]).abs() < 1e-9);
        assert_eq!(g[1][2], g[2][1]);
        assert_eq!(g[0][0], 0.0);
        // Unequal capacitances: C = (2, 1, 0.5) fF, C_q = 96.5 fF → C_Σ = 100 fF;
        // g_12 = max(36.1·1, 51.0·2)/100 = 1.02 MHz.
        let g = estimate_crosstalk(&[2e-15, 1e-15, 0.5e-15], 96.5e-15, &ga).unwrap();
        assert!((to_mhz(g[0][1]) - 1.02).abs() < 1e-9);
        let g = estimate_crosstalk(&[0.0, 0.0, 1e-15], 97e-15, &ga).unwrap();
        assert_eq!(g[0][1], 0.0);
        assert!(estimate_crosstalk(&[-1e-15, 0.0, 0.0], 1e-13, &ga).is_err());
        assert!(estimate_crosstalk(&c, 0.0, &ga).is_err());
    }

    #[test]
    fn quality_factors() {
        let q1 = quality_factor(ghz(6.0), us(5.0)).unwrap();
        let q3 = quality_factor(ghz(5.0), us(5.0)).unwrap();
        assert!((q1 / 1.9e5 - 1.0).abs() < 0.01);
        assert!((q3 / 1.6e5 - 1.0).abs() < 0.02);
        assert_eq!(quality_factor(ghz(6.0), us(10.0)).unwrap(), 2.0 * q1);
        assert!(quality_factor(0.0, 1.0).is_err());
    }

    #[test]
    fn derivation_is_deterministic() {
        let a = derive_matched_params(&operating_design(7.3)).unwrap();
        let b = derive_matched_params(&operating_design(7.3)).unwrap();
        assert_eq!(a, b);
        let th = Thresholds::default();
        assert_eq!(condition_report(&a.0, &a.1, &th), condition_report(&b.0, &b.1, &th));
    }

    #[test]
    fn crosstalk_asymmetry_detected() {
        let (mut p, _) = derive_matched_params(&operating_design(8.0)).unwrap();
        p.validate().unwrap();
        p.g_cross[0][1] = 1.0;
        assert!(matches!(p.validate(), Err(Error::CrosstalkAsymmetry { .. })));
    }
}
