//! The one-step W-state protocol: start from `|0…0⟩|1⟩_A ⊗ vacuum`, evolve
//! under one of three models, and track the fidelity with `|W⟩|0⟩_A ⊗ vacuum`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::device::DeviceParams;
use crate::dynamics::{
    evolve_master, evolve_schrodinger, reduce_to_sector, Checkpoint, CollapseSet, IntegratorConfig,
};
use crate::entanglement::target_state;
use crate::error::{Error, Result};
use crate::hamiltonians::{build_full, build_h0, build_h_eff, build_h_tilde_int, system_layout, TimeDependentOperator};
use crate::hilbert::{HilbertLayout, QuantumState, COUPLER_LABEL};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// `H_I`, optionally plus `Θ_I`, on qutrits and cavities.
    #[default]
    Full,
    /// The dispersive effective Hamiltonian on qutrits and cavities.
    Effective,
    /// `H_0 + H̃_int` on the qubits and coupler only; losses are ignored.
    Ideal,
}

impl std::str::FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "full" => Ok(Model::Full),
            "effective" => Ok(Model::Effective),
            "ideal" => Ok(Model::Ideal),
            _ => Err(format!("unknown model `{s}` (expected full, effective or ideal)")),
        }
    }
}

/// Which space the integrator works in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    /// The invariant subspace with at most one excitation. Exact for these
    /// Hamiltonians and jump operators.
    #[default]
    Sector,
    /// The whole product space.
    Full,
}

impl std::str::FromStr for Basis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sector" => Ok(Basis::Sector),
            "full" => Ok(Basis::Full),
            _ => Err(format!("unknown basis `{s}` (expected sector or full)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub model: Model,
    pub include_theta: bool,
    pub include_losses: bool,
    pub basis: Basis,
    pub integrator: IntegratorConfig,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            model: Model::Full,
            include_theta: true,
            include_losses: true,
            basis: Basis::Sector,
            integrator: IntegratorConfig::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    /// Dimension of the space actually integrated.
    pub dim: usize,
    /// Fidelity with the target at every checkpoint, `t_final` last.
    pub checkpoints: Vec<Checkpoint>,
    pub final_state: QuantumState,
    pub steps: usize,
    pub max_symmetrization: f64,
    /// Ket runs only.
    pub norm_drift: Option<f64>,
}

impl Trajectory {
    pub fn final_fidelity(&self) -> f64 {
        self.checkpoints.last().and_then(|c| c.fidelity).unwrap_or(f64::NAN)
    }
}

/// `|0…0⟩|1⟩_A ⊗ vacuum` on any layout holding `A`.
pub fn initial_state(layout: &Arc<HilbertLayout>) -> Result<QuantumState> {
    let full = Arc::new(layout.unrestricted());
    let idx = full.index_with(&[(COUPLER_LABEL, 1)])?;
    QuantumState::basis_ket(layout.clone(), idx)
}

/// Run the protocol from 0 to `t_final`.
pub fn run_protocol(params: &DeviceParams, t_final: f64, opts: &RunOptions) -> Result<Trajectory> {
    let (layout, h) = match opts.model {
        Model::Full => {
            let l = system_layout(params)?;
            let h = build_full(params, &l, opts.include_theta)?;
            (l, h)
        }
        Model::Effective => {
            let l = system_layout(params)?;
            let h = build_h_eff(params, &l)?;
            (l, h)
        }
        Model::Ideal => {
            let l = Arc::new(HilbertLayout::qubits_with_coupler(params.n)?);
            let h = build_h0(params, &l)?.add(&build_h_tilde_int(params, &l)?)?;
            (l.clone(), TimeDependentOperator::constant(h)?)
        }
    };
    let collapse = if opts.include_losses && opts.model != Model::Ideal {
        CollapseSet::from_params(params, &layout)?
    } else {
        CollapseSet::empty(layout.clone())
    };
    let psi0 = initial_state(&layout)?;
    let target = target_state(&layout, params.n)?;
    let (h, collapse, psi0, target) = match opts.basis {
        Basis::Full => (h, collapse, psi0, target),
        Basis::Sector => {
            let p = reduce_to_sector(&h, &collapse, &psi0, Some(&target))?;
            let target = p.target.ok_or_else(|| Error::InvalidArgument("sector target missing".into()))?;
            (p.hamiltonian, p.collapse, p.initial, target)
        }
    };
    let dim = psi0.dim();

    if collapse.is_empty() {
        let run = evolve_schrodinger(&psi0, &h, t_final, &opts.integrator)?;
        let tv = target.as_ket().unwrap();
        let checkpoints = run
            .samples
            .iter()
            .map(|s| Checkpoint {
                time: s.time,
                trace: s.norm * s.norm,
                min_eig: None,
                fidelity: Some(tv.dotc(&s.state).norm_sqr()),
            })
            .collect();
        Ok(Trajectory {
            dim,
            checkpoints,
            final_state: run.state,
            steps: run.steps,
            max_symmetrization: 0.0,
            norm_drift: Some(run.norm_drift),
        })
    } else {
        let rho0 = psi0.to_density();
        let run = evolve_master(&rho0, &h, None, &collapse, t_final, &opts.integrator, Some(&target))?;
        Ok(Trajectory {
            dim,
            checkpoints: run.checkpoints,
            final_state: run.state,
            steps: run.steps,
            max_symmetrization: run.max_symmetrization,
            norm_drift: None,
        })
    }
}
