//! JSON report types for `estimate` and `model-info`, plus the glue that
//! produces them from a parsed model descriptor.

use serde::{Deserialize, Serialize};

use zeno_core::estimator::{estimate_adaptive, CouplingKind};
use zeno_core::models::{build_shifted, summarize};
use zeno_core::protocol::validity_margin;

use crate::descriptor::ModelFile;
use crate::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfoReport {
    pub dim: usize,
    pub delta_h_ee: f64,
    pub omega_bar: f64,
    pub h_ee_shift: f64,
}

pub fn model_info(file: &ModelFile) -> Result<ModelInfoReport, Failure> {
    let descriptor = file.to_descriptor().map_err(Failure::Usage)?;
    let model = build_shifted(&descriptor).map_err(crate::classify_core)?;
    let s = summarize(&model);
    Ok(ModelInfoReport {
        dim: s.dim,
        delta_h_ee: s.delta_h_ee,
        omega_bar: s.omega_bar,
        h_ee_shift: s.h_ee_shift,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateConfigEcho {
    pub model: ModelFile,
    pub tau: f64,
    pub nu: f64,
    pub budget: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub margin: f64,
    pub tau_omega_bar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedReport {
    /// "rabi_omega" for two-level models, "continuum_rms" for continua.
    pub kind: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub config: EstimateConfigEcho,
    pub validity: ValidityReport,
    pub n_phi_hat: f64,
    pub phi_hat: f64,
    pub delta_h_hat: f64,
    pub derived: Option<DerivedReport>,
    pub survived_rounds: u64,
    pub total_rounds: u64,
    pub ci95_delta_h: [f64; 2],
    pub n_cycles_used: f64,
    pub converged: bool,
}

pub fn estimate(
    file: &ModelFile,
    tau: f64,
    nu: f64,
    budget: u64,
    seed: u64,
) -> Result<EstimateReport, Failure> {
    let descriptor = file.to_descriptor().map_err(Failure::Usage)?;
    let model = build_shifted(&descriptor).map_err(crate::classify_core)?;
    let mut result =
        estimate_adaptive(&model, tau, nu, budget, seed).map_err(crate::classify_core)?;
    if let Some(kind) = file.coupling_kind() {
        result = result.with_derived(kind);
    }
    let v = validity_margin(tau, nu, summarize(&model).omega_bar);
    Ok(EstimateReport {
        config: EstimateConfigEcho {
            model: file.clone(),
            tau,
            nu,
            budget,
            seed,
        },
        validity: ValidityReport {
            margin: v.margin,
            tau_omega_bar: v.tau_omega_bar,
        },
        n_phi_hat: result.n_phi_hat,
        phi_hat: result.phi_hat,
        delta_h_hat: result.delta_h_hat,
        derived: result.derived.map(|d| DerivedReport {
            kind: match d.kind {
                CouplingKind::TwoLevelRabi => "rabi_omega".to_string(),
                CouplingKind::ContinuumRms => "continuum_rms".to_string(),
            },
            value: d.value,
        }),
        survived_rounds: result.survived_rounds,
        total_rounds: result.total_rounds,
        ci95_delta_h: [result.ci95_delta_h.0, result.ci95_delta_h.1],
        n_cycles_used: result.n_cycles_used,
        converged: result.converged,
    })
}
