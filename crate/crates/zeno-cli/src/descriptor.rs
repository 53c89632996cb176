//! JSON model descriptors.
//!
//! Three shapes, discriminated by `"type"`:
//!
//! ```json
//! {"type": "two_level", "omega": 1.0, "delta": 1.0}
//! {"type": "continuum", "omegas": [1.0, 2.0], "couplings": [[0.3, 0.0], [0.0, 0.4]]}
//! {"type": "generic", "matrix": [[[0.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [1.0, 0.0]]], "initial_index": 0}
//! ```
//!
//! Complex numbers are `[re, im]` pairs; a generic matrix is a list of rows.

use serde::{Deserialize, Serialize};

use zeno_core::estimator::CouplingKind;
use zeno_core::linalg::{ComplexMatrix, C64};
use zeno_core::models::{ContinuumModel, ModelDescriptor, TwoLevelModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelFile {
    TwoLevel {
        omega: f64,
        delta: f64,
    },
    Continuum {
        omegas: Vec<f64>,
        couplings: Vec<[f64; 2]>,
    },
    Generic {
        matrix: Vec<Vec<[f64; 2]>>,
        initial_index: usize,
    },
}

impl ModelFile {
    /// Parses a descriptor from JSON text, with line/column diagnostics.
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        serde_json::from_str(text).map_err(|e| anyhow::anyhow!("model descriptor: {e}"))
    }

    /// Converts to the engine-side descriptor, validating shapes.
    pub fn to_descriptor(&self) -> anyhow::Result<ModelDescriptor> {
        match self {
            ModelFile::TwoLevel { omega, delta } => Ok(ModelDescriptor::TwoLevel(TwoLevelModel {
                omega: *omega,
                delta: *delta,
            })),
            ModelFile::Continuum { omegas, couplings } => {
                Ok(ModelDescriptor::Continuum(ContinuumModel {
                    omegas: omegas.clone(),
                    couplings: couplings.iter().map(|&[re, im]| C64::new(re, im)).collect(),
                }))
            }
            ModelFile::Generic {
                matrix,
                initial_index,
            } => {
                let rows = matrix.len();
                if rows == 0 {
                    anyhow::bail!("generic matrix is empty");
                }
                let cols = matrix[0].len();
                if matrix.iter().any(|row| row.len() != cols) {
                    anyhow::bail!("generic matrix rows have unequal lengths");
                }
                let data: Vec<C64> = matrix
                    .iter()
                    .flatten()
                    .map(|&[re, im]| C64::new(re, im))
                    .collect();
                let m = ComplexMatrix::new(rows, cols, data)
                    .map_err(|e| anyhow::anyhow!("generic matrix: {e}"))?;
                Ok(ModelDescriptor::Generic {
                    matrix: m,
                    initial_index: *initial_index,
                })
            }
        }
    }

    /// Which analytic coupling the estimated strength maps back to.
    pub fn coupling_kind(&self) -> Option<CouplingKind> {
        match self {
            ModelFile::TwoLevel { .. } => Some(CouplingKind::TwoLevelRabi),
            ModelFile::Continuum { .. } => Some(CouplingKind::ContinuumRms),
            ModelFile::Generic { .. } => None,
        }
    }
}
