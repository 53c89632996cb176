//! Library side of the `zeno` command-line driver: JSON model descriptors,
//! the survival scan with CSV/SVG emission, the reference-point check, and
//! the estimation report types. The binary in `main.rs` is a thin clap
//! dispatcher over these modules.

pub mod descriptor;
pub mod paper_check;
pub mod reports;
pub mod scan;
pub mod svg;

/// How a command failed, mapped to the process exit code
/// (0 success, 1 runtime/acceptance failure, 2 usage or parse error).
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }

    pub fn message(&self) -> String {
        match self {
            Failure::Usage(e) => format!("{e:#}"),
            Failure::Runtime(e) => format!("{e:#}"),
        }
    }
}

/// Classifies a core-engine error: model/input validation problems are
/// usage errors, everything else is a runtime failure.
pub fn classify_core(err: zeno_core::Error) -> Failure {
    use zeno_core::Error as E;
    match err {
        E::DimensionMismatch { .. }
        | E::NonFinite
        | E::NonHermitian { .. }
        | E::EmptyContinuum
        | E::InvalidModel(_)
        | E::InvalidParams(_) => Failure::Usage(anyhow::anyhow!(err.to_string())),
        other => Failure::Runtime(anyhow::anyhow!(other.to_string())),
    }
}
