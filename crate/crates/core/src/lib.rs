//! Diagnostic and triage engine over a three-layer noisy-OR network.
//!
//! The math is generic over [`Probability`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the CLI and service use.

pub mod consult;
pub mod eval;
pub mod evidence;
pub mod inference;
pub mod model;
pub mod scalar;
pub mod triage;
pub mod vignette;

#[cfg(test)]
pub(crate) mod testutil;

pub use evidence::{Answer, Evidence, Presence};
pub use model::{load_network, NodeId, Severity};
pub use scalar::Probability;
pub use triage::TriageAction;

pub type Network = model::Network<f64>;
pub type Network32 = model::Network<f32>;
pub type Posterior = inference::Posterior<f64>;
pub type Differential = consult::Differential<f64>;
pub type DisplayThresholdConfig = consult::DisplayThresholdConfig<f64>;
pub type SessionState = consult::SessionState<f64>;
pub type Consultation = consult::journal::Consultation<f64>;
pub type Conclusion = consult::journal::Conclusion<f64>;
pub type StepOutcome = consult::journal::StepOutcome<f64>;
pub type TriageResult = triage::TriageResult<f64>;
pub type QuestionScore = consult::QuestionScore<f64>;

/// Directory holding the bundled demo models and vignette pack.
pub fn fixtures_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}
