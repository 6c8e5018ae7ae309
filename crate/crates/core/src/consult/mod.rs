//! Consultation sessions: evidence bookkeeping, question selection,
//! stopping, and the displayed differential.

mod differential;
pub mod journal;
mod voi;

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::evidence::{Answer, Evidence, EvidenceError};
use crate::inference::{self, InferenceError, InferenceMethod, Posterior};
use crate::model::{Network, NodeId};
use crate::scalar::Probability;

pub use differential::{differential_from_posterior, Differential, DifferentialEntry, DisplayThresholdConfig};
pub use voi::{best_question, question_scores, QuestionScore};

/// Question-selection and stopping parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsultConfig {
    /// Number of most probable diseases whose entropy the VOI sums over.
    pub top_k: usize,
    /// Stop once the best question is worth less than this many bits.
    pub epsilon: f64,
    pub max_questions: usize,
    #[serde(default)]
    pub inference: InferenceMethod,
}

impl Default for ConsultConfig {
    fn default() -> Self {
        Self {
            top_k: 3,
            epsilon: 0.005,
            max_questions: 30,
            inference: InferenceMethod::default(),
        }
    }
}

impl ConsultConfig {
    /// Inference method for the `step`-th posterior of a session. Sampled
    /// sessions advance the seed per step so replays see the same draws.
    pub fn method_at(&self, step: usize) -> InferenceMethod {
        match self.inference {
            InferenceMethod::Sampled { samples, seed } => InferenceMethod::Sampled {
                samples,
                seed: seed.wrapping_add(step as u64),
            },
            exact => exact,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Active,
    Concluded,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConsultError {
    #[error("session is concluded")]
    Concluded,
    #[error("{answered:?} is not the pending question (pending: {pending:?})")]
    NotPending { answered: String, pending: Option<String> },
    #[error("{0:?} was already answered")]
    AlreadyAnswered(String),
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub question: NodeId,
    pub answer: Answer,
}

/// State of one consultation. Mutated only by its owner.
#[derive(Debug, Clone)]
pub struct SessionState<T> {
    pub id: String,
    net: Arc<Network<T>>,
    evidence: Evidence,
    asked: Vec<NodeId>,
    transcript: Vec<TranscriptEntry>,
    status: SessionStatus,
    pending: Option<NodeId>,
}

/// Opens a session with the presenting evidence installed.
pub fn start_session<T: Probability>(
    net: Arc<Network<T>>,
    id: impl Into<String>,
    initial: Evidence,
) -> Result<SessionState<T>, ConsultError> {
    initial.check(&net)?;
    Ok(SessionState {
        id: id.into(),
        net,
        evidence: initial,
        asked: Vec::new(),
        transcript: Vec::new(),
        status: SessionStatus::Active,
        pending: None,
    })
}

impl<T: Probability> SessionState<T> {
    pub fn network(&self) -> &Arc<Network<T>> {
        &self.net
    }

    pub fn evidence(&self) -> &Evidence {
        &self.evidence
    }

    pub fn asked(&self) -> &[NodeId] {
        &self.asked
    }

    pub fn transcript(&self) -> &[TranscriptEntry] {
        &self.transcript
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    pub fn pending(&self) -> Option<&NodeId> {
        self.pending.as_ref()
    }

    fn ensure_active(&self) -> Result<(), ConsultError> {
        match self.status {
            SessionStatus::Active => Ok(()),
            SessionStatus::Concluded => Err(ConsultError::Concluded),
        }
    }

    /// VOI of every askable symptom, in id order.
    pub fn question_scores(&self, cfg: &ConsultConfig) -> Result<Vec<QuestionScore<T>>, ConsultError> {
        self.ensure_active()?;
        let asked: BTreeSet<NodeId> = self.asked.iter().cloned().collect();
        Ok(question_scores(
            &self.net,
            &self.evidence,
            &asked,
            cfg.top_k,
            cfg.method_at(self.asked.len()),
        )?)
    }

    /// The most informative un-asked, unobserved symptom, or `None` once the
    /// best VOI drops below `epsilon` or the question budget is spent.
    pub fn next_question(&self, cfg: &ConsultConfig) -> Result<Option<NodeId>, ConsultError> {
        self.ensure_active()?;
        if self.asked.len() >= cfg.max_questions {
            return Ok(None);
        }
        let scores = self.question_scores(cfg)?;
        Ok(best_question(&scores, T::of(cfg.epsilon)))
    }

    /// Picks the next question and marks it pending. An already pending
    /// question is returned unchanged.
    pub fn issue_question(&mut self, cfg: &ConsultConfig) -> Result<Option<NodeId>, ConsultError> {
        self.ensure_active()?;
        if let Some(p) = &self.pending {
            return Ok(Some(p.clone()));
        }
        self.pending = self.next_question(cfg)?;
        Ok(self.pending.clone())
    }

    /// Records the answer to the pending question. `Unknown` is logged but
    /// leaves the evidence untouched.
    pub fn answer(&mut self, symptom: &NodeId, answer: Answer) -> Result<(), ConsultError> {
        self.ensure_active()?;
        if self.pending.as_ref() != Some(symptom) {
            if self.asked.contains(symptom) {
                return Err(ConsultError::AlreadyAnswered(symptom.to_string()));
            }
            return Err(ConsultError::NotPending {
                answered: symptom.to_string(),
                pending: self.pending.as_ref().map(ToString::to_string),
            });
        }
        self.pending = None;
        self.evidence.set(symptom.clone(), answer);
        self.asked.push(symptom.clone());
        self.transcript.push(TranscriptEntry {
            question: symptom.clone(),
            answer,
        });
        Ok(())
    }

    pub fn posterior(&self, cfg: &ConsultConfig) -> Result<Posterior<T>, ConsultError> {
        Ok(inference::posterior(
            &self.net,
            &self.evidence,
            cfg.method_at(self.asked.len()),
        )?)
    }

    /// Exact posterior filtered through the display thresholds.
    pub fn differential(&self, display: &DisplayThresholdConfig<T>) -> Result<Differential<T>, ConsultError> {
        let post = inference::exact_posterior(&self.net, &self.evidence)?;
        Ok(differential_from_posterior(&self.net, &post, display))
    }

    pub fn conclude(&mut self) {
        self.pending = None;
        self.status = SessionStatus::Concluded;
    }
}
