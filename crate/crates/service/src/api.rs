//! Wire types for the session API.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use triagenet_core::consult::journal::{SessionEvent, SessionSettings};
use triagenet_core::consult::{SessionStatus, TranscriptEntry};
use triagenet_core::{Answer, Conclusion, Network, NodeId, TriageAction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSessionRequest {
    #[serde(default)]
    pub complaints: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSessionResponse {
    pub session_id: String,
    pub unmatched: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnswerBody {
    pub symptom_id: NodeId,
    pub state: Answer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepRequest {
    #[serde(default)]
    pub answer: Option<AnswerBody>,
    pub idempotency_key: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionBody {
    pub symptom_id: NodeId,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedDisease {
    pub disease_id: NodeId,
    pub name: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiredRule {
    pub id: String,
    pub required_symptoms: Vec<NodeId>,
    pub min_action: TriageAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConclusionBody {
    pub differential: Vec<RankedDisease>,
    pub triage: TriageAction,
    pub expected_harms: BTreeMap<TriageAction, f64>,
    pub fired_rules: Vec<FiredRule>,
    pub explanation: Vec<RankedDisease>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepResponse {
    Question(QuestionBody),
    Conclusion(ConclusionBody),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptResponse {
    pub session_id: String,
    pub status: SessionStatus,
    pub complaints: Vec<String>,
    pub unmatched: Vec<String>,
    pub transcript: Vec<TranscriptEntry>,
    pub pending_question: Option<QuestionBody>,
    pub settings: SessionSettings,
    pub conclusion: Option<ConclusionBody>,
    pub events: Vec<SessionEvent>,
}

pub fn question_body(net: &Network, id: &NodeId) -> QuestionBody {
    let name = net.name_of(id.as_str()).unwrap_or(id.as_str());
    QuestionBody {
        symptom_id: id.clone(),
        text: format!("Do you have {}?", name.to_lowercase()),
    }
}

fn ranked(net: &Network, id: &NodeId, p: f64) -> RankedDisease {
    RankedDisease {
        disease_id: id.clone(),
        name: net.name_of(id.as_str()).unwrap_or(id.as_str()).to_string(),
        probability: p,
    }
}

pub fn conclusion_body(net: &Network, c: &Conclusion) -> ConclusionBody {
    ConclusionBody {
        differential: c
            .differential
            .entries
            .iter()
            .map(|e| ranked(net, &e.disease, e.probability))
            .collect(),
        triage: c.triage.action,
        expected_harms: c.triage.expected_harms.clone(),
        fired_rules: c
            .triage
            .fired_rules
            .iter()
            .map(|r| FiredRule {
                id: r.id.clone(),
                required_symptoms: r.required_symptoms.iter().cloned().collect(),
                min_action: r.min_action,
            })
            .collect(),
        explanation: c.triage.explanation.iter().map(|(d, p)| ranked(net, d, *p)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}
