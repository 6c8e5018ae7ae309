//! Event-sourced consultations. Every state change is an event; replaying
//! the events re-executes the engine and checks it reproduces them.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::consult::{
    differential_from_posterior, start_session, ConsultConfig, ConsultError, Differential, DifferentialEntry,
    SessionState, SessionStatus,
};
use crate::evidence::{Answer, Evidence, Presence};
use crate::model::{Network, NodeId};
use crate::scalar::Probability;
use crate::triage::{recommend_with_posterior, TriageAction, TriageResult, DEFAULT_OVERTRIAGE_PENALTY};

pub trait Clock {
    fn now_ms(&self) -> u64;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0)
    }
}

/// Always reports the same instant; used where output must be byte-stable.
pub struct FixedClock(pub u64);

impl Clock for FixedClock {
    fn now_ms(&self) -> u64 {
        self.0
    }
}

/// Everything besides the network needed to re-run a session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionSettings {
    pub consult: ConsultConfig,
    /// Overrides the network's display `tau0` when set.
    pub tau0: Option<f64>,
    pub overtriage: f64,
}

impl Default for SessionSettings {
    fn default() -> Self {
        Self {
            consult: ConsultConfig::default(),
            tau0: None,
            overtriage: DEFAULT_OVERTRIAGE_PENALTY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub seq: u64,
    pub timestamp_ms: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Started {
        session_id: String,
        complaints: Vec<String>,
        unmatched: Vec<String>,
        evidence: Evidence,
        settings: SessionSettings,
    },
    QuestionIssued {
        symptom_id: NodeId,
    },
    AnswerReceived {
        symptom_id: NodeId,
        answer: Answer,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        idempotency_key: Option<String>,
    },
    Concluded {
        conclusion: ConclusionRecord,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Started { .. } => "started",
            EventKind::QuestionIssued { .. } => "question_issued",
            EventKind::AnswerReceived { .. } => "answer_received",
            EventKind::Concluded { .. } => "concluded",
        }
    }
}

/// Serializable conclusion, with probabilities widened to f64.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConclusionRecord {
    pub differential: Vec<DifferentialEntry<f64>>,
    pub triage: TriageAction,
    pub base_action: TriageAction,
    pub expected_harms: BTreeMap<TriageAction, f64>,
    pub fired_rules: Vec<String>,
    pub explanation: Vec<DifferentialEntry<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conclusion<T> {
    pub differential: Differential<T>,
    pub triage: TriageResult<T>,
}

impl<T: Probability> Conclusion<T> {
    pub fn record(&self) -> ConclusionRecord {
        let entry = |disease: &NodeId, p: T| DifferentialEntry {
            disease: disease.clone(),
            probability: p.as_f64(),
        };
        ConclusionRecord {
            differential: self
                .differential
                .entries
                .iter()
                .map(|e| entry(&e.disease, e.probability))
                .collect(),
            triage: self.triage.action,
            base_action: self.triage.base_action,
            expected_harms: self
                .triage
                .expected_harms
                .iter()
                .map(|(&a, h)| (a, h.as_f64()))
                .collect(),
            fired_rules: self.triage.fired_rules.iter().map(|r| r.id.clone()).collect(),
            explanation: self.triage.explanation.iter().map(|(d, p)| entry(d, *p)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome<T> {
    Question(NodeId),
    Conclusion(Conclusion<T>),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReplayError {
    #[error("event log is empty")]
    Empty,
    #[error("first event must be `started`, found `{0}`")]
    NotStarted(&'static str),
    #[error("sequence gap: expected {expected}, found {found}")]
    SequenceGap { expected: u64, found: u64 },
    #[error("event {seq} follows the conclusion")]
    AfterConclusion { seq: u64 },
    #[error("event {seq}: duplicate `started`")]
    DuplicateStart { seq: u64 },
    #[error("event {seq} diverges from re-execution: {detail}")]
    Divergence { seq: u64, detail: String },
    #[error("event {seq}: {source}")]
    Consult { seq: u64, source: ConsultError },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// A session together with its event log.
#[derive(Debug, Clone)]
pub struct Consultation<T> {
    state: SessionState<T>,
    settings: SessionSettings,
    events: Vec<SessionEvent>,
    conclusion: Option<Conclusion<T>>,
}

/// Resolves free-text complaints; unresolved ones are returned, not dropped.
pub fn resolve_complaints<T: Probability>(net: &Network<T>, complaints: &[String]) -> (Evidence, Vec<String>) {
    let mut evidence = Evidence::new();
    let mut unmatched = Vec::new();
    for c in complaints {
        match net.resolve_alias(c) {
            Some(id) if net.disease(id.as_str()).is_none() => evidence.set(id, Presence::Present),
            _ => unmatched.push(c.clone()),
        }
    }
    (evidence, unmatched)
}

impl<T: Probability> Consultation<T> {
    /// Starts from free-text complaints resolved through the alias table.
    pub fn start(
        net: Arc<Network<T>>,
        session_id: impl Into<String>,
        complaints: Vec<String>,
        settings: SessionSettings,
        clock: &dyn Clock,
    ) -> Result<Self, ConsultError> {
        let (evidence, unmatched) = resolve_complaints(&net, &complaints);
        Self::start_with_evidence(net, session_id, evidence, complaints, unmatched, settings, clock)
    }

    pub fn start_with_evidence(
        net: Arc<Network<T>>,
        session_id: impl Into<String>,
        evidence: Evidence,
        complaints: Vec<String>,
        unmatched: Vec<String>,
        settings: SessionSettings,
        clock: &dyn Clock,
    ) -> Result<Self, ConsultError> {
        let session_id = session_id.into();
        let state = start_session(net, session_id.clone(), evidence.clone())?;
        let mut c = Self {
            state,
            settings,
            events: Vec::new(),
            conclusion: None,
        };
        c.push(
            EventKind::Started {
                session_id,
                complaints,
                unmatched,
                evidence,
                settings,
            },
            clock,
        );
        Ok(c)
    }

    pub fn state(&self) -> &SessionState<T> {
        &self.state
    }

    pub fn settings(&self) -> &SessionSettings {
        &self.settings
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn conclusion(&self) -> Option<&Conclusion<T>> {
        self.conclusion.as_ref()
    }

    pub fn unmatched(&self) -> &[String] {
        match &self.events[0].kind {
            EventKind::Started { unmatched, .. } => unmatched,
            _ => unreachable!("first event is always `started`"),
        }
    }

    fn push(&mut self, kind: EventKind, clock: &dyn Clock) {
        self.events.push(SessionEvent {
            seq: self.events.len() as u64,
            timestamp_ms: clock.now_ms(),
            kind,
        });
    }

    /// Applies an answer to the pending question (if given) and advances to
    /// the next question or the conclusion. Without an answer, a pending
    /// question is returned again and nothing is logged.
    pub fn step(
        &mut self,
        answer: Option<(NodeId, Answer)>,
        idempotency_key: Option<String>,
        clock: &dyn Clock,
    ) -> Result<StepOutcome<T>, ConsultError> {
        if self.state.status() == SessionStatus::Concluded {
            return Err(ConsultError::Concluded);
        }
        match answer {
            Some((symptom_id, answer)) => {
                self.state.answer(&symptom_id, answer)?;
                self.push(
                    EventKind::AnswerReceived {
                        symptom_id,
                        answer,
                        idempotency_key,
                    },
                    clock,
                );
            }
            None => {
                if let Some(p) = self.state.pending() {
                    return Ok(StepOutcome::Question(p.clone()));
                }
            }
        }
        self.advance(clock)
    }

    fn advance(&mut self, clock: &dyn Clock) -> Result<StepOutcome<T>, ConsultError> {
        match self.state.issue_question(&self.settings.consult)? {
            Some(q) => {
                self.push(EventKind::QuestionIssued { symptom_id: q.clone() }, clock);
                Ok(StepOutcome::Question(q))
            }
            None => {
                let conclusion = self.evaluate()?;
                self.state.conclude();
                self.push(
                    EventKind::Concluded {
                        conclusion: conclusion.record(),
                    },
                    clock,
                );
                self.conclusion = Some(conclusion.clone());
                Ok(StepOutcome::Conclusion(conclusion))
            }
        }
    }

    /// Differential and triage for the current evidence.
    pub fn evaluate(&self) -> Result<Conclusion<T>, ConsultError> {
        let net = self.state.network();
        let posterior = self.state.posterior(&self.settings.consult)?;
        let mut display = net.display_config().clone();
        if let Some(tau0) = self.settings.tau0 {
            display.tau0 = T::of(tau0);
        }
        let differential = differential_from_posterior(net, &posterior, &display);
        let triage = recommend_with_posterior(net, self.state.evidence(), &posterior, T::of(self.settings.overtriage));
        Ok(Conclusion { differential, triage })
    }

    /// Rebuilds a consultation from its log, re-running the engine for every
    /// issued question and the conclusion.
    pub fn replay(net: Arc<Network<T>>, events: &[SessionEvent]) -> Result<Self, ReplayError> {
        let first = events.first().ok_or(ReplayError::Empty)?;
        if first.seq != 0 {
            return Err(ReplayError::SequenceGap {
                expected: 0,
                found: first.seq,
            });
        }
        let EventKind::Started {
            session_id,
            complaints,
            unmatched,
            evidence,
            settings,
        } = &first.kind
        else {
            return Err(ReplayError::NotStarted(first.kind.name()));
        };
        let clock = FixedClock(first.timestamp_ms);
        let mut c = Self::start_with_evidence(
            net,
            session_id.clone(),
            evidence.clone(),
            complaints.clone(),
            unmatched.clone(),
            *settings,
            &clock,
        )
        .map_err(|source| ReplayError::Consult { seq: 0, source })?;

        for (i, ev) in events.iter().enumerate().skip(1) {
            if ev.seq != i as u64 {
                return Err(ReplayError::SequenceGap {
                    expected: i as u64,
                    found: ev.seq,
                });
            }
            if c.state.status() == SessionStatus::Concluded {
                return Err(ReplayError::AfterConclusion { seq: ev.seq });
            }
            let consult = |source| ReplayError::Consult { seq: ev.seq, source };
            match &ev.kind {
                EventKind::Started { .. } => return Err(ReplayError::DuplicateStart { seq: ev.seq }),
                EventKind::AnswerReceived { symptom_id, answer, .. } => {
                    c.state.answer(symptom_id, *answer).map_err(consult)?;
                    c.events.push(ev.clone());
                }
                EventKind::QuestionIssued { .. } | EventKind::Concluded { .. } => {
                    c.advance(&clock).map_err(consult)?;
                    let produced = c.events.pop().expect("advance logs one event");
                    if produced.kind != ev.kind {
                        return Err(ReplayError::Divergence {
                            seq: ev.seq,
                            detail: format!("logged {:?}, re-executed {:?}", ev.kind, produced.kind),
                        });
                    }
                    c.events.push(ev.clone());
                }
            }
        }
        Ok(c)
    }
}

/// Writes events as JSON lines.
pub fn write_events<W: Write>(mut out: W, events: &[SessionEvent]) -> std::io::Result<()> {
    for e in events {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Reads a JSON-lines event log; blank lines are skipped.
pub fn read_events<R: BufRead>(input: R) -> Result<Vec<SessionEvent>, ReplayError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| ReplayError::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| ReplayError::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}
