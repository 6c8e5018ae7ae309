//! In-memory session registry backed by one append-only JSONL log per session.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use tokio::sync::Mutex;
use triagenet_core::consult::journal::{read_events, write_events, Clock, EventKind, SessionSettings};
use triagenet_core::consult::{ConsultError, SessionStatus};
use triagenet_core::evidence::EvidenceError;
use triagenet_core::{Consultation, Network, StepOutcome};

use crate::api::{
    conclusion_body, question_body, AnswerBody, CreateSessionResponse, StepRequest, StepResponse, TranscriptResponse,
};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("{0}")]
    BadRequest(String),
    #[error("unknown session {0:?}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Internal(String),
}

impl ServiceError {
    pub fn kind(&self) -> &'static str {
        match self {
            ServiceError::BadRequest(_) => "malformed",
            ServiceError::NotFound(_) => "unknown_session",
            ServiceError::Conflict(_) => "conflict",
            ServiceError::Internal(_) => "internal",
        }
    }
}

impl From<ConsultError> for ServiceError {
    fn from(e: ConsultError) -> Self {
        match e {
            ConsultError::Evidence(EvidenceError::UnknownNode(_)) => ServiceError::BadRequest(e.to_string()),
            ConsultError::Evidence(_)
            | ConsultError::Concluded
            | ConsultError::NotPending { .. }
            | ConsultError::AlreadyAnswered(_) => ServiceError::Conflict(e.to_string()),
            ConsultError::Inference(_) => ServiceError::Conflict(e.to_string()),
        }
    }
}

impl From<std::io::Error> for ServiceError {
    fn from(e: std::io::Error) -> Self {
        ServiceError::Internal(e.to_string())
    }
}

struct Cached {
    answer: Option<AnswerBody>,
    response: StepResponse,
}

struct LiveSession {
    consultation: Consultation,
    persisted: usize,
    responses: HashMap<String, Cached>,
}

pub struct SessionStore {
    net: Arc<Network>,
    settings: SessionSettings,
    log_dir: Option<PathBuf>,
    clock: Box<dyn Clock + Send + Sync>,
    sessions: RwLock<HashMap<String, Arc<Mutex<LiveSession>>>>,
}

impl SessionStore {
    /// Sessions live only in memory when `log_dir` is `None`.
    pub fn new(
        net: Arc<Network>,
        settings: SessionSettings,
        log_dir: Option<PathBuf>,
        clock: Box<dyn Clock + Send + Sync>,
    ) -> Result<Self, ServiceError> {
        if let Some(dir) = &log_dir {
            fs::create_dir_all(dir)?;
        }
        Ok(Self {
            net,
            settings,
            log_dir,
            clock,
            sessions: RwLock::new(HashMap::new()),
        })
    }

    pub fn network(&self) -> &Arc<Network> {
        &self.net
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().expect("session map poisoned").len()
    }

    fn log_path(&self, id: &str) -> Option<PathBuf> {
        self.log_dir.as_ref().map(|d| d.join(format!("{id}.jsonl")))
    }

    /// Replays every log in the data directory. Returns the number of
    /// sessions restored.
    pub fn recover(&self) -> Result<usize, ServiceError> {
        let Some(dir) = &self.log_dir else { return Ok(0) };
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        let mut restored = 0;
        for path in paths {
            let live = self.load(&path)?;
            let id = live.consultation.state().id.clone();
            self.sessions
                .write()
                .expect("session map poisoned")
                .insert(id, Arc::new(Mutex::new(live)));
            restored += 1;
        }
        Ok(restored)
    }

    fn load(&self, path: &Path) -> Result<LiveSession, ServiceError> {
        let events = read_events(BufReader::new(File::open(path)?))
            .map_err(|e| ServiceError::Internal(format!("{}: {e}", path.display())))?;
        let consultation = Consultation::replay(self.net.clone(), &events)
            .map_err(|e| ServiceError::Internal(format!("{}: {e}", path.display())))?;
        let mut responses = HashMap::new();
        for pair in events.windows(2) {
            let EventKind::AnswerReceived {
                symptom_id,
                answer,
                idempotency_key: Some(key),
            } = &pair[0].kind
            else {
                continue;
            };
            let response = match &pair[1].kind {
                EventKind::QuestionIssued { symptom_id } => {
                    StepResponse::Question(question_body(&self.net, symptom_id))
                }
                EventKind::Concluded { .. } => match consultation.conclusion() {
                    Some(c) => StepResponse::Conclusion(conclusion_body(&self.net, c)),
                    None => continue,
                },
                _ => continue,
            };
            let answer = Some(AnswerBody {
                symptom_id: symptom_id.clone(),
                state: *answer,
            });
            responses.insert(key.clone(), Cached { answer, response });
        }
        Ok(LiveSession {
            persisted: consultation.events().len(),
            consultation,
            responses,
        })
    }

    fn persist(&self, live: &mut LiveSession) -> Result<(), ServiceError> {
        let events = live.consultation.events();
        if let Some(path) = self.log_path(&live.consultation.state().id) {
            if live.persisted < events.len() {
                let mut file = OpenOptions::new().create(true).append(true).open(path)?;
                let mut buf = Vec::new();
                write_events(&mut buf, &events[live.persisted..])?;
                file.write_all(&buf)?;
                file.sync_data()?;
            }
        }
        live.persisted = events.len();
        Ok(())
    }

    fn get(&self, id: &str) -> Result<Arc<Mutex<LiveSession>>, ServiceError> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(id.to_string()))
    }

    pub async fn create(&self, complaints: Vec<String>) -> Result<CreateSessionResponse, ServiceError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let consultation = Consultation::start(self.net.clone(), id.clone(), complaints, self.settings, &*self.clock)?;
        let mut live = LiveSession {
            consultation,
            persisted: 0,
            responses: HashMap::new(),
        };
        self.persist(&mut live)?;
        let unmatched = live.consultation.unmatched().to_vec();
        self.sessions
            .write()
            .expect("session map poisoned")
            .insert(id.clone(), Arc::new(Mutex::new(live)));
        Ok(CreateSessionResponse {
            session_id: id,
            unmatched,
        })
    }

    /// Steps are serialized per session. A repeated idempotency key with the
    /// same body returns the original response without touching the log.
    pub async fn step(&self, id: &str, req: StepRequest) -> Result<StepResponse, ServiceError> {
        if req.idempotency_key.is_empty() {
            return Err(ServiceError::BadRequest("idempotency_key must not be empty".into()));
        }
        let session = self.get(id)?;
        let mut live = session.lock().await;
        if let Some(cached) = live.responses.get(&req.idempotency_key) {
            return if cached.answer == req.answer {
                Ok(cached.response.clone())
            } else {
                Err(ServiceError::Conflict(format!(
                    "idempotency key {:?} was already used with a different answer",
                    req.idempotency_key
                )))
            };
        }
        if req.answer.is_none() && live.consultation.state().status() == SessionStatus::Concluded {
            let c = live
                .consultation
                .conclusion()
                .expect("concluded session has a conclusion");
            return Ok(StepResponse::Conclusion(conclusion_body(&self.net, c)));
        }
        let answer = req.answer.as_ref().map(|a| (a.symptom_id.clone(), a.state));
        let result = live
            .consultation
            .step(answer, Some(req.idempotency_key.clone()), &*self.clock);
        self.persist(&mut live)?;
        let response = match result? {
            StepOutcome::Question(q) => StepResponse::Question(question_body(&self.net, &q)),
            StepOutcome::Conclusion(c) => StepResponse::Conclusion(conclusion_body(&self.net, &c)),
        };
        live.responses.insert(
            req.idempotency_key,
            Cached {
                answer: req.answer,
                response: response.clone(),
            },
        );
        Ok(response)
    }

    pub async fn transcript(&self, id: &str) -> Result<TranscriptResponse, ServiceError> {
        let session = self.get(id)?;
        let live = session.lock().await;
        let c = &live.consultation;
        let state = c.state();
        let complaints = match &c.events()[0].kind {
            EventKind::Started { complaints, .. } => complaints.clone(),
            _ => Vec::new(),
        };
        Ok(TranscriptResponse {
            session_id: state.id.clone(),
            status: state.status(),
            complaints,
            unmatched: c.unmatched().to_vec(),
            transcript: state.transcript().to_vec(),
            pending_question: state.pending().map(|q| question_body(&self.net, q)),
            settings: *c.settings(),
            conclusion: c.conclusion().map(|x| conclusion_body(&self.net, x)),
            events: c.events().to_vec(),
        })
    }
}
