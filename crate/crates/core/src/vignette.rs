//! Clinical vignettes and the simulated patient that answers from them.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::evidence::{Answer, Evidence, Presence};
use crate::model::{Network, NodeId};
use crate::scalar::Probability;
use crate::triage::TriageAction;

pub const MINIMUM_AGE: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sex {
    Male,
    Female,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Patient {
    pub age: u32,
    pub sex: Sex,
}

/// Judge's acceptable triage range, inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JudgeRange {
    pub min: TriageAction,
    pub max: TriageAction,
}

/// Four-point differential quality rating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rating {
    Poor,
    Okay,
    Good,
    Excellent,
}

impl Rating {
    pub const ALL: [Rating; 4] = [Rating::Poor, Rating::Okay, Rating::Good, Rating::Excellent];

    pub fn passes(self) -> bool {
        self >= Rating::Okay
    }
}

/// One fact on the vignette: an entity id or free-text alias with its state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Finding {
    pub entity: String,
    pub state: Presence,
    #[serde(skip)]
    pub resolved: Option<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Vignette {
    pub id: String,
    pub modelled_disease: NodeId,
    pub patient: Patient,
    pub presenting: Vec<Finding>,
    #[serde(default)]
    pub open_history: Vec<Finding>,
    #[serde(default)]
    pub direct_only: Vec<Finding>,
    #[serde(default)]
    pub past_medical: Vec<Finding>,
    #[serde(default)]
    pub family_history: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judge_range: Option<JudgeRange>,
    /// rater → source → rating
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub ratings: BTreeMap<String, BTreeMap<String, Rating>>,
}

#[derive(Debug, thiserror::Error)]
pub enum VignetteError {
    #[error("failed to read vignette: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed vignette: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("vignette {id}: patient age {age} is below {MINIMUM_AGE}")]
    AgeBelowMinimum { id: String, age: u32 },
    #[error("vignette {id}: modelled disease {disease:?} is not a disease in the model")]
    UnknownDisease { id: String, disease: String },
    #[error("vignette {id}: judge range minimum exceeds maximum")]
    InvalidJudgeRange { id: String },
}

/// Which tier a finding belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Section {
    Presenting,
    OpenHistory,
    PastMedical,
    DirectOnly,
}

/// Parses, validates and resolves a vignette against `net`.
pub fn load_vignette<T: Probability, R: Read>(net: &Network<T>, source: R) -> Result<Vignette, VignetteError> {
    let mut v: Vignette = serde_json::from_reader(source)?;
    v.validate(net)?;
    v.resolve(net);
    Ok(v)
}

impl Vignette {
    pub fn validate<T: Probability>(&self, net: &Network<T>) -> Result<(), VignetteError> {
        if self.patient.age < MINIMUM_AGE {
            return Err(VignetteError::AgeBelowMinimum {
                id: self.id.clone(),
                age: self.patient.age,
            });
        }
        if net.disease(self.modelled_disease.as_str()).is_none() {
            return Err(VignetteError::UnknownDisease {
                id: self.id.clone(),
                disease: self.modelled_disease.to_string(),
            });
        }
        if let Some(r) = self.judge_range {
            if r.min > r.max {
                return Err(VignetteError::InvalidJudgeRange { id: self.id.clone() });
            }
        }
        Ok(())
    }

    /// Attaches node ids to findings. Entities that resolve to nothing, or to
    /// a disease (not observable), stay unresolved.
    pub fn resolve<T: Probability>(&mut self, net: &Network<T>) {
        for f in self
            .presenting
            .iter_mut()
            .chain(&mut self.open_history)
            .chain(&mut self.past_medical)
            .chain(&mut self.direct_only)
        {
            f.resolved = net
                .resolve_alias(&f.entity)
                .filter(|id| net.disease(id.as_str()).is_none());
        }
    }

    /// Findings with their section, in volunteering order.
    pub fn findings(&self) -> impl Iterator<Item = (Section, &Finding)> {
        fn tag(s: Section, list: &[Finding]) -> impl Iterator<Item = (Section, &Finding)> {
            list.iter().map(move |f| (s, f))
        }
        tag(Section::Presenting, &self.presenting)
            .chain(tag(Section::OpenHistory, &self.open_history))
            .chain(tag(Section::PastMedical, &self.past_medical))
            .chain(tag(Section::DirectOnly, &self.direct_only))
    }

    /// Free-text entities that did not resolve to an observable node.
    pub fn unmatched(&self) -> Vec<String> {
        self.findings()
            .filter(|(_, f)| f.resolved.is_none())
            .map(|(_, f)| f.entity.clone())
            .collect()
    }

    fn evidence_from(&self, include: impl Fn(Section) -> bool) -> Evidence {
        let mut e = Evidence::new();
        for (section, f) in self.findings() {
            if let (true, Some(id)) = (include(section), &f.resolved) {
                // first mention wins
                if !e.contains(id.as_str()) {
                    e.set(id.clone(), f.state);
                }
            }
        }
        e
    }

    /// Presenting complaint, open-questioning history and past medical
    /// history: everything volunteered before any closed question.
    pub fn initial_evidence(&self) -> Evidence {
        self.evidence_from(|s| s != Section::DirectOnly)
    }

    /// Every resolved entity on the vignette.
    pub fn full_evidence(&self) -> Evidence {
        self.evidence_from(|_| true)
    }

    /// First stated state of an entity anywhere on the vignette.
    pub fn state_of(&self, id: &str) -> Option<(Section, Presence)> {
        self.findings()
            .find(|(_, f)| f.resolved.as_ref().is_some_and(|r| r.as_str() == id))
            .map(|(s, f)| (s, f.state))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Disclosure {
    Volunteered,
    DisclosedOnAsk,
    Undisclosed,
}

/// Simulated patient answering closed questions from a vignette.
#[derive(Debug, Clone)]
pub struct PatientAgent<'v> {
    vignette: &'v Vignette,
    ledger: BTreeMap<NodeId, Disclosure>,
}

impl<'v> PatientAgent<'v> {
    pub fn new(vignette: &'v Vignette) -> Self {
        let mut ledger = BTreeMap::new();
        for (section, f) in vignette.findings() {
            if let Some(id) = &f.resolved {
                let d = if section == Section::DirectOnly {
                    Disclosure::Undisclosed
                } else {
                    Disclosure::Volunteered
                };
                ledger.entry(id.clone()).or_insert(d);
            }
        }
        Self { vignette, ledger }
    }

    pub fn vignette(&self) -> &'v Vignette {
        self.vignette
    }

    pub fn ledger(&self) -> &BTreeMap<NodeId, Disclosure> {
        &self.ledger
    }

    /// Present/absent when the vignette states the entity, unknown otherwise.
    pub fn respond(&mut self, asked: &NodeId) -> Answer {
        match self.vignette.state_of(asked.as_str()) {
            Some((_, state)) => {
                if let Some(d) = self.ledger.get_mut(asked) {
                    if *d == Disclosure::Undisclosed {
                        *d = Disclosure::DisclosedOnAsk;
                    }
                }
                state.into()
            }
            None => Answer::Unknown,
        }
    }
}
