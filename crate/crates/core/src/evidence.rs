use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{Network, NodeId, NodeKind};

/// Observed state of a binary node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Presence {
    Present,
    Absent,
}

impl Presence {
    pub fn is_present(self) -> bool {
        self == Presence::Present
    }

    pub fn from_bool(present: bool) -> Self {
        if present {
            Presence::Present
        } else {
            Presence::Absent
        }
    }
}

/// A patient's answer to a question. `Unknown` never reaches [`Evidence`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    Present,
    Absent,
    Unknown,
}

impl Answer {
    pub fn presence(self) -> Option<Presence> {
        match self {
            Answer::Present => Some(Presence::Present),
            Answer::Absent => Some(Presence::Absent),
            Answer::Unknown => None,
        }
    }
}

impl From<Presence> for Answer {
    fn from(p: Presence) -> Self {
        match p {
            Presence::Present => Answer::Present,
            Presence::Absent => Answer::Absent,
        }
    }
}

/// Partial assignment of observable nodes. Absent keys are unobserved.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Evidence {
    states: BTreeMap<NodeId, Presence>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvidenceError {
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("{0:?} is a disease and cannot be observed")]
    NotObservable(String),
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records an answer; `Unknown` removes any previous observation.
    pub fn set(&mut self, id: NodeId, answer: impl Into<Answer>) {
        match answer.into().presence() {
            Some(p) => {
                self.states.insert(id, p);
            }
            None => {
                self.states.remove(&id);
            }
        }
    }

    pub fn with(mut self, id: &str, answer: impl Into<Answer>) -> Self {
        self.set(NodeId::new(id).expect("valid node id"), answer);
        self
    }

    pub fn get(&self, id: &str) -> Option<Presence> {
        self.states.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.states.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeId, Presence)> {
        self.states.iter().map(|(k, &v)| (k, v))
    }

    pub fn present(&self) -> impl Iterator<Item = &NodeId> {
        self.states.iter().filter(|(_, v)| v.is_present()).map(|(k, _)| k)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// True when every observation here also appears, with the same state, in `other`.
    pub fn is_subset_of(&self, other: &Evidence) -> bool {
        self.states.iter().all(|(k, v)| other.states.get(k) == Some(v))
    }

    /// Ensures every key is a symptom or risk factor of `net`.
    pub fn check<T>(&self, net: &Network<T>) -> Result<(), EvidenceError>
    where
        T: crate::Probability,
    {
        for id in self.states.keys() {
            match net.lookup(id.as_str()) {
                None => return Err(EvidenceError::UnknownNode(id.to_string())),
                Some(r) if r.kind == NodeKind::Disease => return Err(EvidenceError::NotObservable(id.to_string())),
                Some(_) => {}
            }
        }
        Ok(())
    }
}

impl FromIterator<(NodeId, Presence)> for Evidence {
    fn from_iter<I: IntoIterator<Item = (NodeId, Presence)>>(iter: I) -> Self {
        Self {
            states: iter.into_iter().collect(),
        }
    }
}
