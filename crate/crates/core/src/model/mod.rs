//! Three-layer noisy-OR network: risk factors → diseases → symptoms.

mod document;
mod id;
mod validate;

use std::collections::{BTreeMap, HashMap};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::consult::DisplayThresholdConfig;
use crate::scalar::Probability;
use crate::triage::{RedFlagRule, TriageAction};

pub use document::{CptDoc, DiseaseDoc, DisplayConfigDoc, ModelDocument, RedFlagRuleDoc, RiskFactorDoc, SymptomDoc};
pub use id::{InvalidNodeId, NodeId};
pub use validate::{validate_document, Rule, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Low,
    Moderate,
    Severe,
    Critical,
}

impl Severity {
    pub const ALL: [Severity; 4] = [Severity::Low, Severity::Moderate, Severity::Severe, Severity::Critical];

    pub fn default_multiplier(self) -> f64 {
        match self {
            Severity::Low => 1.0,
            Severity::Moderate => 2.0,
            Severity::Severe => 4.0,
            Severity::Critical => 8.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Low => "low",
            Severity::Moderate => "moderate",
            Severity::Severe => "severe",
            Severity::Critical => "critical",
        }
    }
}

/// Noisy-OR conditional: `P(child | parents) = 1 - (1 - leak) * prod(1 - weight[p])`
/// over the active parents.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyOr<T> {
    pub leak: T,
    pub weights: BTreeMap<NodeId, T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskFactor<T> {
    pub id: NodeId,
    pub name: String,
    pub prior: T,
    pub aliases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Disease<T> {
    pub id: NodeId,
    pub name: String,
    pub cpt: NoisyOr<T>,
    pub severity: Severity,
    /// Cases per 100,000 persons per year.
    pub annual_incidence: T,
    pub aliases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Symptom<T> {
    pub id: NodeId,
    pub name: String,
    pub cpt: NoisyOr<T>,
    pub aliases: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    RiskFactor,
    Disease,
    Symptom,
}

/// Position of a node inside its layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeRef {
    pub kind: NodeKind,
    pub index: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("failed to read model: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed model document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid model: {}", display_violations(.0))]
    Invalid(Vec<Violation>),
}

fn display_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Lowercased, whitespace-trimmed alias key.
pub fn normalize_alias(text: &str) -> String {
    text.trim().to_lowercase()
}

/// Immutable network. Nodes within each layer are kept sorted by id so that
/// every iteration order (and hence every float summation) is deterministic.
#[derive(Debug, Clone)]
pub struct Network<T> {
    risk_factors: Vec<RiskFactor<T>>,
    diseases: Vec<Disease<T>>,
    symptoms: Vec<Symptom<T>>,
    red_flag_rules: Vec<RedFlagRule>,
    harm: Vec<[T; 6]>,
    display: DisplayThresholdConfig<T>,
    alias_index: BTreeMap<String, NodeId>,
    index: HashMap<NodeId, NodeRef>,
    // Parent lists by layer position, for the inference loops.
    disease_parents: Vec<Vec<(usize, T)>>,
    symptom_parents: Vec<Vec<(usize, T)>>,
}

/// Parses and validates a model document.
pub fn load_network<T: Probability, R: Read>(source: R) -> Result<Network<T>, ModelError> {
    let doc: ModelDocument = serde_json::from_reader(source)?;
    Network::from_document(&doc)
}

fn sorted_ids<'a, I: Iterator<Item = &'a str>>(ids: I) -> Vec<NodeId> {
    let mut v: Vec<NodeId> = ids.map(|s| NodeId::new(s).expect("validated id")).collect();
    v.sort();
    v
}

impl<T: Probability> Network<T> {
    pub fn from_document(doc: &ModelDocument) -> Result<Self, ModelError> {
        let violations = validate_document(doc);
        if !violations.is_empty() {
            return Err(ModelError::Invalid(violations));
        }
        let id = |s: &str| NodeId::new(s).expect("validated id");
        let cpt = |c: &CptDoc| NoisyOr {
            leak: T::of(c.leak),
            weights: c.weights.iter().map(|(k, &v)| (id(k), T::of(v))).collect(),
        };

        let mut risk_factors: Vec<_> = doc
            .risk_factors
            .iter()
            .map(|n| RiskFactor {
                id: id(&n.id),
                name: n.name.clone(),
                prior: T::of(n.prior),
                aliases: n.aliases.clone(),
            })
            .collect();
        risk_factors.sort_by(|a, b| a.id.cmp(&b.id));
        let mut diseases: Vec<_> = doc
            .diseases
            .iter()
            .map(|n| Disease {
                id: id(&n.id),
                name: n.name.clone(),
                cpt: cpt(&n.cpt),
                severity: n.severity,
                annual_incidence: T::of(n.annual_incidence_per_100k),
                aliases: n.aliases.clone(),
            })
            .collect();
        diseases.sort_by(|a, b| a.id.cmp(&b.id));
        let mut symptoms: Vec<_> = doc
            .symptoms
            .iter()
            .map(|n| Symptom {
                id: id(&n.id),
                name: n.name.clone(),
                cpt: cpt(&n.cpt),
                aliases: n.aliases.clone(),
            })
            .collect();
        symptoms.sort_by(|a, b| a.id.cmp(&b.id));

        let mut index = HashMap::new();
        for (i, n) in risk_factors.iter().enumerate() {
            index.insert(
                n.id.clone(),
                NodeRef {
                    kind: NodeKind::RiskFactor,
                    index: i,
                },
            );
        }
        for (i, n) in diseases.iter().enumerate() {
            index.insert(
                n.id.clone(),
                NodeRef {
                    kind: NodeKind::Disease,
                    index: i,
                },
            );
        }
        for (i, n) in symptoms.iter().enumerate() {
            index.insert(
                n.id.clone(),
                NodeRef {
                    kind: NodeKind::Symptom,
                    index: i,
                },
            );
        }

        let parents =
            |w: &BTreeMap<NodeId, T>| -> Vec<(usize, T)> { w.iter().map(|(p, &l)| (index[p].index, l)).collect() };
        let disease_parents = diseases.iter().map(|d| parents(&d.cpt.weights)).collect();
        let symptom_parents = symptoms.iter().map(|s| parents(&s.cpt.weights)).collect();

        let harm = diseases
            .iter()
            .map(|d| {
                let row = &doc.harm_matrix[d.id.as_str()];
                TriageAction::ALL.map(|a| T::of(row[&a]))
            })
            .collect();

        let mut red_flag_rules: Vec<_> = doc
            .red_flag_rules
            .iter()
            .map(|r| RedFlagRule {
                id: r.id.clone(),
                required_symptoms: r.required_symptoms.iter().map(|s| id(s)).collect(),
                min_action: r.min_action,
            })
            .collect();
        red_flag_rules.sort_by(|a, b| a.id.cmp(&b.id));

        let mut alias_index = BTreeMap::new();
        let named = risk_factors
            .iter()
            .map(|n| (&n.id, &n.name, &n.aliases))
            .chain(diseases.iter().map(|n| (&n.id, &n.name, &n.aliases)))
            .chain(symptoms.iter().map(|n| (&n.id, &n.name, &n.aliases)));
        for (id, name, aliases) in named {
            for a in std::iter::once(name).chain(aliases) {
                let key = normalize_alias(a);
                if !key.is_empty() {
                    alias_index.insert(key, id.clone());
                }
            }
        }

        Ok(Self {
            risk_factors,
            diseases,
            symptoms,
            red_flag_rules,
            harm,
            display: DisplayThresholdConfig::from_document(&doc.display_config),
            alias_index,
            index,
            disease_parents,
            symptom_parents,
        })
    }

    /// Rebuilds a document equivalent to the one this network was loaded from.
    pub fn to_document(&self) -> ModelDocument {
        let cpt = |c: &NoisyOr<T>| CptDoc {
            leak: c.leak.as_f64(),
            weights: c.weights.iter().map(|(k, v)| (k.to_string(), v.as_f64())).collect(),
        };
        ModelDocument {
            risk_factors: self
                .risk_factors
                .iter()
                .map(|n| RiskFactorDoc {
                    id: n.id.to_string(),
                    name: n.name.clone(),
                    aliases: n.aliases.clone(),
                    prior: n.prior.as_f64(),
                })
                .collect(),
            diseases: self
                .diseases
                .iter()
                .map(|n| DiseaseDoc {
                    id: n.id.to_string(),
                    name: n.name.clone(),
                    aliases: n.aliases.clone(),
                    cpt: cpt(&n.cpt),
                    severity: n.severity,
                    annual_incidence_per_100k: n.annual_incidence.as_f64(),
                })
                .collect(),
            symptoms: self
                .symptoms
                .iter()
                .map(|n| SymptomDoc {
                    id: n.id.to_string(),
                    name: n.name.clone(),
                    aliases: n.aliases.clone(),
                    cpt: cpt(&n.cpt),
                })
                .collect(),
            red_flag_rules: self
                .red_flag_rules
                .iter()
                .map(|r| RedFlagRuleDoc {
                    id: r.id.clone(),
                    required_symptoms: r.required_symptoms.iter().map(ToString::to_string).collect(),
                    min_action: r.min_action,
                })
                .collect(),
            harm_matrix: self
                .diseases
                .iter()
                .zip(&self.harm)
                .map(|(d, row)| {
                    let row = TriageAction::ALL.iter().map(|&a| (a, row[a.rank()].as_f64())).collect();
                    (d.id.to_string(), row)
                })
                .collect(),
            display_config: self.display.to_document(),
        }
    }

    /// Re-checks every invariant. Always empty for a network built by
    /// [`load_network`]; kept for callers that assemble documents by hand.
    pub fn validate(&self) -> Vec<Violation> {
        validate_document(&self.to_document())
    }

    pub fn risk_factors(&self) -> &[RiskFactor<T>] {
        &self.risk_factors
    }

    pub fn diseases(&self) -> &[Disease<T>] {
        &self.diseases
    }

    pub fn symptoms(&self) -> &[Symptom<T>] {
        &self.symptoms
    }

    pub fn red_flag_rules(&self) -> &[RedFlagRule] {
        &self.red_flag_rules
    }

    pub fn display_config(&self) -> &DisplayThresholdConfig<T> {
        &self.display
    }

    pub fn alias_index(&self) -> &BTreeMap<String, NodeId> {
        &self.alias_index
    }

    pub fn node_count(&self) -> usize {
        self.risk_factors.len() + self.diseases.len() + self.symptoms.len()
    }

    pub fn lookup(&self, id: &str) -> Option<NodeRef> {
        self.index.get(id).copied()
    }

    pub fn disease(&self, id: &str) -> Option<&Disease<T>> {
        match self.lookup(id)? {
            NodeRef {
                kind: NodeKind::Disease,
                index,
            } => Some(&self.diseases[index]),
            _ => None,
        }
    }

    pub fn symptom(&self, id: &str) -> Option<&Symptom<T>> {
        match self.lookup(id)? {
            NodeRef {
                kind: NodeKind::Symptom,
                index,
            } => Some(&self.symptoms[index]),
            _ => None,
        }
    }

    /// Display name of any node.
    pub fn name_of(&self, id: &str) -> Option<&str> {
        let r = self.lookup(id)?;
        Some(match r.kind {
            NodeKind::RiskFactor => &self.risk_factors[r.index].name,
            NodeKind::Disease => &self.diseases[r.index].name,
            NodeKind::Symptom => &self.symptoms[r.index].name,
        })
    }

    pub fn harm(&self, disease: usize, action: TriageAction) -> T {
        self.harm[disease][action.rank()]
    }

    /// Case-insensitive exact lookup against names and aliases, then ids.
    /// No fuzzy matching.
    pub fn resolve_alias(&self, text: &str) -> Option<NodeId> {
        let key = normalize_alias(text);
        if let Some(id) = self.alias_index.get(&key) {
            return Some(id.clone());
        }
        self.index.get_key_value(key.as_str()).map(|(k, _)| k.clone())
    }

    pub(crate) fn disease_parents(&self, disease: usize) -> &[(usize, T)] {
        &self.disease_parents[disease]
    }

    pub(crate) fn symptom_parents(&self, symptom: usize) -> &[(usize, T)] {
        &self.symptom_parents[symptom]
    }

    /// Every (child, parent) edge by id, for structural checks.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for d in &self.diseases {
            out.extend(d.cpt.weights.keys().map(|p| (d.id.clone(), p.clone())));
        }
        for s in &self.symptoms {
            out.extend(s.cpt.weights.keys().map(|p| (s.id.clone(), p.clone())));
        }
        out
    }

    pub fn disease_ids(&self) -> Vec<NodeId> {
        sorted_ids(self.diseases.iter().map(|d| d.id.as_str()))
    }
}
