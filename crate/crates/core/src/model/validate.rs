use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::model::document::{CptDoc, ModelDocument};
use crate::model::{normalize_alias, NodeId};
use crate::triage::TriageAction;

/// Name of the broken invariant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    InvalidId,
    DuplicateId,
    DanglingParent,
    LayeringViolation,
    ProbabilityOutOfRange,
    LeakNotBelowOne,
    EmptyParentSet,
    DuplicateAlias,
    NegativeIncidence,
    IncompleteHarmMatrix,
    NegativeHarm,
    UnknownHarmDisease,
    InvalidRedFlagRule,
    InvalidDisplayConfig,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::InvalidId => "invalid-id",
            Rule::DuplicateId => "duplicate-id",
            Rule::DanglingParent => "dangling-parent",
            Rule::LayeringViolation => "layering-violation",
            Rule::ProbabilityOutOfRange => "probability-out-of-range",
            Rule::LeakNotBelowOne => "leak-not-below-one",
            Rule::EmptyParentSet => "empty-parent-set",
            Rule::DuplicateAlias => "duplicate-alias",
            Rule::NegativeIncidence => "negative-incidence",
            Rule::IncompleteHarmMatrix => "incomplete-harm-matrix",
            Rule::NegativeHarm => "negative-harm",
            Rule::UnknownHarmDisease => "unknown-harm-disease",
            Rule::InvalidRedFlagRule => "invalid-red-flag-rule",
            Rule::InvalidDisplayConfig => "invalid-display-config",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Violation {
    /// Offending node (or rule / config key).
    pub node: String,
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]: {}", self.node, self.rule, self.detail)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Layer {
    Risk,
    Disease,
    Symptom,
}

struct Checker {
    out: Vec<Violation>,
}

impl Checker {
    fn push(&mut self, node: &str, rule: Rule, detail: impl Into<String>) {
        self.out.push(Violation {
            node: node.to_string(),
            rule,
            detail: detail.into(),
        });
    }

    fn probability(&mut self, node: &str, what: &str, p: f64) {
        if !(0.0..=1.0).contains(&p) {
            self.push(
                node,
                Rule::ProbabilityOutOfRange,
                format!("{what} = {p} is outside [0, 1]"),
            );
        }
    }

    fn cpt(&mut self, node: &str, cpt: &CptDoc, parent_layer: Layer, layers: &BTreeMap<&str, Layer>) {
        if !(0.0..=1.0).contains(&cpt.leak) {
            self.push(
                node,
                Rule::ProbabilityOutOfRange,
                format!("leak = {} is outside [0, 1]", cpt.leak),
            );
        } else if cpt.leak >= 1.0 {
            self.push(node, Rule::LeakNotBelowOne, "leak must be < 1");
        }
        for (parent, &w) in &cpt.weights {
            match layers.get(parent.as_str()) {
                None => self.push(node, Rule::DanglingParent, format!("parent {parent:?} does not exist")),
                Some(&l) if l != parent_layer => self.push(
                    node,
                    Rule::LayeringViolation,
                    format!("parent {parent:?} is not in the layer directly above"),
                ),
                Some(_) => {}
            }
            self.probability(node, &format!("weight[{parent}]"), w);
        }
    }
}

/// Checks every structural and numeric invariant of a model document.
/// Returns an empty list iff the document describes a valid network.
pub fn validate_document(doc: &ModelDocument) -> Vec<Violation> {
    let mut c = Checker { out: Vec::new() };

    let mut layers: BTreeMap<&str, Layer> = BTreeMap::new();
    let all = doc
        .risk_factors
        .iter()
        .map(|n| (n.id.as_str(), Layer::Risk))
        .chain(doc.diseases.iter().map(|n| (n.id.as_str(), Layer::Disease)))
        .chain(doc.symptoms.iter().map(|n| (n.id.as_str(), Layer::Symptom)));
    for (id, layer) in all {
        if !NodeId::is_valid(id) {
            c.push(id, Rule::InvalidId, "ids must match [a-z0-9_.-]+");
        }
        if layers.insert(id, layer).is_some() {
            c.push(id, Rule::DuplicateId, "id is declared more than once");
        }
    }

    for rf in &doc.risk_factors {
        c.probability(&rf.id, "prior", rf.prior);
    }
    for d in &doc.diseases {
        c.cpt(&d.id, &d.cpt, Layer::Risk, &layers);
        if d.annual_incidence_per_100k.is_nan() || d.annual_incidence_per_100k < 0.0 {
            c.push(&d.id, Rule::NegativeIncidence, "annual incidence must be >= 0");
        }
    }
    for s in &doc.symptoms {
        if s.cpt.weights.is_empty() {
            c.push(&s.id, Rule::EmptyParentSet, "symptoms need at least one disease parent");
        }
        c.cpt(&s.id, &s.cpt, Layer::Disease, &layers);
    }

    // Names and aliases share one case-insensitive namespace, which also may
    // not shadow another node's id.
    let mut aliases: BTreeMap<String, &str> = BTreeMap::new();
    let named = doc
        .risk_factors
        .iter()
        .map(|n| (&n.id, &n.name, &n.aliases))
        .chain(doc.diseases.iter().map(|n| (&n.id, &n.name, &n.aliases)))
        .chain(doc.symptoms.iter().map(|n| (&n.id, &n.name, &n.aliases)));
    for (id, name, extra) in named {
        for alias in std::iter::once(name).chain(extra.iter()) {
            let key = normalize_alias(alias);
            if key.is_empty() {
                continue;
            }
            if let Some(&other) = aliases.get(&key) {
                if other != id.as_str() {
                    c.push(
                        id,
                        Rule::DuplicateAlias,
                        format!("alias {alias:?} already maps to {other:?}"),
                    );
                }
                continue;
            }
            if layers.contains_key(key.as_str()) && key != *id {
                c.push(
                    id,
                    Rule::DuplicateAlias,
                    format!("alias {alias:?} is another node's id"),
                );
            }
            aliases.insert(key, id.as_str());
        }
    }

    for d in &doc.diseases {
        let row = doc.harm_matrix.get(&d.id);
        let missing: Vec<_> = TriageAction::ALL
            .iter()
            .filter(|a| row.is_none_or(|r| !r.contains_key(a)))
            .map(|a| a.as_str())
            .collect();
        if !missing.is_empty() {
            c.push(
                &d.id,
                Rule::IncompleteHarmMatrix,
                format!("no harm for {}", missing.join(", ")),
            );
        }
    }
    for (id, row) in &doc.harm_matrix {
        if layers.get(id.as_str()) != Some(&Layer::Disease) {
            c.push(id, Rule::UnknownHarmDisease, "harm row for an unknown disease");
        }
        for (a, &h) in row {
            if !h.is_finite() || h < 0.0 {
                c.push(
                    id,
                    Rule::NegativeHarm,
                    format!("harm for {} must be finite and >= 0", a.as_str()),
                );
            }
        }
    }

    let mut rule_ids = BTreeSet::new();
    for r in &doc.red_flag_rules {
        if !rule_ids.insert(r.id.as_str()) {
            c.push(&r.id, Rule::InvalidRedFlagRule, "duplicate rule id");
        }
        if r.required_symptoms.is_empty() {
            c.push(&r.id, Rule::InvalidRedFlagRule, "required_symptoms is empty");
        }
        for s in &r.required_symptoms {
            if layers.get(s.as_str()) != Some(&Layer::Symptom) {
                c.push(&r.id, Rule::InvalidRedFlagRule, format!("{s:?} is not a symptom"));
            }
        }
    }

    let dc = &doc.display_config;
    if !(dc.tau0 > 0.0 && dc.tau0 < 1.0) {
        c.push("display_config", Rule::InvalidDisplayConfig, "tau0 must lie in (0, 1)");
    }
    for (sev, &m) in &dc.severity_multipliers {
        if !m.is_finite() || m < 1.0 {
            c.push(
                "display_config",
                Rule::InvalidDisplayConfig,
                format!("multiplier for {sev:?} must be >= 1"),
            );
        }
    }
    if dc.max_length == 0 {
        c.push("display_config", Rule::InvalidDisplayConfig, "max_length must be >= 1");
    }

    c.out.sort();
    c.out
}
