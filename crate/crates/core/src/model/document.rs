//! On-disk model document. Field names are normative and unknown keys are
//! rejected at parse time; semantic checks live in [`super::validate`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::Severity;
use crate::triage::TriageAction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub risk_factors: Vec<RiskFactorDoc>,
    pub diseases: Vec<DiseaseDoc>,
    pub symptoms: Vec<SymptomDoc>,
    #[serde(default)]
    pub red_flag_rules: Vec<RedFlagRuleDoc>,
    #[serde(default)]
    pub harm_matrix: BTreeMap<String, BTreeMap<TriageAction, f64>>,
    #[serde(default)]
    pub display_config: DisplayConfigDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskFactorDoc {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub aliases: Vec<String>,
    pub prior: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiseaseDoc {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub aliases: Vec<String>,
    pub cpt: CptDoc,
    pub severity: Severity,
    pub annual_incidence_per_100k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymptomDoc {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub aliases: Vec<String>,
    pub cpt: CptDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CptDoc {
    pub leak: f64,
    #[serde(default)]
    pub weights: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RedFlagRuleDoc {
    pub id: String,
    pub required_symptoms: Vec<String>,
    pub min_action: TriageAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisplayConfigDoc {
    #[serde(default = "default_tau0")]
    pub tau0: f64,
    #[serde(default)]
    pub severity_multipliers: BTreeMap<Severity, f64>,
    #[serde(default = "default_max_length")]
    pub max_length: usize,
}

fn default_tau0() -> f64 {
    0.05
}

fn default_max_length() -> usize {
    10
}

impl Default for DisplayConfigDoc {
    fn default() -> Self {
        Self {
            tau0: default_tau0(),
            severity_multipliers: BTreeMap::new(),
            max_length: default_max_length(),
        }
    }
}

impl DisplayConfigDoc {
    /// Divisor for a severity level, falling back to 1/2/4/8.
    pub fn multiplier(&self, severity: Severity) -> f64 {
        self.severity_multipliers
            .get(&severity)
            .copied()
            .unwrap_or_else(|| severity.default_multiplier())
    }
}
