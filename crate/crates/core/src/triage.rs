//! Expected-harm triage with an overtriage penalty and red-flag floors.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::evidence::Evidence;
use crate::inference::{self, InferenceError, InferenceMethod, Posterior};
use crate::model::{Network, NodeId};
use crate::scalar::Probability;

pub const DEFAULT_OVERTRIAGE_PENALTY: f64 = 0.05;

/// Six care actions in increasing urgency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriageAction {
    SelfCare = 0,
    Pharmacy = 1,
    GpNonurgent = 2,
    GpUrgent = 3,
    AAndE = 4,
    Ambulance = 5,
}

impl TriageAction {
    pub const ALL: [TriageAction; 6] = [
        TriageAction::SelfCare,
        TriageAction::Pharmacy,
        TriageAction::GpNonurgent,
        TriageAction::GpUrgent,
        TriageAction::AAndE,
        TriageAction::Ambulance,
    ];

    pub fn rank(self) -> usize {
        self as usize
    }

    pub fn from_rank(rank: usize) -> Option<Self> {
        Self::ALL.get(rank).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TriageAction::SelfCare => "self_care",
            TriageAction::Pharmacy => "pharmacy",
            TriageAction::GpNonurgent => "gp_nonurgent",
            TriageAction::GpUrgent => "gp_urgent",
            TriageAction::AAndE => "a_and_e",
            TriageAction::Ambulance => "ambulance",
        }
    }
}

/// Urgency rank, 0 (self care) to 5 (ambulance).
pub fn rank(a: TriageAction) -> usize {
    a.rank()
}

impl fmt::Display for TriageAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TriageAction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| format!("unknown triage action {s:?}"))
    }
}

/// Conjunction of symptoms that forces at least `min_action`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedFlagRule {
    pub id: String,
    pub required_symptoms: BTreeSet<NodeId>,
    pub min_action: TriageAction,
}

impl RedFlagRule {
    pub fn fires(&self, e: &Evidence) -> bool {
        self.required_symptoms
            .iter()
            .all(|s| e.get(s.as_str()).is_some_and(|p| p.is_present()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriageResult<T> {
    pub action: TriageAction,
    /// Argmin of expected harm before red-flag floors.
    pub base_action: TriageAction,
    pub expected_harms: BTreeMap<TriageAction, T>,
    pub fired_rules: Vec<RedFlagRule>,
    /// Diseases driving the decision, most probable first.
    pub explanation: Vec<(NodeId, T)>,
}

const EXPLANATION_LENGTH: usize = 3;

/// `EH(a) = Σ_d P(d|e)·harm(d, a) + c·rank(a)`.
pub fn expected_harm<T: Probability>(net: &Network<T>, posterior: &Posterior<T>, a: TriageAction, c: T) -> T {
    assert!(c >= T::zero(), "overtriage coefficient must be non-negative");
    expected_harm_from(net, &posterior.marginals_in_order(), a, c)
}

pub(crate) fn expected_harm_from<T: Probability>(net: &Network<T>, marginals: &[T], a: TriageAction, c: T) -> T {
    debug_assert_eq!(marginals.len(), net.diseases().len());
    let belief: T = marginals.iter().enumerate().map(|(d, &p)| p * net.harm(d, a)).sum();
    belief + c * T::of(a.rank() as f64)
}

pub fn expected_harms<T: Probability>(net: &Network<T>, posterior: &Posterior<T>, c: T) -> [T; 6] {
    let m = posterior.marginals_in_order();
    TriageAction::ALL.map(|a| expected_harm_from(net, &m, a, c))
}

/// Minimum expected harm; ties go to the less urgent action.
pub fn least_harmful<T: Probability>(harms: &[T; 6]) -> TriageAction {
    let mut best = 0;
    for i in 1..6 {
        if harms[i] < harms[best] {
            best = i;
        }
    }
    TriageAction::ALL[best]
}

/// Rules whose symptoms are all present, and the highest floor among them.
pub fn red_flag_floor<'n, T: Probability>(
    net: &'n Network<T>,
    e: &Evidence,
) -> (Option<TriageAction>, Vec<&'n RedFlagRule>) {
    let fired: Vec<_> = net.red_flag_rules().iter().filter(|r| r.fires(e)).collect();
    (fired.iter().map(|r| r.min_action).max(), fired)
}

/// Triage from an already computed posterior.
pub fn recommend_with_posterior<T: Probability>(
    net: &Network<T>,
    e: &Evidence,
    posterior: &Posterior<T>,
    c: T,
) -> TriageResult<T> {
    let harms = expected_harms(net, posterior, c);
    let base_action = least_harmful(&harms);
    let (floor, fired) = red_flag_floor(net, e);
    let action = floor.map_or(base_action, |f| f.max(base_action));

    let mut explanation: Vec<_> = posterior
        .disease_marginals
        .iter()
        .map(|(id, &p)| (id.clone(), p))
        .collect();
    explanation.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    explanation.truncate(EXPLANATION_LENGTH);

    TriageResult {
        action,
        base_action,
        expected_harms: TriageAction::ALL.into_iter().zip(harms).collect(),
        fired_rules: fired.into_iter().cloned().collect(),
        explanation,
    }
}

/// Recommends the action minimizing expected harm, raised to any fired
/// red-flag floor. Uses exact inference.
pub fn recommend<T: Probability>(net: &Network<T>, e: &Evidence, c: T) -> Result<TriageResult<T>, InferenceError> {
    recommend_using(net, e, c, InferenceMethod::default())
}

pub fn recommend_using<T: Probability>(
    net: &Network<T>,
    e: &Evidence,
    c: T,
    method: InferenceMethod,
) -> Result<TriageResult<T>, InferenceError> {
    let posterior = inference::posterior(net, e, method)?;
    Ok(recommend_with_posterior(net, e, &posterior, c))
}
