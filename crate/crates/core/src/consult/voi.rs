//! Question selection by expected reduction in per-disease binary entropy.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::consult::differential::display_order;
use crate::evidence::Evidence;
use crate::inference::{self, InferenceError, InferenceMethod};
use crate::model::{Network, NodeId};
use crate::scalar::Probability;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuestionScore<T> {
    pub symptom: NodeId,
    /// Expected information gain in bits, summed over the candidate diseases.
    pub value: T,
}

/// Indices of the `k` most probable diseases, in display order.
pub(crate) fn top_diseases<T: Probability>(net: &Network<T>, marginals: &[T], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..marginals.len()).collect();
    idx.sort_by(|&a, &b| {
        let (da, db) = (&net.diseases()[a], &net.diseases()[b]);
        display_order((marginals[a], da.severity, &da.id), (marginals[b], db.severity, &db.id))
    });
    idx.truncate(k);
    idx
}

/// VOI of every symptom that is neither observed nor in `exclude`, in id order.
///
/// For symptom `S` and candidate set `D` (top-k diseases by posterior):
/// `Σ_{d∈D} H(P(d|e)) − Σ_a P(S=a|e)·H(P(d|e,S=a))`.
pub fn question_scores<T: Probability>(
    net: &Network<T>,
    e: &Evidence,
    exclude: &BTreeSet<NodeId>,
    top_k: usize,
    method: InferenceMethod,
) -> Result<Vec<QuestionScore<T>>, InferenceError> {
    let candidates: Vec<usize> = net
        .symptoms()
        .iter()
        .enumerate()
        .filter(|(_, s)| !e.contains(s.id.as_str()) && !exclude.contains(&s.id))
        .map(|(i, _)| i)
        .collect();
    let m = inference::moments(net, e, method, Some(candidates))?;
    let marginals: Vec<T> = (0..net.diseases().len()).map(|d| m.marginal(d)).collect();
    let top = top_diseases(net, &marginals, top_k);

    let scores = m
        .tracked
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let p_present = m.predictive(k);
            let mut value = T::zero();
            for &d in &top {
                let mut expected = T::zero();
                for (present, weight) in [(true, p_present), (false, T::one() - p_present)] {
                    if let Some(p) = m.conditional(k, d, present) {
                        expected = expected + weight * p.binary_entropy();
                    }
                }
                value = value + marginals[d].binary_entropy() - expected;
            }
            QuestionScore {
                symptom: net.symptoms()[s].id.clone(),
                value,
            }
        })
        .collect();
    Ok(scores)
}

/// Highest-VOI symptom, or `None` when nothing reaches `epsilon`.
/// Ties keep the lexicographically smallest id.
pub fn best_question<T: Probability>(scores: &[QuestionScore<T>], epsilon: T) -> Option<NodeId> {
    let mut best: Option<&QuestionScore<T>> = None;
    for s in scores {
        if best.is_none_or(|b| s.value > b.value) {
            best = Some(s);
        }
    }
    best.filter(|b| b.value >= epsilon).map(|b| b.symptom.clone())
}
