use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::inference::Posterior;
use crate::model::{DisplayConfigDoc, Network, NodeId, Severity};
use crate::scalar::Probability;

/// Severity-aware display threshold: a disease is shown when its posterior is
/// at least `tau0 / multiplier(severity)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplayThresholdConfig<T> {
    pub tau0: T,
    pub severity_multipliers: BTreeMap<Severity, T>,
    pub max_length: usize,
}

impl<T: Probability> Default for DisplayThresholdConfig<T> {
    fn default() -> Self {
        Self::from_document(&DisplayConfigDoc::default())
    }
}

impl<T: Probability> DisplayThresholdConfig<T> {
    pub fn from_document(doc: &DisplayConfigDoc) -> Self {
        Self {
            tau0: T::of(doc.tau0),
            severity_multipliers: Severity::ALL.iter().map(|&s| (s, T::of(doc.multiplier(s)))).collect(),
            max_length: doc.max_length,
        }
    }

    pub fn to_document(&self) -> DisplayConfigDoc {
        DisplayConfigDoc {
            tau0: self.tau0.as_f64(),
            severity_multipliers: self
                .severity_multipliers
                .iter()
                .map(|(&s, m)| (s, m.as_f64()))
                .collect(),
            max_length: self.max_length,
        }
    }

    pub fn with_tau0(mut self, tau0: T) -> Self {
        self.tau0 = tau0;
        self
    }

    pub fn threshold(&self, severity: Severity) -> T {
        let m = self
            .severity_multipliers
            .get(&severity)
            .copied()
            .unwrap_or_else(|| T::of(severity.default_multiplier()));
        self.tau0 / m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferentialEntry<T> {
    pub disease: NodeId,
    pub probability: T,
}

/// Displayed diseases, most probable first.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Differential<T> {
    pub entries: Vec<DifferentialEntry<T>>,
}

impl<T: Probability> Differential<T> {
    pub fn ids(&self) -> Vec<NodeId> {
        self.entries.iter().map(|e| e.disease.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Posterior descending, then higher severity, then id.
pub(crate) fn display_order<T: Probability>(a: (T, Severity, &NodeId), b: (T, Severity, &NodeId)) -> Ordering {
    b.0.partial_cmp(&a.0)
        .unwrap_or(Ordering::Equal)
        .then_with(|| b.1.cmp(&a.1))
        .then_with(|| a.2.cmp(b.2))
}

/// Filters and orders a posterior into the displayed differential.
pub fn differential_from_posterior<T: Probability>(
    net: &Network<T>,
    posterior: &Posterior<T>,
    cfg: &DisplayThresholdConfig<T>,
) -> Differential<T> {
    let mut shown: Vec<_> = net
        .diseases()
        .iter()
        .filter_map(|d| {
            let p = posterior.marginal(d.id.as_str())?;
            (p >= cfg.threshold(d.severity)).then_some((p, d.severity, &d.id))
        })
        .collect();
    shown.sort_by(|&a, &b| display_order(a, b));
    shown.truncate(cfg.max_length);
    Differential {
        entries: shown
            .into_iter()
            .map(|(p, _, id)| DifferentialEntry {
                disease: id.clone(),
                probability: p,
            })
            .collect(),
    }
}
