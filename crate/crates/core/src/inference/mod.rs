//! Posterior marginals of diseases given evidence.
//!
//! Two methods share the same statistics: exact enumeration over every latent
//! configuration (the reference answer) and likelihood weighting.

pub(crate) mod worlds;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::evidence::{Evidence, EvidenceError};
use crate::model::{Network, NodeId};
use crate::scalar::Probability;
use worlds::{Moments, Observed, MAX_LATENTS};

pub const DEFAULT_ENUMERATION_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InferenceError {
    #[error("network has no diseases")]
    EmptyNetwork,
    #[error("{latents} latent nodes exceed the enumeration cap of {cap}")]
    CapExceeded { latents: usize, cap: usize },
    #[error("{0} latent nodes exceed the sampler limit of 128")]
    TooManyLatents(usize),
    #[error("evidence has zero probability under the model")]
    InconsistentEvidence,
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("assignment is missing node {0:?}")]
    IncompleteAssignment(String),
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Sampled,
}

/// How posteriors are computed. Carried in configs and session logs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum InferenceMethod {
    Exact { cap: usize },
    Sampled { samples: usize, seed: u64 },
}

impl Default for InferenceMethod {
    fn default() -> Self {
        InferenceMethod::Exact {
            cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InferenceWarning {
    /// Effective sample size fell below 1% of the draws.
    DegenerateWeights { effective_sample_size: f64, samples: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Posterior<T> {
    pub disease_marginals: BTreeMap<NodeId, T>,
    /// Predictive probability of each unobserved symptom being present.
    pub symptom_predictives: BTreeMap<NodeId, T>,
    pub method: Method,
    pub sample_count: usize,
    pub seed: Option<u64>,
    /// Per-disease standard error; empty for exact posteriors.
    pub standard_errors: BTreeMap<NodeId, T>,
    pub effective_sample_size: Option<T>,
    pub warnings: Vec<InferenceWarning>,
}

impl<T: Probability> Posterior<T> {
    pub fn marginal(&self, disease: &str) -> Option<T> {
        self.disease_marginals.get(disease).copied()
    }

    /// Marginals in network disease order (both are sorted by id).
    pub fn marginals_in_order(&self) -> Vec<T> {
        self.disease_marginals.values().copied().collect()
    }
}

/// Statistics for `e` under `method`, tracking the given unobserved symptoms.
pub(crate) fn moments<T: Probability>(
    net: &Network<T>,
    e: &Evidence,
    method: InferenceMethod,
    tracked: Option<Vec<usize>>,
) -> Result<Moments<T>, InferenceError> {
    e.check(net)?;
    if net.diseases().is_empty() {
        return Err(InferenceError::EmptyNetwork);
    }
    let obs = Observed::compile(net, e);
    let tracked = tracked.unwrap_or_else(|| obs.unobserved_symptoms());
    let latents = net.risk_factors().len() + net.diseases().len();
    let worlds = match method {
        InferenceMethod::Exact { cap } => {
            if latents > cap {
                return Err(InferenceError::CapExceeded { latents, cap });
            }
            worlds::enumerate(net, &obs)
        }
        InferenceMethod::Sampled { samples, seed } => {
            if samples == 0 {
                return Err(InferenceError::NoSamples);
            }
            if latents > MAX_LATENTS {
                return Err(InferenceError::TooManyLatents(latents));
            }
            worlds::sample(net, &obs, samples, seed)
        }
    };
    Moments::accumulate(net, &worlds, tracked).ok_or(InferenceError::InconsistentEvidence)
}

pub(crate) fn posterior_from_moments<T: Probability>(
    net: &Network<T>,
    m: &Moments<T>,
    method: InferenceMethod,
) -> Posterior<T> {
    let disease_marginals = net
        .diseases()
        .iter()
        .enumerate()
        .map(|(d, n)| (n.id.clone(), m.marginal(d)))
        .collect();
    let symptom_predictives = m
        .tracked
        .iter()
        .enumerate()
        .map(|(k, &s)| (net.symptoms()[s].id.clone(), m.predictive(k)))
        .collect();
    match method {
        InferenceMethod::Exact { .. } => Posterior {
            disease_marginals,
            symptom_predictives,
            method: Method::Exact,
            sample_count: 0,
            seed: None,
            standard_errors: BTreeMap::new(),
            effective_sample_size: None,
            warnings: Vec::new(),
        },
        InferenceMethod::Sampled { samples, seed } => {
            let ess = m.effective_sample_size();
            let mut warnings = Vec::new();
            if ess.as_f64() < 0.01 * samples as f64 {
                warnings.push(InferenceWarning::DegenerateWeights {
                    effective_sample_size: ess.as_f64(),
                    samples,
                });
            }
            Posterior {
                disease_marginals,
                symptom_predictives,
                method: Method::Sampled,
                sample_count: samples,
                seed: Some(seed),
                standard_errors: net
                    .diseases()
                    .iter()
                    .enumerate()
                    .map(|(d, n)| (n.id.clone(), m.standard_error(d)))
                    .collect(),
                effective_sample_size: Some(ess),
                warnings,
            }
        }
    }
}

pub fn posterior<T: Probability>(
    net: &Network<T>,
    e: &Evidence,
    method: InferenceMethod,
) -> Result<Posterior<T>, InferenceError> {
    let m = moments(net, e, method, None)?;
    Ok(posterior_from_moments(net, &m, method))
}

/// Exact posterior by enumeration, with the default cap of 20 latent nodes.
pub fn exact_posterior<T: Probability>(net: &Network<T>, e: &Evidence) -> Result<Posterior<T>, InferenceError> {
    exact_posterior_with_cap(net, e, DEFAULT_ENUMERATION_CAP)
}

pub fn exact_posterior_with_cap<T: Probability>(
    net: &Network<T>,
    e: &Evidence,
    cap: usize,
) -> Result<Posterior<T>, InferenceError> {
    posterior(net, e, InferenceMethod::Exact { cap })
}

/// Likelihood-weighted posterior; bit-identical for a fixed `(net, e, n, seed)`.
pub fn sampled_posterior<T: Probability>(
    net: &Network<T>,
    e: &Evidence,
    n: usize,
    seed: u64,
) -> Result<Posterior<T>, InferenceError> {
    posterior(net, e, InferenceMethod::Sampled { samples: n, seed })
}

/// Log joint probability of a complete assignment of every node.
/// Impossible assignments give negative infinity.
pub fn joint_log_probability<T: Probability>(
    net: &Network<T>,
    assignment: &BTreeMap<NodeId, bool>,
) -> Result<T, InferenceError> {
    for id in assignment.keys() {
        if net.lookup(id.as_str()).is_none() {
            return Err(EvidenceError::UnknownNode(id.to_string()).into());
        }
    }
    let state = |id: &NodeId| {
        assignment
            .get(id)
            .copied()
            .ok_or_else(|| InferenceError::IncompleteAssignment(id.to_string()))
    };
    let n_rf = net.risk_factors().len();
    let mut mask = 0u128;
    let mut lp = T::zero();
    for (i, rf) in net.risk_factors().iter().enumerate() {
        let s = state(&rf.id)?;
        if s {
            mask |= 1 << i;
        }
        lp = lp + worlds::ln_state(rf.prior, s);
    }
    for (d, dis) in net.diseases().iter().enumerate() {
        let s = state(&dis.id)?;
        let p = worlds::noisy_or(dis.cpt.leak, net.disease_parents(d), |rf| worlds::bit(mask, rf));
        lp = lp + worlds::ln_state(p, s);
        if s {
            mask |= 1 << (n_rf + d);
        }
    }
    for (s, sym) in net.symptoms().iter().enumerate() {
        let present = state(&sym.id)?;
        lp = lp + worlds::ln_state(worlds::symptom_probability(net, s, mask), present);
    }
    Ok(lp)
}
