//! Reference computations that share no code with the engine: everything is
//! read from the model document and computed by enumerating the full joint
//! table over every node, symptoms included.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;
use triagenet_core::model::{CptDoc, DiseaseDoc, ModelDocument, RiskFactorDoc, SymptomDoc};
use triagenet_core::{Severity, TriageAction};

pub const ACTIONS: [TriageAction; 6] = [
    TriageAction::SelfCare,
    TriageAction::Pharmacy,
    TriageAction::GpNonurgent,
    TriageAction::GpUrgent,
    TriageAction::AAndE,
    TriageAction::Ambulance,
];

enum Cpd {
    Root(f64),
    NoisyOr { leak: f64, parents: Vec<(usize, f64)> },
}

/// Every node of the document in layer order with its local distribution.
pub struct JointTable {
    pub ids: Vec<String>,
    cpds: Vec<Cpd>,
    pub n_risk: usize,
    pub n_disease: usize,
}

impl JointTable {
    pub fn new(doc: &ModelDocument) -> Self {
        let mut ids: Vec<String> = Vec::new();
        let mut cpds = Vec::new();
        for r in &doc.risk_factors {
            ids.push(r.id.clone());
            cpds.push(Cpd::Root(r.prior));
        }
        let index_of = |ids: &[String], id: &str| ids.iter().position(|x| x == id).expect("parent exists");
        let noisy = |ids: &[String], cpt: &CptDoc| Cpd::NoisyOr {
            leak: cpt.leak,
            parents: cpt.weights.iter().map(|(p, &w)| (index_of(ids, p), w)).collect(),
        };
        for d in &doc.diseases {
            let c = noisy(&ids, &d.cpt);
            ids.push(d.id.clone());
            cpds.push(c);
        }
        for s in &doc.symptoms {
            let c = noisy(&ids, &s.cpt);
            ids.push(s.id.clone());
            cpds.push(c);
        }
        assert!(ids.len() <= 24, "joint table too large for brute force");
        Self {
            ids,
            cpds,
            n_risk: doc.risk_factors.len(),
            n_disease: doc.diseases.len(),
        }
    }

    fn index(&self, id: &str) -> usize {
        self.ids
            .iter()
            .position(|x| x == id)
            .unwrap_or_else(|| panic!("unknown node {id}"))
    }

    /// Probability of one complete assignment (bit i = node i present).
    pub fn joint(&self, world: u32) -> f64 {
        let on = |i: usize| world >> i & 1 == 1;
        let mut p = 1.0;
        for (i, cpd) in self.cpds.iter().enumerate() {
            let p_on = match cpd {
                Cpd::Root(prior) => *prior,
                Cpd::NoisyOr { leak, parents } => {
                    let mut off = 1.0 - leak;
                    for &(j, w) in parents {
                        if on(j) {
                            off *= 1.0 - w;
                        }
                    }
                    1.0 - off
                }
            };
            p *= if on(i) { p_on } else { 1.0 - p_on };
        }
        p
    }

    /// `(P(evidence), P(node present | evidence) for every node)`.
    pub fn query(&self, evidence: &[(String, bool)]) -> (f64, Vec<f64>) {
        let constraints: Vec<(usize, bool)> = evidence.iter().map(|(id, v)| (self.index(id), *v)).collect();
        let n = self.ids.len();
        let mut z = 0.0;
        let mut mass = vec![0.0; n];
        for world in 0u32..(1 << n) {
            if constraints.iter().any(|&(i, v)| (world >> i & 1 == 1) != v) {
                continue;
            }
            let p = self.joint(world);
            z += p;
            for (i, m) in mass.iter_mut().enumerate() {
                if world >> i & 1 == 1 {
                    *m += p;
                }
            }
        }
        (
            z,
            mass.into_iter()
                .map(|m| if z > 0.0 { m / z } else { f64::NAN })
                .collect(),
        )
    }

    /// Disease id → P(disease | evidence).
    pub fn disease_posterior(&self, evidence: &[(String, bool)]) -> BTreeMap<String, f64> {
        let (_, marg) = self.query(evidence);
        (self.n_risk..self.n_risk + self.n_disease)
            .map(|i| (self.ids[i].clone(), marg[i]))
            .collect()
    }

    pub fn probability_present(&self, evidence: &[(String, bool)], id: &str) -> f64 {
        self.query(evidence).1[self.index(id)]
    }
}

pub fn entropy_bits(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
    }
}

fn severity_rank(s: Severity) -> u8 {
    match s {
        Severity::Low => 0,
        Severity::Moderate => 1,
        Severity::Severe => 2,
        Severity::Critical => 3,
    }
}

/// Diseases by posterior descending, then severity descending, then id.
pub fn ranked_diseases(doc: &ModelDocument, post: &BTreeMap<String, f64>) -> Vec<String> {
    let mut ds: Vec<&DiseaseDoc> = doc.diseases.iter().collect();
    ds.sort_by(|a, b| {
        post[&b.id]
            .partial_cmp(&post[&a.id])
            .unwrap()
            .then(severity_rank(b.severity).cmp(&severity_rank(a.severity)))
            .then(a.id.cmp(&b.id))
    });
    ds.into_iter().map(|d| d.id.clone()).collect()
}

/// VOI by recomputing the posterior under each hypothetical answer.
pub fn brute_force_voi(doc: &ModelDocument, evidence: &[(String, bool)], symptom: &str, top_k: usize) -> f64 {
    let table = JointTable::new(doc);
    let now = table.disease_posterior(evidence);
    let top: Vec<String> = ranked_diseases(doc, &now).into_iter().take(top_k).collect();
    let p_yes = table.probability_present(evidence, symptom);
    let mut total = 0.0;
    for d in &top {
        let mut expected = 0.0;
        for (answer, weight) in [(true, p_yes), (false, 1.0 - p_yes)] {
            if weight <= 0.0 {
                continue;
            }
            let mut extended = evidence.to_vec();
            extended.push((symptom.to_string(), answer));
            expected += weight * entropy_bits(table.disease_posterior(&extended)[d]);
        }
        total += entropy_bits(now[d]) - expected;
    }
    total
}

/// Highest brute-force VOI among unobserved symptoms; ties go to the
/// smallest id. `None` when the best value is below `epsilon`.
pub fn brute_force_best_question(
    doc: &ModelDocument,
    evidence: &[(String, bool)],
    top_k: usize,
    epsilon: f64,
) -> Option<(String, f64)> {
    let mut candidates: Vec<&SymptomDoc> = doc
        .symptoms
        .iter()
        .filter(|s| !evidence.iter().any(|(id, _)| *id == s.id))
        .collect();
    candidates.sort_by(|a, b| a.id.cmp(&b.id));
    let mut best: Option<(String, f64)> = None;
    for s in candidates {
        let v = brute_force_voi(doc, evidence, &s.id, top_k);
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((s.id.clone(), v));
        }
    }
    best.filter(|(_, v)| *v >= epsilon)
}

/// `Σ_d P(d)·harm(d, a) + c·rank(a)` for every action, straight from the document.
pub fn expected_harms(doc: &ModelDocument, post: &BTreeMap<String, f64>, c: f64) -> [f64; 6] {
    let mut out = [0.0; 6];
    for (rank, a) in ACTIONS.iter().enumerate() {
        out[rank] = c * rank as f64
            + doc
                .diseases
                .iter()
                .map(|d| post[&d.id] * doc.harm_matrix[&d.id][a])
                .sum::<f64>();
    }
    out
}

/// Random valid three-layer document with `n_risk + n_disease` latent nodes.
pub fn random_document<R: Rng>(rng: &mut R, n_risk: usize, n_disease: usize, n_symptom: usize) -> ModelDocument {
    let risk_factors: Vec<RiskFactorDoc> = (0..n_risk)
        .map(|i| RiskFactorDoc {
            id: format!("r{i}"),
            name: format!("Risk {i}"),
            aliases: vec![],
            prior: rng.random_range(0.02..0.6),
        })
        .collect();
    let severities = [Severity::Low, Severity::Moderate, Severity::Severe, Severity::Critical];
    let diseases: Vec<DiseaseDoc> = (0..n_disease)
        .map(|i| {
            let mut weights = BTreeMap::new();
            for r in &risk_factors {
                if rng.random_bool(0.5) {
                    weights.insert(r.id.clone(), rng.random_range(0.05..0.9));
                }
            }
            DiseaseDoc {
                id: format!("d{i}"),
                name: format!("Disease {i}"),
                aliases: vec![],
                cpt: CptDoc {
                    leak: rng.random_range(0.01..0.3),
                    weights,
                },
                severity: severities[rng.random_range(0..4)],
                annual_incidence_per_100k: rng.random_range(1.0..5000.0),
            }
        })
        .collect();
    let symptoms: Vec<SymptomDoc> = (0..n_symptom)
        .map(|i| {
            let mut weights = BTreeMap::new();
            for d in &diseases {
                if rng.random_bool(0.5) {
                    weights.insert(d.id.clone(), rng.random_range(0.05..0.95));
                }
            }
            if weights.is_empty() {
                let d = &diseases[rng.random_range(0..diseases.len())];
                weights.insert(d.id.clone(), rng.random_range(0.05..0.95));
            }
            SymptomDoc {
                id: format!("s{i}"),
                name: format!("Symptom {i}"),
                aliases: vec![],
                cpt: CptDoc {
                    leak: rng.random_range(0.001..0.2),
                    weights,
                },
            }
        })
        .collect();
    let harm_matrix = diseases
        .iter()
        .map(|d| {
            let row = ACTIONS.iter().map(|&a| (a, rng.random_range(0.0..10.0))).collect();
            (d.id.clone(), row)
        })
        .collect();
    ModelDocument {
        risk_factors,
        diseases,
        symptoms,
        red_flag_rules: vec![],
        harm_matrix,
        display_config: Default::default(),
    }
}

/// Random evidence over symptoms and risk factors (never diseases).
pub fn random_evidence<R: Rng>(rng: &mut R, doc: &ModelDocument) -> Vec<(String, bool)> {
    let mut out = Vec::new();
    for s in &doc.symptoms {
        if rng.random_bool(0.6) {
            out.push((s.id.clone(), rng.random_bool(0.5)));
        }
    }
    for r in &doc.risk_factors {
        if rng.random_bool(0.3) {
            out.push((r.id.clone(), rng.random_bool(0.5)));
        }
    }
    out
}

pub fn to_evidence(observations: &[(String, bool)]) -> triagenet_core::Evidence {
    observations.iter().fold(triagenet_core::Evidence::new(), |e, (id, v)| {
        e.with(id, triagenet_core::Presence::from_bool(*v))
    })
}

pub fn load_document(path: &std::path::Path) -> ModelDocument {
    serde_json::from_slice(&std::fs::read(path).expect("readable model")).expect("valid model json")
}
