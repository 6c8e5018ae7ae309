//! Differential and triage metrics over recorded case results. All values
//! are percentages in [0, 100].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{Network, NodeId};
use crate::scalar::Probability;
use crate::triage::TriageAction;
use crate::vignette::{Rating, Vignette};

/// Outcome of one consultation, from the engine or an external source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub vignette: String,
    pub source: String,
    pub differential: Vec<NodeId>,
    pub triage: TriageAction,
    #[serde(default)]
    pub question_count: usize,
    /// Posterior of each differential entry, when the source reports one.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("no case results")]
    Empty,
    #[error("result refers to unknown vignette {0:?}")]
    UnknownVignette(String),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("incidence weights sum to zero")]
    ZeroWeight,
    #[error("sources disagree on the number of cases")]
    MismatchedSources,
}

fn lookup<'v>(vignettes: &'v [Vignette], id: &str) -> Result<&'v Vignette, MetricError> {
    vignettes
        .iter()
        .find(|v| v.id == id)
        .ok_or_else(|| MetricError::UnknownVignette(id.to_string()))
}

fn per_case<F>(results: &[CaseResult], vignettes: &[Vignette], f: F) -> Result<Vec<f64>, MetricError>
where
    F: Fn(&CaseResult, &Vignette) -> f64,
{
    if results.is_empty() {
        return Err(MetricError::Empty);
    }
    results
        .iter()
        .map(|r| Ok(f(r, lookup(vignettes, &r.vignette)?)))
        .collect()
}

fn mean_percent(values: &[f64]) -> f64 {
    100.0 * values.iter().sum::<f64>() / values.len() as f64
}

fn hit(r: &CaseResult, v: &Vignette) -> f64 {
    if r.differential.contains(&v.modelled_disease) {
        1.0
    } else {
        0.0
    }
}

/// 1/|L| when the modelled disease is listed, else 0 (also for empty lists).
pub fn case_precision(r: &CaseResult, v: &Vignette) -> f64 {
    if r.differential.contains(&v.modelled_disease) {
        1.0 / r.differential.len() as f64
    } else {
        0.0
    }
}

/// Share of cases whose differential contains the modelled disease.
pub fn recall(results: &[CaseResult], vignettes: &[Vignette]) -> Result<f64, MetricError> {
    Ok(mean_percent(&per_case(results, vignettes, hit)?))
}

/// Mean per-case precision.
pub fn precision(results: &[CaseResult], vignettes: &[Vignette]) -> Result<f64, MetricError> {
    Ok(mean_percent(&per_case(results, vignettes, case_precision)?))
}

/// Harmonic mean of two percentages; 0 when both are 0.
pub fn f1(recall: f64, precision: f64) -> f64 {
    if recall + precision == 0.0 {
        0.0
    } else {
        2.0 * recall * precision / (recall + precision)
    }
}

/// Share of cases with the modelled disease among the first `k` entries.
pub fn top_k_recall(results: &[CaseResult], vignettes: &[Vignette], k: usize) -> Result<f64, MetricError> {
    if k == 0 {
        return Err(MetricError::InvalidK);
    }
    let hits = per_case(results, vignettes, |r, v| {
        let n = k.min(r.differential.len());
        if r.differential[..n].contains(&v.modelled_disease) {
            1.0
        } else {
            0.0
        }
    })?;
    Ok(mean_percent(&hits))
}

/// `100 * hits / n`.
pub fn percentage(hits: usize, n: usize) -> f64 {
    100.0 * hits as f64 / n as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriageScores {
    /// At least as urgent as the judge's minimum. `None` if nothing was scored.
    pub safety: Option<f64>,
    /// Within the judge's [min, max].
    pub appropriateness: Option<f64>,
    pub scored: usize,
    /// Cases without a judge range, excluded from both percentages.
    pub unscored: usize,
}

pub fn triage_scores(results: &[CaseResult], vignettes: &[Vignette]) -> Result<TriageScores, MetricError> {
    if results.is_empty() {
        return Err(MetricError::Empty);
    }
    let (mut safe, mut appropriate, mut scored, mut unscored) = (0, 0, 0, 0);
    for r in results {
        match lookup(vignettes, &r.vignette)?.judge_range {
            None => unscored += 1,
            Some(range) => {
                scored += 1;
                if r.triage >= range.min {
                    safe += 1;
                    if r.triage <= range.max {
                        appropriate += 1;
                    }
                }
            }
        }
    }
    let pct = |x| (scored > 0).then(|| percentage(x, scored));
    Ok(TriageScores {
        safety: pct(safe),
        appropriateness: pct(appropriate),
        scored,
        unscored,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedMetrics {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
}

/// Recall, precision and F1 with each case weighted by the annual incidence
/// of its modelled disease.
pub fn weighted_metrics<T: Probability>(
    results: &[CaseResult],
    vignettes: &[Vignette],
    net: &Network<T>,
) -> Result<WeightedMetrics, MetricError> {
    let weights = per_case(results, vignettes, |_, v| {
        net.disease(v.modelled_disease.as_str())
            .map_or(0.0, |d| d.annual_incidence.as_f64())
    })?;
    let max = weights.iter().copied().fold(0.0, f64::max);
    if max.is_nan() || max <= 0.0 {
        return Err(MetricError::ZeroWeight);
    }
    // Scaled to the largest weight, so uniform incidences give weights of
    // exactly 1 and reproduce the unweighted means bit for bit.
    let weights: Vec<f64> = weights.iter().map(|w| w / max).collect();
    let total: f64 = weights.iter().sum();
    let weighted =
        |values: Vec<f64>| -> f64 { 100.0 * values.iter().zip(&weights).map(|(x, w)| x * w).sum::<f64>() / total };
    let recall = weighted(per_case(results, vignettes, hit)?);
    let precision = weighted(per_case(results, vignettes, case_precision)?);
    Ok(WeightedMetrics {
        recall,
        precision,
        f1: f1(recall, precision),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingSummary {
    pub n: usize,
    /// Percentage of ratings at each level.
    pub distribution: BTreeMap<Rating, f64>,
    /// Percentage rated okay or better.
    pub pass: f64,
}

impl RatingSummary {
    pub fn from_counts(counts: [usize; 4]) -> Self {
        let n: usize = counts.iter().sum();
        let pct = |c: usize| if n == 0 { 0.0 } else { percentage(c, n) };
        let passed = Rating::ALL
            .iter()
            .zip(counts)
            .filter(|(r, _)| r.passes())
            .map(|(_, c)| c)
            .sum();
        Self {
            n,
            distribution: Rating::ALL.iter().zip(counts).map(|(&r, c)| (r, pct(c))).collect(),
            pass: pct(passed),
        }
    }
}

/// Distribution over the four levels and the share rated okay or better.
pub fn rating_pass_rate(ratings: &[Rating]) -> RatingSummary {
    let mut counts = [0usize; 4];
    for r in ratings {
        counts[*r as usize] += 1;
    }
    RatingSummary::from_counts(counts)
}

/// Ratings each rater gave `source`, summarised per rater.
pub fn pass_rates_for(source: &str, vignettes: &[Vignette]) -> BTreeMap<String, RatingSummary> {
    let mut by_rater: BTreeMap<String, Vec<Rating>> = BTreeMap::new();
    for v in vignettes {
        for (rater, per_source) in &v.ratings {
            if let Some(&r) = per_source.get(source) {
                by_rater.entry(rater.clone()).or_default().push(r);
            }
        }
    }
    by_rater.into_iter().map(|(k, v)| (k, rating_pass_rate(&v))).collect()
}

/// Triage categories with self care and pharmacy merged.
pub const MERGED_CATEGORIES: [&str; 5] = [
    "self_care_or_pharmacy",
    "gp_nonurgent",
    "gp_urgent",
    "a_and_e",
    "ambulance",
];

pub fn merged_category(a: TriageAction) -> usize {
    a.rank().saturating_sub(1)
}

/// Counts of (row source's action, column source's action) over every
/// ordered pair of distinct sources and every case.
pub fn rater_confusion(sources: &BTreeMap<String, Vec<TriageAction>>) -> Result<[[u64; 5]; 5], MetricError> {
    let mut lists = sources.values();
    let n = lists.next().map(Vec::len).ok_or(MetricError::Empty)?;
    if lists.any(|l| l.len() != n) {
        return Err(MetricError::MismatchedSources);
    }
    let mut m = [[0u64; 5]; 5];
    for (i, a) in sources.values().enumerate() {
        for (j, b) in sources.values().enumerate() {
            if i == j {
                continue;
            }
            for (&x, &y) in a.iter().zip(b) {
                m[merged_category(x)][merged_category(y)] += 1;
            }
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub source: String,
    pub n_cases: usize,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub top_k_recall: BTreeMap<usize, f64>,
    pub triage: TriageScores,
    pub weighted: Option<WeightedMetrics>,
    /// Per rater.
    pub pass_rate: BTreeMap<String, RatingSummary>,
    pub mean_differential_length: f64,
    /// Cases with an empty differential (precision counted as 0).
    pub empty_differentials: usize,
}

pub const REPORTED_K: [usize; 3] = [1, 3, 5];

pub fn metric_report<T: Probability>(
    source: &str,
    results: &[CaseResult],
    vignettes: &[Vignette],
    net: &Network<T>,
) -> Result<MetricReport, MetricError> {
    let recall = recall(results, vignettes)?;
    let precision = precision(results, vignettes)?;
    let top_k_recall = REPORTED_K
        .iter()
        .map(|&k| Ok((k, top_k_recall(results, vignettes, k)?)))
        .collect::<Result<_, MetricError>>()?;
    let weighted = match weighted_metrics(results, vignettes, net) {
        Ok(w) => Some(w),
        Err(MetricError::ZeroWeight) => None,
        Err(e) => return Err(e),
    };
    Ok(MetricReport {
        source: source.to_string(),
        n_cases: results.len(),
        recall,
        precision,
        f1: f1(recall, precision),
        top_k_recall,
        triage: triage_scores(results, vignettes)?,
        weighted,
        pass_rate: pass_rates_for(source, vignettes),
        mean_differential_length: results.iter().map(|r| r.differential.len()).sum::<usize>() as f64
            / results.len() as f64,
        empty_differentials: results.iter().filter(|r| r.differential.is_empty()).count(),
    })
}

/// Per-source reports plus the across-source average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceComparison {
    pub sources: BTreeMap<String, MetricReport>,
    pub average: SourceAverage,
    /// Present when every source scored the same vignettes.
    pub triage_confusion: Option<[[u64; 5]; 5]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceAverage {
    pub n_sources: usize,
    pub recall: f64,
    pub precision: f64,
    /// Mean of the per-source F1 scores.
    pub f1_mean_of_sources: f64,
    /// F1 of the averaged recall and precision.
    pub f1_of_mean_columns: f64,
    pub mean_cases_per_source: f64,
}

pub fn compare_sources<T: Probability>(
    results: &[CaseResult],
    vignettes: &[Vignette],
    net: &Network<T>,
) -> Result<SourceComparison, MetricError> {
    let mut grouped: BTreeMap<&str, Vec<CaseResult>> = BTreeMap::new();
    for r in results {
        grouped.entry(&r.source).or_default().push(r.clone());
    }
    if grouped.is_empty() {
        return Err(MetricError::Empty);
    }
    let sources = grouped
        .iter()
        .map(|(s, rs)| Ok((s.to_string(), metric_report(s, rs, vignettes, net)?)))
        .collect::<Result<BTreeMap<_, _>, MetricError>>()?;

    let n = sources.len() as f64;
    let mean = |f: fn(&MetricReport) -> f64| sources.values().map(f).sum::<f64>() / n;
    let recall = mean(|m| m.recall);
    let precision = mean(|m| m.precision);
    let average = SourceAverage {
        n_sources: sources.len(),
        recall,
        precision,
        f1_mean_of_sources: mean(|m| m.f1),
        f1_of_mean_columns: f1(recall, precision),
        mean_cases_per_source: mean(|m| m.n_cases as f64),
    };

    let mut by_case: BTreeMap<String, Vec<TriageAction>> = BTreeMap::new();
    let mut same_cases = true;
    let mut reference: Option<Vec<&str>> = None;
    for (s, rs) in &grouped {
        let mut rs: Vec<_> = rs.iter().collect();
        rs.sort_by(|a, b| a.vignette.cmp(&b.vignette));
        let ids: Vec<&str> = rs.iter().map(|r| r.vignette.as_str()).collect();
        match &reference {
            None => reference = Some(ids),
            Some(r) if *r != ids => same_cases = false,
            Some(_) => {}
        }
        by_case.insert(s.to_string(), rs.iter().map(|r| r.triage).collect());
    }
    let triage_confusion = if same_cases && by_case.len() > 1 {
        Some(rater_confusion(&by_case)?)
    } else {
        None
    };

    Ok(SourceComparison {
        sources,
        average,
        triage_confusion,
    })
}
