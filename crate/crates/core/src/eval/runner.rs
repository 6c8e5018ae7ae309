//! Runs vignette packs through the engine.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::consult::journal::{Consultation, FixedClock, SessionEvent, SessionSettings, StepOutcome};
use crate::consult::ConsultError;
use crate::eval::metrics::{metric_report, CaseResult, MetricError, MetricReport};
use crate::evidence::Evidence;
use crate::inference::InferenceMethod;
use crate::model::Network;
use crate::scalar::Probability;
use crate::vignette::{load_vignette, PatientAgent, Vignette, VignetteError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Presenting and volunteered history up front; everything else only
    /// when the engine asks for it.
    Chatbot,
    /// Every entity on the vignette, no questions.
    Full,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chatbot" => Ok(Mode::Chatbot),
            "full" => Ok(Mode::Full),
            _ => Err(format!("unknown mode {s:?} (expected chatbot or full)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub mode: Mode,
    pub settings: SessionSettings,
    pub seed: u64,
    /// Label written into each case result.
    pub source: String,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Full,
            settings: SessionSettings::default(),
            seed: 0,
            source: "engine".into(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("failed to read pack: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}: {source}")]
    Vignette { path: String, source: VignetteError },
    #[error("vignette {vignette}: {source}")]
    Consult { vignette: String, source: ConsultError },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("vignette pack is empty")]
    EmptyPack,
    #[error("threshold grid must be non-empty with values in (0, 1)")]
    InvalidGrid,
}

impl EvalError {
    pub fn is_inconsistent_evidence(&self) -> bool {
        matches!(
            self,
            EvalError::Consult {
                source: ConsultError::Inference(crate::inference::InferenceError::InconsistentEvidence),
                ..
            }
        )
    }
}

/// Loads every `*.vignette.json` in `dir`, sorted by vignette id.
pub fn load_pack<T: Probability>(net: &Network<T>, dir: &Path) -> Result<Vec<Vignette>, EvalError> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_str().is_some_and(|s| s.ends_with(".vignette.json")))
        .collect();
    paths.sort();
    let mut out = Vec::with_capacity(paths.len());
    for p in paths {
        let f = std::fs::File::open(&p)?;
        out.push(
            load_vignette(net, std::io::BufReader::new(f)).map_err(|source| EvalError::Vignette {
                path: p.display().to_string(),
                source,
            })?,
        );
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

/// One evaluated vignette with its session log.
#[derive(Debug, Clone)]
pub struct CaseRun {
    pub result: CaseResult,
    pub events: Vec<SessionEvent>,
    /// Evidence the engine held when it concluded.
    pub elicited: Evidence,
    pub unmatched: Vec<String>,
}

fn case_settings(cfg: &EvalConfig, index: usize) -> SessionSettings {
    let mut s = cfg.settings;
    if let InferenceMethod::Sampled { samples, .. } = s.consult.inference {
        s.consult.inference = InferenceMethod::Sampled {
            samples,
            seed: cfg.seed.wrapping_add((index as u64) << 32),
        };
    }
    if cfg.mode == Mode::Full {
        s.consult.max_questions = 0;
    }
    s
}

/// Consults on one vignette. `index` only perturbs the sampler seed.
pub fn run_case<T: Probability>(
    net: &Arc<Network<T>>,
    v: &Vignette,
    cfg: &EvalConfig,
    index: usize,
) -> Result<CaseRun, EvalError> {
    let err = |source| EvalError::Consult {
        vignette: v.id.clone(),
        source,
    };
    let clock = FixedClock(0);
    let evidence = match cfg.mode {
        Mode::Chatbot => v.initial_evidence(),
        Mode::Full => v.full_evidence(),
    };
    let complaints = v.presenting.iter().map(|f| f.entity.clone()).collect();
    let mut c = Consultation::start_with_evidence(
        net.clone(),
        v.id.clone(),
        evidence,
        complaints,
        v.unmatched(),
        case_settings(cfg, index),
        &clock,
    )
    .map_err(err)?;

    let mut agent = PatientAgent::new(v);
    let mut outcome = c.step(None, None, &clock).map_err(err)?;
    let conclusion = loop {
        match outcome {
            StepOutcome::Question(q) => {
                let a = agent.respond(&q);
                outcome = c.step(Some((q, a)), None, &clock).map_err(err)?;
            }
            StepOutcome::Conclusion(con) => break con,
        }
    };

    Ok(CaseRun {
        result: CaseResult {
            vignette: v.id.clone(),
            source: cfg.source.clone(),
            differential: conclusion.differential.ids(),
            triage: conclusion.triage.action,
            question_count: c.state().asked().len(),
            probabilities: conclusion
                .differential
                .entries
                .iter()
                .map(|e| e.probability.as_f64())
                .collect(),
        },
        events: c.events().to_vec(),
        elicited: c.state().evidence().clone(),
        unmatched: c.unmatched().to_vec(),
    })
}

/// Evaluates every vignette in parallel; output order follows the pack.
pub fn run_pack<T: Probability>(
    net: &Arc<Network<T>>,
    vignettes: &[Vignette],
    cfg: &EvalConfig,
) -> Result<Vec<CaseRun>, EvalError> {
    if vignettes.is_empty() {
        return Err(EvalError::EmptyPack);
    }
    vignettes
        .par_iter()
        .enumerate()
        .map(|(i, v)| run_case(net, v, cfg, i))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: EvalConfig,
    pub metrics: MetricReport,
    pub cases: Vec<CaseResult>,
    /// Vignette id → entities that did not resolve to a model node.
    pub unmatched: BTreeMap<String, Vec<String>>,
}

pub fn evaluate<T: Probability>(
    net: &Arc<Network<T>>,
    vignettes: &[Vignette],
    cfg: &EvalConfig,
) -> Result<(EvalReport, Vec<CaseRun>), EvalError> {
    let runs = run_pack(net, vignettes, cfg)?;
    let cases: Vec<CaseResult> = runs.iter().map(|r| r.result.clone()).collect();
    let metrics = metric_report(&cfg.source, &cases, vignettes, net.as_ref())?;
    let unmatched = runs
        .iter()
        .filter(|r| !r.unmatched.is_empty())
        .map(|r| (r.result.vignette.clone(), r.unmatched.clone()))
        .collect();
    let report = EvalReport {
        config: cfg.clone(),
        metrics,
        cases,
        unmatched,
    };
    Ok((report, runs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub tau0: f64,
    pub recall: f64,
    pub precision: f64,
    pub mean_differential_length: f64,
}

/// Full-evidence evaluation at each `tau0`, one precision-recall point each.
pub fn sweep_thresholds<T: Probability>(
    net: &Arc<Network<T>>,
    vignettes: &[Vignette],
    grid: &[f64],
    base: &EvalConfig,
) -> Result<Vec<SweepPoint>, EvalError> {
    if vignettes.is_empty() {
        return Err(EvalError::EmptyPack);
    }
    if grid.is_empty() || grid.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
        return Err(EvalError::InvalidGrid);
    }
    grid.iter()
        .map(|&tau0| {
            let mut cfg = base.clone();
            cfg.mode = Mode::Full;
            cfg.settings.tau0 = Some(tau0);
            let (report, _) = evaluate(net, vignettes, &cfg)?;
            Ok(SweepPoint {
                tau0,
                recall: report.metrics.recall,
                precision: report.metrics.precision,
                mean_differential_length: report.metrics.mean_differential_length,
            })
        })
        .collect()
}
