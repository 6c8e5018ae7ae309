//! Vignette evaluation: metrics, pack runner, reports.

pub mod metrics;
pub mod report;
pub mod runner;

pub use metrics::{
    case_precision, compare_sources, f1, metric_report, percentage, precision, rater_confusion, rating_pass_rate,
    recall, top_k_recall, triage_scores, weighted_metrics, CaseResult, MetricError, MetricReport, RatingSummary,
    SourceComparison, TriageScores, WeightedMetrics,
};
pub use runner::{
    evaluate, load_pack, run_case, run_pack, sweep_thresholds, CaseRun, EvalConfig, EvalError, EvalReport, Mode,
    SweepPoint,
};
