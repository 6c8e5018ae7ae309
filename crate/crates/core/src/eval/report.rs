//! JSON and CSV renderings of evaluation reports.

use std::io::Write;

use crate::eval::metrics::case_precision;
use crate::eval::runner::EvalReport;
use crate::vignette::Vignette;

pub use csv::Error as CsvError;

/// Pretty JSON with a trailing newline. Byte-stable for equal reports.
pub fn write_json<W: Write, S: serde::Serialize>(mut out: W, value: &S) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()
}

const CSV_HEADER: [&str; 14] = [
    "vignette",
    "source",
    "modelled_disease",
    "hit",
    "top1",
    "top3",
    "differential",
    "differential_length",
    "case_precision",
    "triage",
    "judge_min",
    "judge_max",
    "safe",
    "question_count",
];

/// One row per case. Vignettes supply the modelled disease and judge range.
pub fn write_csv<W: Write>(out: W, report: &EvalReport, vignettes: &[Vignette]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for case in &report.cases {
        let v = vignettes.iter().find(|v| v.id == case.vignette);
        let modelled = v.map(|v| v.modelled_disease.as_str()).unwrap_or("");
        let pos = case.differential.iter().position(|d| d.as_str() == modelled);
        let flag = |b: bool| if b { "1" } else { "0" };
        let range = v.and_then(|v| v.judge_range);
        let safe = range.map_or("", |r| flag(case.triage >= r.min));
        let row = [
            case.vignette.clone(),
            case.source.clone(),
            modelled.to_string(),
            flag(pos.is_some()).to_string(),
            flag(pos == Some(0)).to_string(),
            flag(pos.is_some_and(|p| p < 3)).to_string(),
            case.differential
                .iter()
                .map(|d| d.as_str())
                .collect::<Vec<_>>()
                .join(";"),
            case.differential.len().to_string(),
            v.map_or(String::new(), |v| format!("{:.6}", case_precision(case, v))),
            case.triage.to_string(),
            range.map_or(String::new(), |r| r.min.to_string()),
            range.map_or(String::new(), |r| r.max.to_string()),
            safe.to_string(),
            case.question_count.to_string(),
        ];
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
