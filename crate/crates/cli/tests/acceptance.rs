//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#[path = "../../core/tests/support/oracle.rs"]
mod oracle;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use oracle::{brute_force_best_question, load_document, random_document, random_evidence, to_evidence, JointTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use triagenet_core::consult::journal::{read_events, Consultation};
use triagenet_core::consult::{start_session, ConsultConfig};
use triagenet_core::eval::{
    f1, load_pack, percentage, recall, run_case, top_k_recall, triage_scores, weighted_metrics, CaseResult, EvalConfig,
    EvalReport, Mode, SweepPoint,
};
use triagenet_core::inference::{exact_posterior, sampled_posterior};
use triagenet_core::triage::{expected_harms, least_harmful, recommend_with_posterior, red_flag_floor};
use triagenet_core::vignette::{JudgeRange, Patient, Sex, Vignette};
use triagenet_core::{fixtures_dir, Evidence, Network, NodeId, Presence, TriageAction};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_triagenet")
}

fn model_path(name: &str) -> PathBuf {
    fixtures_dir().join(name)
}

fn demo() -> Arc<Network> {
    Arc::new(Network::from_document(&load_document(&model_path("demo.model.json"))).unwrap())
}

fn stub(id: &str, disease: &str, range: Option<(TriageAction, TriageAction)>) -> Vignette {
    Vignette {
        id: id.into(),
        modelled_disease: NodeId::new(disease).unwrap(),
        patient: Patient {
            age: 30,
            sex: Sex::Female,
        },
        presenting: vec![],
        open_history: vec![],
        direct_only: vec![],
        past_medical: vec![],
        family_history: vec![],
        judge_range: range.map(|(min, max)| JudgeRange { min, max }),
        ratings: BTreeMap::new(),
    }
}

fn case(vignette: &str, differential: &[&str], triage: TriageAction) -> CaseResult {
    CaseResult {
        vignette: vignette.into(),
        source: "engine".into(),
        differential: differential.iter().map(|d| NodeId::new(*d).unwrap()).collect(),
        triage,
        question_count: 0,
        probabilities: vec![],
    }
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

fn f1_arithmetic() -> Outcome {
    let mut shown = Vec::new();
    for (r, p, want) in [(80.0, 44.4, 57.1), (80.9, 42.9, 56.1), (93.8, 53.5, 68.1)] {
        let got = f1(r, p);
        ensure((got - want).abs() <= 0.05, || {
            format!("f1({r}, {p}) = {got:.4}, expected {want}")
        })?;
        shown.push(format!("{got:.2}"));
    }
    Ok(format!("f1 = {}", shown.join(", ")))
}

fn top_k_arithmetic() -> Outcome {
    let mut shown = Vec::new();
    for (hits, n, k, want) in [
        (21, 30, 1, 70.0),
        (29, 30, 3, 96.7),
        (13, 15, 3, 86.7),
        (27, 36, 1, 75.0),
    ] {
        let vignettes: Vec<_> = (0..n).map(|i| stub(&format!("v{i:02}"), "common_cold", None)).collect();
        let results: Vec<_> = (0..n)
            .map(|i| {
                let diff: &[&str] = if i < hits {
                    &["common_cold", "influenza", "acute_sinusitis"]
                } else {
                    &["influenza", "acute_sinusitis", "allergic_rhinitis", "common_cold"]
                };
                case(&format!("v{i:02}"), diff, TriageAction::SelfCare)
            })
            .collect();
        let got = round1(top_k_recall(&results, &vignettes, k).map_err(|e| e.to_string())?);
        ensure(got == want, || format!("{hits}/{n} at k={k}: {got}, expected {want}"))?;
        ensure(round1(percentage(hits, n)) == want, || {
            format!("percentage({hits}, {n})")
        })?;
        shown.push(format!("{hits}/{n}={got}%"));
    }
    Ok(shown.join(", "))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let (mut nets, mut sets, mut worst) = (0, 0, 0.0f64);
    for _ in 0..60 {
        let n_risk = rng.random_range(0..=3);
        let n_disease = rng.random_range(1..=12 - n_risk);
        let n_symptom = rng.random_range(1..=(16 - n_risk - n_disease).min(6));
        let doc = random_document(&mut rng, n_risk, n_disease, n_symptom);
        let net = Network::from_document(&doc).map_err(|e| e.to_string())?;
        let table = JointTable::new(&doc);
        for _ in 0..5 {
            let ev = random_evidence(&mut rng, &doc);
            let want = table.disease_posterior(&ev);
            let got = exact_posterior(&net, &to_evidence(&ev)).map_err(|e| e.to_string())?;
            for (id, p) in want {
                let err = (got.marginal(&id).unwrap() - p).abs();
                worst = worst.max(err);
                ensure(err < 1e-9, || format!("{id}: error {err:e} under {ev:?}"))?;
            }
            sets += 1;
        }
        nets += 1;
    }
    Ok(format!(
        "{nets} networks x 5 evidence sets ({sets} queries), max error {worst:.1e}"
    ))
}

fn sampler_convergence() -> Outcome {
    let net = Network::from_document(&load_document(&model_path("demo-3x4.model.json"))).unwrap();
    let e = Evidence::new().with("sneezing", Presence::Present);
    let exact = exact_posterior(&net, &e).map_err(|err| err.to_string())?;
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let s = sampled_posterior(&net, &e, 200_000, seed).map_err(|err| err.to_string())?;
        for (id, &p) in &exact.disease_marginals {
            let se = s.standard_errors[id];
            let z = (s.disease_marginals[id] - p).abs() / se;
            worst = worst.max(z);
            ensure(z <= 3.0, || {
                format!("seed {seed}, {id}: {z:.2} standard errors from exact")
            })?;
        }
    }
    Ok(format!("10 seeds x 3 diseases, worst deviation {worst:.2} SE"))
}

fn voi_correctness() -> Outcome {
    let doc = load_document(&model_path("demo-3x4.model.json"));
    let net = Arc::new(Network::from_document(&doc).unwrap());
    let cfg = ConsultConfig::default();
    let ids = ["asthma_history", "fever", "itchy_eyes", "nasal_congestion", "sneezing"];
    let (mut states, mut questions) = (0, 0);
    for mut code in 0..3usize.pow(ids.len() as u32) {
        let mut ev = Vec::new();
        for id in ids {
            match code % 3 {
                1 => ev.push((id.to_string(), true)),
                2 => ev.push((id.to_string(), false)),
                _ => {}
            }
            code /= 3;
        }
        let session = start_session(net.clone(), "voi", to_evidence(&ev)).map_err(|e| e.to_string())?;
        let chosen = session.next_question(&cfg).map_err(|e| e.to_string())?;
        let want = brute_force_best_question(&doc, &ev, cfg.top_k, cfg.epsilon).map(|(id, _)| id);
        ensure(chosen.as_ref().map(|c| c.as_str()) == want.as_deref(), || {
            format!("under {ev:?}: engine {chosen:?}, brute force {want:?}")
        })?;
        states += 1;
        questions += usize::from(want.is_some());
    }
    ensure(questions >= 20, || format!("only {questions} states ask a question"))?;
    Ok(format!("{states} evidence states agree ({questions} with a question)"))
}

fn triage_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let action = |rng: &mut ChaCha8Rng| TriageAction::from_rank(rng.random_range(0..6)).unwrap();

    for trial in 0..1000 {
        let n = rng.random_range(1..30);
        let mut vignettes = Vec::new();
        let mut results = Vec::new();
        for i in 0..n {
            let (a, b) = (action(&mut rng), action(&mut rng));
            let range = rng.random_bool(0.9).then_some((a.min(b), a.max(b)));
            vignettes.push(stub(&format!("v{i}"), "common_cold", range));
            results.push(case(&format!("v{i}"), &[], action(&mut rng)));
        }
        let s = triage_scores(&results, &vignettes).map_err(|e| e.to_string())?;
        if let (Some(safe), Some(app)) = (s.safety, s.appropriateness) {
            ensure(app <= safe, || {
                format!("scoring trial {trial}: appropriateness {app} > safety {safe}")
            })?;
        }
    }

    let net = demo();
    let symptoms: Vec<NodeId> = net.symptoms().iter().map(|s| s.id.clone()).collect();
    let mut fired = 0;
    for trial in 0..1000 {
        let mut small = Evidence::new();
        let mut big = Evidence::new();
        for s in &symptoms {
            match rng.random_range(0..4) {
                0 => {
                    small.set(s.clone(), Presence::Present);
                    big.set(s.clone(), Presence::Present);
                }
                1 => {
                    small.set(s.clone(), Presence::Absent);
                    big.set(s.clone(), Presence::Absent);
                }
                _ if rng.random_bool(0.3) => big.set(s.clone(), Presence::Present),
                _ => {}
            }
        }
        let (f_small, _) = red_flag_floor(net.as_ref(), &small);
        let (f_big, rules) = red_flag_floor(net.as_ref(), &big);
        ensure(f_big >= f_small, || {
            format!("superset trial {trial}: floor fell from {f_small:?} to {f_big:?}")
        })?;
        let post = exact_posterior(net.as_ref(), &big).map_err(|e| e.to_string())?;
        let r = recommend_with_posterior(net.as_ref(), &big, &post, 0.05);
        if let Some(f) = f_big {
            ensure(r.action >= f, || {
                format!("superset trial {trial}: final {} below floor {f}", r.action)
            })?;
        }
        fired += usize::from(!rules.is_empty());
    }

    for trial in 0..500 {
        let doc = random_document(&mut rng, 1, 6, 2);
        let net = Network::from_document(&doc).map_err(|e| e.to_string())?;
        let mut post = exact_posterior(&net, &Evidence::new()).map_err(|e| e.to_string())?;
        for p in post.disease_marginals.values_mut() {
            *p = rng.random_range(0.0..1.0);
        }
        let c1 = rng.random_range(0.0..2.0);
        let c2 = c1 + rng.random_range(0.0..2.0);
        let a1 = least_harmful(&expected_harms(&net, &post, c1));
        let a2 = least_harmful(&expected_harms(&net, &post, c2));
        ensure(a2 <= a1, || {
            format!("penalty trial {trial}: c {c1:.3}->{c2:.3} raised {a1} to {a2}")
        })?;
    }
    Ok(format!(
        "1000 scoring inputs, 1000 supersets ({fired} with fired rules), 500 posteriors"
    ))
}

fn run(args: &[&str]) -> Result<std::process::Output, String> {
    let out = Command::new(bin()).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "`triagenet {}` failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out)
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn threshold_sweep() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("sweep.json");
    let grid = [0.02, 0.05, 0.08, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5, 0.7];
    let grid_arg = grid.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(",");
    run(&[
        "sweep",
        "--model",
        path_str(&model_path("demo.model.json")),
        "--vignettes",
        path_str(&fixtures_dir().join("vignettes")),
        "--tau0-grid",
        &grid_arg,
        "--out",
        path_str(&out),
    ])?;
    let points: Vec<SweepPoint> = serde_json::from_slice(&std::fs::read(&out).unwrap()).map_err(|e| e.to_string())?;
    ensure(points.len() == 10, || format!("{} sweep points", points.len()))?;
    for w in points.windows(2) {
        ensure(w[1].recall <= w[0].recall, || {
            format!("recall rose between tau0 {} and {}", w[0].tau0, w[1].tau0)
        })?;
        ensure(w[1].mean_differential_length <= w[0].mean_differential_length, || {
            format!("length rose between tau0 {} and {}", w[0].tau0, w[1].tau0)
        })?;
    }
    let (first, last) = (&points[0], &points[9]);
    Ok(format!(
        "mean length {:.2} -> {:.2}, recall {:.1}% -> {:.1}%",
        first.mean_differential_length, last.mean_differential_length, first.recall, last.recall
    ))
}

fn incidence_reweighting() -> Outcome {
    let mut doc = load_document(&model_path("demo-3x4.model.json"));
    let vignettes = vec![stub("a", "allergic_rhinitis", None), stub("b", "common_cold", None)];
    let results = vec![
        case("a", &["influenza"], TriageAction::SelfCare),
        case("b", &["common_cold", "influenza"], TriageAction::SelfCare),
    ];
    doc.diseases[0].annual_incidence_per_100k = 99_900.0;
    doc.diseases[1].annual_incidence_per_100k = 100.0;
    let skewed = Network::from_document(&doc).unwrap();
    let w = weighted_metrics(&results, &vignettes, &skewed).map_err(|e| e.to_string())?;
    ensure((w.recall - 0.1).abs() < 1e-12, || {
        format!("weighted recall {}", w.recall)
    })?;

    let net = demo();
    let pack = load_pack(net.as_ref(), &fixtures_dir().join("vignettes")).map_err(|e| e.to_string())?;
    let mut uniform = load_document(&model_path("demo.model.json"));
    for d in &mut uniform.diseases {
        d.annual_incidence_per_100k = 250.0;
    }
    let uniform = Arc::new(Network::from_document(&uniform).unwrap());
    let runs: Vec<CaseResult> = pack
        .iter()
        .enumerate()
        .map(|(i, v)| run_case(&net, v, &EvalConfig::default(), i).map(|r| r.result))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let w = weighted_metrics(&runs, &pack, uniform.as_ref()).map_err(|e| e.to_string())?;
    let r = recall(&runs, &pack).map_err(|e| e.to_string())?;
    let p = triagenet_core::eval::precision(&runs, &pack).map_err(|e| e.to_string())?;
    ensure(w.recall == r && w.precision == p, || {
        format!("uniform weights gave ({}, {}) vs ({r}, {p})", w.recall, w.precision)
    })?;
    Ok(format!(
        "skewed recall 0.1%, uniform matches unweighted ({r:.1}%, {p:.2}%)"
    ))
}

fn end_to_end_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut reports = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("report{i}.json"));
        let logs = dir.path().join(format!("logs{i}"));
        run(&[
            "eval",
            "--model",
            path_str(&model_path("demo.model.json")),
            "--vignettes",
            path_str(&fixtures_dir().join("vignettes")),
            "--mode",
            "chatbot",
            "--seed",
            "17",
            "--out",
            path_str(&out),
            "--session-logs",
            path_str(&logs),
        ])?;
        reports.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    ensure(reports[0] == reports[1], || {
        "reports differ between identical runs".into()
    })?;

    let report: EvalReport = serde_json::from_slice(&reports[0]).map_err(|e| e.to_string())?;
    let net = demo();
    for c in &report.cases {
        let path = dir.path().join("logs0").join(format!("{}.jsonl", c.vignette));
        let events = read_events(std::io::BufReader::new(
            std::fs::File::open(&path).map_err(|e| e.to_string())?,
        ))
        .map_err(|e| e.to_string())?;
        let replayed = Consultation::replay(net.clone(), &events).map_err(|e| format!("{}: {e}", c.vignette))?;
        let conclusion = replayed
            .conclusion()
            .ok_or_else(|| format!("{}: replay did not conclude", c.vignette))?;
        ensure(conclusion.differential.ids() == c.differential, || {
            format!("{}: differential differs", c.vignette)
        })?;
        ensure(conclusion.triage.action == c.triage, || {
            format!("{}: triage differs", c.vignette)
        })?;
    }
    Ok(format!(
        "{} bytes identical, {} logs replayed",
        reports[0].len(),
        report.cases.len()
    ))
}

fn mode_containment() -> Outcome {
    let net = demo();
    let pack = load_pack(net.as_ref(), &fixtures_dir().join("vignettes")).map_err(|e| e.to_string())?;
    let cfg = EvalConfig {
        mode: Mode::Chatbot,
        ..Default::default()
    };
    for (i, v) in pack.iter().enumerate() {
        let run = run_case(&net, v, &cfg, i).map_err(|e| e.to_string())?;
        let full = v.full_evidence();
        ensure(
            run.elicited.is_subset_of(&full) && run.elicited.len() < full.len(),
            || {
                format!(
                    "{}: elicited {} of {} full observations",
                    v.id,
                    run.elicited.len(),
                    full.len()
                )
            },
        )?;
    }
    Ok(format!("{} vignettes, strict containment", pack.len()))
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("F1 arithmetic", Duration::from_secs(1), f1_arithmetic),
        ("Top-k arithmetic", Duration::from_secs(1), top_k_arithmetic),
        ("Oracle equivalence", Duration::from_secs(60), oracle_equivalence),
        ("Sampler convergence", Duration::from_secs(120), sampler_convergence),
        ("VOI correctness", Duration::from_secs(30), voi_correctness),
        ("Triage properties", Duration::from_secs(30), triage_properties),
        ("Threshold sweep", Duration::from_secs(60), threshold_sweep),
        ("Incidence reweighting", Duration::from_secs(1), incidence_reweighting),
        (
            "End-to-end determinism",
            Duration::from_secs(60),
            end_to_end_determinism,
        ),
        ("Mode containment", Duration::MAX, mode_containment),
    ];
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > budget => Err(format!("{detail}; took {elapsed:.2?}, budget {budget:.0?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{elapsed:.2?}]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} [{elapsed:.2?}]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
