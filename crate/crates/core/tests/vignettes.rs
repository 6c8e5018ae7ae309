use std::sync::Arc;

use triagenet_core::consult::journal::{read_events, write_events, Consultation};
use triagenet_core::eval::{evaluate, load_pack, run_case, EvalConfig, Mode};
use triagenet_core::vignette::{load_vignette, Disclosure, PatientAgent, Vignette};
use triagenet_core::{fixtures_dir, load_network, Answer, Network, Presence};

fn demo() -> Arc<Network> {
    Arc::new(load_network(std::fs::File::open(fixtures_dir().join("demo.model.json")).unwrap()).unwrap())
}

fn pack(net: &Network) -> Vec<Vignette> {
    load_pack(net, &fixtures_dir().join("vignettes")).unwrap()
}

fn chatbot() -> EvalConfig {
    EvalConfig {
        mode: Mode::Chatbot,
        ..Default::default()
    }
}

#[test]
fn full_evidence_strictly_contains_chatbot_elicited_evidence() {
    let net = demo();
    for (i, v) in pack(&net).iter().enumerate() {
        let run = run_case(&net, v, &chatbot(), i).unwrap();
        let full = v.full_evidence();
        assert!(v.initial_evidence().is_subset_of(&run.elicited), "{}", v.id);
        assert!(
            run.elicited.is_subset_of(&full),
            "{}: elicited evidence escapes the vignette",
            v.id
        );
        assert!(run.elicited.len() < full.len(), "{}: containment is not strict", v.id);
    }
}

#[test]
fn example_vignette_reports_unmatched_entities() {
    let net = demo();
    let v = load_vignette(
        net.as_ref(),
        std::fs::File::open(fixtures_dir().join("vignettes/allergic_rhinitis.vignette.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(v.unmatched(), vec!["worse after going outdoors".to_string()]);
    let initial = v.initial_evidence();
    assert_eq!(initial.get("sneezing"), Some(Presence::Present));
    assert_eq!(initial.get("nasal_congestion"), Some(Presence::Present));
    assert_eq!(initial.get("asthma_history"), Some(Presence::Present));
    assert!(!initial.contains("fever"));
    assert_eq!(v.full_evidence().get("fever"), Some(Presence::Absent));

    let (report, _) = evaluate(&net, std::slice::from_ref(&v), &chatbot()).unwrap();
    assert_eq!(
        report.unmatched["allergic_rhinitis"],
        vec!["worse after going outdoors".to_string()]
    );
}

#[test]
fn patient_answers_are_consistent() {
    let net = demo();
    for v in pack(&net) {
        let mut agent = PatientAgent::new(&v);
        let askable = net
            .symptoms()
            .iter()
            .map(|s| &s.id)
            .chain(net.risk_factors().iter().map(|r| &r.id));
        for id in askable {
            let first = agent.respond(id);
            assert_eq!(agent.respond(id), first);
            match v.state_of(id.as_str()) {
                Some((_, state)) => assert_eq!(first, Answer::from(state)),
                None => assert_eq!(first, Answer::Unknown),
            }
        }
        assert!(agent.ledger().values().all(|d| *d != Disclosure::Undisclosed));
    }
}

#[test]
fn vignettes_round_trip() {
    let net = demo();
    for v in pack(&net) {
        let text = serde_json::to_string(&v).unwrap();
        let again = load_vignette(net.as_ref(), text.as_bytes()).unwrap();
        assert_eq!(again, v);
    }
}

#[test]
fn every_session_log_replays_to_the_same_differential() {
    let net = demo();
    let vignettes = pack(&net);
    let (report, runs) = evaluate(&net, &vignettes, &chatbot()).unwrap();
    for (run, case) in runs.iter().zip(&report.cases) {
        let mut buf = Vec::new();
        write_events(&mut buf, &run.events).unwrap();
        let events = read_events(buf.as_slice()).unwrap();
        let replayed = Consultation::replay(net.clone(), &events).unwrap();
        let conclusion = replayed.conclusion().unwrap();
        assert_eq!(conclusion.differential.ids(), case.differential);
        assert_eq!(conclusion.triage.action, case.triage);
        assert_eq!(replayed.events(), &events[..]);
    }
}

#[test]
fn chatbot_mode_asks_and_full_mode_does_not() {
    let net = demo();
    let vignettes = pack(&net);
    let (chat, _) = evaluate(&net, &vignettes, &chatbot()).unwrap();
    let (full, _) = evaluate(&net, &vignettes, &EvalConfig::default()).unwrap();
    assert!(chat.cases.iter().all(|c| c.question_count > 0));
    assert!(full.cases.iter().all(|c| c.question_count == 0));
    let ids: Vec<_> = chat.cases.iter().map(|c| c.vignette.clone()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
}
