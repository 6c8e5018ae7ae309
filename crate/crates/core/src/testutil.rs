use std::path::PathBuf;

use crate::model::{load_network, ModelDocument, Network, NodeId};
use crate::triage::TriageAction;
use crate::vignette::{JudgeRange, Patient, Sex, Vignette};

pub fn fixture(name: &str) -> PathBuf {
    crate::fixtures_dir().join(name)
}

pub fn demo_doc_3x4() -> ModelDocument {
    serde_json::from_slice(&std::fs::read(fixture("demo-3x4.model.json")).unwrap()).unwrap()
}

pub fn demo_3x4() -> Network<f64> {
    load_network(std::fs::File::open(fixture("demo-3x4.model.json")).unwrap()).unwrap()
}

pub fn demo() -> Network<f64> {
    load_network(std::fs::File::open(fixture("demo.model.json")).unwrap()).unwrap()
}

pub fn net_from_json(src: &str) -> Network<f64> {
    load_network(src.as_bytes()).unwrap()
}

pub fn vignette_stub(id: &str, disease: &str, range: Option<(TriageAction, TriageAction)>) -> Vignette {
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
        ratings: Default::default(),
    }
}
