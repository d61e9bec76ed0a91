//! The documents under models/ are generated from the library fixtures.
//! These tests pin that the committed files stay byte-identical to what the
//! fixtures produce and that they parse back to the exact same models.
//! Set REGEN_SAMPLES=1 to rewrite the files.

use std::collections::BTreeMap;
use std::env;
use std::fs;
use std::path::PathBuf;

use maid_cli::doc::{GameDoc, ModelDoc};
use maid_core::efg::Efg;
use maid_core::model::{AgentId, Domain, Maim, MaidGraph, NodeDecl, NodeId};
use maid_testkit::models::{self, utility_table};
use maid_testkit::trees;

fn samples_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

/// Two players pick a coin side at once; player 1 wins on a match. No pure
/// equilibrium, which makes it the empty-solution demo for `solve`.
fn matching_pennies() -> Maim {
    let graph = MaidGraph::from_names(
        &["odd", "even"],
        vec![
            NodeDecl::decision("D1", AgentId(0)),
            NodeDecl::decision("D2", AgentId(1)),
            NodeDecl::utility("U1", AgentId(0)),
            NodeDecl::utility("U2", AgentId(1)),
        ],
        &[("D1", "U1"), ("D2", "U1"), ("D1", "U2"), ("D2", "U2")],
    )
    .unwrap();
    let coin = Domain::labels(&["h", "t"]);
    let (u1_dom, u1) = utility_table(&[1.0, -1.0, -1.0, 1.0]);
    let (u2_dom, u2) = utility_table(&[-1.0, 1.0, 1.0, -1.0]);
    Maim::new(
        graph,
        vec![coin.clone(), coin, u1_dom, u2_dom],
        BTreeMap::from([(NodeId(2), u1), (NodeId(3), u2)]),
    )
    .unwrap()
}

fn check_text(name: &str, expected: &str) {
    let path = samples_dir().join(name);
    if env::var_os("REGEN_SAMPLES").is_some() {
        fs::write(&path, expected).unwrap();
    }
    let text = fs::read_to_string(&path)
        .unwrap_or_else(|_| panic!("models/{name} missing; rerun with REGEN_SAMPLES=1"));
    assert_eq!(text, expected, "models/{name} is stale; rerun with REGEN_SAMPLES=1");
}

fn check_model(name: &str, model: &Maim) {
    let expected = ModelDoc::from_model(model).to_json();
    check_text(name, &expected);
    let parsed = ModelDoc::parse(&expected).unwrap().to_model().unwrap();
    assert_eq!(&parsed, model, "models/{name} does not round-trip");
}

fn check_game(name: &str, game: &Efg) {
    let expected = GameDoc::from_game(game).to_json();
    check_text(name, &expected);
    let parsed = GameDoc::parse(&expected).unwrap().to_game().unwrap();
    assert_eq!(&parsed, game, "models/{name} does not round-trip");
}

#[test]
fn committed_samples_match_the_fixtures() {
    check_model("taxi.model.json", &models::taxi());
    check_model("cyber_war.model.json", &models::cyber_war());
    check_model("job_hiring.model.json", &models::job_hiring(0.5));
    check_model("pipeline.model.json", &models::pipeline());
    check_model("matching_pennies.model.json", &matching_pennies());
    check_game("taxi.game.json", &trees::taxi_efg_merged());
}
