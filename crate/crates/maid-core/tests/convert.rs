//! Model-to-tree and tree-to-model conversion, the natural mapping, the
//! absentminded expansion, and the equivalence checker.

use std::collections::BTreeMap;

use maid_core::convert::{
    absentminded_transform, check_equivalence, efg_to_maim, maim_to_efg, maim_to_efg_all,
    split_orders, split_set, ConvertError, MapEntry, SplitMode,
};
use maid_core::efg::{efg_expected_utility, EfgError, EfgNodeKind, EfgStrategyProfile};
use maid_core::equilibria::pure_nash;
use maid_core::infer::{expected_utility, expected_utility_in};
use maid_core::model::{AgentId, Cpd, Domain, MaidGraph, Maim, NodeDecl, NodeId};
use maid_core::policy::{DecisionRule, PolicyProfile};
use maid_core::subgames::{is_feasible_subgame, maid_subgame, maim_subgames, subgame_bases};
use maid_testkit::rng::Rng;
use maid_testkit::{gen, models, oracle, trees};

const TOL: f64 = 1e-9;

fn entry(decision: usize, row: usize, iset: usize) -> MapEntry {
    MapEntry { decision: NodeId(decision), row, iset }
}

#[test]
fn taxi_converts_to_the_textbook_tree_in_both_modes() {
    let model = models::taxi();
    for mode in [SplitMode::Minimal, SplitMode::Full] {
        let conv = maim_to_efg(&model, "taxi", mode).unwrap();
        assert_eq!(conv.game, trees::taxi_efg());
        assert_eq!(conv.map.entries, vec![entry(0, 0, 0), entry(1, 0, 1), entry(1, 1, 2)]);
        let report = check_equivalence(&conv.game, &model, &conv.map, 5, 11).unwrap();
        assert!(report.ok, "{:?}", report.failure);
        assert_eq!(report.pure_checked, 8);
        assert!(report.max_gap < TOL);
    }
}

#[test]
fn job_hiring_full_split_builds_the_signalling_tree() {
    let model = models::job_hiring(0.5);
    let conv = maim_to_efg(&model, "job hiring", SplitMode::Full).unwrap();
    let game = &conv.game;

    let terminals = game.terminals();
    assert_eq!(game.nodes.len(), 15);
    assert_eq!(terminals.len(), 8);
    assert_eq!(game.isets.len(), 4);
    // Encounter order: D1 under X=h, both D2 contexts, then D1 under X=l.
    let labels: Vec<&str> = game.isets.iter().map(|s| s.label.as_str()).collect();
    assert_eq!(labels, ["D1 | X=h", "D2 | D1=g", "D2 | D1=a", "D1 | X=l"]);
    assert_eq!(
        conv.map.entries,
        vec![entry(1, 0, 0), entry(2, 0, 1), entry(2, 1, 2), entry(1, 1, 3)]
    );
    // Agent 2's sets pool observations across the chance branch.
    for j in [1usize, 2] {
        assert_eq!(game.isets[j].owner, AgentId(1));
        assert_eq!(game.isets[j].members.len(), 2);
    }

    let sigma = EfgStrategyProfile::uniform(game);
    let v1 = efg_expected_utility(game, &sigma, AgentId(0)).unwrap();
    let v2 = efg_expected_utility(game, &sigma, AgentId(1)).unwrap();
    assert!((v1 - 1.375).abs() < TOL);
    assert!(v2.abs() < TOL);

    let report = check_equivalence(game, &model, &conv.map, 5, 3).unwrap();
    assert!(report.ok, "{:?}", report.failure);
    assert_eq!(report.pure_checked, 16);
}

#[test]
fn minimal_split_drops_padding_chance_nodes() {
    let model = models::taxi_with_padding(3);
    assert_eq!(split_set(&model, SplitMode::Minimal), vec![NodeId(0), NodeId(1)]);
    assert_eq!(
        split_set(&model, SplitMode::Full),
        vec![NodeId(0), NodeId(1), NodeId(4), NodeId(5), NodeId(6)]
    );

    let minimal = maim_to_efg(&model, "taxi", SplitMode::Minimal).unwrap();
    assert_eq!(minimal.game, trees::taxi_efg());
    let report = check_equivalence(&minimal.game, &model, &minimal.map, 5, 17).unwrap();
    assert!(report.ok, "{:?}", report.failure);

    // The full split threads all three padding coins through the tree:
    // 1 + 2 + 4 + 8 + 16 internal nodes plus 32 leaves.
    let full = maim_to_efg(&model, "taxi", SplitMode::Full).unwrap();
    assert_eq!(full.game.nodes.len(), 63);
    assert_eq!(full.map.entries.len(), 3);
    let report = check_equivalence(&full.game, &model, &full.map, 5, 17).unwrap();
    assert!(report.ok, "{:?}", report.failure);
}

#[test]
fn a_model_without_decisions_collapses_to_one_leaf_in_minimal_mode() {
    let graph = MaidGraph::from_names(
        &["1", "2"],
        vec![
            NodeDecl::chance("X"),
            NodeDecl::utility("U1", AgentId(0)),
            NodeDecl::utility("U2", AgentId(1)),
        ],
        &[("X", "U1"), ("X", "U2")],
    )
    .unwrap();
    let (u1_dom, u1) = models::utility_table(&[1.0, 3.0]);
    let (u2_dom, u2) = models::utility_table(&[2.0, 4.0]);
    let model = Maim::new(
        graph,
        vec![Domain::labels(&["h", "t"]), u1_dom, u2_dom],
        BTreeMap::from([
            (NodeId(0), Cpd::new(vec![vec![0.3, 0.7]])),
            (NodeId(1), u1),
            (NodeId(2), u2),
        ]),
    )
    .unwrap();

    let minimal = maim_to_efg(&model, "coin", SplitMode::Minimal).unwrap();
    assert_eq!(minimal.game.nodes.len(), 1);
    assert!(minimal.game.isets.is_empty());
    assert!(minimal.map.entries.is_empty());
    let EfgNodeKind::Terminal { payoffs } = &minimal.game.nodes[0].kind else {
        panic!("expected a terminal root");
    };
    assert!((payoffs[0] - 2.4).abs() < TOL);
    assert!((payoffs[1] - 3.4).abs() < TOL);

    let full = maim_to_efg(&model, "coin", SplitMode::Full).unwrap();
    assert_eq!(full.game.nodes.len(), 3);
    for conv in [&minimal, &full] {
        let report = check_equivalence(&conv.game, &model, &conv.map, 3, 5).unwrap();
        assert!(report.ok, "{:?}", report.failure);
        assert_eq!(report.pure_checked, 1);
    }
}

#[test]
fn zero_probability_branches_are_pruned() {
    let graph = MaidGraph::from_names(
        &["1"],
        vec![
            NodeDecl::chance("X"),
            NodeDecl::decision("D", AgentId(0)),
            NodeDecl::utility("U", AgentId(0)),
        ],
        &[("X", "D"), ("X", "U"), ("D", "U")],
    )
    .unwrap();
    let (u_dom, u) = models::utility_table(&[1.0, 0.0, 0.0, 2.0, 5.0, 5.0]);
    let model = Maim::new(
        graph,
        vec![Domain::labels(&["a", "b", "c"]), Domain::labels(&["e", "f"]), u_dom],
        BTreeMap::from([
            (NodeId(0), Cpd::new(vec![vec![0.5, 0.5, 0.0]])),
            (NodeId(2), u),
        ]),
    )
    .unwrap();

    let conv = maim_to_efg(&model, "pruned", SplitMode::Full).unwrap();
    let EfgNodeKind::Chance { actions, probs, children } = &conv.game.nodes[0].kind else {
        panic!("expected a chance root");
    };
    assert_eq!(actions, &["a".to_string(), "b".to_string()]);
    assert_eq!(probs, &[0.5, 0.5]);
    assert_eq!(children.len(), 2);

    // X=c never happens, so that decision context stays unmapped.
    assert_eq!(model.context_count(NodeId(1)), 3);
    assert_eq!(conv.map.entries, vec![entry(1, 0, 0), entry(1, 1, 1)]);

    let report = check_equivalence(&conv.game, &model, &conv.map, 5, 23).unwrap();
    assert!(report.ok, "{:?}", report.failure);
    assert_eq!(report.pure_checked, 4);
}

#[test]
fn merged_taxi_tree_recovers_the_textbook_model() {
    let conv = efg_to_maim(&trees::taxi_efg_merged()).unwrap();
    assert_eq!(conv.model, models::taxi());
    assert_eq!(conv.map.entries, vec![entry(0, 0, 0), entry(1, 0, 1), entry(1, 1, 2)]);
    let report =
        check_equivalence(&trees::taxi_efg_merged(), &conv.model, &conv.map, 5, 29).unwrap();
    assert!(report.ok, "{:?}", report.failure);
}

#[test]
fn singleton_taxi_tree_gives_one_decision_per_information_set() {
    let game = trees::taxi_efg();
    let conv = efg_to_maim(&game).unwrap();
    let model = &conv.model;
    let graph = model.graph();

    let names: Vec<&str> = graph.node_ids().map(|n| graph.name(n)).collect();
    assert_eq!(names, ["D1", "D2", "U1_1", "U2_1", "D3", "U1_2", "U2_2"]);
    assert_eq!(graph.decisions(), vec![NodeId(0), NodeId(1), NodeId(4)]);
    assert_eq!(graph.utilities_of(AgentId(0)), vec![NodeId(2), NodeId(5)]);
    assert_eq!(graph.utilities_of(AgentId(1)), vec![NodeId(3), NodeId(6)]);

    // Each later decision sees only the root decision; each utility fragment
    // covers one subtree.
    assert!(graph.parents(NodeId(0)).is_empty());
    assert_eq!(graph.parents(NodeId(1)), &[NodeId(0)]);
    assert_eq!(graph.parents(NodeId(4)), &[NodeId(0)]);
    assert_eq!(graph.parents(NodeId(2)), &[NodeId(0), NodeId(1)]);
    assert_eq!(graph.parents(NodeId(3)), &[NodeId(0), NodeId(1)]);
    assert_eq!(graph.parents(NodeId(5)), &[NodeId(0), NodeId(4)]);
    assert_eq!(graph.parents(NodeId(6)), &[NodeId(0), NodeId(4)]);

    // Rows off the subtree pay zero.
    let u11: Vec<f64> = (0..4).map(|r| model.utility_value(NodeId(2), r)).collect();
    assert_eq!(u11, [2.0, 5.0, 0.0, 0.0]);
    let u12: Vec<f64> = (0..4).map(|r| model.utility_value(NodeId(5), r)).collect();
    assert_eq!(u12, [0.0, 0.0, 3.0, 1.0]);

    assert_eq!(conv.map.entries, vec![entry(0, 0, 0), entry(1, 0, 1), entry(4, 1, 2)]);

    let uniform = PolicyProfile::uniform(model);
    assert!((expected_utility(model, &uniform, AgentId(0)).unwrap() - 2.75).abs() < TOL);
    assert!((expected_utility(model, &uniform, AgentId(1)).unwrap() - 2.75).abs() < TOL);

    let report = check_equivalence(&game, model, &conv.map, 5, 31).unwrap();
    assert!(report.ok, "{:?}", report.failure);
    assert_eq!(report.pure_checked, 8);
}

#[test]
fn a_chance_only_tree_becomes_a_chance_and_utility_model() {
    let game = trees::build_efg(
        "coin",
        &["1", "2"],
        &[],
        trees::chance(
            "X",
            vec![
                ("h", 0.3, trees::leaf(&[1.0, 2.0])),
                ("t", 0.7, trees::leaf(&[3.0, 4.0])),
            ],
        ),
        Vec::new(),
    );
    let conv = efg_to_maim(&game).unwrap();
    let model = &conv.model;
    let graph = model.graph();

    let names: Vec<&str> = graph.node_ids().map(|n| graph.name(n)).collect();
    assert_eq!(names, ["X1", "U1", "U2"]);
    assert_eq!(model.cpd(NodeId(0)).unwrap().rows, vec![vec![0.3, 0.7]]);
    assert_eq!(model.domain(NodeId(0)), &Domain::labels(&["h", "t"]));
    assert_eq!(model.utility_value(NodeId(1), 0), 1.0);
    assert_eq!(model.utility_value(NodeId(1), 1), 3.0);
    assert!(conv.map.entries.is_empty());

    let uniform = PolicyProfile::uniform(model);
    assert!((expected_utility(model, &uniform, AgentId(0)).unwrap() - 2.4).abs() < TOL);
    assert!((expected_utility(model, &uniform, AgentId(1)).unwrap() - 3.4).abs() < TOL);

    let report = check_equivalence(&game, model, &conv.map, 3, 37).unwrap();
    assert!(report.ok, "{:?}", report.failure);
}

#[test]
fn chance_intervention_groups_merge_into_one_variable() {
    use maid_core::efg::{EfgNodeId, InterventionSet};
    let root = trees::chance(
        "A",
        vec![
            (
                "a1",
                0.5,
                trees::chance(
                    "B1",
                    vec![("b1", 0.2, trees::leaf(&[10.0])), ("b2", 0.8, trees::leaf(&[20.0]))],
                ),
            ),
            (
                "a2",
                0.5,
                trees::chance(
                    "B2",
                    vec![("b1", 0.6, trees::leaf(&[30.0])), ("b2", 0.4, trees::leaf(&[40.0]))],
                ),
            ),
        ],
    );
    let mut game = trees::build_efg("grouped", &["1"], &[], root, Vec::new());
    game.interventions = vec![
        InterventionSet::Chance(vec![EfgNodeId(0)]),
        InterventionSet::Chance(vec![EfgNodeId(1), EfgNodeId(4)]),
    ];
    game.validate().unwrap();

    let conv = efg_to_maim(&game).unwrap();
    let model = &conv.model;
    let graph = model.graph();

    let names: Vec<&str> = graph.node_ids().map(|n| graph.name(n)).collect();
    assert_eq!(names, ["X1", "X2", "U1"]);
    assert_eq!(graph.parents(NodeId(1)), &[NodeId(0)]);
    assert_eq!(graph.parents(NodeId(2)), &[NodeId(0), NodeId(1)]);
    // One table row per group member, sliced from that member's node.
    assert_eq!(
        model.cpd(NodeId(1)).unwrap().rows,
        vec![vec![0.2, 0.8], vec![0.6, 0.4]]
    );
    let values: Vec<f64> = (0..4).map(|r| model.utility_value(NodeId(2), r)).collect();
    assert_eq!(values, [10.0, 20.0, 30.0, 40.0]);

    let uniform = PolicyProfile::uniform(model);
    assert!((expected_utility(model, &uniform, AgentId(0)).unwrap() - 26.0).abs() < TOL);

    let report = check_equivalence(&game, model, &conv.map, 3, 41).unwrap();
    assert!(report.ok, "{:?}", report.failure);
}

#[test]
fn absentminded_driver_expands_to_rule_and_instances() {
    let game = trees::driver_efg();
    let exp = absentminded_transform(&game).unwrap();
    let model = &exp.model;
    let graph = model.graph();

    let names: Vec<&str> = graph.node_ids().map(|n| graph.name(n)).collect();
    assert_eq!(names, ["D1", "X1", "X2", "U1"]);
    assert_eq!(graph.decisions(), vec![NodeId(0)]);
    assert!(graph.parents(NodeId(0)).is_empty());
    assert_eq!(graph.parents(NodeId(1)), &[NodeId(0)]);
    assert_eq!(graph.parents(NodeId(2)), &[NodeId(0), NodeId(1)]);
    assert_eq!(graph.parents(NodeId(3)), &[NodeId(1), NodeId(2)]);

    // The first instance is always on the road; the second only after
    // continuing, so it needs the off-path symbol.
    assert_eq!(model.domain(NodeId(1)), &Domain::labels(&["e", "c"]));
    assert_eq!(model.domain(NodeId(2)), &Domain::labels(&["e", "c", "\u{22a5}"]));
    let u: Vec<f64> = (0..6).map(|r| model.utility_value(NodeId(3), r)).collect();
    assert_eq!(u, [0.0, 0.0, 0.0, 4.0, 1.0, 0.0]);

    assert_eq!(exp.map.entries, vec![entry(0, 0, 0)]);

    // Value of the behavioural rule (q, 1-q): (1-q) * (4q + 1 - q).
    for (q, want) in [(0.0, 1.0), (0.5, 1.25), (0.25, 1.3125), (1.0, 0.0)] {
        let mut profile = PolicyProfile::new();
        profile.set(NodeId(0), DecisionRule { rows: vec![vec![q, 1.0 - q]] });
        let got = exp.expected_utility(&profile, AgentId(0)).unwrap();
        assert!((got - want).abs() < TOL, "q={q}: got {got}, want {want}");
    }

    // The filled model is a plain MAIM: the pure exit rule reaches the
    // first leaf with certainty.
    let mut exit = PolicyProfile::new();
    exit.set(NodeId(0), DecisionRule::pure(&[0], 2));
    let filled = exp.with_strategy(&exit).unwrap();
    assert_eq!(filled.cpd(NodeId(1)).unwrap().rows[0], vec![1.0, 0.0]);
    assert_eq!(filled.cpd(NodeId(1)).unwrap().rows[1], vec![1.0, 0.0]);
    assert_eq!(filled.cpd(NodeId(2)).unwrap().rows[1], vec![1.0, 0.0, 0.0]);
    assert_eq!(filled.cpd(NodeId(2)).unwrap().rows[0], vec![0.0, 0.0, 1.0]);
}

#[test]
fn absentmindedness_is_rejected_where_it_does_not_belong() {
    assert!(matches!(
        efg_to_maim(&trees::driver_efg()),
        Err(ConvertError::Efg(EfgError::Absentminded))
    ));
    assert!(matches!(
        absentminded_transform(&trees::taxi_efg()),
        Err(ConvertError::Efg(EfgError::NotAbsentminded))
    ));
    let mut game = trees::driver_efg();
    game.interventions =
        vec![maid_core::efg::InterventionSet::Decisions(vec![0])];
    assert!(matches!(
        absentminded_transform(&game),
        Err(ConvertError::Unsupported(_))
    ));
}

#[test]
fn random_models_convert_to_equivalent_trees() {
    let mut rng = Rng::new(0x5eed_c0de);
    for round in 0..25 {
        let model = gen::random_maim(&mut rng, 6, 3, round % 2 == 0);
        for mode in [SplitMode::Full, SplitMode::Minimal] {
            let conv = maim_to_efg(&model, "random", mode).unwrap();
            let report =
                check_equivalence(&conv.game, &model, &conv.map, 4, round as u64).unwrap();
            assert!(report.ok, "round {round} {mode:?}: {:?}", report.failure);
            assert!(report.max_gap < TOL);
        }
    }
}

#[test]
fn random_trees_convert_to_equivalent_models() {
    let mut rng = Rng::new(0xef9_0b57);
    for round in 0..25 {
        let depth = if round % 5 == 0 { 3 } else { 2 };
        let game = gen::random_efg(&mut rng, depth);
        let conv = efg_to_maim(&game).unwrap();
        let report =
            check_equivalence(&game, &conv.model, &conv.map, 4, round as u64).unwrap();
        assert!(report.ok, "round {round}: {:?}", report.failure);
        assert!(report.max_gap < TOL);
    }
}

#[test]
fn pure_equilibria_correspond_across_the_conversion() {
    let cases = [
        models::taxi(),
        models::cyber_war(),
        models::pipeline(),
        models::job_hiring(0.5),
    ];
    for model in &cases {
        let conv = maim_to_efg(model, "ne", SplitMode::Minimal).unwrap();
        let mut from_model = std::collections::BTreeSet::new();
        for profile in pure_nash(model).unwrap() {
            let mut choices = vec![0usize; conv.game.isets.len()];
            for e in &conv.map.entries {
                choices[e.iset] = profile.choices[&e.decision][e.row];
            }
            from_model.insert(choices);
        }
        let from_game: std::collections::BTreeSet<Vec<usize>> =
            oracle::efg_all_pure_choices(&conv.game)
                .into_iter()
                .filter(|c| oracle::efg_is_pure_nash(&conv.game, c, TOL))
                .collect();
        assert_eq!(from_model, from_game);
        assert!(!from_model.is_empty());
    }
}

#[test]
fn taxi_tree_subgames_match_the_feasible_model_subgames() {
    let model = models::taxi();
    let conv = maim_to_efg(&model, "taxi", SplitMode::Minimal).unwrap();

    use maid_core::efg::EfgNodeId;
    let roots = oracle::efg_proper_subgames(&conv.game);
    assert_eq!(roots, vec![EfgNodeId(1), EfgNodeId(4)]);

    let graph = model.graph();
    let bases = subgame_bases(graph).unwrap();
    let base = bases
        .iter()
        .find(|b| b.decisions(graph) == vec![NodeId(1)])
        .expect("the tail base exists");
    let sub = maid_subgame(graph, base).unwrap();
    assert_eq!(sub.players, vec![AgentId(1)]);
    let instances = maim_subgames(&model, &sub).unwrap();
    assert_eq!(instances.len(), 2);

    // Instance k fixes D1 to its k-th value. The base carries only the
    // deciding agent's utility, so the sub-model reproduces agent 2's leaf
    // payoffs; conditioning the parent model recovers both coordinates.
    let joint = maid_core::policy::induce(&model, &PolicyProfile::uniform(&model)).unwrap();
    let leaves = [[(2.0, 2.0), (5.0, 3.0)], [(3.0, 5.0), (1.0, 1.0)]];
    for (k, inst) in instances.iter().enumerate() {
        assert!(is_feasible_subgame(&model, inst).unwrap());
        assert_eq!(inst.boundary, vec![(NodeId(0), k)]);
        let d2 = sub.sub_node(NodeId(1)).unwrap();
        for (a, &(w1, w2)) in leaves[k].iter().enumerate() {
            let mut profile = PolicyProfile::new();
            profile.set(d2, DecisionRule::pure(&[a], 2));
            let local = expected_utility(&inst.model, &profile, AgentId(1)).unwrap();
            assert!((local - w2).abs() < TOL, "k={k} a={a}: got {local}, want {w2}");
            let evidence = [(NodeId(0), k), (NodeId(1), a)];
            let c1 = expected_utility_in(&joint, AgentId(0), &evidence).unwrap();
            let c2 = expected_utility_in(&joint, AgentId(1), &evidence).unwrap();
            assert!((c1 - w1).abs() < TOL && (c2 - w2).abs() < TOL);
        }
    }
}

#[test]
fn pipeline_has_model_subgames_but_no_tree_subgames() {
    let model = models::pipeline();
    let graph = model.graph();
    let all: usize = graph.node_ids().count();
    let proper = subgame_bases(graph)
        .unwrap()
        .into_iter()
        .filter(|b| b.nodes.len() < all)
        .count();
    assert_eq!(proper, 4);

    // In tree form the late decision pools observations across the chance
    // branch, so no subtree is closed under information sets.
    let conv = maim_to_efg(&model, "pipeline", SplitMode::Full).unwrap();
    assert!(oracle::efg_proper_subgames(&conv.game).is_empty());
}

#[test]
fn split_orders_enumerate_topological_interleavings() {
    let taxi = models::taxi();
    assert_eq!(split_orders(&taxi, SplitMode::Full, 10), vec![vec![NodeId(0), NodeId(1)]]);

    let cyber = models::cyber_war();
    let orders = split_orders(&cyber, SplitMode::Full, 10);
    assert_eq!(orders, vec![vec![NodeId(0), NodeId(1)], vec![NodeId(1), NodeId(0)]]);

    let convs = maim_to_efg_all(&cyber, "cw", SplitMode::Full, 10).unwrap();
    assert_eq!(convs.len(), 2);
    assert_eq!(convs[0], maim_to_efg(&cyber, "cw", SplitMode::Full).unwrap());
    for (k, conv) in convs.iter().enumerate() {
        let report = check_equivalence(&conv.game, &cyber, &conv.map, 4, k as u64).unwrap();
        assert!(report.ok, "order {k}: {:?}", report.failure);
    }

    // Three free padding coins relative to D1 < D2: 5!/2 orders, capped.
    let padded = models::taxi_with_padding(3);
    assert_eq!(split_orders(&padded, SplitMode::Full, 100).len(), 60);
    assert_eq!(split_orders(&padded, SplitMode::Full, 10).len(), 10);
}

#[test]
fn the_equivalence_checker_notices_a_wrong_leaf() {
    let model = models::taxi();
    let mut conv = maim_to_efg(&model, "taxi", SplitMode::Minimal).unwrap();
    for node in &mut conv.game.nodes {
        if let EfgNodeKind::Terminal { payoffs } = &mut node.kind {
            payoffs[0] += 0.5;
            break;
        }
    }
    let report = check_equivalence(&conv.game, &model, &conv.map, 3, 53).unwrap();
    assert!(!report.ok);
    assert!(report.failure.is_some());
    assert!(report.max_gap > 0.4);
}

#[test]
fn the_natural_map_round_trips_profiles() {
    let model = models::taxi();
    let conv = maim_to_efg(&model, "taxi", SplitMode::Minimal).unwrap();

    let mut profile = PolicyProfile::new();
    profile.set(NodeId(0), DecisionRule { rows: vec![vec![0.25, 0.75]] });
    profile.set(NodeId(1), DecisionRule { rows: vec![vec![1.0, 0.0], vec![0.3, 0.7]] });

    let sigma = conv.map.sigma_of(&profile).unwrap();
    assert_eq!(sigma.rows[&0], vec![0.25, 0.75]);
    assert_eq!(sigma.rows[&1], vec![1.0, 0.0]);
    assert_eq!(sigma.rows[&2], vec![0.3, 0.7]);

    let back = conv.map.policy_of(&model, &sigma).unwrap();
    assert_eq!(back, profile);

    // Values agree along the mapping too.
    let v_model = expected_utility(&model, &profile, AgentId(1)).unwrap();
    let v_game = efg_expected_utility(&conv.game, &sigma, AgentId(1)).unwrap();
    assert!((v_model - v_game).abs() < TOL);
}
