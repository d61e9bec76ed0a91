//! Equilibrium tests: pinned Nash and SPE sets for the canonical models,
//! trembling hand verdicts with hand-computed perturbed payoffs, and
//! randomized cross-checks against the brute-force oracle.

use std::collections::BTreeMap;

use maid_core::equilibria::{
    default_schedule, is_pure_nash, is_thpe, perturb, pure_nash, pure_nash_with, spe_solve,
    undominated_check_2p, EquilibriaError, PerturbationVector, ThpeVerdict,
};
use maid_core::infer::{context_statuses, expected_utility, InferError};
use maid_core::model::{AgentId, Cpd, Domain, MaidGraph, Maim, NodeDecl, NodeId};
use maid_core::policy::{with_rules_fixed, DecisionRule, PolicyProfile, PureProfile};
use maid_core::subgames::{is_feasible_subgame, maid_subgame, maim_subgames, subgame_bases};
use maid_core::TOL;
use maid_testkit::models::{self, utility_table};
use maid_testkit::oracle;
use maid_testkit::rng::Rng;

fn profile(entries: &[(usize, &[usize])]) -> PureProfile {
    let mut p = PureProfile::new();
    for &(node, choices) in entries {
        p.set(NodeId(node), choices.to_vec());
    }
    p
}

/// Matching pennies: simultaneous, zero-sum, no pure equilibrium.
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
    let (u1_dom, u1) = utility_table(&[1.0, -1.0, -1.0, 1.0]);
    let (u2_dom, u2) = utility_table(&[-1.0, 1.0, 1.0, -1.0]);
    Maim::new(
        graph,
        vec![Domain::labels(&["h", "t"]), Domain::labels(&["h", "t"]), u1_dom, u2_dom],
        BTreeMap::from([(NodeId(2), u1), (NodeId(3), u2)]),
    )
    .unwrap()
}

/// One decision matching a uniformly random coin it observes.
fn matching_model() -> Maim {
    let graph = MaidGraph::from_names(
        &["solo"],
        vec![
            NodeDecl::chance("X"),
            NodeDecl::decision("D", AgentId(0)),
            NodeDecl::utility("U", AgentId(0)),
        ],
        &[("X", "D"), ("X", "U"), ("D", "U")],
    )
    .unwrap();
    let (u_dom, u) = utility_table(&[1.0, 0.0, 0.0, 1.0]);
    Maim::new(
        graph,
        vec![Domain::labels(&["h", "t"]), Domain::labels(&["h", "t"]), u_dom],
        BTreeMap::from([(NodeId(0), Cpd::uniform(1, 2)), (NodeId(2), u)]),
    )
    .unwrap()
}

#[test]
fn taxi_has_three_pure_equilibria() {
    let m = models::taxi();
    let nash = pure_nash(&m).unwrap();
    assert_eq!(
        nash,
        vec![
            profile(&[(0, &[0]), (1, &[1, 0])]),
            profile(&[(0, &[0]), (1, &[1, 1])]),
            profile(&[(0, &[1]), (1, &[0, 0])]),
        ]
    );
    for p in &nash {
        assert!(oracle::is_pure_nash(&m, p, TOL));
    }
}

#[test]
fn taxi_spe_is_the_backward_induction_profile() {
    let m = models::taxi();
    let solution = spe_solve(&m).unwrap();
    assert_eq!(solution.profiles, vec![profile(&[(0, &[0]), (1, &[1, 0])])]);
    assert_eq!(solution.stats.forks, 0);
    assert_eq!(solution.stats.dead_branches, 0);
    assert!(solution.diagnostics.is_empty());
    // D2's component is solved first against its two sliced instances.
    assert_eq!(solution.stats.components.len(), 2);
    assert_eq!(solution.stats.components[0].decisions, vec![NodeId(1)]);
    assert_eq!(solution.stats.components[0].instances, 2);
    assert_eq!(solution.stats.components[1].decisions, vec![NodeId(0)]);
    assert_eq!(solution.stats.components[1].instances, 1);
}

#[test]
fn cyber_war_nash_and_spe_coincide() {
    let m = models::cyber_war();
    let nash = pure_nash(&m).unwrap();
    assert_eq!(
        nash,
        vec![profile(&[(0, &[0]), (1, &[0])]), profile(&[(0, &[1]), (1, &[1])])]
    );
    let solution = spe_solve(&m).unwrap();
    assert_eq!(solution.profiles, nash);
    // One cyclic component solved in one piece over the full model; its two
    // local equilibria branch the queue once.
    assert_eq!(solution.stats.components.len(), 1);
    assert_eq!(solution.stats.components[0].decisions, vec![NodeId(0), NodeId(1)]);
    assert_eq!(solution.stats.components[0].instances, 1);
    assert_eq!(solution.stats.forks, 1);
}

#[test]
fn job_hiring_spe_matches_nash() {
    let m = models::job_hiring(0.5);
    let nash = pure_nash(&m).unwrap();
    let mut by_oracle = Vec::new();
    for cand in oracle::all_choice_vectors(&m, &m.graph().decisions()) {
        if oracle::is_pure_nash(&m, &cand, TOL) {
            by_oracle.push(cand);
        }
    }
    assert_eq!(nash, by_oracle);
    let solution = spe_solve(&m).unwrap();
    assert_eq!(solution.profiles, nash);
}

#[test]
fn pipeline_has_a_unique_equilibrium_found_by_both_solvers() {
    let m = models::pipeline();
    let expected = vec![profile(&[(1, &[0, 1]), (2, &[0, 1])])];
    assert_eq!(pure_nash(&m).unwrap(), expected);
    let solution = spe_solve(&m).unwrap();
    assert_eq!(solution.profiles, expected);
    // Mutually irrelevant decisions: two singleton components, leader first.
    assert_eq!(solution.stats.components.len(), 2);
    assert_eq!(solution.stats.components[0].decisions, vec![NodeId(1)]);
    assert_eq!(solution.stats.components[1].decisions, vec![NodeId(2)]);
    assert_eq!(solution.stats.components[0].instances, 2);
    assert_eq!(solution.stats.components[1].instances, 2);
}

#[test]
fn spe_profiles_are_nash_in_every_feasible_subgame() {
    for m in [models::taxi(), models::pipeline(), models::cyber_war(), models::job_hiring(0.3)] {
        let solution = spe_solve(&m).unwrap();
        assert!(!solution.profiles.is_empty());
        for p in &solution.profiles {
            assert!(oracle::is_pure_nash(&m, p, TOL), "SPE must be a global Nash equilibrium");
            for base in subgame_bases(m.graph()).unwrap() {
                let sub = maid_subgame(m.graph(), &base).unwrap();
                for inst in maim_subgames(&m, &sub).unwrap() {
                    if !is_feasible_subgame(&m, &inst).unwrap() {
                        continue;
                    }
                    let local = inst.restrict_pure(&m, p);
                    assert!(
                        oracle::is_pure_nash(&inst.model, &local, TOL),
                        "SPE restriction must be Nash in every feasible subgame instance"
                    );
                }
            }
        }
    }
}

#[test]
fn candidate_counts_stay_under_the_profile_space_bound() {
    for m in [models::taxi(), models::pipeline(), models::cyber_war(), models::job_hiring(0.5)] {
        let solution = spe_solve(&m).unwrap();
        let mut bound = 1usize;
        for d in m.graph().decisions() {
            let feasible =
                context_statuses(&m, d).unwrap().iter().filter(|s| s.feasible).count();
            bound *= m.domain_size(d).pow(feasible as u32);
        }
        let total: usize = solution.stats.components.iter().map(|c| c.candidates).sum();
        assert!(total <= bound, "candidates {total} exceed profile space {bound}");
    }
}

#[test]
fn indifference_forks_the_queue() {
    let graph = MaidGraph::from_names(
        &["solo"],
        vec![NodeDecl::decision("D", AgentId(0)), NodeDecl::utility("U", AgentId(0))],
        &[("D", "U")],
    )
    .unwrap();
    let (u_dom, u) = utility_table(&[1.0, 1.0]);
    let m = Maim::new(
        graph,
        vec![Domain::labels(&["l", "r"]), u_dom],
        BTreeMap::from([(NodeId(1), u)]),
    )
    .unwrap();
    let solution = spe_solve(&m).unwrap();
    assert_eq!(solution.profiles, vec![profile(&[(0, &[0])]), profile(&[(0, &[1])])]);
    assert_eq!(solution.stats.forks, 1);
    assert_eq!(pure_nash(&m).unwrap(), solution.profiles);
}

#[test]
fn matching_pennies_has_no_pure_equilibrium() {
    let m = matching_pennies();
    assert_eq!(pure_nash(&m).unwrap(), Vec::<PureProfile>::new());
    let solution = spe_solve(&m).unwrap();
    assert!(solution.profiles.is_empty());
    assert_eq!(solution.stats.dead_branches, 1);
    assert!(solution
        .diagnostics
        .iter()
        .any(|d| d.contains("no pure subgame perfect equilibrium exists")));
}

#[test]
fn decisionless_models_solve_trivially() {
    let graph = MaidGraph::from_names(
        &["watcher"],
        vec![NodeDecl::chance("X"), NodeDecl::utility("U", AgentId(0))],
        &[("X", "U")],
    )
    .unwrap();
    let (u_dom, u) = utility_table(&[3.0, 4.0]);
    let m = Maim::new(
        graph,
        vec![Domain::labels(&["0", "1"]), u_dom],
        BTreeMap::from([(NodeId(0), Cpd::uniform(1, 2)), (NodeId(1), u)]),
    )
    .unwrap();
    assert_eq!(pure_nash(&m).unwrap(), vec![PureProfile::new()]);
    let solution = spe_solve(&m).unwrap();
    assert_eq!(solution.profiles, vec![PureProfile::new()]);
    assert!(solution.stats.components.is_empty());
}

#[test]
fn single_decision_solver_is_an_argmax() {
    let m = matching_model();
    let expected = vec![profile(&[(1, &[0, 1])])];
    assert_eq!(pure_nash(&m).unwrap(), expected);
    assert_eq!(spe_solve(&m).unwrap().profiles, expected);
    let report = is_thpe(&m, &expected[0], &default_schedule()).unwrap();
    assert_eq!(report.verdict, ThpeVerdict::Yes);
}

#[test]
fn pure_nash_matches_oracle_on_random_models() {
    let mut rng = Rng::new(0x5eede9);
    let mut nontrivial = 0;
    for _ in 0..30 {
        let m = maid_testkit::gen::random_maim(&mut rng, 5, 2, true);
        let mine = pure_nash(&m).unwrap();
        // The solver pins rules on null contexts to action 0; keep only those
        // representatives on the oracle side.
        let decisions = m.graph().decisions();
        let null_rows: BTreeMap<NodeId, Vec<bool>> = decisions
            .iter()
            .map(|&d| {
                let rows =
                    context_statuses(&m, d).unwrap().iter().map(|s| s.null).collect();
                (d, rows)
            })
            .collect();
        let mut by_oracle = Vec::new();
        for cand in oracle::all_choice_vectors(&m, &decisions) {
            let pinned = cand.choices.iter().all(|(d, choices)| {
                choices.iter().enumerate().all(|(r, &c)| c == 0 || !null_rows[d][r])
            });
            if pinned && oracle::is_pure_nash(&m, &cand, TOL) {
                by_oracle.push(cand);
            }
        }
        assert_eq!(mine, by_oracle);
        if !mine.is_empty() && !m.graph().decisions().is_empty() {
            nontrivial += 1;
        }
    }
    assert!(nontrivial >= 10, "corpus too degenerate: {nontrivial}");
}

#[test]
fn spe_is_nash_on_random_models() {
    let mut rng = Rng::new(0xab5eed);
    for _ in 0..20 {
        let m = maid_testkit::gen::random_maim(&mut rng, 5, 2, true);
        let solution = spe_solve(&m).unwrap();
        for p in &solution.profiles {
            assert!(
                oracle::is_pure_nash(&m, p, TOL),
                "SPE output must be Nash on {:?}",
                m.graph().agent_names()
            );
        }
    }
}

#[test]
fn fixing_rules_preserves_expected_utility() {
    let m = models::taxi();
    let uniform = PolicyProfile::uniform(&m);
    let fixed = with_rules_fixed(&m, &uniform).unwrap();
    assert!(fixed.graph().decisions().is_empty());
    let eu = expected_utility(&fixed, &PolicyProfile::new(), AgentId(0)).unwrap();
    assert!((eu - 2.75).abs() < TOL);
    assert!(
        (eu - expected_utility(&m, &uniform, AgentId(0)).unwrap()).abs() < TOL
    );
}

#[test]
fn enumeration_bound_is_enforced() {
    let m = models::taxi();
    assert!(matches!(
        pure_nash_with(&m, 4),
        Err(EquilibriaError::Infer(InferError::BoundExceeded(_)))
    ));
}

#[test]
fn default_schedule_is_the_dyadic_ladder() {
    let schedule = default_schedule();
    assert_eq!(schedule.len(), 10);
    assert_eq!(schedule[0], 0.125);
    assert_eq!(schedule[9], 1.0 / 4096.0);
    assert!(schedule.windows(2).all(|w| w[1] == w[0] / 2.0));
}

#[test]
fn perturbed_payoffs_match_hand_computation() {
    // Against an admissible attack-intent by agent 1 with lower bound e,
    // agent 2's pure responses earn -2+2e (attack) and -4+4e (hold); against
    // a hold-intent they earn -2e and -4e.
    let m = models::cyber_war();
    let eps = 0.125;
    let pm = perturb(&m, PerturbationVector::uniform(&m, eps)).unwrap();
    let agent2 = AgentId(1);
    for (d1_intent, pure_a, pure_n) in
        [(0usize, -2.0 + 2.0 * eps, -4.0 + 4.0 * eps), (1usize, -2.0 * eps, -4.0 * eps)]
    {
        for (d2_choice, expected) in [(0usize, pure_a), (1usize, pure_n)] {
            let mut rules = PolicyProfile::new();
            rules.set(NodeId(0), pm.admissible_rule(NodeId(0), &[d1_intent]));
            rules.set(NodeId(1), DecisionRule::pure(&[d2_choice], 2));
            let eu = expected_utility(&m, &rules, agent2).unwrap();
            assert!((eu - expected).abs() < TOL, "intent {d1_intent} vs {d2_choice}: {eu}");
        }
    }
}

#[test]
fn thpe_separates_the_cyber_war_equilibria() {
    let m = models::cyber_war();
    let schedule = default_schedule();

    let attack = profile(&[(0, &[0]), (1, &[0])]);
    let report = is_thpe(&m, &attack, &schedule).unwrap();
    assert_eq!(report.verdict, ThpeVerdict::Yes);
    assert!(report.steps.iter().all(|s| s.intent_is_ne && s.witness.is_none()));

    let hold = profile(&[(0, &[1]), (1, &[1])]);
    let report = is_thpe(&m, &hold, &schedule).unwrap();
    assert_eq!(report.verdict, ThpeVerdict::No);
    for step in &report.steps {
        assert!(!step.intent_is_ne);
        let w = step.witness.as_ref().unwrap();
        assert_eq!((w.decision, w.row, w.action), (NodeId(0), 0, 0));
        let eps = step.eps;
        assert!((w.gain - (2.0 * eps - 4.0 * eps * eps)).abs() < TOL);
    }
}

#[test]
fn thpe_classifies_all_taxi_equilibria() {
    let m = models::taxi();
    let schedule = default_schedule();

    let spe = profile(&[(0, &[0]), (1, &[1, 0])]);
    assert_eq!(is_thpe(&m, &spe, &schedule).unwrap().verdict, ThpeVerdict::Yes);

    // Off-path threats unravel once every context is reached.
    let stubborn = profile(&[(0, &[0]), (1, &[1, 1])]);
    let report = is_thpe(&m, &stubborn, &schedule).unwrap();
    assert_eq!(report.verdict, ThpeVerdict::No);
    let w = report.steps[0].witness.as_ref().unwrap();
    assert_eq!((w.decision, w.row, w.action), (NodeId(1), 1, 0));

    let threat = profile(&[(0, &[1]), (1, &[0, 0])]);
    let report = is_thpe(&m, &threat, &schedule).unwrap();
    assert_eq!(report.verdict, ThpeVerdict::No);
    let w = report.steps[0].witness.as_ref().unwrap();
    assert_eq!(w.decision, NodeId(1));
}

#[test]
fn thpe_requires_a_nash_profile() {
    let m = models::taxi();
    let not_nash = profile(&[(0, &[1]), (1, &[1, 1])]);
    assert!(matches!(
        is_thpe(&m, &not_nash, &default_schedule()),
        Err(EquilibriaError::NotAnEquilibrium(_))
    ));
}

#[test]
fn one_action_decisions_are_trivially_perfect() {
    let graph = MaidGraph::from_names(
        &["solo"],
        vec![NodeDecl::decision("D", AgentId(0)), NodeDecl::utility("U", AgentId(0))],
        &[("D", "U")],
    )
    .unwrap();
    let (u_dom, u) = utility_table(&[7.0]);
    let m = Maim::new(
        graph,
        vec![Domain::labels(&["go"]), u_dom],
        BTreeMap::from([(NodeId(1), u)]),
    )
    .unwrap();
    let p = profile(&[(0, &[0])]);
    let report = is_thpe(&m, &p, &default_schedule()).unwrap();
    assert_eq!(report.verdict, ThpeVerdict::Yes);
}

#[test]
fn perturbation_validation_rejects_bad_vectors() {
    let m = models::taxi();
    let mut delta = PerturbationVector::uniform(&m, 0.1);
    delta.entries.get_mut(&NodeId(1)).unwrap().pop();
    assert!(matches!(perturb(&m, delta), Err(EquilibriaError::BadPerturbation(_))));

    let mut delta = PerturbationVector::uniform(&m, 0.1);
    delta.entries.get_mut(&NodeId(0)).unwrap()[0][0] = 1.5;
    assert!(matches!(perturb(&m, delta), Err(EquilibriaError::BadPerturbation(_))));

    // Entries are individually fine but sum past 1 on a row.
    let delta = PerturbationVector::uniform(&m, 0.6);
    assert!(matches!(perturb(&m, delta), Err(EquilibriaError::BadPerturbation(_))));

    assert!(perturb(&m, PerturbationVector::uniform(&m, 0.25)).is_ok());
}

#[test]
fn domination_check_separates_the_standoff_equilibria() {
    let m = models::cyber_war();
    assert!(undominated_check_2p(&m, &profile(&[(0, &[0]), (1, &[0])])).unwrap());
    assert!(!undominated_check_2p(&m, &profile(&[(0, &[1]), (1, &[1])])).unwrap());

    let taxi = models::taxi();
    assert!(undominated_check_2p(&taxi, &profile(&[(0, &[0]), (1, &[1, 0])])).unwrap());

    let solo = matching_model();
    assert!(matches!(
        undominated_check_2p(&solo, &profile(&[(1, &[0, 1])])),
        Err(EquilibriaError::BadQuery(_))
    ));
}

#[test]
fn is_pure_nash_validates_profiles() {
    let m = models::taxi();
    assert!(is_pure_nash(&m, &profile(&[(0, &[0]), (1, &[1, 0])])).unwrap());
    assert!(!is_pure_nash(&m, &profile(&[(0, &[1]), (1, &[1, 1])])).unwrap());
    assert!(is_pure_nash(&m, &profile(&[(0, &[0])])).is_err());
}
