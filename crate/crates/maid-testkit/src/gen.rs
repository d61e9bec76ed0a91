//! Random model generators for property-style corpora.

use std::collections::BTreeMap;

use maid_core::model::{AgentId, Cpd, Domain, MaidGraph, Maim, NodeDecl, NodeId};
use maid_core::policy::{DecisionRule, PolicyProfile};

use crate::rng::Rng;

/// Random DAG over `n` chance nodes; each forward pair is an edge with
/// probability `edge_p`.
pub fn random_dag(rng: &mut Rng, n: usize, edge_p: f64) -> MaidGraph {
    let nodes: Vec<NodeDecl> = (0..n).map(|i| NodeDecl::chance(&format!("V{i}"))).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.chance(edge_p) {
                edges.push((NodeId(i), NodeId(j)));
            }
        }
    }
    MaidGraph::new(vec!["1".into()], nodes, &edges).unwrap()
}

/// Random binary-chance Bayesian network with strictly positive CPDs.
pub fn random_bn(rng: &mut Rng, n: usize, edge_p: f64) -> Maim {
    let graph = random_dag(rng, n, edge_p);
    let domains: Vec<Domain> = (0..n).map(|_| Domain::labels(&["0", "1"])).collect();
    let mut cpds = BTreeMap::new();
    for id in graph.node_ids() {
        let rows = graph.parents(id).iter().map(|p| domains[p.0].size()).product::<usize>();
        cpds.insert(id, random_rows(rng, rows, 2, true));
    }
    Maim::new(graph, domains, cpds).unwrap()
}

/// Random MAIM: binary chance and decision nodes, deterministic real
/// utilities, one or two agents, every agent owning a decision also owning a
/// utility. `positive` keeps all chance CPD entries strictly positive.
pub fn random_maim(
    rng: &mut Rng,
    max_nodes: usize,
    max_decisions: usize,
    positive: bool,
) -> Maim {
    loop {
        if let Some(m) = try_random_maim(rng, max_nodes, max_decisions, positive) {
            return m;
        }
    }
}

fn try_random_maim(
    rng: &mut Rng,
    max_nodes: usize,
    max_decisions: usize,
    positive: bool,
) -> Option<Maim> {
    let n = 3 + rng.below(max_nodes.saturating_sub(2).max(1));
    let agent_count = 1 + rng.below(2);
    let agents: Vec<&str> = ["1", "2"][..agent_count].to_vec();

    // Kinds: sprinkle decisions early, utilities late (utilities must be
    // childless, so only allow edges into them).
    let mut kinds = Vec::with_capacity(n);
    let mut decisions = 0;
    for i in 0..n {
        let last = i == n - 1;
        let k = if last && !kinds.iter().any(|k: &NodeDecl| k.kind.is_utility()) {
            NodeDecl::utility(&format!("U{i}"), AgentId(rng.below(agent_count)))
        } else if decisions < max_decisions && rng.chance(0.35) {
            decisions += 1;
            NodeDecl::decision(&format!("D{i}"), AgentId(rng.below(agent_count)))
        } else if rng.chance(0.4) {
            NodeDecl::utility(&format!("U{i}"), AgentId(rng.below(agent_count)))
        } else {
            NodeDecl::chance(&format!("X{i}"))
        };
        kinds.push(k);
    }
    // Agents that own a decision must own a utility somewhere.
    for a in 0..agent_count {
        let owns_d = kinds.iter().any(|k| k.kind == maid_core::model::NodeKind::Decision(AgentId(a)));
        let owns_u = kinds.iter().any(|k| k.kind == maid_core::model::NodeKind::Utility(AgentId(a)));
        if owns_d && !owns_u {
            return None;
        }
    }

    let mut edges = Vec::new();
    for (i, decl) in kinds.iter().enumerate() {
        if decl.kind.is_utility() {
            continue;
        }
        for j in (i + 1)..n {
            if rng.chance(0.45) {
                edges.push((NodeId(i), NodeId(j)));
            }
        }
    }
    let graph = MaidGraph::new(agents.iter().map(|a| a.to_string()).collect(), kinds, &edges).ok()?;

    let mut domains = Vec::with_capacity(n);
    for id in graph.node_ids() {
        if graph.kind(id).is_utility() {
            let a = rng.below(9) as f64 - 4.0;
            let mut b = rng.below(9) as f64 - 4.0;
            if b == a {
                b += 1.0;
            }
            domains.push(Domain::Reals(vec![a, b]));
        } else {
            domains.push(Domain::labels(&["0", "1"]));
        }
    }
    let mut cpds = BTreeMap::new();
    for id in graph.node_ids() {
        let rows: usize = graph.parents(id).iter().map(|p| domains[p.0].size()).product();
        match graph.kind(id) {
            maid_core::model::NodeKind::Decision(_) => {}
            maid_core::model::NodeKind::Chance => {
                cpds.insert(id, random_rows(rng, rows, 2, positive));
            }
            maid_core::model::NodeKind::Utility(_) => {
                let choices: Vec<usize> = (0..rows).map(|_| rng.below(2)).collect();
                cpds.insert(id, Cpd::deterministic(&choices, 2));
            }
        }
    }
    Maim::new(graph, domains, cpds).ok()
}

fn random_rows(rng: &mut Rng, rows: usize, width: usize, positive: bool) -> Cpd {
    let table = (0..rows)
        .map(|_| {
            let mut row: Vec<f64> = (0..width)
                .map(|_| {
                    let base = rng.next_f64();
                    if positive {
                        base + 0.05
                    } else if rng.chance(0.2) {
                        0.0
                    } else {
                        base
                    }
                })
                .collect();
            let sum: f64 = row.iter().sum();
            if sum == 0.0 {
                row = vec![1.0 / width as f64; width];
            } else {
                for v in &mut row {
                    *v /= sum;
                }
            }
            row
        })
        .collect();
    Cpd::new(table)
}

/// Random fully mixed behavioural profile over all decisions.
pub fn random_mixed_profile(rng: &mut Rng, model: &Maim) -> PolicyProfile {
    let mut profile = PolicyProfile::new();
    for d in model.graph().decisions() {
        let rows = (0..model.context_count(d))
            .map(|_| {
                let mut row: Vec<f64> =
                    (0..model.domain_size(d)).map(|_| rng.next_f64() + 0.02).collect();
                let sum: f64 = row.iter().sum();
                for v in &mut row {
                    *v /= sum;
                }
                row
            })
            .collect();
        profile.set(d, DecisionRule { rows });
    }
    profile
}

use maid_core::efg::{Efg, EfgNode, EfgNodeId, EfgNodeKind, InfoSet};

/// Random valid game tree without absentmindedness: mixed chance and
/// personal nodes, one or two agents, occasional information sets spanning
/// branches (imperfect recall). `max_depth` bounds the tree height.
pub fn random_efg(rng: &mut Rng, max_depth: usize) -> Efg {
    let agent_count = 1 + rng.below(2);
    let agents: Vec<String> = (0..agent_count).map(|a| format!("{}", a + 1)).collect();
    let mut game = Efg {
        title: "random".into(),
        agents,
        nodes: Vec::new(),
        isets: Vec::new(),
        interventions: Vec::new(),
    };
    let mut spine = Vec::new();
    grow_efg(rng, &mut game, &mut spine, None, max_depth, agent_count);
    game.validate().expect("generated game is valid");
    game
}

fn grow_efg(
    rng: &mut Rng,
    game: &mut Efg,
    spine: &mut Vec<usize>,
    parent: Option<EfgNodeId>,
    depth: usize,
    agent_count: usize,
) -> EfgNodeId {
    let id = EfgNodeId(game.nodes.len());
    if depth == 0 || (!game.nodes.is_empty() && rng.chance(0.3)) {
        let payoffs: Vec<f64> = (0..agent_count).map(|_| rng.below(9) as f64 - 4.0).collect();
        game.nodes.push(EfgNode {
            label: String::new(),
            parent,
            kind: EfgNodeKind::Terminal { payoffs },
        });
        return id;
    }
    if rng.chance(0.4) {
        let width = 2 + rng.below(2);
        let mut probs: Vec<f64> = (0..width).map(|_| rng.next_f64() + 0.1).collect();
        let sum: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= sum;
        }
        let actions: Vec<String> = (0..width).map(|k| format!("c{k}")).collect();
        game.nodes.push(EfgNode {
            label: format!("N{}", id.0),
            parent,
            kind: EfgNodeKind::Chance { actions, probs, children: Vec::new() },
        });
        let children: Vec<EfgNodeId> = (0..width)
            .map(|_| grow_efg(rng, game, spine, Some(id), depth - 1, agent_count))
            .collect();
        if let EfgNodeKind::Chance { children: slot, .. } = &mut game.nodes[id.0].kind {
            *slot = children;
        }
    } else {
        // Reusing an information set from a finished branch models
        // imperfect recall; the spine check rules out absentmindedness.
        let reusable: Vec<usize> =
            (0..game.isets.len()).filter(|j| !spine.contains(j)).collect();
        let iset = if !reusable.is_empty() && rng.chance(0.4) {
            reusable[rng.below(reusable.len())]
        } else {
            let owner = AgentId(rng.below(agent_count));
            let width = 2 + rng.below(2);
            game.isets.push(InfoSet {
                owner,
                label: format!("I{}", game.isets.len()),
                actions: (0..width).map(|k| format!("a{k}")).collect(),
                members: Vec::new(),
            });
            game.isets.len() - 1
        };
        let width = game.isets[iset].actions.len();
        game.nodes.push(EfgNode {
            label: format!("N{}", id.0),
            parent,
            kind: EfgNodeKind::Personal { iset, children: Vec::new() },
        });
        game.isets[iset].members.push(id);
        spine.push(iset);
        let children: Vec<EfgNodeId> = (0..width)
            .map(|_| grow_efg(rng, game, spine, Some(id), depth - 1, agent_count))
            .collect();
        spine.pop();
        if let EfgNodeKind::Personal { children: slot, .. } = &mut game.nodes[id.0].kind {
            *slot = children;
        }
    }
    id
}
