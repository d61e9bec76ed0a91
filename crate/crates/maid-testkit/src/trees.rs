//! Hand-built game trees and a builder that flattens them to arena form.

use maid_core::efg::{Efg, EfgNode, EfgNodeId, EfgNodeKind, InfoSet, InterventionSet};
use maid_core::model::AgentId;

/// Recursive description of a tree, flattened by `build_efg` in preorder.
pub enum Tree {
    Chance { label: String, branches: Vec<(String, f64, Tree)> },
    Personal { label: String, iset: usize, children: Vec<Tree> },
    Leaf { payoffs: Vec<f64> },
}

pub fn chance(label: &str, branches: Vec<(&str, f64, Tree)>) -> Tree {
    Tree::Chance {
        label: label.into(),
        branches: branches.into_iter().map(|(a, p, t)| (a.into(), p, t)).collect(),
    }
}

pub fn personal(label: &str, iset: usize, children: Vec<Tree>) -> Tree {
    Tree::Personal { label: label.into(), iset, children }
}

pub fn leaf(payoffs: &[f64]) -> Tree {
    Tree::Leaf { payoffs: payoffs.to_vec() }
}

/// Builds a validated game. `isets` lists (owner, label, actions) in index
/// order; membership is collected from the tree.
pub fn build_efg(
    title: &str,
    agents: &[&str],
    isets: &[(usize, &str, &[&str])],
    root: Tree,
    interventions: Vec<InterventionSet>,
) -> Efg {
    let mut game = Efg {
        title: title.into(),
        agents: agents.iter().map(|a| (*a).into()).collect(),
        nodes: Vec::new(),
        isets: isets
            .iter()
            .map(|(owner, label, actions)| InfoSet {
                owner: AgentId(*owner),
                label: (*label).into(),
                actions: actions.iter().map(|a| (*a).into()).collect(),
                members: Vec::new(),
            })
            .collect(),
        interventions,
    };
    fn grow(game: &mut Efg, tree: Tree, parent: Option<EfgNodeId>) -> EfgNodeId {
        let id = EfgNodeId(game.nodes.len());
        match tree {
            Tree::Chance { label, branches } => {
                game.nodes.push(EfgNode {
                    label,
                    parent,
                    kind: EfgNodeKind::Chance {
                        actions: Vec::new(),
                        probs: Vec::new(),
                        children: Vec::new(),
                    },
                });
                let mut actions = Vec::new();
                let mut probs = Vec::new();
                let mut children = Vec::new();
                for (a, p, sub) in branches {
                    actions.push(a);
                    probs.push(p);
                    children.push(grow(game, sub, Some(id)));
                }
                game.nodes[id.0].kind = EfgNodeKind::Chance { actions, probs, children };
            }
            Tree::Personal { label, iset, children } => {
                game.nodes.push(EfgNode {
                    label,
                    parent,
                    kind: EfgNodeKind::Personal { iset, children: Vec::new() },
                });
                game.isets[iset].members.push(id);
                let built: Vec<EfgNodeId> =
                    children.into_iter().map(|sub| grow(game, sub, Some(id))).collect();
                game.nodes[id.0].kind = EfgNodeKind::Personal { iset, children: built };
            }
            Tree::Leaf { payoffs } => {
                game.nodes.push(EfgNode {
                    label: String::new(),
                    parent,
                    kind: EfgNodeKind::Terminal { payoffs },
                });
            }
        }
        id
    }
    grow(&mut game, root, None);
    game.validate().expect("fixture games are valid");
    game
}

/// The taxi game in tree form: agent 1 moves, agent 2 observes and responds.
/// Information sets 1 and 2 are agent 2's two observation contexts.
pub fn taxi_efg() -> Efg {
    build_efg(
        "taxi",
        &["1", "2"],
        &[
            (0, "D1", &["e", "c"]),
            (1, "D2 | D1=e", &["e", "c"]),
            (1, "D2 | D1=c", &["e", "c"]),
        ],
        personal(
            "D1",
            0,
            vec![
                personal("D2", 1, vec![leaf(&[2.0, 2.0]), leaf(&[5.0, 3.0])]),
                personal("D2", 2, vec![leaf(&[3.0, 5.0]), leaf(&[1.0, 1.0])]),
            ],
        ),
        Vec::new(),
    )
}

/// The taxi tree with agent 2's two decision nodes grouped into one
/// intervention set, marking them as instances of a single variable.
pub fn taxi_efg_merged() -> Efg {
    let mut game = taxi_efg();
    game.interventions =
        vec![InterventionSet::Decisions(vec![0]), InterventionSet::Decisions(vec![1, 2])];
    game.validate().expect("fixture games are valid");
    game
}

/// Job-market signalling in tree form: nature draws the worker's quality,
/// the worker picks an effort knowing it, the firm observes only the
/// effort. Payoffs follow the tabular model in `models::job_hiring`.
pub fn job_hiring_efg(p: f64) -> Efg {
    build_efg(
        "job hiring",
        &["1", "2"],
        &[
            (0, "D1 | X=h", &["g", "a"]),
            (0, "D1 | X=l", &["g", "a"]),
            (1, "D2 | D1=g", &["j", "r"]),
            (1, "D2 | D1=a", &["j", "r"]),
        ],
        chance(
            "X",
            vec![
                (
                    "h",
                    p,
                    personal(
                        "D1",
                        0,
                        vec![
                            personal("D2", 2, vec![leaf(&[4.0, 3.0]), leaf(&[-1.0, -1.0])]),
                            personal("D2", 3, vec![leaf(&[5.0, 3.0]), leaf(&[0.0, -1.0])]),
                        ],
                    ),
                ),
                (
                    "l",
                    1.0 - p,
                    personal(
                        "D1",
                        1,
                        vec![
                            personal("D2", 2, vec![leaf(&[2.0, -2.0]), leaf(&[-2.0, 0.0])]),
                            personal("D2", 3, vec![leaf(&[3.0, -2.0]), leaf(&[0.0, 0.0])]),
                        ],
                    ),
                ),
            ],
        ),
        Vec::new(),
    )
}

/// The absentminded driver: one information set visited twice on the
/// continue-continue path. Exiting at the first junction pays 0, at the
/// second 4, driving past both 1.
pub fn driver_efg() -> Efg {
    build_efg(
        "driver",
        &["1"],
        &[(0, "D", &["e", "c"])],
        personal(
            "V1",
            0,
            vec![leaf(&[0.0]), personal("V2", 0, vec![leaf(&[4.0]), leaf(&[1.0])])],
        ),
        Vec::new(),
    )
}
