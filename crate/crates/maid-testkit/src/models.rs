//! Canonical models used across the test suites.
//!
//! Parametrizations follow the worked examples in the multi-agent influence
//! diagram literature: the taxi competition, the cyber-war standoff, the
//! job-market signalling game, and a two-stage pipeline whose subgame lattice
//! is richer than its tree form suggests.

use std::collections::BTreeMap;

use maid_core::model::{AgentId, Cpd, Domain, MaidGraph, Maim, NodeDecl, NodeId};

/// Deterministic utility table: `values[row]` is the utility at each parent
/// context row. Returns the domain (distinct values in first-appearance
/// order) and the CPD.
pub fn utility_table(values: &[f64]) -> (Domain, Cpd) {
    let mut domain: Vec<f64> = Vec::new();
    let choices: Vec<usize> = values
        .iter()
        .map(|v| {
            if let Some(i) = domain.iter().position(|d| d == v) {
                i
            } else {
                domain.push(*v);
                domain.len() - 1
            }
        })
        .collect();
    let size = domain.len();
    (Domain::Reals(domain), Cpd::deterministic(&choices, size))
}

/// Two taxis at an airport: agent 1 chooses a terminal first, agent 2 sees
/// the choice and responds. `e`/`c` pick the expensive or cheap terminal.
///
/// Nodes: D1, D2, U1, U2. D2 observes D1; both utilities depend on both
/// decisions.
pub fn taxi() -> Maim {
    let graph = MaidGraph::from_names(
        &["1", "2"],
        vec![
            NodeDecl::decision("D1", AgentId(0)),
            NodeDecl::decision("D2", AgentId(1)),
            NodeDecl::utility("U1", AgentId(0)),
            NodeDecl::utility("U2", AgentId(1)),
        ],
        &[("D1", "D2"), ("D1", "U1"), ("D2", "U1"), ("D1", "U2"), ("D2", "U2")],
    )
    .unwrap();
    // rows over (D1, D2): (e,e), (e,c), (c,e), (c,c)
    let (u1_dom, u1) = utility_table(&[2.0, 5.0, 3.0, 1.0]);
    let (u2_dom, u2) = utility_table(&[2.0, 3.0, 5.0, 1.0]);
    Maim::new(
        graph,
        vec![Domain::labels(&["e", "c"]), Domain::labels(&["e", "c"]), u1_dom, u2_dom],
        BTreeMap::from([(NodeId(2), u1), (NodeId(3), u2)]),
    )
    .unwrap()
}

/// Simultaneous attack/defend standoff: neither side observes the other.
/// `a` attacks, `n` does not.
pub fn cyber_war() -> Maim {
    let graph = MaidGraph::from_names(
        &["1", "2"],
        vec![
            NodeDecl::decision("D1", AgentId(0)),
            NodeDecl::decision("D2", AgentId(1)),
            NodeDecl::utility("U1", AgentId(0)),
            NodeDecl::utility("U2", AgentId(1)),
        ],
        &[("D1", "U1"), ("D2", "U1"), ("D1", "U2"), ("D2", "U2")],
    )
    .unwrap();
    // rows over (D1, D2): (a,a), (a,n), (n,a), (n,n)
    let (u1_dom, u1) = utility_table(&[-2.0, 0.0, -4.0, 0.0]);
    let (u2_dom, u2) = utility_table(&[-2.0, -4.0, 0.0, 0.0]);
    Maim::new(
        graph,
        vec![Domain::labels(&["a", "n"]), Domain::labels(&["a", "n"]), u1_dom, u2_dom],
        BTreeMap::from([(NodeId(2), u1), (NodeId(3), u2)]),
    )
    .unwrap()
}

/// Job-market signalling: a worker of hidden quality `X` picks study effort
/// `D1`; the firm sees the effort (not the quality) and hires or rejects at
/// `D2`. `p` is the probability of a hard worker.
pub fn job_hiring(p: f64) -> Maim {
    let graph = MaidGraph::from_names(
        &["1", "2"],
        vec![
            NodeDecl::chance("X"),
            NodeDecl::decision("D1", AgentId(0)),
            NodeDecl::decision("D2", AgentId(1)),
            NodeDecl::utility("U1", AgentId(0)),
            NodeDecl::utility("U2", AgentId(1)),
        ],
        &[
            ("X", "D1"),
            ("D1", "D2"),
            ("X", "U1"),
            ("D1", "U1"),
            ("D2", "U1"),
            ("X", "U2"),
            ("D2", "U2"),
        ],
    )
    .unwrap();
    // U1 rows over (X, D1, D2), U2 rows over (X, D2).
    let (u1_dom, u1) = utility_table(&[4.0, -1.0, 5.0, 0.0, 2.0, -2.0, 3.0, 0.0]);
    let (u2_dom, u2) = utility_table(&[3.0, -1.0, -2.0, 0.0]);
    Maim::new(
        graph,
        vec![
            Domain::labels(&["h", "l"]),
            Domain::labels(&["g", "a"]),
            Domain::labels(&["j", "r"]),
            u1_dom,
            u2_dom,
        ],
        BTreeMap::from([
            (NodeId(0), Cpd::new(vec![vec![p, 1.0 - p]])),
            (NodeId(3), u1),
            (NodeId(4), u2),
        ]),
    )
    .unwrap()
}

/// Two-stage pipeline: agent 1 observes the market state `X` and moves;
/// agent 2 observes only agent 1's move. Neither decision strategically
/// relies on the other, so the subgame lattice has more entries than the
/// tree form of the game has subtrees.
pub fn pipeline() -> Maim {
    let graph = MaidGraph::from_names(
        &["1", "2"],
        vec![
            NodeDecl::chance("X"),
            NodeDecl::decision("D1", AgentId(0)),
            NodeDecl::decision("D2", AgentId(1)),
            NodeDecl::utility("U1", AgentId(0)),
            NodeDecl::utility("U2", AgentId(1)),
        ],
        &[("X", "D1"), ("X", "U1"), ("D1", "U1"), ("D1", "D2"), ("D1", "U2"), ("D2", "U2")],
    )
    .unwrap();
    // U1 rows over (X, D1): match the state; U2 rows over (D1, D2): match D1.
    let (u1_dom, u1) = utility_table(&[1.0, 0.0, 0.0, 1.0]);
    let (u2_dom, u2) = utility_table(&[1.0, 0.0, 0.0, 1.0]);
    Maim::new(
        graph,
        vec![
            Domain::labels(&["a", "b"]),
            Domain::labels(&["c", "d"]),
            Domain::labels(&["e", "f"]),
            u1_dom,
            u2_dom,
        ],
        BTreeMap::from([
            (NodeId(0), Cpd::new(vec![vec![0.5, 0.5]])),
            (NodeId(3), u1),
            (NodeId(4), u2),
        ]),
    )
    .unwrap()
}

/// The taxi model padded with `k` isolated uniform binary chance nodes.
/// They inform no decision, so a minimal-split tree form ignores them.
pub fn taxi_with_padding(k: usize) -> Maim {
    let mut nodes = vec![
        NodeDecl::decision("D1", AgentId(0)),
        NodeDecl::decision("D2", AgentId(1)),
        NodeDecl::utility("U1", AgentId(0)),
        NodeDecl::utility("U2", AgentId(1)),
    ];
    for i in 0..k {
        nodes.push(NodeDecl::chance(&format!("Z{i}")));
    }
    let graph = MaidGraph::from_names(
        &["1", "2"],
        nodes,
        &[("D1", "D2"), ("D1", "U1"), ("D2", "U1"), ("D1", "U2"), ("D2", "U2")],
    )
    .unwrap();
    let (u1_dom, u1) = utility_table(&[2.0, 5.0, 3.0, 1.0]);
    let (u2_dom, u2) = utility_table(&[2.0, 3.0, 5.0, 1.0]);
    let mut domains =
        vec![Domain::labels(&["e", "c"]), Domain::labels(&["e", "c"]), u1_dom, u2_dom];
    let mut cpds = BTreeMap::from([(NodeId(2), u1), (NodeId(3), u2)]);
    for i in 0..k {
        domains.push(Domain::labels(&["0", "1"]));
        cpds.insert(NodeId(4 + i), Cpd::new(vec![vec![0.5, 0.5]]));
    }
    Maim::new(graph, domains, cpds).unwrap()
}
