//! Independent reference implementations used to cross-check maid-core.
//!
//! Everything here works by brute force: joint-assignment enumeration for
//! probabilities and utilities, and explicit path enumeration for
//! d-separation. Keep these free of maid-core's inference and traversal code
//! paths so that agreement between the two is meaningful.

use std::collections::{BTreeMap, BTreeSet};

use maid_core::model::{AgentId, MaidGraph, Maim, NodeDecl, NodeId};
use maid_core::policy::{PolicyProfile, PureProfile};

/// Enumerates every joint assignment (value index per node, in declaration
/// order) with its probability under the induced network. Probabilities are
/// plain products of table entries.
pub fn joint_assignments(model: &Maim, profile: &PolicyProfile) -> Vec<(Vec<usize>, f64)> {
    let graph = model.graph();
    let n = graph.node_count();
    let cards: Vec<usize> = graph.node_ids().map(|id| model.domain_size(id)).collect();
    let total: usize = cards.iter().product();
    let mut out = Vec::with_capacity(total);
    for mut idx in 0..total {
        let mut assignment = vec![0; n];
        for i in (0..n).rev() {
            assignment[i] = idx % cards[i];
            idx /= cards[i];
        }
        let mut p = 1.0;
        for id in graph.node_ids() {
            let row = context_row_of(model, id, &assignment);
            let table = match profile.rules.get(&id) {
                Some(rule) => &rule.rows,
                None => &model.cpd(id).expect("cpd present").rows,
            };
            p *= table[row][assignment[id.0]];
        }
        out.push((assignment, p));
    }
    out
}

fn context_row_of(model: &Maim, id: NodeId, assignment: &[usize]) -> usize {
    let mut row = 0;
    for &p in model.graph().parents(id) {
        row = row * model.domain_size(p) + assignment[p.0];
    }
    row
}

/// Expected utility by exhaustive enumeration.
pub fn expected_utility(model: &Maim, profile: &PolicyProfile, agent: AgentId) -> f64 {
    let utilities = model.graph().utilities_of(agent);
    let mut total = 0.0;
    for (assignment, p) in joint_assignments(model, profile) {
        if p == 0.0 {
            continue;
        }
        for &u in &utilities {
            total += p * model.domain(u).real(assignment[u.0]).expect("real utility domain");
        }
    }
    total
}

/// Conditional expected utility by enumeration; `None` when the evidence has
/// probability zero.
pub fn conditional_expected_utility(
    model: &Maim,
    profile: &PolicyProfile,
    agent: AgentId,
    evidence: &[(NodeId, usize)],
) -> Option<f64> {
    let utilities = model.graph().utilities_of(agent);
    let mut mass = 0.0;
    let mut total = 0.0;
    for (assignment, p) in joint_assignments(model, profile) {
        if evidence.iter().any(|&(n, v)| assignment[n.0] != v) {
            continue;
        }
        mass += p;
        for &u in &utilities {
            total += p * model.domain(u).real(assignment[u.0]).expect("real utility domain");
        }
    }
    if mass <= 0.0 {
        None
    } else {
        Some(total / mass)
    }
}

/// Marginal of `targets` given `evidence` by enumeration, indexed
/// lexicographically over the targets' value tuples (targets in the given
/// order). `None` when the evidence has probability zero.
pub fn marginal(
    model: &Maim,
    profile: &PolicyProfile,
    targets: &[NodeId],
    evidence: &[(NodeId, usize)],
) -> Option<Vec<f64>> {
    let cards: Vec<usize> = targets.iter().map(|&t| model.domain_size(t)).collect();
    let mut probs = vec![0.0; cards.iter().product()];
    let mut mass = 0.0;
    for (assignment, p) in joint_assignments(model, profile) {
        if evidence.iter().any(|&(n, v)| assignment[n.0] != v) {
            continue;
        }
        mass += p;
        let mut idx = 0;
        for (k, &t) in targets.iter().enumerate() {
            idx = idx * cards[k] + assignment[t.0];
        }
        probs[idx] += p;
    }
    if mass <= 0.0 {
        return None;
    }
    for q in &mut probs {
        *q /= mass;
    }
    Some(probs)
}

/// d-separation decided by enumerating every simple undirected path and
/// applying the chain/fork/collider rules along it. Exponential, test-only.
pub fn d_separated_by_paths(
    graph: &MaidGraph,
    xs: &[NodeId],
    ys: &[NodeId],
    ws: &[NodeId],
) -> bool {
    let wset: BTreeSet<NodeId> = ws.iter().copied().collect();
    let n = graph.node_count();
    // neighbors with edge orientation relative to the walk
    let mut next: Vec<Vec<(NodeId, bool)>> = vec![Vec::new(); n]; // (other, walks_forward)
    for id in graph.node_ids() {
        for &c in graph.children(id) {
            next[id.0].push((c, true));
            next[c.0].push((id, false));
        }
    }
    let collider_open: Vec<bool> = graph
        .node_ids()
        .map(|id| {
            wset.contains(&id) || graph.descendants(id).iter().any(|d| wset.contains(d))
        })
        .collect();

    struct Walk<'a> {
        next: &'a [Vec<(NodeId, bool)>],
        wset: &'a BTreeSet<NodeId>,
        collider_open: &'a [bool],
        targets: &'a BTreeSet<NodeId>,
    }
    // `into_cur` is true when the previous edge points into `cur`.
    fn active_path(w: &Walk, cur: NodeId, into_cur: bool, visited: &mut Vec<NodeId>) -> bool {
        if w.targets.contains(&cur) {
            return true;
        }
        for &(step, forward) in &w.next[cur.0] {
            if visited.contains(&step) {
                continue;
            }
            // cur is interior here; check the triple (prev, cur, step).
            let open = if into_cur && !forward {
                // collider at cur
                w.collider_open[cur.0]
            } else {
                !w.wset.contains(&cur)
            };
            if !open {
                continue;
            }
            visited.push(step);
            if active_path(w, step, forward, visited) {
                return true;
            }
            visited.pop();
        }
        false
    }

    let targets: BTreeSet<NodeId> = ys.iter().copied().collect();
    for &x in xs {
        for &(step, forward) in &next[x.0] {
            let w = Walk { next: &next, wset: &wset, collider_open: &collider_open, targets: &targets };
            let mut visited = vec![x, step];
            if active_path(&w, step, forward, &mut visited) {
                return false;
            }
        }
    }
    true
}

/// Checks `Pr(x, y | w) = Pr(x | w) * Pr(y | w)` for all assignments, by
/// enumeration. Conditioning assignments with zero probability are skipped.
pub fn conditionally_independent(
    model: &Maim,
    profile: &PolicyProfile,
    x: NodeId,
    y: NodeId,
    ws: &[NodeId],
    tol: f64,
) -> bool {
    let mut joint: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for (assignment, p) in joint_assignments(model, profile) {
        let mut key: Vec<usize> = ws.iter().map(|&n| assignment[n.0]).collect();
        key.push(assignment[x.0]);
        key.push(assignment[y.0]);
        *joint.entry(key).or_insert(0.0) += p;
    }
    let card_x = model.domain_size(x);
    let card_y = model.domain_size(y);
    let w_cards: Vec<usize> = ws.iter().map(|&n| model.domain_size(n)).collect();
    let w_total: usize = w_cards.iter().product();
    for mut widx in 0..w_total {
        let mut wvals = vec![0; ws.len()];
        for i in (0..ws.len()).rev() {
            wvals[i] = widx % w_cards[i];
            widx /= w_cards[i];
        }
        let lookup = |xv: usize, yv: usize| {
            let mut key = wvals.clone();
            key.push(xv);
            key.push(yv);
            joint.get(&key).copied().unwrap_or(0.0)
        };
        let mass: f64 = (0..card_x)
            .flat_map(|xv| (0..card_y).map(move |yv| (xv, yv)))
            .map(|(xv, yv)| lookup(xv, yv))
            .sum();
        if mass <= 0.0 {
            continue;
        }
        for xv in 0..card_x {
            let px: f64 = (0..card_y).map(|yv| lookup(xv, yv)).sum::<f64>() / mass;
            for yv in 0..card_y {
                let py: f64 = (0..card_x).map(|xu| lookup(xu, yv)).sum::<f64>() / mass;
                let pxy = lookup(xv, yv) / mass;
                if (pxy - px * py).abs() > tol {
                    return false;
                }
            }
        }
    }
    true
}

/// Exhaustive pure Nash check: no agent has a pure full-policy deviation
/// improving its expected utility by more than `tol`. Deviations range over
/// complete choice vectors (all context rows).
pub fn is_pure_nash(model: &Maim, profile: &PureProfile, tol: f64) -> bool {
    let policy = profile.to_policy(model);
    for agent in 0..model.graph().agent_count() {
        let agent = AgentId(agent);
        let mine = model.graph().decisions_of(agent);
        if mine.is_empty() {
            continue;
        }
        let base = expected_utility(model, &policy, agent);
        for deviation in all_choice_vectors(model, &mine) {
            let dev_policy = policy.overridden_by(&deviation.to_policy(model));
            if expected_utility(model, &dev_policy, agent) > base + tol {
                return false;
            }
        }
    }
    true
}

/// Every pure choice assignment over all context rows of the given decisions.
pub fn all_choice_vectors(model: &Maim, decisions: &[NodeId]) -> Vec<PureProfile> {
    let mut slots = Vec::new();
    for &d in decisions {
        for row in 0..model.context_count(d) {
            slots.push((d, row));
        }
    }
    let cards: Vec<usize> = slots.iter().map(|&(d, _)| model.domain_size(d)).collect();
    let total: usize = cards.iter().product();
    let mut out = Vec::with_capacity(total);
    for mut idx in 0..total {
        let mut values = vec![0; slots.len()];
        for i in (0..slots.len()).rev() {
            values[i] = idx % cards[i];
            idx /= cards[i];
        }
        let mut profile = PureProfile::new();
        for &d in decisions {
            profile.set(d, vec![0; model.context_count(d)]);
        }
        for (k, &(d, row)) in slots.iter().enumerate() {
            profile.choices.get_mut(&d).unwrap()[row] = values[k];
        }
        out.push(profile);
    }
    out
}

/// r-reachability decided by grafting a fresh chance parent onto `node` and
/// running the path-enumeration d-separation check against the owner's
/// utility descendants of `decision`.
pub fn r_reachable_by_paths(graph: &MaidGraph, decision: NodeId, node: NodeId) -> bool {
    let owner = graph.kind(decision).owner().expect("decision node");
    let descendants = graph.descendants(decision);
    let targets: Vec<NodeId> = graph
        .utilities_of(owner)
        .into_iter()
        .filter(|u| descendants.contains(u))
        .collect();
    if targets.is_empty() {
        return false;
    }

    let mut names: BTreeSet<String> = graph.node_ids().map(|n| graph.name(n).to_string()).collect();
    let mut phantom_name = String::from("#phantom");
    while names.contains(&phantom_name) {
        phantom_name.push('#');
    }
    names.clear();
    let mut nodes: Vec<NodeDecl> = graph
        .node_ids()
        .map(|n| NodeDecl { name: graph.name(n).to_string(), kind: graph.kind(n) })
        .collect();
    nodes.push(NodeDecl::chance(&phantom_name));
    let phantom = NodeId(graph.node_count());
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    for id in graph.node_ids() {
        for &c in graph.children(id) {
            edges.push((id, c));
        }
    }
    edges.push((phantom, node));
    let agents: Vec<String> = (0..graph.agent_count()).map(|a| graph.agent_name(AgentId(a)).to_string()).collect();
    let augmented = MaidGraph::new(agents, nodes, &edges).expect("augmented graph is valid");

    let family: Vec<NodeId> = graph.family(decision).into_iter().collect();
    !d_separated_by_paths(&augmented, &[phantom], &targets, &family)
}

/// Checks both subgame-base closure conditions by exhaustive scans: every
/// directed path between members stays inside, and every node r-reachable
/// from a member decision is a member.
pub fn is_valid_base(graph: &MaidGraph, nodes: &[NodeId]) -> bool {
    let base: BTreeSet<NodeId> = nodes.iter().copied().collect();
    // Directed-path closure via DFS enumerating all paths between members.
    fn walk(
        graph: &MaidGraph,
        base: &BTreeSet<NodeId>,
        target: NodeId,
        cur: NodeId,
        inside: bool,
    ) -> bool {
        // `inside` is false when some interior node so far left the base.
        for &c in graph.children(cur) {
            if c == target {
                if !inside {
                    return false;
                }
            } else if !walk(graph, base, target, c, inside && base.contains(&c)) {
                return false;
            }
        }
        true
    }
    for &x in &base {
        for &y in &base {
            if x != y && !walk(graph, &base, y, x, true) {
                return false;
            }
        }
    }
    for &d in &base {
        if !graph.kind(d).is_decision() {
            continue;
        }
        for z in graph.node_ids() {
            if z != d && !base.contains(&z) && r_reachable_by_paths(graph, d, z) {
                return false;
            }
        }
    }
    true
}

/// Expected utility in a game tree by explicit path enumeration: walk every
/// root-to-leaf path multiplying branch probabilities and strategy rows.
pub fn efg_expected_utility_by_paths(
    game: &maid_core::efg::Efg,
    sigma: &maid_core::efg::EfgStrategyProfile,
    agent: AgentId,
) -> f64 {
    use maid_core::efg::{EfgNodeId, EfgNodeKind};
    fn walk(
        game: &maid_core::efg::Efg,
        sigma: &maid_core::efg::EfgStrategyProfile,
        agent: AgentId,
        node: EfgNodeId,
        p: f64,
    ) -> f64 {
        match &game.nodes[node.0].kind {
            EfgNodeKind::Terminal { payoffs } => p * payoffs[agent.0],
            EfgNodeKind::Chance { probs, children, .. } => probs
                .iter()
                .zip(children)
                .map(|(&q, &c)| walk(game, sigma, agent, c, p * q))
                .sum(),
            EfgNodeKind::Personal { iset, children } => {
                let row = &sigma.rows[iset];
                row.iter()
                    .zip(children)
                    .map(|(&q, &c)| walk(game, sigma, agent, c, p * q))
                    .sum()
            }
        }
    }
    walk(game, sigma, agent, maid_core::efg::EfgNodeId(0), 1.0)
}

/// Every pure behavioural strategy profile: one action index per
/// information set, in information-set order.
pub fn efg_all_pure_choices(game: &maid_core::efg::Efg) -> Vec<Vec<usize>> {
    let cards: Vec<usize> = game.isets.iter().map(|s| s.actions.len()).collect();
    let total: usize = cards.iter().product();
    let mut out = Vec::with_capacity(total);
    for mut idx in 0..total {
        let mut choices = vec![0; cards.len()];
        for i in (0..cards.len()).rev() {
            choices[i] = idx % cards[i];
            idx /= cards[i];
        }
        out.push(choices);
    }
    out
}

/// Exhaustive pure Nash check on a game tree: no agent improves by more
/// than `tol` with any joint redeviation of its own information sets.
pub fn efg_is_pure_nash(game: &maid_core::efg::Efg, choices: &[usize], tol: f64) -> bool {
    use maid_core::efg::EfgStrategyProfile;
    let sigma = EfgStrategyProfile::pure(game, choices);
    for agent in 0..game.agents.len() {
        let agent_id = AgentId(agent);
        let mine: Vec<usize> =
            (0..game.isets.len()).filter(|&j| game.isets[j].owner == agent_id).collect();
        if mine.is_empty() {
            continue;
        }
        let base = efg_expected_utility_by_paths(game, &sigma, agent_id);
        let cards: Vec<usize> = mine.iter().map(|&j| game.isets[j].actions.len()).collect();
        let total: usize = cards.iter().product();
        for mut idx in 0..total {
            let mut alt = choices.to_vec();
            for i in (0..mine.len()).rev() {
                alt[mine[i]] = idx % cards[i];
                idx /= cards[i];
            }
            let dev = EfgStrategyProfile::pure(game, &alt);
            if efg_expected_utility_by_paths(game, &dev, agent_id) > base + tol {
                return false;
            }
        }
    }
    true
}

/// Proper subgames of a game tree: internal non-root nodes whose subtree is
/// closed under information sets.
pub fn efg_proper_subgames(game: &maid_core::efg::Efg) -> Vec<maid_core::efg::EfgNodeId> {
    use maid_core::efg::{EfgNodeId, EfgNodeKind};
    let mut out = Vec::new();
    for id in game.prefix_order() {
        if id.0 == 0 || matches!(game.nodes[id.0].kind, EfgNodeKind::Terminal { .. }) {
            continue;
        }
        let mut subtree: BTreeSet<EfgNodeId> = BTreeSet::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            subtree.insert(n);
            stack.extend(game.children(n).iter().copied());
        }
        let closed = game.isets.iter().all(|set| {
            let inside = set.members.iter().filter(|m| subtree.contains(m)).count();
            inside == 0 || inside == set.members.len()
        });
        if closed {
            out.push(id);
        }
    }
    out
}
