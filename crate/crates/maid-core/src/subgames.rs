//! Subgame bases, MAID subgames, and their instantiated MAIM subgames.
//!
//! A subgame base is a node set closed under directed paths between members
//! and under r-reachability from member decisions. Bases are enumerated
//! through descendant-closed subsets of the condensed relevance graph: each
//! subset's decisions are closed to a minimal core, then extended by subsets
//! of the core's non-decision ancestors that keep the closure properties.
//! The full node set is always a base.
//!
//! A MAID subgame re-types the base: decisions keep their kind, utility
//! nodes stay utilities only when they descend from a member decision
//! (non-descendant utilities are demoted to chance and reported), and
//! everything else is chance. A MAIM subgame additionally fixes an
//! assignment to the material boundary (outside nodes with a child in the
//! base) and row-slices every CPD on that assignment. Rows are copied
//! verbatim, never renormalized.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::infer::{self, InferError};
use crate::model::{AgentId, Cpd, MaidGraph, Maim, ModelError, NodeDecl, NodeId, NodeKind};
use crate::policy::{induce, DecisionRule, PolicyProfile, PureProfile};
use crate::radix;
use crate::relevance::{condensed_relevance_graph, r_reachable, RelevanceError};

#[derive(Clone, PartialEq, Debug)]
pub enum SubgameError {
    /// A node set violating one of the two base closure conditions; the
    /// message names the condition and a witness.
    BadBase(String),
    Relevance(RelevanceError),
    Model(ModelError),
    Infer(InferError),
}

impl core::fmt::Display for SubgameError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SubgameError::BadBase(m) => write!(f, "bad subgame base: {m}"),
            SubgameError::Relevance(e) => write!(f, "{e}"),
            SubgameError::Model(e) => write!(f, "{e}"),
            SubgameError::Infer(e) => write!(f, "{e}"),
        }
    }
}

impl From<RelevanceError> for SubgameError {
    fn from(e: RelevanceError) -> Self {
        SubgameError::Relevance(e)
    }
}

impl From<ModelError> for SubgameError {
    fn from(e: ModelError) -> Self {
        SubgameError::Model(e)
    }
}

impl From<InferError> for SubgameError {
    fn from(e: InferError) -> Self {
        SubgameError::Infer(e)
    }
}

/// A subgame base: a sorted node set of the parent MAID satisfying both
/// closure conditions.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct SubgameBase {
    pub nodes: Vec<NodeId>,
}

impl SubgameBase {
    pub fn contains(&self, n: NodeId) -> bool {
        self.nodes.binary_search(&n).is_ok()
    }

    /// True when the base is a strict subset of the parent node set.
    pub fn is_proper(&self, graph: &MaidGraph) -> bool {
        self.nodes.len() < graph.node_count()
    }

    pub fn decisions(&self, graph: &MaidGraph) -> Vec<NodeId> {
        self.nodes.iter().copied().filter(|&n| graph.kind(n).is_decision()).collect()
    }
}

/// Checks both closure conditions for `nodes`, reporting a witness on
/// failure.
fn check_base(graph: &MaidGraph, nodes: &BTreeSet<NodeId>) -> Result<(), SubgameError> {
    for &x in nodes {
        let below = graph.descendants(x);
        for &y in nodes {
            if x == y || !below.contains(&y) {
                continue;
            }
            let above = graph.ancestors(y);
            for z in below.intersection(&above) {
                if !nodes.contains(z) {
                    return Err(SubgameError::BadBase(format!(
                        "not closed under directed paths: {:?} lies on a path {:?} -> {:?}",
                        graph.name(*z),
                        graph.name(x),
                        graph.name(y)
                    )));
                }
            }
        }
    }
    for &d in nodes {
        if !graph.kind(d).is_decision() {
            continue;
        }
        for z in graph.node_ids() {
            if z != d && !nodes.contains(&z) && r_reachable(graph, d, z)? {
                return Err(SubgameError::BadBase(format!(
                    "not closed under r-reachability: {:?} is r-reachable from {:?}",
                    graph.name(z),
                    graph.name(d)
                )));
            }
        }
    }
    Ok(())
}

/// The least node set containing `seed` that is closed under directed paths
/// between members and under r-reachability from member decisions. This is
/// the unique minimal base containing `seed`'s decisions when `seed` is a
/// decision set.
pub fn closure(graph: &MaidGraph, seed: &[NodeId]) -> Result<BTreeSet<NodeId>, SubgameError> {
    let mut set: BTreeSet<NodeId> = seed.iter().copied().collect();
    loop {
        let mut added: Vec<NodeId> = Vec::new();
        for &d in &set {
            if !graph.kind(d).is_decision() {
                continue;
            }
            for z in graph.node_ids() {
                if z != d && !set.contains(&z) && r_reachable(graph, d, z)? {
                    added.push(z);
                }
            }
        }
        for &x in &set {
            let below = graph.descendants(x);
            for &y in &set {
                if x == y || !below.contains(&y) {
                    continue;
                }
                let above = graph.ancestors(y);
                for z in below.intersection(&above) {
                    if !set.contains(z) {
                        added.push(*z);
                    }
                }
            }
        }
        if added.is_empty() {
            return Ok(set);
        }
        set.extend(added);
    }
}

/// Enumerates all subgame bases induced by descendant-closed subsets of the
/// condensed relevance graph, ordered by size then node ids. Each subset's
/// decision core is closed, then every extension by non-decision ancestors
/// that keeps both closure conditions (and the decision set) is kept. The
/// full node set is always included and always last.
pub fn subgame_bases(graph: &MaidGraph) -> Result<Vec<SubgameBase>, SubgameError> {
    let con = condensed_relevance_graph(graph)?;
    let m = con.components.len();
    let mut found: BTreeSet<Vec<NodeId>> = BTreeSet::new();

    for mask in 1usize..(1 << m) {
        let has = |c: usize| mask & (1 << c) != 0;
        // Descendant-closed: keep every component the subset relies on.
        if !con.edges.iter().all(|&(a, b)| !has(a) || has(b)) {
            continue;
        }
        let mut seed: Vec<NodeId> = Vec::new();
        for (c, members) in con.components.iter().enumerate() {
            if has(c) {
                seed.extend_from_slice(members);
            }
        }
        let core = closure(graph, &seed)?;
        let core_decisions: BTreeSet<NodeId> =
            core.iter().copied().filter(|&n| graph.kind(n).is_decision()).collect();

        // Non-decision ancestors of the core, candidates for extension.
        let mut candidates: BTreeSet<NodeId> = BTreeSet::new();
        for &n in &core {
            for a in graph.ancestors(n) {
                if !core.contains(&a) && !graph.kind(a).is_decision() {
                    candidates.insert(a);
                }
            }
        }
        let candidates: Vec<NodeId> = candidates.into_iter().collect();
        for amask in 0usize..(1 << candidates.len()) {
            let mut nodes = core.clone();
            for (i, &c) in candidates.iter().enumerate() {
                if amask & (1 << i) != 0 {
                    nodes.insert(c);
                }
            }
            let decisions: BTreeSet<NodeId> =
                nodes.iter().copied().filter(|&n| graph.kind(n).is_decision()).collect();
            if decisions == core_decisions && check_base(graph, &nodes).is_ok() {
                found.insert(nodes.into_iter().collect());
            }
        }
    }

    found.insert(graph.node_ids().collect());
    let mut bases: Vec<SubgameBase> =
        found.into_iter().map(|nodes| SubgameBase { nodes }).collect();
    bases.sort_by(|a, b| (a.nodes.len(), &a.nodes).cmp(&(b.nodes.len(), &b.nodes)));
    Ok(bases)
}

/// Picks, for each distinct decision set, the base with the fewest nodes
/// (ties by node ids). Input order is preserved.
pub fn minimal_for_decisions(graph: &MaidGraph, bases: &[SubgameBase]) -> Vec<SubgameBase> {
    let mut sorted: Vec<&SubgameBase> = bases.iter().collect();
    sorted.sort_by_key(|b| (b.nodes.len(), b.nodes.clone()));
    let mut seen: BTreeSet<Vec<NodeId>> = BTreeSet::new();
    let mut keep: BTreeSet<Vec<NodeId>> = BTreeSet::new();
    for b in sorted {
        if seen.insert(b.decisions(graph)) {
            keep.insert(b.nodes.clone());
        }
    }
    bases.iter().filter(|b| keep.contains(&b.nodes)).cloned().collect()
}

/// A MAID subgame: the base re-typed per the subgame definition. The graph
/// is over renumbered nodes; `node_map` maps each subgame node back to its
/// parent node. The agent list is carried over unchanged so agent ids agree
/// with the parent model; `players` holds the agents that actually own a
/// decision in the base.
#[derive(Clone, PartialEq, Debug)]
pub struct MaidSubgame {
    pub base: SubgameBase,
    pub graph: MaidGraph,
    pub node_map: Vec<NodeId>,
    pub players: Vec<AgentId>,
    /// Utility nodes of the parent that are not descendants of any member
    /// decision; they appear as chance nodes in the subgame graph.
    pub demoted: Vec<NodeId>,
}

impl MaidSubgame {
    /// The parent node behind subgame node `sub`.
    pub fn parent_node(&self, sub: NodeId) -> NodeId {
        self.node_map[sub.0]
    }

    /// The subgame node for parent node `parent`, if it is in the base.
    pub fn sub_node(&self, parent: NodeId) -> Option<NodeId> {
        self.node_map.binary_search(&parent).ok().map(NodeId)
    }
}

/// Builds the MAID subgame for `base`, validating both closure conditions.
pub fn maid_subgame(graph: &MaidGraph, base: &SubgameBase) -> Result<MaidSubgame, SubgameError> {
    let set: BTreeSet<NodeId> = base.nodes.iter().copied().collect();
    if set.len() != base.nodes.len() {
        return Err(SubgameError::BadBase("duplicate node in base".to_string()));
    }
    if let Some(&n) = base.nodes.iter().find(|n| n.0 >= graph.node_count()) {
        return Err(SubgameError::BadBase(format!("unknown node #{}", n.0)));
    }
    check_base(graph, &set)?;

    let node_map: Vec<NodeId> = set.iter().copied().collect();
    let decisions: Vec<NodeId> =
        node_map.iter().copied().filter(|&n| graph.kind(n).is_decision()).collect();
    let mut decision_descendants: BTreeSet<NodeId> = BTreeSet::new();
    for &d in &decisions {
        decision_descendants.extend(graph.descendants(d));
    }

    let mut players: Vec<AgentId> = decisions.iter().map(|&d| graph.kind(d).owner().unwrap()).collect();
    players.sort_unstable();
    players.dedup();

    let mut demoted = Vec::new();
    let nodes: Vec<NodeDecl> = node_map
        .iter()
        .map(|&n| {
            let name = graph.name(n).to_string();
            let kind = match graph.kind(n) {
                NodeKind::Decision(a) => NodeKind::Decision(a),
                NodeKind::Utility(a) if decision_descendants.contains(&n) => {
                    NodeKind::Utility(a)
                }
                NodeKind::Utility(_) => {
                    demoted.push(n);
                    NodeKind::Chance
                }
                NodeKind::Chance => NodeKind::Chance,
            };
            NodeDecl { name, kind }
        })
        .collect();

    let index_of = |p: NodeId| NodeId(node_map.binary_search(&p).unwrap());
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    for &n in &node_map {
        for &c in graph.children(n) {
            if set.contains(&c) {
                edges.push((index_of(n), index_of(c)));
            }
        }
    }
    let agents: Vec<String> = graph.agent_names().to_vec();
    let subgraph = MaidGraph::new(agents, nodes, &edges)?;
    Ok(MaidSubgame { base: base.clone(), graph: subgraph, node_map, players, demoted })
}

/// A MAIM subgame: a MAID subgame with the material boundary fixed to one
/// assignment and every CPD row-sliced on it.
#[derive(Clone, PartialEq, Debug)]
pub struct MaimSubgame {
    pub subgame: MaidSubgame,
    /// Material boundary nodes (parent ids, ascending) with their fixed
    /// value indices. Empty for the full base.
    pub boundary: Vec<(NodeId, usize)>,
    pub model: Maim,
}

impl MaimSubgame {
    /// Human-readable boundary rendering, e.g. `D1=e`.
    pub fn boundary_label(&self, parent: &Maim) -> String {
        let parts: Vec<String> = self
            .boundary
            .iter()
            .map(|&(n, v)| {
                format!("{}={}", parent.graph().name(n), parent.domain(n).label(v))
            })
            .collect();
        parts.join(", ")
    }

    /// The parent CPD or rule row behind subgame context row `sub_row` of
    /// the subgame node for `parent_id`. Outside parents read from the
    /// boundary.
    pub fn parent_row(&self, parent: &Maim, parent_id: NodeId, sub_row: usize) -> usize {
        let sub_id = self.subgame.sub_node(parent_id).expect("node is in the base");
        let inside = self.model.context_assignment(sub_id, sub_row);
        let mut assignment: BTreeMap<NodeId, usize> = inside
            .into_iter()
            .map(|(p, v)| (self.subgame.parent_node(p), v))
            .collect();
        for &(n, v) in &self.boundary {
            assignment.entry(n).or_insert(v);
        }
        parent.context_row(parent_id, &assignment)
    }

    /// Restricts a parent-model policy profile to the subgame's decisions,
    /// slicing each rule on the boundary.
    pub fn restrict_profile(&self, parent: &Maim, profile: &PolicyProfile) -> PolicyProfile {
        let mut out = PolicyProfile::new();
        for sub_d in self.model.graph().decisions() {
            let parent_d = self.subgame.parent_node(sub_d);
            let Some(rule) = profile.rules.get(&parent_d) else { continue };
            let rows = (0..self.model.context_count(sub_d))
                .map(|r| rule.rows[self.parent_row(parent, parent_d, r)].clone())
                .collect();
            out.set(sub_d, DecisionRule { rows });
        }
        out
    }

    /// Restricts a parent-model pure profile likewise.
    pub fn restrict_pure(&self, parent: &Maim, pure: &PureProfile) -> PureProfile {
        let mut out = PureProfile::new();
        for sub_d in self.model.graph().decisions() {
            let parent_d = self.subgame.parent_node(sub_d);
            let Some(choices) = pure.choices.get(&parent_d) else { continue };
            let picked = (0..self.model.context_count(sub_d))
                .map(|r| choices[self.parent_row(parent, parent_d, r)])
                .collect();
            out.set(sub_d, picked);
        }
        out
    }
}

/// Instantiates every MAIM subgame of `sub`: one per joint assignment of the
/// material boundary, in lexicographic order (last node fastest). A subgame
/// over the full base yields exactly one instance with an empty boundary.
pub fn maim_subgames(model: &Maim, sub: &MaidSubgame) -> Result<Vec<MaimSubgame>, SubgameError> {
    let graph = model.graph();
    let in_base = |n: NodeId| sub.sub_node(n).is_some();
    let material: Vec<NodeId> = graph
        .node_ids()
        .filter(|&n| !in_base(n) && graph.children(n).iter().any(|&c| in_base(c)))
        .collect();
    let cards: Vec<usize> = material.iter().map(|&n| model.domain_size(n)).collect();

    let sub_domains: Vec<_> =
        sub.node_map.iter().map(|&n| model.domain(n).clone()).collect();

    let mut out = Vec::new();
    for row in 0..radix::count(&cards) {
        let values = radix::unpack(&cards, row);
        let boundary: Vec<(NodeId, usize)> =
            material.iter().copied().zip(values).collect();
        let bmap: BTreeMap<NodeId, usize> = boundary.iter().copied().collect();

        let mut cpds: BTreeMap<NodeId, Cpd> = BTreeMap::new();
        for sub_id in sub.graph.node_ids() {
            if sub.graph.kind(sub_id).is_decision() {
                continue;
            }
            let parent_id = sub.parent_node(sub_id);
            let parent_cpd = model.cpd(parent_id).expect("non-decision has a cpd");
            let sub_parents = sub.graph.parents(sub_id);
            let sub_cards: Vec<usize> =
                sub_parents.iter().map(|&p| sub_domains[p.0].size()).collect();
            let mut rows = Vec::with_capacity(radix::count(&sub_cards));
            for r in 0..radix::count(&sub_cards) {
                let inside = radix::unpack(&sub_cards, r);
                let mut assignment = bmap.clone();
                for (&p, v) in sub_parents.iter().zip(inside) {
                    assignment.insert(sub.parent_node(p), v);
                }
                rows.push(parent_cpd.rows[model.context_row(parent_id, &assignment)].clone());
            }
            cpds.insert(sub_id, Cpd::new(rows));
        }
        let sub_model = Maim::new(sub.graph.clone(), sub_domains.clone(), cpds)?;
        out.push(MaimSubgame { subgame: sub.clone(), boundary, model: sub_model });
    }
    Ok(out)
}

/// Feasibility: the boundary assignment has positive probability in the
/// parent model under some profile, tested with the uniform one (positive
/// there exactly when positive somewhere). An empty boundary is feasible.
pub fn is_feasible_subgame(model: &Maim, msub: &MaimSubgame) -> Result<bool, SubgameError> {
    if msub.boundary.is_empty() {
        return Ok(true);
    }
    let joint = induce(model, &PolicyProfile::uniform(model))?;
    let targets: Vec<NodeId> = msub.boundary.iter().map(|&(n, _)| n).collect();
    let values: Vec<usize> = msub.boundary.iter().map(|&(_, v)| v).collect();
    match infer::marginal(&joint, &targets, &[])? {
        infer::Marginal::Table(t) => Ok(t.prob(&values) > 0.0),
        infer::Marginal::Unconditioned => Ok(false),
    }
}
