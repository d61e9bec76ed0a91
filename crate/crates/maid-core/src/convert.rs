//! Conversions between parametrized models and extensive-form games.
//!
//! `maim_to_efg` splits a model over a topological order of its decision and
//! (depending on the mode) chance nodes, pruning zero-probability branches.
//! `efg_to_maim` runs the reverse construction: tree nodes are grouped into
//! intervention sets, each set becomes one variable, information sets become
//! decision contexts, leaves split into per-agent utility variables, and
//! contexts that match no path through the tree are padded with a null value
//! (chance) or zero (utility). Both directions record the natural mapping
//! between information sets and decision contexts, which `check_equivalence`
//! uses to compare expected utilities across representations.
//!
//! Games with absentmindedness go through `absentminded_transform` instead:
//! each revisited information set keeps one decision variable carrying the
//! behavioural rule while its decision instances become chance variables
//! that copy the rule.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::efg::{
    check_intervention_sets, efg_expected_utility, Efg, EfgError, EfgNode, EfgNodeId, EfgNodeKind,
    EfgStrategyProfile, InfoSet, InterventionSet,
};
use crate::infer::{self, expected_utility, expected_utility_in, InferError, Marginal};
use crate::model::{AgentId, Cpd, Domain, MaidGraph, Maim, ModelError, NodeDecl, NodeId};
use crate::policy::{induce, DecisionRule, PolicyProfile};
use crate::TOL;

#[derive(Clone, PartialEq, Debug)]
pub enum ConvertError {
    Model(ModelError),
    Infer(InferError),
    Efg(EfgError),
    Unsupported(String),
}

impl core::fmt::Display for ConvertError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ConvertError::Model(e) => write!(f, "{e}"),
            ConvertError::Infer(e) => write!(f, "{e}"),
            ConvertError::Efg(e) => write!(f, "{e}"),
            ConvertError::Unsupported(m) => write!(f, "unsupported: {m}"),
        }
    }
}

impl From<ModelError> for ConvertError {
    fn from(e: ModelError) -> Self {
        ConvertError::Model(e)
    }
}

impl From<InferError> for ConvertError {
    fn from(e: InferError) -> Self {
        ConvertError::Infer(e)
    }
}

impl From<EfgError> for ConvertError {
    fn from(e: EfgError) -> Self {
        ConvertError::Efg(e)
    }
}

/// Which model nodes become tree levels.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SplitMode {
    /// Split on every chance and decision node; the tree preserves the
    /// model's full structure.
    Full,
    /// Split only on decisions and their parents; other chance nodes are
    /// marginalized into branch probabilities and leaf payoffs.
    Minimal,
}

/// One correspondence between a decision context and an information set.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct MapEntry {
    pub decision: NodeId,
    pub row: usize,
    pub iset: usize,
}

/// The natural mapping between a model and a game produced by conversion:
/// information sets pair with the non-null decision contexts.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct NaturalMap {
    pub entries: Vec<MapEntry>,
}

impl NaturalMap {
    pub fn iset_for(&self, decision: NodeId, row: usize) -> Option<usize> {
        self.entries
            .iter()
            .find(|e| e.decision == decision && e.row == row)
            .map(|e| e.iset)
    }

    pub fn context_for(&self, iset: usize) -> Option<(NodeId, usize)> {
        self.entries.iter().find(|e| e.iset == iset).map(|e| (e.decision, e.row))
    }

    /// The policy profile realizing a behavioural strategy profile: mapped
    /// contexts copy the strategy row, unmapped (null) contexts get uniform
    /// rules.
    pub fn policy_of(
        &self,
        model: &Maim,
        sigma: &EfgStrategyProfile,
    ) -> Result<PolicyProfile, ConvertError> {
        let mut out = PolicyProfile::new();
        for d in model.graph().decisions() {
            let mut rule = DecisionRule::uniform(model, d);
            for row in 0..model.context_count(d) {
                if let Some(j) = self.iset_for(d, row) {
                    let Some(s) = sigma.rows.get(&j) else {
                        return Err(ConvertError::Unsupported(format!(
                            "strategy misses information set {j}"
                        )));
                    };
                    if s.len() != model.domain_size(d) {
                        return Err(ConvertError::Unsupported(format!(
                            "information set {j} row width differs from the decision domain"
                        )));
                    }
                    rule.rows[row] = s.clone();
                }
            }
            out.set(d, rule);
        }
        Ok(out)
    }

    /// The behavioural strategy realizing a policy profile on the mapped
    /// contexts.
    pub fn sigma_of(&self, profile: &PolicyProfile) -> Result<EfgStrategyProfile, ConvertError> {
        let mut out = EfgStrategyProfile::new();
        for e in &self.entries {
            let Some(rule) = profile.rules.get(&e.decision) else {
                return Err(ConvertError::Unsupported(format!(
                    "profile misses decision #{}",
                    e.decision.0
                )));
            };
            out.set(e.iset, rule.rows[e.row].clone());
        }
        Ok(out)
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct EfgConversion {
    pub game: Efg,
    pub map: NaturalMap,
}

#[derive(Clone, PartialEq, Debug)]
pub struct MaimConversion {
    pub model: Maim,
    pub map: NaturalMap,
}

/// The splitting set for a mode, ascending.
pub fn split_set(model: &Maim, mode: SplitMode) -> Vec<NodeId> {
    let graph = model.graph();
    let mut set = BTreeSet::new();
    for d in graph.decisions() {
        set.insert(d);
        if mode == SplitMode::Minimal {
            for &p in graph.parents(d) {
                set.insert(p);
            }
        }
    }
    if mode == SplitMode::Full {
        for id in graph.node_ids() {
            if !graph.kind(id).is_utility() {
                set.insert(id);
            }
        }
    }
    set.into_iter().collect()
}

/// Topological orders of the splitting set in lexicographic sequence, at
/// most `limit` of them. The first is the canonical order used by
/// `maim_to_efg`.
pub fn split_orders(model: &Maim, mode: SplitMode, limit: usize) -> Vec<Vec<NodeId>> {
    let graph = model.graph();
    let set = split_set(model, mode);
    let desc: BTreeMap<NodeId, BTreeSet<NodeId>> = set
        .iter()
        .map(|&s| (s, graph.descendants(s).into_iter().filter(|d| set.contains(d)).collect()))
        .collect();
    let mut orders = Vec::new();
    let mut prefix = Vec::new();
    let mut remaining: BTreeSet<NodeId> = set.iter().copied().collect();
    fn grow(
        desc: &BTreeMap<NodeId, BTreeSet<NodeId>>,
        prefix: &mut Vec<NodeId>,
        remaining: &mut BTreeSet<NodeId>,
        orders: &mut Vec<Vec<NodeId>>,
        limit: usize,
    ) {
        if orders.len() >= limit {
            return;
        }
        if remaining.is_empty() {
            orders.push(prefix.clone());
            return;
        }
        let ready: Vec<NodeId> = remaining
            .iter()
            .copied()
            .filter(|&c| remaining.iter().all(|&s| s == c || !desc[&s].contains(&c)))
            .collect();
        for c in ready {
            remaining.remove(&c);
            prefix.push(c);
            grow(desc, prefix, remaining, orders, limit);
            prefix.pop();
            remaining.insert(c);
        }
    }
    grow(&desc, &mut prefix, &mut remaining, &mut orders, limit);
    orders
}

/// Converts a model to a game over the canonical (lexicographically
/// smallest) topological order of the splitting set.
pub fn maim_to_efg(model: &Maim, title: &str, mode: SplitMode) -> Result<EfgConversion, ConvertError> {
    let order = split_orders(model, mode, 1)
        .into_iter()
        .next()
        .unwrap_or_default();
    maim_to_efg_with_order(model, title, mode, &order)
}

/// Converts over every topological order (up to `limit`).
pub fn maim_to_efg_all(
    model: &Maim,
    title: &str,
    mode: SplitMode,
    limit: usize,
) -> Result<Vec<EfgConversion>, ConvertError> {
    split_orders(model, mode, limit)
        .iter()
        .map(|o| maim_to_efg_with_order(model, title, mode, o))
        .collect()
}

pub fn maim_to_efg_with_order(
    model: &Maim,
    title: &str,
    mode: SplitMode,
    order: &[NodeId],
) -> Result<EfgConversion, ConvertError> {
    let graph = model.graph();
    let set = split_set(model, mode);
    if order.len() != set.len() || !order.iter().all(|s| set.contains(s)) {
        return Err(ConvertError::Unsupported(
            "the order must cover the splitting set exactly".into(),
        ));
    }
    for i in 0..order.len() {
        let below = graph.descendants(order[i]);
        if order[..i].iter().any(|e| below.contains(e)) {
            return Err(ConvertError::Unsupported("the order is not topological".into()));
        }
    }
    let joint = induce(model, &PolicyProfile::uniform(model))?;

    struct Build<'a> {
        model: &'a Maim,
        mode: SplitMode,
        order: &'a [NodeId],
        joint: crate::policy::JointDistribution,
        nodes: Vec<EfgNode>,
        isets: Vec<InfoSet>,
        iset_of: BTreeMap<(NodeId, usize), usize>,
        map: NaturalMap,
    }

    impl Build<'_> {
        fn grow(
            &mut self,
            depth: usize,
            parent: Option<EfgNodeId>,
            assignment: &mut Vec<(NodeId, usize)>,
        ) -> Result<EfgNodeId, ConvertError> {
            let id = EfgNodeId(self.nodes.len());
            if depth == self.order.len() {
                let mut payoffs = Vec::with_capacity(self.model.graph().agent_count());
                for a in 0..self.model.graph().agent_count() {
                    payoffs.push(self.leaf_payoff(AgentId(a), assignment)?);
                }
                self.nodes.push(EfgNode {
                    label: String::new(),
                    parent,
                    kind: EfgNodeKind::Terminal { payoffs },
                });
                return Ok(id);
            }
            let var = self.order[depth];
            let graph = self.model.graph();
            let dom = self.model.domain(var);
            if graph.kind(var).is_decision() {
                let lookup: BTreeMap<NodeId, usize> = assignment.iter().copied().collect();
                let row = self.model.context_row(var, &lookup);
                let iset = match self.iset_of.get(&(var, row)) {
                    Some(&j) => j,
                    None => {
                        let j = self.isets.len();
                        let label = if graph.parents(var).is_empty() {
                            graph.name(var).into()
                        } else {
                            format!("{} | {}", graph.name(var), self.model.context_label(var, row))
                        };
                        self.isets.push(InfoSet {
                            owner: graph.kind(var).owner().expect("decisions have owners"),
                            label,
                            actions: (0..dom.size()).map(|v| dom.label(v)).collect(),
                            members: Vec::new(),
                        });
                        self.iset_of.insert((var, row), j);
                        self.map.entries.push(MapEntry { decision: var, row, iset: j });
                        j
                    }
                };
                self.nodes.push(EfgNode {
                    label: graph.name(var).into(),
                    parent,
                    kind: EfgNodeKind::Personal { iset, children: Vec::new() },
                });
                self.isets[iset].members.push(id);
                let mut children = Vec::with_capacity(dom.size());
                for v in 0..self.model.domain_size(var) {
                    assignment.push((var, v));
                    children.push(self.grow(depth + 1, Some(id), assignment)?);
                    assignment.pop();
                }
                if let EfgNodeKind::Personal { children: slot, .. } = &mut self.nodes[id.0].kind {
                    *slot = children;
                }
            } else {
                let probs_all: Vec<f64> = match self.mode {
                    SplitMode::Full => {
                        let lookup: BTreeMap<NodeId, usize> = assignment.iter().copied().collect();
                        let cpd = self.model.cpd(var).expect("chance nodes have tables");
                        cpd.rows[self.model.context_row(var, &lookup)].clone()
                    }
                    SplitMode::Minimal => {
                        let table = match infer::marginal(&self.joint, &[var], assignment)? {
                            Marginal::Table(t) => t,
                            Marginal::Unconditioned => {
                                return Err(ConvertError::Unsupported(
                                    "reached a zero-probability branch".into(),
                                ))
                            }
                        };
                        (0..self.model.domain_size(var)).map(|v| table.prob(&[v])).collect()
                    }
                };
                self.nodes.push(EfgNode {
                    label: graph.name(var).into(),
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
                for (v, &p) in probs_all.iter().enumerate() {
                    if p == 0.0 {
                        continue;
                    }
                    actions.push(dom.label(v));
                    probs.push(p);
                    assignment.push((var, v));
                    children.push(self.grow(depth + 1, Some(id), assignment)?);
                    assignment.pop();
                }
                self.nodes[id.0].kind = EfgNodeKind::Chance { actions, probs, children };
            }
            Ok(id)
        }

        fn leaf_payoff(
            &self,
            agent: AgentId,
            assignment: &[(NodeId, usize)],
        ) -> Result<f64, ConvertError> {
            match self.mode {
                SplitMode::Full => {
                    let lookup: BTreeMap<NodeId, usize> = assignment.iter().copied().collect();
                    let mut total = 0.0;
                    for u in self.model.graph().utilities_of(agent) {
                        total += self.model.utility_value(u, self.model.context_row(u, &lookup));
                    }
                    Ok(total)
                }
                SplitMode::Minimal => Ok(expected_utility_in(&self.joint, agent, assignment)?),
            }
        }
    }

    let mut b = Build {
        model,
        mode,
        order,
        joint,
        nodes: Vec::new(),
        isets: Vec::new(),
        iset_of: BTreeMap::new(),
        map: NaturalMap::default(),
    };
    let mut assignment = Vec::new();
    b.grow(0, None, &mut assignment)?;
    let game = Efg {
        title: title.into(),
        agents: graph.agent_names().to_vec(),
        nodes: b.nodes,
        isets: b.isets,
        interventions: Vec::new(),
    };
    game.validate()?;
    Ok(EfgConversion { game, map: b.map })
}

/// Converts a game (without absentmindedness) to its unique equivalent
/// model under the game's intervention partition.
pub fn efg_to_maim(game: &Efg) -> Result<MaimConversion, ConvertError> {
    game.validate()?;
    if game.is_absentminded() {
        return Err(ConvertError::Efg(EfgError::Absentminded));
    }
    check_intervention_sets(game)?;
    let (model, map, _) = build_from_tree(game, false)?;
    Ok(MaimConversion { model, map })
}

/// The model produced by `absentminded_transform`, with enough bookkeeping
/// to evaluate behavioural strategies: each decision instance is a chance
/// variable whose distribution copies the owning decision's rule.
#[derive(Clone, PartialEq, Debug)]
pub struct AbsentExpansion {
    pub model: Maim,
    pub map: NaturalMap,
    fills: Vec<Fill>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
struct Fill {
    instance: NodeId,
    decision: NodeId,
    rule_row: usize,
    /// Context rows of `instance` that lie on the tree.
    first_row: usize,
    row_count: usize,
    row_stride: usize,
}

impl AbsentExpansion {
    /// The model with every decision instance's distribution replaced by
    /// the given behavioural rules. Decisions missing from the profile play
    /// uniformly.
    pub fn with_strategy(&self, profile: &PolicyProfile) -> Result<Maim, ConvertError> {
        let mut full = PolicyProfile::uniform(&self.model);
        for (&d, rule) in &profile.rules {
            rule.validate(&self.model, d)?;
            full.set(d, rule.clone());
        }
        let mut cpds = self.model.cpds().clone();
        for fill in &self.fills {
            let rule = &full.rules[&fill.decision].rows[fill.rule_row];
            let cpd = cpds.get_mut(&fill.instance).expect("instances have tables");
            for k in 0..fill.row_count {
                let row = &mut cpd.rows[fill.first_row + k * fill.row_stride];
                for slot in row.iter_mut() {
                    *slot = 0.0;
                }
                row[..rule.len()].copy_from_slice(rule);
            }
        }
        Ok(Maim::new(self.model.graph().clone(), self.model.domains().to_vec(), cpds)?)
    }

    /// Expected utility of playing the behavioural rules.
    pub fn expected_utility(
        &self,
        profile: &PolicyProfile,
        agent: AgentId,
    ) -> Result<f64, ConvertError> {
        let played = self.with_strategy(profile)?;
        Ok(expected_utility(&played, &PolicyProfile::uniform(&played), agent)?)
    }
}

/// Converts a game with absentmindedness: every information set met twice
/// on a path becomes a decision variable carrying the rule plus one chance
/// variable per decision instance, wired in path order.
pub fn absentminded_transform(game: &Efg) -> Result<AbsentExpansion, ConvertError> {
    game.validate()?;
    if !game.is_absentminded() {
        return Err(ConvertError::Efg(EfgError::NotAbsentminded));
    }
    if !game.interventions.is_empty() {
        return Err(ConvertError::Unsupported(
            "explicit intervention sets cannot be combined with absentmindedness".into(),
        ));
    }
    let (model, map, fills) = build_from_tree(game, true)?;
    Ok(AbsentExpansion { model, map, fills })
}

/// Tree-node groups during conversion: the future chance and decision
/// variables.
enum Tvar {
    Chance { members: Vec<EfgNodeId> },
    Decision { isets: Vec<usize> },
    /// One decision instance of an absentminded information set.
    Instance { member: EfgNodeId, iset: usize },
}

/// Variables of the output model, in preliminary indexing: tree variables
/// first, then rule decisions for absentminded sets, then utility groups.
enum Var {
    Tree(usize),
    Rule { iset: usize },
    Utility { agent: usize, leaves: Vec<EfgNodeId> },
}

/// Packs one member path into a context row over `parent_vars` (ascending
/// final order, with `cards`); variables missing from the path fall back to
/// their null value, and `over` pins one parent to an explicit value.
fn pack_member_row(
    path: &BTreeMap<usize, usize>,
    over: Option<(usize, usize)>,
    parent_vars: &[usize],
    cards: &[usize],
    bot_index: &[Option<usize>],
) -> Result<usize, ConvertError> {
    let mut row = 0usize;
    for (k, &p) in parent_vars.iter().enumerate() {
        let value = match over {
            Some((rp, rv)) if p == rp => rv,
            _ => match path.get(&p) {
                Some(&b) => b,
                None => bot_index[p].ok_or_else(|| {
                    ConvertError::Unsupported(
                        "a branch misses a variable with no null value".into(),
                    )
                })?,
            },
        };
        row = row * cards[k] + value;
    }
    Ok(row)
}

fn build_from_tree(
    game: &Efg,
    absent: bool,
) -> Result<(Maim, NaturalMap, Vec<Fill>), ConvertError> {
    let pre = game.prefix_order();
    let pos: BTreeMap<EfgNodeId, usize> = pre.iter().enumerate().map(|(i, &n)| (n, i)).collect();

    // Group tree nodes into variables-to-be.
    let mut tvars: Vec<Tvar> = Vec::new();
    let mut tvar_of: BTreeMap<EfgNodeId, usize> = BTreeMap::new();
    if absent {
        let mut absent_isets = BTreeSet::new();
        for leaf in game.terminals() {
            let mut seen = BTreeSet::new();
            for (anc, _) in game.path_to(leaf) {
                if let EfgNodeKind::Personal { iset, .. } = game.nodes[anc.0].kind {
                    if !seen.insert(iset) {
                        absent_isets.insert(iset);
                    }
                }
            }
        }
        for &n in &pre {
            match game.nodes[n.0].kind {
                EfgNodeKind::Chance { .. } => {
                    tvar_of.insert(n, tvars.len());
                    tvars.push(Tvar::Chance { members: alloc::vec![n] });
                }
                EfgNodeKind::Personal { iset, .. } if absent_isets.contains(&iset) => {
                    tvar_of.insert(n, tvars.len());
                    tvars.push(Tvar::Instance { member: n, iset });
                }
                _ => {}
            }
        }
        for (j, set) in game.isets.iter().enumerate() {
            if !absent_isets.contains(&j) {
                for &m in &set.members {
                    tvar_of.insert(m, tvars.len());
                }
                tvars.push(Tvar::Decision { isets: alloc::vec![j] });
            }
        }
    } else {
        for group in game.effective_interventions() {
            match group {
                InterventionSet::Chance(members) => {
                    let mut members = members;
                    members.sort_by_key(|m| pos[m]);
                    for &m in &members {
                        tvar_of.insert(m, tvars.len());
                    }
                    tvars.push(Tvar::Chance { members });
                }
                InterventionSet::Decisions(isets) => {
                    for &j in &isets {
                        for &m in &game.isets[j].members {
                            tvar_of.insert(m, tvars.len());
                        }
                    }
                    tvars.push(Tvar::Decision { isets });
                }
            }
        }
    }

    // Path of a node in variable terms.
    let tpath = |n: EfgNodeId| -> BTreeMap<usize, usize> {
        game.path_to(n).into_iter().map(|(anc, b)| (tvar_of[&anc], b)).collect()
    };
    // Variables whose branch is fixed on every path into an information
    // set, with the shared branch.
    let mu_of = |j: usize| -> BTreeMap<usize, usize> {
        let mut shared: Option<BTreeMap<usize, usize>> = None;
        for &m in &game.isets[j].members {
            let here = tpath(m);
            shared = Some(match shared {
                None => here,
                Some(prev) => {
                    prev.into_iter().filter(|(v, b)| here.get(v) == Some(b)).collect()
                }
            });
        }
        shared.unwrap_or_default()
    };

    let mut vars: Vec<Var> = (0..tvars.len()).map(Var::Tree).collect();
    let mut rule_var: BTreeMap<usize, usize> = BTreeMap::new();
    for (t, tv) in tvars.iter().enumerate() {
        if let Tvar::Instance { iset, .. } = tv {
            if !rule_var.contains_key(iset) {
                rule_var.insert(*iset, vars.len());
                vars.push(Var::Rule { iset: *iset });
            }
        }
        let _ = t;
    }

    // Utility groups: one fragment per (agent, leaf), merged when parent
    // sets are equal, then folded into supersets so that a branch missing a
    // variable pads it with the null value instead of spawning a separate
    // utility node.
    let agent_count = game.agents.len();
    let mut groups: Vec<(usize, BTreeSet<usize>, Vec<EfgNodeId>)> = Vec::new();
    for leaf in game.terminals() {
        let parents: BTreeSet<usize> = tpath(leaf).into_keys().collect();
        for a in 0..agent_count {
            match groups.iter_mut().find(|(ga, gp, _)| *ga == a && *gp == parents) {
                Some((_, _, leaves)) => leaves.push(leaf),
                None => groups.push((a, parents.clone(), alloc::vec![leaf])),
            }
        }
    }
    // Only chance and instance variables can stand in for a missing branch
    // via the null value; a fragment may fold into a superset only when the
    // extra parents are all of that kind.
    let paddable = |p: usize| matches!(&tvars[p], Tvar::Chance { .. } | Tvar::Instance { .. });
    loop {
        let mut merge: Option<(usize, usize)> = None;
        'outer: for i in 0..groups.len() {
            let mut target: Option<usize> = None;
            for j in 0..groups.len() {
                if i == j || groups[i].0 != groups[j].0 {
                    continue;
                }
                if groups[i].1.is_subset(&groups[j].1)
                    && groups[j].1.difference(&groups[i].1).all(|&p| paddable(p))
                {
                    let better = match target {
                        None => true,
                        Some(t) => {
                            let key = |k: usize| {
                                (groups[k].1.len(), groups[k].2.iter().map(|l| pos[l]).min())
                            };
                            key(j) < key(t)
                        }
                    };
                    if better {
                        target = Some(j);
                    }
                }
            }
            if let Some(j) = target {
                merge = Some((i, j));
                break 'outer;
            }
        }
        match merge {
            None => break,
            Some((i, j)) => {
                let (_, _, leaves) = groups.remove(i);
                let j = if j > i { j - 1 } else { j };
                groups[j].2.extend(leaves);
            }
        }
    }
    for (_, _, leaves) in &mut groups {
        leaves.sort_by_key(|l| pos[l]);
    }
    groups.sort_by_key(|(a, _, leaves)| (pos[&leaves[0]], *a));
    for (a, _, leaves) in &groups {
        vars.push(Var::Utility { agent: *a, leaves: leaves.clone() });
    }

    // Parent sets in preliminary indices.
    let mut parents_of: Vec<BTreeSet<usize>> = Vec::with_capacity(vars.len());
    let mut iset_mu: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
    for j in 0..game.isets.len() {
        iset_mu.insert(j, mu_of(j));
    }
    for var in &vars {
        let parents: BTreeSet<usize> = match var {
            Var::Tree(t) => match &tvars[*t] {
                Tvar::Chance { members } => {
                    members.iter().flat_map(|&m| tpath(m).into_keys()).collect()
                }
                Tvar::Instance { member, iset } => {
                    let mut p: BTreeSet<usize> = tpath(*member).into_keys().collect();
                    p.insert(rule_var[iset]);
                    p
                }
                Tvar::Decision { isets } => {
                    let keys: BTreeSet<usize> = iset_mu[&isets[0]].keys().copied().collect();
                    for &j in &isets[1..] {
                        let other: BTreeSet<usize> = iset_mu[&j].keys().copied().collect();
                        if other != keys {
                            return Err(ConvertError::Unsupported(
                                "grouped information sets know different variables".into(),
                            ));
                        }
                    }
                    keys
                }
            },
            Var::Rule { iset } => iset_mu[iset].keys().copied().collect(),
            Var::Utility { .. } => BTreeSet::new(),
        };
        parents_of.push(parents);
    }
    for (v, var) in vars.iter().enumerate() {
        if let Var::Utility { leaves, .. } = var {
            parents_of[v] = leaves.iter().flat_map(|&l| tpath(l).into_keys()).collect();
        }
    }

    // A chance variable needs a null value when some consumer's branch
    // misses it.
    let mut missed = alloc::vec![false; vars.len()];
    for (v, var) in vars.iter().enumerate() {
        let member_paths: Vec<BTreeSet<usize>> = match var {
            Var::Tree(t) => match &tvars[*t] {
                Tvar::Chance { members } => {
                    members.iter().map(|&m| tpath(m).into_keys().collect()).collect()
                }
                Tvar::Instance { member, .. } => {
                    alloc::vec![tpath(*member).into_keys().collect()]
                }
                Tvar::Decision { .. } => Vec::new(),
            },
            Var::Rule { .. } => Vec::new(),
            Var::Utility { leaves, .. } => {
                leaves.iter().map(|&l| tpath(l).into_keys().collect()).collect()
            }
        };
        for path in &member_paths {
            for &p in parents_of[v].difference(path) {
                missed[p] = true;
            }
        }
    }

    // Dependency-first placement, deterministically keyed by the earliest
    // tree position a variable touches.
    let min_pre = |v: usize| -> usize {
        match &vars[v] {
            Var::Tree(t) => match &tvars[*t] {
                Tvar::Chance { members } => members.iter().map(|m| pos[m]).min().unwrap(),
                Tvar::Instance { member, .. } => pos[member],
                Tvar::Decision { isets } => isets
                    .iter()
                    .flat_map(|&j| game.isets[j].members.iter().map(|m| pos[m]))
                    .min()
                    .unwrap(),
            },
            Var::Rule { iset } => {
                game.isets[*iset].members.iter().map(|m| pos[m]).min().unwrap()
            }
            Var::Utility { leaves, .. } => pos[&leaves[0]],
        }
    };
    let rank = |v: usize| -> usize {
        match &vars[v] {
            Var::Rule { .. } => 0,
            Var::Tree(_) => 1,
            Var::Utility { .. } => 2,
        }
    };
    let agent_key = |v: usize| -> usize {
        match &vars[v] {
            Var::Utility { agent, .. } => *agent,
            _ => 0,
        }
    };
    let mut indegree: Vec<usize> = parents_of.iter().map(|p| p.len()).collect();
    let mut dependents: Vec<Vec<usize>> = alloc::vec![Vec::new(); vars.len()];
    for (v, ps) in parents_of.iter().enumerate() {
        for &p in ps {
            dependents[p].push(v);
        }
    }
    let mut ready: BTreeSet<(usize, usize, usize, usize)> = (0..vars.len())
        .filter(|&v| indegree[v] == 0)
        .map(|v| (min_pre(v), rank(v), agent_key(v), v))
        .collect();
    let mut placement: Vec<usize> = Vec::with_capacity(vars.len());
    let mut final_id = alloc::vec![usize::MAX; vars.len()];
    while let Some(&key) = ready.iter().next() {
        ready.remove(&key);
        let v = key.3;
        final_id[v] = placement.len();
        placement.push(v);
        for &d in &dependents[v] {
            indegree[d] -= 1;
            if indegree[d] == 0 {
                ready.insert((min_pre(d), rank(d), agent_key(d), d));
            }
        }
    }
    if placement.len() != vars.len() {
        return Err(ConvertError::Unsupported("cyclic variable dependencies".into()));
    }

    // Names, kinds, and the action labels of tree variables.
    let mut per_agent_utils = alloc::vec![0usize; agent_count];
    for var in &vars {
        if let Var::Utility { agent, .. } = var {
            per_agent_utils[*agent] += 1;
        }
    }
    let mut chance_n = 0usize;
    let mut decision_n = 0usize;
    let mut agent_seen = alloc::vec![0usize; agent_count];
    let mut decls: Vec<NodeDecl> = Vec::with_capacity(vars.len());
    for &v in &placement {
        let decl = match &vars[v] {
            Var::Tree(t) => match &tvars[*t] {
                Tvar::Chance { .. } | Tvar::Instance { .. } => {
                    chance_n += 1;
                    NodeDecl::chance(&format!("X{chance_n}"))
                }
                Tvar::Decision { isets } => {
                    decision_n += 1;
                    NodeDecl::decision(&format!("D{decision_n}"), game.isets[isets[0]].owner)
                }
            },
            Var::Rule { iset } => {
                decision_n += 1;
                NodeDecl::decision(&format!("D{decision_n}"), game.isets[*iset].owner)
            }
            Var::Utility { agent, .. } => {
                agent_seen[*agent] += 1;
                let name = if per_agent_utils[*agent] == 1 {
                    format!("U{}", agent + 1)
                } else {
                    format!("U{}_{}", agent + 1, agent_seen[*agent])
                };
                NodeDecl::utility(&name, AgentId(*agent))
            }
        };
        decls.push(decl);
    }
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    for (v, ps) in parents_of.iter().enumerate() {
        for &p in ps {
            edges.push((NodeId(final_id[p]), NodeId(final_id[v])));
        }
    }
    let graph = MaidGraph::new(game.agents.clone(), decls, &edges)?;

    let base_actions = |t: &Tvar| -> Vec<String> {
        match t {
            Tvar::Chance { members } => match &game.nodes[members[0].0].kind {
                EfgNodeKind::Chance { actions, .. } => actions.clone(),
                _ => unreachable!(),
            },
            Tvar::Instance { iset, .. } => game.isets[*iset].actions.clone(),
            Tvar::Decision { isets } => game.isets[isets[0]].actions.clone(),
        }
    };

    // Domains, tables, the natural map, and the instance fills, processed
    // parents-first so parent cardinalities are final.
    let bot_label = String::from("\u{22a5}");
    let mut domains: Vec<Option<Domain>> = alloc::vec![None; vars.len()];
    let mut bot_index: Vec<Option<usize>> = alloc::vec![None; vars.len()];
    let mut cpds: BTreeMap<NodeId, Cpd> = BTreeMap::new();
    let mut map = NaturalMap::default();
    let mut fills: Vec<Fill> = Vec::new();

    let card = |domains: &Vec<Option<Domain>>, v: usize| -> usize {
        domains[v].as_ref().expect("parents are placed first").size()
    };

    for &v in &placement {
        let id = NodeId(final_id[v]);
        // Parents in final ascending order, matching the graph's context
        // row convention.
        let mut parent_vars: Vec<usize> = parents_of[v].iter().copied().collect();
        parent_vars.sort_by_key(|&p| final_id[p]);
        let cards: Vec<usize> = parent_vars.iter().map(|&p| card(&domains, p)).collect();
        let rows_total: usize = cards.iter().product();

        match &vars[v] {
            Var::Tree(t) => match &tvars[*t] {
                Tvar::Chance { members } => {
                    let labels = base_actions(&tvars[*t]);
                    let need_bot = missed[v] || rows_total > members.len();
                    let width = labels.len() + usize::from(need_bot);
                    let mut full_labels = labels.clone();
                    if need_bot {
                        full_labels.push(bot_label.clone());
                        bot_index[v] = Some(labels.len());
                    }
                    let mut rows: Vec<Option<Vec<f64>>> = alloc::vec![None; rows_total];
                    for &m in members {
                        let EfgNodeKind::Chance { probs, .. } = &game.nodes[m.0].kind else {
                            unreachable!()
                        };
                        let mut row = alloc::vec![0.0; width];
                        row[..probs.len()].copy_from_slice(probs);
                        let r = pack_member_row(&tpath(m), None, &parent_vars, &cards, &bot_index)?;
                        if rows[r].replace(row).is_some() {
                            return Err(ConvertError::Unsupported(
                                "two grouped nodes share a parent context".into(),
                            ));
                        }
                    }
                    let rows: Vec<Vec<f64>> = rows
                        .into_iter()
                        .map(|r| {
                            r.unwrap_or_else(|| {
                                let mut pad = alloc::vec![0.0; width];
                                pad[width - 1] = 1.0;
                                pad
                            })
                        })
                        .collect();
                    domains[v] = Some(Domain::Labels(full_labels));
                    cpds.insert(id, Cpd::new(rows));
                }
                Tvar::Instance { member, iset } => {
                    let labels = base_actions(&tvars[*t]);
                    let rule_prelim = rule_var[iset];
                    let rule_card = card(&domains, rule_prelim);
                    let need_bot = missed[v] || rows_total > rule_card;
                    let width = labels.len() + usize::from(need_bot);
                    let mut full_labels = labels.clone();
                    if need_bot {
                        full_labels.push(bot_label.clone());
                        bot_index[v] = Some(labels.len());
                    }
                    let mut rows: Vec<Option<Vec<f64>>> = alloc::vec![None; rows_total];
                    let path = tpath(*member);
                    let mut on_rows = Vec::with_capacity(rule_card);
                    for rv in 0..rule_card {
                        let r = pack_member_row(&path, Some((rule_prelim, rv)), &parent_vars, &cards, &bot_index)?;
                        let mut row = alloc::vec![0.0; width];
                        for slot in row.iter_mut().take(labels.len()) {
                            *slot = 1.0 / labels.len() as f64;
                        }
                        if rows[r].replace(row).is_some() {
                            return Err(ConvertError::Unsupported(
                                "two decision instances share a parent context".into(),
                            ));
                        }
                        on_rows.push(r);
                    }
                    let rows: Vec<Vec<f64>> = rows
                        .into_iter()
                        .map(|r| {
                            r.unwrap_or_else(|| {
                                let mut pad = alloc::vec![0.0; width];
                                pad[width - 1] = 1.0;
                                pad
                            })
                        })
                        .collect();
                    // On-tree rows differ only in the rule parent's value:
                    // they form an arithmetic progression over the packed
                    // index.
                    let rule_slot = parent_vars
                        .iter()
                        .position(|&p| p == rule_prelim)
                        .expect("instances have their rule as a parent");
                    let stride: usize = cards[rule_slot + 1..].iter().product();
                    let rule_row = {
                        let mu = &iset_mu[iset];
                        let rp: Vec<usize> = {
                            let mut rp: Vec<usize> =
                                parents_of[rule_prelim].iter().copied().collect();
                            rp.sort_by_key(|&p| final_id[p]);
                            rp
                        };
                        let mut row = 0usize;
                        for &p in &rp {
                            row = row * card(&domains, p) + mu[&p];
                        }
                        row
                    };
                    fills.push(Fill {
                        instance: id,
                        decision: NodeId(final_id[rule_prelim]),
                        rule_row,
                        first_row: on_rows[0],
                        row_count: rule_card,
                        row_stride: stride,
                    });
                    domains[v] = Some(Domain::Labels(full_labels));
                    cpds.insert(id, Cpd::new(rows));
                }
                Tvar::Decision { isets } => {
                    let labels = base_actions(&tvars[*t]);
                    domains[v] = Some(Domain::Labels(labels));
                    let mut seen_rows: BTreeSet<usize> = BTreeSet::new();
                    for &j in isets {
                        let mu = &iset_mu[&j];
                        let mut row = 0usize;
                        for (k, &p) in parent_vars.iter().enumerate() {
                            row = row * cards[k] + mu[&p];
                        }
                        if !seen_rows.insert(row) {
                            return Err(ConvertError::Unsupported(
                                "two grouped information sets share a decision context".into(),
                            ));
                        }
                        map.entries.push(MapEntry { decision: id, row, iset: j });
                    }
                }
            },
            Var::Rule { iset } => {
                let labels = game.isets[*iset].actions.clone();
                domains[v] = Some(Domain::Labels(labels));
                let mu = &iset_mu[iset];
                let mut row = 0usize;
                for (k, &p) in parent_vars.iter().enumerate() {
                    row = row * cards[k] + mu[&p];
                }
                map.entries.push(MapEntry { decision: id, row, iset: *iset });
            }
            Var::Utility { agent, leaves } => {
                let mut values: Vec<f64> = Vec::new();
                let mut rows: Vec<Option<usize>> = alloc::vec![None; rows_total];
                for &l in leaves {
                    let EfgNodeKind::Terminal { payoffs } = &game.nodes[l.0].kind else {
                        unreachable!()
                    };
                    let value = payoffs[*agent];
                    let idx = match values.iter().position(|x| *x == value) {
                        Some(i) => i,
                        None => {
                            values.push(value);
                            values.len() - 1
                        }
                    };
                    let r = pack_member_row(&tpath(l), None, &parent_vars, &cards, &bot_index)?;
                    if rows[r].replace(idx).is_some() {
                        return Err(ConvertError::Unsupported(
                            "two branches share a utility context".into(),
                        ));
                    }
                }
                let padded = rows.iter().any(|r| r.is_none());
                let zero = if padded || values.is_empty() {
                    match values.iter().position(|x| *x == 0.0) {
                        Some(i) => i,
                        None => {
                            values.push(0.0);
                            values.len() - 1
                        }
                    }
                } else {
                    0
                };
                let choices: Vec<usize> = rows.into_iter().map(|r| r.unwrap_or(zero)).collect();
                let size = values.len();
                domains[v] = Some(Domain::Reals(values));
                cpds.insert(id, Cpd::deterministic(&choices, size));
            }
        }
    }

    let domains: Vec<Domain> = placement
        .iter()
        .map(|&v| domains[v].clone().expect("all variables get a domain"))
        .collect();
    let model = Maim::new(graph, domains, cpds)?;
    Ok((model, map, fills))
}

/// Smallest PRNG adequate for sampling strategy profiles.
struct Mix(u64);

impl Mix {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct EquivalenceReport {
    pub pure_checked: usize,
    pub mixed_checked: usize,
    pub variants_checked: usize,
    pub max_gap: f64,
    pub ok: bool,
    pub failure: Option<String>,
}

/// Compares expected utilities across a game and a model through the
/// natural mapping: all pure strategy profiles when there are at most ten
/// thousand, plus `trials` sampled mixed profiles. Policies that differ
/// only on unmapped (null) contexts are also checked to agree.
pub fn check_equivalence(
    game: &Efg,
    model: &Maim,
    map: &NaturalMap,
    trials: usize,
    seed: u64,
) -> Result<EquivalenceReport, ConvertError> {
    game.validate()?;
    let mut report = EquivalenceReport {
        pure_checked: 0,
        mixed_checked: 0,
        variants_checked: 0,
        max_gap: 0.0,
        ok: true,
        failure: None,
    };
    let agent_count = game.agents.len();

    let compare = |report: &mut EquivalenceReport,
                       sigma: &EfgStrategyProfile|
     -> Result<(), ConvertError> {
        let policy = map.policy_of(model, sigma)?;
        for a in 0..agent_count {
            let agent = AgentId(a);
            let in_game = efg_expected_utility(game, sigma, agent)?;
            let in_model = expected_utility(model, &policy, agent)?;
            let gap = (in_game - in_model).abs();
            if gap > report.max_gap {
                report.max_gap = gap;
            }
            if gap > TOL && report.ok {
                report.ok = false;
                report.failure = Some(format!(
                    "agent {} differs by {gap} on a profile",
                    game.agents[a]
                ));
            }
        }
        Ok(())
    };

    // Policies equal on mapped contexts are equivalent; their model
    // utilities must agree no matter the rules on null contexts.
    let variants = |report: &mut EquivalenceReport,
                        sigma: &EfgStrategyProfile|
     -> Result<(), ConvertError> {
        let base = map.policy_of(model, sigma)?;
        for fill in [0usize, 1] {
            let mut alt = base.clone();
            for d in model.graph().decisions() {
                let dom = model.domain_size(d);
                let rule = alt.rules.get_mut(&d).expect("policy is full");
                for row in 0..rule.rows.len() {
                    if map.iset_for(d, row).is_none() {
                        let mut fresh = alloc::vec![0.0; dom];
                        fresh[if fill == 0 { 0 } else { dom - 1 }] = 1.0;
                        rule.rows[row] = fresh;
                    }
                }
            }
            for a in 0..agent_count {
                let agent = AgentId(a);
                let base_eu = expected_utility(model, &base, agent)?;
                let alt_eu = expected_utility(model, &alt, agent)?;
                let gap = (base_eu - alt_eu).abs();
                if gap > report.max_gap {
                    report.max_gap = gap;
                }
                if gap > TOL && report.ok {
                    report.ok = false;
                    report.failure = Some(format!(
                        "agent {} is sensitive to a null context rule ({gap})",
                        game.agents[a]
                    ));
                }
            }
            report.variants_checked += 1;
        }
        Ok(())
    };

    let widths: Vec<usize> = game.isets.iter().map(|s| s.actions.len()).collect();
    let pure_total: usize = widths.iter().product();
    if pure_total <= 10_000 {
        let mut choices = alloc::vec![0usize; widths.len()];
        loop {
            let sigma = EfgStrategyProfile::pure(game, &choices);
            compare(&mut report, &sigma)?;
            report.pure_checked += 1;
            if report.pure_checked <= 3 {
                variants(&mut report, &sigma)?;
            }
            let mut k = widths.len();
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                choices[k] += 1;
                if choices[k] < widths[k] {
                    break;
                }
                choices[k] = 0;
            }
            if choices.iter().all(|&c| c == 0) {
                break;
            }
            if widths.is_empty() {
                break;
            }
        }
    }

    let mut rng = Mix(seed);
    for t in 0..trials {
        let mut sigma = EfgStrategyProfile::new();
        for (j, &w) in widths.iter().enumerate() {
            let mut row: Vec<f64> = (0..w).map(|_| rng.next_f64() + 0.02).collect();
            let sum: f64 = row.iter().sum();
            for x in &mut row {
                *x /= sum;
            }
            sigma.set(j, row);
        }
        compare(&mut report, &sigma)?;
        report.mixed_checked += 1;
        if t == 0 {
            variants(&mut report, &sigma)?;
        }
    }
    Ok(report)
}
