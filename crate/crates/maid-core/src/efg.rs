//! Extensive-form games: an arena-backed game tree with chance, personal,
//! and terminal nodes, information sets, and intervention sets.
//!
//! Intervention sets group tree nodes that stand for the same real-world
//! variable; they drive the merge step of the EFG-to-model conversion. By
//! default every chance node and every information set is its own singleton
//! intervention set.

use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::model::AgentId;
use crate::TOL;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct EfgNodeId(pub usize);

#[derive(Clone, PartialEq, Debug)]
pub enum EfgError {
    Structure(String),
    BadProfile(String),
    BadQuery(String),
    BadInterventionSet(String),
    Absentminded,
    NotAbsentminded,
}

impl core::fmt::Display for EfgError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            EfgError::Structure(m) => write!(f, "bad game tree: {m}"),
            EfgError::BadProfile(m) => write!(f, "bad strategy profile: {m}"),
            EfgError::BadQuery(m) => write!(f, "bad query: {m}"),
            EfgError::BadInterventionSet(m) => write!(f, "bad intervention set: {m}"),
            EfgError::Absentminded => write!(f, "the game contains absentmindedness"),
            EfgError::NotAbsentminded => write!(f, "the game contains no absentmindedness"),
        }
    }
}

/// A set of personal nodes owned by one agent that the agent cannot tell
/// apart. All members offer the same actions.
#[derive(Clone, PartialEq, Debug)]
pub struct InfoSet {
    pub owner: AgentId,
    pub label: String,
    pub actions: Vec<String>,
    pub members: Vec<EfgNodeId>,
}

#[derive(Clone, PartialEq, Debug)]
pub enum EfgNodeKind {
    /// Branches by nature; `probs[k]` picks `children[k]`, whose edge is
    /// labelled `actions[k]`.
    Chance { actions: Vec<String>, probs: Vec<f64>, children: Vec<EfgNodeId> },
    /// Branches by the owner of information set `iset`; edge labels come
    /// from the set's action list.
    Personal { iset: usize, children: Vec<EfgNodeId> },
    Terminal { payoffs: Vec<f64> },
}

#[derive(Clone, PartialEq, Debug)]
pub struct EfgNode {
    pub label: String,
    pub parent: Option<EfgNodeId>,
    pub kind: EfgNodeKind,
}

/// A group of tree nodes representing one real-world variable: either
/// chance nodes, or information sets of a single player (by index into
/// `Efg::isets`).
#[derive(Clone, PartialEq, Debug)]
pub enum InterventionSet {
    Chance(Vec<EfgNodeId>),
    Decisions(Vec<usize>),
}

/// An extensive-form game. Node 0 is the root. An empty `interventions`
/// list stands for the default all-singleton partition.
#[derive(Clone, PartialEq, Debug)]
pub struct Efg {
    pub title: String,
    pub agents: Vec<String>,
    pub nodes: Vec<EfgNode>,
    pub isets: Vec<InfoSet>,
    pub interventions: Vec<InterventionSet>,
}

impl Efg {
    pub fn root(&self) -> EfgNodeId {
        EfgNodeId(0)
    }

    pub fn children(&self, id: EfgNodeId) -> &[EfgNodeId] {
        match &self.nodes[id.0].kind {
            EfgNodeKind::Chance { children, .. } => children,
            EfgNodeKind::Personal { children, .. } => children,
            EfgNodeKind::Terminal { .. } => &[],
        }
    }

    /// Edge labels out of a node; empty for terminals.
    pub fn actions(&self, id: EfgNodeId) -> &[String] {
        match &self.nodes[id.0].kind {
            EfgNodeKind::Chance { actions, .. } => actions,
            EfgNodeKind::Personal { iset, .. } => &self.isets[*iset].actions,
            EfgNodeKind::Terminal { .. } => &[],
        }
    }

    pub fn is_terminal(&self, id: EfgNodeId) -> bool {
        matches!(self.nodes[id.0].kind, EfgNodeKind::Terminal { .. })
    }

    pub fn terminals(&self) -> Vec<EfgNodeId> {
        self.prefix_order().into_iter().filter(|&id| self.is_terminal(id)).collect()
    }

    /// Root-first depth-first order, children visited in edge order. The
    /// canonical traversal for export and labelling.
    pub fn prefix_order(&self) -> Vec<EfgNodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = alloc::vec![self.root()];
        while let Some(id) = stack.pop() {
            out.push(id);
            for &c in self.children(id).iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    /// The chain of (ancestor, branch index taken) pairs from the root down
    /// to `id`, excluding `id` itself.
    pub fn path_to(&self, id: EfgNodeId) -> Vec<(EfgNodeId, usize)> {
        let mut rev = Vec::new();
        let mut cur = id;
        while let Some(p) = self.nodes[cur.0].parent {
            let branch = self
                .children(p)
                .iter()
                .position(|&c| c == cur)
                .expect("parent links a child back");
            rev.push((p, branch));
            cur = p;
        }
        rev.reverse();
        rev
    }

    /// The all-singleton intervention partition: one set per chance node (in
    /// node order), then one per information set.
    pub fn singleton_interventions(&self) -> Vec<InterventionSet> {
        let mut out = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if matches!(n.kind, EfgNodeKind::Chance { .. }) {
                out.push(InterventionSet::Chance(alloc::vec![EfgNodeId(i)]));
            }
        }
        for i in 0..self.isets.len() {
            out.push(InterventionSet::Decisions(alloc::vec![i]));
        }
        out
    }

    /// The partition in force: the explicit one, or singletons when none
    /// was given.
    pub fn effective_interventions(&self) -> Vec<InterventionSet> {
        if self.interventions.is_empty() {
            self.singleton_interventions()
        } else {
            self.interventions.clone()
        }
    }

    /// True when some root-to-leaf path meets an information set twice.
    pub fn is_absentminded(&self) -> bool {
        for id in self.terminals() {
            let mut seen = BTreeSet::new();
            for (anc, _) in self.path_to(id) {
                if let EfgNodeKind::Personal { iset, .. } = self.nodes[anc.0].kind {
                    if !seen.insert(iset) {
                        return true;
                    }
                }
            }
        }
        false
    }

    pub fn validate(&self) -> Result<(), EfgError> {
        let fail = |m: String| Err(EfgError::Structure(m));
        if self.agents.is_empty() {
            return fail("no agents".into());
        }
        if self.nodes.is_empty() {
            return fail("no nodes".into());
        }
        if self.nodes[0].parent.is_some() {
            return fail("the root (node 0) has a parent".into());
        }
        let n = self.nodes.len();
        let mut child_of = alloc::vec![None; n];
        for (i, node) in self.nodes.iter().enumerate() {
            if let Some(p) = node.parent {
                if p.0 >= n {
                    return fail(format!("node {i} has an unknown parent"));
                }
            } else if i != 0 {
                return fail(format!("node {i} has no parent"));
            }
            for (b, &c) in self.children(EfgNodeId(i)).iter().enumerate() {
                if c.0 >= n {
                    return fail(format!("node {i} has an unknown child"));
                }
                if self.nodes[c.0].parent != Some(EfgNodeId(i)) {
                    return fail(format!("child {} does not point back to node {i}", c.0));
                }
                if child_of[c.0].is_some() {
                    return fail(format!("node {} is a child twice", c.0));
                }
                child_of[c.0] = Some((i, b));
            }
        }
        for (i, slot) in child_of.iter().enumerate().skip(1) {
            if slot.is_none() {
                return fail(format!("node {i} is unreachable"));
            }
        }
        if child_of[0].is_some() {
            return fail("the root is some node's child".into());
        }
        for (i, node) in self.nodes.iter().enumerate() {
            match &node.kind {
                EfgNodeKind::Chance { actions, probs, children } => {
                    if actions.is_empty()
                        || actions.len() != probs.len()
                        || actions.len() != children.len()
                    {
                        return fail(format!("node {i} has mismatched chance branches"));
                    }
                    let mut sum = 0.0;
                    for &p in probs {
                        if !(p.is_finite() && p >= 0.0) {
                            return fail(format!("node {i} has a bad branch probability"));
                        }
                        sum += p;
                    }
                    if (sum - 1.0).abs() > TOL {
                        return fail(format!("node {i} branch probabilities sum to {sum}"));
                    }
                }
                EfgNodeKind::Personal { iset, children } => {
                    let Some(set) = self.isets.get(*iset) else {
                        return fail(format!("node {i} names an unknown information set"));
                    };
                    if children.len() != set.actions.len() {
                        return fail(format!(
                            "node {i} offers {} branches but its information set has {} actions",
                            children.len(),
                            set.actions.len()
                        ));
                    }
                    if !set.members.contains(&EfgNodeId(i)) {
                        return fail(format!("node {i} is missing from its information set"));
                    }
                }
                EfgNodeKind::Terminal { payoffs } => {
                    if payoffs.len() != self.agents.len() {
                        return fail(format!("node {i} has a payoff vector of the wrong length"));
                    }
                    if payoffs.iter().any(|p| !p.is_finite()) {
                        return fail(format!("node {i} has a non-finite payoff"));
                    }
                }
            }
        }
        let mut seen_members = BTreeSet::new();
        for (j, set) in self.isets.iter().enumerate() {
            if set.owner.0 >= self.agents.len() {
                return fail(format!("information set {j} has an unknown owner"));
            }
            if set.actions.is_empty() {
                return fail(format!("information set {j} has no actions"));
            }
            if set.members.is_empty() {
                return fail(format!("information set {j} has no members"));
            }
            for &m in &set.members {
                if !seen_members.insert(m) {
                    return fail(format!("node {} sits in two information sets", m.0));
                }
                match self.nodes.get(m.0).map(|n| &n.kind) {
                    Some(EfgNodeKind::Personal { iset, .. }) if *iset == j => {}
                    _ => {
                        return fail(format!(
                            "information set {j} lists node {} which does not use it",
                            m.0
                        ))
                    }
                }
            }
        }
        self.validate_intervention_partition()?;
        Ok(())
    }

    /// Partition and same-shape checks on the intervention sets; the
    /// path-uniqueness and shared-knowledge conditions live in
    /// `check_intervention_sets` since they are conversion preconditions.
    fn validate_intervention_partition(&self) -> Result<(), EfgError> {
        if self.interventions.is_empty() {
            return Ok(());
        }
        let fail = |m: String| Err(EfgError::BadInterventionSet(m));
        let mut chance_seen = BTreeSet::new();
        let mut iset_seen = BTreeSet::new();
        for (g, group) in self.interventions.iter().enumerate() {
            match group {
                InterventionSet::Chance(members) => {
                    if members.is_empty() {
                        return fail(format!("group {g} is empty"));
                    }
                    let mut width = None;
                    for &m in members {
                        let Some(EfgNodeKind::Chance { children, .. }) =
                            self.nodes.get(m.0).map(|n| &n.kind)
                        else {
                            return fail(format!("group {g} lists non-chance node {}", m.0));
                        };
                        if !chance_seen.insert(m) {
                            return fail(format!("chance node {} is grouped twice", m.0));
                        }
                        if *width.get_or_insert(children.len()) != children.len() {
                            return fail(format!("group {g} members differ in child count"));
                        }
                    }
                }
                InterventionSet::Decisions(members) => {
                    if members.is_empty() {
                        return fail(format!("group {g} is empty"));
                    }
                    let mut owner = None;
                    let mut width = None;
                    for &j in members {
                        let Some(set) = self.isets.get(j) else {
                            return fail(format!("group {g} lists unknown information set {j}"));
                        };
                        if !iset_seen.insert(j) {
                            return fail(format!("information set {j} is grouped twice"));
                        }
                        if *owner.get_or_insert(set.owner) != set.owner {
                            return fail(format!("group {g} mixes players"));
                        }
                        if *width.get_or_insert(set.actions.len()) != set.actions.len() {
                            return fail(format!("group {g} members differ in action count"));
                        }
                    }
                }
            }
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if matches!(n.kind, EfgNodeKind::Chance { .. })
                && !chance_seen.contains(&EfgNodeId(i))
            {
                return fail(format!("chance node {i} belongs to no intervention set"));
            }
        }
        for j in 0..self.isets.len() {
            if !iset_seen.contains(&j) {
                return fail(format!("information set {j} belongs to no intervention set"));
            }
        }
        Ok(())
    }
}

/// Verifies the path conditions on the intervention partition: no
/// root-to-leaf path passes through a set twice, and grouped information
/// sets share the same path knowledge (the same ancestor intervention sets
/// have a determined value at each of them).
pub fn check_intervention_sets(game: &Efg) -> Result<(), EfgError> {
    let groups = game.effective_interventions();
    // Group index of every non-terminal node.
    let mut group_of: BTreeMap<usize, usize> = BTreeMap::new();
    for (g, group) in groups.iter().enumerate() {
        match group {
            InterventionSet::Chance(members) => {
                for &m in members {
                    group_of.insert(m.0, g);
                }
            }
            InterventionSet::Decisions(members) => {
                for &j in members {
                    for &m in &game.isets[j].members {
                        group_of.insert(m.0, g);
                    }
                }
            }
        }
    }
    for leaf in game.terminals() {
        let mut seen = BTreeSet::new();
        for (anc, _) in game.path_to(leaf) {
            let g = group_of[&anc.0];
            if !seen.insert(g) {
                return Err(EfgError::BadInterventionSet(format!(
                    "a path passes through intervention set {g} twice"
                )));
            }
        }
    }
    // Shared path knowledge across an intervention set's information sets:
    // the groups with a constant branch on every path into the set must
    // agree between members.
    for (g, group) in groups.iter().enumerate() {
        let InterventionSet::Decisions(members) = group else { continue };
        let mut knowledge: Option<BTreeSet<usize>> = None;
        for &j in members {
            let mu = iset_known_groups(game, &group_of, j);
            match &knowledge {
                None => knowledge = Some(mu),
                Some(k) if *k == mu => {}
                Some(_) => {
                    return Err(EfgError::BadInterventionSet(format!(
                        "information sets in intervention set {g} have different path knowledge"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// The intervention groups whose branch is fixed across every path into the
/// information set: present on each member's root path with one shared
/// branch index.
fn iset_known_groups(
    game: &Efg,
    group_of: &BTreeMap<usize, usize>,
    iset: usize,
) -> BTreeSet<usize> {
    let mut shared: Option<BTreeMap<usize, usize>> = None;
    for &m in &game.isets[iset].members {
        let mut here = BTreeMap::new();
        for (anc, branch) in game.path_to(m) {
            here.insert(group_of[&anc.0], branch);
        }
        shared = Some(match shared {
            None => here,
            Some(prev) => prev
                .into_iter()
                .filter(|(g, b)| here.get(g) == Some(b))
                .collect(),
        });
    }
    shared.unwrap_or_default().into_keys().collect()
}

/// A behavioural strategy profile: one probability row per information set.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct EfgStrategyProfile {
    pub rows: BTreeMap<usize, Vec<f64>>,
}

impl EfgStrategyProfile {
    pub fn new() -> Self {
        EfgStrategyProfile { rows: BTreeMap::new() }
    }

    pub fn uniform(game: &Efg) -> Self {
        let rows = game
            .isets
            .iter()
            .enumerate()
            .map(|(j, set)| {
                let k = set.actions.len();
                (j, alloc::vec![1.0 / k as f64; k])
            })
            .collect();
        EfgStrategyProfile { rows }
    }

    /// The pure profile choosing `choices[j]` at information set `j`.
    pub fn pure(game: &Efg, choices: &[usize]) -> Self {
        let rows = game
            .isets
            .iter()
            .enumerate()
            .map(|(j, set)| {
                let mut row = alloc::vec![0.0; set.actions.len()];
                row[choices[j]] = 1.0;
                (j, row)
            })
            .collect();
        EfgStrategyProfile { rows }
    }

    pub fn set(&mut self, iset: usize, row: Vec<f64>) {
        self.rows.insert(iset, row);
    }

    pub fn validate(&self, game: &Efg) -> Result<(), EfgError> {
        for (j, set) in game.isets.iter().enumerate() {
            let Some(row) = self.rows.get(&j) else {
                return Err(EfgError::BadProfile(format!("no row for information set {j}")));
            };
            if row.len() != set.actions.len() {
                return Err(EfgError::BadProfile(format!(
                    "information set {j} expects {} entries",
                    set.actions.len()
                )));
            }
            let mut sum = 0.0;
            for &p in row {
                if !(p.is_finite() && p >= 0.0) {
                    return Err(EfgError::BadProfile(format!(
                        "information set {j} has a bad probability"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > TOL {
                return Err(EfgError::BadProfile(format!(
                    "information set {j} row sums to {sum}"
                )));
            }
        }
        Ok(())
    }
}

/// Expected payoff to `agent`: the sum over root-to-leaf paths of path
/// probability times the agent's payoff entry.
pub fn efg_expected_utility(
    game: &Efg,
    sigma: &EfgStrategyProfile,
    agent: AgentId,
) -> Result<f64, EfgError> {
    if agent.0 >= game.agents.len() {
        return Err(EfgError::BadQuery(format!("unknown agent #{}", agent.0)));
    }
    sigma.validate(game)?;
    let mut total = 0.0;
    let mut stack = alloc::vec![(game.root(), 1.0)];
    while let Some((id, p)) = stack.pop() {
        match &game.nodes[id.0].kind {
            EfgNodeKind::Terminal { payoffs } => total += p * payoffs[agent.0],
            EfgNodeKind::Chance { probs, children, .. } => {
                for (&c, &q) in children.iter().zip(probs) {
                    if q > 0.0 {
                        stack.push((c, p * q));
                    }
                }
            }
            EfgNodeKind::Personal { iset, children } => {
                let row = &sigma.rows[iset];
                for (&c, &q) in children.iter().zip(row) {
                    if q > 0.0 {
                        stack.push((c, p * q));
                    }
                }
            }
        }
    }
    Ok(total)
}
