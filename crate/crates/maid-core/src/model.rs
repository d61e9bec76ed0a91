//! MAID graphs, domains, CPDs, and the parametrized model (MAIM).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::radix;
use crate::TOL;

/// Index of a node in declaration order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NodeId(pub usize);

/// Index of an agent in declaration order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct AgentId(pub usize);

/// Node kind. Decisions and utilities belong to a single agent.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum NodeKind {
    Chance,
    Decision(AgentId),
    Utility(AgentId),
}

impl NodeKind {
    pub fn owner(&self) -> Option<AgentId> {
        match self {
            NodeKind::Chance => None,
            NodeKind::Decision(a) | NodeKind::Utility(a) => Some(*a),
        }
    }

    pub fn is_decision(&self) -> bool {
        matches!(self, NodeKind::Decision(_))
    }

    pub fn is_utility(&self) -> bool {
        matches!(self, NodeKind::Utility(_))
    }
}

/// A node declaration: display name plus kind.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct NodeDecl {
    pub name: String,
    pub kind: NodeKind,
}

impl NodeDecl {
    pub fn chance(name: &str) -> Self {
        NodeDecl { name: name.to_string(), kind: NodeKind::Chance }
    }

    pub fn decision(name: &str, owner: AgentId) -> Self {
        NodeDecl { name: name.to_string(), kind: NodeKind::Decision(owner) }
    }

    pub fn utility(name: &str, owner: AgentId) -> Self {
        NodeDecl { name: name.to_string(), kind: NodeKind::Utility(owner) }
    }
}

/// Validation failure for graphs, models, or policies.
#[derive(Clone, PartialEq, Debug)]
pub enum ModelError {
    DuplicateAgent(String),
    DuplicateNode(String),
    UnknownAgent(String),
    UnknownNode(String),
    BadEdge(String),
    Cyclic,
    UtilityWithChild(String),
    MissingCpd(String),
    UnexpectedCpd(String),
    BadDomain(String),
    BadCpd(String),
    BadRule(String),
    IncompleteProfile(String),
}

impl core::fmt::Display for ModelError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ModelError::DuplicateAgent(a) => write!(f, "duplicate agent {a:?}"),
            ModelError::DuplicateNode(n) => write!(f, "duplicate node {n:?}"),
            ModelError::UnknownAgent(a) => write!(f, "unknown agent {a:?}"),
            ModelError::UnknownNode(n) => write!(f, "unknown node {n:?}"),
            ModelError::BadEdge(e) => write!(f, "bad edge: {e}"),
            ModelError::Cyclic => write!(f, "graph contains a directed cycle"),
            ModelError::UtilityWithChild(n) => write!(f, "utility node {n:?} has children"),
            ModelError::MissingCpd(n) => write!(f, "missing CPD for non-decision node {n:?}"),
            ModelError::UnexpectedCpd(n) => write!(f, "CPD given for decision node {n:?}"),
            ModelError::BadDomain(m) => write!(f, "bad domain: {m}"),
            ModelError::BadCpd(m) => write!(f, "bad CPD: {m}"),
            ModelError::BadRule(m) => write!(f, "bad decision rule: {m}"),
            ModelError::IncompleteProfile(m) => write!(f, "incomplete policy profile: {m}"),
        }
    }
}

/// The graph layer of a MAID: agents, typed nodes, and directed edges.
///
/// Node and agent identity is declaration order; all derived listings
/// (parents, children, topological order) are deterministic.
#[derive(Clone, PartialEq, Debug)]
pub struct MaidGraph {
    agents: Vec<String>,
    nodes: Vec<NodeDecl>,
    parents: Vec<Vec<NodeId>>,
    children: Vec<Vec<NodeId>>,
}

impl MaidGraph {
    /// Builds and validates a graph. Edges are `(parent, child)` pairs.
    ///
    /// Rejects duplicate names, dangling indices, self-loops, duplicate or
    /// cyclic edges, and utility nodes with children.
    pub fn new(
        agents: Vec<String>,
        nodes: Vec<NodeDecl>,
        edges: &[(NodeId, NodeId)],
    ) -> Result<Self, ModelError> {
        let mut seen = BTreeSet::new();
        for a in &agents {
            if !seen.insert(a.clone()) {
                return Err(ModelError::DuplicateAgent(a.clone()));
            }
        }
        let mut seen = BTreeSet::new();
        for n in &nodes {
            if !seen.insert(n.name.clone()) {
                return Err(ModelError::DuplicateNode(n.name.clone()));
            }
            if let Some(AgentId(a)) = n.kind.owner() {
                if a >= agents.len() {
                    return Err(ModelError::UnknownAgent(format!("#{a}")));
                }
            }
        }

        let mut parents = alloc::vec![Vec::new(); nodes.len()];
        let mut children = alloc::vec![Vec::new(); nodes.len()];
        let mut seen = BTreeSet::new();
        for &(src, dst) in edges {
            if src.0 >= nodes.len() || dst.0 >= nodes.len() {
                return Err(ModelError::BadEdge(format!("({}, {})", src.0, dst.0)));
            }
            if src == dst {
                return Err(ModelError::BadEdge(format!("self-loop on {:?}", nodes[src.0].name)));
            }
            if !seen.insert((src, dst)) {
                return Err(ModelError::BadEdge(format!(
                    "duplicate edge {:?} -> {:?}",
                    nodes[src.0].name, nodes[dst.0].name
                )));
            }
            if nodes[src.0].kind.is_utility() {
                return Err(ModelError::UtilityWithChild(nodes[src.0].name.clone()));
            }
            parents[dst.0].push(src);
            children[src.0].push(dst);
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }

        let graph = MaidGraph { agents, nodes, parents, children };
        if graph.topological_order().len() != graph.node_count() {
            return Err(ModelError::Cyclic);
        }
        Ok(graph)
    }

    /// Convenience constructor resolving node names in the edge list.
    pub fn from_names(
        agents: &[&str],
        nodes: Vec<NodeDecl>,
        edges: &[(&str, &str)],
    ) -> Result<Self, ModelError> {
        let index: BTreeMap<&str, NodeId> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.name.as_str(), NodeId(i)))
            .collect();
        let mut resolved = Vec::new();
        for &(src, dst) in edges {
            let lookup = |name: &str| {
                index.get(name).copied().ok_or_else(|| ModelError::UnknownNode(name.to_string()))
            };
            resolved.push((lookup(src)?, lookup(dst)?));
        }
        MaidGraph::new(agents.iter().map(|a| a.to_string()).collect(), nodes, &resolved)
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn agent_name(&self, a: AgentId) -> &str {
        &self.agents[a.0]
    }

    pub fn agent_names(&self) -> &[String] {
        &self.agents
    }

    pub fn agent_by_name(&self, name: &str) -> Option<AgentId> {
        self.agents.iter().position(|a| a == name).map(AgentId)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn node(&self, id: NodeId) -> &NodeDecl {
        &self.nodes[id.0]
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.nodes[id.0].name
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.nodes[id.0].kind
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n.name == name).map(NodeId)
    }

    /// Parents in canonical (declaration index) order.
    pub fn parents(&self, id: NodeId) -> &[NodeId] {
        &self.parents[id.0]
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.children[id.0]
    }

    pub fn decisions(&self) -> Vec<NodeId> {
        self.node_ids().filter(|&n| self.kind(n).is_decision()).collect()
    }

    pub fn utilities(&self) -> Vec<NodeId> {
        self.node_ids().filter(|&n| self.kind(n).is_utility()).collect()
    }

    pub fn decisions_of(&self, agent: AgentId) -> Vec<NodeId> {
        self.node_ids()
            .filter(|&n| self.kind(n) == NodeKind::Decision(agent))
            .collect()
    }

    pub fn utilities_of(&self, agent: AgentId) -> Vec<NodeId> {
        self.node_ids()
            .filter(|&n| self.kind(n) == NodeKind::Utility(agent))
            .collect()
    }

    /// Strict descendants of `id`.
    pub fn descendants(&self, id: NodeId) -> BTreeSet<NodeId> {
        let mut out = BTreeSet::new();
        let mut stack = self.children[id.0].clone();
        while let Some(n) = stack.pop() {
            if out.insert(n) {
                stack.extend_from_slice(&self.children[n.0]);
            }
        }
        out
    }

    /// Strict ancestors of `id`.
    pub fn ancestors(&self, id: NodeId) -> BTreeSet<NodeId> {
        let mut out = BTreeSet::new();
        let mut stack = self.parents[id.0].clone();
        while let Some(n) = stack.pop() {
            if out.insert(n) {
                stack.extend_from_slice(&self.parents[n.0]);
            }
        }
        out
    }

    /// The family of a node: the node itself plus its parents.
    pub fn family(&self, id: NodeId) -> BTreeSet<NodeId> {
        let mut out: BTreeSet<NodeId> = self.parents[id.0].iter().copied().collect();
        out.insert(id);
        out
    }

    /// Topological order, smallest node index first among the ready set
    /// (Kahn). Shorter than `node_count` iff the graph is cyclic.
    pub fn topological_order(&self) -> Vec<NodeId> {
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<NodeId> = self
            .node_ids()
            .filter(|n| indegree[n.0] == 0)
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(&n) = ready.iter().next() {
            ready.remove(&n);
            order.push(n);
            for &c in &self.children[n.0] {
                indegree[c.0] -= 1;
                if indegree[c.0] == 0 {
                    ready.insert(c);
                }
            }
        }
        order
    }
}

/// A node's value set: labels for chance and decision nodes, reals for
/// utility nodes (and for utility nodes recast as chance in subgames).
#[derive(Clone, PartialEq, Debug)]
pub enum Domain {
    Labels(Vec<String>),
    Reals(Vec<f64>),
}

impl Domain {
    pub fn labels(values: &[&str]) -> Self {
        Domain::Labels(values.iter().map(|v| v.to_string()).collect())
    }

    pub fn size(&self) -> usize {
        match self {
            Domain::Labels(v) => v.len(),
            Domain::Reals(v) => v.len(),
        }
    }

    /// Display label of a value.
    pub fn label(&self, idx: usize) -> String {
        match self {
            Domain::Labels(v) => v[idx].clone(),
            Domain::Reals(v) => format_real(v[idx]),
        }
    }

    pub fn index_of_label(&self, label: &str) -> Option<usize> {
        match self {
            Domain::Labels(v) => v.iter().position(|l| l == label),
            Domain::Reals(v) => v.iter().position(|r| format_real(*r) == label),
        }
    }

    /// The real value at `idx`, if this is a real-valued domain.
    pub fn real(&self, idx: usize) -> Option<f64> {
        match self {
            Domain::Reals(v) => Some(v[idx]),
            Domain::Labels(_) => None,
        }
    }

    fn validate(&self, name: &str) -> Result<(), ModelError> {
        if self.size() == 0 {
            return Err(ModelError::BadDomain(format!("empty domain on {name:?}")));
        }
        match self {
            Domain::Labels(v) => {
                let mut seen = BTreeSet::new();
                for l in v {
                    if !seen.insert(l.clone()) {
                        return Err(ModelError::BadDomain(format!(
                            "duplicate value {l:?} on {name:?}"
                        )));
                    }
                }
            }
            Domain::Reals(v) => {
                for (i, r) in v.iter().enumerate() {
                    if !r.is_finite() {
                        return Err(ModelError::BadDomain(format!(
                            "non-finite value on {name:?}"
                        )));
                    }
                    if v[..i].contains(r) {
                        return Err(ModelError::BadDomain(format!(
                            "duplicate value {r} on {name:?}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Plain decimal rendering for real-valued domain labels.
pub fn format_real(v: f64) -> String {
    if v.abs() < 1e15 && v == (v as i64) as f64 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// A conditional probability table. Row `r` is the distribution over the
/// node's domain given the `r`-th parent assignment; rows are indexed by the
/// mixed-radix rank of the assignment over the node's canonical parent order.
#[derive(Clone, PartialEq, Debug)]
pub struct Cpd {
    pub rows: Vec<Vec<f64>>,
}

impl Cpd {
    pub fn new(rows: Vec<Vec<f64>>) -> Self {
        Cpd { rows }
    }

    /// A table that puts probability one on a chosen value per row.
    pub fn deterministic(choices: &[usize], domain_size: usize) -> Self {
        let rows = choices
            .iter()
            .map(|&c| {
                let mut row = alloc::vec![0.0; domain_size];
                row[c] = 1.0;
                row
            })
            .collect();
        Cpd { rows }
    }

    /// A table with the uniform distribution in every row.
    pub fn uniform(row_count: usize, domain_size: usize) -> Self {
        let p = 1.0 / domain_size as f64;
        Cpd { rows: alloc::vec![alloc::vec![p; domain_size]; row_count] }
    }

    fn validate(&self, name: &str, rows: usize, width: usize, deterministic: bool) -> Result<(), ModelError> {
        if self.rows.len() != rows {
            return Err(ModelError::BadCpd(format!(
                "{name:?} has {} rows, expected {rows}",
                self.rows.len()
            )));
        }
        for (r, row) in self.rows.iter().enumerate() {
            if row.len() != width {
                return Err(ModelError::BadCpd(format!(
                    "{name:?} row {r} has {} entries, expected {width}",
                    row.len()
                )));
            }
            let mut sum = 0.0;
            for &p in row {
                if !(p.is_finite() && (-TOL..=1.0 + TOL).contains(&p)) {
                    return Err(ModelError::BadCpd(format!(
                        "{name:?} row {r} has entry {p} outside [0, 1]"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > TOL {
                return Err(ModelError::BadCpd(format!("{name:?} row {r} sums to {sum}")));
            }
            if deterministic {
                let ones = row.iter().filter(|&&p| (p - 1.0).abs() <= TOL).count();
                let zeros = row.iter().filter(|&&p| p.abs() <= TOL).count();
                if ones != 1 || ones + zeros != row.len() {
                    return Err(ModelError::BadCpd(format!(
                        "utility {name:?} row {r} is not deterministic"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Index of the value with probability one in row `r` (for deterministic
    /// tables).
    pub fn determined_value(&self, r: usize) -> usize {
        self.rows[r]
            .iter()
            .position(|&p| (p - 1.0).abs() <= TOL)
            .expect("row is not deterministic")
    }
}

/// A parametrized MAID: domains for every node and CPDs for every chance and
/// utility node. Utility CPDs must be deterministic and utility domains real.
#[derive(Clone, PartialEq, Debug)]
pub struct Maim {
    graph: MaidGraph,
    domains: Vec<Domain>,
    cpds: BTreeMap<NodeId, Cpd>,
}

impl Maim {
    pub fn new(
        graph: MaidGraph,
        domains: Vec<Domain>,
        cpds: BTreeMap<NodeId, Cpd>,
    ) -> Result<Self, ModelError> {
        if domains.len() != graph.node_count() {
            return Err(ModelError::BadDomain(format!(
                "{} domains for {} nodes",
                domains.len(),
                graph.node_count()
            )));
        }
        for id in graph.node_ids() {
            let name = graph.name(id);
            domains[id.0].validate(name)?;
            let kind = graph.kind(id);
            if kind.is_utility() && !matches!(domains[id.0], Domain::Reals(_)) {
                return Err(ModelError::BadDomain(format!(
                    "utility {name:?} needs a real-valued domain"
                )));
            }
        }
        let model = Maim { graph, domains, cpds };
        for id in model.graph.node_ids() {
            let name = model.graph.name(id);
            let kind = model.graph.kind(id);
            match model.cpds.get(&id) {
                None if !kind.is_decision() => return Err(ModelError::MissingCpd(name.into())),
                Some(_) if kind.is_decision() => {
                    return Err(ModelError::UnexpectedCpd(name.into()))
                }
                Some(cpd) => cpd.validate(
                    name,
                    model.context_count(id),
                    model.domains[id.0].size(),
                    kind.is_utility(),
                )?,
                None => {}
            }
        }
        Ok(model)
    }

    pub fn graph(&self) -> &MaidGraph {
        &self.graph
    }

    pub fn domain(&self, id: NodeId) -> &Domain {
        &self.domains[id.0]
    }

    pub fn domains(&self) -> &[Domain] {
        &self.domains
    }

    pub fn cpd(&self, id: NodeId) -> Option<&Cpd> {
        self.cpds.get(&id)
    }

    pub fn cpds(&self) -> &BTreeMap<NodeId, Cpd> {
        &self.cpds
    }

    pub fn domain_size(&self, id: NodeId) -> usize {
        self.domains[id.0].size()
    }

    /// Cardinalities of a node's parents in canonical order.
    pub fn parent_cards(&self, id: NodeId) -> Vec<usize> {
        self.graph.parents(id).iter().map(|p| self.domain_size(*p)).collect()
    }

    /// Number of decision (or CPD) contexts of a node: the number of joint
    /// parent assignments.
    pub fn context_count(&self, id: NodeId) -> usize {
        radix::count(&self.parent_cards(id))
    }

    /// The parent assignment behind context row `row` of `id`.
    pub fn context_assignment(&self, id: NodeId, row: usize) -> Vec<(NodeId, usize)> {
        let values = radix::unpack(&self.parent_cards(id), row);
        self.graph.parents(id).iter().copied().zip(values).collect()
    }

    /// The context row of `id` selected by `assignment`, which must cover all
    /// parents of `id` (extra pairs are ignored).
    pub fn context_row(&self, id: NodeId, assignment: &BTreeMap<NodeId, usize>) -> usize {
        let values: Vec<usize> = self
            .graph
            .parents(id)
            .iter()
            .map(|p| *assignment.get(p).expect("assignment misses a parent"))
            .collect();
        radix::pack(&self.parent_cards(id), &values)
    }

    /// Human-readable rendering of a context row, e.g. `D1=e, X=h`.
    pub fn context_label(&self, id: NodeId, row: usize) -> String {
        let parts: Vec<String> = self
            .context_assignment(id, row)
            .iter()
            .map(|&(p, v)| format!("{}={}", self.graph.name(p), self.domains[p.0].label(v)))
            .collect();
        parts.join(", ")
    }

    /// The utility value determined at context row `row` of utility node `u`.
    pub fn utility_value(&self, u: NodeId, row: usize) -> f64 {
        let cpd = &self.cpds[&u];
        self.domains[u.0]
            .real(cpd.determined_value(row))
            .expect("utility domain is real-valued")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn agents() -> Vec<String> {
        vec!["1".into(), "2".into()]
    }

    #[test]
    fn rejects_cycles() {
        let nodes = vec![NodeDecl::chance("A"), NodeDecl::chance("B")];
        let err = MaidGraph::new(agents(), nodes, &[(NodeId(0), NodeId(1)), (NodeId(1), NodeId(0))])
            .unwrap_err();
        assert_eq!(err, ModelError::Cyclic);
    }

    #[test]
    fn rejects_utility_children() {
        let nodes = vec![NodeDecl::utility("U", AgentId(0)), NodeDecl::chance("A")];
        let err = MaidGraph::new(agents(), nodes, &[(NodeId(0), NodeId(1))]).unwrap_err();
        assert_eq!(err, ModelError::UtilityWithChild("U".into()));
    }

    #[test]
    fn canonical_parent_order() {
        let nodes = vec![NodeDecl::chance("A"), NodeDecl::chance("B"), NodeDecl::chance("C")];
        let g = MaidGraph::new(agents(), nodes, &[(NodeId(1), NodeId(2)), (NodeId(0), NodeId(2))])
            .unwrap();
        assert_eq!(g.parents(NodeId(2)), &[NodeId(0), NodeId(1)]);
        assert_eq!(g.topological_order(), vec![NodeId(0), NodeId(1), NodeId(2)]);
    }

    #[test]
    fn maim_validation_catches_bad_rows() {
        let nodes = vec![NodeDecl::chance("A")];
        let g = MaidGraph::new(agents(), nodes, &[]).unwrap();
        let bad = Maim::new(
            g.clone(),
            vec![Domain::labels(&["x", "y"])],
            BTreeMap::from([(NodeId(0), Cpd::new(vec![vec![0.7, 0.7]]))]),
        );
        assert!(matches!(bad, Err(ModelError::BadCpd(_))));
        let ok = Maim::new(
            g,
            vec![Domain::labels(&["x", "y"])],
            BTreeMap::from([(NodeId(0), Cpd::new(vec![vec![0.7, 0.3]]))]),
        );
        assert!(ok.is_ok());
    }

    #[test]
    fn utility_rows_must_be_deterministic() {
        let nodes = vec![NodeDecl::utility("U", AgentId(0))];
        let g = MaidGraph::new(agents(), nodes, &[]).unwrap();
        let bad = Maim::new(
            g.clone(),
            vec![Domain::Reals(vec![0.0, 1.0])],
            BTreeMap::from([(NodeId(0), Cpd::new(vec![vec![0.5, 0.5]]))]),
        );
        assert!(matches!(bad, Err(ModelError::BadCpd(_))));
        let ok = Maim::new(
            g,
            vec![Domain::Reals(vec![0.0, 1.0])],
            BTreeMap::from([(NodeId(0), Cpd::deterministic(&[1], 2))]),
        );
        assert_eq!(ok.unwrap().utility_value(NodeId(0), 0), 1.0);
    }
}
