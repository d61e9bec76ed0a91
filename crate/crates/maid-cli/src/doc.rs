//! JSON document formats: the model schema (agents / nodes / cpds) and the
//! structured tree schema for game input. Both directions are supported so
//! converted and sliced models can be written back out.

use std::collections::BTreeMap;
use std::fmt;

use maid_core::efg::{Efg, EfgNode, EfgNodeId, EfgNodeKind, InfoSet, InterventionSet};
use maid_core::model::{AgentId, Cpd, Domain, MaidGraph, Maim, NodeDecl, NodeId};
use serde::{Deserialize, Serialize};

/// Schema or semantic failure while reading a document. Parse problems and
/// validation problems map to different exit codes.
#[derive(Debug)]
pub enum DocError {
    Parse(String),
    Validation(String),
}

impl fmt::Display for DocError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DocError::Parse(m) => write!(f, "parse error: {m}"),
            DocError::Validation(m) => write!(f, "invalid input: {m}"),
        }
    }
}

fn invalid(msg: impl Into<String>) -> DocError {
    DocError::Validation(msg.into())
}

/// Utility domains hold numbers and decision domains hold labels; chance
/// domains accept either (utilities recast as chance in emitted subgame
/// models keep their real values).
fn parse_domain(
    at: &str,
    kind: &str,
    values: &[serde_json::Value],
) -> Result<Domain, DocError> {
    let as_reals = |values: &[serde_json::Value]| -> Option<Vec<f64>> {
        values.iter().map(serde_json::Value::as_f64).collect()
    };
    let as_labels = |values: &[serde_json::Value]| -> Option<Vec<String>> {
        values.iter().map(|v| v.as_str().map(str::to_string)).collect()
    };
    match kind {
        "utility" => as_reals(values)
            .map(Domain::Reals)
            .ok_or_else(|| invalid(format!("{at}: utility domains hold numbers"))),
        "decision" => as_labels(values)
            .map(Domain::Labels)
            .ok_or_else(|| invalid(format!("{at}: decision domains hold labels"))),
        _ => as_labels(values)
            .map(Domain::Labels)
            .or_else(|| as_reals(values).map(Domain::Reals))
            .ok_or_else(|| {
                invalid(format!("{at}: chance domains hold labels or numbers, not a mix"))
            }),
    }
}

#[derive(Clone, Serialize, Deserialize)]
pub struct ModelDoc {
    pub agents: Vec<String>,
    pub nodes: Vec<NodeDoc>,
    #[serde(default)]
    pub cpds: Vec<CpdDoc>,
}

#[derive(Clone, Serialize, Deserialize)]
pub struct NodeDoc {
    pub name: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owner: Option<String>,
    #[serde(default)]
    pub parents: Vec<String>,
    pub domain: Vec<serde_json::Value>,
}

#[derive(Clone, Serialize, Deserialize)]
pub struct CpdDoc {
    pub node: String,
    pub rows: Vec<RowDoc>,
}

#[derive(Clone, Serialize, Deserialize)]
pub struct RowDoc {
    #[serde(default)]
    pub context: BTreeMap<String, String>,
    pub dist: BTreeMap<String, f64>,
}

impl ModelDoc {
    pub fn parse(text: &str) -> Result<ModelDoc, DocError> {
        serde_json::from_str(text).map_err(|e| DocError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("documents serialize");
        out.push('\n');
        out
    }

    /// Builds and validates the model. Every message names the node and the
    /// violated rule.
    pub fn to_model(&self) -> Result<Maim, DocError> {
        let agent_of = |name: &str, at: &str| -> Result<AgentId, DocError> {
            self.agents
                .iter()
                .position(|a| a == name)
                .map(AgentId)
                .ok_or_else(|| invalid(format!("{at}: unknown agent {name:?}")))
        };

        let mut decls = Vec::with_capacity(self.nodes.len());
        let mut domains = Vec::with_capacity(self.nodes.len());
        let mut edges: Vec<(String, String)> = Vec::new();
        for nd in &self.nodes {
            let at = format!("node {:?}", nd.name);
            let decl = match nd.kind.as_str() {
                "chance" => {
                    if let Some(o) = &nd.owner {
                        return Err(invalid(format!(
                            "{at}: chance nodes have no owner (found {o:?})"
                        )));
                    }
                    NodeDecl::chance(&nd.name)
                }
                "decision" | "utility" => {
                    let owner = nd.owner.as_deref().ok_or_else(|| {
                        invalid(format!("{at}: {} nodes need an owner", nd.kind))
                    })?;
                    let owner = agent_of(owner, &at)?;
                    if nd.kind == "decision" {
                        NodeDecl::decision(&nd.name, owner)
                    } else {
                        NodeDecl::utility(&nd.name, owner)
                    }
                }
                other => {
                    return Err(invalid(format!(
                        "{at}: kind must be chance, decision, or utility (found {other:?})"
                    )))
                }
            };
            let domain = parse_domain(&at, &nd.kind, &nd.domain)?;
            decls.push(decl);
            domains.push(domain);
            for p in &nd.parents {
                edges.push((p.clone(), nd.name.clone()));
            }
        }
        let edge_refs: Vec<(&str, &str)> =
            edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let graph = MaidGraph::from_names(
            &self.agents.iter().map(String::as_str).collect::<Vec<_>>(),
            decls,
            &edge_refs,
        )
        .map_err(|e| invalid(e.to_string()))?;

        let name_to_id = |name: &str| -> Option<NodeId> {
            graph.node_ids().find(|&n| graph.name(n) == name)
        };
        let mut cpds: BTreeMap<NodeId, Cpd> = BTreeMap::new();
        for cpd in &self.cpds {
            let at = format!("node {:?}", cpd.node);
            let id = name_to_id(&cpd.node)
                .ok_or_else(|| invalid(format!("{at}: cpd for an unknown node")))?;
            if graph.kind(id).is_decision() {
                return Err(invalid(format!("{at}: decisions carry no cpd")));
            }
            if cpds.contains_key(&id) {
                return Err(invalid(format!("{at}: duplicate cpd")));
            }
            let parents = graph.parents(id);
            let cards: Vec<usize> = parents.iter().map(|&p| domains[p.0].size()).collect();
            let row_count: usize = cards.iter().product();
            let width = domains[id.0].size();
            let mut rows: Vec<Option<Vec<f64>>> = vec![None; row_count];
            for (k, row) in cpd.rows.iter().enumerate() {
                let at = format!("{at}: row {k}");
                let mut packed = 0usize;
                for (&p, &card) in parents.iter().zip(&cards) {
                    let pname = graph.name(p);
                    let label = row.context.get(pname).ok_or_else(|| {
                        invalid(format!("{at}: context misses parent {pname:?}"))
                    })?;
                    let v = domains[p.0].index_of_label(label).ok_or_else(|| {
                        invalid(format!(
                            "{at}: {label:?} is not a value of parent {pname:?}"
                        ))
                    })?;
                    packed = packed * card + v;
                }
                for key in row.context.keys() {
                    if !parents.iter().any(|&p| graph.name(p) == key) {
                        return Err(invalid(format!(
                            "{at}: context names {key:?}, which is not a parent"
                        )));
                    }
                }
                let mut dist = vec![0.0; width];
                for (label, &p) in &row.dist {
                    let v = domains[id.0].index_of_label(label).ok_or_else(|| {
                        invalid(format!("{at}: {label:?} is not a domain value"))
                    })?;
                    dist[v] = p;
                }
                if rows[packed].replace(dist).is_some() {
                    return Err(invalid(format!("{at}: duplicate context")));
                }
            }
            let rows: Result<Vec<Vec<f64>>, DocError> = rows
                .into_iter()
                .enumerate()
                .map(|(r, row)| {
                    row.ok_or_else(|| {
                        invalid(format!("{at}: no row for context #{r} (all contexts need one)"))
                    })
                })
                .collect();
            cpds.insert(id, Cpd::new(rows?));
        }
        Maim::new(graph, domains, cpds).map_err(|e| invalid(e.to_string()))
    }

    /// The graph alone, ignoring any tables: enough for the structural
    /// commands.
    pub fn to_graph(&self) -> Result<MaidGraph, DocError> {
        let doc = self;
        let mut decls = Vec::with_capacity(doc.nodes.len());
        let mut edges: Vec<(String, String)> = Vec::new();
        for nd in &doc.nodes {
            let at = format!("node {:?}", nd.name);
            let decl = match nd.kind.as_str() {
                "chance" => NodeDecl::chance(&nd.name),
                "decision" | "utility" => {
                    let owner = nd.owner.as_deref().ok_or_else(|| {
                        invalid(format!("{at}: {} nodes need an owner", nd.kind))
                    })?;
                    let owner = doc
                        .agents
                        .iter()
                        .position(|a| a == owner)
                        .map(AgentId)
                        .ok_or_else(|| invalid(format!("{at}: unknown agent {owner:?}")))?;
                    if nd.kind == "decision" {
                        NodeDecl::decision(&nd.name, owner)
                    } else {
                        NodeDecl::utility(&nd.name, owner)
                    }
                }
                other => {
                    return Err(invalid(format!(
                        "{at}: kind must be chance, decision, or utility (found {other:?})"
                    )))
                }
            };
            decls.push(decl);
            for p in &nd.parents {
                edges.push((p.clone(), nd.name.clone()));
            }
        }
        let edge_refs: Vec<(&str, &str)> =
            edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        MaidGraph::from_names(
            &doc.agents.iter().map(String::as_str).collect::<Vec<_>>(),
            decls,
            &edge_refs,
        )
        .map_err(|e| invalid(e.to_string()))
    }

    pub fn from_model(model: &Maim) -> ModelDoc {
        let graph = model.graph();
        let nodes = graph
            .node_ids()
            .map(|id| {
                let kind = graph.kind(id);
                let domain = match model.domain(id) {
                    Domain::Labels(labels) => {
                        labels.iter().map(|l| serde_json::Value::from(l.as_str())).collect()
                    }
                    Domain::Reals(reals) => {
                        reals.iter().map(|&r| serde_json::Value::from(r)).collect()
                    }
                };
                NodeDoc {
                    name: graph.name(id).to_string(),
                    kind: if kind.is_decision() {
                        "decision".into()
                    } else if kind.is_utility() {
                        "utility".into()
                    } else {
                        "chance".into()
                    },
                    owner: kind.owner().map(|a| graph.agent_names()[a.0].clone()),
                    parents: graph
                        .parents(id)
                        .iter()
                        .map(|&p| graph.name(p).to_string())
                        .collect(),
                    domain,
                }
            })
            .collect();
        let cpds = model
            .cpds()
            .iter()
            .map(|(&id, cpd)| CpdDoc {
                node: graph.name(id).to_string(),
                rows: cpd
                    .rows
                    .iter()
                    .enumerate()
                    .map(|(r, dist)| RowDoc {
                        context: model
                            .context_assignment(id, r)
                            .into_iter()
                            .map(|(p, v)| {
                                (graph.name(p).to_string(), model.domain(p).label(v))
                            })
                            .collect(),
                        dist: dist
                            .iter()
                            .enumerate()
                            .filter(|&(_, &p)| p != 0.0)
                            .map(|(v, &p)| (model.domain(id).label(v), p))
                            .collect(),
                    })
                    .collect(),
            })
            .collect();
        ModelDoc { agents: graph.agent_names().to_vec(), nodes, cpds }
    }
}

#[derive(Clone, Serialize, Deserialize)]
pub struct GameDoc {
    pub title: String,
    pub agents: Vec<String>,
    pub nodes: Vec<GameNodeDoc>,
    #[serde(default)]
    pub isets: Vec<IsetDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub interventions: Vec<InterventionDoc>,
}

#[derive(Clone, Serialize, Deserialize)]
pub struct GameNodeDoc {
    pub kind: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iset: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub actions: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub payoffs: Vec<f64>,
}

#[derive(Clone, Serialize, Deserialize)]
pub struct IsetDoc {
    pub owner: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub label: String,
    pub actions: Vec<String>,
}

/// Intervention groups reference information sets (for decisions) or node
/// indices (for chance).
#[derive(Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InterventionDoc {
    Decisions { decisions: Vec<usize> },
    Chance { chance: Vec<usize> },
}

impl GameDoc {
    pub fn parse(text: &str) -> Result<GameDoc, DocError> {
        serde_json::from_str(text).map_err(|e| DocError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("documents serialize");
        out.push('\n');
        out
    }

    /// Builds and validates the arena game. Node order in the document is
    /// arena order; the first node is the root.
    pub fn to_game(&self) -> Result<Efg, DocError> {
        let isets: Vec<InfoSet> = self
            .isets
            .iter()
            .enumerate()
            .map(|(j, is)| {
                let owner = self
                    .agents
                    .iter()
                    .position(|a| *a == is.owner)
                    .map(AgentId)
                    .ok_or_else(|| {
                        invalid(format!("information set {j}: unknown owner {:?}", is.owner))
                    })?;
                Ok(InfoSet {
                    owner,
                    label: is.label.clone(),
                    actions: is.actions.clone(),
                    members: Vec::new(),
                })
            })
            .collect::<Result<_, DocError>>()?;

        let mut nodes = Vec::with_capacity(self.nodes.len());
        for (idx, nd) in self.nodes.iter().enumerate() {
            let at = format!("tree node {idx}");
            let kind = match nd.kind.as_str() {
                "chance" => {
                    if nd.actions.len() != nd.probs.len()
                        || nd.actions.len() != nd.children.len()
                    {
                        return Err(invalid(format!(
                            "{at}: actions, probs, and children must align"
                        )));
                    }
                    EfgNodeKind::Chance {
                        actions: nd.actions.clone(),
                        probs: nd.probs.clone(),
                        children: nd.children.iter().map(|&c| EfgNodeId(c)).collect(),
                    }
                }
                "personal" => {
                    let iset = nd.iset.ok_or_else(|| {
                        invalid(format!("{at}: personal nodes name an information set"))
                    })?;
                    EfgNodeKind::Personal {
                        iset,
                        children: nd.children.iter().map(|&c| EfgNodeId(c)).collect(),
                    }
                }
                "terminal" => EfgNodeKind::Terminal { payoffs: nd.payoffs.clone() },
                other => {
                    return Err(invalid(format!(
                        "{at}: kind must be chance, personal, or terminal (found {other:?})"
                    )))
                }
            };
            nodes.push(EfgNode { label: nd.label.clone(), parent: None, kind });
        }

        // Derive parent links and information-set membership.
        let mut game = Efg {
            title: self.title.clone(),
            agents: self.agents.clone(),
            nodes,
            isets,
            interventions: self
                .interventions
                .iter()
                .map(|iv| match iv {
                    InterventionDoc::Decisions { decisions } => {
                        InterventionSet::Decisions(decisions.clone())
                    }
                    InterventionDoc::Chance { chance } => InterventionSet::Chance(
                        chance.iter().map(|&n| EfgNodeId(n)).collect(),
                    ),
                })
                .collect(),
        };
        for idx in 0..game.nodes.len() {
            let children: Vec<EfgNodeId> = game.children(EfgNodeId(idx)).to_vec();
            for c in children {
                if c.0 >= game.nodes.len() {
                    return Err(invalid(format!(
                        "tree node {idx}: child {} does not exist",
                        c.0
                    )));
                }
                if game.nodes[c.0].parent.is_some() {
                    return Err(invalid(format!(
                        "tree node {}: referenced as a child twice",
                        c.0
                    )));
                }
                game.nodes[c.0].parent = Some(EfgNodeId(idx));
            }
        }
        for idx in 0..game.nodes.len() {
            if let EfgNodeKind::Personal { iset, .. } = game.nodes[idx].kind {
                if iset >= game.isets.len() {
                    return Err(invalid(format!(
                        "tree node {idx}: information set {iset} does not exist"
                    )));
                }
                game.isets[iset].members.push(EfgNodeId(idx));
            }
        }
        game.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(game)
    }

    pub fn from_game(game: &Efg) -> GameDoc {
        let nodes = game
            .nodes
            .iter()
            .map(|node| match &node.kind {
                EfgNodeKind::Chance { actions, probs, children } => GameNodeDoc {
                    kind: "chance".into(),
                    label: node.label.clone(),
                    iset: None,
                    actions: actions.clone(),
                    probs: probs.clone(),
                    children: children.iter().map(|c| c.0).collect(),
                    payoffs: Vec::new(),
                },
                EfgNodeKind::Personal { iset, children } => GameNodeDoc {
                    kind: "personal".into(),
                    label: node.label.clone(),
                    iset: Some(*iset),
                    actions: Vec::new(),
                    probs: Vec::new(),
                    children: children.iter().map(|c| c.0).collect(),
                    payoffs: Vec::new(),
                },
                EfgNodeKind::Terminal { payoffs } => GameNodeDoc {
                    kind: "terminal".into(),
                    label: node.label.clone(),
                    iset: None,
                    actions: Vec::new(),
                    probs: Vec::new(),
                    children: Vec::new(),
                    payoffs: payoffs.clone(),
                },
            })
            .collect();
        GameDoc {
            title: game.title.clone(),
            agents: game.agents.clone(),
            nodes,
            isets: game
                .isets
                .iter()
                .map(|is| IsetDoc {
                    owner: game.agents[is.owner.0].clone(),
                    label: is.label.clone(),
                    actions: is.actions.clone(),
                })
                .collect(),
            interventions: game
                .interventions
                .iter()
                .map(|iv| match iv {
                    InterventionSet::Decisions(v) => {
                        InterventionDoc::Decisions { decisions: v.clone() }
                    }
                    InterventionSet::Chance(v) => InterventionDoc::Chance {
                        chance: v.iter().map(|n| n.0).collect(),
                    },
                })
                .collect(),
        }
    }
}
