//! Text renderings: DOT drawings, analysis tables, and the profile table
//! format that `solve` prints and tests re-parse.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use maid_core::infer;
use maid_core::model::{AgentId, Domain, Maim, MaidGraph, NodeId};
use maid_core::policy::PureProfile;
use maid_core::relevance::{CondensedRelevanceGraph, RelevanceGraph};

/// Fixed fill palette, one entry per agent index (cycling).
const PALETTE: [&str; 8] = [
    "#a6cee3", "#b2df8a", "#fb9a99", "#fdbf6f", "#cab2d6", "#ffff99", "#1f78b4", "#33a02c",
];

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// One digraph showing both structures: clusters are the condensed
/// components, edges are the relevance edges between decisions.
pub fn analyze_dot(
    graph: &MaidGraph,
    rel: &RelevanceGraph,
    cond: &CondensedRelevanceGraph,
) -> String {
    let mut out = String::from("digraph relevance {\n");
    for (k, comp) in cond.components.iter().enumerate() {
        let _ = writeln!(out, "  subgraph cluster_{k} {{");
        let _ = writeln!(out, "    label={};", quote(&format!("component {k}")));
        for &d in comp {
            let _ = writeln!(out, "    {};", quote(graph.name(d)));
        }
        out.push_str("  }\n");
    }
    for &(from, to) in &rel.edges {
        let _ = writeln!(out, "  {} -> {};", quote(graph.name(from)), quote(graph.name(to)));
    }
    out.push_str("}\n");
    out
}

pub fn analyze_table(
    graph: &MaidGraph,
    rel: &RelevanceGraph,
    cond: &CondensedRelevanceGraph,
) -> String {
    let names = |ids: &[NodeId]| -> String {
        ids.iter().map(|&d| graph.name(d)).collect::<Vec<_>>().join(", ")
    };
    let count = |n: usize, what: &str| -> String {
        format!("{n} {what}{}", if n == 1 { "" } else { "s" })
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        "relevance graph: {}, {}",
        count(rel.decisions.len(), "decision"),
        count(rel.edges.len(), "edge")
    );
    for &(from, to) in &rel.edges {
        let _ = writeln!(out, "  {} -> {}", graph.name(from), graph.name(to));
    }
    let _ = writeln!(
        out,
        "condensed graph: {}, {}",
        count(cond.components.len(), "component"),
        count(cond.edges.len(), "edge")
    );
    for (k, comp) in cond.components.iter().enumerate() {
        let _ = writeln!(out, "  [{k}] {}", names(comp));
    }
    for &(from, to) in &cond.edges {
        let _ = writeln!(out, "  [{from}] -> [{to}]");
    }
    out
}

/// Full model drawing. Shapes by kind (ellipse / box / diamond); decision
/// and utility nodes carry their owner both as a fill colour and as an
/// `agent` attribute so downstream tooling can restyle per agent.
pub fn model_dot(graph: &MaidGraph) -> String {
    let agents = graph.agent_names();
    let mut out = String::from("digraph maid {\n  rankdir=TB;\n");
    for id in graph.node_ids() {
        let kind = graph.kind(id);
        let shape = if kind.is_decision() {
            "box"
        } else if kind.is_utility() {
            "diamond"
        } else {
            "ellipse"
        };
        let mut attrs = format!("shape={shape}, style=filled");
        match kind.owner() {
            Some(a) => {
                let _ = write!(
                    attrs,
                    ", fillcolor={}, agent={}",
                    quote(PALETTE[a.0 % PALETTE.len()]),
                    quote(&agents[a.0])
                );
            }
            None => {
                let _ = write!(attrs, ", fillcolor={}", quote("#eeeeee"));
            }
        }
        let _ = writeln!(out, "  {} [{attrs}];", quote(graph.name(id)));
    }
    for id in graph.node_ids() {
        for &p in graph.parents(id) {
            let _ = writeln!(out, "  {} -> {};", quote(graph.name(p)), quote(graph.name(id)));
        }
    }
    out.push_str("}\n");
    out
}

fn context_label(model: &Maim, decision: NodeId, row: usize) -> String {
    let parts: Vec<String> = model
        .context_assignment(decision, row)
        .into_iter()
        .map(|(p, v)| format!("{}={}", model.graph().name(p), model.domain(p).label(v)))
        .collect();
    if parts.is_empty() {
        "-".to_string()
    } else {
        parts.join(", ")
    }
}

/// Profile table: one `decision / context / action` line per decision
/// context, every context listed.
pub fn profile_table(model: &Maim, profile: &PureProfile) -> String {
    let mut out = String::new();
    for (&d, rule) in &profile.choices {
        for (row, &a) in rule.iter().enumerate() {
            let _ = writeln!(
                out,
                "{} / {} / {}",
                model.graph().name(d),
                context_label(model, d, row),
                model.domain(d).label(a)
            );
        }
    }
    out
}

/// Inverse of `profile_table`; `#` lines are comments. Returns an error
/// string naming the offending line.
pub fn parse_profile(model: &Maim, text: &str) -> Result<PureProfile, String> {
    let graph = model.graph();
    let mut choices: BTreeMap<NodeId, Vec<Option<usize>>> = graph
        .decisions()
        .into_iter()
        .map(|d| (d, vec![None; model.context_count(d)]))
        .collect();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = format!("line {}", lineno + 1);
        let mut fields = line.split(" / ");
        let (name, ctx, action) = match (fields.next(), fields.next(), fields.next(), fields.next())
        {
            (Some(a), Some(b), Some(c), None) => (a, b, c),
            _ => return Err(format!("{at}: expected `decision / context / action`")),
        };
        let d = graph
            .node_ids()
            .find(|&n| graph.name(n) == name)
            .ok_or_else(|| format!("{at}: unknown decision {name:?}"))?;
        if !graph.kind(d).is_decision() {
            return Err(format!("{at}: node {name:?} is not a decision"));
        }
        let parents = graph.parents(d);
        let mut values: BTreeMap<NodeId, usize> = BTreeMap::new();
        if ctx != "-" {
            for part in ctx.split(", ") {
                let (pname, label) = part
                    .split_once('=')
                    .ok_or_else(|| format!("{at}: bad context entry {part:?}"))?;
                let p = parents
                    .iter()
                    .copied()
                    .find(|&p| graph.name(p) == pname)
                    .ok_or_else(|| format!("{at}: {pname:?} is not a parent of {name:?}"))?;
                let v = model
                    .domain(p)
                    .index_of_label(label)
                    .ok_or_else(|| format!("{at}: {label:?} is not a value of {pname:?}"))?;
                values.insert(p, v);
            }
        }
        if values.len() != parents.len() {
            return Err(format!("{at}: context must assign every parent of {name:?}"));
        }
        let mut row = 0usize;
        for &p in parents {
            row = row * model.domain(p).size() + values[&p];
        }
        let a = model
            .domain(d)
            .index_of_label(action)
            .ok_or_else(|| format!("{at}: {action:?} is not an action of {name:?}"))?;
        choices.get_mut(&d).expect("decision known")[row] = Some(a);
    }
    let mut profile = PureProfile::default();
    for (d, rows) in choices {
        let rows: Result<Vec<usize>, String> = rows
            .into_iter()
            .enumerate()
            .map(|(r, v)| {
                v.ok_or_else(|| {
                    format!("decision {:?}: no line for context #{r}", graph.name(d))
                })
            })
            .collect();
        profile.set(d, rows?);
    }
    Ok(profile)
}

/// `5, 3` style utility listing in agent order.
pub fn utilities_line(model: &Maim, profile: &PureProfile) -> String {
    let policy = profile.to_policy(model);
    let vals: Vec<String> = (0..model.graph().agent_names().len())
        .map(|a| {
            let eu = infer::expected_utility(model, &policy, AgentId(a))
                .expect("full profile evaluates");
            format!("{eu}")
        })
        .collect();
    vals.join(", ")
}

/// Subgame base listing used by the `subgames` command.
pub fn base_line(graph: &MaidGraph, nodes: &[NodeId], proper: bool) -> String {
    let names: Vec<&str> = nodes.iter().map(|&n| graph.name(n)).collect();
    format!("{}{}", names.join(", "), if proper { " (proper)" } else { " (full)" })
}

/// Value labels joined for diagnostics.
pub fn domain_summary(domain: &Domain) -> String {
    (0..domain.size()).map(|v| domain.label(v)).collect::<Vec<_>>().join(", ")
}
