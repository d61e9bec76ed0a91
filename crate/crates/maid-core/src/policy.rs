//! Decision rules, policy profiles, and the induced Bayesian network.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::model::{Cpd, Maim, ModelError, NodeId};
use crate::TOL;

/// A behavioural decision rule: one distribution over the decision's domain
/// per context row, with the same row convention as [`Cpd`].
#[derive(Clone, PartialEq, Debug)]
pub struct DecisionRule {
    pub rows: Vec<Vec<f64>>,
}

impl DecisionRule {
    pub fn uniform(model: &Maim, decision: NodeId) -> Self {
        let cpd = Cpd::uniform(model.context_count(decision), model.domain_size(decision));
        DecisionRule { rows: cpd.rows }
    }

    /// Pure rule choosing `choices[row]` at each context row.
    pub fn pure(choices: &[usize], domain_size: usize) -> Self {
        DecisionRule { rows: Cpd::deterministic(choices, domain_size).rows }
    }

    pub fn validate(&self, model: &Maim, decision: NodeId) -> Result<(), ModelError> {
        let name = model.graph().name(decision);
        if self.rows.len() != model.context_count(decision) {
            return Err(ModelError::BadRule(format!(
                "{name:?} has {} rows, expected {}",
                self.rows.len(),
                model.context_count(decision)
            )));
        }
        for (r, row) in self.rows.iter().enumerate() {
            if row.len() != model.domain_size(decision) {
                return Err(ModelError::BadRule(format!("{name:?} row {r} has wrong width")));
            }
            let mut sum = 0.0;
            for &p in row {
                if !(p.is_finite() && (-TOL..=1.0 + TOL).contains(&p)) {
                    return Err(ModelError::BadRule(format!("{name:?} row {r} entry {p}")));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > TOL {
                return Err(ModelError::BadRule(format!("{name:?} row {r} sums to {sum}")));
            }
        }
        Ok(())
    }
}

/// An assignment of behavioural rules to some subset of the decisions.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct PolicyProfile {
    pub rules: BTreeMap<NodeId, DecisionRule>,
}

impl PolicyProfile {
    pub fn new() -> Self {
        PolicyProfile::default()
    }

    /// Uniform rules at every decision of the model.
    pub fn uniform(model: &Maim) -> Self {
        let rules = model
            .graph()
            .decisions()
            .into_iter()
            .map(|d| (d, DecisionRule::uniform(model, d)))
            .collect();
        PolicyProfile { rules }
    }

    pub fn set(&mut self, decision: NodeId, rule: DecisionRule) {
        self.rules.insert(decision, rule);
    }

    /// True when the profile assigns a rule to every decision of `model`.
    pub fn is_full(&self, model: &Maim) -> bool {
        model.graph().decisions().iter().all(|d| self.rules.contains_key(d))
    }

    pub fn validate(&self, model: &Maim) -> Result<(), ModelError> {
        for (d, rule) in &self.rules {
            if !model.graph().kind(*d).is_decision() {
                return Err(ModelError::BadRule(format!(
                    "{:?} is not a decision",
                    model.graph().name(*d)
                )));
            }
            rule.validate(model, *d)?;
        }
        Ok(())
    }

    /// This profile with `other`'s rules layered on top.
    pub fn overridden_by(&self, other: &PolicyProfile) -> PolicyProfile {
        let mut rules = self.rules.clone();
        for (d, rule) in &other.rules {
            rules.insert(*d, rule.clone());
        }
        PolicyProfile { rules }
    }
}

/// A pure (deterministic) policy assignment: a chosen action per context row
/// for each covered decision. May cover any subset of the decisions; ops that
/// need a full profile validate coverage.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct PureProfile {
    pub choices: BTreeMap<NodeId, Vec<usize>>,
}

impl PureProfile {
    pub fn new() -> Self {
        PureProfile::default()
    }

    pub fn set(&mut self, decision: NodeId, choices: Vec<usize>) {
        self.choices.insert(decision, choices);
    }

    pub fn validate(&self, model: &Maim) -> Result<(), ModelError> {
        for (d, choices) in &self.choices {
            let name = model.graph().name(*d);
            if !model.graph().kind(*d).is_decision() {
                return Err(ModelError::BadRule(format!("{name:?} is not a decision")));
            }
            if choices.len() != model.context_count(*d) {
                return Err(ModelError::BadRule(format!(
                    "{name:?} has {} choices, expected {}",
                    choices.len(),
                    model.context_count(*d)
                )));
            }
            if choices.iter().any(|&c| c >= model.domain_size(*d)) {
                return Err(ModelError::BadRule(format!("{name:?} choice out of range")));
            }
        }
        Ok(())
    }

    pub fn to_policy(&self, model: &Maim) -> PolicyProfile {
        let rules = self
            .choices
            .iter()
            .map(|(d, choices)| (*d, DecisionRule::pure(choices, model.domain_size(*d))))
            .collect();
        PolicyProfile { rules }
    }

    /// The sub-profile covering only `decisions`.
    pub fn restricted_to(&self, decisions: &[NodeId]) -> PureProfile {
        let choices = self
            .choices
            .iter()
            .filter(|(d, _)| decisions.contains(d))
            .map(|(d, c)| (*d, c.clone()))
            .collect();
        PureProfile { choices }
    }

    /// This profile with `other`'s choices layered on top.
    pub fn overridden_by(&self, other: &PureProfile) -> PureProfile {
        let mut choices = self.choices.clone();
        for (d, c) in &other.choices {
            choices.insert(*d, c.clone());
        }
        PureProfile { choices }
    }
}

/// The Bayesian network `M(pi)` induced by a full policy profile: every node
/// of the model carries a distribution.
#[derive(Clone, PartialEq, Debug)]
pub struct JointDistribution {
    model: Maim,
    rules: BTreeMap<NodeId, DecisionRule>,
}

/// Converts every decision carrying a rule in `profile` into a chance node
/// with that rule as its CPD, leaving the remaining decisions free. This is
/// the `M(pi)` surgery of generalized backward induction: already-solved
/// decisions turn into chance nodes of the model handed to the next stage.
pub fn with_rules_fixed(model: &Maim, profile: &PolicyProfile) -> Result<Maim, ModelError> {
    profile.validate(model)?;
    let graph = model.graph();
    let nodes: Vec<crate::model::NodeDecl> = graph
        .node_ids()
        .map(|id| {
            let kind = if profile.rules.contains_key(&id) {
                crate::model::NodeKind::Chance
            } else {
                graph.kind(id)
            };
            crate::model::NodeDecl { name: graph.name(id).into(), kind }
        })
        .collect();
    let mut edges = Vec::new();
    for id in graph.node_ids() {
        for &c in graph.children(id) {
            edges.push((id, c));
        }
    }
    let fixed_graph =
        crate::model::MaidGraph::new(graph.agent_names().to_vec(), nodes, &edges)?;
    let mut cpds = model.cpds().clone();
    for (&d, rule) in &profile.rules {
        cpds.insert(d, Cpd::new(rule.rows.clone()));
    }
    Maim::new(fixed_graph, model.domains().to_vec(), cpds)
}

/// Installs a full profile into the model, yielding a proper Bayesian
/// network.
pub fn induce(model: &Maim, profile: &PolicyProfile) -> Result<JointDistribution, ModelError> {
    profile.validate(model)?;
    if !profile.is_full(model) {
        let missing = model
            .graph()
            .decisions()
            .into_iter()
            .find(|d| !profile.rules.contains_key(d))
            .map(|d| model.graph().name(d).into())
            .unwrap_or_else(|| alloc::string::String::from("?"));
        return Err(ModelError::IncompleteProfile(missing));
    }
    Ok(JointDistribution { model: model.clone(), rules: profile.rules.clone() })
}

impl JointDistribution {
    pub fn model(&self) -> &Maim {
        &self.model
    }

    /// The distribution rows for `id`, whatever its kind.
    pub fn table(&self, id: NodeId) -> &[Vec<f64>] {
        match self.rules.get(&id) {
            Some(rule) => &rule.rows,
            None => &self.model.cpd(id).expect("non-decision node has a CPD").rows,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Domain, MaidGraph, NodeDecl, AgentId};
    use alloc::vec;

    fn coin_and_choice() -> Maim {
        let g = MaidGraph::from_names(
            &["1"],
            vec![
                NodeDecl::chance("X"),
                NodeDecl::decision("D", AgentId(0)),
                NodeDecl::utility("U", AgentId(0)),
            ],
            &[("X", "D"), ("X", "U"), ("D", "U")],
        )
        .unwrap();
        let cpds = BTreeMap::from([
            (NodeId(0), Cpd::new(vec![vec![0.5, 0.5]])),
            (NodeId(2), Cpd::deterministic(&[0, 1, 1, 0], 2)),
        ]);
        Maim::new(
            g,
            vec![
                Domain::labels(&["h", "t"]),
                Domain::labels(&["h", "t"]),
                Domain::Reals(vec![0.0, 1.0]),
            ],
            cpds,
        )
        .unwrap()
    }

    #[test]
    fn induce_requires_full_profile() {
        let m = coin_and_choice();
        let err = induce(&m, &PolicyProfile::new()).unwrap_err();
        assert!(matches!(err, ModelError::IncompleteProfile(_)));
        let joint = induce(&m, &PolicyProfile::uniform(&m)).unwrap();
        assert_eq!(joint.table(NodeId(1)).len(), 2);
    }

    #[test]
    fn pure_profile_round_trip() {
        let m = coin_and_choice();
        let mut pure = PureProfile::new();
        pure.set(NodeId(1), vec![0, 1]);
        pure.validate(&m).unwrap();
        let policy = pure.to_policy(&m);
        assert_eq!(policy.rules[&NodeId(1)].rows[1], vec![0.0, 1.0]);
    }
}
