//! Exact inference on induced networks: marginals, expected utility,
//! context feasibility, and best responses.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::factor::Factor;
use crate::model::{Maim, ModelError, NodeId};
use crate::policy::{induce, JointDistribution, PolicyProfile, PureProfile};
use crate::radix;
use crate::TOL;

/// Default ceiling on enumerated pure policies or profiles.
pub const DEFAULT_ENUM_BOUND: usize = 1_000_000;

#[derive(Clone, PartialEq, Debug)]
pub enum InferError {
    Model(ModelError),
    BadQuery(String),
    /// Conditioning event has probability zero.
    ZeroProbabilityEvidence,
    /// An enumeration would exceed the configured bound.
    BoundExceeded(usize),
}

impl From<ModelError> for InferError {
    fn from(e: ModelError) -> Self {
        InferError::Model(e)
    }
}

impl core::fmt::Display for InferError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            InferError::Model(e) => write!(f, "{e}"),
            InferError::BadQuery(m) => write!(f, "bad query: {m}"),
            InferError::ZeroProbabilityEvidence => write!(f, "evidence has probability zero"),
            InferError::BoundExceeded(b) => write!(f, "enumeration exceeds bound {b}"),
        }
    }
}

/// A joint marginal over `targets` (canonical node order), indexed
/// lexicographically over their value tuples.
#[derive(Clone, PartialEq, Debug)]
pub struct MarginalTable {
    pub targets: Vec<NodeId>,
    pub cards: Vec<usize>,
    pub probs: Vec<f64>,
}

impl MarginalTable {
    /// Probability of one joint assignment; `values` follow `targets` order.
    pub fn prob(&self, values: &[usize]) -> f64 {
        self.probs[radix::pack(&self.cards, values)]
    }
}

/// Result of a conditional query: a table, or `Unconditioned` when the
/// evidence has probability zero.
#[derive(Clone, PartialEq, Debug)]
pub enum Marginal {
    Table(MarginalTable),
    Unconditioned,
}

impl Marginal {
    pub fn table(&self) -> Option<&MarginalTable> {
        match self {
            Marginal::Table(t) => Some(t),
            Marginal::Unconditioned => None,
        }
    }
}

/// Exact marginal of `targets` given `evidence`, by factor products with
/// variables eliminated in reverse topological order.
pub fn marginal(
    joint: &JointDistribution,
    targets: &[NodeId],
    evidence: &[(NodeId, usize)],
) -> Result<Marginal, InferError> {
    let model = joint.model();
    let graph = model.graph();
    let mut target_set: Vec<NodeId> = targets.to_vec();
    target_set.sort_unstable();
    target_set.dedup();
    if target_set.len() != targets.len() {
        return Err(InferError::BadQuery("duplicate target".into()));
    }
    let mut ev = BTreeMap::new();
    for &(n, v) in evidence {
        if n.0 >= graph.node_count() {
            return Err(InferError::BadQuery(format!("unknown node #{}", n.0)));
        }
        if v >= model.domain_size(n) {
            return Err(InferError::BadQuery(format!("value out of range on {:?}", graph.name(n))));
        }
        if ev.insert(n, v).is_some_and(|old| old != v) {
            return Err(InferError::BadQuery(format!(
                "conflicting evidence on {:?}",
                graph.name(n)
            )));
        }
        if target_set.contains(&n) {
            return Err(InferError::BadQuery(format!(
                "{:?} is both target and evidence",
                graph.name(n)
            )));
        }
    }
    for &t in &target_set {
        if t.0 >= graph.node_count() {
            return Err(InferError::BadQuery(format!("unknown node #{}", t.0)));
        }
    }

    let mut factors: Vec<Factor> = graph
        .node_ids()
        .map(|n| {
            let mut f = Factor::from_table(
                n,
                model.domain_size(n),
                graph.parents(n),
                &model.parent_cards(n),
                joint.table(n),
            );
            for (&e, &v) in &ev {
                f = f.reduce(e, v);
            }
            f
        })
        .collect();

    let mut order = graph.topological_order();
    order.reverse();
    for n in order {
        if target_set.contains(&n) || ev.contains_key(&n) {
            continue;
        }
        let (touching, rest): (Vec<Factor>, Vec<Factor>) =
            factors.into_iter().partition(|f| f.scope.contains(&n));
        let mut product = Factor::unit();
        for f in &touching {
            product = product.multiply(f);
        }
        factors = rest;
        factors.push(product.sum_out(n));
    }
    let mut product = Factor::unit();
    for f in &factors {
        product = product.multiply(f);
    }
    let z = product.total();
    if z <= 0.0 {
        return Ok(Marginal::Unconditioned);
    }
    // Scope is exactly the target set (evidence vars were reduced away).
    debug_assert_eq!(product.scope, target_set);
    let probs = product.values.iter().map(|v| v / z).collect();
    Ok(Marginal::Table(MarginalTable { targets: target_set, cards: product.cards, probs }))
}

/// Expected utility of `agent` under a full profile: the sum over the
/// agent's utility nodes of value times marginal probability.
pub fn expected_utility(
    model: &Maim,
    profile: &PolicyProfile,
    agent: crate::model::AgentId,
) -> Result<f64, InferError> {
    let joint = induce(model, profile)?;
    expected_utility_in(&joint, agent, &[])
}

/// Expected utility conditional on `evidence`; errors when the evidence has
/// probability zero.
pub fn conditional_expected_utility(
    model: &Maim,
    profile: &PolicyProfile,
    agent: crate::model::AgentId,
    evidence: &[(NodeId, usize)],
) -> Result<f64, InferError> {
    let joint = induce(model, profile)?;
    expected_utility_in(&joint, agent, evidence)
}

/// Expected utility inside an already-induced network.
pub fn expected_utility_in(
    joint: &JointDistribution,
    agent: crate::model::AgentId,
    evidence: &[(NodeId, usize)],
) -> Result<f64, InferError> {
    let model = joint.model();
    let mut total = 0.0;
    for u in model.graph().utilities_of(agent) {
        match marginal(joint, &[u], evidence)? {
            Marginal::Unconditioned => return Err(InferError::ZeroProbabilityEvidence),
            Marginal::Table(t) => {
                for (idx, &p) in t.probs.iter().enumerate() {
                    let value = model.domain(u).real(idx).ok_or_else(|| {
                        InferError::BadQuery(format!(
                            "utility {:?} has a non-real domain",
                            model.graph().name(u)
                        ))
                    })?;
                    total += value * p;
                }
            }
        }
    }
    Ok(total)
}

/// Classification of one decision context under fully mixed exploration.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct CtxStatus {
    /// Reachable with positive probability under some (equivalently, the
    /// uniform fully mixed) profile.
    pub feasible: bool,
    /// Infeasible, or every reachable completion gives value 0 at every
    /// utility node. Rules may be varied freely on null contexts without
    /// affecting any expected utility.
    pub null: bool,
}

/// Probability of reaching context `row` of `decision` under uniform rules.
pub fn context_probability(model: &Maim, decision: NodeId, row: usize) -> Result<f64, InferError> {
    let joint = induce(model, &PolicyProfile::uniform(model))?;
    let parents = model.graph().parents(decision).to_vec();
    if parents.is_empty() {
        return Ok(1.0);
    }
    let values = radix::unpack(&model.parent_cards(decision), row);
    match marginal(&joint, &parents, &[])? {
        Marginal::Unconditioned => Ok(0.0),
        Marginal::Table(t) => Ok(t.prob(&values)),
    }
}

/// True when some profile reaches context `row` of `decision` with positive
/// probability.
pub fn is_feasible_context(model: &Maim, decision: NodeId, row: usize) -> Result<bool, InferError> {
    Ok(context_probability(model, decision, row)? > 0.0)
}

/// True when the context is infeasible, or every completion reachable under
/// fully mixed rules yields value 0 at every utility node of every agent.
pub fn is_null_context(model: &Maim, decision: NodeId, row: usize) -> Result<bool, InferError> {
    let statuses = context_statuses(model, decision)?;
    Ok(statuses[row].null)
}

/// Status of every context row of `decision`.
pub fn context_statuses(model: &Maim, decision: NodeId) -> Result<Vec<CtxStatus>, InferError> {
    let joint = induce(model, &PolicyProfile::uniform(model))?;
    let parents = model.graph().parents(decision).to_vec();
    let cards = model.parent_cards(decision);
    let reach = if parents.is_empty() {
        None
    } else {
        match marginal(&joint, &parents, &[])? {
            Marginal::Unconditioned => unreachable!("unconditional query"),
            Marginal::Table(t) => Some(t),
        }
    };
    let utilities = model.graph().utilities();
    let mut out = Vec::new();
    for row in 0..model.context_count(decision) {
        let values = radix::unpack(&cards, row);
        let feasible = match &reach {
            None => true,
            Some(t) => t.prob(&values) > 0.0,
        };
        let mut null = !feasible;
        if feasible {
            let evidence: Vec<(NodeId, usize)> =
                parents.iter().copied().zip(values.iter().copied()).collect();
            null = true;
            'utils: for &u in &utilities {
                match marginal(&joint, &[u], &evidence)? {
                    Marginal::Unconditioned => unreachable!("context is feasible"),
                    Marginal::Table(t) => {
                        for (idx, &p) in t.probs.iter().enumerate() {
                            let v = model.domain(u).real(idx).unwrap_or(0.0);
                            if p > 0.0 && v.abs() > TOL {
                                null = false;
                                break 'utils;
                            }
                        }
                    }
                }
            }
        }
        out.push(CtxStatus { feasible, null });
    }
    Ok(out)
}

/// Enumerates pure assignments over the non-null context rows of the given
/// decisions (null rows pinned to the canonical first action), in
/// lexicographic order. Errors when the count would exceed `bound`.
pub fn enumerate_pure(
    model: &Maim,
    decisions: &[NodeId],
    bound: usize,
) -> Result<Vec<PureProfile>, InferError> {
    // Free slots: (decision, row) pairs that are non-null.
    let mut slots: Vec<(NodeId, usize)> = Vec::new();
    let mut base = PureProfile::new();
    for &d in decisions {
        let statuses = context_statuses(model, d)?;
        base.set(d, alloc::vec![0; statuses.len()]);
        for (row, s) in statuses.iter().enumerate() {
            if !s.null {
                slots.push((d, row));
            }
        }
    }
    let cards: Vec<usize> = slots.iter().map(|&(d, _)| model.domain_size(d)).collect();
    let mut total: usize = 1;
    for &c in &cards {
        total = total.checked_mul(c).ok_or(InferError::BoundExceeded(bound))?;
        if total > bound {
            return Err(InferError::BoundExceeded(bound));
        }
    }
    let mut out = Vec::with_capacity(total);
    for idx in 0..total {
        let assignment = radix::unpack(&cards, idx);
        let mut profile = base.clone();
        for (k, &(d, row)) in slots.iter().enumerate() {
            profile.choices.get_mut(&d).unwrap()[row] = assignment[k];
        }
        out.push(profile);
    }
    Ok(out)
}

/// All pure policies of `agent` maximizing its expected utility against
/// `others` (rules for every other decision). Ties are all returned; policies
/// differing only on null contexts collapse to the canonical representative.
pub fn best_response(
    model: &Maim,
    agent: crate::model::AgentId,
    others: &PolicyProfile,
) -> Result<Vec<PureProfile>, InferError> {
    best_response_with(model, agent, others, DEFAULT_ENUM_BOUND)
}

pub fn best_response_with(
    model: &Maim,
    agent: crate::model::AgentId,
    others: &PolicyProfile,
    bound: usize,
) -> Result<Vec<PureProfile>, InferError> {
    let mine = model.graph().decisions_of(agent);
    for d in model.graph().decisions() {
        if !mine.contains(&d) && !others.rules.contains_key(&d) {
            return Err(InferError::Model(ModelError::IncompleteProfile(
                model.graph().name(d).into(),
            )));
        }
    }
    let candidates = enumerate_pure(model, &mine, bound)?;
    let mut best = f64::NEG_INFINITY;
    let mut scored = Vec::with_capacity(candidates.len());
    for candidate in candidates {
        let profile = others.overridden_by(&candidate.to_policy(model));
        let eu = expected_utility(model, &profile, agent)?;
        if eu > best {
            best = eu;
        }
        scored.push((candidate, eu));
    }
    Ok(scored
        .into_iter()
        .filter(|&(_, eu)| eu >= best - TOL)
        .map(|(c, _)| c)
        .collect())
}
