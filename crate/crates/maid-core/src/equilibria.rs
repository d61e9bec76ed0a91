//! Equilibrium computation: pure Nash enumeration, subgame perfect search by
//! generalized backward induction over the condensed relevance graph, and
//! trembling hand perfection through perturbed models.
//!
//! The SPE search walks components in dependency-first order, keeping a FIFO
//! queue of partial pure profiles. A singleton component is solved one
//! feasible decision context at a time against the minimal subgame holding
//! it; a cyclic component is solved by enumerating its joint pure rules and
//! keeping those that are a local pure Nash equilibrium of every feasible
//! subgame instance. Every utility tie forks the queue, so the completed
//! profiles are exactly the pure subgame perfect equilibria.
//!
//! Rules on null decision contexts are pinned to the first domain element
//! throughout, which makes profile identity well defined modulo rules that
//! can never matter.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::infer::{
    self, context_statuses, enumerate_pure, expected_utility, expected_utility_in, InferError,
    Marginal, DEFAULT_ENUM_BOUND,
};
use crate::model::{AgentId, Maim, ModelError, NodeId};
use crate::policy::{
    induce, with_rules_fixed, DecisionRule, PolicyProfile, PureProfile,
};
use crate::relevance::{condensed_relevance_graph, RelevanceError};
use crate::subgames::{
    closure, is_feasible_subgame, maid_subgame, maim_subgames, MaimSubgame, SubgameBase,
    SubgameError,
};
use crate::TOL;

#[derive(Clone, PartialEq, Debug)]
pub enum EquilibriaError {
    Model(ModelError),
    Infer(InferError),
    Relevance(RelevanceError),
    Subgame(SubgameError),
    BadPerturbation(String),
    NotAnEquilibrium(String),
    BadQuery(String),
}

impl core::fmt::Display for EquilibriaError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            EquilibriaError::Model(e) => write!(f, "{e}"),
            EquilibriaError::Infer(e) => write!(f, "{e}"),
            EquilibriaError::Relevance(e) => write!(f, "{e}"),
            EquilibriaError::Subgame(e) => write!(f, "{e}"),
            EquilibriaError::BadPerturbation(m) => write!(f, "bad perturbation: {m}"),
            EquilibriaError::NotAnEquilibrium(m) => write!(f, "not an equilibrium: {m}"),
            EquilibriaError::BadQuery(m) => write!(f, "bad query: {m}"),
        }
    }
}

impl From<ModelError> for EquilibriaError {
    fn from(e: ModelError) -> Self {
        EquilibriaError::Model(e)
    }
}

impl From<InferError> for EquilibriaError {
    fn from(e: InferError) -> Self {
        EquilibriaError::Infer(e)
    }
}

impl From<RelevanceError> for EquilibriaError {
    fn from(e: RelevanceError) -> Self {
        EquilibriaError::Relevance(e)
    }
}

impl From<SubgameError> for EquilibriaError {
    fn from(e: SubgameError) -> Self {
        EquilibriaError::Subgame(e)
    }
}

/// True when no agent can improve its expected utility by more than the
/// tolerance with a pure deviation over its own decisions. Sufficient for
/// the Nash condition over mixed deviations by multilinearity.
pub fn is_pure_nash(model: &Maim, profile: &PureProfile) -> Result<bool, EquilibriaError> {
    is_pure_nash_with(model, profile, DEFAULT_ENUM_BOUND)
}

pub fn is_pure_nash_with(
    model: &Maim,
    profile: &PureProfile,
    bound: usize,
) -> Result<bool, EquilibriaError> {
    let graph = model.graph();
    let policy = profile.to_policy(model);
    for a in 0..graph.agent_count() {
        let agent = AgentId(a);
        let mine = graph.decisions_of(agent);
        if mine.is_empty() {
            continue;
        }
        let base = expected_utility(model, &policy, agent)?;
        for dev in enumerate_pure(model, &mine, bound)? {
            let eu = expected_utility(model, &policy.overridden_by(&dev.to_policy(model)), agent)?;
            if eu > base + TOL {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// All pure Nash equilibria, in lexicographic enumeration order over the
/// non-null context rows. Errors when the pure-profile space exceeds the
/// bound.
pub fn pure_nash(model: &Maim) -> Result<Vec<PureProfile>, EquilibriaError> {
    pure_nash_with(model, DEFAULT_ENUM_BOUND)
}

pub fn pure_nash_with(model: &Maim, bound: usize) -> Result<Vec<PureProfile>, EquilibriaError> {
    let decisions = model.graph().decisions();
    let mut out = Vec::new();
    for candidate in enumerate_pure(model, &decisions, bound)? {
        if is_pure_nash_with(model, &candidate, bound)? {
            out.push(candidate);
        }
    }
    Ok(out)
}

/// Work counters for one component step of the SPE search.
#[derive(Clone, PartialEq, Debug)]
pub struct ComponentStats {
    pub decisions: Vec<NodeId>,
    /// Feasible subgame instances examined.
    pub instances: usize,
    /// Candidate rules (singleton: actions weighed per context; cyclic:
    /// joint pure rule vectors enumerated), totalled over queue branches.
    pub candidates: usize,
}

#[derive(Clone, PartialEq, Debug, Default)]
pub struct SolveStats {
    pub components: Vec<ComponentStats>,
    /// Extra queue branches: utility ties in singleton components, multiple
    /// local equilibria in cyclic ones.
    pub forks: usize,
    /// Branches abandoned because a cyclic component had no local pure
    /// equilibrium.
    pub dead_branches: usize,
}

#[derive(Clone, PartialEq, Debug)]
pub struct SpeSolution {
    /// All pure subgame perfect equilibria, in queue completion order.
    pub profiles: Vec<PureProfile>,
    pub stats: SolveStats,
    pub diagnostics: Vec<String>,
}

/// Finds all pure subgame perfect equilibria by generalized backward
/// induction over the condensed relevance graph.
pub fn spe_solve(model: &Maim) -> Result<SpeSolution, EquilibriaError> {
    spe_solve_with(model, DEFAULT_ENUM_BOUND)
}

struct Step {
    decisions: Vec<NodeId>,
    instances: Vec<MaimSubgame>,
}

pub fn spe_solve_with(model: &Maim, bound: usize) -> Result<SpeSolution, EquilibriaError> {
    let graph = model.graph();
    let con = condensed_relevance_graph(graph)?;

    let mut steps = Vec::new();
    for comp in &con.components {
        // The minimal base holding this component: the closure of its
        // decisions (which pulls in everything they rely on).
        let core = closure(graph, comp)?;
        let base = SubgameBase { nodes: core.into_iter().collect() };
        let sub = maid_subgame(graph, &base)?;
        let mut instances = Vec::new();
        for inst in maim_subgames(model, &sub)? {
            if is_feasible_subgame(model, &inst)? {
                instances.push(inst);
            }
        }
        steps.push(Step { decisions: comp.clone(), instances });
    }

    let mut stats = SolveStats::default();
    let mut diagnostics = Vec::new();
    let mut queue: Vec<PureProfile> = alloc::vec![PureProfile::new()];
    for step in &steps {
        let mut comp_stats = ComponentStats {
            decisions: step.decisions.clone(),
            instances: step.instances.len(),
            candidates: 0,
        };
        let mut next: Vec<PureProfile> = Vec::new();
        for partial in queue.drain(..) {
            let branches = if step.decisions.len() == 1 {
                solve_singleton(model, step, &partial, bound, &mut comp_stats, &mut diagnostics)?
            } else {
                solve_cyclic(model, step, &partial, bound, &mut comp_stats)?
            };
            if branches.is_empty() {
                stats.dead_branches += 1;
                diagnostics.push(format!(
                    "no pure equilibrium for component {:?} under one branch; branch dropped",
                    step.decisions.iter().map(|&d| graph.name(d)).collect::<Vec<_>>()
                ));
            }
            stats.forks += branches.len().saturating_sub(1);
            next.extend(branches);
        }
        stats.components.push(comp_stats);
        queue = next;
    }
    if queue.is_empty() && !con.components.is_empty() {
        diagnostics.push("no pure subgame perfect equilibrium exists".into());
    }
    Ok(SpeSolution { profiles: queue, stats, diagnostics })
}

/// The instance's model with every decision outside `skip` turned into a
/// chance node: rules from `partial` where already decided, uniform
/// placeholders otherwise.
fn solving_model(
    model: &Maim,
    inst: &MaimSubgame,
    partial: &PureProfile,
    skip: &[NodeId],
) -> Result<Maim, EquilibriaError> {
    let fixed_sub = inst.restrict_pure(model, partial);
    let mut rules = fixed_sub.to_policy(&inst.model);
    for sub_d in inst.model.graph().decisions() {
        let parent_d = inst.subgame.parent_node(sub_d);
        if skip.contains(&parent_d) {
            rules.rules.remove(&sub_d);
        } else if !rules.rules.contains_key(&sub_d) {
            rules.set(sub_d, DecisionRule::uniform(&inst.model, sub_d));
        }
    }
    Ok(with_rules_fixed(&inst.model, &rules)?)
}

/// Optimizes a single decision context by context. Within each feasible
/// subgame instance, each reachable context gets the actions maximizing the
/// owner's conditional expected utility; ties fork. Null contexts and
/// contexts out of reach everywhere are pinned to the first action.
fn solve_singleton(
    model: &Maim,
    step: &Step,
    partial: &PureProfile,
    _bound: usize,
    comp_stats: &mut ComponentStats,
    diagnostics: &mut Vec<String>,
) -> Result<Vec<PureProfile>, EquilibriaError> {
    let decision = step.decisions[0];
    let owner = model.graph().kind(decision).owner().expect("decision has an owner");
    let dom = model.domain_size(decision);
    let statuses = context_statuses(model, decision)?;
    let mut options: Vec<Option<Vec<usize>>> = statuses
        .iter()
        .map(|s| if s.null { Some(alloc::vec![0]) } else { None })
        .collect();

    for inst in &step.instances {
        let solving = solving_model(model, inst, partial, &step.decisions)?;
        let sub_d = inst.subgame.sub_node(decision).expect("decision is in its base");
        let joint = induce(&solving, &PolicyProfile::uniform(&solving))?;
        let sub_parents = solving.graph().parents(sub_d).to_vec();
        for r in 0..solving.context_count(sub_d) {
            let inside = solving.context_assignment(sub_d, r);
            let mut assignment: BTreeMap<NodeId, usize> = inst.boundary.iter().copied().collect();
            for &(p, v) in &inside {
                assignment.insert(inst.subgame.parent_node(p), v);
            }
            let parent_row = model.context_row(decision, &assignment);
            if options[parent_row].is_some() {
                continue;
            }
            // Reachability of this context inside the instance.
            if !sub_parents.is_empty() {
                let values: Vec<usize> = inside.iter().map(|&(_, v)| v).collect();
                let reachable = match infer::marginal(&joint, &sub_parents, &[])? {
                    Marginal::Unconditioned => false,
                    Marginal::Table(t) => t.prob(&values) > 0.0,
                };
                if !reachable {
                    continue;
                }
            }
            let mut scores = Vec::with_capacity(dom);
            for a in 0..dom {
                let mut evidence = inside.clone();
                evidence.push((sub_d, a));
                scores.push(expected_utility_in(&joint, owner, &evidence)?);
            }
            comp_stats.candidates += dom;
            let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let picks: Vec<usize> = (0..dom).filter(|&a| scores[a] >= best - TOL).collect();
            options[parent_row] = Some(picks);
        }
    }

    for (row, slot) in options.iter_mut().enumerate() {
        if slot.is_none() {
            diagnostics.push(format!(
                "context {} of {:?} is out of reach in every feasible subgame; action pinned",
                model.context_label(decision, row),
                model.graph().name(decision)
            ));
            *slot = Some(alloc::vec![0]);
        }
    }

    // Cartesian product over rows, row-major with ascending actions.
    let mut branches: Vec<Vec<usize>> = alloc::vec![Vec::new()];
    for slot in &options {
        let picks = slot.as_ref().unwrap();
        let mut grown = Vec::with_capacity(branches.len() * picks.len());
        for prefix in &branches {
            for &a in picks {
                let mut row = prefix.clone();
                row.push(a);
                grown.push(row);
            }
        }
        branches = grown;
    }
    Ok(branches
        .into_iter()
        .map(|choices| {
            let mut next = partial.clone();
            next.set(decision, choices);
            next
        })
        .collect())
}

/// Solves a cyclic component: enumerate its joint pure rules and keep those
/// that are a local pure Nash equilibrium of every feasible instance of the
/// component's minimal subgame.
fn solve_cyclic(
    model: &Maim,
    step: &Step,
    partial: &PureProfile,
    bound: usize,
    comp_stats: &mut ComponentStats,
) -> Result<Vec<PureProfile>, EquilibriaError> {
    let candidates = enumerate_pure(model, &step.decisions, bound)?;
    comp_stats.candidates += candidates.len();

    let mut solvings = Vec::with_capacity(step.instances.len());
    for inst in &step.instances {
        solvings.push((inst, solving_model(model, inst, partial, &step.decisions)?));
    }

    let mut out = Vec::new();
    'candidates: for candidate in candidates {
        for (inst, solving) in &solvings {
            let local = inst.restrict_pure(model, &candidate);
            if !is_pure_nash_with(solving, &local, bound)? {
                continue 'candidates;
            }
        }
        out.push(partial.overridden_by(&candidate));
    }
    Ok(out)
}

/// Minimum play probabilities for every decision, context row, and action.
#[derive(Clone, PartialEq, Debug)]
pub struct PerturbationVector {
    /// Per decision: rows of per-action lower bounds.
    pub entries: BTreeMap<NodeId, Vec<Vec<f64>>>,
}

impl PerturbationVector {
    /// The same lower bound everywhere.
    pub fn uniform(model: &Maim, eps: f64) -> Self {
        let entries = model
            .graph()
            .decisions()
            .into_iter()
            .map(|d| {
                let rows =
                    alloc::vec![alloc::vec![eps; model.domain_size(d)]; model.context_count(d)];
                (d, rows)
            })
            .collect();
        PerturbationVector { entries }
    }

    /// The largest entry, the vector's sup-norm.
    pub fn max_entry(&self) -> f64 {
        self.entries
            .values()
            .flat_map(|rows| rows.iter().flat_map(|r| r.iter().copied()))
            .fold(0.0, f64::max)
    }
}

/// A model together with lower bounds on every rule entry; equilibrium
/// queries quantify over admissible (entry-wise above the bound) rules only.
#[derive(Clone, PartialEq, Debug)]
pub struct PerturbedMaim {
    base: Maim,
    delta: PerturbationVector,
}

/// Validates the perturbation against the model and wraps both.
pub fn perturb(model: &Maim, delta: PerturbationVector) -> Result<PerturbedMaim, EquilibriaError> {
    let graph = model.graph();
    let decisions = graph.decisions();
    for &d in &decisions {
        let name = graph.name(d);
        let Some(rows) = delta.entries.get(&d) else {
            return Err(EquilibriaError::BadPerturbation(format!("{name:?} has no entries")));
        };
        if rows.len() != model.context_count(d) {
            return Err(EquilibriaError::BadPerturbation(format!(
                "{name:?} has {} rows, expected {}",
                rows.len(),
                model.context_count(d)
            )));
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != model.domain_size(d) {
                return Err(EquilibriaError::BadPerturbation(format!(
                    "{name:?} row {r} has wrong width"
                )));
            }
            let mut sum = 0.0;
            for &e in row {
                if !(e.is_finite() && 0.0 < e && e < 1.0) {
                    return Err(EquilibriaError::BadPerturbation(format!(
                        "{name:?} row {r} entry {e} outside (0, 1)"
                    )));
                }
                sum += e;
            }
            if sum > 1.0 + TOL {
                return Err(EquilibriaError::BadPerturbation(format!(
                    "{name:?} row {r} entries sum to {sum}"
                )));
            }
        }
    }
    for &d in delta.entries.keys() {
        if !decisions.contains(&d) {
            return Err(EquilibriaError::BadPerturbation(format!(
                "entries for non-decision node #{}",
                d.0
            )));
        }
    }
    Ok(PerturbedMaim { base: model.clone(), delta })
}

impl PerturbedMaim {
    pub fn base(&self) -> &Maim {
        &self.base
    }

    pub fn delta(&self) -> &PerturbationVector {
        &self.delta
    }

    /// The admissible rule realizing a pure intent: per row, the intended
    /// action takes all probability left over by the other actions' lower
    /// bounds, which themselves are played at exactly their bounds.
    pub fn admissible_rule(&self, decision: NodeId, choices: &[usize]) -> DecisionRule {
        let eps = &self.delta.entries[&decision];
        let rows = choices
            .iter()
            .enumerate()
            .map(|(r, &c)| {
                let mut row = eps[r].clone();
                let others: f64 = row
                    .iter()
                    .enumerate()
                    .filter(|&(a, _)| a != c)
                    .map(|(_, &e)| e)
                    .sum();
                row[c] = 1.0 - others;
                row
            })
            .collect();
        DecisionRule { rows }
    }

    /// The admissible profile realizing a pure intent profile.
    pub fn admissible_profile(&self, intents: &PureProfile) -> PolicyProfile {
        let mut out = PolicyProfile::new();
        for (&d, choices) in &intents.choices {
            out.set(d, self.admissible_rule(d, choices));
        }
        out
    }

    /// True when no agent improves by more than the tolerance by switching
    /// to another pure intent. Admissible rule sets are polytopes whose
    /// vertices are exactly the pure-intent rules, so checking intents
    /// decides the Nash property over all admissible deviations.
    pub fn is_intent_ne(&self, intents: &PureProfile) -> Result<bool, EquilibriaError> {
        self.is_intent_ne_with(intents, DEFAULT_ENUM_BOUND)
    }

    pub fn is_intent_ne_with(
        &self,
        intents: &PureProfile,
        bound: usize,
    ) -> Result<bool, EquilibriaError> {
        Ok(self.best_intent_deviation(intents, bound)?.is_none())
    }

    /// The most improving pure-intent deviation across agents, if any:
    /// `(decision, row, action, gain)` locating the first changed non-null
    /// row of the best deviation of the first agent that can improve.
    pub fn best_intent_deviation(
        &self,
        intents: &PureProfile,
        bound: usize,
    ) -> Result<Option<ThpeWitness>, EquilibriaError> {
        let graph = self.base.graph();
        let rules = self.admissible_profile(intents);
        for a in 0..graph.agent_count() {
            let agent = AgentId(a);
            let mine = graph.decisions_of(agent);
            if mine.is_empty() {
                continue;
            }
            let base_eu = expected_utility(&self.base, &rules, agent)?;
            let current = intents.restricted_to(&mine);
            let mut best: Option<(f64, PureProfile)> = None;
            for dev in enumerate_pure(&self.base, &mine, bound)? {
                if dev == current {
                    continue;
                }
                let dev_rules = rules.overridden_by(&self.admissible_profile(&dev));
                let gain = expected_utility(&self.base, &dev_rules, agent)? - base_eu;
                if gain > TOL && best.as_ref().is_none_or(|(g, _)| gain > g + TOL) {
                    best = Some((gain, dev.clone()));
                }
            }
            if let Some((gain, dev)) = best {
                for (&d, choices) in &dev.choices {
                    for (row, &action) in choices.iter().enumerate() {
                        if current.choices[&d][row] != action {
                            return Ok(Some(ThpeWitness { decision: d, row, action, gain }));
                        }
                    }
                }
            }
        }
        Ok(None)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ThpeVerdict {
    Yes,
    No,
    Inconclusive,
}

/// A context where a perturbed best response strictly leaves the profile.
#[derive(Clone, PartialEq, Debug)]
pub struct ThpeWitness {
    pub decision: NodeId,
    pub row: usize,
    pub action: usize,
    pub gain: f64,
}

impl ThpeWitness {
    fn same_place(&self, other: &ThpeWitness) -> bool {
        self.decision == other.decision && self.row == other.row && self.action == other.action
    }
}

/// Raw evidence for one schedule entry.
#[derive(Clone, PartialEq, Debug)]
pub struct ThpeStep {
    pub eps: f64,
    /// Whether the profile, played as intents, is an equilibrium of the
    /// perturbed model.
    pub intent_is_ne: bool,
    pub witness: Option<ThpeWitness>,
}

#[derive(Clone, PartialEq, Debug)]
pub struct ThpeReport {
    pub verdict: ThpeVerdict,
    pub steps: Vec<ThpeStep>,
}

/// The default perturbation schedule: uniform entries `2^-k` for `k` from 3
/// to 12.
pub fn default_schedule() -> Vec<f64> {
    (3..=12).map(|k| 1.0 / (1u64 << k) as f64).collect()
}

/// Tests trembling hand perfection of a pure Nash profile along a schedule
/// of uniform perturbations. Yes when the profile's intents stay an
/// equilibrium at every level (the induced admissible rules converge to the
/// profile); No when every level rejects it with one consistent witness
/// context; Inconclusive otherwise. The profile must be a Nash equilibrium.
pub fn is_thpe(
    model: &Maim,
    profile: &PureProfile,
    schedule: &[f64],
) -> Result<ThpeReport, EquilibriaError> {
    is_thpe_with(model, profile, schedule, DEFAULT_ENUM_BOUND)
}

pub fn is_thpe_with(
    model: &Maim,
    profile: &PureProfile,
    schedule: &[f64],
    bound: usize,
) -> Result<ThpeReport, EquilibriaError> {
    if !is_pure_nash_with(model, profile, bound)? {
        return Err(EquilibriaError::NotAnEquilibrium(
            "the profile is not a pure Nash equilibrium".into(),
        ));
    }
    if schedule.is_empty() {
        return Err(EquilibriaError::BadQuery("empty schedule".into()));
    }
    let mut steps = Vec::with_capacity(schedule.len());
    for &eps in schedule {
        let pm = perturb(model, PerturbationVector::uniform(model, eps))?;
        let witness = pm.best_intent_deviation(profile, bound)?;
        steps.push(ThpeStep { eps, intent_is_ne: witness.is_none(), witness });
    }
    let verdict = if steps.iter().all(|s| s.intent_is_ne) {
        ThpeVerdict::Yes
    } else if steps.iter().all(|s| !s.intent_is_ne) {
        let first = steps[0].witness.as_ref().expect("rejected step has a witness");
        if steps.iter().all(|s| s.witness.as_ref().is_some_and(|w| w.same_place(first))) {
            ThpeVerdict::No
        } else {
            ThpeVerdict::Inconclusive
        }
    } else {
        ThpeVerdict::Inconclusive
    };
    Ok(ThpeReport { verdict, steps })
}

/// For a two-agent model: true when neither agent's policy in `profile` is
/// weakly dominated by another pure policy. A quick necessary condition for
/// trembling hand perfection.
pub fn undominated_check_2p(
    model: &Maim,
    profile: &PureProfile,
) -> Result<bool, EquilibriaError> {
    undominated_check_2p_with(model, profile, DEFAULT_ENUM_BOUND)
}

pub fn undominated_check_2p_with(
    model: &Maim,
    profile: &PureProfile,
    bound: usize,
) -> Result<bool, EquilibriaError> {
    let graph = model.graph();
    if graph.agent_count() != 2 {
        return Err(EquilibriaError::BadQuery(format!(
            "undominated check needs exactly 2 agents, got {}",
            graph.agent_count()
        )));
    }
    for a in 0..2 {
        let agent = AgentId(a);
        let mine = graph.decisions_of(agent);
        let others = graph.decisions_of(AgentId(1 - a));
        let current = profile.restricted_to(&mine);
        let opponents = enumerate_pure(model, &others, bound)?;
        for alt in enumerate_pure(model, &mine, bound)? {
            if alt == current {
                continue;
            }
            let mut never_worse = true;
            let mut sometimes_better = false;
            for opp in &opponents {
                let with_alt = opp.overridden_by(&alt).to_policy(model);
                let with_cur = opp.overridden_by(&current).to_policy(model);
                let eu_alt = expected_utility(model, &with_alt, agent)?;
                let eu_cur = expected_utility(model, &with_cur, agent)?;
                if eu_alt < eu_cur - TOL {
                    never_worse = false;
                    break;
                }
                if eu_alt > eu_cur + TOL {
                    sometimes_better = true;
                }
            }
            if never_worse && sometimes_better {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
