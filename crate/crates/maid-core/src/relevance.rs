//! Graphical criteria: d-separation, r-reachability, and relevance graphs.
//!
//! A node `V` is r-reachable from a decision `D` when a freshly added parent
//! of `V` is d-connected to some utility node of `D`'s owner among `D`'s
//! descendants, conditioning on `D`'s family. The relevance graph has an edge
//! `D_j -> D_k` whenever `D_k` is r-reachable from `D_j`; its SCC
//! condensation is always a DAG and drives subgame decomposition and
//! backward-induction order.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::model::{MaidGraph, NodeId};

#[derive(Clone, PartialEq, Debug)]
pub enum RelevanceError {
    BadQuery(String),
}

impl core::fmt::Display for RelevanceError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            RelevanceError::BadQuery(m) => write!(f, "bad query: {m}"),
        }
    }
}

/// Plain adjacency view used for trail traversal; allows a phantom node
/// beyond the model's node count.
struct Adjacency {
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl Adjacency {
    fn of(graph: &MaidGraph) -> Self {
        let parents = graph
            .node_ids()
            .map(|n| graph.parents(n).iter().map(|p| p.0).collect())
            .collect();
        let children = graph
            .node_ids()
            .map(|n| graph.children(n).iter().map(|c| c.0).collect())
            .collect();
        Adjacency { parents, children }
    }

    /// Adds a fresh root with a single child, returning its index.
    fn add_root_over(&mut self, child: usize) -> usize {
        let id = self.parents.len();
        self.parents.push(Vec::new());
        self.children.push(alloc::vec![child]);
        self.parents[child].push(id);
        id
    }

    /// Active-trail reachability from `xs` given conditioning set `ws`
    /// (Koller & Friedman style ball passing). A chain or fork is blocked at
    /// a conditioned middle node; a collider is blocked unless it or one of
    /// its descendants is conditioned.
    fn reachable(&self, xs: &[usize], ws: &BTreeSet<usize>) -> BTreeSet<usize> {
        // Conditioned nodes and their ancestors: where a collider may open.
        let mut open_colliders = ws.clone();
        let mut stack: Vec<usize> = ws.iter().copied().collect();
        while let Some(n) = stack.pop() {
            for &p in &self.parents[n] {
                if open_colliders.insert(p) {
                    stack.push(p);
                }
            }
        }

        const UP: usize = 0;
        const DOWN: usize = 1;
        let mut visited = BTreeSet::new();
        let mut reached = BTreeSet::new();
        let mut queue: Vec<(usize, usize)> = xs.iter().map(|&x| (x, UP)).collect();
        while let Some((n, dir)) = queue.pop() {
            if !visited.insert((n, dir)) {
                continue;
            }
            if !ws.contains(&n) {
                reached.insert(n);
            }
            if dir == UP && !ws.contains(&n) {
                for &p in &self.parents[n] {
                    queue.push((p, UP));
                }
                for &c in &self.children[n] {
                    queue.push((c, DOWN));
                }
            } else if dir == DOWN {
                if !ws.contains(&n) {
                    for &c in &self.children[n] {
                        queue.push((c, DOWN));
                    }
                }
                if open_colliders.contains(&n) {
                    for &p in &self.parents[n] {
                        queue.push((p, UP));
                    }
                }
            }
        }
        reached
    }
}

/// Tests whether `xs` and `ys` are d-separated given `ws`. The three sets
/// must be disjoint and `xs`, `ys` nonempty.
pub fn d_separated(
    graph: &MaidGraph,
    xs: &[NodeId],
    ys: &[NodeId],
    ws: &[NodeId],
) -> Result<bool, RelevanceError> {
    if xs.is_empty() || ys.is_empty() {
        return Err(RelevanceError::BadQuery("query sets must be nonempty".into()));
    }
    let all = |set: &[NodeId]| set.iter().all(|n| n.0 < graph.node_count());
    if !(all(xs) && all(ys) && all(ws)) {
        return Err(RelevanceError::BadQuery("unknown node in query".into()));
    }
    let xset: BTreeSet<NodeId> = xs.iter().copied().collect();
    let yset: BTreeSet<NodeId> = ys.iter().copied().collect();
    let wset: BTreeSet<NodeId> = ws.iter().copied().collect();
    if !(xset.is_disjoint(&yset) && xset.is_disjoint(&wset) && yset.is_disjoint(&wset)) {
        return Err(RelevanceError::BadQuery(format!(
            "query sets overlap: X={xs:?} Y={ys:?} W={ws:?}"
        )));
    }

    let adj = Adjacency::of(graph);
    let sources: Vec<usize> = xs.iter().map(|n| n.0).collect();
    let cond: BTreeSet<usize> = ws.iter().map(|n| n.0).collect();
    let reached = adj.reachable(&sources, &cond);
    Ok(!ys.iter().any(|y| reached.contains(&y.0)))
}

/// Tests whether `node` is r-reachable from `decision`: a fresh parent of
/// `node` is d-connected to the owner's utility descendants of `decision`
/// given the decision's family. A decision with no utility descendants for
/// its owner reaches nothing.
pub fn r_reachable(graph: &MaidGraph, decision: NodeId, node: NodeId) -> Result<bool, RelevanceError> {
    let Some(owner) = graph.kind(decision).owner().filter(|_| graph.kind(decision).is_decision())
    else {
        return Err(RelevanceError::BadQuery(format!(
            "{:?} is not a decision",
            graph.name(decision)
        )));
    };
    if node.0 >= graph.node_count() {
        return Err(RelevanceError::BadQuery("unknown node".into()));
    }
    let descendants = graph.descendants(decision);
    let targets: Vec<usize> = graph
        .utilities_of(owner)
        .into_iter()
        .filter(|u| descendants.contains(u))
        .map(|u| u.0)
        .collect();
    if targets.is_empty() {
        return Ok(false);
    }
    let mut adj = Adjacency::of(graph);
    let phantom = adj.add_root_over(node.0);
    let cond: BTreeSet<usize> = graph.family(decision).iter().map(|n| n.0).collect();
    let reached = adj.reachable(&[phantom], &cond);
    Ok(targets.iter().any(|t| reached.contains(t)))
}

/// All nodes other than `decision` that are r-reachable from it.
pub fn relevant_nodes(graph: &MaidGraph, decision: NodeId) -> Result<Vec<NodeId>, RelevanceError> {
    let mut out = Vec::new();
    for n in graph.node_ids() {
        if n != decision && r_reachable(graph, decision, n)? {
            out.push(n);
        }
    }
    Ok(out)
}

/// The relevance graph over the model's decisions.
#[derive(Clone, PartialEq, Debug)]
pub struct RelevanceGraph {
    pub decisions: Vec<NodeId>,
    /// Edge `(j, k)` means decision `k` is r-reachable from decision `j`,
    /// i.e. `j` strategically relies on `k`.
    pub edges: Vec<(NodeId, NodeId)>,
}

pub fn relevance_graph(graph: &MaidGraph) -> Result<RelevanceGraph, RelevanceError> {
    let decisions = graph.decisions();
    let mut edges = Vec::new();
    for &src in &decisions {
        for &dst in &decisions {
            if src != dst && r_reachable(graph, src, dst)? {
                edges.push((src, dst));
            }
        }
    }
    Ok(RelevanceGraph { decisions, edges })
}

impl RelevanceGraph {
    pub fn successors(&self, d: NodeId) -> Vec<NodeId> {
        self.edges.iter().filter(|&&(s, _)| s == d).map(|&(_, t)| t).collect()
    }

    pub fn is_acyclic(&self) -> bool {
        condense(self).components.iter().all(|c| c.len() == 1)
            && self.edges.iter().all(|&(s, t)| s != t)
    }
}

/// The SCC condensation of a relevance graph. Always a DAG.
#[derive(Clone, PartialEq, Debug)]
pub struct CondensedRelevanceGraph {
    /// Components in dependency-first order: every relevance successor of a
    /// component appears at a smaller index. Ties (incomparable components)
    /// are broken by smallest member node index. Members are sorted.
    pub components: Vec<Vec<NodeId>>,
    /// Edge `(a, b)` mirrors a relevance edge from a member of component `a`
    /// to a member of component `b`.
    pub edges: Vec<(usize, usize)>,
}

impl CondensedRelevanceGraph {
    pub fn component_of(&self, d: NodeId) -> Option<usize> {
        self.components.iter().position(|c| c.contains(&d))
    }

    /// Indices of `component` and every component it (transitively) relies
    /// on, sorted.
    pub fn reachable_from(&self, component: usize) -> Vec<usize> {
        let mut seen = BTreeSet::from([component]);
        let mut stack = alloc::vec![component];
        while let Some(c) = stack.pop() {
            for &(s, t) in &self.edges {
                if s == c && seen.insert(t) {
                    stack.push(t);
                }
            }
        }
        seen.into_iter().collect()
    }
}

/// Tarjan's strongly connected components over the relevance graph, then a
/// deterministic dependency-first ordering of the condensation.
pub fn condense(rel: &RelevanceGraph) -> CondensedRelevanceGraph {
    let n = rel.decisions.len();
    let index_of = |d: NodeId| rel.decisions.iter().position(|&x| x == d).unwrap();
    let mut succ: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
    for &(s, t) in &rel.edges {
        succ[index_of(s)].push(index_of(t));
    }
    for list in &mut succ {
        list.sort_unstable();
        list.dedup();
    }

    // Tarjan.
    struct State {
        index: Vec<Option<usize>>,
        lowlink: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        comps: Vec<Vec<usize>>,
    }
    fn strongconnect(v: usize, succ: &[Vec<usize>], st: &mut State) {
        st.index[v] = Some(st.next);
        st.lowlink[v] = st.next;
        st.next += 1;
        st.stack.push(v);
        st.on_stack[v] = true;
        for &w in &succ[v] {
            if st.index[w].is_none() {
                strongconnect(w, succ, st);
                st.lowlink[v] = st.lowlink[v].min(st.lowlink[w]);
            } else if st.on_stack[w] {
                st.lowlink[v] = st.lowlink[v].min(st.index[w].unwrap());
            }
        }
        if st.lowlink[v] == st.index[v].unwrap() {
            let mut comp = Vec::new();
            loop {
                let w = st.stack.pop().unwrap();
                st.on_stack[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            st.comps.push(comp);
        }
    }
    let mut st = State {
        index: alloc::vec![None; n],
        lowlink: alloc::vec![0; n],
        on_stack: alloc::vec![false; n],
        stack: Vec::new(),
        next: 0,
        comps: Vec::new(),
    };
    for v in 0..n {
        if st.index[v].is_none() {
            strongconnect(v, &succ, &mut st);
        }
    }

    let mut comp_of = alloc::vec![0; n];
    for (c, members) in st.comps.iter().enumerate() {
        for &m in members {
            comp_of[m] = c;
        }
    }
    let mut cedges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (v, outs) in succ.iter().enumerate() {
        for &w in outs {
            if comp_of[v] != comp_of[w] {
                cedges.insert((comp_of[v], comp_of[w]));
            }
        }
    }

    // Dependency-first order: a component comes after everything it relies
    // on. Kahn over reversed condensation edges, ready set ordered by the
    // smallest member node index.
    let m = st.comps.len();
    let mut blockers = alloc::vec![0usize; m]; // unplaced components this one relies on
    for &(s, _) in &cedges {
        blockers[s] += 1;
    }
    let smallest: Vec<NodeId> = st
        .comps
        .iter()
        .map(|c| c.iter().map(|&i| rel.decisions[i]).min().unwrap())
        .collect();
    let mut ready: BTreeSet<(NodeId, usize)> = (0..m)
        .filter(|&c| blockers[c] == 0)
        .map(|c| (smallest[c], c))
        .collect();
    let mut order = Vec::with_capacity(m);
    while let Some(&(key, c)) = ready.iter().next() {
        ready.remove(&(key, c));
        order.push(c);
        for &(s, t) in &cedges {
            if t == c {
                blockers[s] -= 1;
                if blockers[s] == 0 {
                    ready.insert((smallest[s], s));
                }
            }
        }
    }
    debug_assert_eq!(order.len(), m);

    let position: Vec<usize> = {
        let mut pos = alloc::vec![0; m];
        for (i, &c) in order.iter().enumerate() {
            pos[c] = i;
        }
        pos
    };
    let components: Vec<Vec<NodeId>> = order
        .iter()
        .map(|&c| {
            let mut members: Vec<NodeId> =
                st.comps[c].iter().map(|&i| rel.decisions[i]).collect();
            members.sort_unstable();
            members
        })
        .collect();
    let mut edges: Vec<(usize, usize)> = cedges
        .into_iter()
        .map(|(s, t)| (position[s], position[t]))
        .collect();
    edges.sort_unstable();
    CondensedRelevanceGraph { components, edges }
}

/// Relevance graph plus condensation for a model graph.
pub fn condensed_relevance_graph(
    graph: &MaidGraph,
) -> Result<CondensedRelevanceGraph, RelevanceError> {
    Ok(condense(&relevance_graph(graph)?))
}
