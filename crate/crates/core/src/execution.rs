//! Exhaustive reachability, terminal strongly connected components, output
//! stability, predicate values and seeded random runs.
//!
//! Fairness is decided on the finite configuration graph: the configurations
//! a fair execution visits infinitely often form a terminal SCC, so a
//! protocol computes `x` on an input iff every terminal SCC reachable from
//! the initial configuration is an all-`x` consensus.

use std::collections::VecDeque;
use std::fmt::Write as _;

use indexmap::IndexSet;
use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{ModelError, OutputValue, Population, ProtocolSpec, StepLabel};

pub type NodeId = usize;

pub const DEFAULT_NODE_LIMIT: usize = 5_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExploreOptions {
    pub node_limit: usize,
    /// Sort plain configurations before hashing. Matrix configurations are
    /// never reduced.
    pub symmetry_reduction: bool,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions { node_limit: DEFAULT_NODE_LIMIT, symmetry_reduction: false }
    }
}

impl ExploreOptions {
    pub fn with_node_limit(node_limit: usize) -> Self {
        ExploreOptions { node_limit, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecutionError {
    #[error("state space exceeded the node limit of {limit}")]
    StateSpaceExceeded { limit: usize },
    #[error("graph was truncated at the node limit; terminal components are undefined")]
    PartialGraph,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Exploration stopped at the node limit. Carries what was explored.
#[derive(Debug)]
pub struct StateSpaceExceeded<C> {
    pub limit: usize,
    pub partial: Box<ReachabilityGraph<C>>,
}

impl<C> From<StateSpaceExceeded<C>> for ExecutionError {
    fn from(e: StateSpaceExceeded<C>) -> Self {
        ExecutionError::StateSpaceExceeded { limit: e.limit }
    }
}

/// Breadth-first closure of the step relation from a root (node 0).
#[derive(Debug, Clone)]
pub struct ReachabilityGraph<C> {
    nodes: IndexSet<C>,
    edges: Vec<Vec<(StepLabel, NodeId)>>,
    parent: Vec<Option<(NodeId, StepLabel)>>,
    complete: bool,
}

impl<C: Population> ReachabilityGraph<C> {
    pub fn root(&self) -> &C {
        &self.nodes[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// False when exploration hit the node limit.
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn node(&self, id: NodeId) -> &C {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &C)> {
        self.nodes.iter().enumerate()
    }

    pub fn id_of(&self, c: &C) -> Option<NodeId> {
        self.nodes.get_index_of(c)
    }

    pub fn contains(&self, c: &C) -> bool {
        self.nodes.contains(c)
    }

    pub fn successors(&self, id: NodeId) -> &[(StepLabel, NodeId)] {
        &self.edges[id]
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    /// Step labels of a shortest path from the root to `id`.
    pub fn path_to(&self, id: NodeId) -> Vec<StepLabel> {
        let mut path = Vec::new();
        let mut cur = id;
        while let Some((prev, label)) = self.parent[cur] {
            path.push(label);
            cur = prev;
        }
        path.reverse();
        path
    }

    /// Node list plus edge list, stable across runs.
    pub fn to_text(&self, p: &ProtocolSpec) -> String {
        let mut out = String::from("nodes:\n");
        for (id, c) in self.nodes() {
            let _ = writeln!(out, "  {id} {}", c.render_inline(p));
        }
        out.push_str("edges:\n");
        for (id, succ) in self.edges.iter().enumerate() {
            for (label, to) in succ {
                let _ = writeln!(out, "  {id} {label} -> {to}");
            }
        }
        out
    }
}

/// Explores every configuration reachable from `start`.
pub fn reachable<C: Population>(
    p: &ProtocolSpec,
    start: &C,
    opts: &ExploreOptions,
) -> Result<ReachabilityGraph<C>, StateSpaceExceeded<C>> {
    let key = |c: C| if opts.symmetry_reduction { c.canonical() } else { c };
    let mut graph =
        ReachabilityGraph { nodes: IndexSet::new(), edges: Vec::new(), parent: Vec::new(), complete: true };
    graph.nodes.insert(key(start.clone()));
    graph.edges.push(Vec::new());
    graph.parent.push(None);
    let mut frontier = VecDeque::from([0usize]);
    while let Some(id) = frontier.pop_front() {
        let current = graph.nodes[id].clone();
        let mut succ = Vec::new();
        for label in current.enabled_steps(p) {
            let next = key(current.successor(p, label));
            let to = match graph.nodes.get_index_of(&next) {
                Some(to) => to,
                None => {
                    if graph.nodes.len() >= opts.node_limit.max(1) {
                        graph.edges[id] = succ;
                        graph.complete = false;
                        return Err(StateSpaceExceeded { limit: opts.node_limit, partial: Box::new(graph) });
                    }
                    let (to, _) = graph.nodes.insert_full(next);
                    graph.edges.push(Vec::new());
                    graph.parent.push(Some((id, label)));
                    frontier.push_back(to);
                    to
                }
            };
            succ.push((label, to));
        }
        graph.edges[id] = succ;
    }
    Ok(graph)
}

/// Strongly connected components with no edge leaving them, each sorted,
/// ordered by smallest member.
pub fn terminal_sccs<C: Population>(
    graph: &ReachabilityGraph<C>,
) -> Result<Vec<Vec<NodeId>>, ExecutionError> {
    if !graph.is_complete() {
        return Err(ExecutionError::PartialGraph);
    }
    let (comp_of, comps) = components(graph);
    let mut terminal: Vec<Vec<NodeId>> = comps
        .into_iter()
        .enumerate()
        .filter(|(c, members)| {
            members.iter().all(|&v| graph.successors(v).iter().all(|&(_, w)| comp_of[w] == *c))
        })
        .map(|(_, mut members)| {
            members.sort_unstable();
            members
        })
        .collect();
    terminal.sort_unstable();
    Ok(terminal)
}

/// Tarjan components in reverse topological order plus the component index
/// of every node.
fn components<C: Population>(graph: &ReachabilityGraph<C>) -> (Vec<usize>, Vec<Vec<NodeId>>) {
    let mut g: DiGraph<(), ()> = DiGraph::with_capacity(graph.len(), graph.edge_count());
    for _ in 0..graph.len() {
        g.add_node(());
    }
    for v in 0..graph.len() {
        for &(_, w) in graph.successors(v) {
            g.add_edge(NodeIndex::new(v), NodeIndex::new(w), ());
        }
    }
    let sccs: Vec<Vec<NodeId>> =
        tarjan_scc(&g).into_iter().map(|c| c.into_iter().map(NodeIndex::index).collect()).collect();
    let mut comp_of = vec![0; graph.len()];
    for (c, members) in sccs.iter().enumerate() {
        for &v in members {
            comp_of[v] = c;
        }
    }
    (comp_of, sccs)
}

/// Result of an output-stability query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stability {
    Stable(u8),
    NotStable,
}

impl std::fmt::Display for Stability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Stability::Stable(x) => write!(f, "stable-{x}"),
            Stability::NotStable => f.write_str("not-stable"),
        }
    }
}

fn output_bits(o: OutputValue) -> u8 {
    match o {
        OutputValue::Zero => 0b001,
        OutputValue::One => 0b010,
        OutputValue::Bottom => 0b100,
    }
}

fn stability_of(bits: u8) -> Stability {
    match bits {
        0b001 => Stability::Stable(0),
        0b010 => Stability::Stable(1),
        _ => Stability::NotStable,
    }
}

/// Output stability of every node of a complete graph, computed once over
/// the component condensation.
pub fn stability_map<C: Population>(
    p: &ProtocolSpec,
    graph: &ReachabilityGraph<C>,
) -> Result<Vec<Stability>, ExecutionError> {
    if !graph.is_complete() {
        return Err(ExecutionError::PartialGraph);
    }
    let (comp_of, comps) = components(graph);
    // successors' components come first in Tarjan order
    let mut reach = vec![0u8; comps.len()];
    for (c, members) in comps.iter().enumerate() {
        let mut bits = 0;
        for &v in members {
            bits |= output_bits(graph.node(v).global_output(p));
            for &(_, w) in graph.successors(v) {
                if comp_of[w] != c {
                    bits |= reach[comp_of[w]];
                }
            }
        }
        reach[c] = bits;
    }
    Ok((0..graph.len()).map(|v| stability_of(reach[comp_of[v]])).collect())
}

/// `Stable(x)` iff every configuration reachable from `c` has output `x`.
pub fn output_stable<C: Population>(
    p: &ProtocolSpec,
    c: &C,
    opts: &ExploreOptions,
) -> Result<Stability, ExecutionError> {
    let graph = reachable(p, c, opts)?;
    let bits = graph.nodes().fold(0, |acc, (_, d)| acc | output_bits(d.global_output(p)));
    Ok(stability_of(bits))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PredicateValue {
    Value(u8),
    NotWellSpecified,
}

impl std::fmt::Display for PredicateValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PredicateValue::Value(x) => write!(f, "{x}"),
            PredicateValue::NotWellSpecified => f.write_str("NWS"),
        }
    }
}

/// Predicate value read off the terminal components of a complete graph.
pub fn predicate_from_graph<C: Population>(
    p: &ProtocolSpec,
    graph: &ReachabilityGraph<C>,
) -> Result<PredicateValue, ExecutionError> {
    let mut bits = 0;
    for scc in terminal_sccs(graph)? {
        for v in scc {
            bits |= output_bits(graph.node(v).global_output(p));
        }
    }
    Ok(match stability_of(bits) {
        Stability::Stable(x) => PredicateValue::Value(x),
        Stability::NotStable => PredicateValue::NotWellSpecified,
    })
}

/// The value the protocol computes on `input`, or `NotWellSpecified` when
/// some fair execution fails to stabilise to a common output.
pub fn predicate_value<C: Population>(
    p: &ProtocolSpec,
    input: &[String],
    opts: &ExploreOptions,
) -> Result<PredicateValue, ExecutionError> {
    let start = C::initial(p, input)?;
    let graph = reachable(p, &start, opts)?;
    predicate_from_graph(p, &graph)
}

/// All input vectors over `alphabet` with `min_n <= n <= max_n`, by length,
/// then lexicographically in alphabet order.
pub fn enumerate_inputs(alphabet: &[String], min_n: usize, max_n: usize) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for n in min_n.max(1)..=max_n {
        out.extend(inputs_of_length(alphabet, n));
    }
    out
}

/// Input vectors of exactly length `n`, lexicographic in alphabet order.
pub fn inputs_of_length(alphabet: &[String], n: usize) -> impl Iterator<Item = Vec<String>> + '_ {
    let k = alphabet.len();
    let total = (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    (0..total).map(move |mut code| {
        let mut v = vec![String::new(); n];
        for slot in v.iter_mut().rev() {
            *slot = alphabet[(code % k as u128) as usize].clone();
            code /= k as u128;
        }
        v
    })
}

/// A finite execution prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace<C> {
    pub start: C,
    pub steps: Vec<(StepLabel, C)>,
    pub seed: u64,
}

impl<C: Population> Trace<C> {
    pub fn last(&self) -> &C {
        self.steps.last().map(|(_, c)| c).unwrap_or(&self.start)
    }

    /// Line per step: `i j transition-index -> config`.
    pub fn to_text(&self, p: &ProtocolSpec) -> String {
        let mut out = format!("seed: {}\nstart: {}\n", self.seed, self.start.render_inline(p));
        for (label, c) in &self.steps {
            let _ = writeln!(out, "{label} -> {}", c.render_inline(p));
        }
        out
    }
}

/// Uniform random scheduler over enabled steps, reproducible per seed.
pub fn run_random<C: Population>(p: &ProtocolSpec, start: &C, seed: u64, max_steps: usize) -> Trace<C> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut steps = Vec::new();
    let mut current = start.clone();
    while steps.len() < max_steps {
        let enabled = current.enabled_steps(p);
        if enabled.is_empty() {
            break;
        }
        let label = enabled[rng.random_range(0..enabled.len())];
        current = current.successor(p, label);
        steps.push((label, current.clone()));
    }
    Trace { start: start.clone(), steps, seed }
}

/// Like [`run_random`] but keeps only the final configuration, stopping early
/// once `stop` holds.
pub fn run_random_until<C: Population>(
    p: &ProtocolSpec,
    start: &C,
    seed: u64,
    max_steps: usize,
    stop: impl Fn(&C) -> bool,
) -> (C, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = start.clone();
    for taken in 0..max_steps {
        if stop(&current) {
            return (current, taken);
        }
        let enabled = current.enabled_steps(p);
        if enabled.is_empty() {
            return (current, taken);
        }
        let label = enabled[rng.random_range(0..enabled.len())];
        current = current.successor(p, label);
    }
    (current, max_steps)
}
