use std::fmt;
use std::hash::Hash;

use super::protocol::{EdgeId, Interaction, Model, ProtocolSpec, Side, StateId, TransitionId};
use super::ModelError;

/// A step `t_{i,j}`. Agent indices are 0-based here and printed 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StepLabel {
    pub transition: TransitionId,
    pub initiator: usize,
    pub responder: usize,
}

impl StepLabel {
    pub fn new(transition: TransitionId, initiator: usize, responder: usize) -> Self {
        StepLabel { transition, initiator, responder }
    }
}

impl fmt::Display for StepLabel {
    /// `i j transition-index` with 1-based agents.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.initiator + 1, self.responder + 1, self.transition)
    }
}

/// Consensus output of a configuration: `0`, `1`, or no consensus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OutputValue {
    Zero,
    One,
    Bottom,
}

impl OutputValue {
    pub fn from_bit(bit: u8) -> Self {
        if bit == 0 {
            OutputValue::Zero
        } else {
            OutputValue::One
        }
    }

    pub fn bit(self) -> Option<u8> {
        match self {
            OutputValue::Zero => Some(0),
            OutputValue::One => Some(1),
            OutputValue::Bottom => None,
        }
    }
}

impl fmt::Display for OutputValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutputValue::Zero => f.write_str("0"),
            OutputValue::One => f.write_str("1"),
            OutputValue::Bottom => f.write_str("bot"),
        }
    }
}

fn aggregate(outputs: impl Iterator<Item = u8>) -> OutputValue {
    let mut seen = [false; 2];
    for x in outputs {
        seen[x as usize] = true;
    }
    match seen {
        [true, false] => OutputValue::Zero,
        [false, true] => OutputValue::One,
        _ => OutputValue::Bottom,
    }
}

/// Global-protocol semantics shared by vector and matrix configurations.
pub trait Population: Clone + Eq + Hash + fmt::Debug + Send + Sync {
    /// The model whose configurations this type represents.
    const MODEL: Model;

    /// Global input: `ι` per agent; mediated edges start at `s0`.
    fn initial<S: AsRef<str>>(p: &ProtocolSpec, input: &[S]) -> Result<Self, ModelError>;

    /// Number of agents.
    fn size(&self) -> usize;

    /// Agent state of agent `i`.
    fn agent(&self, i: usize) -> StateId;

    /// The left-hand side that agents `i` (initiator) and `j` (responder)
    /// present to the transition relation.
    fn interaction(&self, i: usize, j: usize) -> Interaction;

    /// Writes `after` into the cells of agents `i` and `j` without any check.
    fn write(&mut self, i: usize, j: usize, after: &Interaction);

    /// Text rendering using the protocol's symbol names. Plain: one line of
    /// comma-separated states; mediated: one line per matrix row.
    fn render(&self, p: &ProtocolSpec) -> Vec<String>;

    /// Symmetry-reduced representative. Identity unless overridden.
    fn canonical(&self) -> Self {
        self.clone()
    }

    fn agents(&self) -> Vec<StateId> {
        (0..self.size()).map(|i| self.agent(i)).collect()
    }

    fn global_output(&self, p: &ProtocolSpec) -> OutputValue {
        aggregate((0..self.size()).map(|i| p.output(self.agent(i))))
    }

    fn enabled_steps(&self, p: &ProtocolSpec) -> Vec<StepLabel> {
        let n = self.size();
        let mut steps = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                for &t in p.transitions_from(&self.interaction(i, j)) {
                    steps.push(StepLabel::new(t, i, j));
                }
            }
        }
        steps.sort_unstable();
        steps
    }

    fn is_enabled(&self, p: &ProtocolSpec, label: StepLabel) -> bool {
        label.initiator != label.responder
            && label.initiator < self.size()
            && label.responder < self.size()
            && p.transition(label.transition)
                .is_some_and(|t| t.before == self.interaction(label.initiator, label.responder))
    }

    fn apply_step(&self, p: &ProtocolSpec, label: StepLabel) -> Result<Self, ModelError> {
        if !self.is_enabled(p, label) {
            return Err(ModelError::StepNotEnabled(label));
        }
        Ok(self.successor(p, label))
    }

    /// Applies an enabled step. Callers must have checked enabledness.
    fn successor(&self, p: &ProtocolSpec, label: StepLabel) -> Self {
        let t = p.transitions()[label.transition];
        let mut next = self.clone();
        next.write(label.initiator, label.responder, &t.after);
        next
    }

    fn render_inline(&self, p: &ProtocolSpec) -> String {
        self.render(p).join(";")
    }
}

/// Vector of agent states.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    agents: Box<[StateId]>,
}

impl Configuration {
    pub fn from_states(agents: Vec<StateId>) -> Self {
        Configuration { agents: agents.into_boxed_slice() }
    }

    /// Resolves state names against `p`.
    pub fn from_names<S: AsRef<str>>(p: &ProtocolSpec, names: &[S]) -> Result<Self, ModelError> {
        if names.is_empty() {
            return Err(ModelError::EmptyPopulation);
        }
        names
            .iter()
            .map(|s| {
                p.state_id_str(s.as_ref()).ok_or_else(|| ModelError::UnknownState(s.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Configuration::from_states)
    }

    pub fn states(&self) -> &[StateId] {
        &self.agents
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        // agent i moves to position perm[i]
        let mut agents = vec![0; self.agents.len()];
        for (i, &q) in self.agents.iter().enumerate() {
            agents[perm[i]] = q;
        }
        Configuration::from_states(agents)
    }
}

fn check_model(p: &ProtocolSpec, model: Model) -> Result<(), ModelError> {
    if p.model() != model {
        return Err(ModelError::ModelMismatch { expected: model, found: p.model() });
    }
    Ok(())
}

impl Population for Configuration {
    const MODEL: Model = Model::Pp;

    fn initial<S: AsRef<str>>(p: &ProtocolSpec, input: &[S]) -> Result<Self, ModelError> {
        check_model(p, Model::Pp)?;
        if input.is_empty() {
            return Err(ModelError::EmptyPopulation);
        }
        input
            .iter()
            .map(|s| p.input_state(s.as_ref()))
            .collect::<Result<Vec<_>, _>>()
            .map(Configuration::from_states)
    }

    fn size(&self) -> usize {
        self.agents.len()
    }

    fn agent(&self, i: usize) -> StateId {
        self.agents[i]
    }

    fn interaction(&self, i: usize, j: usize) -> Interaction {
        Interaction {
            initiator: Side { state: self.agents[i], edge: None },
            responder: Side { state: self.agents[j], edge: None },
        }
    }

    fn write(&mut self, i: usize, j: usize, after: &Interaction) {
        self.agents[i] = after.initiator.state;
        self.agents[j] = after.responder.state;
    }

    fn render(&self, p: &ProtocolSpec) -> Vec<String> {
        vec![self.agents.iter().map(|&q| p.state(q).as_str()).collect::<Vec<_>>().join(",")]
    }

    fn canonical(&self) -> Self {
        let mut agents = self.agents.to_vec();
        agents.sort_unstable();
        Configuration::from_states(agents)
    }
}

/// `n × n` matrix: agent states on the diagonal, cell `(i, j)` is agent
/// `i`'s side of edge `{i, j}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MediatedConfiguration {
    n: usize,
    cells: Box<[u16]>,
}

impl MediatedConfiguration {
    /// Builds a matrix from its agent states and an edge filler.
    pub fn from_fn(agents: &[StateId], mut edge: impl FnMut(usize, usize) -> EdgeId) -> Self {
        let n = agents.len();
        let mut cells = vec![0u16; n * n];
        for i in 0..n {
            for j in 0..n {
                cells[i * n + j] = if i == j { agents[i] } else { edge(i, j) };
            }
        }
        MediatedConfiguration { n, cells: cells.into_boxed_slice() }
    }

    /// Parses rows of comma-separated cell names against `p`.
    pub fn from_rows<S: AsRef<str>>(p: &ProtocolSpec, rows: &[S]) -> Result<Self, ModelError> {
        let n = rows.len();
        if n == 0 {
            return Err(ModelError::EmptyPopulation);
        }
        let mut cells = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            let row: Vec<&str> = row.as_ref().split(',').map(str::trim).collect();
            if row.len() != n {
                return Err(ModelError::NotSquare { rows: n, width: row.len() });
            }
            for (j, cell) in row.into_iter().enumerate() {
                let id = if i == j {
                    p.state_id_str(cell).ok_or_else(|| ModelError::UnknownState(cell.into()))?
                } else {
                    p.edge_id_str(cell).ok_or_else(|| ModelError::UnknownEdgeState(cell.into()))?
                };
                cells.push(id);
            }
        }
        Ok(MediatedConfiguration { n, cells: cells.into_boxed_slice() })
    }

    /// Edge side `(i, j)`; `i != j`.
    pub fn edge(&self, i: usize, j: usize) -> EdgeId {
        debug_assert_ne!(i, j);
        self.cells[i * self.n + j]
    }

    pub fn set_agent(&mut self, i: usize, q: StateId) {
        self.cells[i * self.n + i] = q;
    }

    pub fn set_edge(&mut self, i: usize, j: usize, e: EdgeId) {
        debug_assert_ne!(i, j);
        self.cells[i * self.n + j] = e;
    }

    pub fn cells(&self) -> &[u16] {
        &self.cells
    }
}

impl Population for MediatedConfiguration {
    const MODEL: Model = Model::Mpp;

    fn initial<S: AsRef<str>>(p: &ProtocolSpec, input: &[S]) -> Result<Self, ModelError> {
        check_model(p, Model::Mpp)?;
        if input.is_empty() {
            return Err(ModelError::EmptyPopulation);
        }
        let agents = input.iter().map(|s| p.input_state(s.as_ref())).collect::<Result<Vec<_>, _>>()?;
        let s0 = p.initial_edge().ok_or(ModelError::MissingInitialEdge)?;
        Ok(MediatedConfiguration::from_fn(&agents, |_, _| s0))
    }

    fn size(&self) -> usize {
        self.n
    }

    fn agent(&self, i: usize) -> StateId {
        self.cells[i * self.n + i]
    }

    fn interaction(&self, i: usize, j: usize) -> Interaction {
        Interaction {
            initiator: Side { state: self.agent(i), edge: Some(self.edge(i, j)) },
            responder: Side { state: self.agent(j), edge: Some(self.edge(j, i)) },
        }
    }

    fn write(&mut self, i: usize, j: usize, after: &Interaction) {
        self.set_agent(i, after.initiator.state);
        self.set_agent(j, after.responder.state);
        if let Some(e) = after.initiator.edge {
            self.set_edge(i, j, e);
        }
        if let Some(e) = after.responder.edge {
            self.set_edge(j, i, e);
        }
    }

    fn render(&self, p: &ProtocolSpec) -> Vec<String> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| {
                        if i == j {
                            p.state(self.agent(i)).to_string()
                        } else {
                            p.edge(self.edge(i, j)).to_string()
                        }
                    })
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library;
    use proptest::prelude::*;

    #[test]
    fn global_input_and_output() {
        let p = library::detect_one().spec;
        let c = Configuration::initial(&p, &["0", "1"]).unwrap();
        assert_eq!(c.states(), &[0, 1]);
        assert_eq!(c.global_output(&p), OutputValue::Bottom);
        let c = Configuration::initial(&p, &["1", "1"]).unwrap();
        assert_eq!(c.global_output(&p), OutputValue::One);
        let c = Configuration::initial(&p, &["0", "0", "0"]).unwrap();
        assert_eq!(c.global_output(&p), OutputValue::Zero);
        assert!(matches!(Configuration::initial(&p, &["2"]), Err(ModelError::UnknownInputSymbol(_))));
        assert!(matches!(Configuration::initial::<&str>(&p, &[]), Err(ModelError::EmptyPopulation)));
        assert!(matches!(MediatedConfiguration::initial(&p, &["0"]), Err(ModelError::ModelMismatch { .. })));
    }

    #[test]
    fn mediated_global_input_fills_off_diagonal_with_s0() {
        let p = library::detect_one_once().spec;
        let c = MediatedConfiguration::initial(&p, &["1", "0"]).unwrap();
        assert_eq!(c.render(&p), vec!["1,fresh", "fresh,0"]);
    }

    #[test]
    fn enabled_and_apply() {
        let p = library::detect_one().spec;
        let c = Configuration::initial(&p, &["1", "0"]).unwrap();
        assert_eq!(c.enabled_steps(&p), vec![StepLabel::new(0, 0, 1)]);
        let next = c.apply_step(&p, StepLabel::new(0, 0, 1)).unwrap();
        assert_eq!(next.render(&p), vec!["1,1"]);
        let zero = Configuration::initial(&p, &["0", "0"]).unwrap();
        assert!(zero.enabled_steps(&p).is_empty());
        assert!(matches!(zero.apply_step(&p, StepLabel::new(0, 0, 1)), Err(ModelError::StepNotEnabled(_))));
    }

    #[test]
    fn threshold2_enumerates_both_orders() {
        let p = library::threshold2().spec;
        let c = Configuration::initial(&p, &["1", "1", "0"]).unwrap();
        // (1,1) -> (2,2) is transition 0; enumerated by hand over ordered pairs
        assert_eq!(c.enabled_steps(&p), vec![StepLabel::new(0, 0, 1), StepLabel::new(0, 1, 0)]);
        let next = c.apply_step(&p, StepLabel::new(0, 0, 1)).unwrap();
        assert_eq!(next.render(&p), vec!["2,2,0"]);
    }

    #[test]
    fn mediated_step_disables_pair_after_firing() {
        let p = library::detect_one_once().spec;
        let c = MediatedConfiguration::initial(&p, &["1", "0"]).unwrap();
        let steps = c.enabled_steps(&p);
        assert_eq!(steps, vec![StepLabel::new(0, 0, 1)]);
        let next = c.apply_step(&p, steps[0]).unwrap();
        assert_eq!(next.render(&p), vec!["1,used", "used,1"]);
        assert!(next.enabled_steps(&p).is_empty());
    }

    #[test]
    fn immediate_observation_flags() {
        assert!(library::detect_one().spec.is_immediate_observation());
        assert!(!library::threshold2().spec.is_immediate_observation());
        assert!(!library::detect_one_once().spec.is_immediate_observation());
    }

    fn config_strategy() -> impl Strategy<Value = Vec<StateId>> {
        prop::collection::vec(0u16..3, 2..6)
    }

    proptest! {
        #[test]
        fn frame_property(states in config_strategy()) {
            let p = library::threshold2().spec;
            let c = Configuration::from_states(states);
            for label in c.enabled_steps(&p) {
                let next = c.apply_step(&p, label).unwrap();
                for k in 0..c.size() {
                    if k != label.initiator && k != label.responder {
                        prop_assert_eq!(c.agent(k), next.agent(k));
                    }
                }
            }
        }

        #[test]
        fn mediated_frame_property(agents in prop::collection::vec(0u16..2, 2..5), seed in any::<u64>()) {
            let p = library::detect_one_once().spec;
            let mut bits = seed;
            let c = MediatedConfiguration::from_fn(&agents, |_, _| { bits = bits.rotate_left(1); (bits & 1) as u16 });
            let n = c.size();
            for label in c.enabled_steps(&p) {
                let next = c.apply_step(&p, label).unwrap();
                let (i, j) = (label.initiator, label.responder);
                for k in 0..n {
                    for l in 0..n {
                        let touched = [(i, i), (i, j), (j, j), (j, i)].contains(&(k, l));
                        if !touched {
                            prop_assert_eq!(c.cells()[k * n + l], next.cells()[k * n + l]);
                        }
                    }
                }
            }
        }

        #[test]
        fn permutation_commutes_with_steps(states in config_strategy(), rot in 0usize..6) {
            let p = library::threshold2().spec;
            let c = Configuration::from_states(states);
            let n = c.size();
            let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
            for label in c.enabled_steps(&p) {
                let moved = StepLabel::new(label.transition, perm[label.initiator], perm[label.responder]);
                let lhs = c.apply_step(&p, label).unwrap().permuted(&perm);
                let rhs = c.permuted(&perm).apply_step(&p, moved).unwrap();
                prop_assert_eq!(lhs, rhs);
            }
        }

        #[test]
        fn enabled_steps_are_pure(states in config_strategy()) {
            let p = library::threshold2().spec;
            let c = Configuration::from_states(states);
            let before = c.enabled_steps(&p);
            for label in &before {
                let _ = c.apply_step(&p, *label).unwrap();
            }
            prop_assert_eq!(c.enabled_steps(&p), before);
        }

        #[test]
        fn output_consensus_iff_agreement(states in config_strategy()) {
            let p = library::threshold2().spec;
            let c = Configuration::from_states(states);
            let outs: Vec<u8> = c.states().iter().map(|&q| p.output(q)).collect();
            let expected = if outs.iter().all(|&x| x == outs[0]) {
                OutputValue::from_bit(outs[0])
            } else {
                OutputValue::Bottom
            };
            prop_assert_eq!(c.global_output(&p), expected);
        }
    }
}
