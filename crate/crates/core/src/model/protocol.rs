use std::collections::{HashMap, HashSet};
use std::fmt;

use super::symbol::{AgentState, EdgeState};
use super::ModelError;

/// Index into a protocol's agent-state table.
pub type StateId = u16;
/// Index into a protocol's edge-state table.
pub type EdgeId = u16;
/// Index into a protocol's transition list.
pub type TransitionId = usize;

/// Plain (vector configurations) or mediated (matrix configurations).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Model {
    Pp,
    Mpp,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::Pp => f.write_str("pp"),
            Model::Mpp => f.write_str("mpp"),
        }
    }
}

/// One participant of an interaction: agent state plus, in mediated
/// protocols, its side of the shared edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Side {
    pub state: StateId,
    pub edge: Option<EdgeId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interaction {
    pub initiator: Side,
    pub responder: Side,
}

/// A non-silent transition record `before -> after`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transition {
    pub before: Interaction,
    pub after: Interaction,
}

impl Transition {
    pub fn keeps_initiator(&self) -> bool {
        self.before.initiator == self.after.initiator
    }
}

/// A PP or MPP definition with resolved symbol tables.
///
/// Transitions are stored as a set of non-silent records; a left-hand side
/// with no record is a silent interaction and never yields a step.
#[derive(Clone, Debug)]
pub struct ProtocolSpec {
    model: Model,
    states: Vec<AgentState>,
    alphabet: Vec<String>,
    edge_states: Vec<EdgeState>,
    initial_edge: Option<EdgeId>,
    input: Vec<StateId>,
    output: Vec<u8>,
    transitions: Vec<Transition>,
    state_index: HashMap<AgentState, StateId>,
    edge_index: HashMap<EdgeState, EdgeId>,
    alphabet_index: HashMap<String, usize>,
    by_lhs: HashMap<Interaction, Vec<TransitionId>>,
}

impl PartialEq for ProtocolSpec {
    fn eq(&self, other: &Self) -> bool {
        self.model == other.model
            && self.states == other.states
            && self.alphabet == other.alphabet
            && self.edge_states == other.edge_states
            && self.initial_edge == other.initial_edge
            && self.input == other.input
            && self.output == other.output
            && self.transitions == other.transitions
    }
}

impl Eq for ProtocolSpec {}

impl ProtocolSpec {
    pub fn model(&self) -> Model {
        self.model
    }

    pub fn is_mediated(&self) -> bool {
        self.model == Model::Mpp
    }

    pub fn states(&self) -> &[AgentState] {
        &self.states
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn edge_states(&self) -> &[EdgeState] {
        &self.edge_states
    }

    pub fn initial_edge(&self) -> Option<EdgeId> {
        self.initial_edge
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn transition(&self, id: TransitionId) -> Option<&Transition> {
        self.transitions.get(id)
    }

    pub fn state_id(&self, state: &AgentState) -> Option<StateId> {
        self.state_index.get(state).copied()
    }

    pub fn state_id_str(&self, name: &str) -> Option<StateId> {
        AgentState::new(name).ok().and_then(|q| self.state_id(&q))
    }

    pub fn edge_id(&self, edge: &EdgeState) -> Option<EdgeId> {
        self.edge_index.get(edge).copied()
    }

    pub fn edge_id_str(&self, name: &str) -> Option<EdgeId> {
        name.parse::<EdgeState>().ok().and_then(|e| self.edge_id(&e))
    }

    pub fn state(&self, id: StateId) -> &AgentState {
        &self.states[id as usize]
    }

    pub fn edge(&self, id: EdgeId) -> &EdgeState {
        &self.edge_states[id as usize]
    }

    /// The input map applied to one symbol.
    pub fn input_state(&self, symbol: &str) -> Result<StateId, ModelError> {
        self.alphabet_index
            .get(symbol)
            .map(|&a| self.input[a])
            .ok_or_else(|| ModelError::UnknownInputSymbol(symbol.to_string()))
    }

    /// Per-agent output `ω(q)`.
    pub fn output(&self, state: StateId) -> u8 {
        self.output[state as usize]
    }

    /// Transitions whose left-hand side is exactly `lhs`.
    pub fn transitions_from(&self, lhs: &Interaction) -> &[TransitionId] {
        self.by_lhs.get(lhs).map(Vec::as_slice).unwrap_or(&[])
    }

    /// True iff no transition changes the initiator: its agent state and,
    /// for mediated protocols, its edge side.
    pub fn is_immediate_observation(&self) -> bool {
        self.transitions.iter().all(Transition::keeps_initiator)
    }

    /// Copy of this protocol with a different per-agent output map.
    pub fn with_outputs(&self, output: impl Fn(StateId) -> u8) -> Result<Self, ModelError> {
        let output: Vec<u8> = (0..self.states.len() as StateId).map(output).collect();
        if let Some(bad) = output.iter().find(|&&x| x > 1) {
            return Err(ModelError::InvalidOutput(bad.to_string()));
        }
        Ok(ProtocolSpec { output, ..self.clone() })
    }

    /// Copy of this protocol keeping only the transitions selected by `keep`.
    pub fn retain_transitions(&self, keep: impl Fn(TransitionId, &Transition) -> bool) -> Self {
        let transitions = self
            .transitions
            .iter()
            .enumerate()
            .filter(|(i, t)| keep(*i, t))
            .map(|(_, t)| *t)
            .collect::<Vec<_>>();
        ProtocolSpec { by_lhs: index_lhs(&transitions), transitions, ..self.clone() }
    }

    pub fn to_builder(&self) -> ProtocolBuilder {
        let mut b = ProtocolBuilder::new(self.model);
        b.states = self.states.iter().map(|q| q.to_string()).collect();
        b.alphabet = self.alphabet.clone();
        b.edge_states = self.edge_states.iter().map(|e| e.to_string()).collect();
        b.initial_edge = self.initial_edge.map(|e| self.edge(e).to_string());
        b.input = self
            .alphabet
            .iter()
            .zip(&self.input)
            .map(|(a, &q)| (a.clone(), self.state(q).to_string()))
            .collect();
        b.output = self.states.iter().zip(&self.output).map(|(q, &x)| (q.to_string(), x)).collect();
        b.transitions = self.transitions.iter().map(|t| self.transition_names(t)).collect();
        b
    }

    /// Symbolic form of a transition: left and right sides as name tuples.
    pub fn transition_names(&self, t: &Transition) -> (Vec<String>, Vec<String>) {
        (self.interaction_names(&t.before), self.interaction_names(&t.after))
    }

    fn interaction_names(&self, x: &Interaction) -> Vec<String> {
        let mut out = Vec::with_capacity(4);
        for side in [x.initiator, x.responder] {
            out.push(self.state(side.state).to_string());
            if let Some(e) = side.edge {
                out.push(self.edge(e).to_string());
            }
        }
        out
    }

    /// Human-readable `p q -> p' q'` rendering.
    pub fn describe_transition(&self, t: &Transition) -> String {
        let (l, r) = self.transition_names(t);
        format!("{} -> {}", l.join(" "), r.join(" "))
    }
}

fn index_lhs(transitions: &[Transition]) -> HashMap<Interaction, Vec<TransitionId>> {
    let mut by_lhs: HashMap<Interaction, Vec<TransitionId>> = HashMap::new();
    for (i, t) in transitions.iter().enumerate() {
        by_lhs.entry(t.before).or_default().push(i);
    }
    by_lhs
}

/// Name-based constructor for [`ProtocolSpec`]; all validation happens in
/// [`ProtocolBuilder::build`].
#[derive(Clone, Debug, Default)]
pub struct ProtocolBuilder {
    model: Option<Model>,
    states: Vec<String>,
    alphabet: Vec<String>,
    edge_states: Vec<String>,
    initial_edge: Option<String>,
    input: Vec<(String, String)>,
    output: Vec<(String, u8)>,
    transitions: Vec<(Vec<String>, Vec<String>)>,
}

fn owned<I, S>(items: I) -> Vec<String>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    items.into_iter().map(|s| s.as_ref().to_string()).collect()
}

impl ProtocolBuilder {
    pub fn new(model: Model) -> Self {
        ProtocolBuilder { model: Some(model), ..Default::default() }
    }

    pub fn states<I: IntoIterator<Item = S>, S: AsRef<str>>(mut self, states: I) -> Self {
        self.states.extend(owned(states));
        self
    }

    pub fn alphabet<I: IntoIterator<Item = S>, S: AsRef<str>>(mut self, symbols: I) -> Self {
        self.alphabet.extend(owned(symbols));
        self
    }

    pub fn edge_states<I: IntoIterator<Item = S>, S: AsRef<str>>(mut self, edges: I) -> Self {
        self.edge_states.extend(owned(edges));
        self
    }

    pub fn initial_edge(mut self, edge: impl AsRef<str>) -> Self {
        self.initial_edge = Some(edge.as_ref().to_string());
        self
    }

    pub fn input(mut self, symbol: impl AsRef<str>, state: impl AsRef<str>) -> Self {
        self.input.push((symbol.as_ref().to_string(), state.as_ref().to_string()));
        self
    }

    pub fn output(mut self, state: impl AsRef<str>, value: u8) -> Self {
        self.output.push((state.as_ref().to_string(), value));
        self
    }

    /// Adds `before -> after`, each a tuple of 2 (plain) or 4 (mediated)
    /// symbols in the order initiator, [initiator edge], responder,
    /// [responder edge].
    pub fn transition<I, J, S, T>(mut self, before: I, after: J) -> Self
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        self.transitions.push((owned(before), owned(after)));
        self
    }

    pub fn build(self) -> Result<ProtocolSpec, ModelError> {
        let model = self.model.unwrap_or(Model::Pp);
        if self.states.is_empty() {
            return Err(ModelError::Empty("states"));
        }
        if self.alphabet.is_empty() {
            return Err(ModelError::Empty("alphabet"));
        }

        let mut states = Vec::with_capacity(self.states.len());
        let mut state_index = HashMap::new();
        for name in &self.states {
            let q = AgentState::new(name.as_str())?;
            let id = StateId::try_from(states.len()).map_err(|_| ModelError::TooManySymbols)?;
            if state_index.insert(q.clone(), id).is_some() {
                return Err(ModelError::DuplicateSymbol(name.clone()));
            }
            states.push(q);
        }

        let mut alphabet_index = HashMap::new();
        for (i, a) in self.alphabet.iter().enumerate() {
            AgentState::new(a.as_str())?;
            if alphabet_index.insert(a.clone(), i).is_some() {
                return Err(ModelError::DuplicateSymbol(a.clone()));
            }
        }

        let mut edge_states = Vec::with_capacity(self.edge_states.len());
        let mut edge_index = HashMap::new();
        match model {
            Model::Pp => {
                if !self.edge_states.is_empty() || self.initial_edge.is_some() {
                    return Err(ModelError::EdgeStatesInPlainProtocol);
                }
            }
            Model::Mpp => {
                if self.edge_states.is_empty() {
                    return Err(ModelError::Empty("edge-states"));
                }
                for name in &self.edge_states {
                    let e: EdgeState = name.parse()?;
                    let id = EdgeId::try_from(edge_states.len()).map_err(|_| ModelError::TooManySymbols)?;
                    if edge_index.insert(e.clone(), id).is_some() {
                        return Err(ModelError::DuplicateSymbol(name.clone()));
                    }
                    edge_states.push(e);
                }
            }
        }
        let lookup_state = |name: &str| -> Result<StateId, ModelError> {
            AgentState::new(name)
                .ok()
                .and_then(|q| state_index.get(&q).copied())
                .ok_or_else(|| ModelError::UnknownState(name.to_string()))
        };
        let lookup_edge = |name: &str| -> Result<EdgeId, ModelError> {
            name.parse::<EdgeState>()
                .ok()
                .and_then(|e| edge_index.get(&e).copied())
                .ok_or_else(|| ModelError::UnknownEdgeState(name.to_string()))
        };

        let initial_edge = match (model, &self.initial_edge) {
            (Model::Mpp, Some(e)) => Some(lookup_edge(e)?),
            (Model::Mpp, None) => return Err(ModelError::MissingInitialEdge),
            (Model::Pp, _) => None,
        };

        let mut input: Vec<Option<StateId>> = vec![None; self.alphabet.len()];
        for (a, q) in &self.input {
            let slot = alphabet_index.get(a).ok_or_else(|| ModelError::UnknownInputSymbol(a.clone()))?;
            if input[*slot].replace(lookup_state(q)?).is_some() {
                return Err(ModelError::DuplicateMapping(a.clone()));
            }
        }
        let input = input
            .into_iter()
            .zip(&self.alphabet)
            .map(|(q, a)| q.ok_or_else(|| ModelError::MissingInput(a.clone())))
            .collect::<Result<Vec<_>, _>>()?;

        let mut output: Vec<Option<u8>> = vec![None; states.len()];
        for (q, x) in &self.output {
            if *x > 1 {
                return Err(ModelError::InvalidOutput(x.to_string()));
            }
            let id = lookup_state(q)?;
            if output[id as usize].replace(*x).is_some() {
                return Err(ModelError::DuplicateMapping(q.clone()));
            }
        }
        let output = output
            .into_iter()
            .zip(&states)
            .map(|(x, q)| x.ok_or_else(|| ModelError::MissingOutput(q.to_string())))
            .collect::<Result<Vec<_>, _>>()?;

        let arity = match model {
            Model::Pp => 2,
            Model::Mpp => 4,
        };
        let interaction = |names: &[String]| -> Result<Interaction, ModelError> {
            if names.len() != arity {
                return Err(ModelError::ArityMismatch { expected: arity, found: names.len() });
            }
            Ok(match model {
                Model::Pp => Interaction {
                    initiator: Side { state: lookup_state(&names[0])?, edge: None },
                    responder: Side { state: lookup_state(&names[1])?, edge: None },
                },
                Model::Mpp => Interaction {
                    initiator: Side { state: lookup_state(&names[0])?, edge: Some(lookup_edge(&names[1])?) },
                    responder: Side { state: lookup_state(&names[2])?, edge: Some(lookup_edge(&names[3])?) },
                },
            })
        };
        let mut transitions = Vec::with_capacity(self.transitions.len());
        let mut seen = HashSet::new();
        for (before, after) in &self.transitions {
            let t = Transition { before: interaction(before)?, after: interaction(after)? };
            let text = format!("{} -> {}", before.join(" "), after.join(" "));
            if t.before == t.after {
                return Err(ModelError::SilentTransition(text));
            }
            if !seen.insert(t) {
                return Err(ModelError::DuplicateTransition(text));
            }
            transitions.push(t);
        }

        Ok(ProtocolSpec {
            model,
            by_lhs: index_lhs(&transitions),
            states,
            alphabet: self.alphabet,
            edge_states,
            initial_edge,
            input,
            output,
            transitions,
            state_index,
            edge_index,
            alphabet_index,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn detect_one() -> ProtocolBuilder {
        ProtocolBuilder::new(Model::Pp)
            .states(["0", "1"])
            .alphabet(["0", "1"])
            .input("0", "0")
            .input("1", "1")
            .output("0", 0)
            .output("1", 1)
            .transition(["1", "0"], ["1", "1"])
    }

    #[test]
    fn builds_and_indexes() {
        let p = detect_one().build().unwrap();
        assert_eq!(p.states().len(), 2);
        assert_eq!(p.input_state("1").unwrap(), 1);
        assert!(p.is_immediate_observation());
        let lhs = p.transitions()[0].before;
        assert_eq!(p.transitions_from(&lhs), &[0]);
    }

    #[test]
    fn rejects_malformed_definitions() {
        assert!(matches!(detect_one().input("2", "0").build(), Err(ModelError::UnknownInputSymbol(_))));
        assert!(matches!(
            detect_one().transition(["1", "2"], ["1", "1"]).build(),
            Err(ModelError::UnknownState(_))
        ));
        assert!(matches!(
            detect_one().transition(["0", "0"], ["0", "0"]).build(),
            Err(ModelError::SilentTransition(_))
        ));
        assert!(matches!(
            detect_one().transition(["1", "0"], ["1", "1"]).build(),
            Err(ModelError::DuplicateTransition(_))
        ));
        assert!(matches!(
            detect_one().transition(["1", "0", "1"], ["1", "1"]).build(),
            Err(ModelError::ArityMismatch { .. })
        ));
        assert!(matches!(
            detect_one().edge_states(["x"]).build(),
            Err(ModelError::EdgeStatesInPlainProtocol)
        ));
        let partial =
            ProtocolBuilder::new(Model::Pp).states(["0", "1"]).alphabet(["0"]).input("0", "0").output("0", 0);
        assert!(matches!(partial.build(), Err(ModelError::MissingOutput(_))));
    }

    #[test]
    fn mediated_needs_initial_edge() {
        let b = ProtocolBuilder::new(Model::Mpp)
            .states(["0"])
            .alphabet(["0"])
            .edge_states(["e"])
            .input("0", "0")
            .output("0", 0);
        assert!(matches!(b.clone().build(), Err(ModelError::MissingInitialEdge)));
        assert!(b.initial_edge("e").build().is_ok());
    }

    #[test]
    fn builder_round_trip() {
        let p = detect_one().build().unwrap();
        assert_eq!(p.to_builder().build().unwrap(), p);
    }
}
