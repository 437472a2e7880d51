//! Compilation of two-way protocols into immediate-observation mediated
//! protocols.
//!
//! Every source interaction `t = (p, q) -> (p', q')` becomes a four-step
//! conversation between a locked observer and its partner:
//!
//! | family | who observes | effect |
//! |--------|--------------|--------|
//! | `t1`   | responder    | request: lock, tentatively move to `q'`, back up `q` |
//! | `t2`   | initiator    | acknowledge: lock, move to `p'`, mark side `sr` |
//! | `t3`   | responder    | conclude: unlock, clear backup |
//! | `t4`   | initiator    | conclude: unlock, clear `sr` |
//! | `t5`   | responder    | abort: restore the backed-up state |
//!
//! `t6` is the single-step shortcut for source transitions that already keep
//! the initiator unchanged.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use thiserror::Error;

use crate::model::{
    AgentState, EdgeId, EdgeState, Model, ModelError, PairHead, ProtocolBuilder, ProtocolSpec, StateId,
    Transition, TransitionId,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Lock {
    Unlocked,
    Locked,
}

/// Compiled agent state `(lock, computation state)`, written `U:q` / `L:q`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SimAgentState {
    pub lock: Lock,
    pub compute: AgentState,
}

impl fmt::Display for SimAgentState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = match self.lock {
            Lock::Unlocked => "U",
            Lock::Locked => "L",
        };
        write!(f, "{l}:{}", self.compute)
    }
}

impl FromStr for SimAgentState {
    type Err = CompileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CompileError::MalformedTarget(format!("'{s}' is not a lock-annotated state"));
        let (l, q) = s.split_once(':').ok_or_else(bad)?;
        let lock = match l {
            "U" => Lock::Unlocked,
            "L" => Lock::Locked,
            _ => return Err(bad()),
        };
        Ok(SimAgentState { lock, compute: AgentState::new(q).map_err(|_| bad())? })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
}

impl Family {
    pub const ALL: [Family; 6] = [Family::T1, Family::T2, Family::T3, Family::T4, Family::T5, Family::T6];

    /// Families that may change the observer's computation state.
    pub fn changes_output(self) -> bool {
        matches!(self, Family::T1 | Family::T2 | Family::T5 | Family::T6)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = match self {
            Family::T1 => 1,
            Family::T2 => 2,
            Family::T3 => 3,
            Family::T4 => 4,
            Family::T5 => 5,
            Family::T6 => 6,
        };
        write!(f, "t{n}")
    }
}

impl FromStr for Family {
    type Err = CompileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.to_string() == s)
            .ok_or_else(|| CompileError::MalformedTarget(format!("unknown family '{s}'")))
    }
}

/// Family tag and originating source transitions of one generated
/// transition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub family: Family,
    pub sources: Vec<TransitionId>,
}

/// Conversation component of a compiled edge side, in source indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeHead {
    Init,
    Responded,
    /// Backed-up source agent state and, for mediated sources, source edge.
    Backup {
        state: StateId,
        edge: Option<EdgeId>,
    },
}

/// Structure of a compiled edge side: head plus the live source edge value
/// (mediated sources only).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SimEdge {
    pub head: EdgeHead,
    pub live: Option<EdgeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("malformed source: {0}")]
    MalformedSource(String),
    #[error("malformed compiled protocol: {0}")]
    MalformedTarget(String),
    #[error("transition is not part of the compiled protocol")]
    UnknownTransition,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// An IOMPP produced by one of the compilers, with the structure needed to
/// translate configurations and classify transitions.
#[derive(Clone, Debug)]
pub struct CompiledProtocol {
    spec: ProtocolSpec,
    source: ProtocolSpec,
    provenance: Vec<Provenance>,
    agent_role: Vec<(Lock, StateId)>,
    unlocked: Vec<StateId>,
    edge_role: Vec<SimEdge>,
    /// Compiled id of the neutral side: one entry for plain sources, one per
    /// source edge state for mediated sources.
    init_edge: Vec<EdgeId>,
    by_family: HashMap<(Family, TransitionId), Vec<TransitionId>>,
}

fn unlocked_name(q: &AgentState) -> String {
    SimAgentState { lock: Lock::Unlocked, compute: q.clone() }.to_string()
}

fn locked_name(q: &AgentState) -> String {
    SimAgentState { lock: Lock::Locked, compute: q.clone() }.to_string()
}

fn check_source(p: &ProtocolSpec, model: Model) -> Result<(), CompileError> {
    if p.model() != model {
        return Err(CompileError::MalformedSource(format!(
            "expected a {model} protocol, found {}",
            p.model()
        )));
    }
    if let Some(q) = p.states().iter().find(|q| !q.is_plain()) {
        return Err(CompileError::MalformedSource(format!(
            "state '{q}' uses a reserved character (':' or '|')"
        )));
    }
    if let Some(e) = p.edge_states().iter().find(|e| !e.is_base()) {
        return Err(CompileError::MalformedSource(format!("edge state '{e}' is reserved")));
    }
    Ok(())
}

type Record = (Vec<String>, Vec<String>);

#[derive(Default)]
struct Emitter {
    generated: IndexMap<Record, Provenance>,
}

impl Emitter {
    fn emit(&mut self, family: Family, source: TransitionId, before: [&str; 4], after: [&str; 4]) {
        let key = (owned(before), owned(after));
        let entry = self.generated.entry(key).or_insert_with(|| Provenance { family, sources: Vec::new() });
        debug_assert_eq!(entry.family, family, "families generate disjoint shapes");
        if !entry.sources.contains(&source) {
            entry.sources.push(source);
        }
    }
}

fn owned(a: [&str; 4]) -> Vec<String> {
    a.iter().map(|s| s.to_string()).collect()
}

/// Compiles a plain protocol. With `use_shortcut`, source transitions that
/// keep the initiator become a single `t6` instead of `t1`..`t5`.
pub fn compile_pp(p: &ProtocolSpec, use_shortcut: bool) -> Result<CompiledProtocol, CompileError> {
    check_source(p, Model::Pp)?;
    let states: Vec<String> =
        p.states().iter().map(unlocked_name).chain(p.states().iter().map(locked_name)).collect();
    let init = EdgeState::Init.to_string();
    let responded = EdgeState::Responded.to_string();
    let backup = |q: StateId| EdgeState::Backup(p.state(q).clone()).to_string();
    let edges: Vec<String> = [init.clone(), responded.clone()]
        .into_iter()
        .chain((0..p.states().len() as StateId).map(backup))
        .collect();
    let u = |q: StateId| unlocked_name(p.state(q));
    let l = |q: StateId| locked_name(p.state(q));

    let mut out = Emitter::default();
    for (tid, t) in p.transitions().iter().enumerate() {
        let (sp, sq) = (t.before.initiator.state, t.before.responder.state);
        let (sp2, sq2) = (t.after.initiator.state, t.after.responder.state);
        let (p0, q0, p1, q1) = (u(sp), u(sq), l(sp2), l(sq2));
        let bq = backup(sq);
        if use_shortcut && t.keeps_initiator() {
            out.emit(Family::T6, tid, [&p0, &init, &q0, &init], [&p0, &init, &u(sq2), &init]);
            continue;
        }
        out.emit(Family::T1, tid, [&p0, &init, &q0, &init], [&p0, &init, &q1, &bq]);
        out.emit(Family::T2, tid, [&q1, &bq, &p0, &init], [&q1, &bq, &p1, &responded]);
        out.emit(Family::T3, tid, [&p1, &responded, &q1, &bq], [&p1, &responded, &u(sq2), &init]);
        for x in &states {
            out.emit(Family::T4, tid, [x, &init, &p1, &responded], [x, &init, &u(sp2), &init]);
        }
        for x in &states {
            for z in edges.iter().filter(|z| **z != responded) {
                out.emit(Family::T5, tid, [x, z, &q1, &bq], [x, z, &q0, &init]);
            }
        }
    }

    let mut b = ProtocolBuilder::new(Model::Mpp)
        .states(&states)
        .alphabet(p.alphabet())
        .edge_states(&edges)
        .initial_edge(&init);
    for a in p.alphabet() {
        b = b.input(a, u(p.input_state(a)?));
    }
    for (i, q) in p.states().iter().enumerate() {
        let x = p.output(i as StateId);
        b = b.output(unlocked_name(q), x).output(locked_name(q), x);
    }
    finish(p, b, out)
}

/// Compiles a mediated protocol. Edge sides become `(head, live)` pairs:
/// the head carries the conversation marker or the `(q, s)` backup, the live
/// component the source edge value.
pub fn compile_mpp(p: &ProtocolSpec) -> Result<CompiledProtocol, CompileError> {
    check_source(p, Model::Mpp)?;
    let states: Vec<String> =
        p.states().iter().map(unlocked_name).chain(p.states().iter().map(locked_name)).collect();
    let base = |s: EdgeId| match p.edge(s) {
        EdgeState::Base(b) => b.clone(),
        other => unreachable!("checked base edge, found {other}"),
    };
    let n_edges = p.edge_states().len() as EdgeId;
    let pair = |head: PairHead, live: EdgeId| EdgeState::Pair(head, base(live)).to_string();
    let init = |s: EdgeId| pair(PairHead::Init, s);
    let responded = |s: EdgeId| pair(PairHead::Responded, s);
    let backup =
        |q: StateId, s: EdgeId, live: EdgeId| pair(PairHead::Backup(p.state(q).clone(), base(s)), live);
    let mut heads = vec![PairHead::Init, PairHead::Responded];
    for q in p.states() {
        for s in 0..n_edges {
            heads.push(PairHead::Backup(q.clone(), base(s)));
        }
    }
    let mut edges = Vec::with_capacity(heads.len() * n_edges as usize);
    let mut resettable = Vec::new();
    for head in &heads {
        for s in 0..n_edges {
            let name = pair(head.clone(), s);
            if *head != PairHead::Responded {
                resettable.push(name.clone());
            }
            edges.push(name);
        }
    }
    let u = |q: StateId| unlocked_name(p.state(q));
    let l = |q: StateId| locked_name(p.state(q));

    let mut out = Emitter::default();
    for (tid, t) in p.transitions().iter().enumerate() {
        let side = |s: crate::model::Side| (s.state, s.edge.expect("mediated transition"));
        let ((sp, sr), (sq, ss)) = (side(t.before.initiator), side(t.before.responder));
        let ((sp2, sr2), (sq2, ss2)) = (side(t.after.initiator), side(t.after.responder));
        let (p0, q0, p1, q1) = (u(sp), u(sq), l(sp2), l(sq2));
        let bk = backup(sq, ss, ss2);
        let (init_r, init_s, init_s2, init_r2) = (init(sr), init(ss), init(ss2), init(sr2));
        let resp_r2 = responded(sr2);
        out.emit(Family::T1, tid, [&p0, &init_r, &q0, &init_s], [&p0, &init_r, &q1, &bk]);
        out.emit(Family::T2, tid, [&q1, &bk, &p0, &init_r], [&q1, &bk, &p1, &resp_r2]);
        out.emit(Family::T3, tid, [&p1, &resp_r2, &q1, &bk], [&p1, &resp_r2, &u(sq2), &init_s2]);
        for x in &states {
            out.emit(Family::T4, tid, [x, &init_s2, &p1, &resp_r2], [x, &init_s2, &u(sp2), &init_r2]);
        }
        for x in &states {
            for z in &resettable {
                out.emit(Family::T5, tid, [x, z, &q1, &bk], [x, z, &q0, &init_s]);
            }
        }
    }

    let s0 = p.initial_edge().expect("mediated source has s0");
    let mut b = ProtocolBuilder::new(Model::Mpp)
        .states(&states)
        .alphabet(p.alphabet())
        .edge_states(&edges)
        .initial_edge(init(s0));
    for a in p.alphabet() {
        b = b.input(a, u(p.input_state(a)?));
    }
    for (i, q) in p.states().iter().enumerate() {
        let x = p.output(i as StateId);
        b = b.output(unlocked_name(q), x).output(locked_name(q), x);
    }
    finish(p, b, out)
}

fn finish(
    source: &ProtocolSpec,
    mut b: ProtocolBuilder,
    out: Emitter,
) -> Result<CompiledProtocol, CompileError> {
    let mut provenance = Vec::with_capacity(out.generated.len());
    for ((before, after), prov) in out.generated {
        b = b.transition(before, after);
        provenance.push(prov);
    }
    let spec = b.build()?;
    CompiledProtocol::from_parts(source.clone(), spec, provenance)
}

impl CompiledProtocol {
    /// Reassembles a compiled protocol from its source, the compiled
    /// definition and the provenance sidecar, recovering structure from the
    /// reserved symbol names.
    pub fn from_parts(
        source: ProtocolSpec,
        spec: ProtocolSpec,
        provenance: Vec<Provenance>,
    ) -> Result<Self, CompileError> {
        let bad = |m: String| CompileError::MalformedTarget(m);
        if spec.model() != Model::Mpp {
            return Err(bad("compiled protocol must be mediated".into()));
        }
        if provenance.len() != spec.transitions().len() {
            return Err(bad(format!(
                "provenance has {} entries for {} transitions",
                provenance.len(),
                spec.transitions().len()
            )));
        }
        for prov in &provenance {
            if prov.sources.is_empty() {
                return Err(bad("provenance entry without originating transition".into()));
            }
            if let Some(s) = prov.sources.iter().find(|&&s| s >= source.transitions().len()) {
                return Err(bad(format!("provenance names unknown source transition {s}")));
            }
        }
        let mediated_source = source.is_mediated();

        let mut agent_role = Vec::with_capacity(spec.states().len());
        let mut unlocked = vec![None; source.states().len()];
        for (id, name) in spec.states().iter().enumerate() {
            let sim: SimAgentState = name.as_str().parse()?;
            let q = source
                .state_id(&sim.compute)
                .ok_or_else(|| bad(format!("'{name}' wraps an unknown source state")))?;
            if sim.lock == Lock::Unlocked {
                unlocked[q as usize] = Some(id as StateId);
            }
            agent_role.push((sim.lock, q));
        }
        let unlocked = unlocked
            .into_iter()
            .enumerate()
            .map(|(q, id)| id.ok_or_else(|| bad(format!("no unlocked copy of source state {q}"))))
            .collect::<Result<Vec<_>, _>>()?;

        let src_edge = |name: &str| -> Result<EdgeId, CompileError> {
            source
                .edge_id(&EdgeState::Base(name.to_string()))
                .ok_or_else(|| bad(format!("unknown source edge state '{name}'")))
        };
        let src_state = |q: &AgentState| -> Result<StateId, CompileError> {
            source.state_id(q).ok_or_else(|| bad(format!("unknown source state '{q}'")))
        };
        let mut edge_role = Vec::with_capacity(spec.edge_states().len());
        let n_init = if mediated_source { source.edge_states().len() } else { 1 };
        let mut init_edge = vec![None; n_init];
        for (id, e) in spec.edge_states().iter().enumerate() {
            let role = match (mediated_source, e) {
                (false, EdgeState::Init) => SimEdge { head: EdgeHead::Init, live: None },
                (false, EdgeState::Responded) => SimEdge { head: EdgeHead::Responded, live: None },
                (false, EdgeState::Backup(q)) => {
                    SimEdge { head: EdgeHead::Backup { state: src_state(q)?, edge: None }, live: None }
                }
                (true, EdgeState::Pair(head, live)) => {
                    let head = match head {
                        PairHead::Init => EdgeHead::Init,
                        PairHead::Responded => EdgeHead::Responded,
                        PairHead::Backup(q, s) => {
                            EdgeHead::Backup { state: src_state(q)?, edge: Some(src_edge(s)?) }
                        }
                    };
                    SimEdge { head, live: Some(src_edge(live)?) }
                }
                _ => return Err(bad(format!("edge state '{e}' does not fit the simulation"))),
            };
            if role.head == EdgeHead::Init {
                init_edge[role.live.unwrap_or(0) as usize] = Some(id as EdgeId);
            }
            edge_role.push(role);
        }
        let init_edge = init_edge
            .into_iter()
            .map(|e| e.ok_or_else(|| bad("missing neutral edge state".into())))
            .collect::<Result<Vec<_>, _>>()?;

        let mut by_family: HashMap<(Family, TransitionId), Vec<TransitionId>> = HashMap::new();
        for (tid, prov) in provenance.iter().enumerate() {
            for &s in &prov.sources {
                by_family.entry((prov.family, s)).or_default().push(tid);
            }
        }
        Ok(CompiledProtocol {
            spec,
            source,
            provenance,
            agent_role,
            unlocked,
            edge_role,
            init_edge,
            by_family,
        })
    }

    /// The compiled IOMPP.
    pub fn spec(&self) -> &ProtocolSpec {
        &self.spec
    }

    pub fn source(&self) -> &ProtocolSpec {
        &self.source
    }

    /// Whether the source was a mediated protocol.
    pub fn is_mediated_source(&self) -> bool {
        self.source.is_mediated()
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn transition_count(&self) -> usize {
        self.spec.transitions().len()
    }

    pub fn family(&self, t: TransitionId) -> Family {
        self.provenance[t].family
    }

    /// Provenance of a transition record of the compiled protocol.
    pub fn classify(&self, t: &Transition) -> Result<&Provenance, CompileError> {
        self.spec
            .transitions_from(&t.before)
            .iter()
            .find(|&&id| self.spec.transitions()[id] == *t)
            .map(|&id| &self.provenance[id])
            .ok_or(CompileError::UnknownTransition)
    }

    /// Generated transitions of `family` that originate from source
    /// transition `source`.
    pub fn generated(&self, family: Family, source: TransitionId) -> &[TransitionId] {
        self.by_family.get(&(family, source)).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Lock and source computation state of a compiled agent state.
    pub fn agent_role(&self, q: StateId) -> (Lock, StateId) {
        self.agent_role[q as usize]
    }

    /// Compiled id of `(U, q)`.
    pub fn unlocked(&self, q: StateId) -> StateId {
        self.unlocked[q as usize]
    }

    pub fn edge_role(&self, e: EdgeId) -> SimEdge {
        self.edge_role[e as usize]
    }

    /// Compiled id of the neutral side carrying `live` (ignored for plain
    /// sources).
    pub fn init_edge(&self, live: Option<EdgeId>) -> EdgeId {
        self.init_edge[live.unwrap_or(0) as usize]
    }

    /// Copy keeping only the generated transitions selected by `keep`; used
    /// for mutation testing.
    pub fn retain(&self, keep: impl Fn(TransitionId, &Provenance) -> bool) -> Self {
        let spec = self.spec.retain_transitions(|i, _| keep(i, &self.provenance[i]));
        let provenance =
            self.provenance.iter().enumerate().filter(|(i, p)| keep(*i, p)).map(|(_, p)| p.clone()).collect();
        CompiledProtocol::from_parts(self.source.clone(), spec, provenance)
            .expect("removing transitions keeps the structure intact")
    }

    pub fn without_family(&self, family: Family) -> Self {
        self.retain(|_, p| p.family != family)
    }

    /// Copy with a different output map on the compiled side.
    pub fn with_target_outputs(&self, output: impl Fn(StateId) -> u8) -> Result<Self, CompileError> {
        let spec = self.spec.with_outputs(output)?;
        CompiledProtocol::from_parts(self.source.clone(), spec, self.provenance.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library;

    /// Number of generated instances before merging, per source transition.
    fn raw_count(q: usize, s_prime: usize) -> usize {
        let q_prime = 2 * q;
        3 + q_prime + q_prime * (s_prime - 1)
    }

    #[test]
    fn detect_one_counts() {
        let src = library::detect_one().spec;
        let c = compile_pp(&src, false).unwrap();
        // |Q|=2, |Q'|=4, |S'|=4: 1+1+1+4+12
        assert_eq!(c.transition_count(), 19);
        assert_eq!(c.transition_count(), raw_count(2, 4));
        assert!(c.spec().is_immediate_observation());
        assert_eq!(c.spec().states().len(), 4);
        assert_eq!(c.spec().edge_states().len(), 4);

        let short = compile_pp(&src, true).unwrap();
        assert_eq!(short.transition_count(), 1);
        assert_eq!(short.family(0), Family::T6);
        assert_eq!(
            short.spec().describe_transition(&short.spec().transitions()[0]),
            "U:1 eps U:0 eps -> U:1 eps U:1 eps"
        );
    }

    #[test]
    fn threshold2_families_and_merging() {
        let src = library::threshold2().spec;
        let c = compile_pp(&src, false).unwrap();
        assert!(c.spec().is_immediate_observation());
        assert!(c.provenance().iter().all(|p| p.family != Family::T6));
        // every source has p' = 2, so the t4 instances coincide
        let t4: Vec<_> = c.provenance().iter().filter(|p| p.family == Family::T4).collect();
        assert_eq!(t4.len(), 6);
        assert!(t4.iter().all(|p| p.sources == vec![0, 1, 2]));
        // raw: 3 * (3 + 6 + 6*4) = 99. Sources (1,1)->(2,2) and (2,1)->(2,2)
        // share (p', q', q) = (2, 2, 1), merging one t3 and 24 t5 instances;
        // the common p' merges 12 t4 instances.
        let raw = 3 * raw_count(3, 5);
        assert_eq!(raw, 99);
        assert_eq!(c.transition_count(), raw - 1 - 12 - 24);
    }

    #[test]
    fn generated_counts_match_enumeration_before_merging() {
        for entry in library::plain_entries() {
            let src = &entry.spec;
            let c = compile_pp(src, false).unwrap();
            let per_instance: usize = c.provenance().iter().map(|p| p.sources.len()).sum();
            let expected = src.transitions().len() * raw_count(src.states().len(), 2 + src.states().len());
            assert_eq!(per_instance, expected, "{}", entry.name);
        }
    }

    #[test]
    fn lock_never_affects_output() {
        for entry in library::all_entries() {
            let c = if entry.spec.is_mediated() {
                compile_mpp(&entry.spec).unwrap()
            } else {
                compile_pp(&entry.spec, false).unwrap()
            };
            for q in 0..c.spec().states().len() as StateId {
                let (_, src) = c.agent_role(q);
                assert_eq!(c.spec().output(q), entry.spec.output(src));
            }
        }
    }

    #[test]
    fn mediated_compilation() {
        let src = library::detect_one_once().spec;
        let c = compile_mpp(&src).unwrap();
        assert!(c.spec().is_immediate_observation());
        assert_eq!(c.spec().edge_states().len(), (2 + 2 * 2) * 2);
        assert_eq!(c.spec().edge(c.spec().initial_edge().unwrap()).to_string(), "eps|fresh");
        let t1 = c.generated(Family::T1, 0);
        assert_eq!(t1.len(), 1);
        assert_eq!(
            c.spec().describe_transition(&c.spec().transitions()[t1[0]]),
            "U:1 eps|fresh U:0 eps|fresh -> U:1 eps|fresh L:1 bak:0:fresh|used"
        );
        // t5 ranges over Q' x (S' minus the sr|* sides)
        assert_eq!(c.generated(Family::T5, 0).len(), 4 * 10);
    }

    #[test]
    fn classify_lookups() {
        let src = library::threshold2().spec;
        let c = compile_pp(&src, false).unwrap();
        let t3 = c.generated(Family::T3, 1)[0];
        let rec = c.spec().transitions()[t3];
        assert_eq!(c.classify(&rec).unwrap(), &Provenance { family: Family::T3, sources: vec![1] });
        let foreign = library::detect_one().spec.transitions()[0];
        assert_eq!(c.classify(&foreign), Err(CompileError::UnknownTransition));
    }

    #[test]
    fn rejects_wrong_sources() {
        let mpp = library::detect_one_once().spec;
        assert!(matches!(compile_pp(&mpp, false), Err(CompileError::MalformedSource(_))));
        let pp = library::detect_one().spec;
        assert!(matches!(compile_mpp(&pp), Err(CompileError::MalformedSource(_))));
        let compiled = compile_pp(&pp, false).unwrap();
        assert!(matches!(compile_mpp(compiled.spec()), Err(CompileError::MalformedSource(_))));
    }

    #[test]
    fn agent_state_names() {
        let s: SimAgentState = "L:2".parse().unwrap();
        assert_eq!(s.lock, Lock::Locked);
        assert_eq!(s.to_string(), "L:2");
        assert!("X:2".parse::<SimAgentState>().is_err());
        assert!("2".parse::<SimAgentState>().is_err());
    }

    #[test]
    fn family_removal() {
        let c = compile_pp(&library::detect_one().spec, false).unwrap();
        let no_t5 = c.without_family(Family::T5);
        assert_eq!(no_t5.transition_count(), 7);
        assert!(no_t5.provenance().iter().all(|p| p.family != Family::T5));
    }
}
