//! Configuration translation into compiled protocols, the inverse
//! normalisation used by the soundness argument, and the cleanup schedule
//! that drives a compiled configuration back into translated form.

use thiserror::Error;

use crate::compiler::{CompiledProtocol, EdgeHead, Family, Lock};
use crate::model::{Configuration, EdgeId, MediatedConfiguration, Model, ModelError, Population, StepLabel};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslationError {
    #[error("state index {0} is not a state of the source protocol")]
    StateNotInSource(u16),
    #[error("edge index {0} is not an edge state of the source protocol")]
    EdgeNotInSource(u16),
    #[error("compiled protocol was built from a {found} source, configuration is {expected}")]
    SourceMismatch { expected: Model, found: Model },
    #[error("a population needs at least one agent")]
    EmptyPopulation,
    #[error(
        "cleanup step {position} ({family} with initiator {initiator}, responder {responder}) is not enabled"
    )]
    NotCleanable {
        position: usize,
        family: Family,
        initiator: usize,
        responder: usize,
        /// Configuration at which the step was attempted.
        at: MediatedConfiguration,
        /// Steps applied before the failure.
        applied: Vec<StepLabel>,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Source configurations that have a translation into compiled protocols.
pub trait SourcePopulation: Population {
    /// `⟦self⟧`: every agent unlocked, every edge side neutral.
    fn translate(&self, pc: &CompiledProtocol) -> Result<MediatedConfiguration, TranslationError>;

    /// The source configuration a compiled configuration stands for: agents
    /// with a single pending request fall back to their backup.
    fn normalize(d: &MediatedConfiguration, pc: &CompiledProtocol) -> Self;
}

fn check_source(pc: &CompiledProtocol, expected: Model) -> Result<(), TranslationError> {
    let found = pc.source().model();
    if found != expected {
        return Err(TranslationError::SourceMismatch { expected, found });
    }
    Ok(())
}

fn check_agents(pc: &CompiledProtocol, agents: &[u16]) -> Result<(), TranslationError> {
    if agents.is_empty() {
        return Err(TranslationError::EmptyPopulation);
    }
    let n_states = pc.source().states().len() as u16;
    match agents.iter().find(|&&q| q >= n_states) {
        Some(&q) => Err(TranslationError::StateNotInSource(q)),
        None => Ok(()),
    }
}

/// Backed-up state agent `i` returns to, when exactly one of its sides holds
/// an unacknowledged backup.
fn recovered_state(d: &MediatedConfiguration, pc: &CompiledProtocol, i: usize) -> Option<u16> {
    let mut found = None;
    let mut count = 0;
    for j in (0..d.size()).filter(|&j| j != i) {
        if let (EdgeHead::Backup { state, .. }, false) =
            (pc.edge_role(d.edge(i, j)).head, pc.edge_role(d.edge(j, i)).head == EdgeHead::Responded)
        {
            count += 1;
            found = Some(state);
        }
    }
    if count == 1 {
        found
    } else {
        None
    }
}

fn normalized_agents(d: &MediatedConfiguration, pc: &CompiledProtocol) -> Vec<u16> {
    (0..d.size()).map(|i| recovered_state(d, pc, i).unwrap_or_else(|| pc.agent_role(d.agent(i)).1)).collect()
}

impl SourcePopulation for Configuration {
    fn translate(&self, pc: &CompiledProtocol) -> Result<MediatedConfiguration, TranslationError> {
        check_source(pc, Model::Pp)?;
        check_agents(pc, self.states())?;
        let agents: Vec<u16> = self.states().iter().map(|&q| pc.unlocked(q)).collect();
        let init = pc.init_edge(None);
        Ok(MediatedConfiguration::from_fn(&agents, |_, _| init))
    }

    fn normalize(d: &MediatedConfiguration, pc: &CompiledProtocol) -> Self {
        Configuration::from_states(normalized_agents(d, pc))
    }
}

impl SourcePopulation for MediatedConfiguration {
    fn translate(&self, pc: &CompiledProtocol) -> Result<MediatedConfiguration, TranslationError> {
        check_source(pc, Model::Mpp)?;
        let agents = self.agents();
        check_agents(pc, &agents)?;
        let n_edges = pc.source().edge_states().len() as EdgeId;
        let n = self.size();
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                if self.edge(i, j) >= n_edges {
                    return Err(TranslationError::EdgeNotInSource(self.edge(i, j)));
                }
            }
        }
        let compiled: Vec<u16> = agents.iter().map(|&q| pc.unlocked(q)).collect();
        Ok(MediatedConfiguration::from_fn(&compiled, |i, j| pc.init_edge(Some(self.edge(i, j)))))
    }

    fn normalize(d: &MediatedConfiguration, pc: &CompiledProtocol) -> Self {
        let agents = normalized_agents(d, pc);
        MediatedConfiguration::from_fn(&agents, |i, j| {
            let mine = pc.edge_role(d.edge(i, j));
            let partner_responded = pc.edge_role(d.edge(j, i)).head == EdgeHead::Responded;
            match mine.head {
                EdgeHead::Backup { edge: Some(saved), .. } if !partner_responded => saved,
                _ => mine.live.expect("mediated compiled sides carry a live edge"),
            }
        })
    }
}

/// True iff every agent is unlocked and every edge side is neutral.
pub fn is_translated_form(d: &MediatedConfiguration, pc: &CompiledProtocol) -> bool {
    let n = d.size();
    (0..n).all(|i| pc.agent_role(d.agent(i)).0 == Lock::Unlocked)
        && (0..n)
            .all(|i| (0..n).filter(|&j| j != i).all(|j| pc.edge_role(d.edge(i, j)).head == EdgeHead::Init))
}

/// Ordered steps that resolve every open conversation of a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleanupSchedule {
    pub steps: Vec<StepLabel>,
    /// Configuration after applying all steps.
    pub endpoint: MediatedConfiguration,
}

/// Plans the per-pair cleanup (ascending `(i, j)`), then executes it to pick
/// the concrete generated transitions:
///
/// | `(D)_{i,j}` | `(D)_{j,i}` | steps |
/// |-------------|-------------|-------|
/// | backup      | `sr`        | `t3_{j,i}`, `t4_{i,j}` |
/// | neutral     | `sr`        | `t4_{i,j}` |
/// | backup      | not `sr`    | `t5_{j,i}` |
pub fn cleanup_schedule(
    d: &MediatedConfiguration,
    pc: &CompiledProtocol,
) -> Result<CleanupSchedule, TranslationError> {
    let n = d.size();
    let mut plan: Vec<(Family, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            let mine = pc.edge_role(d.edge(i, j)).head;
            let theirs = pc.edge_role(d.edge(j, i)).head;
            match (mine, theirs) {
                (EdgeHead::Backup { .. }, EdgeHead::Responded) => {
                    plan.push((Family::T3, j, i));
                    plan.push((Family::T4, i, j));
                }
                (EdgeHead::Init, EdgeHead::Responded) => plan.push((Family::T4, i, j)),
                (EdgeHead::Backup { .. }, _) => plan.push((Family::T5, j, i)),
                _ => {}
            }
        }
    }

    let spec = pc.spec();
    let mut current = d.clone();
    let mut steps = Vec::with_capacity(plan.len());
    for (position, (family, initiator, responder)) in plan.into_iter().enumerate() {
        let lhs = current.interaction(initiator, responder);
        let Some(&t) = spec.transitions_from(&lhs).iter().find(|&&t| pc.family(t) == family) else {
            return Err(TranslationError::NotCleanable {
                position,
                family,
                initiator,
                responder,
                at: current,
                applied: steps,
            });
        };
        let label = StepLabel::new(t, initiator, responder);
        current = current.successor(spec, label);
        steps.push(label);
    }
    Ok(CleanupSchedule { steps, endpoint: current })
}
