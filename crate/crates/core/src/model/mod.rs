//! Protocols, configurations and the global step relation for plain,
//! mediated and immediate-observation mediated population protocols.

mod config;
mod protocol;
mod symbol;

pub use config::{Configuration, MediatedConfiguration, OutputValue, Population, StepLabel};
pub use protocol::{
    EdgeId, Interaction, Model, ProtocolBuilder, ProtocolSpec, Side, StateId, Transition, TransitionId,
};
pub use symbol::{AgentState, EdgeState, PairHead};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("input symbol '{0}' is not in the alphabet")]
    UnknownInputSymbol(String),
    #[error("state '{0}' is not declared")]
    UnknownState(String),
    #[error("edge state '{0}' is not declared")]
    UnknownEdgeState(String),
    #[error("invalid symbol '{0}'")]
    InvalidSymbol(String),
    #[error("symbol '{0}' declared twice")]
    DuplicateSymbol(String),
    #[error("'{0}' is mapped twice")]
    DuplicateMapping(String),
    #[error("no input mapping for '{0}'")]
    MissingInput(String),
    #[error("no output mapping for state '{0}'")]
    MissingOutput(String),
    #[error("output must be 0 or 1, found '{0}'")]
    InvalidOutput(String),
    #[error("section '{0}' must not be empty")]
    Empty(&'static str),
    #[error("too many symbols for 16-bit indices")]
    TooManySymbols,
    #[error("plain protocols have no edge states")]
    EdgeStatesInPlainProtocol,
    #[error("mediated protocol needs an initial edge state")]
    MissingInitialEdge,
    #[error("transition side needs {expected} symbols, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("silent transition '{0}'")]
    SilentTransition(String),
    #[error("duplicate transition '{0}'")]
    DuplicateTransition(String),
    #[error("expected a {expected} protocol, found {found}")]
    ModelMismatch { expected: Model, found: Model },
    #[error("a population needs at least one agent")]
    EmptyPopulation,
    #[error("configuration matrix is not square ({rows} rows, a row of width {width})")]
    NotSquare { rows: usize, width: usize },
    #[error("step {0} is not enabled")]
    StepNotEnabled(StepLabel),
}
