//! Agent-state and edge-state symbols.
//!
//! Agent states are opaque tokens. Edge states carry structure: the
//! compilers introduce reserved variants (`eps`, `sr`, `bak:q`, and the
//! two-component `head|live` form) that can never collide with a base
//! symbol, because base symbols may not contain `:` or `|` and may not be
//! one of the reserved words.

use std::fmt;
use std::str::FromStr;

use super::ModelError;

/// Characters that may never appear in any symbol because the text formats
/// use them as separators.
const SEPARATORS: &[char] = &[',', ';', '#'];

pub(crate) const INIT_TOKEN: &str = "eps";
pub(crate) const RESPONDED_TOKEN: &str = "sr";
pub(crate) const BACKUP_PREFIX: &str = "bak:";

/// Opaque agent state symbol.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentState(String);

impl AgentState {
    pub fn new(name: impl Into<String>) -> Result<Self, ModelError> {
        let name = name.into();
        check_token(&name)?;
        Ok(AgentState(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Whether the symbol is free of the characters that compiled symbols use
    /// as structure (`:` and `|`).
    pub fn is_plain(&self) -> bool {
        !self.0.contains([':', '|'])
    }
}

impl fmt::Display for AgentState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for AgentState {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AgentState::new(s)
    }
}

/// First component of a two-component edge side produced by the mediated
/// compiler.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PairHead {
    Init,
    Responded,
    /// Saved agent state and edge side of the observer before the
    /// conversation started.
    Backup(AgentState, String),
}

/// One agent's side of an edge.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeState {
    /// Neutral side, no conversation in progress (`eps`).
    Init,
    /// Acknowledged conversation (`sr`).
    Responded,
    /// Requested conversation, holding the observer's previous state
    /// (`bak:q`).
    Backup(AgentState),
    /// Mediated-compiler side: conversation head plus the live source edge
    /// value (`eps|s`, `sr|s`, `bak:q:s|s`).
    Pair(PairHead, String),
    /// A symbol of a source protocol's edge alphabet.
    Base(String),
}

impl EdgeState {
    pub fn base(name: impl Into<String>) -> Result<Self, ModelError> {
        let name = name.into();
        check_base(&name)?;
        Ok(EdgeState::Base(name))
    }

    pub fn is_base(&self) -> bool {
        matches!(self, EdgeState::Base(_))
    }
}

impl fmt::Display for EdgeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeState::Init => f.write_str(INIT_TOKEN),
            EdgeState::Responded => f.write_str(RESPONDED_TOKEN),
            EdgeState::Backup(q) => write!(f, "{BACKUP_PREFIX}{q}"),
            EdgeState::Pair(head, live) => {
                match head {
                    PairHead::Init => f.write_str(INIT_TOKEN)?,
                    PairHead::Responded => f.write_str(RESPONDED_TOKEN)?,
                    PairHead::Backup(q, s) => write!(f, "{BACKUP_PREFIX}{q}:{s}")?,
                }
                write!(f, "|{live}")
            }
            EdgeState::Base(s) => f.write_str(s),
        }
    }
}

impl FromStr for EdgeState {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        check_token(s)?;
        if let Some((head, live)) = s.split_once('|') {
            check_base(live)?;
            let head = match head {
                INIT_TOKEN => PairHead::Init,
                RESPONDED_TOKEN => PairHead::Responded,
                other => {
                    let rest = other
                        .strip_prefix(BACKUP_PREFIX)
                        .ok_or_else(|| ModelError::InvalidSymbol(s.to_string()))?;
                    // the saved edge value is a base symbol and cannot hold ':'
                    let (q, saved) =
                        rest.rsplit_once(':').ok_or_else(|| ModelError::InvalidSymbol(s.to_string()))?;
                    check_base(saved)?;
                    PairHead::Backup(AgentState::new(q)?, saved.to_string())
                }
            };
            return Ok(EdgeState::Pair(head, live.to_string()));
        }
        match s {
            INIT_TOKEN => Ok(EdgeState::Init),
            RESPONDED_TOKEN => Ok(EdgeState::Responded),
            _ => match s.strip_prefix(BACKUP_PREFIX) {
                Some(q) => Ok(EdgeState::Backup(AgentState::new(q)?)),
                None => EdgeState::base(s),
            },
        }
    }
}

fn check_token(s: &str) -> Result<(), ModelError> {
    if s.is_empty() || s == "->" || s.contains(SEPARATORS) || s.chars().any(char::is_whitespace) {
        return Err(ModelError::InvalidSymbol(s.to_string()));
    }
    Ok(())
}

fn check_base(s: &str) -> Result<(), ModelError> {
    check_token(s)?;
    if s.contains([':', '|']) || s == INIT_TOKEN || s == RESPONDED_TOKEN {
        return Err(ModelError::InvalidSymbol(s.to_string()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(s: &str) -> AgentState {
        AgentState::new(s).unwrap()
    }

    #[test]
    fn reserved_forms_parse_structurally() {
        assert_eq!("eps".parse::<EdgeState>().unwrap(), EdgeState::Init);
        assert_eq!("sr".parse::<EdgeState>().unwrap(), EdgeState::Responded);
        assert_eq!("bak:0".parse::<EdgeState>().unwrap(), EdgeState::Backup(q("0")));
        assert_eq!(
            "bak:0:fresh|used".parse::<EdgeState>().unwrap(),
            EdgeState::Pair(PairHead::Backup(q("0"), "fresh".into()), "used".into())
        );
        assert_eq!(
            "sr|used".parse::<EdgeState>().unwrap(),
            EdgeState::Pair(PairHead::Responded, "used".into())
        );
        assert_eq!("fresh".parse::<EdgeState>().unwrap(), EdgeState::Base("fresh".into()));
    }

    #[test]
    fn base_symbols_cannot_shadow_reserved_variants() {
        assert!(EdgeState::base("eps").is_err());
        assert!(EdgeState::base("a:b").is_err());
        assert!(EdgeState::base("a|b").is_err());
        assert!("x|a:b".parse::<EdgeState>().is_err());
        assert!(AgentState::new("a,b").is_err());
        assert!(AgentState::new("->").is_err());
        assert!(AgentState::new("").is_err());
    }

    fn base_name() -> impl Strategy<Value = String> {
        "[a-z0-9_]{1,6}".prop_filter("reserved", |s| s != "eps" && s != "sr")
    }

    fn edge_state() -> impl Strategy<Value = EdgeState> {
        prop_oneof![
            Just(EdgeState::Init),
            Just(EdgeState::Responded),
            base_name().prop_map(|s| EdgeState::Backup(AgentState(s))),
            base_name().prop_map(EdgeState::Base),
            (base_name(), base_name())
                .prop_map(|(h, l)| EdgeState::Pair(PairHead::Backup(AgentState(h.clone()), h), l)),
            base_name().prop_map(|l| EdgeState::Pair(PairHead::Init, l)),
            base_name().prop_map(|l| EdgeState::Pair(PairHead::Responded, l)),
        ]
    }

    proptest! {
        #[test]
        fn edge_state_text_round_trips(e in edge_state()) {
            let text = e.to_string();
            prop_assert_eq!(text.parse::<EdgeState>().unwrap(), e);
        }
    }
}
