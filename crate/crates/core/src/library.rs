//! Source protocols used by the tests, the CLI examples and the files
//! under `protocols/`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::model::{Model, ProtocolBuilder, ProtocolSpec};

type Predicate = Arc<dyn Fn(&[String]) -> u8 + Send + Sync>;

/// A named protocol together with the predicate it is meant to compute.
#[derive(Clone)]
pub struct LibraryEntry {
    pub name: String,
    pub spec: ProtocolSpec,
    predicate: Predicate,
    /// Largest population size the self-test covers.
    pub checked_up_to: usize,
    pub notes: &'static str,
}

impl LibraryEntry {
    /// The intended predicate on an input vector.
    pub fn intended(&self, input: &[String]) -> u8 {
        (self.predicate)(input)
    }
}

impl fmt::Debug for LibraryEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LibraryEntry").field("name", &self.name).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LibraryError {
    #[error("modulo protocol needs m >= 2 and 0 <= r < m (got m={m}, r={r})")]
    InvalidModulo { m: usize, r: usize },
}

fn ones(input: &[String]) -> usize {
    input.iter().filter(|s| *s == "1").count()
}

/// OR: some agent received input 1. Already immediate observation.
pub fn detect_one() -> LibraryEntry {
    let spec = ProtocolBuilder::new(Model::Pp)
        .states(["0", "1"])
        .alphabet(["0", "1"])
        .input("0", "0")
        .input("1", "1")
        .output("0", 0)
        .output("1", 1)
        .transition(["1", "0"], ["1", "1"])
        .build()
        .expect("detect_one is well-formed");
    LibraryEntry {
        name: "detect_one".into(),
        spec,
        predicate: Arc::new(|inp| u8::from(ones(inp) >= 1)),
        checked_up_to: 5,
        notes: "at least one 1",
    }
}

/// At least two agents received input 1; the initiator changes in every
/// transition.
pub fn threshold2() -> LibraryEntry {
    let spec = ProtocolBuilder::new(Model::Pp)
        .states(["0", "1", "2"])
        .alphabet(["0", "1"])
        .input("0", "0")
        .input("1", "1")
        .output("0", 0)
        .output("1", 0)
        .output("2", 1)
        .transition(["1", "1"], ["2", "2"])
        .transition(["2", "0"], ["2", "2"])
        .transition(["2", "1"], ["2", "2"])
        .build()
        .expect("threshold2 is well-formed");
    LibraryEntry {
        name: "threshold2".into(),
        spec,
        predicate: Arc::new(|inp| u8::from(ones(inp) >= 2)),
        checked_up_to: 5,
        notes: "at least two 1s",
    }
}

/// Four-state exact majority: strong `A`/`B`, weak `a`/`b`. Output 1 iff
/// strictly more 1s than 0s; a tie leaves only weak agents, and `a b -> b b`
/// drives those to `b`, so ties report 0.
pub fn majority() -> LibraryEntry {
    let spec = ProtocolBuilder::new(Model::Pp)
        .states(["A", "B", "a", "b"])
        .alphabet(["0", "1"])
        .input("1", "A")
        .input("0", "B")
        .output("A", 1)
        .output("a", 1)
        .output("B", 0)
        .output("b", 0)
        .transition(["A", "B"], ["a", "b"])
        .transition(["A", "b"], ["A", "a"])
        .transition(["B", "a"], ["B", "b"])
        .transition(["a", "b"], ["b", "b"])
        .build()
        .expect("majority is well-formed");
    LibraryEntry {
        name: "majority".into(),
        spec,
        predicate: Arc::new(|inp| {
            let one = ones(inp);
            u8::from(one > inp.len() - one)
        }),
        checked_up_to: 5,
        notes: "more 1s than 0s; ties report 0",
    }
}

/// Counts 1s modulo `m` and outputs whether the count is `r`.
///
/// Active agents `a<k>` hold a partial count; two actives merge into one
/// active and one passive follower `p<b>`. Actives overwrite the output bit
/// of the passives they meet.
pub fn modulo(m: usize, r: usize) -> Result<LibraryEntry, LibraryError> {
    if m < 2 || r >= m {
        return Err(LibraryError::InvalidModulo { m, r });
    }
    let active = |k: usize| format!("a{k}");
    let passive = |b: bool| format!("p{}", u8::from(b));
    let mut b = ProtocolBuilder::new(Model::Pp)
        .states((0..m).map(active))
        .states([passive(false), passive(true)])
        .alphabet(["0", "1"])
        .input("0", active(0))
        .input("1", active(1 % m))
        .output(passive(false), 0)
        .output(passive(true), 1);
    for k in 0..m {
        b = b.output(active(k), u8::from(k == r));
    }
    for x in 0..m {
        for y in 0..m {
            let sum = (x + y) % m;
            b = b.transition([active(x), active(y)], [active(sum), passive(sum == r)]);
        }
        // refresh the passive bit only when it is stale
        b = b.transition([active(x), passive(x != r)], [active(x), passive(x == r)]);
    }
    let spec = b.build().expect("modulo protocol is well-formed");
    Ok(LibraryEntry {
        name: format!("modulo_{m}_{r}"),
        spec,
        predicate: Arc::new(move |inp| u8::from(ones(inp) % m == r)),
        checked_up_to: 4,
        notes: "number of 1s is congruent to r mod m",
    })
}

/// Mediated OR where each ordered pair fires at most once: the edge sides
/// go from `fresh` to `used`.
pub fn detect_one_once() -> LibraryEntry {
    let spec = ProtocolBuilder::new(Model::Mpp)
        .states(["0", "1"])
        .alphabet(["0", "1"])
        .edge_states(["fresh", "used"])
        .initial_edge("fresh")
        .input("0", "0")
        .input("1", "1")
        .output("0", 0)
        .output("1", 1)
        .transition(["1", "fresh", "0", "fresh"], ["1", "used", "1", "used"])
        .build()
        .expect("detect_one_once is well-formed");
    LibraryEntry {
        name: "detect_one_once".into(),
        spec,
        predicate: Arc::new(|inp| u8::from(ones(inp) >= 1)),
        checked_up_to: 3,
        notes: "at least one 1",
    }
}

/// Plain entries in a fixed order.
pub fn plain_entries() -> Vec<LibraryEntry> {
    vec![detect_one(), threshold2(), majority(), modulo(2, 0).expect("valid parameters")]
}

/// Every entry, plain first.
pub fn all_entries() -> Vec<LibraryEntry> {
    let mut v = plain_entries();
    v.push(detect_one_once());
    v
}

/// Looks an entry up by its file stem (`modulo_m_r` for modulo).
pub fn by_name(name: &str) -> Option<LibraryEntry> {
    match name {
        "detect_one" => Some(detect_one()),
        "threshold2" => Some(threshold2()),
        "majority" => Some(majority()),
        "detect_one_once" => Some(detect_one_once()),
        other => {
            let rest = other.strip_prefix("modulo_")?;
            let (m, r) = rest.split_once('_')?;
            modulo(m.parse().ok()?, r.parse().ok()?).ok()
        }
    }
}
