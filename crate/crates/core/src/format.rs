//! Line-oriented text format for protocols, provenance and configurations.
//!
//! ```text
//! # at least one 1
//! model: pp
//! states: 0 1
//! alphabet: 0 1
//! input:
//!   0 -> 0
//!   1 -> 1
//! output:
//!   0 -> 0
//!   1 -> 1
//! transitions:
//!   1 0 -> 1 1
//! ```
//!
//! Mediated protocols add `edge-states:` and `initial-edge:` and use
//! four-symbol transition sides. Compiled protocols carry a `provenance:`
//! section (`<transition-index> <family> <source-index>[,...]`), and any
//! document may hold a `config:` block (one row per line, cells separated by
//! commas).

use std::fmt::Write as _;

use thiserror::Error;

use crate::compiler::{CompiledProtocol, Provenance};
use crate::model::{
    Configuration, MediatedConfiguration, Model, ModelError, Population, ProtocolBuilder, ProtocolSpec,
};

const SECTIONS: &[&str] = &[
    "model",
    "states",
    "alphabet",
    "edge-states",
    "initial-edge",
    "input",
    "output",
    "transitions",
    "provenance",
    "config",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing section '{0}'")]
    MissingSection(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, message: message.into() }
}

/// A line of section content with its 1-based line number.
#[derive(Debug, Clone)]
pub struct Line {
    pub number: usize,
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct Section {
    pub name: String,
    pub line: usize,
    /// Text after the colon on the header line, if any.
    pub inline: String,
    pub lines: Vec<Line>,
}

impl Section {
    /// Whitespace-separated tokens of the header line and body.
    fn tokens(&self) -> Vec<String> {
        self.inline
            .split_whitespace()
            .chain(self.lines.iter().flat_map(|l| l.text.split_whitespace()))
            .map(str::to_string)
            .collect()
    }

    /// Body lines, with inline content treated as a first line.
    fn body(&self) -> Vec<Line> {
        let mut out = Vec::new();
        if !self.inline.is_empty() {
            out.push(Line { number: self.line, text: self.inline.clone() });
        }
        out.extend(self.lines.iter().cloned());
        out
    }
}

/// Sections of a document in order of appearance.
#[derive(Debug, Clone, Default)]
pub struct Document {
    pub sections: Vec<Section>,
}

impl Document {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut doc = Document::default();
        for (idx, raw) in text.lines().enumerate() {
            let number = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let header = content
                .split_once(':')
                .filter(|(key, rest)| {
                    SECTIONS.contains(&key.trim())
                        && (rest.is_empty() || rest.starts_with(char::is_whitespace))
                })
                .map(|(key, rest)| (key.trim().to_string(), rest.trim().to_string()));
            match header {
                Some((name, inline)) => {
                    if doc.get(&name).is_some() {
                        return Err(syntax(number, format!("section '{name}' appears twice")));
                    }
                    doc.sections.push(Section { name, line: number, inline, lines: Vec::new() });
                }
                None => match doc.sections.last_mut() {
                    Some(sec) => sec.lines.push(Line { number, text: content.to_string() }),
                    None => return Err(syntax(number, "content before the first section")),
                },
            }
        }
        Ok(doc)
    }

    pub fn get(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn has_protocol(&self) -> bool {
        self.get("model").is_some()
    }

    pub fn protocol(&self) -> Result<ProtocolSpec, ParseError> {
        let model_sec = self.get("model").ok_or(ParseError::MissingSection("model"))?;
        let tokens = model_sec.tokens();
        let (model, require_io) = match tokens.as_slice() {
            [m] if m == "pp" => (Model::Pp, false),
            [m] if m == "mpp" => (Model::Mpp, false),
            [m] if m == "iompp" => (Model::Mpp, true),
            _ => return Err(syntax(model_sec.line, "model must be one of pp, mpp, iompp")),
        };
        let mut b = ProtocolBuilder::new(model);
        let need = |name: &'static str| self.get(name).ok_or(ParseError::MissingSection(name));
        b = b.states(need("states")?.tokens()).alphabet(need("alphabet")?.tokens());
        if let Some(sec) = self.get("edge-states") {
            b = b.edge_states(sec.tokens());
        }
        if let Some(sec) = self.get("initial-edge") {
            match sec.tokens().as_slice() {
                [e] => b = b.initial_edge(e),
                _ => return Err(syntax(sec.line, "initial-edge takes exactly one symbol")),
            }
        }
        for line in need("input")?.body() {
            let (a, q) = mapping(&line)?;
            b = b.input(a, q);
        }
        for line in need("output")?.body() {
            let (q, x) = mapping(&line)?;
            let x = match x.as_str() {
                "0" => 0,
                "1" => 1,
                other => return Err(syntax(line.number, format!("output '{other}' is not 0 or 1"))),
            };
            b = b.output(q, x);
        }
        if let Some(sec) = self.get("transitions") {
            for line in sec.body() {
                let tokens: Vec<&str> = line.text.split_whitespace().collect();
                let arrow = tokens
                    .iter()
                    .position(|t| *t == "->")
                    .ok_or_else(|| syntax(line.number, "transition needs '->'"))?;
                b = b.transition(&tokens[..arrow], &tokens[arrow + 1..]);
            }
        }
        let spec = b.build()?;
        if require_io && !spec.is_immediate_observation() {
            return Err(syntax(model_sec.line, "model iompp but some transition changes its initiator"));
        }
        Ok(spec)
    }

    /// The `provenance:` section, if present.
    pub fn provenance(&self) -> Result<Option<Vec<Provenance>>, ParseError> {
        let Some(sec) = self.get("provenance") else {
            return Ok(None);
        };
        let mut out: Vec<Provenance> = Vec::new();
        for line in sec.body() {
            let tokens: Vec<&str> = line.text.split_whitespace().collect();
            let [idx, family, sources] = tokens.as_slice() else {
                return Err(syntax(line.number, "expected '<index> <family> <sources>'"));
            };
            let idx: usize = idx.parse().map_err(|_| syntax(line.number, format!("bad index '{idx}'")))?;
            if idx != out.len() {
                return Err(syntax(line.number, format!("expected index {}, found {idx}", out.len())));
            }
            let family = family.parse().map_err(|e| syntax(line.number, format!("{e}")))?;
            let sources = sources
                .split(',')
                .map(|s| s.parse::<usize>().map_err(|_| syntax(line.number, format!("bad source '{s}'"))))
                .collect::<Result<Vec<_>, _>>()?;
            out.push(Provenance { family, sources });
        }
        Ok(Some(out))
    }

    /// Rows of the `config:` block.
    pub fn config_rows(&self) -> Result<Vec<String>, ParseError> {
        let sec = self.get("config").ok_or(ParseError::MissingSection("config"))?;
        Ok(sec.body().into_iter().map(|l| l.text.split_whitespace().collect::<String>()).collect())
    }
}

fn mapping(line: &Line) -> Result<(String, String), ParseError> {
    match line.text.split_whitespace().collect::<Vec<_>>().as_slice() {
        [a, "->", b] => Ok((a.to_string(), b.to_string())),
        _ => Err(syntax(line.number, "expected '<symbol> -> <symbol>'")),
    }
}

pub fn parse_protocol(text: &str) -> Result<ProtocolSpec, ParseError> {
    Document::parse(text)?.protocol()
}

pub fn write_protocol(p: &ProtocolSpec) -> String {
    let mut out = String::new();
    let join = |v: Vec<String>| v.join(" ");
    let _ = writeln!(out, "model: {}", p.model());
    let _ = writeln!(out, "states: {}", join(p.states().iter().map(|q| q.to_string()).collect()));
    let _ = writeln!(out, "alphabet: {}", p.alphabet().join(" "));
    if p.is_mediated() {
        let _ =
            writeln!(out, "edge-states: {}", join(p.edge_states().iter().map(|e| e.to_string()).collect()));
        if let Some(e) = p.initial_edge() {
            let _ = writeln!(out, "initial-edge: {}", p.edge(e));
        }
    }
    out.push_str("input:\n");
    for a in p.alphabet() {
        let q = p.input_state(a).expect("input map is total");
        let _ = writeln!(out, "  {a} -> {}", p.state(q));
    }
    out.push_str("output:\n");
    for (i, q) in p.states().iter().enumerate() {
        let _ = writeln!(out, "  {q} -> {}", p.output(i as u16));
    }
    out.push_str("transitions:\n");
    for t in p.transitions() {
        let _ = writeln!(out, "  {}", p.describe_transition(t));
    }
    out
}

/// Compiled protocol followed by its provenance section.
pub fn write_compiled(pc: &CompiledProtocol) -> String {
    let mut out = write_protocol(pc.spec());
    out.push_str("provenance:\n");
    for (i, prov) in pc.provenance().iter().enumerate() {
        let sources: Vec<String> = prov.sources.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "  {i} {} {}", prov.family, sources.join(","));
    }
    out
}

/// Reads a compiled protocol file against its source.
pub fn parse_compiled(source: &ProtocolSpec, text: &str) -> Result<CompiledProtocol, LoadError> {
    let doc = Document::parse(text)?;
    let spec = doc.protocol()?;
    let provenance = doc.provenance()?.ok_or(ParseError::MissingSection("provenance"))?;
    Ok(CompiledProtocol::from_parts(source.clone(), spec, provenance)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoadError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Compile(#[from] crate::compiler::CompileError),
}

/// `config:` block for any configuration kind.
pub fn write_config<C: Population>(p: &ProtocolSpec, c: &C) -> String {
    let mut out = String::from("config:\n");
    for row in c.render(p) {
        let _ = writeln!(out, "  {row}");
    }
    out
}

/// Plain configuration from a single comma-separated row.
pub fn parse_plain_config(p: &ProtocolSpec, rows: &[String]) -> Result<Configuration, ModelError> {
    match rows {
        [row] => {
            let names: Vec<&str> = row.split(',').map(str::trim).collect();
            Configuration::from_names(p, &names)
        }
        [] => Err(ModelError::EmptyPopulation),
        _ => Err(ModelError::NotSquare { rows: rows.len(), width: 1 }),
    }
}

pub fn parse_mediated_config(p: &ProtocolSpec, rows: &[String]) -> Result<MediatedConfiguration, ModelError> {
    MediatedConfiguration::from_rows(p, rows)
}
