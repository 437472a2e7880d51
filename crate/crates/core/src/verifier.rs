//! Exhaustive, bounded checks of a compiled protocol against its source.
//!
//! Every check enumerates the input vectors of a [`Scope`], explores the
//! relevant reachability graphs and stops at the first violation, which is
//! reported as a [`Witness`] that replays from the initial configuration.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::compiler::{CompiledProtocol, EdgeHead, Family, Lock};
use crate::execution::{
    inputs_of_length, predicate_from_graph, reachable, stability_map, terminal_sccs, ExecutionError,
    ExploreOptions, PredicateValue, ReachabilityGraph, StateSpaceExceeded,
};
use crate::model::{MediatedConfiguration, ModelError, Population, StepLabel};
use crate::translation::{cleanup_schedule, SourcePopulation, TranslationError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CheckId {
    Completeness,
    Soundness,
    Io,
    Stability,
    Observations,
    Predicate,
}

impl CheckId {
    pub const ALL: [CheckId; 6] = [
        CheckId::Completeness,
        CheckId::Soundness,
        CheckId::Io,
        CheckId::Stability,
        CheckId::Observations,
        CheckId::Predicate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckId::Completeness => "completeness",
            CheckId::Soundness => "soundness",
            CheckId::Io => "io",
            CheckId::Stability => "stability",
            CheckId::Observations => "observations",
            CheckId::Predicate => "predicate",
        }
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown check '{0}'")]
pub struct UnknownCheck(pub String);

impl FromStr for CheckId {
    type Err = UnknownCheck;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CheckId::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| UnknownCheck(s.to_string()))
    }
}

/// Population sizes a check covers, inclusive on both ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Scope {
    pub min_n: usize,
    pub max_n: usize,
}

impl Scope {
    pub fn new(min_n: usize, max_n: usize) -> Self {
        Scope { min_n, max_n }
    }

    /// Inputs in length order, generated lazily so that a huge bound only
    /// costs what is actually explored.
    pub fn inputs<'a>(&self, alphabet: &'a [String]) -> impl Iterator<Item = Vec<String>> + 'a {
        (self.min_n.max(1)..=self.max_n).flat_map(move |n| inputs_of_length(alphabet, n))
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.min_n.max(1), self.max_n)
    }
}

/// Settings shared by all checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerifyOptions {
    pub explore: ExploreOptions,
    /// Soundness additionally projects every compiled path onto a source
    /// path through its acknowledgement steps.
    pub project_traces: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { explore: ExploreOptions::default(), project_traces: true }
    }
}

impl VerifyOptions {
    pub fn with_node_limit(node_limit: usize) -> Self {
        VerifyOptions { explore: ExploreOptions::with_node_limit(node_limit), ..Default::default() }
    }
}

/// Which protocol a witness path runs in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WitnessSide {
    Source,
    Compiled,
}

impl fmt::Display for WitnessSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WitnessSide::Source => "source",
            WitnessSide::Compiled => "compiled",
        })
    }
}

/// A replayable counterexample.
///
/// `path` runs from the initial configuration of `side` (the translated one
/// for the compiled side) to `config`. `followup` lists compiled steps taken
/// from the translation of `config` (or from `config` itself on the compiled
/// side) before the violation showed up.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub input: Vec<String>,
    pub side: WitnessSide,
    pub path: Vec<StepLabel>,
    pub config: String,
    pub followup: Vec<StepLabel>,
    pub expected: String,
    pub found: String,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("path step {position} does not replay: {source}")]
    Path { position: usize, source: ModelError },
    #[error("followup step {position} does not replay: {source}")]
    Followup { position: usize, source: ModelError },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Translation(#[from] TranslationError),
}

/// Result of replaying a witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Replay {
    /// Rendering of the configuration reached by `path`; equals
    /// `Witness::config` for a faithful witness.
    pub config: String,
    /// Compiled configuration after the followup steps.
    pub compiled: MediatedConfiguration,
}

impl Witness {
    pub fn replay<S: SourcePopulation>(&self, pc: &CompiledProtocol) -> Result<Replay, ReplayError> {
        let start = S::initial(pc.source(), &self.input)?;
        let (config, mut compiled) = match self.side {
            WitnessSide::Source => {
                let mut c = start;
                for (position, &label) in self.path.iter().enumerate() {
                    c = c
                        .apply_step(pc.source(), label)
                        .map_err(|source| ReplayError::Path { position, source })?;
                }
                (c.render_inline(pc.source()), c.translate(pc)?)
            }
            WitnessSide::Compiled => {
                let mut d = start.translate(pc)?;
                for (position, &label) in self.path.iter().enumerate() {
                    d = d
                        .apply_step(pc.spec(), label)
                        .map_err(|source| ReplayError::Path { position, source })?;
                }
                (d.render_inline(pc.spec()), d)
            }
        };
        for (position, &label) in self.followup.iter().enumerate() {
            compiled = compiled
                .apply_step(pc.spec(), label)
                .map_err(|source| ReplayError::Followup { position, source })?;
        }
        Ok(Replay { config, compiled })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail(Box<Witness>),
    Inconclusive(String),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fail(_))
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Verdict::Fail(w) => Some(w),
            _ => None,
        }
    }
}

/// Work done by a check, including a partial count when it stopped early.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub inputs: usize,
    pub configurations: usize,
    pub steps: usize,
    /// Inputs on which both protocols were not well specified (predicate
    /// check only).
    pub not_well_specified: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationReport {
    pub check: CheckId,
    pub params: Vec<(String, String)>,
    pub verdict: Verdict,
    pub stats: Stats,
}

impl VerificationReport {
    /// Block of `key: value` lines; identical inputs give identical text.
    pub fn to_text(&self) -> String {
        let mut out = format!("check: {}\n", self.check);
        let params: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        out.push_str(&format!("params: {}\n", params.join(" ")));
        match &self.verdict {
            Verdict::Pass => out.push_str("verdict: pass\n"),
            Verdict::Inconclusive(reason) => {
                out.push_str("verdict: inconclusive\n");
                out.push_str(&format!("reason: {reason}\n"));
            }
            Verdict::Fail(w) => {
                let steps = |s: &[StepLabel]| {
                    if s.is_empty() {
                        "-".to_string()
                    } else {
                        s.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
                    }
                };
                out.push_str("verdict: fail\nwitness:\n");
                out.push_str(&format!("  input: {}\n", w.input.join(",")));
                out.push_str(&format!("  side: {}\n", w.side));
                out.push_str(&format!("  path: {}\n", steps(&w.path)));
                out.push_str(&format!("  config: {}\n", w.config));
                out.push_str(&format!("  followup: {}\n", steps(&w.followup)));
                out.push_str(&format!("  expected: {}\n", w.expected));
                out.push_str(&format!("  found: {}\n", w.found));
                out.push_str(&format!("  note: {}\n", w.note));
            }
        }
        let s = &self.stats;
        out.push_str(&format!(
            "stats: inputs={} configurations={} steps={}",
            s.inputs, s.configurations, s.steps
        ));
        if self.check == CheckId::Predicate {
            out.push_str(&format!(" nws={}", s.not_well_specified));
        }
        out.push('\n');
        out
    }
}

enum Stop {
    Fail(Box<Witness>),
    Inconclusive(String),
}

impl Stop {
    fn exceeded(limit: usize, input: &[String]) -> Self {
        Stop::Inconclusive(format!(
            "state space exceeded the node limit of {limit} on input {}",
            input.join(",")
        ))
    }

    fn execution(e: ExecutionError, input: &[String]) -> Self {
        match e {
            ExecutionError::StateSpaceExceeded { limit } => Stop::exceeded(limit, input),
            other => Stop::Inconclusive(format!("{other} on input {}", input.join(","))),
        }
    }
}

struct Run<'a> {
    pc: &'a CompiledProtocol,
    opts: &'a VerifyOptions,
    stats: Stats,
}

impl<'a> Run<'a> {
    fn source_graph<S: SourcePopulation>(&mut self, input: &[String]) -> Result<ReachabilityGraph<S>, Stop> {
        let c0 = S::initial(self.pc.source(), input).map_err(|e| self.model_failure(input, e))?;
        let g = reachable(self.pc.source(), &c0, &self.opts.explore)
            .map_err(|e: StateSpaceExceeded<S>| Stop::exceeded(e.limit, input))?;
        self.stats.configurations += g.len();
        self.stats.steps += g.edge_count();
        Ok(g)
    }

    fn compiled_graph<S: SourcePopulation>(
        &mut self,
        input: &[String],
    ) -> Result<ReachabilityGraph<MediatedConfiguration>, Stop> {
        let c0 = S::initial(self.pc.source(), input).map_err(|e| self.model_failure(input, e))?;
        let d0 = c0.translate(self.pc).map_err(|e| self.translation_failure(input, e))?;
        let g = reachable(self.pc.spec(), &d0, &self.opts.explore)
            .map_err(|e: StateSpaceExceeded<MediatedConfiguration>| Stop::exceeded(e.limit, input))?;
        self.stats.configurations += g.len();
        self.stats.steps += g.edge_count();
        Ok(g)
    }

    fn model_failure(&self, input: &[String], e: ModelError) -> Stop {
        Stop::Fail(Box::new(Witness {
            input: input.to_vec(),
            side: WitnessSide::Source,
            path: Vec::new(),
            config: "-".into(),
            followup: Vec::new(),
            expected: "an initial configuration".into(),
            found: e.to_string(),
            note: "input does not load".into(),
        }))
    }

    fn translation_failure(&self, input: &[String], e: TranslationError) -> Stop {
        Stop::Fail(Box::new(Witness {
            input: input.to_vec(),
            side: WitnessSide::Source,
            path: Vec::new(),
            config: "-".into(),
            followup: Vec::new(),
            expected: "a translatable configuration".into(),
            found: e.to_string(),
            note: "translation failed".into(),
        }))
    }

    fn finish(self, check: CheckId, scope: &Scope, result: Result<(), Stop>) -> VerificationReport {
        let mut params = vec![("n".to_string(), scope.to_string())];
        params.push(("node-limit".into(), self.opts.explore.node_limit.to_string()));
        if check == CheckId::Soundness {
            params.push(("project-traces".into(), self.opts.project_traces.to_string()));
        }
        let verdict = match result {
            Ok(()) => Verdict::Pass,
            Err(Stop::Fail(w)) => Verdict::Fail(w),
            Err(Stop::Inconclusive(r)) => Verdict::Inconclusive(r),
        };
        VerificationReport { check, params, verdict, stats: self.stats }
    }
}

fn steps_text(pc: &CompiledProtocol, steps: &[StepLabel]) -> String {
    steps.iter().map(|s| format!("{} ({})", s, pc.family(s.transition))).collect::<Vec<_>>().join(", ")
}

/// Every source step `C -> C'` is matched by the four-step conversation
/// (or the single shortcut step) leading from the translation of `C` to the
/// translation of `C'`.
pub fn check_completeness<S: SourcePopulation>(
    pc: &CompiledProtocol,
    scope: &Scope,
    opts: &VerifyOptions,
) -> VerificationReport {
    let mut run = Run { pc, opts, stats: Stats::default() };
    let result = (|| {
        for input in scope.inputs(pc.source().alphabet()) {
            run.stats.inputs += 1;
            let g = run.source_graph::<S>(&input)?;
            for (id, c) in g.nodes() {
                let dc = c.translate(pc).map_err(|e| run.translation_failure(&input, e))?;
                for &(label, to) in g.successors(id) {
                    let (t, a, b) = (label.transition, label.initiator, label.responder);
                    let plan: Vec<(Family, usize, usize)> = if pc.generated(Family::T6, t).is_empty() {
                        vec![(Family::T1, a, b), (Family::T2, b, a), (Family::T3, a, b), (Family::T4, b, a)]
                    } else {
                        vec![(Family::T6, a, b)]
                    };
                    let target = g.node(to).translate(pc).map_err(|e| run.translation_failure(&input, e))?;
                    let fail = |applied: Vec<StepLabel>, found: String, note: String| {
                        Stop::Fail(Box::new(Witness {
                            input: input.clone(),
                            side: WitnessSide::Source,
                            path: g.path_to(id),
                            config: c.render_inline(pc.source()),
                            followup: applied,
                            expected: target.render_inline(pc.spec()),
                            found,
                            note,
                        }))
                    };
                    let mut d = dc.clone();
                    let mut applied = Vec::with_capacity(plan.len());
                    for (family, i, j) in plan {
                        let lhs = d.interaction(i, j);
                        let step =
                            pc.spec().transitions_from(&lhs).iter().find(|&&id| {
                                pc.family(id) == family && pc.generated(family, t).contains(&id)
                            });
                        let Some(&tid) = step else {
                            return Err(fail(
                                applied,
                                d.render_inline(pc.spec()),
                                format!(
                                    "no {family} step of source transition {t} with initiator {} and responder {} is enabled after the steps listed",
                                    i + 1,
                                    j + 1
                                ),
                            ));
                        };
                        let step = StepLabel::new(tid, i, j);
                        d = d.successor(pc.spec(), step);
                        applied.push(step);
                    }
                    if d != target {
                        return Err(fail(
                            applied,
                            d.render_inline(pc.spec()),
                            format!("simulation of source step {label} ends elsewhere"),
                        ));
                    }
                }
            }
        }
        Ok(())
    })();
    run.finish(CheckId::Completeness, scope, result)
}

/// Source step a compiled step stands for: acknowledgements (`t2`) fire the
/// source transition with the roles swapped back, shortcuts (`t6`) fire it
/// directly, every other step is internal bookkeeping.
fn project_step<S: SourcePopulation>(
    pc: &CompiledProtocol,
    c: &S,
    step: StepLabel,
) -> Option<Result<StepLabel, ()>> {
    let prov = &pc.provenance()[step.transition];
    let (i, j) = match prov.family {
        Family::T2 => (step.responder, step.initiator),
        Family::T6 => (step.initiator, step.responder),
        _ => return None,
    };
    Some(
        prov.sources
            .iter()
            .map(|&src| StepLabel::new(src, i, j))
            .find(|&l| c.is_enabled(pc.source(), l))
            .ok_or(()),
    )
}

/// Every reachable compiled configuration can be cleaned up into the
/// translation of a source configuration reachable from the same input.
pub fn check_soundness<S: SourcePopulation>(
    pc: &CompiledProtocol,
    scope: &Scope,
    opts: &VerifyOptions,
) -> VerificationReport {
    let mut run = Run { pc, opts, stats: Stats::default() };
    let result = (|| {
        for input in scope.inputs(pc.source().alphabet()) {
            run.stats.inputs += 1;
            let g = run.source_graph::<S>(&input)?;
            let h = run.compiled_graph::<S>(&input)?;
            for (id, d) in h.nodes() {
                let fail = |followup: Vec<StepLabel>, expected: String, found: String, note: String| {
                    Stop::Fail(Box::new(Witness {
                        input: input.clone(),
                        side: WitnessSide::Compiled,
                        path: h.path_to(id),
                        config: d.render_inline(pc.spec()),
                        followup,
                        expected,
                        found,
                        note,
                    }))
                };
                let c = S::normalize(d, pc);
                let image = c.translate(pc).map_err(|e| run.translation_failure(&input, e))?;
                if !g.contains(&c) {
                    return Err(fail(
                        Vec::new(),
                        "a source-reachable configuration".into(),
                        c.render_inline(pc.source()),
                        "normalized configuration is not reachable in the source".into(),
                    ));
                }
                match cleanup_schedule(d, pc) {
                    Err(TranslationError::NotCleanable {
                        family, initiator, responder, at, applied, ..
                    }) => {
                        return Err(fail(
                            applied,
                            image.render_inline(pc.spec()),
                            at.render_inline(pc.spec()),
                            format!(
                                "cleanup step {family} with initiator {} and responder {} is not enabled",
                                initiator + 1,
                                responder + 1
                            ),
                        ));
                    }
                    Err(e) => return Err(run.translation_failure(&input, e)),
                    Ok(sched) if sched.endpoint != image => {
                        return Err(fail(
                            sched.steps,
                            image.render_inline(pc.spec()),
                            sched.endpoint.render_inline(pc.spec()),
                            "cleanup does not end at the translation of the normalized configuration".into(),
                        ));
                    }
                    Ok(_) => {}
                }
                if run.opts.project_traces {
                    let path = h.path_to(id);
                    let mut projected =
                        S::initial(pc.source(), &input).map_err(|e| run.model_failure(&input, e))?;
                    let mut source_path = Vec::new();
                    for &step in &path {
                        match project_step(pc, &projected, step) {
                            None => {}
                            Some(Ok(l)) => {
                                projected = projected.successor(pc.source(), l);
                                source_path.push(l);
                            }
                            Some(Err(())) => {
                                return Err(fail(
                                    Vec::new(),
                                    "a valid source path".into(),
                                    format!(
                                        "{} then {step} ({}) has no enabled source counterpart",
                                        if source_path.is_empty() {
                                            "-".to_string()
                                        } else {
                                            source_path
                                                .iter()
                                                .map(ToString::to_string)
                                                .collect::<Vec<_>>()
                                                .join(", ")
                                        },
                                        pc.family(step.transition)
                                    ),
                                    "projected trace is not a source execution".into(),
                                ));
                            }
                        }
                    }
                    if projected != c {
                        return Err(fail(
                            Vec::new(),
                            c.render_inline(pc.source()),
                            projected.render_inline(pc.source()),
                            "projected trace ends away from the normalized configuration".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    })();
    run.finish(CheckId::Soundness, scope, result)
}

/// Translation commutes with loading an input and preserves the global
/// output of every reachable source configuration.
pub fn check_io<S: SourcePopulation>(
    pc: &CompiledProtocol,
    scope: &Scope,
    opts: &VerifyOptions,
) -> VerificationReport {
    let mut run = Run { pc, opts, stats: Stats::default() };
    let result = (|| {
        for input in scope.inputs(pc.source().alphabet()) {
            run.stats.inputs += 1;
            let c0 = S::initial(pc.source(), &input).map_err(|e| run.model_failure(&input, e))?;
            let image = c0.translate(pc).map_err(|e| run.translation_failure(&input, e))?;
            let loaded = MediatedConfiguration::initial(pc.spec(), &input)
                .map_err(|e| run.model_failure(&input, e))?;
            if image != loaded {
                return Err(Stop::Fail(Box::new(Witness {
                    input: input.clone(),
                    side: WitnessSide::Source,
                    path: Vec::new(),
                    config: c0.render_inline(pc.source()),
                    followup: Vec::new(),
                    expected: image.render_inline(pc.spec()),
                    found: loaded.render_inline(pc.spec()),
                    note: "compiled input map disagrees with the translation".into(),
                })));
            }
            let g = run.source_graph::<S>(&input)?;
            for (id, c) in g.nodes() {
                let d = c.translate(pc).map_err(|e| run.translation_failure(&input, e))?;
                let (x, y) = (c.global_output(pc.source()), d.global_output(pc.spec()));
                if x != y {
                    return Err(Stop::Fail(Box::new(Witness {
                        input: input.clone(),
                        side: WitnessSide::Source,
                        path: g.path_to(id),
                        config: c.render_inline(pc.source()),
                        followup: Vec::new(),
                        expected: x.to_string(),
                        found: y.to_string(),
                        note: "global output differs after translation".into(),
                    })));
                }
            }
        }
        Ok(())
    })();
    run.finish(CheckId::Io, scope, result)
}

/// A reachable source configuration is output stable iff its translation
/// is, with the same output.
pub fn check_stability_preservation<S: SourcePopulation>(
    pc: &CompiledProtocol,
    scope: &Scope,
    opts: &VerifyOptions,
) -> VerificationReport {
    let mut run = Run { pc, opts, stats: Stats::default() };
    let result = (|| {
        for input in scope.inputs(pc.source().alphabet()) {
            run.stats.inputs += 1;
            let g = run.source_graph::<S>(&input)?;
            let h = run.compiled_graph::<S>(&input)?;
            let src = stability_map(pc.source(), &g).map_err(|e| Stop::execution(e, &input))?;
            let tgt = stability_map(pc.spec(), &h).map_err(|e| Stop::execution(e, &input))?;
            for (id, c) in g.nodes() {
                let d = c.translate(pc).map_err(|e| run.translation_failure(&input, e))?;
                let found = match h.id_of(&d) {
                    Some(k) => tgt[k],
                    None => {
                        let sub = reachable(pc.spec(), &d, &opts.explore).map_err(
                            |e: StateSpaceExceeded<MediatedConfiguration>| Stop::exceeded(e.limit, &input),
                        )?;
                        run.stats.configurations += sub.len();
                        stability_map(pc.spec(), &sub).map_err(|e| Stop::execution(e, &input))?[0]
                    }
                };
                if src[id] != found {
                    return Err(Stop::Fail(Box::new(Witness {
                        input: input.clone(),
                        side: WitnessSide::Source,
                        path: g.path_to(id),
                        config: c.render_inline(pc.source()),
                        followup: Vec::new(),
                        expected: src[id].to_string(),
                        found: found.to_string(),
                        note: "output stability differs after translation".into(),
                    })));
                }
            }
        }
        Ok(())
    })();
    run.finish(CheckId::Stability, scope, result)
}

/// Both protocols compute the same value on every input of the scope; an
/// input on which one side is not well specified only passes if the other
/// side is not either.
pub fn check_predicate_equality<S: SourcePopulation>(
    pc: &CompiledProtocol,
    scope: &Scope,
    opts: &VerifyOptions,
) -> VerificationReport {
    let scope = Scope::new(scope.min_n.max(2), scope.max_n);
    let mut run = Run { pc, opts, stats: Stats::default() };
    let result = (|| {
        for input in scope.inputs(pc.source().alphabet()) {
            run.stats.inputs += 1;
            let g = run.source_graph::<S>(&input)?;
            let d0 = MediatedConfiguration::initial(pc.spec(), &input)
                .map_err(|e| run.model_failure(&input, e))?;
            let h = reachable(pc.spec(), &d0, &opts.explore)
                .map_err(|e: StateSpaceExceeded<MediatedConfiguration>| Stop::exceeded(e.limit, &input))?;
            run.stats.configurations += h.len();
            run.stats.steps += h.edge_count();
            let x = predicate_from_graph(pc.source(), &g).map_err(|e| Stop::execution(e, &input))?;
            let y = predicate_from_graph(pc.spec(), &h).map_err(|e| Stop::execution(e, &input))?;
            if x != y {
                let c0 = S::initial(pc.source(), &input).map_err(|e| run.model_failure(&input, e))?;
                return Err(Stop::Fail(Box::new(Witness {
                    input: input.clone(),
                    side: WitnessSide::Source,
                    path: Vec::new(),
                    config: c0.render_inline(pc.source()),
                    followup: Vec::new(),
                    expected: x.to_string(),
                    found: y.to_string(),
                    note: "source and compiled protocol compute different values".into(),
                })));
            }
            if x == PredicateValue::NotWellSpecified {
                run.stats.not_well_specified += 1;
            }
        }
        Ok(())
    })();
    run.finish(CheckId::Predicate, &scope, result)
}

fn is_open(head: EdgeHead) -> bool {
    !matches!(head, EdgeHead::Init)
}

/// Conversation bookkeeping of a single compiled configuration: a locked
/// agent has exactly one open side (backup or `sr`), an unlocked agent has
/// none. Returns a description of the first violation.
pub fn conversation_violation(pc: &CompiledProtocol, d: &MediatedConfiguration) -> Option<String> {
    let n = d.size();
    for i in 0..n {
        let open: Vec<usize> =
            (0..n).filter(|&j| j != i && is_open(pc.edge_role(d.edge(i, j)).head)).collect();
        let lock = pc.agent_role(d.agent(i)).0;
        let ok = match lock {
            Lock::Locked => open.len() == 1,
            Lock::Unlocked => open.is_empty(),
        };
        if !ok {
            let towards: Vec<String> = open.iter().map(|j| (j + 1).to_string()).collect();
            let state = if lock == Lock::Locked { "locked" } else { "unlocked" };
            return Some(format!(
                "agent {} is {state} with {} open side(s) towards [{}]",
                i + 1,
                open.len(),
                towards.join(",")
            ));
        }
    }
    None
}

/// Pairs `(x, y)` where `x` still holds the backup towards `y` and `y` has
/// acknowledged.
fn committed_pairs(pc: &CompiledProtocol, d: &MediatedConfiguration) -> Vec<(usize, usize)> {
    let n = d.size();
    let mut out = Vec::new();
    for x in 0..n {
        for y in (0..n).filter(|&y| y != x) {
            if matches!(pc.edge_role(d.edge(x, y)).head, EdgeHead::Backup { .. })
                && pc.edge_role(d.edge(y, x)).head == EdgeHead::Responded
            {
                out.push((x, y));
            }
        }
    }
    out
}

/// Pairs `(x, y)` where `y` acknowledged and `x` already concluded.
fn half_resolved_pairs(pc: &CompiledProtocol, d: &MediatedConfiguration) -> Vec<(usize, usize)> {
    let n = d.size();
    let mut out = Vec::new();
    for x in 0..n {
        for y in (0..n).filter(|&y| y != x) {
            if pc.edge_role(d.edge(x, y)).head == EdgeHead::Init
                && pc.edge_role(d.edge(y, x)).head == EdgeHead::Responded
            {
                out.push((x, y));
            }
        }
    }
    out
}

/// Once a conversation is acknowledged its only way forward is `t3` from the
/// acknowledging agent, then `t4` from the other one: for a committed pair
/// the only enabled step observed by either agent is that `t3`, for a
/// half-resolved pair the only enabled step observed by the acknowledging
/// agent is that `t4`.
fn resolution_violation(
    pc: &CompiledProtocol,
    d: &MediatedConfiguration,
    enabled: &[StepLabel],
) -> Option<String> {
    let only = |family: Family, initiator: usize, observers: &[usize]| -> Option<String> {
        let relevant: Vec<&StepLabel> = enabled.iter().filter(|s| observers.contains(&s.responder)).collect();
        let expected = relevant.iter().any(|s| s.initiator == initiator && pc.family(s.transition) == family);
        let stray: Vec<&&StepLabel> = relevant
            .iter()
            .filter(|s| !(s.initiator == initiator && pc.family(s.transition) == family))
            .collect();
        if !expected || !stray.is_empty() {
            let observers: Vec<String> = observers.iter().map(|o| (o + 1).to_string()).collect();
            let stray: Vec<StepLabel> = stray.into_iter().map(|s| **s).collect();
            return Some(format!(
                "expected exactly the {family} step from agent {} observed by [{}]; enabled: {}",
                initiator + 1,
                observers.join(","),
                if stray.is_empty() { "none of that family".into() } else { steps_text(pc, &stray) }
            ));
        }
        None
    };
    for (x, y) in committed_pairs(pc, d) {
        if let Some(v) = only(Family::T3, y, &[x, y]) {
            return Some(v);
        }
    }
    for (x, y) in half_resolved_pairs(pc, d) {
        if let Some(v) = only(Family::T4, x, &[y]) {
            return Some(v);
        }
    }
    None
}

/// Structural invariants of compiled runs: only observers change their
/// output and only through `t1`, `t2`, `t5` or `t6`; conversation
/// bookkeeping holds in every configuration; acknowledged conversations
/// resolve in order and never sit in a terminal component.
pub fn check_observations<S: SourcePopulation>(
    pc: &CompiledProtocol,
    scope: &Scope,
    opts: &VerifyOptions,
) -> VerificationReport {
    let mut run = Run { pc, opts, stats: Stats::default() };
    let spec = pc.spec();
    let result = (|| {
        for input in scope.inputs(pc.source().alphabet()) {
            run.stats.inputs += 1;
            let h = run.compiled_graph::<S>(&input)?;
            let fail = |id: usize, followup: Vec<StepLabel>, expected: &str, found: String, note: &str| {
                Stop::Fail(Box::new(Witness {
                    input: input.clone(),
                    side: WitnessSide::Compiled,
                    path: h.path_to(id),
                    config: h.node(id).render_inline(spec),
                    followup,
                    expected: expected.to_string(),
                    found,
                    note: note.to_string(),
                }))
            };
            for (id, d) in h.nodes() {
                if let Some(v) = conversation_violation(pc, d) {
                    return Err(fail(
                        id,
                        Vec::new(),
                        "one open side per locked agent, none otherwise",
                        v,
                        "conversation bookkeeping",
                    ));
                }
                let enabled: Vec<StepLabel> = h.successors(id).iter().map(|&(l, _)| l).collect();
                if let Some(v) = resolution_violation(pc, d, &enabled) {
                    return Err(fail(
                        id,
                        Vec::new(),
                        "acknowledged conversations resolve in order",
                        v,
                        "resolution order",
                    ));
                }
                for &(label, to) in h.successors(id) {
                    let next = h.node(to);
                    let family = pc.family(label.transition);
                    for i in 0..d.size() {
                        if spec.output(d.agent(i)) == spec.output(next.agent(i)) {
                            continue;
                        }
                        if i != label.responder || !family.changes_output() {
                            return Err(fail(
                                id,
                                vec![label],
                                "output changes only at the observer of t1, t2, t5 or t6",
                                format!("agent {} changes output in a {family} step", i + 1),
                                "output change outside an observation",
                            ));
                        }
                    }
                }
            }
            for scc in terminal_sccs(&h).map_err(|e| Stop::execution(e, &input))? {
                if let Some(&id) = scc.iter().find(|&&id| !committed_pairs(pc, h.node(id)).is_empty()) {
                    let pairs: Vec<String> = committed_pairs(pc, h.node(id))
                        .into_iter()
                        .map(|(x, y)| format!("({},{})", x + 1, y + 1))
                        .collect();
                    return Err(fail(
                        id,
                        Vec::new(),
                        "no committed pair in a terminal component",
                        format!("committed pairs {}", pairs.join(" ")),
                        "acknowledged conversation never resolves",
                    ));
                }
            }
        }
        Ok(())
    })();
    run.finish(CheckId::Observations, scope, result)
}

/// Runs the selected checks in the given order.
pub fn run_checks<S: SourcePopulation>(
    pc: &CompiledProtocol,
    checks: &[CheckId],
    scope: &Scope,
    opts: &VerifyOptions,
) -> Vec<VerificationReport> {
    checks
        .iter()
        .map(|check| match check {
            CheckId::Completeness => check_completeness::<S>(pc, scope, opts),
            CheckId::Soundness => check_soundness::<S>(pc, scope, opts),
            CheckId::Io => check_io::<S>(pc, scope, opts),
            CheckId::Stability => check_stability_preservation::<S>(pc, scope, opts),
            CheckId::Observations => check_observations::<S>(pc, scope, opts),
            CheckId::Predicate => check_predicate_equality::<S>(pc, scope, opts),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::{compile_mpp, compile_pp};
    use crate::library;
    use crate::model::Configuration;

    fn compiled(name: &str) -> CompiledProtocol {
        compile_pp(&library::by_name(name).unwrap().spec, false).unwrap()
    }

    fn opts() -> VerifyOptions {
        VerifyOptions::default()
    }

    #[test]
    fn check_names_round_trip() {
        for c in CheckId::ALL {
            assert_eq!(c.name().parse::<CheckId>().unwrap(), c);
        }
        assert!("bogus".parse::<CheckId>().is_err());
    }

    #[test]
    fn scope_enumerates_lazily() {
        let alphabet = vec!["0".to_string(), "1".to_string()];
        assert_eq!(Scope::new(2, 3).inputs(&alphabet).count(), 12);
        assert_eq!(Scope::new(3, 2).inputs(&alphabet).count(), 0);
        let first = Scope::new(2, 1_000_000).inputs(&alphabet).next().unwrap();
        assert_eq!(first, vec!["0", "0"]);
    }

    #[test]
    fn detect_one_passes_everything() {
        let pc = compiled("detect_one");
        for r in run_checks::<Configuration>(&pc, &CheckId::ALL, &Scope::new(2, 3), &opts()) {
            assert!(r.verdict.is_pass(), "{}", r.to_text());
        }
    }

    #[test]
    fn shortcut_compilation_passes_everything() {
        let pc = compile_pp(&library::detect_one().spec, true).unwrap();
        for r in run_checks::<Configuration>(&pc, &CheckId::ALL, &Scope::new(2, 3), &opts()) {
            assert!(r.verdict.is_pass(), "{}", r.to_text());
        }
    }

    #[test]
    fn threshold2_small_scope() {
        let pc = compiled("threshold2");
        for r in run_checks::<Configuration>(&pc, &CheckId::ALL, &Scope::new(2, 2), &opts()) {
            assert!(r.verdict.is_pass(), "{}", r.to_text());
        }
    }

    #[test]
    fn empty_scope_is_vacuous() {
        let pc = compiled("detect_one");
        let r = check_completeness::<Configuration>(&pc, &Scope::new(3, 2), &opts());
        assert!(r.verdict.is_pass());
        assert_eq!(r.stats.inputs, 0);
    }

    #[test]
    fn missing_t3_breaks_completeness_with_replayable_witness() {
        let pc = compiled("detect_one").without_family(Family::T3);
        let r = check_completeness::<Configuration>(&pc, &Scope::new(2, 3), &opts());
        let w = r.verdict.witness().expect("completeness must fail").clone();
        assert_eq!(w.followup.len(), 2);
        let replay = w.replay::<Configuration>(&pc).unwrap();
        assert_eq!(replay.config, w.config);
        assert_eq!(replay.compiled.render_inline(pc.spec()), w.found);
        assert!(replay
            .compiled
            .enabled_steps(pc.spec())
            .iter()
            .all(|s| pc.family(s.transition) != Family::T3));
        assert!(r.to_text().contains("verdict: fail\nwitness:\n  input: "));
    }

    #[test]
    fn missing_t5_breaks_soundness() {
        let pc = compiled("detect_one").without_family(Family::T5);
        let r = check_soundness::<Configuration>(&pc, &Scope::new(2, 2), &opts());
        let w = r.verdict.witness().expect("soundness must fail");
        assert_eq!(w.side, WitnessSide::Compiled);
        let replay = w.replay::<Configuration>(&pc).unwrap();
        assert_eq!(replay.config, w.config);
        assert!(cleanup_schedule(&replay.compiled, &pc).is_err());
    }

    #[test]
    fn mutated_outputs_break_io() {
        let pc = compiled("detect_one");
        let broken = pc.with_target_outputs(|_| 0).unwrap();
        let r = check_io::<Configuration>(&broken, &Scope::new(2, 2), &opts());
        let w = r.verdict.witness().expect("io must fail");
        assert_eq!(w.input, vec!["0", "1"]);
        assert_eq!((w.expected.as_str(), w.found.as_str()), ("bot", "0"));
        assert_eq!(w.replay::<Configuration>(&broken).unwrap().config, w.config);
    }

    #[test]
    fn single_symbol_alphabet_is_trivially_io() {
        let src = crate::model::ProtocolBuilder::new(crate::model::Model::Pp)
            .states(["a", "b"])
            .alphabet(["x"])
            .input("x", "a")
            .output("a", 0)
            .output("b", 1)
            .transition(["a", "a"], ["b", "b"])
            .build()
            .unwrap();
        let pc = compile_pp(&src, false).unwrap();
        let r = check_io::<Configuration>(&pc, &Scope::new(1, 4), &opts());
        assert!(r.verdict.is_pass(), "{}", r.to_text());
    }

    #[test]
    fn node_limit_makes_checks_inconclusive() {
        let pc = compiled("threshold2");
        let tight = VerifyOptions::with_node_limit(10);
        for r in run_checks::<Configuration>(&pc, &CheckId::ALL, &Scope::new(2, 1_000), &tight) {
            assert!(matches!(r.verdict, Verdict::Inconclusive(_)), "{}", r.to_text());
            assert!(r.to_text().contains("reason: state space exceeded"));
        }
    }

    #[test]
    fn predicate_counts_inputs() {
        let pc = compiled("detect_one");
        let r = check_predicate_equality::<Configuration>(&pc, &Scope::new(2, 3), &opts());
        assert!(r.verdict.is_pass());
        assert_eq!(r.stats.inputs, 12);
        assert_eq!(r.stats.not_well_specified, 0);
    }

    #[test]
    fn conversation_checker_flags_two_backups() {
        let pc = compiled("detect_one");
        let rows = ["L:1,bak:0,bak:0", "eps,U:0,eps", "eps,eps,U:0"];
        let d = MediatedConfiguration::from_rows(pc.spec(), &rows).unwrap();
        let v = conversation_violation(&pc, &d).expect("two backups at agent 1");
        assert!(v.contains("agent 1 is locked with 2 open side(s)"), "{v}");
        let fine = MediatedConfiguration::from_rows(pc.spec(), &["U:1,eps", "bak:0,L:1"]).unwrap();
        assert_eq!(conversation_violation(&pc, &fine), None);
    }

    #[test]
    fn mediated_source_checks() {
        let pc = compile_mpp(&library::detect_one_once().spec).unwrap();
        for r in run_checks::<MediatedConfiguration>(&pc, &CheckId::ALL, &Scope::new(2, 2), &opts()) {
            assert!(r.verdict.is_pass(), "{}", r.to_text());
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let pc = compiled("detect_one").without_family(Family::T4);
        let a = run_checks::<Configuration>(&pc, &CheckId::ALL, &Scope::new(2, 3), &opts());
        let b = run_checks::<Configuration>(&pc, &CheckId::ALL, &Scope::new(2, 3), &opts());
        let text = |rs: &[VerificationReport]| rs.iter().map(|r| r.to_text()).collect::<String>();
        assert_eq!(text(&a), text(&b));
        assert!(a.iter().any(|r| r.verdict.is_fail()));
    }
}
