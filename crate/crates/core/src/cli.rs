//! Command-line front end.
//!
//! Exit codes: 0 success, 1 semantic failure, 2 parse error, 3 not well
//! specified, 4 resource limit reached.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::compiler::{compile_mpp, compile_pp, CompiledProtocol};
use crate::execution::{
    inputs_of_length, predicate_value, run_random, ExecutionError, ExploreOptions, PredicateValue,
    DEFAULT_NODE_LIMIT,
};
use crate::format::{self, Document, LoadError};
use crate::model::{Configuration, MediatedConfiguration, Model, Population, ProtocolSpec};
use crate::translation::SourcePopulation;
use crate::verifier::{run_checks, CheckId, Scope, Verdict, VerificationReport, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_NOT_WELL_SPECIFIED: i32 = 3;
pub const EXIT_LIMIT: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "iompp", version, about = "Compile and check population protocols")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Pp,
    Mpp,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compile a two-way protocol into an immediate-observation mediated one.
    Compile {
        input: PathBuf,
        output: PathBuf,
        /// Expected source model; defaults to the one declared in the file.
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
        /// Compile transitions that keep the initiator into a single step.
        #[arg(long)]
        use_t6: bool,
    },
    /// Run one seeded random execution.
    Run {
        protocol: PathBuf,
        /// Comma-separated input symbols, one per agent.
        #[arg(long)]
        input: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
        /// Write the full trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Tabulate the computed value for every input up to a population size.
    Predicate {
        protocol: PathBuf,
        #[arg(long, default_value_t = 3)]
        max_n: usize,
        #[arg(long, default_value_t = DEFAULT_NODE_LIMIT)]
        node_limit: usize,
    },
    /// Check a compiled protocol against its source.
    Verify {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Comma-separated subset of completeness, soundness, io, stability,
        /// observations, predicate.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "completeness,soundness,io,stability,observations,predicate"
        )]
        checks: Vec<String>,
        #[arg(long, default_value_t = 3)]
        max_n: usize,
        #[arg(long, default_value_t = DEFAULT_NODE_LIMIT)]
        node_limit: usize,
    },
    /// Print the translation of a source configuration.
    Translate {
        #[arg(long)]
        protocol: PathBuf,
        /// A file with a `config:` block, or rows inline separated by ';'.
        #[arg(long)]
        config: String,
    },
}

/// Message plus exit code of a failed command.
struct Exit {
    code: i32,
    message: String,
}

impl Exit {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Exit { code, message: message.into() }
    }
}

type CmdResult = Result<i32, Exit>;

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let target: &mut dyn Write = if code == 0 { out } else { err };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let result = match cli.command {
        Command::Compile { input, output, model, use_t6 } => cmd_compile(&input, &output, model, use_t6, out),
        Command::Run { protocol, input, seed, max_steps, trace } => {
            cmd_run(&protocol, &input, seed, max_steps, trace.as_deref(), out)
        }
        Command::Predicate { protocol, max_n, node_limit } => {
            cmd_predicate(&protocol, max_n, node_limit, out)
        }
        Command::Verify { source, target, checks, max_n, node_limit } => {
            cmd_verify(&source, &target, &checks, max_n, node_limit, out)
        }
        Command::Translate { protocol, config } => cmd_translate(&protocol, &config, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn read(path: &Path) -> Result<String, Exit> {
    fs::read_to_string(path).map_err(|e| Exit::new(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Exit> {
    fs::write(path, text).map_err(|e| Exit::new(EXIT_FAILURE, format!("{}: {e}", path.display())))
}

fn load_protocol(path: &Path) -> Result<ProtocolSpec, Exit> {
    format::parse_protocol(&read(path)?)
        .map_err(|e| Exit::new(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn compile(p: &ProtocolSpec, use_t6: bool) -> Result<CompiledProtocol, Exit> {
    let compiled = match p.model() {
        Model::Pp => compile_pp(p, use_t6),
        Model::Mpp if use_t6 => {
            return Err(Exit::new(EXIT_FAILURE, "--use-t6 only applies to plain sources"));
        }
        Model::Mpp => compile_mpp(p),
    };
    compiled.map_err(|e| Exit::new(EXIT_FAILURE, e.to_string()))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Exit> {
    out.write_all(text.as_bytes()).map_err(|e| Exit::new(EXIT_FAILURE, e.to_string()))
}

fn cmd_compile(
    input: &Path,
    output: &Path,
    model: Option<ModelArg>,
    use_t6: bool,
    out: &mut dyn Write,
) -> CmdResult {
    let p = load_protocol(input)?;
    let expected = model.map(|m| match m {
        ModelArg::Pp => Model::Pp,
        ModelArg::Mpp => Model::Mpp,
    });
    if let Some(m) = expected.filter(|&m| m != p.model()) {
        return Err(Exit::new(
            EXIT_FAILURE,
            format!("--model {m} given but {} declares model {}", input.display(), p.model()),
        ));
    }
    let pc = compile(&p, use_t6)?;
    write_file(output, &format::write_compiled(&pc))?;
    emit(
        out,
        &format!(
            "compiled {} transitions into {} ({} states, {} edge states)\n",
            p.transitions().len(),
            pc.transition_count(),
            pc.spec().states().len(),
            pc.spec().edge_states().len()
        ),
    )?;
    Ok(EXIT_OK)
}

fn cmd_run(
    path: &Path,
    input: &str,
    seed: u64,
    max_steps: usize,
    trace: Option<&Path>,
    out: &mut dyn Write,
) -> CmdResult {
    let p = load_protocol(path)?;
    let input: Vec<&str> = input.split(',').map(str::trim).collect();
    if p.is_mediated() {
        run_with::<MediatedConfiguration>(&p, &input, seed, max_steps, trace, out)
    } else {
        run_with::<Configuration>(&p, &input, seed, max_steps, trace, out)
    }
}

fn run_with<C: Population>(
    p: &ProtocolSpec,
    input: &[&str],
    seed: u64,
    max_steps: usize,
    trace: Option<&Path>,
    out: &mut dyn Write,
) -> CmdResult {
    let start = C::initial(p, input).map_err(|e| Exit::new(EXIT_FAILURE, e.to_string()))?;
    let t = run_random(p, &start, seed, max_steps);
    if let Some(path) = trace {
        write_file(path, &t.to_text(p))?;
    }
    let last = t.last();
    emit(
        out,
        &format!(
            "final: {}\noutput: {}\nsteps: {}\n",
            last.render_inline(p),
            last.global_output(p),
            t.steps.len()
        ),
    )?;
    Ok(EXIT_OK)
}

fn cmd_predicate(path: &Path, max_n: usize, node_limit: usize, out: &mut dyn Write) -> CmdResult {
    let p = load_protocol(path)?;
    if max_n < 2 {
        return Err(Exit::new(EXIT_FAILURE, "--max-n must be at least 2"));
    }
    let opts = ExploreOptions::with_node_limit(node_limit);
    let mut any_nws = false;
    for n in 2..=max_n {
        for inp in inputs_of_length(p.alphabet(), n) {
            let value = if p.is_mediated() {
                predicate_value::<MediatedConfiguration>(&p, &inp, &opts)
            } else {
                predicate_value::<Configuration>(&p, &inp, &opts)
            };
            let value = match value {
                Ok(v) => v,
                Err(ExecutionError::StateSpaceExceeded { limit }) => {
                    return Err(Exit::new(
                        EXIT_LIMIT,
                        format!("state space exceeded the node limit of {limit} on input {}", inp.join(",")),
                    ));
                }
                Err(e) => return Err(Exit::new(EXIT_FAILURE, e.to_string())),
            };
            any_nws |= value == PredicateValue::NotWellSpecified;
            emit(out, &format!("{} -> {value}\n", inp.join(",")))?;
        }
    }
    Ok(if any_nws { EXIT_NOT_WELL_SPECIFIED } else { EXIT_OK })
}

fn cmd_verify(
    source: &Path,
    target: &Path,
    checks: &[String],
    max_n: usize,
    node_limit: usize,
    out: &mut dyn Write,
) -> CmdResult {
    let checks: Vec<CheckId> = checks
        .iter()
        .map(|c| c.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|e: crate::verifier::UnknownCheck| Exit::new(EXIT_PARSE, e.to_string()))?;
    let p = load_protocol(source)?;
    let pc = format::parse_compiled(&p, &read(target)?).map_err(|e| match e {
        LoadError::Parse(e) => Exit::new(EXIT_PARSE, format!("{}: {e}", target.display())),
        LoadError::Compile(e) => Exit::new(EXIT_FAILURE, format!("{}: {e}", target.display())),
    })?;
    let scope = Scope::new(2, max_n);
    let opts = VerifyOptions::with_node_limit(node_limit);
    let reports = if p.is_mediated() {
        run_checks::<MediatedConfiguration>(&pc, &checks, &scope, &opts)
    } else {
        run_checks::<Configuration>(&pc, &checks, &scope, &opts)
    };
    let mut text = String::new();
    for (i, r) in reports.iter().enumerate() {
        if i > 0 {
            text.push('\n');
        }
        text.push_str(&r.to_text());
    }
    emit(out, &text)?;
    Ok(verify_exit_code(&reports))
}

/// 1 if any check failed, else 4 if any was inconclusive, else 0.
pub fn verify_exit_code(reports: &[VerificationReport]) -> i32 {
    if reports.iter().any(|r| r.verdict.is_fail()) {
        EXIT_FAILURE
    } else if reports.iter().any(|r| matches!(r.verdict, Verdict::Inconclusive(_))) {
        EXIT_LIMIT
    } else {
        EXIT_OK
    }
}

fn config_rows(arg: &str) -> Result<Vec<String>, Exit> {
    let path = Path::new(arg);
    if path.is_file() {
        let doc = Document::parse(&read(path)?)
            .map_err(|e| Exit::new(EXIT_PARSE, format!("{}: {e}", path.display())))?;
        return doc.config_rows().map_err(|e| Exit::new(EXIT_PARSE, format!("{}: {e}", path.display())));
    }
    Ok(arg.split(';').map(|r| r.split_whitespace().collect::<String>()).collect())
}

fn cmd_translate(protocol: &Path, config: &str, out: &mut dyn Write) -> CmdResult {
    let p = load_protocol(protocol)?;
    let pc = compile(&p, false)?;
    let rows = config_rows(config)?;
    let semantic = |e: &dyn std::fmt::Display| Exit::new(EXIT_FAILURE, e.to_string());
    let translated = if p.is_mediated() {
        let c = format::parse_mediated_config(&p, &rows).map_err(|e| semantic(&e))?;
        c.translate(&pc).map_err(|e| semantic(&e))?
    } else {
        let c = format::parse_plain_config(&p, &rows).map_err(|e| semantic(&e))?;
        c.translate(&pc).map_err(|e| semantic(&e))?
    };
    emit(out, &format::write_config(pc.spec(), &translated))?;
    Ok(EXIT_OK)
}
