use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use perfscope::frontend::{Analyzed, Diagnostic};
use perfscope::interp::{run, ExecError, Mode, RunOptions};
use perfscope::report::{to_dot, to_text};
use perfscope::term::is_identifier;

/// Symbolic complexity profiler for PerfC programs.
#[derive(Debug, Parser)]
#[command(name = "perfscope", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Profile once at the small sizes and report symbolic counters.
    Run(RunArgs),
    /// Execute every loop in full at the small sizes and print exact counters.
    Exact(Common),
    /// Print the instrumented form of the program.
    Emit(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// PerfC source file.
    file: PathBuf,
    /// Input size binding `name=small:large` (or `name=value`); repeatable.
    #[arg(long = "input", value_name = "NAME=SMALL:LARGE", value_parser = parse_input)]
    inputs: Vec<InputArg>,
    /// Suppress output on stdout.
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Write the call tree in Graphviz format to this file.
    #[arg(long, value_name = "PATH")]
    dot: Option<PathBuf>,
    /// Write the text report to this file instead of stdout.
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
    /// Iterations executed per loop before extrapolating.
    #[arg(long = "max-iters", default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    max_iters: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct InputArg {
    name: String,
    small: i64,
    large: i64,
}

fn parse_input(s: &str) -> Result<InputArg, String> {
    let (name, sizes) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=SMALL:LARGE, got `{s}`"))?;
    if !is_identifier(name) {
        return Err(format!("`{name}` is not a valid parameter name"));
    }
    let int = |t: &str| {
        t.trim()
            .parse::<i64>()
            .map_err(|_| format!("`{t}` is not an integer"))
    };
    let (small, large) = match sizes.split_once(':') {
        Some((a, b)) => (int(a)?, int(b)?),
        None => {
            let v = int(sizes)?;
            (v, v)
        }
    };
    if small < 0 {
        return Err(format!("size of `{name}` must be non-negative"));
    }
    if large < small {
        return Err(format!("large size of `{name}` ({large}) is below its small size ({small})"));
    }
    Ok(InputArg {
        name: name.to_string(),
        small,
        large,
    })
}

/// A failure with its exit status.
enum Failure {
    Usage(String),
    Program(Vec<String>),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "perfscope: {m}"),
            Failure::Program(lines) => write!(f, "{}", lines.join("\n")),
        }
    }
}

fn load(file: &Path) -> Result<Analyzed, Failure> {
    let source = std::fs::read_to_string(file)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", file.display())))?;
    Analyzed::from_source(&source).map_err(|diags| {
        Failure::Program(
            diags
                .iter()
                .map(|d: &Diagnostic| format!("{}:{d}", file.display()))
                .collect(),
        )
    })
}

fn exec_failure(file: &Path, e: ExecError) -> Failure {
    if e.is_configuration() {
        return Failure::Usage(e.to_string());
    }
    match e.loc {
        Some(loc) => Failure::Program(vec![format!("{}:{loc}: error: {}", file.display(), e.kind)]),
        None => Failure::Program(vec![format!("{}: error: {}", file.display(), e.kind)]),
    }
}

fn options(mode: Mode, inputs: &[InputArg]) -> RunOptions {
    let triples: Vec<(&str, i64, i64)> = inputs.iter().map(|i| (i.name.as_str(), i.small, i.large)).collect();
    RunOptions::new(mode, &triples)
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run(args) => {
            let c = &args.common;
            let analyzed = load(&c.file)?;
            let mut opts = options(Mode::Profile, &c.inputs);
            opts.max_iterations = args.max_iters;
            let result = run(&analyzed, &opts).map_err(|e| exec_failure(&c.file, e))?;
            let text = to_text(&result);
            if let Some(path) = &args.dot {
                write_file(path, &to_dot(&result))?;
            }
            match &args.report {
                Some(path) => write_file(path, &text)?,
                None if !c.quiet => print!("{text}"),
                None => {}
            }
        }
        Command::Exact(c) => {
            let analyzed = load(&c.file)?;
            let result = run(&analyzed, &options(Mode::Exact, &c.inputs)).map_err(|e| exec_failure(&c.file, e))?;
            if !c.quiet {
                print!("{}", to_text(&result));
            }
        }
        Command::Emit(c) => {
            let analyzed = load(&c.file)?;
            if !c.quiet {
                print!("{}", analyzed.emit());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            match f {
                Failure::Usage(_) => ExitCode::from(2),
                Failure::Program(_) => ExitCode::from(1),
            }
        }
    }
}
