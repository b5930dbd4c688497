//! PerfC front end: lexing, parsing, static analyses and the instrumented
//! source emitter.

mod analysis;
mod ast;
mod emit;
mod lexer;
mod parser;

use std::fmt;

pub use analysis::{
    analyze_trackedness, analyze_trackedness_with_seeds, annotate_loops, propagation_pass,
    LoopAnnotation, Marker, TrackednessMap,
};
pub use ast::*;
pub use emit::emit_instrumented;
pub use parser::parse;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub loc: Loc,
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    pub fn error(loc: Loc, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            loc,
            severity: Severity::Error,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}: {sev}: {}", self.loc, self.message)
    }
}

/// A parsed program together with its analyses, ready to run or emit.
#[derive(Debug, Clone)]
pub struct Analyzed {
    pub program: Program,
    pub trackedness: TrackednessMap,
    pub loops: Vec<LoopAnnotation>,
}

impl Analyzed {
    pub fn from_source(source: &str) -> Result<Analyzed, Vec<Diagnostic>> {
        let program = parse(source)?;
        let trackedness = analyze_trackedness(&program);
        let loops = annotate_loops(&program, &trackedness)?;
        Ok(Analyzed {
            program,
            trackedness,
            loops,
        })
    }

    pub fn emit(&self) -> String {
        emit_instrumented(&self.program, &self.trackedness, &self.loops)
    }
}
