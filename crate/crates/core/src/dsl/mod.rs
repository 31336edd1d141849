//! Text format for systems, currents, exact solutions and mapping vectors.
//!
//! ```text
//! system burgers {
//!     dependents: u;
//!     equations: u_t + u*u_x1 - u_x1x1;
//!     leading: u_t;
//! }
//! current mass on burgers kind volumetric {
//!     density: u;
//!     flux: [u^2/2 - u_x1, 0, 0];
//! }
//! ```

mod lexer;
mod lower;
mod parser;
mod print;

use std::fmt;
use std::ops::Range;

use serde::Serialize;

pub use lower::{lower_document, Entity, Resolver};
pub use parser::ItemAst;
pub use print::{print_current, print_entity, print_solution, print_system, print_vectorfield};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// A message tied to a location in the source text. Lines and columns are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub line: usize,
    pub column: usize,
    pub span: Range<usize>,
}

impl Diagnostic {
    pub fn error(text: &str, span: Range<usize>, msg: &str) -> Diagnostic {
        Diagnostic::at(Severity::Error, text, span, msg)
    }

    pub fn warning(text: &str, span: Range<usize>, msg: &str) -> Diagnostic {
        Diagnostic::at(Severity::Warning, text, span, msg)
    }

    fn at(severity: Severity, text: &str, span: Range<usize>, msg: &str) -> Diagnostic {
        let start = span.start.min(text.len());
        let before = &text[..start];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
        Diagnostic {
            severity,
            message: msg.to_string(),
            line,
            column,
            span,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {level}: {}", self.line, self.column, self.message)
    }
}

/// Parses text into syntax items without resolving any names.
pub fn parse_items(text: &str) -> Result<Vec<ItemAst>, Diagnostic> {
    let toks = lexer::lex(text)?;
    parser::Parser::new(text, toks).document()
}

/// Result of reading one document: the entities it defines, in order, and any warnings.
#[derive(Debug, Clone)]
pub struct Document {
    pub entities: Vec<Entity>,
    pub warnings: Vec<Diagnostic>,
}

/// Parses and lowers a document. Systems referenced by currents and solutions
/// are looked up first in the document itself, then through `resolver`.
pub fn parse_document(text: &str, resolver: &dyn Resolver) -> Result<Document, Vec<Diagnostic>> {
    let items = parse_items(text).map_err(|d| vec![d])?;
    lower_document(text, &items, resolver)
}
