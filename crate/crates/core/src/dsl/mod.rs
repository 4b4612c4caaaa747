//! The `.gif` protocol text format.
//!
//! ```text
//! protocol NAME {
//!   role NAME {
//!     inputs { a, b }            # optional, default empty
//!     outputs { c }              # optional, default empty
//!     states { s, t }
//!     init s / eps               # initial state and initial output
//!     accept final { t }         # or: accept muller { { s, t }, { t } }
//!     s -- a / c --> t           # FROM -- INPUT / OUTPUT --> TO
//!     t -- eps / eps --> s @decision Name
//!   }
//!   channel A -> B
//! }
//! ```
//!
//! `#` starts a comment that runs to the end of the line. Section keywords
//! are only keywords where a section may start, so they remain usable as
//! names; `eps` always denotes the empty character.

mod lexer;
mod parser;
mod serialize;

use std::collections::BTreeMap;
use std::fmt;

use crate::protocol::{Protocol, TransitionRef};
use crate::symbol::Symbol;

pub use serialize::serialize;

/// A 1-based source position.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn at(span: Span, message: impl Into<String>) -> Self {
        ParseError {
            line: span.line,
            column: span.column,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

/// A parsed protocol with its name and decision labels.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ProtocolDocument {
    pub name: Symbol,
    pub protocol: Protocol,
    pub labels: BTreeMap<TransitionRef, Symbol>,
}

pub fn parse(text: &str) -> Result<ProtocolDocument, ParseError> {
    parser::parse_str(text)
}

/// Parses raw bytes, reporting invalid UTF-8 at its position.
pub fn parse_bytes(bytes: &[u8]) -> Result<ProtocolDocument, ParseError> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse(text),
        Err(e) => {
            let valid = std::str::from_utf8(&bytes[..e.valid_up_to()]).expect("prefix is valid");
            let line = valid.matches('\n').count() + 1;
            let column = valid.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
            Err(ParseError::at(Span { line, column }, "invalid UTF-8"))
        }
    }
}
