//! Protobuf text-format network definitions: a lossless AST (comments,
//! whitespace, and value lexemes are all preserved, so an untouched document
//! re-serializes byte-identically), plus the category-count rewrites that
//! adapt a network to K foreground classes.

mod ast;
mod lexer;
mod parser;
mod rewrite;

pub use ast::{escape_string, Document, Entry, Payload, ScalarValue};
pub use parser::{parse_prototxt, parse_prototxt_bytes};
pub use rewrite::{
    apply_rewrites, plan_rewrites, verify_consistency, PlannedSite, RewriteCounts, RewritePlan,
    RewriteRule, VerifyReport,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PrototxtError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("input is not valid UTF-8 (first invalid byte at offset {offset})")]
    InvalidUtf8 { offset: usize },
    #[error("no rewrite targets found")]
    NoRewriteTargets,
    #[error("inconsistent category-dependent parameters: {message}")]
    Inconsistent { message: String },
}

/// Render a document back to text. For a document that came from
/// [`parse_prototxt`] and was not modified, the output equals the input
/// byte for byte.
pub fn serialize_prototxt(doc: &Document) -> String {
    doc.to_text()
}
