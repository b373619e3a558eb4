//! Pipe-delimited inference pipelines: syntax, parsing and evaluation.

pub mod ast;
mod eval;
mod lexer;
mod parser;

pub use ast::*;
pub use eval::{evaluate, EvaluationContext, LogArtifact, LogKind, Value};
pub use parser::{parse_expression, parse_pipeline, referenced_predicates, PRODUCE_KINDS};
