//! Toolkit for behavioral interface specifications: parse `.mli.spec`
//! files, typecheck contract terms, classify them into the executable
//! subset, wrap candidate implementations with runtime contract checks,
//! and hunt for violations with state-machine random testing.

pub mod analysis;
pub mod ast;
pub mod cli;
pub mod corpus;
pub mod eval;
pub mod graph;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod rac;
pub mod report;
pub mod span;
pub mod stm;
pub mod typecheck;
pub mod value;

pub use ast::SpecInterface;
pub use parser::{parse_interface, ParseError};
pub use printer::pretty_print;
pub use typecheck::{typecheck, TypedSpec};
