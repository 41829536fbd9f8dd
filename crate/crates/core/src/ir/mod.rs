//! Textual three-address IR: data model, parser, printer and validator.

mod diag;
mod lexer;
mod parse;
mod print;
mod types;
mod validate;

pub use diag::{Diagnostic, DiagnosticKind, Locus};
pub use lexer::{lex, Tok, Token};
pub use parse::{parse_member_signature, parse_program, parse_statement, parse_syntax};
pub use print::{print_method, print_operand, print_program, print_statement, print_value};
pub use types::*;
pub use validate::{reference_diagnostics, validate_method_body, validate_program};
