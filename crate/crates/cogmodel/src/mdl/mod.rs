//! The model description language: a small sandboxed language for candidate
//! cognitive models. Programs declare bounded parameters, persistent state,
//! and a per-trial update rule ending in one `choose` per decision point.
//! There are no loops, no recursion, and no IO; every run is bounded by a
//! per-trial step budget.

mod ast;
mod interp;
mod parser;
mod print;
pub mod transcriptions;

#[cfg(test)]
mod tests;

pub use ast::{
    AssignOp, BinOp, Builtin, CmpOp, Cond, Dim, Expr, Ident, ModelProgram, StateDecl, StateInit,
    Stmt, VarRef,
};
pub use interp::{check_compat, evaluate_nll, simulate, STEP_BUDGET};
pub use parser::parse;
pub use print::print_program;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MdlError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("duplicate parameter '{0}'")]
    DuplicateParameter(String),
    #[error("unknown identifier '{0}'")]
    UnknownIdentifier(String),
    #[error("parameter '{0}' is never used")]
    UnusedParameter(String),
    #[error("{0}")]
    Invalid(String),
}

impl ModelProgram {
    pub fn print(&self) -> String {
        print_program(self)
    }
}
