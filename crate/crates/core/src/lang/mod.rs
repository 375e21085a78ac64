//! The neural imperative language: AST, parser and interpreter.

mod ast;
mod interp;
mod parser;

pub use ast::{BinOp, Expr, Guard, Stmt, UnOp};
pub use interp::{eval_expr, Env, GuardEvent, HostFn, Store, DEFAULT_STEP_BUDGET};
pub use parser::{parse, parse_expr};

/// The five-block parking skeleton, verbatim apart from whitespace.
pub const PARKING_SKELETON: &str = include_str!("parking_skeleton.np");
