//! Textual control-system definitions (`.fds` files) and expression rendering.
//!
//! ```text
//! system ::= "system" IDENT "{" "states:" identlist ";" "inputs:" identlist ";" eq+ "}"
//! eq     ::= "dot" "(" IDENT ")" "=" expr ";"
//! ```
//!
//! Expressions use the usual infix precedence `^` > unary `-` > `*` `/` > `+` `-`,
//! with `^` right associative and restricted to integer exponents. `#` starts a
//! comment running to the end of the line. The time symbol `t` is reserved.

mod lexer;
mod parser;
mod render;

use std::fmt;

use thiserror::Error;

use crate::linalg::{self, ExprMatrix};
use crate::symexpr::{Expr, Symbol, ZeroTest};

pub use parser::{parse_expr, parse_system, parse_system_with};
pub use render::render_expr;

/// Name of the reserved time symbol.
pub const TIME: &str = "t";

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DslError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("semantic error: {0}")]
    Semantic(String),
}

/// An explicit time-invariant control system `dot(x) = f(x, u)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlSystem {
    pub name: String,
    pub states: Vec<Symbol>,
    pub inputs: Vec<Symbol>,
    pub dynamics: Vec<Expr>,
    pub time: Symbol,
}

impl ControlSystem {
    /// Builds a system and checks its invariants, including generic independence
    /// of the inputs (rank of `df/du` equals the number of inputs).
    pub fn new(
        name: &str,
        states: Vec<Symbol>,
        inputs: Vec<Symbol>,
        dynamics: Vec<Expr>,
        zt: &ZeroTest,
    ) -> Result<Self, DslError> {
        let sem = |m: String| Err(DslError::Semantic(m));
        if states.is_empty() {
            return sem("at least one state is required".into());
        }
        if inputs.is_empty() {
            return sem("at least one input is required".into());
        }
        if dynamics.len() != states.len() {
            return sem(format!("{} equations for {} states", dynamics.len(), states.len()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for s in states.iter().chain(&inputs) {
            if s.name() == TIME {
                return sem("the symbol t is reserved for time".into());
            }
            if !seen.insert(s.clone()) {
                return sem(format!("duplicate symbol {s}"));
            }
        }
        for (x, f) in states.iter().zip(&dynamics) {
            for s in f.free_symbols() {
                if !seen.contains(&s) {
                    return sem(format!("dynamics of {x} mention undeclared symbol {s}"));
                }
            }
        }
        let jac = ExprMatrix::from_fn(states.len(), inputs.len(), |i, j| dynamics[i].diff(&inputs[j]));
        let rank = linalg::rank(&jac, zt).map_err(|e| DslError::Semantic(e.to_string()))?;
        if rank != inputs.len() {
            return sem(format!("inputs are not independent: rank of df/du is {rank}, expected {}", inputs.len()));
        }
        Ok(ControlSystem { name: name.to_string(), states, inputs, dynamics, time: Symbol::time(TIME) })
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_inputs(&self) -> usize {
        self.inputs.len()
    }

    /// States followed by inputs.
    pub fn coordinates(&self) -> Vec<Symbol> {
        self.states.iter().chain(&self.inputs).cloned().collect()
    }

    /// Renders the system back into `.fds` syntax.
    pub fn to_fds(&self) -> String {
        let names = |v: &[Symbol]| v.iter().map(|s| s.name().to_string()).collect::<Vec<_>>().join(", ");
        let mut out = format!(
            "system {} {{\n  states: {};\n  inputs: {};\n",
            self.name,
            names(&self.states),
            names(&self.inputs)
        );
        for (x, f) in self.states.iter().zip(&self.dynamics) {
            out.push_str(&format!("  dot({x}) = {};\n", render_expr(f)));
        }
        out.push_str("}\n");
        out
    }
}

impl fmt::Display for ControlSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_fds())
    }
}
