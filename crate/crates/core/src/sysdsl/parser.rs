//! Recursive-descent parser for systems and expressions.

use std::collections::HashMap;

use super::lexer::{tokenize, Tok, Token};
use super::{ControlSystem, DslError, TIME};
use crate::symexpr::{Expr, Func, Symbol, ZeroTest};

const KEYWORDS: [&str; 4] = ["system", "states", "inputs", "dot"];

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    symbols: &'a HashMap<String, Symbol>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: String) -> Result<T, DslError> {
        let t = self.peek();
        Err(DslError::Syntax { line: t.line, column: t.column, message })
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Number(n) => format!("number {n}"),
            Tok::Sym(c) => format!("'{c}'"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<(), DslError> {
        if self.peek().tok == Tok::Sym(c) {
            self.next();
            Ok(())
        } else {
            let found = Self::describe(&self.peek().tok);
            self.error(format!("expected '{c}', found {found}"))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), DslError> {
        match &self.peek().tok {
            Tok::Ident(s) if s == kw => {
                self.next();
                Ok(())
            }
            other => {
                let found = Self::describe(other);
                self.error(format!("expected '{kw}', found {found}"))
            }
        }
    }

    fn ident(&mut self) -> Result<(String, usize, usize), DslError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Ident(s) => {
                self.next();
                Ok((s, t.line, t.column))
            }
            other => self.error(format!("expected identifier, found {}", Self::describe(&other))),
        }
    }

    fn at_sym(&self, c: char) -> bool {
        self.peek().tok == Tok::Sym(c)
    }

    fn expr(&mut self) -> Result<Expr, DslError> {
        let mut acc = self.term()?;
        loop {
            if self.at_sym('+') {
                self.next();
                acc = acc + self.term()?;
            } else if self.at_sym('-') {
                self.next();
                acc = acc - self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, DslError> {
        let mut acc = self.unary()?;
        loop {
            if self.at_sym('*') {
                self.next();
                acc = acc * self.unary()?;
            } else if self.at_sym('/') {
                self.next();
                acc = acc / self.unary()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, DslError> {
        if self.at_sym('-') {
            self.next();
            return Ok(-self.unary()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, DslError> {
        let base = self.primary()?;
        if !self.at_sym('^') {
            return Ok(base);
        }
        self.next();
        let exponent = self.unary()?;
        match exponent.as_const() {
            Some(c) if *c.denom() == 1 => match c.numer().to_i64() {
                Some(n) => Ok(base.pow(n)),
                None => Err(DslError::Semantic(format!("exponent {c} out of range"))),
            },
            _ => Err(DslError::Semantic(format!("exponent must be an integer constant, found {exponent}"))),
        }
    }

    fn primary(&mut self) -> Result<Expr, DslError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Number(n) => {
                self.next();
                Ok(Expr::constant(n))
            }
            Tok::Sym('(') => {
                self.next();
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.next();
                if self.at_sym('(') {
                    let Some(f) = Func::from_name(&name) else {
                        return Err(DslError::Semantic(format!("unknown function {name}")));
                    };
                    self.next();
                    let arg = self.expr()?;
                    self.expect_sym(')')?;
                    return Ok(Expr::apply(f, arg));
                }
                match self.symbols.get(&name) {
                    Some(s) => Ok(Expr::var(s)),
                    None if Func::from_name(&name).is_some() => {
                        Err(DslError::Semantic(format!("function {name} used without argument")))
                    }
                    None => Err(DslError::Semantic(format!("undeclared symbol {name}"))),
                }
            }
            other => self.error(format!("expected expression, found {}", Self::describe(&other))),
        }
    }

    fn identlist(&mut self) -> Result<Vec<(String, usize, usize)>, DslError> {
        let mut out = vec![self.ident()?];
        while self.at_sym(',') {
            self.next();
            out.push(self.ident()?);
        }
        Ok(out)
    }

    fn expect_eof(&self) -> Result<(), DslError> {
        match &self.peek().tok {
            Tok::Eof => Ok(()),
            other => self.error(format!("unexpected {} after end", Self::describe(other))),
        }
    }
}

/// Parses an expression whose identifiers must belong to `chart`.
pub fn parse_expr(text: &str, chart: &[Symbol]) -> Result<Expr, DslError> {
    let symbols: HashMap<String, Symbol> = chart.iter().map(|s| (s.name().to_string(), s.clone())).collect();
    let mut p = Parser { toks: tokenize(text)?, pos: 0, symbols: &symbols };
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

/// Parses a `.fds` system with the default zero-test budget.
pub fn parse_system(text: &str) -> Result<ControlSystem, DslError> {
    parse_system_with(text, &ZeroTest::default())
}

/// Parses a `.fds` system; `zt` drives the input-independence rank check.
pub fn parse_system_with(text: &str, zt: &ZeroTest) -> Result<ControlSystem, DslError> {
    let empty = HashMap::new();
    let mut p = Parser { toks: tokenize(text)?, pos: 0, symbols: &empty };
    p.expect_keyword("system")?;
    let (name, _, _) = p.ident()?;
    p.expect_sym('{')?;
    p.expect_keyword("states")?;
    p.expect_sym(':')?;
    let states = p.identlist()?;
    p.expect_sym(';')?;
    p.expect_keyword("inputs")?;
    p.expect_sym(':')?;
    let inputs = p.identlist()?;
    p.expect_sym(';')?;

    let mut symbols = HashMap::new();
    let mut declare = |(n, line, col): &(String, usize, usize), state: bool| -> Result<Symbol, DslError> {
        if n == TIME {
            return Err(DslError::Semantic(format!("{line}:{col}: the symbol t is reserved for time")));
        }
        if KEYWORDS.contains(&n.as_str()) || Func::from_name(n).is_some() {
            return Err(DslError::Semantic(format!("{line}:{col}: '{n}' is reserved")));
        }
        let s = if state { Symbol::state(n) } else { Symbol::input(n) };
        if symbols.insert(n.clone(), s.clone()).is_some() {
            return Err(DslError::Semantic(format!("{line}:{col}: duplicate symbol {n}")));
        }
        Ok(s)
    };
    let state_syms = states.iter().map(|s| declare(s, true)).collect::<Result<Vec<_>, _>>()?;
    let input_syms = inputs.iter().map(|s| declare(s, false)).collect::<Result<Vec<_>, _>>()?;

    let mut dynamics: Vec<Option<Expr>> = vec![None; state_syms.len()];
    let mut count = 0;
    loop {
        if p.at_sym('}') && count > 0 {
            break;
        }
        p.symbols = &symbols;
        p.expect_keyword("dot")?;
        p.expect_sym('(')?;
        let (x, line, col) = p.ident()?;
        p.expect_sym(')')?;
        p.expect_sym('=')?;
        let rhs = p.expr()?;
        p.expect_sym(';')?;
        let Some(idx) = state_syms.iter().position(|s| s.name() == x) else {
            return Err(DslError::Semantic(format!("{line}:{col}: dot({x}) refers to an undeclared state")));
        };
        if dynamics[idx].is_some() {
            return Err(DslError::Semantic(format!("{line}:{col}: duplicate equation for {x}")));
        }
        dynamics[idx] = Some(rhs);
        count += 1;
    }
    p.expect_sym('}')?;
    p.expect_eof()?;
    let mut dyn_exprs = Vec::with_capacity(dynamics.len());
    for (s, d) in state_syms.iter().zip(dynamics) {
        match d {
            Some(e) => dyn_exprs.push(e),
            None => return Err(DslError::Semantic(format!("missing equation for state {s}"))),
        }
    }
    ControlSystem::new(&name, state_syms, input_syms, dyn_exprs, zt)
}
