//! Index-resolved form of terms and grammars shared by the evaluators.

use std::collections::HashMap;

use crate::ast::{Op, Pattern, Term};
use crate::domain::DomainConfig;
use crate::error::{Error, Result};
use crate::grammar::Rtg;

/// A pattern with variables resolved to tracked-variable slots and holes to
/// nonterminal indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Node {
    Hole(usize),
    Assign(usize, Box<Node>),
    Seq(Box<Node>, Box<Node>),
    If(Box<Node>, Box<Node>, Box<Node>),
    While(Box<Node>, Box<Node>),
    Var(usize),
    Zero,
    One,
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    True,
    False,
    Not(Box<Node>),
    And(Box<Node>, Box<Node>),
    Lt(Box<Node>, Box<Node>),
    Eq(Box<Node>, Box<Node>),
}

fn var_slot(cfg: &DomainConfig, x: &str) -> Result<usize> {
    cfg.var_index(x).ok_or_else(|| {
        Error::Config(format!("variable `{x}` occurs in the program but is not in tracked_vars {:?}", cfg.tracked_vars))
    })
}

fn compile_op<C>(op: &Op<C>, cfg: &DomainConfig, sub: &mut impl FnMut(&C) -> Result<Node>) -> Result<Node> {
    let mut b = |c: &C| -> Result<Box<Node>> { Ok(Box::new(sub(c)?)) };
    Ok(match op {
        Op::Assign(x, e) => Node::Assign(var_slot(cfg, x)?, b(e)?),
        Op::Seq(a, c) => Node::Seq(b(a)?, b(c)?),
        Op::If(g, s1, s2) => Node::If(b(g)?, b(s1)?, b(s2)?),
        Op::While(g, s) => Node::While(b(g)?, b(s)?),
        Op::Var(x) => Node::Var(var_slot(cfg, x)?),
        Op::Zero => Node::Zero,
        Op::One => Node::One,
        Op::Add(a, c) => Node::Add(b(a)?, b(c)?),
        Op::Sub(a, c) => Node::Sub(b(a)?, b(c)?),
        Op::True => Node::True,
        Op::False => Node::False,
        Op::Not(a) => Node::Not(b(a)?),
        Op::And(a, c) => Node::And(b(a)?, b(c)?),
        Op::Lt(a, c) => Node::Lt(b(a)?, b(c)?),
        Op::Eq(a, c) => Node::Eq(b(a)?, b(c)?),
    })
}

pub(crate) fn compile_term(t: &Term, cfg: &DomainConfig) -> Result<Node> {
    compile_op(t.op(), cfg, &mut |c: &Term| compile_term(c, cfg))
}

fn compile_pattern(p: &Pattern, cfg: &DomainConfig, index: &HashMap<String, usize>) -> Result<Node> {
    match p {
        Pattern::Hole(n) => index.get(n).map(|i| Node::Hole(*i)).ok_or_else(|| Error::UnknownNonterminal(n.clone())),
        Pattern::Op(op) => compile_op(op, cfg, &mut |c: &Pattern| compile_pattern(c, cfg, index)),
    }
}

/// A validated grammar with every production resolved against a domain.
#[derive(Debug, Clone)]
pub(crate) struct Compiled {
    pub prods: Vec<Vec<Node>>,
    pub index: HashMap<String, usize>,
}

impl Compiled {
    /// Compiles every production. Productions that can never complete are
    /// kept; they simply contribute nothing.
    pub fn new(g: &Rtg, cfg: &DomainConfig) -> Result<Compiled> {
        let violations = g.validate();
        if !violations.is_empty() {
            return Err(Error::InvalidGrammar(violations));
        }
        cfg.validate()?;
        let names: Vec<String> = g.nonterminals().map(|(n, _)| n.to_string()).collect();
        let index: HashMap<String, usize> = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let mut prods = vec![Vec::new(); names.len()];
        for p in &g.productions {
            prods[index[&p.lhs]].push(compile_pattern(&p.rhs, cfg, &index)?);
        }
        Ok(Compiled { prods, index })
    }

    pub fn nt(&self, n: &str) -> Result<usize> {
        self.index.get(n).copied().ok_or_else(|| Error::UnknownNonterminal(n.to_string()))
    }
}
