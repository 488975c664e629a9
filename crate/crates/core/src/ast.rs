//! Abstract syntax of G_imp terms and grammar patterns, with a parser and a
//! canonical printer.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub enum Sort {
    Stmt,
    Exp,
    BExp,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Stmt => "Stmt",
            Sort::Exp => "Exp",
            Sort::BExp => "BExp",
        })
    }
}

impl std::str::FromStr for Sort {
    type Err = Error;

    fn from_str(s: &str) -> Result<Sort> {
        match s {
            "Stmt" => Ok(Sort::Stmt),
            "Exp" => Ok(Sort::Exp),
            "BExp" => Ok(Sort::BExp),
            other => Err(Error::input(format!("unknown sort `{other}`"))),
        }
    }
}

/// One constructor of G_imp with children of type `C`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Op<C> {
    Assign(String, C),
    Seq(C, C),
    If(C, C, C),
    While(C, C),
    Var(String),
    Zero,
    One,
    Add(C, C),
    Sub(C, C),
    True,
    False,
    Not(C),
    And(C, C),
    Lt(C, C),
    Eq(C, C),
}

impl<C> Op<C> {
    pub fn sort(&self) -> Sort {
        match self {
            Op::Assign(..) | Op::Seq(..) | Op::If(..) | Op::While(..) => Sort::Stmt,
            Op::Var(_) | Op::Zero | Op::One | Op::Add(..) | Op::Sub(..) => Sort::Exp,
            Op::True | Op::False | Op::Not(_) | Op::And(..) | Op::Lt(..) | Op::Eq(..) => Sort::BExp,
        }
    }

    /// Children paired with the sort each position requires.
    pub fn children(&self) -> Vec<(&C, Sort)> {
        use Sort::*;
        match self {
            Op::Assign(_, e) => vec![(e, Exp)],
            Op::Seq(a, b) => vec![(a, Stmt), (b, Stmt)],
            Op::If(b, s1, s2) => vec![(b, BExp), (s1, Stmt), (s2, Stmt)],
            Op::While(b, s) => vec![(b, BExp), (s, Stmt)],
            Op::Var(_) | Op::Zero | Op::One | Op::True | Op::False => vec![],
            Op::Add(a, b) | Op::Sub(a, b) | Op::Lt(a, b) | Op::Eq(a, b) => vec![(a, Exp), (b, Exp)],
            Op::Not(b) => vec![(b, BExp)],
            Op::And(a, b) => vec![(a, BExp), (b, BExp)],
        }
    }

    /// The variable this node names directly (`x` in `x := e` or in `x`).
    pub fn own_var(&self) -> Option<&str> {
        match self {
            Op::Assign(x, _) | Op::Var(x) => Some(x),
            _ => None,
        }
    }

    pub fn map<D>(self, mut f: impl FnMut(C) -> D) -> Op<D> {
        match self {
            Op::Assign(x, e) => Op::Assign(x, f(e)),
            Op::Seq(a, b) => Op::Seq(f(a), f(b)),
            Op::If(b, s1, s2) => Op::If(f(b), f(s1), f(s2)),
            Op::While(b, s) => Op::While(f(b), f(s)),
            Op::Var(x) => Op::Var(x),
            Op::Zero => Op::Zero,
            Op::One => Op::One,
            Op::Add(a, b) => Op::Add(f(a), f(b)),
            Op::Sub(a, b) => Op::Sub(f(a), f(b)),
            Op::True => Op::True,
            Op::False => Op::False,
            Op::Not(b) => Op::Not(f(b)),
            Op::And(a, b) => Op::And(f(a), f(b)),
            Op::Lt(a, b) => Op::Lt(f(a), f(b)),
            Op::Eq(a, b) => Op::Eq(f(a), f(b)),
        }
    }

    pub fn try_map<D, E>(self, mut f: impl FnMut(C) -> Result<D, E>) -> Result<Op<D>, E> {
        Ok(match self {
            Op::Assign(x, e) => Op::Assign(x, f(e)?),
            Op::Seq(a, b) => Op::Seq(f(a)?, f(b)?),
            Op::If(b, s1, s2) => Op::If(f(b)?, f(s1)?, f(s2)?),
            Op::While(b, s) => Op::While(f(b)?, f(s)?),
            Op::Var(x) => Op::Var(x),
            Op::Zero => Op::Zero,
            Op::One => Op::One,
            Op::Add(a, b) => Op::Add(f(a)?, f(b)?),
            Op::Sub(a, b) => Op::Sub(f(a)?, f(b)?),
            Op::True => Op::True,
            Op::False => Op::False,
            Op::Not(b) => Op::Not(f(b)?),
            Op::And(a, b) => Op::And(f(a)?, f(b)?),
            Op::Lt(a, b) => Op::Lt(f(a)?, f(b)?),
            Op::Eq(a, b) => Op::Eq(f(a)?, f(b)?),
        })
    }

    fn tag(&self) -> &'static str {
        match self {
            Op::Assign(..) => "assign",
            Op::Seq(..) => "seq",
            Op::If(..) => "if",
            Op::While(..) => "while",
            Op::Var(_) => "var",
            Op::Zero => "0",
            Op::One => "1",
            Op::Add(..) => "+",
            Op::Sub(..) => "-",
            Op::True => "t",
            Op::False => "f",
            Op::Not(_) => "not",
            Op::And(..) => "and",
            Op::Lt(..) => "<",
            Op::Eq(..) => "==",
        }
    }
}

/// A single G_imp program (statement, integer expression or Boolean
/// expression).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Term(pub Box<Op<Term>>);

/// A production right-hand side: a term with nonterminal holes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pattern {
    Hole(String),
    Op(Box<Op<Pattern>>),
}

impl Term {
    pub fn new(op: Op<Term>) -> Term {
        Term(Box::new(op))
    }

    pub fn op(&self) -> &Op<Term> {
        &self.0
    }

    pub fn sort(&self) -> Sort {
        self.0.sort()
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        if let Some(x) = self.0.own_var() {
            out.insert(x.to_string());
        }
        for (c, _) in self.0.children() {
            c.collect_vars(out);
        }
    }

    pub fn contains_while(&self) -> bool {
        matches!(*self.0, Op::While(..)) || self.0.children().iter().any(|(c, _)| c.contains_while())
    }

    /// Number of constructor nodes.
    pub fn size(&self) -> usize {
        1 + self.0.children().iter().map(|(c, _)| c.size()).sum::<usize>()
    }

    /// Canonical s-expression, e.g. `(assign x (+ (var x) 1))`.
    pub fn to_sexpr(&self) -> String {
        let op = self.op();
        let kids: Vec<String> = op.children().iter().map(|(c, _)| c.to_sexpr()).collect();
        match op {
            Op::Zero | Op::One | Op::True | Op::False => op.tag().to_string(),
            Op::Var(x) => format!("(var {x})"),
            Op::Assign(x, _) => format!("(assign {x} {})", kids[0]),
            _ => format!("({} {})", op.tag(), kids.join(" ")),
        }
    }

    pub fn as_pattern(&self) -> Pattern {
        Pattern::Op(Box::new((*self.0).clone().map(|c| c.as_pattern())))
    }

    // Constructors used throughout tests and builders.
    pub fn var(x: &str) -> Term {
        Term::new(Op::Var(x.to_string()))
    }
    pub fn zero() -> Term {
        Term::new(Op::Zero)
    }
    pub fn one() -> Term {
        Term::new(Op::One)
    }
    pub fn tt() -> Term {
        Term::new(Op::True)
    }
    pub fn ff() -> Term {
        Term::new(Op::False)
    }
    pub fn assign(x: &str, e: Term) -> Term {
        Term::new(Op::Assign(x.to_string(), e))
    }
    pub fn seq(a: Term, b: Term) -> Term {
        Term::new(Op::Seq(a, b))
    }
    pub fn ite(b: Term, s1: Term, s2: Term) -> Term {
        Term::new(Op::If(b, s1, s2))
    }
    pub fn while_(b: Term, s: Term) -> Term {
        Term::new(Op::While(b, s))
    }
    pub fn add(a: Term, b: Term) -> Term {
        Term::new(Op::Add(a, b))
    }
    pub fn sub(a: Term, b: Term) -> Term {
        Term::new(Op::Sub(a, b))
    }
    pub fn not(b: Term) -> Term {
        Term::new(Op::Not(b))
    }
    pub fn and(a: Term, b: Term) -> Term {
        Term::new(Op::And(a, b))
    }
    pub fn lt(a: Term, b: Term) -> Term {
        Term::new(Op::Lt(a, b))
    }
    pub fn eq(a: Term, b: Term) -> Term {
        Term::new(Op::Eq(a, b))
    }

    /// `n` as a balanced sum of ones; negatives count down from `0` by ones.
    pub fn numeral(n: i64) -> Term {
        fn ones(k: u64) -> Term {
            match k {
                0 => Term::zero(),
                1 => Term::one(),
                _ => Term::add(ones(k / 2), ones(k - k / 2)),
            }
        }
        if n >= 0 {
            ones(n as u64)
        } else {
            // Counting down keeps every intermediate value between n and 0.
            (0..n.unsigned_abs()).fold(Term::zero(), |acc, _| Term::sub(acc, Term::one()))
        }
    }

    /// Sequential composition of a non-empty list, nested to the right.
    pub fn seq_all(mut stmts: Vec<Term>) -> Term {
        let last = stmts.pop().expect("seq_all of an empty list");
        stmts.into_iter().rev().fold(last, |acc, s| Term::seq(s, acc))
    }
}

impl Pattern {
    pub fn hole(n: &str) -> Pattern {
        Pattern::Hole(n.to_string())
    }

    pub fn holes(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_holes(&mut out);
        out
    }

    fn collect_holes<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Pattern::Hole(n) => out.push(n),
            Pattern::Op(op) => {
                for (c, _) in op.children() {
                    c.collect_holes(out);
                }
            }
        }
    }

    /// Variables written directly in the pattern, not through holes.
    pub fn own_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        if let Pattern::Op(op) = self {
            if let Some(x) = op.own_var() {
                out.insert(x.to_string());
            }
            for (c, _) in op.children() {
                c.collect_vars(out);
            }
        }
    }

    pub fn contains_while(&self) -> bool {
        match self {
            Pattern::Hole(_) => false,
            Pattern::Op(op) => {
                matches!(**op, Op::While(..)) || op.children().iter().any(|(c, _)| c.contains_while())
            }
        }
    }

    /// The sort of the pattern given the sorts of its holes.
    pub fn sort(&self, sorts: &BTreeMap<String, Sort>) -> Option<Sort> {
        match self {
            Pattern::Hole(n) => sorts.get(n).copied(),
            Pattern::Op(op) => Some(op.sort()),
        }
    }

    /// Fills every hole, in left-to-right order, with the given terms.
    pub fn instantiate(&self, fill: &mut impl Iterator<Item = Term>) -> Term {
        match self {
            Pattern::Hole(_) => fill.next().expect("too few terms for pattern holes"),
            Pattern::Op(op) => Term::new((**op).clone().map(|c| c.instantiate(fill))),
        }
    }

    /// Converts a hole-free pattern to a term.
    pub fn to_term(&self) -> Option<Term> {
        match self {
            Pattern::Hole(_) => None,
            Pattern::Op(op) => {
                let op = (**op).clone().try_map(|c| c.to_term().ok_or(())).ok()?;
                Some(Term::new(op))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Hole(String),
    Num(String),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const KEYWORDS: [&str; 11] = ["if", "then", "else", "while", "do", "t", "f", "not", "and", "nonterm", "start"];

// Longest first so that `::=` wins over `:=` and `==` over `=`.
const SYMBOLS: [&str; 20] = [
    "::=", ":=", "==", "!=", "<=", ">=", "&&", "¬", "∧", "<", ">", "=", "+", "-", "!", "(", ")", "{", "}", ";",
];
const EXTRA_SYMBOLS: [&str; 3] = ["|", ":", ","];

pub(crate) fn lex(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let mut rest = src;
    let err = |line, col, msg: String| Error::Syntax { line, col, msg };
    while let Some(c) = rest.chars().next() {
        let (tline, tcol) = (line, col);
        let advance = |n: usize, rest: &mut &str, line: &mut usize, col: &mut usize| {
            for ch in rest[..n].chars() {
                if ch == '\n' {
                    *line += 1;
                    *col = 1;
                } else {
                    *col += 1;
                }
            }
            *rest = &rest[n..];
        };
        if c.is_whitespace() {
            advance(c.len_utf8(), &mut rest, &mut line, &mut col);
            continue;
        }
        if rest.starts_with("//") {
            let n = rest.find('\n').unwrap_or(rest.len());
            advance(n, &mut rest, &mut line, &mut col);
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let n = rest
                .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                .unwrap_or(rest.len());
            out.push(Token { tok: Tok::Ident(rest[..n].to_string()), line: tline, col: tcol });
            advance(n, &mut rest, &mut line, &mut col);
            continue;
        }
        if c.is_ascii_digit() {
            let n = rest.find(|ch: char| !ch.is_ascii_digit()).unwrap_or(rest.len());
            out.push(Token { tok: Tok::Num(rest[..n].to_string()), line: tline, col: tcol });
            advance(n, &mut rest, &mut line, &mut col);
            continue;
        }
        if c == '<' {
            // `<Name>` is a nonterminal reference; names start with an uppercase letter.
            let body = &rest[1..];
            if body.starts_with(|ch: char| ch.is_ascii_uppercase()) {
                let n = body
                    .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                    .unwrap_or(body.len());
                if body[n..].starts_with('>') {
                    out.push(Token { tok: Tok::Hole(body[..n].to_string()), line: tline, col: tcol });
                    advance(n + 2, &mut rest, &mut line, &mut col);
                    continue;
                }
            }
        }
        let sym = SYMBOLS
            .iter()
            .chain(EXTRA_SYMBOLS.iter())
            .find(|s| rest.starts_with(**s))
            .copied();
        match sym {
            Some(s) => {
                out.push(Token { tok: Tok::Sym(s), line: tline, col: tcol });
                advance(s.len(), &mut rest, &mut line, &mut col);
            }
            None => return Err(err(tline, tcol, format!("unexpected character `{c}`"))),
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

pub fn is_valid_var(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !KEYWORDS.contains(&name)
        && !crate::domain::RESERVED.contains(&name)
}

pub fn is_valid_nonterminal(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_uppercase()) && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

// ---------------------------------------------------------------------------
// Parser

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    pub(crate) fn new(src: &str) -> Result<Parser> {
        Ok(Parser { toks: lex(src)?, pos: 0 })
    }

    pub(crate) fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    pub(crate) fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn error(&self, msg: impl Into<String>) -> Error {
        let t = self.peek();
        Error::Syntax { line: t.line, col: t.col, msg: msg.into() }
    }

    pub(crate) fn at_sym(&self, s: &str) -> bool {
        matches!(&self.peek().tok, Tok::Sym(x) if *x == s)
    }

    pub(crate) fn at_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(x) if x == kw)
    }

    pub(crate) fn eat_sym(&mut self, s: &str) -> bool {
        if self.at_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect_sym(&mut self, s: &str) -> Result<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{s}`, found {}", describe(&self.peek().tok))))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{kw}`, found {}", describe(&self.peek().tok))))
        }
    }

    pub(crate) fn at_eof(&self) -> bool {
        self.peek().tok == Tok::Eof
    }

    pub(crate) fn ident(&mut self) -> Result<String> {
        match &self.peek().tok {
            Tok::Ident(x) => {
                let x = x.clone();
                self.bump();
                Ok(x)
            }
            other => Err(self.error(format!("expected a name, found {}", describe(other)))),
        }
    }

    fn mk(&self, _at: &Token, op: Op<Pattern>) -> Pattern {
        Pattern::Op(Box::new(op))
    }

    fn starts_stmt(&self) -> bool {
        match self.peek_at(0) {
            Tok::Ident(x) if x == "if" || x == "while" => true,
            Tok::Ident(_) => matches!(self.peek_at(1), Tok::Sym(":=")),
            Tok::Sym("{") | Tok::Hole(_) => true,
            _ => false,
        }
    }

    /// Any term: statement sequence if the input starts like a statement,
    /// expression otherwise.
    fn any(&mut self) -> Result<Pattern> {
        let stmt_like = match self.peek_at(0) {
            Tok::Hole(_) => matches!(self.peek_at(1), Tok::Sym(";")),
            _ => self.starts_stmt(),
        };
        if stmt_like {
            self.stmts()
        } else {
            self.e0()
        }
    }

    fn stmts(&mut self) -> Result<Pattern> {
        let first = self.stmt()?;
        let save = self.pos;
        if self.eat_sym(";") {
            if self.starts_stmt() {
                let t = self.toks[save].clone();
                let rest = self.stmts()?;
                return Ok(self.mk(&t, Op::Seq(first, rest)));
            }
            // Terminator of an enclosing construct, not a separator.
            self.pos = save;
        }
        Ok(first)
    }

    fn stmt(&mut self) -> Result<Pattern> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Hole(n) => {
                self.bump();
                Ok(Pattern::Hole(n.clone()))
            }
            Tok::Sym("{") => {
                self.bump();
                let s = self.stmts()?;
                self.expect_sym("}")?;
                Ok(s)
            }
            Tok::Ident(k) if k == "if" => {
                self.bump();
                let b = self.e0()?;
                self.expect_kw("then")?;
                let s1 = self.block()?;
                self.expect_kw("else")?;
                let s2 = self.block()?;
                Ok(self.mk(&t, Op::If(b, s1, s2)))
            }
            Tok::Ident(k) if k == "while" => {
                self.bump();
                let b = self.e0()?;
                self.expect_kw("do")?;
                let s = self.block()?;
                Ok(self.mk(&t, Op::While(b, s)))
            }
            Tok::Ident(x) => {
                let x = x.clone();
                if !is_valid_var(&x) {
                    return Err(self.error(format!("`{x}` cannot be assigned")));
                }
                self.bump();
                self.expect_sym(":=")?;
                let e = self.e0()?;
                Ok(self.mk(&t, Op::Assign(x, e)))
            }
            other => Err(self.error(format!("expected a statement, found {}", describe(other)))),
        }
    }

    fn block(&mut self) -> Result<Pattern> {
        if self.eat_sym("{") {
            let s = self.stmts()?;
            self.expect_sym("}")?;
            Ok(s)
        } else {
            self.stmt()
        }
    }

    fn e0(&mut self) -> Result<Pattern> {
        let mut lhs = self.e1()?;
        loop {
            let t = self.peek().clone();
            if self.eat_sym("&&") || self.eat_sym("∧") || self.eat_kw("and") {
                let rhs = self.e1()?;
                lhs = self.mk(&t, Op::And(lhs, rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn e1(&mut self) -> Result<Pattern> {
        let t = self.peek().clone();
        if self.eat_sym("!") || self.eat_sym("¬") || self.eat_kw("not") {
            let b = self.e1()?;
            return Ok(self.mk(&t, Op::Not(b)));
        }
        self.e2()
    }

    fn e2(&mut self) -> Result<Pattern> {
        let lhs = self.e3()?;
        let t = self.peek().clone();
        let op = match &t.tok {
            Tok::Sym(s @ ("<" | ">" | "<=" | ">=" | "==" | "=" | "!=")) => *s,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.e3()?;
        // `>`, `<=`, `>=` and `!=` are sugar over `<`, `==` and `!`.
        Ok(match op {
            "<" => self.mk(&t, Op::Lt(lhs, rhs)),
            ">" => self.mk(&t, Op::Lt(rhs, lhs)),
            "<=" => {
                let lt = self.mk(&t, Op::Lt(rhs, lhs));
                self.mk(&t, Op::Not(lt))
            }
            ">=" => {
                let lt = self.mk(&t, Op::Lt(lhs, rhs));
                self.mk(&t, Op::Not(lt))
            }
            "!=" => {
                let eq = self.mk(&t, Op::Eq(lhs, rhs));
                self.mk(&t, Op::Not(eq))
            }
            _ => self.mk(&t, Op::Eq(lhs, rhs)),
        })
    }

    fn e3(&mut self) -> Result<Pattern> {
        let mut lhs = self.e4()?;
        loop {
            let t = self.peek().clone();
            if self.eat_sym("+") {
                let rhs = self.e4()?;
                lhs = self.mk(&t, Op::Add(lhs, rhs));
            } else if self.eat_sym("-") {
                let rhs = self.e4()?;
                lhs = self.mk(&t, Op::Sub(lhs, rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn e4(&mut self) -> Result<Pattern> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Num(n) => {
                let op = match n.as_str() {
                    "0" => Op::Zero,
                    "1" => Op::One,
                    _ => return Err(self.error(format!("numeral `{n}`: only the literals 0 and 1 exist; write sums of 1"))),
                };
                self.bump();
                Ok(self.mk(&t, op))
            }
            Tok::Hole(n) => {
                self.bump();
                Ok(Pattern::Hole(n.clone()))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.e0()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(x) => {
                let op = match x.as_str() {
                    "t" => Op::True,
                    "f" => Op::False,
                    _ if is_valid_var(x) => Op::Var(x.clone()),
                    _ => return Err(self.error(format!("`{x}` is not a valid variable"))),
                };
                self.bump();
                Ok(self.mk(&t, op))
            }
            other => Err(self.error(format!("expected an expression, found {}", describe(other)))),
        }
    }

    /// Parses one alternative of a production or a standalone term, without
    /// checking sorts.
    pub(crate) fn pattern(&mut self) -> Result<Pattern> {
        self.any()
    }
}

pub(crate) fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(x) => format!("`{x}`"),
        Tok::Hole(x) => format!("`<{x}>`"),
        Tok::Num(n) => format!("`{n}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of input".into(),
    }
}

/// Checks that `p` is sort-correct and, if `want` is given, has that sort.
pub fn check_pattern(p: &Pattern, want: Option<Sort>, sorts: &BTreeMap<String, Sort>) -> Result<Sort> {
    let found = match p {
        Pattern::Hole(n) => *sorts.get(n).ok_or_else(|| Error::UnknownNonterminal(n.clone()))?,
        Pattern::Op(op) => op.sort(),
    };
    if let Some(w) = want {
        if w != found {
            return Err(Error::Sort { term: p.to_string(), expected: w.to_string(), found: found.to_string() });
        }
    }
    if let Pattern::Op(op) = p {
        for (c, s) in op.children() {
            check_pattern(c, Some(s), sorts)?;
        }
    }
    Ok(found)
}

/// Parses a single closed term.
pub fn parse_term(text: &str) -> Result<Term> {
    let mut p = Parser::new(text)?;
    let pat = p.pattern()?;
    if !p.at_eof() {
        return Err(p.error(format!("unexpected {} after term", describe(&p.peek().tok))));
    }
    if let Some(h) = pat.holes().first() {
        return Err(Error::Syntax { line: 1, col: 1, msg: format!("nonterminal reference `<{h}>` in a closed term") });
    }
    check_pattern(&pat, None, &BTreeMap::new())?;
    Ok(pat.to_term().expect("a closed parse has no holes"))
}

/// Parses a term of a required sort.
pub fn parse_term_of(text: &str, sort: Sort) -> Result<Term> {
    let t = parse_term(text)?;
    if t.sort() != sort {
        return Err(Error::Sort { term: t.to_string(), expected: sort.to_string(), found: t.sort().to_string() });
    }
    Ok(t)
}

/// Parses a production right-hand side whose holes have the given sorts.
pub fn parse_pattern(text: &str, sorts: &BTreeMap<String, Sort>) -> Result<Pattern> {
    let mut p = Parser::new(text)?;
    let pat = p.pattern()?;
    if !p.at_eof() {
        return Err(p.error(format!("unexpected {} after pattern", describe(&p.peek().tok))));
    }
    check_pattern(&pat, None, sorts)?;
    Ok(pat)
}

// ---------------------------------------------------------------------------
// Printer

/// Printing context; higher binds tighter.
#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum Level {
    Stmt,
    SeqLeft,
    And,
    Not,
    Cmp,
    Sum,
    Atom,
}

trait Printable {
    fn write(&self, f: &mut fmt::Formatter<'_>, ctx: Level) -> fmt::Result;
}

fn write_op<C: Printable>(op: &Op<C>, f: &mut fmt::Formatter<'_>, ctx: Level) -> fmt::Result {
    let own = match op {
        Op::Seq(..) => Level::Stmt,
        Op::Assign(..) | Op::If(..) | Op::While(..) => Level::SeqLeft,
        Op::And(..) => Level::And,
        Op::Not(_) => Level::Not,
        Op::Lt(..) | Op::Eq(..) => Level::Cmp,
        Op::Add(..) | Op::Sub(..) => Level::Sum,
        _ => Level::Atom,
    };
    let wrap = own < ctx;
    let (open, close) = if own <= Level::SeqLeft { ("{ ", " }") } else { ("(", ")") };
    if wrap {
        f.write_str(open)?;
    }
    match op {
        Op::Assign(x, e) => {
            write!(f, "{x} := ")?;
            e.write(f, Level::And)?;
        }
        Op::Seq(a, b) => {
            a.write(f, Level::SeqLeft)?;
            f.write_str("; ")?;
            b.write(f, Level::Stmt)?;
        }
        Op::If(b, s1, s2) => {
            f.write_str("if ")?;
            b.write(f, Level::And)?;
            f.write_str(" then { ")?;
            s1.write(f, Level::Stmt)?;
            f.write_str(" } else { ")?;
            s2.write(f, Level::Stmt)?;
            f.write_str(" }")?;
        }
        Op::While(b, s) => {
            f.write_str("while ")?;
            b.write(f, Level::And)?;
            f.write_str(" do { ")?;
            s.write(f, Level::Stmt)?;
            f.write_str(" }")?;
        }
        Op::Var(x) => f.write_str(x)?,
        Op::Zero => f.write_str("0")?,
        Op::One => f.write_str("1")?,
        Op::True => f.write_str("t")?,
        Op::False => f.write_str("f")?,
        Op::Add(a, b) | Op::Sub(a, b) => {
            a.write(f, Level::Sum)?;
            f.write_str(if matches!(op, Op::Add(..)) { " + " } else { " - " })?;
            b.write(f, Level::Atom)?;
        }
        Op::Lt(a, b) | Op::Eq(a, b) => {
            a.write(f, Level::Sum)?;
            f.write_str(if matches!(op, Op::Lt(..)) { " < " } else { " == " })?;
            b.write(f, Level::Sum)?;
        }
        Op::Not(b) => {
            f.write_str("!")?;
            b.write(f, Level::Atom)?;
        }
        Op::And(a, b) => {
            a.write(f, Level::And)?;
            f.write_str(" && ")?;
            b.write(f, Level::Not)?;
        }
    }
    if wrap {
        f.write_str(close)?;
    }
    Ok(())
}

impl Printable for Term {
    fn write(&self, f: &mut fmt::Formatter<'_>, ctx: Level) -> fmt::Result {
        write_op(&self.0, f, ctx)
    }
}

impl Printable for Pattern {
    fn write(&self, f: &mut fmt::Formatter<'_>, ctx: Level) -> fmt::Result {
        match self {
            Pattern::Hole(n) => write!(f, "<{n}>"),
            Pattern::Op(op) => write_op(op, f, ctx),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, Level::Stmt)
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{self}`")
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, Level::Stmt)
    }
}

impl serde::Serialize for Term {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

pub fn vars(c: &Term) -> BTreeSet<String> {
    c.vars()
}

pub fn sort_of(c: &Term) -> Sort {
    c.sort()
}
