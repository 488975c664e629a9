//! State formulas used by pointwise predicates.
//!
//! ```text
//! f   ::= f || f | f && f | !f | (f) | t | f | b_t [(==|!=) (t|f)] | opd cmp opd
//! opd ::= int | var | e_t | opd % int
//! cmp ::= == | != | < | <= | > | >=
//! ```

use std::collections::BTreeSet;
use std::fmt;

use crate::domain::{DomainConfig, State, Value};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Const(Value),
    Var(String),
    Et,
    Mod(Box<Operand>, Value),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Const(bool),
    Bt,
    Cmp(Operand, Cmp, Operand),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
}

impl Operand {
    fn eval(&self, s: &State, cfg: &DomainConfig) -> Result<Value> {
        Ok(match self {
            Operand::Const(k) => *k,
            Operand::Var(x) => s.var(cfg.require_var(x)?),
            Operand::Et => s.e_t(),
            Operand::Mod(a, k) => a.eval(s, cfg)?.rem_euclid(*k),
        })
    }

    fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Operand::Var(x) => {
                out.insert(x.clone());
            }
            Operand::Mod(a, _) => a.vars(out),
            Operand::Const(_) | Operand::Et => {}
        }
    }
}

impl Formula {
    pub fn parse(text: &str) -> Result<Formula> {
        let mut p = FParser { toks: lex(text)?, pos: 0 };
        let f = p.or()?;
        match p.peek() {
            None => Ok(f),
            Some(t) => Err(p.err(format!("unexpected `{t}`"))),
        }
    }

    pub fn eval(&self, s: &State, cfg: &DomainConfig) -> Result<bool> {
        Ok(match self {
            Formula::Const(b) => *b,
            Formula::Bt => s.b_t(),
            Formula::Cmp(a, op, b) => {
                let (x, y) = (a.eval(s, cfg)?, b.eval(s, cfg)?);
                match op {
                    Cmp::Eq => x == y,
                    Cmp::Ne => x != y,
                    Cmp::Lt => x < y,
                    Cmp::Le => x <= y,
                    Cmp::Gt => x > y,
                    Cmp::Ge => x >= y,
                }
            }
            Formula::Not(f) => !f.eval(s, cfg)?,
            Formula::And(a, b) => a.eval(s, cfg)? && b.eval(s, cfg)?,
            Formula::Or(a, b) => a.eval(s, cfg)? || b.eval(s, cfg)?,
        })
    }

    /// Program variables mentioned by the formula.
    pub fn vars(&self) -> BTreeSet<String> {
        fn go(f: &Formula, out: &mut BTreeSet<String>) {
            match f {
                Formula::Const(_) | Formula::Bt => {}
                Formula::Cmp(a, _, b) => {
                    a.vars(out);
                    b.vars(out);
                }
                Formula::Not(g) => go(g, out),
                Formula::And(a, b) | Formula::Or(a, b) => {
                    go(a, out);
                    go(b, out);
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut out);
        out
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Const(k) => write!(f, "{k}"),
            Operand::Var(x) => write!(f, "{x}"),
            Operand::Et => write!(f, "e_t"),
            Operand::Mod(a, k) => write!(f, "{a} % {k}"),
        }
    }
}

impl fmt::Display for Cmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cmp::Eq => "==",
            Cmp::Ne => "!=",
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
        })
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Const(true) => write!(f, "t"),
            Formula::Const(false) => write!(f, "f"),
            Formula::Bt => write!(f, "b_t"),
            Formula::Cmp(a, op, b) => write!(f, "{a} {op} {b}"),
            Formula::Not(g) => write!(f, "!({g})"),
            Formula::And(a, b) => write!(f, "({a}) && ({b})"),
            Formula::Or(a, b) => write!(f, "({a}) || ({b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum FTok {
    Ident(String),
    Num(Value),
    Sym(&'static str),
}

impl fmt::Display for FTok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FTok::Ident(s) => f.write_str(s),
            FTok::Num(n) => write!(f, "{n}"),
            FTok::Sym(s) => f.write_str(s),
        }
    }
}

const SYMBOLS: [&str; 14] = ["||", "&&", "==", "!=", "<=", ">=", "<", ">", "!", "(", ")", "%", "-", "="];

fn lex(text: &str) -> Result<Vec<FTok>> {
    let mut out = Vec::new();
    let mut rest = text;
    loop {
        rest = rest.trim_start();
        let Some(c) = rest.chars().next() else { return Ok(out) };
        if c.is_ascii_digit() {
            let end = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
            let n = rest[..end].parse().map_err(|_| Error::input(format!("number `{}` out of range", &rest[..end])))?;
            out.push(FTok::Num(n));
            rest = &rest[end..];
        } else if c.is_ascii_alphabetic() || c == '_' {
            let end = rest.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(rest.len());
            out.push(FTok::Ident(rest[..end].to_string()));
            rest = &rest[end..];
        } else if let Some(s) = SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            out.push(FTok::Sym(s));
            rest = &rest[s.len()..];
        } else {
            return Err(Error::input(format!("formula: unexpected character `{c}`")));
        }
    }
}

struct FParser {
    toks: Vec<FTok>,
    pos: usize,
}

impl FParser {
    fn peek(&self) -> Option<&FTok> {
        self.toks.get(self.pos)
    }

    fn err(&self, msg: String) -> Error {
        Error::input(format!("formula: {msg}"))
    }

    fn eat(&mut self, sym: &str) -> bool {
        let hit = matches!(self.peek(), Some(FTok::Sym(s)) if *s == sym);
        self.pos += usize::from(hit);
        hit
    }

    fn or(&mut self) -> Result<Formula> {
        let mut f = self.and()?;
        while self.eat("||") {
            f = Formula::Or(Box::new(f), Box::new(self.and()?));
        }
        Ok(f)
    }

    fn and(&mut self) -> Result<Formula> {
        let mut f = self.unary()?;
        while self.eat("&&") {
            f = Formula::And(Box::new(f), Box::new(self.unary()?));
        }
        Ok(f)
    }

    fn bool_lit(&mut self) -> Option<bool> {
        let b = match self.peek() {
            Some(FTok::Ident(s)) if s == "t" || s == "true" => true,
            Some(FTok::Ident(s)) if s == "f" || s == "false" => false,
            _ => return None,
        };
        self.pos += 1;
        Some(b)
    }

    fn unary(&mut self) -> Result<Formula> {
        if self.eat("!") {
            return Ok(Formula::Not(Box::new(self.unary()?)));
        }
        if self.eat("(") {
            let f = self.or()?;
            if !self.eat(")") {
                return Err(self.err("expected `)`".into()));
            }
            return Ok(f);
        }
        if let Some(b) = self.bool_lit() {
            return Ok(Formula::Const(b));
        }
        if self.peek() == Some(&FTok::Ident("b_t".into())) {
            self.pos += 1;
            let negate = if self.eat("==") || self.eat("=") {
                false
            } else if self.eat("!=") {
                true
            } else {
                return Ok(Formula::Bt);
            };
            let b = self.bool_lit().ok_or_else(|| self.err("expected t or f after b_t comparison".into()))?;
            let atom = if b { Formula::Bt } else { Formula::Not(Box::new(Formula::Bt)) };
            return Ok(if negate { Formula::Not(Box::new(atom)) } else { atom });
        }
        let a = self.operand()?;
        let op = match self.peek() {
            Some(FTok::Sym("==" | "=")) => Cmp::Eq,
            Some(FTok::Sym("!=")) => Cmp::Ne,
            Some(FTok::Sym("<")) => Cmp::Lt,
            Some(FTok::Sym("<=")) => Cmp::Le,
            Some(FTok::Sym(">")) => Cmp::Gt,
            Some(FTok::Sym(">=")) => Cmp::Ge,
            other => {
                let found = other.map_or("end of input".to_string(), |t| format!("`{t}`"));
                return Err(self.err(format!("expected a comparison, found {found}")));
            }
        };
        self.pos += 1;
        Ok(Formula::Cmp(a, op, self.operand()?))
    }

    fn int(&mut self) -> Result<Value> {
        let neg = self.eat("-");
        match self.peek() {
            Some(FTok::Num(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(if neg { -n } else { n })
            }
            _ => Err(self.err("expected an integer".into())),
        }
    }

    fn operand(&mut self) -> Result<Operand> {
        let mut a = match self.peek().cloned() {
            Some(FTok::Ident(s)) if s == "e_t" => {
                self.pos += 1;
                Operand::Et
            }
            Some(FTok::Ident(s)) => {
                self.pos += 1;
                Operand::Var(s)
            }
            _ => Operand::Const(self.int()?),
        };
        while self.eat("%") {
            let k = self.int()?;
            if k <= 0 {
                return Err(self.err(format!("modulus must be positive, got {k}")));
            }
            a = Operand::Mod(Box::new(a), k);
        }
        Ok(a)
    }
}
