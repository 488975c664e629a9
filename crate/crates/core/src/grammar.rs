//! Typed regular tree grammars over G_imp.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::rc::Rc;

use crate::ast::{self, check_pattern, is_valid_nonterminal, Parser, Pattern, Sort, Term};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Production {
    pub lhs: String,
    pub rhs: Pattern,
}

impl fmt::Display for Production {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ::= {}", self.lhs, self.rhs)
    }
}

/// A regular tree grammar whose nonterminals carry G_imp sorts.
///
/// Productions are patterns: a constructor whose arguments are nonterminal
/// references or further inlined constructors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rtg {
    decls: Vec<(String, Sort)>,
    sorts: BTreeMap<String, Sort>,
    pub start: String,
    pub productions: Vec<Production>,
}

impl Rtg {
    pub fn new(start: &str) -> Rtg {
        Rtg { decls: Vec::new(), sorts: BTreeMap::new(), start: start.to_string(), productions: Vec::new() }
    }

    /// Declares a nonterminal; re-declaring with the same sort is a no-op.
    pub fn declare(&mut self, name: &str, sort: Sort) -> &mut Self {
        if !self.sorts.contains_key(name) {
            self.decls.push((name.to_string(), sort));
            self.sorts.insert(name.to_string(), sort);
        }
        self
    }

    pub fn add(&mut self, lhs: &str, rhs: Pattern) -> &mut Self {
        self.productions.push(Production { lhs: lhs.to_string(), rhs });
        self
    }

    /// Parses `rhs` in the concrete syntax, with `<N>` for nonterminals.
    pub fn add_text(&mut self, lhs: &str, rhs: &str) -> Result<&mut Self> {
        let p = ast::parse_pattern(rhs, &self.sorts)?;
        Ok(self.add(lhs, p))
    }

    /// A one-nonterminal grammar whose language is exactly `terms`.
    pub fn finite(name: &str, sort: Sort, terms: &[Term]) -> Rtg {
        let mut g = Rtg::new(name);
        g.declare(name, sort);
        for t in terms {
            g.add(name, t.as_pattern());
        }
        g
    }

    pub fn with_start(&self, start: &str) -> Rtg {
        Rtg { start: start.to_string(), ..self.clone() }
    }

    pub fn nonterminals(&self) -> impl Iterator<Item = (&str, Sort)> {
        self.decls.iter().map(|(n, s)| (n.as_str(), *s))
    }

    pub fn sorts(&self) -> &BTreeMap<String, Sort> {
        &self.sorts
    }

    pub fn sort_of(&self, n: &str) -> Result<Sort> {
        self.sorts.get(n).copied().ok_or_else(|| Error::UnknownNonterminal(n.to_string()))
    }

    pub fn productions_of<'a>(&'a self, n: &'a str) -> impl Iterator<Item = &'a Pattern> + 'a {
        self.productions.iter().filter(move |p| p.lhs == n).map(|p| &p.rhs)
    }

    /// Every violation of the well-formedness rules, or empty if valid.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (n, _) in &self.decls {
            if !is_valid_nonterminal(n) {
                out.push(format!("nonterminal name `{n}` must start with an uppercase letter"));
            }
        }
        if !self.sorts.contains_key(&self.start) {
            out.push(format!("start symbol `{}` is not declared", self.start));
        }
        for p in &self.productions {
            let Some(&want) = self.sorts.get(&p.lhs) else {
                out.push(format!("`{p}`: left-hand side `{}` is not declared", p.lhs));
                continue;
            };
            if let Pattern::Hole(_) = p.rhs {
                out.push(format!("`{p}`: a production must apply a constructor, not rename a nonterminal"));
                continue;
            }
            for h in p.rhs.holes() {
                if !self.sorts.contains_key(h) {
                    out.push(format!("`{p}`: nonterminal `{h}` is not declared"));
                }
            }
            match check_pattern(&p.rhs, Some(want), &self.sorts) {
                Ok(_) | Err(Error::UnknownNonterminal(_)) => {}
                Err(e) => out.push(format!("`{p}`: {e}")),
            }
        }
        out
    }

    pub fn validated(self) -> Result<Rtg> {
        let v = self.validate();
        if v.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidGrammar(v))
        }
    }

    /// Nonterminals with a nonempty language.
    pub fn productive(&self) -> BTreeSet<String> {
        let mut prod = BTreeSet::new();
        loop {
            let before = prod.len();
            for p in &self.productions {
                if !prod.contains(&p.lhs) && p.rhs.holes().iter().all(|h| prod.contains(*h)) {
                    prod.insert(p.lhs.clone());
                }
            }
            if prod.len() == before {
                return prod;
            }
        }
    }

    /// Productions that occur in at least one complete derivation.
    fn useful_productions<'a>(&'a self, productive: &BTreeSet<String>) -> impl Iterator<Item = &'a Production> + 'a {
        let productive = productive.clone();
        self.productions
            .iter()
            .filter(move |p| productive.contains(&p.lhs) && p.rhs.holes().iter().all(|h| productive.contains(*h)))
    }

    /// Nonterminals reachable from `n` through productions that can complete.
    pub fn reachable(&self, n: &str) -> BTreeSet<String> {
        let productive = self.productive();
        let mut seen = BTreeSet::new();
        if !productive.contains(n) {
            return seen;
        }
        let useful: Vec<&Production> = self.useful_productions(&productive).collect();
        let mut stack = vec![n.to_string()];
        while let Some(m) = stack.pop() {
            if !seen.insert(m.clone()) {
                continue;
            }
            for p in useful.iter().filter(|p| p.lhs == m) {
                stack.extend(p.rhs.holes().into_iter().map(String::from));
            }
        }
        seen
    }

    /// The union of the variables of every program in `L(n)`.
    pub fn grammar_vars(&self, n: &str) -> BTreeSet<String> {
        let productive = self.productive();
        let reach = self.reachable(n);
        self.useful_productions(&productive)
            .filter(|p| reach.contains(&p.lhs))
            .flat_map(|p| p.rhs.own_vars())
            .collect()
    }

    /// A production reachable from `n` that builds a loop, if any.
    pub fn reachable_while(&self, n: &str) -> Option<&Production> {
        let reach = self.reachable(n);
        let productive = self.productive();
        self.useful_productions(&productive)
            .find(|p| reach.contains(&p.lhs) && p.rhs.contains_while())
    }

    /// Whether `L(n)` is finite.
    pub fn is_finite(&self, n: &str) -> bool {
        let productive = self.productive();
        let reach = self.reachable(n);
        let useful: Vec<&Production> = self.useful_productions(&productive).collect();
        // Finite iff no reachable useful nonterminal reaches itself.
        reach.iter().all(|m| {
            let mut seen = BTreeSet::new();
            let mut stack: Vec<String> = useful
                .iter()
                .filter(|p| &p.lhs == m)
                .flat_map(|p| p.rhs.holes().into_iter().map(String::from))
                .collect();
            while let Some(k) = stack.pop() {
                if &k == m {
                    return false;
                }
                if seen.insert(k.clone()) {
                    stack.extend(
                        useful.iter().filter(|p| p.lhs == k).flat_map(|p| p.rhs.holes().into_iter().map(String::from)),
                    );
                }
            }
            true
        })
    }

    /// Parses the grammar file format:
    ///
    /// ```text
    /// nonterm W : Stmt;
    /// nonterm E : Exp;
    /// start W;
    /// W ::= while x < <E> do { x := x + 1 };
    /// E ::= 0 | <E> + (1 + 1);
    /// ```
    pub fn parse(text: &str) -> Result<Rtg> {
        let mut p = Parser::new(text)?;
        let mut g = Rtg::new("");
        let mut start = None;
        while !p.at_eof() {
            if p.at_kw("nonterm") {
                p.bump();
                let mut names = vec![p.ident()?];
                while p.eat_sym(",") {
                    names.push(p.ident()?);
                }
                p.expect_sym(":")?;
                let sort_tok = p.peek().clone();
                let sort: Sort = p.ident()?.parse().map_err(|e: Error| Error::Syntax {
                    line: sort_tok.line,
                    col: sort_tok.col,
                    msg: e.to_string(),
                })?;
                p.expect_sym(";")?;
                for n in names {
                    if g.sorts.get(&n).is_some_and(|s| *s != sort) {
                        return Err(Error::Syntax {
                            line: sort_tok.line,
                            col: sort_tok.col,
                            msg: format!("`{n}` declared with two sorts"),
                        });
                    }
                    g.declare(&n, sort);
                }
            } else if p.at_kw("start") {
                p.bump();
                start = Some(p.ident()?);
                p.expect_sym(";")?;
            } else {
                let lhs = p.ident()?;
                p.expect_sym("::=")?;
                loop {
                    let rhs = p.pattern()?;
                    g.add(&lhs, rhs);
                    if !p.eat_sym("|") {
                        break;
                    }
                }
                if !p.eat_sym(";") {
                    return Err(p.error(format!("expected `|` or `;`, found {}", ast::describe(&p.peek().tok))));
                }
            }
        }
        g.start = match start {
            Some(s) => s,
            None => g.decls.first().map(|(n, _)| n.clone()).unwrap_or_default(),
        };
        Ok(g)
    }

    /// Parses and validates.
    pub fn parse_validated(text: &str) -> Result<Rtg> {
        Rtg::parse(text)?.validated()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (n, s) in &self.decls {
            out.push_str(&format!("nonterm {n} : {s};\n"));
        }
        out.push_str(&format!("start {};\n", self.start));
        for (n, _) in &self.decls {
            let alts: Vec<String> = self.productions_of(n).map(|p| p.to_string()).collect();
            if !alts.is_empty() {
                out.push_str(&format!("{n} ::= {};\n", alts.join(" | ")));
            }
        }
        out
    }

    /// Every term of `L(n)` whose derivation height is at most `max_depth`.
    ///
    /// Height counts production applications: a production whose pattern has
    /// no nonterminals has height 1, and one with nonterminals has height one
    /// more than its tallest sub-derivation. Results are sorted by size, then
    /// structurally.
    pub fn enumerate(&self, n: &str, max_depth: usize, cap: usize) -> Result<Vec<Term>> {
        self.sort_of(n)?;
        let mut e = Enumerator { g: self, memo: HashMap::new(), cap };
        Ok(e.run(n, max_depth)?.as_ref().clone())
    }
}

impl fmt::Display for Rtg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

struct Enumerator<'a> {
    g: &'a Rtg,
    memo: HashMap<(String, usize), Rc<Vec<Term>>>,
    cap: usize,
}

impl Enumerator<'_> {
    fn run(&mut self, n: &str, depth: usize) -> Result<Rc<Vec<Term>>> {
        if depth == 0 {
            return Ok(Rc::new(Vec::new()));
        }
        if let Some(r) = self.memo.get(&(n.to_string(), depth)) {
            return Ok(r.clone());
        }
        let mut out: BTreeSet<(usize, Term)> = BTreeSet::new();
        let prods: Vec<Pattern> = self.g.productions_of(n).cloned().collect();
        for p in prods {
            let holes = p.holes();
            let mut choices = Vec::with_capacity(holes.len());
            let mut total: u128 = 1;
            for h in &holes {
                let c = self.run(h, depth - 1)?;
                total = total.saturating_mul(c.len() as u128);
                choices.push(c);
            }
            if total == 0 {
                continue;
            }
            if total + out.len() as u128 > self.cap as u128 {
                return Err(Error::resource(format!("enumeration of `{n}` to depth {depth}"), self.cap));
            }
            let mut idx = vec![0usize; holes.len()];
            'product: loop {
                let mut fill = idx.iter().zip(&choices).map(|(&i, c)| c[i].clone());
                let t = p.instantiate(&mut fill);
                out.insert((t.size(), t));
                let mut k = idx.len();
                loop {
                    if k == 0 {
                        break 'product;
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < choices[k].len() {
                        break;
                    }
                    idx[k] = 0;
                }
            }
        }
        let v = Rc::new(out.into_iter().map(|(_, t)| t).collect::<Vec<_>>());
        self.memo.insert((n.to_string(), depth), v.clone());
        Ok(v)
    }
}
